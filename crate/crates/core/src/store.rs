//! Data model, ingestion, and persistence: ground-truth inventories (CSV),
//! panorama indices and detector proposals (JSON Lines), and detection
//! output (GeoJSON FeatureCollection of Point features).
//!
//! Coordinates in files are degrees and are converted to radians at load.
//! Formats that the pipeline both writes and reads back (detections) also
//! carry the exact radian values in feature properties, because the f64
//! degree/radian conversion is not bit-exact in either direction.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{
    enu_ground_offset, GeoConstants, GeoError, GeoPoint, CameraPose, PixelBox,
};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: invalid coordinate: {source}")]
    InvalidCoordinate {
        path: String,
        line: usize,
        #[source]
        source: GeoError,
    },
    #[error("duplicate view id {0:?}")]
    DuplicateView(String),
    #[error("view index has no panoramas")]
    EmptyIndex,
    #[error("unknown view id {0:?}")]
    UnknownView(String),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error("detection record {id}: combined score {combined} does not equal the sum of potential contributions {sum}")]
    InconsistentRecord { id: u64, combined: f64, sum: f64 },
}

fn io_err(path: &Path, source: std::io::Error) -> StoreError {
    StoreError::Io { path: path.display().to_string(), source }
}

/// One inventory entry: a surveyed street tree.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthTree {
    pub id: String,
    pub geo: GeoPoint,
    pub species: Option<String>,
    pub epoch: Option<i64>,
}

/// A scored region proposal in one view.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub view_id: String,
    pub bbox: PixelBox,
    pub score: f64,
}

/// Resolution of a view id against the index.
#[derive(Debug, Clone, Copy)]
pub enum ViewRef<'a> {
    Aerial,
    Camera(&'a CameraPose),
}

/// All views of a scene: the global aerial frame plus the panorama list.
#[derive(Debug, Clone)]
pub struct ViewIndex {
    pub constants: GeoConstants,
    pub aerial_view_id: String,
    pub map_raster: Option<String>,
    cameras: Vec<CameraPose>,
    by_id: HashMap<String, usize>,
}

impl ViewIndex {
    pub fn new(
        constants: GeoConstants,
        aerial_view_id: impl Into<String>,
        cameras: Vec<CameraPose>,
    ) -> Result<Self, StoreError> {
        let aerial_view_id = aerial_view_id.into();
        let mut by_id = HashMap::with_capacity(cameras.len());
        for (i, cam) in cameras.iter().enumerate() {
            if cam.id == aerial_view_id {
                return Err(StoreError::DuplicateView(cam.id.clone()));
            }
            if by_id.insert(cam.id.clone(), i).is_some() {
                return Err(StoreError::DuplicateView(cam.id.clone()));
            }
        }
        Ok(Self { constants, aerial_view_id, map_raster: None, cameras, by_id })
    }

    pub fn cameras(&self) -> &[CameraPose] {
        &self.cameras
    }

    pub fn camera(&self, id: &str) -> Option<&CameraPose> {
        self.by_id.get(id).map(|&i| &self.cameras[i])
    }

    pub fn resolve(&self, view_id: &str) -> Result<ViewRef<'_>, StoreError> {
        if view_id == self.aerial_view_id {
            Ok(ViewRef::Aerial)
        } else {
            self.camera(view_id)
                .map(ViewRef::Camera)
                .ok_or_else(|| StoreError::UnknownView(view_id.to_string()))
        }
    }
}

/// Closest panorama to a point, by ground distance in the camera's ENU
/// frame; ties broken by smallest camera id.
pub fn nearest_panorama<'a>(
    t: &GeoPoint,
    index: &'a ViewIndex,
) -> Result<&'a CameraPose, StoreError> {
    let mut best: Option<(f64, &CameraPose)> = None;
    for cam in &index.cameras {
        let (e, n) = enu_ground_offset(t, &cam.geo);
        let d = e.hypot(n);
        best = match best {
            None => Some((d, cam)),
            Some((bd, bc)) => {
                if d < bd || (d == bd && cam.id < bc.id) {
                    Some((d, cam))
                } else {
                    Some((bd, bc))
                }
            }
        };
    }
    best.map(|(_, c)| c).ok_or(StoreError::EmptyIndex)
}

/// An accepted detection with its per-potential score contributions
/// (already weighted by the model scalars). The combined score always
/// equals the sum of the four contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRecord {
    pub id: u64,
    pub geo: GeoPoint,
    pub combined: f64,
    pub aerial: f64,
    pub street: f64,
    pub spatial: f64,
    pub map: f64,
    pub species: Option<String>,
}

impl DetectionRecord {
    pub fn from_potentials(
        id: u64,
        geo: GeoPoint,
        aerial: f64,
        street: f64,
        spatial: f64,
        map: f64,
        species: Option<String>,
    ) -> Self {
        Self {
            id,
            geo,
            combined: aerial + street + spatial + map,
            aerial,
            street,
            spatial,
            map,
            species,
        }
    }

    fn validate(self) -> Result<Self, StoreError> {
        let sum = self.aerial + self.street + self.spatial + self.map;
        if (self.combined - sum).abs() > 1e-9 {
            return Err(StoreError::InconsistentRecord {
                id: self.id,
                combined: self.combined,
                sum,
            });
        }
        Ok(self)
    }
}

pub type DetectionSet = Vec<DetectionRecord>;

/// Lowercase a species label and collapse runs of whitespace; empty labels
/// become `None`.
pub fn normalize_species(raw: &str) -> Option<String> {
    let mut out = String::with_capacity(raw.len());
    for part in raw.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&part.to_lowercase());
    }
    if out.is_empty() {
        None
    } else {
        Some(out)
    }
}

// ---------------------------------------------------------------------------
// Inventory CSV (id, lat_deg, lng_deg, species, epoch, type)
// ---------------------------------------------------------------------------

/// Load a tree inventory. Rows whose `type` column is not "tree" (planting
/// sites, shrubs, stumps) are filtered out.
pub fn load_inventory(path: &Path) -> Result<Vec<GroundTruthTree>, StoreError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(BufReader::new(file));
    let parse = |line: usize, field: &str, what: &str| -> Result<f64, StoreError> {
        field.trim().parse::<f64>().map_err(|e| StoreError::Parse {
            path: path.display().to_string(),
            line,
            message: format!("bad {what} {field:?}: {e}"),
        })
    };

    let mut trees = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| StoreError::Parse {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        // csv positions are zero-based byte records; report 1-based data lines
        // counting the header.
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(0);
        if record.len() != 6 {
            return Err(StoreError::Parse {
                path: path.display().to_string(),
                line,
                message: format!("expected 6 columns, got {}", record.len()),
            });
        }
        let kind = record[5].trim().to_lowercase();
        if kind != "tree" {
            continue;
        }
        let lat_deg = parse(line, &record[1], "latitude")?;
        let lng_deg = parse(line, &record[2], "longitude")?;
        let geo = GeoPoint::from_degrees(lat_deg, lng_deg).map_err(|source| {
            StoreError::InvalidCoordinate {
                path: path.display().to_string(),
                line,
                source,
            }
        })?;
        let epoch = {
            let raw = record[4].trim();
            if raw.is_empty() {
                None
            } else {
                Some(raw.parse::<i64>().map_err(|e| StoreError::Parse {
                    path: path.display().to_string(),
                    line,
                    message: format!("bad epoch {raw:?}: {e}"),
                })?)
            }
        };
        trees.push(GroundTruthTree {
            id: record[0].trim().to_string(),
            geo,
            species: normalize_species(&record[3]),
            epoch,
        });
    }
    Ok(trees)
}

/// Write an inventory CSV (used by the synthetic generator and tests).
pub fn write_inventory(trees: &[GroundTruthTree], path: &Path) -> Result<(), StoreError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["id", "lat_deg", "lng_deg", "species", "epoch", "type"])
        .map_err(|e| StoreError::Parse {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
    for t in trees {
        let epoch = t.epoch.map(|e| e.to_string()).unwrap_or_default();
        w.write_record([
            t.id.as_str(),
            &format_f64(t.geo.lat_deg()),
            &format_f64(t.geo.lng_deg()),
            t.species.as_deref().unwrap_or(""),
            &epoch,
            "tree",
        ])
        .map_err(|e| StoreError::Parse {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Shortest decimal representation that parses back to the same f64.
fn format_f64(v: f64) -> String {
    let mut buf = ryu_format(v);
    if !buf.contains(['.', 'e', 'E']) {
        buf.push_str(".0");
    }
    buf
}

fn ryu_format(v: f64) -> String {
    // serde_json uses ryu internally; going through a JSON number gives the
    // shortest round-trippable form without an extra dependency.
    serde_json::to_string(&v).expect("finite f64 serializes")
}

// ---------------------------------------------------------------------------
// Panorama index JSONL
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct PanoramaRow {
    id: String,
    lat_deg: f64,
    lng_deg: f64,
    yaw_deg: f64,
    height_m: f64,
    width_px: u32,
    height_px: u32,
    #[serde(default)]
    epoch: i64,
}

/// Load a panorama index from JSON Lines. Duplicate ids are rejected.
pub fn load_panorama_index(path: &Path) -> Result<Vec<CameraPose>, StoreError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut poses = Vec::new();
    let mut seen = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let row: PanoramaRow = serde_json::from_str(&line).map_err(|e| StoreError::Parse {
            path: path.display().to_string(),
            line: lineno,
            message: e.to_string(),
        })?;
        if seen.insert(row.id.clone(), lineno).is_some() {
            return Err(StoreError::DuplicateView(row.id));
        }
        let geo = GeoPoint::from_degrees(row.lat_deg, row.lng_deg).map_err(|source| {
            StoreError::InvalidCoordinate {
                path: path.display().to_string(),
                line: lineno,
                source,
            }
        })?;
        let pose = CameraPose::new(
            row.id,
            geo,
            row.yaw_deg.to_radians(),
            row.height_m,
            row.width_px,
            row.height_px,
            row.epoch,
        )
        .map_err(|e| StoreError::Parse {
            path: path.display().to_string(),
            line: lineno,
            message: e.to_string(),
        })?;
        poses.push(pose);
    }
    Ok(poses)
}

pub fn write_panorama_index(poses: &[CameraPose], path: &Path) -> Result<(), StoreError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for p in poses {
        let row = PanoramaRow {
            id: p.id.clone(),
            lat_deg: p.geo.lat_deg(),
            lng_deg: p.geo.lng_deg(),
            yaw_deg: p.yaw.to_degrees(),
            height_m: p.height_m,
            width_px: p.width_px,
            height_px: p.height_px,
            epoch: p.epoch,
        };
        serde_json::to_writer(&mut w, &row).map_err(|e| StoreError::Parse {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        w.write_all(b"\n").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Proposals JSONL
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ProposalRow {
    view_id: String,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    score: f64,
}

/// Load detector proposals from JSON Lines.
pub fn load_proposals(path: &Path) -> Result<Vec<Proposal>, StoreError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut props = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let row: ProposalRow = serde_json::from_str(&line).map_err(|e| StoreError::Parse {
            path: path.display().to_string(),
            line: lineno,
            message: e.to_string(),
        })?;
        if !row.score.is_finite() {
            return Err(StoreError::Parse {
                path: path.display().to_string(),
                line: lineno,
                message: format!("non-finite score {}", row.score),
            });
        }
        let bbox = PixelBox::new(row.x, row.y, row.w, row.h).map_err(|e| StoreError::Parse {
            path: path.display().to_string(),
            line: lineno,
            message: e.to_string(),
        })?;
        props.push(Proposal { view_id: row.view_id, bbox, score: row.score });
    }
    Ok(props)
}

pub fn write_proposals(props: &[Proposal], path: &Path) -> Result<(), StoreError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for p in props {
        let row = ProposalRow {
            view_id: p.view_id.clone(),
            x: p.bbox.x,
            y: p.bbox.y,
            w: p.bbox.w,
            h: p.bbox.h,
            score: p.score,
        };
        serde_json::to_writer(&mut w, &row).map_err(|e| StoreError::Parse {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        w.write_all(b"\n").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Detections GeoJSON (RFC 7946 Point features)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct FeatureCollection {
    #[serde(rename = "type")]
    kind: String,
    features: Vec<Feature>,
}

#[derive(Serialize, Deserialize)]
struct Feature {
    #[serde(rename = "type")]
    kind: String,
    geometry: PointGeometry,
    properties: DetectionProps,
}

#[derive(Serialize, Deserialize)]
struct PointGeometry {
    #[serde(rename = "type")]
    kind: String,
    /// `[lng_deg, lat_deg]` per RFC 7946.
    coordinates: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct DetectionProps {
    id: u64,
    score: f64,
    aerial: f64,
    street: f64,
    spatial: f64,
    map: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    species: Option<String>,
    // Exact radian values; the degree coordinates above are for interop and
    // lose up to one ulp in conversion.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    lat_rad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    lng_rad: Option<f64>,
}

pub fn write_detections(set: &[DetectionRecord], path: &Path) -> Result<(), StoreError> {
    let features = set
        .iter()
        .map(|d| Feature {
            kind: "Feature".into(),
            geometry: PointGeometry {
                kind: "Point".into(),
                coordinates: [d.geo.lng_deg(), d.geo.lat_deg()],
            },
            properties: DetectionProps {
                id: d.id,
                score: d.combined,
                aerial: d.aerial,
                street: d.street,
                spatial: d.spatial,
                map: d.map,
                species: d.species.clone(),
                lat_rad: Some(d.geo.lat()),
                lng_rad: Some(d.geo.lng()),
            },
        })
        .collect();
    let fc = FeatureCollection { kind: "FeatureCollection".into(), features };
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &fc).map_err(|e| StoreError::Parse {
        path: path.display().to_string(),
        line: 0,
        message: e.to_string(),
    })?;
    w.write_all(b"\n").map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn read_detections(path: &Path) -> Result<DetectionSet, StoreError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let fc: FeatureCollection =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| StoreError::Parse {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
    let mut out = Vec::with_capacity(fc.features.len());
    for f in fc.features {
        let p = f.properties;
        let geo = match (p.lat_rad, p.lng_rad) {
            (Some(lat), Some(lng)) => GeoPoint::new(lat, lng)?,
            _ => GeoPoint::from_degrees(f.geometry.coordinates[1], f.geometry.coordinates[0])?,
        };
        out.push(
            DetectionRecord {
                id: p.id,
                geo,
                combined: p.score,
                aerial: p.aerial,
                street: p.street,
                spatial: p.spatial,
                map: p.map,
                species: p.species,
            }
            .validate()?,
        );
    }
    Ok(out)
}
