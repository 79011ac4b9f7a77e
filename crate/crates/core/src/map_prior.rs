//! Road-raster preprocessing for the map potential: binarization of white
//! roads with morphological cleanup, an exact Euclidean distance transform,
//! and bilinear sampling of the resulting distance-to-road field.
//!
//! Rasters are pixel-wise aligned with the global aerial Mercator frame:
//! the sidecar records the frame pixel of the raster's top-left corner and
//! the zoom level.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{mercator_geo_to_pixel, pixel_size_m, GeoError, GeoPoint};

#[derive(Debug, Error)]
pub enum MapError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("point ({lat}, {lng}) rad projects outside the raster extent")]
    OutsideExtent { lat: f64, lng: f64 },
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error("raster dimensions must be positive")]
    EmptyRaster,
}

fn io_err(path: &Path, source: std::io::Error) -> MapError {
    MapError::Io { path: path.display().to_string(), source }
}

/// Grid placement within the global Mercator frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    /// Global-frame pixel x of the top-left raster corner.
    pub origin_x: f64,
    /// Global-frame pixel y of the top-left raster corner.
    pub origin_y: f64,
    pub zoom: u8,
    pub width: usize,
    pub height: usize,
}

/// 8-bit grayscale map tile mosaic aligned with the aerial frame.
#[derive(Debug, Clone)]
pub struct MapRaster {
    pub header: GridHeader,
    pub data: Vec<u8>,
}

impl MapRaster {
    pub fn new(header: GridHeader, data: Vec<u8>) -> Result<Self, MapError> {
        if header.width == 0 || header.height == 0 {
            return Err(MapError::EmptyRaster);
        }
        if data.len() != header.width * header.height {
            return Err(MapError::Format {
                path: String::new(),
                message: format!(
                    "expected {} samples, got {}",
                    header.width * header.height,
                    data.len()
                ),
            });
        }
        Ok(Self { header, data })
    }

    /// Ground size of one raster pixel, evaluated at the raster center.
    pub fn pixel_size_m(&self) -> f64 {
        let cy = self.header.origin_y + self.header.height as f64 / 2.0;
        let cx = self.header.origin_x + self.header.width as f64 / 2.0;
        let center = crate::geo::mercator_pixel_to_geo(
            &crate::geo::PixelPoint { x: cx, y: cy },
            self.header.zoom,
        )
        .expect("raster center inside frame");
        pixel_size_m(center.lat(), self.header.zoom)
    }
}

/// Binary road mask on the same grid as its source raster.
#[derive(Debug, Clone)]
pub struct RoadMask {
    pub header: GridHeader,
    pub data: Vec<bool>,
}

/// Per-pixel distance to the nearest road pixel, in meters.
#[derive(Debug, Clone)]
pub struct DistanceField {
    pub header: GridHeader,
    pub pixel_size_m: f64,
    pub values: Vec<f32>,
    /// Set when the source mask had no road pixel at all; every value is
    /// then `+inf` and the field is unusable as a prior.
    pub no_road: bool,
}

// ---------------------------------------------------------------------------
// Binarization + morphology
// ---------------------------------------------------------------------------

/// Offsets of a disk structuring element of the given radius.
fn disk_offsets(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let r2 = (radius * radius) as isize;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r2 {
                out.push((dx, dy));
            }
        }
    }
    out
}

fn erode(mask: &[bool], w: usize, h: usize, se: &[(isize, isize)]) -> Vec<bool> {
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut keep = mask[y * w + x];
            if keep {
                for &(dx, dy) in se {
                    let nx = x as isize + dx;
                    let ny = y as isize + dy;
                    // outside the raster counts as road: roads continue past
                    // the tile boundary, so borders must not erode
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    if !mask[ny as usize * w + nx as usize] {
                        keep = false;
                        break;
                    }
                }
            }
            out[y * w + x] = keep;
        }
    }
    out
}

fn dilate(mask: &[bool], w: usize, h: usize, se: &[(isize, isize)]) -> Vec<bool> {
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            if mask[y * w + x] {
                for &(dx, dy) in se {
                    let nx = x as isize + dx;
                    let ny = y as isize + dy;
                    if nx >= 0 && ny >= 0 && nx < w as isize && ny < h as isize {
                        out[ny as usize * w + nx as usize] = true;
                    }
                }
            }
        }
    }
    out
}

/// Extract the road mask from a grayscale map raster.
///
/// Roads are the pure-white pixels (value 255). Morphological opening with a
/// disk of `open_radius` removes other small white symbols; closing with
/// `close_radius` fills text holes punched into roads.
pub fn binarize_roads(raster: &MapRaster, open_radius: usize, close_radius: usize) -> RoadMask {
    let w = raster.header.width;
    let h = raster.header.height;
    let mut mask: Vec<bool> = raster.data.iter().map(|&v| v == 255).collect();
    if open_radius > 0 {
        let se = disk_offsets(open_radius);
        mask = dilate(&erode(&mask, w, h, &se), w, h, &se);
    }
    if close_radius > 0 {
        let se = disk_offsets(close_radius);
        mask = erode(&dilate(&mask, w, h, &se), w, h, &se);
    }
    RoadMask { header: raster.header, data: mask }
}

// ---------------------------------------------------------------------------
// Exact Euclidean distance transform (two-pass lower envelope)
// ---------------------------------------------------------------------------

const INF: f64 = f64::INFINITY;

/// 1-D squared-distance transform by lower envelope of parabolas.
/// Sites with `f = +inf` contribute no parabola.
fn transform_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = -INF;
    z[1] = INF;
    for q in 1..n {
        if f[q] == INF {
            continue;
        }
        loop {
            let p = v[k];
            let s = if f[p] == INF {
                -INF
            } else {
                ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64))
                    / (2.0 * q as f64 - 2.0 * p as f64)
            };
            if s <= z[k] {
                if k == 0 {
                    // q dominates everything accumulated so far
                    v[0] = q;
                    z[0] = -INF;
                    z[1] = INF;
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = INF;
                break;
            }
        }
    }
    let mut j = 0usize;
    for q in 0..n {
        while z[j + 1] < q as f64 {
            j += 1;
        }
        let p = v[j];
        d[q] = if f[p] == INF {
            INF
        } else {
            let dq = q as f64 - p as f64;
            f[p] + dq * dq
        };
    }
}

/// Exact Euclidean distance transform of a road mask, scaled to meters.
///
/// Runs the separable lower-envelope algorithm on squared distances, first
/// per column then per row, and takes square roots at the end. A mask with
/// no road pixel yields an all-infinity field with the `no_road` flag set.
pub fn distance_transform(mask: &RoadMask, pixel_size_m: f64) -> DistanceField {
    let w = mask.header.width;
    let h = mask.header.height;
    let any_road = mask.data.iter().any(|&b| b);
    if !any_road {
        log::warn!("distance_transform: mask has no road pixels; field is +inf");
        return DistanceField {
            header: mask.header,
            pixel_size_m,
            values: vec![f32::INFINITY; w * h],
            no_road: true,
        };
    }

    let mut grid: Vec<f64> = mask
        .data
        .iter()
        .map(|&road| if road { 0.0 } else { INF })
        .collect();

    let max_dim = w.max(h);
    let mut f = vec![0.0; max_dim];
    let mut d = vec![0.0; max_dim];
    let mut v = vec![0usize; max_dim];
    let mut z = vec![0.0; max_dim + 1];

    // columns
    for x in 0..w {
        for y in 0..h {
            f[y] = grid[y * w + x];
        }
        transform_1d(&f[..h], &mut d[..h], &mut v, &mut z);
        for y in 0..h {
            grid[y * w + x] = d[y];
        }
    }
    // rows
    for y in 0..h {
        f[..w].copy_from_slice(&grid[y * w..(y + 1) * w]);
        transform_1d(&f[..w], &mut d[..w], &mut v, &mut z);
        grid[y * w..(y + 1) * w].copy_from_slice(&d[..w]);
    }

    let values = grid
        .iter()
        .map(|&sq| (sq.sqrt() * pixel_size_m) as f32)
        .collect();
    DistanceField { header: mask.header, pixel_size_m, values, no_road: false }
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Distance to the nearest road at a geographic point, by bilinear
/// interpolation between pixel centers of the field. Points outside the
/// raster extent are a hard error (clamping would corrupt the prior).
pub fn road_distance_at(field: &DistanceField, t: &GeoPoint) -> Result<f64, MapError> {
    let px = mercator_geo_to_pixel(t, field.header.zoom)?;
    let u = px.x - field.header.origin_x;
    let v = px.y - field.header.origin_y;
    let w = field.header.width;
    let h = field.header.height;
    if u < 0.0 || v < 0.0 || u > w as f64 || v > h as f64 {
        return Err(MapError::OutsideExtent { lat: t.lat(), lng: t.lng() });
    }
    // sample between pixel centers; the half-pixel border clamps inward
    let x = (u - 0.5).clamp(0.0, (w - 1) as f64);
    let y = (v - 0.5).clamp(0.0, (h - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let at = |xx: usize, yy: usize| f64::from(field.values[yy * w + xx]);
    let top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
    let bottom = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
    Ok(top * (1.0 - fy) + bottom * fy)
}

// ---------------------------------------------------------------------------
// PGM + sidecar I/O
// ---------------------------------------------------------------------------

fn sidecar_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".json");
    PathBuf::from(os)
}

/// Read a binary (P5) PGM raster; grid placement comes from `<path>.json`.
pub fn read_map_raster(path: &Path) -> Result<MapRaster, MapError> {
    let side = sidecar_path(path);
    let header: GridHeader = serde_json::from_reader(BufReader::new(
        File::open(&side).map_err(|e| io_err(&side, e))?,
    ))
    .map_err(|e| MapError::Format { path: side.display().to_string(), message: e.to_string() })?;

    let mut raw = Vec::new();
    File::open(path)
        .map_err(|e| io_err(path, e))?
        .read_to_end(&mut raw)
        .map_err(|e| io_err(path, e))?;
    let (w, h, pixels) = parse_pgm(&raw)
        .map_err(|m| MapError::Format { path: path.display().to_string(), message: m })?;
    if w != header.width || h != header.height {
        return Err(MapError::Format {
            path: path.display().to_string(),
            message: format!(
                "PGM is {w}x{h} but sidecar says {}x{}",
                header.width, header.height
            ),
        });
    }
    MapRaster::new(header, pixels)
}

pub fn write_map_raster(raster: &MapRaster, path: &Path) -> Result<(), MapError> {
    let side = sidecar_path(path);
    serde_json::to_writer_pretty(
        BufWriter::new(File::create(&side).map_err(|e| io_err(&side, e))?),
        &raster.header,
    )
    .map_err(|e| MapError::Format { path: side.display().to_string(), message: e.to_string() })?;

    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    write!(w, "P5\n{} {}\n255\n", raster.header.width, raster.header.height)
        .map_err(|e| io_err(path, e))?;
    w.write_all(&raster.data).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

fn parse_pgm(raw: &[u8]) -> Result<(usize, usize, Vec<u8>), String> {
    let mut pos = 0usize;
    let mut token = || -> Result<String, String> {
        // skip whitespace and comment lines
        loop {
            while pos < raw.len() && raw[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < raw.len() && raw[pos] == b'#' {
                while pos < raw.len() && raw[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < raw.len() && !raw[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("unexpected end of PGM header".into());
        }
        Ok(String::from_utf8_lossy(&raw[start..pos]).into_owned())
    };

    if token()? != "P5" {
        return Err("not a binary PGM (P5)".into());
    }
    let w: usize = token()?.parse().map_err(|e| format!("bad width: {e}"))?;
    let h: usize = token()?.parse().map_err(|e| format!("bad height: {e}"))?;
    let maxval: usize = token()?.parse().map_err(|e| format!("bad maxval: {e}"))?;
    if maxval != 255 {
        return Err(format!("unsupported maxval {maxval}, expected 255"));
    }
    pos += 1; // single whitespace byte after maxval
    if raw.len() < pos + w * h {
        return Err("truncated pixel data".into());
    }
    Ok((w, h, raw[pos..pos + w * h].to_vec()))
}

#[derive(Serialize, Deserialize)]
struct FieldSidecar {
    #[serde(flatten)]
    header: GridHeader,
    pixel_size_m: f64,
    no_road: bool,
}

/// Cache a distance field as raw little-endian f32 plus a `.json` sidecar.
pub fn write_distance_field(field: &DistanceField, path: &Path) -> Result<(), MapError> {
    let side = sidecar_path(path);
    serde_json::to_writer_pretty(
        BufWriter::new(File::create(&side).map_err(|e| io_err(&side, e))?),
        &FieldSidecar {
            header: field.header,
            pixel_size_m: field.pixel_size_m,
            no_road: field.no_road,
        },
    )
    .map_err(|e| MapError::Format { path: side.display().to_string(), message: e.to_string() })?;

    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    for v in &field.values {
        w.write_all(&v.to_le_bytes()).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn read_distance_field(path: &Path) -> Result<DistanceField, MapError> {
    let side = sidecar_path(path);
    let sidecar: FieldSidecar = serde_json::from_reader(BufReader::new(
        File::open(&side).map_err(|e| io_err(&side, e))?,
    ))
    .map_err(|e| MapError::Format { path: side.display().to_string(), message: e.to_string() })?;

    let mut raw = Vec::new();
    File::open(path)
        .map_err(|e| io_err(path, e))?
        .read_to_end(&mut raw)
        .map_err(|e| io_err(path, e))?;
    let expected = sidecar.header.width * sidecar.header.height * 4;
    if raw.len() != expected {
        return Err(MapError::Format {
            path: path.display().to_string(),
            message: format!("expected {expected} bytes, got {}", raw.len()),
        });
    }
    let values = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(DistanceField {
        header: sidecar.header,
        pixel_size_m: sidecar.pixel_size_m,
        values,
        no_road: sidecar.no_road,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn header(w: usize, h: usize) -> GridHeader {
        GridHeader { origin_x: 0.0, origin_y: 0.0, zoom: 0, width: w, height: h }
    }

    fn mask_from(rows: &[&str]) -> RoadMask {
        let h = rows.len();
        let w = rows[0].len();
        let data = rows
            .iter()
            .flat_map(|r| r.chars().map(|c| c == '#'))
            .collect();
        RoadMask { header: header(w, h), data }
    }

    /// O(N^2) all-pairs reference transform.
    fn brute_force(mask: &RoadMask, pixel_size_m: f64) -> Vec<f32> {
        let w = mask.header.width;
        let h = mask.header.height;
        let roads: Vec<(usize, usize)> = (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .filter(|&(x, y)| mask.data[y * w + x])
            .collect();
        (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .map(|(x, y)| {
                let best = roads
                    .iter()
                    .map(|&(rx, ry)| {
                        let dx = x as f64 - rx as f64;
                        let dy = y as f64 - ry as f64;
                        dx * dx + dy * dy
                    })
                    .fold(f64::INFINITY, f64::min);
                (best.sqrt() * pixel_size_m) as f32
            })
            .collect()
    }

    #[test]
    fn all_white_raster_is_all_road() {
        let raster = MapRaster::new(header(8, 4), vec![255; 32]).unwrap();
        let mask = binarize_roads(&raster, 0, 0);
        assert!(mask.data.iter().all(|&b| b));

        let black = MapRaster::new(header(8, 4), vec![0; 32]).unwrap();
        let mask = binarize_roads(&black, 3, 5);
        assert!(mask.data.iter().all(|&b| !b));
    }

    #[test]
    fn opening_removes_speckles_keeps_stripe() {
        // 32x32 fixture: a 9-px-tall full-width white stripe plus 2-px
        // speckles. Opening with a radius-3 disk must keep exactly the
        // stripe. Checked pixel by pixel against the hand-built expectation.
        let mut data = vec![0u8; 32 * 32];
        for y in 10..19 {
            for x in 0..32 {
                data[y * 32 + x] = 255;
            }
        }
        for &(sx, sy) in &[(3usize, 2usize), (20, 4), (28, 25), (6, 27)] {
            for dy in 0..2 {
                for dx in 0..2 {
                    data[(sy + dy) * 32 + sx + dx] = 255;
                }
            }
        }
        let raster = MapRaster::new(header(32, 32), data).unwrap();
        let mask = binarize_roads(&raster, 3, 0);
        for y in 0..32 {
            for x in 0..32 {
                let expected = (10..19).contains(&y);
                assert_eq!(mask.data[y * 32 + x], expected, "pixel ({x},{y})");
            }
        }
    }

    #[test]
    fn closing_fills_text_holes() {
        // stripe with a small dark "letter" punched into it
        let mut data = vec![0u8; 32 * 32];
        for y in 8..24 {
            for x in 0..32 {
                data[y * 32 + x] = 255;
            }
        }
        for y in 14..17 {
            for x in 15..18 {
                data[y * 32 + x] = 0;
            }
        }
        let raster = MapRaster::new(header(32, 32), data).unwrap();
        let mask = binarize_roads(&raster, 0, 5);
        for y in 8..24 {
            for x in 0..32 {
                assert!(mask.data[y * 32 + x], "hole at ({x},{y}) not closed");
            }
        }
    }

    #[test]
    fn open_close_is_idempotent() {
        let mut state = 77u64;
        for trial in 0..20 {
            let data: Vec<u8> = (0..24 * 24)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                    if state >> 40 & 0xff > 128 {
                        255
                    } else {
                        0
                    }
                })
                .collect();
            let raster = MapRaster::new(header(24, 24), data).unwrap();
            let once = binarize_roads(&raster, 2, 3);
            let again = {
                let as_raster = MapRaster::new(
                    once.header,
                    once.data.iter().map(|&b| if b { 255 } else { 0 }).collect(),
                )
                .unwrap();
                binarize_roads(&as_raster, 2, 3)
            };
            assert_eq!(once.data, again.data, "trial {trial}");
        }
    }

    #[test]
    fn single_center_pixel_3x3() {
        let mask = mask_from(&["...", ".#.", "..."]);
        let field = distance_transform(&mask, 1.0);
        let sqrt2 = std::f64::consts::SQRT_2 as f32;
        let expect = [sqrt2, 1.0, sqrt2, 1.0, 0.0, 1.0, sqrt2, 1.0, sqrt2];
        assert_eq!(field.values, expect);
    }

    #[test]
    fn all_road_is_all_zero() {
        let mask = mask_from(&["##", "##"]);
        let field = distance_transform(&mask, 2.5);
        assert!(field.values.iter().all(|&v| v == 0.0));
        assert!(!field.no_road);
    }

    #[test]
    fn no_road_gives_infinite_field_with_flag() {
        let mask = mask_from(&["..", ".."]);
        let field = distance_transform(&mask, 1.0);
        assert!(field.no_road);
        assert!(field.values.iter().all(|v| v.is_infinite()));
    }

    #[test]
    fn distance_transform_matches_brute_force_on_random_masks() {
        let mut state = 0xabcdef12u64;
        for trial in 0..40 {
            let mut data = vec![false; 64 * 64];
            let density = (trial % 10 + 1) as u64;
            for b in data.iter_mut() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                *b = (state >> 33) % 97 < density;
            }
            if !data.iter().any(|&b| b) {
                data[trial * 13 % (64 * 64)] = true;
            }
            let mask = RoadMask { header: header(64, 64), data };
            let field = distance_transform(&mask, 0.5);
            let reference = brute_force(&mask, 0.5);
            assert_eq!(field.values, reference, "trial {trial}");
        }
    }

    #[test]
    fn transform_is_idempotent_on_its_zero_set() {
        let mask = mask_from(&["#...#", ".....", "..#..", ".....", "#...#"]);
        let field = distance_transform(&mask, 1.0);
        let zero_mask = RoadMask {
            header: mask.header,
            data: field.values.iter().map(|&v| v == 0.0).collect(),
        };
        let again = distance_transform(&zero_mask, 1.0);
        assert_eq!(field.values, again.values);
    }

    fn field_from_values(w: usize, h: usize, values: Vec<f32>) -> DistanceField {
        DistanceField {
            header: GridHeader {
                // place the raster so it brackets lat/lng 0: global pixel
                // (128,128) at zoom 0 is geographic (0,0)
                origin_x: 128.0 - w as f64 / 2.0,
                origin_y: 128.0 - h as f64 / 2.0,
                zoom: 0,
                width: w,
                height: h,
            },
            pixel_size_m: 1.0,
            values,
            no_road: false,
        }
    }

    #[test]
    fn road_distance_interpolates_bilinearly() {
        // two columns valued 2 and 4: the midpoint between their centers is 3
        let field = field_from_values(2, 2, vec![2.0, 4.0, 2.0, 4.0]);
        let center = GeoPoint::new(0.0, 0.0).unwrap();
        let v = road_distance_at(&field, &center).unwrap();
        assert!((v - 3.0).abs() < 1e-9, "got {v}");
    }

    #[test]
    fn road_distance_zero_on_road_center() {
        let field = field_from_values(2, 2, vec![0.0, 0.0, 0.0, 0.0]);
        let g = GeoPoint::new(0.0, 0.0).unwrap();
        assert_eq!(road_distance_at(&field, &g).unwrap(), 0.0);
    }

    #[test]
    fn outside_extent_is_an_error() {
        let field = field_from_values(2, 2, vec![0.0; 4]);
        let far = GeoPoint::from_degrees(50.0, 100.0).unwrap();
        assert!(matches!(
            road_distance_at(&field, &far),
            Err(MapError::OutsideExtent { .. })
        ));
    }

    #[test]
    fn sampled_distance_close_to_analytic_nearest_road() {
        // horizontal road row at y = 16; sampled values must stay within one
        // pixel of the analytic distance to the row of road pixel centers
        let mut data = vec![false; 32 * 32];
        for x in 0..32 {
            data[16 * 32 + x] = true;
        }
        let mask = RoadMask { header: header(32, 32), data };
        let ps = 0.8;
        let field = distance_transform(&mask, ps);
        for yi in 0..31 {
            let y = yi as f64 + 0.7;
            let x = 15.2f64;
            let x0 = (x - 0.5).floor() as usize;
            let y0 = (y - 0.5).floor() as usize;
            let fx = x - 0.5 - x0 as f64;
            let fy = y - 0.5 - y0 as f64;
            let at = |xx: usize, yy: usize| f64::from(field.values[yy * 32 + xx]);
            let interp = (at(x0, y0) * (1.0 - fx) + at(x0 + 1, y0) * fx) * (1.0 - fy)
                + (at(x0, y0 + 1) * (1.0 - fx) + at(x0 + 1, y0 + 1) * fx) * fy;
            let analytic = (y - 16.0).abs() * ps;
            assert!((interp - analytic).abs() <= ps, "row {y}: {interp} vs {analytic}");
        }
    }

    #[test]
    fn raster_and_field_round_trip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let pgm = dir.path().join("map.pgm");
        let data: Vec<u8> = (0..64u32 * 32).map(|i| (i % 256) as u8).collect();
        let raster = MapRaster::new(
            GridHeader { origin_x: 123.0, origin_y: 456.0, zoom: 20, width: 64, height: 32 },
            data,
        )
        .unwrap();
        write_map_raster(&raster, &pgm).unwrap();
        let loaded = read_map_raster(&pgm).unwrap();
        assert_eq!(loaded.header, raster.header);
        assert_eq!(loaded.data, raster.data);

        let mask = binarize_roads(&raster, 0, 0);
        let field = distance_transform(&mask, 0.25);
        let cache = dir.path().join("map.dist");
        write_distance_field(&field, &cache).unwrap();
        let loaded = read_distance_field(&cache).unwrap();
        assert_eq!(loaded.header, field.header);
        assert_eq!(loaded.pixel_size_m, field.pixel_size_m);
        assert_eq!(loaded.no_road, field.no_road);
        assert_eq!(
            loaded.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            field.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn transform_matches_brute_force(seed in any::<u64>()) {
            let mut state = seed | 1;
            let mut data = vec![false; 24 * 24];
            for b in data.iter_mut() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                *b = (state >> 35) % 11 == 0;
            }
            prop_assume!(data.iter().any(|&b| b));
            let mask = RoadMask { header: header(24, 24), data };
            let field = distance_transform(&mask, 1.5);
            prop_assert_eq!(field.values, brute_force(&mask, 1.5));
        }
    }
}
