//! Coordinate transforms between geographic coordinates, local ENU frames,
//! the global Web Mercator pixel frame, and equirectangular panorama pixels,
//! plus the fixed-size training-box conventions built on top of them.
//!
//! All angles are radians; degree conversion happens only at I/O boundaries.
//! Aerial pixel coordinates live in the *global* frame at a given zoom level
//! (the frame is `256 * 2^zoom` pixels wide; tiles are 256 px windows of it).

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use thiserror::Error;

/// WGS84 equatorial radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_378_137.0;

/// Latitude validity band of the Web Mercator projection (±85.0511°).
pub const MERCATOR_LAT_BOUND: f64 = 1.4845;

/// Highest zoom level of the global aerial pixel frame.
pub const MAX_ZOOM: u8 = 23;

/// Aerial training boxes are fixed 100 px squares.
pub const AERIAL_BOX_PX: f64 = 100.0;

/// Street-view training boxes cover an 8 m wide, 12 m tall object.
pub const STREET_OBJECT_WIDTH_M: f64 = 8.0;
pub const STREET_OBJECT_HEIGHT_M: f64 = 12.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("latitude {0} rad outside the Web Mercator band (|lat| <= {MERCATOR_LAT_BOUND})")]
    LatOutOfMercatorBand(f64),
    #[error("coordinate is not finite: lat={lat}, lng={lng}")]
    NonFiniteCoordinate { lat: f64, lng: f64 },
    #[error("pixel ({x}, {y}) outside the zoom-{zoom} frame")]
    PixelOutOfFrame { x: f64, y: f64, zoom: u8 },
    #[error("zoom level {0} exceeds the maximum of {MAX_ZOOM}")]
    InvalidZoom(u8),
    #[error("ENU offset ({east} E, {north} N) has no geographic preimage")]
    EnuOutOfRange { east: f64, north: f64 },
    #[error("target coincides with the camera; azimuth undefined")]
    ZeroRange,
    #[error("pixel row {y} is at or above the horizon row {horizon}; no ground intersection")]
    NoGroundIntersection { y: f64, horizon: f64 },
    #[error("invalid camera pose: {0}")]
    InvalidPose(String),
    #[error("invalid pixel box: {0}")]
    InvalidBox(String),
}

/// A geographic position in radians. Latitude is restricted to the Web
/// Mercator validity band; longitude is wrapped into `[-pi, pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    lat: f64,
    lng: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lng: f64) -> Result<Self, GeoError> {
        if !lat.is_finite() || !lng.is_finite() {
            return Err(GeoError::NonFiniteCoordinate { lat, lng });
        }
        if lat.abs() > MERCATOR_LAT_BOUND {
            return Err(GeoError::LatOutOfMercatorBand(lat));
        }
        let lng = wrap_longitude(lng);
        Ok(Self { lat, lng })
    }

    pub fn from_degrees(lat_deg: f64, lng_deg: f64) -> Result<Self, GeoError> {
        Self::new(lat_deg.to_radians(), lng_deg.to_radians())
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lng(&self) -> f64 {
        self.lng
    }

    pub fn lat_deg(&self) -> f64 {
        self.lat.to_degrees()
    }

    pub fn lng_deg(&self) -> f64 {
        self.lng.to_degrees()
    }
}

/// Wrap a longitude into `[-pi, pi)`. In-range values pass through
/// untouched so that construction is idempotent at the ulp level.
fn wrap_longitude(lng: f64) -> f64 {
    if (-PI..PI).contains(&lng) {
        return lng;
    }
    let wrapped = (lng + PI).rem_euclid(TAU) - PI;
    if wrapped >= PI {
        wrapped - TAU
    } else {
        wrapped
    }
}

/// Local East-North-Up offset in meters relative to a camera.
/// For ground objects `up = -h` (the camera sits `h` meters above ground).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnuVector {
    pub east: f64,
    pub north: f64,
    pub up: f64,
}

/// Pose of a street-level panorama: position, heading, rig height, and the
/// pixel dimensions of the equirectangular image.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraPose {
    pub id: String,
    pub geo: GeoPoint,
    /// Heading, clockwise from north, normalized into `[0, 2*pi)`.
    pub yaw: f64,
    /// Camera height above ground in meters.
    pub height_m: f64,
    pub width_px: u32,
    pub height_px: u32,
    /// Acquisition timestamp (seconds, arbitrary epoch).
    pub epoch: i64,
}

impl CameraPose {
    pub fn new(
        id: impl Into<String>,
        geo: GeoPoint,
        yaw: f64,
        height_m: f64,
        width_px: u32,
        height_px: u32,
        epoch: i64,
    ) -> Result<Self, GeoError> {
        if !yaw.is_finite() {
            return Err(GeoError::InvalidPose(format!("non-finite yaw {yaw}")));
        }
        if !(height_m > 0.0) {
            return Err(GeoError::InvalidPose(format!(
                "camera height must be > 0, got {height_m}"
            )));
        }
        if width_px == 0 || height_px == 0 {
            return Err(GeoError::InvalidPose("zero panorama dimensions".into()));
        }
        if width_px != 2 * height_px {
            return Err(GeoError::InvalidPose(format!(
                "full equirectangular panorama requires width = 2 * height, got {width_px}x{height_px}"
            )));
        }
        Ok(Self {
            id: id.into(),
            geo,
            yaw: yaw.rem_euclid(TAU),
            height_m,
            width_px,
            height_px,
            epoch,
        })
    }
}

/// Continuous pixel position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelPoint {
    pub x: f64,
    pub y: f64,
}

/// Axis-aligned pixel box given by center and size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl PixelBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self, GeoError> {
        if !(w > 0.0 && h > 0.0) {
            return Err(GeoError::InvalidBox(format!(
                "box size must be positive, got {w}x{h}"
            )));
        }
        Ok(Self { x, y, w, h })
    }

    pub fn center(&self) -> PixelPoint {
        PixelPoint { x: self.x, y: self.y }
    }

    /// Ground-contact pixel of a detection box: the bottom edge midpoint.
    pub fn bottom_center(&self) -> PixelPoint {
        PixelPoint {
            x: self.x,
            y: self.y + self.h / 2.0,
        }
    }
}

/// Global aerial frame configuration: earth radius and frame zoom level.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GeoConstants {
    pub radius_m: f64,
    pub zoom: u8,
}

impl GeoConstants {
    pub fn new(radius_m: f64, zoom: u8) -> Result<Self, GeoError> {
        if zoom > MAX_ZOOM {
            return Err(GeoError::InvalidZoom(zoom));
        }
        if !(radius_m > 0.0) {
            return Err(GeoError::InvalidPose(format!(
                "earth radius must be > 0, got {radius_m}"
            )));
        }
        Ok(Self { radius_m, zoom })
    }
}

impl Default for GeoConstants {
    fn default() -> Self {
        // Zoom 20 puts the 100 px aerial box at ~12 m for mid latitudes.
        Self { radius_m: EARTH_RADIUS_M, zoom: 20 }
    }
}

/// Side length in pixels of the global Mercator frame at `zoom`.
pub fn frame_size_px(zoom: u8) -> f64 {
    256.0 * 2f64.powi(i32::from(zoom))
}

/// Ground size of one aerial pixel in meters at a given latitude and zoom.
pub fn pixel_size_m(lat: f64, zoom: u8) -> f64 {
    TAU * EARTH_RADIUS_M * lat.cos() / frame_size_px(zoom)
}

/// Project a geographic point into the global Web Mercator pixel frame.
pub fn mercator_geo_to_pixel(p: &GeoPoint, zoom: u8) -> Result<PixelPoint, GeoError> {
    if zoom > MAX_ZOOM {
        return Err(GeoError::InvalidZoom(zoom));
    }
    if p.lat.abs() > MERCATOR_LAT_BOUND {
        return Err(GeoError::LatOutOfMercatorBand(p.lat));
    }
    let scale = frame_size_px(zoom);
    let x = scale * (p.lng + PI) / TAU;
    let y = scale * (0.5 - (FRAC_PI_4 + p.lat / 2.0).tan().ln() / TAU);
    Ok(PixelPoint { x, y })
}

/// Invert the Web Mercator projection.
///
/// This is the exact algebraic inverse of [`mercator_geo_to_pixel`]; the
/// latitude recovery is `2*atan(exp(pi - y*pi/(128*2^zoom))) - pi/2`.
pub fn mercator_pixel_to_geo(p: &PixelPoint, zoom: u8) -> Result<GeoPoint, GeoError> {
    if zoom > MAX_ZOOM {
        return Err(GeoError::InvalidZoom(zoom));
    }
    let scale = frame_size_px(zoom);
    let out_of_frame = GeoError::PixelOutOfFrame { x: p.x, y: p.y, zoom };
    if !(p.x.is_finite() && p.y.is_finite()) || p.x < 0.0 || p.x > scale {
        return Err(out_of_frame);
    }
    let half = scale / 2.0;
    let lng = PI * p.x / half - PI;
    let lat = 2.0 * (PI - p.y * PI / half).exp().atan() - FRAC_PI_2;
    GeoPoint::new(lat, lng).map_err(|_| out_of_frame)
}

/// East/north ground offset in meters of `target` relative to `origin`,
/// assuming locally flat terrain.
pub fn enu_ground_offset(target: &GeoPoint, origin: &GeoPoint) -> (f64, f64) {
    let east = EARTH_RADIUS_M * origin.lat.cos() * (target.lng - origin.lng).sin();
    let north = EARTH_RADIUS_M * (target.lat - origin.lat).sin();
    (east, north)
}

/// Ground distance in meters between two geographic points, measured in the
/// ENU frame anchored at `a`.
pub fn ground_distance_m(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let (east, north) = enu_ground_offset(b, a);
    east.hypot(north)
}

/// ENU coordinates of a ground-level target as seen from a camera.
pub fn enu_from_geo(target: &GeoPoint, cam: &CameraPose) -> EnuVector {
    let (east, north) = enu_ground_offset(target, &cam.geo);
    EnuVector { east, north, up: -cam.height_m }
}

/// Geographic point at a given east/north meter offset from `origin`.
pub fn geo_from_ground_offset(
    east: f64,
    north: f64,
    origin: &GeoPoint,
) -> Result<GeoPoint, GeoError> {
    let sin_lat = north / EARTH_RADIUS_M;
    let sin_lng = east / (EARTH_RADIUS_M * origin.lat.cos());
    if sin_lat.abs() > 1.0 || sin_lng.abs() > 1.0 {
        return Err(GeoError::EnuOutOfRange { east, north });
    }
    GeoPoint::new(origin.lat + sin_lat.asin(), origin.lng + sin_lng.asin())
}

/// Algebraic inverse of [`enu_from_geo`] (the up component is ignored; the
/// target is assumed to be on the ground plane).
pub fn geo_from_enu(v: &EnuVector, cam: &CameraPose) -> Result<GeoPoint, GeoError> {
    geo_from_ground_offset(v.east, v.north, &cam.geo)
}

/// Project an ENU offset (relative to the camera) into panorama pixels using
/// the equidistant cylindrical model. `v.up` is relative to the camera, so a
/// ground point has `up = -h`.
pub fn streetview_enu_to_pixel(v: &EnuVector, cam: &CameraPose) -> Result<PixelPoint, GeoError> {
    let range = v.east.hypot(v.north);
    if range == 0.0 {
        return Err(GeoError::ZeroRange);
    }
    let azimuth = v.east.atan2(v.north);
    let w = cam.width_px as f64;
    let h = cam.height_px as f64;
    let x = ((PI + azimuth - cam.yaw) * w / TAU).rem_euclid(w);
    let x = if x >= w { 0.0 } else { x };
    let y = (FRAC_PI_2 - v.up.atan2(range)) * h / PI;
    Ok(PixelPoint { x, y })
}

/// Project a ground-level geographic target into panorama pixels.
pub fn streetview_geo_to_pixel(target: &GeoPoint, cam: &CameraPose) -> Result<PixelPoint, GeoError> {
    streetview_enu_to_pixel(&enu_from_geo(target, cam), cam)
}

/// Back-project a panorama pixel to geographic coordinates under the flat
/// ground assumption. Only rows below the horizon intersect the ground.
pub fn streetview_pixel_to_geo(p: &PixelPoint, cam: &CameraPose) -> Result<GeoPoint, GeoError> {
    let w = cam.width_px as f64;
    let h = cam.height_px as f64;
    let horizon = h / 2.0;
    if !(p.y > horizon) {
        return Err(GeoError::NoGroundIntersection { y: p.y, horizon });
    }
    let azimuth = TAU * p.x / w - PI + cam.yaw;
    let tilt = FRAC_PI_2 - PI * p.y / h;
    let range = cam.height_m / (-tilt).tan();
    geo_from_ground_offset(range * azimuth.sin(), range * azimuth.cos(), &cam.geo)
}

/// View selector for [`make_training_box`].
#[derive(Debug, Clone, Copy)]
pub enum TrainingView<'a> {
    Aerial { zoom: u8 },
    Street(&'a CameraPose),
}

/// Build the fixed-convention training/query box for a target in a view:
/// a 100 px square centered on the Mercator projection for aerial views, or
/// the box an 8 x 12 m object at the target's range would occupy for
/// street views.
pub fn make_training_box(view: TrainingView<'_>, target: &GeoPoint) -> Result<PixelBox, GeoError> {
    match view {
        TrainingView::Aerial { zoom } => aerial_training_box(target, zoom),
        TrainingView::Street(cam) => street_training_box(target, cam),
    }
}

/// 100 px square centered on the target's aerial projection.
pub fn aerial_training_box(target: &GeoPoint, zoom: u8) -> Result<PixelBox, GeoError> {
    let center = mercator_geo_to_pixel(target, zoom)?;
    PixelBox::new(center.x, center.y, AERIAL_BOX_PX, AERIAL_BOX_PX)
}

/// Panorama box spanning the azimuths of ground points 4 m either side of
/// the line of sight and the rows from ground level up to 12 m above ground
/// at the target's range.
pub fn street_training_box(target: &GeoPoint, cam: &CameraPose) -> Result<PixelBox, GeoError> {
    let enu = enu_from_geo(target, cam);
    let range = enu.east.hypot(enu.north);
    if range == 0.0 {
        return Err(GeoError::ZeroRange);
    }
    let w = cam.width_px as f64;
    let h_px = cam.height_px as f64;

    let half_width_m = STREET_OBJECT_WIDTH_M / 2.0;
    let width_px = 2.0 * (half_width_m / range).atan() * w / TAU;

    let center = streetview_enu_to_pixel(&enu, cam)?;
    let y_bottom = center.y;
    let top = EnuVector {
        east: enu.east,
        north: enu.north,
        up: STREET_OBJECT_HEIGHT_M - cam.height_m,
    };
    let y_top = (FRAC_PI_2 - top.up.atan2(range)) * h_px / PI;

    PixelBox::new(
        center.x,
        (y_top + y_bottom) / 2.0,
        width_px,
        y_bottom - y_top,
    )
}
