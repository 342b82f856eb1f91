//! Local tangent-plane (equirectangular) projection about a reference origin.

use super::types::{GeoPoint, LocalPoint};

/// WGS84 equatorial radius in meters.
pub const EARTH_RADIUS: f64 = 6_378_137.0;

pub fn project_to_local(p: GeoPoint, origin: GeoPoint) -> LocalPoint {
    let k = EARTH_RADIUS * std::f64::consts::PI / 180.0;
    LocalPoint {
        x: (p.lon - origin.lon) * origin.lat.to_radians().cos() * k,
        y: (p.lat - origin.lat) * k,
    }
}

/// Inverse of [`project_to_local`] for the same origin.
pub fn local_to_geo(p: LocalPoint, origin: GeoPoint) -> GeoPoint {
    let k = EARTH_RADIUS * std::f64::consts::PI / 180.0;
    GeoPoint {
        lon: origin.lon + p.x / (origin.lat.to_radians().cos() * k),
        lat: origin.lat + p.y / k,
    }
}
