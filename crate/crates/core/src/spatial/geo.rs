use serde::{Deserialize, Serialize};

/// Mean earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.004;

/// Kilometres per degree of latitude along a meridian.
pub const KM_PER_DEGREE: f64 = EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub latitude: f64,
    pub longitude: f64,
}

impl GeoPoint {
    pub fn new(latitude: f64, longitude: f64) -> Self {
        GeoPoint { latitude, longitude }
    }

    pub fn is_valid(&self) -> bool {
        (-90.0..=90.0).contains(&self.latitude) && (-180.0..=180.0).contains(&self.longitude)
    }
}

/// Great-circle distance in kilometres.
///
/// Uses the haversine form of the central angle, which equals
/// `arccos(sin φa sin φb + cos φa cos φb cos Δλ)` but stays accurate for
/// short distances and returns exactly zero for coincident points.
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let (pa, pb) = (a.latitude.to_radians(), b.latitude.to_radians());
    let dphi = pb - pa;
    let dlambda = (b.longitude - a.longitude).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + pa.cos() * pb.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.clamp(0.0, 1.0).sqrt().asin()
}
