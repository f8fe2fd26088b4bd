//! Albers equal-area conic projection on the GRS 80 ellipsoid.

use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use super::VizError;

const SEMI_MAJOR: f64 = 6_378_137.0;
const INV_FLATTENING: f64 = 298.257_222_101;

/// Standard parallels and origin, all in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlbersParams {
    pub lat1: f64,
    pub lat2: f64,
    pub lon0: f64,
    pub lat0: f64,
}

impl AlbersParams {
    pub const CONUS: AlbersParams = AlbersParams {
        lat1: 29.5,
        lat2: 45.5,
        lon0: -96.0,
        lat0: 37.5,
    };

    pub const ALASKA: AlbersParams = AlbersParams {
        lat1: 55.0,
        lat2: 65.0,
        lon0: -154.0,
        lat0: 50.0,
    };
}

impl Default for AlbersParams {
    fn default() -> Self {
        AlbersParams::CONUS
    }
}

impl fmt::Display for AlbersParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.lat1, self.lat2, self.lon0, self.lat0)
    }
}

impl FromStr for AlbersParams {
    type Err = VizError;

    /// `conus`, `alaska`, or `lat1,lat2,lon0,lat0`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "conus" => return Ok(AlbersParams::CONUS),
            "alaska" => return Ok(AlbersParams::ALASKA),
            _ => {}
        }
        let mut parts = s.split(',').map(|p| p.trim().parse::<f64>());
        let mut next = || match parts.next() {
            Some(Ok(v)) => Ok(v),
            _ => Err(VizError::BadProjection(s.into())),
        };
        let params = AlbersParams {
            lat1: next()?,
            lat2: next()?,
            lon0: next()?,
            lat0: next()?,
        };
        if parts.next().is_some() {
            return Err(VizError::BadProjection(s.into()));
        }
        Ok(params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlbersProjection {
    params: AlbersParams,
    e: f64,
    e2: f64,
    n: f64,
    c: f64,
    rho0: f64,
}

fn m_fn(sin_phi: f64, cos_phi: f64, e2: f64) -> f64 {
    cos_phi / libm::sqrt(1.0 - e2 * sin_phi * sin_phi)
}

fn q_fn(sin_phi: f64, e: f64, e2: f64) -> f64 {
    let es = e * sin_phi;
    (1.0 - e2) * (sin_phi / (1.0 - es * es) - libm::log((1.0 - es) / (1.0 + es)) / (2.0 * e))
}

fn valid_lat(lat: f64) -> bool {
    lat > -90.0 && lat < 90.0
}

impl AlbersProjection {
    pub fn new(params: AlbersParams) -> Result<Self, VizError> {
        let AlbersParams {
            lat1,
            lat2,
            lon0,
            lat0,
        } = params;
        let finite = [lat1, lat2, lon0, lat0].iter().all(|v| v.is_finite());
        if !finite
            || !valid_lat(lat1)
            || !valid_lat(lat2)
            || !valid_lat(lat0)
            || lat1 == lat2
            || libm::fabs(lat1 + lat2) < 1e-9
        {
            return Err(VizError::InvalidProjection(params));
        }
        let f = 1.0 / INV_FLATTENING;
        let e2 = f * (2.0 - f);
        let e = libm::sqrt(e2);
        let (s1, c1) = libm::sincos(lat1.to_radians());
        let (s2, c2) = libm::sincos(lat2.to_radians());
        let (s0, _) = libm::sincos(lat0.to_radians());
        let m1 = m_fn(s1, c1, e2);
        let m2 = m_fn(s2, c2, e2);
        let q1 = q_fn(s1, e, e2);
        let q2 = q_fn(s2, e, e2);
        let q0 = q_fn(s0, e, e2);
        let n = (m1 * m1 - m2 * m2) / (q2 - q1);
        let c = m1 * m1 + n * q1;
        let rho0 = SEMI_MAJOR * libm::sqrt(c - n * q0) / n;
        Ok(AlbersProjection {
            params,
            e,
            e2,
            n,
            c,
            rho0,
        })
    }

    pub fn params(&self) -> AlbersParams {
        self.params
    }

    /// Projects degrees to metres east/north of the origin.
    pub fn project(&self, lon: f64, lat: f64) -> Result<(f64, f64), VizError> {
        if !(lon.is_finite() && valid_lat(lat)) {
            return Err(VizError::UnprojectablePoint { lon, lat });
        }
        let (s, _) = libm::sincos(lat.to_radians());
        let q = q_fn(s, self.e, self.e2);
        let rho = SEMI_MAJOR * libm::sqrt(self.c - self.n * q) / self.n;
        let mut dlon = (lon - self.params.lon0).to_radians();
        // wrap into (-pi, pi]
        dlon = libm::fmod(dlon + PI, 2.0 * PI);
        if dlon < 0.0 {
            dlon += 2.0 * PI;
        }
        dlon -= PI;
        let (sin_t, cos_t) = libm::sincos(self.n * dlon);
        Ok((rho * sin_t, self.rho0 - rho * cos_t))
    }
}
