//! Albers projection against an independent evaluation of the ellipsoidal
//! formulas (atanh form of q, n from the squared-m difference), and a
//! finite-difference check of the equal-area property.

use vbamap_core::viz::{AlbersParams, AlbersProjection};

const A: f64 = 6_378_137.0;
const F: f64 = 1.0 / 298.257_222_101;

struct Textbook {
    e: f64,
    n: f64,
    c: f64,
    rho0: f64,
    lon0: f64,
}

impl Textbook {
    fn new(p: AlbersParams) -> Self {
        let e2 = 2.0 * F - F * F;
        let e = e2.sqrt();
        let m =
            |phi: f64| phi.to_radians().cos() / (1.0 - e2 * phi.to_radians().sin().powi(2)).sqrt();
        let q = |phi: f64| {
            let s = phi.to_radians().sin();
            (1.0 - e2) * (s / (1.0 - e2 * s * s) + (e * s).atanh() / e)
        };
        let n = (m(p.lat1).powi(2) - m(p.lat2).powi(2)) / (q(p.lat2) - q(p.lat1));
        let c = m(p.lat1).powi(2) + n * q(p.lat1);
        let rho0 = A * (c - n * q(p.lat0)).sqrt() / n;
        Textbook {
            e,
            n,
            c,
            rho0,
            lon0: p.lon0,
        }
    }

    fn project(&self, lon: f64, lat: f64) -> (f64, f64) {
        let e2 = self.e * self.e;
        let s = lat.to_radians().sin();
        let q = (1.0 - e2) * (s / (1.0 - e2 * s * s) + (self.e * s).atanh() / self.e);
        let rho = A * (self.c - self.n * q).sqrt() / self.n;
        let theta = self.n * (lon - self.lon0).to_radians();
        (rho * theta.sin(), self.rho0 - rho * theta.cos())
    }
}

#[test]
fn matches_textbook_evaluation() {
    for (params, points) in [
        (
            AlbersParams::CONUS,
            vec![
                (-77.0365, 38.8977),
                (-122.4194, 37.7749),
                (-109.2, 41.6),
                (-80.19, 25.76),
                (-68.77, 47.1),
            ],
        ),
        (
            AlbersParams::ALASKA,
            vec![
                (-149.9, 61.2),
                (-148.97, 63.73),
                (-165.4, 64.5),
                (-135.3, 57.05),
            ],
        ),
    ] {
        let ours = AlbersProjection::new(params).unwrap();
        let oracle = Textbook::new(params);
        let grid = (0..=20)
            .flat_map(|i| (0..=10).map(move |j| (i, j)))
            .map(|(i, j)| {
                (
                    params.lon0 - 25.0 + 2.5 * i as f64,
                    params.lat0 - 12.0 + 2.4 * j as f64,
                )
            });
        for (lon, lat) in points.into_iter().chain(grid) {
            let (x, y) = ours.project(lon, lat).unwrap();
            let (ox, oy) = oracle.project(lon, lat);
            // metres; rho ~ 7e6 m carries ~1e-9 m of rounding, so demand
            // agreement to a few ulps of the semi-major axis
            let tol = 1e-14 * A;
            assert!((x - ox).abs() <= tol, "x at ({lon},{lat}): {x} vs {ox}");
            assert!((y - oy).abs() <= tol, "y at ({lon},{lat}): {y} vs {oy}");
        }
    }
}

#[test]
fn preserves_area() {
    // Jacobian determinant equals the ellipsoid's area element
    // a^2 (1 - e^2) cos(phi) / (1 - e^2 sin^2 phi)^2 per radian^2.
    let e2 = 2.0 * F - F * F;
    let proj = AlbersProjection::new(AlbersParams::CONUS).unwrap();
    let h = 1e-4;
    for (lon, lat) in [(-100.0, 30.0), (-85.0, 45.0), (-120.0, 48.0), (-70.0, 26.0)] {
        let p = |dl: f64, dp: f64| proj.project(lon + dl, lat + dp).unwrap();
        let (xl1, yl1) = p(h, 0.0);
        let (xl0, yl0) = p(-h, 0.0);
        let (xp1, yp1) = p(0.0, h);
        let (xp0, yp0) = p(0.0, -h);
        let rad = (2.0 * h).to_radians();
        let det = ((xl1 - xl0) * (yp1 - yp0) - (xp1 - xp0) * (yl1 - yl0)) / (rad * rad);
        let s = lat.to_radians().sin();
        let element = A * A * (1.0 - e2) * lat.to_radians().cos() / (1.0 - e2 * s * s).powi(2);
        assert!(
            (det.abs() / element - 1.0).abs() < 1e-6,
            "({lon},{lat}): {}",
            det.abs() / element
        );
    }
}
