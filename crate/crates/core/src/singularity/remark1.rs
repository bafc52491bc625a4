use serde::Serialize;

use crate::geometry::{HullRegion, PointSet};

pub const REMARK1_SAMPLES: usize = 1000;

/// The half-circle `theta -> lambda (cos theta, sin theta)` on `(0, pi)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Remark1Report {
    pub lambda: f64,
    pub samples: usize,
    pub min_pair_distance: f64,
    pub injective: bool,
    /// Distance of `lambda f(pi/2)` to `conv{lambda f(0), lambda f(pi)}`.
    pub violation: f64,
    pub domain_dim: usize,
    pub codomain_dim: usize,
    /// Whether domain and codomain dimensions agree; they do not here.
    pub equal_dimensions: bool,
}

pub fn remark1_case(lambda: f64) -> Remark1Report {
    let f = |t: f64| [lambda * t.cos(), lambda * t.sin()];
    let pts: Vec<[f64; 2]> = (0..REMARK1_SAMPLES)
        .map(|i| f(std::f64::consts::PI * (i as f64 + 0.5) / REMARK1_SAMPLES as f64))
        .collect();
    let mut min_pair_distance = f64::INFINITY;
    for (i, p) in pts.iter().enumerate() {
        for q in &pts[i + 1..] {
            min_pair_distance = min_pair_distance.min((p[0] - q[0]).hypot(p[1] - q[1]));
        }
    }
    let ends = PointSet::from_2d(&[f(0.0), f(std::f64::consts::PI)]).expect("two planar points");
    let hull = HullRegion::new(ends).expect("planar hull");
    let mid = f(std::f64::consts::FRAC_PI_2);
    Remark1Report {
        lambda,
        samples: REMARK1_SAMPLES,
        min_pair_distance,
        injective: min_pair_distance > 1e-12,
        violation: hull.distance(&mid),
        domain_dim: 1,
        codomain_dim: 2,
        equal_dimensions: false,
    }
}
