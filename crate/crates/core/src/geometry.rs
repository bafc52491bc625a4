//! Convex hulls of finite point sets, distances to them, and separating functionals.
//!
//! Planar hulls are computed exactly with Andrew's monotone chain. Membership and
//! distance in any dimension go through a Frank-Wolfe solver with away steps that
//! minimizes `|q - sum_i w_i b_i|^2` over the probability simplex; its minimizer
//! doubles as the nearest hull point used to build separating functionals.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Default stopping tolerance for the Frank-Wolfe hull projection.
pub const DEFAULT_GAP_TOL: f64 = 1e-10;

/// Relative epsilon for the monotone chain orientation test.
const COLLINEAR_EPS: f64 = 1e-12;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Euclidean distance from `q` to the closed segment `[a, b]`.
pub fn segment_distance(q: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let aq = [q[0] - a[0], q[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((aq[0] * ab[0] + aq[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let dx = aq[0] - t * ab[0];
    let dy = aq[1] - t * ab[1];
    dx.hypot(dy)
}

/// A finite, non-empty cloud of points with a common dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidPointSet("dimension must be positive".into()));
        }
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords)
    }

    /// Builds a point set from row-major coordinates.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidPointSet("dimension must be positive".into()));
        }
        if coords.is_empty() {
            return Err(Error::InvalidPointSet("at least one point required".into()));
        }
        if coords.len() % dim != 0 {
            return Err(Error::InvalidPointSet(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidPointSet(format!("non-finite coordinate {bad}")));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_2d(points: &[[f64; 2]]) -> Result<Self> {
        Self::from_flat(2, points.iter().flat_map(|p| p.iter().copied()).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for p in self.iter() {
            for (ci, pi) in c.iter_mut().zip(p) {
                *ci += pi;
            }
        }
        let n = self.len() as f64;
        c.iter_mut().for_each(|ci| *ci /= n);
        c
    }

    fn points_2d(&self) -> Vec<[f64; 2]> {
        self.iter().map(|p| [p[0], p[1]]).collect()
    }
}

/// Shape of a hull with an explicit representation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HullShape {
    /// One-dimensional hull `[lo, hi]`.
    Interval { lo: f64, hi: f64 },
    /// Counterclockwise polygon; 1 or 2 vertices for point/segment hulls.
    Polygon { vertices: Vec<[f64; 2]> },
}

/// A point set together with an explicit hull (dimensions 1 and 2).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullRegion {
    pub source: PointSet,
    pub shape: HullShape,
    pub tolerance: f64,
}

impl HullRegion {
    /// Builds the explicit hull of `ps`. Only dimensions 1 and 2 are supported.
    pub fn new(ps: PointSet) -> Result<Self> {
        match ps.dim() {
            1 => {
                let (lo, hi) = ps
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                        (lo.min(p[0]), hi.max(p[0]))
                    });
                Ok(Self {
                    source: ps,
                    shape: HullShape::Interval { lo, hi },
                    tolerance: 0.0,
                })
            }
            2 => convex_hull_2d(&ps),
            d => Err(Error::DimensionMismatch { expected: 2, got: d }),
        }
    }

    /// Polygon vertices in counterclockwise order (planar hulls only).
    pub fn vertices_2d(&self) -> Option<&[[f64; 2]]> {
        match &self.shape {
            HullShape::Polygon { vertices } => Some(vertices),
            HullShape::Interval { .. } => None,
        }
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    /// Exact Euclidean distance from `q` to the hull (0 inside).
    pub fn distance(&self, q: &[f64]) -> f64 {
        match &self.shape {
            HullShape::Interval { lo, hi } => (lo - q[0]).max(q[0] - hi).max(0.0),
            HullShape::Polygon { vertices } => {
                let q = [q[0], q[1]];
                if vertices.len() >= 3 && polygon_inside(vertices, q) {
                    0.0
                } else {
                    polygon_boundary_distance(vertices, q)
                }
            }
        }
    }

    /// Distance from `q` to the relative boundary of the hull.
    ///
    /// Point and segment hulls are their own boundary.
    pub fn boundary_distance(&self, q: &[f64]) -> f64 {
        match &self.shape {
            HullShape::Interval { lo, hi } => {
                if lo == hi {
                    (q[0] - lo).abs()
                } else {
                    (q[0] - lo).abs().min((q[0] - hi).abs())
                }
            }
            HullShape::Polygon { vertices } => polygon_boundary_distance(vertices, [q[0], q[1]]),
        }
    }

    /// Point-in-polygon (or in-interval) test with slack `tol` for lower-dimensional hulls.
    pub fn contains(&self, q: &[f64], tol: f64) -> bool {
        match &self.shape {
            HullShape::Polygon { vertices } if vertices.len() >= 3 => {
                polygon_inside(vertices, [q[0], q[1]])
                    || polygon_boundary_distance(vertices, [q[0], q[1]]) <= tol
            }
            _ => self.distance(q) <= tol,
        }
    }
}

fn polygon_inside(vertices: &[[f64; 2]], q: [f64; 2]) -> bool {
    let n = vertices.len();
    (0..n).all(|i| cross(vertices[i], vertices[(i + 1) % n], q) >= 0.0)
}

fn polygon_boundary_distance(vertices: &[[f64; 2]], q: [f64; 2]) -> f64 {
    match vertices.len() {
        0 => f64::INFINITY,
        1 => (q[0] - vertices[0][0]).hypot(q[1] - vertices[0][1]),
        2 => segment_distance(q, vertices[0], vertices[1]),
        n => (0..n)
            .map(|i| segment_distance(q, vertices[i], vertices[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Convex hull of a planar point set by the monotone chain algorithm.
///
/// Collinear and duplicate points are dropped, so the polygon is strictly convex.
/// Degenerate inputs give a one-vertex (point) or two-vertex (segment) polygon.
pub fn convex_hull_2d(ps: &PointSet) -> Result<HullRegion> {
    if ps.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: ps.dim(),
        });
    }
    let mut pts = ps.points_2d();
    pts.sort_by(|a, b| {
        a[0].partial_cmp(&b[0])
            .unwrap_or(Ordering::Equal)
            .then(a[1].partial_cmp(&b[1]).unwrap_or(Ordering::Equal))
    });
    pts.dedup();

    let (mut xmin, mut xmax, mut ymin, mut ymax) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for p in &pts {
        xmin = xmin.min(p[0]);
        xmax = xmax.max(p[0]);
        ymin = ymin.min(p[1]);
        ymax = ymax.max(p[1]);
    }
    let scale = (xmax - xmin).max(ymax - ymin);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let eps = COLLINEAR_EPS * scale * scale;

    let vertices = if pts.len() <= 2 {
        pts
    } else {
        let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
        for &p in &pts {
            while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= eps {
                hull.pop();
            }
            hull.push(p);
        }
        let lower_len = hull.len() + 1;
        for &p in pts.iter().rev().skip(1) {
            while hull.len() >= lower_len
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= eps
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
        hull
    };

    Ok(HullRegion {
        source: ps.clone(),
        shape: HullShape::Polygon { vertices },
        tolerance: eps,
    })
}

/// Result of projecting a point onto the convex hull of a point set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullProjection {
    /// `|q - nearest|`, an upper bound on the true distance and within `tol` of it.
    pub distance: f64,
    pub nearest: Vec<f64>,
    /// Barycentric weights over the source points.
    pub weights: Vec<f64>,
    /// Final Frank-Wolfe duality gap of the squared distance.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn check_query(q: &[f64], ps: &PointSet, tol: f64) -> Result<()> {
    if q.len() != ps.dim() {
        return Err(Error::DimensionMismatch {
            expected: ps.dim(),
            got: q.len(),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if q.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument("query point is not finite".into()));
    }
    Ok(())
}

/// Projects `q` onto `conv(ps)` with Frank-Wolfe plus away steps and exact line search.
///
/// Stops once the returned distance is certified within `tol` of the true one:
/// either `|d| <= tol`, or the gap bound `min(sqrt(gap), gap / |d|) <= tol`.
pub fn project_onto_hull(q: &[f64], ps: &PointSet, tol: f64) -> Result<HullProjection> {
    check_query(q, ps, tol)?;
    let n = ps.len();
    let dim = ps.dim();
    let max_iter = 20_000 + 50 * n;

    let start = (0..n)
        .map(|i| {
            let d2: f64 = ps.point(i).iter().zip(q).map(|(b, qi)| (b - qi).powi(2)).sum();
            (i, d2)
        })
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
        .map(|(i, _)| i)
        .unwrap_or(0);

    let mut weights = vec![0.0; n];
    weights[start] = 1.0;
    let mut active = vec![start];
    let mut p = ps.point(start).to_vec();
    let mut d: Vec<f64> = p.iter().zip(q).map(|(pi, qi)| pi - qi).collect();
    let mut dir = vec![0.0; dim];
    let mut gap = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        let dist = norm(&d);
        let dp = dot(&d, &p);

        let (s, grad_s) = (0..n)
            .map(|i| (i, dot(&d, ps.point(i))))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        let fw_gap = (dp - grad_s).max(0.0);
        gap = 2.0 * fw_gap;

        if dist <= tol || gap.sqrt().min(gap / dist) <= tol || gap == 0.0 {
            converged = true;
            break;
        }

        let (a, grad_a) = active
            .iter()
            .map(|&i| (i, dot(&d, ps.point(i))))
            .fold((start, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        let away_gap = grad_a - dp;

        let towards = fw_gap >= away_gap || weights[a] >= 1.0;
        let gamma_max = if towards {
            for k in 0..dim {
                dir[k] = ps.point(s)[k] - p[k];
            }
            1.0
        } else {
            for k in 0..dim {
                dir[k] = p[k] - ps.point(a)[k];
            }
            weights[a] / (1.0 - weights[a])
        };
        let dd = dot(&dir, &dir);
        if dd == 0.0 {
            converged = true;
            break;
        }
        let gamma = (-dot(&d, &dir) / dd).clamp(0.0, gamma_max);
        if gamma == 0.0 {
            // no progress possible in floating point
            converged = true;
            break;
        }

        if towards {
            weights.iter_mut().for_each(|w| *w *= 1.0 - gamma);
            weights[s] += gamma;
            if gamma >= 1.0 {
                weights.iter_mut().for_each(|w| *w = 0.0);
                weights[s] = 1.0;
            }
        } else {
            weights.iter_mut().for_each(|w| *w *= 1.0 + gamma);
            weights[a] -= gamma;
            if gamma >= gamma_max {
                weights[a] = 0.0;
            }
        }
        active.clear();
        active.extend((0..n).filter(|&i| weights[i] > 0.0));

        iterations += 1;
        if iterations % 64 == 0 {
            p.iter_mut().for_each(|v| *v = 0.0);
            for &i in &active {
                for k in 0..dim {
                    p[k] += weights[i] * ps.point(i)[k];
                }
            }
        } else {
            for k in 0..dim {
                p[k] += gamma * dir[k];
            }
        }
        for k in 0..dim {
            d[k] = p[k] - q[k];
        }
    }

    Ok(HullProjection {
        distance: norm(&d),
        nearest: p,
        weights,
        gap,
        iterations,
        converged,
    })
}

/// Euclidean distance from `q` to `conv(ps)`, within `tol` of the true value.
pub fn hull_distance(q: &[f64], ps: &PointSet, tol: f64) -> Result<f64> {
    Ok(project_onto_hull(q, ps, tol)?.distance)
}

/// Hull membership up to `tol`: `hull_distance(q, ps, tol / 4) <= tol`.
///
/// Planar queries are cross-checked against the polygon test away from the hull boundary.
pub fn contains(q: &[f64], ps: &PointSet, tol: f64) -> Result<bool> {
    let inside = hull_distance(q, ps, tol / 4.0)? <= tol;
    if ps.dim() == 2 {
        let region = convex_hull_2d(ps)?;
        if region.boundary_distance(q) > tol {
            debug_assert_eq!(
                inside,
                region.contains(q, tol),
                "distance and polygon membership disagree at {q:?}"
            );
        }
    }
    Ok(inside)
}

/// A unit linear functional separating a query point from a hull.
///
/// Every hull point `b` has `<direction, b> >= threshold`, while the query satisfies
/// `<direction, q> = threshold - margin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationWitness {
    pub direction: Vec<f64>,
    pub threshold: f64,
    pub margin: f64,
}

impl SeparationWitness {
    pub fn value(&self, y: &[f64]) -> f64 {
        dot(&self.direction, y)
    }
}

/// Separating functional through the midpoint between `q` and its nearest hull point.
pub fn separate(q: &[f64], ps: &PointSet, tol: f64) -> Result<SeparationWitness> {
    let proj = project_onto_hull(q, ps, tol / 4.0)?;
    if proj.distance <= tol {
        return Err(Error::NoSeparation {
            distance: proj.distance,
            tol,
        });
    }
    let direction: Vec<f64> = proj
        .nearest
        .iter()
        .zip(q)
        .map(|(p, qi)| (p - qi) / proj.distance)
        .collect();
    let mid: Vec<f64> = proj.nearest.iter().zip(q).map(|(p, qi)| 0.5 * (p + qi)).collect();
    let hull_min = ps
        .iter()
        .map(|b| dot(&direction, b))
        .fold(f64::INFINITY, f64::min);
    let threshold = dot(&direction, &mid).min(hull_min);
    let margin = threshold - dot(&direction, q);
    if margin <= 0.0 {
        return Err(Error::NoSeparation {
            distance: proj.distance,
            tol,
        });
    }
    Ok(SeparationWitness {
        direction,
        threshold,
        margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tri() -> PointSet {
        PointSet::from_2d(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap()
    }

    #[test]
    fn hull_drops_interior_point() {
        let ps = PointSet::from_2d(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.2, 0.2]]).unwrap();
        let h = convex_hull_2d(&ps).unwrap();
        assert_eq!(h.vertices_2d().unwrap(), &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn hull_of_two_points_is_segment() {
        let ps = PointSet::from_2d(&[[1.0, 0.0], [-1.0, 0.0]]).unwrap();
        let h = convex_hull_2d(&ps).unwrap();
        assert_eq!(h.vertices_2d().unwrap(), &[[-1.0, 0.0], [1.0, 0.0]]);
    }

    #[test]
    fn hull_of_repeated_point() {
        let ps = PointSet::from_2d(&[[0.5, 0.5]; 4]).unwrap();
        let h = convex_hull_2d(&ps).unwrap();
        assert_eq!(h.vertices_2d().unwrap().len(), 1);
    }

    #[test]
    fn collinear_points_collapse_to_segment() {
        let pts: Vec<[f64; 2]> = (0..10).map(|i| [i as f64, 2.0 * i as f64]).collect();
        let h = convex_hull_2d(&PointSet::from_2d(&pts).unwrap()).unwrap();
        assert_eq!(h.vertices_2d().unwrap(), &[[0.0, 0.0], [9.0, 18.0]]);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let ps = PointSet::new(3, &[vec![0.0, 0.0, 1.0]]).unwrap();
        assert!(matches!(convex_hull_2d(&ps), Err(Error::DimensionMismatch { .. })));
        assert!(PointSet::new(2, &[vec![0.0]]).is_err());
        assert!(PointSet::new(2, &[vec![f64::NAN, 0.0]]).is_err());
    }

    #[test]
    fn distances_match_examples() {
        assert!(hull_distance(&[0.2, 0.2], &tri(), 1e-10).unwrap() <= 1e-10);
        let seg = PointSet::from_2d(&[[1.0, 0.0], [-1.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(hull_distance(&[0.0, 1.0], &seg, 1e-10).unwrap(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(hull_distance(&[2.0, 0.0], &tri(), 1e-10).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn containment_examples() {
        let c = tri().centroid();
        assert!(contains(&c, &tri(), 1e-9).unwrap());
        assert!(contains(&[1.0, 0.0], &tri(), 1e-9).unwrap());
        let seg = PointSet::from_2d(&[[1.0, 0.0], [-1.0, 0.0]]).unwrap();
        assert!(!contains(&[0.0, 0.5], &seg, 1e-9).unwrap());
    }

    #[test]
    fn separation_examples() {
        let seg = PointSet::from_2d(&[[1.0, 0.0], [-1.0, 0.0]]).unwrap();
        let w = separate(&[0.0, 1.0], &seg, 1e-9).unwrap();
        assert_abs_diff_eq!(w.direction[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.direction[1], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.threshold, -0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(w.margin, 0.5, epsilon = 1e-9);

        let w = separate(&[2.0, 0.0], &tri(), 1e-9).unwrap();
        assert_abs_diff_eq!(w.direction[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.threshold, -1.5, epsilon = 1e-9);
        assert_abs_diff_eq!(w.margin, 0.5, epsilon = 1e-9);

        let square =
            PointSet::from_2d(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let w = separate(&[0.0, -5.0], &square, 1e-9).unwrap();
        assert_abs_diff_eq!(w.direction[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.direction[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn separating_contained_point_fails() {
        assert!(matches!(
            separate(&[0.2, 0.2], &tri(), 1e-9),
            Err(Error::NoSeparation { .. })
        ));
    }

    #[test]
    fn frank_wolfe_works_in_higher_dimension() {
        let simplex = PointSet::new(
            3,
            &[vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        )
        .unwrap();
        let d = hull_distance(&[1.0, 1.0, 1.0], &simplex, 1e-12).unwrap();
        // nearest point is the centroid of the far face
        let expected = 3.0f64.sqrt() - 1.0 / 3.0f64.sqrt();
        assert_abs_diff_eq!(d, expected, epsilon = 1e-10);
        assert!(contains(&[0.1, 0.1, 0.1], &simplex, 1e-9).unwrap());
    }

    #[test]
    fn interval_hull() {
        let ps = PointSet::new(1, &[vec![2.0], vec![-1.0], vec![0.5]]).unwrap();
        let h = HullRegion::new(ps).unwrap();
        assert_eq!(h.distance(&[3.0]), 1.0);
        assert_eq!(h.distance(&[0.0]), 0.0);
        assert_eq!(h.boundary_distance(&[0.0]), 1.0);
    }
}
