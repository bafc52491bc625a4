//! Deciders for the convex hull property and its open-set (hull-like) variant.
//!
//! A map has the hull property when the image of every interior node lies in the
//! convex hull of the boundary image. Dually, no continuous quasi-convex probe may take
//! a larger supremum over the interior than over the boundary. For maps known only on
//! the open set, the boundary supremum is replaced by the limit of collar suprema.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, HullRegion, PointSet};
use crate::grid::{FieldExpr, GridDomain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearTerm {
    pub direction: Vec<f64>,
    #[serde(default)]
    pub offset: f64,
}

/// Continuous quasi-convex function on the codomain.
///
/// All three kinds have convex sublevel sets by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum QuasiConvexProbe {
    /// `y -> <direction, y>`.
    Linear { direction: Vec<f64> },
    /// `y -> |y - center|`.
    NormDistance { center: Vec<f64> },
    /// `y -> max_k (<d_k, y> + c_k)`.
    MaxOfLinears { terms: Vec<LinearTerm> },
}

impl QuasiConvexProbe {
    pub fn linear(direction: Vec<f64>) -> Self {
        QuasiConvexProbe::Linear { direction }
    }

    pub fn norm(center: Vec<f64>) -> Self {
        QuasiConvexProbe::NormDistance { center }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        match self {
            QuasiConvexProbe::Linear { direction } => dot(direction, y),
            QuasiConvexProbe::NormDistance { center } => y
                .iter()
                .zip(center)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt(),
            QuasiConvexProbe::MaxOfLinears { terms } => terms
                .iter()
                .map(|t| dot(&t.direction, y) + t.offset)
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Codomain dimension the probe expects.
    pub fn dim(&self) -> usize {
        match self {
            QuasiConvexProbe::Linear { direction } => direction.len(),
            QuasiConvexProbe::NormDistance { center } => center.len(),
            QuasiConvexProbe::MaxOfLinears { terms } => {
                terms.first().map(|t| t.direction.len()).unwrap_or(0)
            }
        }
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.dim(),
            });
        }
        if let QuasiConvexProbe::MaxOfLinears { terms } = self {
            if terms.is_empty() || terms.iter().any(|t| t.direction.len() != dim) {
                return Err(Error::InvalidArgument("malformed max-of-linears probe".into()));
            }
        }
        Ok(())
    }
}

/// 64 unit directions plus the Euclidean norm in the plane; `+-1` plus `|.|` on the line.
pub fn default_probes(dim: usize) -> Vec<QuasiConvexProbe> {
    let mut probes = match dim {
        1 => vec![
            QuasiConvexProbe::linear(vec![1.0]),
            QuasiConvexProbe::linear(vec![-1.0]),
        ],
        _ => (0..64)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / 64.0;
                QuasiConvexProbe::linear(vec![a.cos(), a.sin()])
            })
            .collect(),
    };
    probes.push(QuasiConvexProbe::norm(vec![0.0; dim]));
    probes
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeGap {
    pub probe: QuasiConvexProbe,
    pub sup_interior: f64,
    pub sup_boundary: f64,
    /// `sup_interior - sup_boundary`; positive values violate the dual test.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullPropertyReport {
    pub holds: bool,
    pub worst_node: Option<usize>,
    pub worst_point: [f64; 2],
    pub worst_violation: f64,
    pub probe_gaps: Vec<ProbeGap>,
    pub tolerance: f64,
    pub interior_count: usize,
    pub boundary_count: usize,
}

impl HullPropertyReport {
    /// Largest sup gap over the probe family.
    pub fn max_probe_gap(&self) -> f64 {
        self.probe_gaps
            .iter()
            .map(|g| g.gap)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Verdict tolerance `4h L`, with `L` the largest analytic Jacobian norm over the closure.
pub fn default_tolerance(f: &FieldExpr, dom: &GridDomain) -> f64 {
    let mut pts = dom.interior_positions();
    pts.extend(dom.boundary_positions());
    4.0 * dom.h() * f.lipschitz_estimate(&pts)
}

/// Hull-property decision from samples: each interior value against the hull of the boundary values.
///
/// `interior` pairs node indices with their positions; `interior_values[i]` is the map at
/// `interior[i]`. Ties for the worst node go to the lowest index in `interior`.
pub fn hull_property_from_samples(
    interior: &[(usize, [f64; 2])],
    interior_values: &[Vec<f64>],
    boundary_values: &[Vec<f64>],
    tol: f64,
    probes: &[QuasiConvexProbe],
) -> Result<HullPropertyReport> {
    if interior.len() != interior_values.len() {
        return Err(Error::InvalidArgument("interior positions and values differ in length".into()));
    }
    if interior.is_empty() {
        return Err(Error::EmptyDomain);
    }
    if boundary_values.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be nonnegative, got {tol}")));
    }
    let dim = boundary_values[0].len();
    for p in probes {
        p.check_dim(dim)?;
    }
    let cloud = PointSet::new(dim, boundary_values)?;
    let region = HullRegion::new(cloud)?;

    let dists: Vec<f64> = interior_values.par_iter().map(|v| region.distance(v)).collect();
    let (mut worst_idx, mut worst) = (0, f64::NEG_INFINITY);
    for (i, &d) in dists.iter().enumerate() {
        if d > worst {
            worst = d;
            worst_idx = i;
        }
    }

    let probe_gaps = probes
        .iter()
        .map(|probe| {
            let sup_interior = interior_values
                .iter()
                .map(|v| probe.eval(v))
                .fold(f64::NEG_INFINITY, f64::max);
            let sup_boundary = boundary_values
                .iter()
                .map(|v| probe.eval(v))
                .fold(f64::NEG_INFINITY, f64::max);
            ProbeGap {
                probe: probe.clone(),
                sup_interior,
                sup_boundary,
                gap: sup_interior - sup_boundary,
            }
        })
        .collect();

    Ok(HullPropertyReport {
        holds: worst <= tol,
        worst_node: Some(interior[worst_idx].0),
        worst_point: interior[worst_idx].1,
        worst_violation: worst,
        probe_gaps,
        tolerance: tol,
        interior_count: interior.len(),
        boundary_count: boundary_values.len(),
    })
}

/// Checks `f(interior) in conv(f(boundary))` node by node, with the dual probe gaps.
pub fn check_hull_property(
    f: &FieldExpr,
    dom: &GridDomain,
    tol: f64,
    probes: &[QuasiConvexProbe],
) -> Result<HullPropertyReport> {
    let interior: Vec<(usize, [f64; 2])> =
        dom.interior().iter().map(|&k| (k, dom.coords(k))).collect();
    let values = f.eval_nodes(dom, dom.interior())?;
    let boundary = f.eval_points(&dom.boundary_positions())?;
    hull_property_from_samples(&interior, &values, &boundary, tol, probes)
}

/// Exact suprema of `probe(f(.))` over interior nodes and boundary samples.
pub fn probe_sup_gap(
    f: &FieldExpr,
    dom: &GridDomain,
    probe: &QuasiConvexProbe,
) -> Result<(f64, f64)> {
    probe.check_dim(f.dim())?;
    let sup = |vals: Vec<Vec<f64>>| {
        vals.iter()
            .map(|v| probe.eval(v))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let interior = sup(f.eval_nodes(dom, dom.interior())?);
    let boundary = sup(f.eval_points(&dom.boundary_positions())?);
    Ok((interior, boundary))
}

/// Collar widths `delta_1 / 2^(j-1)`, `j = 1..=5`, with `delta_1 = 32 h` so the finest is `2h`.
pub fn default_collar_widths(dom: &GridDomain) -> Vec<f64> {
    let h = dom.h();
    (0..5).map(|j| 32.0 * h / f64::from(1u32 << j)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollarTrace {
    pub probe: QuasiConvexProbe,
    pub interior_sup: f64,
    pub interior_argmax: usize,
    pub widths: Vec<f64>,
    /// Probe suprema over each collar, widest first.
    pub collar_sups: Vec<f64>,
    /// Node attaining the finest collar supremum.
    pub collar_argmax: usize,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullLikeReport {
    pub satisfied: bool,
    pub traces: Vec<CollarTrace>,
    pub tolerance: f64,
}

impl HullLikeReport {
    pub fn violated_probes(&self) -> impl Iterator<Item = &CollarTrace> {
        self.traces.iter().filter(|t| !t.satisfied)
    }
}

fn argmax_over(nodes: &[usize], values: &[f64]) -> (usize, f64) {
    let mut best = (nodes[0], f64::NEG_INFINITY);
    for &k in nodes {
        if values[k] > best.1 {
            best = (k, values[k]);
        }
    }
    best
}

/// Hull-like decision for a map known only on interior nodes.
///
/// For each probe the boundary limsup is estimated by suprema over shrinking collars; the
/// probe passes iff the finest collar supremum reaches the interior supremum within `tol`.
pub fn check_hull_like_property(
    f: &FieldExpr,
    dom: &GridDomain,
    probes: &[QuasiConvexProbe],
    widths: &[f64],
    tol: f64,
) -> Result<HullLikeReport> {
    if widths.is_empty() {
        return Err(Error::InvalidArgument("at least one collar width required".into()));
    }
    if widths.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("collar widths must strictly decrease".into()));
    }
    let finest = widths[widths.len() - 1];
    if finest < 2.0 * dom.h() * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "finest collar width {finest} is below 2h = {}",
            2.0 * dom.h()
        )));
    }
    for p in probes {
        p.check_dim(f.dim())?;
    }
    let collars = widths
        .iter()
        .map(|&w| dom.collar(w))
        .collect::<Result<Vec<_>>>()?;
    let values = f.eval_nodes(dom, dom.interior())?;

    let mut scratch = vec![f64::NAN; dom.node_count()];
    let traces = probes
        .iter()
        .map(|probe| {
            for (&k, v) in dom.interior().iter().zip(&values) {
                scratch[k] = probe.eval(v);
            }
            let (interior_argmax, interior_sup) = argmax_over(dom.interior(), &scratch);
            let collar_sups: Vec<f64> = collars
                .iter()
                .map(|c| argmax_over(&c.nodes, &scratch).1)
                .collect();
            let (collar_argmax, finest_sup) = argmax_over(&collars[collars.len() - 1].nodes, &scratch);
            CollarTrace {
                probe: probe.clone(),
                interior_sup,
                interior_argmax,
                widths: widths.to_vec(),
                collar_sups,
                collar_argmax,
                satisfied: finest_sup >= interior_sup - tol,
            }
        })
        .collect::<Vec<_>>();

    Ok(HullLikeReport {
        satisfied: traces.iter().all(|t| t.satisfied),
        traces,
        tolerance: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridBox, Mask};

    fn square(n: usize) -> GridDomain {
        GridDomain::build(GridBox::unit_square(), n, n, Mask::All).unwrap()
    }

    fn disk(n: usize) -> GridDomain {
        GridDomain::build(GridBox::symmetric(1.0), n, n, Mask::disk(1.0)).unwrap()
    }

    /// The half-circle arc on a thin strip, with the transverse direction damped to zero
    /// on the long edges so that the boundary image is the chord between `f(0)` and `f(pi)`.
    fn remark1_strip() -> (FieldExpr, GridDomain) {
        let w = 0.05;
        let dom = GridDomain::build(
            GridBox::new(0.0, std::f64::consts::PI, -w, w),
            201,
            5,
            Mask::All,
        )
        .unwrap();
        let f = FieldExpr::parse(&format!("(cos(x), sin(x) * (1 - (y / {w})^2))")).unwrap();
        (f, dom)
    }

    #[test]
    fn gradient_of_paraboloid_holds_on_square() {
        let dom = square(41);
        let f = FieldExpr::parse("(x, y)").unwrap();
        let r = check_hull_property(&f, &dom, 2.0 * dom.h(), &default_probes(2)).unwrap();
        assert!(r.holds);
        assert!(r.worst_violation <= 2.0 * dom.h());
        assert!(r.max_probe_gap() <= 1e-12);
    }

    #[test]
    fn remark1_strip_fails_near_half_pi() {
        let (f, dom) = remark1_strip();
        let r = check_hull_property(&f, &dom, 4.0 * dom.h(), &default_probes(2)).unwrap();
        assert!(!r.holds);
        assert!((r.worst_point[0] - std::f64::consts::FRAC_PI_2).abs() < 0.05);
        assert!((r.worst_violation - 1.0).abs() < 1e-3, "{}", r.worst_violation);

        let (si, sb) = probe_sup_gap(&f, &dom, &QuasiConvexProbe::linear(vec![0.0, 1.0])).unwrap();
        assert!((si - 1.0).abs() < 1e-3);
        assert!(sb.abs() < 1e-12);
    }

    #[test]
    fn constant_field_holds_trivially() {
        let dom = square(11);
        let f = FieldExpr::parse("(2, -1)").unwrap();
        let r = check_hull_property(&f, &dom, default_tolerance(&f, &dom), &default_probes(2)).unwrap();
        assert!(r.holds);
        assert_eq!(r.worst_violation, 0.0);

        let probe = QuasiConvexProbe::MaxOfLinears {
            terms: vec![
                LinearTerm { direction: vec![1.0, 0.0], offset: 0.0 },
                LinearTerm { direction: vec![0.0, -1.0], offset: 0.5 },
            ],
        };
        let (si, sb) = probe_sup_gap(&f, &dom, &probe).unwrap();
        assert_eq!(si - sb, 0.0);
    }

    #[test]
    fn norm_probe_on_disk() {
        let dom = disk(41);
        let f = FieldExpr::parse("(x, y)").unwrap();
        let (si, sb) = probe_sup_gap(&f, &dom, &QuasiConvexProbe::norm(vec![0.0, 0.0])).unwrap();
        assert!((sb - 1.0).abs() < 1e-12);
        assert!(si < 1.0 && si > 1.0 - 2.0 * dom.h());
    }

    #[test]
    fn hull_like_examples() {
        let dom = disk(81);
        let widths = default_collar_widths(&dom);
        let probes = default_probes(2);

        let id = FieldExpr::parse("(x, y)").unwrap();
        let r = check_hull_like_property(&id, &dom, &probes, &widths, 4.0 * dom.h()).unwrap();
        assert!(r.satisfied);
        let full = check_hull_property(&id, &dom, 4.0 * dom.h(), &probes).unwrap();
        assert_eq!(r.satisfied, full.holds);

        let bump = FieldExpr::parse("(1 - x^2 - y^2, 0)").unwrap();
        let r = check_hull_like_property(
            &bump,
            &dom,
            &[QuasiConvexProbe::linear(vec![1.0, 0.0])],
            &widths,
            4.0 * dom.h(),
        )
        .unwrap();
        assert!(!r.satisfied);
        let t = &r.traces[0];
        assert!((t.interior_sup - 1.0).abs() < 1e-12);
        assert!(t.collar_sups.windows(2).all(|w| w[1] <= w[0]));
        assert!(*t.collar_sups.last().unwrap() < 4.0 * dom.h() + 1e-3);

        let blowup = FieldExpr::parse("(1 / (1 - x^2 - y^2), 0)").unwrap();
        let r = check_hull_like_property(
            &blowup,
            &dom,
            &[QuasiConvexProbe::linear(vec![1.0, 0.0])],
            &widths,
            4.0 * dom.h(),
        )
        .unwrap();
        assert!(r.satisfied);
    }

    #[test]
    fn thin_collars_are_rejected() {
        let dom = disk(41);
        let f = FieldExpr::parse("(x, y)").unwrap();
        let err = check_hull_like_property(&f, &dom, &default_probes(2), &[dom.h()], 0.1);
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn probe_dimension_is_checked() {
        let dom = square(11);
        let f = FieldExpr::parse("x").unwrap();
        let err = check_hull_property(&f, &dom, 0.1, &default_probes(2));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
        assert!(check_hull_property(&f, &dom, 0.1, &default_probes(1)).unwrap().holds);
    }
}
