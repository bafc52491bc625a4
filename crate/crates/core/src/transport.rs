//! Exact solutions `u = F(beta)` of `beta_y u_x - beta_x u_y = 0` and the two-sided
//! maximum principle they obey when a companion `alpha` with
//! `alpha_x beta_y - alpha_y beta_x != 0` exists.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Expr, FieldExpr, GridDomain, Var};

/// Required `|alpha_x beta_y - alpha_y beta_x|` at every interior node.
pub const HYPOTHESIS_MARGIN: f64 = 1e-8;
/// Allowed `|beta_y u_x - beta_x u_y|` at every interior node.
pub const RESIDUAL_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct TransportInstance {
    pub beta: Expr,
    pub alpha: Expr,
    /// Profile in the variable `t`.
    pub profile: Expr,
    /// `F(beta(x, y))`.
    pub u: FieldExpr,
    pub dom: GridDomain,
    pub min_hypothesis: f64,
    pub max_residual: f64,
}

fn scalar(e: &Expr, what: &str) -> Result<()> {
    if e.uses(Var::T) {
        return Err(Error::InvalidArgument(format!("{what} must be a function of x and y only")));
    }
    Ok(())
}

/// `u = F(beta)` by substituting `beta` for `t` in the profile.
pub fn compose(profile: &Expr, beta: &Expr) -> Result<FieldExpr> {
    FieldExpr::scalar(profile.substitute(Var::T, beta))
}

/// `max |beta_y u_x - beta_x u_y|` over the given points.
pub fn transport_residual(beta: &Expr, u: &FieldExpr, pts: &[[f64; 2]]) -> f64 {
    let (bx, by) = (beta.diff(Var::X), beta.diff(Var::Y));
    let [ux, uy] = u.partials(0);
    pts.par_iter()
        .map(|p| {
            let v = [p[0], p[1], 0.0];
            (by.eval(&v) * ux.eval(&v) - bx.eval(&v) * uy.eval(&v)).abs()
        })
        .reduce(|| 0.0, f64::max)
}

/// Builds `u = F(beta)` and checks the companion hypothesis and the chain-rule residual.
pub fn make_instance(beta: Expr, alpha: Expr, profile: Expr, dom: GridDomain) -> Result<TransportInstance> {
    scalar(&beta, "beta")?;
    scalar(&alpha, "alpha")?;
    let u = compose(&profile, &beta)?;
    let (bx, by) = (beta.diff(Var::X), beta.diff(Var::Y));
    let (ax, ay) = (alpha.diff(Var::X), alpha.diff(Var::Y));
    let mut min_hypothesis = f64::INFINITY;
    for &k in dom.interior() {
        let p = dom.coords(k);
        let v = [p[0], p[1], 0.0];
        let value = ax.eval(&v) * by.eval(&v) - ay.eval(&v) * bx.eval(&v);
        if !(value.abs() >= HYPOTHESIS_MARGIN) {
            return Err(Error::Hypothesis { node: k, x: p[0], y: p[1], value });
        }
        min_hypothesis = min_hypothesis.min(value.abs());
    }
    let pts = dom.interior_positions();
    u.eval_points(&pts)?;
    let max_residual = transport_residual(&beta, &u, &pts);
    if !(max_residual <= RESIDUAL_LIMIT) {
        let worst = dom
            .interior()
            .iter()
            .copied()
            .max_by(|&a, &b| {
                let r = |k: usize| transport_residual(&beta, &u, &[dom.coords(k)]);
                r(a).total_cmp(&r(b))
            })
            .unwrap_or(0);
        return Err(Error::ConstructionBug { node: worst, residual: max_residual });
    }
    Ok(TransportInstance { beta, alpha, profile, u, dom, min_hypothesis, max_residual })
}

/// Parses `beta`, `alpha` and `F(t)` and builds the instance.
pub fn parse_instance(beta: &str, alpha: &str, profile: &str, dom: GridDomain) -> Result<TransportInstance> {
    use crate::grid::parse_expr;
    make_instance(parse_expr(beta)?, parse_expr(alpha)?, parse_expr(profile)?, dom)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxPrincipleReport {
    pub sup_interior: f64,
    pub sup_boundary: f64,
    pub inf_interior: f64,
    pub inf_boundary: f64,
    /// `sup_interior - sup_boundary`.
    pub sup_gap: f64,
    /// `inf_boundary - inf_interior`.
    pub inf_gap: f64,
    pub sup_interior_node: usize,
    pub inf_interior_node: usize,
    pub tolerance: f64,
    pub passed: bool,
}

fn extremes(vals: &[f64], nodes: &[usize]) -> (f64, usize, f64, usize) {
    let (mut hi, mut hi_k, mut lo, mut lo_k) = (f64::NEG_INFINITY, 0, f64::INFINITY, 0);
    for (&v, &k) in vals.iter().zip(nodes) {
        if v > hi {
            hi = v;
            hi_k = k;
        }
        if v < lo {
            lo = v;
            lo_k = k;
        }
    }
    (hi, hi_k, lo, lo_k)
}

/// Compares the interior and boundary extremes of a scalar field.
pub fn max_principle(u: &FieldExpr, dom: &GridDomain, tol: f64) -> Result<MaxPrincipleReport> {
    if u.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: u.dim() });
    }
    let inner: Vec<f64> = u.eval_nodes(dom, dom.interior())?.into_iter().map(|v| v[0]).collect();
    let outer: Vec<f64> = u
        .eval_points(&dom.boundary_positions())?
        .into_iter()
        .map(|v| v[0])
        .collect();
    let (sup_interior, sup_interior_node, inf_interior, inf_interior_node) = extremes(&inner, dom.interior());
    let idx: Vec<usize> = (0..outer.len()).collect();
    let (sup_boundary, _, inf_boundary, _) = extremes(&outer, &idx);
    let sup_gap = sup_interior - sup_boundary;
    let inf_gap = inf_boundary - inf_interior;
    Ok(MaxPrincipleReport {
        sup_interior,
        sup_boundary,
        inf_interior,
        inf_boundary,
        sup_gap,
        inf_gap,
        sup_interior_node,
        inf_interior_node,
        tolerance: tol,
        passed: sup_gap <= tol && inf_gap <= tol,
    })
}

/// `2h * Lip(u)`, the default tolerance.
pub fn default_tolerance(inst: &TransportInstance) -> f64 {
    let mut pts = inst.dom.interior_positions();
    pts.extend(inst.dom.boundary_positions());
    2.0 * inst.dom.h() * inst.u.lipschitz_estimate(&pts)
}

pub fn check_max_principle(inst: &TransportInstance, tol: f64) -> Result<MaxPrincipleReport> {
    max_principle(&inst.u, &inst.dom, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub report: MaxPrincipleReport,
    /// `max(sup_gap, inf_gap)`; positive when the principle fails.
    pub excess: f64,
    pub fails: bool,
    /// Smallest `|grad beta|` over interior nodes, near zero at a critical point.
    pub min_grad_beta: f64,
}

/// Builds `u = F(beta)` without a companion and reports whether the principle breaks.
pub fn counterexample_probe(beta: &Expr, profile: &Expr, dom: &GridDomain, tol: f64) -> Result<CounterexampleReport> {
    scalar(beta, "beta")?;
    let u = compose(profile, beta)?;
    let report = max_principle(&u, dom, tol)?;
    let b = FieldExpr::scalar(beta.clone())?;
    let min_grad_beta = dom
        .interior()
        .iter()
        .map(|&k| {
            let [gx, gy] = b.jacobian_matrix(dom.coords(k))[0];
            gx.hypot(gy)
        })
        .fold(f64::INFINITY, f64::min);
    let excess = report.sup_gap.max(report.inf_gap);
    Ok(CounterexampleReport { fails: !report.passed, excess, report, min_grad_beta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{parse_expr, GridBox, Mask};

    fn square(n: usize) -> GridDomain {
        GridDomain::build(GridBox::unit_square(), n, n, Mask::All).unwrap()
    }

    fn disk(n: usize) -> GridDomain {
        GridDomain::build(GridBox::symmetric(1.0), n, n, Mask::disk(1.0)).unwrap()
    }

    #[test]
    fn identity_profile_on_x() {
        let inst = parse_instance("x", "-y", "t", square(21)).unwrap();
        assert_eq!(inst.u.to_string(), "x");
        assert_eq!(inst.min_hypothesis, 1.0);
        let r = check_max_principle(&inst, 0.0).unwrap();
        assert!(r.passed);
        assert_eq!((r.sup_interior - r.sup_boundary, r.sup_boundary), (r.sup_gap, 1.0));
        assert!(r.sup_gap < 0.0);
    }

    #[test]
    fn constant_profile_passes() {
        let inst = parse_instance("x + 2*y", "-y", "3", square(11)).unwrap();
        assert!(check_max_principle(&inst, 0.0).unwrap().passed);
    }

    #[test]
    fn linear_beta_extremes_on_corners() {
        let inst = parse_instance("x + 2*y", "x", "t^3 + t", square(21)).unwrap();
        let r = check_max_principle(&inst, default_tolerance(&inst)).unwrap();
        assert!(r.passed);
        assert_eq!(r.sup_boundary, 30.0);
        assert_eq!(r.inf_boundary, 0.0);
    }

    #[test]
    fn concentric_levels_admit_no_companion() {
        // any companion of beta = r^2 integrates to zero around a level circle, so the
        // hypothesis value must vanish somewhere on it
        let dom = GridDomain::build(
            GridBox::symmetric(1.4),
            57,
            57,
            Mask::parse("(x^2 + y^2 - 0.25) * (x^2 + y^2 - 1.96) < 0").unwrap(),
        )
        .unwrap();
        let err = parse_instance("x^2 + y^2", "atan(y / x)", "sin(t)", dom.clone());
        assert!(matches!(err, Err(Error::Hypothesis { .. }) | Err(Error::Eval { .. })), "{err:?}");
        let err = parse_instance("x^2 + y^2", "x*y", "sin(t)", dom);
        assert!(matches!(err, Err(Error::Hypothesis { .. })));
    }

    #[test]
    fn counterexamples() {
        let r = counterexample_probe(&parse_expr("x^2 + y^2").unwrap(), &parse_expr("-t").unwrap(), &disk(81), 0.01)
            .unwrap();
        assert!(r.fails);
        assert!((r.excess - 1.0).abs() < 1e-12);
        assert_eq!(r.min_grad_beta, 0.0);

        let r = counterexample_probe(&parse_expr("x").unwrap(), &parse_expr("t").unwrap(), &disk(41), 0.0).unwrap();
        assert!(!r.fails);

        let dom = GridDomain::build(GridBox::symmetric(1.0), 41, 41, Mask::All).unwrap();
        let r = counterexample_probe(&parse_expr("x*y").unwrap(), &parse_expr("t").unwrap(), &dom, 0.0).unwrap();
        assert!(!r.fails);
    }

    #[test]
    fn negating_profile_swaps_gaps() {
        let dom = disk(41);
        let a = parse_instance("x^2 + y", "x", "exp(t)", dom.clone()).unwrap();
        let b = parse_instance("x^2 + y", "x", "-exp(t)", dom).unwrap();
        let ra = check_max_principle(&a, 0.1).unwrap();
        let rb = check_max_principle(&b, 0.1).unwrap();
        assert_eq!(ra.sup_gap, rb.inf_gap);
        assert_eq!(ra.inf_gap, rb.sup_gap);
    }

    #[test]
    fn residual_is_chain_rule_exact() {
        let inst = parse_instance("exp(x) * cos(y)", "exp(x) * sin(y)", "sin(t)", square(31)).unwrap();
        assert!(inst.max_residual <= 1e-12);
    }
}
