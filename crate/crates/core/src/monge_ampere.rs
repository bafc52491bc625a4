//! Dirichlet problem for `u_xx u_yy - u_xy^2 = h` with `h >= 0`, and the gradient
//! hull check on its solutions.
//!
//! The solver is pointwise Gauss-Seidel on the 5-point Hessian. Holding the cross
//! difference fixed, the equation at a node is the scalar quadratic
//! `(a1 - u)(a2 - u) = R` with `a1, a2` the horizontal and vertical neighbour means and
//! `R = dx^2 dy^2 (h + D_xy^2) / 4`. Of its two roots only the smaller keeps both
//! second differences nonnegative, so that is the one taken.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{gradient_fd, FieldExpr, GridDomain};
use crate::hull_property::{default_probes, hull_property_from_samples, HullPropertyReport};

#[derive(Debug, Clone)]
pub struct MAProblem {
    pub dom: GridDomain,
    pub h: FieldExpr,
    pub boundary: FieldExpr,
    h_nodes: Vec<f64>,
    boundary_nodes: Vec<f64>,
}

impl MAProblem {
    /// Samples `h` and the boundary data on the grid and checks the solver's requirements.
    ///
    /// Every axis and diagonal neighbour of an interior node must be a closed grid node,
    /// which in practice means a rectangular domain.
    pub fn new(dom: GridDomain, h: FieldExpr, boundary: FieldExpr) -> Result<Self> {
        for e in [&h, &boundary] {
            if e.dim() != 1 {
                return Err(Error::DimensionMismatch { expected: 1, got: e.dim() });
            }
        }
        let (nx, _) = dom.resolution();
        let mut h_nodes = vec![f64::NAN; dom.node_count()];
        for &k in dom.interior() {
            let (i, j) = dom.node_ij(k);
            let stencil_ok = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)]
                .iter()
                .all(|&(di, dj): &(isize, isize)| {
                    let m = (j as isize + dj) * nx as isize + i as isize + di;
                    dom.is_closed_node(m as usize)
                });
            if !stencil_ok {
                let p = dom.coords(k);
                return Err(Error::Stencil { x: p[0], y: p[1] });
            }
            let p = dom.coords(k);
            let v = h.eval_node(p, Some(k))?[0];
            if v < -1e-12 {
                return Err(Error::Hypothesis { node: k, x: p[0], y: p[1], value: v });
            }
            h_nodes[k] = v.max(0.0);
        }
        let mut boundary_nodes = vec![f64::NAN; dom.node_count()];
        for k in 0..dom.node_count() {
            if dom.is_closed_node(k) && !dom.interior().binary_search(&k).is_ok() {
                boundary_nodes[k] = boundary.eval_node(dom.coords(k), Some(k))?[0];
            }
        }
        Ok(Self { dom, h, boundary, h_nodes, boundary_nodes })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MAOptions {
    pub max_iters: usize,
    pub tol_res: f64,
    /// Parallel Jacobi sweeps instead of symmetric Gauss-Seidel (same fixed point, slower).
    pub jacobi: bool,
}

impl Default for MAOptions {
    fn default() -> Self {
        Self { max_iters: 400_000, tol_res: 1e-6, jacobi: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub max_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MASolution {
    #[serde(skip)]
    pub u: Vec<f64>,
    pub iterations: usize,
    pub max_change: f64,
    pub residual: f64,
    /// Smallest eigenvalue of the discrete Hessian over interior nodes.
    pub min_hessian_eigenvalue: f64,
    pub converged: bool,
    /// Nodes where a negative discriminant forced the degenerate root (last sweep).
    pub clamped_nodes: usize,
    pub tol_res: f64,
    pub trace: Vec<TracePoint>,
}

impl MASolution {
    pub fn clamped(&self) -> bool {
        self.clamped_nodes > 0
    }

    /// Max node error against a reference sample.
    pub fn max_error(&self, exact: &[f64]) -> f64 {
        self.u
            .iter()
            .zip(exact)
            .filter(|(a, _)| a.is_finite())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Laplace solve with the Dirichlet data by SOR, stopped at max change `1e-8`.
fn laplace_init(prob: &MAProblem) -> Vec<f64> {
    let dom = &prob.dom;
    let (nx, ny) = dom.resolution();
    let (dx, dy) = dom.spacing();
    let mut u = prob.boundary_nodes.clone();
    for &k in dom.interior() {
        u[k] = 0.0;
    }
    let wx = 1.0 / (dx * dx);
    let wy = 1.0 / (dy * dy);
    let diag = 2.0 * (wx + wy);
    let n = nx.max(ny) as f64;
    let omega = 2.0 / (1.0 + (std::f64::consts::PI / n).sin());
    for _ in 0..200_000 {
        let mut change: f64 = 0.0;
        for &k in dom.interior() {
            let gs = (wx * (u[k - 1] + u[k + 1]) + wy * (u[k - nx] + u[k + nx])) / diag;
            let d = omega * (gs - u[k]);
            u[k] += d;
            change = change.max(d.abs());
        }
        if change <= 1e-8 {
            break;
        }
    }
    u
}

#[inline]
fn local_update(u: &[f64], k: usize, nx: usize, h: f64, dx2: f64, dy2: f64, dxdy: f64) -> (f64, bool) {
    let a1 = 0.5 * (u[k - 1] + u[k + 1]);
    let a2 = 0.5 * (u[k - nx] + u[k + nx]);
    let dxy = (u[k + nx + 1] - u[k + nx - 1] - u[k - nx + 1] + u[k - nx - 1]) / (4.0 * dxdy);
    let r = dx2 * dy2 * (h + dxy * dxy) / 4.0;
    let half_gap = 0.5 * (a1 - a2);
    let disc = half_gap * half_gap + r;
    if disc < 0.0 {
        (0.5 * (a1 + a2), true)
    } else {
        (0.5 * (a1 + a2) - disc.sqrt(), false)
    }
}

/// Solves the Dirichlet problem from a Laplace initial guess.
///
/// Stops when the max change over a sweep pair is at most `tol_res * h^2`; a solution
/// that hits `max_iters` first comes back with `converged = false`.
pub fn solve_ma(prob: &MAProblem, opts: MAOptions) -> Result<MASolution> {
    if !(opts.tol_res > 0.0) {
        return Err(Error::InvalidArgument(format!("tol_res must be positive, got {}", opts.tol_res)));
    }
    let dom = &prob.dom;
    let (nx, _) = dom.resolution();
    let (dx, dy) = dom.spacing();
    let (dx2, dy2, dxdy) = (dx * dx, dy * dy, dx * dy);
    let stop = opts.tol_res * dom.h() * dom.h();
    let nodes = dom.interior();
    let hv = &prob.h_nodes;

    let mut u = laplace_init(prob);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut max_change = f64::INFINITY;
    let mut clamped_nodes = 0;
    let mut scratch = u.clone();
    while iterations < opts.max_iters {
        iterations += 1;
        clamped_nodes = 0;
        max_change = 0.0;
        if opts.jacobi {
            let updates: Vec<(f64, bool)> = nodes
                .par_iter()
                .map(|&k| local_update(&u, k, nx, hv[k], dx2, dy2, dxdy))
                .collect();
            scratch.copy_from_slice(&u);
            for (&k, &(v, c)) in nodes.iter().zip(&updates) {
                max_change = max_change.max((v - u[k]).abs());
                scratch[k] = v;
                clamped_nodes += usize::from(c);
            }
            std::mem::swap(&mut u, &mut scratch);
        } else {
            for pass in 0..2 {
                let mut visit = |k: usize| {
                    let (v, c) = local_update(&u, k, nx, hv[k], dx2, dy2, dxdy);
                    max_change = max_change.max((v - u[k]).abs());
                    u[k] = v;
                    if pass == 1 {
                        clamped_nodes += usize::from(c);
                    }
                };
                if pass == 0 {
                    nodes.iter().for_each(|&k| visit(k));
                } else {
                    nodes.iter().rev().for_each(|&k| visit(k));
                }
            }
        }
        if iterations == 1 || iterations % 100 == 0 {
            trace.push(TracePoint { iteration: iterations, max_change });
        }
        if max_change <= stop {
            break;
        }
    }
    if trace.last().map(|t| t.iteration) != Some(iterations) {
        trace.push(TracePoint { iteration: iterations, max_change });
    }
    let residual = residual_ma(&u, prob);
    let min_hessian_eigenvalue = min_hessian_eigenvalue(&u, prob);
    Ok(MASolution {
        u,
        iterations,
        max_change,
        residual,
        min_hessian_eigenvalue,
        converged: max_change <= stop,
        clamped_nodes,
        tol_res: opts.tol_res,
        trace,
    })
}

fn hessian(u: &[f64], k: usize, nx: usize, dx: f64, dy: f64) -> (f64, f64, f64) {
    let dxx = (u[k + 1] - 2.0 * u[k] + u[k - 1]) / (dx * dx);
    let dyy = (u[k + nx] - 2.0 * u[k] + u[k - nx]) / (dy * dy);
    let dxy = (u[k + nx + 1] - u[k + nx - 1] - u[k - nx + 1] + u[k - nx - 1]) / (4.0 * dx * dy);
    (dxx, dyy, dxy)
}

/// `max |D_xx u D_yy u - (D_xy u)^2 - h|` over interior nodes, central differences.
pub fn residual_ma(u: &[f64], prob: &MAProblem) -> f64 {
    let dom = &prob.dom;
    let (nx, _) = dom.resolution();
    let (dx, dy) = dom.spacing();
    dom.interior()
        .iter()
        .map(|&k| {
            let (a, b, c) = hessian(u, k, nx, dx, dy);
            (a * b - c * c - prob.h_nodes[k]).abs()
        })
        .fold(0.0, f64::max)
}

fn min_hessian_eigenvalue(u: &[f64], prob: &MAProblem) -> f64 {
    let dom = &prob.dom;
    let (nx, _) = dom.resolution();
    let (dx, dy) = dom.spacing();
    dom.interior()
        .iter()
        .map(|&k| {
            let (a, b, c) = hessian(u, k, nx, dx, dy);
            0.5 * ((a + b) - ((a - b).powi(2) + 4.0 * c * c).sqrt())
        })
        .fold(f64::INFINITY, f64::min)
}

/// Hull check of the discrete gradient of `u`: central at interior nodes, one-sided
/// second order at boundary nodes.
pub fn gradient_hull_report(dom: &GridDomain, u: &[f64], tol: f64) -> Result<HullPropertyReport> {
    let interior: Vec<(usize, [f64; 2])> = dom.interior().iter().map(|&k| (k, dom.coords(k))).collect();
    let grads = |nodes: &[usize]| -> Result<Vec<Vec<f64>>> {
        nodes.iter().map(|&k| gradient_fd(dom, u, k).map(|g| g.to_vec())).collect()
    };
    let inner = grads(dom.interior())?;
    let outer = grads(dom.boundary_nodes())?;
    hull_property_from_samples(&interior, &inner, &outer, tol, &default_probes(2))
}

/// Largest boundary gradient norm, the scale for the verdict tolerance.
pub fn max_boundary_gradient(dom: &GridDomain, u: &[f64]) -> Result<f64> {
    dom.boundary_nodes()
        .iter()
        .map(|&k| gradient_fd(dom, u, k).map(|g| g[0].hypot(g[1])))
        .try_fold(0.0, |m, g| g.map(|g| f64::max(m, g)))
}

/// Checks that `grad u(interior)` lies in the hull of `grad u(boundary)` for a converged solution.
pub fn verify_theorem5(sol: &MASolution, prob: &MAProblem, tol: f64) -> Result<HullPropertyReport> {
    if !(sol.residual <= 10.0 * sol.tol_res) {
        return Err(Error::PreconditionRejected(format!(
            "solution residual {} exceeds 10 * tol_res = {}",
            sol.residual,
            10.0 * sol.tol_res
        )));
    }
    gradient_hull_report(&prob.dom, &sol.u, tol)
}

/// Writes `x, y, u, u_x, u_y` for every closed node.
pub fn write_solution_csv<W: Write>(sol: &MASolution, dom: &GridDomain, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv write failed: {e}"));
    out.write_record(["x", "y", "u", "u_x", "u_y"]).map_err(io)?;
    for k in 0..dom.node_count() {
        if !dom.is_closed_node(k) {
            continue;
        }
        let p = dom.coords(k);
        let g = gradient_fd(dom, &sol.u, k)?;
        out.write_record([p[0], p[1], sol.u[k], g[0], g[1]].map(|v| v.to_string()))
            .map_err(io)?;
    }
    out.flush().map_err(|e| Error::InvalidArgument(format!("csv flush failed: {e}")))?;
    Ok(())
}

/// The manufactured problems used for validation, on `[-1, 1]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MACorpus {
    /// `u = 1 + 2x - y`, `h = 0`.
    Affine,
    /// `u = (x^2 + y^2) / 2`, `h = 1`.
    Quadratic,
    /// `u = exp((x^2 + y^2) / 2)`, `h = (1 + x^2 + y^2) exp(x^2 + y^2)`.
    Exponential,
}

impl MACorpus {
    pub const ALL: [MACorpus; 3] = [MACorpus::Affine, MACorpus::Quadratic, MACorpus::Exponential];

    /// `(exact solution, h)` as expression strings.
    pub fn expressions(self) -> (&'static str, &'static str) {
        match self {
            MACorpus::Affine => ("1 + 2*x - y", "0"),
            MACorpus::Quadratic => ("(x^2 + y^2) / 2", "1"),
            MACorpus::Exponential => ("exp((x^2 + y^2) / 2)", "(1 + x^2 + y^2) * exp(x^2 + y^2)"),
        }
    }

    pub fn problem(self, dom: GridDomain) -> Result<MAProblem> {
        let (u, h) = self.expressions();
        MAProblem::new(dom, FieldExpr::parse(h)?, FieldExpr::parse(u)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{parse_expr, GridBox, Mask};

    fn square(n: usize) -> GridDomain {
        GridDomain::build(GridBox::symmetric(1.0), n, n, Mask::All).unwrap()
    }

    #[test]
    fn affine_is_reproduced() {
        let prob = MACorpus::Affine.problem(square(21)).unwrap();
        let sol = solve_ma(&prob, MAOptions { tol_res: 1e-12, ..MAOptions::default() }).unwrap();
        let exact = prob.dom.sample(&parse_expr("1 + 2*x - y").unwrap());
        assert!(sol.converged);
        assert!(sol.max_error(&exact) < 1e-10, "{}", sol.max_error(&exact));
    }

    #[test]
    fn quadratic_is_exact_on_the_grid() {
        let prob = MACorpus::Quadratic.problem(square(31)).unwrap();
        let exact = prob.dom.sample(&parse_expr("(x^2 + y^2) / 2").unwrap());
        assert!(residual_ma(&exact, &prob) <= 1e-10);
        let sol = solve_ma(&prob, MAOptions { tol_res: 1e-9, ..MAOptions::default() }).unwrap();
        assert!(sol.converged);
        assert!(sol.max_error(&exact) < 1e-6, "{}", sol.max_error(&exact));
        assert!(sol.min_hessian_eigenvalue > -1e-6);
        assert!(!sol.clamped());
    }

    #[test]
    fn quartic_residual_is_zero() {
        let dom = square(21);
        let prob = MAProblem::new(dom, FieldExpr::parse("0").unwrap(), FieldExpr::parse("x^4").unwrap()).unwrap();
        let u = prob.dom.sample(&parse_expr("x^4").unwrap());
        assert!(residual_ma(&u, &prob) <= 1e-10);
    }

    #[test]
    fn jacobi_reaches_the_same_fixed_point() {
        let prob = MACorpus::Exponential.problem(square(13)).unwrap();
        let gs = solve_ma(&prob, MAOptions { tol_res: 1e-9, ..MAOptions::default() }).unwrap();
        let jac = solve_ma(&prob, MAOptions { tol_res: 1e-9, jacobi: true, ..MAOptions::default() }).unwrap();
        assert!(gs.converged && jac.converged);
        assert!(gs.max_error(&jac.u) < 1e-8);
    }

    #[test]
    fn negative_h_is_rejected_and_saddle_check_runs() {
        let prob = MAProblem::new(square(11), FieldExpr::parse("-4").unwrap(), FieldExpr::parse("x^2 - y^2").unwrap());
        assert!(matches!(prob, Err(Error::Hypothesis { .. })));

        let dom = square(41);
        let u = dom.sample(&parse_expr("x^2 - y^2").unwrap());
        let r = gradient_hull_report(&dom, &u, 4.0 * dom.h()).unwrap();
        // the saddle's gradient is linear, so containment still holds
        assert!(r.holds);
    }

    #[test]
    fn gradient_hull_on_paraboloid_and_affine() {
        let prob = MACorpus::Quadratic.problem(GridDomain::build(GridBox::unit_square(), 21, 21, Mask::All).unwrap()).unwrap();
        let sol = solve_ma(&prob, MAOptions { tol_res: 1e-9, ..MAOptions::default() }).unwrap();
        let r = verify_theorem5(&sol, &prob, 2.0 * prob.dom.h()).unwrap();
        assert!(r.holds, "{} {:?}", r.worst_violation, r.worst_point);

        let prob = MACorpus::Affine.problem(square(11)).unwrap();
        let sol = solve_ma(&prob, MAOptions { tol_res: 1e-12, ..MAOptions::default() }).unwrap();
        let r = verify_theorem5(&sol, &prob, 1e-8).unwrap();
        assert!(r.holds);

        let mut csv = Vec::new();
        write_solution_csv(&sol, &prob.dom, &mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 122);
    }

    #[test]
    fn unconverged_solution_is_flagged_and_refused() {
        let prob = MACorpus::Exponential.problem(square(21)).unwrap();
        let sol = solve_ma(&prob, MAOptions { max_iters: 2, tol_res: 1e-9, jacobi: false }).unwrap();
        assert!(!sol.converged);
        assert!(matches!(verify_theorem5(&sol, &prob, 0.1), Err(Error::PreconditionRejected(_))));
    }
}
