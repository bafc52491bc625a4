//! Manufactured-solution convergence study for the Monge-Ampere solver, followed by
//! the gradient hull check on each converged solution.
//!
//! cargo run --release --example monge_ampere [-- 51 101 201]

use std::time::Instant;

use hull_lab::grid::{parse_expr, GridBox, GridDomain, Mask};
use hull_lab::monge_ampere::{max_boundary_gradient, solve_ma, verify_theorem5, MACorpus, MAOptions};

fn main() -> anyhow::Result<()> {
    let sizes: Vec<usize> = std::env::args()
        .skip(1)
        .map(|a| a.parse())
        .collect::<Result<_, _>>()?;
    let sizes = if sizes.is_empty() { vec![51, 101] } else { sizes };

    for case in MACorpus::ALL {
        let (exact, _) = case.expressions();
        println!("{case:?}: u = {exact}");
        let mut prev: Option<f64> = None;
        for &n in &sizes {
            let dom = GridDomain::build(GridBox::symmetric(1.0), n, n, Mask::All)?;
            let prob = case.problem(dom)?;
            let t = Instant::now();
            let sol = solve_ma(&prob, MAOptions::default())?;
            let secs = t.elapsed().as_secs_f64();
            let err = sol.max_error(&prob.dom.sample(&parse_expr(exact)?));
            let tol = 4.0 * prob.dom.h() * max_boundary_gradient(&prob.dom, &sol.u)?;
            let hull = verify_theorem5(&sol, &prob, tol)?;
            let order = prev.map(|e| format!("{:.2}", (e / err).log2())).unwrap_or_else(|| "-".into());
            println!(
                "  n = {n:4}  iters = {:6}  residual = {:.2e}  error = {:.3e}  order = {order:>5}  hull: {} ({:.2e} <= {:.2e})  {secs:.1}s",
                sol.iterations, sol.residual, err, hull.holds, hull.worst_violation, tol
            );
            prev = Some(err);
        }
    }
    Ok(())
}
