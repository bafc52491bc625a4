//! Exact transport solutions `u = F(beta)`: the maximum principle with and without a companion.

use hull_lab::grid::{parse_expr, GridBox, GridDomain, Mask};
use hull_lab::transport::{check_max_principle, counterexample_probe, default_tolerance, parse_instance};

fn main() -> anyhow::Result<()> {
    let square = GridDomain::build(GridBox::new(0.5, 1.5, 0.5, 1.5), 101, 101, Mask::All)?;
    let disk = GridDomain::build(GridBox::symmetric(1.0), 101, 101, Mask::disk(1.0))?;
    for (beta, alpha, profile) in [("x*y", "x^2 - y^2", "t^2"), ("x + 2*y", "x", "t^3 + t")] {
        let inst = parse_instance(beta, alpha, profile, square.clone())?;
        let r = check_max_principle(&inst, default_tolerance(&inst))?;
        println!(
            "u = {}: interior [{:.4}, {:.4}] within boundary [{:.4}, {:.4}] -> {}",
            inst.u, r.inf_interior, r.sup_interior, r.inf_boundary, r.sup_boundary, r.passed
        );
    }
    let ce = counterexample_probe(&parse_expr("x^2 + y^2")?, &parse_expr("-t")?, &disk, 2.0 * disk.h())?;
    println!(
        "no companion, u = -(x^2 + y^2): fails = {}, excess {:.4}, min |grad beta| = {:.1e}",
        ce.fails, ce.excess, ce.min_grad_beta
    );
    Ok(())
}
