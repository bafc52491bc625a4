//! Sweeps `det D(g + lambda f)` over the certified region and writes the table as CSV.
//!
//! cargo run --release --example lambda_sweep [-- sweep.csv]

use hull_lab::dichotomy::{build_certificate, lambda_tilde};
use hull_lab::grid::{FieldExpr, GridBox, GridDomain, Mask};
use hull_lab::hull_property::QuasiConvexProbe;
use hull_lab::singularity::{det_tolerance, singular_sweep, LambdaGrid};

fn main() -> anyhow::Result<()> {
    let dom = GridDomain::build(GridBox::symmetric(1.0), 201, 201, Mask::disk(1.0))?;
    let f = FieldExpr::parse("(1 - x^2 - y^2, 0)")?;
    let g = FieldExpr::parse("(x, y)")?;
    let cert = build_certificate(&f, &dom, &QuasiConvexProbe::linear(vec![1.0, 0.0]), 10.0 * dom.h())?;
    let lt = lambda_tilde(&g, &f, &dom, &cert)?;
    let lambdas = LambdaGrid::Geometric { min: 0.05, max: 50.0, steps: 16 }.values()?;
    let res = singular_sweep(&g, &f, &dom, &cert.region, &lambdas, det_tolerance(2.0, dom.h()))?;
    println!("lambda~ = {lt:.4}, tol_det = {:.2e}", res.tol_det);
    for row in &res.rows {
        println!(
            "lambda = {:8.4}  min |det| = {:.3e} at ({:+.3}, {:+.3})  sign change = {:<5}  certified = {}",
            row.lambda, row.min_abs_det, row.argmin_point[0], row.argmin_point[1], row.sign_change, row.certified
        );
    }
    let out = std::env::args().nth(1).unwrap_or_else(|| "sweep.csv".into());
    res.write_csv(std::fs::File::create(&out)?)?;
    println!("wrote {out}");
    Ok(())
}
