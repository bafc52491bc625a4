//! Builds a dichotomy certificate for a bump map on the disk, checks that the supported
//! point of `g + lambda f` falls in `X`, and writes an SVG of the construction.
//!
//! cargo run --release --example certificate [-- out.svg]

use hull_lab::dichotomy::{build_certificate, certificate_svg, lambda_tilde, verify_supported};
use hull_lab::grid::{FieldExpr, GridBox, GridDomain, Mask};
use hull_lab::hull_property::QuasiConvexProbe;

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "certificate.svg".into());
    let dom = GridDomain::build(GridBox::symmetric(1.0), 201, 201, Mask::disk(1.0))?;
    let f = FieldExpr::parse("(1 - x^2 - y^2, 0)")?;
    let g = FieldExpr::parse("(0.3 * y, x)")?;
    let cert = build_certificate(&f, &dom, &QuasiConvexProbe::linear(vec![1.0, 0.0]), 10.0 * dom.h())?;
    println!(
        "collar sup {:.4}, interior sup {:.4}, level r = {:.4}, rho = {:.4}, |X| = {} nodes",
        cert.collar_sup,
        cert.interior_sup,
        cert.level,
        cert.rho,
        cert.region.len()
    );
    let lt = lambda_tilde(&g, &f, &dom, &cert)?;
    println!("lambda~ = {lt:.4}");
    let mut last = None;
    for lambda in [lt + 0.5, lt + 2.0, lt + 10.0] {
        let v = verify_supported(&g, &f, lambda, &dom, &cert, 4.0 * dom.h())?;
        println!(
            "lambda = {lambda:7.3}: x_hat = ({:+.3}, {:+.3}), in X = {}, boundary distance {:.2e}",
            v.support_point[0],
            v.support_point[1],
            cert.in_region(v.support_node),
            v.boundary_distance
        );
        last = Some(v);
    }
    std::fs::write(&out, certificate_svg(&dom, &cert, last.as_ref()))?;
    println!("wrote {out}");
    Ok(())
}
