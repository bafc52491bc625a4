//! Full hull-property check for a few maps, with the probe that decides each verdict.
//!
//! cargo run --release --example hull_check [-- "(x^2, y)"]

use hull_lab::grid::{FieldExpr, GridBox, GridDomain, Mask};
use hull_lab::hull_property::{check_hull_property, default_probes, default_tolerance};

fn main() -> anyhow::Result<()> {
    let custom: Vec<String> = std::env::args().skip(1).collect();
    let fields: Vec<String> = if custom.is_empty() {
        ["(x, y)", "(x^2 - y^2, 2*x*y)", "(1 - x^2 - y^2, 0)", "(exp(-x^2 - y^2), y)"]
            .map(String::from)
            .to_vec()
    } else {
        custom
    };
    let dom = GridDomain::build(GridBox::symmetric(1.0), 101, 101, Mask::disk(1.0))?;
    for text in &fields {
        let f = FieldExpr::parse(text)?;
        let tol = default_tolerance(&f, &dom);
        let r = check_hull_property(&f, &dom, tol, &default_probes(f.dim()))?;
        let worst = r
            .probe_gaps
            .iter()
            .max_by(|a, b| a.gap.total_cmp(&b.gap))
            .expect("probe family is non-empty");
        println!("{text:<28} holds = {:<5}  worst distance {:.3e} at {:?}", r.holds, r.worst_violation, r.worst_point);
        println!("{:<28} widest probe gap {:+.3e} for {:?} (tol {tol:.2e})", "", worst.gap, worst.probe);
    }
    Ok(())
}
