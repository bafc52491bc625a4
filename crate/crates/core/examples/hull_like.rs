//! Boundary-free variant: compares interior sups with sups over shrinking collars.

use hull_lab::grid::{FieldExpr, GridBox, GridDomain, Mask};
use hull_lab::hull_property::{check_hull_like_property, default_collar_widths, QuasiConvexProbe};

fn main() -> anyhow::Result<()> {
    let dom = GridDomain::build(GridBox::unit_square(), 101, 101, Mask::All)?;
    let widths = default_collar_widths(&dom);
    let probes = vec![
        QuasiConvexProbe::linear(vec![1.0, 0.0]),
        QuasiConvexProbe::linear(vec![0.0, 1.0]),
        QuasiConvexProbe::norm(vec![0.0, 0.0]),
    ];
    for text in ["(x^2, y)", "(sin(pi*x) * sin(pi*y), x)"] {
        let f = FieldExpr::parse(text)?;
        let r = check_hull_like_property(&f, &dom, &probes, &widths, 4.0 * dom.h())?;
        println!("{text}: satisfied = {}", r.satisfied);
        for t in &r.traces {
            let sups: Vec<String> = t.collar_sups.iter().map(|s| format!("{s:.4}")).collect();
            println!("  {:?}: interior sup {:.4}, collar sups [{}]", t.probe, t.interior_sup, sups.join(", "));
        }
    }
    Ok(())
}
