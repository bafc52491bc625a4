//! Witness sequences at a supported point: targets with no preimage next to values
//! that are hit twice, on shrinking balls.

use hull_lab::dichotomy::{build_certificate, verify_supported};
use hull_lab::grid::{FieldExpr, GridBox, GridDomain, Mask};
use hull_lab::hull_property::QuasiConvexProbe;
use hull_lab::singularity::bifurcation_scan;

fn main() -> anyhow::Result<()> {
    let dom = GridDomain::build(GridBox::symmetric(1.0), 201, 201, Mask::disk(1.0))?;
    let f = FieldExpr::parse("(1 - x^2 - y^2, 0)")?;
    let g = FieldExpr::parse("(0, 0)")?;
    let cert = build_certificate(&f, &dom, &QuasiConvexProbe::linear(vec![1.0, 0.0]), 10.0 * dom.h())?;
    let v = verify_supported(&g, &f, 1.0, &dom, &cert, 4.0 * dom.h())?;
    let w = bifurcation_scan(&g, &f, &dom, &cert, &v, 0.4, 4)?;
    println!("x_hat = {:?}, F(x_hat) = {:?}", w.support_point, w.image_point);
    for l in &w.levels {
        match &l.z {
            Some(z) => println!(
                "k = {}  r = {:.4}  eps = {:.4}  #F^-1(y) = {}  z = ({:.5}, {:.5}) from {:?} and {:?}",
                l.k, l.radius, l.epsilon, l.y_count, z.z[0], z.z[1], z.u.point, z.v.point
            ),
            None => println!("k = {}  no collision: {}", l.k, l.warning.as_deref().unwrap_or("-")),
        }
    }
    Ok(())
}
