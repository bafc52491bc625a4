//! Jacobian singularities and two-to-one preimages forced by supported images.
//!
//! `det(J_g + lambda J_f)` is a quadratic in `lambda` at every point, which makes sweeps
//! over `lambda` cheap: the three coefficients are computed once per node.

mod det;
mod preimage;
mod remark1;

pub use det::{
    det_direct, det_quadratic, det_sign_svg, det_tolerance, region_coeffs, singular_sweep, LambdaGrid,
    QuadraticDetCoeffs, SingularSweepResult, SweepRow,
};
pub use preimage::{
    bifurcation_scan, combined_map, gauss_newton, preimage_count, BifurcationLevel, BifurcationWitness,
    Collision, Preimage, PreimageCount,
};
pub use remark1::{remark1_case, Remark1Report, REMARK1_SAMPLES};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dichotomy::{build_certificate, verify_supported};
    use crate::error::Error;
    use crate::grid::{FieldExpr, GridBox, GridDomain, Mask};
    use crate::hull_property::QuasiConvexProbe;

    fn field(s: &str) -> FieldExpr {
        FieldExpr::parse(s).unwrap()
    }

    fn disk(n: usize) -> GridDomain {
        GridDomain::build(GridBox::symmetric(1.0), n, n, Mask::disk(1.0)).unwrap()
    }

    #[test]
    fn rotation_pair_coefficients() {
        let f = field("(x, y)");
        let g = field("(-y, x)");
        let q = det_quadratic(&f, &g, [0.3, -0.2]).unwrap();
        assert_eq!(q, QuadraticDetCoeffs { a: 1.0, b: 0.0, c: 1.0 });

        let z = field("(0, 0)");
        let g2 = field("(x^2, x*y)");
        let p = [0.5, 2.0];
        let q = det_quadratic(&z, &g2, p).unwrap();
        assert_eq!((q.a, q.b), (0.0, 0.0));
        assert!((q.c - det_direct(&z, &g2, p, 0.0)).abs() < 1e-15);
    }

    #[test]
    fn quadratic_matches_direct_det() {
        let f = field("(x^3 - y*x, sin(x) + y^2)");
        let g = field("(exp(x*y), x - 2*y^3)");
        for &p in &[[0.1, 0.2], [-0.7, 0.4], [1.1, -0.9]] {
            let q = det_quadratic(&f, &g, p).unwrap();
            for &l in &[0.0, 0.5, 3.0, -2.0] {
                assert!((q.eval(l) - det_direct(&f, &g, p, l)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lambda_grids() {
        let v = LambdaGrid::Geometric { min: 1.0, max: 100.0, steps: 3 }.values().unwrap();
        assert!((v[1] - 10.0).abs() < 1e-12 && v[2] == 100.0);
        let v = LambdaGrid::Linear { min: 0.0, max: 1.0, steps: 5 }.values().unwrap();
        assert_eq!(v, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(LambdaGrid::Geometric { min: 0.0, max: 1.0, steps: 3 }.values().is_err());
        assert!(LambdaGrid::Explicit { values: vec![1.0, 1.0] }.values().is_err());
    }

    #[test]
    fn disk_sweep_finds_the_line_x_equals_half_over_lambda() {
        let dom = disk(101);
        let f = field("(1 - x^2 - y^2, 0)");
        let g = field("(x, y)");
        let region: Vec<usize> = dom
            .interior()
            .iter()
            .copied()
            .filter(|&k| {
                let p = dom.coords(k);
                p[0].hypot(p[1]) < 0.5
            })
            .collect();
        let lambdas = LambdaGrid::Geometric { min: 0.2, max: 50.0, steps: 25 }.values().unwrap();
        let res = singular_sweep(&g, &f, &dom, &region, &lambdas, 1e-9).unwrap();
        for r in &res.rows {
            // det = 1 - 2 lambda x vanishes on x = 1/(2 lambda), inside the region iff lambda > 1
            assert_eq!(r.sign_change, r.lambda > 1.0 + 2.0 * dom.h(), "lambda {}", r.lambda);
        }
        assert!(res.first_certified.unwrap() > 1.0);
        let mut buf = Vec::new();
        res.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("lambda,min_abs_det,argmin_x,argmin_y,certified\n"));
        assert_eq!(text.lines().count(), 26);
        let svg = det_sign_svg(&g, &f, &dom, &region, 5.0, 1e-9).unwrap();
        assert!(svg.contains("#d73027") && svg.contains("#4575b4"));
    }

    #[test]
    fn positive_jacobian_never_vanishes() {
        let dom = disk(41);
        let f = field("(exp(x) * cos(y), exp(x) * sin(y))");
        let g = field("(0, 0)");
        let lambdas = LambdaGrid::Geometric { min: 0.1, max: 100.0, steps: 30 }.values().unwrap();
        let res = singular_sweep(&g, &f, &dom, dom.interior(), &lambdas, 1e-9).unwrap();
        assert!(res.none_certified());
    }

    #[test]
    fn preimage_examples() {
        let dom = disk(81);
        let id = field("(x, y)");
        let c = preimage_count(&id, [0.3, -0.2], &dom, dom.interior(), 2.0 * dom.h(), 0.5 * dom.h()).unwrap();
        assert_eq!(c.count, 1);
        assert!(!c.non_isolated);
        assert!((c.solutions[0].point[0] - 0.3).abs() < 1e-12);

        let m = field("(2 * (1 - x^2 - y^2), 0)");
        let c = preimage_count(&m, [1.0, 0.0], &dom, dom.interior(), 4.0 * dom.h(), 0.1).unwrap();
        assert!(c.count > 2, "{}", c.count);
        assert!(c.non_isolated);
        for s in &c.solutions {
            assert!((s.point[0].hypot(s.point[1]) - 0.5f64.sqrt()).abs() < 1e-6);
        }

        let c = preimage_count(&m, [0.0, 1.0], &dom, dom.interior(), 4.0 * dom.h(), 0.1).unwrap();
        assert_eq!(c.count, 0);
    }

    #[test]
    fn diverging_clusters_are_uncertain() {
        let dom = disk(41);
        // |x| has no usable Newton step at the kink; the target sits just off the image
        let m = field("(abs(x) + 0.5, y)");
        let r = preimage_count(&m, [0.49, 0.0], &dom, dom.interior(), 0.1, 0.05);
        assert!(matches!(r, Err(Error::CountUncertain { .. })), "{r:?}");
    }

    #[test]
    fn bifurcation_on_disk_example() {
        let dom = disk(101);
        let f = field("(1 - x^2 - y^2, 0)");
        let g = field("(0, 0)");
        let probe = QuasiConvexProbe::linear(vec![1.0, 0.0]);
        let cert = build_certificate(&f, &dom, &probe, 10.0 * dom.h()).unwrap();
        let v = verify_supported(&g, &f, 1.0, &dom, &cert, 4.0 * dom.h()).unwrap();
        let w = bifurcation_scan(&g, &f, &dom, &cert, &v, 0.4, 3).unwrap();
        for lvl in &w.levels {
            assert_eq!(lvl.y_count, 0);
            assert!(lvl.y[0] > 1.0);
            let z = lvl.z.as_ref().expect("collision");
            assert!(z.u.residual <= 1e-8 && z.v.residual <= 1e-8);
            assert!(lvl.succeeded());
        }
    }

    #[test]
    fn remark1_values() {
        let r = remark1_case(1.0);
        assert!(r.injective && !r.equal_dimensions);
        assert!((r.violation - 1.0).abs() < 1e-12);
        assert!((remark1_case(2.0).violation - 2.0).abs() < 1e-12);
        let z = remark1_case(0.0);
        assert_eq!(z.violation, 0.0);
        assert!(!z.injective);
    }
}
