//! Separation certificates for maps that fail the hull-like property.
//!
//! Given a probe `psi` whose interior supremum beats its collar supremum, the
//! certificate fixes a level `r` between the two, the core `K = {psi(f) >= r}`, a linear
//! functional `phi` separating `f(x_bar)` from the sublevel set `{psi <= r}`, a level
//! `rho`, and the region `X = {phi(f) < rho}` inside `K`. For `lambda` above the
//! threshold `lambda~`, every minimiser of `phi(g + lambda f)` over `K` lies in `X`,
//! so `(g + lambda f)(X)` is supported there.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{convex_hull_2d, separate, HullRegion, PointSet, SeparationWitness};
use crate::grid::{FieldExpr, GridDomain};
use crate::hull_property::QuasiConvexProbe;
use crate::svg::SvgCanvas;

/// Target size of the analytic sublevel sample added to the separation cloud.
pub const SUBLEVEL_SAMPLES: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyCertificate {
    pub probe: QuasiConvexProbe,
    pub collar_width: f64,
    pub collar_sup: f64,
    pub interior_sup: f64,
    /// Gap that `interior_sup - collar_sup` had to exceed.
    pub required_margin: f64,
    /// `r`.
    pub level: f64,
    /// `K`, sorted node indices.
    pub core: Vec<usize>,
    /// `x_bar`, the argmax of `psi(f)`.
    pub witness: usize,
    /// `phi`.
    pub functional: SeparationWitness,
    pub rho: f64,
    /// `X`, sorted node indices.
    pub region: Vec<usize>,
}

impl DichotomyCertificate {
    pub fn in_core(&self, k: usize) -> bool {
        self.core.binary_search(&k).is_ok()
    }

    pub fn in_region(&self, k: usize) -> bool {
        self.region.binary_search(&k).is_ok()
    }

    /// Re-derives every certificate invariant on the grid.
    pub fn validate(&self, f: &FieldExpr, dom: &GridDomain) -> Result<()> {
        let bad = |msg: String| Err(Error::CertificateInvalid(msg));
        let values = f.eval_nodes(dom, dom.interior())?;
        let collar = dom.collar(self.collar_width)?;
        let mut psi = vec![f64::NAN; dom.node_count()];
        let mut phi = vec![f64::NAN; dom.node_count()];
        for (&k, v) in dom.interior().iter().zip(&values) {
            psi[k] = self.probe.eval(v);
            phi[k] = self.functional.value(v);
        }
        let collar_sup = collar.nodes.iter().map(|&k| psi[k]).fold(f64::NEG_INFINITY, f64::max);
        let interior_sup = dom.interior().iter().map(|&k| psi[k]).fold(f64::NEG_INFINITY, f64::max);
        if !(collar_sup < self.level && self.level < interior_sup) {
            return bad(format!(
                "level {} not strictly between collar sup {collar_sup} and interior sup {interior_sup}",
                self.level
            ));
        }
        let core: Vec<usize> = dom.interior().iter().copied().filter(|&k| psi[k] >= self.level).collect();
        if core != self.core {
            return bad("core differs from the sublevel complement".into());
        }
        if let Some(&k) = collar.nodes.iter().find(|&&k| self.in_core(k)) {
            return bad(format!("collar node {k} lies in the core"));
        }
        if self.region.is_empty() {
            return bad("region is empty".into());
        }
        let region: Vec<usize> = dom.interior().iter().copied().filter(|&k| phi[k] < self.rho).collect();
        if region != self.region {
            return bad("region differs from the phi sublevel set".into());
        }
        if let Some(&k) = self.region.iter().find(|&&k| !self.in_core(k)) {
            return bad(format!("region node {k} lies outside the core"));
        }
        let outside_inf = dom
            .interior()
            .iter()
            .filter(|&&k| !self.in_core(k))
            .map(|&k| phi[k])
            .fold(f64::INFINITY, f64::min);
        if !(phi[self.witness] < self.rho && self.rho < outside_inf) {
            return bad(format!(
                "rho {} not strictly between phi(f(x_bar)) = {} and {outside_inf}",
                self.rho, phi[self.witness]
            ));
        }
        Ok(())
    }
}

fn argmax(nodes: &[usize], vals: &[f64]) -> (usize, f64) {
    let mut best = (nodes[0], f64::NEG_INFINITY);
    for &k in nodes {
        if vals[k] > best.1 {
            best = (k, vals[k]);
        }
    }
    best
}

/// Lattice points of `{psi <= r}` inside `bbox`, refined until about `target` survive.
fn sublevel_sample(probe: &QuasiConvexProbe, r: f64, lo: [f64; 2], hi: [f64; 2], target: usize) -> Vec<Vec<f64>> {
    let mut n = 32;
    loop {
        let mut kept = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let s = i as f64 / (n - 1) as f64;
                let t = j as f64 / (n - 1) as f64;
                let y = vec![lo[0] + s * (hi[0] - lo[0]), lo[1] + t * (hi[1] - lo[1])];
                if probe.eval(&y) <= r {
                    kept.push(y);
                }
            }
        }
        if kept.len() >= target || n >= 1024 {
            if kept.len() <= target {
                return kept;
            }
            let stride = kept.len() as f64 / target as f64;
            return (0..target).map(|i| kept[(i as f64 * stride) as usize].clone()).collect();
        }
        n *= 2;
    }
}

/// Builds the certificate for `f` and `psi` with collar width `delta`.
///
/// The collar sup must sit below the interior sup by more than `8 L h`, where `L`
/// bounds the Jacobian of `f` over the interior nodes.
pub fn build_certificate(
    f: &FieldExpr,
    dom: &GridDomain,
    probe: &QuasiConvexProbe,
    delta: f64,
) -> Result<DichotomyCertificate> {
    f.require_planar()?;
    if probe.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: probe.dim() });
    }
    let interior = dom.interior();
    let values = f.eval_nodes(dom, interior)?;
    let collar = dom.collar(delta)?;

    let mut psi = vec![f64::NAN; dom.node_count()];
    for (&k, v) in interior.iter().zip(&values) {
        psi[k] = probe.eval(v);
    }
    let (witness, interior_sup) = argmax(interior, &psi);
    let (_, collar_sup) = argmax(&collar.nodes, &psi);
    let lip = f.lipschitz_estimate(&dom.interior_positions());
    let required_margin = 8.0 * lip * dom.h();
    let gap = interior_sup - collar_sup;
    if !(gap > required_margin) {
        return Err(Error::NoCertificate { gap, required: required_margin });
    }
    let level = 0.5 * (collar_sup + interior_sup);
    let core: Vec<usize> = interior.iter().copied().filter(|&k| psi[k] >= level).collect();

    // Separation cloud: the sublevel part of the image plus lattice samples of {psi <= r}
    // over the image bounding box inflated by 10% of its largest extent.
    let mut cloud: Vec<Vec<f64>> = interior
        .iter()
        .zip(&values)
        .filter(|(&k, _)| psi[k] <= level)
        .map(|(_, v)| v.clone())
        .collect();
    let boundary_values = f.eval_points(&dom.boundary_positions())?;
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for v in values.iter().chain(&boundary_values) {
        for a in 0..2 {
            lo[a] = lo[a].min(v[a]);
            hi[a] = hi[a].max(v[a]);
        }
    }
    let pad = 0.1 * (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
    for a in 0..2 {
        lo[a] -= pad;
        hi[a] += pad;
    }
    cloud.extend(sublevel_sample(probe, level, lo, hi, SUBLEVEL_SAMPLES));
    let hull = convex_hull_2d(&PointSet::new(2, &cloud)?)?;
    let vertices = PointSet::from_2d(hull.vertices_2d().unwrap_or_default())?;
    let top = &values[interior.binary_search(&witness).expect("witness is interior")];
    let functional = separate(top, &vertices, 1e-9 * (1.0 + pad)).map_err(|e| {
        Error::SamplingInsufficient(format!("cannot separate f(x_bar) from the sublevel cloud: {e}"))
    })?;

    let mut phi = vec![f64::NAN; dom.node_count()];
    for (&k, v) in interior.iter().zip(&values) {
        phi[k] = functional.value(v);
    }
    let phi_top = phi[witness];
    let outside_inf = interior
        .iter()
        .filter(|&&k| psi[k] < level)
        .map(|&k| phi[k])
        .fold(f64::INFINITY, f64::min);
    if !(phi_top < outside_inf) {
        return Err(Error::SamplingInsufficient(format!(
            "phi(f(x_bar)) = {phi_top} does not undercut the sublevel image ({outside_inf})"
        )));
    }
    let rho = 0.5 * (phi_top + outside_inf);
    let region = interior.iter().copied().filter(|&k| phi[k] < rho).collect();

    let cert = DichotomyCertificate {
        probe: probe.clone(),
        collar_width: delta,
        collar_sup,
        interior_sup,
        required_margin,
        level,
        core,
        witness,
        functional,
        rho,
        region,
    };
    cert.validate(f, dom)?;
    Ok(cert)
}

fn phi_values(g: &FieldExpr, dom: &GridDomain, nodes: &[usize], phi: &SeparationWitness) -> Result<Vec<f64>> {
    Ok(g.eval_nodes(dom, nodes)?.iter().map(|v| phi.value(v)).collect())
}

/// `max(0, inf_X (phi(g(x)) - inf_K phi(g)) / (rho - phi(f(x))))`.
pub fn lambda_tilde(g: &FieldExpr, f: &FieldExpr, dom: &GridDomain, cert: &DichotomyCertificate) -> Result<f64> {
    if cert.region.is_empty() {
        return Err(Error::CertificateInvalid("region is empty".into()));
    }
    if g.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: g.dim() });
    }
    let phi = &cert.functional;
    let g_core = phi_values(g, dom, &cert.core, phi)?;
    let g_inf = g_core.iter().copied().fold(f64::INFINITY, f64::min);
    let g_region = phi_values(g, dom, &cert.region, phi)?;
    let f_region = phi_values(f, dom, &cert.region, phi)?;
    let raw = g_region
        .iter()
        .zip(&f_region)
        .map(|(pg, pf)| (pg - g_inf) / (cert.rho - pf))
        .fold(f64::INFINITY, f64::min);
    Ok(raw.max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportVerdict {
    pub lambda: f64,
    pub lambda_tilde: f64,
    /// `x_hat`.
    pub support_node: usize,
    pub support_point: [f64; 2],
    /// `(g + lambda f)(x_hat)`.
    pub image_point: [f64; 2],
    /// `phi`, with `threshold` set to its minimum over the core image.
    pub functional: SeparationWitness,
    /// Distance of the image point to the boundary of `conv((g + lambda f)(X))`.
    pub boundary_distance: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Checks that the minimiser of `phi(g + lambda f)` over `K` lies in `X` on the image boundary.
pub fn verify_supported(
    g: &FieldExpr,
    f: &FieldExpr,
    lambda: f64,
    dom: &GridDomain,
    cert: &DichotomyCertificate,
    tol: f64,
) -> Result<SupportVerdict> {
    let lt = lambda_tilde(g, f, dom, cert)?;
    if !(lambda > lt) {
        return Err(Error::PreconditionRejected(format!(
            "lambda = {lambda} does not exceed lambda~ = {lt}"
        )));
    }
    let combined = |nodes: &[usize]| -> Result<Vec<Vec<f64>>> {
        let gv = g.eval_nodes(dom, nodes)?;
        let fv = f.eval_nodes(dom, nodes)?;
        Ok(gv
            .iter()
            .zip(&fv)
            .map(|(a, b)| vec![a[0] + lambda * b[0], a[1] + lambda * b[1]])
            .collect())
    };
    let core_img = combined(&cert.core)?;
    let phi = &cert.functional;
    let scores: Vec<f64> = core_img.par_iter().map(|v| phi.value(v)).collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    let node = cert.core[best];
    if !cert.in_region(node) {
        return Err(Error::TheoremViolation { node });
    }
    let region_img = combined(&cert.region)?;
    let hull = HullRegion::new(PointSet::new(2, &region_img)?)?;
    let image = &core_img[best];
    let boundary_distance = hull.boundary_distance(image);
    Ok(SupportVerdict {
        lambda,
        lambda_tilde: lt,
        support_node: node,
        support_point: dom.coords(node),
        image_point: [image[0], image[1]],
        functional: SeparationWitness {
            direction: phi.direction.clone(),
            threshold: scores[best],
            margin: 0.0,
        },
        boundary_distance,
        tolerance: tol,
        passed: boundary_distance <= tol,
    })
}

/// SVG of the domain with `K`, `X`, `x_bar` and (optionally) `x_hat` overlaid.
pub fn certificate_svg(dom: &GridDomain, cert: &DichotomyCertificate, verdict: Option<&SupportVerdict>) -> String {
    let mut c = SvgCanvas::new(dom.bbox(), 480.0);
    let h = dom.h();
    for &k in dom.interior() {
        let fill = if cert.in_region(k) {
            "#d95f02"
        } else if cert.in_core(k) {
            "#fdb863"
        } else {
            "#e8e8e8"
        };
        c.cell(dom.coords(k), h, fill);
    }
    for p in dom.boundary_positions() {
        c.cell(p, h * 0.6, "#333333");
    }
    c.dot(dom.coords(cert.witness), 4.0, "#1b9e77");
    if let Some(v) = verdict {
        c.dot(v.support_point, 4.0, "#7570b3");
        let b = dom.bbox();
        let corner = [b.x_min + 0.03 * (b.x_max - b.x_min), b.y_max - 0.06 * (b.y_max - b.y_min)];
        c.label(corner, &format!("lambda = {}", v.lambda));
    }
    c.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridBox, Mask};
    use crate::hull_property::{check_hull_like_property, default_collar_widths};

    fn disk(n: usize) -> GridDomain {
        GridDomain::build(GridBox::symmetric(1.0), n, n, Mask::disk(1.0)).unwrap()
    }

    fn bump() -> FieldExpr {
        FieldExpr::parse("(1 - x^2 - y^2, 0)").unwrap()
    }

    fn e1() -> QuasiConvexProbe {
        QuasiConvexProbe::linear(vec![1.0, 0.0])
    }

    #[test]
    fn disk_certificate_matches_closed_form() {
        let dom = disk(101);
        let delta = 10.0 * dom.h();
        let cert = build_certificate(&bump(), &dom, &e1(), delta).unwrap();
        // collar sup 1 - (1 - delta)^2 up to a grid cell
        let expect_r = 0.5 * (1.0 + 2.0 * delta - delta * delta);
        assert!((cert.level - expect_r).abs() < 3.0 * dom.h(), "{}", cert.level);
        assert!((cert.functional.direction[0] + 1.0).abs() < 1e-9);
        assert!(cert.functional.direction[1].abs() < 1e-9);
        assert!((cert.rho + 0.5 * (1.0 + cert.level)).abs() < 1e-2);
        assert_eq!(dom.coords(cert.witness), [0.0, 0.0]);

        // K and X against direct set computation
        let r_x2 = 1.0 + cert.rho;
        for &k in dom.interior() {
            let p = dom.coords(k);
            let s = p[0] * p[0] + p[1] * p[1];
            assert_eq!(cert.in_core(k), 1.0 - s >= cert.level);
            assert_eq!(cert.in_region(k), -(1.0 - s) < cert.rho, "{p:?}");
            if s < r_x2 - 1e-9 {
                assert!(cert.in_region(k));
            }
        }
    }

    #[test]
    fn hull_like_fields_are_refused() {
        let dom = disk(61);
        let f = FieldExpr::parse("(x, y)").unwrap();
        for probe in crate::hull_property::default_probes(2) {
            let r = build_certificate(&f, &dom, &probe, 10.0 * dom.h());
            assert!(matches!(r, Err(Error::NoCertificate { .. })), "{probe:?}");
        }
        let c = FieldExpr::parse("(1, 2)").unwrap();
        assert!(matches!(
            build_certificate(&c, &dom, &e1(), 10.0 * dom.h()),
            Err(Error::NoCertificate { .. })
        ));
    }

    #[test]
    fn max_norm_pyramid_gives_centered_square() {
        let dom = GridDomain::build(GridBox::symmetric(1.0), 81, 81, Mask::All).unwrap();
        let f = FieldExpr::parse("(0, 1 - max(abs(x), abs(y)))").unwrap();
        let cert = build_certificate(&f, &dom, &QuasiConvexProbe::linear(vec![0.0, 1.0]), 10.0 * dom.h()).unwrap();
        // X = {1 - max(|x|,|y|) > -rho} is the square of half-width 1 + rho
        let w = 1.0 + cert.rho;
        assert!(w > 0.0 && w < 1.0);
        for &k in dom.interior() {
            let p = dom.coords(k);
            let m = p[0].abs().max(p[1].abs());
            if m < w - 1e-9 {
                assert!(cert.in_region(k));
            } else if m > w + 1e-9 {
                assert!(!cert.in_region(k));
            }
        }
    }

    #[test]
    fn lambda_tilde_examples() {
        let dom = disk(81);
        let f = bump();
        let cert = build_certificate(&f, &dom, &e1(), 10.0 * dom.h()).unwrap();
        let zero = FieldExpr::parse("(0, 0)").unwrap();
        assert_eq!(lambda_tilde(&zero, &f, &dom, &cert).unwrap(), 0.0);
        let c = FieldExpr::parse("(3, -1)").unwrap();
        assert_eq!(lambda_tilde(&c, &f, &dom, &cert).unwrap(), 0.0);

        // g = f: brute force over X
        let phi = |v: &[f64]| -v[0];
        let inf_k = cert
            .core
            .iter()
            .map(|&k| phi(&f.eval(dom.coords(k)).unwrap()))
            .fold(f64::INFINITY, f64::min);
        let oracle = cert
            .region
            .iter()
            .map(|&k| {
                let v = phi(&f.eval(dom.coords(k)).unwrap());
                (v - inf_k) / (cert.rho - v)
            })
            .fold(f64::INFINITY, f64::min)
            .max(0.0);
        let got = lambda_tilde(&f, &f, &dom, &cert).unwrap();
        assert!((got - oracle).abs() < 1e-12);
    }

    #[test]
    fn supported_points_for_disk_example() {
        let dom = disk(81);
        let f = bump();
        let cert = build_certificate(&f, &dom, &e1(), 10.0 * dom.h()).unwrap();
        let zero = FieldExpr::parse("(0, 0)").unwrap();
        let v = verify_supported(&zero, &f, 1.0, &dom, &cert, 4.0 * dom.h()).unwrap();
        assert_eq!(v.support_point, [0.0, 0.0]);
        assert!((v.image_point[0] - 1.0).abs() < 1e-12);
        assert_eq!(v.boundary_distance, 0.0);
        assert!(v.passed);

        let g = FieldExpr::parse("(0.01 * y, 0.01 * x)").unwrap();
        let v = verify_supported(&g, &f, 10.0, &dom, &cert, 4.0 * dom.h()).unwrap();
        assert!(cert.in_region(v.support_node));
        assert!(v.passed);

        let svg = certificate_svg(&dom, &cert, Some(&v));
        assert!(svg.contains("<circle"));
    }

    #[test]
    fn lambda_below_threshold_is_rejected() {
        let dom = disk(101);
        let f = bump();
        let cert = build_certificate(&f, &dom, &e1(), 10.0 * dom.h()).unwrap();
        let g = FieldExpr::parse("(x, y)").unwrap();
        let lt = lambda_tilde(&g, &f, &dom, &cert).unwrap();
        assert!(lt > 1.0);
        assert!(matches!(
            verify_supported(&g, &f, lt, &dom, &cert, 1.0),
            Err(Error::PreconditionRejected(_))
        ));
        assert!(verify_supported(&g, &f, lt * 1.01 + 1e-9, &dom, &cert, 4.0 * dom.h()).is_ok());
    }

    #[test]
    fn certificate_round_trips_json() {
        let dom = disk(101);
        let cert = build_certificate(&bump(), &dom, &e1(), 10.0 * dom.h()).unwrap();
        let s = serde_json::to_string(&cert).unwrap();
        let back: DichotomyCertificate = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cert);
        back.validate(&bump(), &dom).unwrap();
    }

    #[test]
    fn dichotomy_on_bump_agrees_with_hull_like() {
        let dom = disk(81);
        let r = check_hull_like_property(&bump(), &dom, &[e1()], &default_collar_widths(&dom), 4.0 * dom.h()).unwrap();
        assert!(!r.satisfied);
        assert!(build_certificate(&bump(), &dom, &e1(), 10.0 * dom.h()).is_ok());
    }
}
