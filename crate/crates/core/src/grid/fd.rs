use super::GridDomain;
use crate::error::{Error, Result};

/// Second-order gradient of nodal samples at node `k`.
///
/// Central differences where both axis neighbors are in the closed domain, otherwise
/// the one-sided three-point formula `(-3u0 + 4u1 - u2) / 2h`.
pub fn gradient_fd(dom: &GridDomain, samples: &[f64], k: usize) -> Result<[f64; 2]> {
    let (nx, ny) = dom.resolution();
    let (dx, dy) = dom.spacing();
    let (i, j) = dom.node_ij(k);
    let usable = |m: usize| dom.is_closed_node(m) && samples[m].is_finite();
    let stencil_err = || {
        let p = dom.coords(k);
        Error::Stencil { x: p[0], y: p[1] }
    };
    if !usable(k) {
        return Err(stencil_err());
    }

    // (index, extent along the axis, stride, spacing)
    let axes = [(i, nx, 1usize, dx), (j, ny, nx, dy)];
    let mut grad = [0.0; 2];
    for (g, &(pos, len, stride, h)) in grad.iter_mut().zip(&axes) {
        let at = |offset: isize| -> Option<usize> {
            let p = pos as isize + offset;
            if p < 0 || p >= len as isize {
                return None;
            }
            let m = (k as isize + offset * stride as isize) as usize;
            usable(m).then_some(m)
        };
        *g = match (at(-1), at(1)) {
            (Some(w), Some(e)) => (samples[e] - samples[w]) / (2.0 * h),
            _ => match (at(1), at(2), at(-1), at(-2)) {
                (Some(e1), Some(e2), _, _) => {
                    (-3.0 * samples[k] + 4.0 * samples[e1] - samples[e2]) / (2.0 * h)
                }
                (_, _, Some(w1), Some(w2)) => {
                    (3.0 * samples[k] - 4.0 * samples[w1] + samples[w2]) / (2.0 * h)
                }
                _ => return Err(stencil_err()),
            },
        };
    }
    Ok(grad)
}

/// Gradients at each listed node.
pub fn gradient_samples(dom: &GridDomain, samples: &[f64], nodes: &[usize]) -> Result<Vec<[f64; 2]>> {
    nodes.iter().map(|&k| gradient_fd(dom, samples, k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{parse_expr, GridBox, Mask};

    #[test]
    fn linear_gradient_is_exact() {
        let dom = GridDomain::build(GridBox::unit_square(), 11, 11, Mask::All).unwrap();
        let u = dom.sample(&parse_expr("x + 2*y").unwrap());
        for k in 0..dom.node_count() {
            let g = gradient_fd(&dom, &u, k).unwrap();
            assert!((g[0] - 1.0).abs() < 1e-12 && (g[1] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_gradient_second_order() {
        let mut errs = Vec::new();
        for n in [21, 41] {
            let dom = GridDomain::build(GridBox::symmetric(1.0), n, n, Mask::All).unwrap();
            let u = dom.sample(&parse_expr("exp(x) * sin(y) + (x^2 + y^2) / 2").unwrap());
            let k = dom.node_index((n - 1) * 3 / 4, (n - 1) / 2);
            let p = dom.coords(k);
            let g = gradient_fd(&dom, &u, k).unwrap();
            let ex = [p[0].exp() * p[1].sin() + p[0], p[0].exp() * p[1].cos() + p[1]];
            errs.push((g[0] - ex[0]).abs().max((g[1] - ex[1]).abs()));
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.8, "observed order {order}");
    }

    #[test]
    fn one_sided_boundary_gradient() {
        let mut errs = Vec::new();
        for n in [21, 41] {
            let dom = GridDomain::build(GridBox::unit_square(), n, n, Mask::All).unwrap();
            let u = dom.sample(&parse_expr("x^3 + x^2").unwrap());
            // right edge, mid height
            let k = dom.node_index(n - 1, n / 2);
            let g = gradient_fd(&dom, &u, k).unwrap();
            errs.push((g[0] - 5.0).abs());
            let u2 = dom.sample(&parse_expr("x^2").unwrap());
            assert!((gradient_fd(&dom, &u2, k).unwrap()[0] - 2.0).abs() < 1e-10);
        }
        assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
    }
}
