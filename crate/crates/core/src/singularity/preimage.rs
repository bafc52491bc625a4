use std::collections::VecDeque;

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::Serialize;

use crate::dichotomy::{DichotomyCertificate, SupportVerdict};
use crate::error::{Error, Result};
use crate::grid::{spectral_norm, Expr, FieldExpr, GridDomain};

const GAUSS_NEWTON_STEPS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preimage {
    pub point: [f64; 2],
    pub residual: f64,
    pub seed_node: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreimageCount {
    pub count: usize,
    pub solutions: Vec<Preimage>,
    pub clusters: usize,
    /// Some refined solution has a rank-deficient Jacobian, so the solution set is a curve.
    pub non_isolated: bool,
}

fn residual(map: &FieldExpr, p: [f64; 2], target: [f64; 2]) -> f64 {
    let v = map.eval_unchecked(p);
    (v[0] - target[0]).hypot(v[1] - target[1])
}

/// Gauss-Newton with the pseudo-inverse, so rank-deficient Jacobians step along the range.
pub fn gauss_newton(map: &FieldExpr, start: [f64; 2], target: [f64; 2], steps: usize) -> ([f64; 2], f64) {
    let mut p = start;
    for _ in 0..steps {
        let v = map.eval_unchecked(p);
        let r = Vector2::new(v[0] - target[0], v[1] - target[1]);
        if !(r.norm() > 0.0) {
            break;
        }
        let j = map.jacobian_matrix(p);
        let m = Matrix2::new(j[0][0], j[0][1], j[1][0], j[1][1]);
        let scale = m.abs().max().max(1.0);
        let Ok(pinv) = m.pseudo_inverse(1e-12 * scale) else {
            break;
        };
        let step = pinv * r;
        let next = [p[0] - step[0], p[1] - step[1]];
        if !next[0].is_finite() || !next[1].is_finite() {
            break;
        }
        p = next;
    }
    (p, residual(map, p, target))
}

fn smallest_singular_ratio(map: &FieldExpr, p: [f64; 2]) -> f64 {
    let j = map.jacobian_matrix(p);
    let m = Matrix2::new(j[0][0], j[0][1], j[1][0], j[1][1]);
    let s = m.singular_values();
    let (lo, hi) = (s[0].min(s[1]), s[0].max(s[1]));
    lo / (1.0 + hi)
}

/// Counts solutions of `map(x) = target` among the nodes of `region`.
///
/// Nodes within `tol_y` of the target are grouped into 4-connected clusters of diameter at
/// most `tol_x`; each cluster is refined from its best node and counts when the residual
/// falls below `tol_y / 100`. Refined points closer than `1e-7` are merged.
pub fn preimage_count(
    map: &FieldExpr,
    target: [f64; 2],
    dom: &GridDomain,
    region: &[usize],
    tol_x: f64,
    tol_y: f64,
) -> Result<PreimageCount> {
    map.require_planar()?;
    let res: Vec<f64> = region
        .par_iter()
        .map(|&k| residual(map, dom.coords(k), target))
        .collect();
    let mut hit = vec![false; dom.node_count()];
    let mut res_at = vec![f64::INFINITY; dom.node_count()];
    for (&k, &r) in region.iter().zip(&res) {
        res_at[k] = r;
        hit[k] = r <= tol_y;
    }

    let mut taken = vec![false; dom.node_count()];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &seed in region {
        if !hit[seed] || taken[seed] {
            continue;
        }
        let origin = dom.coords(seed);
        let mut members = vec![seed];
        let mut queue = VecDeque::from([seed]);
        taken[seed] = true;
        while let Some(k) = queue.pop_front() {
            for m in dom.neighbors(k) {
                let p = dom.coords(m);
                if hit[m] && !taken[m] && (p[0] - origin[0]).hypot(p[1] - origin[1]) <= 0.5 * tol_x {
                    taken[m] = true;
                    members.push(m);
                    queue.push_back(m);
                }
            }
        }
        clusters.push(members);
    }
    if clusters.is_empty() {
        return Ok(PreimageCount { count: 0, solutions: Vec::new(), clusters: 0, non_isolated: false });
    }

    let refined: Vec<Option<Preimage>> = clusters
        .par_iter()
        .map(|members| {
            let mut best = members[0];
            for &k in members {
                if res_at[k] < res_at[best] || (res_at[k] == res_at[best] && k < best) {
                    best = k;
                }
            }
            let (point, r) = gauss_newton(map, dom.coords(best), target, GAUSS_NEWTON_STEPS);
            (r < tol_y / 100.0 && dom.contains_closed(point)).then_some(Preimage {
                point,
                residual: r,
                seed_node: best,
            })
        })
        .collect();
    if refined.iter().all(Option::is_none) {
        return Err(Error::CountUncertain { clusters: clusters.len() });
    }
    let mut solutions: Vec<Preimage> = Vec::new();
    for s in refined.into_iter().flatten() {
        let dup = solutions
            .iter()
            .any(|o| (o.point[0] - s.point[0]).hypot(o.point[1] - s.point[1]) < 1e-7);
        if !dup {
            solutions.push(s);
        }
    }
    let non_isolated = solutions
        .iter()
        .any(|s| smallest_singular_ratio(map, s.point) <= 1e-8);
    Ok(PreimageCount {
        count: solutions.len(),
        solutions,
        clusters: clusters.len(),
        non_isolated,
    })
}

/// `g + lambda f` as a single expression field.
pub fn combined_map(g: &FieldExpr, f: &FieldExpr, lambda: f64) -> Result<FieldExpr> {
    f.require_planar()?;
    g.require_planar()?;
    FieldExpr::planar(
        Expr::add(g.component(0).clone(), Expr::mul(Expr::c(lambda), f.component(0).clone())),
        Expr::add(g.component(1).clone(), Expr::mul(Expr::c(lambda), f.component(1).clone())),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Collision {
    /// Common value `(map(u) + map(v)) / 2` after refinement targets it.
    pub z: [f64; 2],
    pub u: Preimage,
    pub v: Preimage,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BifurcationLevel {
    pub k: u32,
    pub radius: f64,
    pub epsilon: f64,
    /// Target stepped outside the supported image along `-phi`.
    pub y: [f64; 2],
    pub y_count: usize,
    pub z: Option<Collision>,
    pub warning: Option<String>,
}

impl BifurcationLevel {
    pub fn succeeded(&self) -> bool {
        self.y_count == 0 && self.z.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BifurcationWitness {
    pub lambda: f64,
    pub support_node: usize,
    pub support_point: [f64; 2],
    pub image_point: [f64; 2],
    pub levels: Vec<BifurcationLevel>,
}

/// Witness sequences near the supported point `x_hat` for balls of radius `r0 / 2^k`.
///
/// `y_k = F(x_hat) - eps_k phi` with `eps_k = r_k` times the local Jacobian bound must have
/// no preimage in `X`; `z_k` is a value hit twice inside the ball, found by pairwise search
/// over ball nodes at least `2h` apart and refined by Gauss-Newton.
pub fn bifurcation_scan(
    g: &FieldExpr,
    f: &FieldExpr,
    dom: &GridDomain,
    cert: &DichotomyCertificate,
    verdict: &SupportVerdict,
    r0: f64,
    kmax: u32,
) -> Result<BifurcationWitness> {
    let map = combined_map(g, f, verdict.lambda)?;
    let xh = verdict.support_point;
    let fx = verdict.image_point;
    let dir = &cert.functional.direction;
    let h = dom.h();
    let mut levels = Vec::new();
    for k in 1..=kmax {
        let radius = r0 / f64::from(1u32 << k);
        let ball: Vec<usize> = dom
            .interior()
            .iter()
            .copied()
            .filter(|&m| {
                let p = dom.coords(m);
                (p[0] - xh[0]).hypot(p[1] - xh[1]) <= radius
            })
            .collect();
        let local_lip = ball
            .iter()
            .map(|&m| spectral_norm(&map.jacobian_matrix(dom.coords(m))))
            .fold(h, f64::max);
        let epsilon = radius * local_lip;
        let tol_y = 0.5 * epsilon;
        let y = [fx[0] - epsilon * dir[0], fx[1] - epsilon * dir[1]];
        let y_count = match preimage_count(&map, y, dom, &cert.region, 2.0 * h, tol_y) {
            Ok(c) => c.count,
            Err(Error::CountUncertain { .. }) => 0,
            Err(e) => return Err(e),
        };

        let values: Vec<[f64; 2]> = ball
            .iter()
            .map(|&m| {
                let v = map.eval_unchecked(dom.coords(m));
                [v[0], v[1]]
            })
            .collect();
        // closest image pair; ties favour the wider node separation, then index order
        let best = (0..ball.len())
            .into_par_iter()
            .map(|i| {
                let pi = dom.coords(ball[i]);
                let mut local: Option<(f64, f64, usize, usize)> = None;
                for j in i + 1..ball.len() {
                    let pj = dom.coords(ball[j]);
                    let sep = (pi[0] - pj[0]).hypot(pi[1] - pj[1]);
                    if sep < 2.0 * h * (1.0 - 1e-9) {
                        continue;
                    }
                    let gap = (values[i][0] - values[j][0]).hypot(values[i][1] - values[j][1]);
                    if gap > tol_y {
                        continue;
                    }
                    let better = match local {
                        None => true,
                        Some((bg, bs, _, _)) => gap < bg || (gap == bg && sep > bs),
                    };
                    if better {
                        local = Some((gap, sep, i, j));
                    }
                }
                local
            })
            .reduce(
                || None,
                |a, b| match (a, b) {
                    (Some(x), Some(y)) => {
                        let take_y = y.0 < x.0 || (y.0 == x.0 && y.1 > x.1);
                        Some(if take_y { y } else { x })
                    }
                    (x, None) => x,
                    (None, y) => y,
                },
            );

        let mut warning = None;
        let z = match best {
            None => {
                warning = Some(format!("ball of radius {radius} too coarse: no collision found"));
                None
            }
            Some((_, _, i, j)) => {
                let z = [
                    0.5 * (values[i][0] + values[j][0]),
                    0.5 * (values[i][1] + values[j][1]),
                ];
                let (pu, ru) = gauss_newton(&map, dom.coords(ball[i]), z, GAUSS_NEWTON_STEPS);
                let (pv, rv) = gauss_newton(&map, dom.coords(ball[j]), z, GAUSS_NEWTON_STEPS);
                let inside = |p: [f64; 2]| (p[0] - xh[0]).hypot(p[1] - xh[1]) <= radius;
                let distinct = (pu[0] - pv[0]).hypot(pu[1] - pv[1]) >= h;
                if inside(pu) && inside(pv) && distinct {
                    Some(Collision {
                        z,
                        u: Preimage { point: pu, residual: ru, seed_node: ball[i] },
                        v: Preimage { point: pv, residual: rv, seed_node: ball[j] },
                    })
                } else {
                    warning = Some(format!("collision at radius {radius} did not refine to two points in the ball"));
                    None
                }
            }
        };
        levels.push(BifurcationLevel { k, radius, epsilon, y, y_count, z, warning });
    }
    Ok(BifurcationWitness {
        lambda: verdict.lambda,
        support_node: verdict.support_node,
        support_point: xh,
        image_point: fx,
        levels,
    })
}
