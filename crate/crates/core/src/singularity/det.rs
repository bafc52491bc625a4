use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{det2, FieldExpr, GridDomain};
use crate::svg::SvgCanvas;

/// `det(J_g + lambda J_f) = a lambda^2 + b lambda + c` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticDetCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl QuadraticDetCoeffs {
    pub fn eval(&self, lambda: f64) -> f64 {
        (self.a * lambda + self.b) * lambda + self.c
    }
}

/// Coefficients from the analytic partials of `f = (u, v)` and `g = (alpha, beta)`.
pub fn det_quadratic(f: &FieldExpr, g: &FieldExpr, p: [f64; 2]) -> Result<QuadraticDetCoeffs> {
    f.require_planar()?;
    g.require_planar()?;
    let [[ux, uy], [vx, vy]] = f.jacobian_matrix(p);
    let [[ax, ay], [bx, by]] = g.jacobian_matrix(p);
    Ok(QuadraticDetCoeffs {
        a: ux * vy - uy * vx,
        b: by * ux - bx * uy - ay * vx + ax * vy,
        c: ax * by - ay * bx,
    })
}

/// Determinant of `J_g + lambda J_f` computed directly.
pub fn det_direct(f: &FieldExpr, g: &FieldExpr, p: [f64; 2], lambda: f64) -> f64 {
    let jf = f.jacobian_matrix(p);
    let jg = g.jacobian_matrix(p);
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = jg[i][j] + lambda * jf[i][j];
        }
    }
    det2(&m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LambdaGrid {
    /// `min * ratio^i`, `steps` values from `min` to `max`.
    Geometric { min: f64, max: f64, steps: usize },
    Linear { min: f64, max: f64, steps: usize },
    Explicit { values: Vec<f64> },
}

impl LambdaGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let spread = |min: f64, max: f64, steps: usize, geometric: bool| -> Result<Vec<f64>> {
            if steps == 0 || !(max >= min) || (geometric && !(min > 0.0)) {
                return Err(Error::InvalidArgument(format!(
                    "bad lambda grid: min {min}, max {max}, steps {steps}"
                )));
            }
            if steps == 1 {
                return Ok(vec![min]);
            }
            Ok((0..steps)
                .map(|i| {
                    let s = i as f64 / (steps - 1) as f64;
                    if i == steps - 1 {
                        max
                    } else if geometric {
                        min * (max / min).powf(s)
                    } else {
                        min + s * (max - min)
                    }
                })
                .collect())
        };
        match *self {
            LambdaGrid::Geometric { min, max, steps } => spread(min, max, steps, true),
            LambdaGrid::Linear { min, max, steps } => spread(min, max, steps, false),
            LambdaGrid::Explicit { ref values } => {
                if values.is_empty() || values.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidArgument("explicit lambda grid must be increasing".into()));
                }
                Ok(values.clone())
            }
        }
    }
}

/// `10 L^2 h`: how far a smooth determinant can sit from zero at the node nearest a root.
pub fn det_tolerance(lipschitz: f64, h: f64) -> f64 {
    10.0 * lipschitz * lipschitz * h
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub min_abs_det: f64,
    pub argmin_node: usize,
    pub argmin_point: [f64; 2],
    pub sign_change: bool,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularSweepResult {
    pub tol_det: f64,
    pub rows: Vec<SweepRow>,
    /// Smallest `lambda` with a certified zero.
    pub first_certified: Option<f64>,
}

impl SingularSweepResult {
    pub fn all_certified(&self) -> bool {
        self.rows.iter().all(|r| r.certified)
    }

    pub fn none_certified(&self) -> bool {
        self.rows.iter().all(|r| !r.certified)
    }

    /// Minimum of `|det|` over every node and every `lambda`.
    pub fn global_min_abs_det(&self) -> f64 {
        self.rows.iter().map(|r| r.min_abs_det).fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv write failed: {e}"));
        out.write_record(["lambda", "min_abs_det", "argmin_x", "argmin_y", "certified"])
            .map_err(io)?;
        for r in &self.rows {
            out.write_record([
                r.lambda.to_string(),
                r.min_abs_det.to_string(),
                r.argmin_point[0].to_string(),
                r.argmin_point[1].to_string(),
                r.certified.to_string(),
            ])
            .map_err(io)?;
        }
        out.flush().map_err(|e| Error::InvalidArgument(format!("csv flush failed: {e}")))?;
        Ok(())
    }
}

/// Per-node determinant coefficients over `region`, in `region` order.
pub fn region_coeffs(g: &FieldExpr, f: &FieldExpr, dom: &GridDomain, region: &[usize]) -> Result<Vec<QuadraticDetCoeffs>> {
    region.par_iter().map(|&k| det_quadratic(f, g, dom.coords(k))).collect()
}

/// Scans `det(J_{g + lambda f})` over the nodes of `region` for each `lambda`.
///
/// A zero is certified when `min |det| <= tol_det` or when the determinant changes sign
/// across an edge joining two region nodes.
pub fn singular_sweep(
    g: &FieldExpr,
    f: &FieldExpr,
    dom: &GridDomain,
    region: &[usize],
    lambdas: &[f64],
    tol_det: f64,
) -> Result<SingularSweepResult> {
    if region.is_empty() {
        return Err(Error::InvalidArgument("sweep region is empty".into()));
    }
    let coeffs = region_coeffs(g, f, dom, region)?;
    let (nx, ny) = dom.resolution();
    let mut slot = vec![usize::MAX; dom.node_count()];
    for (i, &k) in region.iter().enumerate() {
        slot[k] = i;
    }
    // region-local index pairs of east and north neighbours
    let mut edges = Vec::new();
    for (i, &k) in region.iter().enumerate() {
        let (ci, cj) = dom.node_ij(k);
        if ci + 1 < nx && slot[k + 1] != usize::MAX {
            edges.push((i, slot[k + 1]));
        }
        if cj + 1 < ny && slot[k + nx] != usize::MAX {
            edges.push((i, slot[k + nx]));
        }
    }

    let rows: Vec<SweepRow> = lambdas
        .par_iter()
        .map(|&lambda| {
            let dets: Vec<f64> = coeffs.iter().map(|q| q.eval(lambda)).collect();
            let mut best = 0;
            for (i, d) in dets.iter().enumerate() {
                if d.abs() < dets[best].abs() {
                    best = i;
                }
            }
            let sign_change = edges.iter().any(|&(i, j)| dets[i] * dets[j] < 0.0);
            let min_abs_det = dets[best].abs();
            SweepRow {
                lambda,
                min_abs_det,
                argmin_node: region[best],
                argmin_point: dom.coords(region[best]),
                sign_change,
                certified: min_abs_det <= tol_det || sign_change,
            }
        })
        .collect();
    let first_certified = rows.iter().find(|r| r.certified).map(|r| r.lambda);
    Ok(SingularSweepResult { tol_det, rows, first_certified })
}

/// Sign field of `det(J_{g + lambda f})` over `region`; zeros within `tol_det` in grey.
pub fn det_sign_svg(
    g: &FieldExpr,
    f: &FieldExpr,
    dom: &GridDomain,
    region: &[usize],
    lambda: f64,
    tol_det: f64,
) -> Result<String> {
    let coeffs = region_coeffs(g, f, dom, region)?;
    let mut c = SvgCanvas::new(dom.bbox(), 480.0);
    for p in dom.boundary_positions() {
        c.cell(p, dom.h() * 0.6, "#333333");
    }
    for (&k, q) in region.iter().zip(&coeffs) {
        let d = q.eval(lambda);
        let fill = if d.abs() <= tol_det {
            "#999999"
        } else if d > 0.0 {
            "#4575b4"
        } else {
            "#d73027"
        };
        c.cell(dom.coords(k), dom.h(), fill);
    }
    Ok(c.finish())
}
