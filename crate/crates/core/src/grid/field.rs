use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

use super::expr::{Expr, Var};
use super::parse::parse_components;
use super::GridDomain;
use crate::error::{Error, Result};

/// Scalar or planar vector field given by analytic expressions in `x` and `y`.
///
/// First partials of every component are derived symbolically at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldExpr {
    components: Vec<Expr>,
    partials: Vec<[Expr; 2]>,
}

impl FieldExpr {
    pub fn new(components: Vec<Expr>) -> Result<Self> {
        if components.is_empty() || components.len() > 2 {
            return Err(Error::Arity {
                expected: 2,
                got: components.len(),
            });
        }
        if components.iter().any(|c| c.uses(Var::T)) {
            return Err(Error::InvalidArgument(
                "field expressions may only use x and y".into(),
            ));
        }
        let partials = components
            .iter()
            .map(|c| [c.diff(Var::X), c.diff(Var::Y)])
            .collect();
        Ok(Self {
            components,
            partials,
        })
    }

    pub fn scalar(e: Expr) -> Result<Self> {
        Self::new(vec![e])
    }

    pub fn planar(a: Expr, b: Expr) -> Result<Self> {
        Self::new(vec![a, b])
    }

    pub fn parse(src: &str) -> Result<Self> {
        Self::new(parse_components(src)?)
    }

    /// Output dimension (1 or 2).
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &Expr {
        &self.components[i]
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    /// Symbolic `[d/dx, d/dy]` of component `i`.
    pub fn partials(&self, i: usize) -> &[Expr; 2] {
        &self.partials[i]
    }

    /// Evaluates without finiteness checks.
    pub fn eval_unchecked(&self, p: [f64; 2]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval_xy(p[0], p[1])).collect()
    }

    pub fn eval(&self, p: [f64; 2]) -> Result<Vec<f64>> {
        self.eval_node(p, None)
    }

    pub(crate) fn eval_node(&self, p: [f64; 2], node: Option<usize>) -> Result<Vec<f64>> {
        let v = self.eval_unchecked(p);
        if let Some(bad) = v.iter().find(|c| !c.is_finite()) {
            return Err(Error::Eval {
                x: p[0],
                y: p[1],
                value: *bad,
                node,
            });
        }
        Ok(v)
    }

    /// Evaluates at a list of points, reporting the first non-finite sample.
    pub fn eval_points(&self, pts: &[[f64; 2]]) -> Result<Vec<Vec<f64>>> {
        pts.iter().map(|&p| self.eval(p)).collect()
    }

    /// Evaluates at grid nodes; errors name the offending node.
    pub fn eval_nodes(&self, dom: &GridDomain, nodes: &[usize]) -> Result<Vec<Vec<f64>>> {
        use rayon::prelude::*;
        nodes
            .par_iter()
            .map(|&n| self.eval_node(dom.coords(n), Some(n)))
            .collect()
    }

    /// Analytic Jacobian at `p`; for scalar fields this is the gradient in row 0.
    pub fn jacobian_matrix(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        let mut m = [[0.0; 2]; 2];
        for (row, parts) in m.iter_mut().zip(&self.partials) {
            row[0] = parts[0].eval_xy(p[0], p[1]);
            row[1] = parts[1].eval_xy(p[0], p[1]);
        }
        m
    }

    /// Analytic Jacobian sample of a planar field.
    pub fn jacobian(&self, p: [f64; 2]) -> Result<JacobianSample> {
        self.require_planar()?;
        Ok(JacobianSample {
            point: p,
            matrix: self.jacobian_matrix(p),
            source: JacobianSource::Analytic,
        })
    }

    pub fn gradient(&self, p: [f64; 2]) -> Result<[f64; 2]> {
        if self.dim() != 1 {
            return Err(Error::Arity {
                expected: 1,
                got: self.dim(),
            });
        }
        Ok(self.jacobian_matrix(p)[0])
    }

    pub(crate) fn require_planar(&self) -> Result<()> {
        if self.dim() != 2 {
            return Err(Error::Arity {
                expected: 2,
                got: self.dim(),
            });
        }
        Ok(())
    }

    /// Largest operator norm of the analytic Jacobian over `pts`; a Lipschitz estimate.
    pub fn lipschitz_estimate(&self, pts: &[[f64; 2]]) -> f64 {
        use rayon::prelude::*;
        pts.par_iter()
            .map(|&p| spectral_norm(&self.jacobian_matrix(p)))
            .filter(|v| v.is_finite())
            .reduce(|| 0.0, f64::max)
    }
}

/// Largest singular value of a 2x2 matrix.
pub fn spectral_norm(m: &[[f64; 2]; 2]) -> f64 {
    let [[a, b], [c, d]] = *m;
    let s = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
    ((s + disc) / 2.0).sqrt()
}

pub fn det2(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.len() == 1 {
            write!(f, "{}", self.components[0])
        } else {
            write!(f, "(")?;
            for (i, c) in self.components.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, ")")
        }
    }
}

impl FromStr for FieldExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl Serialize for FieldExpr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FieldExpr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum JacobianSource {
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JacobianSample {
    pub point: [f64; 2],
    pub matrix: [[f64; 2]; 2],
    pub source: JacobianSource,
}

impl JacobianSample {
    pub fn det(&self) -> f64 {
        det2(&self.matrix)
    }
}

/// Central-difference Jacobian of a planar field; the whole stencil must lie in the closed domain.
pub fn jacobian_fd(
    field: &FieldExpr,
    dom: &GridDomain,
    p: [f64; 2],
    h_step: f64,
) -> Result<JacobianSample> {
    field.require_planar()?;
    if !(h_step > 0.0) {
        return Err(Error::InvalidArgument(format!("h_step must be positive, got {h_step}")));
    }
    let mut matrix = [[0.0; 2]; 2];
    for axis in 0..2 {
        let mut plus = p;
        let mut minus = p;
        plus[axis] += h_step;
        minus[axis] -= h_step;
        for q in [plus, minus] {
            if !dom.contains_closed(q) {
                return Err(Error::Stencil { x: q[0], y: q[1] });
            }
        }
        let fp = field.eval(plus)?;
        let fm = field.eval(minus)?;
        for row in 0..2 {
            matrix[row][axis] = (fp[row] - fm[row]) / (2.0 * h_step);
        }
    }
    Ok(JacobianSample {
        point: p,
        matrix,
        source: JacobianSource::FiniteDifference,
    })
}
