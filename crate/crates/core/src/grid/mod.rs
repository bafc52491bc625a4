//! Structured grids over masked planar domains, analytic fields and finite differences.

mod expr;
mod fd;
mod field;
mod parse;

pub use expr::{Expr, Func, Var};
pub use fd::{gradient_fd, gradient_samples};
pub use field::{det2, jacobian_fd, spectral_norm, FieldExpr, JacobianSample, JacobianSource};
pub use parse::{parse_components, parse_expr};

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridBox {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl GridBox {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    pub fn unit_square() -> Self {
        Self::new(0.0, 1.0, 0.0, 1.0)
    }

    pub fn symmetric(half: f64) -> Self {
        Self::new(-half, half, -half, half)
    }

    fn contains_closed(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }

    fn contains_open(&self, p: [f64; 2]) -> bool {
        p[0] > self.x_min && p[0] < self.x_max && p[1] > self.y_min && p[1] < self.y_max
    }
}

/// Selects the open set inside the bounding box: everything, or `{level < 0}`.
#[derive(Debug, Clone, PartialEq)]
pub enum Mask {
    All,
    Level(Expr),
}

impl Mask {
    /// Parses `all`, `lhs < rhs`, `lhs > rhs`, or a bare level expression (negative inside).
    pub fn parse(src: &str) -> Result<Self> {
        let s = src.trim();
        if s.eq_ignore_ascii_case("all") {
            return Ok(Mask::All);
        }
        if let Some((lhs, rhs)) = s.split_once('<') {
            let rhs = rhs.strip_prefix('=').unwrap_or(rhs);
            return Ok(Mask::Level(Expr::sub(parse_expr(lhs)?, parse_expr(rhs)?)));
        }
        if let Some((lhs, rhs)) = s.split_once('>') {
            let rhs = rhs.strip_prefix('=').unwrap_or(rhs);
            return Ok(Mask::Level(Expr::sub(parse_expr(rhs)?, parse_expr(lhs)?)));
        }
        Ok(Mask::Level(parse_expr(s)?))
    }

    /// Unit disk of the given radius centered at the origin.
    pub fn disk(radius: f64) -> Self {
        Mask::Level(Expr::sub(
            Expr::add(
                Expr::pow(Expr::x(), Expr::c(2.0)),
                Expr::pow(Expr::y(), Expr::c(2.0)),
            ),
            Expr::c(radius * radius),
        ))
    }

    fn level(&self, p: [f64; 2]) -> f64 {
        match self {
            Mask::All => -1.0,
            Mask::Level(e) => e.eval_xy(p[0], p[1]),
        }
    }
}

impl fmt::Display for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mask::All => write!(f, "all"),
            Mask::Level(e) => write!(f, "{e} < 0"),
        }
    }
}

impl Serialize for Mask {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Mask {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Mask::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Interior,
    Boundary,
    Exterior,
}

/// A sample of the topological boundary: either a grid node lying on it or a
/// bisection point on a grid edge crossing the mask's zero set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub pos: [f64; 2],
    pub node: Option<usize>,
}

/// Discretized bounded open set with interior/boundary/exterior node tags.
///
/// Interior nodes are the grid nodes of the open set. Their axis neighbors are either
/// nodes of the closure or, across a crossing edge, the bisected boundary point on that
/// edge. Boundary nodes are nodes of the closure on the boundary curve (box edges or
/// exact zeros of the mask level).
///
/// Nodes are numbered row-major: `index = j * nx + i` with `x = x_min + i * dx`.
#[derive(Debug, Clone)]
pub struct GridDomain {
    bbox: GridBox,
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    mask: Mask,
    closed: Vec<bool>,
    kinds: Vec<NodeKind>,
    interior: Vec<usize>,
    boundary_nodes: Vec<usize>,
    boundary_points: Vec<BoundaryPoint>,
    boundary_dist: Vec<f64>,
}

impl GridDomain {
    pub fn build(bbox: GridBox, nx: usize, ny: usize, mask: Mask) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidGrid(format!("resolution {nx}x{ny}, need at least 3x3")));
        }
        if !(bbox.x_max > bbox.x_min && bbox.y_max > bbox.y_min) {
            return Err(Error::InvalidGrid(format!("degenerate bounding box {bbox:?}")));
        }
        let dx = (bbox.x_max - bbox.x_min) / (nx - 1) as f64;
        let dy = (bbox.y_max - bbox.y_min) / (ny - 1) as f64;
        let n = nx * ny;
        let coord = |idx: usize| -> [f64; 2] {
            let (i, j) = (idx % nx, idx / nx);
            [
                bbox.x_min + (bbox.x_max - bbox.x_min) * i as f64 / (nx - 1) as f64,
                bbox.y_min + (bbox.y_max - bbox.y_min) * j as f64 / (ny - 1) as f64,
            ]
        };
        let level: Vec<f64> = (0..n).into_par_iter().map(|k| mask.level(coord(k))).collect();
        let closed: Vec<bool> = level.iter().map(|&l| l <= 0.0).collect();
        let open: Vec<bool> = (0..n)
            .map(|k| level[k] < 0.0 && bbox.contains_open(coord(k)))
            .collect();

        // An axis neighbor outside the closure is replaced by the bisected boundary
        // point on that edge, so every open node carries a complete stencil.
        let is_interior = open.clone();
        let on_curve = |k: usize| -> bool {
            let (i, j) = (k % nx, k / nx);
            closed[k] && (i == 0 || j == 0 || i == nx - 1 || j == ny - 1 || level[k] == 0.0)
        };

        let mut kinds = vec![NodeKind::Exterior; n];
        let mut interior = Vec::new();
        let mut boundary_nodes = Vec::new();
        let mut boundary_points = Vec::new();
        for k in 0..n {
            let (i, j) = (k % nx, k / nx);
            if is_interior[k] {
                kinds[k] = NodeKind::Interior;
                interior.push(k);
                continue;
            }
            if !closed[k] {
                continue;
            }
            let adjacent = [
                (i > 0).then(|| k - 1),
                (i + 1 < nx).then_some(k + 1),
                (j > 0).then(|| k - nx),
                (j + 1 < ny).then_some(k + nx),
            ]
            .into_iter()
            .flatten()
            .any(|m| is_interior[m]);
            let curve = on_curve(k);
            if adjacent || curve {
                kinds[k] = NodeKind::Boundary;
                boundary_nodes.push(k);
            }
            if curve {
                boundary_points.push(BoundaryPoint {
                    pos: coord(k),
                    node: Some(k),
                });
            }
        }

        if let Mask::Level(_) = &mask {
            for k in 0..n {
                let (i, j) = (k % nx, k / nx);
                for m in [(i + 1 < nx).then_some(k + 1), (j + 1 < ny).then_some(k + nx)]
                    .into_iter()
                    .flatten()
                {
                    let (la, lb) = (level[k], level[m]);
                    if (la < 0.0 && lb > 0.0) || (la > 0.0 && lb < 0.0) {
                        let (inside, outside) = if la < 0.0 { (k, m) } else { (m, k) };
                        boundary_points.push(BoundaryPoint {
                            pos: bisect(&mask, coord(inside), coord(outside)),
                            node: None,
                        });
                    }
                }
            }
        }

        if interior.is_empty() {
            return Err(Error::EmptyDomain);
        }
        if boundary_points.is_empty() {
            return Err(Error::EmptyBoundary);
        }

        let bpos: Vec<[f64; 2]> = boundary_points.iter().map(|b| b.pos).collect();
        let mut boundary_dist = vec![f64::NAN; n];
        let dists: Vec<f64> = interior
            .par_iter()
            .map(|&k| {
                let p = coord(k);
                bpos.iter()
                    .map(|b| (b[0] - p[0]).powi(2) + (b[1] - p[1]).powi(2))
                    .fold(f64::INFINITY, f64::min)
                    .sqrt()
            })
            .collect();
        for (&k, d) in interior.iter().zip(dists) {
            boundary_dist[k] = d;
        }

        Ok(Self {
            bbox,
            nx,
            ny,
            dx,
            dy,
            mask,
            closed,
            kinds,
            interior,
            boundary_nodes,
            boundary_points,
            boundary_dist,
        })
    }

    pub fn bbox(&self) -> GridBox {
        self.bbox
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn resolution(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn spacing(&self) -> (f64, f64) {
        (self.dx, self.dy)
    }

    /// The larger of the two grid spacings.
    pub fn h(&self) -> f64 {
        self.dx.max(self.dy)
    }

    pub fn node_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn node_ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn coords(&self, k: usize) -> [f64; 2] {
        let (i, j) = self.node_ij(k);
        let b = &self.bbox;
        [
            b.x_min + (b.x_max - b.x_min) * i as f64 / (self.nx - 1) as f64,
            b.y_min + (b.y_max - b.y_min) * j as f64 / (self.ny - 1) as f64,
        ]
    }

    pub fn kind(&self, k: usize) -> NodeKind {
        self.kinds[k]
    }

    /// Whether node `k` lies in the closure of the domain.
    pub fn is_closed_node(&self, k: usize) -> bool {
        self.closed[k]
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn boundary_points(&self) -> &[BoundaryPoint] {
        &self.boundary_points
    }

    pub fn boundary_positions(&self) -> Vec<[f64; 2]> {
        self.boundary_points.iter().map(|b| b.pos).collect()
    }

    pub fn interior_positions(&self) -> Vec<[f64; 2]> {
        self.interior.iter().map(|&k| self.coords(k)).collect()
    }

    /// Distance from an interior node to the nearest boundary sample (NaN elsewhere).
    pub fn boundary_distance(&self, k: usize) -> f64 {
        self.boundary_dist[k]
    }

    pub fn contains_closed(&self, p: [f64; 2]) -> bool {
        self.bbox.contains_closed(p) && self.mask.level(p) <= 0.0
    }

    pub fn contains_open(&self, p: [f64; 2]) -> bool {
        self.bbox.contains_open(p) && self.mask.level(p) < 0.0
    }

    /// 4-neighbors of a node that exist on the grid.
    pub fn neighbors(&self, k: usize) -> impl Iterator<Item = usize> {
        let (i, j) = self.node_ij(k);
        let (nx, ny) = (self.nx, self.ny);
        [
            (i > 0).then(|| k - 1),
            (i + 1 < nx).then_some(k + 1),
            (j > 0).then(|| k - nx),
            (j + 1 < ny).then_some(k + nx),
        ]
        .into_iter()
        .flatten()
    }

    /// Interior nodes closer than `width` to the boundary.
    pub fn collar(&self, width: f64) -> Result<Collar> {
        if !(width > 0.0) {
            return Err(Error::InvalidArgument(format!("collar width must be positive, got {width}")));
        }
        let nodes: Vec<usize> = self
            .interior
            .iter()
            .copied()
            .filter(|&k| self.boundary_dist[k] < width)
            .collect();
        if nodes.is_empty() {
            return Err(Error::CollarTooThin { width });
        }
        Ok(Collar { width, nodes })
    }

    /// Samples a scalar expression on every closed node; other nodes hold NaN.
    pub fn sample(&self, e: &Expr) -> Vec<f64> {
        (0..self.node_count())
            .into_par_iter()
            .map(|k| {
                if self.closed[k] {
                    let p = self.coords(k);
                    e.eval_xy(p[0], p[1])
                } else {
                    f64::NAN
                }
            })
            .collect()
    }

    /// Same domain with `k` times the resolution in each direction (nodes stay aligned).
    pub fn refined(&self, k: usize) -> Result<Self> {
        Self::build(
            self.bbox,
            (self.nx - 1) * k + 1,
            (self.ny - 1) * k + 1,
            self.mask.clone(),
        )
    }
}

fn bisect(mask: &Mask, inside: [f64; 2], outside: [f64; 2]) -> [f64; 2] {
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let at = |t: f64| {
        [
            inside[0] + t * (outside[0] - inside[0]),
            inside[1] + t * (outside[1] - inside[1]),
        ]
    };
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        let l = mask.level(at(mid));
        if l == 0.0 {
            return at(mid);
        }
        if l < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    at(0.5 * (a + b))
}

/// Interior nodes within distance `width` of the boundary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Collar {
    pub width: f64,
    pub nodes: Vec<usize>,
}
