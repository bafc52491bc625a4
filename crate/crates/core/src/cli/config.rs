use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{parse_expr, FieldExpr, GridBox, GridDomain, Mask};
use crate::hull_property::QuasiConvexProbe;
use crate::singularity::LambdaGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    HullCheck,
    HullLike,
    Certificate,
    LambdaSweep,
    Bifurcation,
    MaSolve,
    MaVerify,
    Transport,
    Remark1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    /// `[x_min, x_max, y_min, y_max]`.
    pub bbox: [f64; 4],
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "mask_all")]
    pub mask: Mask,
}

fn mask_all() -> Mask {
    Mask::All
}

impl DomainSpec {
    pub fn build(&self, grid_scale: usize) -> Result<GridDomain> {
        let [x0, x1, y0, y1] = self.bbox;
        let k = grid_scale.max(1);
        GridDomain::build(
            GridBox::new(x0, x1, y0, y1),
            (self.nx - 1) * k + 1,
            (self.ny - 1) * k + 1,
            self.mask.clone(),
        )
    }
}

/// Expressions in the grid syntax; which ones are required depends on the kind.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub f: Option<String>,
    pub g: Option<String>,
    pub h: Option<String>,
    pub boundary: Option<String>,
    pub exact: Option<String>,
    pub beta: Option<String>,
    pub alpha: Option<String>,
    pub profile: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Verdict tolerance; each kind has its own default.
    pub verdict: Option<f64>,
    pub collar_width: Option<f64>,
    pub collar_widths: Option<Vec<f64>>,
    pub det: Option<f64>,
    pub tol_res: Option<f64>,
    pub max_iters: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BifurcationSpec {
    pub r0: f64,
    pub levels: u32,
}

impl Default for BifurcationSpec {
    fn default() -> Self {
        Self { r0: 0.4, levels: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepRegion {
    /// The certificate's `X`.
    #[default]
    Certificate,
    Interior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default = "yes")]
    pub svg: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { csv: true, svg: true }
    }
}

/// One experiment, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub name: Option<String>,
    /// Expected outcome of the primary verdict; `false` marks a deliberate counterexample.
    #[serde(default = "yes")]
    pub expect: bool,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub fields: FieldSpec,
    #[serde(default)]
    pub probes: Option<Vec<QuasiConvexProbe>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub lambdas: Option<LambdaGrid>,
    #[serde(default)]
    pub region: SweepRegion,
    #[serde(default)]
    pub bifurcation: BifurcationSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Where in the config text a problem sits (1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map(|i| offset - i).unwrap_or(offset + 1);
    (line, column)
}

impl ExperimentConfig {
    /// Parses and validates a config, locating errors in `src`.
    pub fn parse(src: &str) -> std::result::Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(src).map_err(|e| {
            let (line, column) = e.span().map(|s| line_col(src, s.start)).unwrap_or((1, 1));
            ConfigError { line, column, message: e.message().to_string() }
        })?;
        cfg.validate_in(src)?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn locate(src: &str, needle: &str, column: usize, message: String) -> ConfigError {
        let (line, col) = src
            .find(needle)
            .map(|off| line_col(src, off + column.saturating_sub(1)))
            .unwrap_or((1, 1));
        ConfigError { line, column: col, message }
    }

    fn validate_in(&self, src: &str) -> std::result::Result<(), ConfigError> {
        let exprs = [
            (&self.fields.f, true),
            (&self.fields.g, true),
            (&self.fields.h, false),
            (&self.fields.boundary, false),
            (&self.fields.exact, false),
            (&self.fields.beta, false),
            (&self.fields.alpha, false),
            (&self.fields.profile, false),
        ];
        for (e, tuple) in exprs {
            if let Some(text) = e {
                let parsed = if tuple { FieldExpr::parse(text).map(|_| ()) } else { parse_expr(text).map(|_| ()) };
                if let Err(Error::Parse { column, message }) = parsed {
                    return Err(Self::locate(src, text, column, message));
                }
            }
        }
        self.validate().map_err(|e| {
            let at = src.find("kind").unwrap_or(0);
            let (line, column) = line_col(src, at);
            ConfigError { line, column, message: e.to_string() }
        })
    }

    /// Kind-specific required fields and positive tolerances.
    pub fn validate(&self) -> Result<()> {
        let need = |present: bool, what: &str| {
            if present {
                Ok(())
            } else {
                Err(Error::Config(format!("{:?} experiments need `{what}`", self.kind)))
            }
        };
        let f = &self.fields;
        use ExperimentKind::*;
        if self.kind != Remark1 {
            need(self.domain.is_some(), "[domain]")?;
        }
        match self.kind {
            HullCheck | HullLike | Certificate | LambdaSweep | Bifurcation => need(f.f.is_some(), "fields.f")?,
            MaSolve | MaVerify => {
                need(f.h.is_some(), "fields.h")?;
                need(f.boundary.is_some(), "fields.boundary")?;
            }
            Transport => {
                need(f.beta.is_some(), "fields.beta")?;
                need(f.profile.is_some(), "fields.profile")?;
            }
            Remark1 => {}
        }
        if matches!(self.kind, LambdaSweep) {
            need(self.lambdas.is_some(), "lambdas")?;
        }
        let t = &self.tolerances;
        let positive = [t.verdict, t.collar_width, t.det, t.tol_res]
            .into_iter()
            .flatten()
            .chain(t.collar_widths.iter().flatten().copied())
            .chain([self.bifurcation.r0]);
        for v in positive {
            if !(v > 0.0) {
                return Err(Error::Config(format!("tolerances must be positive, got {v}")));
            }
        }
        if let Some(d) = &self.domain {
            if d.nx < 3 || d.ny < 3 {
                return Err(Error::Config("grids need at least 3 nodes per axis".into()));
            }
        }
        if let Some(l) = &self.lambdas {
            l.values()?;
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            serde_json::to_value(self.kind)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default()
        })
    }
}
