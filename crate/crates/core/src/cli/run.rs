use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, ExperimentKind, SweepRegion};
use crate::dichotomy::{build_certificate, certificate_svg, lambda_tilde, verify_supported, DichotomyCertificate};
use crate::error::{Error, Result};
use crate::grid::{parse_expr, FieldExpr, GridDomain};
use crate::hull_property::{
    check_hull_like_property, check_hull_property, default_collar_widths, default_probes, default_tolerance,
    QuasiConvexProbe,
};
use crate::monge_ampere::{
    gradient_hull_report, max_boundary_gradient, solve_ma, verify_theorem5, write_solution_csv, MAOptions,
    MAProblem,
};
use crate::singularity::{bifurcation_scan, det_sign_svg, det_tolerance, remark1_case, singular_sweep};
use crate::transport::{self, check_max_principle, counterexample_probe, make_instance};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    /// Numeric witness or residual backing the verdict.
    pub observed: f64,
    pub bound: f64,
    pub detail: String,
}

impl Verdict {
    fn new(name: impl Into<String>, passed: bool, observed: f64, bound: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, observed, bound, detail: detail.into() }
    }
}

/// Structured outcome of one experiment.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub name: String,
    pub config: ExperimentConfig,
    pub grid_scale: usize,
    pub verdicts: Vec<Verdict>,
    pub result: Value,
    /// Wall time, kept apart so the rest of the report is reproducible.
    pub timing: Timing,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    /// The report without its timing block, for comparisons across runs.
    pub fn reproducible_json(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("object").remove("timing");
        v
    }
}

/// An artifact to be written next to `report.json`.
pub struct Artifact {
    pub file: String,
    pub contents: Vec<u8>,
}

pub struct Outcome {
    pub report: VerificationReport,
    pub artifacts: Vec<Artifact>,
}

impl Outcome {
    /// Writes `report.json` and the artifacts into `dir`, returning the written paths.
    pub fn write(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        let report = dir.join("report.json");
        fs::write(&report, serde_json::to_string_pretty(&self.report).expect("report serializes"))?;
        paths.push(report);
        for a in &self.artifacts {
            let p = dir.join(&a.file);
            fs::write(&p, &a.contents)?;
            paths.push(p);
        }
        Ok(paths)
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    scale: usize,
    verdicts: Vec<Verdict>,
    artifacts: Vec<Artifact>,
}

impl Ctx<'_> {
    fn domain(&self) -> Result<GridDomain> {
        self.cfg
            .domain
            .as_ref()
            .ok_or_else(|| Error::Config("missing [domain]".into()))?
            .build(self.scale)
    }

    fn field(&self, e: &Option<String>, fallback: &str) -> Result<FieldExpr> {
        FieldExpr::parse(e.as_deref().unwrap_or(fallback))
    }

    fn probes(&self, dim: usize) -> Vec<QuasiConvexProbe> {
        self.cfg.probes.clone().unwrap_or_else(|| default_probes(dim))
    }

    /// The certificate probe: first configured probe, else the `+x` direction.
    fn probe(&self) -> QuasiConvexProbe {
        self.cfg
            .probes
            .as_ref()
            .and_then(|p| p.first().cloned())
            .unwrap_or_else(|| QuasiConvexProbe::linear(vec![1.0, 0.0]))
    }

    fn expect(&mut self, name: &str, observed_holds: bool, observed: f64, bound: f64, detail: String) {
        let passed = observed_holds == self.cfg.expect;
        let detail = format!("{detail}; expected holds = {}", self.cfg.expect);
        self.verdicts.push(Verdict::new(name, passed, observed, bound, detail));
    }

    fn csv(&mut self, file: &str, contents: Vec<u8>) {
        if self.cfg.output.csv {
            self.artifacts.push(Artifact { file: file.into(), contents });
        }
    }

    fn svg(&mut self, file: &str, contents: String) {
        if self.cfg.output.svg {
            self.artifacts.push(Artifact { file: file.into(), contents: contents.into_bytes() });
        }
    }

    fn certificate(&mut self, f: &FieldExpr, dom: &GridDomain) -> Result<Option<DichotomyCertificate>> {
        let delta = self.cfg.tolerances.collar_width.unwrap_or(10.0 * dom.h());
        match build_certificate(f, dom, &self.probe(), delta) {
            Ok(c) => Ok(Some(c)),
            Err(e @ (Error::NoCertificate { .. } | Error::SamplingInsufficient(_))) => {
                let gap = match e {
                    Error::NoCertificate { gap, .. } => gap,
                    _ => f64::NAN,
                };
                self.verdicts.push(Verdict::new("certificate", false, gap, f64::NAN, e.to_string()));
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }
}

fn sweep_points(dom: &GridDomain, nodes: &[usize]) -> Vec<[f64; 2]> {
    nodes.iter().map(|&k| dom.coords(k)).collect()
}

/// Runs one experiment. `grid_scale` refines every grid by that factor.
pub fn run_experiment(cfg: &ExperimentConfig, grid_scale: usize) -> Result<Outcome> {
    cfg.validate()?;
    let start = Instant::now();
    let mut ctx = Ctx { cfg, scale: grid_scale.max(1), verdicts: Vec::new(), artifacts: Vec::new() };
    let tols = &cfg.tolerances;
    let result: Value = match cfg.kind {
        ExperimentKind::HullCheck => {
            let dom = ctx.domain()?;
            let f = ctx.field(&cfg.fields.f, "")?;
            let tol = tols.verdict.unwrap_or_else(|| default_tolerance(&f, &dom));
            let r = check_hull_property(&f, &dom, tol, &ctx.probes(f.dim()))?;
            ctx.expect("hull-property", r.holds, r.worst_violation, tol, format!("worst node {:?}", r.worst_node));
            json!(r)
        }
        ExperimentKind::HullLike => {
            let dom = ctx.domain()?;
            let f = ctx.field(&cfg.fields.f, "")?;
            let tol = tols.verdict.unwrap_or(4.0 * dom.h());
            let widths = tols.collar_widths.clone().unwrap_or_else(|| default_collar_widths(&dom));
            let r = check_hull_like_property(&f, &dom, &ctx.probes(f.dim()), &widths, tol)?;
            let worst = r
                .traces
                .iter()
                .map(|t| t.interior_sup - t.collar_sups.last().copied().unwrap_or(f64::NAN))
                .fold(f64::NEG_INFINITY, f64::max);
            ctx.expect("hull-like", r.satisfied, worst, tol, format!("{} probes", r.traces.len()));
            json!(r)
        }
        ExperimentKind::Certificate => {
            let dom = ctx.domain()?;
            let f = ctx.field(&cfg.fields.f, "")?;
            let g = ctx.field(&cfg.fields.g, "(0, 0)")?;
            match ctx.certificate(&f, &dom)? {
                None => json!({ "certificate": null }),
                Some(cert) => {
                    let lt = lambda_tilde(&g, &f, &dom, &cert)?;
                    ctx.verdicts.push(Verdict::new(
                        "certificate",
                        true,
                        cert.interior_sup - cert.collar_sup,
                        cert.required_margin,
                        format!("|K| = {}, |X| = {}", cert.core.len(), cert.region.len()),
                    ));
                    let tol = tols.verdict.unwrap_or(4.0 * dom.h());
                    let lambdas = match &cfg.lambdas {
                        Some(l) => l.values()?,
                        None => vec![2.0 * lt + 1.0],
                    };
                    let mut supports = Vec::new();
                    let mut last = None;
                    for &lambda in &lambdas {
                        match verify_supported(&g, &f, lambda, &dom, &cert, tol) {
                            Ok(v) => {
                                ctx.verdicts.push(Verdict::new(
                                    format!("supported(lambda={lambda})"),
                                    v.passed,
                                    v.boundary_distance,
                                    tol,
                                    format!("x_hat = {:?}", v.support_point),
                                ));
                                supports.push(json!(v));
                                last = Some(v);
                            }
                            Err(Error::PreconditionRejected(msg)) => {
                                supports.push(json!({ "lambda": lambda, "skipped": msg }));
                            }
                            Err(e) => return Err(e),
                        }
                    }
                    ctx.svg("certificate.svg", certificate_svg(&dom, &cert, last.as_ref()));
                    json!({ "certificate": cert, "lambda_tilde": lt, "supports": supports })
                }
            }
        }
        ExperimentKind::LambdaSweep => {
            let dom = ctx.domain()?;
            let f = ctx.field(&cfg.fields.f, "")?;
            let g = ctx.field(&cfg.fields.g, "(0, 0)")?;
            let lambdas = cfg.lambdas.as_ref().expect("validated").values()?;
            let (region, lt) = match cfg.region {
                SweepRegion::Interior => (dom.interior().to_vec(), None),
                SweepRegion::Certificate => match ctx.certificate(&f, &dom)? {
                    Some(c) => {
                        let lt = lambda_tilde(&g, &f, &dom, &c)?;
                        (c.region, Some(lt))
                    }
                    None => return Ok(finish(ctx, json!({ "certificate": null }), start)),
                },
            };
            let lip = f.lipschitz_estimate(&sweep_points(&dom, &region));
            let tol_det = tols.det.unwrap_or_else(|| det_tolerance(lip, dom.h()));
            let res = singular_sweep(&g, &f, &dom, &region, &lambdas, tol_det)?;
            match lt {
                Some(lt) => {
                    let above: Vec<_> = res.rows.iter().filter(|r| r.lambda > lt).collect();
                    let missed = above.iter().filter(|r| !r.certified).count();
                    ctx.verdicts.push(Verdict::new(
                        "det-zero-above-threshold",
                        missed == 0,
                        missed as f64,
                        0.0,
                        format!("{} of {} lambdas above lambda~ = {lt}", above.len() - missed, above.len()),
                    ));
                }
                None => {
                    let any = !res.none_certified();
                    // expect = true reads as "the determinant never vanishes"
                    ctx.expect(
                        "det-nonvanishing",
                        !any,
                        res.global_min_abs_det(),
                        tol_det,
                        format!("first certified lambda {:?}", res.first_certified),
                    );
                }
            }
            let mut buf = Vec::new();
            res.write_csv(&mut buf)?;
            ctx.csv("sweep.csv", buf);
            let last = *lambdas.last().expect("nonempty");
            ctx.svg("det_sign.svg", det_sign_svg(&g, &f, &dom, &region, last, tol_det)?);
            json!({ "lambda_tilde": lt, "sweep": res })
        }
        ExperimentKind::Bifurcation => {
            let dom = ctx.domain()?;
            let f = ctx.field(&cfg.fields.f, "")?;
            let g = ctx.field(&cfg.fields.g, "(0, 0)")?;
            match ctx.certificate(&f, &dom)? {
                None => json!({ "certificate": null }),
                Some(cert) => {
                    let lt = lambda_tilde(&g, &f, &dom, &cert)?;
                    let lambda = match &cfg.lambdas {
                        Some(l) => l.values()?[0],
                        None => 2.0 * lt + 1.0,
                    };
                    let tol = tols.verdict.unwrap_or(4.0 * dom.h());
                    let v = verify_supported(&g, &f, lambda, &dom, &cert, tol)?;
                    let b = cfg.bifurcation;
                    let w = bifurcation_scan(&g, &f, &dom, &cert, &v, b.r0, b.levels)?;
                    for lvl in &w.levels {
                        let res = lvl.z.as_ref().map(|z| z.u.residual.max(z.v.residual)).unwrap_or(f64::NAN);
                        let detail = lvl.warning.clone().unwrap_or_else(|| format!("y count {}", lvl.y_count));
                        ctx.verdicts.push(Verdict::new(format!("witness(k={})", lvl.k), lvl.succeeded() && res <= 1e-8, res, 1e-8, detail));
                    }
                    json!({ "lambda_tilde": lt, "support": v, "witness": w })
                }
            }
        }
        ExperimentKind::MaSolve | ExperimentKind::MaVerify => {
            let dom = ctx.domain()?;
            let prob = MAProblem::new(
                dom,
                FieldExpr::parse(cfg.fields.h.as_deref().expect("validated"))?,
                FieldExpr::parse(cfg.fields.boundary.as_deref().expect("validated"))?,
            )?;
            let defaults = MAOptions::default();
            let opts = MAOptions {
                max_iters: tols.max_iters.unwrap_or(defaults.max_iters),
                tol_res: tols.tol_res.unwrap_or(defaults.tol_res),
                jacobi: false,
            };
            let sol = solve_ma(&prob, opts)?;
            let error = match &cfg.fields.exact {
                Some(e) => Some(sol.max_error(&prob.dom.sample(&parse_expr(e)?))),
                None => None,
            };
            ctx.verdicts.push(Verdict::new(
                "converged",
                sol.converged,
                sol.residual,
                10.0 * sol.tol_res,
                format!("{} iterations, min Hessian eigenvalue {:e}", sol.iterations, sol.min_hessian_eigenvalue),
            ));
            let mut buf = Vec::new();
            write_solution_csv(&sol, &prob.dom, &mut buf)?;
            ctx.csv("solution.csv", buf);
            let mut out = json!({ "solution": sol, "max_error": error });
            if cfg.kind == ExperimentKind::MaVerify {
                let scale = max_boundary_gradient(&prob.dom, &sol.u)?;
                let tol = tols.verdict.unwrap_or(4.0 * prob.dom.h() * scale);
                let r = if sol.converged {
                    verify_theorem5(&sol, &prob, tol)?
                } else {
                    gradient_hull_report(&prob.dom, &sol.u, tol)?
                };
                ctx.expect("gradient-hull", r.holds, r.worst_violation, tol, format!("worst point {:?}", r.worst_point));
                out["gradient_hull"] = json!(r);
            }
            out
        }
        ExperimentKind::Transport => {
            let dom = ctx.domain()?;
            let beta = parse_expr(cfg.fields.beta.as_deref().expect("validated"))?;
            let profile = parse_expr(cfg.fields.profile.as_deref().expect("validated"))?;
            match &cfg.fields.alpha {
                Some(alpha) => match make_instance(beta, parse_expr(alpha)?, profile, dom) {
                    Ok(inst) => {
                        let tol = tols.verdict.unwrap_or_else(|| transport::default_tolerance(&inst));
                        let r = check_max_principle(&inst, tol)?;
                        let gap = r.sup_gap.max(r.inf_gap);
                        ctx.expect("max-principle", r.passed, gap, tol, format!("u = {}", inst.u));
                        json!({ "u": inst.u.to_string(), "min_hypothesis": inst.min_hypothesis,
                                "max_residual": inst.max_residual, "report": r })
                    }
                    Err(e @ Error::Hypothesis { .. }) => {
                        ctx.verdicts.push(Verdict::new("hypothesis", false, f64::NAN, transport::HYPOTHESIS_MARGIN, e.to_string()));
                        json!({ "hypothesis_error": e.to_string() })
                    }
                    Err(e) => return Err(e),
                },
                None => {
                    let tol = tols.verdict.unwrap_or(2.0 * dom.h());
                    let r = counterexample_probe(&beta, &profile, &dom, tol)?;
                    ctx.expect("max-principle", !r.fails, r.excess, tol, "no companion; counterexample probe".into());
                    json!(r)
                }
            }
        }
        ExperimentKind::Remark1 => {
            let lambdas = match &cfg.lambdas {
                Some(l) => l.values()?,
                None => vec![0.5, 1.0, 2.0],
            };
            let tol = tols.verdict.unwrap_or(1e-9);
            let reports: Vec<_> = lambdas.iter().map(|&l| remark1_case(l)).collect();
            for r in &reports {
                let err = (r.violation - r.lambda).abs();
                ctx.verdicts.push(Verdict::new(
                    format!("remark1(lambda={})", r.lambda),
                    r.injective && err <= tol,
                    err,
                    tol,
                    format!("injective = {}, violation = {}", r.injective, r.violation),
                ));
            }
            json!(reports)
        }
    };
    Ok(finish(ctx, result, start))
}

fn finish(ctx: Ctx<'_>, result: Value, start: Instant) -> Outcome {
    let Ctx { cfg, scale, verdicts, artifacts } = ctx;
    Outcome {
        report: VerificationReport {
            tool: "hull-lab",
            version: TOOL_VERSION,
            name: cfg.label(),
            config: cfg.clone(),
            grid_scale: scale,
            verdicts,
            result,
            timing: Timing { wall_seconds: start.elapsed().as_secs_f64() },
        },
        artifacts,
    }
}
