//! Parameter sweeps over the engines, cross-engine comparison and the
//! CSV/JSON output of a curve.

use crate::analysis::{EngineKind, Evaluator};
use crate::error::{Error, Result};
use crate::estimation::PilotBudget;
use crate::interference::Direction;
use crate::monte_carlo::{outage_from_trials, rate_from_trials, run_trials, TrialConfig};
use crate::params::{db_to_linear, dbm_to_watts, CsiMode, Scenario};
use crate::quadrature::QuadratureSpec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Swept quantity. Grid values use the config units: P in dBm, theta in
/// dB, delta_phi in V, lambda_b in BS/m², the rest dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    P,
    N,
    #[serde(rename = "lambda_b")]
    LambdaB,
    Le,
    #[serde(rename = "kappa")]
    Kappa,
    #[serde(rename = "epsilon")]
    Epsilon,
    #[serde(rename = "delta_phi")]
    DeltaPhi,
    #[serde(rename = "theta")]
    Theta,
}

impl SweepVariable {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "P" => Self::P,
            "N" => Self::N,
            "lambda_b" => Self::LambdaB,
            "Le" => Self::Le,
            "kappa" => Self::Kappa,
            "epsilon" => Self::Epsilon,
            "delta_phi" => Self::DeltaPhi,
            "theta" => Self::Theta,
            _ => return Err(Error::Config(format!("unknown sweep variable {s:?}"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::P => "P",
            Self::N => "N",
            Self::LambdaB => "lambda_b",
            Self::Le => "Le",
            Self::Kappa => "kappa",
            Self::Epsilon => "epsilon",
            Self::DeltaPhi => "delta_phi",
            Self::Theta => "theta",
        }
    }

    /// `base` with this variable set to `x`. A density change rescales the
    /// simulation window so the expected BS count stays fixed.
    pub fn apply(self, base: &Scenario, x: f64) -> Result<Scenario> {
        let mut s = base.clone();
        match self {
            Self::P => s.net.p_bs = dbm_to_watts(x),
            Self::N => {
                if !(x >= 1.0 && x.fract() == 0.0) {
                    return Err(Error::Config(format!("N = {x} is not a positive integer")));
                }
                s.fa.n_ports = x as usize;
            }
            Self::LambdaB => {
                s.sim.r_sim = base.sim.r_sim * (base.net.lambda_b / x).sqrt();
                s.net.lambda_b = x;
            }
            Self::Le => s.net.le = x,
            Self::Kappa => s.fa.kappa = x,
            Self::Epsilon => s.net.epsilon = x,
            Self::DeltaPhi => s.fa.delta_phi = x,
            Self::Theta => s.net.theta = db_to_linear(x),
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    AnalyticExact,
    AnalyticMean,
    MonteCarlo,
}

impl Engine {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "analytic_exact" => Self::AnalyticExact,
            "analytic_mean" => Self::AnalyticMean,
            "monte_carlo" => Self::MonteCarlo,
            _ => return Err(Error::Config(format!("unknown engine {s:?}"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::AnalyticExact => "analytic_exact",
            Self::AnalyticMean => "analytic_mean",
            Self::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub grid: Vec<f64>,
    pub engines: Vec<Engine>,
    /// CSV path; the JSON provenance goes next to it.
    pub output_path: Option<PathBuf>,
    /// Also compute the average sum rate (costly for the analytic engines).
    pub with_rate: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.grid.is_empty() {
            problems.push("sweep grid is empty".to_string());
        }
        if self.engines.is_empty() {
            problems.push("no engine selected".to_string());
        }
        if self.grid.iter().any(|x| !x.is_finite()) {
            problems.push("sweep grid has a non-finite value".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

/// One engine at one abscissa. Errors are standard errors for the
/// simulator and quadrature error estimates for the analytic engines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineValues {
    pub engine: Engine,
    pub p_dl: f64,
    pub p_ul: f64,
    pub rate: Option<f64>,
    pub err_dl: f64,
    pub err_ul: f64,
    pub err_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    /// False when the direct-link pilots per port fall below one.
    pub feasible: bool,
    pub values: Vec<EngineValues>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub variable: SweepVariable,
    pub engines: Vec<Engine>,
    pub config: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfCurve {
    pub points: Vec<CurvePoint>,
    pub provenance: Provenance,
}

impl PerfCurve {
    pub fn abscissa(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    /// Values of one engine at every feasible point, with their abscissae.
    pub fn series(&self, engine: Engine) -> Vec<(f64, EngineValues)> {
        self.points
            .iter()
            .filter(|p| p.feasible)
            .filter_map(|p| p.values.iter().find(|v| v.engine == engine).map(|v| (p.x, *v)))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "{},feasible,engine,p_dl,p_ul,rate_bps,err_dl,err_ul,err_rate\n",
            self.provenance.variable.name()
        );
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for p in &self.points {
            if p.values.is_empty() {
                let _ = writeln!(s, "{},{},,,,,,,", p.x, p.feasible);
            }
            for v in &p.values {
                let _ = writeln!(
                    s,
                    "{},{},{},{:e},{:e},{},{:e},{:e},{}",
                    p.x,
                    p.feasible,
                    v.engine.name(),
                    v.p_dl,
                    v.p_ul,
                    opt(v.rate),
                    v.err_dl,
                    v.err_ul,
                    opt(v.err_rate)
                );
            }
        }
        s
    }

    /// Writes the CSV and a `.json` provenance sidecar.
    pub fn write(&self, csv_path: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::Config(format!("{}: {e}", csv_path.display()));
        std::fs::write(csv_path, self.to_csv()).map_err(io)?;
        let json = serde_json::to_string_pretty(&self.provenance).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(csv_path.with_extension("json"), json + "\n").map_err(io)?;
        Ok(())
    }
}

/// A grid point is infeasible iff estimated CSI leaves fewer than one
/// direct-link pilot per port.
pub fn is_feasible(s: &Scenario) -> bool {
    s.csi == CsiMode::Perfect || PilotBudget::new(&s.net, &s.fa).direct_feasible()
}

/// Evaluates one engine at one scenario.
pub fn evaluate(s: &Scenario, engine: Engine, quad: QuadratureSpec, with_rate: bool) -> Result<EngineValues> {
    match engine {
        Engine::MonteCarlo => {
            let cfg = TrialConfig::from_scenario(s)?;
            let trials = run_trials(&cfg)?;
            let o = outage_from_trials(&trials, s.net.theta, cfg.n_trials)?;
            let r = rate_from_trials(&trials, cfg.n_trials)?;
            Ok(EngineValues {
                engine,
                p_dl: o.p_dl,
                p_ul: o.p_ul,
                rate: with_rate.then_some(r.rate),
                err_dl: o.stderr_dl,
                err_ul: o.stderr_ul,
                err_rate: with_rate.then_some(r.stderr),
            })
        }
        Engine::AnalyticExact | Engine::AnalyticMean => {
            let kind = if engine == Engine::AnalyticExact {
                EngineKind::ExactGamma
            } else {
                EngineKind::MeanApprox
            };
            let ev = Evaluator::new(s, quad)?;
            let dl = ev.outage_curve(Direction::Dl, &[s.net.theta], kind)?[0];
            let ul = ev.outage_curve(Direction::Ul, &[s.net.theta], kind)?[0];
            let rate = if with_rate {
                Some(ev.average_sum_rate(kind)?)
            } else {
                None
            };
            Ok(EngineValues {
                engine,
                p_dl: dl.value,
                p_ul: ul.value,
                rate: rate.map(|r| r.rate),
                err_dl: dl.quadrature_error_estimate,
                err_ul: ul.quadrature_error_estimate,
                err_rate: rate.map(|r| r.tail_bound),
            })
        }
    }
}

/// Runs every engine at every grid point. Points run in parallel and
/// come back in grid order.
pub fn run_sweep(spec: &SweepSpec, config: &Scenario, quad: QuadratureSpec) -> Result<PerfCurve> {
    spec.validate()?;
    config.validate()?;
    // every grid point must form a valid scenario before any compute
    let mut problems = Vec::new();
    let scenarios: Vec<Option<Scenario>> = spec
        .grid
        .iter()
        .map(|&x| match spec.variable.apply(config, x) {
            Ok(s) => {
                problems.extend(
                    s.violations()
                        .into_iter()
                        .map(|v| format!("{} = {x}: {v}", spec.variable.name())),
                );
                Some(s)
            }
            Err(e) => {
                problems.push(e.to_string());
                None
            }
        })
        .collect();
    if !problems.is_empty() {
        return Err(Error::Config(problems.join("; ")));
    }
    let points: Vec<Result<CurvePoint>> = spec
        .grid
        .par_iter()
        .zip(scenarios.par_iter())
        .map(|(&x, s)| {
            let s = s.as_ref().expect("checked above");
            if !is_feasible(s) {
                log::info!(
                    "{} = {x}: fewer than one pilot per port, marked infeasible",
                    spec.variable.name()
                );
                return Ok(CurvePoint {
                    x,
                    feasible: false,
                    values: Vec::new(),
                });
            }
            let values = spec
                .engines
                .iter()
                .map(|&e| evaluate(s, e, quad, spec.with_rate))
                .collect::<Result<Vec<_>>>()?;
            Ok(CurvePoint {
                x,
                feasible: true,
                values,
            })
        })
        .collect();
    let curve = PerfCurve {
        points: points.into_iter().collect::<Result<Vec<_>>>()?,
        provenance: Provenance {
            config_hash: config.config_hash(),
            seed: config.sim.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            variable: spec.variable,
            engines: spec.engines.clone(),
            config: config.to_config_text(),
        },
    };
    if let Some(path) = &spec.output_path {
        curve.write(path)?;
    }
    Ok(curve)
}

/// Declared cross-engine tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Absolute outage gap allowed between the exact analysis and the
    /// simulator, widened to three simulator standard errors.
    pub outage_abs: f64,
    pub outage_sigmas: f64,
    /// Relative rate gap, checked only when set.
    pub rate_rel: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            outage_abs: 0.02,
            outage_sigmas: 3.0,
            rate_rel: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub x: f64,
    pub metric: String,
    pub engine_a: Engine,
    pub engine_b: Engine,
    pub value_a: f64,
    pub value_b: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
    /// `None` in documentation mode.
    pub tolerance: Option<f64>,
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<GapRow>,
    pub max_outage_gap: f64,
    pub pass: bool,
}

impl ComparisonReport {
    pub fn to_text(&self) -> String {
        let mut s = String::from("x\tmetric\tengines\ta\tb\tabs_gap\trel_gap\ttol\tverdict\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{}\t{}\t{} vs {}\t{:.5}\t{:.5}\t{:.5}\t{:.4}\t{}\t{}",
                r.x,
                r.metric,
                r.engine_a.name(),
                r.engine_b.name(),
                r.value_a,
                r.value_b,
                r.abs_gap,
                r.rel_gap,
                r.tolerance.map(|t| format!("{t:.4}")).unwrap_or_else(|| "-".into()),
                match r.pass {
                    Some(true) => "pass",
                    Some(false) => "FAIL",
                    None => "info",
                }
            );
        }
        let _ = writeln!(
            s,
            "max outage gap {:.5}: {}",
            self.max_outage_gap,
            if self.pass { "PASS" } else { "FAIL" }
        );
        s
    }
}

/// Pairwise gaps between all engines in `curve`. Only the exact analysis
/// against the simulator is judged; other pairs are reported as is.
pub fn compare_engines(curve: &PerfCurve, tol: Tolerances) -> Result<ComparisonReport> {
    let engines = &curve.provenance.engines;
    if engines.len() < 2 {
        return Err(Error::Config("comparison needs at least two engines".into()));
    }
    let mut rows = Vec::new();
    let mut max_gap = 0.0f64;
    let mut pass = true;
    for p in curve.points.iter().filter(|p| p.feasible) {
        if p.values.len() != engines.len() {
            return Err(Error::Config(format!("point {} lacks some engines", p.x)));
        }
        for i in 0..p.values.len() {
            for j in i + 1..p.values.len() {
                let (a, b) = (p.values[i], p.values[j]);
                let judged = matches!(
                    (a.engine, b.engine),
                    (Engine::AnalyticExact, Engine::MonteCarlo) | (Engine::MonteCarlo, Engine::AnalyticExact)
                );
                let mc = if a.engine == Engine::MonteCarlo { a } else { b };
                let mut push = |metric: &str, va: f64, vb: f64, se: f64, rel_tol: Option<f64>| {
                    let gap = (va - vb).abs();
                    let rel = gap / va.abs().max(vb.abs()).max(1e-300);
                    let tolerance = if !judged {
                        None
                    } else if let Some(t) = rel_tol {
                        Some(t * va.abs().max(vb.abs()))
                    } else if metric.starts_with("p_") {
                        Some(tol.outage_abs.max(tol.outage_sigmas * se))
                    } else {
                        None
                    };
                    let ok = tolerance.map(|t| gap <= t);
                    if ok == Some(false) {
                        pass = false;
                    }
                    if metric.starts_with("p_") {
                        max_gap = max_gap.max(gap);
                    }
                    rows.push(GapRow {
                        x: p.x,
                        metric: metric.to_string(),
                        engine_a: a.engine,
                        engine_b: b.engine,
                        value_a: va,
                        value_b: vb,
                        abs_gap: gap,
                        rel_gap: rel,
                        tolerance,
                        pass: ok,
                    });
                };
                push("p_dl", a.p_dl, b.p_dl, mc.err_dl, None);
                push("p_ul", a.p_ul, b.p_ul, mc.err_ul, None);
                if let (Some(ra), Some(rb)) = (a.rate, b.rate) {
                    push("rate", ra, rb, 0.0, tol.rate_rel);
                }
            }
        }
    }
    Ok(ComparisonReport {
        rows,
        max_outage_gap: max_gap,
        pass,
    })
}
