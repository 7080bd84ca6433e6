use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use fafd::estimation::{
    direct_ce_variance, li_ce_variance_bs, li_ce_variance_ue, pilot_mse_oracle, PilotBudget, PilotLink,
};
use fafd::interference::{
    mean_dl_bs_at, mean_dl_ue, mean_ul_bs, mean_ul_ue, shot_noise_oracle, var_dl_bs_at, var_dl_ue, var_ul_bs,
    var_ul_ue, InterferenceClass,
};
use fafd::params::Scenario;
use fafd::quadrature::QuadratureSpec;
use fafd::sweep::{compare_engines, run_sweep, Engine, SweepSpec, SweepVariable, Tolerances};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "fafd",
    version,
    about = "Outage and sum-rate sweeps for fluid-antenna full-duplex networks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML config layered over the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// key=value override applied last, e.g. --set P=30dBm (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> anyhow::Result<Scenario> {
        let text = match &self.config {
            Some(p) => Some(std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?),
            None => None,
        };
        Scenario::layered(text.as_deref(), &self.overrides)
            .map_err(|v| anyhow!("invalid configuration:\n  {}", v.join("\n  ")))
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// P, N, lambda_b, Le, kappa, epsilon, delta_phi or theta.
    #[arg(long)]
    variable: String,
    /// Comma list (0,10,20) or start:step:stop (0:10:50).
    #[arg(long)]
    grid: String,
    /// Comma list of analytic_exact, analytic_mean, monte_carlo.
    #[arg(long)]
    engines: Option<String>,
    /// CSV output; a JSON provenance file is written beside it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip the average sum rate.
    #[arg(long)]
    no_rate: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a parameter sweep and write CSV plus provenance.
    Sweep(SweepArgs),
    /// Sweep with several engines and judge the gaps; exits 1 on failure.
    Compare {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Also judge rate gaps at this relative tolerance.
        #[arg(long)]
        rate_tol: Option<f64>,
    },
    /// Print the default configuration.
    Defaults,
    /// Check a configuration and list every violation.
    ValidateConfig(ConfigArgs),
    /// Run the interference and pilot-estimation oracles.
    Oracle {
        #[command(flatten)]
        config: ConfigArgs,
        /// Contact distance used for the ρ-dependent quantities, m.
        #[arg(long, default_value_t = 50.0)]
        rho: f64,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
    },
}

fn parse_grid(s: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let [a, h, b] = [parts[0], parts[1], parts[2]].map(|t| t.trim().parse::<f64>());
        let (a, h, b) = (a?, h?, b?);
        if h.is_nan() || h <= 0.0 || b < a {
            bail!("grid {s:?} needs a positive step and start <= stop");
        }
        let n = ((b - a) / h + 1e-9).floor() as usize;
        return Ok((0..=n).map(|k| a + k as f64 * h).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("grid value {t:?}")))
        .collect()
}

fn build_spec(a: &SweepArgs, default_engines: &str) -> anyhow::Result<SweepSpec> {
    let engines = a
        .engines
        .as_deref()
        .unwrap_or(default_engines)
        .split(',')
        .filter(|e| !e.trim().is_empty())
        .map(|e| Engine::parse(e.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepSpec {
        variable: SweepVariable::parse(&a.variable)?,
        grid: parse_grid(&a.grid)?,
        engines,
        output_path: a.out.clone(),
        with_rate: !a.no_rate,
    })
}

fn oracle(s: &Scenario, rho: f64, samples: usize) -> anyhow::Result<()> {
    let p = &s.net;
    println!("interference (rho = {rho} m, {samples} samples)");
    println!("class   mean_closed   mean_mc       rel_gap   var_closed    var_mc");
    for c in InterferenceClass::ALL {
        let (m, v) = match c {
            InterferenceClass::DlBs => (mean_dl_bs_at(p, rho), var_dl_bs_at(p, rho)),
            InterferenceClass::DlUe => (mean_dl_ue(p)?, var_dl_ue(p)?),
            InterferenceClass::UlBs => (mean_ul_bs(p)?, var_ul_bs(p)?),
            InterferenceClass::UlUe => (mean_ul_ue(p)?, var_ul_ue(p)?),
        };
        let (em, ev) = shot_noise_oracle(c, p, rho, samples, s.sim.seed)?;
        println!(
            "{:7} {m:<13.5e} {:<13.5e} {:<9.4} {v:<13.5e} {:.5e}",
            c.name(),
            em.value,
            (em.value - m).abs() / m,
            ev.value
        );
    }
    let b = PilotBudget::new(p, &s.fa);
    let port = s.fa.n_ports.div_ceil(2);
    println!("pilot estimation (port {port})");
    println!("link    closed        simulated     z");
    for (link, v) in [
        (PilotLink::Direct, direct_ce_variance(p, rho, port, &s.fa, &b)?),
        (PilotLink::LiUe, li_ce_variance_ue(p, rho, port, &s.fa, &b)?),
        (PilotLink::LiBs, li_ce_variance_bs(p, rho, &b)?),
    ] {
        let o = pilot_mse_oracle(p, rho, port, &s.fa, &b, link, samples, s.sim.seed)?;
        println!(
            "{:7} {v:<13.5e} {:<13.5e} {:.2}",
            format!("{link:?}"),
            o.value,
            (o.value - v) / o.stderr
        );
    }
    Ok(())
}

fn run() -> anyhow::Result<ExitCode> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let quad = QuadratureSpec::default();
    match cli.cmd {
        Cmd::Sweep(a) => {
            let spec = build_spec(&a, "analytic_exact")?;
            let curve = run_sweep(&spec, &a.config.load()?, quad)?;
            if spec.output_path.is_none() {
                print!("{}", curve.to_csv());
            }
        }
        Cmd::Compare { sweep, rate_tol } => {
            let spec = build_spec(&sweep, "analytic_exact,monte_carlo")?;
            let curve = run_sweep(&spec, &sweep.config.load()?, quad)?;
            let tol = Tolerances {
                rate_rel: rate_tol,
                ..Tolerances::default()
            };
            let report = compare_engines(&curve, tol)?;
            print!("{}", report.to_text());
            if !report.pass {
                return Ok(ExitCode::FAILURE);
            }
        }
        Cmd::Defaults => print!("{}", Scenario::default().to_config_text()),
        Cmd::ValidateConfig(c) => match c.load() {
            Ok(s) => println!("ok (config hash {})", s.config_hash()),
            Err(e) => {
                eprintln!("{e}");
                return Ok(ExitCode::FAILURE);
            }
        },
        Cmd::Oracle { config, rho, samples } => oracle(&config.load()?, rho, samples)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
