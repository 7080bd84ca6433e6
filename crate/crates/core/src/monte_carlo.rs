//! End-to-end block simulator: PPP field, one UE per interfering cell,
//! estimated-channel port selection and both link SINRs.

use crate::channel::{correlation_profile, draw_channel_block, draw_residual_li, select_port, CorrelationProfile};
use crate::error::{Error, Result};
use crate::estimation::{csi_variances, effective_rate_fraction, PilotBudget};
use crate::geometry::{
    port_distance_unchecked, sample_bs_field_with, ue_tx_power_unchecked, window_truncation_fraction,
};
use crate::interference::FieldMoments;
use crate::params::{CsiMode, FluidAntennaGeometry, NetworkParams, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

/// Fewest expected BSs in the window.
const MIN_WINDOW_BS: f64 = 500.0;
/// Largest allowed share of BS interference lost outside the window.
const MAX_TRUNCATION: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub params: NetworkParams,
    pub fa: FluidAntennaGeometry,
    pub budget: PilotBudget,
    pub n_trials: usize,
    pub base_seed: u64,
    pub r_sim: f64,
    pub csi_mode: CsiMode,
}

impl TrialConfig {
    pub fn from_scenario(s: &Scenario) -> Result<Self> {
        s.validate()?;
        let cfg = Self {
            params: s.net.clone(),
            fa: s.fa.clone(),
            budget: PilotBudget::new(&s.net, &s.fa),
            n_trials: s.sim.n_trials,
            base_seed: s.sim.seed,
            r_sim: s.sim.r_sim,
            csi_mode: s.csi,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Window and budget checks; the window must hold enough BSs and lose
    /// under 0.1% of the BS interference at the median contact distance.
    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::Config("n_trials must be at least 1".into()));
        }
        let lam = self.params.lambda_b;
        let expected = lam * PI * self.r_sim * self.r_sim;
        if expected < MIN_WINDOW_BS {
            return Err(Error::Config(format!(
                "window radius {} m holds {expected:.0} BSs on average, need {MIN_WINDOW_BS}",
                self.r_sim
            )));
        }
        let rho_med = (2f64.ln() / (PI * lam)).sqrt();
        let lost = window_truncation_fraction(&self.params, self.r_sim, rho_med);
        if lost >= MAX_TRUNCATION {
            return Err(Error::Config(format!(
                "window radius {} m drops {lost:.1e} of the interference mean",
                self.r_sim
            )));
        }
        if self.csi_mode == CsiMode::Estimated {
            self.budget.check()?;
        }
        Ok(())
    }

    /// Stream seed of one trial; a SplitMix64 finalizer over (seed, index).
    pub fn trial_seed(&self, trial_index: u64) -> u64 {
        let mut z = self
            .base_seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(trial_index.wrapping_add(1).wrapping_mul(0xD1B5_4A32_D192_ED03));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// One simulated coherence block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub sinr_dl: f64,
    pub sinr_ul: f64,
    /// 1-based.
    pub selected_port: usize,
    pub rho: f64,
    pub outage_dl: bool,
    pub outage_ul: bool,
    pub rate_contribution: f64,
    /// Multi-user interference at the selected port and at the serving BS.
    pub i_dl: f64,
    pub i_ul: f64,
}

/// Interference summed over interferers at every port of an FA whose
/// ports sit at offsets `h_i` along the unit vector `axis`. Far
/// interferers enter through a second-order expansion in h/D, exact to
/// (h/D)³; close ones are summed per port.
struct PortSum<'a> {
    a: f64,
    h: &'a [f64],
    h_max: f64,
    axis: [f64; 2],
    m1: f64,
    m2: f64,
    m3: f64,
    s0: f64,
    near: Vec<f64>,
}

impl<'a> PortSum<'a> {
    fn new(a: f64, h: &'a [f64], axis: [f64; 2]) -> Self {
        let h_max = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Self {
            a,
            h,
            h_max,
            axis,
            m1: 0.0,
            m2: 0.0,
            m3: 0.0,
            s0: 0.0,
            near: vec![0.0; h.len()],
        }
    }

    /// Adds an interferer at `z` (relative to the antenna centre) with
    /// received power `gain·|z − p_i|^{−a}`.
    fn add(&mut self, z: [f64; 2], d2: f64, gain: f64) {
        if self.h_max * self.h_max > 1e-8 * d2 {
            for (acc, &hi) in self.near.iter_mut().zip(self.h) {
                let dx = z[0] - hi * self.axis[0];
                let dy = z[1] - hi * self.axis[1];
                *acc += gain * (dx * dx + dy * dy).powf(-0.5 * self.a);
            }
            return;
        }
        let c = gain * d2.powf(-0.5 * self.a);
        let t = z[0] * self.axis[0] + z[1] * self.axis[1];
        self.s0 += c;
        self.m1 += c * t / d2;
        self.m2 += c / d2;
        self.m3 += c * t * t / (d2 * d2);
    }

    fn finish(self) -> Vec<f64> {
        let a = self.a;
        self.h
            .iter()
            .zip(&self.near)
            .map(|(&hi, &near)| {
                near + self.s0 + a * hi * self.m1 + hi * hi * (a * (0.5 * a + 1.0) * self.m3 - 0.5 * a * self.m2)
            })
            .collect()
    }
}

/// Static per-config pieces shared by all trials.
struct Prepared<'a> {
    cfg: &'a TrialConfig,
    profile: CorrelationProfile,
    field: FieldMoments,
    offsets: Vec<f64>,
    prefactor: f64,
    cell_radius: f64,
}

impl<'a> Prepared<'a> {
    fn new(cfg: &'a TrialConfig) -> Result<Self> {
        cfg.validate()?;
        let fa = &cfg.fa;
        let n = fa.n_ports as f64;
        let offsets = (1..=fa.n_ports)
            .map(|i| {
                if fa.n_ports == 1 {
                    0.0
                } else {
                    0.5 * fa.length() * (n - 2.0 * i as f64 + 1.0) / (n - 1.0)
                }
            })
            .collect();
        Ok(Self {
            cfg,
            profile: correlation_profile(fa),
            field: FieldMoments::new(&cfg.params)?,
            offsets,
            prefactor: cfg.params.bc * effective_rate_fraction(&cfg.budget),
            cell_radius: 1.0 / (PI * cfg.params.lambda_b).sqrt(),
        })
    }

    fn run(&self, trial: u64) -> Result<TrialOutcome> {
        let cfg = self.cfg;
        let p = &cfg.params;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.trial_seed(trial));
        let field = sample_bs_field_with(p.lambda_b, cfg.r_sim, &mut rng)?;
        let serving = field.serving()?;
        let xs = field.positions[serving];
        let rho = field.distance(serving);
        // FA axis perpendicular to the serving direction, as in the port geometry
        let axis = if rho > 0.0 {
            [-xs[1] / rho, xs[0] / rho]
        } else {
            [1.0, 0.0]
        };

        let mut dl = PortSum::new(p.a, &self.offsets, axis);
        let mut i_ul = 0.0;
        let fade = |rng: &mut ChaCha8Rng| -> f64 {
            let e: f64 = Exp1.sample(rng);
            p.sigma2 * e
        };
        let (bb2, bu2) = (p.b_b * p.b_b, p.b_u * p.b_u);
        for (k, &x) in field.positions.iter().enumerate() {
            if k == serving {
                continue;
            }
            // BS → typical UE
            let d2 = x[0] * x[0] + x[1] * x[1];
            dl.add(x, d2, p.p_bs * fade(&mut rng));
            // BS → serving BS
            let (ex, ey) = (x[0] - xs[0], x[1] - xs[1]);
            let e2 = ex * ex + ey * ey;
            let g = fade(&mut rng);
            if e2 > bb2 {
                i_ul += p.p_bs * g * e2.powf(-0.5 * p.a);
            }
            // the cell's scheduled UE, uniform in the cell disc
            let rr = self.cell_radius * rng.random::<f64>().sqrt();
            let phi = 2.0 * PI * rng.random::<f64>();
            let y = [x[0] + rr * phi.cos(), x[1] + rr * phi.sin()];
            let pu = if rr > 0.0 { ue_tx_power_unchecked(rr, p) } else { 0.0 };
            let g_dl = fade(&mut rng);
            let g_ul = fade(&mut rng);
            let y2 = y[0] * y[0] + y[1] * y[1];
            if y2 > bu2 {
                dl.add(y, y2, pu * g_dl);
            }
            let (fx, fy) = (y[0] - xs[0], y[1] - xs[1]);
            let f2 = fx * fx + fy * fy;
            if f2 > bu2 {
                i_ul += pu * g_ul * f2.powf(-0.5 * p.a);
            }
        }
        let i_dl = dl.finish();

        let csi = csi_variances(
            p,
            rho,
            &cfg.fa,
            &cfg.budget,
            cfg.csi_mode,
            self.field.dl_ue.mean,
            self.field.ul_bs.mean,
        )?;
        let block = draw_channel_block(
            &self.profile,
            p.sigma2,
            &csi.direct,
            (0.0, 0.0),
            p.mu_nakagami,
            &mut rng,
        )?;
        let amps: Vec<f64> = block.g_hat.iter().map(|g| g.norm()).collect();
        let sel = select_port(&amps);
        let j = sel - 1;
        let r = port_distance_unchecked(rho, sel, &cfg.fa).max(1e-9);
        let path = r.powf(-p.a);
        let pu = ue_tx_power_unchecked(r, p);
        let gain = block.g_hat[j].norm_sqr();
        let li_ue = csi.li_ue[j];
        let li_bs = csi.li_bs;
        let h_ue = draw_residual_li(p.mu_nakagami, li_ue, &mut rng)?;
        let h_bs = draw_residual_li(p.mu_nakagami, li_bs, &mut rng)?;
        let sinr_dl = p.p_bs * path * gain / (i_dl[j] + p.p_bs * path * csi.direct[j] + li_ue * pu * h_ue + p.n0);
        let sinr_ul = pu * path * gain / (i_ul + pu * path * csi.direct[j] + li_bs * p.p_bs * h_bs + p.n0);
        Ok(TrialOutcome {
            trial,
            sinr_dl,
            sinr_ul,
            selected_port: sel,
            rho,
            outage_dl: sinr_dl < p.theta,
            outage_ul: sinr_ul < p.theta,
            rate_contribution: self.prefactor * (sinr_dl.ln_1p() + sinr_ul.ln_1p()) / std::f64::consts::LN_2,
            i_dl: i_dl[j],
            i_ul,
        })
    }
}

/// Simulates one block. An empty window yields `Error::NoServingBs`.
pub fn run_trial(cfg: &TrialConfig, trial_index: u64) -> Result<TrialOutcome> {
    Prepared::new(cfg)?.run(trial_index)
}

/// All trials in index order; trials with an empty window are dropped.
/// Results do not depend on the worker count.
pub fn run_trials(cfg: &TrialConfig) -> Result<Vec<TrialOutcome>> {
    let prep = Prepared::new(cfg)?;
    let results: Vec<Result<TrialOutcome>> = (0..cfg.n_trials as u64).into_par_iter().map(|t| prep.run(t)).collect();
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(o) => out.push(o),
            Err(Error::NoServingBs) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalOutage {
    pub p_dl: f64,
    pub p_ul: f64,
    pub stderr_dl: f64,
    pub stderr_ul: f64,
    pub valid: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalRate {
    pub rate: f64,
    pub stderr: f64,
    pub valid: usize,
}

fn enough(valid: usize, requested: usize) -> Result<()> {
    // at least 95% of requested trials and never fewer than 100
    if valid < 100 || (valid as f64) < 0.95 * requested as f64 {
        return Err(Error::TooFewTrials { valid, requested });
    }
    Ok(())
}

/// Outage fractions at `theta` with binomial standard errors.
pub fn outage_from_trials(trials: &[TrialOutcome], theta: f64, requested: usize) -> Result<EmpiricalOutage> {
    enough(trials.len(), requested)?;
    let n = trials.len() as f64;
    let p_dl = trials.iter().filter(|t| t.sinr_dl < theta).count() as f64 / n;
    let p_ul = trials.iter().filter(|t| t.sinr_ul < theta).count() as f64 / n;
    Ok(EmpiricalOutage {
        p_dl,
        p_ul,
        stderr_dl: (p_dl * (1.0 - p_dl) / n).sqrt(),
        stderr_ul: (p_ul * (1.0 - p_ul) / n).sqrt(),
        valid: trials.len(),
    })
}

pub fn rate_from_trials(trials: &[TrialOutcome], requested: usize) -> Result<EmpiricalRate> {
    enough(trials.len(), requested)?;
    let n = trials.len() as f64;
    let mean = trials.iter().map(|t| t.rate_contribution).sum::<f64>() / n;
    let var = trials.iter().map(|t| (t.rate_contribution - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(EmpiricalRate {
        rate: mean,
        stderr: (var / n).sqrt(),
        valid: trials.len(),
    })
}

pub fn empirical_outage(cfg: &TrialConfig, theta: f64) -> Result<EmpiricalOutage> {
    outage_from_trials(&run_trials(cfg)?, theta, cfg.n_trials)
}

pub fn empirical_sum_rate(cfg: &TrialConfig) -> Result<EmpiricalRate> {
    rate_from_trials(&run_trials(cfg)?, cfg.n_trials)
}

/// Raw trial dump, one comma-separated record per trial under a header:
/// trial, rho_m, selected_port, sinr_dl, sinr_ul, i_dl_w, i_ul_w,
/// outage_dl, outage_ul, rate_bps.
pub fn write_trials<W: Write>(mut out: W, trials: &[TrialOutcome]) -> std::io::Result<()> {
    writeln!(
        out,
        "trial,rho_m,selected_port,sinr_dl,sinr_ul,i_dl_w,i_ul_w,outage_dl,outage_ul,rate_bps"
    )?;
    for t in trials {
        writeln!(
            out,
            "{},{:e},{},{:e},{:e},{:e},{:e},{},{},{:e}",
            t.trial,
            t.rho,
            t.selected_port,
            t.sinr_dl,
            t.sinr_ul,
            t.i_dl,
            t.i_ul,
            u8::from(t.outage_dl),
            u8::from(t.outage_ul),
            t.rate_contribution
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn port_sum_expansion_matches_direct() {
        let h = [-3e-4, -1e-4, 0.0, 2e-4, 3e-4];
        let axis = [0.6, 0.8];
        let pts = [[3.0, -4.0], [120.0, 7.5], [-0.02, 0.01], [1.5, 1.0]];
        let mut s = PortSum::new(4.0, &h, axis);
        for z in pts {
            s.add(z, z[0] * z[0] + z[1] * z[1], 2.0);
        }
        let got = s.finish();
        for (i, &hi) in h.iter().enumerate() {
            let want: f64 = pts
                .iter()
                .map(|z| 2.0 * ((z[0] - hi * axis[0]).powi(2) + (z[1] - hi * axis[1]).powi(2)).powf(-2.0))
                .sum();
            assert!((got[i] / want - 1.0).abs() < 1e-12, "{} {}", got[i], want);
        }
    }

    #[test]
    fn seeds_differ_and_repeat() {
        let cfg = TrialConfig::from_scenario(&Scenario::default()).unwrap();
        assert_ne!(cfg.trial_seed(0), cfg.trial_seed(1));
        assert_eq!(cfg.trial_seed(9), cfg.trial_seed(9));
        assert_eq!(run_trial(&cfg, 4).unwrap(), run_trial(&cfg, 4).unwrap());
    }
}
