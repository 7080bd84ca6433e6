//! Pilot budget and LMMSE error variances of the direct and
//! loop-interference links.

use crate::error::{domain, Error, Result};
use crate::geometry::{port_distance_unchecked, switching_channel_uses, ue_tx_power_unchecked};
use crate::interference::{campbell_mean_draw, mean_dl_bs_at, mean_dl_ue, mean_ul_bs, InterferenceClass, McEstimate};
use crate::params::{CsiMode, FluidAntennaGeometry, NetworkParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Channel-use bookkeeping of one coherence block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotBudget {
    pub lc: f64,
    pub le: f64,
    pub ld: f64,
    pub l_li: f64,
    pub lt: f64,
    /// Switching overhead, real-valued.
    pub l_s: f64,
    /// Direct-link pilots per port, floor((Ld − ceil(l_s))/N); may be < 1.
    pub lambda: i64,
    pub lambda_b: i64,
    pub lambda_u: i64,
}

impl PilotBudget {
    pub fn new(p: &NetworkParams, fa: &FluidAntennaGeometry) -> Self {
        let l_s = switching_channel_uses(fa, p.bc);
        let ld = p.ld();
        let lambda = ((ld - l_s.ceil()) / fa.n_ports as f64).floor() as i64;
        let lambda_b = (p.w_split * p.l_li).round() as i64;
        let lambda_u = p.l_li.round() as i64 - lambda_b;
        let lc = p.coherence_uses();
        Self {
            lc,
            le: p.le,
            ld,
            l_li: p.l_li,
            lt: lc - p.le,
            l_s,
            lambda,
            lambda_b,
            lambda_u,
        }
    }

    /// Direct-link pilots suffice for every port.
    pub fn direct_feasible(&self) -> bool {
        self.lambda >= 1
    }

    pub fn is_feasible(&self) -> bool {
        self.direct_feasible() && self.lambda_b >= 1 && self.lambda_u >= 1 && self.lt >= 0.0
    }

    pub fn check(&self) -> Result<()> {
        if !self.direct_feasible() {
            return Err(Error::PilotBudget(format!(
                "Ld = {} leaves {} pilots per port after {:.2} switching uses",
                self.ld, self.lambda, self.l_s
            )));
        }
        if self.lambda_b < 1 || self.lambda_u < 1 {
            return Err(Error::PilotBudget(format!(
                "LI pilots split into {} (BS) and {} (UE)",
                self.lambda_b, self.lambda_u
            )));
        }
        if self.lt < 0.0 {
            return Err(Error::PilotBudget("Le exceeds Lc".into()));
        }
        Ok(())
    }
}

fn lmmse(prior: f64, gain: f64, noise: f64) -> f64 {
    if gain <= 0.0 {
        return prior;
    }
    prior / (1.0 + gain * prior / noise)
}

/// σ²_{e_i}: error variance of the direct link at port `i`.
pub fn direct_ce_variance(
    p: &NetworkParams,
    rho: f64,
    i: usize,
    fa: &FluidAntennaGeometry,
    budget: &PilotBudget,
) -> Result<f64> {
    if !budget.direct_feasible() {
        return Err(Error::PilotBudget(format!("{} pilots per port", budget.lambda)));
    }
    if i == 0 || i > fa.n_ports {
        return Err(domain("direct_ce_variance", format!("port {i}")));
    }
    let r = port_distance_unchecked(rho, i, fa);
    Ok(direct_ce_variance_at(p, r, budget.lambda as f64))
}

pub(crate) fn direct_ce_variance_at(p: &NetworkParams, r: f64, lambda: f64) -> f64 {
    let gain = lambda * p.p_bs * r.powf(-p.a);
    lmmse(p.sigma2, gain, p.n0 + mean_dl_bs_at(p, r))
}

/// σ²_{e_LI^u}: LI-link error variance at the UE.
pub fn li_ce_variance_ue(
    p: &NetworkParams,
    rho: f64,
    i: usize,
    fa: &FluidAntennaGeometry,
    budget: &PilotBudget,
) -> Result<f64> {
    if budget.lambda_u < 1 {
        return Err(Error::PilotBudget(format!("Λ_u = {}", budget.lambda_u)));
    }
    if i == 0 || i > fa.n_ports {
        return Err(domain("li_ce_variance_ue", format!("port {i}")));
    }
    let r = port_distance_unchecked(rho, i, fa);
    li_ce_variance_ue_at(p, r, budget.lambda_u as f64, mean_dl_ue(p)?)
}

pub(crate) fn li_ce_variance_ue_at(p: &NetworkParams, r: f64, lambda_u: f64, i_dl_ue: f64) -> Result<f64> {
    let pu = if r > 0.0 { ue_tx_power_unchecked(r, p) } else { 0.0 };
    Ok(lmmse(1.0, lambda_u * pu * p.v_li, p.n0 + i_dl_ue))
}

/// σ²_{e_LI^b}: LI-link error variance at the BS.
pub fn li_ce_variance_bs(p: &NetworkParams, _rho: f64, budget: &PilotBudget) -> Result<f64> {
    if budget.lambda_b < 1 {
        return Err(Error::PilotBudget(format!("Λ_b = {}", budget.lambda_b)));
    }
    Ok(lmmse(
        1.0,
        budget.lambda_b as f64 * p.p_bs * p.v_li,
        p.n0 + mean_ul_bs(p)?,
    ))
}

/// Fraction of the block left for data, 1 − Le/Lc.
pub fn effective_rate_fraction(budget: &PilotBudget) -> f64 {
    (1.0 - budget.le / budget.lc).clamp(0.0, 1.0)
}

/// All error variances needed at one ρ.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiVariances {
    pub direct: Vec<f64>,
    pub li_ue: Vec<f64>,
    pub li_bs: f64,
}

/// Error variances per port; zeros in perfect-CSI mode.
pub fn csi_variances(
    p: &NetworkParams,
    rho: f64,
    fa: &FluidAntennaGeometry,
    budget: &PilotBudget,
    csi: CsiMode,
    i_dl_ue: f64,
    i_ul_bs: f64,
) -> Result<CsiVariances> {
    let n = fa.n_ports;
    if csi == CsiMode::Perfect {
        return Ok(CsiVariances {
            direct: vec![0.0; n],
            li_ue: vec![0.0; n],
            li_bs: 0.0,
        });
    }
    budget.check()?;
    let mut direct = Vec::with_capacity(n);
    let mut li_ue = Vec::with_capacity(n);
    for i in 1..=n {
        let r = port_distance_unchecked(rho, i, fa);
        direct.push(direct_ce_variance_at(p, r, budget.lambda as f64));
        li_ue.push(li_ce_variance_ue_at(p, r, budget.lambda_u as f64, i_dl_ue)?);
    }
    let li_bs = lmmse(1.0, budget.lambda_b as f64 * p.p_bs * p.v_li, p.n0 + i_ul_bs);
    Ok(CsiVariances { direct, li_ue, li_bs })
}

/// Which pilot link to simulate in [`pilot_mse_oracle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PilotLink {
    Direct,
    LiUe,
    LiBs,
}

/// Empirical MSE of the LMMSE estimate from simulated despread pilots
/// ỹ = √(pilot energy)·h + w, where w has variance N₀ plus an interference
/// power drawn per block from the matching interferer class and the
/// estimator uses the interference mean.
#[allow(clippy::too_many_arguments)]
pub fn pilot_mse_oracle(
    p: &NetworkParams,
    rho: f64,
    i: usize,
    fa: &FluidAntennaGeometry,
    budget: &PilotBudget,
    link: PilotLink,
    n_blocks: usize,
    seed: u64,
) -> Result<McEstimate> {
    budget.check()?;
    if i == 0 || i > fa.n_ports {
        return Err(domain("pilot_mse_oracle", format!("port {i}")));
    }
    let r = port_distance_unchecked(rho, i, fa);
    let (prior, energy, class, i_mean) = match link {
        PilotLink::Direct => (
            p.sigma2,
            budget.lambda as f64 * p.p_bs * r.powf(-p.a),
            InterferenceClass::DlBs,
            mean_dl_bs_at(p, r),
        ),
        PilotLink::LiUe => (
            1.0,
            budget.lambda_u as f64 * ue_tx_power_unchecked(r, p) * p.v_li,
            InterferenceClass::DlUe,
            mean_dl_ue(p)?,
        ),
        PilotLink::LiBs => (
            1.0,
            budget.lambda_b as f64 * p.p_bs * p.v_li,
            InterferenceClass::UlBs,
            mean_ul_bs(p)?,
        ),
    };
    let noise_mean = p.n0 + i_mean;
    let coef = energy.sqrt() * prior / (energy * prior + noise_mean);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cn = |rng: &mut ChaCha8Rng, var: f64| {
        let s = (var / 2.0).sqrt();
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        (re * s, im * s)
    };
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for _ in 0..n_blocks {
        let ib = campbell_mean_draw(class, p, rho, &mut rng);
        let h = cn(&mut rng, prior);
        let w = cn(&mut rng, p.n0 + ib);
        let y = (energy.sqrt() * h.0 + w.0, energy.sqrt() * h.1 + w.1);
        let e = (h.0 - coef * y.0, h.1 - coef * y.1);
        let m = e.0 * e.0 + e.1 * e.1;
        sum += m;
        sum2 += m * m;
    }
    let n = n_blocks as f64;
    let mean = sum / n;
    let var = (sum2 / n - mean * mean) * n / (n - 1.0);
    Ok(McEstimate {
        value: mean,
        stderr: (var / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Scenario;

    #[test]
    fn budget_defaults() {
        let s = Scenario::default();
        let b = PilotBudget::new(&s.net, &s.fa);
        assert_eq!(b.ld, 96.0);
        assert_eq!(b.lambda, ((96.0 - 42.0) / 15.0f64).floor() as i64);
        assert_eq!((b.lambda_b, b.lambda_u), (2, 2));
        assert!(b.is_feasible());
        let b1 = PilotBudget::new(&s.net, &s.fa.with_ports(1));
        assert_eq!(b1.l_s, 0.0);
        assert_eq!(b1.lambda, 96);
    }

    #[test]
    fn variance_limits() {
        let s = Scenario::default();
        let mut b = PilotBudget::new(&s.net, &s.fa);
        let v = direct_ce_variance(&s.net, 50.0, 3, &s.fa, &b).unwrap();
        assert!(v > 0.0 && v <= 1.0);
        b.lambda = 1_000_000_000;
        assert!(direct_ce_variance(&s.net, 50.0, 3, &s.fa, &b).unwrap() < 1e-6);
        let mut p = s.net.clone();
        p.p_bs = 0.0;
        assert_eq!(direct_ce_variance(&p, 50.0, 3, &s.fa, &b).unwrap(), 1.0);
        b.lambda = 0;
        assert!(matches!(
            direct_ce_variance(&s.net, 50.0, 3, &s.fa, &b),
            Err(Error::PilotBudget(_))
        ));
        let mut b = PilotBudget::new(&s.net, &s.fa);
        b.lambda_u = 0;
        assert!(li_ce_variance_ue(&s.net, 50.0, 1, &s.fa, &b).is_err());
    }

    #[test]
    fn rate_fraction() {
        let s = Scenario::default();
        let mut b = PilotBudget::new(&s.net, &s.fa);
        b.le = 0.0;
        assert_eq!(effective_rate_fraction(&b), 1.0);
        b.le = b.lc;
        assert_eq!(effective_rate_fraction(&b), 0.0);
    }
}
