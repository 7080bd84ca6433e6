//! Spatially correlated per-port fading, estimated channels and residual
//! loop-interference gains for one coherence block.

use crate::error::{domain, Result};
use crate::params::{FluidAntennaGeometry, SelectionLaw};
use crate::special::j0_unchecked;
use nalgebra::Complex;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub type C64 = Complex<f64>;

/// Autocorrelation of each port with port 1; `mu[0] = 0` by convention.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationProfile {
    pub mu: Vec<f64>,
}

impl CorrelationProfile {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }
}

pub fn correlation_profile(fa: &FluidAntennaGeometry) -> CorrelationProfile {
    let n = fa.n_ports;
    let mut mu = vec![0.0; n];
    for (i, m) in mu.iter_mut().enumerate().skip(1) {
        *m = j0_unchecked(2.0 * PI * i as f64 * fa.kappa / (n - 1) as f64);
    }
    CorrelationProfile { mu }
}

/// One block: true, estimated and error coefficients plus the residual
/// loop-interference power gains.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    pub g: Vec<C64>,
    pub g_hat: Vec<C64>,
    pub e: Vec<C64>,
    pub h_li_ue: f64,
    pub h_li_bs: f64,
}

/// Conditional Rice law of |ĝ_j| given |ĝ_1|: line `nu·|ĝ_1|`, scatter
/// variance `sigma_tilde2`. Port 1 carries `nu = 0` and its own variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiceParams {
    pub nu: f64,
    pub sigma_tilde2: f64,
}

/// CN(0, 1) sample.
fn cn<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// Correlated vector with per-port standard deviations `scale`, built on
/// the reference pair of port 1.
fn correlated<R: Rng + ?Sized>(profile: &CorrelationProfile, scale: &[f64], rng: &mut R) -> Vec<C64> {
    let z: Vec<C64> = (0..profile.len()).map(|_| cn(rng)).collect();
    let reference = z[0];
    profile
        .mu
        .iter()
        .zip(&z)
        .zip(scale)
        .enumerate()
        .map(|(i, ((&m, &zi), &s))| {
            if i == 0 {
                zi * s
            } else {
                (zi * (1.0 - m * m).max(0.0).sqrt() + reference * m) * s
            }
        })
        .collect()
}

/// True coefficients with E|g_i|² = σ².
pub fn draw_true_channels<R: Rng + ?Sized>(profile: &CorrelationProfile, sigma2: f64, rng: &mut R) -> Vec<C64> {
    let s = vec![sigma2.sqrt(); profile.len()];
    correlated(profile, &s, rng)
}

fn check_error_variances(sigma2: f64, sigma_e2: &[f64]) -> Result<()> {
    for &v in sigma_e2 {
        if !(0.0..=sigma2 * (1.0 + 1e-12)).contains(&v) {
            return Err(domain(
                "draw_estimated_channels",
                format!("error variance {v} outside [0, {sigma2}]"),
            ));
        }
    }
    Ok(())
}

/// Splits given true coefficients into an LMMSE estimate and an
/// uncorrelated error by sampling ĝ | g per port.
pub fn draw_estimated_channels<R: Rng + ?Sized>(
    g: &[C64],
    sigma2: f64,
    sigma_e2: &[f64],
    rng: &mut R,
) -> Result<(Vec<C64>, Vec<C64>)> {
    check_error_variances(sigma2, sigma_e2)?;
    if g.len() != sigma_e2.len() {
        return Err(domain("draw_estimated_channels", "length mismatch"));
    }
    let mut g_hat = Vec::with_capacity(g.len());
    let mut e = Vec::with_capacity(g.len());
    for (&gi, &v) in g.iter().zip(sigma_e2) {
        let v = v.min(sigma2);
        let c2 = sigma2 - v;
        let gh = gi * (c2 / sigma2) + cn(rng) * (c2 * v / sigma2).sqrt();
        g_hat.push(gh);
        e.push(gi - gh);
    }
    Ok((g_hat, e))
}

/// Residual loop-interference power gain ~ Gamma(μ, σ²_LI/μ).
pub fn draw_residual_li<R: Rng + ?Sized>(mu_nakagami: f64, sigma2_li: f64, rng: &mut R) -> Result<f64> {
    if !(mu_nakagami >= 0.5) {
        return Err(domain("draw_residual_li", format!("shape {mu_nakagami} < 0.5")));
    }
    if !(sigma2_li >= 0.0 && sigma2_li.is_finite()) {
        return Err(domain("draw_residual_li", format!("variance {sigma2_li}")));
    }
    if sigma2_li == 0.0 {
        return Ok(0.0);
    }
    let d = Gamma::new(mu_nakagami, sigma2_li / mu_nakagami).map_err(|e| domain("draw_residual_li", e.to_string()))?;
    Ok(d.sample(rng))
}

/// Simulation-side block: ĝ carries the correlated structure with
/// variance σ² − σ²_e, the error is drawn independently and g = ĝ + e.
pub fn draw_channel_block<R: Rng + ?Sized>(
    profile: &CorrelationProfile,
    sigma2: f64,
    sigma_e2: &[f64],
    li_variances: (f64, f64),
    mu_nakagami: f64,
    rng: &mut R,
) -> Result<ChannelDraw> {
    check_error_variances(sigma2, sigma_e2)?;
    let c: Vec<f64> = sigma_e2.iter().map(|&v| (sigma2 - v).max(0.0).sqrt()).collect();
    let g_hat = correlated(profile, &c, rng);
    let e: Vec<C64> = sigma_e2.iter().map(|&v| cn(rng) * v.sqrt()).collect();
    let g = g_hat.iter().zip(&e).map(|(a, b)| a + b).collect();
    let h_li_ue = draw_residual_li(mu_nakagami, li_variances.0, rng)?;
    let h_li_bs = draw_residual_li(mu_nakagami, li_variances.1, rng)?;
    Ok(ChannelDraw {
        g,
        g_hat,
        e,
        h_li_ue,
        h_li_bs,
    })
}

/// 1-based index of the largest amplitude; ties go to the lowest index.
pub fn select_port(amplitudes: &[f64]) -> usize {
    let mut best = 0;
    for (i, &a) in amplitudes.iter().enumerate() {
        if a > amplitudes[best] {
            best = i;
        }
    }
    best + 1
}

/// Per-port conditional Rice parameters under the chosen law.
pub fn rice_params(profile: &CorrelationProfile, sigma2: f64, sigma_e2: &[f64], law: SelectionLaw) -> Vec<RiceParams> {
    match law {
        SelectionLaw::Verbatim => profile
            .mu
            .iter()
            .zip(sigma_e2)
            .map(|(&m, &v)| RiceParams {
                nu: m,
                sigma_tilde2: sigma2 * (1.0 - m * m) + v,
            })
            .collect(),
        SelectionLaw::Orthogonal => {
            let c2: Vec<f64> = sigma_e2.iter().map(|&v| (sigma2 - v).max(0.0)).collect();
            let c1 = c2[0].sqrt();
            profile
                .mu
                .iter()
                .zip(&c2)
                .enumerate()
                .map(|(i, (&m, &cj2))| {
                    if i == 0 || c1 == 0.0 {
                        RiceParams {
                            nu: 0.0,
                            sigma_tilde2: cj2,
                        }
                    } else {
                        RiceParams {
                            nu: m * cj2.sqrt() / c1,
                            sigma_tilde2: cj2 * (1.0 - m * m).max(0.0),
                        }
                    }
                })
                .collect()
        }
    }
}
