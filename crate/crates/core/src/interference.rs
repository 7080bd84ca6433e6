//! Interference statistics of the four interferer classes, residual
//! loop-interference power and the gamma moment match.
//!
//! Means follow the shot-noise Campbell integrals over the exclusion
//! densities f₁–f₄. Variances are the second cumulants of the same
//! marked processes with Rayleigh fading (E h² = 2σ⁴).

use crate::error::{domain, Result};
use crate::geometry::{port_distance, ue_tx_power_unchecked};
use crate::params::{FluidAntennaGeometry, NetworkParams};
use crate::quadrature::integrate;
use crate::special::{exp_integral_en, gamma, gamma_pq, upper_incomplete_gamma};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Dl,
    Ul,
}

/// Interferer class: (receiver direction, transmitter type).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InterferenceClass {
    /// Other BSs at the typical UE.
    DlBs,
    /// Other UEs at the typical UE.
    DlUe,
    /// Other BSs at the tagged BS.
    UlBs,
    /// Other UEs at the tagged BS.
    UlUe,
}

impl InterferenceClass {
    pub const ALL: [InterferenceClass; 4] = [Self::DlBs, Self::DlUe, Self::UlBs, Self::UlUe];

    pub fn name(self) -> &'static str {
        match self {
            Self::DlBs => "dl_bs",
            Self::DlUe => "dl_ue",
            Self::UlBs => "ul_bs",
            Self::UlUe => "ul_ue",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExclusionKind {
    F1BsToUe,
    F2UeToBs,
    F3BsToBs,
    F4UeToUe,
}

/// Density of interferers at distance r from the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExclusionDensity {
    pub kind: ExclusionKind,
    /// ρ for f₁, the interferer's own link length R for f₂, b for f₃/f₄.
    pub cutoff: f64,
}

impl ExclusionDensity {
    pub fn density(&self, r: f64, lambda_b: f64) -> f64 {
        if r <= self.cutoff {
            return 0.0;
        }
        match self.kind {
            ExclusionKind::F1BsToUe | ExclusionKind::F2UeToBs => lambda_b,
            ExclusionKind::F3BsToBs | ExclusionKind::F4UeToUe => lambda_b * (-(-PI * lambda_b * r * r).exp_m1()),
        }
    }
}

fn check_exponent(p: &NetworkParams, func: &'static str) -> Result<()> {
    if !(p.a > 2.0) {
        return Err(domain(func, format!("path-loss exponent {} must exceed 2", p.a)));
    }
    Ok(())
}

/// Lower incomplete gamma γ(s, x) for s > 0.
fn lower_gamma(s: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    gamma_pq(s, x).0 * gamma(s)
}

/// v* = πλ(P_m/ω)^{2/(aε)}: contact-law argument at which P_u saturates.
fn saturation_arg(p: &NetworkParams) -> f64 {
    PI * p.lambda_b * (p.p_max / p.omega).powf(2.0 / (p.a * p.epsilon))
}

/// E[P_u(R)^k] with R distributed as the contact distance.
pub fn ue_power_moment(p: &NetworkParams, k: u32) -> f64 {
    let kf = k as f64;
    if p.epsilon == 0.0 {
        return p.omega.min(p.p_max).powi(k as i32);
    }
    let vs = saturation_arg(p);
    let e = p.a * p.epsilon / 2.0;
    p.omega.powi(k as i32) * (PI * p.lambda_b).powf(-kf * e) * lower_gamma(1.0 + kf * e, vs)
        + p.p_max.powi(k as i32) * (-vs).exp()
}

/// ∫_b^∞ (1 − e^{−πλr²}) r^{1−a} dr · 2πλ, the thinned-plane factor shared
/// by f₃ and f₄ means.
fn thinned_mean_factor(p: &NetworkParams, b: f64) -> Result<f64> {
    let a = p.a;
    let vb = PI * p.lambda_b * b * b;
    let en = exp_integral_en(a / 2.0, vb)?;
    Ok(PI * p.lambda_b * b.powf(2.0 - a) / (a - 2.0) * (2.0 - (a - 2.0) * en))
}

/// 2πλ ∫_b^∞ (1 − e^{−πλr²}) r^{1−2a} dr.
fn thinned_var_factor(p: &NetworkParams, b: f64) -> Result<f64> {
    let a = p.a;
    let vb = PI * p.lambda_b * b * b;
    let en = exp_integral_en(a, vb)?;
    let pl = PI * p.lambda_b;
    Ok(pl * pl.powf(a - 1.0) * vb.powf(1.0 - a) * (1.0 / (a - 1.0) - en))
}

/// Mean BS→BS interference at the tagged BS.
pub fn mean_ul_bs(p: &NetworkParams) -> Result<f64> {
    check_exponent(p, "mean_ul_bs")?;
    if !(p.b_b > 0.0) {
        return Err(domain("mean_ul_bs", "b_b must be positive"));
    }
    if p.lambda_b == 0.0 {
        return Ok(0.0);
    }
    Ok(p.sigma2 * p.p_bs * thinned_mean_factor(p, p.b_b)?)
}

/// Mean UE→UE interference at the typical UE.
pub fn mean_dl_ue(p: &NetworkParams) -> Result<f64> {
    check_exponent(p, "mean_dl_ue")?;
    if !(p.b_u > 0.0) {
        return Err(domain("mean_dl_ue", "b_u must be positive"));
    }
    if p.lambda_b == 0.0 {
        return Ok(0.0);
    }
    let v = p.sigma2 * ue_power_moment(p, 1) * thinned_mean_factor(p, p.b_u)?;
    if v < 0.0 {
        log::warn!("mean_dl_ue evaluated negative ({v:e}); clamped to 0");
        return Ok(0.0);
    }
    Ok(v)
}

/// Mean UE→BS interference at the tagged BS; every interfering UE lies
/// farther from the tagged BS than from its own BS.
pub fn mean_ul_ue(p: &NetworkParams) -> Result<f64> {
    check_exponent(p, "mean_ul_ue")?;
    if p.lambda_b == 0.0 || p.omega == 0.0 {
        return Ok(0.0);
    }
    let a = p.a;
    let pl = PI * p.lambda_b;
    let lead = 2.0 * p.sigma2 / (a - 2.0) * pl.powf(a / 2.0);
    if p.epsilon == 0.0 {
        if a >= 4.0 {
            return Err(domain(
                "mean_ul_ue",
                "fixed UE power with a >= 4 gives an unbounded mean under r > R",
            ));
        }
        return Ok(lead * p.omega.min(p.p_max) * gamma(2.0 - a / 2.0));
    }
    let vs = saturation_arg(p);
    let e = a * p.epsilon / 2.0;
    let s = 2.0 - a / 2.0 + e;
    if s <= 0.0 {
        return Err(domain("mean_ul_ue", format!("unbounded mean: 2 - a/2 + a*eps/2 = {s}")));
    }
    let upper = p.p_max * upper_incomplete_gamma(2.0 - a / 2.0, vs)?;
    let lower = p.omega * pl.powf(-e) * lower_gamma(s, vs);
    Ok(lead * (upper + lower))
}

/// Mean BS→UE interference at port distance `r` (interferers beyond r).
pub fn mean_dl_bs_at(p: &NetworkParams, r: f64) -> f64 {
    2.0 * PI * p.sigma2 / (p.a - 2.0) * p.p_bs * p.lambda_b * r.powf(2.0 - p.a)
}

/// Mean BS→UE interference seen by port `i` (1-based).
pub fn mean_dl_bs(p: &NetworkParams, rho: f64, i: usize, fa: &FluidAntennaGeometry) -> Result<f64> {
    check_exponent(p, "mean_dl_bs")?;
    let r = port_distance(rho, i, fa)?;
    if r == 0.0 {
        return Err(domain("mean_dl_bs", "zero port distance"));
    }
    Ok(mean_dl_bs_at(p, r))
}

pub fn var_dl_bs_at(p: &NetworkParams, r: f64) -> f64 {
    let a = p.a;
    2.0 * PI * p.lambda_b * 2.0 * p.sigma2 * p.sigma2 * p.p_bs * p.p_bs * r.powf(2.0 - 2.0 * a) / (2.0 * a - 2.0)
}

pub fn var_ul_bs(p: &NetworkParams) -> Result<f64> {
    check_exponent(p, "var_ul_bs")?;
    Ok(2.0 * p.sigma2 * p.sigma2 * p.p_bs * p.p_bs * thinned_var_factor(p, p.b_b)?)
}

pub fn var_dl_ue(p: &NetworkParams) -> Result<f64> {
    check_exponent(p, "var_dl_ue")?;
    Ok(2.0 * p.sigma2 * p.sigma2 * ue_power_moment(p, 2) * thinned_var_factor(p, p.b_u)?)
}

/// Variance of UE→BS interference. Unlike the mean, the second moment of
/// the r > R class is unbounded for ε ≤ 1 − 2/a, so interferers are kept
/// at least b_u from the tagged BS here.
pub fn var_ul_ue(p: &NetworkParams) -> Result<f64> {
    check_exponent(p, "var_ul_ue")?;
    let a = p.a;
    let pl = PI * p.lambda_b;
    if pl == 0.0 {
        return Ok(0.0);
    }
    let b = p.b_u;
    let vb = pl * b * b;
    let f = |v: f64| {
        let r = (v / pl).sqrt();
        let pu = if r > 0.0 { ue_tx_power_unchecked(r, p) } else { 0.0 };
        (-v).exp() * pu * pu * r.max(b).powf(2.0 - 2.0 * a)
    };
    let vs = if p.epsilon > 0.0 { saturation_arg(p) } else { 0.0 };
    let mut pts = vec![0.0, vb, vs.min(60.0), 60.0];
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut acc = 0.0;
    for w in pts.windows(2) {
        acc += integrate(f, w[0], w[1], 1e-300, 1e-10, 400)?.value;
    }
    Ok(4.0 * pl * p.sigma2 * p.sigma2 / (2.0 * a - 2.0) * acc)
}

/// Moments of one interference class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMoments {
    pub mean: f64,
    pub var: f64,
}

/// The three ρ-independent classes, computed once per parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldMoments {
    pub ul_bs: ClassMoments,
    pub ul_ue: ClassMoments,
    pub dl_ue: ClassMoments,
}

impl FieldMoments {
    pub fn new(p: &NetworkParams) -> Result<Self> {
        Ok(Self {
            ul_bs: ClassMoments {
                mean: mean_ul_bs(p)?,
                var: var_ul_bs(p)?,
            },
            ul_ue: ClassMoments {
                mean: mean_ul_ue(p)?,
                var: var_ul_ue(p)?,
            },
            dl_ue: ClassMoments {
                mean: mean_dl_ue(p)?,
                var: var_dl_ue(p)?,
            },
        })
    }

    /// DL totals at port distance r.
    pub fn dl_total(&self, p: &NetworkParams, r: f64) -> ClassMoments {
        ClassMoments {
            mean: mean_dl_bs_at(p, r) + self.dl_ue.mean,
            var: var_dl_bs_at(p, r) + self.dl_ue.var,
        }
    }

    pub fn ul_total(&self) -> ClassMoments {
        ClassMoments {
            mean: self.ul_bs.mean + self.ul_ue.mean,
            var: self.ul_bs.var + self.ul_ue.var,
        }
    }
}

/// Per-port interference summary conditioned on ρ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceStats {
    pub mean_dl_bs: f64,
    pub mean_dl_ue: f64,
    pub mean_ul_bs: f64,
    pub mean_ul_ue: f64,
    pub var_total_dl: f64,
    pub var_total_ul: f64,
    pub gamma_dl: (f64, f64),
    pub gamma_ul: (f64, f64),
}

pub fn interference_stats(
    p: &NetworkParams,
    rho: f64,
    i: usize,
    fa: &FluidAntennaGeometry,
) -> Result<InterferenceStats> {
    let f = FieldMoments::new(p)?;
    let r = port_distance(rho, i, fa)?;
    let dl = f.dl_total(p, r);
    let ul = f.ul_total();
    Ok(InterferenceStats {
        mean_dl_bs: mean_dl_bs_at(p, r),
        mean_dl_ue: f.dl_ue.mean,
        mean_ul_bs: f.ul_bs.mean,
        mean_ul_ue: f.ul_ue.mean,
        var_total_dl: dl.var,
        var_total_ul: ul.var,
        gamma_dl: gamma_match(dl.mean, dl.var)?,
        gamma_ul: gamma_match(ul.mean, ul.var)?,
    })
}

/// Residual loop-interference power for one LI gain draw.
pub fn residual_li_power(
    direction: Direction,
    p: &NetworkParams,
    rho: f64,
    i: usize,
    fa: &FluidAntennaGeometry,
    li_gain: f64,
) -> Result<f64> {
    match direction {
        Direction::Dl => {
            let r = port_distance(rho, i, fa)?;
            if r == 0.0 {
                return Ok(p.omega.min(p.p_max) * li_gain * f64::from(p.epsilon == 0.0));
            }
            Ok(ue_tx_power_unchecked(r, p) * li_gain)
        }
        Direction::Ul => Ok(p.p_bs * li_gain),
    }
}

/// Shape ϖ = m²/v and scale ϱ = v/m.
pub fn gamma_match(mean: f64, variance: f64) -> Result<(f64, f64)> {
    if !(mean > 0.0 && variance > 0.0 && mean.is_finite() && variance.is_finite()) {
        return Err(domain(
            "gamma_match",
            format!("mean {mean:e} and variance {variance:e} must be positive"),
        ));
    }
    Ok((mean * mean / variance, variance / mean))
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
}

/// Setup for the Campbell-sum oracles of one class.
struct ClassSetup {
    kind: ExclusionKind,
    fixed_cutoff: f64,
    ue: bool,
}

fn class_setup(class: InterferenceClass, p: &NetworkParams, rho: f64, floor_ul_ue: bool) -> ClassSetup {
    match class {
        InterferenceClass::DlBs => ClassSetup {
            kind: ExclusionKind::F1BsToUe,
            fixed_cutoff: rho,
            ue: false,
        },
        InterferenceClass::UlBs => ClassSetup {
            kind: ExclusionKind::F3BsToBs,
            fixed_cutoff: p.b_b,
            ue: false,
        },
        InterferenceClass::DlUe => ClassSetup {
            kind: ExclusionKind::F4UeToUe,
            fixed_cutoff: p.b_u,
            ue: true,
        },
        InterferenceClass::UlUe => ClassSetup {
            kind: ExclusionKind::F2UeToBs,
            fixed_cutoff: if floor_ul_ue { p.b_u } else { 0.0 },
            ue: true,
        },
    }
}

const R_FAR: f64 = 1e5;

/// One importance-sampled Campbell term for the `order`-th cumulant
/// (1: mean, 2: variance).
fn campbell_draw<R: Rng + ?Sized>(setup: &ClassSetup, p: &NetworkParams, order: i32, rng: &mut R) -> f64 {
    let (ptx, r_own) = if setup.ue {
        let r_own = crate::geometry::sample_contact_distance(p.lambda_b, rng);
        (ue_tx_power_unchecked(r_own.max(1e-300), p), r_own)
    } else {
        (p.p_bs, 0.0)
    };
    let cutoff = match setup.kind {
        ExclusionKind::F2UeToBs => setup.fixed_cutoff.max(r_own),
        _ => setup.fixed_cutoff,
    }
    .max(1e-6);
    let span = (R_FAR / cutoff).ln();
    let u: f64 = rng.random();
    let r = cutoff * (span * u).exp();
    let dens = ExclusionDensity {
        kind: setup.kind,
        cutoff: 0.0,
    }
    .density(r, p.lambda_b);
    let h: f64 = p.sigma2 * <Exp1 as Distribution<f64>>::sample(&Exp1, rng);
    span * r * 2.0 * PI * r * dens * (ptx * h * r.powf(-p.a)).powi(order)
}

/// One positive draw whose expectation is the class mean.
pub(crate) fn campbell_mean_draw<R: Rng + ?Sized>(
    class: InterferenceClass,
    p: &NetworkParams,
    rho: f64,
    rng: &mut R,
) -> f64 {
    campbell_draw(&class_setup(class, p, rho, false), p, 1, rng)
}

/// Importance-sampled shot-noise estimator of the class mean and variance.
///
/// Each sample draws the interferer's own link length R from the contact
/// law (UE classes), a fading gain h ~ Exp(σ²), and a distance r
/// log-uniformly above the exclusion cutoff; the weight is the Campbell
/// integrand divided by the sampling density. The variance estimate uses
/// the b_u floor for the UE→BS class, the mean does not.
pub fn shot_noise_oracle(
    class: InterferenceClass,
    p: &NetworkParams,
    rho: f64,
    n_samples: usize,
    seed: u64,
) -> Result<(McEstimate, McEstimate)> {
    check_exponent(p, "shot_noise_oracle")?;
    if n_samples < 2 {
        return Err(domain("shot_noise_oracle", "need at least two samples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean_acc = Stream::default();
    let mut var_acc = Stream::default();
    let mean_setup = class_setup(class, p, rho, false);
    let var_setup = class_setup(class, p, rho, true);
    for _ in 0..n_samples {
        mean_acc.push(campbell_draw(&mean_setup, p, 1, &mut rng));
    }
    for _ in 0..n_samples {
        var_acc.push(campbell_draw(&var_setup, p, 2, &mut rng));
    }
    Ok((mean_acc.estimate(), var_acc.estimate()))
}

/// Monte Carlo variance of a class (see [`shot_noise_oracle`]).
pub fn interference_variance_oracle(
    class: InterferenceClass,
    p: &NetworkParams,
    rho: f64,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    Ok(shot_noise_oracle(class, p, rho, n_samples, seed)?.1)
}

/// Variance from the numerically evaluated log-Laplace transform: log L(s)
/// is computed at four positive s by quadrature and a quartic through the
/// origin gives d²/ds² log L at 0.
pub fn laplace_variance(class: InterferenceClass, p: &NetworkParams, rho: f64) -> Result<f64> {
    check_exponent(p, "laplace_variance")?;
    let setup = class_setup(class, p, rho, true);
    let pmax = if setup.ue { p.p_max } else { p.p_bs };
    let lo = setup.fixed_cutoff.max(1e-6);
    let s0 = 0.02 / (pmax * p.sigma2 * lo.powf(-p.a));
    let pl = PI * p.lambda_b;
    let log_l = |s: f64| -> Result<f64> {
        // −λ ∫ 2πr g(r) E[1 − 1/(1 + s P σ² r^{−a})] dr, over t = ln r
        let shot = |ptx: f64, cut: f64| -> Result<f64> {
            let f = |t: f64| {
                let r = t.exp();
                let x = s * ptx * p.sigma2 * r.powf(-p.a);
                let d = ExclusionDensity {
                    kind: setup.kind,
                    cutoff: 0.0,
                }
                .density(r, p.lambda_b);
                2.0 * PI * r * r * d * x / (1.0 + x)
            };
            Ok(integrate(f, cut.ln(), R_FAR.ln(), 1e-300, 1e-13, 2000)?.value)
        };
        if !setup.ue {
            return Ok(-shot(p.p_bs, lo)?);
        }
        // average over the interferer's own link length, v = πλR²
        let mut err = None;
        let g = |v: f64| {
            let r_own = (v / pl).sqrt().max(1e-300);
            let cut = match setup.kind {
                ExclusionKind::F2UeToBs => lo.max(r_own),
                _ => lo,
            };
            match shot(ue_tx_power_unchecked(r_own, p), cut) {
                Ok(x) => (-v).exp() * x,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            }
        };
        let vs = if p.epsilon > 0.0 {
            saturation_arg(p).min(60.0)
        } else {
            1.0
        };
        let mut pts = vec![0.0, vs, 60.0, pl * lo * lo];
        pts.retain(|v| *v <= 60.0);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let mut g = g;
        let mut total = 0.0;
        for w in pts.windows(2) {
            total += integrate(&mut g, w[0], w[1], 1e-300, 1e-12, 400)?.value;
        }
        if let Some(e) = err {
            return Err(e);
        }
        Ok(-total)
    };
    let k = 4;
    let mut a = DMatrix::<f64>::zeros(k, k);
    let mut y = DVector::<f64>::zeros(k);
    for j in 0..k {
        let s = s0 * (j + 1) as f64;
        for c in 0..k {
            a[(j, c)] = s.powi(c as i32 + 1);
        }
        y[j] = log_l(s)?;
    }
    let coef = a
        .lu()
        .solve(&y)
        .ok_or_else(|| domain("laplace_variance", "singular fit"))?;
    Ok(2.0 * coef[1])
}

#[derive(Default)]
struct Stream {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Stream {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn estimate(&self) -> McEstimate {
        let var = self.m2 / (self.n - 1.0);
        McEstimate {
            value: self.mean,
            stderr: (var / self.n).sqrt(),
        }
    }
}
