//! Analytical engine: joint cdf of the estimated port amplitudes, outage
//! under the gamma interference law or its mean, and the average sum rate.

use crate::channel::{correlation_profile, rice_params, CorrelationProfile, RiceParams};
use crate::error::{domain, Error, Result};
use crate::estimation::{csi_variances, effective_rate_fraction, PilotBudget};
use crate::geometry::{port_distance_unchecked, ue_tx_power_unchecked};
use crate::interference::{gamma_match, mean_dl_bs_at, Direction, FieldMoments};
use crate::params::{Coupling, CsiMode, LiMode, Scenario};
use crate::quadrature::{gauss_legendre, integrate, GammaRule, QuadratureSpec};
use crate::special::marcum_q1_pair;
use serde::{Deserialize, Serialize};
use std::cell::{Cell, RefCell};
use std::collections::HashMap;
use std::f64::consts::{LN_2, PI};

/// Which evaluator produced a number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    ExactGamma,
    MeanApprox,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageResult {
    pub value: f64,
    pub engine: EngineKind,
    pub quadrature_error_estimate: f64,
}

/// Average sum rate and its parts, bits/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub rate: f64,
    pub rate_dl: f64,
    pub rate_ul: f64,
    /// Bound on the coverage mass dropped beyond the θ grid, bits/s.
    pub tail_bound: f64,
}

/// s-range of the t-integral: exp(−s²) below 1e-17 beyond this.
const S_MAX: f64 = 6.3;
/// Rice factors are 1 to double precision once √Θ exceeds the line by this
/// many scatter deviations.
const RICE_SPAN: f64 = 7.0;

/// Port-j factor 1 − Q₁(a·s, b) of the s-integrand; `a = ∞` marks a
/// deterministic amplitude (step at s = b).
#[derive(Clone, Copy)]
struct RiceFactor {
    a: f64,
    b: f64,
}

impl RiceFactor {
    fn new(rp: RiceParams, sig1: f64, theta2: f64) -> Self {
        if rp.sigma_tilde2 <= 1e-300 {
            let step = if rp.nu * sig1 > 0.0 {
                theta2.sqrt() / (rp.nu * sig1)
            } else {
                f64::INFINITY
            };
            return Self {
                a: f64::INFINITY,
                b: step,
            };
        }
        let k = (2.0 / rp.sigma_tilde2).sqrt();
        Self {
            a: k * rp.nu * sig1,
            b: k * theta2.sqrt(),
        }
    }

    fn at(self, s: f64) -> f64 {
        if self.a.is_infinite() {
            return if s < self.b { 1.0 } else { 0.0 };
        }
        marcum_q1_pair(self.a * s, self.b).1
    }

    /// Centre of the transition in s, if it is sharp on a range of length `span`.
    fn breakpoint(self, span: f64) -> Option<f64> {
        if self.a.is_infinite() {
            return Some(self.b);
        }
        (self.a > 0.0 && self.a * span > 20.0).then(|| self.b / self.a)
    }
}

/// Smallest common scale w with every Θ_j = c_j·w past the point where the
/// joint cdf is 1 in double precision.
fn saturation_scale(c: &[f64], rice: &[RiceParams]) -> f64 {
    let sig1 = rice[0].sigma_tilde2.sqrt();
    let mut w = S_MAX * S_MAX * rice[0].sigma_tilde2 / c[0];
    for (rp, &cj) in rice.iter().zip(c).skip(1) {
        let amp = rp.nu * sig1 * S_MAX + RICE_SPAN * rp.sigma_tilde2.sqrt();
        w = w.max(amp * amp / cj);
    }
    w
}

/// Joint cdf of (|ĝ_1|², …, |ĝ_N|²) at thresholds `theta2` under the
/// conditional Rice law `rice`. Returns the value and a quadrature error.
pub fn joint_cdf_sq(theta2: &[f64], rice: &[RiceParams], abs_tol: f64) -> Result<(f64, f64)> {
    if theta2.len() != rice.len() || theta2.is_empty() {
        return Err(domain("joint_estimated_cdf", "threshold and law lengths differ"));
    }
    if theta2.iter().any(|&t| !(t >= 0.0)) {
        return Err(domain("joint_estimated_cdf", "thresholds must be nonnegative"));
    }
    if theta2.contains(&0.0) {
        return Ok((0.0, 0.0));
    }
    let s1 = rice[0].sigma_tilde2;
    let sig1 = s1.sqrt();
    let factors: Vec<RiceFactor> = rice[1..]
        .iter()
        .zip(&theta2[1..])
        .map(|(&rp, &t)| RiceFactor::new(rp, sig1, t))
        .collect();
    if s1 <= 1e-300 {
        // |ĝ_1| = 0 surely; remaining ports are independent Rayleigh
        return Ok((factors.iter().map(|f| f.at(0.0)).product(), 0.0));
    }
    let s_hi = (theta2[0] / s1).sqrt().min(S_MAX);
    let mut pts: Vec<f64> = factors
        .iter()
        .filter_map(|f| f.breakpoint(s_hi))
        .filter(|&s| s > 0.0 && s < s_hi)
        .collect();
    pts.sort_by(f64::total_cmp);
    // nearby transitions are integrated as one piece
    let mut cuts = vec![0.0];
    for s in pts {
        if s - cuts[cuts.len() - 1] > 0.02 * s_hi {
            cuts.push(s);
        }
    }
    cuts.push(s_hi);
    let integrand = |s: f64| -> f64 {
        let mut prod = 2.0 * s * (-s * s).exp();
        for f in &factors {
            prod *= f.at(s);
            if prod == 0.0 {
                break;
            }
        }
        prod
    };
    let mut value = 0.0;
    let mut error = 0.0;
    for w in cuts.windows(2) {
        // the product of Rice factors is nonincreasing in s
        if w[0] > 0.0 && integrand(w[0]) == 0.0 {
            break;
        }
        let r = integrate(integrand, w[0], w[1], abs_tol / cuts.len() as f64, 1e-9, 400)?;
        value += r.value;
        error += r.error;
    }
    Ok((value.clamp(0.0, 1.0), error))
}

/// Joint cdf along the ray Θ_j = c_j·w, sampled lazily on a grid uniform in
/// ln w and interpolated between grid points.
struct CdfTable<'a> {
    rice: &'a [RiceParams],
    c: Vec<f64>,
    step: f64,
    tol: f64,
    w_one: f64,
    nodes: RefCell<HashMap<i64, f64>>,
    err: Cell<f64>,
}

impl<'a> CdfTable<'a> {
    fn new(rice: &'a [RiceParams], c: Vec<f64>, step: f64, tol: f64) -> Self {
        let w_one = saturation_scale(&c, rice);
        Self {
            rice,
            c,
            step,
            tol,
            w_one,
            nodes: RefCell::new(HashMap::new()),
            err: Cell::new(0.0),
        }
    }

    fn direct(&self, w: f64) -> Result<f64> {
        if w >= self.w_one {
            return Ok(1.0);
        }
        let th: Vec<f64> = self.c.iter().map(|&c| c * w).collect();
        let (v, e) = joint_cdf_sq(&th, self.rice, self.tol)?;
        self.err.set(self.err.get().max(e));
        Ok(v)
    }

    fn node(&self, k: i64) -> Result<f64> {
        if let Some(&v) = self.nodes.borrow().get(&k) {
            return Ok(v);
        }
        let v = self.direct((k as f64 * self.step).exp())?;
        self.nodes.borrow_mut().insert(k, v);
        Ok(v)
    }

    fn eval(&self, w: f64) -> Result<f64> {
        if w >= self.w_one {
            return Ok(1.0);
        }
        if w <= 0.0 {
            return Ok(0.0);
        }
        if self.step == 0.0 {
            return self.direct(w);
        }
        let z = w.ln() / self.step;
        let k0 = z.floor() as i64;
        let t = z - k0 as f64;
        let g = [
            self.node(k0 - 1)?,
            self.node(k0)?,
            self.node(k0 + 1)?,
            self.node(k0 + 2)?,
        ];
        let lw = [
            -t * (t - 1.0) * (t - 2.0) / 6.0,
            (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
            -(t + 1.0) * t * (t - 2.0) / 2.0,
            (t + 1.0) * t * (t - 1.0) / 6.0,
        ];
        let lagrange = |f: &dyn Fn(f64) -> f64| -> f64 { g.iter().zip(&lw).map(|(&v, &l)| l * f(v)).sum() };
        // cubic in ln G on the lower tail and in ln(1 − G) on the upper one
        let v = if g.iter().all(|&v| v > 0.0 && v <= 0.5) {
            lagrange(&|v| v.ln()).exp()
        } else if g.iter().all(|&v| (0.5..1.0).contains(&v)) {
            -lagrange(&|v| (-v).ln_1p()).exp_m1()
        } else {
            lagrange(&|v| v)
        };
        Ok(v.clamp(g[1].min(g[2]), g[1].max(g[2])))
    }
}

/// Joint cdf at amplitude thresholds `taus`.
pub fn joint_estimated_cdf(taus: &[f64], rice: &[RiceParams]) -> Result<f64> {
    let t2: Vec<f64> = taus.iter().map(|t| t * t).collect();
    if taus.iter().any(|t| t.is_infinite()) {
        // infinite thresholds drop out of the product
        let keep: Vec<usize> = (0..taus.len()).filter(|&j| taus[j].is_finite()).collect();
        if keep.is_empty() {
            return Ok(1.0);
        }
        let big: Vec<f64> = t2.iter().map(|&v| if v.is_finite() { v } else { 1e300 }).collect();
        return Ok(joint_cdf_sq(&big, rice, 1e-11)?.0);
    }
    Ok(joint_cdf_sq(&t2, rice, 1e-11)?.0)
}

/// Panel edges of the fixed contact-distance rule, as fractions of the
/// truncated u-range; denser near u = 0 where the density peaks.
const U_PANELS: [f64; 9] = [0.0, 0.001, 0.005, 0.02, 0.05, 0.12, 0.25, 0.5, 1.0];

/// Analytical evaluator bound to one scenario.
#[derive(Debug, Clone)]
pub struct Evaluator {
    pub scenario: Scenario,
    pub quad: QuadratureSpec,
    pub budget: PilotBudget,
    profile: CorrelationProfile,
    field: FieldMoments,
    li_rule: Option<GammaRule>,
    ul_rule: Option<GammaRule>,
    variance_scale: f64,
}

/// Per-ρ quantities shared by both directions.
struct PortSetup {
    rice: Vec<RiceParams>,
    /// Θ_i = θ·scale_i·(x_i + li_i·g + base_i)
    scale: Vec<f64>,
    base: Vec<f64>,
    li: Vec<f64>,
    /// Mean interference at each port.
    mean_i: Vec<f64>,
    /// Mean of the interference law the gamma rule was matched to.
    mean_ref: f64,
}

impl PortSetup {
    /// Θ_i / θ at interference draw `x` of the reference law and LI gain `g`.
    fn unit_threshold(&self, i: usize, x: f64, g: f64) -> f64 {
        self.scale[i] * (x * self.mean_i[i] / self.mean_ref.max(1e-300) + self.li[i] * g + self.base[i])
    }

    /// Middle port; its threshold parameterizes the tabulated ray.
    fn reference(&self) -> usize {
        self.scale.len() / 2
    }

    /// Threshold ratios Θ_i/Θ_ref at the mean interference and unit LI gain.
    /// Port distances differ by at most half the antenna length, so the
    /// ratios move by O((L/ρ)²) across the mixture nodes.
    fn ray(&self) -> Vec<f64> {
        let r0 = self.reference();
        let d = self.unit_threshold(r0, self.mean_ref, 1.0);
        (0..self.scale.len())
            .map(|i| self.unit_threshold(i, self.mean_ref, 1.0) / d)
            .collect()
    }
}

impl Evaluator {
    pub fn new(scenario: &Scenario, quad: QuadratureSpec) -> Result<Self> {
        scenario.validate()?;
        quad.validate()?;
        let budget = PilotBudget::new(&scenario.net, &scenario.fa);
        if scenario.csi == CsiMode::Estimated {
            budget.check()?;
        }
        let field = FieldMoments::new(&scenario.net)?;
        let li_rule = if scenario.csi == CsiMode::Estimated && scenario.analysis.li_mode == LiMode::Mixture {
            let mu = scenario.net.mu_nakagami;
            // the LI gain law is smooth; 8-point panels suffice
            Some(GammaRule::new(mu, 1.0 / mu, 8)?)
        } else {
            None
        };
        let mut ev = Self {
            scenario: scenario.clone(),
            quad,
            budget,
            profile: correlation_profile(&scenario.fa),
            field,
            li_rule,
            ul_rule: None,
            variance_scale: 1.0,
        };
        ev.ul_rule = ev.matched_rule(ev.field.ul_total().mean, ev.field.ul_total().var)?;
        Ok(ev)
    }

    /// Scales every interference variance fed to the gamma match; as the
    /// scale goes to 0 the exact engine tends to the mean approximation.
    pub fn with_variance_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(domain("with_variance_scale", format!("scale {scale}")));
        }
        self.variance_scale = scale;
        let ul = self.field.ul_total();
        self.ul_rule = self.matched_rule(ul.mean, ul.var)?;
        Ok(self)
    }

    fn matched_rule(&self, mean: f64, var: f64) -> Result<Option<GammaRule>> {
        let var = var * self.variance_scale;
        if !(mean > 0.0 && var > 0.0) {
            return Ok(None);
        }
        let (k, s) = gamma_match(mean, var)?;
        Ok(Some(GammaRule::new(k, s, self.quad.gamma_nodes)?))
    }

    pub fn field_moments(&self) -> &FieldMoments {
        &self.field
    }

    fn setup(&self, dir: Direction, rho: f64) -> Result<PortSetup> {
        let s = &self.scenario;
        let p = &s.net;
        let n = s.fa.n_ports;
        let csi = csi_variances(
            p,
            rho,
            &s.fa,
            &self.budget,
            s.csi,
            self.field.dl_ue.mean,
            self.field.ul_bs.mean,
        )?;
        let rice = rice_params(&self.profile, p.sigma2, &csi.direct, s.analysis.selection_law);
        let mut scale = Vec::with_capacity(n);
        let mut base = Vec::with_capacity(n);
        let mut li = Vec::with_capacity(n);
        let mut mean_i = Vec::with_capacity(n);
        for i in 0..n {
            let r = port_distance_unchecked(rho, i + 1, &s.fa).max(1e-9);
            let ra = r.powf(p.a);
            let pu = ue_tx_power_unchecked(r, p);
            let (tx, li_term, m) = match dir {
                Direction::Dl => (
                    p.p_bs,
                    csi.li_ue[i] * csi.li_ue[i] * pu,
                    mean_dl_bs_at(p, r) + self.field.dl_ue.mean,
                ),
                Direction::Ul => (pu, csi.li_bs * csi.li_bs * p.p_bs, self.field.ul_total().mean),
            };
            scale.push(ra / tx);
            base.push(tx / ra * csi.direct[i] + p.n0);
            li.push(li_term);
            mean_i.push(m);
        }
        let mean_ref = match dir {
            Direction::Dl => self.field.dl_total(p, rho.max(1e-9)).mean,
            Direction::Ul => self.field.ul_total().mean,
        };
        Ok(PortSetup {
            rice,
            scale,
            base,
            li,
            mean_i,
            mean_ref,
        })
    }

    fn li_points(&self) -> Vec<(f64, f64)> {
        match &self.li_rule {
            Some(rule) => rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .filter(|(_, &w)| w > 1e-14)
                .map(|(&x, &w)| (x, w))
                .collect(),
            None => vec![(1.0, 1.0)],
        }
    }

    fn interference_points(&self, dir: Direction, rho: f64) -> Result<Vec<(f64, f64)>> {
        let p = &self.scenario.net;
        let rule = match dir {
            Direction::Ul => match &self.ul_rule {
                Some(r) => r.clone(),
                None => return Ok(vec![(self.field.ul_total().mean, 1.0)]),
            },
            Direction::Dl => {
                let dl = self.field.dl_total(p, rho.max(1e-9));
                match self.matched_rule(dl.mean, dl.var)? {
                    Some(r) => r,
                    None => return Ok(vec![(dl.mean, 1.0)]),
                }
            }
        };
        Ok(rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .filter(|(_, &w)| w > 1e-14)
            .map(|(&x, &w)| (x, w))
            .collect())
    }

    fn tol(&self) -> f64 {
        (self.quad.abs_tol * 0.1).max(1e-12)
    }

    /// Conditional outage given ρ.
    pub fn conditional_outage(&self, dir: Direction, theta: f64, rho: f64, engine: EngineKind) -> Result<OutageResult> {
        let (v, err) = self.conditional_curve(dir, &[theta], rho, engine)?;
        Ok(OutageResult {
            value: v[0],
            engine,
            quadrature_error_estimate: err,
        })
    }

    /// Conditional outage at several thresholds sharing one ρ. All
    /// thresholds reuse one tabulated joint cdf.
    pub fn conditional_curve(
        &self,
        dir: Direction,
        thetas: &[f64],
        rho: f64,
        engine: EngineKind,
    ) -> Result<(Vec<f64>, f64)> {
        if let Some(&t) = thetas.iter().find(|&&t| !(t > 0.0 && t.is_finite())) {
            return Err(domain("conditional_outage", format!("theta = {t}")));
        }
        if engine == EngineKind::MonteCarlo {
            return Err(domain("conditional_outage", "not an analytical engine"));
        }
        let ps = self.setup(dir, rho)?;
        let li = self.li_points();
        let tol = self.tol();
        let xs = match engine {
            EngineKind::ExactGamma => self.interference_points(dir, rho)?,
            _ => vec![(ps.mean_ref, 1.0)],
        };
        if engine == EngineKind::ExactGamma && self.scenario.analysis.coupling == Coupling::PerPort {
            let mut out = Vec::with_capacity(thetas.len());
            let mut err = 0.0f64;
            for &t in thetas {
                let (v, e) = self.per_port(t, &ps, &xs, &li, tol)?;
                out.push(v.clamp(0.0, 1.0));
                err = err.max(e);
            }
            return Ok((out, err));
        }
        let n = ps.rice.len();
        let r0 = ps.reference();
        let table = CdfTable::new(&ps.rice, ps.ray(), self.quad.table_step, tol);
        let mut out = Vec::with_capacity(thetas.len());
        let mut th = vec![0.0; n];
        for &t in thetas {
            let mut value = 0.0;
            for &(g, wg) in &li {
                for &(x, wx) in &xs {
                    let v = if self.quad.table_step == 0.0 {
                        // exact per-port thresholds, no ray approximation
                        for (i, v) in th.iter_mut().enumerate() {
                            *v = t * ps.unit_threshold(i, x, g);
                        }
                        let (v, e) = joint_cdf_sq(&th, &ps.rice, tol)?;
                        table.err.set(table.err.get().max(e));
                        v
                    } else {
                        table.eval(t * ps.unit_threshold(r0, x, g))?
                    };
                    value += wg * wx * v;
                    if v >= 1.0 {
                        // thresholds only grow with x from here on
                        let rest: f64 = xs.iter().filter(|q| q.0 > x).map(|q| q.1).sum();
                        value += wg * rest;
                        break;
                    }
                }
            }
            out.push(value.clamp(0.0, 1.0));
        }
        Ok((out, table.err.get()))
    }

    /// Independent interference per port inside the Rice product.
    fn per_port(
        &self,
        theta: f64,
        ps: &PortSetup,
        xs: &[(f64, f64)],
        li: &[(f64, f64)],
        tol: f64,
    ) -> Result<(f64, f64)> {
        let n = ps.rice.len();
        let s1 = ps.rice[0].sigma_tilde2;
        let sig1 = s1.sqrt();
        let mut total = 0.0;
        let mut err = 0.0;
        for &(g, wg) in li {
            let th = |i: usize, x: f64| theta * ps.unit_threshold(i, x, g);
            let factor = |j: usize, s: f64| -> f64 {
                let rp = ps.rice[j];
                let line = rp.nu * sig1 * s;
                xs.iter()
                    .map(|&(x, w)| {
                        let t = th(j, x);
                        let f = if rp.sigma_tilde2 <= 1e-300 {
                            f64::from(u8::from(line * line < t))
                        } else {
                            let k = (2.0 / rp.sigma_tilde2).sqrt();
                            marcum_q1_pair(k * line, k * t.sqrt()).1
                        };
                        w * f
                    })
                    .sum()
            };
            let integrand = |s: f64| -> f64 {
                let mut prod = 2.0 * s * (-s * s).exp();
                for j in 1..n {
                    prod *= factor(j, s);
                    if prod == 0.0 {
                        break;
                    }
                }
                prod
            };
            if s1 <= 1e-300 {
                let v: f64 = (1..n).map(|j| factor(j, 0.0)).product();
                total += wg * v;
                continue;
            }
            // cumulative integral up to each port-1 limit
            let mut limits: Vec<(f64, f64)> = xs
                .iter()
                .map(|&(x, w)| ((th(0, x) / s1).sqrt().min(S_MAX), w))
                .collect();
            limits.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut acc = 0.0;
            let mut prev = 0.0;
            for (lim, w) in limits {
                if lim > prev {
                    let r = integrate(integrand, prev, lim, tol, 1e-9, 400)?;
                    acc += r.value;
                    err += wg * w * r.error;
                    prev = lim;
                }
                total += wg * w * acc;
            }
        }
        Ok((total, err))
    }

    /// Unconditional outage, averaging over the contact distance with
    /// u = πλρ².
    pub fn outage(&self, dir: Direction, theta: f64, engine: EngineKind) -> Result<OutageResult> {
        let lam = self.scenario.net.lambda_b;
        let u_max = -self.quad.infinite_tail_cutoff.ln();
        let mut failure: Option<Error> = None;
        let mut qerr = 0.0;
        let f = |u: f64| {
            let rho = (u / (PI * lam)).sqrt();
            match self.conditional_outage(dir, theta, rho, engine) {
                Ok(r) => {
                    qerr += r.quadrature_error_estimate * (-u).exp();
                    r.value * (-u).exp()
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        };
        let r = integrate(f, 0.0, u_max, self.quad.abs_tol, self.quad.rel_tol, self.quad.max_depth)?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(OutageResult {
            value: r.value.clamp(0.0, 1.0),
            engine,
            quadrature_error_estimate: r.error + qerr,
        })
    }

    /// Outage at several thresholds on a fixed composite Gauss-Legendre
    /// rule in u = πλρ², so each ρ node serves every threshold.
    pub fn outage_curve(&self, dir: Direction, thetas: &[f64], engine: EngineKind) -> Result<Vec<OutageResult>> {
        let lam = self.scenario.net.lambda_b;
        let u_max = -self.quad.infinite_tail_cutoff.ln();
        let (gx, gw) = gauss_legendre(8);
        let mut acc = vec![0.0; thetas.len()];
        let mut qerr = 0.0;
        for edge in U_PANELS.windows(2) {
            let (a, b) = (edge[0] * u_max, edge[1] * u_max);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for (&x, &w) in gx.iter().zip(&gw) {
                let u = mid + half * x;
                let rho = (u / (PI * lam)).sqrt();
                let weight = w * half * (-u).exp();
                let (v, e) = self.conditional_curve(dir, thetas, rho, engine)?;
                for (a, v) in acc.iter_mut().zip(v) {
                    *a += weight * v;
                }
                qerr += weight * e;
            }
        }
        Ok(acc
            .into_iter()
            .map(|v| OutageResult {
                value: v.clamp(0.0, 1.0),
                engine,
                quadrature_error_estimate: qerr,
            })
            .collect())
    }

    /// Average sum rate, bits/s, from the coverage of both links on the
    /// threshold grid of [`rate_theta_grid`].
    pub fn average_sum_rate(&self, engine: EngineKind) -> Result<RateResult> {
        let thetas = rate_theta_grid();
        let mut parts = [0.0; 2];
        let mut tails = [0.0; 2];
        for (k, dir) in [Direction::Dl, Direction::Ul].into_iter().enumerate() {
            let cov: Vec<f64> = self
                .outage_curve(dir, &thetas, engine)?
                .iter()
                .map(|o| 1.0 - o.value)
                .collect();
            (parts[k], tails[k]) = coverage_log_integral(&cov)?;
        }
        let pre = self.scenario.net.bc * effective_rate_fraction(&self.budget) / LN_2;
        Ok(RateResult {
            rate: pre * (parts[0] + parts[1]),
            rate_dl: pre * parts[0],
            rate_ul: pre * parts[1],
            tail_bound: pre * (tails[0] + tails[1]),
        })
    }
}

const RATE_STEPS: usize = 40;
const RATE_DB_SPAN: f64 = 40.0;
/// Largest coverage mass allowed past the top of the grid, as a share of
/// the integral.
const RATE_TAIL_SHARE: f64 = 0.05;

/// Logarithmic θ grid from −40 dB to +40 dB, 2 dB apart.
pub fn rate_theta_grid() -> Vec<f64> {
    let z_lo = -RATE_DB_SPAN / 10.0 * std::f64::consts::LN_10;
    let h = -2.0 * z_lo / RATE_STEPS as f64;
    (0..=RATE_STEPS).map(|m| (z_lo + m as f64 * h).exp()).collect()
}

/// ∫₀^∞ coverage(θ)/(1+θ) dθ in nats from coverage sampled on
/// [`rate_theta_grid`], with a bound on the part above the grid. The tail
/// assumes the power-law decay of the last grid decade continues.
pub fn coverage_log_integral(cov: &[f64]) -> Result<(f64, f64)> {
    let grid = rate_theta_grid();
    if cov.len() != grid.len() {
        return Err(domain("coverage_log_integral", "coverage not on the rate grid"));
    }
    let h = (grid[1] / grid[0]).ln();
    // Simpson in z = ln θ of cov·θ/(1+θ)
    let mut acc = 0.0;
    for (m, (&c, &th)) in cov.iter().zip(&grid).enumerate() {
        let w = if m == 0 || m == RATE_STEPS {
            1.0
        } else if m % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * c * th / (1.0 + th);
    }
    acc *= h / 3.0;
    // coverage is within 1 − cov[0] of its value below the grid
    acc += cov[0] * grid[0].ln_1p();
    let c_hi = cov[RATE_STEPS];
    let back = RATE_STEPS / 8;
    let c_prev = cov[RATE_STEPS - back];
    let tail = if c_hi <= 0.0 {
        0.0
    } else {
        let k = ((c_prev / c_hi).ln() / (back as f64 * h)).max(0.5);
        c_hi / k
    };
    if tail > RATE_TAIL_SHARE * acc.max(1e-300) {
        return Err(Error::Quadrature {
            context: "coverage beyond +40 dB",
            estimate: tail,
        });
    }
    Ok((acc, tail))
}

/// Conditional outage under the gamma interference law.
pub fn conditional_outage_exact(
    dir: Direction,
    theta: f64,
    rho: f64,
    scenario: &Scenario,
    quad: QuadratureSpec,
) -> Result<OutageResult> {
    Evaluator::new(scenario, quad)?.conditional_outage(dir, theta, rho, EngineKind::ExactGamma)
}

/// Conditional outage with interference replaced by its conditional mean.
pub fn conditional_outage_mean_approx(
    dir: Direction,
    theta: f64,
    rho: f64,
    scenario: &Scenario,
    quad: QuadratureSpec,
) -> Result<OutageResult> {
    Evaluator::new(scenario, quad)?.conditional_outage(dir, theta, rho, EngineKind::MeanApprox)
}

pub fn outage(
    dir: Direction,
    theta: f64,
    scenario: &Scenario,
    quad: QuadratureSpec,
    engine: EngineKind,
) -> Result<OutageResult> {
    Evaluator::new(scenario, quad)?.outage(dir, theta, engine)
}

pub fn average_sum_rate(scenario: &Scenario, quad: QuadratureSpec, engine: EngineKind) -> Result<RateResult> {
    Evaluator::new(scenario, quad)?.average_sum_rate(engine)
}
