//! Independent checks of the analytical engine: closed forms, plain
//! quadrature written here, and sampled channels.

use fafd::analysis::{coverage_log_integral, joint_estimated_cdf, rate_theta_grid, EngineKind, Evaluator};
use fafd::channel::{correlation_profile, draw_channel_block, rice_params};
use fafd::estimation::{csi_variances, PilotBudget};
use fafd::geometry::ue_tx_power;
use fafd::interference::{
    laplace_variance, var_dl_bs_at, var_dl_ue, var_ul_bs, Direction, FieldMoments, InterferenceClass,
};
use fafd::params::{CsiMode, Scenario, SelectionLaw};
use fafd::quadrature::QuadratureSpec;
use fafd::special::exp_integral_en;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Direct joint-cdf evaluation, so closed forms are compared without the
/// interpolation error of the table.
fn direct() -> QuadratureSpec {
    QuadratureSpec {
        table_step: 0.0,
        ..QuadratureSpec::default()
    }
}

fn single_port() -> Scenario {
    let mut s = Scenario::default();
    s.fa.n_ports = 1;
    s.csi = CsiMode::Perfect;
    s
}

/// Rayleigh outage averaged over Gamma(k, s) interference:
/// 1 − e^{−c N₀}(1 + c s)^{−k} with c = θ rᵃ/(P σ²).
fn rayleigh_gamma_outage(c: f64, n0: f64, mean: f64, var: f64) -> f64 {
    let (k, sc) = (mean * mean / var, var / mean);
    1.0 - (-c * n0).exp() * (1.0 + c * sc).powf(-k)
}

fn closed_single_port(s: &Scenario, dir: Direction, theta: f64, rho: f64) -> f64 {
    let p = &s.net;
    let fm = FieldMoments::new(p).unwrap();
    let (tx, m) = match dir {
        Direction::Dl => (p.p_bs, fm.dl_total(p, rho)),
        Direction::Ul => (ue_tx_power(rho, p).unwrap(), fm.ul_total()),
    };
    let c = theta * rho.powf(p.a) / (tx * p.sigma2);
    rayleigh_gamma_outage(c, p.n0, m.mean, m.var)
}

#[test]
fn single_port_conditional_outage_matches_closed_form() {
    let s = single_port();
    let ev = Evaluator::new(&s, direct()).unwrap();
    for dir in [Direction::Dl, Direction::Ul] {
        for rho in [5.0, 40.0, 150.0] {
            for theta in [0.1, 1.0, 10.0] {
                let got = ev
                    .conditional_outage(dir, theta, rho, EngineKind::ExactGamma)
                    .unwrap()
                    .value;
                let want = closed_single_port(&s, dir, theta, rho);
                assert!(
                    (got - want).abs() < 1e-6,
                    "{dir:?} rho={rho} theta={theta}: {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn single_port_mean_engine_uses_mean_interference() {
    let s = single_port();
    let p = &s.net;
    let ev = Evaluator::new(&s, direct()).unwrap();
    let fm = FieldMoments::new(p).unwrap();
    let rho: f64 = 30.0;
    let theta = 2.0;
    let c = theta * rho.powf(p.a) / (p.p_bs * p.sigma2);
    let want = 1.0 - (-c * (fm.dl_total(p, rho).mean + p.n0)).exp();
    let got = ev
        .conditional_outage(Direction::Dl, theta, rho, EngineKind::MeanApprox)
        .unwrap()
        .value;
    assert!((got - want).abs() < 1e-9, "{got} vs {want}");
}

/// Composite Simpson over u = πλρ² ∈ [0, 30], in v = u^{1/10}; power
/// control makes the UL integrand behave like u^{0.4} at the origin.
fn average_over_contact(lambda: f64, f: impl Fn(f64) -> f64) -> f64 {
    let n = 4000;
    let v_max = 30f64.powf(0.1);
    let h = v_max / n as f64;
    (0..=n)
        .map(|k| {
            let v = k as f64 * h;
            let u = v.powi(10);
            let w = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let rho = (u / (PI * lambda)).sqrt().max(1e-6);
            w * f(rho) * (-u).exp() * 10.0 * v.powi(9)
        })
        .sum::<f64>()
        * h
        / 3.0
}

#[test]
fn single_port_outage_matches_independent_quadrature() {
    let s = single_port();
    let ev = Evaluator::new(&s, direct()).unwrap();
    for dir in [Direction::Dl, Direction::Ul] {
        let theta = 1.0;
        let want = average_over_contact(s.net.lambda_b, |rho| closed_single_port(&s, dir, theta, rho));
        let adaptive = ev.outage(dir, theta, EngineKind::ExactGamma).unwrap().value;
        let fixed = ev.outage_curve(dir, &[theta], EngineKind::ExactGamma).unwrap()[0].value;
        assert!((adaptive - want).abs() < 1e-5, "{dir:?} adaptive {adaptive} vs {want}");
        assert!((fixed - want).abs() < 1e-4, "{dir:?} fixed rule {fixed} vs {want}");
    }
}

#[test]
fn fixed_rule_tracks_adaptive_outage() {
    let mut s = Scenario::default();
    s.fa.n_ports = 5;
    let ev = Evaluator::new(&s, QuadratureSpec::default()).unwrap();
    for dir in [Direction::Dl, Direction::Ul] {
        let adaptive = ev.outage(dir, s.net.theta, EngineKind::ExactGamma).unwrap().value;
        let fixed = ev.outage_curve(dir, &[s.net.theta], EngineKind::ExactGamma).unwrap()[0].value;
        assert!((adaptive - fixed).abs() < 1e-3, "{dir:?}: {adaptive} vs {fixed}");
    }
}

#[test]
fn tabulated_cdf_matches_direct_evaluation() {
    let mut s = Scenario::default();
    s.fa.n_ports = 8;
    let table = Evaluator::new(&s, QuadratureSpec::default()).unwrap();
    let direct = Evaluator::new(&s, direct()).unwrap();
    let thetas = [0.01, 0.3, 3.0, 30.0];
    for dir in [Direction::Dl, Direction::Ul] {
        for rho in [10.0, 60.0] {
            let (a, _) = table
                .conditional_curve(dir, &thetas, rho, EngineKind::ExactGamma)
                .unwrap();
            let (b, _) = direct
                .conditional_curve(dir, &thetas, rho, EngineKind::ExactGamma)
                .unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 2e-3, "{dir:?} rho={rho}: table {x} direct {y}");
            }
        }
    }
}

#[test]
fn exact_engine_tends_to_mean_engine() {
    let mut s = Scenario::default();
    s.fa.n_ports = 4;
    let ev = Evaluator::new(&s, QuadratureSpec::default())
        .unwrap()
        .with_variance_scale(1e-8)
        .unwrap();
    for dir in [Direction::Dl, Direction::Ul] {
        let e = ev
            .conditional_outage(dir, 1.0, 40.0, EngineKind::ExactGamma)
            .unwrap()
            .value;
        let m = ev
            .conditional_outage(dir, 1.0, 40.0, EngineKind::MeanApprox)
            .unwrap()
            .value;
        assert!((e - m).abs() < 1e-3, "{dir:?}: {e} vs {m}");
    }
}

#[test]
fn log_integral_recovers_rayleigh_capacity() {
    for snr in [0.5, 3.0, 30.0] {
        let cov: Vec<f64> = rate_theta_grid().iter().map(|t| (-t / snr).exp()).collect();
        let (nats, _) = coverage_log_integral(&cov).unwrap();
        let want = (1.0 / snr).exp() * exp_integral_en(1.0, 1.0 / snr).unwrap();
        assert!((nats - want).abs() < 2e-3 * want, "snr {snr}: {nats} vs {want}");
    }
}

#[test]
fn joint_cdf_matches_sampled_estimates() {
    let s = Scenario::default();
    let p = &s.net;
    let fa = s.fa.with_ports(3);
    let budget = PilotBudget::new(p, &fa);
    let fm = FieldMoments::new(p).unwrap();
    let csi = csi_variances(p, 80.0, &fa, &budget, CsiMode::Estimated, fm.dl_ue.mean, fm.ul_bs.mean).unwrap();
    let prof = correlation_profile(&fa);
    let rice = rice_params(&prof, p.sigma2, &csi.direct, SelectionLaw::Orthogonal);
    let draws = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let amps: Vec<Vec<f64>> = (0..draws)
        .map(|_| {
            let b = draw_channel_block(&prof, p.sigma2, &csi.direct, (0.0, 0.0), 1.0, &mut rng).unwrap();
            b.g_hat.iter().map(|g| g.norm()).collect()
        })
        .collect();
    for tau in [0.4, 0.8, 1.3] {
        let taus = [tau, 0.9 * tau, 1.1 * tau];
        let f = joint_estimated_cdf(&taus, &rice).unwrap();
        let hits = amps.iter().filter(|a| a.iter().zip(&taus).all(|(x, t)| x <= t)).count();
        let emp = hits as f64 / draws as f64;
        let se = (emp * (1.0 - emp) / draws as f64).sqrt().max(1e-4);
        assert!((f - emp).abs() < 4.0 * se, "tau {tau}: {f} vs {emp} ± {se}");
    }
}

#[test]
fn closed_variances_match_laplace_differentiation() {
    let p = Scenario::default().net;
    let rho = 50.0;
    for (c, v) in [
        (InterferenceClass::DlBs, var_dl_bs_at(&p, rho)),
        (InterferenceClass::DlUe, var_dl_ue(&p).unwrap()),
        (InterferenceClass::UlBs, var_ul_bs(&p).unwrap()),
    ] {
        let l = laplace_variance(c, &p, rho).unwrap();
        assert!((l - v).abs() < 0.02 * v, "{}: laplace {l:e} closed {v:e}", c.name());
    }
}
