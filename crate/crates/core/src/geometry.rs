//! Base-station field sampling, nearest-BS association, port geometry and
//! the fluid-metal switching model.

use crate::error::{domain, Error, Result};
use crate::params::{FluidAntennaGeometry, NetworkParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use std::f64::consts::PI;

/// BS positions in a disc around the origin, plus the index of the
/// nearest one.
#[derive(Debug, Clone, PartialEq)]
pub struct BsField {
    pub positions: Vec<[f64; 2]>,
    pub origin_serving_index: Option<usize>,
}

impl BsField {
    pub fn serving(&self) -> Result<usize> {
        self.origin_serving_index.ok_or(Error::NoServingBs)
    }

    pub fn distance(&self, k: usize) -> f64 {
        let [x, y] = self.positions[k];
        x.hypot(y)
    }
}

/// Samples PPP(λ_b) in a disc of radius `r_sim` from a seeded stream.
pub fn sample_bs_field(params: &NetworkParams, r_sim: f64, rng_seed: u64) -> Result<BsField> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    sample_bs_field_with(params.lambda_b, r_sim, &mut rng)
}

/// As [`sample_bs_field`] but drawing from a caller-owned stream.
pub fn sample_bs_field_with<R: Rng + ?Sized>(lambda_b: f64, r_sim: f64, rng: &mut R) -> Result<BsField> {
    if !(r_sim > 0.0 && r_sim.is_finite()) {
        return Err(domain(
            "sample_bs_field",
            format!("r_sim must be positive, got {r_sim}"),
        ));
    }
    if !(lambda_b >= 0.0 && lambda_b.is_finite()) {
        return Err(domain("sample_bs_field", format!("bad density {lambda_b}")));
    }
    let mean = lambda_b * PI * r_sim * r_sim;
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| domain("sample_bs_field", e.to_string()))?
            .sample(rng) as usize
    } else {
        0
    };
    let mut positions = Vec::with_capacity(count);
    let mut best = (f64::INFINITY, None);
    for k in 0..count {
        let r = r_sim * rng.random::<f64>().sqrt();
        let phi = 2.0 * PI * rng.random::<f64>();
        positions.push([r * phi.cos(), r * phi.sin()]);
        if r < best.0 {
            best = (r, Some(k));
        }
    }
    Ok(BsField {
        positions,
        origin_serving_index: best.1,
    })
}

/// Nearest-BS distance density 2πλρ·exp(−πλρ²).
pub fn contact_distance_pdf(rho: f64, lambda_b: f64) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(domain("contact_distance_pdf", format!("rho = {rho}")));
    }
    Ok(2.0 * PI * lambda_b * rho * (-PI * lambda_b * rho * rho).exp())
}

/// Inverse-cdf draw of the nearest-BS distance.
pub fn sample_contact_distance<R: Rng + ?Sized>(lambda_b: f64, rng: &mut R) -> f64 {
    let u: f64 = 1.0 - rng.random::<f64>();
    (-u.ln() / (PI * lambda_b)).sqrt()
}

/// Distance from port `i` (1-based) to a node at distance `rho` from the
/// antenna centre.
pub fn port_distance(rho: f64, i: usize, fa: &FluidAntennaGeometry) -> Result<f64> {
    if i == 0 || i > fa.n_ports {
        return Err(domain("port_distance", format!("port {i} outside 1..={}", fa.n_ports)));
    }
    if !(rho >= 0.0) {
        return Err(domain("port_distance", format!("rho = {rho}")));
    }
    Ok(port_distance_unchecked(rho, i, fa))
}

pub(crate) fn port_distance_unchecked(rho: f64, i: usize, fa: &FluidAntennaGeometry) -> f64 {
    if fa.n_ports == 1 {
        return rho;
    }
    let n = fa.n_ports as f64;
    let f = (n - 2.0 * i as f64 + 1.0) / (n - 1.0);
    let h = 0.5 * fa.length() * f;
    (rho * rho + h * h).sqrt()
}

/// All N port distances.
pub fn port_distances(rho: f64, fa: &FluidAntennaGeometry) -> Vec<f64> {
    (1..=fa.n_ports).map(|i| port_distance_unchecked(rho, i, fa)).collect()
}

/// Channel uses lost while the drop travels the full antenna, (N−1)·δ·Bc.
pub fn switching_channel_uses(fa: &FluidAntennaGeometry, bc: f64) -> f64 {
    if fa.n_ports < 2 {
        0.0
    } else {
        (fa.n_ports - 1) as f64 * fa.delay() * bc
    }
}

/// Fractional power control min(ω R^{aε}, P_m).
pub fn ue_tx_power(r: f64, params: &NetworkParams) -> Result<f64> {
    if !(r > 0.0) {
        return Err(domain("ue_tx_power", format!("R = {r}")));
    }
    Ok(ue_tx_power_unchecked(r, params))
}

pub(crate) fn ue_tx_power_unchecked(r: f64, p: &NetworkParams) -> f64 {
    (p.omega * r.powf(p.a * p.epsilon)).min(p.p_max)
}

/// Mean BS-interference power from beyond `r_sim`, as a fraction of the
/// full-plane mean seen at distance `rho` from the serving BS.
pub fn window_truncation_fraction(params: &NetworkParams, r_sim: f64, rho: f64) -> f64 {
    let a = params.a;
    (r_sim / rho).powf(2.0 - a)
}
