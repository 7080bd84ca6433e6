//! Special functions used by the outage analysis.
//!
//! Everything here is plain `f64`, pure and allocation free. Kernels target a
//! relative accuracy of about 1e-10 (see [`AccuracySpec`]); most are close to
//! machine precision over the argument ranges the analysis produces.

use crate::error::{domain, Result};
use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Accuracy target of the kernels in this module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracySpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for AccuracySpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
        }
    }
}

impl AccuracySpec {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Result<Self> {
        if !(rel_tol > 0.0 && abs_tol > 0.0) {
            return Err(domain("AccuracySpec::new", "tolerances must be positive"));
        }
        Ok(Self { rel_tol, abs_tol })
    }

    pub fn accepts(&self, got: f64, want: f64) -> bool {
        (got - want).abs() <= self.abs_tol.max(self.rel_tol * want.abs())
    }
}

fn finite(func: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(domain(func, format!("non-finite argument {x}")))
    }
}

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    let t = x + G + 0.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Gamma function for `x > 0`.
pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

/// Regularized lower and upper incomplete gamma `(P(s,x), Q(s,x))`, `s > 0`, `x >= 0`.
pub(crate) fn gamma_pq(s: f64, x: f64) -> (f64, f64) {
    if x == 0.0 {
        return (0.0, 1.0);
    }
    let log_pref = s * x.ln() - x - ln_gamma(s);
    if x < s + 1.0 {
        // series for P
        let mut ap = s;
        let mut del = 1.0 / s;
        let mut sum = del;
        for _ in 0..10_000 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        let p = sum * log_pref.exp();
        (p, 1.0 - p)
    } else {
        // modified Lentz continued fraction for Q
        let tiny = 1e-300;
        let mut b = x + 1.0 - s;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - s);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        let q = h * log_pref.exp();
        (1.0 - q, q)
    }
}

/// Upper incomplete gamma Γ(s, x) = ∫ₓ^∞ t^{s−1} e^{−t} dt.
///
/// Any real `s` is accepted for `x > 0`; `s <= 0` with `x = 0` diverges and
/// is rejected. `s = 0` is evaluated as E₁(x) directly.
pub fn upper_incomplete_gamma(s: f64, x: f64) -> Result<f64> {
    finite("upper_incomplete_gamma", s)?;
    finite("upper_incomplete_gamma", x)?;
    if x < 0.0 {
        return Err(domain("upper_incomplete_gamma", "x must be >= 0"));
    }
    if s <= 0.0 && x == 0.0 {
        return Err(domain("upper_incomplete_gamma", format!("Γ({s}, 0) diverges")));
    }
    if s == 0.0 {
        return Ok(expint_e1(x));
    }
    if s > 0.0 {
        if x == 0.0 {
            return Ok(gamma(s));
        }
        let (_, q) = gamma_pq(s, x);
        return Ok(q * gamma(s));
    }
    // Γ(s, x) = x^s E_{1−s}(x)
    Ok(x.powf(s) * expint_en_unchecked(1.0 - s, x))
}

/// Generalized exponential integral E_n(x) = ∫₁^∞ e^{−xt} t^{−n} dt, real `n`, `x > 0`.
pub fn exp_integral_en(n: f64, x: f64) -> Result<f64> {
    finite("exp_integral_en", n)?;
    finite("exp_integral_en", x)?;
    if x <= 0.0 {
        return Err(domain("exp_integral_en", "x must be > 0"));
    }
    Ok(expint_en_unchecked(n, x))
}

fn expint_e1(x: f64) -> f64 {
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        expint_cf(1.0, x)
    }
}

/// Continued fraction for E_n(x), valid for x > 1 and any real n.
fn expint_cf(n: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + n;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let fi = i as f64;
        let an = -fi * (n - 1.0 + fi);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-x).exp()
}

fn expint_en_unchecked(n: f64, x: f64) -> f64 {
    if x > 1.0 {
        return expint_cf(n, x);
    }
    let floor = n.floor();
    let frac = n - floor;
    // near-integer orders use the integer path
    let (base, start) = if !(1e-7..=1.0 - 1e-7).contains(&frac) {
        let k = n.round();
        if k <= 0.0 {
            // E_{−m}(x) = Γ(1+m, x)/x^{1+m}
            let m = -k;
            let (_, q) = gamma_pq(1.0 + m, x);
            return q * gamma(1.0 + m) / x.powf(1.0 + m);
        }
        (expint_e1(x), 1.0)
    } else if floor < 0.0 {
        // negative non-integer order: Γ(1−n, x) has positive first argument
        let s = 1.0 - n;
        let (_, q) = gamma_pq(s, x);
        return q * gamma(s) * x.powf(n - 1.0);
    } else {
        // E_frac with frac in (0,1): x^{frac−1} Γ(1−frac, x)
        let s = 1.0 - frac;
        let (_, q) = gamma_pq(s, x);
        (q * gamma(s) * x.powf(frac - 1.0), frac)
    };
    // upward recurrence E_{ν+1} = (e^{−x} − x E_ν)/ν, stable for x <= 1 < ν
    let target = n.round_ties_even();
    let steps = if start == 1.0 {
        (target - 1.0) as i64
    } else {
        floor as i64
    };
    let ex = (-x).exp();
    let mut e = base;
    let mut nu = start;
    for _ in 0..steps {
        e = (ex - x * e) / nu;
        nu += 1.0;
    }
    e
}

/// Bessel function of the first kind, order zero.
///
/// Uses the trapezoid rule on J₀(x) = (1/π)∫₀^π cos(x sin φ) dφ; the integrand
/// is periodic, so the rule converges geometrically once the node count
/// exceeds |x|.
pub fn bessel_j0(x: f64) -> Result<f64> {
    finite("bessel_j0", x)?;
    Ok(j0_unchecked(x))
}

pub(crate) fn j0_unchecked(x: f64) -> f64 {
    let x = x.abs();
    let m = (x.ceil() as usize) + 40;
    let h = PI / m as f64;
    let mut sum = 0.0;
    // midpoint nodes: same geometric convergence, no endpoint weights
    for k in 0..m {
        let phi = (k as f64 + 0.5) * h;
        sum += (x * phi.sin()).cos();
    }
    sum / m as f64
}

/// Modified Bessel function of the first kind, order zero, for `x >= 0`.
pub fn bessel_i0(x: f64) -> Result<f64> {
    check_i0("bessel_i0", x)?;
    let s = i0_scaled_unchecked(x);
    if x > 700.0 {
        // keep the product finite for as long as it is representable
        Ok(s * (x / 2.0).exp() * (x / 2.0).exp())
    } else {
        Ok(s * x.exp())
    }
}

/// Exponentially scaled e^{−x} I₀(x), finite for every `x >= 0`.
pub fn bessel_i0_scaled(x: f64) -> Result<f64> {
    check_i0("bessel_i0_scaled", x)?;
    Ok(i0_scaled_unchecked(x))
}

fn check_i0(func: &'static str, x: f64) -> Result<()> {
    finite(func, x)?;
    if x < 0.0 {
        return Err(domain(func, "argument must be >= 0"));
    }
    Ok(())
}

fn i0_scaled_unchecked(x: f64) -> f64 {
    if x <= 20.0 {
        let q = x * x / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            let fk = k as f64;
            term *= q / (fk * fk);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum * (-x).exp()
    } else {
        // Hankel asymptotic series; smallest term ~ e^{−2x}
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            let odd = (2 * k - 1) as f64;
            term *= odd * odd / (8.0 * k as f64 * x);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum / (2.0 * PI * x).sqrt()
    }
}

/// First-order Marcum Q-function Q₁(a, b).
pub fn marcum_q1(a: f64, b: f64) -> Result<f64> {
    finite("marcum_q1", a)?;
    finite("marcum_q1", b)?;
    if a < 0.0 || b < 0.0 {
        return Err(domain("marcum_q1", "arguments must be >= 0"));
    }
    Ok(marcum_q1_pair(a, b).0)
}

/// Returns `(Q₁(a,b), 1 − Q₁(a,b))`, each computed without cancellation on
/// its small side. Arguments must be finite and nonnegative (unchecked).
///
/// Sums the Neumann series in exponentially scaled I_k(ab):
/// for a < b, Q₁ = e^{−(b−a)²/2} Σ_{k≥0} (a/b)^k Ĩ_k(ab);
/// for a ≥ b, 1 − Q₁ = e^{−(a−b)²/2} Σ_{k≥1} (b/a)^k Ĩ_k(ab).
/// The series is cut where (ratio)^k times the Gaussian envelope of Ĩ_k is
/// below 1e-17; Ĩ_k comes from Miller's backward recurrence normalized with
/// Ĩ₀ + 2 Σ Ĩ_k = 1.
pub fn marcum_q1_pair(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        return (1.0, 0.0);
    }
    if a == 0.0 {
        let h = -0.5 * b * b;
        return (h.exp(), -h.exp_m1());
    }
    let x = a * b;
    let below = a < b;
    let (r, d) = if below { (a / b, b - a) } else { (b / a, a - b) };
    // both tails are bounded by exp(−d²/2) < 3e-18 past d = 9
    if d > 9.0 {
        return if below { (0.0, 1.0) } else { (1.0, 0.0) };
    }
    let env = (-0.5 * d * d).exp();
    if env == 0.0 {
        return if below { (0.0, 1.0) } else { (1.0, 0.0) };
    }
    let s = if x < 1.0 {
        neumann_small(x, r, below)
    } else {
        neumann_miller(x, r, below)
    };
    let small = (env * s).clamp(0.0, 1.0);
    if below {
        (small, 1.0 - small)
    } else {
        (1.0 - small, small)
    }
}

/// Σ r^k e^{−x} I_k(x) from k0 (0 or 1) via the power series, for x < 1.
fn neumann_small(x: f64, r: f64, below: bool) -> f64 {
    let q = x * x / 4.0;
    let mut sum = 0.0;
    // (x/2)^k / k!
    let mut lead = 1.0;
    let mut rk = 1.0;
    for k in 0..60 {
        if k > 0 {
            lead *= x / 2.0 / k as f64;
            rk *= r;
        }
        let mut inner = 1.0;
        let mut t = 1.0;
        for m in 1..30 {
            t *= q / (m as f64 * (m + k) as f64);
            inner += t;
            if t < 1e-18 * inner {
                break;
            }
        }
        let term = rk * lead * inner;
        if k > 0 || below {
            sum += term;
        }
        if term < 1e-18 * sum.max(1e-300) && k > 2 {
            break;
        }
    }
    sum * (-x).exp()
}

fn neumann_miller(x: f64, r: f64, below: bool) -> f64 {
    let sx = x.sqrt();
    let gauss_cut = 10.0 * sx;
    let ratio_cut = if r < 1.0 { 40.0 / -r.ln() } else { f64::INFINITY };
    let kmax = (gauss_cut.min(ratio_cut) + 30.0) as usize;
    let start = kmax + (10.0 * sx) as usize + 20;
    let two_over_x = 2.0 / x;
    let mut v_next = 0.0; // v_{k+1}
    let mut v = 1e-280; // v_k
    let mut norm = 0.0; // Ĩ0 + 2 Σ Ĩk, unnormalized
    let mut horner = 0.0; // Σ_{k<=kmax} r^k v_k, built downward
    let mut k = start;
    loop {
        if k <= kmax {
            horner = horner * r + v;
        }
        norm += if k == 0 { v } else { 2.0 * v };
        if k == 0 {
            break;
        }
        let v_prev = v_next + (k as f64) * two_over_x * v;
        v_next = v;
        v = v_prev;
        k -= 1;
        if v > 1e250 {
            v *= 1e-250;
            v_next *= 1e-250;
            norm *= 1e-250;
            horner *= 1e-250;
        }
    }
    // v now holds v_0
    let total = horner / norm;
    if below {
        total
    } else {
        total - v / norm
    }
}

/// Regularized lower incomplete gamma P(s, x), exported for the gamma cdf.
pub fn gamma_cdf_regularized(s: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_pq(s, x).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j0_basics() {
        assert_eq!(bessel_j0(0.0).unwrap(), 1.0);
        assert_eq!(bessel_j0(-3.0).unwrap(), bessel_j0(3.0).unwrap());
        assert!(bessel_j0(2.404_825_557_695_773).unwrap().abs() < 1e-9);
        assert!(bessel_j0(f64::NAN).is_err());
    }

    #[test]
    fn i0_basics() {
        assert_eq!(bessel_i0(0.0).unwrap(), 1.0);
        assert!(bessel_i0(-1.0).is_err());
        let big = bessel_i0_scaled(700.0).unwrap();
        assert!(big.is_finite() && big > 0.0);
        assert!((bessel_i0(1.0).unwrap() - 1.266_065_877_752_008_4).abs() < 1e-14);
    }

    #[test]
    fn marcum_edges() {
        assert_eq!(marcum_q1(3.0, 0.0).unwrap(), 1.0);
        for b in [0.1, 1.0, 2.5, 6.0] {
            let want = (-b * b / 2.0f64).exp();
            assert!((marcum_q1(0.0, b).unwrap() - want).abs() < 1e-15);
        }
        assert!(marcum_q1(-1.0, 1.0).is_err());
    }

    #[test]
    fn marcum_symmetric_point() {
        // Q1(a, a) = (1 + e^{-a²} I0(a²)) / 2
        for a in [0.5, 2.0, 7.0, 30.0] {
            let want = 0.5 * (1.0 + bessel_i0_scaled(a * a).unwrap());
            assert!((marcum_q1(a, a).unwrap() - want).abs() < 1e-12, "a = {a}");
        }
    }

    #[test]
    fn incomplete_gamma_closed_forms() {
        for x in [0.0, 0.3, 1.0, 4.0, 20.0] {
            let got = upper_incomplete_gamma(1.0, x).unwrap();
            assert!((got - (-x).exp()).abs() < 1e-14);
        }
        let g = upper_incomplete_gamma(0.5, 0.0).unwrap();
        assert!((g - PI.sqrt()).abs() < 1e-13);
        assert!(upper_incomplete_gamma(0.0, 0.0).is_err());
        assert!(upper_incomplete_gamma(-0.5, 0.0).is_err());
        // Γ(0, x) = E1(x)
        let e1 = exp_integral_en(1.0, 1.0).unwrap();
        assert!((upper_incomplete_gamma(0.0, 1.0).unwrap() - e1).abs() < 1e-15);
    }

    #[test]
    fn e1_at_one() {
        assert!((exp_integral_en(1.0, 1.0).unwrap() - 0.219_383_934_395_520_3).abs() < 1e-13);
        assert!(exp_integral_en(2.0, 0.0).is_err());
    }

    #[test]
    fn en_recurrence_across_branches() {
        // n E_{n+1}(x) + x E_n(x) = e^{-x}
        for &n in &[0.5, 1.0, 1.7, 2.0, 3.25] {
            for &x in &[0.01, 0.5, 0.99, 1.01, 3.0] {
                let lhs = n * exp_integral_en(n + 1.0, x).unwrap() + x * exp_integral_en(n, x).unwrap();
                assert!((lhs - (-x).exp()).abs() < 1e-12, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn pure_functions_are_bit_identical() {
        let a = marcum_q1(3.3, 4.1).unwrap();
        let b = marcum_q1(3.3, 4.1).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
