//! Parameter sets and the layered text configuration.
//!
//! All quantities are stored in linear SI units (watts, metres, hertz,
//! seconds). The config layer accepts unit-tagged strings such as
//! `"30 dBm"`, `"-40 dB"`, `"0.06 cm"` or `"100 MHz"` and converts at parse
//! time.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Network-level parameters. Powers in watts, lengths in metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    /// BS density per m².
    pub lambda_b: f64,
    /// UE density per m²; not used by any formula.
    pub lambda_u: f64,
    /// Path-loss exponent.
    pub a: f64,
    /// BS transmit power.
    pub p_bs: f64,
    /// UE maximum transmit power.
    pub p_max: f64,
    /// Receive-sensitivity target of the fractional power control.
    pub omega: f64,
    pub epsilon: f64,
    pub n0: f64,
    /// Small-scale fading variance σ².
    pub sigma2: f64,
    pub b_b: f64,
    pub b_u: f64,
    pub v_li: f64,
    pub mu_nakagami: f64,
    /// Coherence bandwidth, Hz.
    pub bc: f64,
    /// Coherence time, s.
    pub tc: f64,
    /// Channel uses per coherence block; `None` means `bc * tc`.
    pub lc: Option<f64>,
    /// Pilot channel uses (direct plus loop-interference links).
    pub le: f64,
    /// Pilot channel uses of the loop-interference links.
    pub l_li: f64,
    pub w_split: f64,
    /// SINR threshold, linear.
    pub theta: f64,
}

impl NetworkParams {
    pub fn ld(&self) -> f64 {
        self.le - self.l_li
    }

    pub fn coherence_uses(&self) -> f64 {
        self.lc.unwrap_or(self.bc * self.tc)
    }
}

/// Fluid-antenna geometry and the electro-capillary actuation constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluidAntennaGeometry {
    pub n_ports: usize,
    pub kappa: f64,
    /// Carrier wavelength, m.
    pub wavelength: f64,
    pub q_charge: f64,
    pub viscosity: f64,
    /// Thickness-to-length ratio D/L of the metal drop.
    pub dl_ratio: f64,
    /// Voltage difference across the drop, V.
    pub delta_phi: f64,
}

impl FluidAntennaGeometry {
    /// Mean drop velocity u = q/(6μ)·(D/L)·Δφ.
    pub fn velocity(&self) -> f64 {
        self.q_charge / (6.0 * self.viscosity) * self.dl_ratio * self.delta_phi
    }

    /// Hop delay between adjacent ports; zero for a single port.
    pub fn delay(&self) -> f64 {
        if self.n_ports < 2 {
            0.0
        } else {
            self.kappa * self.wavelength / (self.velocity() * (self.n_ports - 1) as f64)
        }
    }

    /// Physical length κλ.
    pub fn length(&self) -> f64 {
        self.kappa * self.wavelength
    }

    /// Displacement of port `i` (1-based) from the reference port.
    pub fn displacement(&self, i: usize) -> f64 {
        if self.n_ports < 2 {
            0.0
        } else {
            (i - 1) as f64 / (self.n_ports - 1) as f64 * self.length()
        }
    }

    pub fn with_ports(&self, n: usize) -> Self {
        Self {
            n_ports: n,
            ..self.clone()
        }
    }
}

/// How the direct-link channel is known at the receivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiMode {
    Estimated,
    Perfect,
}

/// Joint law assumed for the estimated port amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionLaw {
    /// ĝ has per-port variance σ² − σ²_e (orthogonal LMMSE decomposition);
    /// this is the law the simulator realizes.
    Orthogonal,
    /// σ̃² = σ²(1 − μ²) + σ²_e with noncentrality μ, as printed for the
    /// estimated-channel joint distribution.
    Verbatim,
}

/// How interference enters the per-port thresholds of the exact engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// One interference draw shared by all ports.
    Shared,
    /// Independent Gamma draw per port.
    PerPort,
}

/// Treatment of the residual loop-interference gain in the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiMode {
    /// Average over the Gamma law of the gain (one more mixture dimension).
    Mixture,
    /// Replace the gain by its mean.
    Mean,
}

/// Simulator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    pub r_sim: f64,
    pub n_trials: usize,
    pub seed: u64,
}

/// Analytical-engine settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSettings {
    pub selection_law: SelectionLaw,
    pub coupling: Coupling,
    pub li_mode: LiMode,
}

/// Everything one evaluation needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub net: NetworkParams,
    pub fa: FluidAntennaGeometry,
    pub csi: CsiMode,
    pub sim: SimSettings,
    pub analysis: AnalysisSettings,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            net: NetworkParams {
                lambda_b: 5e-5,
                lambda_u: 1e-3,
                a: 4.0,
                p_bs: dbm_to_watts(40.0),
                p_max: dbm_to_watts(30.0),
                omega: db_to_linear(-40.0),
                epsilon: 0.8,
                n0: 1e-5,
                sigma2: 1.0,
                b_b: 1.0,
                b_u: 1.0,
                v_li: 1e-3,
                mu_nakagami: 1.0,
                bc: 100e6,
                tc: 50e-3,
                lc: Some(1e4),
                le: 100.0,
                l_li: 4.0,
                w_split: 0.5,
                theta: db_to_linear(-20.0),
            },
            fa: FluidAntennaGeometry {
                n_ports: 15,
                kappa: 0.2,
                wavelength: 0.06e-2,
                q_charge: 0.07,
                viscosity: 0.002,
                dl_ratio: 5.0,
                delta_phi: 10.0,
            },
            csi: CsiMode::Estimated,
            sim: SimSettings {
                r_sim: 3000.0,
                n_trials: 10_000,
                seed: 1,
            },
            analysis: AnalysisSettings {
                selection_law: SelectionLaw::Orthogonal,
                coupling: Coupling::Shared,
                li_mode: LiMode::Mixture,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dim {
    Density,
    Dimless,
    /// Dimensionless, dB accepted.
    Ratio,
    Power,
    Length,
    Frequency,
    Time,
    Voltage,
    Viscosity,
    Count,
    Text,
}

impl Dim {
    fn unit(self) -> &'static str {
        match self {
            Dim::Density => "/m2",
            Dim::Power => "W",
            Dim::Length => "m",
            Dim::Frequency => "Hz",
            Dim::Time => "s",
            Dim::Voltage => "V",
            Dim::Viscosity => "Pa*s",
            _ => "",
        }
    }
}

/// Keys of the flat config file, in emission order.
const KEYS: &[(&str, Dim)] = &[
    ("lambda_b", Dim::Density),
    ("lambda_u", Dim::Density),
    ("a", Dim::Dimless),
    ("P", Dim::Power),
    ("P_m", Dim::Power),
    ("omega", Dim::Power),
    ("epsilon", Dim::Dimless),
    ("N0", Dim::Power),
    ("sigma2", Dim::Ratio),
    ("b_b", Dim::Length),
    ("b_u", Dim::Length),
    ("v_LI", Dim::Ratio),
    ("mu_nakagami", Dim::Dimless),
    ("Bc", Dim::Frequency),
    ("Tc", Dim::Time),
    ("Lc", Dim::Count),
    ("Le", Dim::Count),
    ("L_LI", Dim::Count),
    ("w_split", Dim::Dimless),
    ("theta", Dim::Ratio),
    ("N", Dim::Count),
    ("kappa", Dim::Dimless),
    ("wavelength", Dim::Length),
    ("q_charge", Dim::Voltage),
    ("viscosity", Dim::Viscosity),
    ("DL_ratio", Dim::Dimless),
    ("delta_phi", Dim::Voltage),
    ("csi_mode", Dim::Text),
    ("selection_law", Dim::Text),
    ("coupling", Dim::Text),
    ("li_mode", Dim::Text),
    ("r_sim", Dim::Length),
    ("n_trials", Dim::Count),
    ("seed", Dim::Count),
];

fn dim_of(key: &str) -> Option<Dim> {
    KEYS.iter().find(|(k, _)| *k == key).map(|(_, d)| *d)
}

/// Parses a unit-tagged quantity into linear base units.
fn parse_quantity(raw: &str, dim: Dim) -> std::result::Result<f64, String> {
    let s = raw.trim();
    let split = s
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E' || c == '/')
        .unwrap_or(s.len());
    let (num, unit) = s.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("cannot parse number in {raw:?}"))?;
    let unit = unit.trim();
    let v = match (dim, unit) {
        (_, "") => value,
        (Dim::Density, "/m2") | (Dim::Density, "/m^2") => value,
        (Dim::Density, "/km2") | (Dim::Density, "/km^2") => value * 1e-6,
        (Dim::Ratio, "dB") => db_to_linear(value),
        (Dim::Power, "W") => value,
        (Dim::Power, "mW") => value * 1e-3,
        (Dim::Power, "dBm") => dbm_to_watts(value),
        (Dim::Power, "dBW") | (Dim::Power, "dB") => db_to_linear(value),
        (Dim::Length, "m") => value,
        (Dim::Length, "cm") => value * 1e-2,
        (Dim::Length, "mm") => value * 1e-3,
        (Dim::Length, "km") => value * 1e3,
        (Dim::Frequency, "Hz") => value,
        (Dim::Frequency, "kHz") => value * 1e3,
        (Dim::Frequency, "MHz") => value * 1e6,
        (Dim::Frequency, "GHz") => value * 1e9,
        (Dim::Time, "s") => value,
        (Dim::Time, "ms") => value * 1e-3,
        (Dim::Time, "us") => value * 1e-6,
        (Dim::Voltage, "V") => value,
        (Dim::Viscosity, "Pa*s") | (Dim::Viscosity, "Pa s") => value,
        (d, u) => return Err(format!("unit {u:?} not valid for a {d:?} quantity")),
    };
    Ok(v)
}

/// Raw key/value layer before validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigLayer {
    values: BTreeMap<String, String>,
}

impl ConfigLayer {
    /// Parses a flat TOML document. Numbers and strings are both accepted.
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut values = BTreeMap::new();
        for (k, v) in table {
            let s = match v {
                toml::Value::String(s) => s,
                toml::Value::Integer(i) => i.to_string(),
                toml::Value::Float(f) => format!("{f:?}"),
                toml::Value::Boolean(b) => b.to_string(),
                other => return Err(Error::Config(format!("{k}: unsupported value {other}"))),
            };
            values.insert(k, s);
        }
        Ok(Self { values })
    }

    /// Parses `key=value` overrides from the command line.
    pub fn from_overrides<S: AsRef<str>>(pairs: &[S]) -> Result<Self> {
        let mut values = BTreeMap::new();
        for p in pairs {
            let (k, v) = p
                .as_ref()
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {:?} is not key=value", p.as_ref())))?;
            values.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    /// Applies this layer over `base`, collecting every violation.
    pub fn apply(&self, base: &Scenario) -> std::result::Result<Scenario, Vec<String>> {
        let mut s = base.clone();
        let mut errors = Vec::new();
        for (key, raw) in &self.values {
            let Some(dim) = dim_of(key) else {
                errors.push(format!("unknown key {key:?}"));
                continue;
            };
            if let Err(e) = assign(&mut s, key, dim, raw) {
                errors.push(format!("{key}: {e}"));
            }
        }
        errors.extend(s.violations());
        if errors.is_empty() {
            Ok(s)
        } else {
            Err(errors)
        }
    }
}

fn assign(s: &mut Scenario, key: &str, dim: Dim, raw: &str) -> std::result::Result<(), String> {
    if dim == Dim::Text {
        let v = raw.trim().to_ascii_lowercase();
        match key {
            "csi_mode" => {
                s.csi = match v.as_str() {
                    "estimated" => CsiMode::Estimated,
                    "perfect" => CsiMode::Perfect,
                    _ => return Err(format!("expected estimated|perfect, got {raw:?}")),
                }
            }
            "selection_law" => {
                s.analysis.selection_law = match v.as_str() {
                    "orthogonal" => SelectionLaw::Orthogonal,
                    "verbatim" => SelectionLaw::Verbatim,
                    _ => return Err(format!("expected orthogonal|verbatim, got {raw:?}")),
                }
            }
            "coupling" => {
                s.analysis.coupling = match v.as_str() {
                    "shared" => Coupling::Shared,
                    "per_port" => Coupling::PerPort,
                    _ => return Err(format!("expected shared|per_port, got {raw:?}")),
                }
            }
            "li_mode" => {
                s.analysis.li_mode = match v.as_str() {
                    "mixture" => LiMode::Mixture,
                    "mean" => LiMode::Mean,
                    _ => return Err(format!("expected mixture|mean, got {raw:?}")),
                }
            }
            _ => unreachable!(),
        }
        return Ok(());
    }
    if key == "Lc" && raw.trim().eq_ignore_ascii_case("auto") {
        s.net.lc = None;
        return Ok(());
    }
    let v = parse_quantity(raw, dim)?;
    let n = &mut s.net;
    match key {
        "lambda_b" => n.lambda_b = v,
        "lambda_u" => n.lambda_u = v,
        "a" => n.a = v,
        "P" => n.p_bs = v,
        "P_m" => n.p_max = v,
        "omega" => n.omega = v,
        "epsilon" => n.epsilon = v,
        "N0" => n.n0 = v,
        "sigma2" => n.sigma2 = v,
        "b_b" => n.b_b = v,
        "b_u" => n.b_u = v,
        "v_LI" => n.v_li = v,
        "mu_nakagami" => n.mu_nakagami = v,
        "Bc" => n.bc = v,
        "Tc" => n.tc = v,
        "Lc" => n.lc = Some(v),
        "Le" => n.le = v,
        "L_LI" => n.l_li = v,
        "w_split" => n.w_split = v,
        "theta" => n.theta = v,
        "N" => s.fa.n_ports = as_count(v)? as usize,
        "kappa" => s.fa.kappa = v,
        "wavelength" => s.fa.wavelength = v,
        "q_charge" => s.fa.q_charge = v,
        "viscosity" => s.fa.viscosity = v,
        "DL_ratio" => s.fa.dl_ratio = v,
        "delta_phi" => s.fa.delta_phi = v,
        "r_sim" => s.sim.r_sim = v,
        "n_trials" => s.sim.n_trials = as_count(v)? as usize,
        "seed" => s.sim.seed = as_count(v)?,
        _ => unreachable!(),
    }
    Ok(())
}

fn as_count(v: f64) -> std::result::Result<u64, String> {
    if v >= 0.0 && v.fract() == 0.0 && v < 1.8e19 {
        Ok(v as u64)
    } else {
        Err(format!("expected a nonnegative integer, got {v}"))
    }
}

impl Scenario {
    /// Every violated invariant, in a stable order.
    pub fn violations(&self) -> Vec<String> {
        let n = &self.net;
        let fa = &self.fa;
        let mut out = Vec::new();
        let mut req = |ok: bool, msg: &str| {
            if !ok {
                out.push(msg.to_string());
            }
        };
        req(n.a > 2.0, "path-loss exponent a must exceed 2");
        req((0.0..=1.0).contains(&n.epsilon), "epsilon must lie in [0, 1]");
        for (name, v) in [
            ("lambda_b", n.lambda_b),
            ("lambda_u", n.lambda_u),
            ("P", n.p_bs),
            ("P_m", n.p_max),
            ("omega", n.omega),
            ("N0", n.n0),
            ("sigma2", n.sigma2),
            ("b_b", n.b_b),
            ("b_u", n.b_u),
            ("Bc", n.bc),
            ("Tc", n.tc),
            ("theta", n.theta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                out.push(format!("{name} must be positive and finite"));
            }
        }
        let mut req = |ok: bool, msg: &str| {
            if !ok {
                out.push(msg.to_string());
            }
        };
        req(n.v_li >= 0.0, "v_LI must be >= 0");
        req(n.mu_nakagami >= 0.5, "mu_nakagami must be >= 0.5");
        req(n.w_split > 0.0 && n.w_split <= 1.0, "w_split must lie in (0, 1]");
        req(n.l_li >= 0.0 && n.le >= n.l_li, "need Le >= L_LI >= 0");
        req(n.coherence_uses() >= n.le, "Lc must be >= Le");
        req(fa.n_ports >= 1, "N must be >= 1");
        req(fa.kappa >= 0.0, "kappa must be >= 0");
        req(fa.wavelength > 0.0, "wavelength must be positive");
        req(
            fa.velocity() > 0.0,
            "drop velocity q/(6 mu)(D/L) delta_phi must be positive",
        );
        req(self.sim.r_sim > 0.0, "r_sim must be positive");
        req(self.sim.n_trials >= 1, "n_trials must be >= 1");
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v.join("; ")))
        }
    }

    /// Loads `defaults ← file ← overrides`.
    pub fn layered(file: Option<&str>, overrides: &[String]) -> std::result::Result<Self, Vec<String>> {
        let mut layer = match file {
            Some(text) => ConfigLayer::from_toml(text).map_err(|e| vec![e.to_string()])?,
            None => ConfigLayer::default(),
        };
        let extra = ConfigLayer::from_overrides(overrides).map_err(|e| vec![e.to_string()])?;
        layer.values.extend(extra.values);
        layer.apply(&Scenario::default())
    }

    /// Serializes the scenario as a config file in linear base units.
    pub fn to_config_text(&self) -> String {
        let n = &self.net;
        let fa = &self.fa;
        let mut out = String::new();
        let mut put = |key: &str, v: String, note: &str| {
            if note.is_empty() {
                let _ = writeln!(out, "{key} = \"{v}\"");
            } else {
                let _ = writeln!(out, "{key} = \"{v}\"  # {note}");
            }
        };
        let q = |v: f64, d: Dim| {
            let u = d.unit();
            if u.is_empty() {
                format!("{v}")
            } else {
                format!("{v} {u}")
            }
        };
        let dbm = |w: f64| format!("{:.4} dBm", 10.0 * (w * 1e3).log10());
        let db = |x: f64| format!("{:.4} dB", 10.0 * x.log10());
        put("lambda_b", q(n.lambda_b, Dim::Density), "BS density");
        put("lambda_u", q(n.lambda_u, Dim::Density), "UE density, bookkeeping only");
        put("a", q(n.a, Dim::Dimless), "path-loss exponent");
        put("P", q(n.p_bs, Dim::Power), &dbm(n.p_bs));
        put("P_m", q(n.p_max, Dim::Power), &dbm(n.p_max));
        put("omega", q(n.omega, Dim::Power), &db(n.omega));
        put("epsilon", q(n.epsilon, Dim::Dimless), "power-control fraction");
        put("N0", q(n.n0, Dim::Power), "noise variance");
        put("sigma2", q(n.sigma2, Dim::Ratio), "fading variance");
        put("b_b", q(n.b_b, Dim::Length), "BS-BS exclusion");
        put("b_u", q(n.b_u, Dim::Length), "UE-UE exclusion");
        put("v_LI", q(n.v_li, Dim::Ratio), "loop-interference path loss");
        put("mu_nakagami", q(n.mu_nakagami, Dim::Dimless), "residual LI shape");
        put("Bc", q(n.bc, Dim::Frequency), "coherence bandwidth");
        put("Tc", q(n.tc, Dim::Time), "coherence time");
        match n.lc {
            Some(lc) => put("Lc", q(lc, Dim::Count), "channel uses per block"),
            None => put("Lc", "auto".into(), "Bc * Tc"),
        }
        put("Le", q(n.le, Dim::Count), "pilot channel uses");
        put("L_LI", q(n.l_li, Dim::Count), "loop-interference pilot uses");
        put("w_split", q(n.w_split, Dim::Dimless), "BS share of LI pilots");
        put("theta", q(n.theta, Dim::Ratio), &db(n.theta));
        put("N", format!("{}", fa.n_ports), "ports");
        put("kappa", q(fa.kappa, Dim::Dimless), "size in wavelengths");
        put("wavelength", q(fa.wavelength, Dim::Length), "");
        put("q_charge", q(fa.q_charge, Dim::Voltage), "double-layer charge");
        put("viscosity", q(fa.viscosity, Dim::Viscosity), "");
        put("DL_ratio", q(fa.dl_ratio, Dim::Dimless), "D/L");
        put("delta_phi", q(fa.delta_phi, Dim::Voltage), "voltage difference");
        let text = |m: &str| m.to_string();
        put(
            "csi_mode",
            text(match self.csi {
                CsiMode::Estimated => "estimated",
                CsiMode::Perfect => "perfect",
            }),
            "",
        );
        put(
            "selection_law",
            text(match self.analysis.selection_law {
                SelectionLaw::Orthogonal => "orthogonal",
                SelectionLaw::Verbatim => "verbatim",
            }),
            "",
        );
        put(
            "coupling",
            text(match self.analysis.coupling {
                Coupling::Shared => "shared",
                Coupling::PerPort => "per_port",
            }),
            "",
        );
        put(
            "li_mode",
            text(match self.analysis.li_mode {
                LiMode::Mixture => "mixture",
                LiMode::Mean => "mean",
            }),
            "",
        );
        put("r_sim", q(self.sim.r_sim, Dim::Length), "simulation disc radius");
        put("n_trials", format!("{}", self.sim.n_trials), "");
        put("seed", format!("{}", self.sim.seed), "");
        out
    }

    /// Hex SHA-256 of the canonical config text.
    pub fn config_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(self.to_config_text().as_bytes()))
    }
}
