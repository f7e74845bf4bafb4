//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuits::ProtocolParams;
use crate::dynamics::NoiseModel;
use crate::error::{Error, Result};
use crate::gates::{GateModel, SelectiveHamiltonian};
use crate::hilbert::HilbertConfig;
use crate::states::CodeParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateModelChoice {
    Noiseless,
    Suspended,
    Active,
}

impl FromStr for GateModelChoice {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "noiseless" => Ok(Self::Noiseless),
            "suspended" => Ok(Self::Suspended),
            "active" => Ok(Self::Active),
            _ => Err(format!("gate_model must be noiseless, suspended or active, got '{s}'")),
        }
    }
}

impl fmt::Display for GateModelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Noiseless => "noiseless",
            Self::Suspended => "suspended",
            Self::Active => "active",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitMode {
    IdealState,
    FullEncode,
}

impl FromStr for InitMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ideal-state" => Ok(Self::IdealState),
            "full-encode" => Ok(Self::FullEncode),
            _ => Err(format!("init_mode must be ideal-state or full-encode, got '{s}'")),
        }
    }
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::IdealState => "ideal-state",
            Self::FullEncode => "full-encode",
        })
    }
}

/// Physical, protocol and numerical parameters of a run. Times in the units
/// named by each field; `inf` disables the corresponding noise channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub chi_over_2pi_mhz: f64,
    pub t1_us: f64,
    pub t2_us: f64,
    pub tcav_us: f64,
    pub nbar: f64,
    pub alpha_phase: f64,
    pub fock_dim: usize,
    pub tw_us: f64,
    pub n_cycles: usize,
    pub gate_model: GateModelChoice,
    pub t_sel_ns: f64,
    pub seed: u64,
    pub init_mode: InitMode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            chi_over_2pi_mhz: 40.0,
            t1_us: 100.0,
            t2_us: 100.0,
            tcav_us: 2000.0,
            nbar: 4.0,
            alpha_phase: 0.0,
            fock_dim: 70,
            tw_us: 65.6,
            n_cycles: 60,
            gate_model: GateModelChoice::Suspended,
            t_sel_ns: 54.0,
            seed: 0,
            init_mode: InitMode::IdealState,
        }
    }
}

pub const KEYS: [&str; 13] = [
    "chi_over_2pi_mhz",
    "t1_us",
    "t2_us",
    "tcav_us",
    "nbar",
    "alpha_phase",
    "fock_dim",
    "tw_us",
    "n_cycles",
    "gate_model",
    "t_sel_ns",
    "seed",
    "init_mode",
];

fn parse_time(v: &str) -> std::result::Result<f64, String> {
    if v == "inf" {
        return Ok(f64::INFINITY);
    }
    v.parse::<f64>().map_err(|e| format!("'{v}': {e}"))
}

fn parse_num<T: FromStr>(v: &str) -> std::result::Result<T, String>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("'{v}': {e}"))
}

fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x:?}")
    }
}

impl ExperimentConfig {
    /// Parse the text form. Keys not mentioned keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        let mut last_line = 0;
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            last_line = line_no;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config { line: line_no, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(prev) = seen.insert(key.to_string(), line_no) {
                return Err(err(format!("duplicate key '{key}' (first set on line {prev})")));
            }
            cfg.set(key, value).map_err(err)?;
        }
        if let Some((key, message)) = cfg.violation() {
            // defaults are blamed on the end of the file
            let line = seen.get(key).copied().unwrap_or(last_line);
            return Err(Error::Config { line, message });
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "chi_over_2pi_mhz" => self.chi_over_2pi_mhz = parse_num(value)?,
            "t1_us" => self.t1_us = parse_time(value)?,
            "t2_us" => self.t2_us = parse_time(value)?,
            "tcav_us" => self.tcav_us = parse_time(value)?,
            "nbar" => self.nbar = parse_num(value)?,
            "alpha_phase" => self.alpha_phase = parse_num(value)?,
            "fock_dim" => self.fock_dim = parse_num(value)?,
            "tw_us" => self.tw_us = parse_num(value)?,
            "n_cycles" => self.n_cycles = parse_num(value)?,
            "gate_model" => self.gate_model = value.parse()?,
            "t_sel_ns" => self.t_sel_ns = parse_num(value)?,
            "seed" => self.seed = parse_num(value)?,
            "init_mode" => self.init_mode = value.parse()?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Every key with its resolved value, in documented order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("chi_over_2pi_mhz", fmt_f64(self.chi_over_2pi_mhz)),
            ("t1_us", fmt_f64(self.t1_us)),
            ("t2_us", fmt_f64(self.t2_us)),
            ("tcav_us", fmt_f64(self.tcav_us)),
            ("nbar", fmt_f64(self.nbar)),
            ("alpha_phase", fmt_f64(self.alpha_phase)),
            ("fock_dim", self.fock_dim.to_string()),
            ("tw_us", fmt_f64(self.tw_us)),
            ("n_cycles", self.n_cycles.to_string()),
            ("gate_model", self.gate_model.to_string()),
            ("t_sel_ns", fmt_f64(self.t_sel_ns)),
            ("seed", self.seed.to_string()),
            ("init_mode", self.init_mode.to_string()),
        ]
    }

    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        match self.violation() {
            Some((_, m)) => Err(Error::InvalidArgument(m)),
            None => Ok(()),
        }
    }

    /// First violated invariant with the key responsible for it.
    fn violation(&self) -> Option<(&'static str, String)> {
        let positive = [
            ("chi_over_2pi_mhz", self.chi_over_2pi_mhz),
            ("t1_us", self.t1_us),
            ("t2_us", self.t2_us),
            ("tcav_us", self.tcav_us),
            ("nbar", self.nbar),
            ("t_sel_ns", self.t_sel_ns),
        ];
        for (k, v) in positive {
            if !(v > 0.0) {
                return Some((k, format!("{k} must be positive, got {v}")));
            }
        }
        for (k, v) in [
            ("chi_over_2pi_mhz", self.chi_over_2pi_mhz),
            ("nbar", self.nbar),
            ("t_sel_ns", self.t_sel_ns),
            ("alpha_phase", self.alpha_phase),
        ] {
            if !v.is_finite() {
                return Some((k, format!("{k} must be finite")));
            }
        }
        if !(self.tw_us >= 0.0) || !self.tw_us.is_finite() {
            return Some(("tw_us", format!("tw_us must be ≥ 0, got {}", self.tw_us)));
        }
        if self.t2_us > 2.0 * self.t1_us {
            return Some(("t2_us", format!("t2_us = {} exceeds 2·t1_us", self.t2_us)));
        }
        let peak = self.nbar.sqrt() * (1.0 + 2f64.sqrt());
        let safe = self.fock_dim >= 2 && HilbertConfig::new(self.fock_dim).is_ok_and(|c| c.is_amplitude_safe(peak));
        if !safe {
            return Some((
                "fock_dim",
                format!(
                    "fock_dim = {} too small for peak amplitude {peak:.3} (need ≥ {})",
                    self.fock_dim,
                    HilbertConfig::min_fock_dim_for(peak)
                ),
            ));
        }
        None
    }

    /// `χ` in rad/μs.
    pub fn chi(&self) -> f64 {
        2.0 * PI * self.chi_over_2pi_mhz
    }

    pub fn kappa(&self) -> f64 {
        1.0 / self.tcav_us
    }

    pub fn t_sel_us(&self) -> f64 {
        self.t_sel_ns * 1e-3
    }

    pub fn hilbert(&self) -> Result<HilbertConfig> {
        HilbertConfig::new(self.fock_dim)
    }

    pub fn code(&self) -> Result<CodeParams> {
        CodeParams::from_nbar(self.nbar, self.alpha_phase)
    }

    /// Noise model; the noiseless gate model switches all channels off.
    pub fn noise(&self) -> Result<NoiseModel> {
        if self.gate_model == GateModelChoice::Noiseless {
            return Ok(NoiseModel::noiseless());
        }
        NoiseModel::new(self.kappa(), self.t1_us, self.t2_us)
    }

    pub fn gate_model(&self) -> GateModel {
        match self.gate_model {
            GateModelChoice::Noiseless => GateModel::noiseless(),
            GateModelChoice::Suspended => GateModel::with_noise(SelectiveHamiltonian::Suspended),
            GateModelChoice::Active => GateModel::with_noise(SelectiveHamiltonian::Active),
        }
    }

    pub fn protocol(&self) -> Result<ProtocolParams> {
        ProtocolParams::new(self.code()?, self.chi(), self.noise()?.kappa(), self.tw_us, self.t_sel_us())
    }

    /// Noise-free copy (rates zero, gates ideal).
    pub fn noiseless(&self) -> Self {
        Self {
            gate_model: GateModelChoice::Noiseless,
            ..self.clone()
        }
    }
}
