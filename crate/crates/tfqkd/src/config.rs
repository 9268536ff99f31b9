//! Run configuration, read from and written to TOML.
//!
//! Every physical constant defaults to the reference setting (0.16 dB/km,
//! 85% detectors, 1e-11 dark counts, 2% misalignment), so a file holding
//! only `protocol = "p2"` is already a complete run.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use tfqkd_core::budget::{Protocol, SecurityBudget};
use tfqkd_core::channel::SystemConfig;
use tfqkd_core::engine::{EngineOptions, ProtocolParams};
use tfqkd_core::optimizer::{OptimizerSettings, ParameterSpace, SweepAxis};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolName {
    P1,
    P2,
}

impl From<ProtocolName> for Protocol {
    fn from(p: ProtocolName) -> Self {
        match p {
            ProtocolName::P1 => Protocol::P1,
            ProtocolName::P2 => Protocol::P2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub protocol: ProtocolName,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub security: SecuritySection,
    #[serde(default)]
    pub engine: EngineSection,
    #[serde(default)]
    pub space: SpaceSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    /// Fixed parameters; when present `rate` evaluates instead of optimizing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default)]
    pub validation: ValidationSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub fiber_loss: f64,
    pub distance: f64,
    pub det_efficiency: f64,
    pub dark_rate: f64,
    pub misalignment: f64,
    pub ec_efficiency: f64,
    pub total_pulses: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        SystemConfig::default().into()
    }
}

impl From<SystemConfig> for SystemSection {
    fn from(c: SystemConfig) -> Self {
        SystemSection {
            fiber_loss: c.fiber_loss,
            distance: c.distance,
            det_efficiency: c.det_efficiency,
            dark_rate: c.dark_rate,
            misalignment: c.misalignment,
            ec_efficiency: c.ec_efficiency,
            total_pulses: c.total_pulses,
        }
    }
}

impl From<SystemSection> for SystemConfig {
    fn from(s: SystemSection) -> Self {
        SystemConfig {
            fiber_loss: s.fiber_loss,
            distance: s.distance,
            det_efficiency: s.det_efficiency,
            dark_rate: s.dark_rate,
            misalignment: s.misalignment,
            ec_efficiency: s.ec_efficiency,
            total_pulses: s.total_pulses,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SecuritySection {
    pub eps_sec: f64,
    pub eps_cor: f64,
}

impl Default for SecuritySection {
    fn default() -> Self {
        let b = SecurityBudget::default();
        SecuritySection {
            eps_sec: b.eps_sec,
            eps_cor: b.eps_cor,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineSection {
    pub finite_size: bool,
    pub phi_tol: f64,
    pub truncation_eps: f64,
}

impl Default for EngineSection {
    fn default() -> Self {
        let o = EngineOptions::default();
        EngineSection {
            finite_size: o.finite_size,
            phi_tol: o.phi_tol,
            truncation_eps: o.truncation_eps,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpaceSection {
    pub mu: [f64; 2],
    pub p_z: [f64; 2],
    pub nu: [f64; 2],
    pub omega_min: f64,
    pub logit_range: f64,
}

impl Default for SpaceSection {
    fn default() -> Self {
        let s = ParameterSpace::default();
        SpaceSection {
            mu: [s.mu.0, s.mu.1],
            p_z: [s.p_z.0, s.p_z.1],
            nu: [s.nu.0, s.nu.1],
            omega_min: s.omega_min,
            logit_range: s.logit_range,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub screen_points: usize,
    pub restarts: usize,
    pub tolerance: f64,
    pub max_evaluations: usize,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let o = OptimizerSettings::default();
        OptimizerSection {
            screen_points: o.screen_points,
            restarts: o.restarts,
            tolerance: o.tolerance,
            max_evaluations: o.max_evaluations,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub mu: f64,
    pub p_z: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default = "default_p_nu")]
    pub p_nu: f64,
    #[serde(default = "default_p_omega")]
    pub p_omega: f64,
}

fn default_nu() -> f64 {
    ProtocolParams::default().nu
}
fn default_omega() -> f64 {
    ProtocolParams::default().omega
}
fn default_p_nu() -> f64 {
    ProtocolParams::default().p_nu
}
fn default_p_omega() -> f64 {
    ProtocolParams::default().p_omega
}

impl From<ParamsSection> for ProtocolParams {
    fn from(p: ParamsSection) -> Self {
        ProtocolParams {
            mu: p.mu,
            p_z: p.p_z,
            nu: p.nu,
            omega: p.omega,
            p_nu: p.p_nu,
            p_omega: p.p_omega,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisName {
    Distance,
    Pulses,
}

impl From<AxisName> for SweepAxis {
    fn from(a: AxisName) -> Self {
        match a {
            AxisName::Distance => SweepAxis::Distance,
            AxisName::Pulses => SweepAxis::Pulses,
        }
    }
}

/// Grid given either as explicit `values` or as `start`/`stop`/`points`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: AxisName,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// Space the generated points logarithmically.
    #[serde(default)]
    pub log: bool,
    /// Misalignment values to repeat the sweep for; empty uses the system value.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub misalignment: Vec<f64>,
}

impl SweepSection {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !self.values.is_empty() {
            if self.start.is_some() || self.stop.is_some() || self.points.is_some() {
                bail!("sweep: give either `values` or `start`/`stop`/`points`, not both");
            }
            return Ok(self.values.clone());
        }
        let (Some(a), Some(b), Some(n)) = (self.start, self.stop, self.points) else {
            bail!("sweep: missing `values`, or one of `start`, `stop`, `points`");
        };
        if n == 0 {
            bail!("sweep.points must be at least 1");
        }
        if self.log && !(a > 0.0 && b > 0.0) {
            bail!("sweep: log spacing needs positive `start` and `stop`");
        }
        if n == 1 {
            return Ok(vec![a]);
        }
        Ok((0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                if self.log {
                    (a.ln() + t * (b.ln() - a.ln())).exp()
                } else {
                    a + t * (b - a)
                }
            })
            .collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSection {
    pub eps: f64,
    pub x_max: u32,
    pub n: f64,
    pub lambda: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub k_points: usize,
}

impl Default for BoundsSection {
    fn default() -> Self {
        BoundsSection {
            eps: 1e-10,
            x_max: 10_000,
            n: 1e6,
            lambda: 0.15,
            k_min: 1e3,
            k_max: 1e7,
            k_points: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationSection {
    /// Largest `n + k` in the exhaustive sampling check.
    pub max_size: u64,
    pub sampling_eps: Vec<f64>,
    pub chernoff_mu: Vec<f64>,
    pub chernoff_eps: Vec<f64>,
    pub chernoff_trials: u64,
    pub mc_samples: u64,
    pub decoy_trials: usize,
    /// Multiplies every solved sampling deviation; below one it breaks the
    /// bound on purpose.
    pub gamma_scale: f64,
}

impl Default for ValidationSection {
    fn default() -> Self {
        ValidationSection {
            max_size: 30,
            sampling_eps: vec![1e-1, 1e-2, 1e-3],
            chernoff_mu: vec![1.0, 10.0, 100.0, 1e3],
            chernoff_eps: vec![1e-2, 1e-6, 1e-10],
            chernoff_trials: 10_000,
            mc_samples: 20_000,
            decoy_trials: 100,
            gamma_scale: 1.0,
        }
    }
}

impl RunConfig {
    pub fn new(protocol: ProtocolName) -> Self {
        RunConfig {
            protocol,
            seed: 0,
            out: None,
            threads: None,
            system: SystemSection::default(),
            security: SecuritySection::default(),
            engine: EngineSection::default(),
            space: SpaceSection::default(),
            optimizer: OptimizerSection::default(),
            params: None,
            sweep: None,
            bounds: BoundsSection::default(),
            validation: ValidationSection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| anyhow::anyhow!("{}", e.message()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol.into()
    }

    pub fn system(&self) -> SystemConfig {
        self.system.into()
    }

    pub fn budget(&self) -> SecurityBudget {
        SecurityBudget {
            eps_sec: self.security.eps_sec,
            eps_cor: self.security.eps_cor,
            protocol: self.protocol(),
        }
    }

    pub fn engine(&self) -> EngineOptions {
        EngineOptions {
            phi_tol: self.engine.phi_tol,
            truncation_eps: self.engine.truncation_eps,
            finite_size: self.engine.finite_size,
        }
    }

    pub fn space(&self) -> ParameterSpace {
        ParameterSpace {
            mu: (self.space.mu[0], self.space.mu[1]),
            p_z: (self.space.p_z[0], self.space.p_z[1]),
            nu: (self.space.nu[0], self.space.nu[1]),
            omega_min: self.space.omega_min,
            logit_range: self.space.logit_range,
        }
    }

    pub fn optimizer(&self) -> OptimizerSettings {
        OptimizerSettings {
            screen_points: self.optimizer.screen_points,
            restarts: self.optimizer.restarts,
            tolerance: self.optimizer.tolerance,
            max_evaluations: self.optimizer.max_evaluations,
        }
    }

    /// Checks every section, naming the offending field as `section.field`.
    pub fn validate(&self) -> Result<()> {
        let named = |section: &str, r: tfqkd_core::Result<()>| -> Result<()> {
            match r {
                Ok(()) => Ok(()),
                Err(tfqkd_core::Error::InvalidParameter(f)) => {
                    bail!("invalid value for `{section}.{f}`")
                }
                Err(e) => bail!("{section}: {e}"),
            }
        };
        named("system", self.system().validate())?;
        named("security", self.budget().validate())?;
        named("space", self.space().validate())?;
        if let Some(p) = self.params {
            named("params", ProtocolParams::from(p).validate(self.protocol()))?;
        }
        if !(self.engine.phi_tol > 0.0) {
            bail!("invalid value for `engine.phi_tol`");
        }
        if !(self.engine.truncation_eps > 0.0 && self.engine.truncation_eps < 1.0) {
            bail!("invalid value for `engine.truncation_eps`");
        }
        if self.optimizer.restarts == 0 {
            bail!("invalid value for `optimizer.restarts`");
        }
        if !(self.optimizer.tolerance > 0.0) {
            bail!("invalid value for `optimizer.tolerance`");
        }
        if self.threads == Some(0) {
            bail!("invalid value for `threads`");
        }
        if let Some(s) = &self.sweep {
            s.grid()?;
            for &m in &s.misalignment {
                if !(0.0..=1.0).contains(&m) {
                    bail!("invalid value for `sweep.misalignment`");
                }
            }
        }
        let b = &self.bounds;
        if !(b.eps > 0.0 && b.eps < 1.0) {
            bail!("invalid value for `bounds.eps`");
        }
        if !(b.n >= 1.0 && b.k_min >= 1.0 && b.k_max >= b.k_min && b.k_points >= 1) {
            bail!("invalid sampling grid in `bounds`");
        }
        if !(b.lambda > 0.0 && b.lambda < 1.0) {
            bail!("invalid value for `bounds.lambda`");
        }
        let v = &self.validation;
        if v.max_size < 2 || v.max_size > 200 {
            bail!("invalid value for `validation.max_size` (2..=200)");
        }
        if v.mc_samples < 10_000 {
            bail!("invalid value for `validation.mc_samples` (at least 10000)");
        }
        if !(v.gamma_scale > 0.0) {
            bail!("invalid value for `validation.gamma_scale`");
        }
        Ok(())
    }
}

/// Command-line overrides for the system section.
#[derive(Clone, Copy, Debug, Default, clap::Args)]
pub struct SystemOverrides {
    /// Fiber attenuation [dB/km]
    #[arg(long)]
    pub fiber_loss: Option<f64>,
    /// Alice-Bob distance [km]
    #[arg(long)]
    pub distance: Option<f64>,
    /// Detector efficiency
    #[arg(long)]
    pub det_efficiency: Option<f64>,
    /// Dark-count probability per pulse
    #[arg(long)]
    pub dark_rate: Option<f64>,
    /// Misalignment error probability
    #[arg(long)]
    pub misalignment: Option<f64>,
    /// Error-correction inefficiency
    #[arg(long)]
    pub ec_efficiency: Option<f64>,
    /// Total number of pulses N
    #[arg(long)]
    pub total_pulses: Option<f64>,
}

impl SystemOverrides {
    pub fn apply(&self, s: &mut SystemSection) {
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut s.fiber_loss, self.fiber_loss);
        set(&mut s.distance, self.distance);
        set(&mut s.det_efficiency, self.det_efficiency);
        set(&mut s.dark_rate, self.dark_rate);
        set(&mut s.misalignment, self.misalignment);
        set(&mut s.ec_efficiency, self.ec_efficiency);
        set(&mut s.total_pulses, self.total_pulses);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let c = RunConfig::from_toml("protocol = \"p1\"").unwrap();
        assert_eq!(c, RunConfig::new(ProtocolName::P1));
        assert_eq!(c.system(), SystemConfig::default());
    }

    #[test]
    fn unknown_and_missing_fields_are_named() {
        let e = RunConfig::from_toml("protocol = \"p2\"\n[system]\ndistanse = 3.0\n").unwrap_err();
        assert!(e.to_string().contains("distanse"), "{e}");
        let e = RunConfig::from_toml("seed = 3").unwrap_err();
        assert!(e.to_string().contains("protocol"), "{e}");
    }

    #[test]
    fn validation_names_field() {
        let mut c = RunConfig::new(ProtocolName::P2);
        c.system.det_efficiency = 1.5;
        let e = c.validate().unwrap_err();
        assert!(e.to_string().contains("system.det_efficiency"), "{e}");
    }

    #[test]
    fn grids() {
        let s = SweepSection {
            axis: AxisName::Pulses,
            values: vec![],
            start: Some(1e8),
            stop: Some(1e12),
            points: Some(5),
            log: true,
            misalignment: vec![],
        };
        let g = s.grid().unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[2] - 1e10).abs() < 1e-3);
        let one = SweepSection { points: Some(1), ..s };
        assert_eq!(one.grid().unwrap(), vec![1e8]);
    }
}
