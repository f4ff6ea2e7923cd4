//! Experiment configuration: one TOML file per experiment, with dotted
//! `section.key=value` overrides applied on top.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{lambda_c, BurgersModel};
use crate::solver::{Advection, SpdeConfig};

fn cfg_err(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Config { field: field.into(), reason: reason.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub nu: f64,
    pub gamma: f64,
    /// Absolute control parameter; takes precedence over `lambda_factor`.
    pub lambda: Option<f64>,
    /// `λ/λ_c`.
    pub lambda_factor: f64,
    pub sigma: f64,
    /// `l/π`.
    pub l_over_pi: f64,
    pub m: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { nu: 2.0, gamma: 0.5, lambda: None, lambda_factor: 1.7, sigma: 0.35, l_over_pi: 2.5, m: 2 }
    }
}

impl ModelSection {
    pub fn build(&self) -> Result<BurgersModel> {
        if self.m != 2 {
            return Err(cfg_err("model.m", format!("only two resolved modes are supported, got {}", self.m)));
        }
        let l = self.l_over_pi * std::f64::consts::PI;
        let lambda = self.lambda.unwrap_or(self.lambda_factor * lambda_c(self.nu, l));
        BurgersModel::new(self.nu, self.gamma, lambda, self.sigma, l).map_err(|e| match e {
            Error::Parameter { name, reason } => cfg_err(format!("model.{name}"), reason),
            e => e,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub nx: usize,
    pub dt: f64,
    pub advection: Advection,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { nx: 132, dt: 0.01, advection: Advection::Forward }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub seed: u64,
    /// Steps of history before time 0.
    pub n_past: usize,
    /// Steps discarded when bringing memory terms to stationarity.
    pub spinup: usize,
    /// Read increments from this file instead of generating them.
    pub load: Option<PathBuf>,
    /// Write the increments used to `noise.bin` in the output directory.
    pub dump: bool,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { seed: 1, n_past: 4000, spinup: 2000, load: None, dump: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Time units integrated forward from 0.
    pub horizon: f64,
    pub decimation: usize,
    pub k_unresolved: usize,
    /// Initial condition as `(mode, amplitude)` pairs.
    pub u0: Vec<(usize, f64)>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { horizon: 1000.0, decimation: 10, k_unresolved: 64, u0: vec![(1, 0.1), (2, 0.2), (5, 0.1)] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    H1,
    Averaged,
    Galerkin,
    OnTheFly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReductionSection {
    pub variant: Variant,
    pub q: usize,
    pub tau: f64,
}

impl Default for ReductionSection {
    fn default() -> Self {
        Self { variant: Variant::OnTheFly, q: 2, tau: 6.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSection {
    pub t1: f64,
    pub t2: f64,
    pub alpha: f64,
    pub kde_bandwidth: Option<f64>,
    /// Maximal ACF lag in time units.
    pub acf_max_lag: f64,
    /// Leading time discarded before collecting PDF/ACF samples.
    pub burnin: f64,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self { t1: 400.0, t2: 1000.0, alpha: 0.0, kde_bandwidth: None, acf_max_lag: 20.0, burnin: 100.0 }
    }
}

/// Grids for the `defect` table; empty lists fall back to the single configured value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub lambda_factors: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub q: Vec<usize>,
    pub tau: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { lambda_factors: vec![], sigmas: vec![], q: vec![1, 2], tau: vec![6.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PullbackSection {
    /// `ξ` grid is `[-xi_max, xi_max]²` with `xi_points` per axis.
    pub xi_max: f64,
    pub xi_points: usize,
    /// Noise-grid time at which the pullback is evaluated.
    pub at_time: f64,
}

impl Default for PullbackSection {
    fn default() -> Self {
        Self { xi_max: 0.5, xi_points: 11, at_time: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    pub noise: NoiseSection,
    pub run: RunSection,
    pub reduction: ReductionSection,
    pub diagnostics: DiagnosticsSection,
    pub sweep: SweepSection,
    pub pullback: PullbackSection,
    pub output: PathBuf,
}

impl ExperimentConfig {
    /// Defaults, then the file (if any), then each `section.key=value` override.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = toml::Table::try_from(Self::default()).map_err(|e| cfg_err("<defaults>", e.to_string()))?;
        if let Some(p) = file {
            let text = std::fs::read_to_string(p).map_err(|e| cfg_err(p.display().to_string(), e.to_string()))?;
            let user: toml::Table = text.parse().map_err(|e: toml::de::Error| cfg_err(p.display().to_string(), e.message().to_string()))?;
            merge(&mut table, user);
        }
        for ov in overrides {
            apply_override(&mut table, ov)?;
        }
        Self::from_table(table)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut table = toml::Table::try_from(Self::default()).map_err(|e| cfg_err("<defaults>", e.to_string()))?;
        let user: toml::Table = text.parse().map_err(|e: toml::de::Error| cfg_err("<input>", e.message().to_string()))?;
        merge(&mut table, user);
        Self::from_table(table)
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: Self = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| cfg_err("<config>", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn model(&self) -> Result<BurgersModel> {
        self.model.build()
    }

    pub fn forward_steps(&self) -> usize {
        (self.run.horizon / self.grid.dt).round() as usize
    }

    pub fn tau_steps(&self) -> usize {
        let tmax = self.sweep.tau.iter().cloned().fold(self.reduction.tau, f64::max);
        (tmax / self.grid.dt).round() as usize
    }

    pub fn spde(&self) -> SpdeConfig {
        SpdeConfig {
            dt: self.grid.dt,
            nx: self.grid.nx,
            steps: self.forward_steps(),
            decimation: self.run.decimation,
            k_unresolved: self.run.k_unresolved,
            advection: self.grid.advection,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model()?;
        for (i, &f) in self.sweep.lambda_factors.iter().enumerate() {
            ModelSection { lambda: None, lambda_factor: f, ..self.model.clone() }
                .build()
                .map_err(|e| cfg_err(format!("sweep.lambda_factors[{i}]"), e.to_string()))?;
        }
        for (i, &s) in self.sweep.sigmas.iter().enumerate() {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(cfg_err(format!("sweep.sigmas[{i}]"), format!("must be non-negative, got {s}")));
            }
        }
        let g = &self.grid;
        if !(g.dt > 0.0 && g.dt.is_finite()) {
            return Err(cfg_err("grid.dt", format!("must be positive, got {}", g.dt)));
        }
        if g.nx < 3 {
            return Err(cfg_err("grid.nx", format!("need at least 3 nodes, got {}", g.nx)));
        }
        let r = &self.run;
        if !(r.horizon > 0.0 && r.horizon.is_finite()) {
            return Err(cfg_err("run.horizon", format!("must be positive, got {}", r.horizon)));
        }
        if r.decimation == 0 {
            return Err(cfg_err("run.decimation", "must be at least 1"));
        }
        if r.k_unresolved == 0 || r.k_unresolved + 2 > g.nx - 2 {
            return Err(cfg_err("run.k_unresolved", format!("must lie in 1..={}", g.nx.saturating_sub(4))));
        }
        if let Some(&(n, _)) = r.u0.iter().find(|(n, _)| *n == 0 || *n > g.nx - 2) {
            return Err(cfg_err("run.u0", format!("mode {n} outside 1..={}", g.nx - 2)));
        }
        let red = &self.reduction;
        if red.q == 0 || self.sweep.q.contains(&0) {
            return Err(cfg_err("reduction.q", "layer count must be at least 1"));
        }
        if !(red.tau > 0.0) || self.sweep.tau.iter().any(|t| !(*t > 0.0)) {
            return Err(cfg_err("reduction.tau", "pullback horizons must be positive"));
        }
        let needed = self.tau_steps() + self.noise.spinup;
        if self.noise.n_past < needed {
            return Err(cfg_err(
                "noise.n_past",
                format!("{} steps of history cannot cover τ + spin-up = {needed} steps", self.noise.n_past),
            ));
        }
        let d = &self.diagnostics;
        if !(d.t2 > d.t1 && d.t1 >= 0.0) {
            return Err(cfg_err("diagnostics.t1", format!("need t2 > t1 >= 0, got [{}, {}]", d.t1, d.t2)));
        }
        if d.t2 > r.horizon + 1e-9 {
            return Err(cfg_err("diagnostics.t2", format!("{} exceeds run.horizon {}", d.t2, r.horizon)));
        }
        if !(d.acf_max_lag > 0.0) {
            return Err(cfg_err("diagnostics.acf_max_lag", "must be positive"));
        }
        if !(d.burnin >= 0.0 && d.burnin < r.horizon) {
            return Err(cfg_err("diagnostics.burnin", "must lie in [0, run.horizon)"));
        }
        if matches!(d.kde_bandwidth, Some(b) if !(b > 0.0)) {
            return Err(cfg_err("diagnostics.kde_bandwidth", "must be positive"));
        }
        if self.pullback.xi_points == 0 {
            return Err(cfg_err("pullback.xi_points", "must be at least 1"));
        }
        Ok(())
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parses `section.key=value`; the value is read as a TOML literal, falling back to a bare string.
pub fn apply_override(table: &mut toml::Table, ov: &str) -> Result<()> {
    let (key, raw) = ov.split_once('=').ok_or_else(|| cfg_err(ov, "expected section.key=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or(toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(cfg_err(key, "malformed key"));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        cur = match cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new())) {
            toml::Value::Table(t) => t,
            _ => return Err(cfg_err(key, format!("`{p}` is not a section"))),
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(e: Error) -> String {
        match e {
            Error::Config { field, .. } => field,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn defaults_are_base_regime() {
        let c = ExperimentConfig::load(None, &[]).unwrap();
        let m = c.model().unwrap();
        let a = BurgersModel::regime_a();
        assert!((m.lambda - a.lambda).abs() < 1e-15 && m.l == a.l && m.sigma == a.sigma);
        assert_eq!(c.spde().nx, 132);
    }

    #[test]
    fn file_then_overrides() {
        let c = ExperimentConfig::from_toml_str("[model]\nl_over_pi = 3.5\nlambda_factor = 8.0\nsigma = 0.4\n").unwrap();
        let m = c.model().unwrap();
        let b = BurgersModel::regime_b(8.0);
        assert!((m.lambda - b.lambda).abs() < 1e-14 && (m.l - b.l).abs() < 1e-14);

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.toml");
        std::fs::write(&p, "[noise]\nseed = 9\n[reduction]\nvariant = \"galerkin\"\n").unwrap();
        let c = ExperimentConfig::load(Some(&p), &["noise.seed=12".into(), "sweep.q=[1,2,3]".into(), "output=out/x".into()]).unwrap();
        assert_eq!(c.noise.seed, 12);
        assert_eq!(c.reduction.variant, Variant::Galerkin);
        assert_eq!(c.sweep.q, vec![1, 2, 3]);
        assert_eq!(c.output, PathBuf::from("out/x"));
    }

    #[test]
    fn field_level_errors() {
        assert_eq!(field(ExperimentConfig::load(None, &["grid.dt=-1".into()]).unwrap_err()), "grid.dt");
        assert_eq!(field(ExperimentConfig::load(None, &["model.nu=0".into()]).unwrap_err()), "model.nu");
        assert_eq!(field(ExperimentConfig::load(None, &["noise.n_past=10".into()]).unwrap_err()), "noise.n_past");
        assert_eq!(field(ExperimentConfig::load(None, &["diagnostics.t2=5000".into()]).unwrap_err()), "diagnostics.t2");
        assert_eq!(field(ExperimentConfig::load(None, &["nonsense".into()]).unwrap_err()), "nonsense");
        let e = ExperimentConfig::load(None, &["model.bogus=1".into()]).unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
    }

    #[test]
    fn round_trip() {
        let c = ExperimentConfig::load(None, &["sweep.tau=[2.0, 4.0]".into()]).unwrap();
        let back = ExperimentConfig::from_toml_str(&c.to_toml()).unwrap();
        assert_eq!(c, back);
    }
}
