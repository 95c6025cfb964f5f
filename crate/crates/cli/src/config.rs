//! TOML run configuration.
//!
//! ```toml
//! [device]
//! eps = 1.0            # or eps1 / eps2 explicitly
//! eps_g = 1.0
//! gamma = 1.0
//! gamma_s = 1.0
//! T_l = 2.0
//! T_r = 1.0
//! T_s = 1.0
//! quench = "explicit"  # "off" | "bose" | "explicit"
//! k = 1.0
//! photon_up = 1.0      # optional pair overriding the Bose photon rates
//! photon_down = 1.0
//!
//! [grid]
//! k = [0.1, 1.0, 10.0]
//! T_l = { lo = 0.5, hi = 5.0, n = 4, spacing = "log" }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use dqd_core::audit::{Cooldown, ModelLaw, PowerLaw};
use dqd_core::manifold::{
    no_charging_temperature, spaced, Grid, NeutralScan, Parameter, RandomAxis, Spacing, Tolerances,
};
use dqd_core::{DeviceSpec, QuenchMode};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub device: Option<DeviceConfig>,
    pub grid: Option<GridConfig>,
    pub random: Option<RandomConfig>,
    pub scan: Option<ScanConfig>,
    pub audit: Option<AuditConfig>,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub eps: Option<f64>,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub eps_g: Option<f64>,
    pub mu: Option<f64>,
    pub gamma: Option<f64>,
    pub gamma_s: Option<f64>,
    #[serde(rename = "T_l")]
    pub t_l: Option<f64>,
    #[serde(rename = "T_r")]
    pub t_r: Option<f64>,
    #[serde(rename = "T_s")]
    pub t_s: Option<f64>,
    pub quench: Option<String>,
    pub k: Option<f64>,
    pub quench_temperature: Option<f64>,
    pub photon_up: Option<f64>,
    pub photon_down: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum AxisConfig {
    Values(Vec<f64>),
    Range(RangeConfig),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    #[serde(default)]
    pub spacing: SpacingConfig,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpacingConfig {
    #[default]
    Linear,
    Log,
}

impl From<SpacingConfig> for Spacing {
    fn from(s: SpacingConfig) -> Spacing {
        match s {
            SpacingConfig::Linear => Spacing::Linear,
            SpacingConfig::Log => Spacing::Log,
        }
    }
}

/// Product grid: one entry per parameter name, plus an optional rule that
/// places `T_r` on the no-charging manifold of each point.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct GridConfig {
    #[serde(default)]
    pub no_charging_t_r: bool,
    #[serde(flatten)]
    pub axes: BTreeMap<String, AxisConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomConfig {
    pub n: usize,
    pub seed: u64,
    #[serde(default)]
    pub axes: BTreeMap<String, RandomRangeConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomRangeConfig {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub spacing: SpacingConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub parameter: String,
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
    pub relative_to: Option<String>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LawKind {
    Power,
    Model,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub law: LawKind,
    pub coefficient: Option<f64>,
    pub exponent: Option<f64>,
    pub eps_per_temperature: Option<f64>,
    pub t0: f64,
    pub gamma_cv: f64,
    pub t_max: f64,
    pub t_floor: Option<f64>,
    pub rtol: Option<f64>,
    pub fit_lo: Option<f64>,
    pub fit_hi: Option<f64>,
    pub fit_samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub tol_q: Option<f64>,
    pub tol_cool: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<String>,
}

pub fn load(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text)
}

pub fn parse(text: &str) -> CliResult<RunConfig> {
    toml::from_str(text).map_err(|e| CliError::config(e.to_string().trim_end().to_string()))
}

fn parameter(name: &str, section: &str) -> CliResult<Parameter> {
    Parameter::from_name(name).ok_or_else(|| {
        let known: Vec<_> = Parameter::ALL.iter().map(|p| p.name()).collect();
        CliError::config(format!(
            "unknown parameter `{section}.{name}` (expected one of {})",
            known.join(", ")
        ))
    })
}

fn require(v: Option<f64>, key: &str) -> CliResult<f64> {
    v.ok_or_else(|| CliError::config(format!("missing required key `{key}`")))
}

impl RunConfig {
    pub fn device(&self) -> CliResult<DeviceSpec> {
        let d = self
            .device
            .as_ref()
            .ok_or_else(|| CliError::config("missing required section `[device]`"))?;
        d.to_spec()
    }

    pub fn tolerances(&self, tol_q: Option<f64>, tol_cool: Option<f64>) -> Tolerances {
        Tolerances {
            tol_q: tol_q.or(self.tolerances.tol_q),
            tol_cool: tol_cool.or(self.tolerances.tol_cool),
        }
    }

    /// Grid from `[random]` or `[grid]`; the bare device when neither is given.
    pub fn grid(&self) -> CliResult<Grid> {
        let base = self.device()?;
        match (&self.grid, &self.random) {
            (Some(_), Some(_)) => Err(CliError::config(
                "`[grid]` and `[random]` are mutually exclusive",
            )),
            (Some(g), None) => g.build(&base),
            (None, Some(r)) => r.build(&base),
            (None, None) => Ok(Grid::from_specs(vec![base], "single point")),
        }
    }

    pub fn scan(&self) -> CliResult<Option<NeutralScan>> {
        let Some(s) = &self.scan else {
            return Ok(None);
        };
        if s.samples < 2 {
            return Err(CliError::config("`scan.samples` must be at least 2"));
        }
        if !(s.lo.is_finite() && s.hi.is_finite() && s.lo < s.hi) {
            return Err(CliError::config("`scan.lo` must be below `scan.hi`"));
        }
        Ok(Some(NeutralScan {
            parameter: parameter(&s.parameter, "scan.parameter")?,
            lo: s.lo,
            hi: s.hi,
            samples: s.samples,
            relative_to: s
                .relative_to
                .as_deref()
                .map(|n| parameter(n, "scan.relative_to"))
                .transpose()?,
        }))
    }
}

impl DeviceConfig {
    pub fn to_spec(&self) -> CliResult<DeviceSpec> {
        let (eps1, eps2) = match (self.eps, self.eps1, self.eps2) {
            (Some(e), None, None) => (-e, e),
            (None, Some(a), Some(b)) => (a, b),
            (None, None, None) => {
                return Err(CliError::config(
                    "missing required key `device.eps` (or `device.eps1` and `device.eps2`)",
                ))
            }
            (Some(_), _, _) => {
                return Err(CliError::config(
                    "`device.eps` cannot be combined with `device.eps1`/`device.eps2`",
                ))
            }
            (None, None, Some(_)) => {
                return Err(CliError::config("missing required key `device.eps1`"))
            }
            (None, Some(_), None) => {
                return Err(CliError::config("missing required key `device.eps2`"))
            }
        };
        let quench_name = self
            .quench
            .as_deref()
            .ok_or_else(|| CliError::config("missing required key `device.quench`"))?;
        let quench = match quench_name {
            "off" => QuenchMode::Off,
            "bose" => QuenchMode::BoseThermal,
            "explicit" => QuenchMode::ExplicitEqual(require(self.k, "device.k")?),
            other => {
                return Err(CliError::config(format!(
                    "`device.quench` must be \"off\", \"bose\" or \"explicit\", got \"{other}\""
                )))
            }
        };
        if self.k.is_some() && !matches!(quench, QuenchMode::ExplicitEqual(_)) {
            return Err(CliError::config(
                "`device.k` requires quench = \"explicit\"",
            ));
        }
        let photon_override = match (self.photon_up, self.photon_down) {
            (Some(u), Some(d)) => Some((u, d)),
            (None, None) => None,
            _ => {
                return Err(CliError::config(
                    "`device.photon_up` and `device.photon_down` must be given together",
                ))
            }
        };
        let spec = DeviceSpec {
            eps1,
            eps2,
            eps_g: require(self.eps_g, "device.eps_g")?,
            mu: self.mu.unwrap_or(0.0),
            gamma: require(self.gamma, "device.gamma")?,
            gamma_s: require(self.gamma_s, "device.gamma_s")?,
            quench,
            t_l: require(self.t_l, "device.T_l")?,
            t_r: require(self.t_r, "device.T_r")?,
            t_s: require(self.t_s, "device.T_s")?,
            photon_override,
            quench_temperature: self.quench_temperature,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl AxisConfig {
    fn values(&self, key: &str) -> CliResult<Vec<f64>> {
        match self {
            AxisConfig::Values(v) => Ok(v.clone()),
            AxisConfig::Range(r) => {
                if r.n > 0 && !(r.lo.is_finite() && r.hi.is_finite()) {
                    return Err(CliError::config(format!("`{key}` range must be finite")));
                }
                if matches!(r.spacing, SpacingConfig::Log) && r.n > 0 && !(r.lo > 0.0 && r.hi > 0.0)
                {
                    return Err(CliError::config(format!(
                        "`{key}` log range must be positive"
                    )));
                }
                Ok(spaced(r.lo, r.hi, r.n, r.spacing.into()))
            }
        }
    }
}

impl GridConfig {
    fn build(&self, base: &DeviceSpec) -> CliResult<Grid> {
        let mut axes = Vec::new();
        for (name, axis) in &self.axes {
            let key = format!("grid.{name}");
            let p = parameter(name, "grid")?;
            if self.no_charging_t_r && p == Parameter::TRight {
                return Err(CliError::config(
                    "`grid.T_r` conflicts with `grid.no_charging_t_r = true`",
                ));
            }
            axes.push((p, axis.values(&key)?));
        }
        let mut grid = Grid::product(base, &axes);
        if self.no_charging_t_r {
            for s in &mut grid.specs {
                let eps = Parameter::Eps.get(s);
                s.t_r = no_charging_temperature(eps, s.eps_g, s.t_l)?;
            }
            grid.description
                .push_str(", T_r on the no-charging manifold");
        }
        for s in &grid.specs {
            s.validate()?;
        }
        Ok(grid)
    }
}

impl RandomConfig {
    fn build(&self, base: &DeviceSpec) -> CliResult<Grid> {
        let mut axes = Vec::new();
        for (name, r) in &self.axes {
            let p = parameter(name, "random.axes")?;
            if !(r.lo.is_finite() && r.hi.is_finite() && r.lo <= r.hi) {
                return Err(CliError::config(format!(
                    "`random.axes.{name}` needs lo <= hi"
                )));
            }
            if matches!(r.spacing, SpacingConfig::Log) && !(r.lo > 0.0) {
                return Err(CliError::config(format!(
                    "`random.axes.{name}` log range must be positive"
                )));
            }
            axes.push(RandomAxis {
                parameter: p,
                lo: r.lo,
                hi: r.hi,
                spacing: r.spacing.into(),
            });
        }
        axes.sort_by_key(|a| Parameter::ALL.iter().position(|&q| q == a.parameter));
        let grid = Grid::random(base, &axes, self.n, self.seed);
        for s in &grid.specs {
            s.validate()?;
        }
        Ok(grid)
    }
}

/// A validated `[audit]` block.
pub enum Law {
    Power(PowerLaw),
    Model(ModelLaw),
}

pub struct AuditPlan {
    pub law: Law,
    pub cooldown: Cooldown,
    pub fit_temps: Vec<f64>,
}

impl RunConfig {
    pub fn audit(&self) -> CliResult<AuditPlan> {
        let a = self
            .audit
            .as_ref()
            .ok_or_else(|| CliError::config("missing required section `[audit]`"))?;
        let law = match a.law {
            LawKind::Power => Law::Power(PowerLaw {
                coefficient: require(a.coefficient, "audit.coefficient")?,
                exponent: require(a.exponent, "audit.exponent")?,
            }),
            LawKind::Model => {
                let mut base = self.device()?;
                base.t_r = a.t0;
                Law::Model(ModelLaw {
                    base,
                    eps_per_temperature: a.eps_per_temperature,
                })
            }
        };
        if matches!(a.law, LawKind::Power) && a.eps_per_temperature.is_some() {
            return Err(CliError::config(
                "`audit.eps_per_temperature` applies only to law = \"model\"",
            ));
        }
        let mut cooldown = Cooldown::new(a.t0, a.gamma_cv, a.t_max);
        if let Some(f) = a.t_floor {
            cooldown.t_floor = f;
        }
        if let Some(r) = a.rtol {
            cooldown.rtol = r;
        }
        let lo = a.fit_lo.unwrap_or(1e-3 * a.t0);
        let hi = a.fit_hi.unwrap_or(a.t0);
        if !(lo > 0.0 && hi > lo) {
            return Err(CliError::config(
                "`audit.fit_lo` must be positive and below `audit.fit_hi`",
            ));
        }
        let fit_temps = spaced(lo, hi, a.fit_samples.unwrap_or(25), Spacing::Log);
        Ok(AuditPlan {
            law,
            cooldown,
            fit_temps,
        })
    }
}
