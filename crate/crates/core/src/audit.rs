//! Third-law audit: cool-down of the cold lead and its characteristic exponent.
//!
//! A lead with heat capacity `c_V(T)` losing heat at rate `q(T)` cools as
//! `dT/dt = −q(T)/c_V(T)`. Writing `dT/dt ∼ −T^ζ` as `T → 0`, an exponent
//! `ζ < 1` reaches `T = 0` in finite time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::Parameter;
use crate::model::DeviceSpec;
use crate::ode::{Dopri5, Outcome};
use crate::thermo::analyze;

/// Cooling power extracted from the cold bath as a function of its temperature.
pub trait HeatLaw: Sync {
    fn cooling_power(&self, t: f64) -> Result<f64>;
}

impl<F> HeatLaw for F
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    fn cooling_power(&self, t: f64) -> Result<f64> {
        self(t)
    }
}

/// `q(T) = c·T^β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub coefficient: f64,
    pub exponent: f64,
}

impl HeatLaw for PowerLaw {
    fn cooling_power(&self, t: f64) -> Result<f64> {
        Ok(self.coefficient * t.powf(self.exponent))
    }
}

/// `q_r` of the full device with every parameter fixed except `T_r`.
///
/// With `eps_per_temperature = Some(c)` the half level splitting follows the
/// cold bath, `ε = c·T_r`, which keeps `ε/T_r` constant along the scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelLaw {
    pub base: DeviceSpec,
    pub eps_per_temperature: Option<f64>,
}

impl ModelLaw {
    pub fn spec_at(&self, t: f64) -> DeviceSpec {
        let mut s = Parameter::TRight.with(&self.base, t);
        if let Some(c) = self.eps_per_temperature {
            Parameter::Eps.set(&mut s, c * t);
        }
        s
    }
}

impl HeatLaw for ModelLaw {
    fn cooling_power(&self, t: f64) -> Result<f64> {
        analyze(&self.spec_at(t)).map(|(_, r)| r.q_r)
    }
}

/// Low-temperature electron gas: `c_V = γ_cv·T`.
pub fn cv_electron(t: f64, gamma_cv: f64) -> f64 {
    gamma_cv * t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZetaVerdict {
    /// `ζ < 1`: absolute zero is reached in finite time.
    Violated,
    CompliantOnRange,
}

impl ZetaVerdict {
    pub fn classify(zeta: f64) -> ZetaVerdict {
        if zeta < 1.0 {
            ZetaVerdict::Violated
        } else {
            ZetaVerdict::CompliantOnRange
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            ZetaVerdict::Violated => "III-law violated: finite-time absolute zero",
            ZetaVerdict::CompliantOnRange => "compliant on tested range",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaFit {
    pub zeta: f64,
    pub r_squared: f64,
    /// Number of samples in the fitted (lowest) decade.
    pub points: usize,
    pub verdict: ZetaVerdict,
}

/// Least-squares slope of `ln(q/c_V)` against `ln T` over the given samples.
fn fit_log_slope<L: HeatLaw + ?Sized>(law: &L, gamma_cv: f64, temps: &[f64]) -> Result<ZetaFit> {
    let mut xs = Vec::with_capacity(temps.len());
    let mut ys = Vec::with_capacity(temps.len());
    for &t in temps {
        let q = law.cooling_power(t)?;
        if !(q > 0.0) {
            return Err(Error::NonPositiveCooling {
                temperature: t,
                power: q,
            });
        }
        xs.push(t.ln());
        ys.push((q / cv_electron(t, gamma_cv)).ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("estimate_zeta", "all temperatures coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    // A flat line at roundoff level is a perfect fit.
    let r_squared = if syy <= 1e-24 * n {
        1.0
    } else {
        1.0 - ss_res / syy
    };
    Ok(ZetaFit {
        zeta: slope,
        r_squared,
        points: xs.len(),
        verdict: ZetaVerdict::classify(slope),
    })
}

/// Cooling exponent ζ fitted over the lowest decade of `temps`.
///
/// Requires at least 8 positive samples spanning two decades, with positive
/// cooling power at every sample.
pub fn estimate_zeta<L: HeatLaw + ?Sized>(
    law: &L,
    gamma_cv: f64,
    temps: &[f64],
) -> Result<ZetaFit> {
    if !(gamma_cv > 0.0) {
        return Err(Error::domain("estimate_zeta", "gamma_cv must be > 0"));
    }
    if temps.len() < 8 {
        return Err(Error::domain(
            "estimate_zeta",
            format!("need at least 8 samples, got {}", temps.len()),
        ));
    }
    if temps.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::domain(
            "estimate_zeta",
            "temperatures must be positive",
        ));
    }
    let lo = temps.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = temps.iter().copied().fold(0.0, f64::max);
    if hi / lo < 100.0 * (1.0 - 1e-12) {
        return Err(Error::domain(
            "estimate_zeta",
            format!("samples span {:.3} decades, need 2", (hi / lo).log10()),
        ));
    }
    // Every sample must cool, not just the fitted ones.
    for &t in temps {
        let q = law.cooling_power(t)?;
        if !(q > 0.0) {
            return Err(Error::NonPositiveCooling {
                temperature: t,
                power: q,
            });
        }
    }
    let lowest: Vec<f64> = temps
        .iter()
        .copied()
        .filter(|&t| t <= 10.0 * lo * (1.0 + 1e-12))
        .collect();
    if lowest.len() < 2 {
        return Err(Error::domain(
            "estimate_zeta",
            "fewer than two samples in the lowest decade",
        ));
    }
    fit_log_slope(law, gamma_cv, &lowest)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    FloorReached,
    TMax,
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoolTrajectory {
    /// `(t, T_r)` at every accepted integrator step.
    pub samples: Vec<(f64, f64)>,
    /// Exponent fitted over the lowest decade the trajectory reached.
    pub zeta_fit: Option<ZetaFit>,
    /// Time at which the floor was crossed, reported only when the fitted
    /// exponent predicts reaching `T = 0` in finite time.
    pub freeze_time: Option<f64>,
    pub terminated: Termination,
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cooldown {
    pub t0: f64,
    pub gamma_cv: f64,
    pub t_floor: f64,
    pub t_max: f64,
    pub rtol: f64,
}

impl Cooldown {
    /// Default floor `1e-9·T0` and relative tolerance `1e-8`.
    pub fn new(t0: f64, gamma_cv: f64, t_max: f64) -> Cooldown {
        Cooldown {
            t0,
            gamma_cv,
            t_floor: 1e-9 * t0,
            t_max,
            rtol: 1e-8,
        }
    }
}

/// Integrates `dT/dt = −q(T)/c_V(T)` from `T0` until `T` crosses the floor,
/// `t_max` is reached, or the law stops cooling.
pub fn cooldown_integrate<L: HeatLaw + ?Sized>(law: &L, cfg: &Cooldown) -> Result<CoolTrajectory> {
    if !(cfg.t0 > cfg.t_floor && cfg.t_floor > 0.0 && cfg.t0.is_finite()) {
        return Err(Error::domain(
            "cooldown_integrate",
            format!(
                "need T0 > T_floor > 0 (T0={}, T_floor={})",
                cfg.t0, cfg.t_floor
            ),
        ));
    }
    if !(cfg.gamma_cv > 0.0 && cfg.t_max > 0.0) {
        return Err(Error::domain(
            "cooldown_integrate",
            "gamma_cv and t_max must be > 0",
        ));
    }

    let q0 = law.cooling_power(cfg.t0)?;
    if !(q0 > 0.0) {
        return Ok(CoolTrajectory {
            samples: vec![(0.0, cfg.t0)],
            zeta_fit: None,
            freeze_time: None,
            terminated: Termination::Stalled,
            diagnostic: Some(format!("device does not cool: q(T0 = {}) = {q0:e}", cfg.t0)),
        });
    }

    let opts = Dopri5 {
        rtol: cfg.rtol,
        atol: 1e-3 * cfg.t_floor,
        ..Dopri5::default()
    };
    let floor = cfg.t_floor;
    let sol = opts.integrate(
        |_, y, dy| {
            // Trial stages can overshoot below the floor on the crossing step.
            let t = y[0].max(0.5 * floor);
            let q = law.cooling_power(t)?;
            if q < 0.0 {
                return Err(Error::NonPositiveCooling {
                    temperature: t,
                    power: q,
                });
            }
            dy[0] = -q / cv_electron(t, cfg.gamma_cv);
            Ok(())
        },
        0.0,
        &[cfg.t0],
        cfg.t_max,
        Some(|_: f64, y: &[f64]| y[0] - floor),
    );

    let samples: Vec<(f64, f64)> = sol
        .times
        .iter()
        .zip(&sol.states)
        .map(|(&t, y)| (t, y[0]))
        .collect();
    let (terminated, freeze_time, diagnostic) = match sol.outcome {
        Outcome::Event { t, .. } => (Termination::FloorReached, Some(t), None),
        Outcome::Reached => (Termination::TMax, None, None),
        Outcome::Aborted(e @ Error::NonPositiveCooling { .. }) => (
            Termination::Stalled,
            None,
            Some(format!("device does not cool: {e}")),
        ),
        Outcome::Aborted(e) => return Err(e),
    };

    let t_low = samples
        .iter()
        .map(|s| s.1)
        .fold(f64::INFINITY, f64::min)
        .max(floor);
    let t_high = (10.0 * t_low).min(cfg.t0);
    let zeta_fit = if t_high > t_low * (1.0 + 1e-9) {
        let temps = crate::manifold::spaced(t_low, t_high, 16, crate::manifold::Spacing::Log);
        fit_log_slope(law, cfg.gamma_cv, &temps).ok()
    } else {
        None
    };

    let freeze_time =
        freeze_time.filter(|_| zeta_fit.is_some_and(|f| f.verdict == ZetaVerdict::Violated));

    Ok(CoolTrajectory {
        samples,
        zeta_fit,
        freeze_time,
        terminated,
        diagnostic,
    })
}
