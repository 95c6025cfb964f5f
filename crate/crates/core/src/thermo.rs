//! Particle currents, heat currents and entropy production at steady state.
//!
//! Sign convention: every current is positive when it flows from the bath
//! into the double dot. A positive `q_r` therefore means heat is extracted
//! from the right (cold) lead.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    build_generator, DeviceSpec, QuenchMode, RatePair, StateIndex, TransitionRates,
};
use crate::steady::{solve_steady, SteadyState};

/// Allowed `|q_l + q_r + q_s|` relative to the heat scale.
pub const ENERGY_BALANCE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleCurrents {
    pub j_ld: f64,
    pub j_rd: f64,
    pub j_lu: f64,
    pub j_ru: f64,
}

impl ParticleCurrents {
    pub fn charge_left(&self) -> f64 {
        self.j_ld + self.j_lu
    }

    pub fn charge_right(&self) -> f64 {
        self.j_rd + self.j_ru
    }
}

/// Heat flows per bath. `q_s` is the photon-source total, split by channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatCurrents {
    pub q_l: f64,
    pub q_r: f64,
    pub q_s: f64,
    pub q_photon: f64,
    pub q_quench_left: f64,
    pub q_quench_right: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyProduction {
    pub sigma: f64,
    pub left: f64,
    pub right: f64,
    /// Photon and quench channels together.
    pub source: f64,
}

/// Everything measured at one steady state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrentReport {
    pub j_ld: f64,
    pub j_rd: f64,
    pub j_lu: f64,
    pub j_ru: f64,
    pub q_l: f64,
    pub q_r: f64,
    pub q_s: f64,
    pub q_photon: f64,
    pub q_quench_left: f64,
    pub q_quench_right: f64,
    pub sigma: f64,
    pub charge_left: f64,
    pub charge_right: f64,
}

impl CurrentReport {
    pub fn particle_currents(&self) -> ParticleCurrents {
        ParticleCurrents {
            j_ld: self.j_ld,
            j_rd: self.j_rd,
            j_lu: self.j_lu,
            j_ru: self.j_ru,
        }
    }

    pub fn heat_currents(&self) -> HeatCurrents {
        HeatCurrents {
            q_l: self.q_l,
            q_r: self.q_r,
            q_s: self.q_s,
            q_photon: self.q_photon,
            q_quench_left: self.q_quench_left,
            q_quench_right: self.q_quench_right,
        }
    }
}

fn checked_rates(spec: &DeviceSpec, ss: &SteadyState) -> Result<TransitionRates> {
    if ss.spec_id != spec.id() {
        return Err(Error::SpecMismatch);
    }
    TransitionRates::new(spec)
}

fn lead_current(rates: &TransitionRates, ss: &SteadyState, s: StateIndex) -> f64 {
    let l = rates.lead[s.index()];
    l.k_in * ss.p[0] - l.k_out * ss.p[s.index()]
}

pub fn particle_currents(spec: &DeviceSpec, ss: &SteadyState) -> Result<ParticleCurrents> {
    let rates = checked_rates(spec, ss)?;
    Ok(ParticleCurrents {
        j_ld: lead_current(&rates, ss, StateIndex::LeftDown),
        j_rd: lead_current(&rates, ss, StateIndex::RightDown),
        j_lu: lead_current(&rates, ss, StateIndex::LeftUp),
        j_ru: lead_current(&rates, ss, StateIndex::RightUp),
    })
}

/// Scale against which energy balance and "zero heat" are judged.
fn heat_scale(spec: &DeviceSpec, h: &HeatCurrents) -> f64 {
    h.q_l
        .abs()
        .max(h.q_r.abs())
        .max(h.q_s.abs())
        .max(spec.gamma * spec.delta_r())
}

/// Lead heat flows from the particle currents; the source heat independently
/// from the internal transition fluxes, then cross-checked by energy balance.
pub fn heat_currents(spec: &DeviceSpec, ss: &SteadyState) -> Result<HeatCurrents> {
    let j = particle_currents(spec, ss)?;
    let rates = TransitionRates::new(spec)?;
    let e = |s: StateIndex| s.energy(spec) - spec.mu;
    use StateIndex::*;

    let q_r = e(RightDown) * j.j_rd + e(RightUp) * j.j_ru;
    let q_l = e(LeftDown) * j.j_ld + e(LeftUp) * j.j_lu;

    let p = |s: StateIndex| ss.p[s.index()];
    let ph = rates.photon;
    let q_photon =
        spec.eps_g * (ph.up * (p(LeftDown) + p(RightUp)) - ph.down * (p(RightDown) + p(LeftUp)));
    let ql = rates.quench_left;
    let q_quench_left = spec.delta_l() * (ql.up * p(LeftDown) - ql.down * p(LeftUp));
    let qr = rates.quench_right;
    let q_quench_right = spec.delta_r() * (qr.up * p(RightDown) - qr.down * p(RightUp));
    let q_s = q_photon + q_quench_left + q_quench_right;

    let h = HeatCurrents {
        q_l,
        q_r,
        q_s,
        q_photon,
        q_quench_left,
        q_quench_right,
    };
    let scale = heat_scale(spec, &h);
    let imbalance = q_l + q_r + q_s;
    if imbalance.abs() > ENERGY_BALANCE_TOLERANCE * scale {
        return Err(Error::EnergyConservation { imbalance, scale });
    }
    Ok(h)
}

/// Effective temperature of a two-level channel from its rate ratio:
/// `k_up / k_down = exp(−ε/T)`. Equal rates mean infinite temperature.
fn channel_temperature(gap: f64, r: RatePair) -> f64 {
    if r.up == r.down {
        f64::INFINITY
    } else if r.up == 0.0 || r.down == 0.0 {
        0.0
    } else {
        gap / (r.down / r.up).ln()
    }
}

fn contribution(bath: &'static str, heat: f64, t: f64, zero_heat: f64) -> Result<f64> {
    if heat == 0.0 || t.is_infinite() {
        return Ok(0.0);
    }
    if t == 0.0 {
        if heat.abs() <= zero_heat {
            return Ok(0.0);
        }
        return Err(Error::DivergentEntropy { bath, heat });
    }
    Ok(-heat / t)
}

/// `σ = Σ_i −Q̇_i / T_i` over the leads and the source channels.
///
/// Photon and Bose-thermal quench channels use `T_s` (or the quench bath
/// temperature). Explicit rate pairs contribute at the temperature implied by
/// their ratio, which is infinite for symmetric pairs.
pub fn entropy_production(spec: &DeviceSpec, report: &CurrentReport) -> Result<EntropyProduction> {
    let h = report.heat_currents();
    let zero_heat = 1e-14 * heat_scale(spec, &h);

    let left = contribution("left", report.q_l, spec.t_l, zero_heat)?;
    let right = contribution("right", report.q_r, spec.t_r, zero_heat)?;

    let photon_t = match spec.photon_override {
        Some((up, down)) => channel_temperature(spec.eps_g, RatePair { up, down }),
        None => spec.t_s,
    };
    let quench_t = match spec.quench {
        QuenchMode::Off | QuenchMode::ExplicitEqual(_) => f64::INFINITY,
        QuenchMode::BoseThermal => spec.quench_bath_temperature(),
    };
    let source = contribution("source", report.q_photon, photon_t, zero_heat)?
        + contribution("quench", report.q_quench_left, quench_t, zero_heat)?
        + contribution("quench", report.q_quench_right, quench_t, zero_heat)?;

    Ok(EntropyProduction {
        sigma: left + right + source,
        left,
        right,
        source,
    })
}

/// Currents, heat flows, σ and charging residuals for a solved steady state.
pub fn current_report(spec: &DeviceSpec, ss: &SteadyState) -> Result<CurrentReport> {
    let j = particle_currents(spec, ss)?;
    let h = heat_currents(spec, ss)?;
    let mut report = CurrentReport {
        j_ld: j.j_ld,
        j_rd: j.j_rd,
        j_lu: j.j_lu,
        j_ru: j.j_ru,
        q_l: h.q_l,
        q_r: h.q_r,
        q_s: h.q_s,
        q_photon: h.q_photon,
        q_quench_left: h.q_quench_left,
        q_quench_right: h.q_quench_right,
        sigma: 0.0,
        charge_left: j.charge_left(),
        charge_right: j.charge_right(),
    };
    report.sigma = entropy_production(spec, &report)?.sigma;
    Ok(report)
}

/// Builds, solves and measures `spec` in one go.
pub fn analyze(spec: &DeviceSpec) -> Result<(SteadyState, CurrentReport)> {
    let gen = build_generator(spec)?;
    let ss = solve_steady(&gen)?;
    let report = current_report(spec, &ss)?;
    Ok((ss, report))
}

/// Closed-form heat flows on the no-charging manifold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormHeat {
    pub q_r: f64,
    pub q_l: f64,
}

/// Heat flows of the symmetric device (`ε₂ = −ε₁ = ε`, `μ = 0`, equal quench
/// rates `k`, symmetric photon rates) with `T_r` on the no-charging manifold:
///
/// `Q̇_r = −4kΓε sinh(x) / (10k + Γ + (10k + 4Γ) cosh(x))`, `x = (ε+ε_g)/T_l`,
/// and `Q̇_l` the same with `ε → ε + ε_g`.
pub fn closed_form_heat(
    k: f64,
    gamma: f64,
    eps: f64,
    eps_g: f64,
    t_l: f64,
) -> Result<ClosedFormHeat> {
    if !(k.is_finite() && gamma.is_finite() && eps.is_finite() && eps_g.is_finite()) || t_l.is_nan()
    {
        return Err(Error::domain("closed_form_heat", "non-finite input"));
    }
    if k < 0.0 || gamma <= 0.0 || t_l <= 0.0 {
        return Err(Error::domain(
            "closed_form_heat",
            format!("need k >= 0, Gamma > 0, T_l > 0 (k={k}, Gamma={gamma}, T_l={t_l})"),
        ));
    }
    let x = (eps + eps_g) / t_l;
    // sinh/(a + b cosh) = tanh/(a/cosh + b), finite for any x
    let a = 10.0 * k + gamma;
    let b = 10.0 * k + 4.0 * gamma;
    let shape = x.tanh() / (a / x.cosh() + b);
    let base = -4.0 * k * gamma * shape;
    Ok(ClosedFormHeat {
        q_r: base * eps,
        q_l: base * (eps + eps_g),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_generator;
    use approx::assert_relative_eq;

    // (k=1, Γ=1, ε=1, ε_g=1, T_l=2): mpmath reference values
    #[allow(clippy::excessive_precision)]
    const A1_QR: f64 = -0.144_182_627_097_179_41;
    #[allow(clippy::excessive_precision)]
    const A1_QL: f64 = -0.288_365_254_194_358_81;

    fn a1_spec() -> DeviceSpec {
        DeviceSpec::symmetric(1.0, 1.0)
            .with_temperatures(2.0, 1.0, 1.0)
            .with_quench(QuenchMode::ExplicitEqual(1.0))
            .with_photon_override(1.0, 1.0)
    }

    #[test]
    fn closed_form_examples() {
        let c = closed_form_heat(1.0, 1.0, 1.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(c.q_r, A1_QR, max_relative = 1e-14);
        assert_relative_eq!(c.q_l, A1_QL, max_relative = 1e-14);
        assert_relative_eq!(c.q_l / c.q_r, 2.0, max_relative = 1e-15);

        let c = closed_form_heat(1.0, 1.0, 1.0, 1.0, f64::INFINITY).unwrap();
        assert_eq!((c.q_r, c.q_l), (0.0, 0.0));
        let c = closed_form_heat(0.0, 1.0, 1.0, 1.0, 2.0).unwrap();
        assert_eq!((c.q_r.abs(), c.q_l.abs()), (0.0, 0.0));
        // large x stays finite: limit −4kΓε/(10k+4Γ)
        let c = closed_form_heat(1.0, 1.0, 1.0, 1.0, 1e-4).unwrap();
        assert_relative_eq!(c.q_r, -4.0 / 14.0, max_relative = 1e-12);

        assert!(closed_form_heat(1.0, 0.0, 1.0, 1.0, 2.0).is_err());
        assert!(closed_form_heat(-1.0, 1.0, 1.0, 1.0, 2.0).is_err());
        assert!(closed_form_heat(1.0, 1.0, f64::NAN, 1.0, 2.0).is_err());
    }

    #[test]
    fn a1_numeric_matches_closed_form() {
        let spec = a1_spec();
        let (_, r) = analyze(&spec).unwrap();
        assert_relative_eq!(r.q_r, A1_QR, max_relative = 1e-12);
        assert_relative_eq!(r.q_l, A1_QL, max_relative = 1e-12);
        assert_relative_eq!(r.q_s, 0.432_547_881_291_538_2, max_relative = 1e-12);
        assert!((r.j_rd + r.j_ru).abs() < 1e-12);
        assert!(r.charge_left.abs() < 1e-12);
    }

    #[test]
    fn equilibrium_has_no_flows() {
        let spec = DeviceSpec::symmetric(1.0, 0.5)
            .with_temperatures(0.8, 0.8, 0.8)
            .with_quench(QuenchMode::BoseThermal);
        let (_, r) = analyze(&spec).unwrap();
        for v in [r.j_ld, r.j_rd, r.j_lu, r.j_ru, r.q_l, r.q_r, r.q_s, r.sigma] {
            assert!(v.abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn isolated_levels_equilibrate_with_their_leads() {
        let spec = DeviceSpec::symmetric(1.0, 0.5)
            .with_couplings(1.0, 0.0)
            .with_temperatures(2.0, 0.3, 1.0);
        let (_, r) = analyze(&spec).unwrap();
        for v in [r.j_ld, r.j_rd, r.j_lu, r.j_ru] {
            assert!(v.abs() < 1e-14);
        }
    }

    #[test]
    fn entropy_production_near_symmetric_photons() {
        let mut spec = a1_spec();
        spec.photon_override = None;
        spec.t_s = 1e6;
        let (_, r) = analyze(&spec).unwrap();
        let ep = entropy_production(&spec, &r).unwrap();
        assert_relative_eq!(ep.sigma, 0.288_364_8, max_relative = 1e-5);
        assert_relative_eq!(ep.left, -r.q_l / 2.0, max_relative = 1e-15);
        assert_relative_eq!(ep.right, -r.q_r, max_relative = 1e-15);
        assert!(ep.sigma > 0.0);
    }

    #[test]
    fn zero_temperature_bath_with_heat_flow_diverges() {
        let spec = DeviceSpec::symmetric(1.0, 0.5)
            .with_temperatures(2.0, 0.0, 5.0)
            .with_quench(QuenchMode::ExplicitEqual(0.5));
        let gen = build_generator(&spec).unwrap();
        let ss = solve_steady(&gen).unwrap();
        let err = current_report(&spec, &ss).unwrap_err();
        assert!(matches!(err, Error::DivergentEntropy { bath: "right", .. }));
    }

    #[test]
    fn mismatched_steady_state_is_rejected() {
        let spec = a1_spec();
        let (ss, _) = analyze(&spec).unwrap();
        let other = spec.clone().with_temperatures(2.0, 1.5, 1.0);
        assert_eq!(particle_currents(&other, &ss), Err(Error::SpecMismatch));
    }

    #[test]
    fn channel_temperature_inverts_detailed_balance() {
        let t = channel_temperature(
            0.7,
            RatePair {
                up: (-0.7f64 / 3.0).exp(),
                down: 1.0,
            },
        );
        assert_relative_eq!(t, 3.0, max_relative = 1e-14);
        assert!(channel_temperature(1.0, RatePair { up: 2.0, down: 2.0 }).is_infinite());
    }
}
