//! Simulator and thermodynamic auditor for a photon-driven double quantum dot
//! coupled to two metallic leads.
//!
//! The pipeline is: [`DeviceSpec`] → [`build_generator`] → [`solve_steady`] →
//! [`current_report`]. On top of it sit the manifold tools (charge neutrality,
//! cooling region, their intersection) and the third-law audit (cool-down
//! integration and the cooling exponent ζ).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod error;
pub mod manifold;
pub mod model;
pub mod ode;
pub mod roots;
pub mod steady;
pub mod thermo;

pub use error::{Error, Result};
pub use model::{
    bose, build_generator, fermi, lead_rates, photon_gap_rates, photon_rates, quench_rates,
    DeviceSpec, Generator, LeadRates, QuenchMode, RatePair, Side, SpecId, StateIndex,
    TransitionRates,
};
pub use steady::{residual, solve_steady, solve_steady_with, SolveMethod, SteadyState};
pub use thermo::{
    analyze, closed_form_heat, current_report, entropy_production, heat_currents,
    particle_currents, ClosedFormHeat, CurrentReport, EntropyProduction, HeatCurrents,
    ParticleCurrents,
};
