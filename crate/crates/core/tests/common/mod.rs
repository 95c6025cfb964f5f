#![allow(dead_code)]

use dqd_core::{DeviceSpec, QuenchMode};
use proptest::prelude::*;

pub fn quench_mode() -> impl Strategy<Value = QuenchMode> {
    prop_oneof![
        Just(QuenchMode::Off),
        Just(QuenchMode::BoseThermal),
        (0.0..5.0f64).prop_map(QuenchMode::ExplicitEqual),
    ]
}

/// Valid devices with every temperature > 0, so the chain is irreducible.
pub fn device_spec() -> impl Strategy<Value = DeviceSpec> {
    (
        (-2.0..1.0f64, 0.05..3.0f64, 0.02..2.0f64, -1.0..1.0f64),
        (0.1..5.0f64, 0.0..5.0f64),
        (0.1..5.0f64, 0.1..5.0f64, 0.1..10.0f64),
        quench_mode(),
        proptest::option::weighted(0.2, (0.0..3.0f64, 0.01..3.0f64)),
        proptest::option::weighted(0.2, 0.1..5.0f64),
    )
        .prop_map(
            |((eps1, delta, eps_g, mu), (gamma, gamma_s), (t_l, t_r, t_s), quench, ov, tq)| {
                DeviceSpec {
                    eps1,
                    eps2: eps1 + delta,
                    eps_g,
                    mu,
                    gamma,
                    gamma_s,
                    quench,
                    t_l,
                    t_r,
                    t_s,
                    photon_override: ov,
                    quench_temperature: tq,
                }
            },
        )
}

/// Devices at a single common temperature with thermal internal rates.
pub fn equilibrium_spec() -> impl Strategy<Value = DeviceSpec> {
    (
        (-2.0..1.0f64, 0.05..3.0f64, 0.02..2.0f64, -1.0..1.0f64),
        (0.1..5.0f64, 0.0..5.0f64, 0.1..5.0f64),
        prop_oneof![Just(QuenchMode::Off), Just(QuenchMode::BoseThermal)],
    )
        .prop_map(
            |((eps1, delta, eps_g, mu), (gamma, gamma_s, t), quench)| DeviceSpec {
                eps1,
                eps2: eps1 + delta,
                eps_g,
                mu,
                gamma,
                gamma_s,
                quench,
                t_l: t,
                t_r: t,
                t_s: t,
                photon_override: None,
                quench_temperature: None,
            },
        )
}

/// Grand-canonical weights `exp(−(E − μN)/T)`, normalized.
pub fn gibbs(spec: &DeviceSpec, t: f64) -> [f64; 5] {
    let mut w = [0.0; 5];
    for s in dqd_core::StateIndex::ALL {
        let n = s.electrons() as f64;
        w[s.index()] = (-(s.energy(spec) - spec.mu * n) / t).exp();
    }
    let z: f64 = w.iter().sum();
    w.map(|x| x / z)
}
