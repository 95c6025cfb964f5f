mod common;

use dqd_core::{
    build_generator, lead_rates, photon_gap_rates, quench_rates, DeviceSpec, QuenchMode, Side,
    StateIndex,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn columns_conserve_probability(spec in common::device_spec()) {
        let g = build_generator(&spec).unwrap();
        prop_assert!(g.conservation_defect() <= 1e-13, "defect {}", g.conservation_defect());
    }

    #[test]
    fn off_diagonal_rates_are_nonnegative(spec in common::device_spec()) {
        let g = build_generator(&spec).unwrap();
        for to in StateIndex::ALL {
            for from in StateIndex::ALL {
                if to != from {
                    prop_assert!(g.entry(to, from) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn lead_rates_obey_local_detailed_balance(spec in common::device_spec()) {
        for s in StateIndex::LEVELS {
            let side = s.lead().unwrap();
            let t = spec.lead_temperature(side);
            let l = lead_rates(s.energy(&spec), &spec, side).unwrap();
            let x = (s.energy(&spec) - spec.mu) / t;
            let ratio = l.k_in / l.k_out * x.exp();
            prop_assert!((ratio - 1.0).abs() <= 1e-12, "{} ratio {}", s.label(), ratio);
            prop_assert!((l.k_in + l.k_out - spec.gamma).abs() <= 1e-14 * spec.gamma);
        }
    }

    #[test]
    fn thermal_photons_obey_detailed_balance(mut spec in common::device_spec()) {
        spec.photon_override = None;
        prop_assume!(spec.gamma_s > 0.0);
        let ph = photon_gap_rates(&spec).unwrap();
        let ratio = ph.down / ph.up * (-spec.eps_g / spec.t_s).exp();
        prop_assert!((ratio - 1.0).abs() <= 1e-12, "ratio {}", ratio);
    }

    #[test]
    fn thermal_quench_obeys_detailed_balance(mut spec in common::device_spec()) {
        spec.quench = QuenchMode::BoseThermal;
        prop_assume!(spec.gamma_s > 0.0);
        let t = spec.quench_bath_temperature();
        for (side, gap) in [(Side::Left, spec.delta_l()), (Side::Right, spec.delta_r())] {
            let q = quench_rates(&spec, side).unwrap();
            let ratio = q.down / q.up * (-gap / t).exp();
            prop_assert!((ratio - 1.0).abs() <= 1e-12, "{side:?} ratio {ratio}");
        }
    }

    #[test]
    fn quench_off_leaves_only_lead_and_photon_links(mut spec in common::device_spec()) {
        spec.quench = QuenchMode::Off;
        spec.photon_override = None;
        prop_assume!(spec.gamma_s > 0.0);
        let g = build_generator(&spec).unwrap();
        let mut lead = 0;
        let mut other = 0;
        for to in StateIndex::ALL {
            for from in StateIndex::ALL {
                if to == from || g.entry(to, from) == 0.0 {
                    continue;
                }
                if to == StateIndex::Empty || from == StateIndex::Empty {
                    lead += 1;
                } else {
                    other += 1;
                }
            }
        }
        prop_assert_eq!(lead, 8);
        prop_assert_eq!(other, 4);
        use StateIndex::*;
        prop_assert_eq!(g.entry(LeftUp, LeftDown), 0.0);
        prop_assert_eq!(g.entry(RightDown, RightUp), 0.0);
    }

    #[test]
    fn spec_ids_separate_distinct_devices(spec in common::device_spec(), bump in 1e-6..1.0f64) {
        let mut other = spec.clone();
        other.t_r += bump;
        prop_assert_ne!(spec.id(), other.id());
        prop_assert_eq!(spec.id(), spec.clone().id());
    }
}

#[test]
fn invalid_specs_name_the_field() {
    let mut spec = DeviceSpec::symmetric(1.0, 1.0);
    spec.gamma = -1.0;
    let err = build_generator(&spec).unwrap_err().to_string();
    assert!(err.contains("gamma"), "{err}");
}
