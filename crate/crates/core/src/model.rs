//! Device parameterization, occupation laws and the five-state rate matrix.
//!
//! States are ordered `(0, ld, rd, lu, ru)`: the empty double dot followed by
//! one electron in the lower/upper level of the left/right dot. Level energies
//! are `(0, ε₁−ε_g, ε₁, ε₂+ε_g, ε₂)`. The left lead feeds `ld`/`lu`, the right
//! lead feeds `rd`/`ru`, photons at `ε_g` connect `ld↔rd` and `lu↔ru`, and the
//! intra-dot quench transitions connect `ld↔lu` (gap `Δ_l`) and `rd↔ru`
//! (gap `Δ_r`).
//!
//! Units: `k_B = ħ = 1`; energies and temperatures share one unit.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use nalgebra::Matrix5;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which lead (for tunneling) or which dot (for quench transitions).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// Index into the probability vector `p = (p₀, p_ld, p_rd, p_lu, p_ru)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StateIndex {
    Empty = 0,
    LeftDown = 1,
    RightDown = 2,
    LeftUp = 3,
    RightUp = 4,
}

impl StateIndex {
    pub const ALL: [StateIndex; 5] = [
        StateIndex::Empty,
        StateIndex::LeftDown,
        StateIndex::RightDown,
        StateIndex::LeftUp,
        StateIndex::RightUp,
    ];

    /// The four singly-occupied states.
    pub const LEVELS: [StateIndex; 4] = [
        StateIndex::LeftDown,
        StateIndex::RightDown,
        StateIndex::LeftUp,
        StateIndex::RightUp,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            StateIndex::Empty => "0",
            StateIndex::LeftDown => "ld",
            StateIndex::RightDown => "rd",
            StateIndex::LeftUp => "lu",
            StateIndex::RightUp => "ru",
        }
    }

    pub fn electrons(self) -> u32 {
        match self {
            StateIndex::Empty => 0,
            _ => 1,
        }
    }

    /// Lead this level exchanges electrons with; `None` for the empty state.
    pub fn lead(self) -> Option<Side> {
        match self {
            StateIndex::Empty => None,
            StateIndex::LeftDown | StateIndex::LeftUp => Some(Side::Left),
            StateIndex::RightDown | StateIndex::RightUp => Some(Side::Right),
        }
    }

    /// Single-particle energy of the state.
    pub fn energy(self, spec: &DeviceSpec) -> f64 {
        match self {
            StateIndex::Empty => 0.0,
            StateIndex::LeftDown => spec.eps1 - spec.eps_g,
            StateIndex::RightDown => spec.eps1,
            StateIndex::LeftUp => spec.eps2 + spec.eps_g,
            StateIndex::RightUp => spec.eps2,
        }
    }
}

/// How the intra-dot (lower ↔ upper level) transitions are parameterized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum QuenchMode {
    /// `k_↑ = Γ_s n(Δ)`, `k_↓ = Γ_s (1 + n(Δ))` at the source temperature
    /// (or at `quench_temperature` when set).
    BoseThermal,
    /// All four quench rates equal to `k`.
    ExplicitEqual(f64),
    /// No intra-dot transitions: the original double-dot model.
    Off,
}

/// Full parameter set of the double-dot device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    /// Lower level of the right dot.
    pub eps1: f64,
    /// Upper level of the right dot.
    pub eps2: f64,
    /// Photon gap; the left dot levels sit at `eps1 - eps_g` and `eps2 + eps_g`.
    pub eps_g: f64,
    /// Chemical potential shared by both leads.
    pub mu: f64,
    /// Lead tunneling rate Γ.
    pub gamma: f64,
    /// Photon coupling Γ_s.
    pub gamma_s: f64,
    pub quench: QuenchMode,
    pub t_l: f64,
    pub t_r: f64,
    /// Photon source temperature.
    pub t_s: f64,
    /// Replaces the Bose photon rates at `eps_g` by an explicit `(k_up, k_down)` pair.
    pub photon_override: Option<(f64, f64)>,
    /// Experimental: a separate bath temperature for Bose-thermal quench rates.
    pub quench_temperature: Option<f64>,
}

impl DeviceSpec {
    /// Particle-hole symmetric device (`ε₂ = −ε₁ = ε`, `μ = 0`) with unit
    /// couplings, unit temperatures and no quenching.
    pub fn symmetric(eps: f64, eps_g: f64) -> Self {
        DeviceSpec {
            eps1: -eps,
            eps2: eps,
            eps_g,
            mu: 0.0,
            gamma: 1.0,
            gamma_s: 1.0,
            quench: QuenchMode::Off,
            t_l: 1.0,
            t_r: 1.0,
            t_s: 1.0,
            photon_override: None,
            quench_temperature: None,
        }
    }

    pub fn with_temperatures(mut self, t_l: f64, t_r: f64, t_s: f64) -> Self {
        self.t_l = t_l;
        self.t_r = t_r;
        self.t_s = t_s;
        self
    }

    pub fn with_couplings(mut self, gamma: f64, gamma_s: f64) -> Self {
        self.gamma = gamma;
        self.gamma_s = gamma_s;
        self
    }

    pub fn with_quench(mut self, quench: QuenchMode) -> Self {
        self.quench = quench;
        self
    }

    pub fn with_photon_override(mut self, k_up: f64, k_down: f64) -> Self {
        self.photon_override = Some((k_up, k_down));
        self
    }

    /// Left-dot gap `Δ_l = ε₂ − ε₁ + 2ε_g`.
    pub fn delta_l(&self) -> f64 {
        self.eps2 - self.eps1 + 2.0 * self.eps_g
    }

    /// Right-dot gap `Δ_r = ε₂ − ε₁`.
    pub fn delta_r(&self) -> f64 {
        self.eps2 - self.eps1
    }

    pub fn lead_temperature(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.t_l,
            Side::Right => self.t_r,
        }
    }

    /// Temperature governing Bose-thermal quench rates.
    pub fn quench_bath_temperature(&self) -> f64 {
        self.quench_temperature.unwrap_or(self.t_s)
    }

    /// Stable identifier of this parameter set.
    pub fn id(&self) -> SpecId {
        let mut h = DefaultHasher::new();
        for x in [
            self.eps1,
            self.eps2,
            self.eps_g,
            self.mu,
            self.gamma,
            self.gamma_s,
            self.t_l,
            self.t_r,
            self.t_s,
        ] {
            x.to_bits().hash(&mut h);
        }
        match self.quench {
            QuenchMode::BoseThermal => 0u8.hash(&mut h),
            QuenchMode::ExplicitEqual(k) => {
                1u8.hash(&mut h);
                k.to_bits().hash(&mut h);
            }
            QuenchMode::Off => 2u8.hash(&mut h),
        }
        self.photon_override
            .map(|(u, d)| (u.to_bits(), d.to_bits()))
            .hash(&mut h);
        self.quench_temperature.map(f64::to_bits).hash(&mut h);
        SpecId(h.finish())
    }

    /// Checks every parameter invariant, naming the first violation.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("eps_g", self.eps_g),
            ("mu", self.mu),
            ("gamma", self.gamma),
            ("gamma_s", self.gamma_s),
            ("T_l", self.t_l),
            ("T_r", self.t_r),
            ("T_s", self.t_s),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::spec(name, format!("must be finite, got {v}")));
            }
        }
        if self.gamma <= 0.0 {
            return Err(Error::spec("gamma", "must be > 0"));
        }
        if self.gamma_s < 0.0 {
            return Err(Error::spec("gamma_s", "must be >= 0"));
        }
        for (name, t) in [("T_l", self.t_l), ("T_r", self.t_r), ("T_s", self.t_s)] {
            if t < 0.0 {
                return Err(Error::spec(name, "must be >= 0"));
            }
        }
        if self.eps2 <= self.eps1 {
            return Err(Error::spec("eps2", "must exceed eps1 (Δ_r > 0)"));
        }
        if self.eps_g < 0.0 {
            return Err(Error::spec("eps_g", "must be >= 0"));
        }
        if let QuenchMode::ExplicitEqual(k) = self.quench {
            if !(k.is_finite() && k >= 0.0) {
                return Err(Error::spec("quench_k", "must be finite and >= 0"));
            }
        }
        if let Some(t) = self.quench_temperature {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::spec("quench_temperature", "must be finite and >= 0"));
            }
        }
        match self.photon_override {
            Some((up, down)) => {
                if !(up.is_finite() && down.is_finite() && up >= 0.0 && down >= 0.0) {
                    return Err(Error::spec(
                        "photon_override",
                        "rates must be finite and >= 0",
                    ));
                }
            }
            None => {
                if self.gamma_s > 0.0 && self.t_s > 0.0 && self.eps_g <= 0.0 {
                    return Err(Error::spec(
                        "eps_g",
                        "must be > 0 for Bose photon rates at T_s > 0",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Hash of a [`DeviceSpec`], carried by derived objects to catch mix-ups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpecId(pub u64);

/// Upward / downward rate of a two-level transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub up: f64,
    pub down: f64,
}

impl RatePair {
    pub const ZERO: RatePair = RatePair { up: 0.0, down: 0.0 };
}

/// Bath → system and system → bath tunneling rates of one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeadRates {
    pub k_in: f64,
    pub k_out: f64,
}

/// Returns `(f, 1 − f)` for `x = (ε − μ)/T`, both accurate to relative rounding.
fn fermi_pair(x: f64) -> (f64, f64) {
    if x >= 0.0 {
        let e = (-x).exp();
        let f = e / (1.0 + e);
        (f, 1.0 - f)
    } else {
        let e = x.exp();
        let fc = e / (1.0 + e);
        (1.0 - fc, fc)
    }
}

fn fermi_checked(eps: f64, mu: f64, t: f64) -> Result<(f64, f64)> {
    if !(eps.is_finite() && mu.is_finite() && t.is_finite()) {
        return Err(Error::domain(
            "fermi",
            format!("non-finite input (eps={eps}, mu={mu}, T={t})"),
        ));
    }
    if t < 0.0 {
        return Err(Error::domain("fermi", format!("negative temperature {t}")));
    }
    let d = eps - mu;
    if t == 0.0 {
        return Ok(if d < 0.0 {
            (1.0, 0.0)
        } else if d > 0.0 {
            (0.0, 1.0)
        } else {
            (0.5, 0.5)
        });
    }
    Ok(fermi_pair(d / t))
}

/// Fermi–Dirac occupation `[exp((ε−μ)/T) + 1]⁻¹`; a step function at `T = 0`
/// with `f(μ) = 1/2`.
pub fn fermi(eps: f64, mu: f64, t: f64) -> Result<f64> {
    fermi_checked(eps, mu, t).map(|(f, _)| f.clamp(0.0, 1.0))
}

/// Bose–Einstein occupation `[exp(ε/T) − 1]⁻¹`, zero at `T = 0`.
pub fn bose(eps: f64, t: f64) -> Result<f64> {
    if !(eps.is_finite() && t.is_finite()) {
        return Err(Error::domain(
            "bose",
            format!("non-finite input (eps={eps}, T={t})"),
        ));
    }
    if t < 0.0 {
        return Err(Error::domain("bose", format!("negative temperature {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    if eps <= 0.0 {
        return Err(Error::domain(
            "bose",
            format!("occupation diverges for eps = {eps} <= 0 at T = {t}"),
        ));
    }
    Ok(1.0 / (eps / t).exp_m1())
}

/// Tunneling rates between a level at energy `eps` and the lead on `side`.
pub fn lead_rates(eps: f64, spec: &DeviceSpec, side: Side) -> Result<LeadRates> {
    let (f, fc) = fermi_checked(eps, spec.mu, spec.lead_temperature(side))?;
    let g = spec.gamma;
    // The smaller rate carries the precision; the larger one closes the sum to Γ.
    Ok(if f <= fc {
        let k_in = g * f;
        LeadRates {
            k_in,
            k_out: g - k_in,
        }
    } else {
        let k_out = g * fc;
        LeadRates {
            k_in: g - k_out,
            k_out,
        }
    })
}

fn bose_rates(eps: f64, t: f64, coupling: f64) -> Result<RatePair> {
    if coupling == 0.0 {
        return Ok(RatePair::ZERO);
    }
    let n = bose(eps, t)?;
    Ok(RatePair {
        up: coupling * n,
        down: coupling * (1.0 + n),
    })
}

/// Photon absorption/emission rates `Γ_s n(ε)`, `Γ_s (1 + n(ε))` at `T_s`.
pub fn photon_rates(eps: f64, spec: &DeviceSpec) -> Result<RatePair> {
    bose_rates(eps, spec.t_s, spec.gamma_s)
}

/// Rates of the inter-dot photon transitions at `ε_g`, honoring an override.
pub fn photon_gap_rates(spec: &DeviceSpec) -> Result<RatePair> {
    match spec.photon_override {
        Some((up, down)) => Ok(RatePair { up, down }),
        None => photon_rates(spec.eps_g, spec),
    }
}

/// Intra-dot quench rates for the given dot (gap `Δ_l` or `Δ_r`).
pub fn quench_rates(spec: &DeviceSpec, dot: Side) -> Result<RatePair> {
    match spec.quench {
        QuenchMode::Off => Ok(RatePair::ZERO),
        QuenchMode::ExplicitEqual(k) => Ok(RatePair { up: k, down: k }),
        QuenchMode::BoseThermal => {
            let gap = match dot {
                Side::Left => spec.delta_l(),
                Side::Right => spec.delta_r(),
            };
            bose_rates(gap, spec.quench_bath_temperature(), spec.gamma_s)
        }
    }
}

/// Every elementary rate of the model, evaluated once.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRates {
    /// Lead rates indexed by [`StateIndex`]; entry 0 (empty state) is unused.
    pub lead: [LeadRates; 5],
    pub photon: RatePair,
    pub quench_left: RatePair,
    pub quench_right: RatePair,
}

impl TransitionRates {
    pub fn new(spec: &DeviceSpec) -> Result<Self> {
        let mut lead = [LeadRates {
            k_in: 0.0,
            k_out: 0.0,
        }; 5];
        for s in StateIndex::LEVELS {
            let side = s.lead().expect("levels have a lead");
            lead[s.index()] = lead_rates(s.energy(spec), spec, side)?;
        }
        Ok(TransitionRates {
            lead,
            photon: photon_gap_rates(spec)?,
            quench_left: quench_rates(spec, Side::Left)?,
            quench_right: quench_rates(spec, Side::Right)?,
        })
    }
}

/// Column-conservative rate matrix: `M[to][from]` is the rate `from → to`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    m: Matrix5<f64>,
    spec_id: SpecId,
}

impl Generator {
    pub fn matrix(&self) -> &Matrix5<f64> {
        &self.m
    }

    pub fn spec_id(&self) -> SpecId {
        self.spec_id
    }

    pub fn entry(&self, to: StateIndex, from: StateIndex) -> f64 {
        self.m[(to.index(), from.index())]
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.m.amax()
    }

    /// Largest |column sum| relative to the largest entry (0 for the zero matrix).
    pub fn conservation_defect(&self) -> f64 {
        let scale = self.max_abs_entry();
        if scale == 0.0 {
            return 0.0;
        }
        self.m
            .column_iter()
            .map(|c| c.sum().abs())
            .fold(0.0, f64::max)
            / scale
    }
}

/// Builds the generator of `ṗ = M·p` for a validated spec.
pub fn build_generator(spec: &DeviceSpec) -> Result<Generator> {
    spec.validate()?;
    let rates = TransitionRates::new(spec)?;
    Ok(generator_from_rates(&rates, spec.id()))
}

pub(crate) fn generator_from_rates(rates: &TransitionRates, spec_id: SpecId) -> Generator {
    use StateIndex::*;
    let mut m = Matrix5::<f64>::zeros();
    let mut link = |from: StateIndex, to: StateIndex, rate: f64| {
        m[(to.index(), from.index())] += rate;
    };
    for s in StateIndex::LEVELS {
        let l = rates.lead[s.index()];
        link(Empty, s, l.k_in);
        link(s, Empty, l.k_out);
    }
    let ph = rates.photon;
    link(LeftDown, RightDown, ph.up);
    link(RightDown, LeftDown, ph.down);
    link(RightUp, LeftUp, ph.up);
    link(LeftUp, RightUp, ph.down);
    let ql = rates.quench_left;
    link(LeftDown, LeftUp, ql.up);
    link(LeftUp, LeftDown, ql.down);
    let qr = rates.quench_right;
    link(RightDown, RightUp, qr.up);
    link(RightUp, RightDown, qr.down);
    for j in 0..5 {
        let out: f64 = (0..5).filter(|&i| i != j).map(|i| m[(i, j)]).sum();
        m[(j, j)] = -out;
    }
    Generator { m, spec_id }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use StateIndex::*;

    fn a1_spec() -> DeviceSpec {
        DeviceSpec::symmetric(1.0, 1.0)
            .with_temperatures(2.0, 1.0, 1.0)
            .with_quench(QuenchMode::ExplicitEqual(1.0))
            .with_photon_override(1.0, 1.0)
    }

    #[test]
    fn fermi_examples() {
        assert_eq!(fermi(0.0, 0.0, 1.0).unwrap(), 0.5);
        assert_eq!(fermi(1.0, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(fermi(-1.0, 0.0, 0.0).unwrap(), 1.0);
        assert_eq!(fermi(0.3, 0.3, 0.0).unwrap(), 0.5);
        assert_relative_eq!(
            fermi(1.0, 0.0, 0.5).unwrap(),
            0.119_202_922_022_117_56,
            max_relative = 1e-14
        );
    }

    #[test]
    fn fermi_is_stable_for_extreme_arguments() {
        for x in [1e4, -1e4, 745.0, -745.0] {
            let f = fermi(x, 0.0, 1.0).unwrap();
            assert!((0.0..=1.0).contains(&f));
        }
        assert!(fermi(f64::NAN, 0.0, 1.0).is_err());
        assert!(fermi(1.0, 0.0, f64::INFINITY).is_err());
        assert!(fermi(1.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn bose_examples() {
        assert_relative_eq!(bose(2f64.ln(), 1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_eq!(bose(5.0, 0.0).unwrap(), 0.0);
        // 1/expm1(0.01), 30-digit reference
        assert_relative_eq!(
            bose(0.01, 1.0).unwrap(),
            99.500_833_331_944_45,
            max_relative = 1e-12
        );
        assert!(bose(0.0, 1.0).is_err());
        assert!(bose(-1.0, 1.0).is_err());
    }

    #[test]
    fn lead_rate_examples() {
        let mut spec = DeviceSpec::symmetric(1.0, 0.5);
        let r = lead_rates(spec.mu, &spec, Side::Left).unwrap();
        assert_eq!((r.k_in, r.k_out), (0.5, 0.5));

        spec.t_r = 0.0;
        let r = lead_rates(1.0, &spec, Side::Right).unwrap();
        assert_eq!((r.k_in, r.k_out), (0.0, 1.0));

        spec.t_r = 0.5;
        spec.gamma = 2.0;
        let r = lead_rates(1.0, &spec, Side::Right).unwrap();
        assert_relative_eq!(r.k_in, 0.238_405_844_044_235_1, max_relative = 1e-14);
        assert_relative_eq!(r.k_out, 1.761_594_155_955_764_9, max_relative = 1e-14);
        assert_eq!(r.k_in + r.k_out, 2.0);
    }

    #[test]
    fn lead_rates_keep_detailed_balance_deep_in_the_tails() {
        let spec = DeviceSpec::symmetric(1.0, 0.5).with_temperatures(0.05, 0.05, 1.0);
        for eps in [-1.5, -0.7, 0.3, 1.2] {
            let r = lead_rates(eps, &spec, Side::Left).unwrap();
            assert_relative_eq!(
                r.k_in / r.k_out,
                (-(eps - spec.mu) / spec.t_l).exp(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn photon_rate_examples() {
        let mut spec = DeviceSpec::symmetric(1.0, 0.5).with_couplings(1.0, 0.0);
        assert_eq!(photon_rates(1.0, &spec).unwrap(), RatePair::ZERO);

        spec.gamma_s = 1.0;
        spec.t_s = 3.0;
        let r = photon_rates(3.0 * 2f64.ln(), &spec).unwrap();
        assert_relative_eq!(r.up, 1.0, max_relative = 1e-14);
        assert_relative_eq!(r.down, 2.0, max_relative = 1e-14);

        spec.t_s = 10.0;
        let r = photon_rates(1.0, &spec).unwrap();
        assert_relative_eq!(r.up, 9.508_331_944_775_05, max_relative = 1e-12);
        assert_relative_eq!(r.down, 10.508_331_944_775_05, max_relative = 1e-12);
        assert_relative_eq!(r.up / r.down, (-0.1f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn quench_rate_examples() {
        let spec = DeviceSpec::symmetric(1.0, 0.5);
        assert_eq!(quench_rates(&spec, Side::Left).unwrap(), RatePair::ZERO);

        let s = spec.clone().with_quench(QuenchMode::ExplicitEqual(1.5));
        assert_eq!(
            quench_rates(&s, Side::Right).unwrap(),
            RatePair { up: 1.5, down: 1.5 }
        );

        // Δ_r = 2 at T_s = 100: the high-temperature regime
        let mut s = DeviceSpec::symmetric(1.0, 0.5).with_quench(QuenchMode::BoseThermal);
        s.t_s = 100.0;
        let r = quench_rates(&s, Side::Right).unwrap();
        assert_relative_eq!(r.up, 49.501_666_655_555_66, max_relative = 1e-12);
        assert_relative_eq!(r.down, 50.501_666_655_555_66, max_relative = 1e-12);
        assert!((r.down - r.up) / r.down < 0.02);

        s.t_s = 0.0;
        assert_eq!(
            quench_rates(&s, Side::Left).unwrap(),
            RatePair { up: 0.0, down: 1.0 }
        );
    }

    #[test]
    fn generator_layout_matches_rate_table() {
        let spec = DeviceSpec::symmetric(1.0, 0.5)
            .with_temperatures(1.5, 0.7, 3.0)
            .with_quench(QuenchMode::ExplicitEqual(0.25));
        let g = build_generator(&spec).unwrap();
        let rates = TransitionRates::new(&spec).unwrap();
        let ph = rates.photon;
        assert_eq!(g.entry(RightDown, LeftDown), ph.up);
        assert_eq!(g.entry(LeftDown, RightDown), ph.down);
        assert_eq!(g.entry(LeftUp, RightUp), ph.up);
        assert_eq!(g.entry(RightUp, LeftUp), ph.down);
        assert_eq!(g.entry(LeftUp, LeftDown), 0.25);
        assert_eq!(g.entry(RightDown, RightUp), 0.25);
        assert_eq!(g.entry(LeftUp, RightDown), 0.0);
        assert_eq!(g.entry(RightUp, LeftDown), 0.0);
        for s in StateIndex::LEVELS {
            assert_eq!(g.entry(s, Empty), rates.lead[s.index()].k_in);
            assert_eq!(g.entry(Empty, s), rates.lead[s.index()].k_out);
        }
        assert!(g.conservation_defect() <= 1e-13);
    }

    #[test]
    fn quench_off_removes_intra_dot_entries() {
        let spec = DeviceSpec::symmetric(1.0, 0.5).with_temperatures(1.0, 0.5, 4.0);
        let g = build_generator(&spec).unwrap();
        for (a, b) in [
            (LeftUp, LeftDown),
            (LeftDown, LeftUp),
            (RightUp, RightDown),
            (RightDown, RightUp),
        ] {
            assert_eq!(g.entry(a, b), 0.0);
        }
        let nonzero_offdiag = (0..5)
            .flat_map(|i| (0..5).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && g.matrix()[(i, j)] != 0.0)
            .count();
        assert_eq!(nonzero_offdiag, 12);
    }

    #[test]
    fn empty_state_diagonal_is_minus_two_at_particle_hole_symmetry() {
        let g = build_generator(&a1_spec()).unwrap();
        assert_relative_eq!(g.entry(Empty, Empty), -2.0, max_relative = 1e-15);
    }

    #[test]
    fn invalid_specs_name_the_field() {
        let mut s = DeviceSpec::symmetric(1.0, 0.5);
        s.gamma = 0.0;
        assert!(matches!(
            build_generator(&s),
            Err(Error::InvalidSpec { field: "gamma", .. })
        ));
        let mut s = DeviceSpec::symmetric(1.0, 0.5);
        s.eps2 = s.eps1;
        assert!(matches!(
            s.validate(),
            Err(Error::InvalidSpec { field: "eps2", .. })
        ));
        let s = DeviceSpec::symmetric(1.0, 0.0);
        assert!(matches!(
            s.validate(),
            Err(Error::InvalidSpec { field: "eps_g", .. })
        ));
        let s = DeviceSpec::symmetric(1.0, 0.0).with_photon_override(1.0, 1.0);
        assert!(s.validate().is_ok());
        let s = DeviceSpec::symmetric(1.0, 0.5).with_quench(QuenchMode::ExplicitEqual(-1.0));
        assert!(s.validate().is_err());
    }

    #[test]
    fn spec_id_tracks_every_field() {
        let a = a1_spec();
        let mut b = a.clone();
        assert_eq!(a.id(), b.id());
        b.photon_override = Some((1.0, 1.0 + 1e-15));
        assert_ne!(a.id(), b.id());
        let c = a.clone().with_quench(QuenchMode::ExplicitEqual(2.0));
        assert_ne!(a.id(), c.id());
    }
}
