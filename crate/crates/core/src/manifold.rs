//! Parameter-space exploration: the no-net-charging manifold, the cooling
//! region, and whether the two meet.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DeviceSpec, QuenchMode};
use crate::roots::{brent, BrentOptions};
use crate::steady::SteadyState;
use crate::thermo::{analyze, CurrentReport};

/// Default charge-neutrality tolerance, in units of Γ.
pub const TOL_Q_PER_GAMMA: f64 = 1e-10;
/// Default cooling threshold, in units of Γ·ε.
pub const TOL_COOL_PER_GAMMA_EPS: f64 = 1e-12;

/// A scalar device parameter that can be swept or solved for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parameter {
    /// Half level splitting `ε = (ε₂ − ε₁)/2`, keeping the level center fixed.
    Eps,
    EpsG,
    TLeft,
    TRight,
    TSource,
    /// Equal quench rate `k`; setting it switches the spec to `ExplicitEqual(k)`.
    QuenchK,
    Gamma,
    GammaS,
}

impl Parameter {
    /// Canonical axis order for product grids.
    pub const ALL: [Parameter; 8] = [
        Parameter::Eps,
        Parameter::EpsG,
        Parameter::TLeft,
        Parameter::TRight,
        Parameter::TSource,
        Parameter::QuenchK,
        Parameter::Gamma,
        Parameter::GammaS,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Parameter::Eps => "eps",
            Parameter::EpsG => "eps_g",
            Parameter::TLeft => "T_l",
            Parameter::TRight => "T_r",
            Parameter::TSource => "T_s",
            Parameter::QuenchK => "k",
            Parameter::Gamma => "gamma",
            Parameter::GammaS => "gamma_s",
        }
    }

    pub fn from_name(name: &str) -> Option<Parameter> {
        Parameter::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Current value in `spec`; `k` reads 0 unless quench rates are explicit.
    pub fn get(self, spec: &DeviceSpec) -> f64 {
        match self {
            Parameter::Eps => 0.5 * (spec.eps2 - spec.eps1),
            Parameter::EpsG => spec.eps_g,
            Parameter::TLeft => spec.t_l,
            Parameter::TRight => spec.t_r,
            Parameter::TSource => spec.t_s,
            Parameter::QuenchK => match spec.quench {
                QuenchMode::ExplicitEqual(k) => k,
                _ => 0.0,
            },
            Parameter::Gamma => spec.gamma,
            Parameter::GammaS => spec.gamma_s,
        }
    }

    pub fn set(self, spec: &mut DeviceSpec, value: f64) {
        match self {
            Parameter::Eps => {
                let center = 0.5 * (spec.eps1 + spec.eps2);
                spec.eps1 = center - value;
                spec.eps2 = center + value;
            }
            Parameter::EpsG => spec.eps_g = value,
            Parameter::TLeft => spec.t_l = value,
            Parameter::TRight => spec.t_r = value,
            Parameter::TSource => spec.t_s = value,
            Parameter::QuenchK => spec.quench = QuenchMode::ExplicitEqual(value),
            Parameter::Gamma => spec.gamma = value,
            Parameter::GammaS => spec.gamma_s = value,
        }
    }

    pub fn with(self, spec: &DeviceSpec, value: f64) -> DeviceSpec {
        let mut s = spec.clone();
        self.set(&mut s, value);
        s
    }
}

/// Charge-neutrality and cooling thresholds; `None` means the scaled default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tol_q: Option<f64>,
    pub tol_cool: Option<f64>,
}

impl Tolerances {
    /// `(tol_q, tol_cool)` for one device.
    pub fn resolve(&self, spec: &DeviceSpec) -> (f64, f64) {
        let eps = Parameter::Eps.get(spec);
        (
            self.tol_q.unwrap_or(TOL_Q_PER_GAMMA * spec.gamma),
            self.tol_cool
                .unwrap_or(TOL_COOL_PER_GAMMA_EPS * spec.gamma * eps),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub is_cooling_right: bool,
    pub is_charge_neutral: bool,
}

impl Flags {
    pub fn evaluate(report: &CurrentReport, tol_q: f64, tol_cool: f64) -> Flags {
        Flags {
            is_cooling_right: report.q_r > tol_cool,
            is_charge_neutral: report.charge_left.abs().max(report.charge_right.abs()) < tol_q,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub steady: SteadyState,
    pub report: CurrentReport,
    pub flags: Flags,
}

/// One evaluated grid point; failures are kept in place so ordering survives.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub spec: DeviceSpec,
    pub outcome: std::result::Result<Measurement, Error>,
}

impl SweepPoint {
    pub fn evaluate(spec: DeviceSpec, tol: &Tolerances) -> SweepPoint {
        let outcome = analyze(&spec).map(|(steady, report)| {
            let (tol_q, tol_cool) = tol.resolve(&spec);
            Measurement {
                flags: Flags::evaluate(&report, tol_q, tol_cool),
                steady,
                report,
            }
        });
        SweepPoint { spec, outcome }
    }

    pub fn flags(&self) -> Option<Flags> {
        self.outcome.as_ref().ok().map(|m| m.flags)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagCounts {
    pub cooling_and_neutral: usize,
    pub cooling_only: usize,
    pub neutral_only: usize,
    pub neither: usize,
    pub failed: usize,
}

impl FlagCounts {
    pub fn tally<'a>(points: impl IntoIterator<Item = &'a SweepPoint>) -> FlagCounts {
        let mut c = FlagCounts::default();
        for p in points {
            match p.flags() {
                None => c.failed += 1,
                Some(f) => match (f.is_cooling_right, f.is_charge_neutral) {
                    (true, true) => c.cooling_and_neutral += 1,
                    (true, false) => c.cooling_only += 1,
                    (false, true) => c.neutral_only += 1,
                    (false, false) => c.neither += 1,
                },
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.cooling_and_neutral
            + self.cooling_only
            + self.neutral_only
            + self.neither
            + self.failed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub grid: String,
    pub counts: FlagCounts,
}

/// Axis sample spacing for ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Spacing {
    Linear,
    Log,
}

/// `n` points from `lo` to `hi` inclusive.
pub fn spaced(lo: f64, hi: f64, n: usize, spacing: Spacing) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                match spacing {
                    Spacing::Linear => lo + s * (hi - lo),
                    Spacing::Log => (lo.ln() + s * (hi.ln() - lo.ln())).exp(),
                }
            })
            .collect(),
    }
}

/// An explicit, ordered list of device specs plus a human-readable description.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub specs: Vec<DeviceSpec>,
    pub description: String,
}

/// Sampling range of one parameter in a random grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomAxis {
    pub parameter: Parameter,
    pub lo: f64,
    pub hi: f64,
    pub spacing: Spacing,
}

impl Grid {
    pub fn empty() -> Grid {
        Grid {
            specs: vec![],
            description: "empty".into(),
        }
    }

    pub fn from_specs(specs: Vec<DeviceSpec>, description: impl Into<String>) -> Grid {
        Grid {
            specs,
            description: description.into(),
        }
    }

    /// Cartesian product over `axes`, applied in [`Parameter::ALL`] order with
    /// the last axis varying fastest.
    pub fn product(base: &DeviceSpec, axes: &[(Parameter, Vec<f64>)]) -> Grid {
        let mut ordered: Vec<&(Parameter, Vec<f64>)> = axes.iter().collect();
        ordered.sort_by_key(|(p, _)| Parameter::ALL.iter().position(|q| q == p));
        let mut specs = vec![base.clone()];
        for (param, values) in &ordered {
            specs = specs
                .iter()
                .flat_map(|s| values.iter().map(move |&v| param.with(s, v)))
                .collect();
        }
        let description = ordered
            .iter()
            .map(|(p, v)| format!("{}[{}]", p.name(), v.len()))
            .collect::<Vec<_>>()
            .join(" x ");
        Grid {
            specs,
            description: if description.is_empty() {
                "single point".into()
            } else {
                description
            },
        }
    }

    /// `n` independent draws; log spacing samples log-uniformly.
    pub fn random(base: &DeviceSpec, axes: &[RandomAxis], n: usize, seed: u64) -> Grid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let specs = (0..n)
            .map(|_| {
                let mut s = base.clone();
                for a in axes {
                    let u: f64 = rng.gen();
                    let v = match a.spacing {
                        Spacing::Linear => a.lo + u * (a.hi - a.lo),
                        Spacing::Log => (a.lo.ln() + u * (a.hi.ln() - a.lo.ln())).exp(),
                    };
                    a.parameter.set(&mut s, v);
                }
                s
            })
            .collect();
        let description = format!(
            "random[{n}, seed {seed}]: {}",
            axes.iter()
                .map(|a| format!("{} in [{}, {}]", a.parameter.name(), a.lo, a.hi))
                .collect::<Vec<_>>()
                .join(", ")
        );
        Grid { specs, description }
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }
}

/// Evaluates every grid point (in parallel); output order equals grid order.
pub fn sweep(grid: &Grid, tol: &Tolerances) -> SweepResult {
    let points: Vec<SweepPoint> = grid
        .specs
        .par_iter()
        .map(|s| SweepPoint::evaluate(s.clone(), tol))
        .collect();
    SweepResult {
        counts: FlagCounts::tally(&points),
        points,
        grid: grid.description.clone(),
    }
}

/// `T_r` at which the symmetric device carries no net charge: `ε T_l / (ε + ε_g)`.
pub fn no_charging_temperature(eps: f64, eps_g: f64, t_l: f64) -> Result<f64> {
    if !(eps > 0.0 && eps_g >= 0.0 && t_l > 0.0) || eps.is_infinite() || t_l.is_infinite() {
        return Err(Error::domain(
            "no_charging_temperature",
            format!(
                "need eps > 0, eps_g >= 0, 0 < T_l < inf (eps={eps}, eps_g={eps_g}, T_l={t_l})"
            ),
        ));
    }
    Ok(eps * t_l / (eps + eps_g))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoChargingRoot {
    pub value: f64,
    pub charge_right: f64,
    pub charge_left: f64,
    /// Whether `charge_left` also vanishes (within `tol_q`) at the root.
    pub simultaneous: bool,
    pub iterations: usize,
    pub spec: DeviceSpec,
}

fn charge_right_at(spec: &DeviceSpec, free: Parameter, x: f64) -> Result<f64> {
    analyze(&free.with(spec, x)).map(|(_, r)| r.charge_right)
}

/// Solves `charge_right = 0` for one free parameter inside `bracket`.
pub fn find_no_charging(
    spec: &DeviceSpec,
    free: Parameter,
    bracket: (f64, f64),
) -> Result<NoChargingRoot> {
    let root = brent(
        |x| charge_right_at(spec, free, x),
        bracket.0,
        bracket.1,
        BrentOptions::default(),
    )?;
    let at_root = free.with(spec, root.x);
    let (_, report) = analyze(&at_root)?;
    let (tol_q, _) = Tolerances::default().resolve(&at_root);
    Ok(NoChargingRoot {
        value: root.x,
        charge_right: report.charge_right,
        charge_left: report.charge_left,
        simultaneous: report.charge_left.abs() < tol_q,
        iterations: root.iterations,
        spec: at_root,
    })
}

/// Scan of one parameter looking for charge-neutral points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeutralScan {
    pub parameter: Parameter,
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
    /// When set, `lo` and `hi` are multiples of this parameter's value.
    pub relative_to: Option<Parameter>,
}

impl NeutralScan {
    fn bounds(&self, spec: &DeviceSpec) -> (f64, f64) {
        let s = self.relative_to.map_or(1.0, |p| p.get(spec));
        (self.lo * s, self.hi * s)
    }

    /// Scan samples plus every refined root of `charge_right`, for one spec.
    pub fn resolve(&self, spec: &DeviceSpec, tol: &Tolerances) -> Vec<SweepPoint> {
        let (lo, hi) = self.bounds(spec);
        let spacing = if lo > 0.0 {
            Spacing::Log
        } else {
            Spacing::Linear
        };
        let xs = spaced(lo, hi, self.samples, spacing);
        let mut points: Vec<SweepPoint> = xs
            .iter()
            .map(|&x| SweepPoint::evaluate(self.parameter.with(spec, x), tol))
            .collect();
        let charge = |p: &SweepPoint| p.outcome.as_ref().ok().map(|m| m.report.charge_right);
        let mut roots = Vec::new();
        for i in 1..points.len() {
            if let (Some(a), Some(b)) = (charge(&points[i - 1]), charge(&points[i])) {
                if a != 0.0 && b != 0.0 && a.signum() != b.signum() {
                    if let Ok(r) = find_no_charging(spec, self.parameter, (xs[i - 1], xs[i])) {
                        roots.push(SweepPoint::evaluate(r.spec, tol));
                    }
                }
            }
        }
        points.extend(roots);
        points
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Empty,
    Nonempty(Vec<SweepPoint>),
}

impl Verdict {
    pub fn is_empty(&self) -> bool {
        matches!(self, Verdict::Empty)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionReport {
    pub verdict: Verdict,
    pub evaluated: usize,
    pub counts: FlagCounts,
}

/// Checks whether any point is simultaneously charge-neutral and cooling.
///
/// With a scan, each grid spec is expanded into the scan samples plus the
/// refined `charge_right` roots along the scanned parameter.
pub fn intersection_test(
    grid: &Grid,
    scan: Option<&NeutralScan>,
    tol: &Tolerances,
) -> IntersectionReport {
    let points: Vec<SweepPoint> = match scan {
        None => sweep(grid, tol).points,
        Some(scan) => grid
            .specs
            .par_iter()
            .flat_map_iter(|s| scan.resolve(s, tol))
            .collect(),
    };
    let counts = FlagCounts::tally(&points);
    let evaluated = points.len();
    let witnesses: Vec<SweepPoint> = points
        .into_iter()
        .filter(|p| {
            p.flags()
                .is_some_and(|f| f.is_charge_neutral && f.is_cooling_right)
        })
        .collect();
    IntersectionReport {
        verdict: if witnesses.is_empty() {
            Verdict::Empty
        } else {
            Verdict::Nonempty(witnesses)
        },
        evaluated,
        counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn symmetric_device(k: f64, eps: f64, eps_g: f64, t_l: f64) -> DeviceSpec {
        DeviceSpec::symmetric(eps, eps_g)
            .with_temperatures(t_l, t_l, 1.0)
            .with_quench(QuenchMode::ExplicitEqual(k))
            .with_photon_override(1.0, 1.0)
    }

    #[test]
    fn analytic_no_charging_temperature() {
        assert_eq!(no_charging_temperature(1.0, 0.0, 3.5).unwrap(), 3.5);
        assert_eq!(no_charging_temperature(1.0, 1.0, 2.0).unwrap(), 1.0);
        assert!(no_charging_temperature(1.0, 1e300, 2.0).unwrap() < 1e-299);
        assert_eq!(
            no_charging_temperature(1.0, f64::INFINITY, 2.0).unwrap(),
            0.0
        );
        assert!(no_charging_temperature(0.0, 0.0, 1.0).is_err());
        assert!(no_charging_temperature(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn root_finding_recovers_the_analytic_manifold() {
        let spec = symmetric_device(1.0, 1.0, 1.0, 2.0);
        let r = find_no_charging(&spec, Parameter::TRight, (0.1, 10.0)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
        assert!(r.charge_right.abs() < 1e-12);
        assert!(r.simultaneous);
        assert!(r.iterations <= 200);
    }

    #[test]
    fn zero_gap_root_is_equal_temperatures() {
        let spec = symmetric_device(0.5, 1.0, 0.0, 1.7);
        let r = find_no_charging(&spec, Parameter::TRight, (0.1, 10.0)).unwrap();
        assert!((r.value - 1.7).abs() < 1e-10);
    }

    #[test]
    fn bracket_without_sign_change_is_an_error() {
        let spec = symmetric_device(1.0, 1.0, 1.0, 2.0);
        let e = find_no_charging(&spec, Parameter::TRight, (1.5, 10.0)).unwrap_err();
        assert!(matches!(e, Error::Bracket { .. }));
    }

    #[test]
    fn bose_photons_still_give_a_charge_root() {
        // Thermal photons at finite T_s: the root moves off the analytic value.
        let mut spec = DeviceSpec::symmetric(1.0, 1.0)
            .with_temperatures(2.0, 1.0, 20.0)
            .with_quench(QuenchMode::ExplicitEqual(1.0));
        spec.photon_override = None;
        let r = find_no_charging(&spec, Parameter::TRight, (0.1, 10.0)).unwrap();
        assert!(r.charge_right.abs() < 1e-12);
        assert!(
            r.charge_left.abs() < 1e-10,
            "steady state conserves particles"
        );
        assert!((r.value - 1.0).abs() > 1e-6);
    }

    #[test]
    fn product_grid_orders_axes_canonically() {
        let base = DeviceSpec::symmetric(1.0, 1.0);
        let g = Grid::product(
            &base,
            &[
                (Parameter::TLeft, vec![1.0, 2.0]),
                (Parameter::Eps, vec![0.5, 1.5, 2.5]),
            ],
        );
        assert_eq!(g.len(), 6);
        let got: Vec<(f64, f64)> = g
            .specs
            .iter()
            .map(|s| (Parameter::Eps.get(s), s.t_l))
            .collect();
        assert_eq!(
            got,
            vec![
                (0.5, 1.0),
                (0.5, 2.0),
                (1.5, 1.0),
                (1.5, 2.0),
                (2.5, 1.0),
                (2.5, 2.0)
            ]
        );
        assert_eq!(g.specs[0].eps1, -0.5);
        assert_eq!(Grid::product(&base, &[]).len(), 1);
    }

    #[test]
    fn random_grid_is_reproducible_and_in_range() {
        let base = DeviceSpec::symmetric(1.0, 1.0);
        let axes = [RandomAxis {
            parameter: Parameter::EpsG,
            lo: 0.1,
            hi: 10.0,
            spacing: Spacing::Log,
        }];
        let a = Grid::random(&base, &axes, 50, 7);
        let b = Grid::random(&base, &axes, 50, 7);
        assert_eq!(a, b);
        assert!(a.specs.iter().all(|s| (0.1..=10.0).contains(&s.eps_g)));
    }

    #[test]
    fn equilibrium_point_is_neutral_and_not_cooling() {
        let spec = DeviceSpec::symmetric(1.0, 0.5)
            .with_temperatures(1.0, 1.0, 1.0)
            .with_quench(QuenchMode::BoseThermal);
        let res = sweep(&Grid::from_specs(vec![spec], "eq"), &Tolerances::default());
        assert_eq!(
            res.points[0].flags(),
            Some(Flags {
                is_cooling_right: false,
                is_charge_neutral: true
            })
        );
        assert_eq!(res.counts.neutral_only, 1);
    }

    #[test]
    fn original_model_cools_when_photons_are_hot() {
        let base = DeviceSpec::symmetric(1.0, 1.0)
            .with_temperatures(1.0, 0.5, 200.0)
            .with_couplings(1.0, 1.0);
        let grid = Grid::product(
            &base,
            &[(Parameter::TRight, spaced(0.2, 0.9, 8, Spacing::Linear))],
        );
        let res = sweep(&grid, &Tolerances::default());
        assert!(res
            .points
            .iter()
            .any(|p| p.flags().is_some_and(|f| f.is_cooling_right)));
    }

    #[test]
    fn empty_grid_gives_empty_verdict() {
        let r = intersection_test(&Grid::empty(), None, &Tolerances::default());
        assert!(r.verdict.is_empty());
        assert_eq!(r.evaluated, 0);
    }

    #[test]
    fn closed_form_ratio_on_the_manifold() {
        for (eps, eps_g, t_l) in [(0.5, 1.0, 0.5), (2.0, 0.5, 5.0), (1.0, 1.0, 1.0)] {
            let mut spec = symmetric_device(0.7, eps, eps_g, t_l);
            spec.t_r = no_charging_temperature(eps, eps_g, t_l).unwrap();
            let (_, r) = analyze(&spec).unwrap();
            assert_relative_eq!(r.q_l / r.q_r, (eps + eps_g) / eps, max_relative = 1e-9);
        }
    }
}
