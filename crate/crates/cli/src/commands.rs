use std::path::PathBuf;

use dqd_core::audit::{cooldown_integrate, estimate_zeta, HeatLaw, Termination};
use dqd_core::manifold::{intersection_test, sweep, FlagCounts, Flags, Tolerances, Verdict};
use dqd_core::{analyze, CurrentReport, Error, SolveMethod};
use serde::Serialize;

use crate::config::{AuditPlan, Law, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{self, DeviceEcho, Metadata, ToleranceEcho, Witness};

pub struct Context {
    pub config: RunConfig,
    pub out: Option<PathBuf>,
    pub reproducible: bool,
    pub tolerances: Tolerances,
}

impl Context {
    fn out_path(&self) -> Option<PathBuf> {
        self.out
            .clone()
            .or_else(|| self.config.output.path.as_ref().map(PathBuf::from))
    }
}

#[derive(Serialize)]
struct Probabilities {
    p0: f64,
    p_ld: f64,
    p_rd: f64,
    p_lu: f64,
    p_ru: f64,
    residual: f64,
    method: &'static str,
}

#[derive(Serialize)]
struct FlagEcho {
    cooling: bool,
    neutral: bool,
}

#[derive(Serialize)]
struct SteadyReport {
    metadata: Metadata,
    device: DeviceEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    steady_state: Option<Probabilities>,
    currents: CurrentReport,
    flags: FlagEcho,
    tolerances: ToleranceEcho,
}

/// `steady` and `currents`: one device, JSON report.
pub fn single(ctx: &Context, with_probabilities: bool) -> CliResult<()> {
    let spec = ctx.config.device()?;
    let (ss, report) = analyze(&spec)?;
    let (tol_q, tol_cool) = ctx.tolerances.resolve(&spec);
    let flags = Flags::evaluate(&report, tol_q, tol_cool);
    let body = SteadyReport {
        metadata: Metadata::new(
            if with_probabilities {
                "steady"
            } else {
                "currents"
            },
            ctx.reproducible,
        ),
        device: DeviceEcho::from(&spec),
        steady_state: with_probabilities.then(|| Probabilities {
            p0: ss.p[0],
            p_ld: ss.p[1],
            p_rd: ss.p[2],
            p_lu: ss.p[3],
            p_ru: ss.p[4],
            residual: ss.residual,
            method: match ss.method {
                SolveMethod::StateReduction => "state_reduction",
                SolveMethod::ReplaceRow => "replace_row",
                SolveMethod::NullSpace => "null_space",
            },
        }),
        currents: report,
        flags: FlagEcho {
            cooling: flags.is_cooling_right,
            neutral: flags.is_charge_neutral,
        },
        tolerances: ToleranceEcho::from(&ctx.tolerances),
    };
    output::emit(ctx.out_path().as_deref(), &output::json(&body))
}

/// `sweep`: CSV, one row per grid point in grid order.
pub fn sweep_csv(ctx: &Context) -> CliResult<()> {
    let grid = ctx.config.grid()?;
    let result = sweep(&grid, &ctx.tolerances);
    output::emit(ctx.out_path().as_deref(), &output::csv(&result.points)?)?;
    if let Some((i, e)) = result
        .points
        .iter()
        .enumerate()
        .find_map(|(i, p)| p.outcome.as_ref().err().map(|e| (i, e)))
    {
        return Err(CliError::Diagnostic(format!(
            "{} of {} grid points failed; first (row {}): {e}",
            result.counts.failed,
            result.points.len(),
            i + 1
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct ManifoldReport {
    metadata: Metadata,
    grid: String,
    scan: Option<dqd_core::manifold::NeutralScan>,
    tolerances: ToleranceEcho,
    verdict: &'static str,
    evaluated: usize,
    counts: FlagCounts,
    witnesses: Vec<Witness>,
}

/// `manifold`: does any point cool the right lead while carrying no charge?
pub fn manifold(ctx: &Context) -> CliResult<()> {
    let grid = ctx.config.grid()?;
    let scan = ctx.config.scan()?;
    let report = intersection_test(&grid, scan.as_ref(), &ctx.tolerances);
    let witnesses = match &report.verdict {
        Verdict::Empty => vec![],
        Verdict::Nonempty(points) => points
            .iter()
            .filter_map(|p| p.outcome.as_ref().ok().map(|m| Witness::new(p, &m.report)))
            .collect(),
    };
    let body = ManifoldReport {
        metadata: Metadata::new("manifold", ctx.reproducible),
        grid: grid.description.clone(),
        scan,
        tolerances: ToleranceEcho::from(&ctx.tolerances),
        verdict: if report.verdict.is_empty() {
            "empty"
        } else {
            "nonempty"
        },
        evaluated: report.evaluated,
        counts: report.counts,
        witnesses,
    };
    output::emit(ctx.out_path().as_deref(), &output::json(&body))
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum LawEcho {
    Power {
        coefficient: f64,
        exponent: f64,
    },
    Model {
        device: DeviceEcho,
        eps_per_temperature: Option<f64>,
    },
}

#[derive(Serialize)]
struct FitEcho {
    lo: f64,
    hi: f64,
    samples: usize,
    fitted_points: usize,
}

#[derive(Serialize)]
struct AuditReport {
    metadata: Metadata,
    law: LawEcho,
    zeta: f64,
    r_squared: f64,
    fit: FitEcho,
    freeze_time: Option<f64>,
    terminated: &'static str,
    final_time: f64,
    final_temperature: f64,
    steps: usize,
    verdict: &'static str,
}

fn not_cooling(e: Error) -> CliError {
    match e {
        Error::NonPositiveCooling { .. } => {
            CliError::Diagnostic(format!("device does not cool: {e}"))
        }
        other => other.into(),
    }
}

/// `audit`: cooling exponent and cool-down of the cold bath.
pub fn audit(ctx: &Context) -> CliResult<()> {
    let AuditPlan {
        law,
        cooldown,
        fit_temps,
    } = ctx.config.audit()?;
    let (heat_law, echo): (&dyn HeatLaw, LawEcho) = match &law {
        Law::Power(p) => (
            p,
            LawEcho::Power {
                coefficient: p.coefficient,
                exponent: p.exponent,
            },
        ),
        Law::Model(m) => (
            m,
            LawEcho::Model {
                device: DeviceEcho::from(&m.base),
                eps_per_temperature: m.eps_per_temperature,
            },
        ),
    };
    let traj = cooldown_integrate(heat_law, &cooldown).map_err(not_cooling)?;
    if traj.terminated == Termination::Stalled {
        return Err(CliError::Diagnostic(
            traj.diagnostic
                .unwrap_or_else(|| "device does not cool".into()),
        ));
    }
    let fit = estimate_zeta(heat_law, cooldown.gamma_cv, &fit_temps).map_err(not_cooling)?;
    let (final_time, final_temperature) = *traj.samples.last().expect("trajectory starts at T0");
    let body = AuditReport {
        metadata: Metadata::new("audit", ctx.reproducible),
        law: echo,
        zeta: fit.zeta,
        r_squared: fit.r_squared,
        fit: FitEcho {
            lo: fit_temps[0],
            hi: fit_temps[fit_temps.len() - 1],
            samples: fit_temps.len(),
            fitted_points: fit.points,
        },
        freeze_time: traj.freeze_time,
        terminated: match traj.terminated {
            Termination::FloorReached => "floor_reached",
            Termination::TMax => "t_max",
            Termination::Stalled => "stalled",
        },
        final_time,
        final_temperature,
        steps: traj.samples.len() - 1,
        verdict: fit.verdict.describe(),
    };
    output::emit(ctx.out_path().as_deref(), &output::json(&body))
}
