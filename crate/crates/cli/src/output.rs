use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use dqd_core::manifold::{Parameter, SweepPoint, Tolerances};
use dqd_core::{CurrentReport, DeviceSpec, QuenchMode};
use serde::{Serialize, Serializer};

use crate::error::{CliError, CliResult};

pub const UNITS: &str =
    "model units with k_B = 1: energies and temperatures share one unit, rates are per unit time";

pub const CSV_HEADER: [&str; 25] = [
    "eps", "eps_g", "T_l", "T_r", "T_s", "k", "gamma", "gamma_s", "p0", "p_ld", "p_rd", "p_lu",
    "p_ru", "j_ld", "j_rd", "j_lu", "j_ru", "q_l", "q_r", "q_s", "sigma", "charge_l", "charge_r",
    "cooling", "neutral",
];

#[derive(Debug, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub units: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_unix: Option<u64>,
}

impl Metadata {
    pub fn new(command: &'static str, reproducible: bool) -> Metadata {
        Metadata {
            tool: "dqd",
            version: env!("CARGO_PKG_VERSION"),
            command,
            units: UNITS,
            generated_unix: (!reproducible).then(|| {
                SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            }),
        }
    }
}

/// JSON has no infinities; non-finite values are written as strings.
fn number_or_string<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&v.to_string())
    }
}

fn optional_number<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => number_or_string(x, s),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Serialize)]
pub struct ToleranceEcho {
    #[serde(serialize_with = "optional_number")]
    pub tol_q: Option<f64>,
    #[serde(serialize_with = "optional_number")]
    pub tol_cool: Option<f64>,
    pub defaults: &'static str,
}

impl From<&Tolerances> for ToleranceEcho {
    fn from(t: &Tolerances) -> Self {
        ToleranceEcho {
            tol_q: t.tol_q,
            tol_cool: t.tol_cool,
            defaults: "tol_q = 1e-10 * gamma, tol_cool = 1e-12 * gamma * eps",
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DeviceEcho {
    pub eps1: f64,
    pub eps2: f64,
    pub eps_g: f64,
    pub mu: f64,
    pub gamma: f64,
    pub gamma_s: f64,
    #[serde(rename = "T_l")]
    pub t_l: f64,
    #[serde(rename = "T_r")]
    pub t_r: f64,
    #[serde(rename = "T_s")]
    pub t_s: f64,
    pub quench: &'static str,
    pub k: Option<f64>,
    pub quench_temperature: Option<f64>,
    pub photon_up: Option<f64>,
    pub photon_down: Option<f64>,
}

impl From<&DeviceSpec> for DeviceEcho {
    fn from(s: &DeviceSpec) -> Self {
        let (quench, k) = match s.quench {
            QuenchMode::Off => ("off", None),
            QuenchMode::BoseThermal => ("bose", None),
            QuenchMode::ExplicitEqual(k) => ("explicit", Some(k)),
        };
        DeviceEcho {
            eps1: s.eps1,
            eps2: s.eps2,
            eps_g: s.eps_g,
            mu: s.mu,
            gamma: s.gamma,
            gamma_s: s.gamma_s,
            t_l: s.t_l,
            t_r: s.t_r,
            t_s: s.t_s,
            quench,
            k,
            quench_temperature: s.quench_temperature,
            photon_up: s.photon_override.map(|p| p.0),
            photon_down: s.photon_override.map(|p| p.1),
        }
    }
}

/// Manifold witness: where it sits and what it measured.
#[derive(Debug, Serialize)]
pub struct Witness {
    pub device: DeviceEcho,
    pub q_r: f64,
    pub q_l: f64,
    pub charge_l: f64,
    pub charge_r: f64,
}

impl Witness {
    pub fn new(p: &SweepPoint, r: &CurrentReport) -> Witness {
        Witness {
            device: DeviceEcho::from(&p.spec),
            q_r: r.q_r,
            q_l: r.q_l,
            charge_l: r.charge_left,
            charge_r: r.charge_right,
        }
    }
}

/// Writes to `path`, or stdout when `None`.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

pub fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report types serialize");
    bytes.push(b'\n');
    bytes
}

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV record; failed points keep their parameters and carry NaN results.
pub fn csv_row(p: &SweepPoint) -> Vec<String> {
    let s = &p.spec;
    let mut row: Vec<String> = [
        Parameter::Eps.get(s),
        s.eps_g,
        s.t_l,
        s.t_r,
        s.t_s,
        Parameter::QuenchK.get(s),
        s.gamma,
        s.gamma_s,
    ]
    .into_iter()
    .map(float)
    .collect();
    match &p.outcome {
        Ok(m) => {
            let r = &m.report;
            row.extend(m.steady.p.iter().copied().map(float));
            row.extend(
                [
                    r.j_ld,
                    r.j_rd,
                    r.j_lu,
                    r.j_ru,
                    r.q_l,
                    r.q_r,
                    r.q_s,
                    r.sigma,
                    r.charge_left,
                    r.charge_right,
                ]
                .into_iter()
                .map(float),
            );
            row.push(m.flags.is_cooling_right.to_string());
            row.push(m.flags.is_charge_neutral.to_string());
        }
        Err(_) => {
            row.extend(std::iter::repeat_n(float(f64::NAN), 15));
            row.push("false".into());
            row.push("false".into());
        }
    }
    row
}

pub fn csv(points: &[SweepPoint]) -> CliResult<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let to_io = |e: csv::Error| CliError::io("<csv buffer>", std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(to_io)?;
    for p in points {
        w.write_record(csv_row(p)).map_err(to_io)?;
    }
    w.into_inner()
        .map_err(|e| CliError::io("<csv buffer>", std::io::Error::other(e.to_string())))
}
