//! Stationary distribution of the generator.
//!
//! The default route is Grassmann–Taksar–Heyman state reduction: Gaussian
//! elimination in which every pivot is rebuilt from off-diagonal rates, so no
//! subtraction occurs and each probability comes out to relative precision
//! even when rates span many decades. If a pivot vanishes, the bordered LU
//! solve (one balance equation replaced by `Σp = 1`) is tried, then the SVD
//! kernel of `M`.

use nalgebra::{Matrix5, Vector5};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Generator, SpecId, StateIndex};

/// Components in `[-NEGATIVE_CLAMP, 0)` are treated as roundoff.
pub const NEGATIVE_CLAMP: f64 = 1e-12;
/// Accepted `‖M·p‖_∞ / max|M|`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
const PIVOT_RATIO: f64 = 1e-14;
const RANK_RATIO: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveMethod {
    StateReduction,
    ReplaceRow,
    NullSpace,
}

/// Normalized stationary probabilities `(p₀, p_ld, p_rd, p_lu, p_ru)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub p: [f64; 5],
    /// `‖M·p‖_∞` of the returned vector.
    pub residual: f64,
    pub method: SolveMethod,
    pub spec_id: SpecId,
}

impl SteadyState {
    pub fn prob(&self, s: StateIndex) -> f64 {
        self.p[s.index()]
    }
}

/// `‖M·p‖_∞`.
pub fn residual(gen: &Generator, p: &[f64]) -> Result<f64> {
    if p.len() != 5 {
        return Err(Error::Dimension {
            expected: 5,
            found: p.len(),
        });
    }
    let v = gen.matrix() * Vector5::from_column_slice(p);
    Ok(v.amax())
}

/// Stationary state by state reduction, falling back to the bordered LU
/// solve and then to the SVD kernel.
pub fn solve_steady(gen: &Generator) -> Result<SteadyState> {
    let gth = state_reduction(gen).and_then(|p| finalize(gen, p, SolveMethod::StateReduction));
    if let Ok(ss) = gth {
        return Ok(ss);
    }
    match replace_row(gen).and_then(|p| finalize(gen, p, SolveMethod::ReplaceRow)) {
        Ok(ss) => Ok(ss),
        Err(Error::SolverFailure(_)) => null_space(gen),
        Err(e) => Err(e),
    }
}

/// Stationary state by one specific method, without fallback.
pub fn solve_steady_with(gen: &Generator, method: SolveMethod) -> Result<SteadyState> {
    match method {
        SolveMethod::StateReduction => {
            state_reduction(gen).and_then(|p| finalize(gen, p, SolveMethod::StateReduction))
        }
        SolveMethod::ReplaceRow => {
            replace_row(gen).and_then(|p| finalize(gen, p, SolveMethod::ReplaceRow))
        }
        SolveMethod::NullSpace => null_space(gen),
    }
}

fn state_reduction(gen: &Generator) -> Result<Vector5<f64>> {
    let m = gen.matrix();
    // r[i][j]: rate i -> j. Diagonal entries are never read.
    let mut r = [[0.0f64; 5]; 5];
    for (i, row) in r.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            if i != j {
                *x = m[(j, i)];
            }
        }
    }
    for k in (1..5).rev() {
        let out: f64 = (0..k).map(|j| r[k][j]).sum();
        if !(out > 0.0) {
            return Err(Error::SolverFailure(format!(
                "state {} has no path back to lower states",
                StateIndex::ALL[k].label()
            )));
        }
        for row in r.iter_mut().take(k) {
            row[k] /= out;
        }
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    r[i][j] += r[i][k] * r[k][j];
                }
            }
        }
    }
    let mut p = Vector5::zeros();
    p[0] = 1.0;
    for k in 1..5 {
        p[k] = (0..k).map(|i| p[i] * r[i][k]).sum();
    }
    Ok(p / p.sum())
}

fn replace_row(gen: &Generator) -> Result<Vector5<f64>> {
    let m = gen.matrix();
    if m.amax() == 0.0 {
        return Err(Error::MultipleSteadyStates { ratio: 0.0 });
    }
    let row = (0..5)
        .max_by(|&a, &b| m[(a, a)].abs().total_cmp(&m[(b, b)].abs()))
        .unwrap_or(0);
    let mut a: Matrix5<f64> = *m;
    a.row_mut(row).fill(1.0);
    let mut b = Vector5::zeros();
    b[row] = 1.0;

    let lu = a.lu();
    let u = lu.u();
    let diag = u.diagonal().map(f64::abs);
    if diag.min() <= PIVOT_RATIO * diag.max() {
        return Err(Error::SolverFailure(
            "bordered system is numerically singular".into(),
        ));
    }
    lu.solve(&b)
        .ok_or_else(|| Error::SolverFailure("LU solve failed".into()))
}

fn null_space(gen: &Generator) -> Result<SteadyState> {
    let m = gen.matrix();
    let svd = m.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::SolverFailure("SVD did not return V".into()))?;
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..5).collect();
    order.sort_by(|&a, &b| sv[a].total_cmp(&sv[b]));
    let largest = sv[order[4]];
    if largest == 0.0 {
        return Err(Error::MultipleSteadyStates { ratio: 0.0 });
    }
    let ratio = sv[order[1]] / largest;
    if ratio < RANK_RATIO {
        return Err(Error::MultipleSteadyStates { ratio });
    }
    let kernel = v_t.row(order[0]).transpose();
    let sum = kernel.sum();
    if sum == 0.0 || !sum.is_finite() {
        return Err(Error::SolverFailure(
            "kernel vector has zero total weight".into(),
        ));
    }
    finalize(gen, kernel / sum, SolveMethod::NullSpace)
}

fn finalize(gen: &Generator, raw: Vector5<f64>, method: SolveMethod) -> Result<SteadyState> {
    let mut p = [0.0; 5];
    for (i, &x) in raw.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::SolverFailure(format!("component {i} is {x}")));
        }
        if x < -NEGATIVE_CLAMP {
            return Err(Error::SolverFailure(format!(
                "component {} is negative ({x:e})",
                StateIndex::ALL[i].label()
            )));
        }
        p[i] = x.max(0.0);
    }
    let total: f64 = p.iter().sum();
    if total <= 0.0 {
        return Err(Error::SolverFailure("probabilities sum to zero".into()));
    }
    p.iter_mut().for_each(|x| *x /= total);

    let res = residual(gen, &p)?;
    if res > RESIDUAL_TOLERANCE * gen.max_abs_entry() {
        return Err(Error::SolverFailure(format!(
            "residual {res:e} exceeds tolerance"
        )));
    }
    Ok(SteadyState {
        p,
        residual: res,
        method,
        spec_id: gen.spec_id(),
    })
}
