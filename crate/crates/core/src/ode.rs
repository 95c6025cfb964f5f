//! Adaptive Dormand–Prince 5(4) integrator with a single scalar stop event.
//!
//! Events are located on a cubic Hermite interpolant of each accepted step.

use crate::error::{Error, Result};
use crate::roots::{brent, BrentOptions};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// b5 - b4
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; estimated from the first derivative when `None`.
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 {
            rtol: 1e-8,
            atol: 1e-12,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    /// Integrated up to the requested end time.
    Reached,
    /// The event function crossed zero at the recorded time.
    Event { t: f64, y: Vec<f64> },
    /// The right-hand side returned an error or the step size collapsed.
    Aborted(Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Accepted step times, starting at `t0`.
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub outcome: Outcome,
    pub rejected: usize,
}

impl Solution {
    pub fn last(&self) -> (f64, &[f64]) {
        let i = self.times.len() - 1;
        (self.times[i], &self.states[i])
    }
}

fn hermite(t0: f64, y0: &[f64], f0: &[f64], t1: f64, y1: &[f64], f1: &[f64], t: f64) -> Vec<f64> {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    (0..y0.len())
        .map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
        .collect()
}

impl Dopri5 {
    /// Integrates `y' = rhs(t, y)` from `t0` to `t_end`, stopping early when
    /// `event(t, y)` changes sign from its initial value.
    pub fn integrate<F, G>(
        &self,
        mut rhs: F,
        t0: f64,
        y0: &[f64],
        t_end: f64,
        mut event: Option<G>,
    ) -> Solution
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
        G: FnMut(f64, &[f64]) -> f64,
    {
        let n = y0.len();
        let mut sol = Solution {
            times: vec![t0],
            states: vec![y0.to_vec()],
            outcome: Outcome::Reached,
            rejected: 0,
        };
        if t_end <= t0 {
            return sol;
        }

        let mut t = t0;
        let mut y = y0.to_vec();
        let mut k1 = vec![0.0; n];
        if let Err(e) = rhs(t, &y, &mut k1) {
            sol.outcome = Outcome::Aborted(e);
            return sol;
        }
        let mut g_prev = event.as_mut().map(|g| g(t, &y));

        let scale = |a: f64, b: f64| self.atol + self.rtol * a.abs().max(b.abs());
        let mut h = match self.h_init {
            Some(h) => h,
            None => {
                let d0 =
                    (y.iter().map(|v| (v / scale(*v, *v)).powi(2)).sum::<f64>() / n as f64).sqrt();
                let d1 = (k1
                    .iter()
                    .zip(&y)
                    .map(|(f, v)| (f / scale(*v, *v)).powi(2))
                    .sum::<f64>()
                    / n as f64)
                    .sqrt();
                if d0 < 1e-5 || d1 < 1e-5 {
                    1e-6 * (t_end - t0)
                } else {
                    0.01 * d0 / d1
                }
            }
        }
        .min(self.h_max)
        .min(t_end - t0);

        let mut k2 = vec![0.0; n];
        let mut k3 = vec![0.0; n];
        let mut k4 = vec![0.0; n];
        let mut k5 = vec![0.0; n];
        let mut k6 = vec![0.0; n];
        let mut k7 = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        let mut y_new = vec![0.0; n];

        let mut steps = 0;
        while t < t_end {
            if steps >= self.max_steps {
                sol.outcome = Outcome::Aborted(Error::Integration(format!(
                    "step limit {} reached at t = {t}",
                    self.max_steps
                )));
                return sol;
            }
            steps += 1;
            if t + h > t_end {
                h = t_end - t;
            }
            if h <= 16.0 * f64::EPSILON * t.abs().max(1e-300) {
                sol.outcome = Outcome::Aborted(Error::Integration(format!(
                    "step size underflow at t = {t}"
                )));
                return sol;
            }

            let stages = (|| -> Result<()> {
                for i in 0..n {
                    tmp[i] = y[i] + h * A21 * k1[i];
                }
                rhs(t + C2 * h, &tmp, &mut k2)?;
                for i in 0..n {
                    tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
                }
                rhs(t + C3 * h, &tmp, &mut k3)?;
                for i in 0..n {
                    tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
                }
                rhs(t + C4 * h, &tmp, &mut k4)?;
                for i in 0..n {
                    tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
                }
                rhs(t + C5 * h, &tmp, &mut k5)?;
                for i in 0..n {
                    tmp[i] = y[i]
                        + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
                }
                rhs(t + h, &tmp, &mut k6)?;
                for i in 0..n {
                    y_new[i] = y[i]
                        + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
                }
                rhs(t + h, &y_new, &mut k7)?;
                Ok(())
            })();
            if let Err(e) = stages {
                sol.outcome = Outcome::Aborted(e);
                return sol;
            }

            let err = ((0..n)
                .map(|i| {
                    let e = h
                        * (E1 * k1[i]
                            + E3 * k3[i]
                            + E4 * k4[i]
                            + E5 * k5[i]
                            + E6 * k6[i]
                            + E7 * k7[i]);
                    (e / scale(y[i], y_new[i])).powi(2)
                })
                .sum::<f64>()
                / n as f64)
                .sqrt();

            if !err.is_finite() || err > 1.0 {
                sol.rejected += 1;
                let fac = if err.is_finite() {
                    (0.9 * err.powf(-0.2)).max(0.2)
                } else {
                    0.2
                };
                h *= fac;
                continue;
            }

            let t_new = t + h;
            if let (Some(g), Some(g0)) = (event.as_mut(), g_prev) {
                let g1 = g(t_new, &y_new);
                if g1 == 0.0 || g1.signum() != g0.signum() {
                    let t_event = if g1 == 0.0 {
                        t_new
                    } else {
                        let interp = |s: f64| hermite(t, &y, &k1, t_new, &y_new, &k7, s);
                        brent(|s| Ok(g(s, &interp(s))), t, t_new, BrentOptions::default())
                            .map(|r| r.x)
                            .unwrap_or(t_new)
                    };
                    let y_event = hermite(t, &y, &k1, t_new, &y_new, &k7, t_event);
                    // A crossing within roundoff of the last step replaces it.
                    if t_event <= t && sol.times.len() > 1 {
                        sol.times.pop();
                        sol.states.pop();
                    }
                    sol.times.push(t_event);
                    sol.states.push(y_event.clone());
                    sol.outcome = Outcome::Event {
                        t: t_event,
                        y: y_event,
                    };
                    return sol;
                }
                g_prev = Some(g1);
            }

            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            sol.times.push(t);
            sol.states.push(y.clone());

            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = (h * fac).min(self.h_max);
        }
        sol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type NoEvent = fn(f64, &[f64]) -> f64;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let sol = Dopri5::default().integrate(
            |_, y, dy| {
                dy[0] = -0.5 * y[0];
                Ok(())
            },
            0.0,
            &[2.0],
            10.0,
            None::<NoEvent>,
        );
        assert_eq!(sol.outcome, Outcome::Reached);
        let (t, y) = sol.last();
        assert_eq!(t, 10.0);
        assert!((y[0] - 2.0 * (-5.0f64).exp()).abs() < 1e-8 * 2.0);
    }

    #[test]
    fn harmonic_oscillator_conserves_phase() {
        let opts = Dopri5 {
            rtol: 1e-10,
            atol: 1e-12,
            ..Dopri5::default()
        };
        let sol = opts.integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            0.0,
            &[1.0, 0.0],
            2.0 * std::f64::consts::PI,
            None::<NoEvent>,
        );
        let (_, y) = sol.last();
        assert!((y[0] - 1.0).abs() < 1e-8);
        assert!(y[1].abs() < 1e-8);
    }

    #[test]
    fn event_is_located_on_linear_decay() {
        let sol = Dopri5::default().integrate(
            |_, _, dy| {
                dy[0] = -0.1;
                Ok(())
            },
            0.0,
            &[1.0],
            100.0,
            Some(|_: f64, y: &[f64]| y[0] - 0.25),
        );
        match sol.outcome {
            Outcome::Event { t, ref y } => {
                assert!((t - 7.5).abs() < 1e-10);
                assert!((y[0] - 0.25).abs() < 1e-12);
            }
            ref o => panic!("unexpected outcome {o:?}"),
        }
    }

    #[test]
    fn rhs_errors_abort_with_partial_solution() {
        let sol = Dopri5::default().integrate(
            |t, _, dy| {
                if t > 1.0 {
                    return Err(Error::Integration("stop".into()));
                }
                dy[0] = 1.0;
                Ok(())
            },
            0.0,
            &[0.0],
            5.0,
            None::<NoEvent>,
        );
        assert!(matches!(sol.outcome, Outcome::Aborted(_)));
        assert!(!sol.times.is_empty());
        assert!(sol.last().0 <= 1.0);
    }
}
