//! Adaptive Dormand-Prince 5(4) integrator for real state vectors.
//!
//! Complex amplitudes are stored as interleaved `(re, im)` pairs by the
//! callers. Integration always lands exactly on the requested end point, so
//! output grids are hit without dense output.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Integrator with its scratch space and the step size carried between calls.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    tol: Tolerances,
    h_max: f64,
    h: f64,
    max_steps: usize,
    k: [Vec<f64>; 7],
    y_stage: Vec<f64>,
    y_new: Vec<f64>,
    fsal_valid: bool,
    pub stats: Stats,
}

impl Dopri5 {
    pub fn new(dim: usize, tol: Tolerances, h_max: f64) -> Self {
        Self {
            tol,
            h_max: if h_max > 0.0 { h_max } else { f64::INFINITY },
            h: 0.0,
            max_steps: 50_000_000,
            k: std::array::from_fn(|_| vec![0.0; dim]),
            y_stage: vec![0.0; dim],
            y_new: vec![0.0; dim],
            fsal_valid: false,
            stats: Stats::default(),
        }
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    /// Advance `y` from `t0` to `t1` (either direction).
    pub fn integrate<F>(&mut self, mut f: F, t0: f64, t1: f64, y: &mut [f64]) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(());
        }
        let dir = span.signum();
        let mut t = t0;
        if !self.fsal_valid {
            f(t, y, &mut self.k[0]);
            self.stats.evaluations += 1;
        }
        self.fsal_valid = false;
        if self.h == 0.0 {
            self.h = self.initial_step(y, span.abs());
        }
        let mut steps = 0usize;
        loop {
            let remaining = (t1 - t) * dir;
            if remaining <= 0.0 {
                break;
            }
            let mut h = self.h.min(self.h_max);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            let err = self.trial(&mut f, t, y, h * dir);
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::Integrator {
                    at: t,
                    reason: format!("exceeded {} steps", self.max_steps),
                });
            }
            if !err.is_finite() {
                return Err(Error::Integrator {
                    at: t,
                    reason: "non-finite state".into(),
                });
            }
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                t = if last { t1 } else { t + h * dir };
                y.copy_from_slice(&self.y_new);
                self.k.swap(0, 6);
                self.stats.accepted += 1;
                // keep the carried step when the last one was clipped
                if !last {
                    self.h = h * fac;
                }
            } else {
                self.stats.rejected += 1;
                self.h = h * fac.min(1.0);
                if self.h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::Integrator {
                        at: t,
                        reason: format!("step size underflow (h = {})", self.h),
                    });
                }
            }
        }
        self.fsal_valid = true;
        Ok(())
    }

    /// Forget the cached derivative (the right-hand side changed).
    pub fn reset(&mut self) {
        self.fsal_valid = false;
    }

    fn initial_step(&self, y: &[f64], span: f64) -> f64 {
        let n = y.len().max(1) as f64;
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for (yi, fi) in y.iter().zip(&self.k[0]) {
            let sc = self.tol.atol + self.tol.rtol * yi.abs();
            d0 += (yi / sc).powi(2);
            d1 += (fi / sc).powi(2);
        }
        let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
        let h = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h.min(span).min(self.h_max)
    }

    /// One DP5 step of signed size `h`; returns the scaled error norm.
    fn trial<F>(&mut self, f: &mut F, t: f64, y: &[f64], h: f64) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let ys = &mut self.y_stage;
        for i in 0..n {
            ys[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C[1] * h, ys, k2);
        for i in 0..n {
            ys[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C[2] * h, ys, k3);
        for i in 0..n {
            ys[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C[3] * h, ys, k4);
        for i in 0..n {
            ys[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C[4] * h, ys, k5);
        for i in 0..n {
            ys[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + h, ys, k6);
        let yn = &mut self.y_new;
        for i in 0..n {
            yn[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        f(t + h, yn, k7);
        self.stats.evaluations += 6;
        let mut acc = 0.0;
        for i in 0..n {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.tol.atol + self.tol.rtol * y[i].abs().max(yn[i].abs());
            acc += (e / sc).powi(2);
        }
        (acc / n.max(1) as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let mut ode = Dopri5::new(1, Tolerances::default(), 0.0);
        let mut y = [1.0];
        ode.integrate(|_, y, dy| dy[0] = -y[0], 0.0, 3.0, &mut y)
            .unwrap();
        assert!((y[0] - (-3.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn harmonic_oscillator_conserves_energy_and_lands_on_outputs() {
        let tol = Tolerances {
            rtol: 1e-11,
            atol: 1e-13,
        };
        let mut ode = Dopri5::new(2, tol, 0.1);
        let mut y = [1.0, 0.0];
        let mut t = 0.0;
        for i in 1..=100 {
            let t1 = i as f64 * 0.2;
            ode.integrate(
                |_, y, dy| {
                    dy[0] = y[1];
                    dy[1] = -y[0];
                },
                t,
                t1,
                &mut y,
            )
            .unwrap();
            t = t1;
        }
        assert_eq!(t, 20.0);
        assert!((y[0] - 20.0f64.cos()).abs() < 1e-9);
        assert!((y[1] + 20.0f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn backwards_integration() {
        let tol = Tolerances {
            rtol: 1e-12,
            atol: 1e-14,
        };
        let mut ode = Dopri5::new(1, tol, 0.0);
        let mut y = [0.0];
        ode.integrate(|t, _, dy| dy[0] = t.cos(), 0.0, -2.0, &mut y)
            .unwrap();
        assert!(
            (y[0] - (-2.0f64).sin()).abs() < 1e-10,
            "{} {:?}",
            y[0],
            ode.stats
        );
    }

    #[test]
    fn step_cap_is_respected() {
        let mut ode = Dopri5::new(1, Tolerances::default(), 0.01);
        let mut y = [0.0];
        ode.integrate(|_, _, dy| dy[0] = 1.0, 0.0, 1.0, &mut y)
            .unwrap();
        assert!(ode.stats.accepted >= 100);
        assert!((y[0] - 1.0).abs() < 1e-14);
    }
}
