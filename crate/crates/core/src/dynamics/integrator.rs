//! Adaptive Dormand-Prince 5(4) stepping for complex state vectors.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-12, atol: 1e-14 }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// Integrator that keeps its step size and first-same-as-last derivative
/// between calls, so a long evolution can be advanced in pieces.
pub struct DormandPrince<F> {
    rhs: F,
    tol: Tolerances,
    h: f64,
    k: Vec<Vec<Complex64>>,
    fsal: Option<f64>,
    tmp: Vec<Complex64>,
    pub steps: usize,
    pub rejected: usize,
}

impl<F> DormandPrince<F>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    pub fn new(rhs: F, dim: usize, tol: Tolerances, h0: f64) -> Self {
        DormandPrince {
            rhs,
            tol,
            h: h0,
            k: vec![vec![Complex64::default(); dim]; 7],
            fsal: None,
            tmp: vec![Complex64::default(); dim],
            steps: 0,
            rejected: 0,
        }
    }

    /// Advances `y` from `t0` to exactly `t1`. The right-hand side must be
    /// smooth on the open interval; callers split at discontinuities.
    pub fn advance(&mut self, y: &mut [Complex64], t0: f64, t1: f64) -> Result<()> {
        let mut t = t0;
        // A kink at t0 invalidates the cached derivative.
        self.fsal = None;
        let n = y.len();
        let mut y_new = vec![Complex64::default(); n];
        while t < t1 {
            let last = t + self.h >= t1;
            let h = if last { t1 - t } else { self.h };
            let min_h = 1e-13 * t.abs().max(1.0);
            if h < min_h && !last {
                return Err(Error::Integration { t, reason: format!("step size {h:.3e} ns underflowed") });
            }
            if self.fsal != Some(t) {
                (self.rhs)(t, y, &mut self.k[0]);
            }
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, a) in A[s][..s].iter().enumerate() {
                        if *a != 0.0 {
                            acc += self.k[j][i] * (h * a);
                        }
                    }
                    self.tmp[i] = acc;
                }
                if s == 6 {
                    y_new.copy_from_slice(&self.tmp);
                }
                (self.rhs)(t + C[s] * h, &self.tmp, &mut self.k[s]);
            }
            let mut err = 0.0;
            for i in 0..n {
                let mut e = Complex64::default();
                for (s, w) in E.iter().enumerate() {
                    if *w != 0.0 {
                        e += self.k[s][i] * (h * w);
                    }
                }
                let scale = self.tol.atol + self.tol.rtol * y[i].norm().max(y_new[i].norm());
                err += (e.norm() / scale).powi(2);
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::Integration { t, reason: "non-finite state".into() });
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                y.copy_from_slice(&y_new);
                t = if last { t1 } else { t + h };
                self.k.swap(0, 6);
                self.fsal = Some(t);
                self.steps += 1;
                // Do not let a short final step shrink the working step.
                if !last {
                    self.h = h * factor;
                } else {
                    self.h = self.h.max(h * factor);
                }
            } else {
                self.rejected += 1;
                self.h = h * factor.min(1.0);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_phase_and_decay() {
        let rhs = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| {
            dy[0] = Complex64::new(-0.3, -2.0) * y[0];
        };
        let mut dp = DormandPrince::new(rhs, 1, Tolerances::default(), 0.01);
        let mut y = vec![Complex64::new(1.0, 0.0)];
        dp.advance(&mut y, 0.0, 3.0).unwrap();
        dp.advance(&mut y, 3.0, 10.0).unwrap();
        let exact = (Complex64::new(-0.3, -2.0) * 10.0).exp();
        assert!((y[0] - exact).norm() < 1e-9);
    }

    #[test]
    fn time_dependent_rhs() {
        // y' = cos(t) y  =>  y = exp(sin t)
        let rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| dy[0] = y[0] * t.cos();
        let mut dp = DormandPrince::new(rhs, 1, Tolerances::default(), 0.1);
        let mut y = vec![Complex64::new(1.0, 0.0)];
        dp.advance(&mut y, 0.0, 7.0).unwrap();
        assert!((y[0].re - 7f64.sin().exp()).abs() < 1e-9);
    }

    #[test]
    fn tighter_tolerance_converges() {
        let run = |rtol: f64| {
            let rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
                dy[0] = Complex64::new(0.0, -1.0) * (y[1] * (1.0 + 0.5 * t.sin()));
                dy[1] = Complex64::new(0.0, -1.0) * (y[0] * (1.0 + 0.5 * t.sin()));
            };
            let mut dp = DormandPrince::new(rhs, 2, Tolerances { rtol, atol: rtol * 1e-2 }, 0.1);
            let mut y = vec![Complex64::new(1.0, 0.0), Complex64::default()];
            dp.advance(&mut y, 0.0, 20.0).unwrap();
            y[0].norm_sqr()
        };
        assert!((run(1e-10) - run(5e-11)).abs() < 1e-8);
    }
}
