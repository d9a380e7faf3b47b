use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::circuit::HBAR;
use crate::error::{Error, Result};

/// Photon-number equation used for the Kerr-shifted mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CubicForm {
    /// `(δ²+¼)n + 2δξn² + ξ²n³ = 1`, the self-consistent `n = |½ + i(δ+ξn)|⁻²`.
    #[default]
    Consistent,
    /// `(δ²+¼)n - 2δξn² + ξ³n³ = 1`.
    AsPrinted,
}

/// Which positive root is reported when the mode is bistable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KerrBranch {
    #[default]
    Low,
    High,
    /// Root closest to the previous grid point, so a grid ordered up or
    /// down in frequency traces the matching hysteresis branch.
    Sweep,
}

/// Driven single mode with a self-Kerr shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KerrResponse {
    #[serde(rename = "kappa_GHz")]
    pub kappa: f64,
    #[serde(rename = "kappa_tot_GHz")]
    pub kappa_tot: f64,
    #[serde(rename = "K_GHz")]
    pub kerr: f64,
    #[serde(rename = "omega0_GHz")]
    pub omega0: f64,
    #[serde(rename = "P_in_dBm")]
    pub p_in_dbm: f64,
    #[serde(rename = "attenuation_dB")]
    pub attenuation_db: f64,
    #[serde(default)]
    pub cubic: CubicForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KerrPoint {
    pub delta: f64,
    /// Photon number scaled by the drive, `ñ`.
    pub n: f64,
    /// Number of positive roots at this detuning.
    pub roots: usize,
    pub s21: Complex64,
}

impl KerrResponse {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::invalid("kappa_GHz", "must be positive"));
        }
        if !(self.kappa_tot >= self.kappa && self.kappa_tot.is_finite()) {
            return Err(Error::invalid("kappa_tot_GHz", "must be at least kappa"));
        }
        if !self.kerr.is_finite() || !self.p_in_dbm.is_finite() || !self.attenuation_db.is_finite() {
            return Err(Error::invalid("K_GHz", "Kerr, power and attenuation must be finite"));
        }
        if !(self.omega0 > 0.0) {
            return Err(Error::invalid("omega0_GHz", "must be positive"));
        }
        Ok(())
    }

    /// Power reaching the device (W).
    pub fn device_power(&self) -> f64 {
        1e-3 * 10f64.powf((self.p_in_dbm - self.attenuation_db) / 10.0)
    }

    /// Dimensionless drive term `(P/ħω) κ K / κ_tot³`.
    pub fn xi(&self) -> f64 {
        let w = 2.0 * PI * 1e9;
        let photon_flux = self.device_power() / (HBAR * self.omega0 * w);
        photon_flux * (self.kappa * w) * (self.kerr * w) / (self.kappa_tot * w).powi(3)
    }

    /// Intra-mode photon number for a given `ñ`.
    pub fn photons(&self, n: f64) -> f64 {
        let w = 2.0 * PI * 1e9;
        n * self.device_power() / (HBAR * self.omega0 * w) * (self.kappa * w) / (self.kappa_tot * w).powi(2)
    }

    /// Coefficients `[c0, c1, c2, c3]` of the photon-number polynomial.
    pub fn cubic_coefficients(&self, delta: f64, xi: f64) -> [f64; 4] {
        let lin = delta * delta + 0.25;
        match self.cubic {
            CubicForm::Consistent => [-1.0, lin, 2.0 * delta * xi, xi * xi],
            CubicForm::AsPrinted => [-1.0, lin, -2.0 * delta * xi, xi.powi(3)],
        }
    }

    pub fn s21(&self, delta: f64, xi: f64, n: f64) -> Complex64 {
        Complex64::new(self.kappa / self.kappa_tot, 0.0) / Complex64::new(0.5, delta + xi * n)
    }
}

fn horner(c: &[f64; 4], x: f64) -> (f64, f64) {
    let p = ((c[3] * x + c[2]) * x + c[1]) * x + c[0];
    let dp = (3.0 * c[3] * x + 2.0 * c[2]) * x + c[1];
    (p, dp)
}

/// Real roots of `c0 + c1 x + c2 x² + c3 x³`, ascending, each refined by Newton steps.
pub fn real_cubic_roots(c: [f64; 4]) -> Vec<f64> {
    let [d, cc, b, a] = c;
    let mut roots = if a == 0.0 {
        if b == 0.0 {
            if cc == 0.0 {
                vec![]
            } else {
                vec![-d / cc]
            }
        } else {
            let disc = cc * cc - 4.0 * b * d;
            if disc < 0.0 {
                vec![]
            } else {
                // Cancellation-free quadratic roots.
                let q = -0.5 * (cc + cc.signum() * disc.sqrt());
                if q == 0.0 {
                    vec![0.0]
                } else {
                    vec![q / b, d / q]
                }
            }
        }
    } else {
        let (b, c1, d) = (b / a, cc / a, d / a);
        let p = c1 - b * b / 3.0;
        let q = 2.0 * b.powi(3) / 27.0 - b * c1 / 3.0 + d;
        let shift = -b / 3.0;
        let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
        if disc > 0.0 {
            let s = disc.sqrt();
            vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt() + shift]
        } else {
            let r = (-p / 3.0).max(0.0).sqrt();
            let arg = if r == 0.0 { 0.0 } else { (-q / (2.0 * r.powi(3))).clamp(-1.0, 1.0) };
            let phi = arg.acos();
            (0..3).map(|k| 2.0 * r * ((phi - 2.0 * PI * k as f64) / 3.0).cos() + shift).collect()
        }
    };
    for x in roots.iter_mut() {
        for _ in 0..4 {
            if a == 0.0 && b == 0.0 {
                break;
            }
            let (p, dp) = horner(&c, *x);
            if dp == 0.0 || p == 0.0 {
                break;
            }
            let step = p / dp;
            *x -= step;
            if step.abs() <= 1e-16 * x.abs() {
                break;
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}

/// Relative residual of `x` in the polynomial, scaled by the largest term.
fn relative_residual(c: &[f64; 4], x: f64) -> f64 {
    let scale = c.iter().enumerate().map(|(i, ci)| (ci * x.powi(i as i32)).abs()).fold(0.0, f64::max);
    horner(c, x).0.abs() / scale.max(f64::MIN_POSITIVE)
}

/// Transmission of the Kerr mode on a dimensionless detuning grid
/// `δ = (ω - ω0)/κ_tot`.
pub fn kerr_response(k: &KerrResponse, deltas: &[f64], branch: KerrBranch) -> Result<Vec<KerrPoint>> {
    k.validate()?;
    let xi = k.xi();
    let mut prev: Option<f64> = None;
    let mut out = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let c = k.cubic_coefficients(delta, xi);
        let pos: Vec<f64> = real_cubic_roots(c).into_iter().filter(|&x| x > 0.0).collect();
        if pos.is_empty() {
            return Err(Error::Numerical(format!("no positive photon-number root at delta = {delta}")));
        }
        let n = match (branch, prev) {
            (KerrBranch::Low, _) | (KerrBranch::Sweep, None) => pos[0],
            (KerrBranch::High, _) => *pos.last().unwrap(),
            (KerrBranch::Sweep, Some(p)) => {
                *pos.iter().min_by(|a, b| (*a - p).abs().total_cmp(&(*b - p).abs())).unwrap()
            }
        };
        let res = relative_residual(&c, n);
        if res > 1e-12 {
            return Err(Error::Numerical(format!("photon-number residual {res:.2e} at delta = {delta}")));
        }
        prev = Some(n);
        out.push(KerrPoint { delta, n, roots: pos.len(), s21: k.s21(delta, xi, n) });
    }
    Ok(out)
}
