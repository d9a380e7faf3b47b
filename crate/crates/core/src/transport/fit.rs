use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::kerr::{kerr_response, CubicForm, KerrBranch, KerrResponse};
use crate::error::{Error, Result};

/// Transmission of one mode measured at a single input power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KerrTrace {
    #[serde(rename = "P_in_dBm")]
    pub p_in_dbm: f64,
    /// Probe frequencies (GHz).
    pub freqs: Vec<f64>,
    pub s21: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KerrFitOptions {
    /// Line attenuation (dB). Held fixed: only the product of device power
    /// and Kerr enters the response, so the two cannot be fitted together.
    #[serde(rename = "attenuation_dB")]
    pub attenuation_db: f64,
    #[serde(default)]
    pub cubic: CubicForm,
    #[serde(default)]
    pub branch: KerrBranch,
    /// Starting point `[κ, κ_tot, K, ω0]` (GHz). Estimated from the traces when absent.
    #[serde(default)]
    pub initial: Option<[f64; 4]>,
    #[serde(default = "default_iters")]
    pub max_iter: usize,
}

fn default_iters() -> usize {
    200
}

impl Default for KerrFitOptions {
    fn default() -> Self {
        KerrFitOptions {
            attenuation_db: 0.0,
            cubic: CubicForm::Consistent,
            branch: KerrBranch::Low,
            initial: None,
            max_iter: default_iters(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KerrFit {
    #[serde(rename = "kappa_GHz")]
    pub kappa: f64,
    #[serde(rename = "kappa_tot_GHz")]
    pub kappa_tot: f64,
    #[serde(rename = "K_GHz")]
    pub kerr: f64,
    #[serde(rename = "omega0_GHz")]
    pub omega0: f64,
    #[serde(rename = "attenuation_dB")]
    pub attenuation_db: f64,
    /// One-sigma errors in the order κ, κ_tot, K, ω0.
    pub std_errors: [f64; 4],
    pub covariance: [[f64; 4]; 4],
    pub rms_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub cubic: CubicForm,
}

impl KerrFit {
    pub fn response(&self, p_in_dbm: f64) -> KerrResponse {
        KerrResponse {
            kappa: self.kappa,
            kappa_tot: self.kappa_tot,
            kerr: self.kerr,
            omega0: self.omega0,
            p_in_dbm,
            attenuation_db: self.attenuation_db,
            cubic: self.cubic,
        }
    }
}

struct Problem<'a> {
    traces: &'a [KerrTrace],
    opts: &'a KerrFitOptions,
    scale: [f64; 4],
}

impl Problem<'_> {
    fn unscale(&self, p: &Vector4<f64>) -> [f64; 4] {
        [0, 1, 2, 3].map(|i| p[i] * self.scale[i])
    }

    fn residuals(&self, p: &Vector4<f64>) -> Option<DVector<f64>> {
        let [kappa, kappa_tot, kerr, omega0] = self.unscale(p);
        let mut r = Vec::new();
        for t in self.traces {
            let k = KerrResponse {
                kappa,
                kappa_tot,
                kerr,
                omega0,
                p_in_dbm: t.p_in_dbm,
                attenuation_db: self.opts.attenuation_db,
                cubic: self.opts.cubic,
            };
            let deltas: Vec<f64> = t.freqs.iter().map(|f| (f - omega0) / kappa_tot).collect();
            let pts = kerr_response(&k, &deltas, self.opts.branch).ok()?;
            for (pt, s) in pts.iter().zip(&t.s21) {
                let d = pt.s21 - s;
                r.push(d.re);
                r.push(d.im);
            }
        }
        Some(DVector::from_vec(r))
    }

    fn jacobian(&self, p: &Vector4<f64>) -> Option<DMatrix<f64>> {
        let h = 1e-6;
        let mut cols = Vec::with_capacity(4);
        for i in 0..4 {
            let mut a = *p;
            let mut b = *p;
            a[i] += h;
            b[i] -= h;
            cols.push((self.residuals(&a)? - self.residuals(&b)?) / (2.0 * h));
        }
        Some(DMatrix::from_columns(&cols))
    }
}

fn initial_guess(traces: &[KerrTrace], opts: &KerrFitOptions) -> Result<[f64; 4]> {
    let by_power = |t: &&KerrTrace| t.p_in_dbm;
    let low = traces.iter().min_by(|a, b| by_power(a).total_cmp(&by_power(b))).unwrap();
    let high = traces.iter().max_by(|a, b| by_power(a).total_cmp(&by_power(b))).unwrap();
    let peak = |t: &KerrTrace| {
        let i = (0..t.s21.len()).max_by(|&a, &b| t.s21[a].norm().total_cmp(&t.s21[b].norm())).unwrap();
        (t.freqs[i], t.s21[i].norm())
    };
    let (omega0, top) = peak(low);
    let half = top * top / 2.0;
    let above: Vec<f64> =
        low.freqs.iter().zip(&low.s21).filter(|(_, s)| s.norm_sqr() >= half).map(|(f, _)| *f).collect();
    let fwhm = above.last().unwrap() - above.first().unwrap();
    let kappa_tot = fwhm.max(low.freqs.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max));
    let kappa = (0.5 * top * kappa_tot).min(kappa_tot);
    // Peak pulling at high power: δ + ξñ = 0 with ñ = 4 at the peak.
    let unit = KerrResponse {
        kappa,
        kappa_tot,
        kerr: 1.0,
        omega0,
        p_in_dbm: high.p_in_dbm,
        attenuation_db: opts.attenuation_db,
        cubic: opts.cubic,
    };
    let shift = peak(high).0 - omega0;
    let mut kerr = -shift / (4.0 * kappa_tot * unit.xi());
    if kerr == 0.0 || !kerr.is_finite() {
        kerr = 1e-3 * kappa_tot;
    }
    Ok([kappa, kappa_tot, kerr, omega0])
}

/// Levenberg-Marquardt fit of the Kerr response to traces at several powers.
///
/// Fits κ, κ_tot, K and ω0 jointly on the real and imaginary parts of all
/// traces. The covariance is the Gauss-Newton estimate scaled by the
/// reduced chi-square.
pub fn fit_kerr(traces: &[KerrTrace], opts: &KerrFitOptions) -> Result<KerrFit> {
    if traces.len() < 3 {
        return Err(Error::invalid("traces", "need at least three input powers"));
    }
    for t in traces {
        if t.freqs.len() != t.s21.len() || t.freqs.len() < 3 {
            return Err(Error::invalid("traces", "each trace needs matching frequency and S21 columns"));
        }
    }
    let x0 = match opts.initial {
        Some(x) => x,
        None => initial_guess(traces, opts)?,
    };
    if x0.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return Err(Error::invalid("initial", format!("starting point {x0:?} has zero or non-finite entries")));
    }
    let prob = Problem { traces, opts, scale: x0.map(f64::abs) };
    let mut p = Vector4::from([0, 1, 2, 3].map(|i| x0[i] / prob.scale[i]));
    let mut r = prob.residuals(&p).ok_or_else(|| Error::Numerical("model undefined at the starting point".into()))?;
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let jac =
            prob.jacobian(&p).ok_or_else(|| Error::Numerical("model undefined near the current estimate".into()))?;
        let jtj: Matrix4<f64> = (jac.transpose() * &jac).fixed_view::<4, 4>(0, 0).into_owned();
        let grad: Vector4<f64> = (jac.transpose() * &r).fixed_rows::<4>(0).into_owned();
        let mut improved = false;
        while lambda < 1e12 {
            let mut a = jtj;
            for i in 0..4 {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-30);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-grad))) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            match prob.residuals(&trial) {
                Some(rt) if rt.norm_squared() < cost => {
                    let new_cost = rt.norm_squared();
                    let small_step = step.norm() < 1e-12 * (1.0 + p.norm());
                    let small_gain = cost - new_cost < 1e-14 * cost;
                    p = trial;
                    r = rt;
                    cost = new_cost;
                    lambda = (lambda / 3.0).max(1e-12);
                    improved = true;
                    converged = small_step || small_gain;
                    break;
                }
                _ => lambda *= 4.0,
            }
        }
        if !improved {
            // No descent direction left: a stationary point to working precision.
            converged = grad.norm() < 1e-6 * (1.0 + cost.sqrt());
            break;
        }
        if converged || cost < 1e-28 {
            converged = true;
            break;
        }
    }
    let jac = prob.jacobian(&p).ok_or_else(|| Error::Numerical("model undefined at the solution".into()))?;
    let m = r.len();
    let dof = (m as f64 - 4.0).max(1.0);
    let jtj: Matrix4<f64> = (jac.transpose() * &jac).fixed_view::<4, 4>(0, 0).into_owned();
    let inv = jtj.try_inverse().unwrap_or_else(|| Matrix4::from_element(f64::NAN));
    let s2 = cost / dof;
    let mut covariance = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            covariance[i][j] = s2 * inv[(i, j)] * prob.scale[i] * prob.scale[j];
        }
    }
    let [kappa, kappa_tot, kerr, omega0] = prob.unscale(&p);
    let fit = KerrFit {
        kappa,
        kappa_tot,
        kerr,
        omega0,
        attenuation_db: opts.attenuation_db,
        std_errors: [0, 1, 2, 3].map(|i| covariance[i][i].sqrt()),
        covariance,
        rms_residual: (cost / m as f64).sqrt(),
        iterations,
        converged,
        cubic: opts.cubic,
    };
    if !converged {
        log::warn!("Kerr fit stopped after {iterations} iterations, rms residual {:.3e}", fit.rms_residual);
    }
    Ok(fit)
}

/// Synthetic traces of `truth` at the given powers on a frequency grid.
pub fn synthetic_traces(truth: &KerrResponse, powers: &[f64], freqs: &[f64]) -> Result<Vec<KerrTrace>> {
    powers
        .iter()
        .map(|&p| {
            let k = KerrResponse { p_in_dbm: p, ..*truth };
            let deltas: Vec<f64> = freqs.iter().map(|f| (f - k.omega0) / k.kappa_tot).collect();
            let pts = kerr_response(&k, &deltas, KerrBranch::Low)?;
            Ok(KerrTrace { p_in_dbm: p, freqs: freqs.to_vec(), s21: pts.iter().map(|q| q.s21).collect() })
        })
        .collect()
}
