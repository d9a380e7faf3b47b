use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::CrosstalkModel;
use crate::error::{Error, Result};
use crate::spectra::HamiltonianModel;

/// Largest system solved per frequency point.
const MAX_DIM: usize = 4000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceMetadata {
    pub n_sites: usize,
    pub n_qubits: usize,
    pub include_next_nearest: bool,
    pub kappa_edge: f64,
    pub kappa_nr: f64,
    pub gamma_q: Vec<f64>,
}

/// Complex transmission and reflection on a frequency grid (GHz).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransmissionTrace {
    pub freqs: Vec<f64>,
    pub s21: Vec<Complex64>,
    pub s11: Vec<Complex64>,
    pub crosstalk: Option<CrosstalkModel>,
    pub metadata: TraceMetadata,
}

fn system_matrix(h: &HamiltonianModel, gamma_q: &[f64], omega: f64) -> DMatrix<Complex64> {
    let n = h.lattice.n_sites;
    let real = h.one_excitation_matrix();
    let mut a = real.map(|v| Complex64::new(v, 0.0));
    for x in 0..n {
        let mut kappa = h.lattice.kappa_nr;
        if x == 0 {
            kappa += h.lattice.kappa_edge;
        }
        if x == n - 1 {
            kappa += h.lattice.kappa_edge;
        }
        a[(x, x)] -= Complex64::new(omega, 0.5 * kappa);
    }
    for (i, g) in gamma_q.iter().enumerate() {
        a[(n + i, n + i)] -= Complex64::new(omega, 0.5 * g);
    }
    a
}

fn check(h: &HamiltonianModel, gamma_q: &[f64]) -> Result<()> {
    h.validate()?;
    if gamma_q.len() != h.qubits.len() {
        return Err(Error::invalid(
            "gamma_q_GHz",
            format!("expected {} decay rates, got {}", h.qubits.len(), gamma_q.len()),
        ));
    }
    if gamma_q.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
        return Err(Error::invalid("gamma_q_GHz", "decay rates must be non-negative"));
    }
    if h.lattice.kappa_edge + h.lattice.kappa_nr <= 0.0 {
        return Err(Error::invalid(
            "kappa_edge_GHz",
            "kappa_edge + kappa_nr must be positive for a regular steady state",
        ));
    }
    if h.dim() > MAX_DIM {
        return Err(Error::DimensionOverflow { dim: h.dim(), limit: MAX_DIM });
    }
    Ok(())
}

/// Steady-state field for a unit drive entering at `input` (0-based site).
fn steady_state(h: &HamiltonianModel, gamma_q: &[f64], omega: f64, input: usize) -> Result<DVector<Complex64>> {
    let a = system_matrix(h, gamma_q, omega);
    let mut rhs = DVector::zeros(h.dim());
    rhs[input] = Complex64::new(0.0, -h.lattice.kappa_edge.sqrt());
    a.lu().solve(&rhs).ok_or_else(|| Error::Numerical(format!("singular steady-state system at {omega} GHz")))
}

/// Transmission from the first to the last site, with the reflection at the first.
///
/// Per frequency it solves `(H - ω - iΓ/2) a = -i√κ e₁` and returns
/// `S21 = √κ a_N`, `S11 = √κ a_1 - 1`.
pub fn transmission_linear(h: &HamiltonianModel, gamma_q: &[f64], grid: &[f64]) -> Result<TransmissionTrace> {
    check(h, gamma_q)?;
    let n = h.lattice.n_sites;
    let sk = h.lattice.kappa_edge.sqrt();
    let points = grid
        .par_iter()
        .map(|&w| {
            let a = steady_state(h, gamma_q, w, 0)?;
            Ok((a[n - 1] * sk, a[0] * sk - 1.0))
        })
        .collect::<Result<Vec<_>>>()?;
    let (s21, s11) = points.into_iter().unzip();
    Ok(TransmissionTrace {
        freqs: grid.to_vec(),
        s21,
        s11,
        crosstalk: None,
        metadata: TraceMetadata {
            n_sites: n,
            n_qubits: h.qubits.len(),
            include_next_nearest: h.include_next_nearest,
            kappa_edge: h.lattice.kappa_edge,
            kappa_nr: h.lattice.kappa_nr,
            gamma_q: gamma_q.to_vec(),
        },
    })
}

/// Transmission from the last to the first site.
pub fn transmission_reverse(h: &HamiltonianModel, gamma_q: &[f64], grid: &[f64]) -> Result<Vec<Complex64>> {
    check(h, gamma_q)?;
    let n = h.lattice.n_sites;
    let sk = h.lattice.kappa_edge.sqrt();
    grid.par_iter().map(|&w| Ok(steady_state(h, gamma_q, w, n - 1)?[0] * sk)).collect()
}
