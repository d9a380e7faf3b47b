use serde::Serialize;

use super::{build_and_diag_1ex, ClassificationMargin, HamiltonianModel};
use crate::dynamics::find_resonance;
use crate::error::{Error, Result};

/// Hybridized pair of bound states with the tuned emitter on resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Splitting {
    /// Bare frequency of the tuned emitter at resonance (GHz).
    pub omega_tuned: f64,
    pub omega_plus: f64,
    /// Absent when the lower partner has merged into the band.
    pub omega_minus: Option<f64>,
    /// Half the gap between the pair, or between the upper level and the
    /// band edge when the lower one has melted (GHz).
    pub u: f64,
    /// `ω₋ + U/2`, with the band edge standing in for a melted `ω₋`.
    pub omega_mid: f64,
}

/// Tunes emitter `tuned` within `window` GHz of the other emitter to the
/// point of closest approach and reports the splitting there.
pub fn resonant_splitting(h: &HamiltonianModel, tuned: usize, window: f64) -> Result<Splitting> {
    h.validate()?;
    if h.qubits.len() != 2 || tuned > 1 {
        return Err(Error::invalid("tuned", "need two emitters and tuned in {0, 1}"));
    }
    if !(window > 0.0) {
        return Err(Error::invalid("window_GHz", "must be positive"));
    }
    let other = h.qubits[1 - tuned].omega_q;
    let (w, _) = find_resonance(h, tuned, other - window, other + window)?;
    let mut m = h.clone();
    m.qubits[tuned].omega_q = w;
    let s = build_and_diag_1ex(&m, ClassificationMargin::default())?;
    let above = s.discrete_above();
    let plus = match above.first() {
        Some(&i) => s.eigenvalues[i],
        None => return Err(Error::NotFound("no level above the band at resonance".into())),
    };
    let minus = above.get(1).map(|&i| s.eigenvalues[i]);
    let lower = minus.unwrap_or(s.band_edges.1);
    let u = 0.5 * (plus - lower);
    Ok(Splitting { omega_tuned: w, omega_plus: plus, omega_minus: minus, u, omega_mid: lower + 0.5 * u })
}
