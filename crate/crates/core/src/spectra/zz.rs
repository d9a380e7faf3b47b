use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::two_ex::pair_index;
use super::{build_and_diag_1ex, build_and_diag_2ex, ClassificationMargin, HamiltonianModel};
use crate::error::{Error, Result};

/// How the doubly excited `|11⟩` level is picked out of the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identification {
    /// Largest overlap with the product of the two single-excitation bound states.
    #[default]
    ProductOverlap,
    /// Along a sweep, largest overlap with the previous point's `|11⟩`.
    Adiabatic,
}

/// Conditional shift of two bound states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZzResult {
    /// `E11 - E10 - E01` (GHz).
    pub zeta: f64,
    pub e10: f64,
    pub e01: f64,
    pub e11: f64,
    /// Squared overlap of the chosen level with the reference state.
    pub overlap: f64,
    /// Next-best level `(energy, squared overlap)`.
    pub runner_up: Option<(f64, f64)>,
    /// Set when the runner-up overlap is at least half the best one.
    pub ambiguous: bool,
}

struct Point {
    result: ZzResult,
    phi11: DVector<f64>,
}

fn product_state(u: &[f64], v: &[f64]) -> DVector<f64> {
    let m = u.len();
    let mut p = DVector::zeros(m * (m + 1) / 2);
    for a in 0..m {
        for b in a..m {
            let amp = if a == b { std::f64::consts::SQRT_2 * u[a] * v[a] } else { u[a] * v[b] + u[b] * v[a] };
            p[pair_index(m, a, b)] = amp;
        }
    }
    let n = p.norm();
    p / n
}

fn evaluate(h: &HamiltonianModel, reference: Option<&DVector<f64>>) -> Result<Point> {
    h.validate()?;
    if h.qubits.len() != 2 {
        return Err(Error::invalid("qubits", "exactly two emitters required"));
    }
    let margin = ClassificationMargin::default();
    let one = build_and_diag_1ex(h, margin)?;
    let above = one.discrete_above();
    if above.len() < 2 {
        return Err(Error::NotFound(format!("{} single-excitation level(s) above the band, need two", above.len())));
    }
    let (a, b) = (above[0], above[1]);
    let (s10, s01) = if one.atomic_weight(a, 0) >= one.atomic_weight(b, 0) { (a, b) } else { (b, a) };
    let two = build_and_diag_2ex(h, margin)?;
    let reference = match reference {
        Some(r) => r.clone(),
        None => product_state(&one.vector(s10), &one.vector(s01)),
    };
    let overlaps: Vec<f64> =
        (0..two.eigenvalues.len()).map(|k| two.eigenvectors.column(k).dot(&reference).powi(2)).collect();
    let mut order: Vec<usize> = (0..overlaps.len()).collect();
    order.sort_by(|&x, &y| overlaps[y].total_cmp(&overlaps[x]));
    let best = order[0];
    let runner = order.get(1).copied();
    let e10 = one.eigenvalues[s10];
    let e01 = one.eigenvalues[s01];
    let e11 = two.eigenvalues[best];
    let runner_up = runner.map(|r| (two.eigenvalues[r], overlaps[r]));
    let ambiguous = runner_up.is_some_and(|(_, o)| o >= 0.5 * overlaps[best]);
    Ok(Point {
        result: ZzResult { zeta: e11 - e10 - e01, e10, e01, e11, overlap: overlaps[best], runner_up, ambiguous },
        phi11: two.eigenvectors.column(best).into_owned(),
    })
}

/// ZZ shift at a single parameter point, identified by product-state overlap.
pub fn zz_interaction(h: &HamiltonianModel) -> Result<ZzResult> {
    Ok(evaluate(h, None)?.result)
}

/// ZZ shift along a sequence of models with identical dimensions.
pub fn zz_sweep(models: &[HamiltonianModel], ident: Identification) -> Result<Vec<ZzResult>> {
    let mut out = Vec::with_capacity(models.len());
    let mut prev: Option<DVector<f64>> = None;
    for h in models {
        let reference = match ident {
            Identification::ProductOverlap => None,
            Identification::Adiabatic => prev.as_ref(),
        };
        let pt = evaluate(h, reference)?;
        prev = Some(pt.phi11);
        out.push(pt.result);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::test_support::measured;
    use super::*;

    #[test]
    fn uncoupled_emitter_has_no_shift() {
        let mut h = measured(true);
        h.qubits[0].g = 0.0;
        h.qubits[0].g2 = 0.0;
        for w in [6.4, 6.8, 7.2] {
            h.qubits[0].omega_q = w;
            let z = zz_interaction(&h).unwrap();
            assert!(z.zeta.abs() < 1e-10, "zeta {}", z.zeta);
        }
    }

    #[test]
    fn deep_detuning_suppresses_shift() {
        let mut h = measured(true);
        h.qubits[0].omega_q = 14.0;
        h.qubits[1].omega_q = 16.0;
        let z = zz_interaction(&h).unwrap();
        assert!(z.zeta.abs() < 1e-4);
    }

    #[test]
    fn invariant_under_global_shift() {
        let mut h = measured(true);
        h.qubits[0].omega_q = 6.2;
        let a = zz_interaction(&h).unwrap();
        let b = zz_interaction(&h.shifted(0.7)).unwrap();
        assert!((a.zeta - b.zeta).abs() < 1e-10);
    }

    #[test]
    fn adiabatic_sweep_starts_like_product() {
        let mut models = Vec::new();
        for k in 0..5 {
            let mut h = measured(true);
            h.qubits[0].omega_q = 6.1 + 0.05 * k as f64;
            models.push(h);
        }
        let a = zz_sweep(&models, Identification::Adiabatic).unwrap();
        let p = zz_sweep(&models, Identification::ProductOverlap).unwrap();
        assert_eq!(a[0], p[0]);
        assert_eq!(a.len(), 5);
    }
}
