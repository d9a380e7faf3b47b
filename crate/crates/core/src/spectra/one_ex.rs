use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::HamiltonianModel;
use crate::error::Result;
use crate::linalg::{self, SymBand};

/// Above this dimension only the states outside the band are computed,
/// with the banded selective solver.
pub const DENSE_LIMIT: usize = 600;

/// Largest single-excitation dimension accepted.
pub const ONE_EX_LIMIT: usize = 100_000;

/// Distance beyond the infinite-chain band edges needed to call a state discrete.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum ClassificationMargin {
    /// Fixed margin in GHz.
    Absolute(f64),
    /// Multiple of the bare-chain level spacing at the band edge.
    LevelSpacing(f64),
}

impl Default for ClassificationMargin {
    fn default() -> Self {
        ClassificationMargin::Absolute(0.0)
    }
}

impl ClassificationMargin {
    pub fn value(&self, h: &HamiltonianModel) -> f64 {
        match *self {
            ClassificationMargin::Absolute(m) => m,
            ClassificationMargin::LevelSpacing(f) => {
                let n = h.lattice.n_sites as f64;
                let k1 = std::f64::consts::PI / (n + 1.0);
                f * 2.0 * h.lattice.j * (k1.cos() - (2.0 * k1).cos())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StateClass {
    Band,
    Above,
    Below,
}

/// Single-excitation eigenpairs, ascending. Vectors are columns in the
/// model basis (sites, then emitters), with the dominant emitter
/// amplitude (or the first site, without emitters) made non-negative.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub classes: Vec<StateClass>,
    pub band_edges: (f64, f64),
    pub margin: f64,
    /// False when only the discrete states were resolved.
    pub complete: bool,
    pub n_sites: usize,
}

impl SpectrumResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, state: usize) -> Vec<f64> {
        self.eigenvectors.column(state).iter().copied().collect()
    }

    /// Weight of emitter `qubit` in `state`.
    pub fn atomic_weight(&self, state: usize, qubit: usize) -> f64 {
        self.eigenvectors[(self.n_sites + qubit, state)].powi(2)
    }

    /// Combined emitter weight of `state`.
    pub fn emitter_weight(&self, state: usize) -> f64 {
        (self.n_sites..self.eigenvectors.nrows()).map(|r| self.eigenvectors[(r, state)].powi(2)).sum()
    }

    /// Per-site photon weight of `state`.
    pub fn photonic_weights(&self, state: usize) -> Vec<f64> {
        (0..self.n_sites).map(|r| self.eigenvectors[(r, state)].powi(2)).collect()
    }

    /// Discrete states above the band, highest first.
    pub fn discrete_above(&self) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.len()).filter(|&i| self.classes[i] == StateClass::Above).collect();
        v.reverse();
        v
    }

    /// Discrete states below the band, lowest first.
    pub fn discrete_below(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.classes[i] == StateClass::Below).collect()
    }
}

fn classify(e: f64, edges: (f64, f64), margin: f64) -> StateClass {
    if e > edges.1 + margin {
        StateClass::Above
    } else if e < edges.0 - margin {
        StateClass::Below
    } else {
        StateClass::Band
    }
}

fn fix_sign(v: &mut [f64], n_sites: usize) {
    let pivot = if v.len() > n_sites {
        let (i, _) =
            v[n_sites..]
                .iter()
                .enumerate()
                .fold((0, -1.0), |best, (i, x)| if x.abs() > best.1 { (i, x.abs()) } else { best });
        if v[n_sites + i].abs() > 1e-14 {
            v[n_sites + i]
        } else {
            v.iter().copied().find(|x| x.abs() > 1e-14).unwrap_or(1.0)
        }
    } else {
        v.iter().copied().find(|x| x.abs() > 1e-14).unwrap_or(1.0)
    };
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Diagonalizes the single-excitation sector.
pub fn build_and_diag_1ex(h: &HamiltonianModel, margin: ClassificationMargin) -> Result<SpectrumResult> {
    h.validate()?;
    let dim = h.dim();
    if dim > ONE_EX_LIMIT {
        return Err(crate::error::Error::DimensionOverflow { dim, limit: ONE_EX_LIMIT });
    }
    let edges = h.band_edges();
    let margin = margin.value(h);
    let n = h.lattice.n_sites;
    if dim <= DENSE_LIMIT {
        let eig = linalg::eigh(h.one_excitation_matrix())?;
        let mut vectors = eig.vectors;
        for c in 0..dim {
            let mut col: Vec<f64> = vectors.column(c).iter().copied().collect();
            fix_sign(&mut col, n);
            vectors.set_column(c, &nalgebra::DVector::from_vec(col));
        }
        let classes = eig.values.iter().map(|&e| classify(e, edges, margin)).collect();
        return Ok(SpectrumResult {
            eigenvalues: eig.values,
            eigenvectors: vectors,
            classes,
            band_edges: edges,
            margin,
            complete: true,
            n_sites: n,
        });
    }
    selective(h, edges, margin)
}

/// Banded ordering: each emitter directly after its attachment site.
fn band_order(h: &HamiltonianModel) -> Vec<usize> {
    let n = h.lattice.n_sites;
    let mut pos = vec![0; h.dim()];
    let mut k = 0;
    for x in 0..n {
        pos[x] = k;
        k += 1;
        for (i, q) in h.qubits.iter().enumerate() {
            if q.site - 1 == x {
                pos[n + i] = k;
                k += 1;
            }
        }
    }
    pos
}

fn selective(h: &HamiltonianModel, edges: (f64, f64), margin: f64) -> Result<SpectrumResult> {
    let n = h.lattice.n_sites;
    let dim = h.dim();
    let pos = band_order(h);
    let couplings = h.couplings();
    let bw = couplings.iter().map(|&(a, b, _)| pos[a].abs_diff(pos[b])).max().unwrap_or(0).max(1);
    let mut band = SymBand::new(dim, bw);
    for (i, d) in h.diagonal().into_iter().enumerate() {
        band.set(pos[i], pos[i], d);
    }
    for (a, b, v) in couplings {
        band.add(pos[a], pos[b], v);
    }
    let (glo, ghi) = band.gershgorin();
    let mut values = band.eigenvalues_in(glo - 1.0, edges.0 - margin);
    let above = band.eigenvalues_in(edges.1 + margin, ghi + 1.0);
    values.extend(above);
    let mut found: Vec<Vec<f64>> = Vec::new();
    for &lam in &values {
        let v = band.eigenvector(lam, &found)?;
        found.push(v);
    }
    let mut vectors = DMatrix::zeros(dim, values.len());
    for (c, v) in found.iter().enumerate() {
        let mut col: Vec<f64> = (0..dim).map(|i| v[pos[i]]).collect();
        fix_sign(&mut col, n);
        vectors.set_column(c, &nalgebra::DVector::from_vec(col));
    }
    let classes = values.iter().map(|&e| classify(e, edges, margin)).collect();
    Ok(SpectrumResult {
        eigenvalues: values,
        eigenvectors: vectors,
        classes,
        band_edges: edges,
        margin,
        complete: false,
        n_sites: n,
    })
}

#[cfg(test)]
mod tests {
    use super::super::test_support::measured;
    use super::super::QubitParams;
    use super::*;
    use crate::boundstate::{solve_single_bs, solve_two_atom_bs, BandSide, SelfEnergyModel};
    use crate::lattice::{mode_frequencies, LatticeParams};

    #[test]
    fn uncoupled_spectrum_is_union() {
        let mut h = measured(false);
        for q in &mut h.qubits {
            q.g = 0.0;
            q.g2 = 0.0;
        }
        let s = build_and_diag_1ex(&h, ClassificationMargin::default()).unwrap();
        // Next-nearest hopping is off in this model.
        let bare = LatticeParams { j2: 0.0, ..h.lattice.clone() };
        let mut expect: Vec<f64> = mode_frequencies(&bare).unwrap().modes.iter().map(|m| m.omega).collect();
        expect.extend([6.322, 6.606]);
        expect.sort_by(f64::total_cmp);
        for (a, b) in s.eigenvalues.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12, "{a} {b}");
        }
    }

    #[test]
    fn eigenvalue_sum_equals_trace() {
        for nnn in [false, true] {
            let h = measured(nnn);
            let s = build_and_diag_1ex(&h, ClassificationMargin::default()).unwrap();
            let tr = h.one_excitation_matrix().trace();
            let sum: f64 = s.eigenvalues.iter().sum();
            assert!((sum - tr).abs() < 1e-9 * tr.abs());
        }
    }

    #[test]
    fn top_level_near_analytic_bound_state() {
        let mut h = measured(false);
        h.qubits.truncate(1);
        h.qubits[0] = QubitParams { site: 12, ..h.qubits[0] };
        h.qubits[0].omega_q = 6.4;
        let s = build_and_diag_1ex(&h, ClassificationMargin::default()).unwrap();
        let bs = solve_single_bs(&h.qubits[0], &h.lattice, BandSide::Above, SelfEnergyModel::Finite).unwrap();
        assert!((s.eigenvalues.last().unwrap() - bs.omega_bs).abs() < 1e-10);
        let cont = solve_single_bs(&h.qubits[0], &h.lattice, BandSide::Above, SelfEnergyModel::Continuum).unwrap();
        assert!((s.eigenvalues.last().unwrap() - cont.omega_bs).abs() < 1e-3);
    }

    #[test]
    fn selective_matches_dense() {
        let lattice = LatticeParams { n_sites: 640, j2: 0.03, ..Default::default() };
        let qubits = vec![
            QubitParams { omega_q: 6.3, beta: -0.25, g: 0.3, g2: 0.02, site: 318 },
            QubitParams { omega_q: 6.25, beta: -0.25, g: 0.33, g2: 0.02, site: 322 },
            QubitParams { omega_q: 5.0, beta: -0.25, g: 0.4, g2: 0.0, site: 100 },
        ];
        for nnn in [false, true] {
            let h = HamiltonianModel::new(lattice.clone(), qubits.clone()).with_next_nearest(nnn);
            let sel = build_and_diag_1ex(&h, ClassificationMargin::default()).unwrap();
            assert!(!sel.complete);
            let dense = linalg::eigh(h.one_excitation_matrix()).unwrap();
            let (lo, hi) = h.band_edges();
            let expect: Vec<(usize, f64)> =
                dense.values.iter().copied().enumerate().filter(|&(_, e)| e > hi || e < lo).collect();
            assert_eq!(expect.len(), sel.len());
            for (k, &(i, e)) in expect.iter().enumerate() {
                assert!((sel.eigenvalues[k] - e).abs() < 1e-11);
                let dot: f64 =
                    dense.vectors.column(i).iter().zip(sel.eigenvectors.column(k).iter()).map(|(a, b)| a * b).sum();
                assert!((dot.abs() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn resonant_pair_splitting_matches_analytic() {
        let mut h = measured(false);
        h.qubits[0].omega_q = 6.3;
        h.qubits[1].omega_q = 6.3;
        h.qubits[1].g = h.qubits[0].g;
        let s = build_and_diag_1ex(&h, ClassificationMargin::default()).unwrap();
        let above = s.discrete_above();
        let r = solve_two_atom_bs(&h.qubits[0], &h.qubits[1], &h.lattice, SelfEnergyModel::Finite).unwrap();
        assert!((s.eigenvalues[above[0]] - r.omega_plus.unwrap()).abs() < 1e-10);
        assert!((s.eigenvalues[above[1]] - r.omega_minus.unwrap()).abs() < 1e-10);
    }

    #[test]
    fn level_spacing_margin() {
        let h = measured(false);
        let m = ClassificationMargin::LevelSpacing(3.0).value(&h);
        assert!(m > 0.04 && m < 0.05);
    }
}
