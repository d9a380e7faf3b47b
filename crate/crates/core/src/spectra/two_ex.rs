use nalgebra::DMatrix;
use serde::Serialize;

use super::{build_and_diag_1ex, ClassificationMargin, HamiltonianModel, StateClass};
use crate::error::{Error, Result};
use crate::linalg;

/// Largest two-excitation dimension accepted by the dense solver.
pub const TWO_EX_LIMIT: usize = 5000;

/// Weight of each occupation pattern in a two-excitation state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Populations {
    /// One excitation on emitter `i`, one photon.
    pub qubit_photon: Vec<f64>,
    /// Emitter `i` doubly excited.
    pub qubit_double: Vec<f64>,
    /// Two different emitters each singly excited.
    pub qubit_qubit: f64,
    /// Two photons.
    pub photon_photon: f64,
}

impl Populations {
    pub fn total(&self) -> f64 {
        self.qubit_photon.iter().sum::<f64>()
            + self.qubit_double.iter().sum::<f64>()
            + self.qubit_qubit
            + self.photon_photon
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "of")]
pub enum TwoExClass {
    /// Inside the two-photon scattering band.
    Band,
    /// One excitation bound to the given single-excitation discrete level, one photon in the band.
    Sideband(usize),
    Discrete,
}

/// Two-excitation eigenpairs in the symmetric pair basis `{a ≤ b}` over
/// the single-excitation modes (sites, then emitters).
#[derive(Debug, Clone)]
pub struct TwoExcitationResult {
    pub modes: usize,
    pub n_sites: usize,
    pub pairs: Vec<(usize, usize)>,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub populations: Vec<Populations>,
    pub classes: Vec<TwoExClass>,
    /// Discrete single-excitation energies used for the sideband test.
    pub one_ex_discrete: Vec<f64>,
}

pub(crate) fn pair_index(m: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    a * (2 * m + 1 - a) / 2 + b - a
}

fn pairs(m: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(m * (m + 1) / 2);
    for a in 0..m {
        for b in a..m {
            v.push((a, b));
        }
    }
    v
}

impl TwoExcitationResult {
    /// Symmetric two-photon amplitude `u(x, y)` of `state` (sites 0-based).
    pub fn photon_pair_amplitude(&self, state: usize, x: usize, y: usize) -> f64 {
        let v = self.eigenvectors[(pair_index(self.modes, x, y), state)];
        if x == y {
            v
        } else {
            v / std::f64::consts::SQRT_2
        }
    }

    /// Amplitude with emitter `q` excited and a photon on site `x`.
    pub fn qubit_photon_amplitude(&self, state: usize, q: usize, x: usize) -> f64 {
        self.eigenvectors[(pair_index(self.modes, self.n_sites + q, x), state)]
    }

    /// Amplitude of the emitter pair `(q1, q2)`; `q1 == q2` is double occupation.
    pub fn qubit_pair_amplitude(&self, state: usize, q1: usize, q2: usize) -> f64 {
        self.eigenvectors[(pair_index(self.modes, self.n_sites + q1, self.n_sites + q2), state)]
    }

    pub fn vector(&self, state: usize) -> Vec<f64> {
        self.eigenvectors.column(state).iter().copied().collect()
    }

    /// Discrete states, highest first.
    pub fn discrete(&self) -> Vec<usize> {
        let mut v: Vec<usize> =
            (0..self.eigenvalues.len()).filter(|&i| self.classes[i] == TwoExClass::Discrete).collect();
        v.reverse();
        v
    }
}

/// Two-excitation Hamiltonian: bosonic hopping of both excitations plus
/// `β` on doubly excited emitters.
/// Matrix together with the mode pair of each basis state.
pub(crate) type PairMatrix = (DMatrix<f64>, Vec<(usize, usize)>);

pub(crate) fn two_excitation_matrix(h: &HamiltonianModel) -> Result<PairMatrix> {
    let m = h.dim();
    let d = m * (m + 1) / 2;
    if d > TWO_EX_LIMIT {
        return Err(Error::DimensionOverflow { dim: d, limit: TWO_EX_LIMIT });
    }
    let h1 = h.one_excitation_matrix();
    let mut nbrs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for i in 0..m {
        for jx in 0..m {
            let v = h1[(i, jx)];
            if v != 0.0 {
                nbrs[jx].push((i, v));
            }
        }
    }
    let ps = pairs(m);
    let mut h2 = DMatrix::zeros(d, d);
    let root2 = std::f64::consts::SQRT_2;
    let norm = |a: usize, b: usize| if a == b { root2 } else { 1.0 };
    for (col, &(a, b)) in ps.iter().enumerate() {
        // Move the excitation at `a`, then the one at `b`.
        for &(i, v) in &nbrs[a] {
            let row = pair_index(m, i, b);
            h2[(row, col)] += v * norm(i, b) / norm(a, b);
        }
        for &(i, v) in &nbrs[b] {
            let row = pair_index(m, a, i);
            h2[(row, col)] += v * norm(a, i) / norm(a, b);
        }
    }
    for (k, q) in h.qubits.iter().enumerate() {
        let qi = h.qubit_index(k);
        let idx = pair_index(m, qi, qi);
        h2[(idx, idx)] += q.beta;
    }
    Ok((h2, ps))
}

fn populations_of(v: &[f64], ps: &[(usize, usize)], n: usize, nq: usize) -> Populations {
    let mut p =
        Populations { qubit_photon: vec![0.0; nq], qubit_double: vec![0.0; nq], qubit_qubit: 0.0, photon_photon: 0.0 };
    for (k, &(a, b)) in ps.iter().enumerate() {
        let w = v[k] * v[k];
        match (a >= n, b >= n) {
            (false, false) => p.photon_photon += w,
            (false, true) => p.qubit_photon[b - n] += w,
            (true, false) => p.qubit_photon[a - n] += w,
            (true, true) if a == b => p.qubit_double[a - n] += w,
            (true, true) => p.qubit_qubit += w,
        }
    }
    p
}

/// Diagonalizes the two-excitation sector and classifies each state.
pub fn build_and_diag_2ex(h: &HamiltonianModel, margin: ClassificationMargin) -> Result<TwoExcitationResult> {
    h.validate()?;
    let (h2, ps) = two_excitation_matrix(h)?;
    let one = build_and_diag_1ex(h, margin)?;
    let eig = linalg::eigh(h2)?;
    let n = h.lattice.n_sites;
    let nq = h.qubits.len();
    let (lo, hi) = one.band_edges;
    let mg = one.margin;
    let discrete1: Vec<f64> =
        (0..one.len()).filter(|&i| one.classes[i] != StateClass::Band).map(|i| one.eigenvalues[i]).collect();
    let mut populations = Vec::with_capacity(eig.values.len());
    let mut classes = Vec::with_capacity(eig.values.len());
    for (k, &e) in eig.values.iter().enumerate() {
        let v: Vec<f64> = eig.vectors.column(k).iter().copied().collect();
        populations.push(populations_of(&v, &ps, n, nq));
        let within = |a: f64, b: f64| e >= a - mg && e <= b + mg;
        let class = if within(2.0 * lo, 2.0 * hi) {
            TwoExClass::Band
        } else if let Some(i) = discrete1.iter().position(|&d| within(d + lo, d + hi)) {
            TwoExClass::Sideband(i)
        } else {
            TwoExClass::Discrete
        };
        classes.push(class);
    }
    Ok(TwoExcitationResult {
        modes: h.dim(),
        n_sites: n,
        pairs: ps,
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
        populations,
        classes,
        one_ex_discrete: discrete1,
    })
}

/// Dressed anharmonicity of the topmost bound state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Anharmonicity {
    /// `E2 - 2 E1` (GHz).
    pub beta_dress: f64,
    /// Highest single-excitation level (GHz).
    pub e1: f64,
    /// Highest two-excitation level (GHz).
    pub e2: f64,
    /// Emitter weight of the single-excitation level.
    pub atomic_weight: f64,
}

/// `E2 - 2 E1` from the highest discrete levels of both sectors.
///
/// The single-excitation level must be discrete and dominated by `qubit`;
/// the two-excitation level must lie above every sideband.
pub fn dressed_anharmonicity(h: &HamiltonianModel, qubit: usize) -> Result<Anharmonicity> {
    h.validate()?;
    if qubit >= h.qubits.len() {
        return Err(Error::invalid("qubit", format!("no emitter {qubit}")));
    }
    let margin = ClassificationMargin::default();
    let one = build_and_diag_1ex(h, margin)?;
    let top = one.len() - 1;
    if one.classes[top] != StateClass::Above {
        return Err(Error::NotFound("no single-excitation level above the band".into()));
    }
    let weights: Vec<f64> = (0..h.qubits.len()).map(|q| one.atomic_weight(top, q)).collect();
    let dominant = weights.iter().enumerate().fold((0, -1.0), |b, (i, &w)| if w > b.1 { (i, w) } else { b }).0;
    if dominant != qubit {
        return Err(Error::NotFound(format!("highest level belongs to emitter {dominant}")));
    }
    let two = build_and_diag_2ex(h, margin)?;
    let t2 = two.eigenvalues.len() - 1;
    if two.classes[t2] != TwoExClass::Discrete {
        return Err(Error::NotFound("highest two-excitation level is not discrete".into()));
    }
    let e1 = one.eigenvalues[top];
    let e2 = two.eigenvalues[t2];
    Ok(Anharmonicity { beta_dress: e2 - 2.0 * e1, e1, e2, atomic_weight: one.emitter_weight(top) })
}
