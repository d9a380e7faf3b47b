//! Exact diagonalization of the chain-plus-emitters Hamiltonian in the one-
//! and two-excitation sectors.

mod disorder;
mod one_ex;
mod splitting;
mod two_ex;
mod zz;

pub use disorder::{disorder_ensemble, DisorderSample, DisorderStats, Stat};
pub use one_ex::{build_and_diag_1ex, ClassificationMargin, SpectrumResult, StateClass, DENSE_LIMIT};
pub use splitting::{resonant_splitting, Splitting};
pub use two_ex::{
    build_and_diag_2ex, dressed_anharmonicity, Anharmonicity, Populations, TwoExClass, TwoExcitationResult,
    TWO_EX_LIMIT,
};
pub use zz::{zz_interaction, zz_sweep, Identification, ZzResult};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeParams;

/// Emitter parameters. Frequencies in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitParams {
    #[serde(rename = "omega_q_GHz")]
    pub omega_q: f64,
    /// Anharmonicity, non-positive.
    #[serde(rename = "beta_GHz")]
    pub beta: f64,
    #[serde(rename = "g_GHz")]
    pub g: f64,
    /// Coupling to the two sites adjacent to `site`.
    #[serde(rename = "g2_GHz", default)]
    pub g2: f64,
    /// Attachment site, 1-based.
    pub site: usize,
}

impl QubitParams {
    pub fn validate(&self, n_sites: usize) -> Result<()> {
        if !(self.beta <= 0.0) {
            return Err(Error::invalid("beta_GHz", format!("must be non-positive, got {}", self.beta)));
        }
        if self.site < 1 || self.site > n_sites {
            return Err(Error::invalid("site", format!("{} outside 1..={n_sites}", self.site)));
        }
        for (name, v) in [("omega_q_GHz", self.omega_q), ("g_GHz", self.g), ("g2_GHz", self.g2)] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        Ok(())
    }
}

/// Full system: chain, emitters and optional disorder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianModel {
    pub lattice: LatticeParams,
    pub qubits: Vec<QubitParams>,
    /// Include `J2` hopping and `g2` couplings (sites shifted by `-2 J2`).
    #[serde(default)]
    pub include_next_nearest: bool,
    /// Per-site frequency offsets (GHz); empty for a clean chain.
    #[serde(default, rename = "disorder_GHz")]
    pub disorder: Vec<f64>,
}

impl HamiltonianModel {
    pub fn new(lattice: LatticeParams, qubits: Vec<QubitParams>) -> Self {
        HamiltonianModel { lattice, qubits, include_next_nearest: false, disorder: Vec::new() }
    }

    pub fn with_next_nearest(mut self, on: bool) -> Self {
        self.include_next_nearest = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.lattice.validate()?;
        let n = self.lattice.n_sites;
        let mut sites = Vec::new();
        for q in &self.qubits {
            q.validate(n)?;
            if sites.contains(&q.site) {
                return Err(Error::invalid("site", format!("site {} hosts two emitters", q.site)));
            }
            sites.push(q.site);
        }
        if !self.disorder.is_empty() && self.disorder.len() != n {
            return Err(Error::invalid("disorder_GHz", format!("expected {n} offsets, got {}", self.disorder.len())));
        }
        Ok(())
    }

    /// Single-excitation dimension `N + n_q`.
    pub fn dim(&self) -> usize {
        self.lattice.n_sites + self.qubits.len()
    }

    /// Index of emitter `i` in the single-excitation basis.
    pub fn qubit_index(&self, i: usize) -> usize {
        self.lattice.n_sites + i
    }

    /// Band edges used for classification (GHz).
    pub fn band_edges(&self) -> (f64, f64) {
        self.lattice.band_edges(self.include_next_nearest)
    }

    /// Diagonal entries of the single-excitation Hamiltonian.
    pub fn diagonal(&self) -> Vec<f64> {
        let n = self.lattice.n_sites;
        let e0 = self.lattice.site_energy(self.include_next_nearest);
        let mut d: Vec<f64> = (0..n).map(|x| e0 + self.disorder.get(x).copied().unwrap_or(0.0)).collect();
        d.extend(self.qubits.iter().map(|q| q.omega_q));
        d
    }

    /// Off-diagonal couplings `(a, b, value)` with `a < b`.
    pub fn couplings(&self) -> Vec<(usize, usize, f64)> {
        let n = self.lattice.n_sites;
        let p = &self.lattice;
        let nnn = self.include_next_nearest;
        let mut out = Vec::new();
        for x in 0..n {
            if x + 1 < n {
                out.push((x, x + 1, p.j));
            }
            if nnn && p.j2 != 0.0 && x + 2 < n {
                out.push((x, x + 2, p.j2));
            }
        }
        for (i, q) in self.qubits.iter().enumerate() {
            let qi = n + i;
            let s = q.site - 1;
            if q.g != 0.0 {
                out.push((s, qi, q.g));
            }
            if nnn && q.g2 != 0.0 {
                if s >= 1 {
                    out.push((s - 1, qi, q.g2));
                }
                if s + 1 < n {
                    out.push((s + 1, qi, q.g2));
                }
            }
        }
        out
    }

    /// Dense single-excitation Hamiltonian (sites first, then emitters).
    pub fn one_excitation_matrix(&self) -> DMatrix<f64> {
        let m = self.dim();
        let mut h = DMatrix::zeros(m, m);
        for (i, d) in self.diagonal().into_iter().enumerate() {
            h[(i, i)] = d;
        }
        for (a, b, v) in self.couplings() {
            h[(a, b)] += v;
            h[(b, a)] += v;
        }
        h
    }

    /// Same model with every frequency shifted by `shift` GHz.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut out = self.clone();
        out.lattice.omega_r += shift;
        for q in &mut out.qubits {
            q.omega_q += shift;
        }
        out
    }
}
