//! Bare finite resonator chain: normal modes, linewidths, and the
//! continuous-circuit dispersion relation.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::circuit::CircuitParams;
use crate::error::{Error, Result};
use crate::linalg;

/// Speed of light (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Tight-binding description of the chain. Frequencies in GHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeParams {
    #[serde(rename = "N")]
    pub n_sites: usize,
    /// Band centre.
    #[serde(rename = "omega_r_GHz")]
    pub omega_r: f64,
    #[serde(rename = "J_GHz")]
    pub j: f64,
    #[serde(rename = "J2_GHz", default)]
    pub j2: f64,
    #[serde(rename = "kappa_edge_GHz", default)]
    pub kappa_edge: f64,
    #[serde(rename = "kappa_nr_GHz", default)]
    pub kappa_nr: f64,
    #[serde(rename = "disorder_sigma_GHz", default)]
    pub disorder_sigma: f64,
    #[serde(rename = "d_um", default = "default_d")]
    pub lattice_constant: f64,
}

fn default_d() -> f64 {
    200.0
}

impl Default for LatticeParams {
    fn default() -> Self {
        LatticeParams {
            n_sites: 21,
            omega_r: 5.717,
            j: 0.249,
            j2: 0.0,
            kappa_edge: 0.0,
            kappa_nr: 0.0,
            disorder_sigma: 0.0,
            lattice_constant: 200.0,
        }
    }
}

impl LatticeParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 1 {
            return Err(Error::invalid("N", "must be at least 1"));
        }
        if !(self.j.is_finite() && self.j > 0.0) {
            return Err(Error::invalid("J_GHz", format!("must be positive, got {}", self.j)));
        }
        for (name, v) in [
            ("kappa_edge_GHz", self.kappa_edge),
            ("kappa_nr_GHz", self.kappa_nr),
            ("disorder_sigma_GHz", self.disorder_sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, format!("must be non-negative, got {v}")));
            }
        }
        if !self.omega_r.is_finite() || !self.j2.is_finite() {
            return Err(Error::invalid("omega_r_GHz", "must be finite"));
        }
        Ok(())
    }

    /// On-site frequency. With next-nearest hopping the sites are shifted
    /// down by `2 J2` so that `omega_r` remains the centre of the band.
    pub fn site_energy(&self, next_nearest: bool) -> f64 {
        if next_nearest {
            self.omega_r - 2.0 * self.j2
        } else {
            self.omega_r
        }
    }

    /// Infinite-chain band edges `(lower, upper)` in GHz.
    pub fn band_edges(&self, next_nearest: bool) -> (f64, f64) {
        let j2 = if next_nearest { self.j2 } else { 0.0 };
        let e0 = self.site_energy(next_nearest);
        let disp = |c: f64| e0 + 2.0 * self.j * c + 2.0 * j2 * (2.0 * c * c - 1.0);
        let mut lo = disp(1.0).min(disp(-1.0));
        let mut hi = disp(1.0).max(disp(-1.0));
        if j2 != 0.0 {
            let c = -self.j / (4.0 * j2);
            if c.abs() <= 1.0 {
                lo = lo.min(disp(c));
                hi = hi.max(disp(c));
            }
        }
        (lo, hi)
    }
}

/// One normal mode of the bare chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mode {
    pub m: usize,
    /// Quasi-momentum `mπ/(N+1)` (rad).
    pub k: f64,
    /// Frequency (GHz).
    pub omega: f64,
    /// Linewidth (GHz).
    pub kappa: f64,
    /// Site amplitudes, first site non-negative.
    pub amplitudes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSet {
    pub modes: Vec<Mode>,
}

/// Which radiative-linewidth law to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinewidthConvention {
    /// `(2κ/(N+1)) sin²k`: the squared edge amplitude, narrow at both edges.
    #[default]
    EdgeAmplitude,
    /// `(2κ/(N+1)) sin²(k/2)`, the literal published form.
    HalfAngle,
}

/// Quasi-momentum of mode `m` (1-based).
pub fn quasi_momentum(m: usize, n: usize) -> f64 {
    m as f64 * PI / (n as f64 + 1.0)
}

/// Closed-form normal-mode amplitude at site `x` (1-based).
pub fn mode_amplitude(m: usize, x: usize, n: usize) -> f64 {
    (2.0 / (n as f64 + 1.0)).sqrt() * (quasi_momentum(m, n) * x as f64).sin()
}

/// Bare chain Hamiltonian (dense, GHz).
pub fn chain_matrix(p: &LatticeParams, next_nearest: bool) -> nalgebra::DMatrix<f64> {
    let n = p.n_sites;
    let e0 = p.site_energy(next_nearest);
    let mut h = nalgebra::DMatrix::zeros(n, n);
    for x in 0..n {
        h[(x, x)] = e0;
        if x + 1 < n {
            h[(x, x + 1)] = p.j;
            h[(x + 1, x)] = p.j;
        }
        if next_nearest && x + 2 < n {
            h[(x, x + 2)] = p.j2;
            h[(x + 2, x)] = p.j2;
        }
    }
    h
}

/// Mode frequencies and profiles, descending in frequency (`m = 1` at the top).
///
/// Closed form without next-nearest hopping; otherwise the chain matrix is
/// diagonalized.
pub fn mode_frequencies(p: &LatticeParams) -> Result<ModeSet> {
    p.validate()?;
    let n = p.n_sites;
    let mut modes: Vec<Mode> = if p.j2 == 0.0 {
        (1..=n)
            .map(|m| {
                let k = quasi_momentum(m, n);
                Mode {
                    m,
                    k,
                    omega: p.omega_r + 2.0 * p.j * k.cos(),
                    kappa: 0.0,
                    amplitudes: (1..=n).map(|x| mode_amplitude(m, x, n)).collect(),
                }
            })
            .collect()
    } else {
        let eig = linalg::eigh(chain_matrix(p, true))?;
        (0..n)
            .map(|i| {
                let col = n - 1 - i;
                let mut a: Vec<f64> = eig.vectors.column(col).iter().copied().collect();
                let pivot = a.iter().copied().find(|v| v.abs() > 1e-12).unwrap_or(1.0);
                if pivot < 0.0 {
                    a.iter_mut().for_each(|v| *v = -*v);
                }
                Mode { m: i + 1, k: quasi_momentum(i + 1, n), omega: eig.values[col], kappa: 0.0, amplitudes: a }
            })
            .collect()
    };
    let widths = linewidths_for(p, &modes, LinewidthConvention::EdgeAmplitude);
    for (mode, w) in modes.iter_mut().zip(widths) {
        mode.kappa = w;
    }
    Ok(ModeSet { modes })
}

fn linewidths_for(p: &LatticeParams, modes: &[Mode], conv: LinewidthConvention) -> Vec<f64> {
    let n = p.n_sites;
    if n == 1 {
        return vec![2.0 * p.kappa_edge + p.kappa_nr];
    }
    let pref = 2.0 * p.kappa_edge / (n as f64 + 1.0);
    modes
        .iter()
        .map(|mode| {
            let radiative = match conv {
                LinewidthConvention::EdgeAmplitude if p.j2 == 0.0 => pref * mode.k.sin().powi(2),
                LinewidthConvention::EdgeAmplitude => p.kappa_edge * mode.amplitudes[0].powi(2),
                LinewidthConvention::HalfAngle => pref * (0.5 * mode.k).sin().powi(2),
            };
            radiative + p.kappa_nr
        })
        .collect()
}

/// Per-mode linewidths (GHz), in the same order as [`mode_frequencies`].
pub fn mode_linewidths(p: &LatticeParams, conv: LinewidthConvention) -> Result<Vec<f64>> {
    let set = mode_frequencies(p)?;
    Ok(linewidths_for(p, &set.modes, conv))
}

/// Propagation data of the continuous circuit at one frequency.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionPoint {
    pub omega_ghz: f64,
    pub cos_kd: f64,
    /// Real part of `k d` (rad).
    pub kd: f64,
    /// Imaginary part of `k d`; non-zero only outside the band.
    pub kd_imag: f64,
    pub propagating: bool,
    /// Group velocity (m/s); zero outside the band.
    pub group_velocity: f64,
    /// `c / v_g`; infinite at the edges and outside the band.
    pub group_index: f64,
    /// Characteristic impedance (Ω); `None` above the shunt resonance.
    pub impedance: Option<f64>,
}

/// Dispersion, group velocity and impedance of the resonator chain at `omega_ghz`.
pub fn dispersion_circuit(c: &CircuitParams, omega_ghz: f64) -> Result<DispersionPoint> {
    c.validate()?;
    if !(omega_ghz.is_finite() && omega_ghz > 0.0) {
        return Err(Error::invalid("omega_GHz", "must be positive"));
    }
    let l = c.l_r * 1e-9;
    let c_r = c.c_r * 1e-15;
    let c_j = c.c_j * 1e-15;
    let c_bar = c.loaded_capacitance();
    let w = 2.0 * PI * omega_ghz * 1e9;
    let w0_sq = 1.0 / (l * c_r);
    let cos_kd = 1.0 + c_r / (2.0 * c_j) * (1.0 - w0_sq / (w * w));

    let w_r = 1.0 / (l * c_bar).sqrt();
    let z_r = (l / c_bar).sqrt();
    let d = c.lattice_constant * 1e-6;

    let (kd, kd_imag, propagating) = if cos_kd.abs() <= 1.0 {
        (cos_kd.acos(), 0.0, true)
    } else if cos_kd > 1.0 {
        (0.0, cos_kd.acosh(), false)
    } else {
        (PI, (-cos_kd).acosh(), false)
    };
    let group_velocity = if propagating { c_j * z_r * w_r * w_r * d * kd.sin().abs() } else { 0.0 };
    let group_index = if group_velocity > 0.0 { SPEED_OF_LIGHT / group_velocity } else { f64::INFINITY };
    let ratio = w * w / w0_sq;
    let impedance = (ratio < 1.0).then(|| (l / c_j).sqrt() / (1.0 - ratio).sqrt());
    Ok(DispersionPoint { omega_ghz, cos_kd, kd, kd_imag, propagating, group_velocity, group_index, impedance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{derive_lattice_params, measured_device};
    use approx::assert_relative_eq;

    fn chain(n: usize) -> LatticeParams {
        LatticeParams { n_sites: n, kappa_edge: 0.012, ..Default::default() }
    }

    #[test]
    fn outer_modes_of_measured_chain() {
        let set = mode_frequencies(&chain(21)).unwrap();
        assert!((set.modes[0].omega - 6.210).abs() < 1e-3);
        assert!((set.modes[20].omega - 5.224).abs() < 1e-3);
        assert_relative_eq!(set.modes[10].omega, 5.717, epsilon = 1e-12);
        let spread = set.modes[0].omega - set.modes[20].omega;
        assert_relative_eq!(spread, 4.0 * 0.249 * (PI / 22.0).cos(), epsilon = 1e-12);
    }

    #[test]
    fn amplitudes_orthonormal() {
        for n in [1, 2, 7, 21, 60] {
            let set = mode_frequencies(&chain(n)).unwrap();
            for a in &set.modes {
                for b in &set.modes {
                    let dot: f64 = a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| x * y).sum();
                    let expect = if a.m == b.m { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn closed_form_matches_diagonalization() {
        for n in [5, 21, 301, 2001] {
            let p = chain(n);
            let set = mode_frequencies(&p).unwrap();
            let eig = linalg::tridiagonal_eigenvalues(&vec![p.omega_r; n], &vec![p.j; n - 1]);
            for (i, mode) in set.modes.iter().enumerate() {
                assert!((mode.omega - eig[n - 1 - i]).abs() < 1e-10, "n={n} m={}", mode.m);
            }
        }
    }

    #[test]
    fn centre_mode_has_nodes_on_even_sites() {
        let set = mode_frequencies(&chain(21)).unwrap();
        let centre = &set.modes[10];
        assert_eq!(centre.m, 11);
        for x in (2..=21).step_by(2) {
            assert!(centre.amplitudes[x - 1].abs() < 1e-14);
        }
    }

    #[test]
    fn linewidths_vanish_at_edges_and_are_symmetric() {
        let p = chain(21);
        let w = mode_linewidths(&p, LinewidthConvention::EdgeAmplitude).unwrap();
        assert_relative_eq!(w[10], 2.0 * 0.012 / 22.0, epsilon = 1e-15);
        assert!(w[0] < 0.03 * w[10] && w[20] < 0.03 * w[10]);
        for m in 0..21 {
            assert_relative_eq!(w[m], w[20 - m], epsilon = 1e-15);
        }
        let printed = mode_linewidths(&p, LinewidthConvention::HalfAngle).unwrap();
        assert!(printed[20] > printed[0]);
    }

    #[test]
    fn zero_edge_coupling_leaves_internal_loss() {
        let p = LatticeParams { kappa_nr: 3e-4, ..chain(9) };
        let p = LatticeParams { kappa_edge: 0.0, ..p };
        for w in mode_linewidths(&p, LinewidthConvention::EdgeAmplitude).unwrap() {
            assert_eq!(w, 3e-4);
        }
    }

    #[test]
    fn single_cavity_counts_both_ports() {
        let p = LatticeParams { kappa_nr: 1e-4, ..chain(1) };
        let set = mode_frequencies(&p).unwrap();
        assert_eq!(set.modes.len(), 1);
        assert_relative_eq!(set.modes[0].kappa, 0.024 + 1e-4);
    }

    #[test]
    fn next_nearest_modes_stay_in_band() {
        let p = LatticeParams { j2: 0.038, ..chain(21) };
        let set = mode_frequencies(&p).unwrap();
        let bound = 2.0 * (p.j + p.j2.abs());
        for mode in &set.modes {
            assert!((mode.omega - p.omega_r).abs() <= bound);
        }
        assert!(set.modes.windows(2).all(|w| w[0].omega >= w[1].omega));
        let (lo, hi) = p.band_edges(true);
        assert_relative_eq!(0.5 * (lo + hi), p.omega_r, epsilon = 1e-12);
    }

    #[test]
    fn dispersion_at_band_centre() {
        let c = measured_device();
        let d = derive_lattice_params(&c).unwrap();
        let pt = dispersion_circuit(&c, d.omega_r_ghz).unwrap();
        assert!(pt.cos_kd.abs() < 1e-12);
        assert_relative_eq!(pt.kd, PI / 2.0, epsilon = 1e-12);
        let expect = c.c_j * 1e-15 * d.z_r_ohm * (2.0 * PI * d.omega_r_ghz * 1e9).powi(2) * 200e-6;
        assert_relative_eq!(pt.group_velocity, expect, max_relative = 1e-12);
        // Equals twice the angular hopping times the lattice constant.
        assert_relative_eq!(pt.group_velocity, 2.0 * 2.0 * PI * d.j_ghz * 1e9 * 200e-6, max_relative = 1e-12);
        assert!(pt.group_index > 470.0 && pt.group_index < 490.0, "{}", pt.group_index);
    }

    #[test]
    fn dispersion_edges_and_evanescence() {
        let c = measured_device();
        let d = derive_lattice_params(&c).unwrap();
        let near = dispersion_circuit(&c, d.omega_r_bare_ghz * (1.0 - 1e-9)).unwrap();
        assert!(near.propagating);
        assert!(near.group_index > 1e5);
        let outside = dispersion_circuit(&c, d.omega_r_bare_ghz * 1.05).unwrap();
        assert!(!outside.propagating && outside.kd_imag > 0.0);
        assert!(outside.impedance.is_none());
        let a = dispersion_circuit(&c, d.omega_r_bare_ghz * 0.999).unwrap();
        let b = dispersion_circuit(&c, d.omega_r_bare_ghz * 0.99999).unwrap();
        assert!(b.impedance.unwrap() > 5.0 * a.impedance.unwrap());
    }
}
