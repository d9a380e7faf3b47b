//! Lumped-element circuit of the resonator chain and its two transmons.
//!
//! Converts capacitances and inductances into tight-binding parameters and
//! handles the linear flux-line calibration.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lattice::LatticeParams;
use crate::spectra::QubitParams;

/// Elementary charge (C).
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Magnetic flux quantum h/2e (Wb).
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * E_CHARGE);

const FF: f64 = 1e-15;
const NH: f64 = 1e-9;
const GHZ: f64 = 1e9;

/// Coupling-to-shunt capacitance ratio above which the small-coupling
/// reduction of the inverse capacitance matrix is questionable.
pub const SMALL_COUPLING_RATIO: f64 = 0.2;

/// How the qubit's next-site inverse capacitance is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParasiticModel {
    /// Direct parasitic capacitance only: `C_g2 / (C̄_r C_q)`.
    #[default]
    DirectOnly,
    /// Adds the second-order path through the neighbouring coupling
    /// capacitor: `C_g C_J / (C̄_q C̄_r²)`.
    SecondOrder,
    /// Adds `C_r C_J / (C̄_q C̄_r²)`, the literal published form, which does
    /// not depend on the qubit coupling capacitance at all.
    AsPrinted,
}

/// One transmon and its capacitive couplings to the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitCircuit {
    #[serde(rename = "C_g_fF")]
    pub c_g: f64,
    #[serde(rename = "C_g2_fF", default)]
    pub c_g2: f64,
    #[serde(rename = "C_q_fF")]
    pub c_q: f64,
    #[serde(rename = "E_J_max_GHz")]
    pub e_j_max: f64,
    pub site: usize,
    /// Charge matrix element override (C). The harmonic estimate is used
    /// when absent.
    #[serde(rename = "dipole_C", default, skip_serializing_if = "Option::is_none")]
    pub dipole: Option<f64>,
}

/// Lumped-element description of the chip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    #[serde(rename = "C_r_fF")]
    pub c_r: f64,
    #[serde(rename = "L_r_nH")]
    pub l_r: f64,
    #[serde(rename = "C_J_fF")]
    pub c_j: f64,
    #[serde(rename = "C_J2_fF", default)]
    pub c_j2: f64,
    pub n_junctions: u32,
    #[serde(rename = "N")]
    pub n_sites: usize,
    #[serde(rename = "d_um", default = "default_lattice_constant")]
    pub lattice_constant: f64,
    #[serde(default)]
    pub qubits: Vec<QubitCircuit>,
    #[serde(default)]
    pub parasitic: ParasiticModel,
}

fn default_lattice_constant() -> f64 {
    200.0
}

/// Derived chain parameters, both loaded and bare.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedLattice {
    pub omega_r_bare_ghz: f64,
    pub omega_r_ghz: f64,
    pub z_r_bare_ohm: f64,
    pub z_r_ohm: f64,
    pub j_ghz: f64,
    pub j2_ghz: f64,
    pub kerr_resonator_ghz: f64,
    pub kerr_mode_ghz: f64,
    pub warnings: Vec<String>,
}

impl DerivedLattice {
    /// Tight-binding parameters centred on the loaded frequency.
    pub fn lattice(&self, n_sites: usize, lattice_constant_um: f64) -> LatticeParams {
        LatticeParams {
            n_sites,
            omega_r: self.omega_r_ghz,
            j: self.j_ghz,
            j2: self.j2_ghz,
            lattice_constant: lattice_constant_um,
            ..LatticeParams::default()
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be strictly positive, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be non-negative, got {v}")))
    }
}

impl CircuitParams {
    /// Loaded resonator capacitance `C_r + 2 C_J` (F).
    pub fn loaded_capacitance(&self) -> f64 {
        (self.c_r + 2.0 * self.c_j) * FF
    }

    /// Checks the element values; returns soft warnings for large ratios.
    pub fn validate(&self) -> Result<Vec<String>> {
        positive("C_r_fF", self.c_r)?;
        positive("L_r_nH", self.l_r)?;
        positive("C_J_fF", self.c_j)?;
        non_negative("C_J2_fF", self.c_j2)?;
        positive("d_um", self.lattice_constant)?;
        if self.n_junctions == 0 {
            return Err(Error::invalid("n_junctions", "must be at least 1"));
        }
        if self.n_sites == 0 {
            return Err(Error::invalid("N", "must be at least 1"));
        }
        let mut warnings = Vec::new();
        let mut ratios = vec![("C_J_fF".to_string(), self.c_j), ("C_J2_fF".to_string(), self.c_j2)];
        let mut sites = Vec::new();
        for (i, q) in self.qubits.iter().enumerate() {
            positive(&format!("qubits[{i}].C_g_fF"), q.c_g)?;
            non_negative(&format!("qubits[{i}].C_g2_fF"), q.c_g2)?;
            positive(&format!("qubits[{i}].C_q_fF"), q.c_q)?;
            positive(&format!("qubits[{i}].E_J_max_GHz"), q.e_j_max)?;
            if q.site < 1 || q.site > self.n_sites {
                return Err(Error::invalid(
                    format!("qubits[{i}].site"),
                    format!("must lie in 1..={}, got {}", self.n_sites, q.site),
                ));
            }
            if sites.contains(&q.site) {
                return Err(Error::invalid(
                    format!("qubits[{i}].site"),
                    format!("site {} already hosts a qubit", q.site),
                ));
            }
            sites.push(q.site);
            ratios.push((format!("qubits[{i}].C_g_fF"), q.c_g));
            ratios.push((format!("qubits[{i}].C_g2_fF"), q.c_g2));
        }
        for (name, c) in ratios {
            if c / self.c_r >= SMALL_COUPLING_RATIO {
                let w = format!(
                    "{name}/C_r = {:.3} exceeds {SMALL_COUPLING_RATIO}; small-coupling reduction may be inaccurate",
                    c / self.c_r
                );
                log::warn!("{w}");
                warnings.push(w);
            }
        }
        Ok(warnings)
    }
}

/// Nearest-neighbour hopping (GHz) produced by a coupling capacitance.
///
/// `omega_ghz` and `z_ohm` are the ordinary frequency and impedance of the
/// resonators being coupled.
pub fn hopping_from_capacitance(c_j_ff: f64, omega_ghz: f64, z_ohm: f64) -> f64 {
    let w = 2.0 * PI * omega_ghz * GHZ;
    0.5 * c_j_ff * FF * w * w * z_ohm / (2.0 * PI) / GHZ
}

/// Coupling capacitance (fF) that yields hopping `j_ghz`.
pub fn capacitance_for_hopping(j_ghz: f64, omega_ghz: f64, z_ohm: f64) -> f64 {
    let w = 2.0 * PI * omega_ghz * GHZ;
    2.0 * (2.0 * PI * j_ghz * GHZ) / (w * w * z_ohm) / FF
}

/// Derives resonator frequency, impedance, hoppings and Kerr coefficients.
pub fn derive_lattice_params(c: &CircuitParams) -> Result<DerivedLattice> {
    let warnings = c.validate()?;
    let l = c.l_r * NH;
    let c_bare = c.c_r * FF;
    let c_loaded = c.loaded_capacitance();
    let omega_bare = 1.0 / (2.0 * PI * (l * c_bare).sqrt()) / GHZ;
    let omega = 1.0 / (2.0 * PI * (l * c_loaded).sqrt()) / GHZ;
    let z_bare = (l / c_bare).sqrt();
    let z = (l / c_loaded).sqrt();
    let j = hopping_from_capacitance(c.c_j, omega, z);
    let j2 = hopping_from_capacitance(c.c_j2, omega, z);
    let n = c.n_junctions as f64;
    let kerr_r = E_CHARGE * E_CHARGE / (2.0 * n * n * c_bare) / PLANCK / GHZ;
    Ok(DerivedLattice {
        omega_r_bare_ghz: omega_bare,
        omega_r_ghz: omega,
        z_r_bare_ohm: z_bare,
        z_r_ohm: z,
        j_ghz: j,
        j2_ghz: j2,
        kerr_resonator_ghz: kerr_r,
        kerr_mode_ghz: kerr_r / c.n_sites as f64,
        warnings,
    })
}

/// Symmetric-SQUID transmon frequency versus flux.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmonDispersion {
    /// Frequency at integer flux (GHz).
    #[serde(rename = "omega_max_GHz")]
    pub omega_max: f64,
    /// Charging energy `E_C/h` (GHz), equal to `|β|`.
    #[serde(rename = "E_C_GHz")]
    pub charging: f64,
}

impl TransmonDispersion {
    /// Frequency (GHz) at `flux` in units of the flux quantum.
    pub fn frequency(&self, flux: f64) -> f64 {
        (self.omega_max + self.charging) * (PI * flux).cos().abs().sqrt() - self.charging
    }

    /// Smallest non-negative flux (in flux quanta) that reaches `omega_ghz`.
    pub fn flux_for(&self, omega_ghz: f64) -> Result<f64> {
        let top = self.omega_max + self.charging;
        let r = (omega_ghz + self.charging) / top;
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Domain(format!(
                "{omega_ghz} GHz is outside the tuning range [-{}, {}] GHz",
                self.charging, self.omega_max
            )));
        }
        Ok((r * r).acos() / PI)
    }
}

fn qubit_charges(c: &CircuitParams, idx: usize) -> Result<&QubitCircuit> {
    c.qubits.get(idx).ok_or_else(|| Error::invalid("qubit_index", format!("no qubit {idx} in circuit")))
}

/// Charging energy `E_C/h` (GHz) of a qubit with loaded capacitance `c_bar_q_ff`.
pub fn charging_energy(c_bar_q_ff: f64) -> f64 {
    E_CHARGE * E_CHARGE / (2.0 * c_bar_q_ff * FF) / PLANCK / GHZ
}

/// Transmon dispersion of qubit `idx`.
pub fn qubit_dispersion(c: &CircuitParams, idx: usize) -> Result<TransmonDispersion> {
    let q = qubit_charges(c, idx)?;
    let ec = charging_energy(q.c_q + q.c_g);
    Ok(TransmonDispersion { omega_max: (8.0 * q.e_j_max * ec).sqrt() - ec, charging: ec })
}

/// Harmonic charge matrix element `√(ħ C̄_q ω/2)` (C).
pub fn harmonic_dipole(c_bar_q_ff: f64, omega_ghz: f64) -> f64 {
    (HBAR * c_bar_q_ff * FF * 2.0 * PI * omega_ghz.max(0.0) * GHZ / 2.0).sqrt()
}

/// Coupling (GHz) between a charge matrix element `dipole` and a resonator
/// through the inverse capacitance `inv_c` (1/F).
fn coupling_from_dipole(dipole: f64, inv_c: f64, c_bar_r: f64, omega_r_ghz: f64) -> f64 {
    let vzpf = (HBAR * c_bar_r * 2.0 * PI * omega_r_ghz * GHZ / 2.0).sqrt();
    dipole * vzpf * inv_c / HBAR / (2.0 * PI) / GHZ
}

/// Inverse coupling capacitance `C_g/(C̄_q C̄_r)` (1/F) of qubit `idx`.
fn direct_inverse_capacitance(c: &CircuitParams, q: &QubitCircuit) -> f64 {
    let c_bar_q = (q.c_q + q.c_g) * FF;
    q.c_g * FF / (c_bar_q * c.loaded_capacitance())
}

/// Next-site inverse capacitance (1/F) of qubit `idx` under `model`.
fn parasitic_inverse_capacitance(c: &CircuitParams, q: &QubitCircuit, model: ParasiticModel) -> f64 {
    let c_bar_q = (q.c_q + q.c_g) * FF;
    let c_bar_r = c.loaded_capacitance();
    let direct = q.c_g2 * FF / (c_bar_r * q.c_q * FF);
    match model {
        ParasiticModel::DirectOnly => direct,
        ParasiticModel::SecondOrder => direct + q.c_g * FF * c.c_j * FF / (c_bar_q * c_bar_r * c_bar_r),
        ParasiticModel::AsPrinted => direct + c.c_r * FF * c.c_j * FF / (c_bar_q * c_bar_r * c_bar_r),
    }
}

/// Ratio `g2/g` implied by the capacitances of qubit `idx`.
pub fn parasitic_ratio(c: &CircuitParams, idx: usize) -> Result<f64> {
    let q = qubit_charges(c, idx)?;
    Ok(parasitic_inverse_capacitance(c, q, c.parasitic) / direct_inverse_capacitance(c, q))
}

/// Qubit Hamiltonian parameters at `flux` (flux quanta).
pub fn derive_qubit_params(c: &CircuitParams, flux: f64, idx: usize) -> Result<QubitParams> {
    if !flux.is_finite() {
        return Err(Error::invalid("flux", "must be finite"));
    }
    c.validate()?;
    let lat = derive_lattice_params(c)?;
    let q = qubit_charges(c, idx)?;
    let disp = qubit_dispersion(c, idx)?;
    let omega_q = disp.frequency(flux);
    let dipole = q.dipole.unwrap_or_else(|| harmonic_dipole(q.c_q + q.c_g, omega_q));
    let c_bar_r = c.loaded_capacitance();
    let g = coupling_from_dipole(dipole, direct_inverse_capacitance(c, q), c_bar_r, lat.omega_r_ghz);
    let g2 = coupling_from_dipole(dipole, parasitic_inverse_capacitance(c, q, c.parasitic), c_bar_r, lat.omega_r_ghz);
    Ok(QubitParams { omega_q, beta: -disp.charging, g, g2, site: q.site })
}

/// Charge matrix element (C) that produces coupling `g_ghz` for qubit `idx`.
pub fn dipole_for_coupling(c: &CircuitParams, idx: usize, g_ghz: f64) -> Result<f64> {
    let lat = derive_lattice_params(c)?;
    let q = qubit_charges(c, idx)?;
    let unit = coupling_from_dipole(1.0, direct_inverse_capacitance(c, q), c.loaded_capacitance(), lat.omega_r_ghz);
    Ok(g_ghz / unit)
}

/// Reconstructs a qubit's capacitances from its anharmonicity, coupling and
/// maximum frequency, given the chain's loaded capacitance and frequency.
///
/// `C̄_q` follows from `|β| = E_C/h`, then `C_g` from the harmonic coupling
/// relation (linear in `C_g`), and `E_J` from the maximum frequency.
pub fn qubit_from_targets(
    beta_ghz: f64,
    g_ghz: f64,
    omega_max_ghz: f64,
    c_bar_r_ff: f64,
    omega_r_ghz: f64,
    site: usize,
    c_g2_ff: f64,
) -> Result<QubitCircuit> {
    positive("beta (magnitude)", beta_ghz.abs())?;
    positive("g_GHz", g_ghz)?;
    positive("omega_max_GHz", omega_max_ghz)?;
    let ec = beta_ghz.abs();
    let c_bar_q_ff = E_CHARGE * E_CHARGE / (2.0 * ec * GHZ * PLANCK) / FF;
    let dipole = harmonic_dipole(c_bar_q_ff, omega_max_ghz);
    let per_inv_c = coupling_from_dipole(dipole, 1.0, c_bar_r_ff * FF, omega_r_ghz);
    let inv_c = g_ghz / per_inv_c;
    let c_g_ff = inv_c * c_bar_q_ff * FF * c_bar_r_ff * FF / FF;
    if c_g_ff >= c_bar_q_ff {
        return Err(Error::invalid("g_GHz", "coupling too large for the charging energy"));
    }
    let e_j = (omega_max_ghz + ec).powi(2) / (8.0 * ec);
    Ok(QubitCircuit { c_g: c_g_ff, c_g2: c_g2_ff, c_q: c_bar_q_ff - c_g_ff, e_j_max: e_j, site, dipole: None })
}

/// Linear map from flux-line voltages to SQUID fluxes, `Φ = L V + Φ_off`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxCalibration {
    /// Flux quanta per volt.
    pub matrix: [[f64; 2]; 2],
    /// Offsets in flux quanta.
    pub offset: [f64; 2],
}

impl FluxCalibration {
    /// Cross-talk ratios and offsets reported for the measured device, with
    /// unit diagonal.
    pub fn measured_device() -> Self {
        FluxCalibration { matrix: [[1.0, 0.041], [0.063, 1.0]], offset: [0.091, 0.084] }
    }

    fn det(&self) -> f64 {
        let m = &self.matrix;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Fluxes produced by `voltages`.
    pub fn forward(&self, voltages: [f64; 2]) -> [f64; 2] {
        let m = &self.matrix;
        [
            m[0][0] * voltages[0] + m[0][1] * voltages[1] + self.offset[0],
            m[1][0] * voltages[0] + m[1][1] * voltages[1] + self.offset[1],
        ]
    }
}

/// Voltages that produce `target_flux`.
pub fn flux_compensation(cal: &FluxCalibration, target_flux: [f64; 2]) -> Result<[f64; 2]> {
    let m = &cal.matrix;
    let scale = m.iter().flatten().map(|v| v * v).sum::<f64>();
    let det = cal.det();
    if !det.is_finite() || det.abs() <= 1e-12 * scale {
        return Err(Error::Calibration(format!("inductance matrix is singular (det = {det:e})")));
    }
    let b = [target_flux[0] - cal.offset[0], target_flux[1] - cal.offset[1]];
    Ok([(m[1][1] * b[0] - m[0][1] * b[1]) / det, (m[0][0] * b[1] - m[1][0] * b[0]) / det])
}

/// Circuit estimate for the measured chip: nominal resonator elements,
/// coupling capacitance matched to the reported hopping at the loaded
/// resonator frequency and impedance, simulated parasitic
/// capacitances, and qubit capacitances reconstructed from the reported
/// anharmonicities, couplings and maximum frequencies.
pub fn measured_device() -> CircuitParams {
    let c_r = 91.3;
    let l_r = 8.87;
    let loaded = |c_j: f64| {
        let c = (c_r + 2.0 * c_j) * FF;
        (1.0 / (2.0 * PI * (l_r * NH * c).sqrt()) / GHZ, (l_r * NH / c).sqrt())
    };
    // The hopping depends on the loading it creates; the map contracts fast.
    let mut c_j = 0.0;
    for _ in 0..100 {
        let (w, z) = loaded(c_j);
        c_j = capacitance_for_hopping(0.249, w, z);
    }
    let c_bar_r = c_r + 2.0 * c_j;
    let omega_loaded = loaded(c_j).0;
    let parasitic_g = 0.73;
    let q1 = qubit_from_targets(-0.266, 0.338, 6.322, c_bar_r, omega_loaded, 10, parasitic_g)
        .expect("reported qubit 1 values are consistent");
    let q2 = qubit_from_targets(-0.257, 0.311, 6.606, c_bar_r, omega_loaded, 12, parasitic_g)
        .expect("reported qubit 2 values are consistent");
    CircuitParams {
        c_r,
        l_r,
        c_j,
        c_j2: 0.52,
        n_junctions: 10,
        n_sites: 21,
        lattice_constant: 200.0,
        qubits: vec![q1, q2],
        parasitic: ParasiticModel::DirectOnly,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bare(c_j: f64) -> CircuitParams {
        CircuitParams {
            c_r: 91.3,
            l_r: 8.87,
            c_j,
            c_j2: 0.0,
            n_junctions: 10,
            n_sites: 21,
            lattice_constant: 200.0,
            qubits: vec![],
            parasitic: ParasiticModel::DirectOnly,
        }
    }

    #[test]
    fn bare_resonator_matches_reported_values() {
        let d = derive_lattice_params(&bare(1e-6)).unwrap();
        assert!((d.omega_r_bare_ghz / 5.593 - 1.0).abs() < 0.005);
        assert!((d.z_r_bare_ohm / 312.0 - 1.0).abs() < 0.005);
        assert!((d.kerr_resonator_ghz / 0.0021 - 1.0).abs() < 0.05);
        assert!((d.kerr_mode_ghz / 0.0001 - 1.0).abs() < 0.05);
    }

    #[test]
    fn closed_forms_hold_independently() {
        let c = bare(8.0);
        let d = derive_lattice_params(&c).unwrap();
        let cl: f64 = (91.3 + 16.0) * 1e-15;
        let w = 1.0 / (8.87e-9 * cl).sqrt();
        assert_relative_eq!(d.omega_r_ghz, w / (2.0 * PI) / 1e9, max_relative = 1e-14);
        assert_relative_eq!(d.z_r_ohm, (8.87e-9 / cl).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(d.j_ghz, 0.5 * 8e-15 * w * w * d.z_r_ohm / (2.0 * PI) / 1e9, max_relative = 1e-12);
    }

    #[test]
    fn hopping_inversion_recovers_capacitance() {
        // Bisection on the forward relation, independent of the closed-form inverse.
        let target = 0.249;
        let (mut lo, mut hi) = (0.0, 50.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hopping_from_capacitance(mid, 5.593, 312.0) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let c_j = capacitance_for_hopping(target, 5.593, 312.0);
        assert_relative_eq!(c_j, 0.5 * (lo + hi), max_relative = 1e-10);
        assert!((c_j - 8.1).abs() < 0.05);
        assert_relative_eq!(hopping_from_capacitance(c_j, 5.593, 312.0), target, max_relative = 1e-12);
    }

    #[test]
    fn rejects_non_positive_elements() {
        let mut c = bare(8.0);
        c.l_r = 0.0;
        assert!(matches!(derive_lattice_params(&c), Err(Error::InvalidParameter { .. })));
        let mut c = bare(8.0);
        c.c_r = -1.0;
        assert!(derive_lattice_params(&c).is_err());
    }

    #[test]
    fn large_coupling_warns() {
        let d = derive_lattice_params(&bare(30.0)).unwrap();
        assert_eq!(d.warnings.len(), 1);
    }

    #[test]
    fn qubit_flux_dependence() {
        let c = measured_device();
        let q0 = derive_qubit_params(&c, 0.0, 1).unwrap();
        assert_relative_eq!(q0.omega_q, 6.606, max_relative = 1e-9);
        assert_relative_eq!(q0.beta, -0.257, max_relative = 1e-9);
        let half = derive_qubit_params(&c, 0.5, 1).unwrap();
        assert_relative_eq!(half.omega_q, -0.257, max_relative = 1e-6);
        let disp = qubit_dispersion(&c, 1).unwrap();
        for phi in [0.1, 0.23, 0.4] {
            assert_relative_eq!(disp.frequency(phi), disp.frequency(-phi), max_relative = 1e-14);
            assert_relative_eq!(disp.frequency(phi), disp.frequency(phi + 1.0), max_relative = 1e-12);
            let back = disp.flux_for(disp.frequency(phi)).unwrap();
            assert_relative_eq!(back, phi, max_relative = 1e-9);
        }
    }

    #[test]
    fn reconstructed_qubits_reproduce_targets() {
        let c = measured_device();
        let q1 = derive_qubit_params(&c, 0.0, 0).unwrap();
        let q2 = derive_qubit_params(&c, 0.0, 1).unwrap();
        assert_relative_eq!(q1.g, 0.338, max_relative = 1e-9);
        assert_relative_eq!(q2.g, 0.311, max_relative = 1e-9);
        assert_relative_eq!(q1.omega_q, 6.322, max_relative = 1e-9);
        let d = derive_lattice_params(&c).unwrap();
        assert_relative_eq!(d.j_ghz, 0.249, max_relative = 1e-12);
        let r = parasitic_ratio(&c, 1).unwrap();
        assert!(r > 0.08 && r < 0.1, "ratio {r}");
    }

    #[test]
    fn dipole_round_trip() {
        let mut c = measured_device();
        let d = dipole_for_coupling(&c, 1, 0.311).unwrap();
        c.qubits[1].dipole = Some(d);
        let q = derive_qubit_params(&c, 0.3, 1).unwrap();
        assert_relative_eq!(q.g, 0.311, max_relative = 1e-6);
    }

    #[test]
    fn parasitic_models_are_ordered() {
        let mut c = measured_device();
        let direct = parasitic_ratio(&c, 1).unwrap();
        c.parasitic = ParasiticModel::SecondOrder;
        let second = parasitic_ratio(&c, 1).unwrap();
        c.parasitic = ParasiticModel::AsPrinted;
        let printed = parasitic_ratio(&c, 1).unwrap();
        assert!(direct < second && second < printed);
    }

    #[test]
    fn flux_compensation_identities() {
        let diag = FluxCalibration { matrix: [[2.0, 0.0], [0.0, 4.0]], offset: [0.0, 0.0] };
        let v = flux_compensation(&diag, [0.3, 0.2]).unwrap();
        assert_relative_eq!(v[0], 0.15);
        assert_relative_eq!(v[1], 0.05);

        let cal = FluxCalibration::measured_device();
        let target = [0.27, -0.41];
        let back = cal.forward(flux_compensation(&cal, target).unwrap());
        assert_relative_eq!(back[0], target[0], max_relative = 1e-12);
        assert_relative_eq!(back[1], target[1], max_relative = 1e-12);
    }

    #[test]
    fn singular_calibration_rejected() {
        let cal = FluxCalibration { matrix: [[1.0, 2.0], [2.0, 4.0]], offset: [0.0, 0.0] };
        assert!(matches!(flux_compensation(&cal, [0.1, 0.1]), Err(Error::Calibration(_))));
    }
}
