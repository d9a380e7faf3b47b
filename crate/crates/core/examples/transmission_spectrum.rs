//! Transmission of the bare chain, with emitters, and with the measured
//! input-output bypass.

use cca_sim::scenario::{ScenarioConfig, ScenarioKind};
use cca_sim::transport::{apply_crosstalk, transmission_linear, CrosstalkModel};

fn db(z: num_complex::Complex64) -> f64 {
    20.0 * z.norm().log10()
}

fn main() -> cca_sim::Result<()> {
    let cfg = ScenarioConfig::preset(ScenarioKind::Transmission)?;
    let full = cfg.model();
    let mut bare = full.clone();
    bare.qubits.clear();
    let grid: Vec<f64> = (0..=300).map(|i| 5.0 + 1.5 * i as f64 / 300.0).collect();

    let t_bare = transmission_linear(&bare, &[], &grid)?;
    let t_full = transmission_linear(&full, &cfg.gamma_q(), &grid)?;
    let t_leak = apply_crosstalk(&t_full, &CrosstalkModel::measured_setup())?;
    println!("{:>7} {:>8} {:>8} {:>8}", "f", "bare", "qubits", "bypass");
    for i in (0..grid.len()).step_by(15) {
        println!("{:>7.3} {:>8.1} {:>8.1} {:>8.1}", grid[i], db(t_bare.s21[i]), db(t_full.s21[i]), db(t_leak.s21[i]));
    }
    println!("(|S21| in dB)");
    Ok(())
}
