//! Conditional ZZ shift between two bound states while emitter 1 is tuned.

use cca_sim::scenario::{ScenarioConfig, ScenarioKind};
use cca_sim::spectra::{zz_interaction, zz_sweep, Identification};

fn main() -> cca_sim::Result<()> {
    let cfg = ScenarioConfig::preset(ScenarioKind::Zz)?;
    let base = cfg.model().with_next_nearest(true);
    let grid: Vec<f64> = (0..15).map(|i| 6.1 + 0.025 * i as f64).collect();
    let models: Vec<_> = grid
        .iter()
        .map(|&w| {
            let mut h = base.clone();
            h.qubits[0].omega_q = w;
            h
        })
        .collect();
    let tracked = zz_sweep(&models, Identification::Adiabatic)?;
    println!("{:>7} {:>10} {:>10} {:>8}", "omega_1", "zeta_prod", "zeta_adia", "overlap");
    for ((w, h), t) in grid.iter().zip(&models).zip(&tracked) {
        let p = zz_interaction(h)?;
        let flag = if p.ambiguous { " ambiguous" } else { "" };
        println!("{w:>7.3} {:>10.3} {:>10.3} {:>8.3}{flag}", 1e3 * p.zeta, 1e3 * t.zeta, p.overlap);
    }
    println!("(zeta in MHz)");
    Ok(())
}
