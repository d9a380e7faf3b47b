//! Splitting of two resonant bound states with and without the
//! next-nearest couplings. Emitter 2 is retuned onto emitter 1 at each point.

use cca_sim::scenario::{ScenarioConfig, ScenarioKind};
use cca_sim::spectra::resonant_splitting;

fn main() -> cca_sim::Result<()> {
    let cfg = ScenarioConfig::preset(ScenarioKind::Splitting)?;
    let base = cfg.model();
    println!("{:>7} {:>9} {:>9} {:>9}", "omega_1", "mid", "U_ext", "U_nn");
    for i in 0..8 {
        let w = 6.1 + 0.08 * i as f64;
        let mut h = base.clone();
        h.qubits[0].omega_q = w;
        let ext = resonant_splitting(&h.clone().with_next_nearest(true), 1, 0.4)?;
        let nn = resonant_splitting(&h.with_next_nearest(false), 1, 0.4)?;
        println!("{w:>7.3} {:>9.4} {:>9.2} {:>9.2}", ext.omega_mid, 1e3 * ext.u, 1e3 * nn.u);
    }
    println!("(U in MHz)");
    Ok(())
}
