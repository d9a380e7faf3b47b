//! Anharmonicity of the top bound state as the emitter moves away from the band.

use cca_sim::scenario::{ScenarioConfig, ScenarioKind};
use cca_sim::spectra::dressed_anharmonicity;

fn main() -> cca_sim::Result<()> {
    let cfg = ScenarioConfig::preset(ScenarioKind::Anharmonicity)?;
    // Only the emitter under study, as in the isolated measurement.
    let mut h = cfg.model();
    h.qubits.remove(0);
    let beta = h.qubits[0].beta;
    println!("bare beta {:.1} MHz", 1e3 * beta);
    println!("{:>7} {:>9} {:>10} {:>7}", "omega_q", "E1", "beta_dress", "cos2");
    for w in [6.4, 6.6, 6.8, 7.0, 7.5, 8.0, 9.0] {
        h.qubits[0].omega_q = w;
        match dressed_anharmonicity(&h, 0) {
            Ok(a) => println!("{w:>7.2} {:>9.4} {:>10.1} {:>7.3}", a.e1, 1e3 * a.beta_dress, a.atomic_weight),
            Err(e) => println!("{w:>7.2} {e}"),
        }
    }
    Ok(())
}
