//! Excitation swap between two bound states: a short chevron around the
//! resonance, then the swap time read off the resonant trace.

use cca_sim::dynamics::{find_resonance, oscillation_frequency, swap_chevron, top_gap, SwapProtocol};
use cca_sim::scenario::{ScenarioConfig, ScenarioKind};

fn main() -> cca_sim::Result<()> {
    let cfg = ScenarioConfig::preset(ScenarioKind::Swap)?;
    let h = cfg.model();
    let anchor = h.qubits[0].omega_q;
    let (w_res, _) = find_resonance(&h, 1, anchor - 0.4, anchor + 0.4)?;
    let protocol = SwapProtocol::new(1);

    let mut at_res = h.clone();
    at_res.qubits[1].omega_q = w_res;
    let gap = top_gap(&at_res)?;
    let holds: Vec<f64> = (0..61).map(|i| i as f64 * 2.0 / gap / 60.0).collect();
    let omegas: Vec<f64> = (-2..=2).map(|i| w_res + 0.01 * i as f64).collect();
    let maps = swap_chevron(&h, &protocol, &omegas, &holds)?;

    println!("resonance at {w_res:.4} GHz, static gap {:.2} MHz", 1e3 * gap);
    print!("{:>8}", "hold");
    for w in &omegas {
        print!(" {w:>7.3}");
    }
    println!();
    for j in (0..holds.len()).step_by(3) {
        print!("{:>8.2}", holds[j]);
        for i in 0..omegas.len() {
            print!(" {:>7.3}", maps.populations[1][i][j]);
        }
        println!();
    }
    let f = oscillation_frequency(&holds, &maps.populations[1][2])?;
    println!("oscillation {:.2} MHz, swap time {:.2} ns", 1e3 * f, 0.5 / f);
    Ok(())
}
