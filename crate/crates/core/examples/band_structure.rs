//! Normal modes of the bare chain under both linewidth laws.

use cca_sim::lattice::{mode_frequencies, mode_linewidths, LatticeParams, LinewidthConvention};
use cca_sim::scenario::{ScenarioConfig, ScenarioKind};

fn main() -> cca_sim::Result<()> {
    let p = LatticeParams { j2: 0.0, ..ScenarioConfig::preset(ScenarioKind::Band)?.lattice };
    let modes = mode_frequencies(&p)?;
    let half = mode_linewidths(&p, LinewidthConvention::HalfAngle)?;
    let (lo, hi) = p.band_edges(false);
    println!("band {lo:.4} .. {hi:.4} GHz, {} modes", modes.modes.len());
    println!("{:>3} {:>8} {:>9} {:>11} {:>11}", "m", "k", "omega", "kappa_edge", "kappa_half");
    for (m, kh) in modes.modes.iter().zip(&half) {
        println!("{:>3} {:>8.4} {:>9.4} {:>11.3e} {:>11.3e}", m.m, m.k, m.omega, m.kappa, kh);
    }
    Ok(())
}
