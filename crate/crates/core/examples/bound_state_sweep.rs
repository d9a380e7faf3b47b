//! Single-emitter bound state against emitter frequency, finite chain
//! and infinite chain side by side.

use cca_sim::boundstate::{solve_single_bs, BandSide, SelfEnergyModel};
use cca_sim::scenario::{ScenarioConfig, ScenarioKind};

fn main() -> cca_sim::Result<()> {
    let cfg = ScenarioConfig::preset(ScenarioKind::Boundstate)?;
    let p = cfg.lattice.clone();
    let mut q = cfg.qubits[0];
    println!("{:>7} {:>9} {:>9} {:>8} {:>7}", "omega_q", "finite", "infinite", "lambda", "cos2");
    for i in 0..=10 {
        q.omega_q = 6.3 + 0.1 * i as f64;
        let f = solve_single_bs(&q, &p, BandSide::Above, SelfEnergyModel::Finite)?;
        let c = solve_single_bs(&q, &p, BandSide::Above, SelfEnergyModel::Continuum)?;
        println!(
            "{:>7.3} {:>9.4} {:>9.4} {:>8.3} {:>7.3}",
            q.omega_q,
            f.omega_bs,
            c.omega_bs,
            f.lambda,
            f.atomic_weight()
        );
    }
    Ok(())
}
