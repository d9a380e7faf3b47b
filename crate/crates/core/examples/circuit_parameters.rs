//! Chain and emitter parameters derived from the measured circuit.

use cca_sim::circuit::{
    derive_lattice_params, derive_qubit_params, measured_device, parasitic_ratio, qubit_dispersion,
};

fn main() -> cca_sim::Result<()> {
    let c = measured_device();
    let d = derive_lattice_params(&c)?;
    println!("bare resonator   {:.4} GHz, {:.1} ohm", d.omega_r_bare_ghz, d.z_r_bare_ohm);
    println!("loaded resonator {:.4} GHz, {:.1} ohm", d.omega_r_ghz, d.z_r_ohm);
    println!("J = {:.4} GHz  J2 = {:.4} GHz", d.j_ghz, d.j2_ghz);
    println!("self-Kerr {:.3e} GHz per resonator, {:.3e} GHz per mode", d.kerr_resonator_ghz, d.kerr_mode_ghz);
    for w in &d.warnings {
        println!("warning: {w}");
    }

    for i in 0..2 {
        let disp = qubit_dispersion(&c, i)?;
        println!(
            "\nemitter {}: max {:.3} GHz, E_C {:.3} GHz, g2/g {:.3}",
            i + 1,
            disp.omega_max,
            disp.charging,
            parasitic_ratio(&c, i)?
        );
        println!("{:>6} {:>9} {:>8}", "flux", "omega", "g");
        for flux in [0.0, 0.1, 0.2, 0.3] {
            let q = derive_qubit_params(&c, flux, i)?;
            println!("{flux:>6.2} {:>9.4} {:>8.4}", q.omega_q, q.g);
        }
    }
    Ok(())
}
