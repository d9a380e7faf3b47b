//! Recover the self-Kerr shift from noisy multi-power transmission traces.

use cca_sim::transport::{fit_kerr, synthetic_traces, CubicForm, KerrFitOptions, KerrResponse};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> cca_sim::Result<()> {
    let truth = KerrResponse {
        kappa: 0.006,
        kappa_tot: 0.012,
        kerr: -1e-4,
        omega0: 6.21,
        p_in_dbm: 0.0,
        attenuation_db: 70.0,
        cubic: CubicForm::Consistent,
    };
    let powers = [-50.0, -45.0, -40.0, -35.0];
    let freqs: Vec<f64> = (0..401).map(|i| 6.17 + 0.08 * i as f64 / 400.0).collect();
    let mut traces = synthetic_traces(&truth, &powers, &freqs)?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 0.005).unwrap();
    for t in &mut traces {
        for s in &mut t.s21 {
            *s += Complex64::new(noise.sample(&mut rng), noise.sample(&mut rng));
        }
    }

    let opts = KerrFitOptions { attenuation_db: truth.attenuation_db, ..Default::default() };
    let fit = fit_kerr(&traces, &opts)?;
    let names = ["kappa", "kappa_tot", "K", "omega0"];
    let truth_v = [truth.kappa, truth.kappa_tot, truth.kerr, truth.omega0];
    let fit_v = [fit.kappa, fit.kappa_tot, fit.kerr, fit.omega0];
    println!("{:>10} {:>12} {:>12} {:>10}", "", "true", "fit", "sigma");
    for i in 0..4 {
        println!("{:>10} {:>12.4e} {:>12.4e} {:>10.2e}", names[i], truth_v[i], fit_v[i], fit.std_errors[i]);
    }
    println!("{} iterations, rms residual {:.2e}, converged {}", fit.iterations, fit.rms_residual, fit.converged);
    Ok(())
}
