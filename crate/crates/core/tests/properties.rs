use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

use cca_sim::boundstate::{existence_check, solve_single_bs, solve_two_atom_bs, BandSide, SelfEnergyModel};
use cca_sim::circuit::{
    capacitance_for_hopping, flux_compensation, hopping_from_capacitance, FluxCalibration, TransmonDispersion,
};
use cca_sim::dynamics::{evolve, find_resonance, swap_chevron, InitialState, PulseSchedule, SwapProtocol};
use cca_sim::lattice::{mode_frequencies, LatticeParams};
use cca_sim::spectra::{build_and_diag_2ex, zz_interaction, ClassificationMargin, HamiltonianModel, QubitParams};
use cca_sim::transport::{real_cubic_roots, transmission_linear, transmission_reverse};

fn chain(n: usize, omega_r: f64, j: f64) -> LatticeParams {
    LatticeParams { n_sites: n, omega_r, j, ..Default::default() }
}

fn qubit(omega_q: f64, g: f64, site: usize) -> QubitParams {
    QubitParams { omega_q, beta: -0.25, g, g2: 0.0, site }
}

/// Chain plus emitters assembled by hand, nearest-neighbour couplings only.
fn dense(p: &LatticeParams, qs: &[QubitParams]) -> DMatrix<f64> {
    let n = p.n_sites;
    let mut m = DMatrix::zeros(n + qs.len(), n + qs.len());
    for x in 0..n {
        m[(x, x)] = p.omega_r;
        if x + 1 < n {
            m[(x, x + 1)] = p.j;
            m[(x + 1, x)] = p.j;
        }
    }
    for (i, q) in qs.iter().enumerate() {
        m[(n + i, n + i)] = q.omega_q;
        m[(n + i, q.site - 1)] = q.g;
        m[(q.site - 1, n + i)] = q.g;
    }
    m
}

/// Eigenpairs sorted by descending eigenvalue.
fn eig_desc(m: DMatrix<f64>) -> Vec<(f64, Vec<f64>)> {
    let e = SymmetricEigen::new(m);
    let mut v: Vec<(f64, Vec<f64>)> = (0..e.eigenvalues.len())
        .map(|i| (e.eigenvalues[i], e.eigenvectors.column(i).iter().copied().collect()))
        .collect();
    v.sort_by(|a, b| b.0.total_cmp(&a.0));
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hopping_is_linear_in_capacitance(c in 0.1f64..50.0, a in 0.1f64..10.0, w in 3.0f64..9.0, z in 20.0f64..400.0) {
        let base = hopping_from_capacitance(c, w, z);
        let scaled = hopping_from_capacitance(a * c, w, z);
        prop_assert!((scaled - a * base).abs() <= 1e-12 * scaled.abs());
        prop_assert!((capacitance_for_hopping(base, w, z) - c).abs() <= 1e-10 * c);
    }

    #[test]
    fn qubit_frequency_is_periodic_and_even(top in 4.0f64..9.0, ec in 0.1f64..0.4, flux in -0.45f64..0.45, k in -3i32..3) {
        let d = TransmonDispersion { omega_max: top, charging: ec };
        let f = d.frequency(flux);
        prop_assert!((d.frequency(flux + k as f64) - f).abs() < 1e-9);
        prop_assert!((d.frequency(-flux) - f).abs() < 1e-12);
    }

    #[test]
    fn flux_compensation_inverts_forward_map(
        a in -0.2f64..0.2, b in -0.2f64..0.2, o1 in -0.3f64..0.3, o2 in -0.3f64..0.3,
        t1 in -0.5f64..0.5, t2 in -0.5f64..0.5,
    ) {
        let cal = FluxCalibration { matrix: [[1.0, a], [b, 1.0]], offset: [o1, o2] };
        let v = flux_compensation(&cal, [t1, t2]).unwrap();
        let back = cal.forward(v);
        prop_assert!((back[0] - t1).abs() < 1e-14 && (back[1] - t2).abs() < 1e-14);
    }

    #[test]
    fn closed_form_modes_match_dense_chain(n in 1usize..160, w in 4.0f64..8.0, j in 0.05f64..0.5) {
        let p = chain(n, w, j);
        let set = mode_frequencies(&p).unwrap();
        let exact = eig_desc(dense(&p, &[]));
        prop_assert_eq!(set.modes.len(), n);
        for (m, (e, _)) in set.modes.iter().zip(&exact) {
            prop_assert!((m.omega - e).abs() < 1e-10, "mode {} {} vs {}", m.m, m.omega, e);
        }
        for a in &set.modes {
            for b in &set.modes {
                let dot: f64 = a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| x * y).sum();
                let want = if a.m == b.m { 1.0 } else { 0.0 };
                prop_assert!((dot - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bound_state_matches_dense_eigenvector(
        g in 0.05f64..0.5, j in 0.1f64..0.4, d in -1.0f64..3.0, n in 5usize..120, site_frac in 0.0f64..1.0,
    ) {
        let p = chain(n, 5.0, j);
        let site = 1 + ((n - 1) as f64 * site_frac) as usize;
        let delta = d * 2.0 * j;
        let q = qubit(5.0 + delta, g, site);
        if !existence_check(g, j, n, site, delta, BandSide::Above) {
            return Ok(());
        }
        let bs = solve_single_bs(&q, &p, BandSide::Above, SelfEnergyModel::Finite).unwrap();
        prop_assert!(bs.residual < 1e-12);
        let (e, mut v) = eig_desc(dense(&p, &[q])).swap_remove(0);
        if v[n] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        prop_assert!((bs.omega_bs - e).abs() < 1e-8, "{} vs {}", bs.omega_bs, e);
        prop_assert!((bs.atomic_weight() - v[n] * v[n]).abs() < 1e-8);
        for (c, e) in bs.cloud.iter().zip(&v[..n]) {
            prop_assert!((c - e).abs() < 1e-6);
        }
    }

    #[test]
    fn pair_splitting_ignores_labels(
        g1 in 0.1f64..0.4, g2 in 0.1f64..0.4, d1 in 0.0f64..1.5, d2 in 0.0f64..1.5, x1 in 3usize..10, sep in 1usize..6,
    ) {
        let j = 0.25;
        let p = chain(21, 5.0, j);
        let a = qubit(5.0 + 2.0 * j + d1, g1, x1);
        let b = qubit(5.0 + 2.0 * j + d2, g2, x1 + sep);
        let ab = solve_two_atom_bs(&a, &b, &p, SelfEnergyModel::Finite).unwrap();
        let ba = solve_two_atom_bs(&b, &a, &p, SelfEnergyModel::Finite).unwrap();
        match (ab.u, ba.u) {
            (Some(u), Some(v)) => prop_assert!((u - v).abs() < 1e-9),
            (u, v) => prop_assert_eq!(u.is_none(), v.is_none()),
        }
    }

    #[test]
    fn lossless_chain_conserves_energy_and_is_reciprocal(
        n in 1usize..15, j in 0.05f64..0.4, kappa in 0.001f64..0.1, g in 0.0f64..0.3, dq in -1.0f64..1.0,
    ) {
        let mut p = chain(n, 6.0, j);
        p.kappa_edge = kappa;
        let h = HamiltonianModel::new(p, vec![qubit(6.0 + dq, g, 1 + n / 2)]);
        let grid: Vec<f64> = (0..41).map(|i| 6.0 - 1.2 + 2.4 * i as f64 / 40.0).collect();
        let t = transmission_linear(&h, &[0.0], &grid).unwrap();
        let r = transmission_reverse(&h, &[0.0], &grid).unwrap();
        for i in 0..grid.len() {
            let sum = t.s21[i].norm_sqr() + t.s11[i].norm_sqr();
            prop_assert!((sum - 1.0).abs() < 1e-8, "sum {} at {}", sum, grid[i]);
            prop_assert!((t.s21[i] - r[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn kerr_roots_satisfy_cubic(delta in -5.0f64..5.0, xi in -2.0f64..2.0) {
        let c = [-1.0, delta * delta + 0.25, 2.0 * delta * xi, xi * xi];
        let roots = real_cubic_roots(c);
        prop_assert!(!roots.is_empty());
        for x in roots {
            let p = ((c[3] * x + c[2]) * x + c[1]) * x + c[0];
            let scale = 1.0 + c[1].abs() * x.abs() + c[2].abs() * x * x + c[3].abs() * x.abs().powi(3);
            prop_assert!(p.abs() < 1e-12 * scale, "residual {} at {}", p, x);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn zz_ignores_global_frequency_shift(w1 in 6.3f64..7.0, w2 in 6.3f64..7.0, shift in -2.0f64..2.0) {
        let h = HamiltonianModel::new(chain(9, 5.7, 0.25), vec![qubit(w1, 0.3, 4), qubit(w2, 0.3, 6)]);
        let a = zz_interaction(&h).unwrap();
        let b = zz_interaction(&h.shifted(shift)).unwrap();
        prop_assert!((a.zeta - b.zeta).abs() < 1e-9);
    }

    #[test]
    fn two_excitation_states_are_normalized(w1 in 5.0f64..7.0, w2 in 5.0f64..7.0, n in 2usize..9) {
        let h = HamiltonianModel::new(chain(n, 5.7, 0.25), vec![qubit(w1, 0.3, 1), qubit(w2, 0.2, n)]);
        let r = build_and_diag_2ex(&h, ClassificationMargin::default()).unwrap();
        let trace: f64 = r.eigenvalues.iter().sum();
        let diag: f64 = {
            // Pair energies of every unordered product state, plus anharmonic shifts.
            let e: Vec<f64> = h.diagonal();
            let mut s = 0.0;
            for a in 0..e.len() {
                for b in a..e.len() {
                    s += e[a] + e[b];
                }
            }
            s + h.qubits.iter().map(|q| q.beta).sum::<f64>()
        };
        prop_assert!((trace - diag).abs() < 1e-9 * diag.abs());
        for p in &r.populations {
            prop_assert!((p.total() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn lossless_evolution_keeps_norm(w in 5.8f64..7.0, g in 0.05f64..0.4, n in 3usize..12) {
        let h = HamiltonianModel::new(chain(n, 5.7, 0.25), vec![qubit(w, g, 1 + n / 2)]);
        let r = evolve(&h, &PulseSchedule::idle(InitialState::BareQubit { qubit: 0 }, 1000.0, 50.0)).unwrap();
        for v in &r.norm {
            prop_assert!((v - 1.0).abs() < 1e-8);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    // Deep in the gap the pair is close to two coupled levels, so the
    // chevron is even in the detuning up to the small dispersion of the
    // exchange coupling.
    #[test]
    fn chevron_is_even_in_detuning(w in 7.2f64..8.0, d in 0.001f64..0.004) {
        let h = HamiltonianModel::new(chain(21, 5.717, 0.249), vec![qubit(w, 0.3, 10), qubit(w + 0.4, 0.3, 12)]);
        let (res, _) = find_resonance(&h, 1, w - 0.1, w + 0.1).unwrap();
        let protocol = SwapProtocol { rise: 0.2, ..SwapProtocol::new(1) };
        let holds: Vec<f64> = (0..16).map(|i| i as f64 * 25.0).collect();
        let m = swap_chevron(&h, &protocol, &[res - d, res + d], &holds).unwrap();
        for q in 0..2 {
            for ((t, a), b) in holds.iter().zip(&m.populations[q][0]).zip(&m.populations[q][1]) {
                prop_assert!((a - b).abs() < 0.03, "emitter {} hold {}: {} vs {}", q, t, a, b);
            }
        }
    }
}
