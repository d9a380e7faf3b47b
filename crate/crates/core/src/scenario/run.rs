use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde_json::json;
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use super::config::{ScenarioConfig, ScenarioKind, SweepSpec};
use super::output::{write_all, Cell, ScenarioOutput, Table};
use crate::boundstate::{solve_single_bs, solve_two_atom_bs, BandSide, SelfEnergyModel};
use crate::dynamics::{evolve, find_resonance, oscillation_frequency, swap_chevron, PulseSchedule, SwapProtocol};
use crate::error::{Error, Result};
use crate::lattice::mode_frequencies;
use crate::roots::bisect;
use crate::spectra::{
    build_and_diag_1ex, build_and_diag_2ex, disorder_ensemble, dressed_anharmonicity, resonant_splitting,
    zz_interaction, zz_sweep, ClassificationMargin, HamiltonianModel, Identification, StateClass, TwoExClass,
};
use crate::transport::{
    apply_crosstalk, fit_kerr, kerr_response, synthetic_traces, transmission_linear, transmission_reverse,
    KerrFitOptions, KerrResponse, KerrTrace,
};

/// Paths written by [`execute`] together with the computed output.
#[derive(Debug)]
pub struct RunReport {
    pub output: ScenarioOutput,
    pub files: Vec<std::path::PathBuf>,
    pub wall_time_s: f64,
}

/// Runs the scenario and writes its data files, summary and manifest.
pub fn execute(cfg: &ScenarioConfig) -> Result<RunReport> {
    let start = Instant::now();
    let output = run(cfg)?;
    let wall = start.elapsed().as_secs_f64();
    let files = write_all(cfg, &cfg.model(), &output, wall)?;
    Ok(RunReport { output, files, wall_time_s: wall })
}

/// Computes a scenario without touching the file system (except to read
/// input traces and schedules).
pub fn run(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    cfg.validate()?;
    log::info!("running {} scenario", cfg.scenario);
    match cfg.scenario {
        ScenarioKind::Band => band(cfg),
        ScenarioKind::Transmission => transmission(cfg),
        ScenarioKind::Boundstate => boundstate(cfg),
        ScenarioKind::Splitting => splitting(cfg),
        ScenarioKind::Anharmonicity => anharmonicity(cfg),
        ScenarioKind::Zz => zz(cfg),
        ScenarioKind::Spectrum2ex => spectrum2ex(cfg),
        ScenarioKind::Swap => swap(cfg),
        ScenarioKind::Disorder => disorder(cfg),
        ScenarioKind::CalibrateKerr => calibrate_kerr(cfg),
    }
}

/// Point failures that mean "no such state here" leave an empty row
/// instead of aborting a sweep.
fn soft<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e @ (Error::NotFound(_) | Error::NoBoundState { .. } | Error::Domain(_))) => {
            log::debug!("sweep point skipped: {e}");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Swept models in order, each with its parameter value.
fn sweep_models(cfg: &ScenarioConfig) -> Result<(SweepSpec, Vec<(f64, HamiltonianModel)>)> {
    let s = cfg.effective_sweep().ok_or_else(|| Error::invalid("sweep", "this scenario needs a sweep"))?;
    let base = cfg.model();
    let models = s
        .values()?
        .into_iter()
        .map(|v| {
            let mut h = base.clone();
            s.apply(&mut h, v)?;
            Ok((v, h))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((s, models))
}

fn band(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let mut p = cfg.lattice.clone();
    if !cfg.model.next_nearest {
        p.j2 = 0.0;
    }
    let set = mode_frequencies(&p)?;
    let mut modes = Table::new("modes", &["m", "k", "omega_GHz", "kappa_GHz"]);
    for m in &set.modes {
        modes.push(vec![m.m.into(), m.k.into(), m.omega.into(), m.kappa.into()]);
    }
    let mut tables = vec![modes];
    if cfg.band.amplitudes {
        let mut cols = vec!["m".to_string()];
        cols.extend((1..=p.n_sites).map(|x| format!("site_{x}")));
        let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
        let mut amp = Table::new("amplitudes", &cols);
        for m in &set.modes {
            let mut row: Vec<Cell> = vec![m.m.into()];
            row.extend(m.amplitudes.iter().map(|&a| Cell::F(a)));
            amp.push(row);
        }
        tables.push(amp);
    }
    let top = set.modes.first().map(|m| m.omega);
    let bottom = set.modes.last().map(|m| m.omega);
    let edges = p.band_edges(cfg.model.next_nearest);
    Ok(ScenarioOutput {
        tables,
        summary: json!({
            "modes": set.modes.len(),
            "highest_mode_GHz": top,
            "lowest_mode_GHz": bottom,
            "band_edges_GHz": [edges.0, edges.1],
        }),
    })
}

fn transmission(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let t = &cfg.transmission;
    let mut h = cfg.model();
    let gamma = if t.with_qubits {
        cfg.gamma_q()
    } else {
        h.qubits.clear();
        vec![]
    };
    let grid = linspace(t.f_start, t.f_stop, t.points);
    let mut trace = transmission_linear(&h, &gamma, &grid)?;
    if let Some(c) = &t.crosstalk {
        trace = apply_crosstalk(&trace, c)?;
    }
    let reverse = if t.reverse { Some(transmission_reverse(&h, &gamma, &grid)?) } else { None };
    let mut cols = vec!["omega_GHz", "re_S21", "im_S21", "abs_S21", "arg_S21", "abs_S11"];
    if reverse.is_some() {
        cols.push("abs_S12");
    }
    let mut table = Table::new("transmission", &cols);
    for i in 0..grid.len() {
        let s = trace.s21[i];
        let mut row: Vec<Cell> = vec![grid[i].into(), s.re.into(), s.im.into(), s.norm().into(), s.arg().into()];
        row.push(trace.s11[i].norm().into());
        if let Some(r) = &reverse {
            row.push(r[i].norm().into());
        }
        table.push(row);
    }
    let mags: Vec<f64> = trace.s21.iter().map(|s| s.norm()).collect();
    let mut tables = vec![table];
    let mut summary = json!({
        "points": grid.len(),
        "with_qubits": t.with_qubits,
        "crosstalk": t.crosstalk,
        "max_abs_S21": mags.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        "min_abs_S21": mags.iter().cloned().fold(f64::INFINITY, f64::min),
    });
    if let Some(ps) = &t.power_sweep {
        let truth = KerrResponse {
            kappa: ps.kappa,
            kappa_tot: ps.kappa_tot,
            kerr: ps.kerr,
            omega0: ps.omega0,
            p_in_dbm: ps.powers_dbm[0],
            attenuation_db: ps.attenuation_db,
            cubic: ps.cubic,
        };
        let freqs = linspace(ps.omega0 - 0.5 * ps.span, ps.omega0 + 0.5 * ps.span, ps.points);
        let mut traces = synthetic_traces(&truth, &ps.powers_dbm, &freqs)?;
        if ps.noise > 0.0 {
            let seed = cfg.seed.ok_or_else(|| Error::invalid("seed", "required for noisy traces"))?;
            let normal = Normal::new(0.0, ps.noise).map_err(|e| Error::invalid("noise", e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for tr in &mut traces {
                for s in &mut tr.s21 {
                    *s += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
                }
            }
        }
        let mut kt = Table::new("kerr_traces", &["P_in_dBm", "omega_GHz", "re_S21", "im_S21"]);
        for tr in &traces {
            for (f, s) in tr.freqs.iter().zip(&tr.s21) {
                kt.push(vec![tr.p_in_dbm.into(), (*f).into(), s.re.into(), s.im.into()]);
            }
        }
        tables.push(kt);
        summary["kerr_truth"] = json!(truth);
        summary["photons_at_powers"] = json!(ps
            .powers_dbm
            .iter()
            .map(|&p| KerrResponse { p_in_dbm: p, ..truth }.photons(1.0))
            .collect::<Vec<_>>());
    }
    Ok(ScenarioOutput { tables, summary })
}

fn boundstate(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let spec = &cfg.boundstate;
    let (sweep, models) = sweep_models(cfg)?;
    let rows = models
        .par_iter()
        .map(|(v, h)| -> Result<Vec<Cell>> {
            let q = h.qubits[spec.qubit];
            let single = HamiltonianModel::new(h.lattice.clone(), vec![q]);
            let analytic = soft(solve_single_bs(&q, &h.lattice, spec.side, spec.self_energy))?;
            let s = build_and_diag_1ex(&single, ClassificationMargin::default())?;
            let exact = match spec.side {
                BandSide::Above => s.discrete_above().first().copied(),
                BandSide::Below => s.discrete_below().first().copied(),
            };
            Ok(vec![
                (*v).into(),
                q.omega_q.into(),
                analytic.as_ref().map(|b| b.omega_bs).into(),
                analytic.as_ref().map(|b| b.theta).into(),
                analytic.as_ref().map(|b| b.atomic_weight()).into(),
                analytic.as_ref().map(|b| b.lambda).into(),
                exact.map(|i| s.eigenvalues[i]).into(),
                exact.map(|i| s.atomic_weight(i, 0)).into(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(
        "boundstate",
        &[
            &sweep.variable,
            "omega_q_GHz",
            "omega_bs_GHz",
            "theta_rad",
            "atomic_weight",
            "lambda_sites",
            "omega_bs_exact_GHz",
            "atomic_weight_exact",
        ],
    );
    rows.into_iter().for_each(|r| t.push(r));
    let found = t.column("omega_bs_GHz").unwrap().iter().filter(|v| v.is_some()).count();
    Ok(ScenarioOutput {
        summary: json!({ "points": t.rows.len(), "bound_states_found": found, "side": spec.side, "self_energy": spec.self_energy }),
        tables: vec![t],
    })
}

fn splitting(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let spec = &cfg.splitting;
    let (sweep, models) = sweep_models(cfg)?;
    let rows = models
        .par_iter()
        .map(|(v, h)| -> Result<Vec<Cell>> {
            let ext = soft(resonant_splitting(&h.clone().with_next_nearest(true), spec.tuned, spec.window))?;
            let nn = soft(resonant_splitting(&h.clone().with_next_nearest(false), spec.tuned, spec.window))?;
            let analytic = match &nn {
                Some(s) => {
                    let mut q = h.qubits.clone();
                    q[spec.tuned].omega_q = s.omega_tuned;
                    solve_two_atom_bs(&q[0], &q[1], &h.lattice, SelfEnergyModel::Finite)?.u
                }
                None => None,
            };
            let mut row: Vec<Cell> = vec![(*v).into()];
            for s in [&ext, &nn] {
                row.push(s.map(|s| s.omega_tuned).into());
                row.push(s.map(|s| s.omega_plus).into());
                row.push(s.and_then(|s| s.omega_minus).into());
                row.push(s.map(|s| s.u).into());
                row.push(s.map(|s| s.omega_mid).into());
            }
            row.push(analytic.into());
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(
        "splitting",
        &[
            &sweep.variable,
            "omega_tuned_ext_GHz",
            "omega_plus_ext_GHz",
            "omega_minus_ext_GHz",
            "U_ext_GHz",
            "omega_mid_ext_GHz",
            "omega_tuned_nn_GHz",
            "omega_plus_nn_GHz",
            "omega_minus_nn_GHz",
            "U_nn_GHz",
            "omega_mid_nn_GHz",
            "U_nn_analytic_GHz",
        ],
    );
    rows.into_iter().for_each(|r| t.push(r));
    let range = |col: &str| {
        let v: Vec<f64> = t.column(col).unwrap().into_iter().flatten().collect();
        v.iter()
            .cloned()
            .fold(None, |acc: Option<(f64, f64)>, x| Some(acc.map_or((x, x), |(a, b)| (a.min(x), b.max(x)))))
    };
    Ok(ScenarioOutput {
        summary: json!({
            "points": t.rows.len(),
            "U_ext_range_GHz": range("U_ext_GHz"),
            "U_nn_range_GHz": range("U_nn_GHz"),
            "tuned": spec.tuned,
        }),
        tables: vec![t],
    })
}

fn anharmonicity(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let spec = &cfg.anharmonicity;
    let (sweep, models) = sweep_models(cfg)?;
    let rows = models
        .par_iter()
        .map(|(v, h)| -> Result<Vec<Cell>> {
            let (h, qi) = if spec.isolate {
                let mut m = h.clone();
                m.qubits = vec![h.qubits[spec.qubit]];
                (m, 0)
            } else {
                (h.clone(), spec.qubit)
            };
            let a = soft(dressed_anharmonicity(&h, qi))?;
            let mut hard = h.clone();
            hard.qubits[qi].beta = spec.reference_beta;
            let r = soft(dressed_anharmonicity(&hard, qi))?;
            Ok(vec![
                (*v).into(),
                a.map(|a| a.e1).into(),
                a.map(|a| a.beta_dress).into(),
                r.map(|r| r.beta_dress).into(),
                a.map(|a| a.atomic_weight).into(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(
        "anharmonicity",
        &[&sweep.variable, "omega_bs_GHz", "beta_dress_GHz", "beta_dress_reference_GHz", "atomic_weight"],
    );
    rows.into_iter().for_each(|r| t.push(r));
    Ok(ScenarioOutput {
        summary: json!({ "points": t.rows.len(), "qubit": spec.qubit, "reference_beta_GHz": spec.reference_beta }),
        tables: vec![t],
    })
}

/// Highest discrete level of emitter `q` on its own (GHz), if any.
fn lone_bound_state(h: &HamiltonianModel, q: usize, omega: f64) -> Result<Option<f64>> {
    let mut m = h.clone();
    m.qubits = vec![h.qubits[q]];
    m.qubits[0].omega_q = omega;
    let s = build_and_diag_1ex(&m, ClassificationMargin::default())?;
    Ok(s.discrete_above().first().map(|&i| s.eigenvalues[i]))
}

/// Bare frequency of emitter `q` that puts its lone bound state at `target`.
fn tune_bound_state(h: &HamiltonianModel, q: usize, target: f64) -> Result<f64> {
    let edge = h.band_edges().1;
    if !(target > edge) {
        return Err(Error::invalid("zz.omega_bs2_GHz", format!("must lie above the band edge {edge:.4} GHz")));
    }
    let f = |w: f64| match lone_bound_state(h, q, w) {
        Ok(Some(e)) => e - target,
        _ => -1.0,
    };
    bisect(f, edge - 2.0 * h.lattice.j, target, 1e-12)
}

fn zz(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let spec = &cfg.zz;
    let (sweep, mut models) = sweep_models(cfg)?;
    let pinned = match spec.omega_bs2 {
        Some(target) => {
            let w = tune_bound_state(&models[0].1, 1, target)?;
            models.iter_mut().for_each(|(_, h)| h.qubits[1].omega_q = w);
            Some(w)
        }
        None => None,
    };
    let results: Vec<Option<_>> = match spec.identification {
        Identification::ProductOverlap => {
            models.par_iter().map(|(_, h)| soft(zz_interaction(h))).collect::<Result<Vec<_>>>()?
        }
        Identification::Adiabatic => {
            let hs: Vec<HamiltonianModel> = models.iter().map(|(_, h)| h.clone()).collect();
            zz_sweep(&hs, Identification::Adiabatic)?.into_iter().map(Some).collect()
        }
    };
    let mut t = Table::new(
        "zz",
        &[&sweep.variable, "omega_q2_GHz", "e10_GHz", "e01_GHz", "e11_GHz", "zeta_GHz", "overlap", "ambiguous"],
    );
    let mut best: Option<(f64, f64)> = None;
    for ((v, h), r) in models.iter().zip(&results) {
        if let Some(r) = r {
            if best.is_none_or(|b| r.zeta.abs() > b.1.abs()) {
                best = Some((*v, r.zeta));
            }
        }
        t.push(vec![
            (*v).into(),
            h.qubits[1].omega_q.into(),
            r.as_ref().map(|r| r.e10).into(),
            r.as_ref().map(|r| r.e01).into(),
            r.as_ref().map(|r| r.e11).into(),
            r.as_ref().map(|r| r.zeta).into(),
            r.as_ref().map(|r| r.overlap).into(),
            r.as_ref().map(|r| r.ambiguous).into(),
        ]);
    }
    Ok(ScenarioOutput {
        summary: json!({
            "points": t.rows.len(),
            "omega_q2_GHz": pinned,
            "omega_bs2_GHz": spec.omega_bs2,
            "max_abs_zeta_GHz": best.map(|b| b.1.abs()),
            "at": best.map(|b| b.0),
            "identification": spec.identification,
        }),
        tables: vec![t],
    })
}

fn spectrum2ex(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let (var, models): (String, Vec<(Option<f64>, HamiltonianModel)>) = match cfg.effective_sweep() {
        Some(_) => {
            let (s, m) = sweep_models(cfg)?;
            (s.variable, m.into_iter().map(|(v, h)| (Some(v), h)).collect())
        }
        None => ("value".into(), vec![(None, cfg.model())]),
    };
    let nq = cfg.qubits.len();
    let mut cols: Vec<String> = vec!["point".into(), var, "level".into(), "energy_GHz".into(), "class".into()];
    cols.extend((1..=nq).map(|i| format!("qubit{i}_photon")));
    cols.extend((1..=nq).map(|i| format!("qubit{i}_double")));
    cols.extend(["qubit_qubit".into(), "photon_photon".into()]);
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new("spectrum2ex", &cols);
    let results = models
        .par_iter()
        .map(|(_, h)| build_and_diag_2ex(h, ClassificationMargin::default()))
        .collect::<Result<Vec<_>>>()?;
    let mut discrete = 0;
    for (p, ((v, _), r)) in models.iter().zip(&results).enumerate() {
        for (k, e) in r.eigenvalues.iter().enumerate() {
            let class = match r.classes[k] {
                TwoExClass::Band => "band".to_string(),
                TwoExClass::Sideband(i) => format!("sideband:{i}"),
                TwoExClass::Discrete => "discrete".to_string(),
            };
            if r.classes[k] == TwoExClass::Discrete {
                discrete += 1;
            } else if cfg.spectrum2ex.discrete_only {
                continue;
            }
            let pop = &r.populations[k];
            let mut row: Vec<Cell> = vec![p.into(), (*v).into(), k.into(), (*e).into(), class.into()];
            row.extend(pop.qubit_photon.iter().map(|&x| Cell::F(x)));
            row.extend(pop.qubit_double.iter().map(|&x| Cell::F(x)));
            row.push(pop.qubit_qubit.into());
            row.push(pop.photon_photon.into());
            t.push(row);
        }
    }
    Ok(ScenarioOutput {
        summary: json!({
            "points": models.len(),
            "dimension": results.first().map(|r| r.eigenvalues.len()),
            "discrete_levels": discrete,
        }),
        tables: vec![t],
    })
}

/// `sin²θ` of the discrete level with the most weight on `qubit`.
fn dressing(h: &HamiltonianModel, qubit: usize) -> Result<f64> {
    let s = build_and_diag_1ex(h, ClassificationMargin::default())?;
    (0..s.len())
        .filter(|&k| s.classes[k] != StateClass::Band)
        .map(|k| (s.atomic_weight(k, qubit), 1.0 - s.emitter_weight(k)))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|x| x.1)
        .ok_or_else(|| Error::NotFound(format!("no discrete level on emitter {qubit}")))
}

fn swap(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let h = cfg.model();
    let spec = &cfg.swap;
    if let Some(path) = &spec.schedule {
        let path = cfg.resolve(path);
        let text = std::fs::read_to_string(&path)?;
        let mut s: PulseSchedule =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if s.gamma_q.is_empty() {
            s.gamma_q = cfg.gamma_q();
        }
        return schedule_run(&h, &s);
    }
    let protocol = SwapProtocol {
        excited: spec.excited,
        tuned: spec.tuned,
        rise: spec.rise,
        shape: spec.shape,
        gamma_q: cfg.gamma_q(),
        tolerances: Default::default(),
    };
    // Resonance sits near the emitter that stays put.
    let anchor = h.qubits[if h.qubits.len() == 2 { 1 - spec.tuned } else { spec.excited }].omega_q;
    let (w_res, gap) = find_resonance(&h, spec.tuned, anchor - 0.4, anchor + 0.4)?;
    let half = 0.5 * spec.detuning_span;
    let omegas =
        if spec.detuning_steps == 1 { vec![w_res] } else { linspace(w_res - half, w_res + half, spec.detuning_steps) };
    let holds = linspace(0.0, spec.hold_stop.unwrap_or(4.0 / gap), spec.hold_steps);
    let maps = swap_chevron(&h, &protocol, &omegas, &holds)?;
    let centre = if spec.detuning_steps % 2 == 1 {
        let i = spec.detuning_steps / 2;
        (0..h.qubits.len()).map(|q| maps.populations[q][i].clone()).collect::<Vec<_>>()
    } else {
        let m = swap_chevron(&h, &protocol, &[w_res], &holds)?;
        m.populations.into_iter().map(|mut p| p.remove(0)).collect()
    };
    let f_osc = oscillation_frequency(&holds, &centre[spec.excited])?;
    let t_swap = 0.5 / f_osc;
    let at_swap = protocol.run(&h, w_res, t_swap)?;
    let released_swap = 1.0 - at_swap.lost.last().unwrap() - at_swap.final_bound_population;
    // Release is bounded by the photonic weight of the most dressed level
    // the excitation visits.
    let bound =
        (0..h.qubits.len()).map(|q| dressing(&h, q)).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
    let max_released = maps.released.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);

    let nq = h.qubits.len();
    let mut cols: Vec<String> = vec!["omega_GHz".into(), "hold_ns".into()];
    cols.extend((1..=nq).map(|q| format!("P_q{q}")));
    cols.extend(["retained".into(), "released".into()]);
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new("chevron", &cols);
    for (i, w) in omegas.iter().enumerate() {
        for (j, hold) in holds.iter().enumerate() {
            let mut row: Vec<Cell> = vec![(*w).into(), (*hold).into()];
            row.extend((0..nq).map(|q| Cell::F(maps.populations[q][i][j])));
            row.push(maps.retained[i][j].into());
            row.push(maps.released[i][j].into());
            t.push(row);
        }
    }
    let mut rc: Vec<String> = vec!["hold_ns".into()];
    rc.extend((1..=nq).map(|q| format!("P_q{q}")));
    let rc: Vec<&str> = rc.iter().map(String::as_str).collect();
    let mut res = Table::new("resonance", &rc);
    for (j, hold) in holds.iter().enumerate() {
        let mut row: Vec<Cell> = vec![(*hold).into()];
        row.extend((0..nq).map(|q| Cell::F(centre[q][j])));
        res.push(row);
    }
    Ok(ScenarioOutput {
        summary: json!({
            "resonance_GHz": w_res,
            "static_gap_GHz": gap,
            "oscillation_GHz": f_osc,
            "oscillation_over_gap": f_osc / gap,
            "swap_time_ns": t_swap,
            "retained_at_swap": at_swap.retained(),
            "bound_population_at_swap": at_swap.final_bound_population,
            "released_at_swap": released_swap,
            "max_released": max_released,
            "sin2_theta": bound,
            "released_violation": max_released.max(released_swap) > bound + 0.05,
        }),
        tables: vec![t, res],
    })
}

fn schedule_run(h: &HamiltonianModel, s: &PulseSchedule) -> Result<ScenarioOutput> {
    let r = evolve(h, s)?;
    let nq = h.qubits.len();
    let mut cols: Vec<String> = vec!["t_ns".into()];
    cols.extend((1..=nq).map(|q| format!("P_q{q}")));
    cols.extend((1..=nq).map(|q| format!("omega_q{q}_GHz")));
    cols.extend(["released".into(), "lost".into(), "norm".into()]);
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new("timeseries", &cols);
    for (k, time) in r.times.iter().enumerate() {
        let mut row: Vec<Cell> = vec![(*time).into()];
        row.extend((0..nq).map(|q| Cell::F(r.qubit_populations[q][k])));
        row.extend((0..nq).map(|q| Cell::F(r.qubit_frequencies[q][k])));
        row.push(r.released[k].into());
        row.push(r.lost[k].into());
        row.push(r.norm[k].into());
        t.push(row);
    }
    let finals: Vec<f64> = (0..nq).map(|q| *r.qubit_populations[q].last().unwrap()).collect();
    Ok(ScenarioOutput {
        summary: json!({
            "final_populations": finals,
            "retained": r.retained(),
            "released": r.released.last(),
            "lost": r.lost.last(),
            "final_bound_population": r.final_bound_population,
            "steps": r.steps,
        }),
        tables: vec![t],
    })
}

fn disorder(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let seed = cfg.seed.ok_or_else(|| Error::invalid("seed", "required for the disorder scenario"))?;
    let sigma = cfg.disorder.sigma.unwrap_or(cfg.lattice.disorder_sigma);
    let stats = disorder_ensemble(&cfg.model(), sigma, cfg.disorder.realizations, seed)?;
    let mut t = Table::new("realizations", &["index", "omega_bs_GHz", "theta_rad", "U_GHz"]);
    for s in &stats.samples {
        t.push(vec![s.index.into(), s.omega_bs.into(), s.theta.into(), s.u.into()]);
    }
    let mut summary = json!(stats);
    if let Some(o) = summary.as_object_mut() {
        o.remove("samples");
    }
    Ok(ScenarioOutput { tables: vec![t], summary })
}

/// Reads traces grouped by input power, in file order.
pub fn read_kerr_traces(path: &Path) -> Result<Vec<KerrTrace>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| Error::Config(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("{}: missing column `{name}`", path.display())))
    };
    let idx = [col("P_in_dBm")?, col("omega_GHz")?, col("re_S21")?, col("im_S21")?];
    let mut order: Vec<u64> = Vec::new();
    let mut groups: BTreeMap<u64, KerrTrace> = BTreeMap::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Config(e.to_string()))?;
        let mut v = [0.0f64; 4];
        for (k, &i) in idx.iter().enumerate() {
            v[k] = rec
                .get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Config(format!("{}: bad number on data row {}", path.display(), line + 1)))?;
        }
        let key = v[0].to_bits();
        let tr = groups.entry(key).or_insert_with(|| {
            order.push(key);
            KerrTrace { p_in_dbm: v[0], freqs: vec![], s21: vec![] }
        });
        tr.freqs.push(v[1]);
        tr.s21.push(Complex64::new(v[2], v[3]));
    }
    Ok(order.into_iter().filter_map(|k| groups.remove(&k)).collect())
}

fn calibrate_kerr(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let spec = &cfg.calibrate_kerr;
    let path = cfg.resolve(spec.traces.as_ref().expect("validated"));
    let traces = read_kerr_traces(&path)?;
    let opts = KerrFitOptions {
        attenuation_db: spec.attenuation_db,
        cubic: spec.cubic,
        branch: spec.branch,
        ..Default::default()
    };
    let fit = fit_kerr(&traces, &opts)?;
    let mut t = Table::new("kerr_fit_curves", &["P_in_dBm", "omega_GHz", "abs_S21_data", "abs_S21_fit"]);
    for tr in &traces {
        let k = fit.response(tr.p_in_dbm);
        let deltas: Vec<f64> = tr.freqs.iter().map(|f| (f - k.omega0) / k.kappa_tot).collect();
        let model = kerr_response(&k, &deltas, spec.branch)?;
        for ((f, s), m) in tr.freqs.iter().zip(&tr.s21).zip(&model) {
            t.push(vec![tr.p_in_dbm.into(), (*f).into(), s.norm().into(), m.s21.norm().into()]);
        }
    }
    Ok(ScenarioOutput { tables: vec![t], summary: json!(fit) })
}
