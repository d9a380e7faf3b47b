//! Single-excitation evolution under flux pulses: excitation swaps between
//! bound states, chevrons, and the population released into the band.

mod chevron;
mod integrator;

pub use chevron::{
    find_resonance, oscillation_frequency, released_population, swap_chevron, top_gap, ChevronMaps, ReleasedPopulation,
    SwapProtocol,
};
pub use integrator::{DormandPrince, Tolerances};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::circuit::TransmonDispersion;
use crate::error::{Error, Result};
use crate::spectra::{build_and_diag_1ex, ClassificationMargin, HamiltonianModel, StateClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RampShape {
    #[default]
    Linear,
    Tanh,
}

impl RampShape {
    /// Fraction of the step completed at `s ∈ [0, 1]`.
    fn profile(self, s: f64) -> f64 {
        match self {
            RampShape::Linear => s,
            RampShape::Tanh => {
                let k = 4.0;
                0.5 * (1.0 + (k * (2.0 * s - 1.0)).tanh() / k.tanh())
            }
        }
    }
}

/// One flux step of an emitter: ramp to the target over `rise`, then hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxSegment {
    pub qubit: usize,
    /// Target frequency (GHz). Exactly one of this and `flux` is set.
    #[serde(rename = "omega_q_GHz", default, skip_serializing_if = "Option::is_none")]
    pub omega_q: Option<f64>,
    /// Target flux (flux quanta), mapped through the emitter's dispersion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux: Option<f64>,
    #[serde(rename = "hold_ns")]
    pub hold: f64,
    #[serde(rename = "t_raise_ns", default = "default_rise")]
    pub rise: f64,
    #[serde(default)]
    pub shape: RampShape,
}

fn default_rise() -> f64 {
    1.0
}

/// State prepared at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    /// Discrete eigenstate with the largest weight on `qubit`.
    BoundState { qubit: usize },
    /// Bare emitter excitation.
    BareQubit { qubit: usize },
}

/// Flux schedule. Segments of the same emitter run back to back from
/// `t = 0`; an emitter keeps its last level after its final segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSchedule {
    pub initial: InitialState,
    #[serde(default)]
    pub segments: Vec<FluxSegment>,
    #[serde(rename = "total_ns")]
    pub total: f64,
    #[serde(rename = "dt_ns")]
    pub dt: f64,
    /// Emitter decay rates (GHz); zero when empty.
    #[serde(rename = "gamma_q_GHz", default)]
    pub gamma_q: Vec<f64>,
    /// Needed only for segments given in flux.
    #[serde(default)]
    pub dispersion: Vec<TransmonDispersion>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl PulseSchedule {
    /// No flux pulses; the model evolves as given.
    pub fn idle(initial: InitialState, total: f64, dt: f64) -> Self {
        PulseSchedule {
            initial,
            segments: vec![],
            total,
            dt,
            gamma_q: vec![],
            dispersion: vec![],
            tolerances: Tolerances::default(),
        }
    }

    pub fn validate(&self, h: &HamiltonianModel) -> Result<()> {
        let nq = h.qubits.len();
        if !(self.total.is_finite() && self.total >= 0.0) {
            return Err(Error::invalid("total_ns", "must be non-negative"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt_ns", "must be positive"));
        }
        if !self.gamma_q.is_empty() && self.gamma_q.len() != nq {
            return Err(Error::invalid("gamma_q_GHz", format!("expected {nq} entries")));
        }
        if self.gamma_q.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::invalid("gamma_q_GHz", "must be non-negative"));
        }
        let q0 = match self.initial {
            InitialState::BoundState { qubit } | InitialState::BareQubit { qubit } => qubit,
        };
        if q0 >= nq {
            return Err(Error::invalid("initial.qubit", format!("no emitter {q0}")));
        }
        for (i, s) in self.segments.iter().enumerate() {
            let field = |f: &str| format!("segments[{i}].{f}");
            if s.qubit >= nq {
                return Err(Error::invalid(field("qubit"), format!("no emitter {}", s.qubit)));
            }
            if !(s.hold.is_finite() && s.hold >= 0.0) {
                return Err(Error::invalid(field("hold_ns"), "must be non-negative"));
            }
            if !(s.rise.is_finite() && s.rise >= 0.0) {
                return Err(Error::invalid(field("t_raise_ns"), "must be non-negative"));
            }
            match (s.omega_q, s.flux) {
                (Some(w), None) if w.is_finite() => {}
                (None, Some(f)) if f.is_finite() => {
                    if self.dispersion.len() != nq {
                        return Err(Error::invalid("dispersion", "flux segments need one dispersion per emitter"));
                    }
                }
                _ => return Err(Error::invalid(field("omega_q_GHz"), "set exactly one of omega_q_GHz and flux")),
            }
            let mixed = self.segments.iter().any(|o| o.qubit == s.qubit && o.flux.is_some() != s.flux.is_some());
            if mixed {
                return Err(Error::invalid(field("flux"), "segments of one emitter must all use the same control"));
            }
        }
        Ok(())
    }

    fn plan(&self, h: &HamiltonianModel) -> Result<Vec<Channel>> {
        let mut channels = Vec::new();
        for (q, qp) in h.qubits.iter().enumerate() {
            let mine: Vec<&FluxSegment> = self.segments.iter().filter(|s| s.qubit == q).collect();
            let by_flux = mine.first().is_some_and(|s| s.flux.is_some());
            let start = if by_flux { self.dispersion[q].flux_for(qp.omega_q)? } else { qp.omega_q };
            let mut t = 0.0;
            let mut level = start;
            let mut steps = Vec::new();
            for s in mine {
                let target = if by_flux { s.flux.unwrap() } else { s.omega_q.unwrap() };
                steps.push(Step { t0: t, rise: s.rise, from: level, to: target, shape: s.shape });
                t += s.rise + s.hold;
                level = target;
            }
            channels.push(Channel { start, steps, dispersion: by_flux.then(|| self.dispersion[q]) });
        }
        Ok(channels)
    }
}

#[derive(Debug, Clone)]
struct Step {
    t0: f64,
    rise: f64,
    from: f64,
    to: f64,
    shape: RampShape,
}

#[derive(Debug, Clone)]
struct Channel {
    start: f64,
    steps: Vec<Step>,
    dispersion: Option<TransmonDispersion>,
}

impl Channel {
    fn control(&self, t: f64) -> f64 {
        let mut v = self.start;
        for s in &self.steps {
            if t < s.t0 {
                break;
            }
            v = if s.rise > 0.0 && t < s.t0 + s.rise {
                s.from + (s.to - s.from) * s.shape.profile((t - s.t0) / s.rise)
            } else {
                s.to
            };
        }
        v
    }

    fn frequency(&self, t: f64) -> f64 {
        let c = self.control(t);
        match &self.dispersion {
            Some(d) => d.frequency(c),
            None => c,
        }
    }

    fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().flat_map(|s| [s.t0, s.t0 + s.rise])
    }
}

/// Sampled evolution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsResult {
    /// Sample times (ns).
    pub times: Vec<f64>,
    /// Emitter populations, indexed `[qubit][sample]`.
    pub qubit_populations: Vec<Vec<f64>>,
    /// Cavity populations, indexed `[sample][site]`.
    pub site_populations: Vec<Vec<f64>>,
    /// Emitter frequencies (GHz), indexed `[qubit][sample]`.
    pub qubit_frequencies: Vec<Vec<f64>>,
    /// Population emitted through the two edge ports.
    pub released: Vec<f64>,
    /// Population absorbed by internal cavity loss and emitter decay.
    pub lost: Vec<f64>,
    pub norm: Vec<f64>,
    /// Weight of the final state on the discrete levels of the final Hamiltonian.
    pub final_bound_population: f64,
    /// Amplitudes at the last sample, in the frame rotating at the cavity frequency.
    pub final_state: Vec<Complex64>,
    pub steps: usize,
}

impl DynamicsResult {
    /// Final population left on the emitters.
    pub fn retained(&self) -> f64 {
        self.qubit_populations.iter().map(|p| p.last().copied().unwrap_or(0.0)).sum()
    }
}

/// Model with the emitters at `freqs`.
fn with_frequencies(h: &HamiltonianModel, freqs: &[f64]) -> HamiltonianModel {
    let mut m = h.clone();
    for (q, w) in m.qubits.iter_mut().zip(freqs) {
        q.omega_q = *w;
    }
    m
}

fn initial_vector(h: &HamiltonianModel, init: InitialState) -> Result<Vec<Complex64>> {
    let mut y = vec![Complex64::default(); h.dim()];
    match init {
        InitialState::BareQubit { qubit } => y[h.qubit_index(qubit)] = Complex64::new(1.0, 0.0),
        InitialState::BoundState { qubit } => {
            let s = build_and_diag_1ex(h, ClassificationMargin::default())?;
            let best = (0..s.len())
                .filter(|&k| s.classes[k] != StateClass::Band)
                .max_by(|&a, &b| s.atomic_weight(a, qubit).total_cmp(&s.atomic_weight(b, qubit)))
                .ok_or_else(|| Error::NotFound("no discrete level to prepare".into()))?;
            for (yi, v) in y.iter_mut().zip(s.vector(best)) {
                *yi = Complex64::new(v, 0.0);
            }
        }
    }
    Ok(y)
}

/// Weight of `y` on the discrete levels of `h`.
fn bound_weight(h: &HamiltonianModel, y: &[Complex64]) -> Result<f64> {
    let s = build_and_diag_1ex(h, ClassificationMargin::default())?;
    Ok((0..s.len())
        .filter(|&k| s.classes[k] != StateClass::Band)
        .map(|k| s.vector(k).iter().zip(y).map(|(v, a)| a * *v).sum::<Complex64>().norm_sqr())
        .sum())
}

/// Integrates the single-excitation Schrödinger equation with losses.
///
/// Works in the frame rotating at the bare cavity frequency with time in ns
/// and frequencies in GHz. Edge-port emission and internal losses are
/// integrated alongside the amplitudes so that the released and lost
/// fractions carry the same error control.
pub fn evolve(h: &HamiltonianModel, s: &PulseSchedule) -> Result<DynamicsResult> {
    h.validate()?;
    s.validate(h)?;
    let n = h.lattice.n_sites;
    let nq = h.qubits.len();
    let dim = h.dim();
    let channels = s.plan(h)?;
    let freqs_at = |t: f64| -> Vec<f64> { channels.iter().map(|c| c.frequency(t)).collect() };

    let frame = h.lattice.omega_r;
    let mut diag: Vec<f64> = h.diagonal().iter().map(|d| d - frame).collect();
    diag.truncate(n);
    let couplings = h.couplings();
    let mut site_loss = vec![h.lattice.kappa_nr; n];
    site_loss[0] += h.lattice.kappa_edge;
    site_loss[n - 1] += h.lattice.kappa_edge;
    let gamma: Vec<f64> = if s.gamma_q.is_empty() { vec![0.0; nq] } else { s.gamma_q.clone() };
    let edge = h.lattice.kappa_edge;
    let tau = 2.0 * PI;

    // The extra slot accumulates released (re) and lost (im) population.
    let rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let minus_i = Complex64::new(0.0, -tau);
        for x in 0..n {
            dy[x] = y[x] * Complex64::new(-0.5 * tau * site_loss[x], -tau * diag[x]);
        }
        for (q, c) in channels.iter().enumerate() {
            let w = c.frequency(t) - frame;
            dy[n + q] = y[n + q] * Complex64::new(-0.5 * tau * gamma[q], -tau * w);
        }
        for &(a, b, v) in &couplings {
            dy[a] += minus_i * v * y[b];
            dy[b] += minus_i * v * y[a];
        }
        let ends = if n == 1 { 2.0 * y[0].norm_sqr() } else { y[0].norm_sqr() + y[n - 1].norm_sqr() };
        let internal: f64 = (0..n).map(|x| y[x].norm_sqr()).sum::<f64>() * h.lattice.kappa_nr
            + (0..nq).map(|q| gamma[q] * y[n + q].norm_sqr()).sum::<f64>();
        dy[dim] = Complex64::new(tau * edge * ends, tau * internal);
    };

    let mut y = initial_vector(&with_frequencies(h, &freqs_at(0.0)), s.initial)?;
    y.push(Complex64::default());

    let mut samples: Vec<f64> =
        (0..).map(|k| k as f64 * s.dt).take_while(|t| *t <= s.total * (1.0 + 1e-12)).map(|t| t.min(s.total)).collect();
    if samples.last().is_none_or(|t| (t - s.total).abs() > 1e-12 * s.total.max(1.0)) {
        samples.push(s.total);
    }
    let mut stops: Vec<f64> = channels
        .iter()
        .flat_map(|c| c.breakpoints())
        .filter(|t| *t > 0.0 && *t < s.total)
        .chain(samples.iter().copied())
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));

    let fastest = h.diagonal().iter().map(|d| (d - frame).abs()).fold(h.lattice.j.abs(), f64::max);
    let h0 = 0.01 / (tau * fastest.max(1e-3));
    let mut dp = DormandPrince::new(rhs, dim + 1, s.tolerances, h0);

    let mut out = DynamicsResult {
        times: Vec::with_capacity(samples.len()),
        qubit_populations: vec![Vec::with_capacity(samples.len()); nq],
        site_populations: Vec::with_capacity(samples.len()),
        qubit_frequencies: vec![Vec::with_capacity(samples.len()); nq],
        released: Vec::with_capacity(samples.len()),
        lost: Vec::with_capacity(samples.len()),
        norm: Vec::with_capacity(samples.len()),
        final_bound_population: 0.0,
        final_state: vec![],
        steps: 0,
    };
    let mut record = |t: f64, y: &[Complex64]| {
        out.times.push(t);
        let f = freqs_at(t);
        for q in 0..nq {
            out.qubit_populations[q].push(y[n + q].norm_sqr());
            out.qubit_frequencies[q].push(f[q]);
        }
        out.site_populations.push(y[..n].iter().map(|a| a.norm_sqr()).collect());
        out.released.push(y[dim].re);
        out.lost.push(y[dim].im);
        out.norm.push(y[..dim].iter().map(|a| a.norm_sqr()).sum());
    };

    let mut t = 0.0;
    let mut next_sample = 0;
    if samples[0] == 0.0 {
        record(0.0, &y);
        next_sample = 1;
    }
    for &stop in &stops {
        if stop <= t {
            continue;
        }
        dp.advance(&mut y, t, stop)?;
        t = stop;
        while next_sample < samples.len() && (samples[next_sample] - t).abs() <= 1e-12 * t.max(1.0) {
            record(samples[next_sample], &y);
            next_sample += 1;
        }
    }
    out.steps = dp.steps;
    let final_model = with_frequencies(h, &freqs_at(s.total));
    out.final_bound_population = bound_weight(&final_model, &y[..dim])?;
    y.truncate(dim);
    out.final_state = y;
    Ok(out)
}
