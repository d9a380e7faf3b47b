use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::boundstate::{BandSide, SelfEnergyModel};
use crate::circuit::{measured_device, parasitic_ratio};
use crate::dynamics::RampShape;
use crate::error::{Error, Result};
use crate::lattice::LatticeParams;
use crate::spectra::{HamiltonianModel, Identification, QubitParams};
use crate::transport::{CrosstalkModel, CubicForm, KerrBranch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Band,
    Transmission,
    Boundstate,
    Splitting,
    Anharmonicity,
    Zz,
    Spectrum2ex,
    Swap,
    Disorder,
    CalibrateKerr,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 10] = [
        ScenarioKind::Band,
        ScenarioKind::Transmission,
        ScenarioKind::Boundstate,
        ScenarioKind::Splitting,
        ScenarioKind::Anharmonicity,
        ScenarioKind::Zz,
        ScenarioKind::Spectrum2ex,
        ScenarioKind::Swap,
        ScenarioKind::Disorder,
        ScenarioKind::CalibrateKerr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Band => "band",
            ScenarioKind::Transmission => "transmission",
            ScenarioKind::Boundstate => "boundstate",
            ScenarioKind::Splitting => "splitting",
            ScenarioKind::Anharmonicity => "anharmonicity",
            ScenarioKind::Zz => "zz",
            ScenarioKind::Spectrum2ex => "spectrum2ex",
            ScenarioKind::Swap => "swap",
            ScenarioKind::Disorder => "disorder",
            ScenarioKind::CalibrateKerr => "calibrate-kerr",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid("scenario", format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::invalid("format", format!("expected csv or json, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: default_out(), format: OutputFormat::Csv }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSpec {
    /// Include next-nearest hopping and the parasitic emitter couplings.
    pub next_nearest: bool,
    /// Emitter decay rates; zero when empty.
    #[serde(rename = "gamma_q_GHz")]
    pub gamma_q: Vec<f64>,
}

/// Linear sweep of one model parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// `omega_q<i>_GHz`, `g<i>_GHz` (1-based emitter), `omega_q_GHz` (all
    /// emitters), `J_GHz`, `J2_GHz` or `omega_r_GHz`.
    pub variable: String,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepSpec {
    pub fn new(variable: &str, start: f64, stop: f64, steps: usize) -> Self {
        SweepSpec { variable: variable.into(), start, stop, steps }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        if self.steps == 0 {
            return Err(Error::invalid("sweep.steps", "must be at least 1"));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::invalid("sweep.start", "range must be finite"));
        }
        if self.steps == 1 {
            return Ok(vec![self.start]);
        }
        let d = (self.stop - self.start) / (self.steps - 1) as f64;
        Ok((0..self.steps).map(|i| self.start + d * i as f64).collect())
    }

    /// Sets the swept parameter on `h`.
    pub fn apply(&self, h: &mut HamiltonianModel, v: f64) -> Result<()> {
        let unknown = || Error::invalid("sweep.variable", format!("unknown variable `{}`", self.variable));
        let qubit = |prefix: &str| -> Option<usize> {
            let i: usize = self.variable.strip_prefix(prefix)?.strip_suffix("_GHz")?.parse().ok()?;
            i.checked_sub(1)
        };
        match self.variable.as_str() {
            "omega_q_GHz" => h.qubits.iter_mut().for_each(|q| q.omega_q = v),
            "J_GHz" => h.lattice.j = v,
            "J2_GHz" => h.lattice.j2 = v,
            "omega_r_GHz" => h.lattice.omega_r = v,
            _ => {
                if let Some(i) = qubit("omega_q") {
                    h.qubits.get_mut(i).ok_or_else(unknown)?.omega_q = v;
                } else if let Some(i) = qubit("g") {
                    h.qubits.get_mut(i).ok_or_else(unknown)?.g = v;
                } else {
                    return Err(unknown());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BandSpec {
    /// Also write the mode amplitude matrix.
    pub amplitudes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSweepSpec {
    #[serde(rename = "kappa_GHz")]
    pub kappa: f64,
    #[serde(rename = "kappa_tot_GHz")]
    pub kappa_tot: f64,
    #[serde(rename = "K_GHz")]
    pub kerr: f64,
    #[serde(rename = "omega0_GHz")]
    pub omega0: f64,
    #[serde(rename = "attenuation_dB")]
    pub attenuation_db: f64,
    #[serde(rename = "powers_dBm")]
    pub powers_dbm: Vec<f64>,
    #[serde(rename = "span_GHz")]
    pub span: f64,
    pub points: usize,
    /// Standard deviation of complex Gaussian noise added to each point.
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub cubic: CubicForm,
}

impl Default for PowerSweepSpec {
    fn default() -> Self {
        PowerSweepSpec {
            kappa: 0.006,
            kappa_tot: 0.012,
            kerr: -1e-4,
            omega0: 6.21,
            attenuation_db: 70.0,
            powers_dbm: vec![-50.0, -45.0, -40.0, -35.0],
            span: 0.08,
            points: 401,
            noise: 0.0,
            cubic: CubicForm::Consistent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransmissionSpec {
    #[serde(rename = "f_start_GHz")]
    pub f_start: f64,
    #[serde(rename = "f_stop_GHz")]
    pub f_stop: f64,
    pub points: usize,
    /// Keep the emitters; otherwise the bare chain is probed.
    pub with_qubits: bool,
    pub crosstalk: Option<CrosstalkModel>,
    /// Also compute transmission with the ports swapped.
    pub reverse: bool,
    pub power_sweep: Option<PowerSweepSpec>,
}

impl Default for TransmissionSpec {
    fn default() -> Self {
        TransmissionSpec {
            f_start: 5.0,
            f_stop: 6.5,
            points: 3001,
            with_qubits: false,
            crosstalk: None,
            reverse: false,
            power_sweep: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundStateSpec {
    /// Emitter index (0-based).
    pub qubit: usize,
    pub side: BandSide,
    pub self_energy: SelfEnergyModel,
}

impl Default for BoundStateSpec {
    fn default() -> Self {
        BoundStateSpec { qubit: 0, side: BandSide::Above, self_energy: SelfEnergyModel::Finite }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplittingSpec {
    /// Emitter brought onto resonance at each sweep point (0-based).
    pub tuned: usize,
    /// Search half-width around the other emitter (GHz).
    #[serde(rename = "window_GHz")]
    pub window: f64,
}

impl Default for SplittingSpec {
    fn default() -> Self {
        SplittingSpec { tuned: 1, window: 0.4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnharmonicitySpec {
    pub qubit: usize,
    /// Drop the other emitters.
    pub isolate: bool,
    /// Anharmonicity standing in for a two-level emitter in the reference curve.
    #[serde(rename = "reference_beta_GHz")]
    pub reference_beta: f64,
}

impl Default for AnharmonicitySpec {
    fn default() -> Self {
        AnharmonicitySpec { qubit: 1, isolate: true, reference_beta: -1000.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZzSpec {
    pub identification: Identification,
    /// Pin the second bound state here by retuning the second emitter.
    #[serde(rename = "omega_bs2_GHz")]
    pub omega_bs2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Spectrum2exSpec {
    /// Only write levels outside every continuum.
    pub discrete_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SwapSpec {
    pub excited: usize,
    pub tuned: usize,
    #[serde(rename = "t_raise_ns")]
    pub rise: f64,
    pub shape: RampShape,
    /// Longest hold; four periods of the static splitting when absent.
    #[serde(rename = "hold_stop_ns")]
    pub hold_stop: Option<f64>,
    pub hold_steps: usize,
    /// Chevron width around the resonance (GHz).
    #[serde(rename = "detuning_span_GHz")]
    pub detuning_span: f64,
    pub detuning_steps: usize,
    /// Explicit flux schedule; replaces the chevron when given.
    pub schedule: Option<PathBuf>,
}

impl Default for SwapSpec {
    fn default() -> Self {
        SwapSpec {
            excited: 1,
            tuned: 1,
            rise: 1.0,
            shape: RampShape::Linear,
            hold_stop: None,
            hold_steps: 121,
            detuning_span: 0.08,
            detuning_steps: 9,
            schedule: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisorderSpec {
    /// Defaults to the lattice's `disorder_sigma_GHz`.
    #[serde(rename = "sigma_GHz")]
    pub sigma: Option<f64>,
    pub realizations: usize,
}

impl Default for DisorderSpec {
    fn default() -> Self {
        DisorderSpec { sigma: None, realizations: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrateKerrSpec {
    /// CSV with columns `P_in_dBm, omega_GHz, re_S21, im_S21`.
    pub traces: Option<PathBuf>,
    #[serde(rename = "attenuation_dB")]
    pub attenuation_db: f64,
    pub cubic: CubicForm,
    pub branch: KerrBranch,
}

/// A complete run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: OutputSpec,
    pub lattice: LatticeParams,
    #[serde(default)]
    pub qubits: Vec<QubitParams>,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub band: BandSpec,
    #[serde(default)]
    pub transmission: TransmissionSpec,
    #[serde(default)]
    pub boundstate: BoundStateSpec,
    #[serde(default)]
    pub splitting: SplittingSpec,
    #[serde(default)]
    pub anharmonicity: AnharmonicitySpec,
    #[serde(default)]
    pub zz: ZzSpec,
    #[serde(default)]
    pub spectrum2ex: Spectrum2exSpec,
    #[serde(default)]
    pub swap: SwapSpec,
    #[serde(default)]
    pub disorder: DisorderSpec,
    #[serde(default)]
    pub calibrate_kerr: CalibrateKerrSpec,
    /// Directory that relative input paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Reported device parameters as a config fragment.
///
/// The next-nearest emitter couplings follow from the circuit's parasitic
/// capacitances.
pub fn preset_table1() -> toml::Table {
    let c = measured_device();
    let g2 = |i: usize, g: f64| parasitic_ratio(&c, i).map(|r| r * g).unwrap_or(0.0);
    let text = format!(
        r#"
[lattice]
N = 21
omega_r_GHz = 5.717
J_GHz = 0.249
J2_GHz = 0.038
kappa_edge_GHz = 0.012
kappa_nr_GHz = 0.0003
disorder_sigma_GHz = 0.025

[[qubits]]
omega_q_GHz = 6.322
beta_GHz = -0.266
g_GHz = 0.338
g2_GHz = {}
site = 10

[[qubits]]
omega_q_GHz = 6.606
beta_GHz = -0.257
g_GHz = 0.311
g2_GHz = {}
site = 12

[model]
next_nearest = false
gamma_q_GHz = [0.00005, 0.00005]
"#,
        g2(0, 0.338),
        g2(1, 0.311)
    );
    toml::from_str(&text).expect("preset is valid TOML")
}

/// Overlays `top` on `base`; tables merge key by key, everything else
/// (arrays included) is replaced.
pub fn merge(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Sets a dotted key such as `transmission.with_qubits`. A numeric part
/// indexes into an existing array, as in `qubits.1.omega_q_GHz`.
pub fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = path.split('.').collect();
    let bad = |why: &str| Error::Config(format!("cannot set `{path}`: {why}"));
    let mut node = table.entry(parts[0]).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    for p in &parts[1..] {
        if let toml::Value::Array(a) = node {
            let i: usize = p.parse().map_err(|_| bad("expected an array index"))?;
            let len = a.len();
            node = a.get_mut(i).ok_or_else(|| bad(&format!("index {i} out of {len}")))?;
            continue;
        }
        if !node.is_table() {
            *node = toml::Value::Table(toml::Table::new());
        }
        node = node
            .as_table_mut()
            .expect("just made a table")
            .entry(*p)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    *node = value;
    Ok(())
}

/// Replaces `preset = "table1"` by the full parameter set with `table`
/// overlaid. Tables without a preset are returned unchanged.
pub fn expand_preset(table: toml::Table) -> Result<toml::Table> {
    match table.get("preset").and_then(|v| v.as_str()) {
        None => Ok(table),
        Some("table1") => {
            let mut base = preset_table1();
            merge(&mut base, table);
            Ok(base)
        }
        Some(name) => Err(Error::invalid("preset", format!("unknown preset `{name}`"))),
    }
}

impl ScenarioConfig {
    /// Parses a config table, expanding `preset` first.
    pub fn from_table(table: toml::Table, base_dir: &Path) -> Result<Self> {
        let table = expand_preset(table)?;
        let mut cfg: ScenarioConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().trim().to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_table(table, base_dir)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, dir)
    }

    /// Preset parameters with default settings for `scenario`.
    pub fn preset(scenario: ScenarioKind) -> Result<Self> {
        let mut t = preset_table1();
        t.insert("preset".into(), "table1".into());
        t.insert("scenario".into(), scenario.name().into());
        Self::from_table(t, Path::new("."))
    }

    /// The Hamiltonian described by the lattice, emitter and model blocks.
    pub fn model(&self) -> HamiltonianModel {
        HamiltonianModel::new(self.lattice.clone(), self.qubits.clone()).with_next_nearest(self.model.next_nearest)
    }

    /// Emitter decay rates, one per emitter.
    pub fn gamma_q(&self) -> Vec<f64> {
        if self.model.gamma_q.is_empty() {
            vec![0.0; self.qubits.len()]
        } else {
            self.model.gamma_q.clone()
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// The sweep in force: the configured one or the scenario default.
    pub fn effective_sweep(&self) -> Option<SweepSpec> {
        if self.sweep.is_some() {
            return self.sweep.clone();
        }
        match self.scenario {
            ScenarioKind::Boundstate => {
                Some(SweepSpec::new(&format!("omega_q{}_GHz", self.boundstate.qubit + 1), 6.25, 7.5, 126))
            }
            ScenarioKind::Splitting => {
                let other = 1 - self.splitting.tuned.min(1);
                Some(SweepSpec::new(&format!("omega_q{}_GHz", other + 1), 6.0, 6.7, 36))
            }
            ScenarioKind::Anharmonicity => {
                Some(SweepSpec::new(&format!("omega_q{}_GHz", self.anharmonicity.qubit + 1), 6.35, 7.5, 47))
            }
            ScenarioKind::Zz => Some(SweepSpec::new("omega_q1_GHz", 6.3, 7.2, 46)),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.model();
        h.validate()?;
        let nq = self.qubits.len();
        if !self.model.gamma_q.is_empty() && self.model.gamma_q.len() != nq {
            return Err(Error::invalid("model.gamma_q_GHz", format!("expected {nq} entries")));
        }
        if let Some(s) = self.effective_sweep() {
            let values = s.values()?;
            let mut probe = h.clone();
            s.apply(&mut probe, values[0])?;
        }
        let need_qubit = |field: &str, i: usize| -> Result<()> {
            if i >= nq {
                Err(Error::invalid(field, format!("no emitter {i} (have {nq})")))
            } else {
                Ok(())
            }
        };
        match self.scenario {
            ScenarioKind::Band => {}
            ScenarioKind::Transmission => {
                let t = &self.transmission;
                if !(t.f_start < t.f_stop) || t.points < 2 {
                    return Err(Error::invalid("transmission.points", "need f_start < f_stop and at least 2 points"));
                }
                if let Some(c) = &t.crosstalk {
                    c.validate()?;
                }
                if let Some(p) = &t.power_sweep {
                    if p.powers_dbm.is_empty() || p.points < 2 || !(p.span > 0.0) {
                        return Err(Error::invalid(
                            "transmission.power_sweep",
                            "need powers, points >= 2 and span > 0",
                        ));
                    }
                    if p.noise > 0.0 && self.seed.is_none() {
                        return Err(Error::invalid("seed", "required when power_sweep.noise > 0"));
                    }
                }
            }
            ScenarioKind::Boundstate => need_qubit("boundstate.qubit", self.boundstate.qubit)?,
            ScenarioKind::Splitting => {
                if nq != 2 {
                    return Err(Error::invalid("qubits", "splitting needs exactly two emitters"));
                }
                need_qubit("splitting.tuned", self.splitting.tuned)?;
            }
            ScenarioKind::Anharmonicity => need_qubit("anharmonicity.qubit", self.anharmonicity.qubit)?,
            ScenarioKind::Zz => {
                if nq != 2 {
                    return Err(Error::invalid("qubits", "zz needs exactly two emitters"));
                }
            }
            ScenarioKind::Spectrum2ex => {}
            ScenarioKind::Swap => {
                let s = &self.swap;
                if s.schedule.is_none() {
                    need_qubit("swap.excited", s.excited)?;
                    need_qubit("swap.tuned", s.tuned)?;
                    if s.hold_steps < 8 || s.hold_stop.is_some_and(|t| !(t > 0.0)) || s.detuning_steps == 0 {
                        return Err(Error::invalid(
                            "swap.hold_steps",
                            "need at least 8 hold times and a positive range",
                        ));
                    }
                }
            }
            ScenarioKind::Disorder => {
                if self.seed.is_none() {
                    return Err(Error::invalid("seed", "required for the disorder scenario"));
                }
                if self.disorder.realizations == 0 {
                    return Err(Error::invalid("disorder.realizations", "must be at least 1"));
                }
            }
            ScenarioKind::CalibrateKerr => {
                if self.calibrate_kerr.traces.is_none() {
                    return Err(Error::invalid("calibrate_kerr.traces", "a trace file is required"));
                }
            }
        }
        Ok(())
    }
}
