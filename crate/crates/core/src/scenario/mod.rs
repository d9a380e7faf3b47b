//! Config-driven runs: parse a TOML scenario, evaluate it, and write
//! plot-ready tables with a manifest.

mod config;
mod output;
mod run;

pub use config::{
    expand_preset, merge, preset_table1, set_path, AnharmonicitySpec, BandSpec, BoundStateSpec, CalibrateKerrSpec,
    DisorderSpec, ModelSpec, OutputFormat, OutputSpec, PowerSweepSpec, ScenarioConfig, ScenarioKind, Spectrum2exSpec,
    SplittingSpec, SwapSpec, SweepSpec, TransmissionSpec, ZzSpec,
};
pub use output::{version, write_json, Cell, Manifest, ScenarioOutput, Table};
pub use run::{execute, read_kerr_traces, run, RunReport};

use crate::error::Error;

/// Process exit status for an error: 2 for bad input, 3 for numerical trouble.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter { .. } | Error::Config(_) | Error::Io(_) => 2,
        Error::Domain(_)
        | Error::NoBoundState { .. }
        | Error::Calibration(_)
        | Error::DimensionOverflow { .. }
        | Error::Integration { .. }
        | Error::Numerical(_)
        | Error::NotFound(_) => 3,
    }
}
