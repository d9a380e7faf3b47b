//! Steady-state transmission through the chain, cross-talk
//! post-processing, and the single-mode Kerr response used for
//! photon-number calibration.

mod crosstalk;
mod fit;
mod kerr;
mod linear;

pub use crosstalk::{apply_crosstalk, Combiner, CrosstalkModel};
pub use fit::{fit_kerr, synthetic_traces, KerrFit, KerrFitOptions, KerrTrace};
pub use kerr::{kerr_response, real_cubic_roots, CubicForm, KerrBranch, KerrPoint, KerrResponse};
pub use linear::{transmission_linear, transmission_reverse, TraceMetadata, TransmissionTrace};
