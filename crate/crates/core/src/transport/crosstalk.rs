use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::TransmissionTrace;
use crate::error::{Error, Result};

/// How the direct path and the bypass are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    /// `(1-ε) S21 + ε e^{iθ}`
    #[default]
    Convex,
    /// `√(1-ε²) S21 + ε e^{iθ}`
    PowerConserving,
}

/// Direct electromagnetic bypass between the input and output lines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrosstalkModel {
    pub epsilon: f64,
    /// Bypass phase (rad).
    #[serde(rename = "theta_rad")]
    pub theta: f64,
    #[serde(default)]
    pub combiner: Combiner,
}

impl CrosstalkModel {
    /// Fit values reported for the measured setup.
    pub fn measured_setup() -> Self {
        CrosstalkModel { epsilon: 0.22, theta: 0.34 * std::f64::consts::PI, combiner: Combiner::Convex }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::invalid("epsilon", format!("must lie in [0, 1), got {}", self.epsilon)));
        }
        if !self.theta.is_finite() {
            return Err(Error::invalid("theta", "must be finite"));
        }
        Ok(())
    }

    pub fn apply(&self, s21: Complex64) -> Complex64 {
        let w = match self.combiner {
            Combiner::Convex => 1.0 - self.epsilon,
            Combiner::PowerConserving => (1.0 - self.epsilon * self.epsilon).sqrt(),
        };
        s21 * w + Complex64::from_polar(self.epsilon, self.theta)
    }
}

/// Adds the bypass to every point of `t`.
pub fn apply_crosstalk(t: &TransmissionTrace, c: &CrosstalkModel) -> Result<TransmissionTrace> {
    c.validate()?;
    let mut out = t.clone();
    out.s21 = t.s21.iter().map(|&s| c.apply(s)).collect();
    out.crosstalk = Some(*c);
    Ok(out)
}
