//! Analytic bound states of one and two emitters coupled to a finite
//! nearest-neighbour chain.
//!
//! Energies `e` below are measured from the band centre `ω_r` (GHz). The
//! chain resolvent is available in closed form outside the band, both for
//! the finite open chain and for the infinite chain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeParams;
use crate::roots::brent;
use crate::spectra::QubitParams;

/// Offset from the band edge where the root search starts (GHz).
pub const EDGE_EPSILON: f64 = 1e-9;

/// Which resonator environment enters the self-energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelfEnergyModel {
    /// Open chain of `N` sites.
    #[default]
    Finite,
    /// Infinite chain.
    Continuum,
}

/// Side of the band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandSide {
    #[default]
    Above,
    Below,
}

impl BandSide {
    pub fn sign(self) -> f64 {
        match self {
            BandSide::Above => 1.0,
            BandSide::Below => -1.0,
        }
    }
}

/// Inverse localization length `arccosh(|e|/2J)` (1/sites).
fn decay_rate(e: f64, j: f64) -> Result<f64> {
    let r = e.abs() / (2.0 * j);
    if !(r > 1.0) {
        return Err(Error::Domain(format!(
            "|ω - ω_r| = {:.6e} GHz is inside the band (2J = {:.6e})",
            e.abs(),
            2.0 * j
        )));
    }
    Ok(r.acosh())
}

/// Localization length in sites.
pub fn localization_length(e: f64, j: f64) -> Result<f64> {
    Ok(1.0 / decay_rate(e, j)?)
}

/// Chain resolvent element `G_xy(e) = [(e - H)^-1]_xy`, sites 1-based.
pub fn green(e: f64, j: f64, n: usize, x: usize, y: usize, model: SelfEnergyModel) -> Result<f64> {
    let mu = decay_rate(e, j)?;
    let dist = x.abs_diff(y);
    // 2J sinh(mu) = sqrt(e^2 - 4J^2)
    let root = (e * e - 4.0 * j * j).sqrt();
    let magnitude = match model {
        SelfEnergyModel::Continuum => (-(dist as f64) * mu).exp() / root,
        SelfEnergyModel::Finite => {
            let lo = x.min(y) as f64;
            let hi = x.max(y) as f64;
            let n1 = n as f64 + 1.0;
            let num = (-(2.0 * lo * mu)).exp_m1() * (-(2.0 * (n1 - hi) * mu)).exp_m1();
            let den = -(-(2.0 * n1 * mu)).exp_m1();
            (-(dist as f64) * mu).exp() * num / (root * den)
        }
    };
    if e > 0.0 {
        Ok(magnitude)
    } else if dist.is_multiple_of(2) {
        Ok(-magnitude)
    } else {
        Ok(magnitude)
    }
}

/// `-dG_xy/de = Σ_z G_xz G_zy`, sites 1-based.
pub fn green_derivative(e: f64, j: f64, n: usize, x: usize, y: usize, model: SelfEnergyModel) -> Result<f64> {
    match model {
        SelfEnergyModel::Finite => {
            let mut s = 0.0;
            for z in 1..=n {
                s += green(e, j, n, x, z, model)? * green(e, j, n, z, y, model)?;
            }
            Ok(s)
        }
        SelfEnergyModel::Continuum => {
            let mu = decay_rate(e, j)?;
            let d = x.abs_diff(y) as f64;
            let q = e * e - 4.0 * j * j;
            let mag = (-d * mu).exp() * (d / q + e.abs() / q.powf(1.5));
            // Below the band the sublattice sign flips odd distances.
            let odd = x.abs_diff(y) % 2 == 1;
            Ok(if e < 0.0 && odd { -mag } else { mag })
        }
    }
}

/// Self-energy `g² G_xx(e)` of an emitter on site `x_q`.
pub fn self_energy(e: f64, g: f64, j: f64, n: usize, x_q: usize, model: SelfEnergyModel) -> Result<f64> {
    check_site(n, x_q)?;
    Ok(g * g * green(e, j, n, x_q, x_q, model)?)
}

fn check_site(n: usize, x: usize) -> Result<()> {
    if x < 1 || x > n {
        return Err(Error::invalid("x_q", format!("site {x} outside 1..={n}")));
    }
    Ok(())
}

/// Whether a bound state exists on `side` for a single emitter on a finite chain.
pub fn existence_check(g: f64, j: f64, n: usize, x_q: usize, delta: f64, side: BandSide) -> bool {
    let n1 = n as f64 + 1.0;
    let x = x_q as f64;
    let rhs = j * n1 * (2.0 * j - side.sign() * delta) / (x * (n1 - x));
    g * g > rhs
}

/// One-emitter bound state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundStateSolution {
    /// Lab-frame frequency (GHz).
    pub omega_bs: f64,
    /// `ω_q - ω_r` (GHz).
    pub delta: f64,
    /// Localization length (sites).
    pub lambda: f64,
    /// Mixing angle; `cos²θ` is the emitter weight.
    pub theta: f64,
    pub side: BandSide,
    /// Photonic amplitudes on sites `1..=N`, emitter amplitude taken positive.
    pub cloud: Vec<f64>,
    pub site: usize,
    /// `|e - δ - Σ(e)|` at the returned root (GHz).
    pub residual: f64,
    pub model: SelfEnergyModel,
}

impl BoundStateSolution {
    /// Emitter weight `cos²θ`.
    pub fn atomic_weight(&self) -> f64 {
        self.theta.cos().powi(2)
    }
}

fn search_span(g: f64, delta: f64, j: f64) -> f64 {
    10.0 * g.abs().max(delta.abs()).max(j)
}

/// Solves `e - δ = Σ(e)` outside the band for one emitter.
pub fn solve_single_bs(
    q: &QubitParams,
    p: &LatticeParams,
    side: BandSide,
    model: SelfEnergyModel,
) -> Result<BoundStateSolution> {
    p.validate()?;
    check_site(p.n_sites, q.site)?;
    let (j, n, x, g) = (p.j, p.n_sites, q.site, q.g);
    let delta = q.omega_q - p.omega_r;
    let s = side.sign();
    let f = |e: f64| e - delta - g * g * green(e, j, n, x, x, model).unwrap_or(f64::NAN);
    let near = s * (2.0 * j + EDGE_EPSILON);
    let mut far = s * (2.0 * j + search_span(g, delta, j));
    let f_near = f(near);
    if !(s * f_near < 0.0) {
        return Err(Error::NoBoundState { lo: p.omega_r + near.min(far), hi: p.omega_r + near.max(far) });
    }
    let mut grow = 0;
    while s * f(far) <= 0.0 {
        far *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::Numerical("could not bracket bound state".into()));
        }
    }
    let e = brent(f, near, far, 1e-15, 0.0, 400)?;
    let residual = f(e).abs();
    if residual > 1e-12 {
        return Err(Error::Numerical(format!("bound-state residual {residual:e} GHz")));
    }
    let sigma_prime = -g * g * green_derivative(e, j, n, x, x, model)?;
    let cos2 = 1.0 / (1.0 - sigma_prime);
    let cos = cos2.sqrt();
    let cloud = (1..=n).map(|y| Ok(cos * g * green(e, j, n, y, x, model)?)).collect::<Result<Vec<_>>>()?;
    Ok(BoundStateSolution {
        omega_bs: p.omega_r + e,
        delta,
        lambda: 1.0 / decay_rate(e, j)?,
        theta: cos.clamp(0.0, 1.0).acos(),
        side,
        cloud,
        site: x,
        residual,
        model,
    })
}

/// Reduced Rabi rate `Ω cos θ` of a bound state.
pub fn drive_rate_scaling(bs: &BoundStateSolution, omega_r0: f64) -> f64 {
    omega_r0 * bs.theta.cos()
}

/// Even/odd bound states of two emitters above the band.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoAtomBoundStates {
    pub omega_plus: Option<f64>,
    pub omega_minus: Option<f64>,
    /// Ratio of second to first emitter amplitude, even state.
    pub xi_plus: Option<f64>,
    /// Ratio of second to first emitter amplitude, odd state.
    pub xi_minus: Option<f64>,
    pub theta_plus: Option<f64>,
    pub theta_minus: Option<f64>,
    pub lambda_plus: Option<f64>,
    pub lambda_minus: Option<f64>,
    pub melted_plus: bool,
    pub melted_minus: bool,
    /// Half the splitting; measured to the band edge when the odd state melted.
    pub u: Option<f64>,
    /// `ω_- + U/2`, the edge replacing `ω_-` when melted.
    pub omega_mid: Option<f64>,
    pub model: SelfEnergyModel,
}

struct Pair<'a> {
    j: f64,
    n: usize,
    x: [usize; 2],
    g: [f64; 2],
    d: [f64; 2],
    model: SelfEnergyModel,
    _p: &'a LatticeParams,
}

impl Pair<'_> {
    /// Effective emitter matrix `diag(δ) + g_i g_j G_ij(e)`.
    fn matrix(&self, e: f64) -> Result<[[f64; 2]; 2]> {
        let g11 = green(e, self.j, self.n, self.x[0], self.x[0], self.model)?;
        let g22 = green(e, self.j, self.n, self.x[1], self.x[1], self.model)?;
        let g12 = green(e, self.j, self.n, self.x[0], self.x[1], self.model)?;
        Ok([
            [self.d[0] + self.g[0] * self.g[0] * g11, self.g[0] * self.g[1] * g12],
            [self.g[0] * self.g[1] * g12, self.d[1] + self.g[1] * self.g[1] * g22],
        ])
    }

    fn eig(m: [[f64; 2]; 2], upper: bool) -> (f64, [f64; 2]) {
        let (a, b, c) = (m[0][0], m[0][1], m[1][1]);
        let mean = 0.5 * (a + c);
        let rad = (0.25 * (a - c).powi(2) + b * b).sqrt();
        let mu = if upper { mean + rad } else { mean - rad };
        // Eigenvector from the better-conditioned row.
        let v = if (a - mu).abs() + b.abs() >= (c - mu).abs() + b.abs() && (b != 0.0 || a != mu) {
            [b, mu - a]
        } else {
            [mu - c, b]
        };
        let v = if v[0] == 0.0 && v[1] == 0.0 {
            if (a >= c) == upper {
                [1.0, 0.0]
            } else {
                [0.0, 1.0]
            }
        } else {
            v
        };
        let nrm = (v[0] * v[0] + v[1] * v[1]).sqrt();
        let sgn = if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) { -1.0 } else { 1.0 };
        (mu, [sgn * v[0] / nrm, sgn * v[1] / nrm])
    }

    fn branch(&self, e: f64, upper: bool) -> Result<f64> {
        Ok(e - Self::eig(self.matrix(e)?, upper).0)
    }

    fn root(&self, upper: bool) -> Result<Option<f64>> {
        let near = 2.0 * self.j + EDGE_EPSILON;
        if self.branch(near, upper)? >= 0.0 {
            return Ok(None);
        }
        let span = self.d[0].abs().max(self.d[1].abs()).max(self.g[0]).max(self.g[1]).max(self.j);
        let mut far = 2.0 * self.j + 10.0 * span;
        let mut k = 0;
        while self.branch(far, upper)? <= 0.0 {
            far *= 2.0;
            k += 1;
            if k > 60 {
                return Err(Error::Numerical("could not bracket two-emitter root".into()));
            }
        }
        let e = brent(|e| self.branch(e, upper).unwrap_or(f64::NAN), near, far, 1e-15, 0.0, 400)?;
        Ok(Some(e))
    }

    fn state(&self, e: f64, upper: bool) -> Result<(f64, f64, f64)> {
        let (_, c) = Self::eig(self.matrix(e)?, upper);
        let xi = if c[0] != 0.0 { c[1] / c[0] } else { f64::INFINITY };
        let mut quad = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let dg = green_derivative(e, self.j, self.n, self.x[a], self.x[b], self.model)?;
                quad += c[a] * c[b] * self.g[a] * self.g[b] * dg;
            }
        }
        let cos2 = 1.0 / (1.0 + quad);
        Ok((xi, cos2.sqrt().clamp(0.0, 1.0).acos(), 1.0 / decay_rate(e, self.j)?))
    }
}

/// Solves the two-emitter problem above the band.
///
/// Each branch solves `e = μ±(e)` where `μ±` are the eigenvalues of the
/// effective emitter matrix at the running energy. Both branches are
/// monotone, so each has at most one root above the edge.
pub fn solve_two_atom_bs(
    q1: &QubitParams,
    q2: &QubitParams,
    p: &LatticeParams,
    model: SelfEnergyModel,
) -> Result<TwoAtomBoundStates> {
    p.validate()?;
    check_site(p.n_sites, q1.site)?;
    check_site(p.n_sites, q2.site)?;
    if q1.site == q2.site {
        return Err(Error::invalid("x_q", "emitters must couple to distinct sites"));
    }
    let pair = Pair {
        j: p.j,
        n: p.n_sites,
        x: [q1.site, q2.site],
        g: [q1.g, q2.g],
        d: [q1.omega_q - p.omega_r, q2.omega_q - p.omega_r],
        model,
        _p: p,
    };
    let plus = pair.root(true)?;
    let minus = pair.root(false)?;
    let sp = plus.map(|e| pair.state(e, true)).transpose()?;
    let sm = minus.map(|e| pair.state(e, false)).transpose()?;
    let edge = 2.0 * p.j;
    let u = plus.map(|ep| 0.5 * (ep - minus.unwrap_or(edge)));
    let omega_mid = u.map(|u| p.omega_r + minus.unwrap_or(edge) + 0.5 * u);
    Ok(TwoAtomBoundStates {
        omega_plus: plus.map(|e| p.omega_r + e),
        omega_minus: minus.map(|e| p.omega_r + e),
        xi_plus: sp.map(|s| s.0),
        xi_minus: sm.map(|s| s.0),
        theta_plus: sp.map(|s| s.1),
        theta_minus: sm.map(|s| s.1),
        lambda_plus: sp.map(|s| s.2),
        lambda_minus: sm.map(|s| s.2),
        melted_plus: plus.is_none(),
        melted_minus: minus.is_none(),
        u,
        omega_mid,
        model,
    })
}

/// Infinite-chain criterion for the odd two-emitter state to exist above
/// the band, `d g1² g2² > J ((2J - δ1) g2² + (2J - δ2) g1²)` with `d` the
/// separation. For equal couplings this is `g² > J (4J - δ1 - δ2)/d`.
pub fn melting_condition(g1: f64, g2: f64, j: f64, delta1: f64, delta2: f64, separation: usize) -> bool {
    let (a, b) = (g1 * g1, g2 * g2);
    separation as f64 * a * b > j * ((2.0 * j - delta1) * b + (2.0 * j - delta2) * a)
}

/// Closed-form mixing angle of the symmetric two-emitter states on the
/// infinite chain, `cos θ± = (1 + g² N±²/(4J² sinh²(1/λ)))^(-1/2)`, with
/// `N±² = coth(1/λ)(1 ± e^(-d/λ)) ± d e^(-d/λ)`.
pub fn symmetric_pair_mixing_angle(g: f64, j: f64, e: f64, separation: usize, even: bool) -> Result<f64> {
    let mu = decay_rate(e, j)?;
    let d = separation as f64;
    let s = if even { 1.0 } else { -1.0 };
    let ed = (-d * mu).exp();
    let n2 = (1.0 / mu.tanh()) * (1.0 + s * ed) + s * d * ed;
    let c = (1.0 + g * g * n2 / (4.0 * j * j * mu.sinh().powi(2))).powf(-0.5);
    Ok(c.acos())
}

/// Dispersive exchange matrix of resonant emitters,
/// `H_ij = g_i g_j e^(-|x_i - x_j|/λ)/δ_e` with `δ_e = ω_q - ω_r - 2J`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveSpin {
    pub matrix: Vec<Vec<f64>>,
    pub lambda: f64,
    /// `δ_e / max g`; below 3 the dispersive expansion is unreliable.
    pub dispersive_ratio: f64,
}

pub fn effective_spin_hamiltonian(qubits: &[QubitParams], p: &LatticeParams) -> Result<EffectiveSpin> {
    p.validate()?;
    let Some(first) = qubits.first() else {
        return Err(Error::invalid("qubits", "at least one emitter required"));
    };
    let w = first.omega_q;
    if qubits.iter().any(|q| (q.omega_q - w).abs() > 1e-12 * w.abs().max(1.0)) {
        return Err(Error::invalid("omega_q_GHz", "emitters must be mutually resonant"));
    }
    let delta_e = w - p.omega_r - 2.0 * p.j;
    if delta_e <= 0.0 {
        return Err(Error::Domain("emitters must sit above the band".into()));
    }
    let lambda = localization_length(w - p.omega_r, p.j)?;
    let gmax = qubits.iter().map(|q| q.g.abs()).fold(0.0, f64::max);
    let ratio = delta_e / gmax;
    if ratio < 3.0 {
        log::warn!("dispersive ratio {ratio:.2} < 3; effective spin model is approximate");
    }
    let matrix = qubits
        .iter()
        .map(|a| {
            qubits.iter().map(|b| a.g * b.g * (-(a.site.abs_diff(b.site) as f64) / lambda).exp() / delta_e).collect()
        })
        .collect();
    Ok(EffectiveSpin { matrix, lambda, dispersive_ratio: ratio })
}
