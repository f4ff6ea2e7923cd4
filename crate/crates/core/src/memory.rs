//! Random memory terms of the pullback manifolds.
//!
//! `M_n(θ_t ω) = ∫_{-∞}^0 exp(g s + (k-1)σ (W_{t+s} - W_t)) ds` is the
//! stationary solution of `dM = (1 - gM) dt - (k-1)σ M ∘ dW`. The
//! second-order terms `N₂, N₃, N₄` of the two-layer manifold come from a
//! backward-forward pair of such equations.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::model::{sigma_bounds, BurgersModel};
use crate::noise::NoiseRealization;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemorySpec {
    /// Spectral gap `g`.
    pub g: f64,
    /// Degree `k` of the monomial the memory term multiplies.
    pub k: usize,
    pub sigma: f64,
}

impl MemorySpec {
    pub fn new(g: f64, k: usize, sigma: f64) -> Result<Self> {
        if !(g > 0.0) {
            return Err(Error::Gap { label: "g".into(), value: g });
        }
        if k < 1 {
            return Err(param("k", "monomial degree must be at least 1"));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(param("sigma", format!("must be non-negative, got {sigma}")));
        }
        Ok(Self { g, k, sigma })
    }

    /// Noise amplitude `(k-1)σ` of the memory equation.
    pub fn kappa(&self) -> f64 {
        (self.k - 1) as f64 * self.sigma
    }

    /// Decay rate `g - (k-1)²σ²/2` of the mean and autocorrelation.
    pub fn relaxation_rate(&self) -> f64 {
        self.g - 0.5 * self.kappa().powi(2)
    }
}

/// Values of a stationary memory term along a noise path.
#[derive(Debug, Clone, Serialize)]
pub struct MemoryProcess {
    pub spec: MemorySpec,
    start: i64,
    values: Vec<f64>,
    /// Set when the discarded spin-up is shorter than the relaxation time requires.
    pub warning: Option<String>,
}

impl MemoryProcess {
    pub fn start(&self) -> i64 {
        self.start
    }
    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64 - 1
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn at(&self, k: i64) -> Result<f64> {
        if k < self.start || k > self.end() {
            return Err(Error::Range { index: k, lo: self.start, hi: self.end() });
        }
        Ok(self.values[(k - self.start) as usize])
    }
    /// Unchecked lookup for hot loops.
    #[inline]
    pub fn get(&self, k: i64) -> f64 {
        self.values[(k - self.start) as usize]
    }
}

/// Integrates the memory SDE from `1/g` at the left end of the path with the
/// semi-implicit scheme
/// `M ← (M + (1 + κ²M/2)dt - κM√dt ζ)/(1 + g dt)`, `κ = (k-1)σ`,
/// dropping the first `spinup_steps` values.
pub fn mn_stationary(spec: &MemorySpec, path: &NoiseRealization, spinup_steps: usize) -> Result<MemoryProcess> {
    let spec = MemorySpec::new(spec.g, spec.k, spec.sigma)?;
    let total = path.n_past() + path.n_future();
    if spinup_steps > total {
        return Err(param("spinup_steps", format!("{spinup_steps} exceeds path length {total}")));
    }
    let dt = path.dt();
    let sq = dt.sqrt();
    let kap = spec.kappa();
    let rate = spec.relaxation_rate();
    let warning = if rate <= 0.0 || (-rate * spinup_steps as f64 * dt).exp() > 1e-8 {
        Some(format!("spin-up of {} time units is short for relaxation rate {rate:.4}", spinup_steps as f64 * dt))
    } else {
        None
    };
    let mut m = 1.0 / spec.g;
    let mut values = Vec::with_capacity(total + 1 - spinup_steps);
    let denom = 1.0 + spec.g * dt;
    for (j, &z) in path.increments().iter().enumerate() {
        if j >= spinup_steps {
            values.push(m);
        }
        m = (m + (1.0 + 0.5 * kap * kap * m) * dt - kap * m * sq * z) / denom;
    }
    values.push(m);
    Ok(MemoryProcess { spec, start: path.lo() + spinup_steps as i64, values, warning })
}

/// Trapezoidal value of `∫_{-T}^0 exp(g s + (k-1)σ(W_{t+s} - W_t)) ds` at grid index `t`.
pub fn mn_direct_integral(spec: &MemorySpec, path: &NoiseRealization, t: i64, horizon: f64) -> Result<f64> {
    let spec = MemorySpec::new(spec.g, spec.k, spec.sigma)?;
    if !(horizon > 0.0) {
        return Err(param("horizon", "must be positive"));
    }
    let dt = path.dt();
    let steps = (horizon / dt).round() as i64;
    path.check_index(t)?;
    path.check_index(t - steps)?;
    let wt = path.w_unchecked(t);
    let kap = spec.kappa();
    let f = |j: i64| (-spec.g * j as f64 * dt + kap * (path.w_unchecked(t - j) - wt)).exp();
    let mut s = 0.5 * (f(0) + f(steps));
    for j in 1..steps {
        s += f(j);
    }
    Ok(s * dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MnMoments {
    pub mean: f64,
    /// Infinite when `σ ≥ σ_#`.
    pub variance: f64,
    /// Exponential decay rate of the autocorrelation.
    pub acf_rate: f64,
}

/// Exact stationary moments of `M_n`.
pub fn mn_moments(g: f64, k: usize, sigma: f64) -> Result<MnMoments> {
    let spec = MemorySpec::new(g, k, sigma)?;
    let (s_star, s_sharp) = sigma_bounds(g, k)?;
    if sigma >= s_star {
        return Err(Error::Statistics(format!("mean is infinite for σ = {sigma} ≥ σ_* = {s_star}")));
    }
    let a = spec.kappa().powi(2);
    let rate = g - 0.5 * a;
    let variance = if sigma >= s_sharp { f64::INFINITY } else { a / (2.0 * rate * rate * (g - a)) };
    Ok(MnMoments { mean: 1.0 / rate, variance, acf_rate: rate })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NVariant {
    N2,
    N3,
    N4,
}

/// `y ← (y - f dt)/(1 + (b + s²/2)dt + s√dt ζ)`: one backward step of
/// `dy = (b y + f) ds + s y ∘ dW`.
#[inline]
#[allow(clippy::too_many_arguments)]
pub(crate) fn backward_step(y: f64, b: f64, f: f64, s: f64, dt: f64, sq: f64, zeta: f64, step: i64) -> Result<f64> {
    let d = 1.0 + (b + 0.5 * s * s) * dt + s * sq * zeta;
    if d <= 0.0 {
        return Err(Error::Divergence { step, what: format!("backward denominator {d} crossed zero") });
    }
    Ok((y - f * dt) / d)
}

/// `y ← y + ((b + s²/2) y + f) dt + s y √dt ζ`: one forward step of the same equation.
#[inline]
pub(crate) fn forward_step(y: f64, b: f64, f: f64, s: f64, dt: f64, sq: f64, zeta: f64) -> f64 {
    y + ((b + 0.5 * s * s) * y + f) * dt + s * y * sq * zeta
}

/// `M(s)` on `[t-T, t]` for `dM = (1 - βM)ds - σM∘dW`, `M(t) = 0`; entry `p` is index `t-p`.
fn backward_memory(beta: f64, sigma: f64, path: &NoiseRealization, t: i64, n: usize) -> Result<Vec<f64>> {
    let dt = path.dt();
    let sq = dt.sqrt();
    let mut out = Vec::with_capacity(n + 1);
    let mut m = 0.0;
    out.push(m);
    for p in 1..=n as i64 {
        m = backward_step(m, -beta, 1.0, -sigma, dt, sq, path.zeta(t - p), t - p)?;
        out.push(m);
    }
    Ok(out)
}

/// Second-order memory terms of the two-layer manifold, by integrating
/// the memory equation backward from `t` over `T` and the `N` equation forward.
pub fn n_term(variant: NVariant, model: &BurgersModel, path: &NoiseRealization, t: i64, horizon: f64) -> Result<f64> {
    model.require_two_modes()?;
    let nr2 = model.check_nr2();
    let b = |n| model.beta(n);
    let need: &[&str] = match variant {
        NVariant::N2 => &["β1+β2-β3", "β1+2β2-β3"],
        NVariant::N3 => &["β1+β2-β3", "3β1-β3"],
        NVariant::N4 => &["β1+β2-β3", "3β1-β3", "3β1+β2-β3"],
    };
    for (label, g) in nr2.gaps.iter().filter(|(l, _)| need.contains(&l.as_str())) {
        if *g <= 0.0 {
            return Err(Error::Gap { label: label.clone(), value: *g });
        }
    }
    if !(horizon > 0.0) {
        return Err(param("horizon", "must be positive"));
    }
    let dt = path.dt();
    let sq = dt.sqrt();
    let n = (horizon / dt).round() as usize;
    path.check_index(t)?;
    path.check_index(t - n as i64)?;
    let sigma = model.sigma;
    let (decay, noise, forcing): (f64, f64, Vec<f64>) = match variant {
        NVariant::N2 => {
            let m = backward_memory(b(2), sigma, path, t, n)?;
            (b(1) + 2.0 * b(2) - b(3), -2.0 * sigma, m.into_iter().map(|v| -v).collect())
        }
        NVariant::N3 => {
            let m = backward_memory(2.0 * b(1) - b(2), sigma, path, t, n)?;
            (3.0 * b(1) - b(3), -2.0 * sigma, m.into_iter().map(|v| -v).collect())
        }
        NVariant::N4 => {
            let m1 = backward_memory(b(2), sigma, path, t, n)?;
            let m2 = backward_memory(2.0 * b(1) - b(2), sigma, path, t, n)?;
            (3.0 * b(1) + b(2) - b(3), -3.0 * sigma, m1.iter().zip(&m2).map(|(a, c)| a * c).collect())
        }
    };
    let start = t - n as i64;
    let mut y = 0.0;
    for p in 1..=n {
        // forcing at index start + p - 1, i.e. backward entry n - (p - 1)
        y = forward_step(y, -decay, forcing[n - (p - 1)], noise, dt, sq, path.zeta(start + p as i64 - 1));
    }
    Ok(y)
}
