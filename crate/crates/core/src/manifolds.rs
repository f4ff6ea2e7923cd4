//! Parameterizing manifolds `h(ξ, θ_t ω)` for the unresolved modes.
//!
//! There are several routes to a manifold value:
//! * the one-layer manifold `ĥ^(1)` in closed form, from memory terms;
//! * the generic quadratic expansion for any [`SpectralModel`];
//! * the finite-horizon `q`-layer backward-forward pullback;
//! * a quadrature oracle for the two-layer pullback;
//! * the deterministic (`σ = 0`) limit.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::memory::MemoryProcess;
use crate::model::{BurgersModel, SpectralModel};
use crate::noise::NoiseRealization;

/// Coefficients of a manifold value on consecutive unresolved modes starting at `first`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmValue {
    pub first: usize,
    pub coeffs: Vec<f64>,
}

impl PmValue {
    pub fn burgers(c3: f64, c4: f64) -> Self {
        Self { first: 3, coeffs: vec![c3, c4] }
    }
    pub fn zero(first: usize) -> Self {
        Self { first, coeffs: Vec::new() }
    }
    /// Coefficient on `e_n`; zero outside the stored range.
    pub fn get(&self, n: usize) -> f64 {
        n.checked_sub(self.first).and_then(|i| self.coeffs.get(i)).copied().unwrap_or(0.0)
    }
    pub fn c3(&self) -> f64 {
        self.get(3)
    }
    pub fn c4(&self) -> f64 {
        self.get(4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PullbackConfig {
    /// Number of resolved layers `q ≥ 1`.
    pub q: usize,
    /// Pullback horizon `τ`.
    pub tau: f64,
    pub dt: f64,
}

impl PullbackConfig {
    pub fn new(q: usize, tau: f64, dt: f64) -> Result<Self> {
        let c = Self { q, tau, dt };
        c.steps()?;
        Ok(c)
    }

    pub fn steps(&self) -> Result<usize> {
        if self.q == 0 {
            return Err(param("q", "need at least one layer"));
        }
        if !(self.dt > 0.0) || !(self.tau > 0.0) {
            return Err(param("tau", "horizon and step must be positive"));
        }
        let r = self.tau / self.dt;
        let n = r.round();
        if (r - n).abs() > 1e-6 * r.max(1.0) {
            return Err(param("tau", format!("τ/dt = {r} is not an integer")));
        }
        Ok(n as usize)
    }
}

fn require_nr(model: &BurgersModel) -> Result<()> {
    model.check_nr().require()
}

/// `ĥ^(1)` for Burgers with `m = 2`, given the memory values `M₃^{12}`, `M₄^{22}`.
pub fn h1_analytic(model: &BurgersModel, xi: [f64; 2], m3: f64, m4: f64) -> Result<PmValue> {
    model.require_two_modes()?;
    require_nr(model)?;
    let c = model.c();
    Ok(PmValue::burgers(-3.0 * c * m3 * xi[0] * xi[1], -2.0 * c * m4 * xi[1] * xi[1]))
}

/// Lookup `(n, i1, i2) ↦ M_n^{i1 i2}` for the generic expansions.
pub type MemoryTable<'a> = &'a dyn Fn(usize, usize, usize) -> Option<f64>;

fn unresolved_range(model: &dyn SpectralModel) -> Result<(usize, usize)> {
    let m = model.resolved();
    let top = model
        .support()
        .ok_or_else(|| Error::Assembly("model has unbounded interaction support; supply a cutoff".into()))?;
    Ok((m + 1, top))
}

/// `c_n = Σ ξ_{i1} ξ_{i2} ⟨B(e_{i1}, e_{i2}), e_n⟩ M_n^{i1 i2}` over resolved pairs.
pub fn h1_generic(model: &dyn SpectralModel, xi: &[f64], table: MemoryTable) -> Result<PmValue> {
    let m = model.resolved();
    if xi.len() != m {
        return Err(Error::Shape { expected: m, got: xi.len() });
    }
    let (lo, hi) = unresolved_range(model)?;
    let mut coeffs = vec![0.0; hi + 1 - lo];
    for n in lo..=hi {
        for i1 in 1..=m {
            for i2 in 1..=m {
                let b = model.interaction(i1, i2, n);
                if b == 0.0 {
                    continue;
                }
                let g = model.eigenvalue(i1) + model.eigenvalue(i2) - model.eigenvalue(n);
                if g <= 0.0 {
                    return Err(Error::Gap { label: format!("β{i1}+β{i2}-β{n}"), value: g });
                }
                let mv = table(n, i1, i2).ok_or_else(|| Error::Assembly(format!("missing M_{n}^{{{i1}{i2}}}")))?;
                coeffs[n - lo] += xi[i1 - 1] * xi[i2 - 1] * b * mv;
            }
        }
    }
    Ok(PmValue { first: lo, coeffs })
}

/// `σ = 0` manifold `c_n = Σ ξ_{i1} ξ_{i2} ⟨B(e_{i1}, e_{i2}), e_n⟩ / (β_{i1}+β_{i2}-β_n)`.
pub fn h_deterministic_limit(model: &dyn SpectralModel, xi: &[f64]) -> Result<PmValue> {
    let m = model.resolved();
    if xi.len() != m {
        return Err(Error::Shape { expected: m, got: xi.len() });
    }
    let (lo, hi) = unresolved_range(model)?;
    let mut coeffs = vec![0.0; hi + 1 - lo];
    for n in lo..=hi {
        for i1 in 1..=m {
            for i2 in 1..=m {
                let b = model.interaction(i1, i2, n);
                if b == 0.0 {
                    continue;
                }
                let g = model.eigenvalue(i1) + model.eigenvalue(i2) - model.eigenvalue(n);
                if g == 0.0 {
                    return Err(Error::Resonance(format!("β{i1}+β{i2}-β{n}")));
                }
                coeffs[n - lo] += xi[i1 - 1] * xi[i2 - 1] * b / g;
            }
        }
    }
    Ok(PmValue { first: lo, coeffs })
}

/// Reusable buffers for the backward-forward pullback.
pub struct Pullback<'a> {
    model: BurgersModel,
    path: &'a NoiseRealization,
    cfg: PullbackConfig,
    n: usize,
    d1: Vec<f64>,
    d2: Vec<f64>,
    a: [Vec<f64>; 2],
    b: [Vec<f64>; 2],
}

impl<'a> Pullback<'a> {
    pub fn new(model: &BurgersModel, path: &'a NoiseRealization, cfg: PullbackConfig) -> Result<Self> {
        model.require_two_modes()?;
        let n = cfg.steps()?;
        if (path.dt() - cfg.dt).abs() > 1e-15 * cfg.dt {
            return Err(param("dt", "pullback step differs from the noise path step"));
        }
        let z = || vec![0.0; n + 1];
        Ok(Self { model: *model, path, cfg, n, d1: z(), d2: z(), a: [z(), z()], b: [z(), z()] })
    }

    pub fn config(&self) -> PullbackConfig {
        self.cfg
    }

    /// `(y₃^{(q)}, y₄^{(q)})` at the end of the forward pass, from state `ξ` at grid index `t`.
    pub fn evaluate(&mut self, xi: [f64; 2], t: i64) -> Result<PmValue> {
        self.backward(xi, t)?;
        for _ in 2..=self.cfg.q {
            self.next_layer(xi);
        }
        self.forward(t)
    }

    /// Values of every layer `1..=q` from one sweep; entry `l-1` equals `evaluate` with `q = l`.
    pub fn evaluate_layers(&mut self, xi: [f64; 2], t: i64) -> Result<Vec<PmValue>> {
        self.backward(xi, t)?;
        let mut out = Vec::with_capacity(self.cfg.q);
        out.push(self.forward(t)?);
        for _ in 2..=self.cfg.q {
            self.next_layer(xi);
            out.push(self.forward(t)?);
        }
        Ok(out)
    }

    /// Fills the linear backward factors and the first layer.
    fn backward(&mut self, xi: [f64; 2], t: i64) -> Result<()> {
        let n = self.n;
        let path = self.path;
        path.check_index(t)?;
        path.check_index(t - n as i64)?;
        let mdl = &self.model;
        let dt = self.cfg.dt;
        let zs0 = mdl.sigma * dt.sqrt();
        let half = 0.5 * mdl.sigma * mdl.sigma;
        let (b1, b2) = (mdl.beta(1), mdl.beta(2));
        for p in 1..=n {
            let zs = zs0 * path.zeta(t - p as i64);
            self.d1[p] = 1.0 + (b1 + half) * dt + zs;
            self.d2[p] = 1.0 + (b2 + half) * dt + zs;
            if self.d1[p] <= 0.0 || self.d2[p] <= 0.0 {
                return Err(Error::Divergence {
                    step: t - p as i64,
                    what: "backward denominator crossed zero".into(),
                });
            }
        }
        // first layer: linear backward flow
        let [a1, a2] = &mut self.a;
        a1[0] = xi[0];
        a2[0] = xi[1];
        for p in 1..=n {
            a1[p] = a1[p - 1] / self.d1[p];
            a2[p] = a2[p - 1] / self.d2[p];
        }
        Ok(())
    }

    fn next_layer(&mut self, xi: [f64; 2]) {
        let (c, dt) = (self.model.c(), self.cfg.dt);
        let [a1, a2] = &self.a;
        let [n1, n2] = &mut self.b;
        n1[0] = xi[0];
        n2[0] = xi[1];
        for p in 1..=self.n {
            n1[p] = (n1[p - 1] - c * a1[p] * a2[p] * dt) / self.d1[p];
            n2[p] = (n2[p - 1] + c * a1[p] * a1[p] * dt) / self.d2[p];
        }
        std::mem::swap(&mut self.a, &mut self.b);
    }

    fn forward(&self, t: i64) -> Result<PmValue> {
        let n = self.n;
        let mdl = &self.model;
        let dt = self.cfg.dt;
        let zs0 = mdl.sigma * dt.sqrt();
        let half = 0.5 * mdl.sigma * mdl.sigma;
        let c = mdl.c();
        let (b3, b4) = (mdl.beta(3), mdl.beta(4));
        let [a1, a2] = &self.a;
        let (mut y3, mut y4) = (0.0, 0.0);
        for p in 1..=n {
            let j = n - (p - 1);
            let zs = zs0 * self.path.zeta(t - j as i64);
            let n3 = y3 + ((b3 + half) * y3 - 3.0 * c * a1[j] * a2[j]) * dt + y3 * zs;
            let n4 = y4 + ((b4 + half) * y4 - 2.0 * c * a2[j] * a2[j]) * dt + y4 * zs;
            y3 = n3;
            y4 = n4;
        }
        if !(y3.is_finite() && y4.is_finite()) {
            return Err(Error::Divergence { step: t, what: "non-finite pullback value".into() });
        }
        Ok(PmValue::burgers(y3, y4))
    }
}

/// `q`-layer pullback approximation of `ĥ^(q)(ξ, θ_t ω)`.
pub fn pullback_q_layer(
    model: &BurgersModel,
    xi: [f64; 2],
    path: &NoiseRealization,
    t: i64,
    cfg: PullbackConfig,
) -> Result<PmValue> {
    Pullback::new(model, path, cfg)?.evaluate(xi, t)
}

/// Two-layer pullback by quadrature of the closed-form layer solutions.
pub fn h2_analytic_oracle(
    model: &BurgersModel,
    xi: [f64; 2],
    path: &NoiseRealization,
    t: i64,
    horizon: f64,
) -> Result<PmValue> {
    model.require_two_modes()?;
    model.check_nr2().require()?;
    let dt = path.dt();
    let n = (horizon / dt).round() as usize;
    path.check_index(t)?;
    path.check_index(t - n as i64)?;
    let s = model.sigma;
    let c = model.c();
    let wt = path.w_unchecked(t);
    // e_i[j] = exp(β_i (s - t) + σ (W_s - W_t)) at s = t - j dt
    let e = |beta: f64| -> Vec<f64> {
        (0..=n)
            .map(|j| (-beta * j as f64 * dt + s * (path.w_unchecked(t - j as i64) - wt)).exp())
            .collect()
    };
    let (e1, e2, e3, e4) = (e(model.beta(1)), e(model.beta(2)), e(model.beta(3)), e(model.beta(4)));
    let mut y1 = vec![0.0; n + 1];
    let mut y2 = vec![0.0; n + 1];
    let (mut i1, mut i2) = (0.0, 0.0);
    let f1 = |j: usize| xi[0] * xi[1] * e1[j] * e2[j] / e1[j];
    let f2 = |j: usize| (xi[0] * e1[j]).powi(2) / e2[j];
    y1[0] = xi[0];
    y2[0] = xi[1];
    for j in 1..=n {
        i1 += 0.5 * dt * (f1(j - 1) + f1(j));
        i2 += 0.5 * dt * (f2(j - 1) + f2(j));
        y1[j] = xi[0] * e1[j] - c * e1[j] * i1;
        y2[j] = xi[1] * e2[j] + c * e2[j] * i2;
    }
    let trap = |f: &dyn Fn(usize) -> f64| -> f64 {
        let mut acc = 0.5 * (f(0) + f(n));
        for j in 1..n {
            acc += f(j);
        }
        acc * dt
    };
    let y3 = -3.0 * c * trap(&|j| y1[j] * y2[j] / e3[j]);
    let y4 = -2.0 * c * trap(&|j| y2[j] * y2[j] / e4[j]);
    Ok(PmValue::burgers(y3, y4))
}

/// A manifold bound to a noise path, evaluated at `(ξ, θ_t ω)`.
pub trait Parameterization: Sync {
    fn label(&self) -> String;
    fn evaluate(&self, xi: [f64; 2], t: i64) -> Result<PmValue>;
}

pub struct ZeroPm;

impl Parameterization for ZeroPm {
    fn label(&self) -> String {
        "zero".into()
    }
    fn evaluate(&self, _xi: [f64; 2], _t: i64) -> Result<PmValue> {
        Ok(PmValue::zero(3))
    }
}

/// `ĥ^(1)` with memory terms from stationary processes on the shared path.
pub struct H1Stationary<'a> {
    pub model: BurgersModel,
    pub m3: &'a MemoryProcess,
    pub m4: &'a MemoryProcess,
}

impl Parameterization for H1Stationary<'_> {
    fn label(&self) -> String {
        "h1".into()
    }
    fn evaluate(&self, xi: [f64; 2], t: i64) -> Result<PmValue> {
        h1_analytic(&self.model, xi, self.m3.at(t)?, self.m4.at(t)?)
    }
}

/// `ĥ^(1)` with constant memory values (means, or `1/g` for the deterministic limit).
pub struct H1Constant {
    pub model: BurgersModel,
    pub m3: f64,
    pub m4: f64,
}

impl Parameterization for H1Constant {
    fn label(&self) -> String {
        "h1-constant".into()
    }
    fn evaluate(&self, xi: [f64; 2], _t: i64) -> Result<PmValue> {
        h1_analytic(&self.model, xi, self.m3, self.m4)
    }
}

/// Finite-horizon `q`-layer pullback.
pub struct PullbackPm<'a> {
    pub model: BurgersModel,
    pub path: &'a NoiseRealization,
    pub cfg: PullbackConfig,
}

impl Parameterization for PullbackPm<'_> {
    fn label(&self) -> String {
        format!("pullback(q={},tau={})", self.cfg.q, self.cfg.tau)
    }
    fn evaluate(&self, xi: [f64; 2], t: i64) -> Result<PmValue> {
        pullback_q_layer(&self.model, xi, self.path, t, self.cfg)
    }
}
