//! Two-mode reduced systems driven by the same noise path as the SPDE.
//!
//! All advance `(y1, y2)` by Euler–Maruyama, with the `σ²y/2` Itô-correction
//! drift. They differ only in which manifold value `(c₃, c₄)` closes the
//! resolved equations:
//! * `ĥ^(1)` with stationary memory terms;
//! * `ĥ^(1)` with their means;
//! * zero (Galerkin);
//! * a pullback recomputed at every step ("on the fly").

use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifolds::{h1_analytic, Pullback, PullbackConfig};
use crate::memory::{mn_moments, MemoryProcess};
use crate::model::{BurgersModel, SpectralModel};
use crate::noise::NoiseRealization;
use crate::solver::Grid;

pub type ModeState = [f64; 2];

const BLOWUP: f64 = 1e6;

#[derive(Debug, Clone, Serialize)]
pub struct ReducedTrajectory {
    pub dt: f64,
    pub tag: String,
    pub index: Vec<i64>,
    pub y: Vec<ModeState>,
    /// Manifold values used at each stored step, when the closure is recomputed per step.
    pub closure: Vec<[f64; 2]>,
}

impl ReducedTrajectory {
    pub fn len(&self) -> usize {
        self.index.len()
    }
    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }
    pub fn time(&self, i: usize) -> f64 {
        self.index[i] as f64 * self.dt
    }
    pub fn mode_series(&self, n: usize) -> Vec<f64> {
        self.y.iter().map(|y| y[n - 1]).collect()
    }
}

/// Resolved drift `P_c B(ξ + c₃e₃ + c₄e₄)` plus the linear part, without the Itô correction.
pub fn closed_drift(model: &BurgersModel, y: ModeState, c3: f64, c4: f64) -> ModeState {
    let c = model.c();
    [
        model.beta(1) * y[0] + c * (y[0] * y[1] + y[1] * c3 + c3 * c4),
        model.beta(2) * y[1] + 2.0 * c * (-0.5 * y[0] * y[0] + y[0] * c3 + y[1] * c4),
    ]
}

#[inline]
fn em(model: &BurgersModel, y: ModeState, drift: ModeState, zeta: f64, dt: f64) -> ModeState {
    let s = model.sigma;
    let half = 0.5 * s * s;
    let noise = s * dt.sqrt() * zeta;
    [
        y[0] + (drift[0] + half * y[0]) * dt + noise * y[0],
        y[1] + (drift[1] + half * y[1]) * dt + noise * y[1],
    ]
}

fn check_state(y: ModeState, step: i64) -> Result<ModeState> {
    if !(y[0].is_finite() && y[1].is_finite()) || y[0].abs().max(y[1].abs()) > BLOWUP {
        return Err(Error::Divergence { step, what: format!("reduced state {y:?}") });
    }
    Ok(y)
}

pub fn step_h1_reduced(state: ModeState, model: &BurgersModel, m3: f64, m4: f64, zeta: f64, dt: f64) -> Result<ModeState> {
    let h = h1_analytic(model, state, m3, m4)?;
    check_state(em(model, state, closed_drift(model, state, h.c3(), h.c4()), zeta, dt), 0)
}

/// Means `(E M₃^{12}, E M₄^{22})`; both gaps need `σ < σ_#`.
pub fn averaged_memory(model: &BurgersModel) -> Result<(f64, f64)> {
    let (g1, g2) = model.gaps();
    let mut out = [0.0; 2];
    for (o, g) in out.iter_mut().zip([g1, g2]) {
        let mom = mn_moments(g, 2, model.sigma).map_err(|_| Error::Gap { label: format!("σ < σ_* for g = {g}"), value: model.sigma })?;
        if mom.variance.is_infinite() {
            return Err(Error::Gap { label: format!("σ < σ_# for g = {g}"), value: model.sigma });
        }
        *o = mom.mean;
    }
    Ok((out[0], out[1]))
}

pub fn step_averaged(state: ModeState, model: &BurgersModel, zeta: f64, dt: f64) -> Result<ModeState> {
    let (m3, m4) = averaged_memory(model)?;
    step_h1_reduced(state, model, m3, m4, zeta, dt)
}

pub fn step_galerkin(state: ModeState, model: &BurgersModel, zeta: f64, dt: f64) -> Result<ModeState> {
    check_state(em(model, state, closed_drift(model, state, 0.0, 0.0), zeta, dt), 0)
}

#[allow(clippy::too_many_arguments)]
fn integrate(
    model: &BurgersModel,
    path: &NoiseRealization,
    y0: ModeState,
    n_steps: usize,
    decimation: usize,
    tag: String,
    keep_closure: bool,
    mut closure: impl FnMut(i64, ModeState) -> Result<[f64; 2]>,
) -> Result<ReducedTrajectory> {
    if decimation == 0 {
        return Err(crate::error::param("decimation", "must be at least 1"));
    }
    if path.n_future() < n_steps {
        return Err(Error::Range { index: n_steps as i64, lo: path.lo(), hi: path.hi() });
    }
    let dt = path.dt();
    let cap = n_steps / decimation + 1;
    let mut tr = ReducedTrajectory {
        dt,
        tag,
        index: Vec::with_capacity(cap),
        y: Vec::with_capacity(cap),
        closure: Vec::new(),
    };
    let mut y = y0;
    for n in 0..=n_steps as i64 {
        let stored = (n as usize).is_multiple_of(decimation);
        if n == n_steps as i64 {
            if stored {
                tr.index.push(n);
                tr.y.push(y);
                if keep_closure {
                    tr.closure.push(closure(n, y)?);
                }
            }
            break;
        }
        let h = closure(n, y)?;
        if stored {
            tr.index.push(n);
            tr.y.push(y);
            if keep_closure {
                tr.closure.push(h);
            }
        }
        y = check_state(em(model, y, closed_drift(model, y, h[0], h[1]), path.zeta(n), dt), n + 1)?;
    }
    Ok(tr)
}

/// `ĥ^(1)`-closed system with memory terms read from stationary processes at each step.
pub fn simulate_h1_reduced(
    model: &BurgersModel,
    path: &NoiseRealization,
    y0: ModeState,
    n_steps: usize,
    decimation: usize,
    m3: &MemoryProcess,
    m4: &MemoryProcess,
) -> Result<ReducedTrajectory> {
    model.check_nr().require()?;
    m3.at(0)?;
    m4.at(n_steps as i64)?;
    integrate(model, path, y0, n_steps, decimation, "h1".into(), false, |n, y| {
        let h = h1_analytic(model, y, m3.get(n), m4.get(n))?;
        Ok([h.c3(), h.c4()])
    })
}

pub fn simulate_averaged(
    model: &BurgersModel,
    path: &NoiseRealization,
    y0: ModeState,
    n_steps: usize,
    decimation: usize,
) -> Result<ReducedTrajectory> {
    let (m3, m4) = averaged_memory(model)?;
    integrate(model, path, y0, n_steps, decimation, "averaged".into(), false, |_, y| {
        let h = h1_analytic(model, y, m3, m4)?;
        Ok([h.c3(), h.c4()])
    })
}

pub fn simulate_galerkin(
    model: &BurgersModel,
    path: &NoiseRealization,
    y0: ModeState,
    n_steps: usize,
    decimation: usize,
) -> Result<ReducedTrajectory> {
    integrate(model, path, y0, n_steps, decimation, "galerkin".into(), false, |_, _| Ok([0.0, 0.0]))
}

/// Reduced system whose closure is the `q`-layer pullback from the current state.
pub fn simulate_on_the_fly(
    model: &BurgersModel,
    path: &NoiseRealization,
    y0: ModeState,
    cfg: PullbackConfig,
    n_steps: usize,
    decimation: usize,
) -> Result<ReducedTrajectory> {
    let mut pb = Pullback::new(model, path, cfg)?;
    path.check_index(-(cfg.steps()? as i64))?;
    let tag = format!("onthefly(q={},tau={})", cfg.q, cfg.tau);
    integrate(model, path, y0, n_steps, decimation, tag, true, |n, y| {
        let h = pb.evaluate(y, n)?;
        Ok([h.c3(), h.c4()])
    })
}

/// Resolved amplitudes `(⟨u₀, e₁⟩, ⟨u₀, e₂⟩)` of a grid field.
pub fn initial_state_from(grid: &Grid, u0: &[f64]) -> Result<ModeState> {
    let a = grid.project(u0)?;
    Ok([a[0], a[1]])
}

/// Reduced drift `Σ_j [(a) + (b) + (c)] e_j` of a bilinear model closed by `ĥ^(1)`.
#[derive(Debug, Clone)]
pub struct BilinearDrift {
    pub m: usize,
    pub beta: Vec<f64>,
    /// `(n, p, q, B^n_{pq} M_n^{pq})`: the manifold `h_n = Σ · y_p y_q`.
    pub manifold: Vec<(usize, usize, usize, f64)>,
    /// `(j, i1, i2, B^j_{i1 i2})`, resolved self-interactions.
    pub self_terms: Vec<(usize, usize, usize, f64)>,
    /// `(j, i, n, B^j_{in} + B^j_{ni})`, resolved-unresolved cross-interactions.
    pub cross_terms: Vec<(usize, usize, usize, f64)>,
    /// `(j, n1, n2, B^j_{n1 n2})`, unresolved self-interactions.
    pub unresolved_terms: Vec<(usize, usize, usize, f64)>,
    pub unresolved: (usize, usize),
}

impl BilinearDrift {
    pub fn manifold_value(&self, y: &[f64]) -> Vec<f64> {
        let (lo, hi) = self.unresolved;
        let mut h = vec![0.0; hi + 1 - lo];
        for &(n, p, q, w) in &self.manifold {
            h[n - lo] += w * y[p - 1] * y[q - 1];
        }
        h
    }

    pub fn drift(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.m {
            return Err(Error::Shape { expected: self.m, got: y.len() });
        }
        let lo = self.unresolved.0;
        let h = self.manifold_value(y);
        let mut out: Vec<f64> = (0..self.m).map(|j| self.beta[j] * y[j]).collect();
        for &(j, a, b, w) in &self.self_terms {
            out[j - 1] += w * y[a - 1] * y[b - 1];
        }
        for &(j, i, n, w) in &self.cross_terms {
            out[j - 1] += w * y[i - 1] * h[n - lo];
        }
        for &(j, n1, n2, w) in &self.unresolved_terms {
            out[j - 1] += w * h[n1 - lo] * h[n2 - lo];
        }
        Ok(out)
    }
}

/// Collects the interaction tables of the `ĥ^(1)`-closed reduced system. `cutoff`
/// overrides the model's support for the unresolved range.
pub fn assemble_generic_bilinear(
    model: &dyn SpectralModel,
    table: crate::manifolds::MemoryTable,
    cutoff: Option<usize>,
) -> Result<BilinearDrift> {
    let m = model.resolved();
    let hi = cutoff
        .or(model.support())
        .ok_or_else(|| Error::Assembly("unbounded interaction support and no cutoff".into()))?;
    let lo = m + 1;
    let mut d = BilinearDrift {
        m,
        beta: (1..=m).map(|j| model.eigenvalue(j)).collect(),
        manifold: Vec::new(),
        self_terms: Vec::new(),
        cross_terms: Vec::new(),
        unresolved_terms: Vec::new(),
        unresolved: (lo, hi.max(m)),
    };
    for n in lo..=hi {
        for p in 1..=m {
            for q in 1..=m {
                let b = model.interaction(p, q, n);
                if b != 0.0 {
                    let mv = table(n, p, q).ok_or_else(|| Error::Assembly(format!("missing M_{n}^{{{p}{q}}}")))?;
                    d.manifold.push((n, p, q, b * mv));
                }
            }
        }
    }
    for j in 1..=m {
        for a in 1..=m {
            for b in 1..=m {
                let w = model.interaction(a, b, j);
                if w != 0.0 {
                    d.self_terms.push((j, a, b, w));
                }
            }
        }
        for i in 1..=m {
            for n in lo..=hi {
                let w = model.interaction(i, n, j) + model.interaction(n, i, j);
                if w != 0.0 {
                    d.cross_terms.push((j, i, n, w));
                }
            }
        }
        for n1 in lo..=hi {
            for n2 in lo..=hi {
                let w = model.interaction(n1, n2, j);
                if w != 0.0 {
                    d.unresolved_terms.push((j, n1, n2, w));
                }
            }
        }
    }
    Ok(d)
}
