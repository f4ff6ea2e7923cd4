//! Semi-implicit finite-difference integrator for the stochastic Burgers SPDE.
//!
//! The Laplacian and the linear growth are treated implicitly. The advection
//! and multiplicative-noise terms are explicit. The implicit operator is
//! diagonal in the discrete sine basis, so each step costs two sine transforms.
//! The mode amplitudes of every stored sample come from that same transform.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::model::BurgersModel;
use crate::noise::NoiseRealization;

const BLOWUP: f64 = 1e6;

/// Type-I discrete sine transform `X_k = Σ_j x_j sin(πjk/(n+1))`, via an FFT of length `2(n+1)`.
pub struct Dst {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl Dst {
    pub fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        let scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        Self { n, fft, buf: vec![Complex::default(); 2 * (n + 1)], scratch }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn apply(&mut self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(out.len(), n);
        self.buf.fill(Complex::default());
        for (j, &v) in x.iter().enumerate() {
            self.buf[j + 1].re = v;
            self.buf[2 * n + 1 - j].re = -v;
        }
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        for (k, o) in out.iter_mut().enumerate() {
            *o = -0.5 * self.buf[k + 1].im;
        }
    }
}

/// Uniform grid with `nx` points including both Dirichlet ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub l: f64,
}

impl Grid {
    pub fn new(nx: usize, l: f64) -> Result<Self> {
        if nx < 4 {
            return Err(param("nx", format!("need at least 4 grid points, got {nx}")));
        }
        if !(l > 0.0) {
            return Err(param("l", "domain length must be positive"));
        }
        Ok(Self { nx, l })
    }
    pub fn dx(&self) -> f64 {
        self.l / (self.nx - 1) as f64
    }
    pub fn interior(&self) -> usize {
        self.nx - 2
    }
    /// Coordinates of the interior nodes.
    pub fn nodes(&self) -> Vec<f64> {
        (1..=self.interior()).map(|j| j as f64 * self.dx()).collect()
    }
    /// Eigenvalue of the three-point Laplacian on sine mode `k`.
    pub fn laplacian_eigenvalue(&self, k: usize) -> f64 {
        let dx = self.dx();
        2.0 / (dx * dx) * ((k as f64 * PI * dx / self.l).cos() - 1.0)
    }

    /// Interior values of `Σ a_n e_n`.
    pub fn field_from_modes(&self, modes: &[(usize, f64)]) -> Vec<f64> {
        let norm = (2.0 / self.l).sqrt();
        self.nodes()
            .iter()
            .map(|&x| modes.iter().map(|&(n, a)| a * norm * (n as f64 * PI * x / self.l).sin()).sum())
            .collect()
    }

    /// Amplitudes `a_k = dx Σ_j u_j e_k(x_j)`, `k = 1..=nx-2`. The discrete sine
    /// basis is exactly orthonormal for this inner product.
    pub fn project(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.interior() {
            return Err(Error::Shape { expected: self.interior(), got: u.len() });
        }
        let mut out = vec![0.0; u.len()];
        Dst::new(u.len()).apply(u, &mut out);
        let s = self.dx() * (2.0 / self.l).sqrt();
        out.iter_mut().for_each(|v| *v *= s);
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Advection {
    /// Forward difference of `u²` with a zero ghost value at the right end.
    #[default]
    Forward,
    /// Centred difference of `u²`.
    Central,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpdeConfig {
    pub dt: f64,
    pub nx: usize,
    pub steps: usize,
    /// Store every `decimation`-th state.
    pub decimation: usize,
    /// Number of unresolved amplitudes stored per sample, starting at mode `m+1`.
    pub k_unresolved: usize,
    pub advection: Advection,
}

impl Default for SpdeConfig {
    fn default() -> Self {
        Self { dt: 0.01, nx: 132, steps: 100_000, decimation: 1, k_unresolved: 64, advection: Advection::Forward }
    }
}

/// Stored samples of the SPDE solution in mode coordinates.
#[derive(Debug, Clone, Serialize)]
pub struct SpdeTrajectory {
    pub dt: f64,
    pub m: usize,
    pub k_unresolved: usize,
    /// Noise-grid index of each sample.
    pub index: Vec<i64>,
    /// Resolved amplitudes, `m` per sample.
    pub uc: Vec<f64>,
    /// Unresolved amplitudes `m+1..=m+K`, `K` per sample.
    pub us: Vec<f64>,
    /// Interior field at the last step.
    pub final_field: Vec<f64>,
}

impl SpdeTrajectory {
    pub fn len(&self) -> usize {
        self.index.len()
    }
    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }
    pub fn time(&self, i: usize) -> f64 {
        self.index[i] as f64 * self.dt
    }
    pub fn resolved(&self, i: usize) -> &[f64] {
        &self.uc[i * self.m..(i + 1) * self.m]
    }
    pub fn unresolved(&self, i: usize) -> &[f64] {
        &self.us[i * self.k_unresolved..(i + 1) * self.k_unresolved]
    }
    /// Series of resolved mode `n` (1-based).
    pub fn mode_series(&self, n: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.uc[i * self.m + n - 1]).collect()
    }
}

/// One time step of the scheme, kept as a reusable workspace.
pub struct Stepper {
    model: BurgersModel,
    grid: Grid,
    dt: f64,
    advection: Advection,
    denom: Vec<f64>,
    dst: Dst,
    rhs: Vec<f64>,
    spec: Vec<f64>,
    amp_scale: f64,
}

impl Stepper {
    pub fn new(model: &BurgersModel, grid: Grid, dt: f64, advection: Advection) -> Result<Self> {
        model.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(param("dt", format!("must be positive, got {dt}")));
        }
        if (grid.l - model.l).abs() > 1e-12 * model.l {
            return Err(param("l", "grid and model domain lengths differ"));
        }
        let n = grid.interior();
        let denom: Vec<f64> = (1..=n)
            .map(|k| 1.0 - model.lambda * dt - model.nu * dt * grid.laplacian_eigenvalue(k))
            .collect();
        if let Some(k) = denom.iter().position(|d| d.abs() < 1e-12) {
            return Err(Error::Singular(format!("implicit operator vanishes on mode {}", k + 1)));
        }
        let amp_scale = grid.dx() * (2.0 / grid.l).sqrt();
        Ok(Self {
            model: *model,
            grid,
            dt,
            advection,
            denom,
            dst: Dst::new(n),
            rhs: vec![0.0; n],
            spec: vec![0.0; n],
            amp_scale,
        })
    }

    /// Advances `u` in place with standard-normal draw `zeta`; `amps` receives
    /// the mode amplitudes of the new state.
    pub fn step(&mut self, u: &mut [f64], zeta: f64, amps: &mut [f64]) {
        let n = u.len();
        let (dt, dx) = (self.dt, self.grid.dx());
        let sig = self.model.sigma;
        let mult = 1.0 + 0.5 * sig * sig * dt + sig * zeta * dt.sqrt();
        let adv = 0.5 * self.model.gamma * dt / dx;
        match self.advection {
            Advection::Forward => {
                for j in 0..n {
                    let s_next = if j + 1 < n { u[j + 1] * u[j + 1] } else { 0.0 };
                    self.rhs[j] = mult * u[j] - adv * (s_next - u[j] * u[j]);
                }
            }
            Advection::Central => {
                for j in 0..n {
                    let s_next = if j + 1 < n { u[j + 1] * u[j + 1] } else { 0.0 };
                    let s_prev = if j > 0 { u[j - 1] * u[j - 1] } else { 0.0 };
                    self.rhs[j] = mult * u[j] - 0.5 * adv * (s_next - s_prev);
                }
            }
        }
        self.dst.apply(&self.rhs, &mut self.spec);
        for ((a, s), d) in amps.iter_mut().zip(&self.spec).zip(&self.denom).take(n) {
            *a = self.amp_scale * s / d;
        }
        self.dst.apply(amps, u);
        let norm = (2.0 / self.grid.l).sqrt();
        u.iter_mut().for_each(|v| *v *= norm);
    }
}

/// Integrates from `u0` (interior values) at index 0 for `cfg.steps` steps; step
/// `n → n+1` uses increment `ζ_n` of `path`.
pub fn simulate_spde(
    model: &BurgersModel,
    cfg: &SpdeConfig,
    u0: &[f64],
    path: &NoiseRealization,
) -> Result<SpdeTrajectory> {
    let grid = Grid::new(cfg.nx, model.l)?;
    let n = grid.interior();
    if u0.len() != n {
        return Err(Error::Shape { expected: n, got: u0.len() });
    }
    if cfg.decimation == 0 {
        return Err(param("decimation", "must be at least 1"));
    }
    let m = model.m;
    if m + cfg.k_unresolved > n {
        return Err(param("k_unresolved", format!("{} + {} modes exceed the {n} grid modes", m, cfg.k_unresolved)));
    }
    if (path.n_future()) < cfg.steps {
        return Err(Error::Range { index: cfg.steps as i64, lo: path.lo(), hi: path.hi() });
    }
    if (path.dt() - cfg.dt).abs() > 1e-15 * cfg.dt {
        return Err(param("dt", "noise path and solver use different time steps"));
    }
    let mut stepper = Stepper::new(model, grid, cfg.dt, cfg.advection)?;
    let mut u = u0.to_vec();
    let mut amps = grid.project(&u)?;
    let cap = cfg.steps / cfg.decimation + 1;
    let mut traj = SpdeTrajectory {
        dt: cfg.dt,
        m,
        k_unresolved: cfg.k_unresolved,
        index: Vec::with_capacity(cap),
        uc: Vec::with_capacity(cap * m),
        us: Vec::with_capacity(cap * cfg.k_unresolved),
        final_field: Vec::new(),
    };
    let record = |t: &mut SpdeTrajectory, k: usize, amps: &[f64]| {
        t.index.push(k as i64);
        t.uc.extend_from_slice(&amps[..m]);
        t.us.extend_from_slice(&amps[m..m + cfg.k_unresolved]);
    };
    record(&mut traj, 0, &amps);
    for k in 0..cfg.steps {
        stepper.step(&mut u, path.zeta(k as i64), &mut amps);
        let sup = u.iter().fold(0.0f64, |a, v| if v.is_finite() { a.max(v.abs()) } else { f64::INFINITY });
        if sup > BLOWUP {
            return Err(Error::Divergence { step: k as i64 + 1, what: format!("sup norm {sup:e}") });
        }
        if (k + 1) % cfg.decimation == 0 {
            record(&mut traj, k + 1, &amps);
        }
    }
    traj.final_field = u;
    Ok(traj)
}
