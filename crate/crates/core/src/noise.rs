//! Two-sided Brownian paths on a uniform grid and the OU process they drive.
//!
//! Increment `k` is the standard normal `ζ_k` attached to the interval
//! `[k·dt, (k+1)·dt]`, for `k ∈ [-n_past, n_future)`. The path is pinned at
//! `W_0 = 0`. Future increments come from ChaCha stream 0 and past increments
//! from stream 1, so extending either side of a realization never changes the
//! increments that were already there.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::error::{param, Error, Result};

#[derive(Debug, Clone)]
pub struct NoiseRealization {
    seed: u64,
    dt: f64,
    n_past: usize,
    n_future: usize,
    incr: Vec<f64>,
    w: Vec<f64>,
}

fn cumulative(incr: &[f64], n_past: usize, dt: f64) -> Vec<f64> {
    let sq = dt.sqrt();
    let mut w = vec![0.0; incr.len() + 1];
    for j in (0..n_past).rev() {
        w[j] = w[j + 1] - sq * incr[j];
    }
    for j in n_past..incr.len() {
        w[j + 1] = w[j] + sq * incr[j];
    }
    w
}

impl NoiseRealization {
    pub fn generate(seed: u64, dt: f64, n_past: usize, n_future: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(param("dt", format!("must be positive, got {dt}")));
        }
        let mut incr = vec![0.0; n_past + n_future];
        let mut fut = ChaCha8Rng::seed_from_u64(seed);
        fut.set_stream(0);
        for z in incr[n_past..].iter_mut() {
            *z = StandardNormal.sample(&mut fut);
        }
        let mut past = ChaCha8Rng::seed_from_u64(seed);
        past.set_stream(1);
        for z in incr[..n_past].iter_mut().rev() {
            *z = StandardNormal.sample(&mut past);
        }
        let w = cumulative(&incr, n_past, dt);
        Ok(Self { seed, dt, n_past, n_future, incr, w })
    }

    /// Builds a realization from explicit increments, ordered from index `-n_past`.
    pub fn from_increments(seed: u64, dt: f64, n_past: usize, incr: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(param("dt", format!("must be positive, got {dt}")));
        }
        if incr.len() < n_past {
            return Err(Error::Shape { expected: n_past, got: incr.len() });
        }
        let n_future = incr.len() - n_past;
        let w = cumulative(&incr, n_past, dt);
        Ok(Self { seed, dt, n_past, n_future, incr, w })
    }

    pub fn zero(dt: f64, n_past: usize, n_future: usize) -> Result<Self> {
        Self::from_increments(0, dt, n_past, vec![0.0; n_past + n_future])
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn n_past(&self) -> usize {
        self.n_past
    }
    pub fn n_future(&self) -> usize {
        self.n_future
    }
    /// Smallest grid index with a defined `W`.
    pub fn lo(&self) -> i64 {
        -(self.n_past as i64)
    }
    /// Largest grid index with a defined `W`.
    pub fn hi(&self) -> i64 {
        self.n_future as i64
    }

    /// Standard normal increment over `[k·dt, (k+1)·dt]`.
    #[inline]
    pub fn zeta(&self, k: i64) -> f64 {
        self.incr[(k + self.n_past as i64) as usize]
    }

    pub fn increment(&self, k: i64) -> Result<f64> {
        if k < self.lo() || k >= self.hi() {
            return Err(Error::Range { index: k, lo: self.lo(), hi: self.hi() - 1 });
        }
        Ok(self.zeta(k))
    }

    pub fn increments(&self) -> &[f64] {
        &self.incr
    }

    /// Brownian value at grid index `k`.
    pub fn wiener_at(&self, k: i64) -> Result<f64> {
        self.check_index(k)?;
        Ok(self.w_unchecked(k))
    }

    #[inline]
    pub fn w_unchecked(&self, k: i64) -> f64 {
        self.w[(k + self.n_past as i64) as usize]
    }

    pub fn check_index(&self, k: i64) -> Result<()> {
        if k < self.lo() || k > self.hi() {
            return Err(Error::Range { index: k, lo: self.lo(), hi: self.hi() });
        }
        Ok(())
    }

    /// The path seen from time `s·dt`: `W'(m) = W(s+m) - W(s)`.
    pub fn shifted(&self, s: i64) -> Result<Shifted<'_>> {
        self.check_index(s)?;
        Ok(Shifted { base: self, shift: s })
    }

    /// Hex SHA-256 of the increments as little-endian bytes, with the header fields.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(self.dt.to_le_bytes());
        h.update((self.n_past as u64).to_le_bytes());
        h.update((self.n_future as u64).to_le_bytes());
        for z in &self.incr {
            h.update(z.to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Header `(seed, dt, n_past, n_future)` then the increments, all little-endian.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&self.seed.to_le_bytes())?;
        out.write_all(&self.dt.to_le_bytes())?;
        out.write_all(&(self.n_past as u64).to_le_bytes())?;
        out.write_all(&(self.n_future as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.incr.len() * 8);
        for z in &self.incr {
            buf.extend_from_slice(&z.to_le_bytes());
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut inp: R) -> Result<Self> {
        let mut b8 = [0u8; 8];
        let mut next = |inp: &mut R| -> Result<[u8; 8]> {
            inp.read_exact(&mut b8).map_err(|e| Error::Format(format!("truncated header: {e}")))?;
            Ok(b8)
        };
        let seed = u64::from_le_bytes(next(&mut inp)?);
        let dt = f64::from_le_bytes(next(&mut inp)?);
        let n_past = u64::from_le_bytes(next(&mut inp)?) as usize;
        let n_future = u64::from_le_bytes(next(&mut inp)?) as usize;
        let mut body = Vec::new();
        inp.read_to_end(&mut body)?;
        let n = n_past + n_future;
        if body.len() != 8 * n {
            return Err(Error::Format(format!("expected {} increment bytes, found {}", 8 * n, body.len())));
        }
        let incr = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Self::from_increments(seed, dt, n_past, incr)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Shifted<'a> {
    base: &'a NoiseRealization,
    shift: i64,
}

impl Shifted<'_> {
    pub fn wiener_at(&self, m: i64) -> Result<f64> {
        Ok(self.base.wiener_at(self.shift + m)? - self.base.w_unchecked(self.shift))
    }
    pub fn increment(&self, m: i64) -> Result<f64> {
        self.base.increment(self.shift + m)
    }
}

/// Stationary OU values `dz = -z dt + σ dW`, indexed like the noise grid.
#[derive(Debug, Clone)]
pub struct OuPath {
    start: i64,
    values: Vec<f64>,
}

impl OuPath {
    pub fn start(&self) -> i64 {
        self.start
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn at(&self, k: i64) -> Result<f64> {
        let hi = self.start + self.values.len() as i64 - 1;
        if k < self.start || k > hi {
            return Err(Error::Range { index: k, lo: self.start, hi });
        }
        Ok(self.values[(k - self.start) as usize])
    }
}

/// Semi-implicit OU recursion started at zero at the left end of the path;
/// the first `spinup_steps` values are discarded.
pub fn ou_process(path: &NoiseRealization, sigma: f64, spinup_steps: usize) -> Result<OuPath> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(param("sigma", format!("must be non-negative, got {sigma}")));
    }
    let total = path.n_past + path.n_future;
    if spinup_steps > total {
        return Err(param("spinup_steps", format!("{spinup_steps} exceeds path length {total}")));
    }
    let dt = path.dt;
    let sq = dt.sqrt();
    let mut z = 0.0;
    let mut values = Vec::with_capacity(total + 1 - spinup_steps);
    for (j, zeta) in path.incr.iter().enumerate() {
        if j >= spinup_steps {
            values.push(z);
        }
        z = (z + sigma * sq * zeta) / (1.0 + dt);
    }
    values.push(z);
    Ok(OuPath { start: path.lo() + spinup_steps as i64, values })
}
