//! Reduction-quality diagnostics: parameterization defect, kernel densities,
//! autocorrelations and reduced-vs-SPDE errors.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::manifolds::{Parameterization, Pullback, PullbackConfig};
use crate::model::BurgersModel;
use crate::noise::NoiseRealization;
use crate::reduced::ReducedTrajectory;
use crate::solver::SpdeTrajectory;

const MIN_KDE_SAMPLES: usize = 100;
const KDE_BINS: usize = 2048;

#[derive(Debug, Clone, Serialize)]
pub struct DefectReport {
    pub tag: String,
    pub alpha: f64,
    pub times: Vec<f64>,
    /// Cumulative `Q(T)` at each `times[k]`; the entry at `T = 0` is `NaN`.
    pub q: Vec<f64>,
}

impl DefectReport {
    /// `Q(T)` at the last stored time not exceeding `t`.
    pub fn at(&self, t: f64) -> Result<f64> {
        let eps = 1e-9 * t.abs().max(1.0);
        let k = self.times.partition_point(|&s| s <= t + eps);
        if k <= 1 {
            return Err(param("T", format!("{t} precedes the first positive sample")));
        }
        Ok(self.q[k - 1])
    }

    /// Trapezoid average of `Q(T)` over the stored times in `[t1, t2]`.
    pub fn timeavg(&self, t1: f64, t2: f64) -> Result<f64> {
        if !(t2 > t1 && t1 >= 0.0) {
            return Err(param("T1/T2", format!("need T2 > T1 >= 0, got [{t1}, {t2}]")));
        }
        let eps = 1e-9 * t2.max(1.0);
        let last = *self.times.last().unwrap_or(&0.0);
        if last + eps < t2 {
            return Err(param("T2", format!("{t2} beyond trajectory end {last}")));
        }
        let pts: Vec<(f64, f64)> = self
            .times
            .iter()
            .zip(&self.q)
            .filter(|(&t, q)| t >= t1 - eps && t <= t2 + eps && q.is_finite())
            .map(|(&t, &q)| (t, q))
            .collect();
        if pts.len() < 2 {
            return Err(Error::Statistics(format!("fewer than two defect samples in [{t1}, {t2}]")));
        }
        let area: f64 = pts.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum();
        Ok(area / (pts[pts.len() - 1].0 - pts[0].0))
    }
}

/// Spectral weights `(νn²π²/l²)^{2α}` for the stored unresolved coefficients.
pub fn norm_weights(model: &BurgersModel, first: usize, count: usize, alpha: f64) -> Vec<f64> {
    (first..first + count)
        .map(|n| {
            let e = model.nu * (n * n) as f64 * std::f64::consts::PI.powi(2) / (model.l * model.l);
            if alpha == 0.0 {
                1.0
            } else {
                e.powf(2.0 * alpha)
            }
        })
        .collect()
}

/// Per-sample squared residual and squared unresolved norm.
pub fn defect_integrands(
    traj: &SpdeTrajectory,
    pm: &dyn Parameterization,
    weights: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if traj.m != 2 {
        return Err(Error::Shape { expected: 2, got: traj.m });
    }
    if weights.len() != traj.k_unresolved {
        return Err(Error::Shape { expected: traj.k_unresolved, got: weights.len() });
    }
    let first = traj.m + 1;
    (0..traj.len())
        .into_par_iter()
        .map(|i| {
            let r = traj.resolved(i);
            let h = pm.evaluate([r[0], r[1]], traj.index[i])?;
            let us = traj.unresolved(i);
            let mut num = 0.0;
            let mut den = 0.0;
            for (j, (&v, &w)) in us.iter().zip(weights).enumerate() {
                let d = v - h.get(first + j);
                num += w * d * d;
                den += w * v * v;
            }
            Ok((num, den))
        })
        .collect()
}

/// Cumulative trapezoid defect `Q(T_k)` for every stored sample time.
pub fn defect_from_integrands(traj: &SpdeTrajectory, integrands: &[(f64, f64)], tag: String, alpha: f64) -> Result<DefectReport> {
    let times: Vec<f64> = (0..traj.len()).map(|i| traj.time(i)).collect();
    let mut q = Vec::with_capacity(times.len());
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..times.len() {
        if k > 0 {
            let h = times[k] - times[k - 1];
            num += 0.5 * h * (integrands[k - 1].0 + integrands[k].0);
            den += 0.5 * h * (integrands[k - 1].1 + integrands[k].1);
        }
        q.push(if den > 0.0 { num / den } else { f64::NAN });
    }
    if den <= 0.0 {
        return Err(Error::Statistics("degenerate trajectory: unresolved energy vanishes".into()));
    }
    Ok(DefectReport { tag, alpha, times, q })
}

pub fn defect_report(
    traj: &SpdeTrajectory,
    model: &BurgersModel,
    pm: &dyn Parameterization,
    alpha: f64,
) -> Result<DefectReport> {
    let w = norm_weights(model, traj.m + 1, traj.k_unresolved, alpha);
    let ints = defect_integrands(traj, pm, &w)?;
    defect_from_integrands(traj, &ints, pm.label(), alpha)
}

/// Defect curves of the pullback manifolds `q = 1..=q_max` at horizon `cfg.tau`, from one
/// layer sweep per sample.
pub fn pullback_defect_reports(
    traj: &SpdeTrajectory,
    model: &BurgersModel,
    path: &NoiseRealization,
    cfg: PullbackConfig,
    alpha: f64,
) -> Result<Vec<DefectReport>> {
    if traj.m != 2 {
        return Err(Error::Shape { expected: 2, got: traj.m });
    }
    Pullback::new(model, path, cfg)?;
    let w = norm_weights(model, traj.m + 1, traj.k_unresolved, alpha);
    let first = traj.m + 1;
    let per_sample: Vec<Vec<(f64, f64)>> = (0..traj.len())
        .into_par_iter()
        .map_init(
            || Pullback::new(model, path, cfg).expect("validated above"),
            |pb, i| {
                let r = traj.resolved(i);
                let layers = pb.evaluate_layers([r[0], r[1]], traj.index[i])?;
                let us = traj.unresolved(i);
                let den: f64 = us.iter().zip(&w).map(|(v, w)| w * v * v).sum();
                Ok(layers
                    .iter()
                    .map(|h| {
                        let num = us.iter().zip(&w).enumerate().map(|(j, (v, w))| w * (v - h.get(first + j)).powi(2)).sum();
                        (num, den)
                    })
                    .collect())
            },
        )
        .collect::<Result<_>>()?;
    (0..cfg.q)
        .map(|l| {
            let ints: Vec<(f64, f64)> = per_sample.iter().map(|s| s[l]).collect();
            defect_from_integrands(traj, &ints, format!("pullback(q={},tau={})", l + 1, cfg.tau), alpha)
        })
        .collect()
}

/// `Q(T)`: residual energy over unresolved energy on `[0, T]`.
pub fn defect_q(traj: &SpdeTrajectory, model: &BurgersModel, pm: &dyn Parameterization, t: f64, alpha: f64) -> Result<f64> {
    let report = defect_report(traj, model, pm, alpha)?;
    report.at(t)
}

/// `Q̄ = (T₂−T₁)⁻¹ ∫ Q(T) dT` over `[T₁, T₂]`.
pub fn defect_timeavg(
    traj: &SpdeTrajectory,
    model: &BurgersModel,
    pm: &dyn Parameterization,
    t1: f64,
    t2: f64,
    alpha: f64,
) -> Result<f64> {
    defect_report(traj, model, pm, alpha)?.timeavg(t1, t2)
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityCurve {
    pub x: Vec<f64>,
    pub density: Vec<f64>,
    pub samples: usize,
    pub bandwidth: f64,
}

impl DensityCurve {
    /// Linear interpolation; zero outside the grid.
    pub fn at(&self, x: f64) -> f64 {
        let n = self.x.len();
        if n == 0 || x < self.x[0] || x > self.x[n - 1] {
            return 0.0;
        }
        let k = self.x.partition_point(|&s| s <= x);
        if k >= n {
            return self.density[n - 1];
        }
        let (x0, x1) = (self.x[k - 1], self.x[k]);
        let w = (x - x0) / (x1 - x0);
        self.density[k - 1] * (1.0 - w) + self.density[k] * w
    }

    pub fn integral(&self) -> f64 {
        self.x.windows(2).zip(self.density.windows(2)).map(|(x, d)| 0.5 * (x[1] - x[0]) * (d[0] + d[1])).sum()
    }
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let i = h.floor() as usize;
    let f = h - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - f) + sorted[i + 1] * f
    } else {
        sorted[i]
    }
}

/// Silverman's normal-reference bandwidth `0.9 min(s, IQR/1.34) n^{-1/5}`.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let iqr = quantile(&s, 0.75) - quantile(&s, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * n.powf(-0.2)
}

/// Gaussian kernel density on a uniform grid, via linear binning.
pub fn kde_pdf(samples: &[f64], bandwidth: Option<f64>) -> Result<DensityCurve> {
    if samples.len() < MIN_KDE_SAMPLES {
        return Err(Error::Statistics(format!("kde needs at least {MIN_KDE_SAMPLES} samples, got {}", samples.len())));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Statistics("non-finite sample".into()));
    }
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let h = match bandwidth {
        Some(b) if b > 0.0 => b,
        Some(b) => return Err(param("bandwidth", format!("must be positive, got {b}"))),
        None => silverman_bandwidth(samples),
    };
    if hi == lo || h == 0.0 {
        // all mass at a single point
        let d = 1e-9 * lo.abs().max(1.0);
        let x = vec![lo - d, lo, lo + d];
        let peak = 2.0 / (x[2] - x[0]);
        return Ok(DensityCurve { x, density: vec![0.0, peak, 0.0], samples: samples.len(), bandwidth: 0.0 });
    }
    let (a, b) = (lo - 4.0 * h, hi + 4.0 * h);
    let dx = (b - a) / (KDE_BINS - 1) as f64;
    let mut bins = vec![0.0; KDE_BINS];
    let wt = 1.0 / samples.len() as f64;
    for &s in samples {
        let pos = (s - a) / dx;
        let i = (pos.floor() as usize).min(KDE_BINS - 2);
        let f = pos - i as f64;
        bins[i] += wt * (1.0 - f);
        bins[i + 1] += wt * f;
    }
    let reach = ((5.0 * h / dx).ceil() as usize).min(KDE_BINS - 1);
    let norm = 1.0 / (h * (2.0 * std::f64::consts::PI).sqrt());
    let kernel: Vec<f64> = (0..=reach).map(|j| norm * (-0.5 * (j as f64 * dx / h).powi(2)).exp()).collect();
    let density: Vec<f64> = (0..KDE_BINS)
        .into_par_iter()
        .map(|i| {
            let j0 = i.saturating_sub(reach);
            let j1 = (i + reach).min(KDE_BINS - 1);
            (j0..=j1).map(|j| bins[j] * kernel[i.abs_diff(j)]).sum()
        })
        .collect();
    let x: Vec<f64> = (0..KDE_BINS).map(|i| a + i as f64 * dx).collect();
    let mut curve = DensityCurve { x, density, samples: samples.len(), bandwidth: h };
    let mass = curve.integral();
    curve.density.iter_mut().for_each(|d| *d /= mass);
    Ok(curve)
}

/// `∫|f − g|` on a fine uniform grid spanning both supports.
pub fn l1_distance(f: &DensityCurve, g: &DensityCurve) -> f64 {
    let lo = f.x[0].min(g.x[0]);
    let hi = f.x[f.x.len() - 1].max(g.x[g.x.len() - 1]);
    l1_on_grid(lo, hi, 8192, |x| (f.at(x) - g.at(x)).abs())
}

/// `∫|f − p|` against a reference density `p`, over the curve's grid extended by its width.
pub fn l1_to_density(f: &DensityCurve, p: impl Fn(f64) -> f64) -> f64 {
    let (lo, hi) = (f.x[0], f.x[f.x.len() - 1]);
    let w = hi - lo;
    l1_on_grid(lo - w, hi + w, 3 * 8192, |x| (f.at(x) - p(x)).abs())
}

fn l1_on_grid(lo: f64, hi: f64, n: usize, e: impl Fn(f64) -> f64) -> f64 {
    let dx = (hi - lo) / n as f64;
    (0..=n).map(|i| e(lo + i as f64 * dx) * if i == 0 || i == n { 0.5 } else { 1.0 }).sum::<f64>() * dx
}

#[derive(Debug, Clone, Serialize)]
pub struct AcfCurve {
    /// Lags in time units.
    pub lags: Vec<f64>,
    pub values: Vec<f64>,
    pub samples: usize,
    pub max_lag: usize,
}

impl AcfCurve {
    /// Least-squares rate `r` of `exp(−r·lag)` through the origin, over lags where the ACF
    /// stays above `floor` (up to the first drop below it).
    pub fn exponential_rate(&self, floor: f64) -> Result<f64> {
        let (mut num, mut den) = (0.0, 0.0);
        for (&t, &v) in self.lags.iter().zip(&self.values).skip(1) {
            if v <= floor {
                break;
            }
            num -= t * v.ln();
            den += t * t;
        }
        if den == 0.0 {
            return Err(Error::Statistics("no lags above the fit floor".into()));
        }
        Ok(num / den)
    }
}

/// Biased-normalized sample autocorrelation up to `max_lag` samples; `step` is the
/// sample spacing in time.
pub fn acf(series: &[f64], step: f64, max_lag: usize) -> AcfCurve {
    let n = series.len();
    let max_lag = max_lag.min(n.saturating_sub(1));
    let mean = series.iter().sum::<f64>() / n.max(1) as f64;
    let c: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let c0: f64 = c.iter().map(|x| x * x).sum();
    let values: Vec<f64> = (0..=max_lag)
        .into_par_iter()
        .map(|k| {
            if c0 == 0.0 {
                return if k == 0 { 1.0 } else { 0.0 };
            }
            c[..n - k].iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>() / c0
        })
        .collect();
    AcfCurve { lags: (0..=max_lag).map(|k| k as f64 * step).collect(), values, samples: n, max_lag }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryError {
    pub times: Vec<f64>,
    pub err: Vec<[f64; 2]>,
    pub mean: [f64; 2],
}

/// `|y_i(t) − u_{c,i}(t)|` at matching stored samples.
pub fn trajectory_error(reduced: &ReducedTrajectory, spde: &SpdeTrajectory) -> Result<TrajectoryError> {
    if reduced.index != spde.index {
        return Err(Error::Shape { expected: spde.len(), got: reduced.len() });
    }
    if (reduced.dt - spde.dt).abs() > 1e-15 * spde.dt {
        return Err(param("dt", format!("reduced dt {} vs spde dt {}", reduced.dt, spde.dt)));
    }
    let err: Vec<[f64; 2]> = (0..spde.len())
        .map(|i| {
            let u = spde.resolved(i);
            [(reduced.y[i][0] - u[0]).abs(), (reduced.y[i][1] - u[1]).abs()]
        })
        .collect();
    let n = err.len().max(1) as f64;
    let mean = [err.iter().map(|e| e[0]).sum::<f64>() / n, err.iter().map(|e| e[1]).sum::<f64>() / n];
    Ok(TrajectoryError { times: (0..spde.len()).map(|i| spde.time(i)).collect(), err, mean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::{PmValue, ZeroPm};
    use crate::noise::{ou_process, NoiseRealization};
    use crate::reduced::{initial_state_from, simulate_galerkin};
    use crate::solver::{simulate_spde, Grid, SpdeConfig};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn short_run(model: &BurgersModel, steps: usize, seed: u64) -> SpdeTrajectory {
        let cfg = SpdeConfig { steps, decimation: 10, k_unresolved: 16, ..SpdeConfig::default() };
        let g = Grid::new(cfg.nx, model.l).unwrap();
        let path = NoiseRealization::generate(seed, cfg.dt, 0, steps).unwrap();
        simulate_spde(model, &cfg, &g.field_from_modes(&[(1, 0.1), (2, 0.2), (5, 0.1)]), &path).unwrap()
    }

    /// Returns the stored unresolved coefficients of the trajectory as the manifold value.
    struct Oracle<'a>(&'a SpdeTrajectory);
    impl Parameterization for Oracle<'_> {
        fn label(&self) -> String {
            "oracle".into()
        }
        fn evaluate(&self, _: [f64; 2], t: i64) -> Result<PmValue> {
            let i = self.0.index.iter().position(|&k| k == t).unwrap();
            Ok(PmValue { first: 3, coeffs: self.0.unresolved(i).to_vec() })
        }
    }

    struct Scaled<'a>(&'a SpdeTrajectory, f64);
    impl Parameterization for Scaled<'_> {
        fn label(&self) -> String {
            "scaled".into()
        }
        fn evaluate(&self, _: [f64; 2], t: i64) -> Result<PmValue> {
            let i = self.0.index.iter().position(|&k| k == t).unwrap();
            Ok(PmValue { first: 3, coeffs: self.0.unresolved(i).iter().map(|v| v * self.1).collect() })
        }
    }

    #[test]
    fn defect_trivial_parameterizations() {
        let model = BurgersModel::regime_b(8.0);
        let traj = short_run(&model, 2000, 1);
        let zero = defect_report(&traj, &model, &ZeroPm, 0.0).unwrap();
        assert!(zero.q[1..].iter().all(|q| (q - 1.0).abs() < 1e-14));
        let exact = defect_report(&traj, &model, &Oracle(&traj), 0.0).unwrap();
        assert!(exact.q[1..].iter().all(|&q| q == 0.0));
        // h = s·u_s gives Q = (1−s)² exactly
        let half = defect_q(&traj, &model, &Scaled(&traj, 0.5), 20.0, 0.5).unwrap();
        assert!((half - 0.25).abs() < 1e-13);
    }

    #[test]
    fn defect_rejects_degenerate() {
        let model = BurgersModel::regime_b(8.0);
        let cfg = SpdeConfig { steps: 100, decimation: 10, k_unresolved: 8, ..SpdeConfig::default() };
        let g = Grid::new(cfg.nx, model.l).unwrap();
        let path = NoiseRealization::generate(1, cfg.dt, 0, 100).unwrap();
        let traj = simulate_spde(&model, &cfg, &vec![0.0; g.interior()], &path).unwrap();
        assert!(matches!(defect_report(&traj, &model, &ZeroPm, 0.0), Err(Error::Statistics(_))));
    }

    #[test]
    fn timeavg_of_constant_and_linear() {
        let r = DefectReport { tag: "t".into(), alpha: 0.0, times: (0..=100).map(|k| k as f64).collect(), q: vec![0.7; 101] };
        assert!((r.timeavg(10.0, 90.0).unwrap() - 0.7).abs() < 1e-15);
        let r = DefectReport { q: r.times.clone(), ..r };
        assert!((r.timeavg(20.0, 60.0).unwrap() - 40.0).abs() < 1e-12);
        assert!(r.timeavg(60.0, 20.0).is_err());
        assert!(r.timeavg(20.0, 200.0).is_err());
    }

    #[test]
    fn defect_uniform_weight_scaling() {
        // rescaling every weight by a common factor leaves Q unchanged
        let model = BurgersModel::regime_b(8.0);
        let traj = short_run(&model, 1000, 4);
        let pm = crate::manifolds::H1Constant { model, m3: 0.4, m4: 0.3 };
        for alpha in [0.0, 0.25] {
            let w = norm_weights(&model, 3, traj.k_unresolved, alpha);
            let w2: Vec<f64> = w.iter().map(|x| 37.0 * x).collect();
            let a = defect_from_integrands(&traj, &defect_integrands(&traj, &pm, &w).unwrap(), "a".into(), alpha).unwrap();
            let b = defect_from_integrands(&traj, &defect_integrands(&traj, &pm, &w2).unwrap(), "b".into(), alpha).unwrap();
            for (x, y) in a.q[1..].iter().zip(&b.q[1..]) {
                assert!((x - y).abs() < 1e-12 * x.abs().max(1.0));
            }
        }
    }

    #[test]
    fn layered_defects_match_single_evaluator() {
        let model = BurgersModel::regime_b(8.0);
        let cfg = SpdeConfig { steps: 300, decimation: 30, k_unresolved: 8, ..SpdeConfig::default() };
        let g = Grid::new(cfg.nx, model.l).unwrap();
        let path = NoiseRealization::generate(2, cfg.dt, 600, 300).unwrap();
        let traj = simulate_spde(&model, &cfg, &g.field_from_modes(&[(1, 0.1), (2, 0.2), (5, 0.1)]), &path).unwrap();
        let pc = PullbackConfig::new(3, 4.0, 0.01).unwrap();
        let all = pullback_defect_reports(&traj, &model, &path, pc, 0.0).unwrap();
        for (l, rep) in all.iter().enumerate() {
            let pm = crate::manifolds::PullbackPm { model, path: &path, cfg: PullbackConfig { q: l + 1, ..pc } };
            let single = defect_report(&traj, &model, &pm, 0.0).unwrap();
            assert_eq!(rep.tag, single.tag);
            for (a, b) in rep.q[1..].iter().zip(&single.q[1..]) {
                assert!((a - b).abs() <= 1e-14 * b.abs());
            }
        }
    }

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn kde_normal_oracle() {
        let s = normals(1_000_000, 5);
        let c = kde_pdf(&s, None).unwrap();
        assert!((c.integral() - 1.0).abs() < 1e-3);
        assert!(c.density.iter().all(|&d| d >= 0.0));
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let e = l1_to_density(&c, phi);
        assert!(e < 0.02, "L1 = {e}");
    }

    #[test]
    fn kde_spike_and_too_few() {
        let c = kde_pdf(&[2.5; 500], None).unwrap();
        assert!((c.integral() - 1.0).abs() < 1e-12);
        assert!(c.at(2.5) > 1e6);
        assert!(matches!(kde_pdf(&[1.0; 99], None), Err(Error::Statistics(_))));
    }

    #[test]
    fn l1_distance_of_shifted_normals() {
        // ∫|φ(x) − φ(x−δ)| = 2(2Φ(δ/2) − 1) ≈ 0.3988 for δ = 0.5
        let a = kde_pdf(&normals(200_000, 1), Some(0.05)).unwrap();
        let b = kde_pdf(&normals(200_000, 2).iter().map(|x| x + 0.5).collect::<Vec<_>>(), Some(0.05)).unwrap();
        let d = l1_distance(&a, &b);
        assert!((d - 0.3948).abs() < 0.02, "{d}");
        assert!(l1_distance(&a, &a) < 1e-12);
    }

    #[test]
    fn acf_white_noise_and_ou() {
        let n = 100_000;
        let w = normals(n, 9);
        let a = acf(&w, 1.0, 20);
        assert_eq!(a.values[0], 1.0);
        assert!(a.values[1..].iter().all(|v| v.abs() < 3.0 / (n as f64).sqrt()));

        // unit-rate OU: ACF(τ) = e^{−τ}
        let dt = 0.01;
        let path = NoiseRealization::generate(11, dt, 0, 2_000_000).unwrap();
        let ou = ou_process(&path, 1.0, 1000).unwrap();
        let c = acf(ou.values(), dt, 300);
        let rate = c.exponential_rate(0.05).unwrap();
        assert!((rate - 1.0).abs() < 0.05, "rate {rate}");
        for (t, v) in c.lags.iter().zip(&c.values).step_by(50) {
            assert!((v - (-t).exp()).abs() < 0.05, "lag {t}: {v}");
        }
    }

    #[test]
    fn trajectory_error_cases() {
        let model = BurgersModel { gamma: 0.0, sigma: 0.0, ..BurgersModel::regime_a() };
        let cfg = SpdeConfig { steps: 1000, decimation: 10, k_unresolved: 4, ..SpdeConfig::default() };
        let g = Grid::new(cfg.nx, model.l).unwrap();
        let u0 = g.field_from_modes(&[(1, 0.1), (2, 0.2)]);
        let path = NoiseRealization::zero(cfg.dt, 0, cfg.steps).unwrap();
        let spde = simulate_spde(&model, &cfg, &u0, &path).unwrap();

        let copy = ReducedTrajectory {
            dt: spde.dt,
            tag: "copy".into(),
            index: spde.index.clone(),
            y: (0..spde.len()).map(|i| [spde.resolved(i)[0], spde.resolved(i)[1]]).collect(),
            closure: vec![],
        };
        let e = trajectory_error(&copy, &spde).unwrap();
        assert!(e.err.iter().all(|x| *x == [0.0, 0.0]));

        // implicit (SPDE) vs explicit (reduced) Euler on the linear first mode
        let red = simulate_galerkin(&model, &path, initial_state_from(&g, &u0).unwrap(), cfg.steps, 10).unwrap();
        let e = trajectory_error(&red, &spde).unwrap();
        let mu = 1.0 - model.lambda * cfg.dt - model.nu * cfg.dt * g.laplacian_eigenvalue(1);
        let n = cfg.steps as i32;
        let exact = (0.1 / mu.powi(n) - 0.1 * (1.0 + model.beta(1) * cfg.dt).powi(n)).abs();
        let got = e.err.last().unwrap()[0];
        assert!((got - exact).abs() < 1e-10 * exact, "{got} vs {exact}");
        // leading order y0 e^{βt} β² t dt
        let b = model.beta(1);
        let lead = 0.1 * (b * 10.0).exp() * b * b * 10.0 * cfg.dt;
        assert!((got - lead).abs() < 0.1 * lead, "{got} vs {lead}");

        let short = ReducedTrajectory { index: vec![0], y: vec![[0.0, 0.0]], ..copy };
        assert!(matches!(trajectory_error(&short, &spde), Err(Error::Shape { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn kde_is_a_density(seed in 0u64..1000, scale in 0.01f64..100.0, n in 100usize..2000) {
            let s: Vec<f64> = normals(n, seed).iter().map(|x| x * scale).collect();
            let c = kde_pdf(&s, None).unwrap();
            prop_assert!((c.integral() - 1.0).abs() < 1e-3);
            prop_assert!(c.density.iter().all(|&d| d >= 0.0));
        }

        #[test]
        fn acf_starts_at_one_and_is_bounded(seed in 0u64..1000, n in 50usize..500) {
            let a = acf(&normals(n, seed), 0.1, 30);
            prop_assert_eq!(a.values[0], 1.0);
            prop_assert!(a.values.iter().all(|v| v.abs() <= 1.0 + 1e-12));
        }
    }
}
