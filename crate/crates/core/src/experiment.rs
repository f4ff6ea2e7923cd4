//! Subcommand drivers: build model, noise and trajectories from a config, write
//! CSV artifacts and a JSON manifest.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Variant};
use crate::diagnostics::{acf, defect_report, kde_pdf, l1_distance, pullback_defect_reports, trajectory_error, AcfCurve, DensityCurve};
use crate::error::{Error, Result};
use crate::manifolds::{H1Stationary, Pullback, PullbackConfig};
use crate::memory::{mn_moments, mn_stationary, MemoryProcess, MemorySpec};
use crate::model::{sigma_bounds, BurgersModel};
use crate::noise::NoiseRealization;
use crate::reduced::{initial_state_from, simulate_averaged, simulate_galerkin, simulate_h1_reduced, simulate_on_the_fly, ReducedTrajectory};
use crate::solver::{simulate_spde, Grid, SpdeTrajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SimulateSpde,
    SimulateReduced,
    PullbackPm,
    MemoryStats,
    Defect,
    PdfAcf,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Self::SimulateSpde, Self::SimulateReduced, Self::PullbackPm, Self::MemoryStats, Self::Defect, Self::PdfAcf];

    pub fn name(self) -> &'static str {
        match self {
            Self::SimulateSpde => "simulate-spde",
            Self::SimulateReduced => "simulate-reduced",
            Self::PullbackPm => "pullback-pm",
            Self::MemoryStats => "memory-stats",
            Self::Defect => "defect",
            Self::PdfAcf => "pdf-acf",
        }
    }
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config { field: "command".into(), reason: format!("unknown subcommand `{s}`") })
    }
}

/// Files written by a run and its JSON summary.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

/// 17 significant digits; non-finite values as `NaN`, `inf`, `-inf`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

struct Csv {
    out: BufWriter<File>,
    line: String,
}

impl Csv {
    fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let mut c = Self { out: BufWriter::new(File::create(path)?), line: String::new() };
        writeln!(c.out, "{}", header.join(","))?;
        Ok(c)
    }

    fn row(&mut self, text: &[&str], nums: &[f64]) -> Result<()> {
        self.line.clear();
        for (i, t) in text.iter().enumerate() {
            if i > 0 {
                self.line.push(',');
            }
            self.line.push_str(t);
        }
        for (i, x) in nums.iter().enumerate() {
            if i > 0 || !text.is_empty() {
                self.line.push(',');
            }
            let _ = write!(self.line, "{}", fmt_f64(*x));
        }
        writeln!(self.out, "{}", self.line)?;
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Run<'_> {
    fn csv(&mut self, name: &str, header: &[&str]) -> Result<Csv> {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        Csv::create(&p, header)
    }
}

/// Noise path covering the configured history and horizon, generated or loaded.
pub fn noise_path(cfg: &ExperimentConfig) -> Result<NoiseRealization> {
    let future = cfg.forward_steps();
    match &cfg.noise.load {
        None => NoiseRealization::generate(cfg.noise.seed, cfg.grid.dt, cfg.noise.n_past, future),
        Some(p) => {
            let path = NoiseRealization::read_binary(std::io::BufReader::new(File::open(p)?))?;
            let bad = |reason: String| Error::Config { field: "noise.load".into(), reason };
            if (path.dt() - cfg.grid.dt).abs() > 1e-15 * cfg.grid.dt {
                return Err(bad(format!("file step {} differs from grid.dt {}", path.dt(), cfg.grid.dt)));
            }
            if path.n_past() < cfg.noise.n_past || path.n_future() < future {
                return Err(bad(format!(
                    "file covers [{}, {}], need [-{}, {future}]",
                    path.lo(),
                    path.hi(),
                    cfg.noise.n_past
                )));
            }
            Ok(path)
        }
    }
}

fn spde_for(cfg: &ExperimentConfig, model: &BurgersModel, path: &NoiseRealization) -> Result<(Grid, SpdeTrajectory)> {
    let scfg = cfg.spde();
    let grid = Grid::new(scfg.nx, model.l)?;
    let u0 = grid.field_from_modes(&cfg.run.u0);
    let traj = simulate_spde(model, &scfg, &u0, path)?;
    Ok((grid, traj))
}

/// Stationary `(M₃^{12}, M₄^{22})` on the path, for `k = 2` and the two interaction gaps.
pub fn memory_pair(model: &BurgersModel, path: &NoiseRealization, spinup: usize) -> Result<(MemoryProcess, MemoryProcess)> {
    let (g1, g2) = model.gaps();
    model.check_nr().require()?;
    for g in [g1, g2] {
        let (s_star, _) = sigma_bounds(g, 2)?;
        if model.sigma >= s_star {
            return Err(Error::Gap { label: format!("σ < σ_* = {s_star} for gap {g}"), value: model.sigma });
        }
    }
    Ok((
        mn_stationary(&MemorySpec::new(g1, 2, model.sigma)?, path, spinup)?,
        mn_stationary(&MemorySpec::new(g2, 2, model.sigma)?, path, spinup)?,
    ))
}

pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<Artifacts> {
    cfg.validate()?;
    let dir = if cfg.output.as_os_str().is_empty() { PathBuf::from("out").join(cmd.name()) } else { cfg.output.clone() };
    std::fs::create_dir_all(&dir)?;
    let mut r = Run { cfg, dir, files: Vec::new() };
    let path = noise_path(cfg)?;
    if cfg.noise.dump {
        let p = r.dir.join("noise.bin");
        path.write_binary(BufWriter::new(File::create(&p)?))?;
        r.files.push(p);
    }
    let outcome = match cmd {
        Command::SimulateSpde => simulate_spde_cmd(&mut r, &path),
        Command::SimulateReduced => simulate_reduced_cmd(&mut r, &path),
        Command::PullbackPm => pullback_cmd(&mut r, &path),
        Command::MemoryStats => memory_stats_cmd(&mut r, &path),
        Command::Defect => defect_cmd(&mut r, &path),
        Command::PdfAcf => pdf_acf_cmd(&mut r, &path),
    };
    let (summary, err) = match outcome {
        Ok(s) => (s, None),
        Err((s, e)) => (s, Some(e)),
    };
    let manifest = json!({
        "command": cmd.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.noise.seed,
        "noise_digest": path.digest(),
        "config": serde_json::to_value(cfg).unwrap_or(Value::Null),
        "files": r.files.iter().map(|f| f.file_name().map(|n| n.to_string_lossy().into_owned())).collect::<Vec<_>>(),
        "summary": summary,
        "error": err.as_ref().map(|e| e.to_string()),
    });
    let mp = r.dir.join("manifest.json");
    std::fs::write(&mp, serde_json::to_string_pretty(&manifest).unwrap_or_default())?;
    if let Some(e) = err {
        return Err(e);
    }
    let mut files = r.files;
    files.push(mp);
    Ok(Artifacts { dir: r.dir, files, summary })
}

/// Commands may fail after producing a partial report; the report still goes to the manifest.
type Outcome = std::result::Result<Value, (Value, Error)>;

fn plain(e: Error) -> (Value, Error) {
    (Value::Null, e)
}

fn simulate_spde_cmd(r: &mut Run, path: &NoiseRealization) -> Outcome {
    let model = r.cfg.model().map_err(plain)?;
    let (_, traj) = spde_for(r.cfg, &model, path).map_err(plain)?;
    let width = traj.m + traj.k_unresolved;
    let names: Vec<String> = std::iter::once("t".to_string()).chain((1..=width).map(|n| format!("a{n}"))).collect();
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut csv = r.csv("spde_modes.csv", &header).map_err(plain)?;
    let mut row = Vec::with_capacity(width + 1);
    for i in 0..traj.len() {
        row.clear();
        row.push(traj.time(i));
        row.extend_from_slice(traj.resolved(i));
        row.extend_from_slice(traj.unresolved(i));
        csv.row(&[], &row).map_err(plain)?;
    }
    csv.finish().map_err(plain)?;
    let energy = |i: usize| -> f64 { traj.resolved(i).iter().chain(traj.unresolved(i)).map(|a| a * a).sum() };
    let (e0, e1) = (energy(0), energy(traj.len() - 1));
    let t = traj.time(traj.len() - 1);
    let rate = if e0 > 0.0 && e1 > 0.0 { (e1 / e0).ln() / (2.0 * t) } else { f64::NEG_INFINITY };
    Ok(json!({
        "samples": traj.len(),
        "initial_energy": e0,
        "final_energy": e1,
        "growth_rate": rate,
        "decaying": e1 < e0,
        "sup_norm_final": traj.final_field.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        "lambda_over_lambda_c": model.lambda / model.lambda_c(),
    }))
}

fn reduced_variant(
    cfg: &ExperimentConfig,
    model: &BurgersModel,
    path: &NoiseRealization,
    variant: Variant,
    y0: [f64; 2],
) -> Result<ReducedTrajectory> {
    let (steps, dec) = (cfg.forward_steps(), cfg.run.decimation);
    match variant {
        Variant::Galerkin => simulate_galerkin(model, path, y0, steps, dec),
        Variant::Averaged => simulate_averaged(model, path, y0, steps, dec),
        Variant::H1 => {
            let (m3, m4) = memory_pair(model, path, cfg.noise.spinup)?;
            simulate_h1_reduced(model, path, y0, steps, dec, &m3, &m4)
        }
        Variant::OnTheFly => {
            let pc = PullbackConfig::new(cfg.reduction.q, cfg.reduction.tau, cfg.grid.dt)?;
            simulate_on_the_fly(model, path, y0, pc, steps, dec)
        }
    }
}

fn initial_resolved(cfg: &ExperimentConfig, model: &BurgersModel) -> Result<[f64; 2]> {
    let grid = Grid::new(cfg.grid.nx, model.l)?;
    initial_state_from(&grid, &grid.field_from_modes(&cfg.run.u0))
}

fn simulate_reduced_cmd(r: &mut Run, path: &NoiseRealization) -> Outcome {
    let model = r.cfg.model().map_err(plain)?;
    let y0 = initial_resolved(r.cfg, &model).map_err(plain)?;
    let tr = reduced_variant(r.cfg, &model, path, r.cfg.reduction.variant, y0).map_err(plain)?;
    let with_closure = !tr.closure.is_empty();
    let header: &[&str] = if with_closure { &["t", "y1", "y2", "c3", "c4"] } else { &["t", "y1", "y2"] };
    let mut csv = r.csv("reduced.csv", header).map_err(plain)?;
    for i in 0..tr.len() {
        let y = tr.y[i];
        if with_closure {
            let h = tr.closure[i];
            csv.row(&[], &[tr.time(i), y[0], y[1], h[0], h[1]]).map_err(plain)?;
        } else {
            csv.row(&[], &[tr.time(i), y[0], y[1]]).map_err(plain)?;
        }
    }
    csv.finish().map_err(plain)?;
    let last = tr.y[tr.len() - 1];
    Ok(json!({ "variant": tr.tag, "samples": tr.len(), "final_state": last }))
}

fn pullback_cmd(r: &mut Run, path: &NoiseRealization) -> Outcome {
    let cfg = r.cfg;
    let model = cfg.model().map_err(plain)?;
    let pc = PullbackConfig::new(cfg.reduction.q, cfg.reduction.tau, cfg.grid.dt).map_err(plain)?;
    let mut pb = Pullback::new(&model, path, pc).map_err(plain)?;
    let t = (cfg.pullback.at_time / cfg.grid.dt).round() as i64;
    let n = cfg.pullback.xi_points;
    let axis: Vec<f64> = (0..n)
        .map(|i| if n == 1 { 0.0 } else { -cfg.pullback.xi_max + 2.0 * cfg.pullback.xi_max * i as f64 / (n - 1) as f64 })
        .collect();
    let mut csv = r.csv("pullback_pm.csv", &["q", "xi1", "xi2", "h3", "h4"]).map_err(plain)?;
    let mut peak = vec![0.0f64; pc.q];
    for &x1 in &axis {
        for &x2 in &axis {
            let layers = pb.evaluate_layers([x1, x2], t).map_err(plain)?;
            for (l, h) in layers.iter().enumerate() {
                peak[l] = peak[l].max(h.c3().abs()).max(h.c4().abs());
                csv.row(&[&(l + 1).to_string()], &[x1, x2, h.c3(), h.c4()]).map_err(plain)?;
            }
        }
    }
    csv.finish().map_err(plain)?;
    Ok(json!({ "tau": pc.tau, "q": pc.q, "time_index": t, "max_abs_by_layer": peak }))
}

/// Monte-Carlo moments of a stationary series against the closed forms.
pub fn memory_mc_report(proc_: &MemoryProcess, dt: f64) -> Value {
    let spec = proc_.spec;
    let rate = spec.relaxation_rate();
    let admissible = mn_moments(spec.g, spec.k, spec.sigma).ok();
    let v = proc_.values();
    let stride = ((5.0 / (rate * dt)).ceil() as usize).max(1);
    let sub: Vec<f64> = v.iter().step_by(stride).cloned().collect();
    let n = sub.len() as f64;
    let mean = sub.iter().sum::<f64>() / n;
    let var = sub.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = sub.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let se_mean = (var / n).sqrt();
    let se_var = ((m4 - var * var) / n).max(0.0).sqrt();
    let lag_steps = ((3.0 / rate) / dt).ceil() as usize;
    let curve = acf(v, dt, lag_steps);
    let acf_rate = curve.exponential_rate(0.05).unwrap_or(f64::NAN);
    let (s_star, s_sharp) = sigma_bounds(spec.g, spec.k).unwrap_or((f64::NAN, f64::NAN));
    let mut rep = json!({
        "g": spec.g, "k": spec.k, "sigma": spec.sigma,
        "sigma_star": s_star, "sigma_sharp": s_sharp,
        "admissible_mean": spec.sigma < s_star, "admissible_variance": spec.sigma < s_sharp,
        "samples": sub.len(), "stride": stride,
        "mc_mean": mean, "mc_variance": var, "se_mean": se_mean, "se_variance": se_var, "mc_acf_rate": acf_rate,
    });
    if let Some(m) = admissible {
        rep["mean"] = json!(m.mean);
        rep["variance"] = json!(if m.variance.is_finite() { Value::from(m.variance) } else { Value::from("inf") });
        rep["acf_rate"] = json!(m.acf_rate);
        rep["mean_within_3se"] = json!((mean - m.mean).abs() <= 3.0 * se_mean);
        rep["variance_within_3se"] = json!(m.variance.is_finite() && (var - m.variance).abs() <= 3.0 * se_var);
        rep["acf_rate_rel_error"] = json!((acf_rate - m.acf_rate).abs() / m.acf_rate);
    }
    rep
}

fn memory_stats_cmd(r: &mut Run, path: &NoiseRealization) -> Outcome {
    let cfg = r.cfg;
    let model = cfg.model().map_err(plain)?;
    let (g1, g2) = model.gaps();
    let mut reports = Vec::new();
    let mut violation = None;
    let mut procs = Vec::new();
    for (label, g) in [("beta1+beta2-beta3", g1), ("2beta2-beta4", g2)] {
        let (s_star, s_sharp) = sigma_bounds(g, 2).map_err(plain)?;
        if model.sigma >= s_star {
            reports.push(json!({ "gap": label, "g": g, "sigma_star": s_star, "sigma_sharp": s_sharp, "admissible_mean": false, "admissible_variance": false }));
            violation.get_or_insert(Error::Gap { label: format!("σ < σ_* for {label}"), value: model.sigma });
            continue;
        }
        let p = mn_stationary(&MemorySpec::new(g, 2, model.sigma).map_err(plain)?, path, cfg.noise.spinup).map_err(plain)?;
        let mut rep = memory_mc_report(&p, cfg.grid.dt);
        rep["gap"] = json!(label);
        if model.sigma >= s_sharp {
            violation.get_or_insert(Error::Gap { label: format!("σ < σ_# for {label}"), value: model.sigma });
        }
        if let Some(w) = &p.warning {
            rep["warning"] = json!(w);
        }
        reports.push(rep);
        procs.push(p);
    }
    if procs.len() == 2 {
        let mut csv = r.csv("memory.csv", &["t", "M3", "M4"]).map_err(plain)?;
        for k in (0..=cfg.forward_steps() as i64).step_by(cfg.run.decimation) {
            csv.row(&[], &[k as f64 * cfg.grid.dt, procs[0].get(k), procs[1].get(k)]).map_err(plain)?;
        }
        csv.finish().map_err(plain)?;
    }
    let summary = json!({ "reports": reports });
    match violation {
        Some(e) => Err((summary, e)),
        None => Ok(summary),
    }
}

fn defect_cmd(r: &mut Run, path: &NoiseRealization) -> Outcome {
    let cfg = r.cfg;
    let base = cfg.model().map_err(plain)?;
    let lfs: Vec<Option<f64>> =
        if cfg.sweep.lambda_factors.is_empty() { vec![None] } else { cfg.sweep.lambda_factors.iter().map(|&f| Some(f)).collect() };
    let sigmas: Vec<f64> = if cfg.sweep.sigmas.is_empty() { vec![base.sigma] } else { cfg.sweep.sigmas.clone() };
    let mut qs = cfg.sweep.q.clone();
    qs.sort_unstable();
    qs.dedup();
    let mut taus = cfg.sweep.tau.clone();
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    let qmax = *qs.last().unwrap_or(&1);
    let (t1, t2, alpha) = (cfg.diagnostics.t1, cfg.diagnostics.t2, cfg.diagnostics.alpha);

    let mut table = r.csv("defect_qbar.csv", &["lambda_factor", "sigma", "pm", "q", "tau", "qbar"]).map_err(plain)?;
    let qnames: Vec<String> = qs.iter().map(|q| format!("q{q}")).collect();
    let mut mheader = vec!["lambda_factor", "sigma", "tau"];
    mheader.extend(qnames.iter().map(String::as_str));
    let mut matrix = r.csv("defect_matrix.csv", &mheader).map_err(plain)?;
    let mut curve = r.csv("defect_curve.csv", &["lambda_factor", "sigma", "T", "Q"]).map_err(plain)?;
    let mut points = Vec::new();
    for lf in &lfs {
        for &sigma in &sigmas {
            let mut section = cfg.model.clone();
            if let Some(f) = lf {
                section.lambda = None;
                section.lambda_factor = *f;
            }
            section.sigma = sigma;
            let model = section.build().map_err(plain)?;
            let lfv = model.lambda / model.lambda_c();
            let (_, traj) = spde_for(cfg, &model, path).map_err(plain)?;
            let (lf_s, sg_s) = (fmt_f64(lfv), fmt_f64(sigma));
            let mut rows = Vec::new();
            for &tau in &taus {
                let pc = PullbackConfig::new(qmax, tau, cfg.grid.dt).map_err(plain)?;
                let reps = pullback_defect_reports(&traj, &model, path, pc, alpha).map_err(plain)?;
                let mut row = Vec::new();
                for &q in &qs {
                    let qb = reps[q - 1].timeavg(t1, t2).map_err(plain)?;
                    table.row(&[&lf_s, &sg_s, "pullback", &q.to_string()], &[tau, qb]).map_err(plain)?;
                    row.push(qb);
                }
                matrix.row(&[], &[&[lfv, sigma, tau][..], &row].concat()).map_err(plain)?;
                if q_tau_match(cfg.reduction.q, cfg.reduction.tau, &qs, tau) {
                    let rep = &reps[cfg.reduction.q - 1];
                    for (t, q) in rep.times.iter().zip(&rep.q) {
                        curve.row(&[], &[lfv, sigma, *t, *q]).map_err(plain)?;
                    }
                }
                rows.push(json!({ "tau": tau, "qbar": row }));
            }
            let h1 = match memory_pair(&model, path, cfg.noise.spinup) {
                Ok((m3, m4)) => {
                    let pm = H1Stationary { model, m3: &m3, m4: &m4 };
                    let qb = defect_report(&traj, &model, &pm, alpha).and_then(|rep| rep.timeavg(t1, t2)).map_err(plain)?;
                    table.row(&[&lf_s, &sg_s, "h1-stationary", "1"], &[f64::INFINITY, qb]).map_err(plain)?;
                    Some(qb)
                }
                Err(Error::Gap { .. }) => None,
                Err(e) => return Err(plain(e)),
            };
            points.push(json!({ "lambda_factor": lfv, "sigma": sigma, "q": qs, "rows": rows, "h1_stationary": h1 }));
        }
    }
    table.finish().map_err(plain)?;
    matrix.finish().map_err(plain)?;
    curve.finish().map_err(plain)?;
    Ok(json!({ "t1": t1, "t2": t2, "alpha": alpha, "points": points }))
}

fn q_tau_match(q: usize, tau: f64, qs: &[usize], t: f64) -> bool {
    qs.contains(&q) && (tau - t).abs() < 1e-12
}

fn series_after(y: &[f64], dt_sample: f64, burnin: f64) -> &[f64] {
    let skip = ((burnin / dt_sample).ceil() as usize).min(y.len());
    &y[skip..]
}

fn pdf_acf_cmd(r: &mut Run, path: &NoiseRealization) -> Outcome {
    let cfg = r.cfg;
    let model = cfg.model().map_err(plain)?;
    let (grid, spde) = spde_for(cfg, &model, path).map_err(plain)?;
    let y0 = initial_state_from(&grid, &grid.field_from_modes(&cfg.run.u0)).map_err(plain)?;
    let step = cfg.grid.dt * cfg.run.decimation as f64;
    let lag = ((cfg.diagnostics.acf_max_lag / step).round() as usize).max(1);
    let burn = cfg.diagnostics.burnin;

    let stats = |series: &[f64]| -> Result<(DensityCurve, AcfCurve)> {
        let s = series_after(series, step, burn);
        Ok((kde_pdf(s, cfg.diagnostics.kde_bandwidth)?, acf(s, step, lag)))
    };
    let mut pdf = r.csv("pdf.csv", &["source", "mode", "x", "density"]).map_err(plain)?;
    let mut acf_csv = r.csv("acf.csv", &["source", "mode", "lag", "acf"]).map_err(plain)?;
    let mut reference = Vec::new();
    for mode in 1..=2 {
        let (d, a) = stats(&spde.mode_series(mode)).map_err(plain)?;
        write_curves(&mut pdf, &mut acf_csv, "spde", mode, &d, &a).map_err(plain)?;
        reference.push((d, a));
    }
    let mut sources = Vec::new();
    let mut errs: Vec<(String, Vec<[f64; 2]>)> = Vec::new();
    for v in [Variant::Galerkin, Variant::H1, Variant::Averaged, Variant::OnTheFly] {
        let tr = match reduced_variant(cfg, &model, path, v, y0) {
            Ok(t) => t,
            Err(e @ (Error::Divergence { .. } | Error::Gap { .. })) => {
                sources.push(json!({ "variant": format!("{v:?}"), "skipped": e.to_string() }));
                continue;
            }
            Err(e) => return Err(plain(e)),
        };
        let mut modes = Vec::new();
        for mode in 1..=2 {
            let (d, a) = stats(&tr.mode_series(mode)).map_err(plain)?;
            write_curves(&mut pdf, &mut acf_csv, &tr.tag, mode, &d, &a).map_err(plain)?;
            let (rd, ra) = &reference[mode - 1];
            let dev = a.values.iter().zip(&ra.values).map(|(x, y)| (x - y).abs()).fold(0.0f64, f64::max);
            modes.push(json!({ "mode": mode, "pdf_l1": l1_distance(&d, rd), "acf_max_abs_dev": dev }));
        }
        let te = trajectory_error(&tr, &spde).map_err(plain)?;
        sources.push(json!({ "variant": tr.tag, "modes": modes, "mean_abs_error": te.mean }));
        errs.push((tr.tag.clone(), te.err));
    }
    pdf.finish().map_err(plain)?;
    acf_csv.finish().map_err(plain)?;
    let names: Vec<String> =
        std::iter::once("t".into()).chain(errs.iter().flat_map(|(n, _)| [format!("{n}_err1"), format!("{n}_err2")])).collect();
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut te = r.csv("trajectory_error.csv", &header).map_err(plain)?;
    for i in 0..spde.len() {
        let mut row = vec![spde.time(i)];
        for (_, e) in &errs {
            row.extend_from_slice(&e[i]);
        }
        te.row(&[], &row).map_err(plain)?;
    }
    te.finish().map_err(plain)?;
    Ok(json!({ "samples": spde.len(), "burnin": burn, "sources": sources }))
}

fn write_curves(pdf: &mut Csv, acf_csv: &mut Csv, source: &str, mode: usize, d: &DensityCurve, a: &AcfCurve) -> Result<()> {
    let m = mode.to_string();
    for (x, y) in d.x.iter().zip(&d.density) {
        pdf.row(&[source, &m], &[*x, *y])?;
    }
    for (l, v) in a.lags.iter().zip(&a.values) {
        acf_csv.row(&[source, &m], &[*l, *v])?;
    }
    Ok(())
}
