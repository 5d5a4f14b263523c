//! Monte Carlo error studies on coupled Brownian paths.
//!
//! Every sample index `s` owns one [`BrownianDriver`] at the reference level.
//! The spectral reference and all resolutions of a study advance together
//! over the reference steps, each consuming the aggregation of the same fine
//! increments, and per-step errors are measured against the reference state
//! at the same time.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::stats::{fit_rate, moment_error, pathwise_stats, spread, MomentError, PathwiseStats, RateFit};
use crate::compare::{p1_l2_distance, velocity_h1_distance, ModalPairing};
use crate::error::{Error, Result};
use crate::fem::{Space, TaylorHood};
use crate::mesh::TorusMesh;
use crate::model::SchemeKind;
use crate::noise::BrownianDriver;
use crate::scheme::{FemScheme, FemState, FemWorkspace, SpectralRun};
use crate::spectral::SpectralData;

/// Samples advanced together through one multi right-hand side solve.
pub const BATCH: usize = 32;

/// Per-step divergence and saddle residual bound checked on every run.
pub const RESIDUAL_BOUND: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    /// Truncated Fourier space with the configured mode count.
    Spectral,
    /// Taylor-Hood elements on the `n × n` mesh.
    Fem(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Resolution {
    pub level: Level,
    pub steps: usize,
    pub kind: SchemeKind,
}

/// Error functionals of one sample at one resolution. Flagged samples carry
/// `NaN` errors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleOutcome {
    pub sample: usize,
    /// Checksum of the fine increments the sample was driven by.
    pub checksum: u64,
    pub flagged: bool,
    /// `max_{1≤n≤M} ‖u(t_n) - u^n‖`
    pub max_error: f64,
    /// `‖ν k Σ ∇(u(t_n) - u^n)‖`
    pub weak_h1: f64,
    /// `‖P(t_ℓ) - k Σ p^n‖`, largest over the checkpoints and `ℓ = M`
    pub err_p: f64,
    /// `‖R(t_ℓ) - k Σ r^n‖`, largest over the checkpoints and `ℓ = M`
    pub err_r: f64,
    /// `max_n ‖u^n‖² + ν k Σ ‖∇u^n‖²`
    pub stability: f64,
    pub pressure_gradient: f64,
    pub pseudo_pressure_gradient: f64,
    pub max_divergence_residual: f64,
    pub max_saddle_residual: f64,
}

impl SampleOutcome {
    fn flagged(sample: usize, checksum: u64) -> Self {
        Self {
            sample,
            checksum,
            flagged: true,
            max_error: f64::NAN,
            weak_h1: f64::NAN,
            err_p: f64::NAN,
            err_r: f64::NAN,
            stability: f64::NAN,
            pressure_gradient: f64::NAN,
            pseudo_pressure_gradient: f64::NAN,
            max_divergence_residual: 0.0,
            max_saddle_residual: 0.0,
        }
    }
}

/// Aggregated errors of one resolution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolutionReport {
    pub resolution: Resolution,
    /// Mesh size for finite elements, `L / N` for the spectral space.
    pub h: f64,
    pub k: f64,
    pub velocity: Vec<MomentError>,
    pub weak_h1: Vec<MomentError>,
    pub pressure_p: Vec<MomentError>,
    pub pressure_r: Vec<MomentError>,
    pub pathwise: PathwiseStats,
    /// Sample means over the unflagged samples.
    pub mean_stability: f64,
    pub mean_pressure_gradient: f64,
    pub mean_pseudo_pressure_gradient: f64,
    pub max_divergence_residual: f64,
    pub max_saddle_residual: f64,
    pub samples: usize,
    pub flagged: usize,
    #[serde(skip)]
    pub outcomes: Vec<SampleOutcome>,
}

impl ResolutionReport {
    /// Spatial size shown in reports: `n` for meshes, `N` for spectral runs.
    pub fn size(&self, n_modes: usize) -> usize {
        match self.resolution.level {
            Level::Spectral => n_modes,
            Level::Fem(n) => n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NamedFit {
    pub name: String,
    pub fit: Option<RateFit>,
    pub error: Option<String>,
}

/// One acceptance band. `band` is inclusive; `value` is `NaN` when the
/// quantity could not be computed, which fails the check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub band: [f64; 2],
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, band: [f64; 2]) -> Self {
        Self {
            name: name.into(),
            value,
            band,
            pass: value >= band[0] && value <= band[1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyReport {
    pub study: String,
    pub reference: Resolution,
    pub n_modes: usize,
    pub noise: String,
    pub q_list: Vec<f64>,
    pub reports: Vec<ResolutionReport>,
    pub fits: Vec<NamedFit>,
    pub checks: Vec<Check>,
    /// Hash of the per-sample increment checksums in sample order.
    pub path_checksum: u64,
}

impl StudyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn fit(&self, name: &str) -> Option<&RateFit> {
        self.fits.iter().find(|f| f.name == name).and_then(|f| f.fit.as_ref())
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

struct FemLevel {
    th: TaylorHood,
    pairing: ModalPairing,
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    data: SpectralData,
    resolutions: &'a [Resolution],
    reference_steps: usize,
    /// `(scheme, u⁰ state, level index)` per resolution, `None` for spectral ones
    schemes: Vec<Option<(FemScheme<'a>, FemState, usize)>>,
    levels: &'a [FemLevel],
    pressure_times: BTreeSet<usize>,
}

enum Track {
    Spectral(Vec<SpectralRun>),
    Fem(Vec<FemState>, FemWorkspace),
}

struct TrackState {
    track: Track,
    max_error: Vec<f64>,
    err_p: Vec<f64>,
    err_r: Vec<f64>,
    flagged: Vec<bool>,
}

/// Run `resolutions` against a spectral reference with `reference_steps`
/// steps, returning `[resolution][sample]` outcomes in sample order.
pub fn run_study(
    cfg: &ExperimentConfig,
    resolutions: &[Resolution],
    reference_steps: usize,
) -> Result<Vec<Vec<SampleOutcome>>> {
    cfg.validate()?;
    if reference_steps == 0 || cfg.m_ref % reference_steps != 0 {
        return Err(Error::Config(format!(
            "reference steps {reference_steps} do not divide M_ref = {}",
            cfg.m_ref
        )));
    }
    for r in resolutions {
        if r.steps == 0 || reference_steps % r.steps != 0 {
            return Err(Error::Config(format!(
                "M = {} does not divide the reference step count {reference_steps}",
                r.steps
            )));
        }
    }
    let mut pressure_times: BTreeSet<usize> = BTreeSet::from([reference_steps]);
    for &j in &cfg.checkpoints {
        let aligned = resolutions.iter().all(|r| j % (reference_steps / r.steps) == 0);
        if j == 0 || j > reference_steps || !aligned {
            return Err(Error::Config(format!(
                "checkpoint {j} is not a step of every resolution (reference steps {reference_steps})"
            )));
        }
        pressure_times.insert(j);
    }

    let data = SpectralData::new(&cfg.model, cfg.n_modes)?;
    let support = data.support();
    let mut sizes: Vec<usize> = resolutions
        .iter()
        .filter_map(|r| match r.level {
            Level::Fem(n) => Some(n),
            Level::Spectral => None,
        })
        .collect();
    sizes.sort_unstable();
    sizes.dedup();
    let levels = sizes
        .iter()
        .map(|&n| {
            let th = TaylorHood::new(TorusMesh::new(cfg.model.l, n)?)?;
            let pairing = ModalPairing::new(&th, Space::P2Scalar, &support)?;
            Ok(FemLevel { th, pairing })
        })
        .collect::<Result<Vec<_>>>()?;
    let schemes = resolutions
        .iter()
        .map(|r| match r.level {
            Level::Spectral => Ok(None),
            Level::Fem(n) => {
                let li = sizes.binary_search(&n).expect("level was collected");
                let scheme = FemScheme::new(&levels[li].th, &cfg.model, r.kind, r.steps)?;
                let init = scheme.initial_state()?;
                Ok(Some((scheme, init, li)))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let ctx = Context {
        cfg,
        data,
        resolutions,
        reference_steps,
        schemes,
        levels: &levels,
        pressure_times,
    };

    let starts: Vec<usize> = (0..cfg.samples).step_by(BATCH).collect();
    let chunks = starts
        .par_iter()
        .map(|&s0| run_chunk(&ctx, s0..(s0 + BATCH).min(cfg.samples)))
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![Vec::with_capacity(cfg.samples); resolutions.len()];
    for chunk in chunks {
        for (all, part) in out.iter_mut().zip(chunk) {
            all.extend(part);
        }
    }
    Ok(out)
}

fn run_chunk(ctx: &Context, samples: std::ops::Range<usize>) -> Result<Vec<Vec<SampleOutcome>>> {
    let cfg = ctx.cfg;
    let data = &ctx.data;
    let s = samples.len();
    let drivers = samples
        .clone()
        .map(|i| BrownianDriver::with_stream(cfg.seed, i as u64, cfg.model.t, cfg.m_ref))
        .collect::<Result<Vec<_>>>()?;
    let ref_dw = drivers
        .iter()
        .map(|d| d.increments(ctx.reference_steps))
        .collect::<Result<Vec<_>>>()?;
    let res_dw = ctx
        .resolutions
        .iter()
        .map(|r| drivers.iter().map(|d| d.increments(r.steps)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let k_ref = cfg.model.t / ctx.reference_steps as f64;

    let mut refs: Vec<SpectralRun> = (0..s).map(|_| SpectralRun::new(data)).collect();
    let mut tracks: Vec<TrackState> = ctx
        .schemes
        .iter()
        .map(|sch| TrackState {
            track: match sch {
                None => Track::Spectral((0..s).map(|_| SpectralRun::new(data)).collect()),
                Some((_, init, _)) => Track::Fem(vec![init.clone(); s], FemWorkspace::default()),
            },
            max_error: vec![0.0; s],
            err_p: vec![0.0; s],
            err_r: vec![0.0; s],
            flagged: vec![false; s],
        })
        .collect();

    for j in 1..=ctx.reference_steps {
        for (run, dw) in refs.iter_mut().zip(&ref_dw) {
            run.advance(data, SchemeKind::Modified, k_ref, dw[j - 1]);
        }
        let pressure_time = ctx.pressure_times.contains(&j);
        for (ri, (res, ts)) in ctx.resolutions.iter().zip(tracks.iter_mut()).enumerate() {
            let stride = ctx.reference_steps / res.steps;
            if j % stride != 0 {
                continue;
            }
            let idx = j / stride - 1;
            let dws: Vec<f64> = res_dw[ri].iter().map(|d| d[idx]).collect();
            let k = cfg.model.t / res.steps as f64;
            match &mut ts.track {
                Track::Spectral(runs) => {
                    for (i, run) in runs.iter_mut().enumerate() {
                        if ts.flagged[i] {
                            continue;
                        }
                        run.advance(data, res.kind, k, dws[i]);
                        if run.diagnostics.unstable {
                            ts.flagged[i] = true;
                            continue;
                        }
                        let r = &refs[i].state;
                        let e = r.u.difference(&run.state.u).l2_norm();
                        ts.max_error[i] = ts.max_error[i].max(e);
                        if pressure_time {
                            let ep = r.pressure_sum.difference(&run.state.pressure_sum).l2_norm();
                            let er = r.pseudo_pressure_sum.difference(&run.state.pseudo_pressure_sum).l2_norm();
                            ts.err_p[i] = ts.err_p[i].max(ep);
                            ts.err_r[i] = ts.err_r[i].max(er);
                        }
                    }
                }
                Track::Fem(states, ws) => {
                    let (scheme, _, li) = ctx.schemes[ri].as_ref().expect("finite element track");
                    let level = &ctx.levels[*li];
                    step_fem(scheme, states, &mut ts.flagged, &dws, ws)?;
                    for (i, st) in states.iter().enumerate() {
                        if ts.flagged[i] {
                            continue;
                        }
                        if st.diagnostics.unstable {
                            ts.flagged[i] = true;
                            continue;
                        }
                        let r = &refs[i].state;
                        let energy = *st.diagnostics.energy.last().expect("energy is recorded");
                        let e = level.pairing.velocity_distance(&r.u, &st.u, energy * energy)?;
                        ts.max_error[i] = ts.max_error[i].max(e);
                        if pressure_time {
                            let ep = p1_l2_distance(&level.th, &r.pressure_sum, &st.pressure_sum);
                            let er = p1_l2_distance(&level.th, &r.pseudo_pressure_sum, &st.pseudo_pressure_sum);
                            ts.err_p[i] = ts.err_p[i].max(ep);
                            ts.err_r[i] = ts.err_r[i].max(er);
                        }
                    }
                }
            }
        }
    }

    let outcomes = tracks
        .into_iter()
        .zip(&ctx.schemes)
        .map(|(ts, sch)| {
            (0..s)
                .map(|i| {
                    let sample = samples.start + i;
                    let checksum = drivers[i].checksum();
                    if ts.flagged[i] {
                        return SampleOutcome::flagged(sample, checksum);
                    }
                    let r = &refs[i].state;
                    let (weak_h1, d) = match (&ts.track, sch) {
                        (Track::Spectral(runs), _) => {
                            let run = &runs[i];
                            (r.velocity_sum.difference(&run.state.velocity_sum).h1_seminorm(), &run.diagnostics)
                        }
                        (Track::Fem(states, _), Some((_, _, li))) => {
                            let st = &states[i];
                            (velocity_h1_distance(&ctx.levels[*li].th, &r.velocity_sum, &st.velocity_sum), &st.diagnostics)
                        }
                        (Track::Fem(..), None) => unreachable!("finite element track without a scheme"),
                    };
                    SampleOutcome {
                        sample,
                        checksum,
                        flagged: false,
                        max_error: ts.max_error[i],
                        weak_h1,
                        err_p: ts.err_p[i],
                        err_r: ts.err_r[i],
                        stability: d.stability_functional(),
                        pressure_gradient: d.pressure_gradient,
                        pseudo_pressure_gradient: d.pseudo_pressure_gradient,
                        max_divergence_residual: d.max_divergence_residual,
                        max_saddle_residual: d.max_saddle_residual,
                    }
                })
                .collect()
        })
        .collect();
    Ok(outcomes)
}

/// One batched step of the unflagged states. A failed batch solve is
/// retried one trajectory at a time and the failing ones are flagged.
fn step_fem(
    scheme: &FemScheme,
    states: &mut [FemState],
    flagged: &mut [bool],
    dws: &[f64],
    ws: &mut FemWorkspace,
) -> Result<()> {
    let (mut batch, dw): (Vec<&mut FemState>, Vec<f64>) = states
        .iter_mut()
        .zip(flagged.iter())
        .zip(dws)
        .filter(|((_, f), _)| !**f)
        .map(|((st, _), w)| (st, *w))
        .unzip();
    if scheme.step_batch_refs(&mut batch, &dw, ws).is_ok() {
        return Ok(());
    }
    drop(batch);
    for ((st, f), w) in states.iter_mut().zip(flagged.iter_mut()).zip(dws) {
        if !*f && scheme.step(st, *w, ws).is_err() {
            *f = true;
        }
    }
    Ok(())
}

/// Aggregate the outcomes of one resolution.
pub fn summarize(cfg: &ExperimentConfig, resolution: Resolution, outcomes: Vec<SampleOutcome>) -> Result<ResolutionReport> {
    let used: Vec<&SampleOutcome> = outcomes.iter().filter(|o| !o.flagged).collect();
    let flagged = outcomes.len() - used.len();
    if used.is_empty() {
        return Err(Error::Experiment(format!("all {} samples were flagged unstable", outcomes.len())));
    }
    let l = cfg.model.l;
    let h = match resolution.level {
        Level::Spectral => l / cfg.n_modes as f64,
        Level::Fem(n) => l * std::f64::consts::SQRT_2 / n as f64,
    };
    let k = cfg.model.t / resolution.steps as f64;
    let moments = |f: fn(&SampleOutcome) -> f64| -> Result<Vec<MomentError>> {
        let v: Vec<f64> = used.iter().map(|o| f(o)).collect();
        cfg.q_list.iter().map(|&q| moment_error(&v, q)).collect()
    };
    let mean = |f: fn(&SampleOutcome) -> f64| used.iter().map(|o| f(o)).sum::<f64>() / used.len() as f64;
    let max_errors: Vec<f64> = used.iter().map(|o| o.max_error).collect();
    Ok(ResolutionReport {
        resolution,
        h,
        k,
        velocity: moments(|o| o.max_error)?,
        weak_h1: moments(|o| o.weak_h1)?,
        pressure_p: moments(|o| o.err_p)?,
        pressure_r: moments(|o| o.err_r)?,
        pathwise: pathwise_stats(&max_errors, k, cfg.gamma1)?,
        mean_stability: mean(|o| o.stability),
        mean_pressure_gradient: mean(|o| o.pressure_gradient),
        mean_pseudo_pressure_gradient: mean(|o| o.pseudo_pressure_gradient),
        max_divergence_residual: used.iter().fold(0.0, |m, o| m.max(o.max_divergence_residual)),
        max_saddle_residual: used.iter().fold(0.0, |m, o| m.max(o.max_saddle_residual)),
        samples: used.len(),
        flagged,
        outcomes,
    })
}

fn study(
    cfg: &ExperimentConfig,
    name: &str,
    resolutions: &[Resolution],
    reference_steps: usize,
) -> Result<StudyReport> {
    let outcomes = run_study(cfg, resolutions, reference_steps)?;
    let path_checksum = outcomes.first().map_or(0, |o| combine(o.iter().map(|x| x.checksum)));
    let reports = resolutions
        .iter()
        .zip(outcomes)
        .map(|(r, o)| summarize(cfg, *r, o))
        .collect::<Result<Vec<_>>>()?;
    let mut report = StudyReport {
        study: name.into(),
        reference: Resolution {
            level: Level::Spectral,
            steps: reference_steps,
            kind: SchemeKind::Modified,
        },
        n_modes: cfg.n_modes,
        noise: cfg.model.noise.family.name().into(),
        q_list: cfg.q_list.clone(),
        reports,
        fits: Vec::new(),
        checks: Vec::new(),
        path_checksum,
    };
    report.checks.extend(common_checks(cfg, &report.reports));
    Ok(report)
}

fn combine(xs: impl Iterator<Item = u64>) -> u64 {
    xs.fold(0xcbf2_9ce4_8422_2325, |h, x| (h ^ x).wrapping_mul(0x0100_0000_01b3))
}

/// Flagged fraction, residual bounds and moment monotonicity.
fn common_checks(cfg: &ExperimentConfig, reports: &[ResolutionReport]) -> Vec<Check> {
    let tol = &cfg.tolerances;
    let flagged = reports
        .iter()
        .map(|r| r.flagged as f64 / (r.flagged + r.samples) as f64)
        .fold(0.0, f64::max);
    let div = reports.iter().map(|r| r.max_divergence_residual).fold(0.0, f64::max);
    let saddle = reports.iter().map(|r| r.max_saddle_residual).fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..cfg.q_list.len()).collect();
    order.sort_by(|&a, &b| cfg.q_list[a].total_cmp(&cfg.q_list[b]));
    let violations = reports
        .iter()
        .flat_map(|r| order.windows(2).map(move |w| r.velocity[w[0]].value > r.velocity[w[1]].value))
        .filter(|v| *v)
        .count();
    vec![
        Check::new("flagged_fraction", flagged, [0.0, tol.max_flagged_fraction]),
        Check::new("divergence_residual", div, [0.0, RESIDUAL_BOUND]),
        Check::new("saddle_residual", saddle, [0.0, RESIDUAL_BOUND]),
        Check::new("moment_monotone_violations", violations as f64, [0.0, 0.0]),
    ]
}

fn fit_named(name: String, points: Vec<(f64, f64)>) -> NamedFit {
    match fit_rate(&points) {
        Ok(fit) => NamedFit { name, fit: Some(fit), error: None },
        Err(e) => NamedFit { name, fit: None, error: Some(e.to_string()) },
    }
}

fn slope_of(fit: &NamedFit) -> f64 {
    fit.fit.as_ref().map_or(f64::NAN, |f| f.slope)
}

fn q_label(q: f64) -> String {
    format!("q{q}")
}

fn variation(values: impl Iterator<Item = f64>) -> f64 {
    spread(values) - 1.0
}

/// Temporal convergence of spectral Euler-Maruyama runs over `M_list`
/// against the `M_ref` reference.
pub fn converge_time(cfg: &ExperimentConfig) -> Result<StudyReport> {
    if cfg.m_list.len() < 3 {
        return Err(Error::Config("the time ladder needs at least 3 step counts".into()));
    }
    let res: Vec<Resolution> = cfg
        .m_list
        .iter()
        .map(|&m| Resolution { level: Level::Spectral, steps: m, kind: cfg.scheme })
        .collect();
    let mut report = study(cfg, "converge-time", &res, cfg.m_ref)?;
    let tol = cfg.tolerances.clone();
    let reps = &report.reports;
    let k_points = |f: &dyn Fn(&ResolutionReport) -> f64| -> Vec<(f64, f64)> { reps.iter().map(|r| (r.k, f(r))).collect() };
    let mut fits = Vec::new();
    for (qi, &q) in cfg.q_list.iter().enumerate() {
        fits.push(fit_named(format!("velocity_{}", q_label(q)), k_points(&|r| r.velocity[qi].value)));
    }
    fits.push(fit_named("weak_h1".into(), k_points(&|r| r.weak_h1[0].value)));
    fits.push(fit_named("pressure_p".into(), k_points(&|r| r.pressure_p[0].value)));
    fits.push(fit_named("pressure_r".into(), k_points(&|r| r.pressure_r[0].value)));

    let mut checks = Vec::new();
    for (qi, &q) in cfg.q_list.iter().enumerate() {
        let f = &fits[qi];
        if qi == 0 {
            checks.push(Check::new(format!("velocity_slope_{}", q_label(q)), slope_of(f), tol.velocity_slope));
            let r2 = f.fit.as_ref().map_or(f64::NAN, |f| f.r2);
            checks.push(Check::new(format!("velocity_r2_{}", q_label(q)), r2, [tol.min_r2, 1.0]));
        } else {
            checks.push(Check::new(format!("moment_slope_{}", q_label(q)), slope_of(f), tol.moment_slope));
        }
    }
    if let Some(band) = tol.pressure_slope {
        let f = fits.iter().find(|f| f.name == "pressure_p").expect("pressure fit");
        checks.push(Check::new("pressure_slope", slope_of(f), band));
    }
    checks.push(Check::new(
        "stability_variation",
        variation(reps.iter().map(|r| r.mean_stability)),
        [0.0, tol.stability_variation],
    ));
    let pathwise: Vec<PathwiseStats> = reps.iter().map(|r| r.pathwise.clone()).collect();
    checks.push(Check::new(
        "quantile_stability",
        super::stats::quantile_stability(&pathwise),
        [1.0, tol.quantile_stability],
    ));
    report.fits = fits;
    report.checks.extend(checks);
    Ok(report)
}

/// Spatial convergence of the configured scheme over `n_list` at the
/// fixed step count `M_list[0]`, against the spectral solution with the
/// same step on the same paths.
pub fn converge_space(cfg: &ExperimentConfig) -> Result<StudyReport> {
    if cfg.n_list.len() < 3 {
        return Err(Error::Config("the mesh ladder needs at least 3 sizes".into()));
    }
    let m = *cfg.m_list.first().ok_or_else(|| Error::Config("M_list is empty".into()))?;
    let res: Vec<Resolution> = cfg
        .n_list
        .iter()
        .map(|&n| Resolution { level: Level::Fem(n), steps: m, kind: cfg.scheme })
        .collect();
    let mut report = study(cfg, "converge-space", &res, m)?;
    let tol = cfg.tolerances.clone();
    let reps = &report.reports;
    let h_points = |f: &dyn Fn(&ResolutionReport) -> f64| -> Vec<(f64, f64)> { reps.iter().map(|r| (r.h, f(r))).collect() };
    let fits = vec![
        fit_named("velocity".into(), h_points(&|r| r.velocity[0].value)),
        fit_named("weak_h1".into(), h_points(&|r| r.weak_h1[0].value)),
        fit_named("pressure_p".into(), h_points(&|r| r.pressure_p[0].value)),
        fit_named("pressure_r".into(), h_points(&|r| r.pressure_r[0].value)),
    ];
    let band = [tol.spatial_slope_min, f64::INFINITY];
    report.checks.extend([
        Check::new("velocity_spatial_slope", slope_of(&fits[0]), band),
        Check::new("pressure_p_spatial_slope", slope_of(&fits[2]), band),
        Check::new("pressure_r_spatial_slope", slope_of(&fits[3]), band),
    ]);
    report.fits = fits;
    Ok(report)
}

/// Standard and modified schemes on the mesh `n_list[0]` over the step
/// ladder `M_list`, on identical paths.
pub fn compare_noise(cfg: &ExperimentConfig) -> Result<StudyReport> {
    if cfg.m_list.len() < 2 {
        return Err(Error::Config("the step ladder needs at least 2 step counts".into()));
    }
    let n = *cfg.n_list.first().ok_or_else(|| Error::Config("n_list is empty".into()))?;
    let mut res = Vec::new();
    for kind in [SchemeKind::Standard, SchemeKind::Modified] {
        res.extend(cfg.m_list.iter().map(|&m| Resolution { level: Level::Fem(n), steps: m, kind }));
    }
    let mut report = study(cfg, "compare-noise", &res, cfg.m_ref)?;
    let tol = cfg.tolerances.clone();
    let (std_reps, mod_reps) = report.reports.split_at(cfg.m_list.len());
    let ratio = |reps: &[ResolutionReport], f: fn(&ResolutionReport) -> f64| {
        let (coarse, fine) = (reps.iter().min_by_key(|r| r.resolution.steps), reps.iter().max_by_key(|r| r.resolution.steps));
        f(fine.expect("nonempty ladder")) / f(coarse.expect("nonempty ladder"))
    };
    let mut fits = Vec::new();
    for (name, reps) in [("standard", std_reps), ("modified", mod_reps)] {
        let pts = |f: fn(&ResolutionReport) -> f64| reps.iter().map(|r| (r.k, f(r))).collect::<Vec<_>>();
        fits.push(fit_named(format!("{name}_pressure_p"), pts(|r| r.pressure_p[0].value)));
        fits.push(fit_named(format!("{name}_pressure_r"), pts(|r| r.pressure_r[0].value)));
        fits.push(fit_named(format!("{name}_velocity"), pts(|r| r.velocity[0].value)));
    }
    report.checks.extend([
        Check::new(
            "standard_pressure_ratio",
            ratio(std_reps, |r| r.pressure_p[0].value),
            [tol.standard_ratio_min, f64::INFINITY],
        ),
        Check::new("modified_pressure_ratio", ratio(mod_reps, |r| r.pressure_r[0].value), tol.modified_ratio),
        Check::new(
            "modified_pseudo_pressure_variation",
            variation(mod_reps.iter().map(|r| r.mean_pseudo_pressure_gradient)),
            [0.0, tol.stability_variation],
        ),
    ]);
    report.fits = fits;
    Ok(report)
}

/// Errors of a single resolution: `Fem(n_list[0])` when a mesh is
/// configured, the spectral space otherwise, with `M_list[0]` steps.
pub fn estimate_errors(cfg: &ExperimentConfig) -> Result<StudyReport> {
    let m = *cfg.m_list.first().ok_or_else(|| Error::Config("M_list is empty".into()))?;
    let level = cfg.n_list.first().map_or(Level::Spectral, |&n| Level::Fem(n));
    study(cfg, "run", &[Resolution { level, steps: m, kind: cfg.scheme }], cfg.m_ref)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Forcing, InitialData};
    use crate::noise::{NoiseFamily, NoiseModel};

    fn small(noise: NoiseModel) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.model.t = 0.1;
        cfg.model.noise = noise;
        cfg.m_list = vec![4, 8, 16];
        cfg.n_list = vec![4, 6, 8];
        cfg.m_ref = 64;
        cfg.n_modes = 8;
        cfg.samples = 5;
        cfg
    }

    #[test]
    fn deterministic_runs_have_equal_moments() {
        let cfg = small(NoiseModel::zero());
        let rep = estimate_errors(&cfg).unwrap();
        let r = &rep.reports[0];
        assert!(r.velocity[0].value > 0.0);
        for m in &r.velocity {
            assert_eq!(m.value, r.velocity[0].value);
            assert_eq!(m.se, 0.0);
        }
        let k = &r.pathwise.k_hat;
        assert!(k.iter().all(|x| *x == k[0]));
        assert!(rep.passed(), "{:?}", rep.failures());
    }

    #[test]
    fn spectral_time_errors_match_the_scalar_recursion() {
        // shear mode, B = 0: |(1+λk)^{-n} - (1+λk_ref)^{-n M_ref/M}| e^{...}, maximized over n
        let mut cfg = small(NoiseModel::zero());
        cfg.n_list.clear();
        let rep = converge_time(&cfg).unwrap();
        let lambda = 4.0 * std::f64::consts::PI.powi(2);
        let norm0 = 1.0 / 2f64.sqrt();
        for r in &rep.reports {
            let m = r.resolution.steps;
            let stride = cfg.m_ref / m;
            let kr = cfg.model.t / cfg.m_ref as f64;
            let expected = (1..=m)
                .map(|n| {
                    let a = (1.0 + lambda * r.k).powi(-(n as i32));
                    let b = (1.0 + lambda * kr).powi(-((n * stride) as i32));
                    (a - b).abs() * norm0
                })
                .fold(0.0, f64::max);
            assert!((r.velocity[0].value - expected).abs() < 1e-12 * expected, "{m}");
        }
        let slope = rep.fit("velocity_q2").unwrap().slope;
        assert!((0.8..1.1).contains(&slope), "{slope}");
    }

    #[test]
    fn multiplicative_mode_errors_match_the_product_recursion() {
        // B(u) = σ₁u keeps the shear mode: û^n = û⁰ Π (1 + σ₁ΔW_j) / (1 + λk)
        let mut cfg = small(NoiseModel {
            family: NoiseFamily::Affine,
            sigma0: 0.0,
            sigma1: 0.5,
            c: 0.0,
        });
        cfg.samples = 3;
        let res: Vec<Resolution> = cfg
            .m_list
            .iter()
            .map(|&m| Resolution { level: Level::Spectral, steps: m, kind: SchemeKind::Standard })
            .collect();
        let out = run_study(&cfg, &res, cfg.m_ref).unwrap();
        let lambda = 4.0 * std::f64::consts::PI.powi(2);
        let path = |dw: &[f64], k: f64| -> Vec<f64> {
            let mut v = vec![1.0];
            for w in dw {
                let last = *v.last().unwrap();
                v.push(last * (1.0 + 0.5 * w) / (1.0 + lambda * k));
            }
            v
        };
        for (r, outcomes) in res.iter().zip(&out) {
            for o in outcomes {
                let d = BrownianDriver::with_stream(cfg.seed, o.sample as u64, cfg.model.t, cfg.m_ref).unwrap();
                let fine = path(d.increments(cfg.m_ref).unwrap(), cfg.model.t / cfg.m_ref as f64);
                let coarse = path(d.increments(r.steps).unwrap(), cfg.model.t / r.steps as f64);
                let stride = cfg.m_ref / r.steps;
                let expected = (1..=r.steps)
                    .map(|n| (coarse[n] - fine[n * stride]).abs() / 2f64.sqrt())
                    .fold(0.0, f64::max);
                assert!((o.max_error - expected).abs() <= 1e-12 * expected, "{} {}", o.max_error, expected);
            }
        }
    }

    #[test]
    fn flagged_plus_used_is_the_sample_count_and_outputs_are_reproducible() {
        let cfg = small(NoiseModel {
            family: NoiseFamily::GradientAugmented,
            sigma0: 0.5,
            sigma1: 0.5,
            c: 1.0,
        });
        let a = estimate_errors(&cfg).unwrap();
        let b = estimate_errors(&cfg).unwrap();
        assert_eq!(a, b);
        let r = &a.reports[0];
        assert_eq!(r.samples + r.flagged, cfg.samples);
        assert!(r.velocity[0].value <= r.velocity[1].value && r.velocity[1].value <= r.velocity[2].value);
        assert!(r.max_divergence_residual <= RESIDUAL_BOUND);
        assert!(r.pressure_p[0].value > 0.0 && r.pressure_r[0].value > 0.0);
    }

    #[test]
    fn batching_does_not_change_outcomes() {
        // one chunk of 5 versus the same samples run one at a time
        let cfg = small(NoiseModel {
            family: NoiseFamily::Affine,
            sigma0: 0.5,
            sigma1: 0.5,
            c: 0.0,
        });
        let res = [Resolution { level: Level::Fem(4), steps: 8, kind: SchemeKind::Standard }];
        let all = run_study(&cfg, &res, 64).unwrap();
        let th = TaylorHood::new(TorusMesh::new(1.0, 4).unwrap()).unwrap();
        let scheme = FemScheme::new(&th, &cfg.model, SchemeKind::Standard, 8).unwrap();
        for o in &all[0] {
            let d = BrownianDriver::with_stream(cfg.seed, o.sample as u64, cfg.model.t, 64).unwrap();
            let tr = scheme.run(d.increments(8).unwrap(), &[], &mut |_| Ok(())).unwrap();
            assert_eq!(tr.state.diagnostics.stability_functional(), o.stability);
            assert_eq!(d.checksum(), o.checksum);
        }
    }

    #[test]
    fn checkpoints_must_be_shared_steps() {
        let mut cfg = small(NoiseModel::zero());
        cfg.checkpoints = vec![3];
        assert!(matches!(converge_time(&cfg), Err(Error::Config(_))));
        cfg.checkpoints = vec![32];
        let with = converge_time(&cfg).unwrap();
        cfg.checkpoints.clear();
        let without = converge_time(&cfg).unwrap();
        for (a, b) in with.reports.iter().zip(&without.reports) {
            assert_eq!(a.velocity, b.velocity);
            assert!(a.pressure_p[0].value >= b.pressure_p[0].value);
        }
    }

    #[test]
    fn spatial_study_of_a_decaying_mode() {
        let mut cfg = small(NoiseModel::zero());
        cfg.model.u0 = InitialData::Shear { amplitude: 1.0 };
        cfg.model.forcing = Forcing::zero();
        cfg.m_list = vec![4];
        cfg.samples = 2;
        let rep = converge_space(&cfg).unwrap();
        let slope = rep.fit("velocity").unwrap().slope;
        assert!(slope > 1.9, "{slope}");
        assert_eq!(rep.reports.len(), 3);
    }
}
