//! Time stepping: Taylor-Hood Euler-Maruyama schemes and trajectory
//! drivers for both the finite element and the spectral discretizations.

use crate::error::{Error, Result};
use crate::fem::space::{saddle_blocks, TaylorHood};
use crate::model::{Model, SchemeKind};
use crate::noise::{helmholtz_potential, FemNoise};
use crate::solve::saddle::{SaddleSolver, SaddleWorkspace};
use crate::sparse::SparseOperator;
use crate::spectral::{em_step_spectral, SpectralData, SpectralField, SpectralState};

/// Velocity norms above this mark a trajectory as unstable.
pub const BLOWUP: f64 = 1e8;

/// Running stability functionals of one trajectory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    /// `‖u^n‖` for `n = 0..=M`
    pub energy: Vec<f64>,
    /// `ν k Σ ‖∇u^n‖²`
    pub dissipation: f64,
    /// `k Σ ‖∇p^n‖²`
    pub pressure_gradient: f64,
    /// `k Σ ‖∇r^n‖²`
    pub pseudo_pressure_gradient: f64,
    pub max_divergence_residual: f64,
    pub max_saddle_residual: f64,
    pub unstable: bool,
}

impl Diagnostics {
    /// `max_n ‖u^n‖² + ν k Σ ‖∇u^n‖²`
    pub fn stability_functional(&self) -> f64 {
        let m = self.energy.iter().fold(0.0f64, |a, &e| a.max(e * e));
        m + self.dissipation
    }

    fn record(&mut self, energy: f64) {
        if !energy.is_finite() || energy > BLOWUP {
            self.unstable = true;
        }
        self.energy.push(energy);
    }
}

/// Finite element iterate with its running sums.
#[derive(Clone, Debug)]
pub struct FemState {
    pub step: usize,
    pub u: Vec<f64>,
    pub pressure: Vec<f64>,
    pub pseudo_pressure: Vec<f64>,
    pub xi: Vec<f64>,
    /// `ν k Σ u^n`
    pub velocity_sum: Vec<f64>,
    /// `k Σ p^n`
    pub pressure_sum: Vec<f64>,
    /// `k Σ r^n`
    pub pseudo_pressure_sum: Vec<f64>,
    pub diagnostics: Diagnostics,
}

/// Per-thread scratch for [`FemScheme::step`] and [`FemScheme::step_batch`].
#[derive(Clone, Debug, Default)]
pub struct FemWorkspace {
    packed: Vec<f64>,
    columns: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    noise_load: Vec<f64>,
    u_next: Vec<f64>,
    lambda: Vec<f64>,
    solves: Vec<(f64, f64)>,
    saddle: SaddleWorkspace,
}

/// Algorithms 2 (standard) and 4 (modified) on one mesh with a fixed step.
#[derive(Debug)]
pub struct FemScheme<'a> {
    th: &'a TaylorHood,
    kind: SchemeKind,
    model: Model,
    k: f64,
    steps: usize,
    solver: SaddleSolver,
    noise: FemNoise,
    forcing_load: Vec<f64>,
}

impl<'a> FemScheme<'a> {
    pub fn new(th: &'a TaylorHood, model: &Model, kind: SchemeKind, steps: usize) -> Result<Self> {
        model.validate()?;
        if (th.mesh().side_length() - model.l).abs() > 1e-12 * model.l {
            return Err(Error::Dimension("mesh and model box sizes differ".into()));
        }
        if steps == 0 {
            return Err(Error::Config("step count must be positive".into()));
        }
        let k = model.t / steps as f64;
        let op = SparseOperator::linear_combination(
            1.0,
            th.mass_velocity(),
            model.nu * k,
            th.stiffness_velocity(),
        )?;
        let blocks = saddle_blocks(th.mesh());
        let solver = SaddleSolver::new(&op, th.divergence(), th.pressure_weights(), Some(&blocks))?;
        let noise = FemNoise::new(th, model.noise)?;
        let l = model.l;
        let forcing = model.forcing;
        let forcing_load = if forcing.is_zero() {
            vec![0.0; th.velocity_dim()]
        } else {
            crate::fem::load_vector(th.mesh(), &|x| forcing.shape_at(x, l))
        };
        Ok(Self {
            th,
            kind,
            model: *model,
            k,
            steps,
            solver,
            noise,
            forcing_load,
        })
    }

    pub fn step_size(&self) -> f64 {
        self.k
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn space(&self) -> &TaylorHood {
        self.th
    }

    pub fn saddle_solver(&self) -> &SaddleSolver {
        &self.solver
    }

    /// `u⁰` = divergence-free L² projection of the model's initial velocity.
    pub fn initial_state(&self) -> Result<FemState> {
        let l = self.model.l;
        let u0 = self.model.u0;
        let u = self.th.project_divfree(&|x| u0.eval(x, l))?.velocity;
        let (nv, np) = (self.th.velocity_dim(), self.th.pressure_dim());
        let mut diagnostics = Diagnostics::default();
        diagnostics.record(self.th.velocity_l2(&u));
        Ok(FemState {
            step: 0,
            u,
            pressure: vec![0.0; np],
            pseudo_pressure: vec![0.0; np],
            xi: vec![0.0; np],
            velocity_sum: vec![0.0; nv],
            pressure_sum: vec![0.0; np],
            pseudo_pressure_sum: vec![0.0; np],
            diagnostics,
        })
    }

    /// Advance `state` from `t_n` to `t_{n+1}` with increment `dw`.
    pub fn step(&self, state: &mut FemState, dw: f64, ws: &mut FemWorkspace) -> Result<()> {
        self.step_batch(std::slice::from_mut(state), &[dw], ws)
    }

    /// Advance several independent trajectories at the same step index
    /// through one multi right-hand side solve. Each trajectory evolves
    /// bitwise as under [`step`](Self::step).
    pub fn step_batch(&self, states: &mut [FemState], dw: &[f64], ws: &mut FemWorkspace) -> Result<()> {
        let mut refs: Vec<&mut FemState> = states.iter_mut().collect();
        self.step_batch_refs(&mut refs, dw, ws)
    }

    /// [`step_batch`](Self::step_batch) over borrowed states, so callers
    /// can drop trajectories from a batch between steps.
    pub fn step_batch_refs(&self, states: &mut [&mut FemState], dw: &[f64], ws: &mut FemWorkspace) -> Result<()> {
        let n = states.first().map_or(0, |s| s.step);
        if dw.len() != states.len() || states.iter().any(|s| s.step != n) {
            return Err(Error::Dimension("batch states must share the step index".into()));
        }
        if states.is_empty() {
            return Ok(());
        }
        self.step_batch_inner(states, dw, ws).map_err(|e| e.at_step(n + 1))
    }

    fn step_batch_inner(&self, states: &mut [&mut FemState], dw: &[f64], ws: &mut FemWorkspace) -> Result<()> {
        let th = self.th;
        let k = self.k;
        let r = states.len();
        let (nv, np) = (th.velocity_dim(), th.pressure_dim());
        let t_next = (states[0].step + 1) as f64 * k;
        let fa = self.model.forcing.time_factor(t_next);

        ws.packed.resize(nv * r, 0.0);
        ws.noise_load.resize(nv * r, 0.0);
        ws.rhs.resize(nv * r, 0.0);
        ws.columns.resize_with(r, Vec::new);
        pack(states.iter().map(|s| &s.u[..]), &mut ws.packed, r);
        th.mass_velocity().matvec_many_into(&ws.packed, &mut ws.rhs, r);
        for (col, state) in ws.columns.iter_mut().zip(states.iter()) {
            *col = self.noise.eval(th, &state.u)?;
        }
        pack(ws.columns.iter().map(|c| &c[..]), &mut ws.packed, r);
        th.mass_velocity().matvec_many_into(&ws.packed, &mut ws.noise_load, r);

        // (η^n, φ) = (B(u^n), φ) - (∇ξ^n, φ)
        for (col, state) in ws.columns.iter_mut().zip(states.iter_mut()) {
            match self.kind {
                SchemeKind::Standard => state.xi.iter_mut().for_each(|v| *v = 0.0),
                SchemeKind::Modified => {
                    state.xi = helmholtz_potential(th, col)?;
                    *col = th.divergence().matvec_transpose(&state.xi);
                }
            }
        }
        if self.kind == SchemeKind::Modified {
            for (i, load) in ws.noise_load.chunks_exact_mut(r).enumerate() {
                for (l, col) in load.iter_mut().zip(&ws.columns) {
                    *l += col[i];
                }
            }
        }
        for (i, (rhs, load)) in ws.rhs.chunks_exact_mut(r).zip(ws.noise_load.chunks_exact(r)).enumerate() {
            let f = k * fa * self.forcing_load[i];
            for c in 0..r {
                if fa != 0.0 {
                    rhs[c] += f;
                }
                rhs[c] += dw[c] * load[c];
            }
        }

        ws.u_next.resize(nv * r, 0.0);
        ws.lambda.resize(np * r, 0.0);
        ws.solves.resize(r, (0.0, 0.0));
        self.solver.solve_many_into(
            &ws.rhs,
            None,
            &mut ws.u_next,
            &mut ws.lambda,
            r,
            &mut ws.solves,
            &mut ws.saddle,
        )?;
        th.mass_velocity().matvec_many_into(&ws.u_next, &mut ws.rhs, r);
        th.stiffness_velocity().matvec_many_into(&ws.u_next, &mut ws.noise_load, r);
        let energy = column_dots(&ws.u_next, &ws.rhs, r);
        let grad = column_dots(&ws.u_next, &ws.noise_load, r);
        for (i, row) in ws.u_next.chunks_exact(r).enumerate() {
            for (state, v) in states.iter_mut().zip(row) {
                state.u[i] = *v;
            }
        }
        for (i, row) in ws.lambda.chunks_exact(r).enumerate() {
            for (state, l) in states.iter_mut().zip(row) {
                state.pseudo_pressure[i] = -l / k;
            }
        }

        let nu = self.model.nu;
        for (c, (state, &w)) in states.iter_mut().zip(dw).enumerate() {
            match self.kind {
                SchemeKind::Standard => state.pressure.copy_from_slice(&state.pseudo_pressure),
                SchemeKind::Modified => {
                    for ((p, q), x) in state.pressure.iter_mut().zip(&state.pseudo_pressure).zip(&state.xi) {
                        *p = q + x * (w / k);
                    }
                }
            }
            state.step += 1;
            for (s, u) in state.velocity_sum.iter_mut().zip(&state.u) {
                *s += nu * k * u;
            }
            for (s, p) in state.pressure_sum.iter_mut().zip(&state.pressure) {
                *s += k * p;
            }
            for (s, q) in state.pseudo_pressure_sum.iter_mut().zip(&state.pseudo_pressure) {
                *s += k * q;
            }
            let (res, div) = ws.solves[c];
            let d = &mut state.diagnostics;
            d.record(energy[c].max(0.0).sqrt());
            d.dissipation += nu * k * grad[c].max(0.0);
            d.pressure_gradient += k * th.p1_h1_seminorm(&state.pressure).powi(2);
            d.pseudo_pressure_gradient += k * th.p1_h1_seminorm(&state.pseudo_pressure).powi(2);
            d.max_divergence_residual = d.max_divergence_residual.max(div);
            d.max_saddle_residual = d.max_saddle_residual.max(res);
        }
        Ok(())
    }

    /// Run all steps with increments `dw` (length = step count), calling
    /// `observer` after every step. Checkpointed velocities are returned in
    /// the order of `checkpoints`.
    pub fn run(
        &self,
        dw: &[f64],
        checkpoints: &[usize],
        observer: &mut dyn FnMut(&FemState) -> Result<()>,
    ) -> Result<FemTrajectory> {
        if dw.len() != self.steps {
            return Err(Error::Dimension(format!(
                "{} increments for {} steps",
                dw.len(),
                self.steps
            )));
        }
        let mut state = self.initial_state()?;
        let mut ws = FemWorkspace::default();
        let mut snaps = Vec::new();
        if checkpoints.contains(&0) {
            snaps.push((0, state.u.clone()));
        }
        for &w in dw {
            self.step(&mut state, w, &mut ws)?;
            observer(&state)?;
            if checkpoints.contains(&state.step) {
                snaps.push((state.step, state.u.clone()));
            }
            if state.diagnostics.unstable {
                break;
            }
        }
        Ok(FemTrajectory {
            checkpoints: snaps,
            state,
        })
    }
}

/// Interleave equally long columns into `out[i * r + c]`.
fn pack<'c>(columns: impl Iterator<Item = &'c [f64]>, out: &mut [f64], r: usize) {
    let cols: Vec<&[f64]> = columns.collect();
    for (i, row) in out.chunks_exact_mut(r).enumerate() {
        for (o, col) in row.iter_mut().zip(&cols) {
            *o = col[i];
        }
    }
}

fn column_dots(a: &[f64], b: &[f64], r: usize) -> Vec<f64> {
    let mut s = vec![0.0; r];
    for (ra, rb) in a.chunks_exact(r).zip(b.chunks_exact(r)) {
        for c in 0..r {
            s[c] += ra[c] * rb[c];
        }
    }
    s
}

#[derive(Clone, Debug)]
pub struct FemTrajectory {
    pub checkpoints: Vec<(usize, Vec<f64>)>,
    pub state: FemState,
}

/// Spectral iterate with diagnostics and the last step's by-products.
#[derive(Clone, Debug)]
pub struct SpectralRun {
    pub state: SpectralState,
    pub step: usize,
    pub pressure: SpectralField,
    pub pseudo_pressure: SpectralField,
    pub diagnostics: Diagnostics,
}

impl SpectralRun {
    pub fn new(data: &SpectralData) -> Self {
        let state = SpectralState::new(data);
        let mut diagnostics = Diagnostics::default();
        diagnostics.record(state.u.l2_norm());
        Self {
            pressure: state.u.zeros_like(1),
            pseudo_pressure: state.u.zeros_like(1),
            state,
            step: 0,
            diagnostics,
        }
    }

    /// One step of size `k` with increment `dw`.
    pub fn advance(&mut self, data: &SpectralData, kind: SchemeKind, k: f64, dw: f64) {
        let out = em_step_spectral(data, &mut self.state, (self.step + 1) as f64 * k, k, dw, kind);
        self.step += 1;
        self.pressure = out.pressure;
        self.pseudo_pressure = out.pseudo_pressure;
        let d = &mut self.diagnostics;
        d.record(self.state.u.l2_norm());
        d.dissipation += data.nu * k * self.state.u.h1_seminorm().powi(2);
        d.pressure_gradient += k * self.pressure.h1_seminorm().powi(2);
        d.pseudo_pressure_gradient += k * self.pseudo_pressure.h1_seminorm().powi(2);
        d.max_divergence_residual = d.max_divergence_residual.max(self.state.u.divergence_defect());
    }
}

#[derive(Clone, Debug)]
pub struct SpectralTrajectory {
    pub checkpoints: Vec<(usize, SpectralField)>,
    pub run: SpectralRun,
}

/// Algorithms 1 and 3 on the truncated Fourier space.
pub fn run_spectral(
    data: &SpectralData,
    kind: SchemeKind,
    t: f64,
    dw: &[f64],
    checkpoints: &[usize],
    observer: &mut dyn FnMut(&SpectralRun) -> Result<()>,
) -> Result<SpectralTrajectory> {
    if dw.is_empty() {
        return Err(Error::Config("step count must be positive".into()));
    }
    let k = t / dw.len() as f64;
    let mut run = SpectralRun::new(data);
    let mut snaps = Vec::new();
    if checkpoints.contains(&0) {
        snaps.push((0, run.state.u.clone()));
    }
    for &w in dw {
        run.advance(data, kind, k, w);
        observer(&run)?;
        if checkpoints.contains(&run.step) {
            snaps.push((run.step, run.state.u.clone()));
        }
        if run.diagnostics.unstable {
            break;
        }
    }
    Ok(SpectralTrajectory {
        checkpoints: snaps,
        run,
    })
}
