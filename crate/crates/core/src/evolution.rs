//! Time integration of the Euler-Poisson system in Makino variables and the
//! Picard map whose fixed point is the solution.
//!
//! Space: fourth-order central differences plus a fourth-difference
//! hyperviscosity filter. Time: classical RK4 with the potential re-solved at
//! every stage. Radial runs mirror the fields at `r = 0` (w even, v odd) and
//! hold the two outer ghost cells at their initial values.

use crate::diagnostics::{Monitors, TimeSeries};
use crate::error::{Error, Result};
use crate::fluid::{EosParams, FluidState};
use crate::grid::stencil::{self, extrapolate_ghosts};
use crate::grid::{box_derivative, box_line_apply, BoxGrid, Geometry, GridFunction, Parity, RadialGrid, Rank};
use crate::quadrature::{radial_cell_integral, TailModel};
use crate::poisson::{box_potential, radial_potential, DEFAULT_TAIL_EXPONENT};
use crate::wsobolev::{l2_delta_norm, weighted_norm, DyadicPartition, WeightedNormSpec};

/// Default filter strength: `eps_hv = h^3 / 32` per unit speed.
pub const DEFAULT_HYPERVISCOSITY: f64 = 1.0 / 32.0;

/// Time-stepping parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeConfig {
    /// `dt = cfl h / max(|v| + k w)`.
    pub cfl: f64,
    /// Filter strength in units of `h^3` per unit speed.
    pub hyperviscosity: f64,
    pub t_end: f64,
    /// Time between monitor records.
    pub cadence: f64,
    /// Assumed density decay `r^{-p}` beyond a radial grid.
    pub tail_exponent: f64,
    /// Abort once the maximal characteristic speed exceeds this multiple of
    /// its initial value.
    pub blowup_factor: f64,
}

impl SchemeConfig {
    /// `cfl = 0.4`, default filter, twenty records over `[0, t_end]`.
    pub fn new(t_end: f64) -> Self {
        Self {
            cfl: 0.4,
            hyperviscosity: DEFAULT_HYPERVISCOSITY,
            t_end,
            cadence: if t_end > 0.0 { t_end / 20.0 } else { 1.0 },
            tail_exponent: DEFAULT_TAIL_EXPONENT,
            blowup_factor: 1e3,
        }
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    pub fn with_cadence(mut self, cadence: f64) -> Self {
        self.cadence = cadence;
        self
    }

    pub fn with_hyperviscosity(mut self, eps: f64) -> Self {
        self.hyperviscosity = eps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidParameter(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.hyperviscosity >= 0.0 && self.hyperviscosity.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "hyperviscosity must be nonnegative, got {}",
                self.hyperviscosity
            )));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if !(self.cadence > 0.0) {
            return Err(Error::InvalidParameter(format!("cadence must be positive, got {}", self.cadence)));
        }
        if !(self.blowup_factor > 1.0) {
            return Err(Error::InvalidParameter("blow-up factor must exceed 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
enum Layout {
    Radial {
        g: RadialGrid,
        ghost_w: [f64; 2],
        ghost_v: [f64; 2],
        /// Quadrature weights of the mass integral, tail included.
        mass_weights: Vec<f64>,
    },
    Box {
        g: BoxGrid,
    },
}

impl Layout {
    fn of(state: &FluidState, tail_exponent: f64) -> Result<Self> {
        match *state.w.geometry() {
            Geometry::Radial(g) => {
                if state.v.rank() != Rank::RadialVector {
                    return Err(Error::GridMismatch("radial runs need a radial velocity".into()));
                }
                Ok(Layout::Radial {
                    g,
                    ghost_w: extrapolate_ghosts(state.w.samples()),
                    ghost_v: extrapolate_ghosts(state.v.samples()),
                    mass_weights: radial_mass_weights(&g, tail_exponent),
                })
            }
            Geometry::Box(g) => Ok(Layout::Box { g }),
        }
    }

    fn geometry(&self) -> Geometry {
        match self {
            Layout::Radial { g, .. } => Geometry::Radial(*g),
            Layout::Box { g } => Geometry::Box(*g),
        }
    }

    fn vector_rank(&self) -> Rank {
        match self {
            Layout::Radial { .. } => Rank::RadialVector,
            Layout::Box { .. } => Rank::Vector3,
        }
    }

    fn h(&self) -> f64 {
        self.geometry().h()
    }

    /// `-grad phi` source term, laid out like the velocity.
    fn gravity(&self, w: &[f64], eos: &EosParams, tail: f64) -> Vec<f64> {
        let rho: Vec<f64> = w.iter().map(|&x| eos.rho_of_w(x)).collect();
        match self {
            Layout::Radial { g, .. } => radial_potential(&rho, g, tail).1,
            Layout::Box { g } => {
                let phi = box_potential(&rho, g);
                let mut out = Vec::with_capacity(3 * g.len());
                for axis in 0..3 {
                    out.extend(box_derivative(g, &phi, axis));
                }
                out
            }
        }
    }

    /// Speed bound `max(|v| + k w)` over the grid.
    fn max_speed(&self, w: &[f64], v: &[f64], k: f64) -> f64 {
        let m = w.len();
        let comps = v.len() / m;
        (0..m)
            .map(|i| {
                let s: f64 = (0..comps).map(|c| v[c * m + i].powi(2)).sum();
                s.sqrt() + k * w[i].abs()
            })
            .fold(0.0, f64::max)
    }

    /// Mass carried by the negative part of `w`.
    fn negative_mass(&self, w: &[f64], eos: &EosParams) -> f64 {
        let neg = |x: f64| if x < 0.0 { eos.rho_of_w(-x) } else { 0.0 };
        match self {
            Layout::Radial { g, .. } => {
                let h = g.h();
                w.iter()
                    .enumerate()
                    .map(|(i, &x)| 4.0 * std::f64::consts::PI * g.node(i).powi(2) * h * neg(x))
                    .sum()
            }
            Layout::Box { g } => w.iter().map(|&x| neg(x)).sum::<f64>() * g.h().powi(3),
        }
    }

    /// Removes from a `w` tendency its component along `w` that changes the
    /// discrete mass, so the filter neither creates nor destroys mass.
    fn mass_neutral(&self, filter: &mut [f64], w: &[f64], eos: &EosParams) {
        let beta = eos.beta();
        let weight = |i: usize| match self {
            Layout::Radial { mass_weights, .. } => mass_weights[i],
            Layout::Box { .. } => 1.0,
        };
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..w.len() {
            if w[i] > 0.0 {
                let q = weight(i) * eos.density_coeff() * beta * w[i].powf(beta - 1.0);
                num += q * filter[i];
                den += q * w[i];
            }
        }
        if den > 0.0 {
            let alpha = num / den;
            for (f, x) in filter.iter_mut().zip(w) {
                *f -= alpha * x;
            }
        }
    }

    /// Tendencies of the system linearised about coefficient fields
    /// `(wc, vc)`:
    /// `w_t = -vc.grad w - k wc div v`,
    /// `v_t = -(vc.grad) v - k wc grad w - grad phi`,
    /// minus `damp` times the undivided fourth difference of each field
    /// (made mass neutral in the `w` equation). With `(wc, vc) = (w, v)` this is the nonlinear system.
    #[allow(clippy::too_many_arguments)]
    fn tendency(
        &self,
        w: &[f64],
        v: &[f64],
        wc: &[f64],
        vc: &[f64],
        grad_phi: &[f64],
        eos: &EosParams,
        damp: f64,
    ) -> (Vec<f64>, Vec<f64>) {
        let k = eos.kappa();
        match self {
            Layout::Radial { g, ghost_w, ghost_v, .. } => {
                let n = g.n();
                let inv_h = 1.0 / g.h();
                let pw = stencil::pad_radial(w, Parity::Even, Some(*ghost_w));
                let pv = stencil::pad_radial(v, Parity::Odd, Some(*ghost_v));
                let (mut dw, mut dv) = (vec![0.0; n], vec![0.0; n]);
                stencil::d1(&pw, &mut dw, inv_h);
                stencil::d1(&pv, &mut dv, inv_h);
                let (mut hw, mut hv) = (vec![0.0; n], vec![0.0; n]);
                if damp > 0.0 {
                    stencil::undivided_d4(&pw, &mut hw);
                    stencil::undivided_d4(&pv, &mut hv);
                    hw.iter_mut().for_each(|x| *x *= -damp);
                    self.mass_neutral(&mut hw, w, eos);
                }
                let mut tw = vec![0.0; n];
                let mut tv = vec![0.0; n];
                for i in 0..n {
                    let r = g.node(i);
                    let div = dv[i] + 2.0 * v[i] / r;
                    tw[i] = -vc[i] * dw[i] - k * wc[i] * div + hw[i];
                    tv[i] = -vc[i] * dv[i] - k * wc[i] * dw[i] - grad_phi[i] - damp * hv[i];
                }
                (tw, tv)
            }
            Layout::Box { g } => {
                let m = g.len();
                let d4 = |f: &[f64]| -> Vec<f64> {
                    let mut acc = vec![0.0; m];
                    if damp > 0.0 {
                        for axis in 0..3 {
                            let d = box_line_apply(g, f, axis, stencil::undivided_d4);
                            for (a, x) in acc.iter_mut().zip(d) {
                                *a += x;
                            }
                        }
                    }
                    acc
                };
                let dw: Vec<Vec<f64>> = (0..3).map(|a| box_derivative(g, w, a)).collect();
                let mut tw = d4(w);
                tw.iter_mut().for_each(|x| *x *= -damp);
                if damp > 0.0 {
                    self.mass_neutral(&mut tw, w, eos);
                }
                let mut tv = vec![0.0; 3 * m];
                for b in 0..3 {
                    let vb = &v[b * m..(b + 1) * m];
                    let hb = d4(vb);
                    for a in 0..3 {
                        let d = box_derivative(g, vb, a);
                        let va = &vc[a * m..(a + 1) * m];
                        for i in 0..m {
                            tv[b * m + i] -= va[i] * d[i];
                            if a == b {
                                tw[i] -= k * wc[i] * d[i];
                            }
                        }
                    }
                    for i in 0..m {
                        tw[i] -= vc[b * m + i] * dw[b][i];
                        tv[b * m + i] -= k * wc[i] * dw[b][i] + grad_phi[b * m + i] + damp * hb[i];
                    }
                }
                (tw, tv)
            }
        }
    }
}

/// Weights `W_i` with `total_mass = sum_i W_i rho_i` on a radial grid.
fn radial_mass_weights(g: &RadialGrid, tail_exponent: f64) -> Vec<f64> {
    let n = g.n();
    let mut e = vec![0.0; n];
    (0..n)
        .map(|i| {
            e[i] = 4.0 * std::f64::consts::PI * g.node(i).powi(2);
            let (v, _) = radial_cell_integral(&e, g.h(), Parity::Even, TailModel::Power(tail_exponent - 2.0));
            e[i] = 0.0;
            v
        })
        .collect()
}

fn axpy(y: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(y, x)| y + a * x).collect()
}

fn rk4_combine(u: &[f64], k: [&[f64]; 4], dt: f64) -> Vec<f64> {
    (0..u.len())
        .map(|i| u[i] + dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]))
        .collect()
}

fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Result of one time step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub state: FluidState,
    pub dt: f64,
    /// Mass removed by flooring negative `w` to zero after the step.
    pub clip_mass: f64,
}

/// RK4 stepper bound to a grid, equation of state and scheme. Outer ghost
/// values of radial runs are taken from the state it is built from.
#[derive(Clone, Debug)]
pub struct Stepper {
    layout: Layout,
    eos: EosParams,
    scheme: SchemeConfig,
    initial_speed: f64,
}

impl Stepper {
    pub fn new(reference: &FluidState, eos: &EosParams, scheme: &SchemeConfig) -> Result<Self> {
        scheme.validate()?;
        let layout = Layout::of(reference, scheme.tail_exponent)?;
        let initial_speed = layout.max_speed(reference.w.samples(), reference.v.samples(), eos.kappa());
        Ok(Self {
            layout,
            eos: *eos,
            scheme: *scheme,
            initial_speed,
        })
    }

    pub fn h(&self) -> f64 {
        self.layout.h()
    }

    /// `max(|v| + k w)` of a state.
    pub fn max_speed(&self, state: &FluidState) -> f64 {
        self.layout
            .max_speed(state.w.samples(), state.v.samples(), self.eos.kappa())
    }

    /// CFL time step; infinite for a motionless vacuum.
    pub fn stable_dt(&self, state: &FluidState) -> f64 {
        let c = self.max_speed(state);
        if c == 0.0 {
            f64::INFINITY
        } else {
            self.scheme.cfl * self.h() / c
        }
    }

    fn damp(&self, speed: f64) -> f64 {
        self.scheme.hyperviscosity * speed / self.h()
    }

    fn wrap(&self, w: Vec<f64>, v: Vec<f64>, t: f64) -> Result<FluidState> {
        let geo = self.layout.geometry();
        FluidState::new(
            GridFunction::new(geo, Rank::Scalar, w)?,
            GridFunction::new(geo, self.layout.vector_rank(), v)?,
            t,
        )
    }

    /// One RK4 step of length `dt` (the CFL step when `None`), followed by
    /// clipping of negative `w`.
    pub fn step(&self, state: &FluidState, dt: Option<f64>) -> Result<StepOutcome> {
        let speed = self.max_speed(state);
        if speed > self.scheme.blowup_factor * self.initial_speed {
            return Err(Error::Breakdown(format!(
                "characteristic speed {speed:e} at t = {} exceeds {} times its initial value {:e}",
                state.t, self.scheme.blowup_factor, self.initial_speed
            )));
        }
        let dt = match dt {
            Some(dt) => dt,
            None => self.stable_dt(state),
        };
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("time step must be positive and finite, got {dt}")));
        }
        let damp = self.damp(speed);
        let tail = self.scheme.tail_exponent;
        let f = |w: &[f64], v: &[f64]| {
            let g = self.layout.gravity(w, &self.eos, tail);
            self.layout.tendency(w, v, w, v, &g, &self.eos, damp)
        };
        let (w0, v0) = (state.w.samples(), state.v.samples());
        let (k1w, k1v) = f(w0, v0);
        let (w1, v1) = (axpy(w0, dt / 2.0, &k1w), axpy(v0, dt / 2.0, &k1v));
        let (k2w, k2v) = f(&w1, &v1);
        let (w2, v2) = (axpy(w0, dt / 2.0, &k2w), axpy(v0, dt / 2.0, &k2v));
        let (k3w, k3v) = f(&w2, &v2);
        let (w3, v3) = (axpy(w0, dt, &k3w), axpy(v0, dt, &k3v));
        let (k4w, k4v) = f(&w3, &v3);
        let mut w = rk4_combine(w0, [&k1w, &k2w, &k3w, &k4w], dt);
        let v = rk4_combine(v0, [&k1v, &k2v, &k3v, &k4v], dt);
        if !all_finite(&w) || !all_finite(&v) {
            return Err(Error::Breakdown(format!("non-finite state after the step from t = {}", state.t)));
        }
        let clip_mass = self.layout.negative_mass(&w, &self.eos);
        w.iter_mut().for_each(|x| *x = x.max(0.0));
        Ok(StepOutcome {
            state: self.wrap(w, v, state.t + dt)?,
            dt,
            clip_mass,
        })
    }
}

/// Time derivative of `state` under the nonlinear system with the given
/// potential gradient; `hyperviscosity` as in [`SchemeConfig`]. Radial
/// outer ghosts are extrapolated from the state itself.
pub fn rhs(state: &FluidState, grad_phi: &GridFunction, eos: &EosParams, hyperviscosity: f64) -> Result<FluidState> {
    state.v.check_same(grad_phi)?;
    let layout = Layout::of(state, DEFAULT_TAIL_EXPONENT)?;
    let (w, v) = (state.w.samples(), state.v.samples());
    let damp = hyperviscosity * layout.max_speed(w, v, eos.kappa()) / layout.h();
    let (tw, tv) = layout.tendency(w, v, w, v, grad_phi.samples(), eos, damp);
    let geo = layout.geometry();
    FluidState::new(
        GridFunction::new(geo, Rank::Scalar, tw)?,
        GridFunction::new(geo, layout.vector_rank(), tv)?,
        state.t,
    )
}

/// One CFL step from `state`, with outer ghosts taken from `state`.
pub fn step(state: &FluidState, eos: &EosParams, scheme: &SchemeConfig) -> Result<StepOutcome> {
    Stepper::new(state, eos, scheme)?.step(state, None)
}

/// Output of [`run_simulation`].
#[derive(Debug)]
pub struct RunResult {
    pub series: TimeSeries,
    /// Last state reached (the final state, or the last before an abort).
    pub state: FluidState,
    pub steps: usize,
    /// Largest single-step clip mass.
    pub max_step_clip: f64,
    pub total_clip: f64,
    /// States at the records, when the monitors keep them.
    pub snapshots: Vec<FluidState>,
    /// Set when the run stopped early; `series` then holds the partial output.
    pub abort: Option<Error>,
}

/// Steps from `initial.t` to `scheme.t_end`, landing exactly on every
/// cadence tick and recording the monitors there.
pub fn run_simulation(
    initial: &FluidState,
    eos: &EosParams,
    scheme: &SchemeConfig,
    monitors: &Monitors,
) -> Result<RunResult> {
    let stepper = Stepper::new(initial, eos, scheme)?;
    let mut series = TimeSeries::new();
    series.push(monitors.record(initial, eos, 0.0)?)?;
    let mut snapshots = Vec::new();
    if monitors.keep_states {
        snapshots.push(initial.clone());
    }
    let t_final = scheme.t_end;
    let eps = 1e-12 * t_final.abs().max(1.0);
    let mut state = initial.clone();
    let mut last_tick = initial.t;
    let (mut steps, mut max_step_clip, mut total_clip, mut clip_since) = (0, 0.0f64, 0.0, 0.0);
    let mut abort = None;
    while state.t < t_final - eps {
        let next_tick = (last_tick + scheme.cadence).min(t_final);
        let dt = stepper.stable_dt(&state).min(next_tick - state.t);
        match stepper.step(&state, Some(dt)) {
            Ok(out) => {
                state = out.state;
                steps += 1;
                max_step_clip = max_step_clip.max(out.clip_mass);
                total_clip += out.clip_mass;
                clip_since += out.clip_mass;
                if state.t >= next_tick - eps {
                    state.t = next_tick;
                    last_tick = next_tick;
                    series.push(monitors.record(&state, eos, clip_since)?)?;
                    if monitors.keep_states {
                        snapshots.push(state.clone());
                    }
                    clip_since = 0.0;
                }
            }
            Err(e @ Error::Breakdown(_)) => {
                log::warn!("run aborted: {e}");
                abort = Some(e);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(RunResult {
        series,
        state,
        steps,
        max_step_clip,
        total_clip,
        snapshots,
        abort,
    })
}

/// States at increasing times.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<FluidState>,
}

impl Trajectory {
    /// The constant-in-time extension of `initial` to `times`.
    pub fn constant(initial: &FluidState, times: &[f64]) -> Self {
        Self {
            states: times
                .iter()
                .map(|&t| FluidState { t, ..initial.clone() })
                .collect(),
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &FluidState {
        self.states.last().expect("trajectories are nonempty")
    }

    /// `sup_t ||(w - w', v - v')||_{L^2_delta}` over common slices.
    pub fn sup_gap(&self, other: &Trajectory, delta: f64) -> Result<f64> {
        if self.states.len() != other.states.len() {
            return Err(Error::GridMismatch("trajectories have different slice counts".into()));
        }
        let mut gap = 0.0f64;
        for (a, b) in self.states.iter().zip(&other.states) {
            let dw = a.w.axpby(1.0, &b.w, -1.0)?;
            let dv = a.v.axpby(1.0, &b.v, -1.0)?;
            gap = gap.max((l2_delta_norm(&dw, delta).powi(2) + l2_delta_norm(&dv, delta).powi(2)).sqrt());
        }
        Ok(gap)
    }
}

/// Uniform slice times `0 = t_0 < ... < t_N = horizon` with the CFL step
/// of `initial`.
pub fn slice_times(initial: &FluidState, eos: &EosParams, scheme: &SchemeConfig, horizon: f64) -> Result<Vec<f64>> {
    let stepper = Stepper::new(initial, eos, scheme)?;
    let dt = stepper.stable_dt(initial);
    let n = if dt.is_finite() { (horizon / dt).ceil().max(1.0) as usize } else { 1 };
    Ok((0..=n).map(|i| initial.t + horizon * i as f64 / n as f64).collect())
}

/// The nonlinear run through the given slice times (one step per slice).
pub fn direct_trajectory(
    initial: &FluidState,
    eos: &EosParams,
    scheme: &SchemeConfig,
    times: &[f64],
) -> Result<Trajectory> {
    let stepper = Stepper::new(initial, eos, scheme)?;
    let mut states = vec![FluidState { t: times[0], ..initial.clone() }];
    for win in times.windows(2) {
        let out = stepper.step(states.last().unwrap(), Some(win[1] - win[0]))?;
        states.push(FluidState { t: win[1], ..out.state });
    }
    Ok(Trajectory { states })
}

/// Picard iteration parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct PicardConfig {
    /// Bound on the initial data; `None` uses the computed initial norm.
    pub m0: Option<f64>,
    /// Iteration horizon `T`.
    pub horizon: f64,
    pub max_iter: usize,
    /// Stopping tolerance on the low-norm gap, relative to the
    /// `L^2_delta` norm of the initial data.
    pub tol: f64,
    /// High norm `(s, delta)`; its `delta` also weights the low norm.
    pub norm: WeightedNormSpec,
    /// Number of evenly spaced slices (including the last) at which the
    /// high norm is evaluated.
    pub monitor_slices: usize,
    /// Halvings of `T` allowed after a high-norm escape.
    pub max_halvings: usize,
}

impl PicardConfig {
    pub fn new(horizon: f64, norm: WeightedNormSpec) -> Self {
        Self {
            m0: None,
            horizon,
            max_iter: 30,
            tol: 1e-8,
            norm,
            monitor_slices: 3,
            max_halvings: 6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidParameter(format!("T must be positive, got {}", self.horizon)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 || self.monitor_slices == 0 {
            return Err(Error::InvalidParameter("iteration and slice counts must be positive".into()));
        }
        if let Some(m0) = self.m0 {
            if !(m0 >= 0.0) {
                return Err(Error::InvalidParameter(format!("M0 must be nonnegative, got {m0}")));
            }
        }
        self.norm.validate()
    }
}

/// Per-iteration record of a Picard solve.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PicardTrace {
    /// Horizon of the final attempt.
    pub horizon: f64,
    pub m0: f64,
    /// `sup_t ||U^k||_{H_{s,delta}}` per iterate.
    pub high_norms: Vec<f64>,
    /// `sup_t ||U^{k+1} - U^k||_{L^2_delta}` per iteration.
    pub gaps: Vec<f64>,
    /// Fitted geometric decay factor of the gaps.
    pub contraction: Option<f64>,
    /// Times the horizon was halved after a high-norm escape.
    pub halvings: usize,
    pub converged: bool,
}

/// Image of one application of the Picard map.
#[derive(Clone, Debug, PartialEq)]
pub struct PicardImage {
    pub trajectory: Trajectory,
    /// `sup_t ||Phi(U)||_{H_{s,delta}}` over the monitored slices.
    pub sup_high: f64,
    /// `sup_high > 2 M_0`.
    pub escaped: bool,
}

fn high_norm(state: &FluidState, spec: &WeightedNormSpec, part: &DyadicPartition) -> Result<f64> {
    let a = weighted_norm(&state.w, spec, part)?.total;
    let b = weighted_norm(&state.v, spec, part)?.total;
    Ok((a + b).sqrt())
}

fn monitored_indices(len: usize, count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (1..=count)
        .map(|i| (i * (len - 1)).div_ceil(count))
        .collect();
    idx.dedup();
    idx
}

/// High norm of the initial data, the default `M_0`.
pub fn initial_norm(initial: &FluidState, cfg: &PicardConfig) -> Result<f64> {
    high_norm(initial, &cfg.norm, &DyadicPartition::new(cfg.norm.j_max)?)
}

/// `Phi(U_in)`: recover the density of each input slice, solve for its
/// potential, then solve the linear system with coefficients `(w_in, v_in)`
/// and source `-grad phi`, interpolated linearly between slices, from the
/// initial data.
pub fn picard_map(
    input: &Trajectory,
    initial: &FluidState,
    eos: &EosParams,
    scheme: &SchemeConfig,
    cfg: &PicardConfig,
    m0: f64,
) -> Result<PicardImage> {
    if let Some((i, s)) = input.states.iter().enumerate().find(|(_, s)| s.w.min() < 0.0) {
        return Err(Error::Domain(format!("input slice {i} at t = {} has negative w", s.t)));
    }
    let stepper = Stepper::new(initial, eos, scheme)?;
    let layout = &stepper.layout;
    let damp = stepper.damp(stepper.initial_speed);
    let grads: Vec<Vec<f64>> = input
        .states
        .iter()
        .map(|s| layout.gravity(s.w.samples(), eos, scheme.tail_exponent))
        .collect();
    let mid = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect() };
    let mut states = vec![FluidState { t: input.states[0].t, ..initial.clone() }];
    for n in 0..input.states.len() - 1 {
        let (s0, s1) = (&input.states[n], &input.states[n + 1]);
        let dt = s1.t - s0.t;
        let (wa, va, ga) = (s0.w.samples(), s0.v.samples(), &grads[n][..]);
        let (wb, vb, gb) = (s1.w.samples(), s1.v.samples(), &grads[n + 1][..]);
        let (wm, vm, gm) = (mid(wa, wb), mid(va, vb), mid(ga, gb));
        let cur = states.last().unwrap();
        let (w0, v0) = (cur.w.samples(), cur.v.samples());
        let (k1w, k1v) = layout.tendency(w0, v0, wa, va, ga, eos, damp);
        let (w1, v1) = (axpy(w0, dt / 2.0, &k1w), axpy(v0, dt / 2.0, &k1v));
        let (k2w, k2v) = layout.tendency(&w1, &v1, &wm, &vm, &gm, eos, damp);
        let (w2, v2) = (axpy(w0, dt / 2.0, &k2w), axpy(v0, dt / 2.0, &k2v));
        let (k3w, k3v) = layout.tendency(&w2, &v2, &wm, &vm, &gm, eos, damp);
        let (w3, v3) = (axpy(w0, dt, &k3w), axpy(v0, dt, &k3v));
        let (k4w, k4v) = layout.tendency(&w3, &v3, wb, vb, gb, eos, damp);
        let w = rk4_combine(w0, [&k1w, &k2w, &k3w, &k4w], dt);
        let v = rk4_combine(v0, [&k1v, &k2v, &k3v, &k4v], dt);
        if !all_finite(&w) || !all_finite(&v) {
            return Err(Error::Breakdown(format!("linear solve produced non-finite values at t = {}", s1.t)));
        }
        states.push(stepper.wrap(w, v, s1.t)?);
    }
    let part = DyadicPartition::new(cfg.norm.j_max)?;
    let mut sup_high = 0.0f64;
    for i in monitored_indices(states.len(), cfg.monitor_slices) {
        sup_high = sup_high.max(high_norm(&states[i], &cfg.norm, &part)?);
    }
    let escaped = sup_high > 2.0 * m0 * (1.0 + 1e-12);
    Ok(PicardImage {
        trajectory: Trajectory { states },
        sup_high,
        escaped,
    })
}

/// Geometric decay factor of a gap sequence: `exp` of the least-squares
/// slope of `ln gap` against the iteration index, ignoring the first gap
/// (measured from the constant initial guess) when enough remain and gaps
/// at round-off level.
pub fn fit_contraction(gaps: &[f64], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = gaps
        .iter()
        .enumerate()
        .filter(|(_, g)| **g > floor)
        .map(|(i, g)| (i as f64, g.ln()))
        .collect();
    let pts = if pts.len() >= 4 { &pts[1..] } else { &pts[..] };
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    Some((sxy / sxx).exp())
}

/// Iterates [`picard_map`] from the constant extension of the initial data
/// until the low-norm gap falls below tolerance. A high-norm escape halves
/// `T` and restarts; failure to converge returns the trace in the error.
pub fn picard_solve(
    initial: &FluidState,
    eos: &EosParams,
    scheme: &SchemeConfig,
    cfg: &PicardConfig,
) -> Result<(Trajectory, PicardTrace)> {
    cfg.validate()?;
    let m0 = match cfg.m0 {
        Some(m) => m,
        None => initial_norm(initial, cfg)?,
    };
    let delta = cfg.norm.delta;
    let scale = (l2_delta_norm(&initial.w, delta).powi(2) + l2_delta_norm(&initial.v, delta).powi(2)).sqrt();
    let mut horizon = cfg.horizon;
    let mut trace = PicardTrace {
        horizon,
        m0,
        ..PicardTrace::default()
    };
    loop {
        let times = slice_times(initial, eos, scheme, horizon)?;
        let mut current = Trajectory::constant(initial, &times);
        trace.horizon = horizon;
        trace.high_norms.clear();
        trace.gaps.clear();
        let mut escaped = false;
        for _ in 0..cfg.max_iter {
            let image = picard_map(&current, initial, eos, scheme, cfg, m0)?;
            trace.high_norms.push(image.sup_high);
            let gap = current.sup_gap(&image.trajectory, delta)?;
            trace.gaps.push(gap);
            log::debug!("picard T={horizon} iter {} gap {gap:e} high {:e}", trace.gaps.len(), image.sup_high);
            if image.escaped {
                escaped = true;
                break;
            }
            // the input of the next map must be a nonnegative w
            let mut next = image.trajectory;
            for s in &mut next.states {
                if s.w.min() < 0.0 {
                    s.w = s.w.map(|x| x.max(0.0))?;
                }
            }
            current = next;
            if gap <= cfg.tol * scale {
                trace.converged = true;
                trace.contraction = fit_contraction(&trace.gaps, 1e-13 * scale);
                return Ok((current, trace));
            }
        }
        trace.contraction = fit_contraction(&trace.gaps, 1e-13 * scale);
        if !escaped {
            return Err(Error::NoContraction {
                message: format!(
                    "gap {:e} above tolerance after {} iterations at T = {horizon}",
                    trace.gaps.last().copied().unwrap_or(f64::NAN),
                    cfg.max_iter
                ),
                trace: Box::new(trace),
            });
        }
        if trace.halvings == cfg.max_halvings {
            return Err(Error::NoContraction {
                message: format!(
                    "high norm left the ball of radius 2 M0 = {:e} even at T = {horizon}",
                    2.0 * m0
                ),
                trace: Box::new(trace),
            });
        }
        horizon /= 2.0;
        trace.halvings += 1;
        log::info!("high norm escaped; retrying with T = {horizon}");
    }
}
