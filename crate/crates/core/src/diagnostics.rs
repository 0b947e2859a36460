//! Observables along a run: mass, the energy functional, positivity, drift
//! from a reference state, norm time series and Gronwall fits.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::fluid::{density_from_makino, EosParams, FluidState};
use crate::grid::{Geometry, GridFunction, Parity, Rank};
use crate::poisson::{solve_poisson_box, solve_poisson_radial_with, PotentialField, DEFAULT_TAIL_EXPONENT};
use crate::quadrature::{radial_cell_integral, TailModel};
use crate::wsobolev::{l2_delta_norm, weighted_norm, DyadicPartition, WeightedNormSpec};

/// A volume integral and whether its tail model was valid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// The integrand does not decay fast enough for the assumed tail.
    pub flagged: bool,
}

/// `int rho dx` with the default tail exponent.
pub fn total_mass(rho: &GridFunction) -> Result<Integral> {
    total_mass_with(rho, DEFAULT_TAIL_EXPONENT)
}

/// `int rho dx`. Radial grids add `int_{r_max}^inf 4 pi r^2 rho` for
/// `rho ~ r^{-p}`, flagged when `p <= 3`; box grids sum the lattice.
pub fn total_mass_with(rho: &GridFunction, tail_exponent: f64) -> Result<Integral> {
    if rho.rank() != Rank::Scalar {
        return Err(Error::GridMismatch("density must be scalar".into()));
    }
    if let Some((i, &v)) = rho.samples().iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::Domain(format!("negative density {v} at node {i}")));
    }
    Ok(volume_integral(rho, rho.samples(), TailModel::Power(tail_exponent - 2.0)))
}

/// Volume integral of pointwise values laid out like `like`.
fn volume_integral(like: &GridFunction, f: &[f64], tail: TailModel) -> Integral {
    match like.geometry() {
        Geometry::Radial(g) => {
            let integrand: Vec<f64> = f
                .iter()
                .enumerate()
                .map(|(i, v)| 4.0 * PI * g.node(i).powi(2) * v)
                .collect();
            let (value, ok) = radial_cell_integral(&integrand, g.h(), Parity::Even, tail);
            Integral { value, flagged: !ok }
        }
        Geometry::Box(g) => Integral {
            value: f.iter().sum::<f64>() * g.h().powi(3),
            flagged: false,
        },
    }
}

/// The three terms of the energy functional and their sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Energy {
    /// `int rho |v|^2 / 2`.
    pub kinetic: f64,
    /// `int K rho^gamma / (gamma - 1)`.
    pub internal: f64,
    /// `int rho phi / 2`, equal to `-1/2 int int rho(x) rho(y) / |x-y|`.
    pub potential: f64,
    pub total: f64,
}

/// Relative mismatch between a supplied potential and a fresh solve above
/// which [`energy_functional`] refuses the potential.
pub const POTENTIAL_MATCH_TOLERANCE: f64 = 1e-6;

/// Energy functional of `(rho, v)` with the potential term by the
/// `phi`-identity. `phi` must be the free-space potential of `rho`.
pub fn energy_functional(
    rho: &GridFunction,
    v: &GridFunction,
    potential: &PotentialField,
    eos: &EosParams,
) -> Result<Energy> {
    rho.check_same(&potential.phi)?;
    if v.geometry() != rho.geometry() || v.rank() == Rank::Scalar {
        return Err(Error::GridMismatch("velocity must be a vector field on the density grid".into()));
    }
    let fresh = match rho.geometry() {
        Geometry::Radial(_) => solve_poisson_radial_with(rho, DEFAULT_TAIL_EXPONENT)?,
        Geometry::Box(_) => solve_poisson_box(rho)?,
    };
    let scale = fresh.phi.max_abs();
    let mismatch = potential
        .phi
        .samples()
        .iter()
        .zip(fresh.phi.samples())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if mismatch > POTENTIAL_MATCH_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Domain(format!(
            "potential does not solve the Poisson equation for this density (mismatch {mismatch:e})"
        )));
    }
    let r = rho.samples();
    let m = r.len();
    let speed_sq: Vec<f64> = (0..m)
        .map(|i| (0..v.rank().components()).map(|c| v.component(c)[i].powi(2)).sum())
        .collect();
    let kin: Vec<f64> = (0..m).map(|i| 0.5 * r[i] * speed_sq[i]).collect();
    let int: Vec<f64> = r
        .iter()
        .map(|&x| eos.pressure_of_rho(x.max(0.0)) / (eos.gamma() - 1.0))
        .collect();
    let pot: Vec<f64> = (0..m).map(|i| 0.5 * r[i] * potential.phi.samples()[i]).collect();
    let kinetic = volume_integral(rho, &kin, TailModel::Fitted).value;
    let internal = volume_integral(rho, &int, TailModel::Fitted).value;
    let potential = volume_integral(rho, &pot, TailModel::Fitted).value;
    Ok(Energy {
        kinetic,
        internal,
        potential,
        total: kinetic + internal + potential,
    })
}

/// Direct double quadrature of `-1/2 int int rho(x) rho(y) / |x - y|` for a
/// radial density, using the shell form
/// `-8 pi^2 int int rho(r) rho(s) r^2 s^2 / max(r, s) dr ds` on the midpoint
/// rule. `O(n^2)`; a test oracle for the `phi`-identity.
pub fn potential_energy_direct(rho: &GridFunction) -> Result<f64> {
    let g = rho
        .radial_grid()
        .ok_or_else(|| Error::GridMismatch("direct double quadrature needs a radial density".into()))?;
    let h = g.h();
    let q: Vec<f64> = rho
        .samples()
        .iter()
        .enumerate()
        .map(|(i, v)| v * g.node(i).powi(2))
        .collect();
    let mut acc = 0.0;
    for i in 0..q.len() {
        let ri = g.node(i);
        let inner: f64 = q[..i].iter().map(|qj| qj / ri).sum();
        acc += q[i] * (inner + 0.5 * q[i] / ri);
    }
    Ok(-16.0 * PI * PI * h * h * acc)
}

/// Relative `L^2_delta` distance of `(w, v)` from a reference state.
pub fn static_drift(state: &FluidState, reference: &FluidState, delta: f64) -> Result<f64> {
    state.w.check_same(&reference.w)?;
    state.v.check_same(&reference.v)?;
    let dw = state.w.axpby(1.0, &reference.w, -1.0)?;
    let dv = state.v.axpby(1.0, &reference.v, -1.0)?;
    let num = l2_delta_norm(&dw, delta).powi(2) + l2_delta_norm(&dv, delta).powi(2);
    let den = l2_delta_norm(&reference.w, delta).powi(2) + l2_delta_norm(&reference.v, delta).powi(2);
    if den == 0.0 {
        return Ok(num.sqrt());
    }
    Ok((num / den).sqrt())
}

/// One row of a [`TimeSeries`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Record {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub min_w: f64,
    pub max_w: f64,
    /// `||w||_{H_{s,delta}}`; NaN when the weighted-norm monitor is off.
    pub norm_w: f64,
    pub norm_v: f64,
    pub norm_w_l2delta: f64,
    /// Drift from the reference state, if one is set.
    pub static_drift: Option<f64>,
    /// Mass removed by clipping since the previous record.
    pub clip_mass: f64,
}

/// Records at strictly increasing times.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimeSeries {
    pub records: Vec<Record>,
}

/// CSV header of [`TimeSeries::write_csv`].
pub const CSV_HEADER: &str =
    "t,mass,energy,min_w,max_w,norm_w_s_delta,norm_v_s_delta,norm_w_l2delta,static_drift_l2delta,clip_mass";

impl TimeSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, r: Record) -> Result<()> {
        if let Some(last) = self.records.last() {
            if r.t <= last.t {
                return Err(Error::InvalidParameter(format!(
                    "record time {} does not follow {}",
                    r.t, last.t
                )));
            }
        }
        self.records.push(r);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.last()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    /// Header plus one row per record; floats with 17 significant digits,
    /// absent drift as an empty field.
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.records {
            let drift = r.static_drift.map(|d| format!("{d:.16e}")).unwrap_or_default();
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}",
                r.t, r.mass, r.energy, r.min_w, r.max_w, r.norm_w, r.norm_v, r.norm_w_l2delta, drift, r.clip_mass
            )?;
        }
        Ok(())
    }
}

/// What to evaluate at each output tick.
#[derive(Clone, Debug)]
pub struct Monitors {
    /// Weighted-norm monitor `(s, delta)`; `None` skips the shell engine.
    pub norms: Option<(WeightedNormSpec, DyadicPartition)>,
    /// Weight exponent of the `L^2_delta` columns.
    pub l2_delta: f64,
    pub reference: Option<FluidState>,
    pub tail_exponent: f64,
    /// Keep the state at every record.
    pub keep_states: bool,
}

impl Monitors {
    /// Mass, energy, extrema and `L^2_delta` only.
    pub fn basic(l2_delta: f64) -> Self {
        Self {
            norms: None,
            l2_delta,
            reference: None,
            tail_exponent: DEFAULT_TAIL_EXPONENT,
            keep_states: false,
        }
    }

    pub fn with_norms(mut self, spec: WeightedNormSpec) -> Result<Self> {
        spec.validate()?;
        self.norms = Some((spec, DyadicPartition::new(spec.j_max)?));
        Ok(self)
    }

    pub fn keeping_states(mut self) -> Self {
        self.keep_states = true;
        self
    }

    pub fn with_reference(mut self, reference: FluidState) -> Self {
        self.reference = Some(reference);
        self
    }

    /// Evaluates every monitor on `state`.
    pub fn record(&self, state: &FluidState, eos: &EosParams, clip_mass: f64) -> Result<Record> {
        let rho = density_from_makino(&state.w, eos)?;
        let mass = total_mass_with(&rho, self.tail_exponent)?.value;
        let pot = match rho.geometry() {
            Geometry::Radial(_) => solve_poisson_radial_with(&rho, self.tail_exponent)?,
            Geometry::Box(_) => solve_poisson_box(&rho)?,
        };
        let energy = energy_functional(&rho, &state.v, &pot, eos)?.total;
        let (norm_w, norm_v) = match &self.norms {
            Some((spec, part)) => (
                weighted_norm(&state.w, spec, part)?.norm(),
                weighted_norm(&state.v, spec, part)?.norm(),
            ),
            None => (f64::NAN, f64::NAN),
        };
        let static_drift = match &self.reference {
            Some(r) => Some(static_drift(state, r, self.l2_delta)?),
            None => None,
        };
        Ok(Record {
            t: state.t,
            mass,
            energy,
            min_w: state.w.min(),
            max_w: state.w.max(),
            norm_w,
            norm_v,
            norm_w_l2delta: l2_delta_norm(&state.w, self.l2_delta),
            static_drift,
            clip_mass,
        })
    }
}

/// The source `-grad phi` of the velocity equation for the state's density.
pub fn gravity_source(state: &FluidState, eos: &EosParams, tail_exponent: f64) -> Result<GridFunction> {
    let rho = density_from_makino(&state.w, eos)?;
    let pot = match rho.geometry() {
        Geometry::Radial(_) => solve_poisson_radial_with(&rho, tail_exponent)?,
        Geometry::Box(_) => solve_poisson_box(&rho)?,
    };
    pot.grad.map(|x| -x)
}

/// Exponential envelope `N(t) <= e^{C t} (N_0 + int_0^t S)` fitted to a
/// squared-norm series `N` with squared source series `S`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GronwallFit {
    /// Smallest `C >= 0` for which the envelope holds at every sample.
    pub c: f64,
    /// Least-squares slope of `ln(N / (N_0 + int S))` against `t`
    /// through the origin.
    pub slope: f64,
    /// RMS residual of that fit.
    pub residual: f64,
    /// Smallest `C >= 0` with `dN/dt <= C (N + S)` on every sample interval.
    pub rate: f64,
    /// The series was identically zero and no fit was made.
    pub skipped: bool,
}

impl GronwallFit {
    fn skipped() -> Self {
        Self {
            c: 0.0,
            slope: 0.0,
            residual: 0.0,
            rate: 0.0,
            skipped: true,
        }
    }

    /// Whether `N(t) <= e^{c t}(n0 + int S)` at every sample, to relative
    /// tolerance `tol`.
    pub fn envelope_holds(&self, t: &[f64], n: &[f64], s: &[f64], n0: f64, tol: f64) -> bool {
        let acc = cumulative_trapezoid(t, s);
        t.iter()
            .zip(n)
            .zip(&acc)
            .all(|((t, n), a)| *n <= (self.c * t).exp() * (n0 + a) * (1.0 + tol))
    }
}

/// Minimum number of samples [`gronwall_fit`] accepts.
pub const MIN_FIT_SAMPLES: usize = 10;

fn cumulative_trapezoid(t: &[f64], s: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; t.len()];
    for i in 1..t.len() {
        acc[i] = acc[i - 1] + 0.5 * (t[i] - t[i - 1]) * (s[i] + s[i - 1]);
    }
    acc
}

/// Fits the Gronwall envelope. `n0` is the squared initial bound (`M_0^2`
/// for the high norm; 0 for differences of runs with the same data).
pub fn gronwall_fit(t: &[f64], n: &[f64], s: &[f64], n0: f64) -> Result<GronwallFit> {
    if t.len() != n.len() || t.len() != s.len() {
        return Err(Error::InvalidParameter("series lengths differ".into()));
    }
    if t.len() < MIN_FIT_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "a Gronwall fit needs at least {MIN_FIT_SAMPLES} samples, got {}",
            t.len()
        )));
    }
    if n.iter().chain(s).any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Domain("norm series must be finite and nonnegative".into()));
    }
    if n.iter().all(|v| *v == 0.0) && s.iter().all(|v| *v == 0.0) {
        return Ok(GronwallFit::skipped());
    }
    let t0 = t[0];
    let acc = cumulative_trapezoid(t, s);
    let (mut c, mut stt, mut sty) = (0.0f64, 0.0, 0.0);
    let mut pts = Vec::new();
    for i in 0..t.len() {
        let dt = t[i] - t0;
        let base = n0 + acc[i];
        if dt <= 0.0 || base <= 0.0 || n[i] <= 0.0 {
            continue;
        }
        let y = (n[i] / base).ln();
        c = c.max(y / dt);
        stt += dt * dt;
        sty += dt * y;
        pts.push((dt, y));
    }
    let slope = if stt > 0.0 { sty / stt } else { 0.0 };
    let residual = if pts.is_empty() {
        0.0
    } else {
        (pts.iter().map(|(x, y)| (y - slope * x).powi(2)).sum::<f64>() / pts.len() as f64).sqrt()
    };
    let mut rate = 0.0f64;
    for i in 1..t.len() {
        let dt = t[i] - t[i - 1];
        let mid = 0.5 * (n[i] + n[i - 1] + s[i] + s[i - 1]);
        if dt > 0.0 && mid > 0.0 {
            rate = rate.max((n[i] - n[i - 1]) / dt / mid);
        }
    }
    Ok(GronwallFit {
        c,
        slope,
        residual,
        rate,
        skipped: false,
    })
}
