//! Dyadic-shell weighted norms
//! `||u||^2 = sum_j 2^{(3/2+delta) 2j} ||(psi_j^gamma u)(2^j .)||^2_{H^s}`.
//!
//! Each shell is resampled onto one fixed box `[-b, b]^3` (default `b = 4`) in
//! rescaled coordinates, where every window lives inside `|y| <= 2`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use rustfft::num_complex::Complex64;

use super::hs::{hs_pair_from_spectra, hs_sq_from_spectrum, sobolev_multiplier};
use super::partition::DyadicPartition;
use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::field::{component_fields, Field3};
use crate::grid::GridFunction;

/// Parameters of a weighted norm evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedNormSpec {
    pub s: f64,
    pub delta: f64,
    pub j_max: usize,
    /// Points per axis of the shell box (power of two).
    pub shell_n: usize,
    pub shell_half_width: f64,
    /// Relative size of the last shell above which the sum is flagged truncated.
    pub tail_tol: f64,
    /// Power of the window: 1 for `psi_j`, 2 for `psi_j^2`.
    pub window_power: u32,
}

impl WeightedNormSpec {
    pub fn new(s: f64, delta: f64) -> Self {
        Self {
            s,
            delta,
            j_max: 10,
            shell_n: 64,
            shell_half_width: 4.0,
            tail_tol: 1e-6,
            window_power: 1,
        }
    }

    pub fn with_j_max(mut self, j_max: usize) -> Self {
        self.j_max = j_max;
        self
    }

    pub fn with_shell_n(mut self, n: usize) -> Self {
        self.shell_n = n;
        self
    }

    pub fn with_window_power(mut self, p: u32) -> Self {
        self.window_power = p;
        self
    }

    pub fn with_s_delta(mut self, s: f64, delta: f64) -> Self {
        self.s = s;
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.j_max < 2 {
            return Err(Error::InvalidParameter(format!(
                "j_max must be >= 2, got {}",
                self.j_max
            )));
        }
        if !(self.tail_tol > 0.0) {
            return Err(Error::InvalidParameter("tail tolerance must be positive".into()));
        }
        if self.s < 0.0 {
            return Err(Error::Unsupported(format!(
                "negative-order norms (s = {}) are not implemented",
                self.s
            )));
        }
        if self.shell_n < 8 || !self.shell_n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "shell box resolution must be a power of two >= 8, got {}",
                self.shell_n
            )));
        }
        if self.shell_half_width < 2.0 {
            return Err(Error::InvalidParameter(
                "shell box must contain the ball of radius 2".into(),
            ));
        }
        if !(self.window_power == 1 || self.window_power == 2) {
            return Err(Error::InvalidParameter("window power must be 1 or 2".into()));
        }
        Ok(())
    }

    /// Shell weight `2^{(3/2 + delta) 2j}`.
    pub fn shell_weight(&self, j: usize) -> f64 {
        f64::powf(2.0, (1.5 + self.delta) * 2.0 * j as f64)
    }
}

/// Per-shell contributions of a weighted norm.
#[derive(Clone, Debug, PartialEq)]
pub struct NormBreakdown {
    /// Weighted squared shell norms, `j = 0, 1, ...`.
    pub contributions: Vec<f64>,
    /// Sum of the contributions (the squared norm).
    pub total: f64,
    /// The last shell exceeds the tail tolerance relative to the total.
    pub truncated: bool,
    /// Contributions grow over the last three shells.
    pub divergent: bool,
    /// Fewer shells than requested because the field is only known on a
    /// bounded region.
    pub domain_limited: bool,
}

impl NormBreakdown {
    pub fn norm(&self) -> f64 {
        self.total.sqrt()
    }

    pub fn cumulative(&self) -> Vec<f64> {
        self.contributions
            .iter()
            .scan(0.0, |acc, c| {
                *acc += c;
                Some(*acc)
            })
            .collect()
    }

    fn from_contributions(contributions: Vec<f64>, tail_tol: f64, domain_limited: bool) -> Self {
        let total: f64 = contributions.iter().sum();
        let last = *contributions.last().unwrap_or(&0.0);
        let truncated = total > 0.0 && last > tail_tol * total;
        let m = contributions.len();
        let divergent = m >= 3
            && contributions[m - 3] > 0.0
            && contributions[m - 1] >= contributions[m - 2]
            && contributions[m - 2] >= contributions[m - 3];
        Self {
            contributions,
            total,
            truncated,
            divergent,
            domain_limited,
        }
    }

    /// Adds another component's breakdown shell by shell.
    pub fn combine(parts: &[NormBreakdown], tail_tol: f64) -> NormBreakdown {
        let m = parts.iter().map(|p| p.contributions.len()).max().unwrap_or(0);
        let mut c = vec![0.0; m];
        for p in parts {
            for (a, b) in c.iter_mut().zip(&p.contributions) {
                *a += b;
            }
        }
        Self::from_contributions(c, tail_tol, parts.iter().any(|p| p.domain_limited))
    }
}

/// Result of a shell-wise inner product.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InnerProduct {
    pub value: f64,
    pub truncated: bool,
    pub domain_limited: bool,
}

/// Cached FFT plan, shell-box lattice and window samples for one shell box.
pub struct ShellEngine {
    n: usize,
    half_width: f64,
    fft: Fft3,
    /// Nonzero window samples: `(index, window value, y)` for the ball and ring.
    ball: Vec<(usize, f64, [f64; 3])>,
    ring: Vec<(usize, f64, [f64; 3])>,
    multipliers: RefCell<HashMap<u64, Rc<Vec<f64>>>>,
}

thread_local! {
    static ENGINES: RefCell<HashMap<(usize, u64), Rc<ShellEngine>>> = RefCell::new(HashMap::new());
}

impl ShellEngine {
    pub fn new(n: usize, half_width: f64) -> Self {
        let h = 2.0 * half_width / n as f64;
        let mut ball = Vec::new();
        let mut ring = Vec::new();
        for idx in 0..n * n * n {
            let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
            let y = [
                -half_width + i as f64 * h,
                -half_width + j as f64 * h,
                -half_width + k as f64 * h,
            ];
            let r = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
            if DyadicPartition::scaled_profile(0, r) > 0.0 {
                ball.push((idx, DyadicPartition::scaled_profile(0, r), y));
            }
            if DyadicPartition::scaled_profile(1, r) > 0.0 {
                ring.push((idx, DyadicPartition::scaled_profile(1, r), y));
            }
        }
        Self {
            n,
            half_width,
            fft: Fft3::new(n),
            ball,
            ring,
            multipliers: RefCell::new(HashMap::new()),
        }
    }

    /// Shared engine for the current thread.
    pub fn shared(n: usize, half_width: f64) -> Rc<ShellEngine> {
        ENGINES.with(|m| {
            m.borrow_mut()
                .entry((n, half_width.to_bits()))
                .or_insert_with(|| Rc::new(ShellEngine::new(n, half_width)))
                .clone()
        })
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    fn multiplier(&self, s: f64) -> Rc<Vec<f64>> {
        self.multipliers
            .borrow_mut()
            .entry(s.to_bits())
            .or_insert_with(|| Rc::new(sobolev_multiplier(self.n, self.h(), s)))
            .clone()
    }

    /// Spectrum of `psi_j(2^j y)^gamma f(2^j y)` on the shell box.
    pub fn shell_spectrum(&self, f: &dyn Field3, j: usize, gamma: u32) -> Vec<Complex64> {
        let scale = f64::powi(2.0, j as i32);
        let window = if j == 0 { &self.ball } else { &self.ring };
        let mut data = vec![Complex64::default(); self.n * self.n * self.n];
        for &(idx, w, y) in window {
            let wg = if gamma == 2 { w * w } else { w };
            let v = f.eval([scale * y[0], scale * y[1], scale * y[2]]);
            data[idx] = Complex64::new(wg * v, 0.0);
        }
        self.fft.forward(&mut data);
        data
    }

    pub fn hs_sq(&self, spectrum: &[Complex64], s: f64) -> f64 {
        hs_sq_from_spectrum(spectrum, &self.multiplier(s), self.n, self.h())
    }

    pub fn hs_pair(&self, a: &[Complex64], b: &[Complex64], s: f64) -> f64 {
        hs_pair_from_spectra(a, b, &self.multiplier(s), self.n, self.h())
    }
}

/// Last usable shell given a field known within radius `extent`: shell `j`
/// needs data out to `2^{j+1}`.
fn shell_cap(extent: Option<f64>, j_max: usize) -> (usize, bool) {
    match extent {
        None => (j_max, false),
        Some(e) => {
            let mut j = 0usize;
            while j < j_max && f64::powi(2.0, j as i32 + 2) <= e * (1.0 + 1e-12) {
                j += 1;
            }
            (j, j < j_max)
        }
    }
}

/// Shell spectra of one field, reusable for any `(s, delta)`.
pub struct ShellSpectra {
    engine: Rc<ShellEngine>,
    shells: Vec<Vec<Complex64>>,
    tail_tol: f64,
    domain_limited: bool,
}

impl ShellSpectra {
    /// Spectra of shells `0..=j_max` of `spec` (fewer for bounded fields);
    /// `spec.s` and `spec.delta` are not used.
    pub fn new(f: &dyn Field3, spec: &WeightedNormSpec) -> Result<Self> {
        spec.validate()?;
        let engine = ShellEngine::shared(spec.shell_n, spec.shell_half_width);
        let (j_last, domain_limited) = shell_cap(f.extent(), spec.j_max);
        let shells = (0..=j_last)
            .map(|j| engine.shell_spectrum(f, j, spec.window_power))
            .collect();
        Ok(Self {
            engine,
            shells,
            tail_tol: spec.tail_tol,
            domain_limited,
        })
    }

    pub fn norm(&self, s: f64, delta: f64) -> Result<NormBreakdown> {
        if s < 0.0 {
            return Err(Error::Unsupported(format!(
                "negative-order norms (s = {s}) are not implemented"
            )));
        }
        let weight = WeightedNormSpec::new(s, delta);
        let contributions = self
            .shells
            .iter()
            .enumerate()
            .map(|(j, sp)| weight.shell_weight(j) * self.engine.hs_sq(sp, s))
            .collect();
        Ok(NormBreakdown::from_contributions(
            contributions,
            self.tail_tol,
            self.domain_limited,
        ))
    }
}

/// Weighted norm of a point evaluator.
pub fn weighted_norm_field(f: &dyn Field3, spec: &WeightedNormSpec) -> Result<NormBreakdown> {
    spec.validate()?;
    let eng = ShellEngine::shared(spec.shell_n, spec.shell_half_width);
    let (j_last, limited) = shell_cap(f.extent(), spec.j_max);
    let contributions = (0..=j_last)
        .map(|j| {
            let sp = eng.shell_spectrum(f, j, spec.window_power);
            spec.shell_weight(j) * eng.hs_sq(&sp, spec.s)
        })
        .collect();
    Ok(NormBreakdown::from_contributions(
        contributions,
        spec.tail_tol,
        limited,
    ))
}

/// Weighted norm of a vector of components: squared norms add.
pub fn weighted_norm_fields(fs: &[&dyn Field3], spec: &WeightedNormSpec) -> Result<NormBreakdown> {
    let parts = fs
        .iter()
        .map(|f| weighted_norm_field(*f, spec))
        .collect::<Result<Vec<_>>>()?;
    Ok(NormBreakdown::combine(&parts, spec.tail_tol))
}

/// Weighted norm of grid data (radial profiles are lifted shell by shell;
/// vector fields sum their components).
pub fn weighted_norm(
    u: &GridFunction,
    spec: &WeightedNormSpec,
    partition: &DyadicPartition,
) -> Result<NormBreakdown> {
    let spec = WeightedNormSpec {
        j_max: partition.j_max(),
        ..*spec
    };
    let comps = component_fields(u);
    let refs: Vec<&dyn Field3> = comps.iter().map(|b| b.as_ref()).collect();
    weighted_norm_fields(&refs, &spec)
}

/// Shell-wise pairing with `psi_j^2` windows:
/// `sum_j 2^{(delta+3/2) 2j} <(psi_j^2 u)(2^j .), (psi_j^2 v)(2^j .)>_s`.
pub fn weighted_inner_product_fields(
    u: &[&dyn Field3],
    v: &[&dyn Field3],
    spec: &WeightedNormSpec,
) -> Result<InnerProduct> {
    spec.validate()?;
    if u.len() != v.len() {
        return Err(Error::GridMismatch("component counts differ".into()));
    }
    let eng = ShellEngine::shared(spec.shell_n, spec.shell_half_width);
    let extent = u
        .iter()
        .chain(v)
        .filter_map(|f| f.extent())
        .fold(None, |a: Option<f64>, e| Some(a.map_or(e, |a| a.min(e))));
    let (j_last, limited) = shell_cap(extent, spec.j_max);
    let mut value = 0.0;
    let mut last = 0.0;
    for j in 0..=j_last {
        let mut shell = 0.0;
        for (a, b) in u.iter().zip(v) {
            let sa = eng.shell_spectrum(*a, j, 2);
            let sb = eng.shell_spectrum(*b, j, 2);
            shell += eng.hs_pair(&sa, &sb, spec.s);
        }
        last = spec.shell_weight(j) * shell;
        value += last;
    }
    Ok(InnerProduct {
        value,
        truncated: last.abs() > spec.tail_tol * value.abs() && value != 0.0,
        domain_limited: limited,
    })
}

/// `<u, v>_{s, delta}` for grid data on a common grid.
pub fn weighted_inner_product(
    u: &GridFunction,
    v: &GridFunction,
    spec: &WeightedNormSpec,
    partition: &DyadicPartition,
) -> Result<InnerProduct> {
    u.check_same(v)?;
    let spec = WeightedNormSpec {
        j_max: partition.j_max(),
        ..*spec
    };
    let cu = component_fields(u);
    let cv = component_fields(v);
    let ru: Vec<&dyn Field3> = cu.iter().map(|b| b.as_ref()).collect();
    let rv: Vec<&dyn Field3> = cv.iter().map(|b| b.as_ref()).collect();
    weighted_inner_product_fields(&ru, &rv, &spec)
}
