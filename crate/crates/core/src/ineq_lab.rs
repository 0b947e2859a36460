//! Empirical check of the nonlinear, embedding and elliptic estimates that
//! the weighted norms satisfy.
//!
//! Every estimate has the shape `lhs(u) <= C rhs(u)`. The harness evaluates
//! both sides on a corpus of fields and their dilations `u(lambda x)` and
//! reports the ratios; the largest ratio is the empirical constant `C`.
//! Boundedness is only ever certified across the finite corpus.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::{norm3, partial, Field3, FnField, RadialGridField, BoxGridField};
use crate::grid::{Geometry, GridFunction, Rank};
use crate::quadrature::{gauss_legendre, SphericalRule};
use crate::wsobolev::integer::fd_step;
use crate::wsobolev::{weighted_sup_field, NormBreakdown, ShellSpectra, WeightedNormSpec};

/// Largest allowed per-degree ratio between the constant seen on a dilated
/// field and the constant seen on the undilated one.
pub const DILATION_SPREAD_LIMIT: f64 = 10.0;

/// Quadrature slack for the estimates that carry the constant 1.
pub const UNIT_CONSTANT_SLACK: f64 = 1e-3;

/// Relative size of the last radial increment of a direct integral above
/// which the value is flagged as truncated.
const INTEGRAL_DIVERGENCE_TOL: f64 = 1e-3;

/// The estimates the harness knows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InequalityKind {
    /// `||uv||_{s,delta} <= C ||u||_{s1,delta1} ||v||_{s2,delta2}`.
    Multiplication,
    /// `||u_1 ... u_m||_{s,delta} <= C prod ||u_i||_{s,delta_i}`.
    Product,
    /// `||w^beta||_{s-1,delta+2} <= C_n ||w||_{s,delta}^beta` (`[beta]` for
    /// non-integer `beta`).
    Power,
    /// `||w^beta||_{s-1,delta'} <= C ||w||_{s,delta}^{[beta]}`.
    PowerMass,
    /// `||w1^beta - w2^beta||_{L^2_{delta+2}} <= C_d ||w1 - w2||_{L^2_delta}`.
    Difference,
    /// `||u||_{C^m_beta} <= C ||u||_{s,delta}`.
    Embedding,
    /// `||d_i u||_{s-1,delta+1} <= C ||u||_{s,delta}`.
    Derivative,
    /// `||F(u)||_{s,delta} <= C ||F||_{C^{N+1}} (1 + ||u||_inf^N) ||u||_{s,delta}`.
    Moser,
    /// `|| |u|^b ||_{s,delta} <= C(||u||_inf) ||u||_{s,delta}`.
    Kateb,
    /// `||u||_{s,delta} <= ||u||_{0,delta}^{1-s/s'} ||u||_{s',delta}^{s/s'}`.
    Intermediate,
    /// `||u||_{L^1} <= ||(1+|x|)^{-delta'}||_{L^2} ||u||_{L^2_{delta'}}`.
    L1Embedding,
    /// `||grad phi||_{s-1,delta+1} <= C_e ||rho||_{s-2,delta+2}` for
    /// `Delta phi = 4 pi rho`.
    Elliptic,
}

impl InequalityKind {
    pub const ALL: [InequalityKind; 12] = [
        Self::Multiplication,
        Self::Product,
        Self::Power,
        Self::PowerMass,
        Self::Difference,
        Self::Embedding,
        Self::Derivative,
        Self::Moser,
        Self::Kateb,
        Self::Intermediate,
        Self::L1Embedding,
        Self::Elliptic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Multiplication => "multiplication",
            Self::Product => "product",
            Self::Power => "power",
            Self::PowerMass => "power-mass",
            Self::Difference => "difference",
            Self::Embedding => "embedding",
            Self::Derivative => "derivative",
            Self::Moser => "moser",
            Self::Kateb => "kateb",
            Self::Intermediate => "intermediate",
            Self::L1Embedding => "l1-embedding",
            Self::Elliptic => "elliptic",
        }
    }

    /// Number of corpus fields entering one case.
    pub fn arity(self, params: &IneqParams) -> usize {
        match self {
            Self::Multiplication | Self::Difference => 2,
            Self::Product => params.factors,
            _ => 1,
        }
    }

    /// The estimate is only stated for nonnegative fields.
    pub fn requires_nonnegative(self) -> bool {
        matches!(self, Self::Power | Self::PowerMass | Self::Difference)
    }

    /// Homogeneity degree of the right-hand side in the amplitude of its
    /// fields. Dilation changes every norm, and a degree-`d` right-hand
    /// side turns a factor `q` in the norms into `q^d` in the ratio.
    pub fn degree(self, params: &IneqParams) -> f64 {
        match self {
            Self::Multiplication => 2.0,
            Self::Product => params.factors as f64,
            Self::Power | Self::Difference if params.beta_is_integer() => params.beta,
            Self::Power | Self::PowerMass | Self::Difference => params.beta.floor(),
            Self::Kateb => params.kateb_exponent,
            _ => 1.0,
        }
    }

    /// Absolute bound on the ratio when the estimate carries the constant 1.
    pub fn unit_bound(self) -> Option<f64> {
        match self {
            Self::Intermediate | Self::L1Embedding => Some(1.0 + UNIT_CONSTANT_SLACK),
            _ => None,
        }
    }
}

impl fmt::Display for InequalityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InequalityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
                Error::InvalidParameter(format!(
                    "unknown inequality '{s}', expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// Parameters shared by all kinds; each kind reads the ones it needs.
#[derive(Clone, Debug, PartialEq)]
pub struct IneqParams {
    pub s: f64,
    pub delta: f64,
    /// Power `beta = 2/(gamma-1)`.
    pub beta: f64,
    /// Number of factors for [`InequalityKind::Product`].
    pub factors: usize,
    /// Weight `delta_i` of every factor for [`InequalityKind::Product`].
    pub factor_delta: f64,
    pub s1: f64,
    pub s2: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// Upper order for [`InequalityKind::Intermediate`].
    pub s_prime: f64,
    /// Weight of the `L^2` norm for [`InequalityKind::L1Embedding`].
    pub delta_prime: f64,
    /// Target weight `delta'` for [`InequalityKind::PowerMass`].
    pub mass_delta: f64,
    /// Weight and order of the sup norm for [`InequalityKind::Embedding`].
    pub sup_weight: f64,
    pub sup_order: usize,
    /// Exponent `b` for [`InequalityKind::Kateb`].
    pub kateb_exponent: f64,
    pub dilations: Vec<f64>,
    /// Shell resolution and depth; `s`, `delta` of this spec are ignored.
    pub norm: WeightedNormSpec,
}

impl IneqParams {
    /// Defaults derived from `(s, delta, beta)`: both multiplication factors
    /// at `(s, delta)`, three product factors at `delta`, `s' = s + 1`,
    /// `delta' = 2`, the largest admissible power-mass weight, the
    /// sharpest sup weight `delta + 3/2` and dilations `{1/2, 1, 2}`.
    pub fn new(s: f64, delta: f64, beta: f64) -> Self {
        let b = beta.floor();
        Self {
            s,
            delta,
            beta,
            factors: 3,
            factor_delta: delta,
            s1: s,
            s2: s,
            delta1: delta,
            delta2: delta,
            s_prime: s + 1.0,
            delta_prime: 2.0,
            mass_delta: b * delta + (b - 1.0) * 1.5,
            sup_weight: delta + 1.5,
            sup_order: 0,
            kateb_exponent: beta,
            dilations: vec![0.5, 1.0, 2.0],
            norm: WeightedNormSpec::new(s, delta),
        }
    }

    /// As [`IneqParams::new`] with `beta = 2/(gamma-1)`, snapped to the
    /// nearest integer when within rounding of it.
    pub fn from_gamma(gamma: f64, s: f64, delta: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(Error::InvalidParameter(format!("gamma must exceed 1, got {gamma}")));
        }
        let raw = 2.0 / (gamma - 1.0);
        let beta = if (raw - raw.round()).abs() < 1e-9 * raw { raw.round() } else { raw };
        Ok(Self::new(s, delta, beta))
    }

    pub fn beta_is_integer(&self) -> bool {
        self.beta.fract() == 0.0
    }

    fn spec(&self, s: f64, delta: f64) -> WeightedNormSpec {
        self.norm.with_s_delta(s, delta)
    }
}

fn require(cond: bool, what: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Hypothesis(what()))
    }
}

fn check_power_window(p: &IneqParams, mass: bool) -> Result<()> {
    let (s, b) = (p.s, p.beta);
    require(b >= 2.0, || format!("beta >= 2 fails: beta = {b}"))?;
    let fl = b.floor();
    if p.beta_is_integer() {
        let lo = if mass { 2.5 } else { 1.5 };
        require(s > lo, || format!("s > {lo} fails for integer beta: s = {s}"))?;
    } else {
        let hi = 2.5 + b - fl;
        require(s > 2.5 && s < hi, || {
            format!("5/2 < s < {hi} (= beta - [beta] + 5/2) fails for non-integer beta: s = {s}")
        })?;
        require(fl >= 2.0, || format!("[beta] >= 2 fails: beta = {b}"))?;
    }
    Ok(())
}

/// Errors with the violated inequality unless `params` satisfy the
/// hypotheses of `kind`.
pub fn check_hypotheses(kind: InequalityKind, p: &IneqParams) -> Result<()> {
    let finite = [p.s, p.delta, p.beta].iter().all(|v| v.is_finite());
    require(finite, || "s, delta and beta must be finite".into())?;
    if p.dilations.is_empty() || p.dilations.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::InvalidParameter("dilations must be positive".into()));
    }
    match kind {
        InequalityKind::Multiplication => {
            let (s, d) = (p.s, p.delta);
            require(s <= p.s1.min(p.s2), || {
                format!("s <= min(s1, s2) fails: s = {s}, s1 = {}, s2 = {}", p.s1, p.s2)
            })?;
            require(s + 1.5 < p.s1 + p.s2, || {
                format!("s + 3/2 < s1 + s2 fails: {} >= {}", s + 1.5, p.s1 + p.s2)
            })?;
            require(p.s1 + p.s2 >= 0.0, || "0 <= s1 + s2 fails".into())?;
            require(d - 1.5 <= p.delta1 + p.delta2, || {
                format!(
                    "delta - 3/2 <= delta1 + delta2 fails: {} > {}",
                    d - 1.5,
                    p.delta1 + p.delta2
                )
            })
        }
        InequalityKind::Product => {
            let m = p.factors;
            require(m >= 2, || format!("at least two factors needed, got {m}"))?;
            require(p.s > 1.5, || format!("s > 3/2 fails: s = {}", p.s))?;
            let bound = m as f64 * p.factor_delta + 1.5 * (m as f64 - 1.0);
            require(p.delta <= bound, || {
                format!(
                    "delta <= delta_1 + ... + delta_m + 3(m-1)/2 fails: {} > {bound}",
                    p.delta
                )
            })
        }
        InequalityKind::Power | InequalityKind::Difference => {
            check_power_window(p, false)?;
            let fl = p.beta.floor();
            let lo = 2.0 / (fl - 1.0) - 1.5;
            let what = if p.beta_is_integer() { "2/(beta-1)" } else { "2/([beta]-1)" };
            require(p.delta >= lo, || {
                format!("delta >= {what} - 3/2 = {lo} fails: delta = {}", p.delta)
            })
        }
        InequalityKind::PowerMass => {
            check_power_window(p, true)?;
            let fl = p.beta.floor();
            let lo = 3.0 / fl - 1.5;
            require(p.delta > lo, || {
                format!("3/[beta] - 3/2 < delta fails: {lo} >= {}", p.delta)
            })?;
            let hi = fl * p.delta + (fl - 1.0) * 1.5;
            require(p.mass_delta > 1.5 && p.mass_delta <= hi, || {
                format!(
                    "3/2 < delta' <= [beta] delta + 3([beta]-1)/2 = {hi} fails: delta' = {}",
                    p.mass_delta
                )
            })
        }
        InequalityKind::Embedding => {
            let m = p.sup_order as f64;
            require(m <= 1.0, || format!("sup order must be 0 or 1, got {}", p.sup_order))?;
            require(p.s > m + 1.5, || format!("s > m + 3/2 fails: s = {}, m = {m}", p.s))?;
            require(p.sup_weight <= p.delta + 1.5, || {
                format!(
                    "sup weight <= delta + 3/2 fails: {} > {}",
                    p.sup_weight,
                    p.delta + 1.5
                )
            })
        }
        InequalityKind::Derivative => {
            if p.s < 1.0 {
                return Err(Error::Unsupported(format!(
                    "the derivative estimate needs the norm of order s - 1 >= 0, got s = {}",
                    p.s
                )));
            }
            Ok(())
        }
        InequalityKind::Moser => require(p.s >= 0.0, || format!("s >= 0 fails: s = {}", p.s)),
        InequalityKind::Kateb => {
            let b = p.kateb_exponent;
            require(b > 1.0, || format!("exponent > 1 fails: {b}"))?;
            require(p.s > 0.0 && p.s < b + 0.5, || {
                format!("0 < s < exponent + 1/2 = {} fails: s = {}", b + 0.5, p.s)
            })
        }
        InequalityKind::Intermediate => require(p.s > 0.0 && p.s < p.s_prime, || {
            format!("0 < s < s' fails: s = {}, s' = {}", p.s, p.s_prime)
        }),
        InequalityKind::L1Embedding => require(p.delta_prime > 1.5, || {
            format!("delta' > 3/2 fails: delta' = {}", p.delta_prime)
        }),
        InequalityKind::Elliptic => {
            require(p.delta > -1.5 && p.delta < -0.5, || {
                format!("-3/2 < delta < -1/2 fails: delta = {}", p.delta)
            })?;
            if p.s < 2.0 {
                return Err(Error::Unsupported(format!(
                    "the elliptic estimate needs the norm of order s - 2 >= 0, got s = {}",
                    p.s
                )));
            }
            Ok(())
        }
    }
}

/// A named corpus field.
pub struct CorpusItem<'a> {
    pub name: String,
    pub field: Box<dyn Field3 + 'a>,
}

impl<'a> CorpusItem<'a> {
    pub fn new(name: impl Into<String>, field: impl Field3 + 'a) -> Self {
        Self {
            name: name.into(),
            field: Box::new(field),
        }
    }

    /// A scalar grid function read through its interpolant.
    pub fn from_grid(name: impl Into<String>, u: &'a GridFunction) -> Result<Self> {
        if u.rank() != Rank::Scalar {
            return Err(Error::InvalidParameter("corpus fields must be scalar".into()));
        }
        let field: Box<dyn Field3 + 'a> = match u.geometry() {
            Geometry::Radial(_) => Box::new(RadialGridField::new(u)),
            Geometry::Box(_) => Box::new(BoxGridField::new(u, 0)),
        };
        Ok(Self {
            name: name.into(),
            field,
        })
    }

    /// The field multiplied by `a`.
    pub fn scaled(&self, a: f64) -> CorpusItem<'_> {
        CorpusItem {
            name: format!("{}*{a}", self.name),
            field: Box::new(Mapped::new(vec![&*self.field], move |v| a * v[0])),
        }
    }
}

fn bump(r: f64, radius: f64) -> f64 {
    let t = r / radius;
    if t >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// Ten fields spanning the decay regimes: Gaussians of widths 1/2, 1, 2;
/// `(1+|x|^2)^{-p}` for `p` in `{1/4, 1, 5/2}`; compact bumps of radius 1
/// and 3; two anisotropic Gaussians.
pub fn default_corpus() -> Vec<CorpusItem<'static>> {
    let mut out = Vec::new();
    for (name, sigma) in [("gauss-0.5", 0.5), ("gauss-1", 1.0), ("gauss-2", 2.0)] {
        out.push(CorpusItem::new(
            name,
            FnField::radial(move |r: f64| (-r * r / (2.0 * sigma * sigma)).exp()),
        ));
    }
    for (name, p) in [("decay-0.25", 0.25), ("decay-1", 1.0), ("decay-2.5", 2.5)] {
        out.push(CorpusItem::new(
            name,
            FnField::radial(move |r: f64| (1.0 + r * r).powf(-p)),
        ));
    }
    for (name, radius) in [("bump-1", 1.0), ("bump-3", 3.0)] {
        out.push(CorpusItem::new(name, FnField::radial(move |r: f64| bump(r, radius))));
    }
    for (name, s) in [("aniso-1-2-0.5", [1.0, 2.0, 0.5]), ("aniso-3-1-1", [3.0, 1.0, 1.0])] {
        out.push(CorpusItem::new(
            name,
            FnField::new(move |x: [f64; 3]| {
                let q: f64 = (0..3).map(|a| (x[a] / s[a]).powi(2)).sum();
                (-0.5 * q).exp()
            }),
        ));
    }
    out
}

/// Comma-separated item names.
pub fn describe(corpus: &[CorpusItem]) -> String {
    corpus.iter().map(|c| c.name.as_str()).collect::<Vec<_>>().join(", ")
}

/// `u(lambda x)`.
pub struct Dilated<'a> {
    inner: &'a dyn Field3,
    lambda: f64,
}

impl<'a> Dilated<'a> {
    pub fn new(inner: &'a dyn Field3, lambda: f64) -> Self {
        Self { inner, lambda }
    }
}

impl Field3 for Dilated<'_> {
    fn eval(&self, x: [f64; 3]) -> f64 {
        let l = self.lambda;
        self.inner.eval([l * x[0], l * x[1], l * x[2]])
    }

    fn extent(&self) -> Option<f64> {
        self.inner.extent().map(|e| e / self.lambda)
    }

    fn radial_profile(&self, r: f64) -> Option<f64> {
        self.inner.radial_profile(self.lambda * r)
    }
}

const MAX_PARTS: usize = 8;

/// Pointwise combination `f(u_1(x), ..., u_k(x))` of up to eight fields.
pub struct Mapped<'a, F> {
    parts: Vec<&'a dyn Field3>,
    f: F,
}

impl<'a, F: Fn(&[f64]) -> f64> Mapped<'a, F> {
    pub fn new(parts: Vec<&'a dyn Field3>, f: F) -> Self {
        assert!(!parts.is_empty() && parts.len() <= MAX_PARTS, "1 to 8 parts supported");
        Self { parts, f }
    }
}

impl<F: Fn(&[f64]) -> f64> Field3 for Mapped<'_, F> {
    fn eval(&self, x: [f64; 3]) -> f64 {
        let mut buf = [0.0; MAX_PARTS];
        for (b, p) in buf.iter_mut().zip(&self.parts) {
            *b = p.eval(x);
        }
        (self.f)(&buf[..self.parts.len()])
    }

    fn extent(&self) -> Option<f64> {
        self.parts.iter().filter_map(|p| p.extent()).reduce(f64::min)
    }

    fn radial_profile(&self, r: f64) -> Option<f64> {
        let mut buf = [0.0; MAX_PARTS];
        for (b, p) in buf.iter_mut().zip(&self.parts) {
            *b = p.radial_profile(r)?;
        }
        Some((self.f)(&buf[..self.parts.len()]))
    }
}

/// Finite-difference partial derivative of a field.
struct Partial<'a> {
    inner: &'a dyn Field3,
    axis: usize,
}

impl Field3 for Partial<'_> {
    fn eval(&self, x: [f64; 3]) -> f64 {
        partial(self.inner, x, self.axis, fd_step(x))
    }

    fn extent(&self) -> Option<f64> {
        self.inner.extent()
    }
}

/// Component `c` of the gravitational field `M(<r) x / r^3` of a radial
/// density, from a tabulated enclosed mass on a logarithmic grid.
struct RadialGravity {
    log_lo: f64,
    log_step: f64,
    mass: Vec<f64>,
    core_density: f64,
    component: usize,
}

const GRAVITY_R_LO: f64 = 1e-4;
const GRAVITY_R_HI: f64 = 65536.0;
const GRAVITY_NODES: usize = 16384;

impl RadialGravity {
    fn table(profile: &dyn Fn(f64) -> f64) -> (Vec<f64>, f64) {
        let (xs, ws) = gauss_legendre(4);
        let step = (GRAVITY_R_HI / GRAVITY_R_LO).ln() / GRAVITY_NODES as f64;
        let core = profile(0.0);
        let mut m = Vec::with_capacity(GRAVITY_NODES + 1);
        let mut acc = 4.0 * PI / 3.0 * core * GRAVITY_R_LO.powi(3);
        m.push(acc);
        for k in 0..GRAVITY_NODES {
            let a = GRAVITY_R_LO * (step * k as f64).exp();
            let b = GRAVITY_R_LO * (step * (k + 1) as f64).exp();
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for (x, w) in xs.iter().zip(&ws) {
                let r = mid + half * x;
                acc += 4.0 * PI * half * w * r * r * profile(r);
            }
            m.push(acc);
        }
        (m, step)
    }

    fn components(profile: &dyn Fn(f64) -> f64) -> Vec<RadialGravity> {
        let (mass, step) = Self::table(profile);
        let core_density = profile(0.0);
        (0..3)
            .map(|component| RadialGravity {
                log_lo: GRAVITY_R_LO.ln(),
                log_step: step,
                mass: mass.clone(),
                core_density,
                component,
            })
            .collect()
    }

    fn enclosed(&self, r: f64) -> f64 {
        if r <= GRAVITY_R_LO {
            return 4.0 * PI / 3.0 * self.core_density * r * r * r;
        }
        let t = (r.ln() - self.log_lo) / self.log_step;
        let k = t.floor() as usize;
        if k >= self.mass.len() - 1 {
            return *self.mass.last().unwrap();
        }
        let (ma, mb) = (self.mass[k], self.mass[k + 1]);
        let f = t - k as f64;
        if ma > 0.0 && mb > 0.0 {
            // Log-log interpolation is exact for the power laws of the core
            // and of the far field.
            (ma.ln() * (1.0 - f) + mb.ln() * f).exp()
        } else {
            ma * (1.0 - f) + mb * f
        }
    }
}

impl Field3 for RadialGravity {
    fn eval(&self, x: [f64; 3]) -> f64 {
        let r = norm3(x);
        if r == 0.0 {
            return 0.0;
        }
        self.enclosed(r) * x[self.component] / (r * r * r)
    }
}

/// Weighted sup norm `sum_{|a|<=m} sup (1+|x|)^{beta+|a|} |d^a u|`.
///
/// Radial fields are scanned along a dense 1D grid of radii; others over
/// the nodes of the standard spherical rule and the origin.
pub fn weighted_sup(f: &dyn Field3, beta: f64, m: usize) -> Result<f64> {
    if m > 1 {
        return Err(Error::Unsupported(format!("weighted sup norms need m <= 1, got {m}")));
    }
    if f.is_radial() {
        let prof = |r: f64| f.radial_profile(r).unwrap_or(0.0);
        let mut out = 0.0f64;
        let mut deriv = 0.0f64;
        let mut visit = |r: f64| {
            out = out.max((1.0 + r).powf(beta) * prof(r).abs());
            if m == 1 {
                let e = 1e-3 * (1.0 + r);
                let d = (prof(r - 2.0 * e) - 8.0 * prof(r - e) + 8.0 * prof(r + e) - prof(r + 2.0 * e))
                    / (12.0 * e);
                deriv = deriv.max((1.0 + r).powf(beta + 1.0) * d.abs());
            }
        };
        for i in 0..=20_000 {
            visit(8.0 * i as f64 / 20_000.0);
        }
        let (lo, hi) = (8.0f64.ln(), (2.0f64.powi(30)).ln());
        for i in 1..=3000 {
            visit((lo + (hi - lo) * i as f64 / 3000.0).exp());
        }
        return Ok(out + 3.0 * deriv);
    }
    let rule = SphericalRule::standard();
    let origin = f.eval([0.0; 3]).abs();
    Ok(weighted_sup_field(f, beta, m, &rule)?.max(origin))
}

/// `int f` over `R^3` by the standard spherical rule, with the increments
/// between the radii `2^10`, `2^20` and `2^30` deciding convergence.
///
/// Returns `None` when the last increment does not shrink geometrically,
/// and flags the value as truncated when the last increment is above the
/// tolerance; the geometric tail is then added.
fn settled_integral(f: impl Fn([f64; 3]) -> f64) -> Option<(f64, bool)> {
    let rule = SphericalRule::standard();
    let (mut i10, mut i20, mut i30) = (0.0, 0.0, 0.0);
    for (x, w) in rule.points.iter().zip(&rule.weights) {
        let v = w * f(*x);
        let r = norm3(*x);
        if r <= 1024.0 {
            i10 += v;
        }
        if r <= 1_048_576.0 {
            i20 += v;
        }
        i30 += v;
    }
    let (d1, d2) = (i20 - i10, i30 - i20);
    if !i30.is_finite() {
        return None;
    }
    if d2.abs() <= INTEGRAL_DIVERGENCE_TOL * i30.abs() {
        return Some((i30, false));
    }
    let q = d2 / d1;
    if !(q.is_finite() && q > 0.0 && q < 0.5) {
        return None;
    }
    Some((i30 + d2 * q / (1.0 - q), true))
}

fn settled_l2_delta(f: &dyn Field3, delta: f64) -> Option<(f64, bool)> {
    settled_integral(|x| {
        let v = f.eval(x);
        (1.0 + norm3(x)).powf(2.0 * delta) * v * v
    })
    .map(|(v, t)| (v.max(0.0).sqrt(), t))
}

/// `||(1+|x|)^{-delta}||_{L^2}` in closed form, for `delta > 3/2`.
pub fn l1_weight_constant(delta: f64) -> f64 {
    let p = 2.0 * delta;
    (4.0 * PI * 2.0 / ((p - 1.0) * (p - 2.0) * (p - 3.0))).sqrt()
}

/// Largest `N`-th derivative bound for `F(u) = u/(1+u^2)`: the `k`-th
/// derivative is the real part of `(-1)^k k!/(u-i)^{k+1}`, so every
/// derivative up to order `n` is bounded by `n!`.
fn rational_cn_norm(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product::<f64>().max(1.0)
}

/// Both sides of one evaluated case.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    /// Variant within the case (axis, Moser function) or empty.
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub truncated: bool,
    /// Reason the case cannot be evaluated, e.g. a divergent norm.
    pub skip: Option<String>,
}

impl Evaluation {
    fn new(label: impl Into<String>, lhs: f64, rhs: f64, parts: &[&NormBreakdown]) -> Self {
        let divergent = parts.iter().any(|b| b.divergent);
        Self {
            label: label.into(),
            lhs,
            rhs,
            truncated: parts.iter().any(|b| b.truncated),
            skip: divergent.then(|| "divergent norm".to_string()),
        }
    }

    fn skipped(label: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            truncated: false,
            skip: Some(reason.into()),
        }
    }
}

fn norm(f: &dyn Field3, p: &IneqParams, s: f64, delta: f64) -> Result<NormBreakdown> {
    ShellSpectra::new(f, &p.spec(s, delta))?.norm(s, delta)
}

fn combine(parts: &[NormBreakdown], p: &IneqParams) -> NormBreakdown {
    NormBreakdown::combine(parts, p.norm.tail_tol)
}

/// Evaluates both sides of `kind` on one tuple of fields. Hypotheses are
/// not checked here.
pub fn evaluate_case(kind: InequalityKind, fields: &[&dyn Field3], p: &IneqParams) -> Result<Vec<Evaluation>> {
    let arity = kind.arity(p);
    if fields.len() != arity {
        return Err(Error::InvalidParameter(format!(
            "{kind} takes {arity} fields, got {}",
            fields.len()
        )));
    }
    let (s, d, beta) = (p.s, p.delta, p.beta);
    let power_exponent = if p.beta_is_integer() { beta } else { beta.floor() };
    let pos_pow = move |v: f64| v.max(0.0).powf(beta);
    let out = match kind {
        InequalityKind::Multiplication => {
            let prod = Mapped::new(fields.to_vec(), |v| v[0] * v[1]);
            let l = norm(&prod, p, s, d)?;
            let a = norm(fields[0], p, p.s1, p.delta1)?;
            let b = norm(fields[1], p, p.s2, p.delta2)?;
            vec![Evaluation::new("", l.norm(), a.norm() * b.norm(), &[&l, &a, &b])]
        }
        InequalityKind::Product => {
            let prod = Mapped::new(fields.to_vec(), |v| v.iter().product());
            let l = norm(&prod, p, s, d)?;
            let mut parts = vec![l.clone()];
            let mut rhs = 1.0;
            for f in fields {
                let b = norm(*f, p, s, p.factor_delta)?;
                rhs *= b.norm();
                parts.push(b);
            }
            let refs: Vec<_> = parts.iter().collect();
            vec![Evaluation::new("", l.norm(), rhs, &refs)]
        }
        InequalityKind::Power | InequalityKind::PowerMass => {
            let target = if kind == InequalityKind::Power { d + 2.0 } else { p.mass_delta };
            let exponent = if kind == InequalityKind::Power { power_exponent } else { beta.floor() };
            let pw = Mapped::new(fields.to_vec(), |v| pos_pow(v[0]));
            let l = norm(&pw, p, s - 1.0, target)?;
            let b = norm(fields[0], p, s, d)?;
            vec![Evaluation::new("", l.norm(), b.norm().powf(exponent), &[&l, &b])]
        }
        InequalityKind::Difference => {
            let pow_diff = Mapped::new(fields.to_vec(), |v| pos_pow(v[0]) - pos_pow(v[1]));
            let diff = Mapped::new(fields.to_vec(), |v| v[0] - v[1]);
            let n1 = norm(fields[0], p, s, d)?;
            let n2 = norm(fields[1], p, s, d)?;
            match (settled_l2_delta(&pow_diff, d + 2.0), settled_l2_delta(&diff, d)) {
                (Some((l, t1)), Some((dl, t2))) => {
                    let e = 2.0 * (beta - 1.0);
                    let envelope = (beta * beta / 2.0 * (n1.norm().powf(e) + n2.norm().powf(e))).sqrt();
                    let mut ev = Evaluation::new("", l, dl * envelope, &[&n1, &n2]);
                    ev.truncated |= t1 || t2;
                    vec![ev]
                }
                _ => vec![Evaluation::skipped("", "divergent L^2_delta integral")],
            }
        }
        InequalityKind::Embedding => {
            let l = weighted_sup(fields[0], p.sup_weight, p.sup_order)?;
            let b = norm(fields[0], p, s, d)?;
            vec![Evaluation::new("", l, b.norm(), &[&b])]
        }
        InequalityKind::Derivative => {
            let b = norm(fields[0], p, s, d)?;
            let mut out = Vec::new();
            for axis in 0..3 {
                let di = Partial { inner: fields[0], axis };
                let l = norm(&di, p, s - 1.0, d + 1.0)?;
                out.push(Evaluation::new(format!("axis{axis}"), l.norm(), b.norm(), &[&l, &b]));
            }
            out
        }
        InequalityKind::Moser => {
            let n = s.floor() as usize + 1;
            let sup = weighted_sup(fields[0], 0.0, 0)?;
            let b = norm(fields[0], p, s, d)?;
            let growth = (1.0 + sup.powi(n as i32)) * b.norm();
            let rational = Mapped::new(fields.to_vec(), |v| v[0] / (1.0 + v[0] * v[0]));
            let sine = Mapped::new(fields.to_vec(), |v| v[0].sin());
            let lr = norm(&rational, p, s, d)?;
            let ls = norm(&sine, p, s, d)?;
            vec![
                Evaluation::new("rational", lr.norm(), rational_cn_norm(n + 1) * growth, &[&lr, &b]),
                Evaluation::new("sine", ls.norm(), growth, &[&ls, &b]),
            ]
        }
        InequalityKind::Kateb => {
            let e = p.kateb_exponent;
            let pw = Mapped::new(fields.to_vec(), move |v| v[0].abs().powf(e));
            let l = norm(&pw, p, s, d)?;
            let b = norm(fields[0], p, s, d)?;
            let sup = weighted_sup(fields[0], 0.0, 0)?;
            vec![Evaluation::new("", l.norm(), sup.powf(e - 1.0) * b.norm(), &[&l, &b])]
        }
        InequalityKind::Intermediate => {
            let spectra = ShellSpectra::new(fields[0], &p.spec(s, d))?;
            let mid = spectra.norm(s, d)?;
            let low = spectra.norm(0.0, d)?;
            let high = spectra.norm(p.s_prime, d)?;
            let th = s / p.s_prime;
            let rhs = low.norm().powf(1.0 - th) * high.norm().powf(th);
            vec![Evaluation::new("", mid.norm(), rhs, &[&mid, &low, &high])]
        }
        InequalityKind::L1Embedding => {
            let u = fields[0];
            match (
                settled_integral(|x| u.eval(x).abs()),
                settled_l2_delta(u, p.delta_prime),
            ) {
                (Some((l, t1)), Some((r, t2))) => {
                    let mut ev = Evaluation::new("", l, l1_weight_constant(p.delta_prime) * r, &[]);
                    ev.truncated = t1 || t2;
                    vec![ev]
                }
                _ => vec![Evaluation::skipped("", "divergent integral")],
            }
        }
        InequalityKind::Elliptic => {
            let u = fields[0];
            if !u.is_radial() {
                vec![Evaluation::skipped("", "elliptic case needs a radial density")]
            } else {
                let profile = |r: f64| u.radial_profile(r).unwrap_or(0.0);
                let grav = RadialGravity::components(&profile);
                let mut parts = Vec::new();
                for g in &grav {
                    parts.push(norm(g, p, s - 1.0, d + 1.0)?);
                }
                let l = combine(&parts, p);
                let b = norm(u, p, s - 2.0, d + 2.0)?;
                vec![Evaluation::new("", l.norm(), b.norm(), &[&l, &b])]
            }
        }
    };
    Ok(out)
}

/// One evaluated case.
#[derive(Clone, Debug, PartialEq)]
pub struct Case {
    pub id: String,
    pub items: Vec<String>,
    pub label: String,
    pub dilation: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Skipped {
    pub id: String,
    pub reason: String,
}

/// Ratio statistics of one kind over a corpus.
#[derive(Clone, Debug)]
pub struct RatioReport {
    pub kind: InequalityKind,
    pub params: IneqParams,
    pub corpus: String,
    pub cases: Vec<Case>,
    pub skipped: Vec<Skipped>,
    /// The empirical constant: the largest ratio.
    pub max_ratio: f64,
    /// Largest ratio over a dilation family divided by the ratio of the
    /// undilated member.
    pub dilation_spread: f64,
    /// `dilation_spread^{1/degree}`: the spread per factor of the
    /// right-hand side.
    pub normalized_spread: f64,
}

pub const CSV_HEADER: &str = "id,dilation,lhs,rhs,ratio,truncated";

impl RatioReport {
    pub fn truncated(&self) -> usize {
        self.cases.iter().filter(|c| c.truncated).count()
    }

    /// Reasons the report does not certify the estimate; empty on success.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.cases.is_empty() {
            out.push("no case could be evaluated".into());
        }
        for c in &self.cases {
            if !(c.ratio.is_finite() && c.ratio >= 0.0 && c.rhs > 0.0) {
                out.push(format!("{}: invalid ratio {} (rhs {})", c.id, c.ratio, c.rhs));
            }
        }
        if !(self.normalized_spread <= DILATION_SPREAD_LIMIT) {
            out.push(format!(
                "per-degree dilation spread {:.3e} exceeds {DILATION_SPREAD_LIMIT}",
                self.normalized_spread
            ));
        }
        if let Some(b) = self.kind.unit_bound() {
            if self.max_ratio > b {
                out.push(format!("max ratio {:.6} exceeds {b}", self.max_ratio));
            }
        }
        out
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }

    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for c in &self.cases {
            writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e},{}",
                c.id, c.dilation, c.lhs, c.rhs, c.ratio, c.truncated
            )?;
        }
        Ok(())
    }
}

impl fmt::Display for RatioReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} cases, {} skipped, {} truncated, max ratio {:.4e}, dilation spread {:.3e} ({:.3} per degree)",
            self.kind,
            self.cases.len(),
            self.skipped.len(),
            self.truncated(),
            self.max_ratio,
            self.dilation_spread,
            self.normalized_spread
        )
    }
}

fn check_nonnegative(item: &CorpusItem) -> Result<()> {
    let rule = SphericalRule::new(2.0f64.powi(20), 4, 8, 12);
    let probe = std::iter::once([0.0; 3]).chain(rule.points.iter().copied());
    for x in probe {
        let v = item.field.eval(x);
        if v < 0.0 {
            return Err(Error::Domain(format!(
                "field '{}' is negative ({v:.3e}) at {x:?}; the estimate needs w >= 0",
                item.name
            )));
        }
    }
    Ok(())
}

/// Tuples of consecutive corpus indices (cyclically) of the given arity.
fn tuples(n: usize, arity: usize) -> Vec<Vec<usize>> {
    if arity == 1 {
        return (0..n).map(|i| vec![i]).collect();
    }
    (0..n).map(|i| (0..arity).map(|k| (i + k) % n).collect()).collect()
}

/// Evaluates `kind` on every corpus tuple and dilation. Tuples are runs of
/// consecutive items, cyclically, so every item appears in every slot.
pub fn check_inequality(kind: InequalityKind, corpus: &[CorpusItem], params: &IneqParams) -> Result<RatioReport> {
    check_hypotheses(kind, params)?;
    if corpus.is_empty() {
        return Err(Error::InvalidParameter("empty corpus".into()));
    }
    if kind.requires_nonnegative() {
        corpus.iter().try_for_each(check_nonnegative)?;
    }
    let mut cases = Vec::new();
    let mut skipped = Vec::new();
    let mut spread = 1.0f64;
    for tuple in tuples(corpus.len(), kind.arity(params)) {
        let names: Vec<String> = tuple.iter().map(|&i| corpus[i].name.clone()).collect();
        let mut family: Vec<(String, f64, f64)> = Vec::new();
        for &lambda in &params.dilations {
            let dilated: Vec<Dilated> = tuple
                .iter()
                .map(|&i| Dilated::new(&*corpus[i].field, lambda))
                .collect();
            let refs: Vec<&dyn Field3> = dilated.iter().map(|f| f as &dyn Field3).collect();
            for ev in evaluate_case(kind, &refs, params)? {
                let mut id = names.join("*");
                if !ev.label.is_empty() {
                    id = format!("{id}[{}]", ev.label);
                }
                id = format!("{id}@{lambda}");
                if let Some(reason) = ev.skip {
                    skipped.push(Skipped { id, reason });
                    continue;
                }
                if ev.rhs == 0.0 && ev.lhs == 0.0 {
                    skipped.push(Skipped {
                        id,
                        reason: "both sides vanish".into(),
                    });
                    continue;
                }
                let ratio = ev.lhs / ev.rhs;
                family.push((ev.label.clone(), lambda, ratio));
                cases.push(Case {
                    id,
                    items: names.clone(),
                    label: ev.label,
                    dilation: lambda,
                    lhs: ev.lhs,
                    rhs: ev.rhs,
                    ratio,
                    truncated: ev.truncated,
                });
            }
        }
        for (label, lambda, ratio) in &family {
            if *lambda == 1.0 {
                continue;
            }
            let base = family
                .iter()
                .find(|(l, lam, _)| l == label && *lam == 1.0)
                .map(|x| x.2);
            if let Some(base) = base {
                if base > 0.0 {
                    spread = spread.max(ratio / base);
                } else if *ratio > 0.0 {
                    spread = f64::INFINITY;
                }
            }
        }
    }
    let max_ratio = cases.iter().map(|c| c.ratio).fold(0.0, f64::max);
    Ok(RatioReport {
        kind,
        params: params.clone(),
        corpus: describe(corpus),
        cases,
        skipped,
        max_ratio,
        dilation_spread: spread,
        normalized_spread: spread.powf(1.0 / kind.degree(params)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluid::StaticProfile;

    fn corner() -> IneqParams {
        IneqParams::from_gamma(1.2, 2.6, -1.2).unwrap()
    }

    fn coarse(mut p: IneqParams) -> IneqParams {
        p.norm = p.norm.with_shell_n(32).with_j_max(6);
        p
    }

    fn gaussian(sigma: f64) -> impl Field3 {
        FnField::radial(move |r: f64| (-r * r / (2.0 * sigma * sigma)).exp())
    }

    #[test]
    fn names_round_trip() {
        for k in InequalityKind::ALL {
            assert_eq!(k.name().parse::<InequalityKind>().unwrap(), k);
        }
        assert!(matches!("sobolev".parse::<InequalityKind>(), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn beta_snaps_to_integer() {
        assert_eq!(corner().beta, 10.0);
        assert!(corner().beta_is_integer());
        let p = IneqParams::from_gamma(1.3, 2.6, -1.2).unwrap();
        assert!(!p.beta_is_integer());
    }

    #[test]
    fn corner_satisfies_all_but_power_mass() {
        let p = corner();
        for k in InequalityKind::ALL {
            let r = check_hypotheses(k, &p);
            if k == InequalityKind::PowerMass {
                let msg = r.unwrap_err().to_string();
                assert!(msg.contains("3/[beta] - 3/2 < delta"), "{msg}");
            } else {
                r.unwrap_or_else(|e| panic!("{k}: {e}"));
            }
        }
        let p = IneqParams::from_gamma(1.2, 2.6, -1.19).unwrap();
        check_hypotheses(InequalityKind::PowerMass, &p).unwrap();
        assert!((p.mass_delta - 1.6).abs() < 1e-12);
    }

    #[test]
    fn hypothesis_violations_name_the_inequality() {
        let mut p = corner();
        p.delta = -1.3;
        let e = check_hypotheses(InequalityKind::Power, &p).unwrap_err().to_string();
        assert!(e.contains("2/(beta-1) - 3/2"), "{e}");
        p.delta = -1.2;
        p.factor_delta = -2.0;
        let e = check_hypotheses(InequalityKind::Product, &p).unwrap_err().to_string();
        assert!(e.contains("3(m-1)/2"), "{e}");
        let mut p = corner();
        p.delta = -0.4;
        assert!(matches!(check_hypotheses(InequalityKind::Elliptic, &p), Err(Error::Hypothesis(_))));
        let mut p = corner();
        p.s = 1.5;
        assert!(matches!(check_hypotheses(InequalityKind::Elliptic, &p), Err(Error::Unsupported(_))));
        let p = IneqParams::from_gamma(1.3, 3.2, -1.0).unwrap();
        let e = check_hypotheses(InequalityKind::Power, &p).unwrap_err().to_string();
        assert!(e.contains("beta - [beta] + 5/2"), "{e}");
        let p = IneqParams::from_gamma(1.3, 3.0, -1.0).unwrap();
        check_hypotheses(InequalityKind::Power, &p).unwrap();
        let mut p = corner();
        p.sup_weight = 0.4;
        assert!(check_hypotheses(InequalityKind::Embedding, &p).is_err());
    }

    #[test]
    fn default_corpus_has_ten_nonnegative_items() {
        let c = default_corpus();
        assert_eq!(c.len(), 10);
        for item in &c {
            check_nonnegative(item).unwrap();
        }
        assert_eq!(c[3].field.eval([1.0, 0.0, 0.0]), 2f64.powf(-0.25));
        assert_eq!(c[6].field.eval([1.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn negative_fields_are_rejected() {
        let corpus = vec![CorpusItem::new("dip", FnField::radial(|r: f64| (-r * r).exp() - 0.5))];
        let e = check_inequality(InequalityKind::Power, &corpus, &coarse(corner()));
        assert!(matches!(e, Err(Error::Domain(_))));
    }

    #[test]
    fn identical_arguments_give_zero_difference() {
        let u = gaussian(1.0);
        let ev = evaluate_case(InequalityKind::Difference, &[&u, &u], &coarse(corner())).unwrap();
        assert_eq!(ev[0].lhs, 0.0);
        assert!(ev[0].skip.is_none());
    }

    #[test]
    fn intermediate_ratio_at_most_one() {
        let p = coarse(corner());
        for sigma in [0.5, 1.0, 2.0] {
            let u = gaussian(sigma);
            let ev = evaluate_case(InequalityKind::Intermediate, &[&u], &p).unwrap();
            assert!(ev[0].lhs <= ev[0].rhs * (1.0 + 1e-12), "{ev:?}");
        }
    }

    #[test]
    fn l1_constant_matches_quadrature() {
        for delta in [2.0, 2.5, 3.0] {
            let rule = SphericalRule::standard();
            let q = rule.integrate(|x| (1.0 + norm3(x)).powf(-2.0 * delta)).sqrt();
            let e = l1_weight_constant(delta);
            assert!((q - e).abs() < 1e-6 * e, "{delta}: {q} {e}");
        }
    }

    #[test]
    fn l1_embedding_holds_with_constant_one() {
        let u = gaussian(1.0);
        let ev = evaluate_case(InequalityKind::L1Embedding, &[&u], &coarse(corner())).unwrap();
        let exact = (2.0 * PI).powf(1.5);
        assert!((ev[0].lhs - exact).abs() < 1e-8 * exact);
        assert!(ev[0].lhs <= ev[0].rhs);
    }

    #[test]
    fn integral_convergence_classes() {
        let (v, t) = settled_integral(|x| (-norm3(x).powi(2)).exp()).unwrap();
        assert!(!t && (v - PI.powf(1.5)).abs() < 1e-8);
        // 4 pi int r^2 (1+r)^{-3.4} dr converges like R^{-0.4}.
        let (v, t) = settled_integral(|x| (1.0 + norm3(x)).powf(-3.4)).unwrap();
        let exact = 4.0 * PI * 2.0 / (2.4 * 1.4 * 0.4);
        assert!(t && (v - exact).abs() < 1e-3 * exact, "{v} {exact}");
        assert!(settled_integral(|x| (1.0 + norm3(x)).powf(-3.0)).is_none());
        assert!(settled_integral(|x| (1.0 + norm3(x)).powf(-2.5)).is_none());
    }

    #[test]
    fn radial_sup_scan_matches_maximizer() {
        let u = FnField::radial(|r: f64| (1.0 + r * r).powf(-0.25));
        let v = weighted_sup(&u, 0.5, 0).unwrap();
        // (1+r)^{1/2}(1+r^2)^{-1/4} peaks at r = 1 with value 2^{1/4}.
        assert!((v - 2f64.powf(0.25)).abs() < 1e-6, "{v}");
        let g = gaussian(1.0);
        let d = weighted_sup(&g, 0.0, 1).unwrap();
        // 1 + 3 sup (1+r) r e^{-r^2/2}
        let expect = 1.0 + 3.0 * (0..200_000)
            .map(|i| {
                let r = i as f64 * 5e-5;
                (1.0 + r) * r * (-r * r / 2.0).exp()
            })
            .fold(0.0, f64::max);
        assert!((d - expect).abs() < 1e-6, "{d} {expect}");
    }

    #[test]
    fn sup_of_non_radial_field_includes_origin() {
        let u = FnField::new(|x: [f64; 3]| (-(x[0] * x[0] + 4.0 * x[1] * x[1] + x[2] * x[2])).exp());
        assert_eq!(weighted_sup(&u, 0.0, 0).unwrap(), 1.0);
    }

    #[test]
    fn tabulated_gravity_matches_plummer() {
        let prof = StaticProfile::new(1.0).unwrap();
        let grav = RadialGravity::components(&|r| prof.rho(r));
        for r in [1e-5, 0.01, 0.3, 1.0, 7.0, 100.0, 1e5] {
            let g = grav[2].eval([0.0, 0.0, r]);
            let e = prof.dphi(r);
            assert!((g - e).abs() < 1e-6 * e, "{r}: {g} {e}");
        }
        assert_eq!(grav[0].eval([0.0; 3]), 0.0);
    }

    #[test]
    fn wrappers_compose() {
        let u = gaussian(1.0);
        let d = Dilated::new(&u, 2.0);
        assert_eq!(d.eval([0.5, 0.0, 0.0]), u.eval([1.0, 0.0, 0.0]));
        assert_eq!(d.radial_profile(0.5), u.radial_profile(1.0));
        let m = Mapped::new(vec![&u, &d], |v| v[0] * v[1]);
        assert!(m.is_radial());
        let x = [0.3, 0.2, 0.1];
        assert_eq!(m.eval(x), u.eval(x) * d.eval(x));
        let box_like = FnField::new(|x: [f64; 3]| x[0]);
        assert!(!Mapped::new(vec![&u, &box_like], |v| v[0]).is_radial());
        let items = default_corpus();
        let scaled = items[0].scaled(3.0);
        assert_eq!(scaled.field.eval(x), 3.0 * items[0].field.eval(x));
    }

    #[test]
    fn tuples_are_cyclic_runs() {
        assert_eq!(tuples(3, 1), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(tuples(3, 2), vec![vec![0, 1], vec![1, 2], vec![2, 0]]);
    }

    #[test]
    fn embedding_example_gaussian() {
        let mut p = coarse(IneqParams::new(2.0, -1.0, 10.0));
        p.sup_weight = 0.5;
        let corpus = vec![CorpusItem::new("gauss", gaussian(1.0))];
        let r = check_inequality(InequalityKind::Embedding, &corpus, &p).unwrap();
        assert_eq!(r.cases.len(), 3);
        assert!(r.passed(), "{:?}", r.failures());
        assert!(r.max_ratio > 0.0 && r.max_ratio.is_finite());
    }

    #[test]
    fn report_csv_has_one_line_per_case() {
        let corpus = vec![CorpusItem::new("gauss", gaussian(1.0))];
        let r = check_inequality(InequalityKind::Intermediate, &corpus, &coarse(corner())).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + r.cases.len());
        assert!(text.starts_with(CSV_HEADER));
        assert!(r.max_ratio <= 1.0);
    }

    #[test]
    fn elliptic_skips_non_radial_fields() {
        let aniso = FnField::new(|x: [f64; 3]| (-(x[0] * x[0] + 2.0 * x[1] * x[1] + x[2] * x[2])).exp());
        let ev = evaluate_case(InequalityKind::Elliptic, &[&aniso], &coarse(corner())).unwrap();
        assert!(ev[0].skip.as_deref().unwrap().contains("radial"));
    }
}
