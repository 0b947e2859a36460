//! Radial and Cartesian-box grids, sampled fields and their derivatives.

pub mod dump;
pub mod interp;
pub mod stencil;

use crate::error::{Error, Result};
use crate::field::Field3;
pub use interp::{BoxInterpolant, RadialInterpolant};
pub use stencil::Parity;

/// Cell-centred radial grid on `(0, r_max)`; node `i` sits at `(i + 1/2) h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialGrid {
    r_max: f64,
    n: usize,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if n < 8 {
            return Err(Error::InvalidParameter(format!(
                "radial grid needs at least 8 cells, got {n}"
            )));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "radial extent must be positive, got {r_max}"
            )));
        }
        Ok(Self { r_max, n })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.r_max / self.n as f64
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }
}

/// Uniform grid on the cube `[-L, L)^3` with `n` points per axis.
///
/// Node `i` along an axis sits at `-L + i h` with `h = 2L/n`, so the origin is
/// a node. Samples are stored with the last axis fastest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxGrid {
    half_width: f64,
    n: usize,
}

impl BoxGrid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "box grid needs a power-of-two point count >= 8, got {n}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "box half-width must be positive, got {half_width}"
            )));
        }
        Ok(Self { half_width, n })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.h()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        let k = idx % n;
        let j = (idx / n) % n;
        let i = idx / (n * n);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    /// Index of the node nearest to the origin (the origin itself).
    pub fn origin_index(&self) -> usize {
        let c = self.n / 2;
        self.index(c, c, c)
    }
}

/// The discretization a [`GridFunction`] lives on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Geometry {
    Radial(RadialGrid),
    Box(BoxGrid),
}

impl Geometry {
    pub fn node_count(&self) -> usize {
        match self {
            Geometry::Radial(g) => g.n(),
            Geometry::Box(g) => g.len(),
        }
    }

    pub fn h(&self) -> f64 {
        match self {
            Geometry::Radial(g) => g.h(),
            Geometry::Box(g) => g.h(),
        }
    }

    /// Largest radius fully covered by the grid.
    pub fn extent(&self) -> f64 {
        match self {
            Geometry::Radial(g) => g.r_max(),
            Geometry::Box(g) => g.half_width(),
        }
    }

    pub fn tag(&self) -> u32 {
        match self {
            Geometry::Radial(_) => 0,
            Geometry::Box(_) => 1,
        }
    }

    fn describe(&self, idx: usize) -> String {
        match self {
            Geometry::Radial(g) => format!("r = {}", g.node(idx % g.n())),
            Geometry::Box(g) => {
                let p = g.point(idx % g.len());
                format!("x = ({}, {}, {})", p[0], p[1], p[2])
            }
        }
    }
}

/// Tensor rank of a sampled field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rank {
    Scalar,
    /// Radial component `v(r)` of a vector field `v(r) x/|x|`.
    RadialVector,
    /// Three Cartesian components, stored component-major.
    Vector3,
}

impl Rank {
    pub fn components(self) -> usize {
        match self {
            Rank::Vector3 => 3,
            _ => 1,
        }
    }

    pub fn tag(self) -> u32 {
        match self {
            Rank::Scalar => 0,
            Rank::RadialVector => 1,
            Rank::Vector3 => 2,
        }
    }

    /// Reflection parity of the radial profile at the origin.
    pub fn parity(self) -> Parity {
        match self {
            Rank::RadialVector => Parity::Odd,
            _ => Parity::Even,
        }
    }
}

/// A field sampled on a grid. All samples are finite.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    geometry: Geometry,
    rank: Rank,
    samples: Vec<f64>,
}

impl GridFunction {
    /// Wraps samples after checking shape, rank compatibility and finiteness.
    pub fn new(geometry: Geometry, rank: Rank, samples: Vec<f64>) -> Result<Self> {
        match (geometry, rank) {
            (Geometry::Radial(_), Rank::Vector3) => {
                return Err(Error::GridMismatch(
                    "3-vector fields are not stored on radial grids".into(),
                ))
            }
            (Geometry::Box(_), Rank::RadialVector) => {
                return Err(Error::GridMismatch(
                    "radial-vector fields live only on radial grids".into(),
                ))
            }
            _ => {}
        }
        let expected = geometry.node_count() * rank.components();
        if samples.len() != expected {
            return Err(Error::GridMismatch(format!(
                "expected {expected} samples, got {}",
                samples.len()
            )));
        }
        if let Some((i, &v)) = samples.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: i,
                location: geometry.describe(i),
                value: v,
            });
        }
        Ok(Self {
            geometry,
            rank,
            samples,
        })
    }

    pub fn zeros(geometry: Geometry, rank: Rank) -> Result<Self> {
        let len = geometry.node_count() * rank.components();
        Self::new(geometry, rank, vec![0.0; len])
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn radial_grid(&self) -> Option<&RadialGrid> {
        match &self.geometry {
            Geometry::Radial(g) => Some(g),
            Geometry::Box(_) => None,
        }
    }

    pub fn box_grid(&self) -> Option<&BoxGrid> {
        match &self.geometry {
            Geometry::Box(g) => Some(g),
            Geometry::Radial(_) => None,
        }
    }

    /// Samples of one Cartesian component (the whole array for rank-1 data).
    pub fn component(&self, c: usize) -> &[f64] {
        let m = self.geometry.node_count();
        &self.samples[c * m..(c + 1) * m]
    }

    /// Pointwise map producing a field of the same geometry and rank.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.geometry,
            self.rank,
            self.samples.iter().map(|&v| f(v)).collect(),
        )
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &GridFunction, b: f64) -> Result<Self> {
        self.check_same(other)?;
        Self::new(
            self.geometry,
            self.rank,
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
    }

    pub fn check_same(&self, other: &GridFunction) -> Result<()> {
        if self.geometry != other.geometry || self.rank != other.rank {
            return Err(Error::GridMismatch(format!(
                "{:?}/{:?} vs {:?}/{:?}",
                self.geometry, self.rank, other.geometry, other.rank
            )));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Evaluates a closed-form field at every node. On a radial grid the field is
/// read along the positive first axis.
pub fn sample_analytic(f: &dyn Field3, geometry: Geometry) -> Result<GridFunction> {
    let samples = match geometry {
        Geometry::Radial(g) => (0..g.n()).map(|i| f.eval([g.node(i), 0.0, 0.0])).collect(),
        Geometry::Box(g) => (0..g.len()).map(|i| f.eval(g.point(i))).collect(),
    };
    GridFunction::new(geometry, Rank::Scalar, samples)
}

/// Samples a radial profile `f(r)` as a scalar or radial-vector field.
pub fn sample_radial(g: RadialGrid, rank: Rank, f: impl Fn(f64) -> f64) -> Result<GridFunction> {
    GridFunction::new(
        Geometry::Radial(g),
        rank,
        (0..g.n()).map(|i| f(g.node(i))).collect(),
    )
}

/// Samples a scalar function of position on a box grid.
pub fn sample_box(g: BoxGrid, f: impl Fn([f64; 3]) -> f64) -> Result<GridFunction> {
    GridFunction::new(
        Geometry::Box(g),
        Rank::Scalar,
        (0..g.len()).map(|i| f(g.point(i))).collect(),
    )
}

/// Fourth-order radial derivative of a cell-centred profile.
///
/// Inner ghosts mirror the profile with the given parity; outer ghosts are
/// either supplied or extrapolated (equivalent to one-sided stencils).
pub fn radial_derivative(f: &[f64], parity: Parity, h: f64, outer: Option<[f64; 2]>) -> Vec<f64> {
    let padded = stencil::pad_radial(f, parity, outer);
    let mut out = vec![0.0; f.len()];
    stencil::d1(&padded, &mut out, 1.0 / h);
    out
}

/// Fourth-order derivative along `axis` of a scalar field.
///
/// On a radial grid the axis is ignored and the result is `d/dr`, whose rank
/// is the opposite of the input's (scalar profiles are even, radial
/// components odd). Box fields use extrapolated ghosts at the faces.
pub fn derivative(u: &GridFunction, axis: usize) -> Result<GridFunction> {
    match u.geometry {
        Geometry::Radial(g) => {
            let out_rank = match u.rank {
                Rank::Scalar => Rank::RadialVector,
                Rank::RadialVector => Rank::Scalar,
                Rank::Vector3 => unreachable!(),
            };
            let d = radial_derivative(&u.samples, u.rank.parity(), g.h(), None);
            GridFunction::new(u.geometry, out_rank, d)
        }
        Geometry::Box(g) => {
            if u.rank != Rank::Scalar {
                return Err(Error::GridMismatch(
                    "box derivative expects a scalar field".into(),
                ));
            }
            if axis > 2 {
                return Err(Error::InvalidParameter(format!("axis {axis} out of range")));
            }
            let d = box_derivative(&g, &u.samples, axis);
            GridFunction::new(u.geometry, Rank::Scalar, d)
        }
    }
}

/// Applies a padded-line operator along one axis of box data.
pub(crate) fn box_line_apply(
    g: &BoxGrid,
    f: &[f64],
    axis: usize,
    op: impl Fn(&[f64], &mut [f64]),
) -> Vec<f64> {
    let n = g.n();
    let stride = match axis {
        0 => n * n,
        1 => n,
        _ => 1,
    };
    let mut out = vec![0.0; f.len()];
    let mut line = vec![0.0; n];
    let mut padded = Vec::with_capacity(n + 4);
    let mut res = vec![0.0; n];
    for a in 0..n {
        for b in 0..n {
            let base = match axis {
                0 => a * n + b,
                1 => a * n * n + b,
                _ => (a * n + b) * n,
            };
            for (t, l) in line.iter_mut().enumerate() {
                *l = f[base + t * stride];
            }
            stencil::pad_line(&line, &mut padded);
            op(&padded, &mut res);
            for (t, r) in res.iter().enumerate() {
                out[base + t * stride] = *r;
            }
        }
    }
    out
}

pub(crate) fn box_derivative(g: &BoxGrid, f: &[f64], axis: usize) -> Vec<f64> {
    let inv_h = 1.0 / g.h();
    box_line_apply(g, f, axis, |p, o| stencil::d1(p, o, inv_h))
}

/// Lifts a radial profile onto a box: scalars become `u(|x|)`, radial
/// components become `v(|x|) x/|x|`. Interpolation in `r` is monotone cubic.
pub fn lift_radial_to_box(u: &GridFunction, g: BoxGrid) -> Result<GridFunction> {
    let rg = u.radial_grid().ok_or_else(|| {
        Error::GridMismatch("lift_radial_to_box expects a radial field".into())
    })?;
    if g.half_width() > rg.r_max() {
        return Err(Error::Domain(format!(
            "box half-width {} exceeds radial extent {}",
            g.half_width(),
            rg.r_max()
        )));
    }
    let interp = RadialInterpolant::new(u);
    match u.rank {
        Rank::Scalar => sample_box(g, |x| interp.eval((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt())),
        Rank::RadialVector => {
            let m = g.len();
            let mut samples = vec![0.0; 3 * m];
            for idx in 0..m {
                let x = g.point(idx);
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                if r > 0.0 {
                    let v = interp.eval(r) / r;
                    for c in 0..3 {
                        samples[c * m + idx] = v * x[c];
                    }
                }
            }
            GridFunction::new(Geometry::Box(g), Rank::Vector3, samples)
        }
        Rank::Vector3 => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FnField;

    #[test]
    fn grid_validation() {
        assert!(RadialGrid::new(1.0, 7).is_err());
        assert!(RadialGrid::new(0.0, 16).is_err());
        assert!(BoxGrid::new(4.0, 48).is_err());
        let g = RadialGrid::new(8.0, 16).unwrap();
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.node(0), 0.25);
        let b = BoxGrid::new(8.0, 32).unwrap();
        assert_eq!(b.point(b.origin_index()), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn non_finite_sample_is_located() {
        let g = RadialGrid::new(8.0, 16).unwrap();
        let err = sample_radial(g, Rank::Scalar, |r| if r > 4.0 { f64::NAN } else { r }).unwrap_err();
        match err {
            Error::NonFinite { index, location, .. } => {
                assert_eq!(index, 8);
                assert!(location.contains("4.25"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn rank_geometry_consistency() {
        let b = Geometry::Box(BoxGrid::new(4.0, 8).unwrap());
        assert!(GridFunction::zeros(b, Rank::RadialVector).is_err());
        let r = Geometry::Radial(RadialGrid::new(4.0, 8).unwrap());
        assert!(GridFunction::zeros(r, Rank::Vector3).is_err());
    }

    #[test]
    fn sampling_matches_closed_form() {
        let g = RadialGrid::new(8.0, 16).unwrap();
        let f = FnField::radial(|r| (1.0 + r * r).powf(-2.5));
        let u = sample_analytic(&f, Geometry::Radial(g)).unwrap();
        for (i, v) in u.samples().iter().enumerate() {
            let r = g.node(i);
            assert_eq!(*v, (1.0 + r * r).powf(-2.5));
        }
        let b = BoxGrid::new(8.0, 32).unwrap();
        let gauss = FnField::new(|x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp());
        let u = sample_analytic(&gauss, Geometry::Box(b)).unwrap();
        assert!((u.samples()[b.origin_index()] - 1.0).abs() <= b.h());
    }

    #[test]
    fn radial_derivative_of_r_squared() {
        let g = RadialGrid::new(4.0, 64).unwrap();
        let u = sample_radial(g, Rank::Scalar, |r| r * r).unwrap();
        let d = derivative(&u, 0).unwrap();
        assert_eq!(d.rank(), Rank::RadialVector);
        for (i, v) in d.samples().iter().enumerate() {
            assert!((v - 2.0 * g.node(i)).abs() < 1e-11, "node {i}");
        }
    }

    #[test]
    fn box_derivative_of_sine_is_fourth_order() {
        let err = |n: usize| {
            let l = 4.0;
            let g = BoxGrid::new(l, n).unwrap();
            let k = std::f64::consts::PI / l;
            let u = sample_box(g, |x| (k * x[0]).sin()).unwrap();
            let d = derivative(&u, 0).unwrap();
            d.samples()
                .iter()
                .enumerate()
                .map(|(i, v)| (v - k * (k * g.point(i)[0]).cos()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(16), err(32));
        assert!(e1 / e2 > 12.0, "{e1} {e2}");
    }

    #[test]
    fn lift_constants_and_linear_vectors() {
        let rg = RadialGrid::new(8.0, 32).unwrap();
        let b = BoxGrid::new(4.0, 16).unwrap();
        let c = sample_radial(rg, Rank::Scalar, |_| 2.5).unwrap();
        let lc = lift_radial_to_box(&c, b).unwrap();
        assert!(lc.samples().iter().all(|v| (v - 2.5).abs() < 1e-14));
        let v = sample_radial(rg, Rank::RadialVector, |r| r).unwrap();
        let lv = lift_radial_to_box(&v, b).unwrap();
        for idx in 0..b.len() {
            let x = b.point(idx);
            for c in 0..3 {
                assert!((lv.component(c)[idx] - x[c]).abs() < 1e-12);
            }
        }
        let big = BoxGrid::new(16.0, 16).unwrap();
        assert!(matches!(lift_radial_to_box(&c, big), Err(Error::Domain(_))));
    }
}
