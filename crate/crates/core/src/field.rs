//! Fields that can be evaluated at arbitrary points of space.
//!
//! The norm engine resamples every input onto rescaled shell boxes, so it
//! consumes point evaluators rather than raw samples. Grid data enters through
//! the interpolating adapters below; closed-form fields are wrapped directly.

use crate::grid::{BoxGrid, BoxInterpolant, GridFunction, RadialInterpolant, Rank};

/// A scalar function on `R^3`.
pub trait Field3 {
    fn eval(&self, x: [f64; 3]) -> f64;

    /// Radius within which the field is known. `None` means all of space.
    fn extent(&self) -> Option<f64> {
        None
    }

    /// The profile `f(r)` when the field is spherically symmetric.
    fn radial_profile(&self, _r: f64) -> Option<f64> {
        None
    }

    fn is_radial(&self) -> bool {
        self.radial_profile(0.0).is_some()
    }
}

#[inline]
pub fn norm3(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// Closed-form field given by a closure.
pub struct FnField<F> {
    f: F,
    radial: bool,
}

impl<F: Fn([f64; 3]) -> f64> FnField<F> {
    pub fn new(f: F) -> Self {
        Self { f, radial: false }
    }
}

impl<G: Fn(f64) -> f64> FnField<RadialFn<G>> {
    /// Spherically symmetric field `f(|x|)`.
    pub fn radial(g: G) -> Self {
        FnField {
            f: RadialFn(g),
            radial: true,
        }
    }
}

/// Adapter marking a closure of `|x|`.
pub struct RadialFn<G>(G);

pub trait PointFn {
    fn call(&self, x: [f64; 3]) -> f64;
    fn call_r(&self, _r: f64) -> Option<f64> {
        None
    }
}

impl<F: Fn([f64; 3]) -> f64> PointFn for F {
    fn call(&self, x: [f64; 3]) -> f64 {
        self(x)
    }
}

impl<G: Fn(f64) -> f64> PointFn for RadialFn<G> {
    fn call(&self, x: [f64; 3]) -> f64 {
        (self.0)(norm3(x))
    }
    fn call_r(&self, r: f64) -> Option<f64> {
        Some((self.0)(r))
    }
}

impl<F: PointFn> Field3 for FnField<F> {
    fn eval(&self, x: [f64; 3]) -> f64 {
        self.f.call(x)
    }

    fn radial_profile(&self, r: f64) -> Option<f64> {
        if self.radial {
            self.f.call_r(r)
        } else {
            None
        }
    }
}

/// A radial grid profile read through its monotone cubic interpolant.
///
/// For a radial-vector field, `component` selects the Cartesian component
/// `v(|x|) x_c/|x|`; scalars ignore it.
pub struct RadialGridField {
    interp: RadialInterpolant,
    r_max: f64,
    component: Option<usize>,
}

impl RadialGridField {
    pub fn new(u: &GridFunction) -> Self {
        Self::component(u, 0)
    }

    pub fn component(u: &GridFunction, c: usize) -> Self {
        let g = u.radial_grid().expect("radial field expected");
        Self {
            interp: RadialInterpolant::new(u),
            r_max: g.r_max(),
            component: (u.rank() == Rank::RadialVector).then_some(c),
        }
    }
}

impl Field3 for RadialGridField {
    fn eval(&self, x: [f64; 3]) -> f64 {
        let r = norm3(x);
        match self.component {
            None => self.interp.eval(r),
            Some(c) => {
                if r == 0.0 {
                    0.0
                } else {
                    self.interp.eval(r) * x[c] / r
                }
            }
        }
    }

    fn extent(&self) -> Option<f64> {
        Some(self.r_max)
    }

    fn radial_profile(&self, r: f64) -> Option<f64> {
        match self.component {
            None => Some(self.interp.eval(r)),
            Some(_) => None,
        }
    }
}

/// One component of box data read through tricubic interpolation.
pub struct BoxGridField<'a> {
    interp: BoxInterpolant<'a>,
    half_width: f64,
}

impl<'a> BoxGridField<'a> {
    pub fn new(u: &'a GridFunction, c: usize) -> Self {
        let g: BoxGrid = *u.box_grid().expect("box field expected");
        Self {
            interp: BoxInterpolant::new(g, u.component(c)),
            half_width: g.half_width(),
        }
    }
}

impl Field3 for BoxGridField<'_> {
    fn eval(&self, x: [f64; 3]) -> f64 {
        self.interp.eval(x)
    }

    fn extent(&self) -> Option<f64> {
        Some(self.half_width)
    }
}

/// Point evaluators for every Cartesian component of a grid function:
/// one for scalars, three for vectors.
pub fn component_fields(u: &GridFunction) -> Vec<Box<dyn Field3 + '_>> {
    match u.rank() {
        Rank::Scalar => match u.geometry() {
            crate::grid::Geometry::Radial(_) => vec![Box::new(RadialGridField::new(u))],
            crate::grid::Geometry::Box(_) => vec![Box::new(BoxGridField::new(u, 0))],
        },
        Rank::RadialVector => (0..3)
            .map(|c| Box::new(RadialGridField::component(u, c)) as Box<dyn Field3>)
            .collect(),
        Rank::Vector3 => (0..3)
            .map(|c| Box::new(BoxGridField::new(u, c)) as Box<dyn Field3>)
            .collect(),
    }
}

/// Fourth-order central difference of a point evaluator along `axis`.
pub fn partial(f: &dyn Field3, x: [f64; 3], axis: usize, eps: f64) -> f64 {
    let at = |t: f64| {
        let mut y = x;
        y[axis] += t;
        f.eval(y)
    };
    (at(-2.0 * eps) - 8.0 * at(-eps) + 8.0 * at(eps) - at(2.0 * eps)) / (12.0 * eps)
}
