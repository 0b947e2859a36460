//! Polytropic equation of state, the Makino variable, flux matrices and the
//! static `gamma = 6/5` profile.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, Rank};

/// Equation of state `p = K rho^gamma` and the derived Makino constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EosParams {
    gamma: f64,
    k: f64,
}

impl EosParams {
    /// Any `gamma > 1`, `K > 0`. The well-posedness range `1 < gamma < 5/3`
    /// is checked separately by [`EosParams::check_admissible`].
    pub fn new(gamma: f64, k: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(Error::InvalidParameter(format!("gamma must exceed 1, got {gamma}")));
        }
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidParameter(format!("K must be positive, got {k}")));
        }
        Ok(Self { gamma, k })
    }

    /// Errors unless `1 < gamma < 5/3`.
    pub fn check_admissible(&self) -> Result<()> {
        if self.gamma >= 5.0 / 3.0 {
            return Err(Error::Hypothesis(format!(
                "gamma must lie in (1, 5/3), got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// `beta = 2 / (gamma - 1)`.
    pub fn beta(&self) -> f64 {
        2.0 / (self.gamma - 1.0)
    }

    /// Acoustic coefficient `(gamma - 1) / 2`.
    pub fn kappa(&self) -> f64 {
        (self.gamma - 1.0) / 2.0
    }

    /// `2 sqrt(K gamma) / (gamma - 1)`.
    pub fn makino_coeff(&self) -> f64 {
        2.0 * (self.k * self.gamma).sqrt() / (self.gamma - 1.0)
    }

    /// `c_{K gamma} = makino_coeff^{-beta}`, so that `rho = c w^beta`.
    pub fn density_coeff(&self) -> f64 {
        self.makino_coeff().powf(-self.beta())
    }

    #[inline]
    pub fn w_of_rho(&self, rho: f64) -> f64 {
        self.makino_coeff() * rho.powf(self.kappa())
    }

    #[inline]
    pub fn rho_of_w(&self, w: f64) -> f64 {
        let w = w.max(0.0);
        self.density_coeff() * w.powf(self.beta())
    }

    #[inline]
    pub fn pressure_of_rho(&self, rho: f64) -> f64 {
        self.k * rho.powf(self.gamma)
    }

    /// Sound speed `sqrt(gamma K rho^{gamma-1})`.
    pub fn sound_speed(&self, rho: f64) -> f64 {
        (self.gamma * self.k * rho.powf(self.gamma - 1.0)).sqrt()
    }
}

/// `w = makino_coeff * rho^{(gamma-1)/2}` pointwise.
pub fn makino_from_density(rho: &GridFunction, eos: &EosParams) -> Result<GridFunction> {
    if let Some((i, &v)) = rho.samples().iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::Domain(format!("negative density {v} at node {i}")));
    }
    rho.map(|r| eos.w_of_rho(r))
}

/// `rho = c_{K gamma} w^beta` pointwise; negative `w` is treated as vacuum.
pub fn density_from_makino(w: &GridFunction, eos: &EosParams) -> Result<GridFunction> {
    w.map(|v| eos.rho_of_w(v))
}

/// `p = K rho^gamma` pointwise.
pub fn pressure(rho: &GridFunction, eos: &EosParams) -> Result<GridFunction> {
    rho.map(|r| eos.pressure_of_rho(r.max(0.0)))
}

/// The unknown `U = (w, v)` at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct FluidState {
    pub w: GridFunction,
    pub v: GridFunction,
    pub t: f64,
}

impl FluidState {
    /// Checks that `w` is scalar and `v` a vector field on the same grid.
    pub fn new(w: GridFunction, v: GridFunction, t: f64) -> Result<Self> {
        if w.rank() != Rank::Scalar {
            return Err(Error::GridMismatch("w must be a scalar field".into()));
        }
        if v.geometry() != w.geometry() || v.rank() == Rank::Scalar {
            return Err(Error::GridMismatch(
                "v must be a vector field on the grid of w".into(),
            ));
        }
        Ok(Self { w, v, t })
    }
}

/// Symmetric 4x4 matrix `A^c(U) n_c` of the Makino system in direction `n`:
/// `[[v.n, k w n^T], [k w n, (v.n) I]]` with `k = (gamma-1)/2`.
pub fn flux_matrix(w: f64, v: [f64; 3], eos: &EosParams, n: [f64; 3]) -> [[f64; 4]; 4] {
    let vn = v[0] * n[0] + v[1] * n[1] + v[2] * n[2];
    let c = eos.kappa() * w;
    let mut a = [[0.0; 4]; 4];
    a[0][0] = vn;
    for b in 0..3 {
        a[0][b + 1] = c * n[b];
        a[b + 1][0] = c * n[b];
        a[b + 1][b + 1] = vn;
    }
    a
}

/// Eigenvalues of [`flux_matrix`] in ascending order for a unit direction:
/// `v.n - k w`, `v.n` (double), `v.n + k w` (sorted).
pub fn characteristic_speeds(w: f64, v: [f64; 3], eos: &EosParams, n: [f64; 3]) -> [f64; 4] {
    let vn = v[0] * n[0] + v[1] * n[1] + v[2] * n[2];
    let c = eos.kappa() * w;
    let mut e = [vn - c, vn, vn, vn + c];
    e.sort_by(f64::total_cmp);
    e
}

/// Gas constant that makes the `gamma = 6/5` Plummer profile hydrostatic.
///
/// Substituting `rho = a^{5/2}(a^2+r^2)^{-5/2}` and
/// `phi = -(4 pi/3) sqrt(a) (a^2+r^2)^{-1/2}` into
/// `gamma K rho^{gamma-2} rho' = -phi'` gives `6K/5 * 5 = 4 pi / 3` for every `a`.
pub const K_STATIC: f64 = 2.0 * PI / 9.0;

/// Closed-form static `gamma = 6/5` profile with length scale `a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StaticProfile {
    pub a: f64,
    pub eos: EosParams,
}

impl StaticProfile {
    pub fn new(a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Domain(format!("static profile needs a > 0, got {a}")));
        }
        Ok(Self {
            a,
            eos: EosParams::new(1.2, K_STATIC)?,
        })
    }

    pub fn k_static(&self) -> f64 {
        K_STATIC
    }

    pub fn rho(&self, r: f64) -> f64 {
        self.a.powf(2.5) * (self.a * self.a + r * r).powf(-2.5)
    }

    /// Makino variable of the profile, `makino_coeff * a^{1/4} (a^2+r^2)^{-1/4}`.
    pub fn w(&self, r: f64) -> f64 {
        self.eos.makino_coeff() * self.a.powf(0.25) * (self.a * self.a + r * r).powf(-0.25)
    }

    /// The profile shape `a^{1/4}(a^2+r^2)^{-1/4}` without the Makino constant.
    pub fn w_shape(&self, r: f64) -> f64 {
        self.a.powf(0.25) * (self.a * self.a + r * r).powf(-0.25)
    }

    pub fn phi(&self, r: f64) -> f64 {
        -(4.0 * PI / 3.0) * self.a.sqrt() * (self.a * self.a + r * r).powf(-0.5)
    }

    /// `d phi / dr = M(<r) / r^2`.
    pub fn dphi(&self, r: f64) -> f64 {
        (4.0 * PI / 3.0) * self.a.sqrt() * r * (self.a * self.a + r * r).powf(-1.5)
    }

    pub fn mass(&self) -> f64 {
        (4.0 * PI / 3.0) * self.a.sqrt()
    }
}
