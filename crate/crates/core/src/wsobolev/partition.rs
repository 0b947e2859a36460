//! Smooth dyadic partition `{psi_j}` built from one radial bump.
//!
//! `psi_0` equals 1 on the unit ball and vanishes beyond radius 2. For
//! `j >= 1`, `psi_j(x) = ring(|x| / 2^j)` where `ring` rises on `[1/4, 1/2]`,
//! equals 1 on `[1/2, 1]` and falls on `[1, 2]`. All transitions use the
//! `exp(-1/t)` smooth step, so derivative bounds scale exactly as `2^{-k j}`.

use crate::error::{Error, Result};

/// `C^infinity` step: 0 for `t <= 0`, 1 for `t >= 1`.
#[inline]
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Profile of `psi_0` as a function of `|x|`.
#[inline]
pub fn ball_profile(r: f64) -> f64 {
    1.0 - smooth_step(r - 1.0)
}

/// Profile of `psi_j(2^j x)` for `j >= 1`, as a function of `|x|`.
#[inline]
pub fn ring_profile(r: f64) -> f64 {
    if r <= 0.5 {
        smooth_step(4.0 * r - 1.0)
    } else {
        1.0 - smooth_step(r - 1.0)
    }
}

/// The partition truncated to shells `0..=j_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DyadicPartition {
    j_max: usize,
}

impl DyadicPartition {
    pub fn new(j_max: usize) -> Result<Self> {
        if j_max < 2 {
            return Err(Error::InvalidParameter(format!(
                "dyadic partition needs j_max >= 2, got {j_max}"
            )));
        }
        Ok(Self { j_max })
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    /// Profile of the window at unit scale: `psi_j(2^j y)` as a function of `|y|`.
    #[inline]
    pub fn scaled_profile(j: usize, r: f64) -> f64 {
        if j == 0 {
            ball_profile(r)
        } else {
            ring_profile(r)
        }
    }

    /// `psi_j(x)` as a function of `|x|`.
    pub fn psi(&self, j: usize, r: f64) -> f64 {
        Self::scaled_profile(j, r / f64::powi(2.0, j as i32))
    }

    /// Closed support `[lo, hi]` of `psi_j` in `|x|`.
    pub fn support(j: usize) -> (f64, f64) {
        if j == 0 {
            (0.0, 2.0)
        } else {
            let s = f64::powi(2.0, j as i32);
            (s / 4.0, 2.0 * s)
        }
    }

    /// Radial interval on which `psi_j` equals 1.
    pub fn plateau(j: usize) -> (f64, f64) {
        if j == 0 {
            (0.0, 1.0)
        } else {
            let s = f64::powi(2.0, j as i32);
            (s / 2.0, s)
        }
    }

    /// Sampled bounds `C_k >= sup |d^k/dr^k psi_j| * 2^{k j}` for `k <= max_order`,
    /// taken over both unit-scale profiles.
    pub fn derivative_bounds(max_order: usize) -> Vec<f64> {
        let h = 1e-3;
        let samples = 4000;
        let mut bounds = vec![0.0f64; max_order + 1];
        for prof in [ball_profile as fn(f64) -> f64, ring_profile] {
            let vals: Vec<f64> = (0..=samples + 2 * max_order)
                .map(|i| prof((i as f64 - max_order as f64) * h * 0.6))
                .collect();
            let step = h * 0.6;
            let mut diff = vals;
            bounds[0] = bounds[0].max(diff.iter().fold(0.0, |m, v| m.max(v.abs())));
            for b in bounds.iter_mut().skip(1) {
                diff = diff.windows(2).map(|w| (w[1] - w[0]) / step).collect();
                *b = b.max(diff.iter().fold(0.0, |m, v| m.max(v.abs())));
            }
        }
        bounds
    }
}
