//! Unitary-convention `H^s` norms: on box data via the DFT, and on radial
//! profiles via the order-zero Hankel transform (a cross-check path).

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{signed_index, Fft3};
use crate::grid::{BoxGrid, GridFunction, Rank};
use crate::quadrature::gauss_legendre;

/// `H^s` norm of box data together with a support warning.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HsNorm {
    pub norm: f64,
    /// Set when the field does not decay to the tail tolerance on the box faces.
    pub boundary_flag: bool,
}

/// Relative size of face values above which box data is not treated as
/// compactly supported.
pub const BOUNDARY_TOLERANCE: f64 = 1e-6;

/// Multiplier `(1 + |xi|^2)^s` on the DFT lattice of an `n`-point box with
/// spacing `h`.
pub fn sobolev_multiplier(n: usize, h: f64, s: f64) -> Vec<f64> {
    let dk = 2.0 * std::f64::consts::PI / (n as f64 * h);
    let k2: Vec<f64> = (0..n).map(|m| (signed_index(m, n) * dk).powi(2)).collect();
    let mut out = Vec::with_capacity(n * n * n);
    for a in &k2 {
        for b in &k2 {
            for c in &k2 {
                let q = 1.0 + a + b + c;
                out.push(if s == 0.0 { 1.0 } else { q.powf(s) });
            }
        }
    }
    out
}

/// `int (1+|xi|^2)^s |u^|^2 dxi` for the spectrum of box samples:
/// `h^3 / n^3 * sum mult |DFT|^2`.
pub fn hs_sq_from_spectrum(spec: &[Complex64], mult: &[f64], n: usize, h: f64) -> f64 {
    let scale = h.powi(3) / (n * n * n) as f64;
    scale * spec.iter().zip(mult).map(|(c, m)| m * c.norm_sqr()).sum::<f64>()
}

/// Real part of the `H^s` pairing of two spectra.
pub fn hs_pair_from_spectra(a: &[Complex64], b: &[Complex64], mult: &[f64], n: usize, h: f64) -> f64 {
    let scale = h.powi(3) / (n * n * n) as f64;
    scale
        * a.iter()
            .zip(b)
            .zip(mult)
            .map(|((x, y), m)| m * (x.re * y.re + x.im * y.im))
            .sum::<f64>()
}

/// `H^s` norm of a scalar box field with the unitary Fourier convention, so
/// that `s = 0` gives the `L^2` norm.
pub fn hs_norm(u: &GridFunction, s: f64) -> Result<HsNorm> {
    if s < 0.0 {
        return Err(Error::Unsupported(format!(
            "negative-order norms (s = {s}) are not implemented"
        )));
    }
    let g: BoxGrid = *u
        .box_grid()
        .ok_or_else(|| Error::GridMismatch("hs_norm expects box data".into()))?;
    if u.rank() != Rank::Scalar {
        return Err(Error::GridMismatch("hs_norm expects a scalar field".into()));
    }
    let n = g.n();
    let data = u.samples();
    let peak = u.max_abs();
    let mut face = 0.0f64;
    for idx in 0..g.len() {
        let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
        if i == 0 || j == 0 || k == 0 || i == n - 1 || j == n - 1 || k == n - 1 {
            face = face.max(data[idx].abs());
        }
    }
    let fft = Fft3::new(n);
    let mut spec: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut spec);
    let mult = sobolev_multiplier(n, g.h(), s);
    Ok(HsNorm {
        norm: hs_sq_from_spectrum(&spec, &mult, n, g.h()).sqrt(),
        boundary_flag: peak > 0.0 && face > BOUNDARY_TOLERANCE * peak,
    })
}

/// `H^s` norm of a radial profile supported in `[0, r_out]`, by quadrature of
/// `u^(k) = (2 pi)^{-3/2} (4 pi / k) int r u(r) sin(k r) dr` and of
/// `4 pi int (1+k^2)^s |u^(k)|^2 k^2 dk` up to `k_max`.
pub fn hs_norm_radial(u: impl Fn(f64) -> f64, r_out: f64, s: f64, k_max: f64) -> f64 {
    let (gx, gw) = gauss_legendre(32);
    let panels_r = 256;
    let mut rs = Vec::new();
    let mut rw = Vec::new();
    for p in 0..panels_r {
        let a = r_out * p as f64 / panels_r as f64;
        let b = r_out * (p + 1) as f64 / panels_r as f64;
        for (x, w) in gx.iter().zip(&gw) {
            let r = 0.5 * (a + b) + 0.5 * (b - a) * x;
            rs.push(r);
            rw.push(0.5 * (b - a) * w * r * u(r));
        }
    }
    let c = 4.0 * std::f64::consts::PI * (2.0 * std::f64::consts::PI).powf(-1.5);
    let panels_k = (k_max * r_out / 4.0).ceil().max(64.0) as usize;
    let mut acc = 0.0;
    for p in 0..panels_k {
        let a = k_max * p as f64 / panels_k as f64;
        let b = k_max * (p + 1) as f64 / panels_k as f64;
        for (x, w) in gx.iter().zip(&gw) {
            let k = 0.5 * (a + b) + 0.5 * (b - a) * x;
            let mut t = 0.0;
            for (r, wr) in rs.iter().zip(&rw) {
                t += wr * (k * r).sin();
            }
            let uk = c * t / k;
            acc += 0.5 * (b - a) * w * (1.0 + k * k).powf(s) * uk * uk * k * k;
        }
    }
    (4.0 * std::f64::consts::PI * acc).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sample_box;
    use std::f64::consts::PI;

    fn gaussian_box(l: f64, n: usize) -> GridFunction {
        let g = BoxGrid::new(l, n).unwrap();
        sample_box(g, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp()).unwrap()
    }

    #[test]
    fn gaussian_l2_norm() {
        let u = gaussian_box(8.0, 64);
        let r = hs_norm(&u, 0.0).unwrap();
        assert!((r.norm - PI.powf(0.75)).abs() < 1e-6, "{}", r.norm);
        assert!(!r.boundary_flag);
    }

    #[test]
    fn gaussian_h1_norm_matches_fourier_oracle() {
        // u^ = exp(-|xi|^2/2): int (1+|xi|^2) e^{-|xi|^2} = pi^{3/2} (1 + 3/2)
        let u = gaussian_box(8.0, 64);
        let r = hs_norm(&u, 1.0).unwrap();
        assert!((r.norm.powi(2) - PI.powf(1.5) * 2.5).abs() < 1e-6);
    }

    #[test]
    fn radial_hankel_path_agrees() {
        let a = hs_norm_radial(|r| (-r * r / 2.0).exp(), 12.0, 1.0, 14.0);
        assert!((a * a - PI.powf(1.5) * 2.5).abs() < 1e-8, "{a}");
    }

    #[test]
    fn flags_and_errors() {
        let g = BoxGrid::new(2.0, 16).unwrap();
        let one = sample_box(g, |_| 1.0).unwrap();
        assert!(hs_norm(&one, 0.0).unwrap().boundary_flag);
        assert!(matches!(hs_norm(&one, -1.0), Err(Error::Unsupported(_))));
        let zero = sample_box(g, |_| 0.0).unwrap();
        assert_eq!(hs_norm(&zero, 2.0).unwrap().norm, 0.0);
    }
}
