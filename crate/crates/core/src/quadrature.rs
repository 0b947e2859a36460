//! Gauss rules on dyadic radial intervals and spherical product quadrature
//! for closed-form fields on all of `R^3`.

use std::f64::consts::PI;

use crate::grid::stencil::{CellQuadrature, Parity};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Nodes and weights for `int_0^{r_out} g(r) dr` built from Gauss rules on
/// `[0, r_in]` and the dyadic intervals `[2^k r_in, 2^{k+1} r_in]`.
///
/// Power-law tails are smooth on each dyadic interval, so the rule converges
/// geometrically for them as well as for Gaussians.
pub fn dyadic_radial_rule(r_in: f64, r_out: f64, per_interval: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(per_interval);
    let mut r = Vec::new();
    let mut w = Vec::new();
    let mut push = |a: f64, b: f64| {
        let (m, half) = ((a + b) / 2.0, (b - a) / 2.0);
        for (x, wx) in gx.iter().zip(&gw) {
            r.push(m + half * x);
            w.push(half * wx);
        }
    };
    // split the core interval so Gaussians of unit width are well resolved
    let core = 4;
    for k in 0..core {
        push(r_in * k as f64 / core as f64, r_in * (k + 1) as f64 / core as f64);
    }
    let mut a = r_in;
    while a < r_out {
        let b = (2.0 * a).min(r_out);
        push(a, b);
        a = b;
    }
    (r, w)
}

/// Product rule on `R^3`: dyadic radial Gauss nodes times Gauss nodes in
/// `cos(theta)` times the trapezoid rule in `phi`.
#[derive(Clone, Debug)]
pub struct SphericalRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SphericalRule {
    pub fn new(r_out: f64, radial: usize, polar: usize, azimuthal: usize) -> Self {
        let (rs, rw) = dyadic_radial_rule(1.0, r_out, radial);
        let (ct, cw) = gauss_legendre(polar);
        let dphi = 2.0 * PI / azimuthal as f64;
        let mut points = Vec::with_capacity(rs.len() * polar * azimuthal);
        let mut weights = Vec::with_capacity(points.capacity());
        for (r, wr) in rs.iter().zip(&rw) {
            for (c, wc) in ct.iter().zip(&cw) {
                let s = (1.0 - c * c).sqrt();
                for k in 0..azimuthal {
                    let phi = (k as f64 + 0.5) * dphi;
                    points.push([r * s * phi.cos(), r * s * phi.sin(), r * c]);
                    weights.push(wr * r * r * wc * dphi);
                }
            }
        }
        Self { points, weights }
    }

    /// Default rule used for corpus fields: out to `2^30`.
    pub fn standard() -> Self {
        Self::new(f64::powi(2.0, 30), 12, 16, 24)
    }

    pub fn integrate(&self, f: impl Fn([f64; 3]) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(*p))
            .sum()
    }

    pub fn max(&self, f: impl Fn([f64; 3]) -> f64) -> f64 {
        self.points.iter().map(|p| f(*p)).fold(0.0, f64::max)
    }
}

/// Estimated `int_R^inf f(r) dr` for a tail `f ~ C r^{-p}` matched to the
/// last sample `(r_last, f_last)` and continued from `r_edge`. `None` when the
/// tail is not integrable (`p <= 1`).
pub fn power_tail(r_last: f64, f_last: f64, r_edge: f64, p: f64) -> Option<f64> {
    if p <= 1.0 {
        return None;
    }
    Some(f_last * r_last * (r_last / r_edge).powf(p - 1.0) / (p - 1.0))
}

/// How to continue a radial integrand beyond the last grid cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailModel {
    /// Ignore everything beyond the grid.
    None,
    /// Power law with the exponent fitted to the last two samples.
    Fitted,
    /// Power law `r^{-p}` with a fixed exponent.
    Power(f64),
}

/// `int_0^inf g(r) dr` for a cell-centred integrand sampled on `(0, n h)`,
/// with mirror parity at the origin and a power-law continuation. The flag is
/// false when the requested tail is not integrable.
pub fn radial_cell_integral(g: &[f64], h: f64, parity: Parity, tail: TailModel) -> (f64, bool) {
    let body = CellQuadrature::new().total(g, parity, h);
    let n = g.len();
    let r_edge = n as f64 * h;
    let (r1, r2) = ((n as f64 - 1.5) * h, (n as f64 - 0.5) * h);
    let (g1, g2) = (g[n - 2], g[n - 1]);
    let p = match tail {
        TailModel::None => return (body, true),
        TailModel::Power(p) => p,
        TailModel::Fitted => {
            if g2 == 0.0 {
                return (body, true);
            }
            if g1 == 0.0 || g1.signum() != g2.signum() {
                return (body, false);
            }
            -(g2 / g1).ln() / (r2 / r1).ln()
        }
    };
    match power_tail(r2, g2, r_edge, p) {
        Some(t) => (body + t, true),
        None => (body, g2 == 0.0),
    }
}
