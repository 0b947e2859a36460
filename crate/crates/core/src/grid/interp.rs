//! Resampling: monotone cubic interpolation of radial profiles and tricubic
//! Lagrange interpolation of box data.

use super::stencil::{self, Parity};
use super::{BoxGrid, GridFunction, RadialGrid};

/// Monotone piecewise-cubic Hermite interpolant of a cell-centred profile.
///
/// Node slopes are fourth-order differences, limited so that the cubic on a
/// monotone stretch stays monotone; slopes at strict extrema are kept. The
/// segment straddling `r = 0` uses the mirrored node. Beyond the last node the
/// profile is continued by the power law through the last two nodes.
#[derive(Clone, Debug)]
pub struct RadialInterpolant {
    h: f64,
    r_max: f64,
    /// Values at the mirror node followed by the grid nodes.
    values: Vec<f64>,
    slopes: Vec<f64>,
    tail: Tail,
}

#[derive(Clone, Copy, Debug)]
enum Tail {
    Power { r0: f64, f0: f64, p: f64 },
    Hold(f64),
}

impl RadialInterpolant {
    pub fn new(u: &GridFunction) -> Self {
        let g = u
            .radial_grid()
            .expect("radial interpolant needs a radial field");
        Self::from_samples(g, u.samples(), u.rank().parity())
    }

    pub fn from_samples(g: &RadialGrid, f: &[f64], parity: Parity) -> Self {
        let n = f.len();
        let h = g.h();
        let sign = parity.sign();
        let raw = {
            let padded = stencil::pad_radial(f, parity, None);
            let mut d = vec![0.0; n];
            stencil::d1(&padded, &mut d, 1.0 / h);
            d
        };
        let mut slopes = Vec::with_capacity(n + 1);
        for k in 0..n {
            let left = if k == 0 { sign * f[0] } else { f[k - 1] };
            let dl = (f[k] - left) / h;
            let dr = if k + 1 < n { Some((f[k + 1] - f[k]) / h) } else { None };
            let mut secants = [0.0; 2];
            let mut len = 0;
            if !(k == 0 && parity == Parity::Even) {
                secants[len] = dl;
                len += 1;
            }
            if let Some(r) = dr {
                secants[len] = r;
                len += 1;
            }
            slopes.push(limit_slope(raw[k], &secants[..len]));
        }
        let m0 = slopes[0];
        slopes.insert(0, -sign * m0);
        let mut values = Vec::with_capacity(n + 1);
        values.push(sign * f[0]);
        values.extend_from_slice(f);

        let (ra, rb) = (g.node(n - 2), g.node(n - 1));
        let (fa, fb) = (f[n - 2], f[n - 1]);
        let tail = if fa != 0.0 && fb != 0.0 && fa.signum() == fb.signum() {
            Tail::Power {
                r0: rb,
                f0: fb,
                p: (fb / fa).ln() / (rb / ra).ln(),
            }
        } else {
            Tail::Hold(fb)
        };
        Self {
            h,
            r_max: g.r_max(),
            values,
            slopes,
            tail,
        }
    }

    /// Value at radius `|r|`.
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        let t = r / self.h + 0.5;
        let i = t.floor() as usize;
        if i + 1 >= self.values.len() {
            return match self.tail {
                Tail::Power { r0, f0, p } => f0 * (r / r0).powf(p),
                Tail::Hold(v) => {
                    if r <= self.r_max {
                        v
                    } else {
                        0.0
                    }
                }
            };
        }
        let u = t - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * self.h, self.slopes[i + 1] * self.h);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * m0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * m1
    }
}

fn limit_slope(m: f64, secants: &[f64]) -> f64 {
    if secants.is_empty() {
        return m;
    }
    if secants.iter().any(|&d| d == 0.0) {
        return 0.0;
    }
    let s = secants[0].signum();
    if secants.iter().any(|d| d.signum() != s) {
        return m;
    }
    if m * s <= 0.0 {
        return 0.0;
    }
    let bound = 3.0 * secants.iter().fold(f64::INFINITY, |a, d| a.min(d.abs()));
    s * m.abs().min(bound)
}

/// Tricubic Lagrange interpolant of scalar box data; zero outside the box.
#[derive(Clone, Debug)]
pub struct BoxInterpolant<'a> {
    grid: BoxGrid,
    data: &'a [f64],
}

impl<'a> BoxInterpolant<'a> {
    pub fn new(grid: BoxGrid, data: &'a [f64]) -> Self {
        assert_eq!(data.len(), grid.len());
        Self { grid, data }
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        let g = &self.grid;
        let n = g.n();
        let h = g.h();
        let lo = -g.half_width();
        let hi = lo + (n - 1) as f64 * h;
        let mut base = [0usize; 3];
        let mut w = [[0.0; 4]; 3];
        for a in 0..3 {
            if x[a] < lo || x[a] > hi {
                return 0.0;
            }
            let t = (x[a] - lo) / h;
            let i = (t.floor() as isize).clamp(1, n as isize - 3);
            let u = t - i as f64;
            base[a] = (i - 1) as usize;
            w[a] = [
                -u * (u - 1.0) * (u - 2.0) / 6.0,
                (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0,
                -(u + 1.0) * u * (u - 2.0) / 2.0,
                (u + 1.0) * u * (u - 1.0) / 6.0,
            ];
        }
        let mut acc = 0.0;
        for (p, wp) in w[0].iter().enumerate() {
            let mut acc_j = 0.0;
            for (q, wq) in w[1].iter().enumerate() {
                let row = g.index(base[0] + p, base[1] + q, base[2]);
                let d = &self.data[row..row + 4];
                acc_j += wq * (w[2][0] * d[0] + w[2][1] * d[1] + w[2][2] * d[2] + w[2][3] * d[3]);
            }
            acc += wp * acc_j;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sample_box, sample_radial, Rank};

    #[test]
    fn radial_interpolant_reproduces_nodes_and_is_fourth_order() {
        let err = |n: usize| {
            let g = RadialGrid::new(8.0, n).unwrap();
            let u = sample_radial(g, Rank::Scalar, |r| (1.0 + r * r).powf(-2.5)).unwrap();
            let ip = RadialInterpolant::new(&u);
            for i in 0..n {
                assert!((ip.eval(g.node(i)) - u.samples()[i]).abs() < 1e-15);
            }
            (0..4000)
                .map(|k| {
                    let r = 6.0 * k as f64 / 4000.0;
                    (ip.eval(r) - (1.0 + r * r).powf(-2.5)).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(128), err(256));
        assert!(e1 / e2 > 10.0, "{e1} {e2}");
    }

    #[test]
    fn limiter_keeps_step_monotone() {
        let g = RadialGrid::new(4.0, 32).unwrap();
        let u = sample_radial(g, Rank::Scalar, |r| if r < 2.0 { 1.0 } else { 0.0 }).unwrap();
        let ip = RadialInterpolant::new(&u);
        for k in 0..1000 {
            let v = ip.eval(4.0 * k as f64 / 1000.0);
            assert!((0.0..=1.0).contains(&v), "{v}");
        }
    }

    #[test]
    fn tricubic_exact_for_cubics() {
        let g = BoxGrid::new(2.0, 16).unwrap();
        let f = |x: [f64; 3]| 1.0 + x[0] - 2.0 * x[1] * x[1] + x[0] * x[1] * x[2] + 0.3 * x[2].powi(3);
        let u = sample_box(g, f).unwrap();
        let ip = BoxInterpolant::new(g, u.samples());
        for p in [[0.1, -0.33, 0.77], [-1.9, 1.2, 0.0], [1.7, 1.7, -1.95]] {
            assert!((ip.eval(p) - f(p)).abs() < 1e-11);
        }
        assert_eq!(ip.eval([2.5, 0.0, 0.0]), 0.0);
    }
}
