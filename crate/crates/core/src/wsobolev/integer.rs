//! Norms computed by direct quadrature: `L^2_delta`, the integer-order
//! weighted norm `sum_k ||(1+|x|)^{delta+k} |nabla^k u|||^2` and weighted sup
//! norms.
//!
//! `|nabla^k u|` is the Frobenius norm of the full derivative tensor, which
//! is rotation invariant and has a closed radial form; it differs from the
//! sum over distinct multi-indices by at most the factor `k!`.

use crate::error::{Error, Result};
use crate::field::{norm3, partial, Field3};
use crate::grid::{box_derivative, radial_derivative, stencil, Geometry, GridFunction, Parity, Rank};
use crate::quadrature::{radial_cell_integral, SphericalRule, TailModel};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// `(int (1+|x|)^{2 delta} |u|^2 dx)^{1/2}`. Radial integrals carry a fitted
/// power-law tail beyond the grid; box integrals use the trapezoid rule.
pub fn l2_delta_norm(u: &GridFunction, delta: f64) -> f64 {
    match u.geometry() {
        Geometry::Radial(g) => {
            let h = g.h();
            let integrand: Vec<f64> = u
                .samples()
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let r = g.node(i);
                    FOUR_PI * r * r * (1.0 + r).powf(2.0 * delta) * v * v
                })
                .collect();
            radial_cell_integral(&integrand, h, Parity::Even, TailModel::Fitted)
                .0
                .max(0.0)
                .sqrt()
        }
        Geometry::Box(g) => {
            let m = g.len();
            let mut acc = 0.0;
            for c in 0..u.rank().components() {
                let data = &u.samples()[c * m..(c + 1) * m];
                for (idx, v) in data.iter().enumerate() {
                    let r = norm3(g.point(idx));
                    acc += (1.0 + r).powf(2.0 * delta) * v * v;
                }
            }
            (acc * g.h().powi(3)).sqrt()
        }
    }
}

/// `L^2_delta` norm of a point evaluator by spherical product quadrature.
pub fn l2_delta_field(f: &dyn Field3, delta: f64, rule: &SphericalRule) -> f64 {
    rule.integrate(|x| {
        let v = f.eval(x);
        (1.0 + norm3(x)).powf(2.0 * delta) * v * v
    })
    .sqrt()
}

fn multi_indices(k: usize) -> Vec<([usize; 3], f64)> {
    let fact = |n: usize| (1..=n).product::<usize>() as f64;
    let mut out = Vec::new();
    for a in 0..=k {
        for b in 0..=k - a {
            let c = k - a - b;
            out.push(([a, b, c], fact(k) / (fact(a) * fact(b) * fact(c))));
        }
    }
    out
}

/// Integer-order weighted norm `(sum_{k<=m} ||(1+|x|)^{delta+k} |nabla^k u|||^2)^{1/2}`.
///
/// Box fields support `m <= 4`; radial profiles support `m <= 2`.
pub fn weighted_norm_integer(u: &GridFunction, m: usize, delta: f64) -> Result<f64> {
    if u.rank() != Rank::Scalar {
        return Err(Error::GridMismatch("integer norm expects a scalar field".into()));
    }
    match u.geometry() {
        Geometry::Radial(g) => {
            if m > 2 {
                return Err(Error::Unsupported(format!(
                    "radial integer norms are implemented for m <= 2, got {m}"
                )));
            }
            let h = g.h();
            let f = u.samples();
            let d1 = radial_derivative(f, Parity::Even, h, None);
            let d2 = {
                let p = stencil::pad_radial(f, Parity::Even, None);
                let mut o = vec![0.0; f.len()];
                stencil::d2(&p, &mut o, 1.0 / (h * h));
                o
            };
            let mut total = 0.0;
            for k in 0..=m {
                let integrand: Vec<f64> = (0..f.len())
                    .map(|i| {
                        let r = g.node(i);
                        let t = match k {
                            0 => f[i] * f[i],
                            1 => d1[i] * d1[i],
                            _ => d2[i] * d2[i] + 2.0 * (d1[i] / r).powi(2),
                        };
                        FOUR_PI * r * r * (1.0 + r).powf(2.0 * (delta + k as f64)) * t
                    })
                    .collect();
                total += radial_cell_integral(&integrand, h, Parity::Even, TailModel::Fitted).0;
            }
            Ok(total.max(0.0).sqrt())
        }
        Geometry::Box(g) => {
            if m > 4 {
                return Err(Error::Unsupported(format!(
                    "box integer norms are implemented for m <= 4, got {m}"
                )));
            }
            let weights: Vec<f64> = (0..g.len())
                .map(|idx| 1.0 + norm3(g.point(idx)))
                .collect();
            let mut total = 0.0;
            for k in 0..=m {
                let mut tensor_sq = vec![0.0; g.len()];
                for (alpha, mult) in multi_indices(k) {
                    let mut d = u.samples().to_vec();
                    for (axis, &times) in alpha.iter().enumerate() {
                        for _ in 0..times {
                            d = box_derivative(g, &d, axis);
                        }
                    }
                    for (t, v) in tensor_sq.iter_mut().zip(&d) {
                        *t += mult * v * v;
                    }
                }
                total += tensor_sq
                    .iter()
                    .zip(&weights)
                    .map(|(t, w)| w.powf(2.0 * (delta + k as f64)) * t)
                    .sum::<f64>();
            }
            Ok((total * g.h().powi(3)).sqrt())
        }
    }
}

/// Step for finite differences of point evaluators at `x`.
#[inline]
pub(crate) fn fd_step(x: [f64; 3]) -> f64 {
    1e-3 * (1.0 + norm3(x))
}

fn hessian_sq(f: &dyn Field3, x: [f64; 3], eps: f64) -> f64 {
    let mut acc = 0.0;
    for a in 0..3 {
        for b in a..3 {
            let d = if a == b {
                let at = |t: f64| {
                    let mut y = x;
                    y[a] += t;
                    f.eval(y)
                };
                (-at(-2.0 * eps) + 16.0 * at(-eps) - 30.0 * at(0.0) + 16.0 * at(eps)
                    - at(2.0 * eps))
                    / (12.0 * eps * eps)
            } else {
                let shifted = |t: f64| {
                    let mut y = x;
                    y[b] += t;
                    partial(f, y, a, eps)
                };
                (shifted(-2.0 * eps) - 8.0 * shifted(-eps) + 8.0 * shifted(eps)
                    - shifted(2.0 * eps))
                    / (12.0 * eps)
            };
            acc += if a == b { d * d } else { 2.0 * d * d };
        }
    }
    acc
}

/// Integer-order weighted norm of a point evaluator (`m <= 2`), with
/// derivatives by fourth-order differences.
pub fn weighted_norm_integer_field(
    f: &dyn Field3,
    m: usize,
    delta: f64,
    rule: &SphericalRule,
) -> Result<f64> {
    if m > 2 {
        return Err(Error::Unsupported(format!(
            "integer norms of point evaluators are implemented for m <= 2, got {m}"
        )));
    }
    let total = rule.integrate(|x| {
        let w = 1.0 + norm3(x);
        let eps = fd_step(x);
        let v = f.eval(x);
        let mut acc = w.powf(2.0 * delta) * v * v;
        if m >= 1 {
            let g2: f64 = (0..3).map(|a| partial(f, x, a, eps).powi(2)).sum();
            acc += w.powf(2.0 * (delta + 1.0)) * g2;
        }
        if m >= 2 {
            acc += w.powf(2.0 * (delta + 2.0)) * hessian_sq(f, x, eps);
        }
        acc
    });
    Ok(total.max(0.0).sqrt())
}

/// `sum_{|alpha| <= m} sup (1+|x|)^{beta+|alpha|} |d^alpha u|` on the grid nodes, `m <= 1`.
pub fn weighted_sup_norm(u: &GridFunction, beta: f64, m: usize) -> Result<f64> {
    if m > 1 {
        return Err(Error::Unsupported(format!("weighted sup norms need m <= 1, got {m}")));
    }
    if u.rank() != Rank::Scalar {
        return Err(Error::GridMismatch("sup norm expects a scalar field".into()));
    }
    match u.geometry() {
        Geometry::Radial(g) => {
            let f = u.samples();
            let mut out = (0..f.len())
                .map(|i| (1.0 + g.node(i)).powf(beta) * f[i].abs())
                .fold(0.0, f64::max);
            if m == 1 {
                let d = radial_derivative(f, Parity::Even, g.h(), None);
                let s = (0..f.len())
                    .map(|i| (1.0 + g.node(i)).powf(beta + 1.0) * d[i].abs())
                    .fold(0.0, f64::max);
                // each Cartesian partial attains sup |u'| along its own axis
                out += 3.0 * s;
            }
            Ok(out)
        }
        Geometry::Box(g) => {
            let w: Vec<f64> = (0..g.len()).map(|i| 1.0 + norm3(g.point(i))).collect();
            let sup = |d: &[f64], p: f64| {
                d.iter()
                    .zip(&w)
                    .map(|(v, w)| w.powf(p) * v.abs())
                    .fold(0.0, f64::max)
            };
            let mut out = sup(u.samples(), beta);
            if m == 1 {
                for axis in 0..3 {
                    out += sup(&box_derivative(g, u.samples(), axis), beta + 1.0);
                }
            }
            Ok(out)
        }
    }
}

/// Weighted sup norm of a point evaluator over the nodes of `rule`.
pub fn weighted_sup_field(f: &dyn Field3, beta: f64, m: usize, rule: &SphericalRule) -> Result<f64> {
    if m > 1 {
        return Err(Error::Unsupported(format!("weighted sup norms need m <= 1, got {m}")));
    }
    let mut out = rule.max(|x| (1.0 + norm3(x)).powf(beta) * f.eval(x).abs());
    if m == 1 {
        for axis in 0..3 {
            out += rule.max(|x| (1.0 + norm3(x)).powf(beta + 1.0) * partial(f, x, axis, fd_step(x)).abs());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FnField;
    use crate::grid::{sample_box, sample_radial, BoxGrid, RadialGrid};
    use std::f64::consts::PI;

    #[test]
    fn l2_of_gaussian_on_both_geometries() {
        let g = RadialGrid::new(12.0, 512).unwrap();
        let u = sample_radial(g, Rank::Scalar, |r| (-r * r / 2.0).exp()).unwrap();
        assert!((l2_delta_norm(&u, 0.0) - PI.powf(0.75)).abs() < 1e-10);
        let b = BoxGrid::new(8.0, 64).unwrap();
        let v = sample_box(b, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp()).unwrap();
        assert!((l2_delta_norm(&v, 0.0) - PI.powf(0.75)).abs() < 1e-6);
        let z = sample_radial(g, Rank::Scalar, |_| 0.0).unwrap();
        assert_eq!(l2_delta_norm(&z, 2.0), 0.0);
    }

    #[test]
    fn l2_delta_matches_independent_radial_quadrature() {
        // 4 pi int (1+r)^4 (1+r^2)^{-5} r^2 dr by Gauss rules on dyadic panels
        let (rs, ws) = crate::quadrature::dyadic_radial_rule(1.0, 1e6, 30);
        let oracle: f64 = rs
            .iter()
            .zip(&ws)
            .map(|(r, w)| w * 4.0 * PI * (1.0 + r).powi(4) * (1.0 + r * r).powi(-5) * r * r)
            .sum();
        let g = RadialGrid::new(64.0, 8192).unwrap();
        let u = sample_radial(g, Rank::Scalar, |r| (1.0 + r * r).powf(-2.5)).unwrap();
        let got = l2_delta_norm(&u, 2.0).powi(2);
        assert!((got - oracle).abs() < 1e-8 * oracle, "{got} vs {oracle}");
    }

    #[test]
    fn integer_norm_tail_is_stable() {
        let norm = |r_max: f64| {
            let g = RadialGrid::new(r_max, (r_max * 32.0) as usize).unwrap();
            let u = sample_radial(g, Rank::Scalar, |r| (1.0 + r * r).powf(-2.5)).unwrap();
            weighted_norm_integer(&u, 2, -1.0).unwrap()
        };
        let (a, b) = (norm(64.0), norm(128.0));
        assert!((a - b).abs() < 1e-4 * b, "{a} {b}");
    }

    #[test]
    fn integer_norm_m0_is_l2_and_radial_matches_box() {
        let g = RadialGrid::new(12.0, 768).unwrap();
        let u = sample_radial(g, Rank::Scalar, |r| (-r * r / 2.0).exp()).unwrap();
        let m0 = weighted_norm_integer(&u, 0, 0.0).unwrap();
        assert!((m0 - PI.powf(0.75)).abs() < 1e-9);
        let b = BoxGrid::new(8.0, 64).unwrap();
        let v = sample_box(b, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp()).unwrap();
        for m in 1..=2 {
            let r = weighted_norm_integer(&u, m, -0.5).unwrap();
            let q = weighted_norm_integer(&v, m, -0.5).unwrap();
            assert!((r - q).abs() < 1e-3 * r, "m={m}: {r} {q}");
        }
        let f = FnField::radial(|r| (-r * r / 2.0).exp());
        let rule = SphericalRule::standard();
        let fr = weighted_norm_integer_field(&f, 2, -0.5, &rule).unwrap();
        let r2 = weighted_norm_integer(&u, 2, -0.5).unwrap();
        assert!((fr - r2).abs() < 1e-6 * r2, "{fr} {r2}");
        assert!(weighted_norm_integer(&u, 3, 0.0).is_err());
    }

    #[test]
    fn sup_norms() {
        let g = RadialGrid::new(256.0, 8192).unwrap();
        let u = sample_radial(g, Rank::Scalar, |r| (1.0 + r * r).powf(-0.25)).unwrap();
        let s = weighted_sup_norm(&u, 0.5, 0).unwrap();
        let oracle = (0..200000)
            .map(|k| {
                let r = 256.0 * k as f64 / 200000.0;
                (1.0 + r).sqrt() * (1.0 + r * r).powf(-0.25)
            })
            .fold(0.0, f64::max);
        assert!((s - oracle).abs() < 1e-3, "{s} {oracle}");
        assert!(s >= 1.0 && s <= 2f64.powf(0.25) * 2f64.sqrt());
        let one = sample_radial(RadialGrid::new(4.0, 16).unwrap(), Rank::Scalar, |_| 1.0).unwrap();
        assert_eq!(weighted_sup_norm(&one, 0.0, 0).unwrap(), 1.0);
        let zero = one.map(|_| 0.0).unwrap();
        assert_eq!(weighted_sup_norm(&zero, 0.0, 1).unwrap(), 0.0);
    }
}
