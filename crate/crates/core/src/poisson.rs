//! Free-space solvers for `Laplace phi = 4 pi rho` with `phi -> 0` at infinity.
//!
//! The radial solver integrates the shell formula
//! `phi(r) = -[M(r)/r + 4 pi int_r^inf rho s ds]` with sixth-order cell
//! quadrature and a power-law tail beyond the grid. The box solver convolves
//! with `-1/|x|` on a zero-padded lattice.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::rc::Rc;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::field::norm3;
use crate::fluid::EosParams;
use crate::grid::stencil::{self, CellQuadrature};
use crate::grid::{box_derivative, box_line_apply, radial_derivative, BoxGrid, Geometry, GridFunction, Parity, RadialGrid, Rank};
use crate::quadrature::{gauss_legendre, power_tail};
use crate::wsobolev::{weighted_norm, DyadicPartition, WeightedNormSpec};

/// `int_{[-1/2,1/2]^3} |y|^{-1} dy`: the singular-cell average of `1/|x|` is
/// this constant over `h`.
pub const UNIT_CELL_INVERSE_DISTANCE: f64 = 2.380_077_363_979_553_5;

/// Default exponent of the assumed `rho ~ r^{-p}` decay beyond the grid.
pub const DEFAULT_TAIL_EXPONENT: f64 = 5.0;

/// Potential, its gradient and the discrete residual `max |L_h phi - 4 pi rho|`.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialField {
    pub phi: GridFunction,
    pub grad: GridFunction,
    pub residual: f64,
    /// The density violated the solver's decay or support assumption.
    pub flagged: bool,
}

/// Radial solve with the default tail exponent.
pub fn solve_poisson_radial(rho: &GridFunction) -> Result<PotentialField> {
    solve_poisson_radial_with(rho, DEFAULT_TAIL_EXPONENT)
}

/// Radial solve. `tail_exponent` is the assumed decay rate of `rho` beyond
/// `r_max`; exponents `<= 2` make the outer integral diverge and flag the result.
pub fn solve_poisson_radial_with(rho: &GridFunction, tail_exponent: f64) -> Result<PotentialField> {
    let g = *rho
        .radial_grid()
        .ok_or_else(|| Error::GridMismatch("radial solver needs a radial density".into()))?;
    if rho.rank() != Rank::Scalar {
        return Err(Error::GridMismatch("density must be scalar".into()));
    }
    let (phi, grad, flagged) = radial_potential(rho.samples(), &g, tail_exponent);
    let residual = radial_residual(&phi, rho.samples(), &g);
    Ok(PotentialField {
        phi: GridFunction::new(Geometry::Radial(g), Rank::Scalar, phi)?,
        grad: GridFunction::new(Geometry::Radial(g), Rank::RadialVector, grad)?,
        residual,
        flagged,
    })
}

/// Potential and radial gradient from raw samples; used directly by the
/// time stepper.
pub(crate) fn radial_potential(rho: &[f64], g: &RadialGrid, p: f64) -> (Vec<f64>, Vec<f64>, bool) {
    let n = rho.len();
    let h = g.h();
    let q = CellQuadrature::new();
    let m_integrand: Vec<f64> = (0..n).map(|i| rho[i] * g.node(i).powi(2)).collect();
    let mass = q.cumulative_to_nodes(&m_integrand, Parity::Even, h);
    let o_integrand: Vec<f64> = (0..n).map(|i| rho[i] * g.node(i)).collect();
    let inner = q.cumulative_to_nodes(&o_integrand, Parity::Odd, h);
    let total: f64 = q.total(&o_integrand, Parity::Odd, h);
    let r_last = g.node(n - 1);
    let (tail, flagged) = if rho[n - 1] == 0.0 {
        (0.0, false)
    } else {
        match power_tail(r_last, rho[n - 1] * r_last, g.r_max(), p - 1.0) {
            Some(t) => (t, false),
            None => (0.0, true),
        }
    };
    let mut phi = vec![0.0; n];
    let mut grad = vec![0.0; n];
    for i in 0..n {
        let r = g.node(i);
        let m = 4.0 * PI * mass[i];
        phi[i] = -(m / r + 4.0 * PI * (total - inner[i] + tail));
        grad[i] = m / (r * r);
    }
    (phi, grad, flagged)
}

fn radial_residual(phi: &[f64], rho: &[f64], g: &RadialGrid) -> f64 {
    let n = phi.len();
    let h = g.h();
    let d1 = radial_derivative(phi, Parity::Even, h, None);
    let p = stencil::pad_radial(phi, Parity::Even, None);
    let mut d2 = vec![0.0; n];
    stencil::d2(&p, &mut d2, 1.0 / (h * h));
    (0..n.saturating_sub(2))
        .map(|i| (d2[i] + 2.0 * d1[i] / g.node(i) - 4.0 * PI * rho[i]).abs())
        .fold(0.0, f64::max)
}

struct BoxKernel {
    fft: Fft3,
    spectrum: Vec<Complex64>,
}

thread_local! {
    static KERNELS: RefCell<HashMap<(usize, u64), Rc<BoxKernel>>> = RefCell::new(HashMap::new());
}

fn box_kernel(n: usize, h: f64) -> Rc<BoxKernel> {
    KERNELS.with(|m| {
        m.borrow_mut()
            .entry((n, h.to_bits()))
            .or_insert_with(|| {
                let big = 2 * n;
                let fft = Fft3::new(big);
                let signed = |a: usize| if a < n { a as f64 } else { a as f64 - big as f64 };
                let near = near_cell_averages();
                let mut spectrum = vec![Complex64::default(); big * big * big];
                for (idx, s) in spectrum.iter_mut().enumerate() {
                    let (i, j, k) = (idx / (big * big), (idx / big) % big, idx % big);
                    let m = [signed(i), signed(j), signed(k)];
                    let reach = m.iter().fold(0.0f64, |a, c| a.max(c.abs()));
                    let v = if reach <= NEAR_CELLS as f64 {
                        let at = |c: f64| (c + NEAR_CELLS as f64) as usize;
                        -h * h * near[(at(m[0]) * NEAR_SIDE + at(m[1])) * NEAR_SIDE + at(m[2])]
                    } else {
                        -h * h / norm3(m)
                    };
                    *s = Complex64::new(v, 0.0);
                }
                fft.forward(&mut spectrum);
                Rc::new(BoxKernel { fft, spectrum })
            })
            .clone()
    })
}

/// Cells within this many steps of the singularity use the exact cell
/// average of `1/|x|` instead of its centre value.
const NEAR_CELLS: usize = 3;
const NEAR_SIDE: usize = 2 * NEAR_CELLS + 1;

/// Averages of `1/|y|` over the unit cubes centred at the integer points
/// of `[-NEAR_CELLS, NEAR_CELLS]^3`, row-major.
fn near_cell_averages() -> Vec<f64> {
    let (x, w) = gauss_legendre(12);
    let mut out = vec![0.0; NEAR_SIDE * NEAR_SIDE * NEAR_SIDE];
    for (idx, v) in out.iter_mut().enumerate() {
        let c = [idx / (NEAR_SIDE * NEAR_SIDE), (idx / NEAR_SIDE) % NEAR_SIDE, idx % NEAR_SIDE]
            .map(|a| a as f64 - NEAR_CELLS as f64);
        if c == [0.0; 3] {
            *v = UNIT_CELL_INVERSE_DISTANCE;
            continue;
        }
        let mut acc = 0.0;
        for (xa, wa) in x.iter().zip(&w) {
            for (xb, wb) in x.iter().zip(&w) {
                for (xc, wc) in x.iter().zip(&w) {
                    let y = [c[0] + 0.5 * xa, c[1] + 0.5 * xb, c[2] + 0.5 * xc];
                    acc += wa * wb * wc / norm3(y);
                }
            }
        }
        *v = acc / 8.0;
    }
    out
}

/// Second difference of box samples along `axis`, zero outside the box.
fn second_difference(f: &[f64], g: &BoxGrid, axis: usize) -> Vec<f64> {
    let n = g.n();
    let inv_h2 = 1.0 / (g.h() * g.h());
    let mut out = vec![0.0; f.len()];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut at = [i, j, k];
                let c = at[axis];
                let centre = f[g.index(i, j, k)];
                let mut side = |d: isize| {
                    let m = c as isize + d;
                    if m < 0 || m >= n as isize {
                        return 0.0;
                    }
                    at[axis] = m as usize;
                    f[g.index(at[0], at[1], at[2])]
                };
                let sum = side(-1) + side(1);
                out[g.index(i, j, k)] = (sum - 2.0 * centre) * inv_h2;
            }
        }
    }
    out
}

/// Free-space potential of box samples by zero-padded convolution with the
/// cell-averaged kernel.
///
/// The lattice operator has symbol `G(k) (1 - h^2 |k|^2 / 24 + O(h^4))` with
/// `G = -4 pi / |k|^2`. The `h^2` and `h^4` terms are removed: the
/// isotropic parts are local (`(pi h^2 / 6) rho` and `(pi h^4 / 60) lap rho`),
/// the mixed part `(h^4 / 1440) sum_{i<j} d_ii d_jj rho` is folded into the
/// source.
pub(crate) fn box_potential(rho: &[f64], g: &BoxGrid) -> Vec<f64> {
    let n = g.n();
    let h = g.h();
    let big = 2 * n;
    let kernel = box_kernel(n, h);
    let d: Vec<Vec<f64>> = (0..3).map(|a| second_difference(rho, g, a)).collect();
    let d01 = second_difference(&d[0], g, 1);
    let d02 = second_difference(&d[0], g, 2);
    let d12 = second_difference(&d[1], g, 2);
    let h4 = h.powi(4);
    let mut buf = vec![Complex64::default(); big * big * big];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let at = g.index(i, j, k);
                let source = rho[at] - h4 / 1440.0 * (d01[at] + d02[at] + d12[at]);
                buf[(i * big + j) * big + k] = Complex64::new(source, 0.0);
            }
        }
    }
    kernel.fft.forward(&mut buf);
    for (b, s) in buf.iter_mut().zip(&kernel.spectrum) {
        *b *= s;
    }
    kernel.fft.inverse(&mut buf);
    let scale = 1.0 / (big * big * big) as f64;
    let shift = PI * h * h / 6.0;
    let quartic = PI * h4 / 60.0;
    let mut phi = vec![0.0; g.len()];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let at = g.index(i, j, k);
                let lap = d[0][at] + d[1][at] + d[2][at];
                phi[at] = buf[(i * big + j) * big + k].re * scale - shift * rho[at] - quartic * lap;
            }
        }
    }
    phi
}

/// Relative size of density outside the inner half of the box above which
/// the box solution is flagged.
pub const SUPPORT_TOLERANCE: f64 = 1e-6;

/// Box solve: convolution with `-1/|x|` (singular cell replaced by its cell
/// average), gradient by fourth-order differences.
pub fn solve_poisson_box(rho: &GridFunction) -> Result<PotentialField> {
    let g = *rho
        .box_grid()
        .ok_or_else(|| Error::GridMismatch("box solver needs box data".into()))?;
    if rho.rank() != Rank::Scalar {
        return Err(Error::GridMismatch("density must be scalar".into()));
    }
    let data = rho.samples();
    let peak = rho.max_abs();
    let half = g.half_width() / 2.0;
    let outer = (0..g.len())
        .filter(|&i| {
            let x = g.point(i);
            x[0].abs().max(x[1].abs()).max(x[2].abs()) > half
        })
        .map(|i| data[i].abs())
        .fold(0.0, f64::max);
    let flagged = peak > 0.0 && outer > SUPPORT_TOLERANCE * peak;

    let phi = box_potential(data, &g);
    let mut grad = Vec::with_capacity(3 * g.len());
    for axis in 0..3 {
        grad.extend(box_derivative(&g, &phi, axis));
    }
    let inv_h2 = 1.0 / (g.h() * g.h());
    let mut lap = vec![0.0; g.len()];
    for axis in 0..3 {
        let d2 = box_line_apply(&g, &phi, axis, |p, o| stencil::d2(p, o, inv_h2));
        for (l, d) in lap.iter_mut().zip(d2) {
            *l += d;
        }
    }
    let n = g.n();
    let mut residual = 0.0f64;
    for idx in 0..g.len() {
        let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
        if [i, j, k].iter().all(|&c| c >= 2 && c + 2 < n) {
            residual = residual.max((lap[idx] - 4.0 * PI * data[idx]).abs());
        }
    }
    Ok(PotentialField {
        phi: GridFunction::new(Geometry::Box(g), Rank::Scalar, phi)?,
        grad: GridFunction::new(Geometry::Box(g), Rank::Vector3, grad)?,
        residual,
        flagged,
    })
}

/// Both sides of the gradient estimate `||grad phi||_{s-1, delta+1} <= C_e ||rho||_{s-2, delta+2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipticReport {
    pub lhs: f64,
    pub rhs: f64,
    /// Empirical `C_e`; 0 for vanishing density.
    pub ratio: f64,
}

/// Evaluates the gradient estimate for a density and its potential.
/// `delta` must lie in `(-3/2, -1/2)` and `s >= 2`.
pub fn elliptic_estimate_report(
    rho: &GridFunction,
    potential: &PotentialField,
    spec: &WeightedNormSpec,
    partition: &DyadicPartition,
) -> Result<EllipticReport> {
    let delta = spec.delta;
    if !(delta > -1.5 && delta < -0.5) {
        return Err(Error::Hypothesis(format!(
            "the Laplacian is an isomorphism only for -3/2 < delta < -1/2, got delta = {delta}"
        )));
    }
    if spec.s < 2.0 {
        return Err(Error::Unsupported(format!(
            "the density norm has order s - 2 = {} < 0",
            spec.s - 2.0
        )));
    }
    let lhs = weighted_norm(
        &potential.grad,
        &spec.with_s_delta(spec.s - 1.0, delta + 1.0),
        partition,
    )?
    .norm();
    let rhs = weighted_norm(rho, &spec.with_s_delta(spec.s - 2.0, delta + 2.0), partition)?.norm();
    Ok(EllipticReport {
        lhs,
        rhs,
        ratio: if rhs == 0.0 { 0.0 } else { lhs / rhs },
    })
}

/// Least-squares `K` making `rho` hydrostatic against its own potential:
/// `gamma K rho^{gamma-2} rho' = -phi'`, with `phi` from the radial solver.
pub fn hydrostatic_k(rho: &GridFunction, gamma: f64) -> Result<f64> {
    let g = *rho
        .radial_grid()
        .ok_or_else(|| Error::GridMismatch("hydrostatic fit needs a radial density".into()))?;
    let pot = solve_poisson_radial(rho)?;
    let d = radial_derivative(rho.samples(), Parity::Even, g.h(), None);
    let (mut num, mut den) = (0.0, 0.0);
    // skip the outermost cells, whose one-sided stencils are least accurate
    for i in 0..g.n() - 4 {
        let r = rho.samples()[i];
        if r <= 0.0 {
            continue;
        }
        let a = gamma * r.powf(gamma - 2.0) * d[i];
        num -= a * pot.grad.samples()[i];
        den += a * a;
    }
    if den == 0.0 {
        return Err(Error::Domain("density profile has no gradient".into()));
    }
    Ok(num / den)
}

/// `K` for the `gamma = 6/5` static profile from the hydrostatic fit,
/// checked against the closed form.
pub fn resolve_static_k(a: f64) -> Result<f64> {
    let profile = crate::fluid::StaticProfile::new(a)?;
    let g = RadialGrid::new(32.0 * a, 4096)?;
    let rho = crate::grid::sample_radial(g, Rank::Scalar, |r| profile.rho(r))?;
    let k = hydrostatic_k(&rho, 1.2)?;
    let exact = crate::fluid::K_STATIC;
    if (k - exact).abs() > 1e-6 * exact {
        return Err(Error::Domain(format!(
            "hydrostatic fit gave K = {k}, expected {exact}"
        )));
    }
    let _ = EosParams::new(1.2, exact)?;
    Ok(exact)
}
