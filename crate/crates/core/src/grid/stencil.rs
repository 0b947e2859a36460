//! Fixed finite-difference and quadrature stencils on uniform nodes.
//!
//! Line operators work on "padded" slices that carry two ghost values on
//! each side, so that every interior node sees the full centred stencil.

/// Number of ghost values on each side of a padded line.
pub const GHOSTS: usize = 2;

/// Reflection symmetry of a radial profile about `r = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

/// Ghost values one and two nodes past the end of `f`, from the quartic
/// through its last five samples.
pub fn extrapolate_ghosts(f: &[f64]) -> [f64; 2] {
    let n = f.len();
    debug_assert!(n >= 5);
    let (f0, f1, f2, f3, f4) = (f[n - 5], f[n - 4], f[n - 3], f[n - 2], f[n - 1]);
    [
        5.0 * f4 - 10.0 * f3 + 10.0 * f2 - 5.0 * f1 + f0,
        15.0 * f4 - 40.0 * f3 + 45.0 * f2 - 24.0 * f1 + 5.0 * f0,
    ]
}

/// Ghost values one and two nodes before the start of `f` (quartic).
pub fn extrapolate_ghosts_front(f: &[f64]) -> [f64; 2] {
    let (f0, f1, f2, f3, f4) = (f[0], f[1], f[2], f[3], f[4]);
    [
        5.0 * f0 - 10.0 * f1 + 10.0 * f2 - 5.0 * f3 + f4,
        15.0 * f0 - 40.0 * f1 + 45.0 * f2 - 24.0 * f3 + 5.0 * f4,
    ]
}

/// Pads a cell-centred radial profile: mirror ghosts at `r = 0` with the
/// given parity, and either the supplied or extrapolated ghosts at `r_max`.
pub fn pad_radial(f: &[f64], parity: Parity, outer: Option<[f64; 2]>) -> Vec<f64> {
    let n = f.len();
    let p = parity.sign();
    let mut out = Vec::with_capacity(n + 2 * GHOSTS);
    out.push(p * f[1]);
    out.push(p * f[0]);
    out.extend_from_slice(f);
    let g = outer.unwrap_or_else(|| extrapolate_ghosts(f));
    out.push(g[0]);
    out.push(g[1]);
    out
}

/// Pads a line with extrapolated ghosts at both ends.
pub fn pad_line(f: &[f64], out: &mut Vec<f64>) {
    out.clear();
    let front = extrapolate_ghosts_front(f);
    out.push(front[1]);
    out.push(front[0]);
    out.extend_from_slice(f);
    let back = extrapolate_ghosts(f);
    out.push(back[0]);
    out.push(back[1]);
}

/// Fourth-order centred first derivative of a padded line.
#[inline]
pub fn d1(p: &[f64], out: &mut [f64], inv_h: f64) {
    let c = inv_h / 12.0;
    for (i, o) in out.iter_mut().enumerate() {
        *o = c * (p[i] - 8.0 * p[i + 1] + 8.0 * p[i + 3] - p[i + 4]);
    }
}

/// Fourth-order centred second derivative of a padded line.
#[inline]
pub fn d2(p: &[f64], out: &mut [f64], inv_h2: f64) {
    let c = inv_h2 / 12.0;
    for (i, o) in out.iter_mut().enumerate() {
        *o = c * (-p[i] + 16.0 * p[i + 1] - 30.0 * p[i + 2] + 16.0 * p[i + 3] - p[i + 4]);
    }
}

/// Undivided fourth difference of a padded line.
#[inline]
pub fn undivided_d4(p: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = p[i] - 4.0 * p[i + 1] + 6.0 * p[i + 2] - 4.0 * p[i + 3] + p[i + 4];
    }
}

/// Weights `w` such that `sum_k w[k] f(o_k)` integrates exactly, over
/// `[a, b]`, the polynomial interpolating `f` at `offsets` (all in units of
/// the node spacing).
pub fn interpolatory_weights(offsets: &[f64], a: f64, b: f64) -> Vec<f64> {
    let m = offsets.len();
    // Vandermonde transpose system: sum_k w_k o_k^p = (b^{p+1} - a^{p+1})/(p+1).
    let mut mat = vec![vec![0.0; m + 1]; m];
    for (p, row) in mat.iter_mut().enumerate() {
        for (k, &o) in offsets.iter().enumerate() {
            row[k] = o.powi(p as i32);
        }
        let e = (p + 1) as i32;
        row[m] = (b.powi(e) - a.powi(e)) / f64::from(e);
    }
    solve_dense(mat)
}

fn solve_dense(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let m = a.len();
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        for row in col + 1..m {
            let f = a[row][col] / a[col][col];
            for k in col..=m {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let mut acc = a[row][m];
        for k in row + 1..m {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}

/// Cell-integral quadrature on cell-centred nodes.
///
/// Node `i` sits at the centre of cell `[i h, (i+1) h]`. Integrals over whole
/// cells use the centred five-point rule (sixth order after summation); the
/// last two cells shift the stencil inward so no outer ghosts are needed.
pub struct CellQuadrature {
    centred: [f64; 5],
    shifted: [[f64; 5]; 2],
    half_left: [f64; 5],
    half_left_shifted: [[f64; 5]; 2],
}

impl Default for CellQuadrature {
    fn default() -> Self {
        Self::new()
    }
}

impl CellQuadrature {
    pub fn new() -> Self {
        let to5 = |v: Vec<f64>| -> [f64; 5] { [v[0], v[1], v[2], v[3], v[4]] };
        let off = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let off1 = [-3.0, -2.0, -1.0, 0.0, 1.0];
        let off2 = [-4.0, -3.0, -2.0, -1.0, 0.0];
        Self {
            centred: to5(interpolatory_weights(&off, -0.5, 0.5)),
            shifted: [
                to5(interpolatory_weights(&off1, -0.5, 0.5)),
                to5(interpolatory_weights(&off2, -0.5, 0.5)),
            ],
            half_left: to5(interpolatory_weights(&off, -0.5, 0.0)),
            half_left_shifted: [
                to5(interpolatory_weights(&off1, -0.5, 0.0)),
                to5(interpolatory_weights(&off2, -0.5, 0.0)),
            ],
        }
    }

    /// Stencil window start (into the inner-padded array) and weights for
    /// cell `i` of `n`, with `inner` mirror ghosts prepended.
    fn window<'a>(&'a self, i: usize, n: usize, half: bool) -> (usize, &'a [f64; 5]) {
        // padded index of node i is i + GHOSTS
        if i + 2 < n {
            (i, if half { &self.half_left } else { &self.centred })
        } else if i + 2 == n {
            (
                i - 1,
                if half {
                    &self.half_left_shifted[0]
                } else {
                    &self.shifted[0]
                },
            )
        } else {
            (
                i - 2,
                if half {
                    &self.half_left_shifted[1]
                } else {
                    &self.shifted[1]
                },
            )
        }
    }

    /// Per-cell integrals of `f` (length `n >= 5`), with mirror ghosts at the
    /// inner end of the given parity.
    pub fn cell_integrals(&self, f: &[f64], parity: Parity, h: f64) -> Vec<f64> {
        let n = f.len();
        let p = pad_inner(f, parity);
        (0..n)
            .map(|i| {
                let (s, w) = self.window(i, n, false);
                h * dot5(&p[s..s + 5], w)
            })
            .collect()
    }

    /// Integrals of `f` from `0` to each node: `F(r_i)`.
    pub fn cumulative_to_nodes(&self, f: &[f64], parity: Parity, h: f64) -> Vec<f64> {
        let n = f.len();
        let p = pad_inner(f, parity);
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let (s, w) = self.window(i, n, true);
            out.push(acc + h * dot5(&p[s..s + 5], w));
            let (s, w) = self.window(i, n, false);
            acc += h * dot5(&p[s..s + 5], w);
        }
        out
    }

    /// Integral of `f` over `[0, n h]`.
    pub fn total(&self, f: &[f64], parity: Parity, h: f64) -> f64 {
        self.cell_integrals(f, parity, h).iter().sum()
    }
}

fn pad_inner(f: &[f64], parity: Parity) -> Vec<f64> {
    let s = parity.sign();
    let mut p = Vec::with_capacity(f.len() + GHOSTS);
    p.push(s * f[1]);
    p.push(s * f[0]);
    p.extend_from_slice(f);
    p
}

#[inline]
fn dot5(a: &[f64], w: &[f64; 5]) -> f64 {
    a[0] * w[0] + a[1] * w[1] + a[2] * w[2] + a[3] * w[3] + a[4] * w[4]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centred_cell_weights_match_classical_rule() {
        // h (f + d2/24 - 17 d4/5760) expanded in node values
        let q = CellQuadrature::new();
        let e = [
            -17.0 / 5760.0,
            1.0 / 24.0 + 4.0 * 17.0 / 5760.0,
            1.0 - 2.0 / 24.0 - 6.0 * 17.0 / 5760.0,
            1.0 / 24.0 + 4.0 * 17.0 / 5760.0,
            -17.0 / 5760.0,
        ];
        for (a, b) in q.centred.iter().zip(e) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn extrapolation_exact_for_quartics() {
        let f: Vec<f64> = (0..8).map(|i| {
            let x = i as f64;
            1.0 - 2.0 * x + 0.5 * x * x * x - 0.01 * x.powi(4)
        }).collect();
        let g = extrapolate_ghosts(&f);
        let ex = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x - 0.01 * x.powi(4);
        assert!((g[0] - ex(8.0)).abs() < 1e-9);
        assert!((g[1] - ex(9.0)).abs() < 1e-9);
        let gf = extrapolate_ghosts_front(&f);
        assert!((gf[0] - ex(-1.0)).abs() < 1e-9);
        assert!((gf[1] - ex(-2.0)).abs() < 1e-9);
    }

    #[test]
    fn cumulative_integral_of_even_polynomial() {
        // f(r) = r^2 on cell centres; F(r) = r^3 / 3
        let n = 40;
        let h = 0.1;
        let f: Vec<f64> = (0..n).map(|i| ((i as f64 + 0.5) * h).powi(2)).collect();
        let q = CellQuadrature::new();
        let cum = q.cumulative_to_nodes(&f, Parity::Even, h);
        for (i, c) in cum.iter().enumerate() {
            let r = (i as f64 + 0.5) * h;
            assert!((c - r.powi(3) / 3.0).abs() < 1e-12, "node {i}");
        }
        let tot = q.total(&f, Parity::Even, h);
        assert!((tot - (n as f64 * h).powi(3) / 3.0).abs() < 1e-11);
    }
}
