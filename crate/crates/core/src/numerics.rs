//! Small numerical building blocks shared by the analysis modules.

use crate::error::{Error, Result};
use gauss_quad::legendre::GaussLegendre;

/// Monotone piecewise cubic Hermite interpolant (Fritsch–Carlson slopes,
/// the same limiter as the classic PCHIP routine).
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::InvalidInput(format!(
                "pchip needs matching arrays of length >= 2 (got {} and {})",
                n,
                y.len()
            )));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("pchip abscissae must increase strictly".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let del: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = del[0];
            d[1] = del[0];
        } else {
            for k in 1..n - 1 {
                if del[k - 1] * del[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
                }
            }
            d[0] = end_slope(h[0], h[1], del[0], del[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
        }
        Ok(Self { x: x.to_vec(), y: y.to_vec(), d })
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    fn locate(&self, x: f64) -> usize {
        let n = self.x.len();
        match self.x.partition_point(|&v| v <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    /// Value at `x`; outside the data range the end cubic is extended.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.locate(x);
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t),
            t * (1.0 - t) * (1.0 - t),
            t * t * (3.0 - 2.0 * t),
            t * t * (t - 1.0),
        );
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let i = self.locate(x);
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let (d00, d10, d01, d11) = (
            6.0 * t * t - 6.0 * t,
            3.0 * t * t - 4.0 * t + 1.0,
            -6.0 * t * t + 6.0 * t,
            3.0 * t * t - 2.0 * t,
        );
        (d00 * self.y[i] + d01 * self.y[i + 1]) / h + d10 * self.d[i] + d11 * self.d[i + 1]
    }
}

fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

/// First and second derivative at the middle of three (possibly unevenly
/// spaced) points.
#[inline]
pub fn d1_d2(zm: f64, z0: f64, zp: f64, fm: f64, f0: f64, fp: f64) -> (f64, f64) {
    let hm = z0 - zm;
    let hp = zp - z0;
    let d1 = -hp / (hm * (hm + hp)) * fm + (hp - hm) / (hm * hp) * f0 + hm / (hp * (hm + hp)) * fp;
    let d2 = 2.0 * (fm / (hm * (hm + hp)) - f0 / (hm * hp) + fp / (hp * (hm + hp)));
    (d1, d2)
}

/// Rising quintic smoothstep on [0, 1], clamped outside.
pub fn smoothstep5(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
}

/// Cutoff equal to 1 on [-1/2, 1/2] and 0 outside [-1, 1].
pub fn chi(s: f64) -> f64 {
    1.0 - smoothstep5(2.0 * s.abs() - 1.0)
}

/// Cumulative trapezoid rule, starting from zero at the first sample.
pub fn cumtrapz(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..x.len() {
        acc += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
        out.push(acc);
    }
    out
}

pub fn trapz(x: &[f64], y: &[f64]) -> f64 {
    (1..x.len()).map(|i| 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1])).sum()
}

/// Composite Gauss–Legendre rule with a fixed number of equal panels.
pub struct Composite {
    rule: GaussLegendre,
    panels: usize,
}

impl Composite {
    pub fn new(order: usize, panels: usize) -> Self {
        Self {
            rule: GaussLegendre::new(order.max(2)).expect("order >= 2"),
            panels: panels.max(1),
        }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = (b - a) / self.panels as f64;
        (0..self.panels)
            .map(|k| {
                let lo = a + k as f64 * h;
                self.rule.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }
}

/// Adaptive Gauss–Legendre: bisects until two successive refinements agree.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(a: f64, b: f64, tol: f64, mut f: F) -> f64 {
    let rule = GaussLegendre::new(10).expect("order >= 2");
    fn rec<F: FnMut(f64) -> f64>(
        rule: &GaussLegendre,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
        f: &mut F,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = rule.integrate(a, m, &mut *f);
        let right = rule.integrate(m, b, &mut *f);
        let both = left + right;
        if depth == 0 || (both - whole).abs() <= tol {
            return both;
        }
        rec(rule, a, m, left, 0.5 * tol, depth - 1, f) + rec(rule, m, b, right, 0.5 * tol, depth - 1, f)
    }
    let whole = rule.integrate(a, b, &mut f);
    rec(&rule, a, b, whole, tol, 40, &mut f)
}

/// Solves a small dense linear system by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[piv][col].abs() < 1e-300 {
            return Err(Error::Numerical("singular least-squares system".into()));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Ok(x)
}

/// Linear least squares through the normal equations; fine for the tiny,
/// well-scaled design matrices used here.
pub fn lstsq(rows: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let p = rows.first().map(|r| r.len()).unwrap_or(0);
    if p == 0 || rows.len() < p {
        return Err(Error::InvalidInput("underdetermined least-squares fit".into()));
    }
    let mut ata = vec![vec![0.0; p]; p];
    let mut atb = vec![0.0; p];
    for (row, &y) in rows.iter().zip(rhs) {
        for i in 0..p {
            atb[i] += row[i] * y;
            for j in 0..p {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    solve_dense(ata, atb)
}

/// Finite-difference weights for derivatives 0..=m at x0 from the nodes xs (Fornberg's recursion).
pub fn fd_weights(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] *= c4 / c3;
        }
        c1 = c2;
    }
    c
}

/// First and second derivatives from a sliding `width`-point stencil.
pub fn derivatives_wide(x: &[f64], y: &[f64], width: usize) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let w = width.min(n);
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for i in 0..n {
        let start = i.saturating_sub(w / 2).min(n - w);
        let c = fd_weights(x[i], &x[start..start + w], 2);
        for k in 0..w {
            d1[i] += c[1][k] * y[start + k];
            d2[i] += c[2][k] * y[start + k];
        }
    }
    (d1, d2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pchip_reproduces_linear_data() {
        let x: Vec<f64> = (0..10).map(|i| (i as f64).powf(1.3)).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let p = Pchip::new(&x, &y).unwrap();
        for &v in &[0.1, 2.7, 7.9] {
            assert!((p.eval(v) - (2.0 * v - 1.0)).abs() < 1e-12);
            assert!((p.deriv(v) - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pchip_keeps_monotone_data_monotone() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [0.0, 0.0, 1.0, 1.0, 5.0];
        let p = Pchip::new(&x, &y).unwrap();
        let mut last = f64::NEG_INFINITY;
        for k in 0..=400 {
            let v = p.eval(k as f64 * 0.01);
            assert!(v >= last - 1e-14);
            last = v;
        }
    }

    #[test]
    fn stencil_is_exact_on_quadratics() {
        let f = |z: f64| 3.0 * z * z - z + 2.0;
        let (d1, d2) = d1_d2(0.3, 0.7, 1.6, f(0.3), f(0.7), f(1.6));
        assert!((d1 - (6.0 * 0.7 - 1.0)).abs() < 1e-12);
        assert!((d2 - 6.0).abs() < 1e-11);
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(chi(0.0), 1.0);
        assert_eq!(chi(0.5), 1.0);
        assert_eq!(chi(1.0), 0.0);
        assert_eq!(chi(-3.0), 0.0);
        for k in 0..1000 {
            let s = k as f64 / 999.0 * 1.2;
            let ds = 1e-6;
            assert!(s * (chi(s + ds) - chi(s - ds)) / (2.0 * ds) <= 1e-12);
        }
    }

    #[test]
    fn adaptive_quadrature_on_peaked_integrand() {
        let v = integrate_adaptive(-1.0, 1.0, 1e-13, |x| (-(x * x) / 1e-3).exp());
        // tails beyond |x| = 1 are below e^-1000
        let exact = (std::f64::consts::PI * 1e-3).sqrt();
        assert!((v - exact).abs() < 1e-11);
    }

    #[test]
    fn least_squares_line() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..5).map(|i| 1.5 + 0.25 * i as f64).collect();
        let c = lstsq(&rows, &y).unwrap();
        assert!((c[0] - 1.5).abs() < 1e-12 && (c[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn fornberg_is_exact_on_polynomials() {
        let x: Vec<f64> = (0..7).map(|i| 0.3 * i as f64 - 0.5).collect();
        let y: Vec<f64> = x.iter().map(|v| v.powi(6) - 2.0 * v.powi(3)).collect();
        let (d1, d2) = derivatives_wide(&x, &y, 7);
        for i in 0..7 {
            let v = x[i];
            assert!((d1[i] - (6.0 * v.powi(5) - 6.0 * v * v)).abs() < 1e-10);
            assert!((d2[i] - (30.0 * v.powi(4) - 12.0 * v)).abs() < 1e-9);
        }
    }
}
