//! Three-stage Radau IIA with step doubling, for small stiff systems.

use crate::error::{Error, Result};
use crate::numerics::solve_dense;

const S6: f64 = 2.449_489_742_783_178;

fn tableau() -> ([f64; 3], [[f64; 3]; 3]) {
    let c = [(4.0 - S6) / 10.0, (4.0 + S6) / 10.0, 1.0];
    let a = [
        [(88.0 - 7.0 * S6) / 360.0, (296.0 - 169.0 * S6) / 1800.0, (-2.0 + 3.0 * S6) / 225.0],
        [(296.0 + 169.0 * S6) / 1800.0, (88.0 + 7.0 * S6) / 360.0, (-2.0 - 3.0 * S6) / 225.0],
        [(16.0 - S6) / 36.0, (16.0 + S6) / 36.0, 1.0 / 9.0],
    ];
    (c, a)
}

pub struct Radau<F, const N: usize> {
    f: F,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl<const N: usize, F: Fn(f64, &[f64; N]) -> [f64; N]> Radau<F, N> {
    pub fn new(f: F, rtol: f64, atol: f64) -> Self {
        Self { f, rtol, atol, max_steps: 1_000_000 }
    }

    fn jacobian(&self, x: f64, y: &[f64; N], fy: &[f64; N]) -> [[f64; N]; N] {
        let mut j = [[0.0; N]; N];
        for k in 0..N {
            let mut yp = *y;
            let h = 1e-7 * y[k].abs().max(self.atol.sqrt()).max(1e-30);
            yp[k] += h;
            let fp = (self.f)(x, &yp);
            for i in 0..N {
                j[i][k] = (fp[i] - fy[i]) / h;
            }
        }
        j
    }

    fn weight(&self, y0: &[f64; N], y1: &[f64; N]) -> [f64; N] {
        let mut w = [0.0; N];
        for i in 0..N {
            w[i] = self.atol + self.rtol * y0[i].abs().max(y1[i].abs());
        }
        w
    }

    /// One implicit step; None when the simplified Newton iteration stalls.
    fn step(&self, x: f64, y: &[f64; N], h: f64) -> Option<[f64; N]> {
        let (c, a) = tableau();
        let fy = (self.f)(x, y);
        let jac = self.jacobian(x, y, &fy);
        let m = 3 * N;
        let mut mat = vec![vec![0.0; m]; m];
        for i in 0..3 {
            for j in 0..3 {
                for p in 0..N {
                    for q in 0..N {
                        mat[i * N + p][j * N + q] = -h * a[i][j] * jac[p][q] + if i == j && p == q { 1.0 } else { 0.0 };
                    }
                }
            }
        }
        let w = self.weight(y, y);
        let mut z = [[0.0; N]; 3];
        for _ in 0..12 {
            let mut fz = [[0.0; N]; 3];
            for j in 0..3 {
                let mut yj = *y;
                for p in 0..N {
                    yj[p] += z[j][p];
                }
                fz[j] = (self.f)(x + c[j] * h, &yj);
            }
            let mut rhs = vec![0.0; m];
            for i in 0..3 {
                for p in 0..N {
                    let mut g = z[i][p];
                    for j in 0..3 {
                        g -= h * a[i][j] * fz[j][p];
                    }
                    rhs[i * N + p] = -g;
                }
            }
            let dz = solve_dense(mat.clone(), rhs).ok()?;
            let mut norm = 0.0f64;
            for i in 0..3 {
                for p in 0..N {
                    z[i][p] += dz[i * N + p];
                    norm = norm.max((dz[i * N + p] / w[p]).abs());
                }
            }
            if !norm.is_finite() {
                return None;
            }
            if norm < 1e-3 {
                let mut out = *y;
                for p in 0..N {
                    out[p] += z[2][p];
                }
                return Some(out);
            }
        }
        None
    }

    /// Values at every point of the increasing grid `xs`, starting from y(xs[0]) = y0.
    pub fn solve(&self, xs: &[f64], y0: [f64; N]) -> Result<Vec<[f64; N]>> {
        let mut out = vec![y0];
        let mut y = y0;
        let mut h = xs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min) * 1e-3;
        let mut steps = 0;
        for win in xs.windows(2) {
            let (mut x, xe) = (win[0], win[1]);
            while x < xe {
                steps += 1;
                if steps > self.max_steps {
                    return Err(Error::Numerical(format!("stiff solver exceeded {} steps at x = {x}", self.max_steps)));
                }
                let last = x + h >= xe;
                let hs = if last { xe - x } else { h };
                let full = self.step(x, &y, hs);
                let half = self.step(x, &y, 0.5 * hs).and_then(|m| self.step(x + 0.5 * hs, &m, 0.5 * hs));
                let (Some(full), Some(half)) = (full, half) else {
                    h = 0.25 * hs;
                    if h < 1e-14 * xe.abs().max(1.0) {
                        return Err(Error::Numerical(format!("stiff solver step underflow at x = {x}")));
                    }
                    continue;
                };
                let w = self.weight(&y, &half);
                let err = (0..N).map(|p| ((half[p] - full[p]) / 31.0 / w[p]).abs()).fold(0.0, f64::max);
                let fac = (0.9 * err.max(1e-12).powf(-1.0 / 6.0)).clamp(0.2, 4.0);
                if err <= 1.0 {
                    x = if last { xe } else { x + hs };
                    y = half;
                    h = if last { h.max(hs * fac) } else { hs * fac };
                } else {
                    h = hs * fac;
                }
            }
            out.push(y);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_exact_to_tolerance() {
        let solver = Radau::new(|_x, y: &[f64; 1]| [-y[0]], 1e-10, 1e-14);
        let xs: Vec<f64> = (0..=10).map(|i| i as f64 * 0.5).collect();
        let ys = solver.solve(&xs, [1.0]).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((y[0] - (-x).exp()).abs() < 1e-9, "{x} {}", y[0]);
        }
    }

    #[test]
    fn stiff_relaxation_takes_few_steps() {
        // y′ = −k(y − cos x) − sin x has the slow solution cos x
        let k = 1e8;
        let solver = Radau { max_steps: 2000, ..Radau::new(move |x, y: &[f64; 1]| [-k * (y[0] - x.cos()) - x.sin()], 1e-9, 1e-12) };
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = solver.solve(&xs, [1.0]).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((y[0] - x.cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn harmonic_oscillator_keeps_phase() {
        let solver = Radau::new(|_x, y: &[f64; 2]| [y[1], -y[0]], 1e-11, 1e-14);
        let xs: Vec<f64> = (0..=20).map(|i| i as f64).collect();
        let ys = solver.solve(&xs, [0.0, 1.0]).unwrap();
        assert!((ys[20][0] - 20f64.sin()).abs() < 1e-8);
    }
}
