//! Dirichlet heat kernel on [−1, 1] by images, its boundary estimates, and the Green's
//! representation of caloric functions on the rectangle [−1, 1] × [−1, 0].

use crate::error::{Error, Result};
use crate::numerics::{integrate_adaptive, Composite};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KernelConfig {
    /// Lower bound on the number of images kept on each side.
    pub min_images: usize,
    /// Bound on the omitted Gaussian tail.
    pub tol: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { min_images: 1, tol: 1e-14 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    fn y(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }
}

/// Derivatives of the Gaussian g(u) = e^{−u²/4t}/√(4πt) up to third order.
fn gauss(u: f64, t: f64, order: usize) -> f64 {
    let g = (-u * u / (4.0 * t)).exp() / (4.0 * PI * t).sqrt();
    match order {
        0 => g,
        1 => -u / (2.0 * t) * g,
        2 => (u * u / (4.0 * t * t) - 0.5 / t) * g,
        _ => (-u.powi(3) / (8.0 * t.powi(3)) + 3.0 * u / (4.0 * t * t)) * g,
    }
}

impl KernelConfig {
    pub fn images(&self, t: f64) -> usize {
        let k = ((t * (1.0 / self.tol).ln()).sqrt() / 2.0).ceil() as usize + 2;
        k.max(self.min_images)
    }

    fn check(&self, x: f64, y: f64, t: f64) -> Result<()> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("heat kernel needs t > 0, got {t}")));
        }
        if !(x.abs() <= 1.0 && y.abs() <= 1.0) {
            return Err(Error::Domain(format!("({x}, {y}) outside [−1, 1]²")));
        }
        Ok(())
    }

    /// ∂ₓ^dx ∂_y^dy K_t(x, y) for dx ≤ 2, dy ≤ 1, summed over images in a fixed order.
    fn derivative(&self, x: f64, y: f64, t: f64, dx: usize, dy: usize) -> Result<f64> {
        self.check(x, y, t)?;
        let k = self.images(t) as i64;
        let order = dx + dy;
        // u₁ = x − y + 4k enters with +, u₂ = x + y + 4k − 2 with −; ∂_y u₁ = −1, ∂_y u₂ = +1
        let s1 = if dy % 2 == 1 { -1.0 } else { 1.0 };
        let mut sum = 0.0;
        for j in -k..=k {
            let u1 = x - y + 4.0 * j as f64;
            let u2 = x + y + 4.0 * j as f64 - 2.0;
            sum += s1 * gauss(u1, t, order) - gauss(u2, t, order);
        }
        Ok(sum)
    }

    pub fn kernel(&self, x: f64, y: f64, t: f64) -> Result<f64> {
        self.derivative(x, y, t, 0, 0)
    }

    pub fn kernel_dy(&self, x: f64, y: f64, t: f64) -> Result<f64> {
        self.derivative(x, y, t, 0, 1)
    }

    pub fn kernel_dxx(&self, x: f64, y: f64, t: f64) -> Result<f64> {
        self.derivative(x, y, t, 2, 0)
    }

    pub fn kernel_dxx_dy(&self, x: f64, y: f64, t: f64) -> Result<f64> {
        self.derivative(x, y, t, 2, 1)
    }

    /// ∂K/∂y at y = ±1.
    pub fn boundary_flux(&self, x: f64, t: f64, side: Side) -> Result<f64> {
        self.kernel_dy(x, side.y(), t)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub item: String,
    pub t_or_y: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaScan {
    /// Smallest constants making each of the four estimates hold on the scan grids.
    pub constants: [f64; 4],
    pub rows: Vec<ScanRow>,
}

impl LemmaScan {
    pub fn constant(&self) -> f64 {
        self.constants.iter().copied().fold(0.0, f64::max)
    }
}

/// y grid with 10⁻³ spacing stopping 10⁻³ short of ±1.
pub fn scan_y_grid() -> Vec<f64> {
    (1..2000).map(|i| -1.0 + i as f64 * 1e-3).collect()
}

/// Log-spaced t grid on [0.005, 1]; below that e^{−1/4t} underflows the ratios.
pub fn scan_t_grid() -> Vec<f64> {
    let n = 400;
    (0..n).map(|i| (0.005f64.ln() * (1.0 - i as f64 / (n - 1) as f64)).exp()).collect()
}

pub fn lemma_a1_scan(cfg: &KernelConfig) -> Result<LemmaScan> {
    let mut rows = Vec::new();
    let (mut min_i, mut max_ii) = (f64::INFINITY, 0.0f64);
    for y in scan_y_grid() {
        let c = (PI * y / 2.0).cos();
        let r1 = cfg.kernel(0.0, y, 1.0)? / c;
        let r2 = cfg.kernel_dxx(0.0, y, 1.0)?.abs() / c;
        min_i = min_i.min(r1);
        max_ii = max_ii.max(r2);
        rows.push(ScanRow { item: "i".into(), t_or_y: y, ratio: r1 });
        rows.push(ScanRow { item: "ii".into(), t_or_y: y, ratio: r2 });
    }
    let (mut min_iii, mut max_iii, mut max_iv) = (f64::INFINITY, 0.0f64, 0.0f64);
    for t in scan_t_grid() {
        let w3 = t.powf(-1.5) * (-0.25 / t).exp();
        let w7 = t.powf(-3.5) * (-0.25 / t).exp();
        let right = -cfg.boundary_flux(0.0, t, Side::Right)? / w3;
        let left = cfg.boundary_flux(0.0, t, Side::Left)? / w3;
        let r4 = cfg.kernel_dxx_dy(0.0, 1.0, t)?.abs().max(cfg.kernel_dxx_dy(0.0, -1.0, t)?.abs()) / w7;
        min_iii = min_iii.min(right.min(left));
        max_iii = max_iii.max(right.max(left));
        max_iv = max_iv.max(r4);
        rows.push(ScanRow { item: "iii".into(), t_or_y: t, ratio: right.min(left) });
        rows.push(ScanRow { item: "iv".into(), t_or_y: t, ratio: r4 });
    }
    if !(min_i > 0.0 && min_iii > 0.0) {
        return Err(Error::Numerical("kernel lower bounds are not positive on the scan grid".into()));
    }
    Ok(LemmaScan { constants: [1.0 / min_i, max_ii, (1.0 / min_iii).max(max_iii), max_iv], rows })
}

/// Data of a caloric function on the parabolic boundary of [−1, 1] × [−1, 0].
pub struct CaloricData<'a> {
    /// y ↦ h(y, −1)
    pub initial: &'a dyn Fn(f64) -> f64,
    /// t ↦ h(−1, −t) for t ∈ [0, 1]
    pub left: &'a dyn Fn(f64) -> f64,
    /// t ↦ h(1, −t) for t ∈ [0, 1]
    pub right: &'a dyn Fn(f64) -> f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Representation {
    pub x: f64,
    pub h: f64,
    pub h_xx: f64,
    pub warnings: Vec<String>,
}

const QUAD_TOL: f64 = 1e-12;

/// ∫₀¹ φ(t) dt through u = 1/t, truncated where the Gaussian factor e^{−u d²/4} is negligible.
/// Log-spaced panels follow the peak near u ~ 1/d² and the tolerance is relative to a coarse pass.
fn time_integral<F: FnMut(f64) -> f64>(d: f64, mut phi: F) -> f64 {
    let u_max = (1.0 + 4.0 * 80.0 / (d * d)).min(1e7);
    let mut g = |u: f64| phi(1.0 / u) / (u * u);
    let panels = 8 + (u_max.ln() * 2.0) as usize;
    let edges: Vec<f64> = (0..=panels).map(|k| (u_max.ln() * k as f64 / panels as f64).exp()).collect();
    let coarse = Composite::new(10, 1);
    let scale: f64 = edges.windows(2).map(|w| coarse.integrate(w[0], w[1], &mut g).abs()).sum();
    let tol = QUAD_TOL * scale.max(1e-300) / panels as f64;
    edges.windows(2).map(|w| integrate_adaptive(w[0], w[1], tol, &mut g)).sum()
}

/// h(x, 0) and h_xx(x, 0) from the Green's representation.
pub fn representation_solve(cfg: &KernelConfig, data: &CaloricData, x: f64) -> Result<Representation> {
    if !(x.abs() < 1.0) {
        return Err(Error::Domain(format!("representation needs |x| < 1, got {x}")));
    }
    let mut warnings = Vec::new();
    for (name, a, b) in [("left", (data.initial)(-1.0), (data.left)(1.0)), ("right", (data.initial)(1.0), (data.right)(1.0))] {
        if (a - b).abs() > 1e-8 * (1.0 + a.abs()) {
            warnings.push(format!("{name} corner data incompatible: {a} vs {b}"));
        }
    }
    let mut err = None;
    let mut guard = |v: Result<f64>| match v {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            0.0
        }
    };
    let bulk = integrate_adaptive(-1.0, 1.0, QUAD_TOL, |y| guard(cfg.kernel(x, y, 1.0)) * (data.initial)(y));
    let d_right = 1.0 - x;
    let d_left = 1.0 + x;
    let right = time_integral(d_right, |t| (data.right)(t) * guard(cfg.kernel_dy(x, 1.0, t)));
    let left = time_integral(d_left, |t| (data.left)(t) * guard(cfg.kernel_dy(x, -1.0, t)));
    let bulk_xx = integrate_adaptive(-1.0, 1.0, QUAD_TOL, |y| guard(cfg.kernel_dxx(x, y, 1.0)) * (data.initial)(y));
    let right_xx = time_integral(d_right, |t| (data.right)(t) * guard(cfg.kernel_dxx_dy(x, 1.0, t)));
    let left_xx = time_integral(d_left, |t| (data.left)(t) * guard(cfg.kernel_dxx_dy(x, -1.0, t)));
    if let Some(e) = err {
        return Err(e);
    }
    Ok(Representation {
        x,
        h: bulk - right + left,
        h_xx: bulk_xx - right_xx + left_xx,
        warnings,
    })
}

/// What the second-derivative bound needs from a caloric function.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CaloricSample {
    pub h00: f64,
    pub h_xx00: f64,
    /// sup of h over {−1, 1} × [−1, 0]
    pub boundary_sup: f64,
    /// smallest value seen on the data, for the sign precondition
    pub min_value: f64,
}

impl CaloricSample {
    /// Samples the data and solves for the values at the origin.
    pub fn from_data(cfg: &KernelConfig, data: &CaloricData) -> Result<Self> {
        let rep = representation_solve(cfg, data, 0.0)?;
        let n = 1001;
        let mut sup = 0.0f64;
        let mut min = rep.h;
        for i in 0..n {
            let s = i as f64 / (n - 1) as f64;
            let (l, r) = ((data.left)(s), (data.right)(s));
            sup = sup.max(l).max(r);
            min = min.min(l).min(r).min((data.initial)(2.0 * s - 1.0));
        }
        Ok(Self { h00: rep.h, h_xx00: rep.h_xx, boundary_sup: sup, min_value: min })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundCheck {
    pub mu: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// |h_xx(0,0)| ≤ Cμ⁻² h(0,0) + C e^{−1/8μ} sup_{{−1,1}×[−1,0]} h.
pub fn second_derivative_bound_check(sample: &CaloricSample, mu: f64, c: f64) -> Result<BoundCheck> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::InvalidInput(format!("μ must lie in (0, 1), got {mu}")));
    }
    if sample.min_value < -1e-12 {
        return Err(Error::Precondition(format!("h is negative somewhere ({})", sample.min_value)));
    }
    let lhs = sample.h_xx00.abs();
    let rhs = c * sample.h00 / (mu * mu) + c * (-1.0 / (8.0 * mu)).exp() * sample.boundary_sup;
    Ok(BoundCheck { mu, lhs, rhs, pass: lhs <= rhs })
}

/// Nonnegative compatible data: a positive floor plus Gaussian bumps initially, and boundary
/// values that start from the corner values and add (1 − t)·(nonnegative quadratic in t).
pub struct RandomData {
    floor: f64,
    bumps: Vec<(f64, f64, f64)>,
    left: [f64; 3],
    right: [f64; 3],
}

impl RandomData {
    pub fn draw<R: rand::Rng>(rng: &mut R) -> Self {
        let bumps = (0..3)
            .map(|_| (rng.gen_range(0.0..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.1..0.6)))
            .collect();
        let mut coeffs = || [rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0)];
        let left = coeffs();
        let right = coeffs();
        Self { floor: rng.gen_range(0.01..1.0), bumps, left, right }
    }

    pub fn initial(&self, y: f64) -> f64 {
        self.floor + self.bumps.iter().map(|(a, c, w)| a * (-((y - c) / w).powi(2)).exp()).sum::<f64>()
    }

    fn edge(&self, coeffs: &[f64; 3], corner: f64, t: f64) -> f64 {
        // at t = 1 this is the corner value of the initial data
        corner + (1.0 - t) * (coeffs[0] + coeffs[1] * t + coeffs[2] * t * t)
    }

    pub fn left(&self, t: f64) -> f64 {
        self.edge(&self.left, self.initial(-1.0), t)
    }

    pub fn right(&self, t: f64) -> f64 {
        self.edge(&self.right, self.initial(1.0), t)
    }
}
