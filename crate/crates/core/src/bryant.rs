//! The Bryant steady soliton in the form dr²/Φ(r) + r² g_{S²}, where Φ solves
//! ΦΦ″ − ½Φ′² + r⁻²(1 − Φ)(rΦ′ + 2Φ) = 0.

use crate::error::{Error, Result};
use crate::numerics::{lstsq, Pchip};
use crate::stiff::Radau;
use serde::Serialize;
use std::sync::OnceLock;

pub const R_START: f64 = 1e-3;
pub const R_END: f64 = 1e3;
pub const STORED_POINTS: usize = 2000;
const RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct BryantSolution {
    pub b0: f64,
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
    /// rΦ′(r)
    pub r_dphi: Vec<f64>,
    /// arclength from the tip
    pub z: Vec<f64>,
    /// running value of ∫ 2K_rad dz from the tip
    pub ricci_ray: Vec<f64>,
    /// c₀ from the one-parameter tail model c r⁻² + 2c² r⁻⁴
    pub c0: f64,
    /// (c, d) from the free two-term tail fit Φr² = c + d r⁻²
    pub tail_two_term: (f64, f64),
}

/// Even Taylor coefficients of Φ at r = 0 for Φ = 1 + b₀r² + …, obtained by
/// substituting the polynomial into the ODE: Φ = 1 + b₀r² + ⅖b₀²r⁴ + (2/35)b₀³r⁶ − (4/1575)b₀⁴r⁸.
pub fn series_coefficients(b0: f64) -> [f64; 5] {
    [1.0, b0, 0.4 * b0 * b0, 2.0 / 35.0 * b0.powi(3), -4.0 / 1575.0 * b0.powi(4)]
}

fn series(b0: f64, r: f64) -> (f64, f64) {
    let c = series_coefficients(b0);
    let mut v = 0.0;
    let mut rd = 0.0;
    for (k, ck) in c.iter().enumerate() {
        let p = r.powi(2 * k as i32);
        v += ck * p;
        rd += 2.0 * k as f64 * ck * p;
    }
    (v, rd)
}

/// Residual r²·[ΦΦ″ − ½Φ′² + r⁻²(1−Φ)(rΦ′+2Φ)] written with x = log r derivatives.
pub fn ode_residual_log(phi: f64, phi_x: f64, phi_xx: f64) -> f64 {
    phi * (phi_xx - phi_x) - 0.5 * phi_x * phi_x + (1.0 - phi) * (phi_x + 2.0 * phi)
}

// y = (log Φ, rΦ′/Φ, z, ∫2K_rad dz) against x = log(r/r_start). Working with
// log Φ keeps 1 − Φ accurate near the tip (expm1) and Φ accurate far out.
fn log_form(x: f64, y: &[f64; 4]) -> [f64; 4] {
    let r = R_START * x.exp();
    let (w, q) = (y[0], y[1]);
    let sq = (0.5 * w).exp();
    [q, q - 0.5 * q * q - (-w).exp_m1() * (q + 2.0), r / sq, -sq * q / r]
}

pub fn solve_phi(b0: f64, r_end: f64) -> Result<BryantSolution> {
    if !(b0 < 0.0) {
        return Err(Error::InvalidInput(format!("b0 must be negative, got {b0}")));
    }
    if !(r_end > 10.0 * R_START) {
        return Err(Error::InvalidInput(format!("r_end = {r_end} too small")));
    }
    let (x0, x1) = (0.0, (r_end / R_START).ln());
    let (phi0, p0) = series(b0, R_START);
    // z and the ray integral over [0, r_start] from the same series
    let z0 = R_START * (1.0 - b0 * R_START * R_START / 6.0);
    let ray0 = -2.0 * b0 * R_START;
    let y0 = [phi0.ln(), p0 / phi0, z0, ray0];
    let xs: Vec<f64> = (0..STORED_POINTS).map(|i| x0 + (x1 - x0) * i as f64 / (STORED_POINTS - 1) as f64).collect();
    let ys = Radau::new(log_form, RTOL, 1e-14)
        .solve(&xs, y0)
        .map_err(|e| Error::Numerical(format!("Bryant integration failed: {e}")))?;
    let mut sol = BryantSolution {
        b0,
        r: Vec::with_capacity(xs.len()),
        phi: Vec::with_capacity(xs.len()),
        r_dphi: Vec::with_capacity(xs.len()),
        z: Vec::with_capacity(xs.len()),
        ricci_ray: Vec::with_capacity(xs.len()),
        c0: f64::NAN,
        tail_two_term: (f64::NAN, f64::NAN),
    };
    for (x, y) in xs.iter().zip(&ys) {
        let r = R_START * x.exp();
        if sol.r.last().is_some_and(|&last: &f64| r <= last) {
            continue;
        }
        let phi = y[0].exp();
        if !(y[0] < 0.0) || !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Branch(format!("Φ = {phi} at r = {r} left (0, 1)")));
        }
        sol.r.push(r);
        sol.phi.push(phi);
        sol.r_dphi.push(phi * y[1]);
        sol.z.push(y[2]);
        sol.ricci_ray.push(y[3]);
    }
    if sol.r.len() < 100 {
        return Err(Error::Numerical("too few stored samples".into()));
    }
    if sol.phi.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Branch("Φ is not strictly decreasing".into()));
    }
    fit_tail(&mut sol)?;
    Ok(sol)
}

/// Normalized soliton: tip scalar curvature 1.
pub fn normalized() -> Result<BryantSolution> {
    solve_phi(-1.0 / 6.0, R_END)
}

/// The normalized soliton, solved once per process.
pub fn shared() -> Result<&'static BryantSolution> {
    static CELL: OnceLock<Result<BryantSolution>> = OnceLock::new();
    CELL.get_or_init(normalized).as_ref().map_err(Clone::clone)
}

fn fit_tail(sol: &mut BryantSolution) -> Result<()> {
    let r_last = *sol.r.last().unwrap();
    let idx: Vec<usize> = (0..sol.r.len()).filter(|&i| sol.r[i] >= r_last / 10.0).collect();
    // one parameter: minimise Σ(c a + 2c² b − Φ)² by Newton from c = Φr² at the end
    let mut c = sol.phi[sol.r.len() - 1] * r_last * r_last;
    for _ in 0..50 {
        let (mut g, mut h) = (0.0, 0.0);
        for &i in &idx {
            let (a, b) = (sol.r[i].powi(-2), sol.r[i].powi(-4));
            let res = c * a + 2.0 * c * c * b - sol.phi[i];
            let dres = a + 4.0 * c * b;
            g += res * dres;
            h += dres * dres + res * 4.0 * b;
        }
        let step = g / h;
        c -= step;
        if step.abs() < 1e-15 * c.abs() {
            break;
        }
    }
    sol.c0 = c;
    let rows: Vec<Vec<f64>> = idx.iter().map(|&i| vec![1.0, sol.r[i].powi(-2)]).collect();
    let rhs: Vec<f64> = idx.iter().map(|&i| sol.phi[i] * sol.r[i] * sol.r[i]).collect();
    let cd = lstsq(&rows, &rhs)?;
    sol.tail_two_term = (cd[0], cd[1]);
    Ok(())
}

impl BryantSolution {
    pub fn k_orb(&self) -> Vec<f64> {
        self.r.iter().zip(&self.phi).map(|(r, p)| (1.0 - p) / (r * r)).collect()
    }

    pub fn k_rad(&self) -> Vec<f64> {
        self.r.iter().zip(&self.r_dphi).map(|(r, p)| -p / (2.0 * r * r)).collect()
    }

    pub fn scalar(&self) -> Vec<f64> {
        self.k_orb().iter().zip(self.k_rad()).map(|(o, q)| 2.0 * o + 4.0 * q).collect()
    }

    /// Scalar curvature at the tip; both sectional curvatures equal −b₀ there.
    pub fn tip_scalar_curvature(&self) -> f64 {
        -6.0 * self.b0
    }

    /// R at the first stored sample, a direct numerical value for the tip.
    pub fn first_sample_scalar(&self) -> f64 {
        self.scalar()[0]
    }

    /// Sup over interior samples of |ODE residual|, using the stored rΦ′ and a
    /// sixth-order difference of it in log r for the second derivative.
    pub fn ode_residual(&self) -> f64 {
        let n = self.r.len();
        let h = (self.r[n - 1].ln() - self.r[0].ln()) / (n - 1) as f64;
        let p = &self.r_dphi;
        let mut worst: f64 = 0.0;
        for i in 3..n - 3 {
            let pxx = (-p[i - 3] + 9.0 * p[i - 2] - 45.0 * p[i - 1] + 45.0 * p[i + 1] - 9.0 * p[i + 2] + p[i + 3])
                / (60.0 * h);
            worst = worst.max(ode_residual_log(self.phi[i], p[i], pxx).abs());
        }
        worst
    }

    /// Φ at any r > 0: the series below the first sample, the tail law beyond the last.
    pub fn phi_at(&self, r: f64) -> f64 {
        let n = self.r.len();
        if r <= self.r[0] {
            return series(self.b0, r).0;
        }
        if r >= self.r[n - 1] {
            let c = self.c0;
            return c / (r * r) + 2.0 * c * c / r.powi(4);
        }
        let h = (self.r[n - 1] / self.r[0]).ln() / (n - 1) as f64;
        let x = (r / self.r[0]).ln() / h;
        let k = (x.floor() as usize).min(n - 2);
        // cubic Hermite in log r with the stored rΦ′ as slope
        let (w0, w1) = (self.phi[k], self.phi[k + 1]);
        let (d0, d1) = (self.r_dphi[k] * h, self.r_dphi[k + 1] * h);
        let u = x - k as f64;
        let (h00, h10, h01, h11) =
            ((1.0 + 2.0 * u) * (1.0 - u).powi(2), u * (1.0 - u).powi(2), u * u * (3.0 - 2.0 * u), u * u * (u - 1.0));
        h00 * w0 + h10 * d0 + h01 * w1 + h11 * d1
    }

    /// Radius B as a function of arclength from the tip.
    pub fn aperture(&self) -> Result<Pchip> {
        let mut z = vec![0.0];
        let mut r = vec![0.0];
        z.extend_from_slice(&self.z);
        r.extend_from_slice(&self.r);
        Pchip::new(&z, &r)
    }
}

/// ∫₀^∞ Ric(γ′,γ′) ds along a ray from the tip for any b₀, with the tail
/// beyond the last sample from K_rad ≈ c₀r⁻⁴, dz ≈ r dr/√c₀.
pub fn ray_ricci_integral_any(sol: &BryantSolution) -> f64 {
    let r_last = *sol.r.last().unwrap();
    sol.ricci_ray.last().unwrap() + sol.c0.sqrt() / (r_last * r_last)
}

pub fn ray_ricci_integral(sol: &BryantSolution) -> Result<f64> {
    if (sol.tip_scalar_curvature() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "solution is not normalized (tip curvature {})",
            sol.tip_scalar_curvature()
        )));
    }
    Ok(ray_ricci_integral_any(sol))
}

/// One cap F(s) = λ⁻¹B(λs), λ = √R_tip, sampled uniformly on s ∈ [0, s_max].
#[derive(Debug, Clone, PartialEq)]
pub struct CapProfile {
    pub s: Vec<f64>,
    pub f: Vec<f64>,
}

pub fn bryant_cap_profile(sol: &BryantSolution, r_tip: f64, n_points: usize, s_max: f64) -> Result<CapProfile> {
    if !(r_tip > 0.0) {
        return Err(Error::InvalidInput(format!("R_tip must be positive, got {r_tip}")));
    }
    if n_points < 2 {
        return Err(Error::InvalidInput("need at least two points".into()));
    }
    let lam = (r_tip / sol.tip_scalar_curvature()).sqrt();
    let b = sol.aperture()?;
    if s_max * lam > *sol.z.last().unwrap() {
        return Err(Error::Domain(format!("s_max = {s_max} beyond the stored soliton")));
    }
    let mut s = Vec::with_capacity(n_points);
    let mut f = Vec::with_capacity(n_points);
    for k in 0..n_points {
        let sv = s_max * k as f64 / (n_points - 1) as f64;
        s.push(sv);
        f.push(b.eval(lam * sv) / lam);
    }
    Ok(CapProfile { s, f })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BryantConstants {
    /// R at the first stored sample
    pub tip_scalar_curvature: f64,
    pub c0: f64,
    /// d/(2c²) from the free two-term tail fit Φr² = c + d r⁻²
    pub second_tail_ratio: f64,
    pub ray_ricci_integral: f64,
    pub ode_residual: f64,
    pub pass: bool,
}

pub fn constants(sol: &BryantSolution) -> Result<BryantConstants> {
    let (c, d) = sol.tail_two_term;
    let tip = sol.first_sample_scalar();
    let ray = ray_ricci_integral(sol)?;
    let second = d / (2.0 * c * c);
    let pass = (tip - 1.0).abs() <= 1e-6 && (sol.c0 - 1.0).abs() <= 0.02 && (second - 1.0).abs() <= 0.1 && (ray - 1.0).abs() <= 0.01;
    Ok(BryantConstants {
        tip_scalar_curvature: tip,
        c0: sol.c0,
        second_tail_ratio: second,
        ray_ricci_integral: ray,
        ode_residual: sol.ode_residual(),
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_satisfies_ode_to_high_order() {
        let b0 = -0.3;
        for r in [0.05f64, 0.1] {
            let c = series_coefficients(b0);
            // Φ, rΦ′ and r²Φ″ + rΦ′ from the polynomial
            let (mut p, mut px, mut pxx) = (0.0, 0.0, 0.0);
            for (k, ck) in c.iter().enumerate() {
                let m = 2.0 * k as f64;
                let rp = r.powi(2 * k as i32);
                p += ck * rp;
                px += m * ck * rp;
                pxx += m * m * ck * rp;
            }
            // truncation leaves an O(r¹⁰) remainder
            assert!(ode_residual_log(p, px, pxx).abs() < 10.0 * r.powi(10), "{r}");
        }
    }

    #[test]
    fn constants_of_the_normalized_soliton() {
        let sol = normalized().unwrap();
        assert!(constants(&sol).unwrap().pass);
        assert!((sol.first_sample_scalar() - 1.0).abs() < 1e-6);
        assert!((sol.c0 - 1.0).abs() < 0.02, "{}", sol.c0);
        let (c, d) = sol.tail_two_term;
        assert!((d / (2.0 * c * c) - 1.0).abs() < 0.1, "{c} {d}");
        let ray = ray_ricci_integral(&sol).unwrap();
        assert!((ray - 1.0).abs() < 0.01, "{ray}");
        assert!(sol.ode_residual() < 1e-8, "{}", sol.ode_residual());
    }

    #[test]
    fn scaling_invariance() {
        let lam: f64 = 2.0;
        let a = solve_phi(-1.0 / 6.0, R_END).unwrap();
        let b = solve_phi(-lam * lam / 6.0, R_END / lam).unwrap();
        let pa = Pchip::new(&a.r.iter().map(|r| r.ln()).collect::<Vec<_>>(), &a.phi).unwrap();
        for (r, p) in b.r.iter().zip(&b.phi).step_by(97) {
            assert!((pa.eval((lam * r).ln()) - p).abs() < 1e-7 * p.max(1e-3), "{r}");
        }
        let ratio = ray_ricci_integral_any(&b) / ray_ricci_integral_any(&a);
        assert!((ratio - lam).abs() < 1e-6 * lam);
    }

    #[test]
    fn curvature_asymptotics_and_monotone_scalar() {
        let sol = normalized().unwrap();
        let n = sol.r.len();
        let (ko, kr, z) = (sol.k_orb(), sol.k_rad(), &sol.z);
        assert!((2.0 * z[n - 1] * ko[n - 1] - 1.0).abs() < 0.02);
        assert!((4.0 * z[n - 1].powi(2) * kr[n - 1] - 1.0).abs() < 0.05);
        assert!(ko.iter().chain(&kr).all(|&k| k > 0.0));
        assert!(sol.scalar().windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn cap_round_trip_through_tip_fit() {
        use crate::geometry::{tip_scalar_curvature, Profile, Side};
        let sol = normalized().unwrap();
        for r_tip in [1.0, 4.0] {
            let cap = bryant_cap_profile(&sol, r_tip, 1000, 20.0 / r_tip.sqrt()).unwrap();
            // two caps back to back give a closed test profile
            let half = *cap.s.last().unwrap();
            let mut z: Vec<f64> = cap.s.iter().map(|s| s - 2.0 * half).collect();
            let mut f = cap.f.clone();
            for k in (0..cap.s.len() - 1).rev() {
                z.push(-cap.s[k]);
                f.push(cap.f[k]);
            }
            let z: Vec<f64> = z.iter().map(|v| v + half).collect();
            let p = Profile::with_tips(z, f).unwrap();
            let r = tip_scalar_curvature(&p, Side::Left).unwrap();
            assert!((r / r_tip - 1.0).abs() < 0.01, "{r}");
        }
        let a = bryant_cap_profile(&sol, 1.0, 50, 10.0).unwrap();
        let b = bryant_cap_profile(&sol, 4.0, 50, 5.0).unwrap();
        for k in 0..50 {
            assert!((a.s[k] / 2.0 - b.s[k]).abs() < 1e-12);
            assert!((a.f[k] / 2.0 - b.f[k]).abs() < 1e-9);
        }
        let far = bryant_cap_profile(&sol, 1.0, 2, 4.0e5).unwrap();
        assert!((far.f[1] / (2.0 * 4.0e5f64).sqrt() - 1.0).abs() < 0.01);
    }

    #[test]
    fn positive_branch_rejected() {
        assert!(solve_phi(0.1, R_END).is_err());
    }
}
