//! Composite oval: the intermediate-region expansion glued to scaled soliton caps.
//!
//! The gluing is done on u = F_z² as a function of the radius r, where the cap is
//! u = (1+κ)Φ(λr) − κ and the intermediate profile F² = −2t − (z²+2t)/(2 log(−t))
//! is u = κ(A/r² − 1), with κ = 1/(2 log(−t)), λ² = log(−t)/(−t), A = −2t(1+κ).
//!
//! Two gluings are offered. `Window` blends the two with a quintic step over a band of
//! ρ = λr. `Uniform` uses u = (1+κ)Φ(ρ) − κ − κ(ρ²Φ(ρ) − 1)ρ²/ρ_max², which is the cap up
//! to O(κ²) where ρ = O(1), the intermediate piece up to the Bryant tail correction
//! where ρ ≫ 1, and vanishes at r_max = √A.

use crate::bryant::{self, BryantSolution};
use crate::error::{Error, Result};
use crate::geometry::Profile;
use crate::numerics::{cumtrapz, smoothstep5, Pchip};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gluing {
    Window,
    Uniform,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AnsatzParams {
    pub gluing: Gluing,
    /// Blend window in units of the neck radius measured in cap units.
    pub blend_inner: f64,
    pub blend_outer: f64,
    /// Parabolic rescaling F ↦ mF(z/m).
    pub scale: f64,
    pub points: usize,
}

impl Default for AnsatzParams {
    fn default() -> Self {
        Self { gluing: Gluing::Window, blend_inner: 0.2, blend_outer: 0.5, scale: 1.0, points: 8001 }
    }
}

#[derive(Debug, Clone)]
pub struct OvalAnsatz {
    pub t: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub r_max: f64,
    pub d_tip: f64,
    /// Arclength from the tip and the matching radius, tip to equator.
    pub s: Vec<f64>,
    pub r: Vec<f64>,
}

struct Slope<'a> {
    sol: &'a BryantSolution,
    gluing: Gluing,
    rho_max: f64,
    kappa: f64,
    lambda: f64,
    a: f64,
    rho1: f64,
    rho2: f64,
}

impl Slope<'_> {
    fn u(&self, r: f64) -> f64 {
        let rho = self.lambda * r;
        if self.gluing == Gluing::Uniform {
            let phi = self.sol.phi_at(rho);
            let q = rho / self.rho_max;
            return (1.0 + self.kappa) * phi - self.kappa - self.kappa * (rho * rho * phi - 1.0) * q * q;
        }
        let inter = self.kappa * (self.a / (r * r) - 1.0);
        if rho >= self.rho2 {
            return inter;
        }
        let cap = (1.0 + self.kappa) * self.sol.phi_at(rho) - self.kappa;
        if rho <= self.rho1 {
            return cap;
        }
        let w = 1.0 - smoothstep5((rho - self.rho1) / (self.rho2 - self.rho1));
        w * cap + (1.0 - w) * inter
    }
}

pub fn oval_ansatz(t: f64, params: &AnsatzParams) -> Result<OvalAnsatz> {
    if !(t < -std::f64::consts::E) {
        return Err(Error::InvalidInput(format!("ansatz needs log(−t) > 1, got t = {t}")));
    }
    if !(0.0 < params.blend_inner && params.blend_inner < params.blend_outer && params.blend_outer < 1.0) {
        return Err(Error::Config("blend window must satisfy 0 < inner < outer < 1".into()));
    }
    if params.points < 101 || !(params.scale > 0.0) {
        return Err(Error::Config("ansatz needs at least 101 points and a positive scale".into()));
    }
    let sol = bryant::shared()?;
    let log_t = (-t).ln();
    let kappa = 0.5 / log_t;
    let lambda = (log_t / -t).sqrt();
    let a = -2.0 * t * (1.0 + kappa);
    let r_max = a.sqrt();
    let rho_max = lambda * r_max;
    let slope = Slope {
        sol,
        gluing: params.gluing,
        rho_max,
        kappa,
        lambda,
        a,
        rho1: params.blend_inner * rho_max,
        rho2: params.blend_outer * rho_max,
    };
    // r = r_max(1 − (1−p)²) removes the square-root singularity at the equator.
    let n = params.points;
    let p: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let mut r = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    let du_end = match params.gluing {
        Gluing::Window => 2.0 * kappa / r_max,
        Gluing::Uniform => lambda * (1.0 + kappa) * (4.0 * sol.phi_at(rho_max) / rho_max - 2.0 / rho_max.powi(3)),
    };
    if !(du_end > 0.0) {
        return Err(Error::Construction(format!("F_z² does not vanish linearly at r_max (slope {du_end})")));
    }
    for &pi in &p {
        let q = 1.0 - pi;
        let ri = r_max * (1.0 - q * q);
        r.push(ri);
        if q == 0.0 {
            g.push(2.0 * (r_max / du_end).sqrt());
            continue;
        }
        let u = slope.u(ri);
        if !(u > 0.0) || !u.is_finite() {
            return Err(Error::Construction(format!("F_z² = {u} at r = {ri} inside the oval")));
        }
        g.push(2.0 * r_max * q / u.sqrt());
    }
    let s = cumtrapz(&p, &g);
    let m = params.scale;
    Ok(OvalAnsatz {
        t,
        kappa,
        lambda,
        r_max: m * r_max,
        d_tip: m * s[n - 1],
        s: s.iter().map(|v| m * v).collect(),
        r: r.iter().map(|v| m * v).collect(),
    })
}

impl OvalAnsatz {
    pub fn profile(&self) -> Result<Profile> {
        let d = self.d_tip;
        let n = self.s.len();
        let mut z: Vec<f64> = self.s.iter().map(|s| s - d).collect();
        let mut f = self.r.clone();
        for i in (0..n - 1).rev() {
            z.push(d - self.s[i]);
            f.push(self.r[i]);
        }
        Profile::with_tips(z, f)
    }

    pub fn interpolant(&self) -> Result<Pchip> {
        let p = self.profile()?;
        Pchip::new(&p.z, &p.f)
    }
}

/// The intermediate-region expansion F² = −2t − (z²+2t)/(2 log(−t)), clipped at zero.
pub fn intermediate_profile(t: f64, z: f64) -> f64 {
    let log_t = (-t).ln();
    (-2.0 * t - (z * z + 2.0 * t) / (2.0 * log_t)).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{tip_scalar_curvature, Side};

    #[test]
    fn neck_matches_the_expansion() {
        let t = -(10f64).exp();
        let ans = oval_ansatz(t, &AnsatzParams::default()).unwrap();
        let lt = (-t).ln();
        let expect = (-2.0 * t * (1.0 + 0.5 / lt)).sqrt();
        assert!((ans.r_max / expect - 1.0).abs() < 1e-12);
        let interp = ans.interpolant().unwrap();
        let z = 0.5 * (-t).sqrt();
        let rel = interp.eval(z) / intermediate_profile(t, z) - 1.0;
        assert!(rel.abs() < 1e-4, "{rel}");
    }

    #[test]
    fn tips_carry_the_cap_curvature() {
        let t = -(10f64).exp();
        let ans = oval_ansatz(t, &AnsatzParams::default()).unwrap();
        let p = ans.profile().unwrap();
        let r = tip_scalar_curvature(&p, Side::Right).unwrap();
        let expect = (1.0 + ans.kappa) * ans.lambda * ans.lambda;
        assert!((r / expect - 1.0).abs() < 0.02, "{r} vs {expect}");
        let dl = tip_scalar_curvature(&p, Side::Left).unwrap();
        assert!((dl / r - 1.0).abs() < 1e-9);
    }

    #[test]
    fn scale_is_parabolic() {
        let t = -(10f64).exp();
        let base = oval_ansatz(t, &AnsatzParams::default()).unwrap();
        let big = oval_ansatz(t, &AnsatzParams { scale: 1.1, ..Default::default() }).unwrap();
        assert!((big.d_tip / base.d_tip - 1.1).abs() < 1e-12);
        assert!((big.r_max / base.r_max - 1.1).abs() < 1e-12);
    }
}
