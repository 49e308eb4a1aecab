//! Rotationally symmetric metrics dz² + F(z)² g_{S²} described by the profile F.

use crate::error::{Error, Result};
use crate::numerics::d1_d2;
use serde::{Deserialize, Serialize};

pub const TOL_SLOPE: f64 = 1e-6;
pub const TOL_CONCAVITY: f64 = 1e-8;

/// How the sampled segment ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ends {
    /// Smooth caps: F vanishes at both endpoints with |F_z| = 1.
    Tips,
    /// A piece of an unbounded neck; the ends are treated as mirror planes.
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub z: Vec<f64>,
    pub f: Vec<f64>,
    pub d_tip_left: f64,
    pub d_tip_right: f64,
    pub ends: Ends,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    pub k_orb: Vec<f64>,
    pub k_rad: Vec<f64>,
    pub r: Vec<f64>,
}

/// Worst violations of the slope and concavity conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeReport {
    pub max_slope: f64,
    pub max_scaled_second_difference: f64,
}

impl ShapeReport {
    pub fn slope_ok(&self) -> bool {
        self.max_slope <= 1.0 + TOL_SLOPE
    }

    pub fn concave(&self) -> bool {
        self.max_scaled_second_difference <= TOL_CONCAVITY
    }
}

impl Profile {
    /// Capped profile; `z` must run from the left tip to the right tip.
    pub fn with_tips(z: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        check_grid(&z, &f)?;
        if f[0] != 0.0 || f[f.len() - 1] != 0.0 {
            return Err(Error::InvalidInput("capped profile must vanish at both endpoints".into()));
        }
        if !(z[0] < 0.0 && z[z.len() - 1] > 0.0) {
            return Err(Error::InvalidInput("reference point z = 0 must lie strictly inside".into()));
        }
        let (dl, dr) = (-z[0], z[z.len() - 1]);
        Ok(Self { z, f, d_tip_left: dl, d_tip_right: dr, ends: Ends::Tips })
    }

    /// Neck segment without caps (used for the exact cylinder).
    pub fn open(z: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        check_grid(&z, &f)?;
        if f.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidInput("open profile must be positive".into()));
        }
        let (dl, dr) = (-z[0], z[z.len() - 1]);
        Ok(Self { z, f, d_tip_left: dl, d_tip_right: dr, ends: Ends::Open })
    }

    /// Round sphere of radius `r` with the reference point on the equator.
    pub fn sphere(r: f64, n: usize) -> Result<Self> {
        let half = 0.5 * std::f64::consts::PI * r;
        let z: Vec<f64> = (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect();
        let mut f: Vec<f64> = z.iter().map(|&v| r * (v / r).cos()).collect();
        f[0] = 0.0;
        f[n - 1] = 0.0;
        Self::with_tips(z, f)
    }

    pub fn cylinder(radius: f64, half_length: f64, n: usize) -> Result<Self> {
        let z: Vec<f64> =
            (0..n).map(|i| -half_length + 2.0 * half_length * i as f64 / (n - 1) as f64).collect();
        Self::open(z, vec![radius; n])
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        self.f.iter().cloned().fold(0.0, f64::max)
    }

    /// r_max refined by a parabola through the largest sample and its neighbours.
    pub fn r_max_refined(&self) -> f64 {
        let (i, &fm) = self
            .f
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty profile");
        if i == 0 || i + 1 == self.len() {
            return fm;
        }
        let (z0, z1, z2) = (self.z[i - 1], self.z[i], self.z[i + 1]);
        let (f0, f1, f2) = (self.f[i - 1], fm, self.f[i + 1]);
        let (d1, d2) = d1_d2(z0, z1, z2, f0, f1, f2);
        if d2 >= 0.0 {
            return fm;
        }
        let dz = (-d1 / d2).clamp(z0 - z1, z2 - z1);
        fm + d1 * dz + 0.5 * d2 * dz * dz
    }

    /// F_z and F_zz at every node; tips get the one-sided limits of the cap model.
    pub fn derivatives(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let (z, f) = (&self.z, &self.f);
        let mut fz = vec![0.0; n];
        let mut fzz = vec![0.0; n];
        for i in 1..n - 1 {
            let (a, b) = d1_d2(z[i - 1], z[i], z[i + 1], f[i - 1], f[i], f[i + 1]);
            fz[i] = a;
            fzz[i] = b;
        }
        match self.ends {
            Ends::Open => {
                for (i, j) in [(0, 1), (n - 1, n - 2)] {
                    let h = (z[j] - z[i]).abs();
                    fz[i] = 0.0;
                    fzz[i] = 2.0 * (f[j] - f[i]) / (h * h);
                }
            }
            Ends::Tips => {
                fz[0] = 1.0;
                fz[n - 1] = -1.0;
                fzz[0] = 0.0;
                fzz[n - 1] = 0.0;
            }
        }
        (fz, fzz)
    }

    pub fn shape_report(&self) -> ShapeReport {
        let n = self.len();
        let mut max_slope: f64 = 0.0;
        for i in 0..n - 1 {
            max_slope = max_slope.max(((self.f[i + 1] - self.f[i]) / (self.z[i + 1] - self.z[i])).abs());
        }
        let scale = self.r_max().max(f64::MIN_POSITIVE);
        let mut worst = f64::NEG_INFINITY;
        for i in 1..n - 1 {
            let (_, d2) = d1_d2(self.z[i - 1], self.z[i], self.z[i + 1], self.f[i - 1], self.f[i], self.f[i + 1]);
            let h = 0.5 * (self.z[i + 1] - self.z[i - 1]);
            worst = worst.max(d2 * h * h / scale);
        }
        ShapeReport { max_slope, max_scaled_second_difference: worst }
    }

    /// Linear interpolation of F at `z`.
    pub fn value_at(&self, z: f64) -> Result<f64> {
        if z < self.z[0] || z > self.z[self.len() - 1] {
            return Err(Error::Domain(format!("z = {z} outside the profile")));
        }
        let k = self.z.partition_point(|&v| v <= z).clamp(1, self.len() - 1);
        let w = (z - self.z[k - 1]) / (self.z[k] - self.z[k - 1]);
        Ok(self.f[k - 1] + w * (self.f[k] - self.f[k - 1]))
    }
}

fn check_grid(z: &[f64], f: &[f64]) -> Result<()> {
    if z.len() < 5 || z.len() != f.len() {
        return Err(Error::InvalidInput(format!(
            "degenerate grid: {} abscissae, {} values (need >= 5)",
            z.len(),
            f.len()
        )));
    }
    if z.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("z grid must increase strictly".into()));
    }
    if f.iter().any(|v| !v.is_finite() || *v < 0.0) || z.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("profile values must be finite and nonnegative".into()));
    }
    Ok(())
}

/// K_orb = (1 − F_z²)/F², K_rad = −F_zz/F and R = 2K_orb + 4K_rad.
/// Tip values use the fitted cap coefficient (both curvatures equal −6a₃ there).
pub fn curvatures(p: &Profile) -> Result<CurvatureField> {
    if p.len() < 5 {
        return Err(Error::InvalidInput("need at least 5 grid points".into()));
    }
    let n = p.len();
    let (fz, fzz) = p.derivatives();
    let mut k_orb = vec![0.0; n];
    let mut k_rad = vec![0.0; n];
    for i in 0..n {
        if p.f[i] > 0.0 {
            k_orb[i] = (1.0 - fz[i] * fz[i]) / (p.f[i] * p.f[i]);
            k_rad[i] = -fzz[i] / p.f[i];
        }
    }
    if p.ends == Ends::Tips {
        for (side, idx) in [(Side::Left, 0), (Side::Right, n - 1)] {
            let k = match tip_fit(p, side) {
                Ok(fit) => -6.0 * fit.a3,
                Err(_) => {
                    let j = if idx == 0 { 1 } else { n - 2 };
                    k_rad[j]
                }
            };
            k_orb[idx] = k;
            k_rad[idx] = k;
        }
    }
    let r = k_orb.iter().zip(&k_rad).map(|(o, q)| 2.0 * o + 4.0 * q).collect();
    Ok(CurvatureField { k_orb, k_rad, r })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TipFit {
    pub a3: f64,
    pub points: usize,
    pub window: f64,
    pub relative_residual: f64,
}

/// Points with arclength from the tip inside the fitting window.
fn tip_window(p: &Profile, side: Side) -> Vec<(f64, f64)> {
    let n = p.len();
    let half = match side {
        Side::Left => p.d_tip_left,
        Side::Right => p.d_tip_right,
    };
    let limit = 0.05 * half;
    let mut pts = Vec::new();
    for k in 1..n {
        let i = match side {
            Side::Left => k,
            Side::Right => n - 1 - k,
        };
        let s = match side {
            Side::Left => p.z[i] - p.z[0],
            Side::Right => p.z[n - 1] - p.z[i],
        };
        if pts.len() >= 16 || s > limit {
            break;
        }
        pts.push((s, p.f[i]));
    }
    pts
}

pub fn tip_fit(p: &Profile, side: Side) -> Result<TipFit> {
    if p.ends != Ends::Tips {
        return Err(Error::TipNotResolved { side: side.name(), detail: "profile has no caps".into() });
    }
    let pts = tip_window(p, side);
    if pts.len() < 8 {
        return Err(Error::TipNotResolved {
            side: side.name(),
            detail: format!("only {} grid points in the fitting window", pts.len()),
        });
    }
    let num: f64 = pts.iter().map(|&(s, f)| (f - s) * s.powi(3)).sum();
    let den: f64 = pts.iter().map(|&(s, _)| s.powi(6)).sum();
    let a3 = num / den;
    let resid: f64 = pts.iter().map(|&(s, f)| (f - s - a3 * s.powi(3)).powi(2)).sum();
    let signal: f64 = pts.iter().map(|&(s, _)| (a3 * s.powi(3)).powi(2)).sum();
    let relative_residual = if signal > 0.0 { (resid / signal).sqrt() } else { f64::INFINITY };
    let window = pts.last().map(|q| q.0).unwrap_or(0.0);
    if !(relative_residual <= 0.5) {
        return Err(Error::TipNotResolved {
            side: side.name(),
            detail: format!("cubic model residual {relative_residual:.3e} relative to signal"),
        });
    }
    Ok(TipFit { a3, points: pts.len(), window, relative_residual })
}

/// Scalar curvature at a tip from the cap model F = s + a₃s³, R = −36a₃.
pub fn tip_scalar_curvature(p: &Profile, side: Side) -> Result<f64> {
    tip_fit(p, side).map(|fit| -36.0 * fit.a3)
}

/// Scale-free C² distance of F/F(z0) to 1 over |z − z0| ≤ window.
pub fn neck_quality(p: &Profile, z0: f64, window: f64) -> Result<f64> {
    let n = p.len();
    if z0 - window < p.z[0] || z0 + window > p.z[n - 1] {
        return Err(Error::Domain(format!("window [{}, {}] leaves the profile", z0 - window, z0 + window)));
    }
    let f0 = p.value_at(z0)?;
    if f0 <= 0.0 {
        return Err(Error::Domain("F(z0) must be positive".into()));
    }
    let (fz, fzz) = p.derivatives();
    let mut eps: f64 = 0.0;
    for i in 0..n {
        if (p.z[i] - z0).abs() <= window {
            eps = eps.max((p.f[i] / f0 - 1.0).abs() + fz[i].abs() + f0 * fzz[i].abs());
        }
    }
    Ok(eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cylinder_curvatures() {
        let p = Profile::cylinder(2f64.sqrt(), 5.0, 41).unwrap();
        let c = curvatures(&p).unwrap();
        for i in 0..p.len() {
            assert!((c.k_orb[i] - 0.5).abs() < 1e-14);
            assert!(c.k_rad[i].abs() < 1e-14);
            assert!((c.r[i] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_between_fields() {
        let p = Profile::sphere(3.0, 101).unwrap();
        let c = curvatures(&p).unwrap();
        for i in 0..p.len() {
            assert_eq!(c.r[i], 2.0 * c.k_orb[i] + 4.0 * c.k_rad[i]);
        }
    }

    #[test]
    fn sphere_tip_curvature() {
        let r = 2.0;
        let p = Profile::sphere(r, 2001).unwrap();
        for side in [Side::Left, Side::Right] {
            let rt = tip_scalar_curvature(&p, side).unwrap();
            assert!((rt - 6.0 / (r * r)).abs() < 1e-3 * 6.0 / (r * r), "{rt}");
        }
    }

    #[test]
    fn too_few_tip_points_is_an_error() {
        let p = Profile::sphere(1.0, 41).unwrap();
        assert!(matches!(tip_scalar_curvature(&p, Side::Left), Err(Error::TipNotResolved { .. })));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Profile::with_tips(vec![-1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]).is_err());
        assert!(Profile::with_tips(vec![-2.0, -1.0, 1.0, 0.5, 2.0], vec![0.0, 1.0, 1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn neck_quality_zero_on_cylinder_and_scale_free() {
        let p = Profile::cylinder(3.0, 10.0, 101).unwrap();
        assert!(neck_quality(&p, 0.0, 4.0).unwrap() < 1e-12);
        let s = Profile::sphere(5.0, 801).unwrap();
        let e1 = neck_quality(&s, 0.0, 2.5).unwrap();
        let z2: Vec<f64> = s.z.iter().map(|v| 3.0 * v).collect();
        let f2: Vec<f64> = s.f.iter().map(|v| 3.0 * v).collect();
        let s2 = Profile::with_tips(z2, f2).unwrap();
        let e2 = neck_quality(&s2, 0.0, 7.5).unwrap();
        assert!((e1 - e2).abs() < 1e-12 * e1.max(1.0));
        assert!(neck_quality(&s, 0.0, 100.0).is_err());
    }
}
