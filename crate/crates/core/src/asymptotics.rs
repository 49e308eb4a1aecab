//! Trajectories measured against the parabolic, intermediate and tip expansions of the oval.
//!
//! Every law is reported as a dimensionless ratio; the asymptotic limits themselves are out
//! of reach at moderate log(−t), so the checks compare ratios at two times.

use crate::ansatz::{oval_ansatz, AnsatzParams};
use crate::bryant;
use crate::error::{Error, Result};
use crate::flow::{self, HistoryRecord};
use crate::geometry::{tip_scalar_curvature, Ends, Profile, Side};
use crate::numerics::Pchip;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegionParams {
    /// Parabolic region |z| ≤ L√(−t).
    pub l: f64,
    /// Intermediate level set F = θ√(−2t).
    pub theta: f64,
    pub m: f64,
}

impl Default for RegionParams {
    fn default() -> Self {
        Self { l: 3.0, theta: 0.3, m: 10.0 }
    }
}

fn log_t(t: f64) -> Result<f64> {
    if !(t < -1.0) {
        return Err(Error::InvalidInput(format!("needs t < −1, got {t}")));
    }
    Ok((-t).ln())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ParabolicFit {
    pub coefficient: f64,
    /// sup |F² + 2t − c·x| in units of (−t)/log(−t), with x = −(z²+2t)/(2 log(−t)).
    pub residual: f64,
    /// Same with c = 1.
    pub expansion_residual: f64,
    pub points: usize,
}

pub fn parabolic_fit(p: &Profile, t: f64, l: f64) -> Result<ParabolicFit> {
    let lt = log_t(t)?;
    if lt < 5.0 {
        return Err(Error::InvalidInput(format!("parabolic fit needs log(−t) ≥ 5, got {lt}")));
    }
    let half = l * (-t).sqrt();
    if p.z[0] > -half || p.z[p.len() - 1] < half {
        return Err(Error::Domain(format!("|z| ≤ {half} leaves the profile")));
    }
    let pts: Vec<(f64, f64)> = p
        .z
        .iter()
        .zip(&p.f)
        .filter(|(z, _)| z.abs() <= half)
        .map(|(z, f)| (-(z * z + 2.0 * t) / (2.0 * lt), f * f + 2.0 * t))
        .collect();
    if pts.len() < 50 {
        return Err(Error::Domain(format!("parabolic region holds only {} grid points", pts.len())));
    }
    let num: f64 = pts.iter().map(|(x, y)| x * y).sum();
    let den: f64 = pts.iter().map(|(x, _)| x * x).sum();
    let c = num / den;
    let unit = -t / lt;
    let residual = pts.iter().map(|(x, y)| (y - c * x).abs()).fold(0.0, f64::max) / unit;
    let expansion_residual = pts.iter().map(|(x, y)| (y - x).abs()).fold(0.0, f64::max) / unit;
    Ok(ParabolicFit { coefficient: c, residual, expansion_residual, points: pts.len() })
}

/// 2√(1−θ²)√((−t) log(−t)), where F² = −2t − z²/(2 log(−t)) meets F = θ√(−2t).
pub fn predicted_width(t: f64, theta: f64) -> f64 {
    2.0 * (1.0 - theta * theta).sqrt() * (-t * (-t).ln()).sqrt()
}

/// sup |F² + 2t + z²/(2 log(−t))|/(−t) over |z| ≤ `half` ∩ profile.
pub fn intermediate_deviation(p: &Profile, t: f64, half: f64) -> Result<f64> {
    let lt = log_t(t)?;
    Ok(p.z
        .iter()
        .zip(&p.f)
        .filter(|(z, _)| z.abs() <= half)
        .map(|(z, f)| (f * f + 2.0 * t + z * z / (2.0 * lt)).abs() / -t)
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IntermediateFit {
    pub theta: f64,
    pub deviation: f64,
    pub predicted_width: f64,
    pub width_left: f64,
    pub width_right: f64,
    pub ratio_left: f64,
    pub ratio_right: f64,
}

/// First crossing of F = level walking out from z = 0 on one side, with F² linear in z²
/// across the bracketing cell.
fn level_crossing(p: &Profile, level: f64, side: Side) -> Result<f64> {
    let n = p.len();
    let c = p.z.partition_point(|&z| z < 0.0).min(n - 1);
    let idx: Vec<usize> = match side {
        Side::Right => (c..n).collect(),
        Side::Left => (0..=c).rev().collect(),
    };
    if p.f[idx[0]] <= level {
        return Err(Error::Domain("profile is below the level set at the centre".into()));
    }
    for w in idx.windows(2) {
        let (a, b) = (w[0], w[1]);
        if p.f[b] <= level {
            let (fa, fb, l2) = (p.f[a] * p.f[a], p.f[b] * p.f[b], level * level);
            let (za, zb) = (p.z[a] * p.z[a], p.z[b] * p.z[b]);
            return Ok((za + (fa - l2) / (fa - fb) * (zb - za)).sqrt());
        }
    }
    Err(Error::Domain(format!("level set F = {level} not bracketed on the {} side", side.name())))
}

pub fn intermediate_fit(p: &Profile, t: f64, theta: f64) -> Result<IntermediateFit> {
    if !(theta > 0.0 && theta < 0.5) {
        return Err(Error::InvalidInput(format!("θ must lie in (0, 1/2), got {theta}")));
    }
    log_t(t)?;
    let level = theta * (-2.0 * t).sqrt();
    let width_left = level_crossing(p, level, Side::Left)?;
    let width_right = level_crossing(p, level, Side::Right)?;
    let w = predicted_width(t, theta);
    Ok(IntermediateFit {
        theta,
        deviation: intermediate_deviation(p, t, w)?,
        predicted_width: w,
        width_left,
        width_right,
        ratio_left: width_left / w,
        ratio_right: width_right / w,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TipRatios {
    /// d_tip / (2√((−t) log(−t)))
    pub distance: f64,
    /// R_tip (−t)/log(−t)
    pub curvature: f64,
    /// −(d/dt) d_tip / √R_tip, absent with fewer than three records
    pub velocity: Option<f64>,
    /// sup |λF(s/λ) − B(s)| over s ≤ 4 with λ = √R_tip and B the unit Bryant profile
    pub bryant_closeness: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TipReport {
    pub t: f64,
    pub left: Option<TipRatios>,
    pub right: Option<TipRatios>,
    /// r_max/√(−2t); far above 1 the oval laws do not apply (√2 for the round sphere)
    pub neck_ratio: f64,
    pub applicable: bool,
    pub partial: bool,
    pub notes: Vec<String>,
}

const CAP_WINDOW: f64 = 4.0;

fn bryant_closeness(p: &Profile, side: Side, r_tip: f64) -> Result<f64> {
    let sol = bryant::shared()?;
    let b = Pchip::new(&sol.z, &sol.r)?;
    let lam = r_tip.sqrt();
    let n = 200;
    let mut worst = 0.0f64;
    for k in 1..=n {
        let s = CAP_WINDOW * k as f64 / n as f64;
        let z = match side {
            Side::Left => -p.d_tip_left + s / lam,
            Side::Right => p.d_tip_right - s / lam,
        };
        worst = worst.max((lam * p.value_at(z)? - b.eval(s)).abs());
    }
    Ok(worst)
}

/// Tip ratios at the last history record, measured on `p`.
pub fn tip_report(p: &Profile, history: &[HistoryRecord]) -> Result<TipReport> {
    let last = history.last().ok_or_else(|| Error::InvalidInput("empty history".into()))?;
    let t = last.t;
    let lt = log_t(t)?;
    let neck_ratio = p.r_max_refined() / (-2.0 * t).sqrt();
    let mut notes = Vec::new();
    let applicable = p.ends == Ends::Tips && neck_ratio < 1.2;
    if !applicable {
        notes.push(format!("r_max/√(−2t) = {neck_ratio:.4}: not an oval in its neck regime"));
        return Ok(TipReport { t, left: None, right: None, neck_ratio, applicable, partial: true, notes });
    }
    let partial = history.len() < 3;
    if partial {
        notes.push("fewer than three records: no velocity ratio".into());
    }
    let side_ratios = |side: Side| -> Result<TipRatios> {
        let (d, r, dt_series): (f64, f64, Vec<(f64, f64)>) = match side {
            Side::Left => (last.d_tip_left, last.r_tip_left, history.iter().map(|h| (h.t, h.d_tip_left)).collect()),
            Side::Right => (last.d_tip_right, last.r_tip_right, history.iter().map(|h| (h.t, h.d_tip_right)).collect()),
        };
        let velocity = if dt_series.len() >= 3 {
            // derivative of the parabola through the last three records, at the last one
            let k = dt_series.len();
            let ((t0, d0), (t1, d1), (t2, d2)) = (dt_series[k - 3], dt_series[k - 2], dt_series[k - 1]);
            let v = d0 * (t2 - t1) / ((t0 - t1) * (t0 - t2)) + d1 * (t2 - t0) / ((t1 - t0) * (t1 - t2))
                + d2 * (2.0 * t2 - t0 - t1) / ((t2 - t0) * (t2 - t1));
            Some(-v / r.sqrt())
        } else {
            None
        };
        Ok(TipRatios {
            distance: d / (2.0 * (-t * lt).sqrt()),
            curvature: r * -t / lt,
            velocity,
            bryant_closeness: bryant_closeness(p, side, r)?,
        })
    };
    let left = side_ratios(Side::Left).map_err(|e| notes.push(format!("left: {e}"))).ok();
    let right = side_ratios(Side::Right).map_err(|e| notes.push(format!("right: {e}"))).ok();
    Ok(TipReport { t, left, right, neck_ratio, applicable, partial: partial || left.is_none() || right.is_none(), notes })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StarCheck {
    pub alpha: f64,
    /// sup of (r_max/√(−2t) − 1)(−t)^α over the history
    pub sup: f64,
    /// slope of log of that quantity against log(−t)
    pub growth: f64,
    pub spans_decade: bool,
    pub pass: bool,
}

/// Growth slopes below this count as bounded.
pub const STAR_GROWTH_TOL: f64 = 1e-6;

/// r_max ≤ √(−2t)(1 + C(−t)^{−α}): passes when the scaled excess stays below `bound`
/// and does not grow as −t increases.
pub fn check_star(history: &[HistoryRecord], alpha: f64, bound: f64) -> Result<StarCheck> {
    if history.len() < 2 {
        return Err(Error::InvalidInput("(⋆) check needs at least two records".into()));
    }
    let q: Vec<(f64, f64)> = history
        .iter()
        .map(|h| ((-h.t).ln(), (h.r_max / (-2.0 * h.t).sqrt() - 1.0) * (-h.t).powf(alpha)))
        .collect();
    let sup = q.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let pos: Vec<(f64, f64)> = q.iter().filter(|v| v.1 > 0.0).map(|&(x, y)| (x, y.ln())).collect();
    let growth = if pos.len() >= 2 {
        let mx = pos.iter().map(|v| v.0).sum::<f64>() / pos.len() as f64;
        let my = pos.iter().map(|v| v.1).sum::<f64>() / pos.len() as f64;
        let sxy: f64 = pos.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = pos.iter().map(|(x, _)| (x - mx).powi(2)).sum();
        if sxx > 0.0 {
            sxy / sxx
        } else {
            0.0
        }
    } else {
        0.0
    };
    let (lo, hi) = q.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v.0), b.max(v.0)));
    Ok(StarCheck {
        alpha,
        sup,
        growth,
        spans_decade: hi - lo >= 10f64.ln(),
        pass: sup <= bound && growth <= STAR_GROWTH_TOL,
    })
}

/// max F_z² (−t)^{α/(1−α)} over F ≥ √(−t).
pub fn star_gradient_bound(p: &Profile, t: f64, star: &StarCheck) -> Result<f64> {
    if !star.pass {
        return Err(Error::Inapplicable(format!("(⋆_{}) is not established", star.alpha)));
    }
    let (fz, _) = p.derivatives();
    let floor = (-t).sqrt();
    let w = (-t).powf(star.alpha / (1.0 - star.alpha));
    Ok(p.f.iter().zip(&fz).filter(|(f, _)| **f >= floor).map(|(_, d)| d * d * w).fold(0.0, f64::max))
}

/// α ↦ min{(1 + α²/200)α, 1}.
pub fn bootstrap_step(alpha: f64) -> f64 {
    ((1.0 + alpha * alpha / 200.0) * alpha).min(1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct BootstrapOrbit {
    pub start: f64,
    pub steps: usize,
    pub reached_one: bool,
    /// every 1000th iterate and the last one
    pub samples: Vec<(usize, f64)>,
}

pub fn bootstrap_orbit(start: f64, max_steps: usize) -> BootstrapOrbit {
    let mut a = start;
    let mut samples = vec![(0, a)];
    let mut k = 0;
    while a < 1.0 && k < max_steps {
        a = bootstrap_step(a);
        k += 1;
        if k % 1000 == 0 {
            samples.push((k, a));
        }
    }
    if samples.last().map(|s| s.0) != Some(k) {
        samples.push((k, a));
    }
    BootstrapOrbit { start, steps: k, reached_one: a >= 1.0, samples }
}

/// diam / (−t)^{1/(2(1−α))}
pub fn diameter_ratio(p: &Profile, t: f64, alpha: f64) -> f64 {
    (p.d_tip_left + p.d_tip_right) / (-t).powf(0.5 / (1.0 - alpha))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExpansionResidual {
    pub t: f64,
    /// sup |F_t − rhs| over |z| ≤ L√(−t), times √(−t) log(−t)
    pub parabolic: f64,
    /// sup over L√(−t) < |z| ≤ 2√(1−θ²)√((−t)log(−t)), times √(−t)
    pub intermediate: f64,
}

/// Residual of a time-dependent family of profiles under the flow, with F_t by central
/// differences in t at fixed z.
pub fn expansion_residual(build: impl Fn(f64) -> Result<Profile>, t: f64, regions: &RegionParams) -> Result<ExpansionResidual> {
    let lt = log_t(t)?;
    let p = build(t)?;
    let h = 1e-4 * -t;
    let (plus, minus) = (build(t + h)?, build(t - h)?);
    let (ip, im) = (Pchip::new(&plus.z, &plus.f)?, Pchip::new(&minus.z, &minus.f)?);
    let rhs = flow::rhs(&p)?;
    let par = regions.l * (-t).sqrt();
    let inter = predicted_width(t, regions.theta);
    let (mut rp, mut ri) = (0.0f64, 0.0f64);
    let n = p.len();
    for i in 1..n - 1 {
        let z = p.z[i];
        if z.abs() > inter || z <= plus.z[0].max(minus.z[0]) || z >= plus.z[plus.len() - 1].min(minus.z[minus.len() - 1]) {
            continue;
        }
        let ft = (ip.eval(z) - im.eval(z)) / (2.0 * h);
        let r = (ft - rhs[i]).abs();
        if z.abs() <= par {
            rp = rp.max(r);
        } else {
            ri = ri.max(r);
        }
    }
    Ok(ExpansionResidual { t, parabolic: rp * (-t).sqrt() * lt, intermediate: ri * (-t).sqrt() })
}

/// Residual of the composite oval under the flow.
pub fn ansatz_residual(t: f64, regions: &RegionParams) -> Result<ExpansionResidual> {
    ansatz_residual_with(t, &AnsatzParams::default(), regions)
}

pub fn ansatz_residual_with(t: f64, params: &AnsatzParams, regions: &RegionParams) -> Result<ExpansionResidual> {
    if !(t <= -(8f64).exp()) {
        return Err(Error::InvalidInput(format!("ansatz residual needs t ≤ −e⁸, got {t}")));
    }
    expansion_residual(|s| oval_ansatz(s, params)?.profile(), t, regions)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TwoTime {
    pub near: f64,
    pub far: f64,
    pub improves: bool,
}

impl TwoTime {
    fn residual(near: f64, far: f64) -> Self {
        Self { near, far, improves: far < near }
    }

    fn ratio(near: f64, far: f64) -> Self {
        Self { near, far, improves: (far - 1.0).abs() < (near - 1.0).abs() }
    }
}

/// The composite oval at two times, with each law compared between them.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeTrends {
    pub t_near: f64,
    pub t_far: f64,
    pub parabolic_residual: TwoTime,
    pub intermediate_residual: TwoTime,
    pub width_left: TwoTime,
    pub width_right: TwoTime,
    pub distance_left: TwoTime,
    pub distance_right: TwoTime,
    pub curvature_left: TwoTime,
    pub curvature_right: TwoTime,
}

impl RegimeTrends {
    pub fn residuals_improve(&self) -> bool {
        self.parabolic_residual.improves && self.intermediate_residual.improves
    }

    pub fn widths_improve(&self) -> bool {
        self.width_left.improves && self.width_right.improves
    }

    pub fn tips_improve(&self) -> bool {
        [self.distance_left, self.distance_right, self.curvature_left, self.curvature_right]
            .iter()
            .all(|v| v.improves)
    }
}

pub fn regime_trends(t_near: f64, t_far: f64, params: &AnsatzParams, regions: &RegionParams) -> Result<RegimeTrends> {
    if !(t_far < t_near) {
        return Err(Error::InvalidInput("t_far must be earlier than t_near".into()));
    }
    let at = |t: f64| -> Result<(ExpansionResidual, IntermediateFit, TipRatios, TipRatios)> {
        let res = ansatz_residual_with(t, params, regions)?;
        let p = oval_ansatz(t, params)?.profile()?;
        let w = intermediate_fit(&p, t, regions.theta)?;
        let rec = HistoryRecord {
            t,
            r_max: p.r_max_refined(),
            d_tip_left: p.d_tip_left,
            d_tip_right: p.d_tip_right,
            r_tip_left: tip_scalar_curvature(&p, Side::Left)?,
            r_tip_right: tip_scalar_curvature(&p, Side::Right)?,
        };
        let tips = tip_report(&p, &[rec])?;
        match (tips.left, tips.right) {
            (Some(l), Some(r)) => Ok((res, w, l, r)),
            _ => Err(Error::Inapplicable(format!("tip ratios unavailable at t = {t}: {:?}", tips.notes))),
        }
    };
    let (rn, wn, ln, qn) = at(t_near)?;
    let (rf, wf, lf, qf) = at(t_far)?;
    Ok(RegimeTrends {
        t_near,
        t_far,
        parabolic_residual: TwoTime::residual(rn.parabolic, rf.parabolic),
        intermediate_residual: TwoTime::residual(rn.intermediate, rf.intermediate),
        width_left: TwoTime::ratio(wn.ratio_left, wf.ratio_left),
        width_right: TwoTime::ratio(wn.ratio_right, wf.ratio_right),
        distance_left: TwoTime::ratio(ln.distance, lf.distance),
        distance_right: TwoTime::ratio(qn.distance, qf.distance),
        curvature_left: TwoTime::ratio(ln.curvature, lf.curvature),
        curvature_right: TwoTime::ratio(qn.curvature, qf.curvature),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeReport {
    pub parabolic: Option<ParabolicFit>,
    pub intermediate: Option<IntermediateFit>,
    pub tip_left: Option<TipRatios>,
    pub tip_right: Option<TipRatios>,
    pub star_conditions: Vec<StarCheck>,
    pub bootstrap_map: BootstrapOrbit,
    pub diameter_ratio: f64,
    pub notes: Vec<String>,
}

pub const STAR_ALPHAS: [f64; 4] = [1.0 / 16.0, 0.25, 0.5, 0.9];

/// All regime measurements on one profile with its history.
pub fn regime_report(p: &Profile, history: &[HistoryRecord], regions: &RegionParams, star_bound: f64) -> Result<RegimeReport> {
    let t = history.last().ok_or_else(|| Error::InvalidInput("empty history".into()))?.t;
    let mut notes = Vec::new();
    let parabolic = parabolic_fit(p, t, regions.l).map_err(|e| notes.push(format!("parabolic: {e}"))).ok();
    let intermediate = intermediate_fit(p, t, regions.theta).map_err(|e| notes.push(format!("intermediate: {e}"))).ok();
    let tips = tip_report(p, history)?;
    notes.extend(tips.notes.iter().cloned());
    let star_conditions = if history.len() >= 2 {
        STAR_ALPHAS.iter().map(|&a| check_star(history, a, star_bound)).collect::<Result<Vec<_>>>()?
    } else {
        notes.push("single record: no (⋆) checks".into());
        Vec::new()
    };
    Ok(RegimeReport {
        parabolic,
        intermediate,
        tip_left: tips.left,
        tip_right: tips.right,
        star_conditions,
        bootstrap_map: bootstrap_orbit(1.0 / 16.0, 1_000_000),
        diameter_ratio: diameter_ratio(p, t, 1.0 / 16.0),
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(t: f64, f2: impl Fn(f64) -> f64, half: f64, n: usize) -> Profile {
        let z: Vec<f64> = (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect();
        let f = z.iter().map(|&z| f2(z).max(0.0).sqrt()).collect();
        let _ = t;
        Profile::open(z, f).unwrap()
    }

    fn record(t: f64, r_max: f64) -> HistoryRecord {
        HistoryRecord { t, r_max, d_tip_left: 0.0, d_tip_right: 0.0, r_tip_left: f64::NAN, r_tip_right: f64::NAN }
    }

    #[test]
    fn parabolic_fit_on_exact_family() {
        let t = -(10f64).exp();
        let lt = (-t).ln();
        for l in [1.0, 2.0, 3.0, 5.0] {
            let p = synthetic(t, |z| -2.0 * t - (z * z + 2.0 * t) / (2.0 * lt), 6.0 * (-t).sqrt(), 2001);
            let fit = parabolic_fit(&p, t, l).unwrap();
            assert!((fit.coefficient - 1.0).abs() < 1e-12, "{l}");
            assert!(fit.residual < 1e-9);
        }
        let cyl = Profile::cylinder((-2.0 * t).sqrt(), 6.0 * (-t).sqrt(), 2001).unwrap();
        let fit = parabolic_fit(&cyl, t, 3.0).unwrap();
        assert!(fit.coefficient.abs() < 1e-12);
        assert!(fit.expansion_residual > 0.1);
    }

    #[test]
    fn parabolic_fit_needs_resolution() {
        let t = -(10f64).exp();
        let cyl = Profile::cylinder((-2.0 * t).sqrt(), 6.0 * (-t).sqrt(), 41).unwrap();
        assert!(matches!(parabolic_fit(&cyl, t, 3.0), Err(Error::Domain(_))));
    }

    #[test]
    fn intermediate_widths_on_exact_family() {
        let t = -(12f64).exp();
        let lt = (-t).ln();
        for theta in [0.1, 0.3, 0.45] {
            let half = 2.0 * (-t * lt).sqrt() * 0.999;
            let p = synthetic(t, |z| -2.0 * t - z * z / (2.0 * lt), half, 20001);
            let fit = intermediate_fit(&p, t, theta).unwrap();
            assert!(fit.deviation < 1e-12);
            assert!((fit.ratio_left - 1.0).abs() < 1e-10 && (fit.ratio_right - 1.0).abs() < 1e-10, "{fit:?}");
        }
    }

    #[test]
    fn cylinder_is_a_negative_control_for_widths() {
        let t = -(12f64).exp();
        let lt = (-t).ln();
        let half = 2.0 * (-t * lt).sqrt();
        let cyl = Profile::cylinder((-2.0 * t).sqrt(), half, 2001).unwrap();
        assert!(matches!(intermediate_fit(&cyl, t, 0.3), Err(Error::Domain(_))));
        let dev = intermediate_deviation(&cyl, t, half).unwrap();
        assert!((dev - half * half / (2.0 * lt * -t)).abs() < 1e-9);
    }

    #[test]
    fn ansatz_tips_match_the_laws() {
        let t = -(12f64).exp();
        let ans = oval_ansatz(t, &AnsatzParams::default()).unwrap();
        let p = ans.profile().unwrap();
        let rec = HistoryRecord {
            t,
            r_max: p.r_max_refined(),
            d_tip_left: p.d_tip_left,
            d_tip_right: p.d_tip_right,
            r_tip_left: crate::tip_scalar_curvature(&p, Side::Left).unwrap(),
            r_tip_right: crate::tip_scalar_curvature(&p, Side::Right).unwrap(),
        };
        let rep = tip_report(&p, &[rec]).unwrap();
        assert!(rep.applicable && rep.partial);
        let r = rep.right.unwrap();
        // the cap carries (1+κ)λ² with κ = 1/(2 log(−t)); the distance carries the same order
        let lt = (-t).ln();
        assert!((r.curvature - 1.0).abs() < 1.5 / lt, "{r:?}");
        assert!((r.distance - 1.0).abs() < 1.5 / lt, "{r:?}");
        assert!(r.velocity.is_none());
    }

    #[test]
    fn sphere_is_flagged() {
        let t: f64 = -100.0;
        let p = Profile::sphere((-4.0 * t).sqrt(), 801).unwrap();
        let rec = HistoryRecord { t, r_max: p.r_max(), d_tip_left: p.d_tip_left, d_tip_right: p.d_tip_right, r_tip_left: 1.0, r_tip_right: 1.0 };
        let rep = tip_report(&p, &[rec]).unwrap();
        assert!(!rep.applicable);
        assert!((rep.neck_ratio - std::f64::consts::SQRT_2).abs() < 1e-3);
    }

    #[test]
    fn star_condition_closed_forms() {
        let ts: Vec<f64> = (0..=40).map(|k| -(10f64).powf(2.0 + k as f64 / 10.0)).collect();
        let cyl: Vec<HistoryRecord> = ts.iter().map(|&t| record(t, (-2.0 * t).sqrt())).collect();
        for a in [0.1, 0.5, 0.9] {
            let s = check_star(&cyl, a, 1.0).unwrap();
            assert!(s.pass && s.sup == 0.0 && s.spans_decade);
        }
        let half: Vec<HistoryRecord> = ts.iter().map(|&t| record(t, (-2.0 * t).sqrt() * (1.0 + (-t).powf(-0.5)))).collect();
        for (a, want) in [(0.25, true), (0.5, true), (0.51, false), (0.75, false)] {
            assert_eq!(check_star(&half, a, 10.0).unwrap().pass, want, "α = {a}");
        }
    }

    #[test]
    fn gradient_bound_closed_forms() {
        let t: f64 = -1e4;
        let ts: Vec<HistoryRecord> = [-1e3, -1e4].iter().map(|&t| record(t, (-2.0 * t).sqrt())).collect();
        let star = check_star(&ts, 0.25, 1.0).unwrap();
        let cyl = Profile::cylinder((-2.0 * t).sqrt(), 50.0, 201).unwrap();
        assert_eq!(star_gradient_bound(&cyl, t, &star).unwrap(), 0.0);
        // F = F₀ + kz with k² = (−t)^{−α/(1−α)}/2
        let a: f64 = 0.25;
        let k = ((-t).powf(-a / (1.0 - a)) / 2.0).sqrt();
        let z: Vec<f64> = (0..201).map(|i| -50.0 + 0.5 * i as f64).collect();
        let f: Vec<f64> = z.iter().map(|z| 150.0 + k * z).collect();
        let lin = Profile::open(z, f).unwrap();
        assert!((star_gradient_bound(&lin, t, &star).unwrap() - 0.5).abs() < 1e-9);
        let failing = StarCheck { pass: false, ..star };
        assert!(matches!(star_gradient_bound(&cyl, t, &failing), Err(Error::Inapplicable(_))));
    }

    #[test]
    fn bootstrap_reaches_one() {
        assert_eq!(bootstrap_step(0.5), 0.5 * (1.0 + 0.25 / 200.0));
        assert_eq!(bootstrap_step(0.999), 1.0);
        let orbit = bootstrap_orbit(1.0 / 16.0, 1_000_000);
        assert!(orbit.reached_one && orbit.steps > 1000);
    }

    #[test]
    fn cylinder_family_has_no_residual() {
        let regions = RegionParams::default();
        let build = |t: f64| Profile::cylinder((-2.0 * t).sqrt(), 4.0 * (-t * (-t).ln()).sqrt(), 801);
        let r = expansion_residual(build, -(10f64).exp(), &regions).unwrap();
        assert!(r.parabolic < 1e-6 && r.intermediate < 1e-6, "{r:?}");
    }
}
