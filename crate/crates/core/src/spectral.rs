//! Cylinder-frame analysis: the rescaled profile G, its Gaussian-weighted Hermite
//! projections, the neutral-mode coefficient α and the mode-dominance classifier.

use crate::error::{Error, Result};
use crate::geometry::{Ends, Profile};
use crate::numerics::{chi, cumtrapz, derivatives_wide, lstsq, trapz, Pchip};
use gauss_quad::hermite::GaussHermite;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

pub const GH_NODES: usize = 64;
pub const HERMITE_CUT: usize = 12;

/// Gauss–Hermite rule for the weight e^{−ξ²/4}.
#[derive(Debug, Clone)]
pub struct HermiteRule {
    pub xi: Vec<f64>,
    pub w: Vec<f64>,
}

impl HermiteRule {
    pub fn new(nodes: usize) -> Result<Self> {
        let gh = GaussHermite::new(nodes).map_err(|e| Error::Config(format!("Gauss–Hermite rule: {e}")))?;
        let (xi, w) = gh.iter().map(|(x, w)| (2.0 * x, 2.0 * w)).unzip();
        Ok(Self { xi, w })
    }

    pub fn nodes(&self) -> usize {
        self.xi.len()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.xi.iter().zip(&self.w).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Physicists' Hermite polynomial Hₙ(x).
pub fn hermite(n: usize, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, 2.0 * x);
    if n == 0 {
        return a;
    }
    for k in 1..n {
        let c = 2.0 * x * b - 2.0 * k as f64 * a;
        a = b;
        b = c;
    }
    b
}

/// ⟨hₙ, hₙ⟩ for hₙ(ξ) = Hₙ(ξ/2) under e^{−ξ²/4}.
pub fn hermite_norm_sq(n: usize) -> f64 {
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    2.0 * 2f64.powi(n as i32) * fact * PI.sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct RescaledProfile {
    pub xi: Vec<f64>,
    pub g: Vec<f64>,
    pub tau: f64,
    /// Cutoff scale; set from the snapshot alone until a trajectory supplies the running sup.
    pub delta: f64,
    pub g_center: f64,
    pub rho_max: f64,
}

/// G(ξ) = e^{τ/2}F(e^{−τ/2}ξ) − √2 on the requested ξ values.
/// Past the tips of a capped profile F is taken as zero.
pub fn to_rescaled(p: &Profile, t: f64, xi: &[f64]) -> Result<RescaledProfile> {
    if !(t < 0.0) {
        return Err(Error::InvalidInput(format!("rescaling needs t < 0, got {t}")));
    }
    let sc = (-t).sqrt();
    let interp = Pchip::new(&p.z, &p.f)?;
    let (lo, hi) = (p.z[0], p.z[p.len() - 1]);
    let mut g = Vec::with_capacity(xi.len());
    for &x in xi {
        let z = x * sc;
        let f = if z < lo || z > hi {
            if p.ends == Ends::Open {
                return Err(Error::Domain(format!("ξ = {x} lies outside the profile")));
            }
            0.0
        } else {
            interp.eval(z).max(0.0)
        };
        g.push(f / sc - SQRT_2);
    }
    if !(lo <= 0.0 && 0.0 <= hi) {
        return Err(Error::Domain("profile does not contain z = 0".into()));
    }
    let g_center = interp.eval(0.0) / sc - SQRT_2;
    let rho_max = p.r_max_refined() / sc - SQRT_2;
    Ok(RescaledProfile {
        xi: xi.to_vec(),
        g,
        tau: -(-t).ln(),
        delta: g_center.abs() + rho_max,
        g_center,
        rho_max,
    })
}

/// δ^{−1/100}, never below `floor`.
pub fn cutoff_radius(delta: f64, floor: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInput(format!("cutoff needs δ > 0, got {delta}")));
    }
    Ok(delta.powf(-0.01).max(floor))
}

/// Ĝ = G·χ(ξ/R) on the profile's grid.
pub fn cutoff(g: &RescaledProfile, floor: f64) -> Result<Vec<f64>> {
    let r = cutoff_radius(g.delta, floor)?;
    Ok(g.xi.iter().zip(&g.g).map(|(&x, &v)| v * chi(x / r)).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub coeffs: Vec<f64>,
    pub gamma_plus: f64,
    pub gamma_zero: f64,
    pub gamma_minus: f64,
    pub gamma_total: f64,
    pub alpha: f64,
}

/// Hermite projection of Ĝ sampled at the rule's nodes.
pub fn project(rule: &HermiteRule, ghat: &[f64], n_max: usize) -> Result<SpectralReport> {
    if ghat.len() != rule.nodes() {
        return Err(Error::InvalidInput("Ĝ must be sampled at the quadrature nodes".into()));
    }
    if n_max < 2 || 2 * n_max >= 2 * rule.nodes() - 1 {
        return Err(Error::Config(format!("{} nodes cannot resolve Hermite degree {n_max}", rule.nodes())));
    }
    let coeffs: Vec<f64> = (0..=n_max)
        .map(|n| {
            let ip: f64 = (0..rule.nodes()).map(|k| rule.w[k] * ghat[k] * hermite(n, rule.xi[k] / 2.0)).sum();
            ip / hermite_norm_sq(n)
        })
        .collect();
    let total: f64 = (0..rule.nodes()).map(|k| rule.w[k] * ghat[k] * ghat[k]).sum();
    let gp = coeffs[0].powi(2) * hermite_norm_sq(0) + coeffs[1].powi(2) * hermite_norm_sq(1);
    let g0 = coeffs[2].powi(2) * hermite_norm_sq(2);
    let ip2: f64 = (0..rule.nodes()).map(|k| rule.w[k] * (rule.xi[k].powi(2) - 2.0) * ghat[k]).sum();
    Ok(SpectralReport {
        coeffs,
        gamma_plus: gp,
        gamma_zero: g0,
        gamma_minus: total - gp - g0,
        gamma_total: total,
        alpha: ip2 / (16.0 * (2.0 * PI).sqrt()),
    })
}

/// 𝓛g = g_ξξ − ½ξg_ξ + g with seven-point stencils.
pub fn apply_l(xi: &[f64], g: &[f64]) -> Vec<f64> {
    let (d1, d2) = derivatives_wide(xi, g, 7);
    (0..xi.len()).map(|i| d2[i] - 0.5 * xi[i] * d1[i] + g[i]).collect()
}

/// Indices of the connected stretch around ξ = 0 where G ≥ −1/√2 and |ξ| ≤ r.
fn neck_range(g: &RescaledProfile, r: f64) -> Result<(usize, usize)> {
    let ok = |i: usize| g.g[i] >= -1.0 / SQRT_2 && g.xi[i].abs() <= r;
    let c = g
        .xi
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::InvalidInput("empty ξ grid".into()))?;
    if !ok(c) {
        return Err(Error::Domain("the neck does not contain ξ = 0".into()));
    }
    let (mut lo, mut hi) = (c, c);
    while lo > 0 && ok(lo - 1) {
        lo -= 1;
    }
    while hi + 1 < g.xi.len() && ok(hi + 1) {
        hi += 1;
    }
    Ok((lo, hi))
}

/// Weighted ∫ e^{−ξ²/4}E² of E = G_τ − 𝓛G between two snapshots on one grid,
/// over |ξ| ≤ cutoff radius inside the neck.
pub fn linearization_residual(prev: &RescaledProfile, next: &RescaledProfile, dtau: f64, floor: f64) -> Result<f64> {
    if dtau == 0.0 || !dtau.is_finite() {
        return Err(Error::InvalidInput("linearization residual needs dτ ≠ 0".into()));
    }
    if prev.xi != next.xi {
        return Err(Error::InvalidInput("snapshots must share a ξ grid".into()));
    }
    let r = cutoff_radius(next.delta.max(prev.delta), floor)?;
    let (a, b) = neck_range(prev, r)?;
    let (c, d) = neck_range(next, r)?;
    let (lo, hi) = (a.max(c), b.min(d));
    let xi = &next.xi[lo..=hi];
    let mid: Vec<f64> = (lo..=hi).map(|i| 0.5 * (prev.g[i] + next.g[i])).collect();
    let lg = apply_l(xi, &mid);
    let e2: Vec<f64> = (lo..=hi)
        .enumerate()
        .map(|(k, i)| {
            let e = (next.g[i] - prev.g[i]) / dtau - lg[k];
            (-xi[k] * xi[k] / 4.0).exp() * e * e
        })
        .collect();
    Ok(trapz(xi, &e2))
}

/// E = G_τ − 𝓛G from the nonlinear rescaled equation, on the neck stretch of the grid.
/// Returns the stretch's index range and E there.
pub fn nonlinear_source(g: &RescaledProfile, floor: f64) -> Result<((usize, usize), Vec<f64>)> {
    let r = cutoff_radius(g.delta, floor)?;
    let (lo, hi) = neck_range(g, r)?;
    let xi = &g.xi[lo..=hi];
    let gv = &g.g[lo..=hi];
    let (gx, _) = derivatives_wide(xi, gv, 7);
    let q: Vec<f64> = gx.iter().zip(gv).map(|(d, v)| d * d / (SQRT_2 + v).powi(2)).collect();
    let cum = cumtrapz(xi, &q);
    let interp = Pchip::new(xi, &cum)?;
    let gx_interp = Pchip::new(xi, &gx)?;
    let g0 = g.g_center;
    let anchor = gx_interp.eval(0.0) / (SQRT_2 + g0) + interp.eval(0.0);
    let e = (0..xi.len())
        .map(|k| {
            let w = SQRT_2 + gv[k];
            0.5 * w - (1.0 + gx[k] * gx[k]) / w + 2.0 * gx[k] * (anchor - cum[k]) - gv[k]
        })
        .collect();
    Ok(((lo, hi), e))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NeutralSource {
    pub projection: f64,
    pub predicted: f64,
}

/// ∫ e^{−ξ²/4}E(ξ²−2) over the neck stretch, against −128√(2π)α².
pub fn neutral_source_projection(g: &RescaledProfile, alpha: f64, floor: f64) -> Result<NeutralSource> {
    let ((lo, hi), e) = nonlinear_source(g, floor)?;
    let xi = &g.xi[lo..=hi];
    let y: Vec<f64> = xi
        .iter()
        .zip(&e)
        .map(|(&x, &v)| (-x * x / 4.0).exp() * v * (x * x - 2.0))
        .collect();
    Ok(NeutralSource { projection: trapz(xi, &y), predicted: -128.0 * (2.0 * PI).sqrt() * alpha * alpha })
}

#[derive(Debug, Clone, Serialize)]
pub struct AlphaFit {
    pub kappa: f64,
    /// sup |8τα − 1| over the window.
    pub sup_deviation: f64,
    pub tau_alpha: Vec<f64>,
}

/// Least-squares κ in α′ = κα², fitted as the slope of 1/α against τ.
pub fn alpha_ode_fit(tau: &[f64], alpha: &[f64]) -> Result<AlphaFit> {
    if tau.len() != alpha.len() || tau.len() < 10 {
        return Err(Error::Unfit(format!("α fit needs at least 10 samples, got {}", tau.len())));
    }
    let sign = alpha[0].signum();
    if alpha.iter().any(|a| a.signum() != sign || *a == 0.0 || !a.is_finite()) {
        return Err(Error::Unfit("α changes sign or vanishes in the window".into()));
    }
    let rows: Vec<Vec<f64>> = tau.iter().map(|&t| vec![1.0, t]).collect();
    let inv: Vec<f64> = alpha.iter().map(|a| 1.0 / a).collect();
    let sol = lstsq(&rows, &inv)?;
    let tau_alpha: Vec<f64> = tau.iter().zip(alpha).map(|(t, a)| t * a).collect();
    let sup_deviation = tau_alpha.iter().map(|v| (8.0 * v - 1.0).abs()).fold(0.0, f64::max);
    Ok(AlphaFit { kappa: -sol[1], sup_deviation, tau_alpha })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dominance {
    PositiveDominates,
    NeutralDominates,
    Undetermined,
}

/// Mode dominance over the half of the record nearest τ̄ → −∞.
/// The sequences are indexed by increasing τ̄.
pub fn classify_modes(gamma_plus: &[f64], gamma_zero: &[f64], gamma_minus: &[f64], theta: f64) -> Result<Dominance> {
    let n = gamma_plus.len();
    if n == 0 || gamma_zero.len() != n || gamma_minus.len() != n {
        return Err(Error::InvalidInput("Γ sequences must be non-empty and of equal length".into()));
    }
    let all = gamma_plus.iter().chain(gamma_zero).chain(gamma_minus);
    if all.clone().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput("Γ values must be finite and nonnegative".into()));
    }
    if gamma_minus.windows(2).any(|w| w[1] < w[0] * (1.0 - 1e-12)) {
        return Err(Error::InvalidInput("Γ⁻ must be nondecreasing in τ̄".into()));
    }
    let half = n.div_ceil(2);
    let neutral = (0..half).all(|k| gamma_plus[k] + gamma_minus[k] < theta * gamma_zero[k]);
    let positive = (0..half).all(|k| gamma_zero[k] + gamma_minus[k] < theta * gamma_plus[k]);
    Ok(match (neutral, positive) {
        (true, false) => Dominance::NeutralDominates,
        (false, true) => Dominance::PositiveDominates,
        _ => Dominance::Undetermined,
    })
}

/// Γ sequences on τ̄ = −(steps−1), …, −1, 0 (increasing) obeying the discrete system
/// Γ⁺(τ̄−1) ≤ e⁻¹Γ⁺(τ̄) + ηΓ, |Γ⁰(τ̄−1) − Γ⁰(τ̄)| ≤ ηΓ, Γ⁻(τ̄−1) ≥ eΓ⁻(τ̄) − ηΓ
/// with η = c·δ(τ̄), δ(τ̄) = e^{τ̄/8}, and each sequence nondecreasing in τ̄.
#[derive(Debug, Clone, Serialize)]
pub struct RecursionInstance {
    pub tau_bar: Vec<f64>,
    pub gamma_plus: Vec<f64>,
    pub gamma_zero: Vec<f64>,
    pub gamma_minus: Vec<f64>,
    pub coupling: f64,
}

impl RecursionInstance {
    /// Largest violation of the three inequalities and of monotonicity, relative to Γ.
    pub fn max_violation(&self) -> f64 {
        let n = self.tau_bar.len();
        let e = std::f64::consts::E;
        let mut worst = 0.0f64;
        for k in 1..n {
            let (gp, g0, gm) = (self.gamma_plus[k], self.gamma_zero[k], self.gamma_minus[k]);
            let (pp, p0, pm) = (self.gamma_plus[k - 1], self.gamma_zero[k - 1], self.gamma_minus[k - 1]);
            let big = gp + g0 + gm;
            let eta = self.coupling * (self.tau_bar[k] / 8.0).exp();
            let v = [
                pp - gp / e - eta * big,
                (p0 - g0).abs() - eta * big,
                e * gm - eta * big - pm,
                pp - gp,
                p0 - g0,
                pm - gm,
            ];
            worst = v.iter().fold(worst, |w, x| w.max(x / big));
        }
        worst
    }
}

/// Random trajectory of the discrete system, built backward from τ̄ = 0.
pub fn recursion_instance<R: rand::Rng>(rng: &mut R, steps: usize, coupling: f64) -> Result<RecursionInstance> {
    if steps < 4 || !(coupling > 0.0) {
        return Err(Error::InvalidInput("need at least 4 steps and positive coupling".into()));
    }
    let e = std::f64::consts::E;
    let tiny = 1e-300;
    let mut gp = vec![0.0; steps];
    let mut g0 = vec![0.0; steps];
    let mut gm = vec![0.0; steps];
    let last = steps - 1;
    gp[last] = 10f64.powf(rng.gen_range(-3.0..0.0));
    g0[last] = gp[last] * 10f64.powf(rng.gen_range(-6.0..6.0));
    gm[last] = coupling * (gp[last] + g0[last]) / e * rng.gen::<f64>();
    // the neutral amplitude either drifts within its band or is drained at the maximal rate
    let drain = rng.gen_bool(0.5);
    for k in (0..last).rev() {
        let tb = -((last - k - 1) as f64);
        let eta = coupling * (tb / 8.0).exp();
        let eta_next = coupling * ((tb - 1.0) / 8.0).exp();
        let big = gp[k + 1] + g0[k + 1] + gm[k + 1];
        let lo = (gp[k + 1] / e - eta * big).max(tiny);
        let hi = (gp[k + 1] / e + eta * big).min(gp[k + 1]);
        gp[k] = if hi > lo { rng.gen_range(lo..=hi) } else { hi.max(tiny) };
        let lo0 = (g0[k + 1] - eta * big).max(tiny);
        g0[k] = if drain || lo0 >= g0[k + 1] { lo0.min(g0[k + 1]) } else { rng.gen_range(lo0..=g0[k + 1]) };
        // keeping Γ⁻ ≤ ηΓ/e makes the next lower bound eΓ⁻ − ηΓ nonpositive
        let cap = eta_next * (gp[k] + g0[k]) / e;
        let hi_m = gm[k + 1].min(cap);
        gm[k] = if hi_m > tiny { rng.gen_range(tiny..=hi_m) } else { tiny };
    }
    Ok(RecursionInstance {
        tau_bar: (0..steps).map(|k| k as f64 - last as f64).collect(),
        gamma_plus: gp,
        gamma_zero: g0,
        gamma_minus: gm,
        coupling,
    })
}

/// Right side of dρ_max/dτ = ½(√2+ρ) − 1/(√2+ρ) + G_ξξ(ξ*).
pub fn rho_max_identity(rho: f64, gxx_at_max: f64) -> f64 {
    0.5 * (SQRT_2 + rho) - 1.0 / (SQRT_2 + rho) + gxx_at_max
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RhoRecord {
    pub tau: f64,
    pub rho_max: f64,
    pub gxx_at_max: f64,
    pub gamma: f64,
    pub at_boundary: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RhoRow {
    pub tau: f64,
    pub derivative: f64,
    pub identity: f64,
    pub lower_bound: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RhoCheck {
    /// Calibrated on the first quarter and frozen.
    pub constant: f64,
    pub rows: Vec<RhoRow>,
    pub violations: usize,
    pub warnings: Vec<String>,
}

/// dρ_max/dτ ≥ ρ_max − Cρ_max² − Cγ^{1/4} along a record, with C calibrated on the first quarter.
pub fn rho_max_ode_check(records: &[RhoRecord]) -> Result<RhoCheck> {
    let n = records.len();
    if n < 4 {
        return Err(Error::InvalidInput("ρ_max check needs at least four records".into()));
    }
    let mut rows = Vec::with_capacity(n - 2);
    let mut need = Vec::with_capacity(n - 2);
    for k in 1..n - 1 {
        let (a, b, c) = (&records[k - 1], &records[k], &records[k + 1]);
        let derivative = (c.rho_max - a.rho_max) / (c.tau - a.tau);
        let scale = b.rho_max * b.rho_max + b.gamma.max(0.0).powf(0.25);
        need.push(if scale > 0.0 { ((b.rho_max - derivative) / scale).max(0.0) } else { 0.0 });
        rows.push(RhoRow {
            tau: b.tau,
            derivative,
            identity: rho_max_identity(b.rho_max, b.gxx_at_max),
            lower_bound: 0.0,
            ok: true,
        });
    }
    let quarter = rows.len().div_ceil(4);
    let constant = 2.0 * need[..quarter].iter().cloned().fold(0.0, f64::max);
    let mut violations = 0;
    for (k, row) in rows.iter_mut().enumerate() {
        let b = &records[k + 1];
        row.lower_bound = b.rho_max - constant * (b.rho_max * b.rho_max + b.gamma.max(0.0).powf(0.25));
        row.ok = row.derivative >= row.lower_bound - 1e-12;
        if !row.ok {
            violations += 1;
        }
    }
    let warnings = records
        .iter()
        .filter(|r| r.at_boundary)
        .map(|r| format!("maximum at the cutoff boundary at τ = {}", r.tau))
        .collect();
    Ok(RhoCheck { constant, rows, violations, warnings })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub nodes: usize,
    pub n_max: usize,
    pub radius_floor: f64,
    pub theta_dom: f64,
    /// Half-width and point count of the uniform ξ grid used for derivatives.
    pub grid_half_width: f64,
    pub grid_points: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            nodes: GH_NODES,
            n_max: HERMITE_CUT,
            radius_floor: 12.0,
            theta_dom: 0.2,
            grid_half_width: 12.0,
            grid_points: 2401,
        }
    }
}

/// One row of the spectral series.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct SpectralRow {
    pub tau: f64,
    pub alpha: f64,
    pub gamma_plus: f64,
    pub gamma_zero: f64,
    pub gamma_minus: f64,
    pub delta: f64,
    pub rho_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotExtras {
    pub coeffs: Vec<f64>,
    pub gamma_total: f64,
    pub g_center: f64,
    pub source: NeutralSource,
    pub linearization_residual: Option<f64>,
    pub rho: RhoRecord,
}

/// Running analysis of a trajectory: δ, Γ and A are sups over everything pushed so far.
#[derive(Debug, Clone)]
pub struct SpectralTracker {
    pub cfg: SpectralConfig,
    rule: HermiteRule,
    grid: Vec<f64>,
    prev: Option<RescaledProfile>,
    pub rows: Vec<SpectralRow>,
    pub extras: Vec<SnapshotExtras>,
    pub big_gamma: Vec<[f64; 4]>,
    pub running_a: Vec<f64>,
}

impl SpectralTracker {
    pub fn new(cfg: SpectralConfig) -> Result<Self> {
        if cfg.grid_points < 15 || !(cfg.grid_half_width > 0.0) || !(cfg.theta_dom > 0.0) {
            return Err(Error::Config("spectral grid or threshold is invalid".into()));
        }
        let rule = HermiteRule::new(cfg.nodes)?;
        let m = cfg.grid_points;
        let grid = (0..m)
            .map(|i| cfg.grid_half_width * (2.0 * i as f64 / (m - 1) as f64 - 1.0))
            .collect();
        Ok(Self {
            cfg,
            rule,
            grid,
            prev: None,
            rows: Vec::new(),
            extras: Vec::new(),
            big_gamma: Vec::new(),
            running_a: Vec::new(),
        })
    }

    pub fn rule(&self) -> &HermiteRule {
        &self.rule
    }

    pub fn push(&mut self, p: &Profile, t: f64) -> Result<&SpectralRow> {
        let cfg = self.cfg;
        let mut on_grid = to_rescaled(p, t, &self.grid)?;
        let delta = match self.rows.last() {
            Some(r) => r.delta.max(on_grid.delta),
            None => on_grid.delta,
        };
        on_grid.delta = delta;
        let mut at_nodes = to_rescaled(p, t, &self.rule.xi)?;
        at_nodes.delta = delta;
        let ghat = cutoff(&at_nodes, cfg.radius_floor)?;
        let rep = project(&self.rule, &ghat, cfg.n_max)?;
        let source = neutral_source_projection(&on_grid, rep.alpha, cfg.radius_floor)?;
        let residual = match &self.prev {
            Some(prev) => Some(linearization_residual(prev, &on_grid, on_grid.tau - prev.tau, cfg.radius_floor)?),
            None => None,
        };
        let rho = self.rho_record(&on_grid)?;
        let rho8 = on_grid.rho_max.max(0.0).powi(8);
        let cur = [rep.gamma_total + rho8, rep.gamma_plus + rho8, rep.gamma_zero, rep.gamma_minus.max(0.0)];
        let sup = match self.big_gamma.last() {
            Some(b) => [b[0].max(cur[0]), b[1].max(cur[1]), b[2].max(cur[2]), b[3].max(cur[3])],
            None => cur,
        };
        self.big_gamma.push(sup);
        let a = self.running_a.last().copied().unwrap_or(0.0).max(rep.alpha.abs());
        self.running_a.push(a);
        self.rows.push(SpectralRow {
            tau: on_grid.tau,
            alpha: rep.alpha,
            gamma_plus: rep.gamma_plus,
            gamma_zero: rep.gamma_zero,
            gamma_minus: rep.gamma_minus,
            delta,
            rho_max: on_grid.rho_max,
        });
        self.extras.push(SnapshotExtras {
            coeffs: rep.coeffs,
            gamma_total: rep.gamma_total,
            g_center: on_grid.g_center,
            source,
            linearization_residual: residual,
            rho,
        });
        self.prev = Some(on_grid);
        Ok(self.rows.last().unwrap())
    }

    fn rho_record(&self, g: &RescaledProfile) -> Result<RhoRecord> {
        let (k, _) = g
            .g
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .ok_or_else(|| Error::InvalidInput("empty grid".into()))?;
        let r = cutoff_radius(g.delta, self.cfg.radius_floor)?;
        let at_boundary = k == 0 || k + 1 == g.xi.len() || g.xi[k].abs() >= r;
        let k = k.clamp(3, g.xi.len() - 4);
        let (_, d2) = derivatives_wide(&g.xi[k - 3..=k + 3], &g.g[k - 3..=k + 3], 7);
        let gamma = self.extras_gamma(g);
        Ok(RhoRecord { tau: g.tau, rho_max: g.rho_max, gxx_at_max: d2[3], gamma, at_boundary })
    }

    fn extras_gamma(&self, g: &RescaledProfile) -> f64 {
        let y: Vec<f64> = g.xi.iter().zip(&g.g).map(|(&x, &v)| (-x * x / 4.0).exp() * v * v).collect();
        trapz(&g.xi, &y)
    }

    /// Γ⁺, Γ⁰, Γ⁻ series.
    pub fn gamma_series(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        (
            self.big_gamma.iter().map(|b| b[1]).collect(),
            self.big_gamma.iter().map(|b| b[2]).collect(),
            self.big_gamma.iter().map(|b| b[3]).collect(),
        )
    }

    pub fn classify(&self) -> Result<Dominance> {
        let (p, z, m) = self.gamma_series();
        classify_modes(&p, &z, &m, self.cfg.theta_dom)
    }

    pub fn alpha_fit(&self) -> Result<AlphaFit> {
        let tau: Vec<f64> = self.rows.iter().map(|r| r.tau).collect();
        let alpha: Vec<f64> = self.rows.iter().map(|r| r.alpha).collect();
        alpha_ode_fit(&tau, &alpha)
    }

    pub fn rho_check(&self) -> Result<RhoCheck> {
        let recs: Vec<RhoRecord> = self.extras.iter().map(|e| e.rho).collect();
        rho_max_ode_check(&recs)
    }

    /// Largest increment of δ per unit τ between consecutive rows.
    pub fn delta_lipschitz(&self) -> f64 {
        self.rows
            .windows(2)
            .map(|w| (w[1].delta - w[0].delta) / (w[1].tau - w[0].tau))
            .fold(0.0, f64::max)
    }

    /// sup over |ξ| ≤ r of |(−τ)G − (−(ξ²−2)/(4√2))| relative to the target's sup on the same set.
    pub fn profile_tracking(p: &Profile, t: f64, r: f64, points: usize) -> Result<f64> {
        let xi: Vec<f64> = (0..points)
            .map(|i| r * (2.0 * i as f64 / (points - 1) as f64 - 1.0))
            .collect();
        let g = to_rescaled(p, t, &xi)?;
        let target = |x: f64| -(x * x - 2.0) / (4.0 * SQRT_2);
        let scale = xi.iter().map(|&x| target(x).abs()).fold(0.0, f64::max);
        let err = xi
            .iter()
            .zip(&g.g)
            .map(|(&x, &v)| (-g.tau * v - target(x)).abs())
            .fold(0.0, f64::max);
        Ok(err / scale)
    }
}
