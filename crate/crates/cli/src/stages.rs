use crate::config::RunConfig;
use crate::io::*;
use ovals_core::asymptotics::{
    regime_report, regime_trends, BootstrapOrbit, IntermediateFit, ParabolicFit, RegimeReport, RegimeTrends, StarCheck,
    TipRatios,
};
use ovals_core::barriers::{
    build_barrier, check_ordering, intermediate_gradient_bound, verify_properties, OrderingReport, PropertyReport,
};
use ovals_core::bryant::{self, BryantConstants};
use ovals_core::flow::{FlowWarning, HistoryRecord};
use ovals_core::heat_kernel::{
    lemma_a1_scan, second_derivative_bound_check, BoundCheck, CaloricData, CaloricSample, RandomData,
};
use ovals_core::pipeline::{self, NeutralDynamics, Scenario, ShootStep, Trajectory};
use ovals_core::spectral::{Dominance, SpectralRow};
use ovals_core::{Error, Result};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

/// A measurement that may not apply to the scenario at hand.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome<T> {
    Value(T),
    Inapplicable(String),
}

impl<T> Outcome<T> {
    fn from(r: Result<T>) -> Result<Self> {
        match r {
            Ok(v) => Ok(Outcome::Value(v)),
            Err(Error::Inapplicable(m) | Error::Precondition(m)) => Ok(Outcome::Inapplicable(m)),
            Err(e) => Err(e),
        }
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            Outcome::Value(v) => Some(v),
            Outcome::Inapplicable(_) => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
}

fn check(name: &str, pass: bool) -> Check {
    Check { name: name.to_string(), pass }
}

pub fn trajectory(cfg: &RunConfig) -> Result<Trajectory> {
    pipeline::shoot(&cfg.spec)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactCheck {
    pub quantity: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolveReport {
    pub scenario: String,
    pub t0: f64,
    pub t_end: f64,
    pub scale: f64,
    pub shooting: Vec<ShootStep>,
    pub steps: usize,
    pub regrids: usize,
    pub snapshots: usize,
    pub warnings: Vec<FlowWarning>,
    pub exact: Option<ExactCheck>,
}

fn exact_check(tr: &Trajectory) -> Option<ExactCheck> {
    match tr.spec.scenario {
        Scenario::Cylinder => {
            let value = tr
                .snapshots
                .iter()
                .flat_map(|(t, p)| {
                    let exact = (-2.0 * t).sqrt();
                    p.f.iter().map(move |f| (f - exact).abs() / exact)
                })
                .fold(0.0, f64::max);
            Some(ExactCheck { quantity: "max |F/sqrt(-2t) - 1|".into(), value, tol: 1e-4, pass: value <= 1e-4 })
        }
        Scenario::Sphere => {
            let h = &tr.state.history;
            let (r0, t0) = (h[0].r_max, h[0].t);
            let c0 = r0 * r0 + 4.0 * t0;
            let value = h.iter().map(|r| (r.r_max * r.r_max + 4.0 * r.t - c0).abs() / (r0 * r0)).fold(0.0, f64::max);
            Some(ExactCheck { quantity: "max |r^2 + 4t - const| / r0^2".into(), value, tol: 1e-3, pass: value <= 1e-3 })
        }
        Scenario::Oval => None,
    }
}

pub fn evolve_stage(cfg: &RunConfig, out: &Path, tr: &Trajectory) -> Result<EvolveReport> {
    let rows = |p: &ovals_core::Profile| -> Vec<ProfileRow> {
        p.z.iter().zip(&p.f).map(|(&z, &f)| ProfileRow { z, f }).collect()
    };
    write_csv(&out.join("profile_initial.csv"), &rows(&tr.snapshots[0].1), &PROFILE_HEADER)?;
    write_csv(&out.join("profile_final.csv"), &rows(&tr.final_profile()), &PROFILE_HEADER)?;
    write_csv(&out.join("history.csv"), &tr.state.history, &HISTORY_HEADER)?;
    let report = EvolveReport {
        scenario: cfg.scenario.clone(),
        t0: tr.spec.t0,
        t_end: tr.spec.t_end,
        scale: tr.scale,
        shooting: tr.shooting.clone(),
        steps: tr.state.steps,
        regrids: tr.state.regrids,
        snapshots: tr.snapshots.len(),
        warnings: tr.state.warnings.clone(),
        exact: exact_check(tr),
    };
    write_json(&out.join("evolve.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralSummary {
    pub mode_dominance: Dominance,
    pub neutral_dynamics: NeutralDynamics,
    pub delta_lipschitz: f64,
    pub rows: Vec<SpectralRow>,
}

pub fn spectral_stage(out: &Path, tr: &Trajectory) -> Result<Outcome<SpectralSummary>> {
    let Some(tracker) = tr.tracker.as_ref() else {
        return Ok(Outcome::Inapplicable("no neck in the cylinder frame for this scenario".into()));
    };
    write_csv(&out.join("spectral.csv"), &tracker.rows, &SPECTRAL_HEADER)?;
    let nd = pipeline::neutral_dynamics(tr)?;
    let summary = SpectralSummary {
        mode_dominance: nd.dominance,
        neutral_dynamics: nd,
        delta_lipschitz: tracker.delta_lipschitz(),
        rows: tracker.rows.clone(),
    };
    write_json(&out.join("spectral.json"), &summary)?;
    Ok(Outcome::Value(summary))
}

pub fn bryant_stage(out: &Path) -> Result<BryantConstants> {
    let sol = bryant::shared()?;
    let (ko, kr, sc) = (sol.k_orb(), sol.k_rad(), sol.scalar());
    let rows: Vec<BryantRow> = (0..sol.r.len())
        .map(|i| BryantRow { r: sol.r[i], phi: sol.phi[i], z: sol.z[i], k_orb: ko[i], k_rad: kr[i], scalar: sc[i] })
        .collect();
    write_csv(&out.join("bryant.csv"), &rows, &BRYANT_HEADER)?;
    let c = bryant::constants(sol)?;
    write_json(&out.join("bryant.json"), &c)?;
    Ok(c)
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierCheck {
    pub a: f64,
    pub r_star: f64,
    pub properties: PropertyReport,
    pub ordering: Outcome<OrderingReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientSummary {
    pub m: f64,
    pub snapshots: usize,
    /// smallest fraction of points obeying the bound on any snapshot
    pub pass_fraction: f64,
    pub max_ratio: f64,
}

/// The intermediate gradient bound on every snapshot late enough for it to apply.
fn gradient_summary(cfg: &RunConfig, tr: &Trajectory) -> Result<Outcome<GradientSummary>> {
    let mut summary: Option<GradientSummary> = None;
    let mut last_reason = String::new();
    for (t, p) in &tr.snapshots {
        match intermediate_gradient_bound(p, *t, cfg.regions.theta, cfg.gradient_m, None) {
            Ok(g) => {
                let s = summary.get_or_insert(GradientSummary {
                    m: cfg.gradient_m,
                    snapshots: 0,
                    pass_fraction: 1.0,
                    max_ratio: 0.0,
                });
                s.snapshots += 1;
                s.pass_fraction = s.pass_fraction.min(g.pass_fraction);
                s.max_ratio = s.max_ratio.max(g.max_ratio);
            }
            Err(Error::Inapplicable(m)) => last_reason = m,
            Err(e) => return Err(e),
        }
    }
    Ok(match summary {
        Some(s) => Outcome::Value(s),
        None => Outcome::Inapplicable(last_reason),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierSummary {
    pub barrier_checks: Vec<BarrierCheck>,
    pub gradient_bound: Outcome<GradientSummary>,
}

pub fn barrier_stage(cfg: &RunConfig, out: &Path, tr: &Trajectory) -> Result<BarrierSummary> {
    let built: Vec<Result<BarrierCheck>> = cfg
        .barrier_a
        .par_iter()
        .map(|&a| {
            let b = build_barrier(a, &cfg.barrier)?;
            let n = b.n_field();
            let rows: Vec<BarrierRow> = (0..b.s.len()).map(|i| BarrierRow { s: b.s[i], psi: b.psi[i], n: n[i] }).collect();
            write_csv(&out.join(format!("barrier_a{a}.csv")), &rows, &BARRIER_HEADER)?;
            Ok(BarrierCheck {
                a,
                r_star: b.r_star,
                properties: verify_properties(&b),
                ordering: Outcome::from(check_ordering(&tr.snapshots, &b, cfg.barrier_time_shift))?,
            })
        })
        .collect();
    let barrier_checks = built.into_iter().collect::<Result<Vec<_>>>()?;
    let gradient_bound = gradient_summary(cfg, tr)?;
    let summary = BarrierSummary { barrier_checks, gradient_bound };
    write_json(&out.join("barrier.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct HeatSummary {
    pub constants: [f64; 4],
    pub constant: f64,
    pub draws: usize,
    pub worst_ratio: f64,
    pub pass: bool,
}

pub fn heat_stage(cfg: &RunConfig, out: &Path) -> Result<HeatSummary> {
    let scan = lemma_a1_scan(&cfg.kernel)?;
    write_csv(&out.join("lemma_scan.csv"), &scan.rows, &SCAN_HEADER)?;
    let c = scan.constant();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let draws: Vec<RandomData> = (0..cfg.heat_draws).map(|_| RandomData::draw(&mut rng)).collect();
    let samples = draws
        .par_iter()
        .map(|d| {
            let (i, l, r) = (|y| d.initial(y), |t| d.left(t), |t| d.right(t));
            CaloricSample::from_data(&cfg.kernel, &CaloricData { initial: &i, left: &l, right: &r })
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut checks: Vec<BoundCheck> = Vec::new();
    for s in &samples {
        for &mu in &cfg.heat_mu {
            checks.push(second_derivative_bound_check(s, mu, c)?);
        }
    }
    write_csv(&out.join("bound_checks.csv"), &checks, &BOUND_HEADER)?;
    let worst_ratio = checks.iter().map(|b| b.lhs / b.rhs).fold(0.0, f64::max);
    let pass = scan.constants.iter().all(|v| v.is_finite()) && checks.iter().all(|b| b.pass);
    let summary = HeatSummary { constants: scan.constants, constant: c, draws: cfg.heat_draws, worst_ratio, pass };
    write_json(&out.join("heatkernel.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
struct RegimeRow {
    t: f64,
    parabolic_coefficient: f64,
    width_ratio_left: f64,
    width_ratio_right: f64,
    distance_left: f64,
    distance_right: f64,
    curvature_left: f64,
    curvature_right: f64,
    velocity_left: f64,
    velocity_right: f64,
    bryant_left: f64,
    bryant_right: f64,
}

const REGIME_HEADER: [&str; 12] = [
    "t",
    "parabolic_coefficient",
    "width_ratio_left",
    "width_ratio_right",
    "distance_left",
    "distance_right",
    "curvature_left",
    "curvature_right",
    "velocity_left",
    "velocity_right",
    "bryant_left",
    "bryant_right",
];

impl RegimeRow {
    fn new(t: f64, r: &RegimeReport) -> Self {
        let tip = |s: &Option<TipRatios>, f: fn(&TipRatios) -> f64| s.as_ref().map(f).unwrap_or(f64::NAN);
        Self {
            t,
            parabolic_coefficient: r.parabolic.map(|p| p.coefficient).unwrap_or(f64::NAN),
            width_ratio_left: r.intermediate.as_ref().map(|w| w.ratio_left).unwrap_or(f64::NAN),
            width_ratio_right: r.intermediate.as_ref().map(|w| w.ratio_right).unwrap_or(f64::NAN),
            distance_left: tip(&r.tip_left, |v| v.distance),
            distance_right: tip(&r.tip_right, |v| v.distance),
            curvature_left: tip(&r.tip_left, |v| v.curvature),
            curvature_right: tip(&r.tip_right, |v| v.curvature),
            velocity_left: tip(&r.tip_left, |v| v.velocity.unwrap_or(f64::NAN)),
            velocity_right: tip(&r.tip_right, |v| v.velocity.unwrap_or(f64::NAN)),
            bryant_left: tip(&r.tip_left, |v| v.bryant_closeness),
            bryant_right: tip(&r.tip_right, |v| v.bryant_closeness),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeSummary {
    pub parabolic: Option<ParabolicFit>,
    pub intermediate: Option<IntermediateFit>,
    pub tip_left: Option<TipRatios>,
    pub tip_right: Option<TipRatios>,
    pub star_conditions: Vec<StarCheck>,
    pub bootstrap_map: BootstrapOrbit,
    pub diameter_ratio: f64,
    pub notes: Vec<String>,
    pub trends: Option<RegimeTrends>,
}

fn history_until(h: &[HistoryRecord], t: f64) -> Vec<HistoryRecord> {
    h.iter().copied().filter(|r| r.t <= t).collect()
}

pub fn regimes_stage(cfg: &RunConfig, out: &Path, tr: &Trajectory) -> Result<RegimeSummary> {
    let reports = tr
        .snapshots
        .par_iter()
        .map(|(t, p)| {
            let hist = history_until(&tr.state.history, *t);
            if hist.is_empty() {
                return Ok(None);
            }
            regime_report(p, &hist, &cfg.regions, cfg.star_bound).map(|r| Some((*t, r)))
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let reports: Vec<(f64, RegimeReport)> = reports.into_iter().flatten().collect();
    let rows: Vec<RegimeRow> = reports.iter().map(|(t, r)| RegimeRow::new(*t, r)).collect();
    write_csv(&out.join("regimes.csv"), &rows, &REGIME_HEADER)?;
    let (_, last) = reports.last().cloned().ok_or_else(|| Error::Numerical("no regime snapshots".into()))?;
    let trends = match tr.spec.scenario {
        Scenario::Oval => Some(regime_trends(-(10f64).exp(), -(20f64).exp(), &tr.spec.ansatz, &cfg.regions)?),
        _ => None,
    };
    let summary = RegimeSummary {
        parabolic: last.parabolic,
        intermediate: last.intermediate,
        tip_left: last.tip_left,
        tip_right: last.tip_right,
        star_conditions: last.star_conditions,
        bootstrap_map: last.bootstrap_map,
        diameter_ratio: last.diameter_ratio,
        notes: last.notes,
        trends,
    };
    write_json(&out.join("regimes.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct FullReport {
    pub scenario: String,
    pub config: RunConfig,
    pub evolve: EvolveReport,
    pub parabolic: Option<ParabolicFit>,
    pub intermediate: Option<IntermediateFit>,
    pub tip_left: Option<TipRatios>,
    pub tip_right: Option<TipRatios>,
    pub star_conditions: Vec<StarCheck>,
    pub bootstrap_map: Option<BootstrapOrbit>,
    pub regime_notes: Vec<String>,
    pub regime_trends: Option<RegimeTrends>,
    pub mode_dominance: Option<Dominance>,
    pub neutral_dynamics: Option<NeutralDynamics>,
    pub barrier_checks: Vec<BarrierCheck>,
    pub gradient_bound: Option<Outcome<GradientSummary>>,
    pub bryant: BryantConstants,
    pub heat_kernel: HeatSummary,
    pub checks: Vec<Check>,
    pub pass: bool,
}

pub fn run_all(cfg: &RunConfig, out: &Path) -> Result<FullReport> {
    let tr = trajectory(cfg)?;
    let evolve = evolve_stage(cfg, out, &tr)?;
    let mut checks = Vec::new();
    if let Some(e) = &evolve.exact {
        checks.push(check("exact_solution", e.pass));
    }
    let spectral = if cfg.spectral { Some(spectral_stage(out, &tr)?) } else { None };
    let spectral = spectral.as_ref().and_then(|s| s.value());
    if let Some(s) = spectral {
        let c = s.neutral_dynamics.checks;
        checks.push(check("mode_dominance", c.classification));
        checks.push(check("alpha_ode", c.kappa));
        checks.push(check("neutral_source", c.source));
        checks.push(check("profile_tracking", c.tracking));
    }
    let barriers = if cfg.barriers { Some(barrier_stage(cfg, out, &tr)?) } else { None };
    if let Some(b) = &barriers {
        for c in &b.barrier_checks {
            checks.push(check(&format!("barrier_a{}_properties", c.a), c.properties.all_ok()));
            if let Outcome::Value(o) = &c.ordering {
                checks.push(check(&format!("barrier_a{}_ordering", c.a), o.pass));
            }
        }
    }
    if let Some(Outcome::Value(g)) = barriers.as_ref().map(|b| &b.gradient_bound) {
        checks.push(check("intermediate_gradient_bound", g.pass_fraction == 1.0));
    }
    let regimes = if cfg.regimes { Some(regimes_stage(cfg, out, &tr)?) } else { None };
    if let Some(t) = regimes.as_ref().and_then(|r| r.trends.as_ref()) {
        checks.push(check("ansatz_residuals_decay", t.residuals_improve()));
        checks.push(check("ansatz_widths_improve", t.widths_improve()));
        checks.push(check("ansatz_tips_improve", t.tips_improve()));
    }
    let bryant = bryant_stage(out)?;
    checks.push(check("bryant_constants", bryant.pass));
    let heat_kernel = heat_stage(cfg, out)?;
    checks.push(check("heat_kernel_bound", heat_kernel.pass));
    let pass = checks.iter().all(|c| c.pass);
    let (b, r) = (barriers.unwrap_or(BarrierSummary { barrier_checks: vec![], gradient_bound: Outcome::Inapplicable("disabled".into()) }), regimes);
    let report = FullReport {
        scenario: cfg.scenario.clone(),
        config: cfg.clone(),
        evolve,
        parabolic: r.as_ref().and_then(|r| r.parabolic),
        intermediate: r.as_ref().and_then(|r| r.intermediate.clone()),
        tip_left: r.as_ref().and_then(|r| r.tip_left),
        tip_right: r.as_ref().and_then(|r| r.tip_right),
        star_conditions: r.as_ref().map(|r| r.star_conditions.clone()).unwrap_or_default(),
        bootstrap_map: r.as_ref().map(|r| r.bootstrap_map.clone()),
        regime_notes: r.as_ref().map(|r| r.notes.clone()).unwrap_or_default(),
        regime_trends: r.as_ref().and_then(|r| r.trends.clone()),
        mode_dominance: spectral.map(|s| s.mode_dominance),
        neutral_dynamics: spectral.map(|s| s.neutral_dynamics.clone()),
        barrier_checks: b.barrier_checks,
        gradient_bound: cfg.barriers.then_some(b.gradient_bound),
        bryant,
        heat_kernel,
        checks,
        pass,
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}
