//! Evolution drivers shared by the command line and the benches.

use crate::ansatz::{oval_ansatz, AnsatzParams};
use crate::error::{Error, Result};
use crate::flow::{FlowState, MeshSpec, StepControl};
use crate::geometry::Profile;
use crate::spectral::{Dominance, SpectralConfig, SpectralTracker};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Cylinder,
    Sphere,
    Oval,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RunSpec {
    pub scenario: Scenario,
    pub t0: f64,
    pub t_end: f64,
    /// Grid points for the exact solutions; the oval uses `mesh`.
    pub points: usize,
    pub half_length: f64,
    /// Spacing in log(−t) between stored snapshots.
    pub sample_dtau: f64,
    /// Adjust the overall scale of the oval so the constant mode vanishes at `t_end`.
    pub shoot: bool,
    pub shoot_tol: f64,
    pub shoot_iterations: usize,
    pub ansatz: AnsatzParams,
    pub mesh: MeshSpec,
    pub step: StepControl,
    pub spectral: SpectralConfig,
}

impl RunSpec {
    fn base(scenario: Scenario, t0: f64, t_end: f64) -> Self {
        Self {
            scenario,
            t0,
            t_end,
            points: 401,
            half_length: 20.0,
            sample_dtau: 0.05,
            shoot: false,
            shoot_tol: 1e-5,
            shoot_iterations: 8,
            ansatz: AnsatzParams::default(),
            mesh: MeshSpec::default(),
            step: StepControl::default(),
            spectral: SpectralConfig::default(),
        }
    }

    pub fn cylinder() -> Self {
        Self::base(Scenario::Cylinder, -100.0, -50.0)
    }

    pub fn sphere() -> Self {
        Self::base(Scenario::Sphere, -100.0, -50.0)
    }

    /// Oval from t₀ = −e^{τ₀} evolved until log(−t) has dropped by `dtau`.
    pub fn oval(tau0: f64, dtau: f64) -> Self {
        Self { shoot: true, ..Self::base(Scenario::Oval, -tau0.exp(), -(tau0 - dtau).exp()) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0 < self.t_end && self.t_end < 0.0) {
            return Err(Error::Config(format!("need t0 < t_end < 0, got {} and {}", self.t0, self.t_end)));
        }
        if self.points < 64 || self.mesh.n_center < 32 {
            return Err(Error::Config("grid sizes must be at least 64".into()));
        }
        if !(self.sample_dtau > 0.0) || !(self.half_length > 0.0) {
            return Err(Error::Config("sample_dtau and half_length must be positive".into()));
        }
        if self.scenario == Scenario::Oval && self.t0 > -(8f64).exp() {
            return Err(Error::Config("the oval ansatz needs t0 ≤ −e⁸".into()));
        }
        self.step.validate()
    }

    pub fn initial_profile(&self, scale: f64) -> Result<Profile> {
        match self.scenario {
            Scenario::Cylinder => Profile::cylinder((-2.0 * self.t0).sqrt(), self.half_length, self.points),
            Scenario::Sphere => Profile::sphere((-4.0 * self.t0).sqrt(), self.points),
            Scenario::Oval => oval_ansatz(self.t0, &AnsatzParams { scale, ..self.ansatz })?.profile(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShootStep {
    pub scale: f64,
    pub c0_end: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub spec: RunSpec,
    pub scale: f64,
    pub state: FlowState,
    pub snapshots: Vec<(f64, Profile)>,
    pub tracker: Option<SpectralTracker>,
    pub shooting: Vec<ShootStep>,
}

impl Trajectory {
    pub fn final_profile(&self) -> Profile {
        self.state.profile()
    }
}

/// Evolves one trajectory, storing a snapshot each time log(−t) drops by `sample_dtau`.
pub fn evolve(spec: &RunSpec, scale: f64) -> Result<Trajectory> {
    spec.validate()?;
    let p = spec.initial_profile(scale)?;
    let mut ctl = spec.step;
    let mut state = match spec.scenario {
        Scenario::Oval => FlowState::graded(&p, spec.t0, spec.mesh)?,
        Scenario::Sphere => {
            ctl.regrid_threshold = f64::INFINITY;
            FlowState::from_profile(&p, spec.t0)?
        }
        Scenario::Cylinder => FlowState::from_profile(&p, spec.t0)?,
    };
    let mut tracker = match spec.scenario {
        Scenario::Oval => Some(SpectralTracker::new(spec.spectral)?),
        _ => None,
    };
    let mut snapshots = vec![(spec.t0, p.clone())];
    if let Some(tr) = tracker.as_mut() {
        tr.push(&p, spec.t0)?;
    }
    let mut next = -(-spec.t0).ln() + spec.sample_dtau;
    while state.t < spec.t_end {
        let target = (-(-next).exp()).min(spec.t_end);
        state.advance(&ctl, target, |_| Ok(()))?;
        let q = state.profile();
        if let Some(tr) = tracker.as_mut() {
            tr.push(&q, state.t)?;
        }
        snapshots.push((state.t, q));
        next += spec.sample_dtau;
    }
    Ok(Trajectory { spec: *spec, scale, state, snapshots, tracker, shooting: Vec::new() })
}

fn c0_end(tr: &Trajectory) -> Result<f64> {
    tr.tracker
        .as_ref()
        .and_then(|t| t.extras.last())
        .map(|e| e.coeffs[0])
        .ok_or_else(|| Error::InvalidInput("trajectory carries no spectral record".into()))
}

/// Secant iteration on the scale m in F ↦ mF(z/m) so that the constant Hermite
/// coefficient vanishes at the end of the window. Without `shoot` this is `evolve(spec, 1)`.
pub fn shoot(spec: &RunSpec) -> Result<Trajectory> {
    if !spec.shoot || spec.scenario != Scenario::Oval {
        return evolve(spec, 1.0);
    }
    let mut steps = Vec::new();
    let run = |m: f64, steps: &mut Vec<ShootStep>| -> Result<(Trajectory, f64)> {
        let tr = evolve(spec, m)?;
        let c = c0_end(&tr)?;
        steps.push(ShootStep { scale: m, c0_end: c });
        Ok((tr, c))
    };
    let (mut a, mut b) = (1.0, 1.002);
    let (_, mut fa) = run(a, &mut steps)?;
    let (mut best, mut fb) = run(b, &mut steps)?;
    for _ in 0..spec.shoot_iterations {
        if fb.abs() < spec.shoot_tol {
            break;
        }
        if fb == fa {
            return Err(Error::Numerical("scale shooting stalled".into()));
        }
        let m = b - fb * (b - a) / (fb - fa);
        (a, fa) = (b, fb);
        b = m;
        let (tr, c) = run(b, &mut steps)?;
        best = tr;
        fb = c;
    }
    if !(fb.abs() < spec.shoot_tol) {
        return Err(Error::Numerical(format!("scale shooting left c₀ = {fb:e} after {} runs", steps.len())));
    }
    best.shooting = steps;
    Ok(best)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NeutralChecks {
    pub classification: bool,
    pub kappa: bool,
    pub source: bool,
    pub tracking: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NeutralDynamics {
    pub dominance: Dominance,
    pub kappa: f64,
    pub kappa_sup_deviation: f64,
    pub source_ratio_min: f64,
    pub source_ratio_max: f64,
    pub tracking: f64,
    pub checks: NeutralChecks,
}

pub const KAPPA_TOL: f64 = 0.15;
pub const SOURCE_TOL: f64 = 0.2;
pub const TRACKING_TOL: f64 = 0.2;

/// Neutral-mode summary of an oval trajectory: mode dominance, the α-ODE fit,
/// the source projection against −128√(2π)α², and (−τ)G against the parabola on |ξ| ≤ 2.
pub fn neutral_dynamics(tr: &Trajectory) -> Result<NeutralDynamics> {
    let spec = tr.tracker.as_ref().ok_or_else(|| Error::Inapplicable("no spectral record".into()))?;
    let dominance = spec.classify()?;
    let fit = spec.alpha_fit()?;
    let ratios: Vec<f64> = spec.extras.iter().map(|e| e.source.projection / e.source.predicted).collect();
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tracking = SpectralTracker::profile_tracking(&tr.final_profile(), tr.state.t, 2.0, 401)?;
    Ok(NeutralDynamics {
        dominance,
        kappa: fit.kappa,
        kappa_sup_deviation: fit.sup_deviation,
        source_ratio_min: lo,
        source_ratio_max: hi,
        tracking,
        checks: NeutralChecks {
            classification: dominance == Dominance::NeutralDominates,
            kappa: (fit.kappa / -8.0 - 1.0).abs() <= KAPPA_TOL,
            source: (lo - 1.0).abs() <= SOURCE_TOL && (hi - 1.0).abs() <= SOURCE_TOL,
            tracking: tracking <= TRACKING_TOL,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_scenarios_sample_the_window() {
        let tr = evolve(&RunSpec::cylinder(), 1.0).unwrap();
        assert_eq!(tr.state.t, -50.0);
        assert!(tr.snapshots.len() >= 14);
        let p = tr.final_profile();
        let exact = (100.0f64).sqrt();
        assert!(p.f.iter().all(|f| (f - exact).abs() / exact < 1e-4));
        assert!(tr.snapshots.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn bad_windows_are_rejected() {
        let mut s = RunSpec::sphere();
        s.t_end = -200.0;
        assert!(matches!(evolve(&s, 1.0), Err(Error::Config(_))));
        let mut s = RunSpec::oval(10.0, 2.0);
        s.t0 = -100.0;
        assert!(matches!(s.validate(), Err(Error::Config(_))));
    }
}
