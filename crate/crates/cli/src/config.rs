use ovals_core::ansatz::Gluing;
use ovals_core::asymptotics::RegionParams;
use ovals_core::barriers::BarrierParams;
use ovals_core::heat_kernel::KernelConfig;
use ovals_core::pipeline::RunSpec;
use ovals_core::{Error, Result};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub scenario: String,
    pub spec: RunSpec,
    pub spectral: bool,
    pub barriers: bool,
    pub regimes: bool,
    pub barrier_a: Vec<f64>,
    pub barrier: BarrierParams,
    pub barrier_time_shift: f64,
    pub gradient_m: f64,
    pub regions: RegionParams,
    pub star_bound: f64,
    pub kernel: KernelConfig,
    pub heat_draws: usize,
    pub heat_mu: Vec<f64>,
    pub seed: u64,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

pub fn scenario_spec(name: &str) -> Result<RunSpec> {
    match name {
        "cylinder" => Ok(RunSpec::cylinder()),
        "sphere" => Ok(RunSpec::sphere()),
        "oval-tau10" | "oval" => Ok(RunSpec::oval(10.0, 2.0)),
        _ => Err(Error::Config(format!("unknown scenario '{name}' (cylinder, sphere, oval-tau10)"))),
    }
}

impl RunConfig {
    pub fn for_scenario(name: &str) -> Result<Self> {
        Ok(Self {
            scenario: name.to_string(),
            spec: scenario_spec(name)?,
            spectral: true,
            barriers: true,
            regimes: true,
            barrier_a: vec![10.0, 20.0, 40.0],
            barrier: BarrierParams::default(),
            barrier_time_shift: 0.0,
            gradient_m: 3.0,
            regions: RegionParams::default(),
            star_bound: 10.0,
            kernel: KernelConfig::default(),
            heat_draws: 20,
            heat_mu: vec![0.05, 0.1, 0.3],
            seed: 5,
            out: None,
        })
    }

    /// Reads `key = value` lines; `scenario` is applied first so the other keys refine it.
    pub fn from_text(text: &str) -> Result<Self> {
        let pairs = parse_pairs(text)?;
        let name = pairs.iter().rev().find(|(k, _)| k == "scenario").map(|(_, v)| v.as_str()).unwrap_or("cylinder");
        let mut cfg = Self::for_scenario(name)?;
        for (k, v) in &pairs {
            if k != "scenario" {
                cfg.set(k, v)?;
            }
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let f = || -> Result<f64> {
            value.parse::<f64>().map_err(|_| Error::Config(format!("{key}: '{value}' is not a number")))
        };
        let u = || -> Result<usize> {
            value.parse::<usize>().map_err(|_| Error::Config(format!("{key}: '{value}' is not a count")))
        };
        let b = || -> Result<bool> {
            match value {
                "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                _ => Err(Error::Config(format!("{key}: '{value}' is not a boolean"))),
            }
        };
        let list = || -> Result<Vec<f64>> {
            value
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Config(format!("{key}: bad list entry '{s}'"))))
                .collect()
        };
        let s = &mut self.spec;
        match key {
            "t0" => s.t0 = f()?,
            "t_end" => s.t_end = f()?,
            "tau0" => {
                let span = (-s.t0).ln() - (-s.t_end).ln();
                s.t0 = -f()?.exp();
                s.t_end = -((-s.t0).ln() - span).exp();
            }
            "dtau" => s.t_end = -((-s.t0).ln() - f()?).exp(),
            "points" => s.points = u()?,
            "half_length" => s.half_length = f()?,
            "sample_dtau" => s.sample_dtau = f()?,
            "shoot" => s.shoot = b()?,
            "shoot_tol" => s.shoot_tol = f()?,
            "shoot_iterations" => s.shoot_iterations = u()?,
            "gluing" => {
                s.ansatz.gluing = match value {
                    "window" => Gluing::Window,
                    "uniform" => Gluing::Uniform,
                    _ => return Err(Error::Config(format!("gluing: '{value}' is not window or uniform"))),
                }
            }
            "blend_inner" => s.ansatz.blend_inner = f()?,
            "blend_outer" => s.ansatz.blend_outer = f()?,
            "ansatz_points" => s.ansatz.points = u()?,
            "n_center" => s.mesh.n_center = u()?,
            "tip_spacing" => s.mesh.tip_spacing = f()?,
            "grading" => s.mesh.grading = f()?,
            "dt_max" => s.step.dt_max = f()?,
            "cfl_safety" => s.step.cfl_safety = f()?,
            "regrid_threshold" => s.step.regrid_threshold = f()?,
            "spectral_nodes" => s.spectral.nodes = u()?,
            "radius_floor" => s.spectral.radius_floor = f()?,
            "theta_dom" => s.spectral.theta_dom = f()?,
            "spectral" => self.spectral = b()?,
            "barriers" => self.barriers = b()?,
            "regimes" => self.regimes = b()?,
            "barrier_a" => self.barrier_a = list()?,
            "barrier_plateau" => self.barrier.plateau_bound = f()?,
            "barrier_points" => self.barrier.points = u()?,
            "barrier_time_shift" => self.barrier_time_shift = f()?,
            "gradient_m" => self.gradient_m = f()?,
            "region_l" => self.regions.l = f()?,
            "region_theta" => self.regions.theta = f()?,
            "region_m" => self.regions.m = f()?,
            "star_bound" => self.star_bound = f()?,
            "kernel_tol" => self.kernel.tol = f()?,
            "heat_draws" => self.heat_draws = u()?,
            "heat_mu" => self.heat_mu = list()?,
            "seed" => self.seed = value.parse().map_err(|_| Error::Config(format!("seed: '{value}'")))?,
            "out" => self.out = Some(PathBuf::from(value)),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// `--tol KEY=VAL`: only the tolerance keys may be overridden this way.
    pub fn set_tolerance(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--tol expects KEY=VAL, got '{assignment}'")))?;
        let k = k.trim();
        if !k.ends_with("_tol") {
            return Err(Error::Config(format!("'{k}' is not a tolerance key")));
        }
        self.set(k, v.trim())
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.barrier_a.iter().any(|a| !(*a >= 1.0)) {
            return Err(Error::Config("barrier_a entries must be at least 1".into()));
        }
        if self.heat_mu.iter().any(|m| !(*m > 0.0 && *m < 1.0)) {
            return Err(Error::Config("heat_mu entries must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ovals_core::pipeline::Scenario;

    #[test]
    fn comments_and_scenario_order() {
        let cfg = RunConfig::from_text("# run\npoints = 201 # finer\nscenario = sphere\n\nseed=9\n").unwrap();
        assert_eq!(cfg.spec.scenario, Scenario::Sphere);
        assert_eq!(cfg.spec.points, 201);
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn oval_window_keys() {
        let cfg = RunConfig::from_text("scenario = oval-tau10\ndtau = 1").unwrap();
        assert!((cfg.spec.t0 + (10f64).exp()).abs() < 1e-6);
        assert!(((-cfg.spec.t_end).ln() - 9.0).abs() < 1e-12);
        let cfg = RunConfig::from_text("scenario = oval\ntau0 = 12").unwrap();
        assert!(((-cfg.spec.t_end).ln() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        for text in ["scenario = torus", "points = many", "nonsense = 1", "just a line", "shoot = maybe"] {
            assert!(matches!(RunConfig::from_text(text), Err(Error::Config(_))), "{text}");
        }
        let mut cfg = RunConfig::for_scenario("cylinder").unwrap();
        assert!(cfg.set_tolerance("points=3").is_err());
        cfg.set_tolerance("kernel_tol = 1e-10").unwrap();
        assert_eq!(cfg.kernel.tol, 1e-10);
        cfg.spec.points = 32;
        assert!(cfg.validate().is_err());
    }
}
