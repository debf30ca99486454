use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::params::ParamFile;
use super::schedule::{Profile, Schedule};
use super::synth::{train_model, TrainingSpec};
use crate::error::{Error, Result};
use crate::predictor::{read_model, PredictorModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Activated,
    Deactivated,
    Both,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Activated => "activated",
            RunMode::Deactivated => "deactivated",
            RunMode::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "activated" => Some(RunMode::Activated),
            "deactivated" => Some(RunMode::Deactivated),
            "both" => Some(RunMode::Both),
            _ => None,
        }
    }
}

/// Scenario file. Relative paths resolve against the file's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// s
    pub duration_s: f64,
    /// Simulator step, s.
    pub dt_s: f64,
    /// s; a multiple of dt_s.
    pub control_period_s: f64,
    /// Schedule CSV; takes precedence over `profile`.
    pub schedule: Option<PathBuf>,
    pub profile: Option<Profile>,
    /// Parameter TOML; defaults apply when absent.
    pub params: Option<PathBuf>,
    /// Fitted predictor JSON; trained from synthetic data when absent.
    pub model: Option<PathBuf>,
    pub training: TrainingSpec,
    pub mode: RunMode,
    pub seed: u64,
    /// Measurement noise on the temperatures seen by the DDPC, K.
    pub noise_std: f64,
    pub cop: f64,
    pub eta_heat: f64,
    /// Start of the comparison window, s. Defaults to the end of the
    /// warm-up plus 45 minutes.
    pub steady_start_s: Option<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "scenario".into(),
            duration_s: 86_400.0,
            dt_s: 10.0,
            control_period_s: 300.0,
            schedule: None,
            profile: None,
            params: None,
            model: None,
            training: TrainingSpec::default(),
            mode: RunMode::Both,
            seed: 0,
            noise_std: 0.05,
            cop: 3.0,
            eta_heat: 1.0,
            steady_start_s: None,
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ScenarioConfig = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.schedule, &mut cfg.params, &mut cfg.model].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self, rho: usize) -> Result<()> {
        if !(self.dt_s > 0.0 && self.control_period_s >= self.dt_s) {
            return Err(Error::invalid("control_period_s", "must be positive and at least dt_s"));
        }
        let ratio = self.control_period_s / self.dt_s;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return Err(Error::invalid("control_period_s", "must be a multiple of dt_s"));
        }
        if !(self.duration_s >= rho as f64 * self.control_period_s) {
            return Err(Error::invalid("duration_s", "shorter than the controller warm-up"));
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::invalid("noise_std", "must be non-negative"));
        }
        if !(self.cop > 0.0 && self.eta_heat > 0.0) {
            return Err(Error::invalid("cop/eta_heat", "must be positive"));
        }
        if self.schedule.is_none() && self.profile.is_none() {
            return Err(Error::Config("scenario needs a schedule file or a profile".into()));
        }
        Ok(())
    }

    /// Loads every referenced file. Training happens here when no model
    /// file is given and the scenario runs the DDPC.
    pub fn resolve(&self) -> Result<Scenario> {
        let params = match &self.params {
            Some(p) => ParamFile::load(p)?,
            None => ParamFile::default(),
        };
        self.validate(params.ddpc.rho)?;
        if (params.ddpc.period_s - self.control_period_s).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "ddpc period {} s differs from the control period {} s",
                params.ddpc.period_s, self.control_period_s
            )));
        }
        let horizon_s = params.ddpc.horizon as f64 * self.control_period_s;
        let schedule = match (&self.schedule, self.profile) {
            (Some(path), _) => Schedule::read_csv(path)?,
            (None, Some(p)) => p.generate(self.duration_s + horizon_s, 60.0)?,
            (None, None) => unreachable!("checked by validate"),
        };
        let model = match (&self.model, self.mode) {
            (_, RunMode::Deactivated) => None,
            (Some(path), _) => Some(read_model(path)?),
            (None, _) => Some(train_model(&params, &self.training)?),
        };
        Ok(Scenario {
            config: self.clone(),
            params,
            schedule,
            model,
        })
    }

    pub fn steady_start(&self, rho: usize) -> f64 {
        self.steady_start_s
            .unwrap_or(rho as f64 * self.control_period_s + 45.0 * 60.0)
    }
}

/// A scenario with all its files loaded.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub params: ParamFile,
    pub schedule: Schedule,
    pub model: Option<PredictorModel>,
}

impl Scenario {
    pub fn steady_start(&self) -> f64 {
        self.config.steady_start(self.params.ddpc.rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths_resolve_against_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.toml");
        std::fs::write(&path, "name = \"x\"\nschedule = \"day.csv\"\nmode = \"deactivated\"\n").unwrap();
        let cfg = ScenarioConfig::load(&path).unwrap();
        assert_eq!(cfg.schedule.unwrap(), dir.path().join("day.csv"));
        assert_eq!(cfg.control_period_s, 300.0);
    }

    #[test]
    fn invalid_periods_rejected() {
        let cfg = ScenarioConfig {
            control_period_s: 305.0,
            profile: Some(Profile::ColdDay),
            ..ScenarioConfig::default()
        };
        assert!(cfg.validate(12).is_err());
        let cfg = ScenarioConfig {
            duration_s: 1800.0,
            profile: Some(Profile::ColdDay),
            ..ScenarioConfig::default()
        };
        assert!(cfg.validate(12).is_err());
    }

    #[test]
    fn default_steady_start() {
        assert_eq!(ScenarioConfig::default().steady_start(12), 3600.0 + 2700.0);
    }
}
