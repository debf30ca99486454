use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coach_sim::{Coach, HeatDistribution, ThermalParams};
use crate::ddpc::DdpcConfig;
use crate::error::{Error, Result};
use crate::hvac::HvacConfig;

/// The parameter file: `[thermal]`, `[distribution]`, `[hvac.*]` and
/// `[ddpc]` tables. Missing tables take their defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamFile {
    pub thermal: ThermalParams,
    pub distribution: HeatDistribution,
    pub hvac: HvacConfig,
    pub ddpc: DdpcConfig,
}

impl ParamFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        let p: ParamFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ParamFile::from_toml(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        self.thermal.validate()?;
        self.distribution.validate()?;
        self.hvac.validate()?;
        self.ddpc.validate()
    }

    pub fn coach(&self) -> Result<Coach> {
        Coach::new(self.thermal.clone(), self.distribution.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let p = ParamFile::default();
        let text = p.to_toml().unwrap();
        assert!(text.contains("[thermal"));
        assert!(text.contains("[hvac.pid"));
        assert_eq!(ParamFile::from_toml(&text).unwrap(), p);
    }

    #[test]
    fn partial_file_overrides_one_field() {
        let p = ParamFile::from_toml("[ddpc]\ntau = 50.0\n").unwrap();
        assert_eq!(p.ddpc.tau, 50.0);
        assert_eq!(p.thermal, ThermalParams::default());
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(ParamFile::from_toml("[ddpc]\ntaux = 1.0\n").is_err());
        assert!(ParamFile::from_toml("[ddpc]\ntau = -1.0\n").is_err());
    }
}
