//! Manually specified simulation scenarios: explicit defect tuples instead
//! of random ensemble generation. Scenario files are structured text (TOML)
//! mirroring the published parameter tables column for column, so a table
//! row can be transcribed verbatim:
//!
//! ```toml
//! [[qtls]]
//! freq_ghz = 4.510
//! g_mhz = 0.05
//! gamma1_mhz = 10.0
//! ttls = [
//!   { gamma_hz = 2e-5, shift_mhz = 0.9 },
//!   { gamma_hz = 5e-5, shift_mhz = 0.7 },
//! ]
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One thermal defect acting on a manually specified host defect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManualTTls {
    /// Telegraph switching rate (Hz).
    pub gamma_hz: f64,
    /// Host frequency shift magnitude (MHz); the telegraph alternates its sign.
    pub shift_mhz: f64,
}

/// One manually specified high-frequency defect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManualQTls {
    /// Transition frequency (GHz).
    pub freq_ghz: f64,
    /// Coupling to the qubit (MHz).
    pub g_mhz: f64,
    /// Defect relaxation rate (MHz).
    pub gamma1_mhz: f64,
    #[serde(default)]
    pub ttls: Vec<ManualTTls>,
}

/// A full manual scenario.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub qtls: Vec<ManualQTls>,
}

impl ScenarioSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: ScenarioSpec =
            toml::from_str(text).map_err(|e| Error::Config(format!("scenario parse: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("scenario serialize: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for (i, q) in self.qtls.iter().enumerate() {
            if !(q.freq_ghz > 0.0) || !q.freq_ghz.is_finite() {
                return Err(Error::Config(format!("qtls[{i}]: frequency {} GHz invalid", q.freq_ghz)));
            }
            if q.g_mhz < 0.0 || !q.g_mhz.is_finite() {
                return Err(Error::Config(format!("qtls[{i}]: coupling {} MHz invalid", q.g_mhz)));
            }
            if !(q.gamma1_mhz > 0.0) || !q.gamma1_mhz.is_finite() {
                return Err(Error::Config(format!(
                    "qtls[{i}]: relaxation rate {} MHz invalid",
                    q.gamma1_mhz
                )));
            }
            for (j, t) in q.ttls.iter().enumerate() {
                if t.gamma_hz < 0.0 || !t.gamma_hz.is_finite() {
                    return Err(Error::Config(format!(
                        "qtls[{i}].ttls[{j}]: switching rate {} Hz invalid",
                        t.gamma_hz
                    )));
                }
                if !t.shift_mhz.is_finite() {
                    return Err(Error::Config(format!(
                        "qtls[{i}].ttls[{j}]: shift {} MHz invalid",
                        t.shift_mhz
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let spec = ScenarioSpec {
            qtls: vec![ManualQTls {
                freq_ghz: 4.510,
                g_mhz: 0.05,
                gamma1_mhz: 10.0,
                ttls: vec![
                    ManualTTls { gamma_hz: 2e-5, shift_mhz: 0.9 },
                    ManualTTls { gamma_hz: 1e-3, shift_mhz: 0.1 },
                ],
            }],
        };
        let text = spec.to_toml_string().unwrap();
        let back = ScenarioSpec::from_toml_str(&text).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn malformed_input_is_config_error() {
        match ScenarioSpec::from_toml_str("[[qtls]]\nfreq_ghz = \"fast\"\n") {
            Err(Error::Config(_)) => {}
            other => panic!("expected config error, got {other:?}"),
        }
        match ScenarioSpec::from_toml_str("[[qtls]]\nfreq_ghz = -1.0\ng_mhz = 0.1\ngamma1_mhz = 1.0\n") {
            Err(Error::Config(_)) => {}
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_scenario_is_valid() {
        let spec = ScenarioSpec::from_toml_str("").unwrap();
        assert!(spec.qtls.is_empty());
    }
}
