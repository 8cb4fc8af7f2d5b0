//! Run configuration: preset defaults, config-file values, command-line
//! overrides, in that order of increasing precedence. Unknown keys and
//! malformed values are rejected by name.

use std::collections::BTreeMap;
use std::path::Path;

use tlsim_core::constants::ATOMIC_MASS;
use tlsim_core::dynamics::ChartGrid;
use tlsim_core::{EnsembleConfig, Error, Result};

/// Chart-grid parameters that presets provide and overrides may replace.
#[derive(Debug, Clone)]
pub struct GridParams {
    pub n_f: usize,
    pub fq_lo_ghz: f64,
    pub fq_hi_ghz: f64,
    pub dt_s: f64,
    pub t_obs_h: f64,
}

impl GridParams {
    fn from_preset(name: &str) -> Result<Self> {
        let grid = ChartGrid::preset(name)?;
        Ok(Self {
            n_f: grid.n_cols(),
            fq_lo_ghz: grid.freqs_hz[0] / 1e9,
            fq_hi_ghz: grid.freqs_hz[grid.n_cols() - 1] / 1e9,
            dt_s: grid.dt_s,
            t_obs_h: grid.t_obs_s / 3600.0,
        })
    }

    pub fn to_grid(&self) -> Result<ChartGrid> {
        ChartGrid::linear(
            self.fq_lo_ghz * 1e9,
            self.fq_hi_ghz * 1e9,
            self.n_f,
            self.dt_s,
            self.t_obs_h * 3600.0,
        )
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub ensemble: EnsembleConfig,
    pub grid: GridParams,
    /// Preset label recorded in artifacts; "+custom" marks grid overrides.
    pub preset_label: String,
    pub noise_sigma_hz: f64,
    pub serial: bool,
}

impl RunConfig {
    /// Resolve a configuration: preset defaults, then config-file entries,
    /// then command-line `key=value` overrides.
    pub fn resolve(
        preset: &str,
        config_path: Option<&Path>,
        overrides: &[String],
        seed: Option<u64>,
    ) -> Result<RunConfig> {
        let mut cfg = RunConfig {
            ensemble: EnsembleConfig::default(),
            grid: GridParams::from_preset(preset)?,
            preset_label: preset.to_string(),
            noise_sigma_hz: 2000.0,
            serial: false,
        };
        let mut grid_overridden = false;

        if let Some(path) = config_path {
            let text = std::fs::read_to_string(path)?;
            for (key, value) in parse_kv(&text)? {
                cfg.apply(&key, &value, &mut grid_overridden)?;
            }
        }
        for entry in overrides {
            let (key, value) = entry.split_once('=').ok_or_else(|| {
                Error::Config(format!("override {entry:?} is not of the form key=value"))
            })?;
            cfg.apply(key.trim(), value.trim(), &mut grid_overridden)?;
        }
        if let Some(s) = seed {
            cfg.ensemble.seed = s;
        }
        if grid_overridden {
            cfg.preset_label = format!("{preset}+custom");
        }
        cfg.ensemble.validate()?;
        cfg.grid.to_grid()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str, grid_overridden: &mut bool) -> Result<()> {
        let f = || -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("key {key}: malformed numeric {value:?}")))
        };
        let e = &mut self.ensemble;
        match key {
            "seed" => {
                e.seed = value
                    .parse::<u64>()
                    .map_err(|_| Error::Config(format!("key seed: malformed integer {value:?}")))?
            }
            // ensemble
            "qtls_density_per_ghz_um3" => e.qtls_density_per_ghz_um3 = f()?,
            "bandwidth_ghz" => e.bandwidth_ghz = f()?,
            "freq_lo_ghz" => e.freq_lo_hz = f()? * 1e9,
            "freq_hi_ghz" => e.freq_hi_hz = f()? * 1e9,
            "g_cutoff_hz" => e.g_cutoff_hz = f()?,
            "n_ttls" => e.n_ttls = f()? as usize,
            "mu" => e.mu = f()?,
            "e_min_hz" => e.e_min_hz = f()?,
            "e_max_hz" => e.e_max_hz = f()?,
            "dipole_min_debye" => e.dipole_min_debye = f()?,
            "dipole_max_debye" => e.dipole_max_debye = f()?,
            "radius_min_nm" => e.radius_min_nm = f()?,
            "radius_max_nm" => e.radius_max_nm = f()?,
            "gamma1_max_hz" => e.gamma1_max_hz = f()?,
            "gamma1_decades" => e.gamma1_decades = f()?,
            "coupling_scale" => e.coupling_scale = f()?,
            "edge_exclusion_nm" => e.edge_exclusion_nm = f()?,
            // material
            "attempt_freq_hz" => e.material.attempt_freq_hz = f()?,
            "well_separation_m" => e.material.well_separation_m = f()?,
            "mass_amu" => e.material.mass_kg = f()? * ATOMIC_MASS,
            "rate_prefactor_hz" => e.material.rate_prefactor_hz = f()?,
            "temperature_k" => e.material.temperature_k = f()?,
            "interaction_const_k_nm3" => e.material.interaction_const_k_nm3 = f()?,
            // qubit electrical and decay
            "capacitance_f" => {
                let q = &mut e.qubit_electrical;
                *q = tlsim_core::efield::QubitElectrical::new(f()?, q.josephson_hz, q.charging_hz);
            }
            "josephson_hz" => {
                let q = &mut e.qubit_electrical;
                *q = tlsim_core::efield::QubitElectrical::new(q.capacitance_f, f()?, q.charging_hz);
            }
            "charging_hz" => {
                let q = &mut e.qubit_electrical;
                *q = tlsim_core::efield::QubitElectrical::new(q.capacitance_f, q.josephson_hz, f()?);
            }
            "bare_rate_hz" => e.qubit_decay.bare_rate_hz = f()?,
            "qubit_freq_hz" => e.qubit_decay.qubit_freq_hz = f()?,
            // geometry
            "strip_width_um" => e.geometry.strip_width_um = f()?,
            "gap_um" => e.geometry.gap_um = f()?,
            "segment_length_um" => e.geometry.segment_length_um = f()?,
            "oxide_nm" => e.geometry.oxide_nm = f()?,
            "ground_overlap_um" => e.geometry.ground_overlap_um = f()?,
            // chart grid and noise
            "n_f" => {
                self.grid.n_f = f()? as usize;
                *grid_overridden = true;
            }
            "fq_min_ghz" => {
                self.grid.fq_lo_ghz = f()?;
                *grid_overridden = true;
            }
            "fq_max_ghz" => {
                self.grid.fq_hi_ghz = f()?;
                *grid_overridden = true;
            }
            "dt_s" => {
                self.grid.dt_s = f()?;
                *grid_overridden = true;
            }
            "t_obs_h" => {
                self.grid.t_obs_h = f()?;
                *grid_overridden = true;
            }
            "noise_sigma_hz" => self.noise_sigma_hz = f()?,
            "serial" => {
                self.serial = value.parse::<bool>().map_err(|_| {
                    Error::Config(format!("key serial: expected true/false, got {value:?}"))
                })?
            }
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }
}

/// Parse flat `key = value` lines; `#` starts a comment.
fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("config line {}: {raw:?} is not key = value", lineno + 1))
        })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_defaults() {
        let cfg = RunConfig::resolve("dataset2", None, &[], None).unwrap();
        assert_eq!(cfg.grid.n_f, 31);
        assert_eq!(cfg.grid.dt_s, 1000.0);
        assert!((cfg.grid.t_obs_h - 47.2).abs() < 1e-12);
        assert_eq!(cfg.preset_label, "dataset2");
        assert_eq!(cfg.noise_sigma_hz, 2000.0);
    }

    #[test]
    fn flag_overrides_win_and_mark_custom() {
        let cfg = RunConfig::resolve(
            "dataset2",
            None,
            &["fq_min_ghz=4.51".into(), "n_f=5".into(), "seed=99".into()],
            None,
        )
        .unwrap();
        assert_eq!(cfg.grid.n_f, 5);
        assert_eq!(cfg.grid.fq_lo_ghz, 4.51);
        assert_eq!(cfg.ensemble.seed, 99);
        assert_eq!(cfg.preset_label, "dataset2+custom");
    }

    #[test]
    fn unknown_or_malformed_keys_are_named() {
        let err = RunConfig::resolve("dataset1", None, &["frobnicate=1".into()], None)
            .unwrap_err();
        assert!(err.to_string().contains("frobnicate"), "{err}");
        let err =
            RunConfig::resolve("dataset1", None, &["mu=fast".into()], None).unwrap_err();
        assert!(err.to_string().contains("mu"), "{err}");
    }

    #[test]
    fn config_file_between_preset_and_flags() {
        let dir = std::env::temp_dir().join(format!("tlsim-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(&path, "# comment\nnoise_sigma_hz = 500\nn_f = 7\n").unwrap();
        let cfg = RunConfig::resolve("dataset3", Some(&path), &["n_f=9".into()], None).unwrap();
        assert_eq!(cfg.noise_sigma_hz, 500.0);
        assert_eq!(cfg.grid.n_f, 9, "flag must beat the file");
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn seed_flag_beats_everything() {
        let cfg =
            RunConfig::resolve("dataset1", None, &["seed=5".into()], Some(77)).unwrap();
        assert_eq!(cfg.ensemble.seed, 77);
    }
}
