//! Random generation of the defect populations: an ensemble of
//! high-frequency defects (Q-TLS) coupled to the qubit through the
//! capacitor field, and for each of them a set of interacting thermal
//! defects (T-TLS) with their frequency shifts and switching rates.
//! Ensembles serialize to a versioned, self-describing JSON file with
//! canonical field ordering so that identical inputs give identical bytes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::efield::{coupling_strength, CpwField, CpwGeometry, QubitElectrical};
use crate::error::{Error, Result};
use crate::rng::{stream_ids, RandomStream};
use crate::sampling;
use crate::tls_physics::{
    barrier_from_tunneling, interaction_energy, qtls_frequency_shift, switching_rate, tls_energy,
    MaterialParams, QubitDecayParams,
};

/// Rejection-sampling attempt cap for one thermal-defect set.
const MAX_TTLS_ATTEMPTS: usize = 1_000_000;

/// Oxide interface a defect sits on, derived from its lateral position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InterfaceKind {
    /// Exposed substrate in a gap.
    SubstrateAir,
    /// Oxide on top of the strip or a ground plane.
    MetalAir,
}

/// One thermal defect attached to a high-frequency defect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTlsRecord {
    /// Asymmetry energy (Hz).
    pub asymmetry_hz: f64,
    /// Tunneling energy (Hz).
    pub tunneling_hz: f64,
    /// Level splitting (Hz).
    pub energy_hz: f64,
    /// Distance to the host defect (nm).
    pub radius_nm: f64,
    /// Interaction energy (Hz).
    pub interaction_hz: f64,
    /// Host frequency shift for the thermal defect's lower branch (Hz);
    /// the other branch is its exact negative.
    pub shift_hz: f64,
    /// Telegraph switching rate (Hz).
    pub switch_rate_hz: f64,
    /// Tunneling barrier (Hz).
    pub barrier_hz: f64,
}

/// One high-frequency defect coupled to the qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTlsRecord {
    /// Transition frequency (Hz).
    pub freq_hz: f64,
    /// Coupling strength to the qubit (Hz).
    pub g_hz: f64,
    /// Defect relaxation rate (Hz).
    pub decay_rate_hz: f64,
    /// Lateral position in the cross section (um).
    pub x_um: f64,
    /// Height above the conductor plane (nm).
    pub z_nm: f64,
    pub interface: InterfaceKind,
    /// Effective dipole moment (debye).
    pub dipole_debye: f64,
    /// Tunneling energy that fixed the relaxation rate (Hz).
    pub tunneling_hz: f64,
    /// Attached thermal defects.
    pub ttls: Vec<TTlsRecord>,
}

/// Full configuration of the ensemble generation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    /// High-frequency defect density (count per GHz per um^3).
    pub qtls_density_per_ghz_um3: f64,
    /// Defect bandwidth considered (GHz).
    pub bandwidth_ghz: f64,
    /// Defect frequency window (Hz).
    pub freq_lo_hz: f64,
    pub freq_hi_hz: f64,
    /// Couplings below this are discarded (Hz).
    pub g_cutoff_hz: f64,
    /// Thermal defects attached to each retained defect.
    pub n_ttls: usize,
    /// Asymmetry tilt exponent of the interacting-defect distribution.
    pub mu: f64,
    /// Energy window of the thermal-defect distribution (Hz).
    pub e_min_hz: f64,
    pub e_max_hz: f64,
    /// Effective dipole bounds (debye).
    pub dipole_min_debye: f64,
    pub dipole_max_debye: f64,
    /// Defect-pair distance bounds (nm).
    pub radius_min_nm: f64,
    pub radius_max_nm: f64,
    /// Top of the defect relaxation-rate window (Hz); the tunneling energy
    /// is drawn log-uniformly over `gamma1_decades` below its maximum, so
    /// rates span two decades below this value with most mass at the low end.
    pub gamma1_max_hz: f64,
    pub gamma1_decades: f64,
    /// Dimensionless calibration of the dipole coupling, fixed so that the
    /// published ensemble size (~570 retained defects) is reproduced with
    /// the vacuum half-plane field and the zero-point voltage. Equals 4 pi,
    /// i.e. an effective g = 2 p E / hbar read in Hz.
    pub coupling_scale: f64,
    /// Positions closer than this to a conductor edge are resampled (nm).
    pub edge_exclusion_nm: f64,
    pub material: MaterialParams,
    pub qubit_electrical: QubitElectrical,
    pub geometry: CpwGeometry,
    pub qubit_decay: QubitDecayParams,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            qtls_density_per_ghz_um3: 200.0,
            bandwidth_ghz: 1.0,
            freq_lo_hz: 4.0e9,
            freq_hi_hz: 5.0e9,
            g_cutoff_hz: 70e3,
            n_ttls: 10,
            mu: 0.3,
            e_min_hz: 125e6,
            e_max_hz: 1e9,
            dipole_min_debye: 0.1,
            dipole_max_debye: 6.0,
            radius_min_nm: 15.0,
            radius_max_nm: 60.0,
            gamma1_max_hz: 100e6,
            gamma1_decades: 1.0,
            coupling_scale: 4.0 * std::f64::consts::PI,
            edge_exclusion_nm: 0.1,
            material: MaterialParams::default(),
            qubit_electrical: QubitElectrical::default(),
            geometry: CpwGeometry::default(),
            qubit_decay: QubitDecayParams::default(),
            seed: 1,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        self.geometry.validate()?;
        self.qubit_electrical.validate()?;
        if self.qtls_density_per_ghz_um3 < 0.0 {
            return Err(Error::Config(format!(
                "defect density {} must be nonnegative",
                self.qtls_density_per_ghz_um3
            )));
        }
        if !(self.freq_lo_hz > 0.0 && self.freq_lo_hz < self.freq_hi_hz) {
            return Err(Error::Config(format!(
                "defect frequency window [{}, {}] is invalid",
                self.freq_lo_hz, self.freq_hi_hz
            )));
        }
        if !(0.0 < self.mu && self.mu < 1.0) {
            return Err(Error::Config(format!("mu = {} outside (0, 1)", self.mu)));
        }
        if !(0.0 < self.e_min_hz && self.e_min_hz < self.e_max_hz) {
            return Err(Error::Config(format!(
                "energy window [{}, {}] is invalid",
                self.e_min_hz, self.e_max_hz
            )));
        }
        if !(0.0 < self.dipole_min_debye && self.dipole_min_debye < self.dipole_max_debye) {
            return Err(Error::Config("invalid dipole bounds".into()));
        }
        if !(0.0 < self.radius_min_nm && self.radius_min_nm < self.radius_max_nm) {
            return Err(Error::Config("invalid radius bounds".into()));
        }
        if !(self.gamma1_max_hz > self.qubit_decay.bare_rate_hz) {
            return Err(Error::Config(
                "defect relaxation rates must exceed the bare qubit rate".into(),
            ));
        }
        if !(self.coupling_scale > 0.0) || !(self.gamma1_decades > 0.0) {
            return Err(Error::Config("coupling scale and rate decades must be positive".into()));
        }
        Ok(())
    }

    /// Interaction volume hosting the qubit-coupled defects (um^3): both CPW
    /// segments, full sampled cross section, oxide thickness.
    pub fn qtls_interaction_volume_um3(&self) -> f64 {
        let g = &self.geometry;
        2.0 * g.sample_half_span_um() * (g.oxide_nm * 1e-3) * g.segment_length_um * 2.0
    }

    /// Expected number of candidate defects before the coupling cutoff.
    pub fn mean_candidates(&self) -> f64 {
        self.qtls_density_per_ghz_um3 * self.qtls_interaction_volume_um3() * self.bandwidth_ghz
    }

    /// SHA-256 digest of the canonical serialized configuration.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        hex_string(&hasher.finalize())
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// A generated ensemble with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub seed: u64,
    pub config_digest: String,
    pub qtls: Vec<QTlsRecord>,
}

fn classify_interface(geom: &CpwGeometry, x_um: f64) -> InterfaceKind {
    let a = 0.5 * geom.strip_width_um;
    let b = a + geom.gap_um;
    if x_um.abs() < a || x_um.abs() > b {
        InterfaceKind::MetalAir
    } else {
        InterfaceKind::SubstrateAir
    }
}

fn min_edge_distance_nm(geom: &CpwGeometry, x_um: f64, z_nm: f64) -> f64 {
    geom.edge_positions_um()
        .iter()
        .map(|&xe| {
            let dx_nm = (x_um - xe) * 1e3;
            dx_nm.hypot(z_nm)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Draw the qubit-coupled defect ensemble: Poisson-many candidates uniform
/// over the oxide cross section and the frequency window, each with a dipole
/// from the measured law and a relaxation rate tied to its tunneling energy;
/// candidates below the coupling cutoff are dropped. The thermal-defect sets
/// of the retained defects are generated per defect on independent streams.
///
/// `unit_field` must be the cross-section field computed at 1 V; it is
/// scaled internally by the zero-point voltage.
pub fn generate_qtls_ensemble(
    cfg: &EnsembleConfig,
    unit_field: &CpwField,
    master: &RandomStream,
) -> Result<Ensemble> {
    cfg.validate()?;
    let phi0 = cfg.qubit_electrical.zero_point_v;
    let dipole_law = sampling::dipole_law(cfg.dipole_min_debye, cfg.dipole_max_debye)?;
    let mut count_stream = master.substream(stream_ids::ENSEMBLE_COUNT);
    let n_raw = count_stream.poisson(cfg.mean_candidates());

    let half_span = cfg.geometry.sample_half_span_um();
    let candidates: Vec<Option<QTlsRecord>> = (0..n_raw)
        .into_par_iter()
        .map(|idx| {
            let mut stream = master.substream(stream_ids::QTLS_CANDIDATE + idx);
            let freq_hz = stream.uniform(cfg.freq_lo_hz, cfg.freq_hi_hz);
            // resample positions that land inside the edge exclusion radius
            let (x_um, z_nm) = loop {
                let x = stream.uniform(-half_span, half_span);
                let z = cfg.geometry.oxide_nm * (1.0 - stream.uniform01());
                if min_edge_distance_nm(&cfg.geometry, x, z) >= cfg.edge_exclusion_nm {
                    break (x, z);
                }
            };
            let dipole = dipole_law
                .quantile(stream.uniform01())
                .expect("quantile in range");
            let e_unit = unit_field
                .magnitude_um_nm(x_um, z_nm)
                .expect("sample positions are above the plane");
            let g_hz = cfg.coupling_scale * coupling_strength(dipole, e_unit * phi0);
            // tunneling energy log-uniform over the configured decades below
            // the level splitting; the relaxation rate follows its square
            let u = stream.uniform01();
            let tunneling_hz = freq_hz * 10f64.powf(cfg.gamma1_decades * (u - 1.0));
            let ratio = tunneling_hz / freq_hz;
            let decay_rate_hz = cfg.gamma1_max_hz * ratio * ratio;
            if g_hz < cfg.g_cutoff_hz {
                return None;
            }
            Some(QTlsRecord {
                freq_hz,
                g_hz,
                decay_rate_hz,
                x_um,
                z_nm,
                interface: classify_interface(&cfg.geometry, x_um),
                dipole_debye: dipole,
                tunneling_hz,
                ttls: Vec::new(),
            })
        })
        .collect();

    let mut qtls: Vec<QTlsRecord> = candidates.into_iter().flatten().collect();
    let sets: Vec<Result<Vec<TTlsRecord>>> = qtls
        .par_iter()
        .enumerate()
        .map(|(j, q)| {
            let mut stream = master.substream(stream_ids::TTLS_SET + j as u64);
            generate_ttls_set(q, cfg, &mut stream)
        })
        .collect();
    for (q, set) in qtls.iter_mut().zip(sets) {
        q.ttls = set?;
    }
    Ok(Ensemble {
        seed: master.master_seed(),
        config_digest: cfg.digest(),
        qtls,
    })
}

/// Rejection-sample the thermal-defect set of one host defect: energies from
/// the interacting-defect law, distance from the linear radial law, accepted
/// only when the pair splitting stays below half the thermal energy. Each
/// accepted defect carries its frequency shift and switching rate.
pub fn generate_ttls_set(
    q: &QTlsRecord,
    cfg: &EnsembleConfig,
    stream: &mut RandomStream,
) -> Result<Vec<TTlsRecord>> {
    let threshold = cfg.material.activation_threshold_hz();
    let mut out = Vec::with_capacity(cfg.n_ttls);
    let mut attempts = 0usize;
    while out.len() < cfg.n_ttls {
        attempts += 1;
        if attempts > MAX_TTLS_ATTEMPTS {
            return Err(Error::Generation(format!(
                "thermal-defect rejection sampling exhausted {MAX_TTLS_ATTEMPTS} attempts \
                 (acceptance ratio {:.2e}); check the energy window against the temperature",
                out.len() as f64 / attempts as f64
            )));
        }
        let (delta, delta0) =
            sampling::sample_gtm_pair(cfg.mu, cfg.e_min_hz, cfg.e_max_hz, stream.uniform01(), stream.uniform01())?;
        let radius_nm = sampling::sample_radius(cfg.radius_min_nm, cfg.radius_max_nm, stream.uniform01())?;
        let interaction_hz = interaction_energy(radius_nm, cfg.material.interaction_const_k_nm3)?;
        let energy_hz = tls_energy(delta, delta0)?;
        let splitting =
            (energy_hz * energy_hz + 4.0 * interaction_hz * (delta + interaction_hz)).sqrt();
        if splitting >= threshold {
            continue;
        }
        let (shift_hz, _) = qtls_frequency_shift(q.freq_hz, energy_hz, delta, interaction_hz)?;
        let barrier_hz = barrier_from_tunneling(delta0, &cfg.material)?;
        let switch_rate_hz = switching_rate(barrier_hz, &cfg.material)?;
        out.push(TTlsRecord {
            asymmetry_hz: delta,
            tunneling_hz: delta0,
            energy_hz,
            radius_nm,
            interaction_hz,
            shift_hz,
            switch_rate_hz,
            barrier_hz,
        });
    }
    Ok(out)
}

/// Thermal-defect interaction volume: cylinder of the interaction radius
/// and the oxide height (um^3), for r_max in nm and t_ox in nm.
pub fn interaction_volume_um3(r_max_nm: f64, t_ox_nm: f64) -> f64 {
    let r = r_max_nm * 1e-3;
    std::f64::consts::PI * r * r * (t_ox_nm * 1e-3)
}

/// Thermal-defect density (count per GHz per um^3) from a count, the
/// interaction cylinder, and the thermally accessible energy band.
pub fn ttls_density(
    n_ttls: usize,
    r_max_nm: f64,
    t_ox_nm: f64,
    e_min_hz: f64,
    e_max_thermal_hz: f64,
) -> Result<f64> {
    if !(r_max_nm > 0.0 && t_ox_nm > 0.0) {
        return Err(Error::Domain("interaction cylinder dimensions must be positive".into()));
    }
    if !(e_max_thermal_hz > e_min_hz) {
        return Err(Error::Domain(format!(
            "thermal band [{e_min_hz}, {e_max_thermal_hz}] is empty"
        )));
    }
    let band_ghz = (e_max_thermal_hz - e_min_hz) / 1e9;
    Ok(n_ttls as f64 / (interaction_volume_um3(r_max_nm, t_ox_nm) * band_ghz))
}

const ENSEMBLE_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct EnsembleFile {
    schema_version: u32,
    /// Units of the numeric fields, recorded for self-description.
    units: std::collections::BTreeMap<String, String>,
    seed: u64,
    config_digest: String,
    qtls: Vec<QTlsRecord>,
}

fn unit_notes() -> std::collections::BTreeMap<String, String> {
    [
        ("freq_hz", "Hz"),
        ("g_hz", "Hz"),
        ("decay_rate_hz", "Hz"),
        ("x_um", "um"),
        ("z_nm", "nm"),
        ("dipole_debye", "debye"),
        ("tunneling_hz", "Hz"),
        ("asymmetry_hz", "Hz"),
        ("energy_hz", "Hz"),
        ("radius_nm", "nm"),
        ("interaction_hz", "Hz"),
        ("shift_hz", "Hz"),
        ("switch_rate_hz", "Hz"),
        ("barrier_hz", "Hz"),
    ]
    .iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

/// Write the ensemble as versioned, self-describing JSON. Field order is
/// fixed by the type definitions, so two saves of the same ensemble are
/// byte-identical.
pub fn save_ensemble(path: &std::path::Path, ensemble: &Ensemble) -> Result<()> {
    let file = EnsembleFile {
        schema_version: ENSEMBLE_SCHEMA_VERSION,
        units: unit_notes(),
        seed: ensemble.seed,
        config_digest: ensemble.config_digest.clone(),
        qtls: ensemble.qtls.clone(),
    };
    let body = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::Schema(format!("serialize: {e}")))?;
    std::fs::write(path, body)?;
    Ok(())
}

/// Read an ensemble file, rejecting unknown schema versions and malformed
/// or truncated content.
pub fn load_ensemble(path: &std::path::Path) -> Result<Ensemble> {
    let body = std::fs::read_to_string(path)?;
    let file: EnsembleFile =
        serde_json::from_str(&body).map_err(|e| Error::Schema(format!("parse {path:?}: {e}")))?;
    if file.schema_version != ENSEMBLE_SCHEMA_VERSION {
        return Err(Error::Schema(format!(
            "unsupported ensemble schema version {} (expected {ENSEMBLE_SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    Ok(Ensemble {
        seed: file.seed,
        config_digest: file.config_digest,
        qtls: file.qtls,
    })
}
