//! Monte Carlo simulation of two-level-system (TLS) defect dynamics in a
//! frequency-tunable superconducting qubit, plus the statistical toolchain
//! (Allan deviation, Welch power spectral density, Lorentzian model fits)
//! used to analyze the resulting T1 fluctuations.
//!
//! The physical picture: the qubit couples semi-resonantly to an ensemble of
//! high-frequency defects (Q-TLS), each of which is pushed around in frequency
//! by a set of thermally activated low-frequency defects (T-TLS) switching
//! state as random telegraph signals. The qubit relaxation rate, summed over
//! all Q-TLS contributions, then fluctuates in time and over qubit frequency,
//! producing spectrotemporal charts of T1.
//!
//! Module map:
//! - [`sampling`]: probability laws and a generic inverse-CDF sampling engine
//! - [`tls_physics`]: closed-form defect physics (energies, barriers,
//!   switching rates, pair eigenenergies, qubit decay contributions) and the
//!   exact three-exponential decay envelope used as an oracle
//! - [`efield`]: coplanar-waveguide electric field via conformal mapping,
//!   zero-point voltage, dipole coupling strength
//! - [`ensemble`]: random generation of the Q-TLS / T-TLS populations
//! - [`dynamics`]: telegraph traces, spectral diffusion, chart assembly and
//!   manually specified scenarios
//! - [`analysis`]: Allan deviation, Welch PSD, Lorentzian + white noise fits

pub mod analysis;
pub mod constants;
pub mod dynamics;
pub mod efield;
pub mod ensemble;
mod error;
pub mod fit;
pub mod rng;
pub mod sampling;
pub mod scenario;
pub mod tls_physics;

pub use dynamics::{ChartGrid, FrequencyTrace, RtsTrace, SpectrotemporalChart};
pub use ensemble::{EnsembleConfig, QTlsRecord, TTlsRecord};
pub use error::{Error, Result};
pub use rng::RandomStream;
pub use scenario::{ManualQTls, ManualTTls, ScenarioSpec};
pub use tls_physics::{MaterialParams, QubitDecayParams, TlsLevelStructure};
