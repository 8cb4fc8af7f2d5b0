//! Physical constants (CODATA 2018) and unit conversion factors.
//!
//! Internal unit convention: energies are carried as frequencies (E/h, in
//! Hz) and temperatures enter as k_B T / h, also in Hz. Lengths are SI
//! unless a name says otherwise (`_nm`, `_um`).

/// Planck constant (J s).
pub const PLANCK: f64 = 6.62607015e-34;

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054571817e-34;

/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;

/// Atomic mass unit (kg).
pub const ATOMIC_MASS: f64 = 1.66053906660e-27;

/// One debye in C m.
pub const DEBYE: f64 = 3.33564e-30;

/// k_B / h in Hz/K: converts a temperature to a frequency.
pub const BOLTZMANN_HZ_PER_K: f64 = BOLTZMANN / PLANCK;

/// Thermal frequency k_B T / h (Hz) at temperature `t_k` (K).
pub fn thermal_freq_hz(t_k: f64) -> f64 {
    BOLTZMANN_HZ_PER_K * t_k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boltzmann_frequency_scale() {
        // 60 mK corresponds to about 1.25 GHz
        let f = thermal_freq_hz(0.060);
        assert!((f - 1.25019e9).abs() / 1.25019e9 < 1e-4, "got {f}");
    }
}
