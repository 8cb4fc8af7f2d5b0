//! Electrostatics of the qubit's coplanar-waveguide (CPW) capacitor cross
//! section via conformal mapping, plus the zero-point voltage and the
//! dipole coupling strength.
//!
//! The metal layer is idealized as an infinitesimally thin sheet in the
//! plane z = 0: a strip of width S at the applied potential, flanked by
//! semi-infinite grounds separated by gaps of width W. The Schwarz-
//! Christoffel map w(zeta) = F(arcsin(zeta/a), k)/b with a = S/2,
//! b = S/2 + W, k = a/b sends the upper half plane to a parallel-plate
//! capacitor of plate separation K(k')/b, so the complex field is
//!
//!   Ex - i Ey = -i V b / (K(k') sqrt(a^2 - zeta^2) sqrt(b^2 - zeta^2)),
//!
//! with both square roots on their principal branches (continuous in the
//! open upper half plane). The potential drop integrated across a gap is
//! exactly the applied voltage, which is the invariant the tests pin.

use std::io::Write as _;

use num_complex::Complex64;

use crate::constants::{DEBYE, ELEMENTARY_CHARGE, PLANCK};
use crate::error::{Error, Result};

/// Complete elliptic integral of the first kind K(m), parameter m = k^2,
/// by the arithmetic-geometric mean (converges to machine precision).
pub fn ellipk(m: f64) -> f64 {
    assert!((0.0..1.0).contains(&m), "ellipk requires 0 <= m < 1, got {m}");
    let mut a = 1.0f64;
    let mut g = (1.0 - m).sqrt();
    for _ in 0..64 {
        let an = 0.5 * (a + g);
        let gn = (a * g).sqrt();
        if (a - g).abs() <= f64::EPSILON * a {
            break;
        }
        a = an;
        g = gn;
    }
    std::f64::consts::FRAC_PI_2 / a
}

/// CPW cross-section geometry of the qubit capacitor.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CpwGeometry {
    /// Center strip width S (um).
    pub strip_width_um: f64,
    /// Gap width W between strip and ground (um).
    pub gap_um: f64,
    /// Length of one CPW segment (um).
    pub segment_length_um: f64,
    /// Oxide layer thickness shared by both interfaces (nm).
    pub oxide_nm: f64,
    /// How far the sampled cross section extends over each ground plane (um).
    pub ground_overlap_um: f64,
}

impl Default for CpwGeometry {
    fn default() -> Self {
        Self {
            strip_width_um: 24.0,
            gap_um: 24.0,
            segment_length_um: 376.0,
            oxide_nm: 3.0,
            ground_overlap_um: 12.0,
        }
    }
}

impl CpwGeometry {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.strip_width_um,
            self.gap_um,
            self.segment_length_um,
            self.oxide_nm,
            self.ground_overlap_um,
        ];
        if all.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!("CPW geometry must be positive: {self:?}")));
        }
        Ok(())
    }

    /// Half width of the strip, a = S/2 (m).
    pub fn strip_half_m(&self) -> f64 {
        0.5 * self.strip_width_um * 1e-6
    }

    /// Inner edge of the ground planes, b = S/2 + W (m).
    pub fn ground_edge_m(&self) -> f64 {
        (0.5 * self.strip_width_um + self.gap_um) * 1e-6
    }

    /// Half span of the sampled cross section, S/2 + W + overlap (um).
    pub fn sample_half_span_um(&self) -> f64 {
        0.5 * self.strip_width_um + self.gap_um + self.ground_overlap_um
    }

    /// x positions (um) of the four conductor edges in the cross section.
    pub fn edge_positions_um(&self) -> [f64; 4] {
        let a = 0.5 * self.strip_width_um;
        let b = a + self.gap_um;
        [-b, -a, a, b]
    }
}

/// Precomputed field of the CPW cross section at a fixed applied voltage.
///
/// Construction is the only nontrivial step; evaluation is pure and the
/// struct is freely shareable across threads.
#[derive(Debug, Clone)]
pub struct CpwField {
    a_m: f64,
    b_m: f64,
    kprime: f64,
    v_applied: f64,
}

impl CpwField {
    /// Build the field for strip potential `v_applied` volts (grounds at 0).
    pub fn new(geom: &CpwGeometry, v_applied: f64) -> Result<Self> {
        geom.validate()?;
        let a = geom.strip_half_m();
        let b = geom.ground_edge_m();
        let k = a / b;
        Ok(Self {
            a_m: a,
            b_m: b,
            kprime: ellipk(1.0 - k * k),
            v_applied,
        })
    }

    pub fn v_applied(&self) -> f64 {
        self.v_applied
    }

    /// Field linearity: same geometry, different applied voltage.
    pub fn scaled(&self, v_applied: f64) -> Self {
        Self { v_applied, ..*self }
    }

    fn sqrt_product(&self, zeta: Complex64) -> Complex64 {
        let a2 = Complex64::new(self.a_m * self.a_m, 0.0);
        let b2 = Complex64::new(self.b_m * self.b_m, 0.0);
        (a2 - zeta * zeta).sqrt() * (b2 - zeta * zeta).sqrt()
    }

    /// |E| (V/m) at a point of the cross section, x and z in meters, z > 0.
    pub fn magnitude(&self, x_m: f64, z_m: f64) -> Result<f64> {
        if !(z_m > 0.0) {
            return Err(Error::SingularPoint(format!(
                "field evaluation at z = {z_m} m is on or below the conductor plane"
            )));
        }
        let zeta = Complex64::new(x_m, z_m);
        let w = self.sqrt_product(zeta);
        Ok(self.v_applied * self.b_m / (self.kprime * w.norm()))
    }

    /// Convenience overload in the sampling units (um, nm).
    pub fn magnitude_um_nm(&self, x_um: f64, z_nm: f64) -> Result<f64> {
        self.magnitude(x_um * 1e-6, z_nm * 1e-9)
    }

    /// Cartesian components (Ex, Ey) in V/m at (x, z) meters, z > 0.
    pub fn components(&self, x_m: f64, z_m: f64) -> Result<(f64, f64)> {
        if !(z_m > 0.0) {
            return Err(Error::SingularPoint(format!(
                "field evaluation at z = {z_m} m is on or below the conductor plane"
            )));
        }
        let zeta = Complex64::new(x_m, z_m);
        let w = self.sqrt_product(zeta);
        // Ex - i Ey = -i V b / (K' w)
        let e = Complex64::new(0.0, -self.v_applied * self.b_m / self.kprime) / w;
        Ok((e.re, -e.im))
    }

    /// Line integral of the tangential field along the horizontal path from
    /// the strip edge to the ground edge at height `z_m`, by Simpson
    /// quadrature under the endpoint-regularizing substitution
    /// x = mid + half sin(phi).
    pub fn gap_voltage_integral(&self, z_m: f64, n: usize) -> Result<f64> {
        let n = if n % 2 == 0 { n } else { n + 1 };
        let mid = 0.5 * (self.a_m + self.b_m);
        let half = 0.5 * (self.b_m - self.a_m);
        let h = std::f64::consts::PI / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let phi = -std::f64::consts::FRAC_PI_2 + i as f64 * h;
            let x = mid + half * phi.sin();
            let (ex, _) = self.components(x, z_m)?;
            let integrand = ex * half * phi.cos();
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * integrand;
        }
        Ok(acc * h / 3.0)
    }
}

/// Write |E(x, z)| along the cross section at fixed height as two-column
/// text (x in um, |E| in V/m), for comparison with the field profile plot.
pub fn write_profile(
    path: &std::path::Path,
    field: &CpwField,
    geom: &CpwGeometry,
    z_nm: f64,
    n: usize,
) -> Result<()> {
    let half = geom.sample_half_span_um();
    let mut out = String::new();
    out.push_str("# x_um  field_v_per_m\n");
    for i in 0..=n {
        let x = -half + 2.0 * half * i as f64 / n as f64;
        let e = field.magnitude_um_nm(x, z_nm)?;
        out.push_str(&format!("{x} {e}\n"));
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

/// Electrical parameters of the qubit island.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QubitElectrical {
    /// Island capacitance (F).
    pub capacitance_f: f64,
    /// Josephson energy (Hz).
    pub josephson_hz: f64,
    /// Single-electron charging energy (Hz).
    pub charging_hz: f64,
    /// Zero-point voltage (V), consistent with the other three fields.
    pub zero_point_v: f64,
}

impl Default for QubitElectrical {
    fn default() -> Self {
        Self::new(100e-15, 8.6e9, 188.6e6)
    }
}

impl QubitElectrical {
    pub fn new(capacitance_f: f64, josephson_hz: f64, charging_hz: f64) -> Self {
        Self {
            capacitance_f,
            josephson_hz,
            charging_hz,
            zero_point_v: zero_point_voltage(capacitance_f, josephson_hz, charging_hz),
        }
    }

    /// Plasma frequency sqrt(8 E_J E_c) / h (Hz).
    pub fn plasma_freq_hz(&self) -> f64 {
        (8.0 * self.josephson_hz * self.charging_hz).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.capacitance_f > 0.0 && self.josephson_hz > 0.0 && self.charging_hz > 0.0) {
            return Err(Error::Domain(format!("qubit electrical parameters must be positive: {self:?}")));
        }
        let expect = zero_point_voltage(self.capacitance_f, self.josephson_hz, self.charging_hz);
        if (self.zero_point_v - expect).abs() > 1e-9 * expect {
            return Err(Error::Domain(format!(
                "zero-point voltage {} inconsistent with qubit parameters (expected {expect})",
                self.zero_point_v
            )));
        }
        Ok(())
    }
}

/// Zero-point voltage of the qubit capacitor,
/// phi0 = (e / C) (E_J / 2 E_c)^(1/4).
pub fn zero_point_voltage(capacitance_f: f64, josephson_hz: f64, charging_hz: f64) -> f64 {
    (ELEMENTARY_CHARGE / capacitance_f) * (josephson_hz / (2.0 * charging_hz)).powf(0.25)
}

/// Dipole coupling strength g = p E / h (Hz) for an effective dipole moment
/// in debye (orientation factor already folded into the effective moment)
/// and a field magnitude in V/m.
pub fn coupling_strength(dipole_debye: f64, field_v_per_m: f64) -> f64 {
    dipole_debye * DEBYE * field_v_per_m / PLANCK
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ellipk_reference_values() {
        // scipy.special.ellipk reference points
        assert_relative_eq!(ellipk(0.0), std::f64::consts::FRAC_PI_2, max_relative = 1e-14);
        assert_relative_eq!(ellipk(1.0 / 9.0), 1.6173867356247325, max_relative = 1e-13);
        assert_relative_eq!(ellipk(8.0 / 9.0), 2.5286255322188937, max_relative = 1e-13);
        assert_relative_eq!(ellipk(0.5), 1.8540746773013719, max_relative = 1e-13);
    }

    #[test]
    fn zero_point_voltage_examples() {
        // island parameters of the measured device: a few microvolts
        let phi0 = zero_point_voltage(100e-15, 8.6e9, 188.6e6);
        assert_relative_eq!(phi0, 3.501e-6, max_relative = 1e-3);
        assert!(phi0 > 3.0e-6 && phi0 < 4.5e-6);
        // doubling the capacitance halves phi0
        assert_relative_eq!(
            zero_point_voltage(200e-15, 8.6e9, 188.6e6),
            0.5 * phi0,
            max_relative = 1e-12
        );
        // E_J = 2 E_c leaves the bare charge voltage
        assert_relative_eq!(
            zero_point_voltage(100e-15, 2e9, 1e9),
            ELEMENTARY_CHARGE / 100e-15,
            max_relative = 1e-12
        );
    }

    #[test]
    fn qubit_electrical_consistency() {
        let q = QubitElectrical::default();
        q.validate().unwrap();
        assert_relative_eq!(q.plasma_freq_hz(), 3.602e9, max_relative = 1e-3);
        let bad = QubitElectrical {
            zero_point_v: q.zero_point_v * 1.01,
            ..q
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn coupling_strength_examples() {
        assert_eq!(coupling_strength(0.0, 100.0), 0.0);
        assert_relative_eq!(coupling_strength(1.0, 100.0), 503.4e3, max_relative = 1e-3);
        assert_relative_eq!(
            coupling_strength(2.0, 50.0),
            coupling_strength(1.0, 100.0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn field_mirror_symmetry() {
        let field = CpwField::new(&CpwGeometry::default(), 1.0).unwrap();
        for &(x, z) in &[(3e-6, 1.5e-9), (12.5e-6, 1.0e-9), (40e-6, 2.9e-9), (20e-6, 1e-6)] {
            let plus = field.magnitude(x, z).unwrap();
            let minus = field.magnitude(-x, z).unwrap();
            assert_relative_eq!(plus, minus, max_relative = 1e-12);
        }
    }

    #[test]
    fn field_regression_points() {
        // frozen from the closed-form solution at 1 V
        let field = CpwField::new(&CpwGeometry::default(), 1.0).unwrap();
        assert_relative_eq!(
            field.magnitude_um_nm(0.0, 1.5).unwrap(),
            32955.98,
            max_relative = 1e-5
        );
        assert_relative_eq!(
            field.magnitude_um_nm(24.0, 1.5).unwrap(),
            25527.59,
            max_relative = 1e-5
        );
    }

    #[test]
    fn field_scaling_linearity() {
        let geom = CpwGeometry::default();
        let unit = CpwField::new(&geom, 1.0).unwrap();
        let phi0 = 3.5e-6;
        let scaled = unit.scaled(phi0);
        let at = [(5e-6, 2e-9), (30e-6, 1e-9), (44e-6, 3e-9)];
        for &(x, z) in &at {
            let direct = scaled.magnitude(x, z).unwrap();
            let indirect = unit.magnitude(x, z).unwrap() * phi0;
            assert_relative_eq!(direct, indirect, max_relative = 1e-12);
        }
    }

    #[test]
    fn field_decays_far_away() {
        let field = CpwField::new(&CpwGeometry::default(), 1.0).unwrap();
        // decay along x beyond the ground edge of the sample region
        let mut prev = f64::INFINITY;
        for i in 0..20 {
            let x = (48.0 + 10.0 * i as f64) * 1e-6;
            let e = field.magnitude(x, 1.5e-9).unwrap();
            assert!(e < prev);
            prev = e;
        }
        // far above the plane the field vanishes
        let far = field.magnitude(0.0, 5e-3).unwrap();
        assert!(far < 1e-4 * field.magnitude(0.0, 1e-6).unwrap());
    }

    #[test]
    fn gap_integral_recovers_applied_voltage() {
        let field = CpwField::new(&CpwGeometry::default(), 1.0).unwrap();
        for &z in &[1e-11, 3e-12, 1e-12] {
            let v = field.gap_voltage_integral(z, 20_000).unwrap();
            assert!((v - 1.0).abs() < 1e-3, "z = {z}: integral {v}");
        }
    }

    #[test]
    fn conductor_evaluation_rejected() {
        let field = CpwField::new(&CpwGeometry::default(), 1.0).unwrap();
        assert!(field.magnitude(0.0, 0.0).is_err());
        assert!(field.magnitude(5e-6, -1e-9).is_err());
    }

    #[test]
    fn edge_adjacent_maxima() {
        let geom = CpwGeometry::default();
        let field = CpwField::new(&geom, 1.0).unwrap();
        let half = geom.sample_half_span_um();
        let n = 384usize;
        let xs: Vec<f64> = (0..=n).map(|i| -half + 2.0 * half * i as f64 / n as f64).collect();
        let es: Vec<f64> = xs.iter().map(|&x| field.magnitude_um_nm(x, 1.5).unwrap()).collect();
        let mut maxima = Vec::new();
        for i in 1..n {
            if es[i] > es[i - 1] && es[i] > es[i + 1] {
                maxima.push(xs[i]);
            }
        }
        // local maxima adjacent to every conductor edge
        for edge in geom.edge_positions_um() {
            assert!(
                maxima.iter().any(|&x| (x - edge).abs() < 0.5),
                "no local maximum near edge {edge} um (maxima: {maxima:?})"
            );
        }
    }
}
