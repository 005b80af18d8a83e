//! Two-photon amplitude and paraxial phase matching for a plane-wave-pumped
//! type-II crystal.

use core::f64::consts::PI;
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math;
use crate::SPEED_OF_LIGHT;

/// Transverse wavevector in rad/mm. `qy` lies along the walk-off direction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TransverseWavevector {
    pub qx: f64,
    pub qy: f64,
}

impl TransverseWavevector {
    pub const ZERO: Self = Self { qx: 0.0, qy: 0.0 };

    pub const fn new(qx: f64, qy: f64) -> Self {
        Self { qx, qy }
    }

    pub fn norm(self) -> f64 {
        math::hypot(self.qx, self.qy)
    }

    pub fn norm_sqr(self) -> f64 {
        self.qx * self.qx + self.qy * self.qy
    }
}

impl Neg for TransverseWavevector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.qx, -self.qy)
    }
}

impl Add for TransverseWavevector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.qx + o.qx, self.qy + o.qy)
    }
}

impl Sub for TransverseWavevector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.qx - o.qx, self.qy - o.qy)
    }
}

impl Mul<f64> for TransverseWavevector {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.qx * s, self.qy * s)
    }
}

/// Nonlinear crystal constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrystalParams {
    /// Thickness `L`, mm.
    pub thickness: f64,
    /// Inverse group-velocity difference `D`, ps/mm.
    pub gvm: f64,
    /// Spatial walk-off `M` (dimensionless).
    pub walkoff: f64,
    /// Pump wavelength, mm.
    pub pump_wavelength: f64,
    /// Degenerate signal/idler wavelength, mm.
    pub degenerate_wavelength: f64,
}

impl CrystalParams {
    /// Wavelengths are given in nm, as quoted for lasers; stored in mm.
    pub fn new(
        thickness: f64,
        gvm: f64,
        walkoff: f64,
        pump_wavelength_nm: f64,
        degenerate_wavelength_nm: f64,
    ) -> Result<Self> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(thickness) {
            return Err(Error::InvalidParameter {
                name: "thickness",
                reason: "must be > 0",
            });
        }
        if !positive(gvm) {
            return Err(Error::InvalidParameter {
                name: "gvm",
                reason: "must be > 0",
            });
        }
        if !walkoff.is_finite() {
            return Err(Error::InvalidParameter {
                name: "walkoff",
                reason: "must be finite",
            });
        }
        if !positive(pump_wavelength_nm) || !positive(degenerate_wavelength_nm) {
            return Err(Error::InvalidParameter {
                name: "wavelength",
                reason: "must be > 0",
            });
        }
        if math::abs(degenerate_wavelength_nm - 2.0 * pump_wavelength_nm)
            > 1e-9 * degenerate_wavelength_nm
        {
            return Err(Error::InvalidParameter {
                name: "degenerate_wavelength",
                reason: "must equal twice the pump wavelength",
            });
        }
        Ok(Self {
            thickness,
            gvm,
            walkoff,
            pump_wavelength: pump_wavelength_nm * 1e-6,
            degenerate_wavelength: degenerate_wavelength_nm * 1e-6,
        })
    }

    /// 1.5 mm BBO cut for collinear degenerate type-II matching, 405 nm pump.
    /// `D` is 0.182 ps/mm (the 182 printed alongside is read as fs/mm).
    pub fn bbo_type2() -> Self {
        Self {
            thickness: 1.5,
            gvm: 0.182,
            walkoff: 0.0723,
            pump_wavelength: 405e-6,
            degenerate_wavelength: 810e-6,
        }
    }

    /// Pump wavenumber in vacuum, rad/mm.
    pub fn k_pump(&self) -> f64 {
        2.0 * PI / self.pump_wavelength
    }

    /// Degenerate wavenumber in vacuum, rad/mm.
    pub fn k_degenerate(&self) -> f64 {
        2.0 * PI / self.degenerate_wavelength
    }

    /// Degenerate angular frequency, rad/ps.
    pub fn omega0(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.degenerate_wavelength
    }

    /// Full base width `D L` of the triangular dip, ps.
    pub fn dip_width(&self) -> f64 {
        self.gvm * self.thickness
    }
}

/// Paraxial phase mismatch `-omega D + M qy + 2|q|^2 / k_p`, rad/mm.
pub fn phase_mismatch(q: TransverseWavevector, omega: f64, c: &CrystalParams) -> f64 {
    -omega * c.gvm + c.walkoff * q.qy + 2.0 * q.norm_sqr() / c.k_pump()
}

/// `sinc(L Delta / 2) exp(i L Delta / 2)`.
pub fn biphoton_amplitude(q: TransverseWavevector, omega: f64, c: &CrystalParams) -> Complex64 {
    let half = 0.5 * c.thickness * phase_mismatch(q, omega, c);
    let (s, co) = math::sin_cos(half);
    Complex64::new(co, s) * math::sinc(half)
}

/// Triangle `max(0, 1 - |alpha|)`.
pub fn triangular(alpha: f64) -> f64 {
    let t = 1.0 - math::abs(alpha);
    if t > 0.0 {
        t
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mismatch_examples() {
        let c = CrystalParams::bbo_type2();
        assert_eq!(phase_mismatch(TransverseWavevector::ZERO, 0.0, &c), 0.0);
        let d = phase_mismatch(TransverseWavevector::ZERO, 1.0, &c);
        assert!((d + 0.182).abs() < 1e-15);
        let kp = c.k_pump();
        assert!((kp - 1.5514e4).abs() < 1.0);
        let d = phase_mismatch(TransverseWavevector::new(0.0, 1.0), 0.0, &c);
        assert!((d - 0.072429).abs() < 1e-6, "{d}");
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn amplitude_examples() {
        let c = CrystalParams::bbo_type2();
        let a = biphoton_amplitude(TransverseWavevector::ZERO, 0.0, &c);
        assert_eq!(a, Complex64::new(1.0, 0.0));
        // L Delta / 2 = pi  <=>  omega = -2 pi / (L D)
        let w = -2.0 * PI / (c.thickness * c.gvm);
        assert!(biphoton_amplitude(TransverseWavevector::ZERO, w, &c).norm() < 1e-15);
        let w = -PI / (c.thickness * c.gvm);
        let a = biphoton_amplitude(TransverseWavevector::ZERO, w, &c);
        assert!(a.re.abs() < 1e-15);
        assert!((a.im - 2.0 / PI).abs() < 1e-15);
        assert!((a.im - 0.6366).abs() < 1e-4);
    }

    #[test]
    fn triangular_examples() {
        assert_eq!(triangular(0.0), 1.0);
        assert_eq!(triangular(1.0), 0.0);
        assert_eq!(triangular(-0.5), 0.5);
        assert_eq!(triangular(3.0), 0.0);
    }

    #[test]
    fn derived_constants() {
        let c = CrystalParams::bbo_type2();
        assert!((c.dip_width() - 0.273).abs() < 1e-15);
        assert!((c.k_degenerate() - 7757.0).abs() < 0.5);
        assert!((c.omega0() - 2325.5).abs() < 0.5);
        assert_eq!(
            CrystalParams::new(1.5, 0.182, 0.0723, 405.0, 810.0).unwrap(),
            c
        );
    }

    #[test]
    fn constructor_rejects() {
        assert!(CrystalParams::new(0.0, 0.182, 0.07, 405.0, 810.0).is_err());
        assert!(CrystalParams::new(1.5, -1.0, 0.07, 405.0, 810.0).is_err());
        assert!(CrystalParams::new(1.5, 0.182, 0.07, 405.0, 800.0).is_err());
    }

    proptest! {
        #[test]
        fn amplitude_bounded(qx in -300.0..300.0f64, qy in -300.0..300.0f64, w in -100.0..100.0f64) {
            let c = CrystalParams::bbo_type2();
            let a = biphoton_amplitude(TransverseWavevector::new(qx, qy), w, &c);
            prop_assert!(a.norm() <= 1.0 + 1e-15);
        }

        #[test]
        fn mismatch_odd_part_in_omega(qx in -300.0..300.0f64, qy in -300.0..300.0f64, w in -100.0..100.0f64) {
            let c = CrystalParams::bbo_type2();
            let q = TransverseWavevector::new(qx, qy);
            let sum = phase_mismatch(q, w, &c) + phase_mismatch(q, -w, &c);
            let want = 2.0 * (c.walkoff * qy + 2.0 * q.norm_sqr() / c.k_pump());
            prop_assert!((sum - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }

        #[test]
        fn triangular_even(a in -5.0..5.0f64) {
            prop_assert_eq!(triangular(a), triangular(-a));
        }
    }
}
