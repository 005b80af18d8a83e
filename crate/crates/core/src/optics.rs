//! 4-f imaging onto the deformable mirror, the mirror pupil and the detection
//! aperture.

use num_complex::Complex64;

use crate::biphoton::TransverseWavevector;
use crate::error::{Error, Result};
use crate::math;
use crate::zernike::AberrationPhase;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetupGeometry {
    /// 4-f focal length, mm.
    pub focal_length: f64,
    /// Degenerate wavenumber, rad/mm.
    pub k0: f64,
    /// Pupil radius on the mirror, mm.
    pub mirror_radius: f64,
    /// Detection pinhole radius, mm.
    pub aperture_radius: f64,
    /// Propagation distance to the detection aperture, mm.
    pub d1: f64,
    /// Collection angle, rad. Bounds the transverse wavevectors at `k0 * angle`.
    pub collection_angle: f64,
}

impl SetupGeometry {
    pub fn new(
        focal_length: f64,
        k0: f64,
        mirror_radius: f64,
        aperture_radius: f64,
        d1: f64,
        collection_angle: f64,
    ) -> Result<Self> {
        let check = |v: f64, name: &'static str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: "must be > 0",
                })
            }
        };
        check(focal_length, "focal_length")?;
        check(k0, "k0")?;
        check(mirror_radius, "mirror_radius")?;
        check(aperture_radius, "aperture_radius")?;
        check(collection_angle, "collection_angle")?;
        if !(d1.is_finite() && d1 >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "d1",
                reason: "must be >= 0",
            });
        }
        Ok(Self {
            focal_length,
            k0,
            mirror_radius,
            aperture_radius,
            d1,
            collection_angle,
        })
    }

    /// f = 200 mm, 12 mm mirror, 8 mm pinhole at 330 mm, 25 mrad collection,
    /// for the degenerate wavenumber `k0`.
    pub fn experimental(k0: f64) -> Self {
        Self {
            focal_length: 200.0,
            k0,
            mirror_radius: 6.0,
            aperture_radius: 4.0,
            d1: 330.0,
            collection_angle: 0.025,
        }
    }

    /// Wavevector radius imaged onto the mirror rim.
    pub fn pupil_radius_q(&self) -> f64 {
        self.k0 * self.mirror_radius / self.focal_length
    }

    /// Wavevector radius admitted by the collection angle.
    pub fn collection_radius_q(&self) -> f64 {
        self.k0 * self.collection_angle
    }

    /// Radius of the wavevector disk that carries the whole integrand: the
    /// tighter of the mirror pupil and the collection limit.
    pub fn integration_radius(&self) -> f64 {
        self.pupil_radius_q().min(self.collection_radius_q())
    }
}

/// Point on the mirror (mm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorPoint {
    pub x: f64,
    pub y: f64,
}

/// Relative slack on hard pupil edges, so nodes placed on the rim are not
/// lost to rounding.
pub(crate) const RIM_TOLERANCE: f64 = 1.0 + 1e-12;

/// `x = (f / k0) q`; the lens is taken as achromatic.
pub fn focal_plane_map(q: TransverseWavevector, g: &SetupGeometry) -> MirrorPoint {
    let s = g.focal_length / g.k0;
    MirrorPoint {
        x: s * q.qx,
        y: s * q.qy,
    }
}

/// `H(q) = p(x) exp(i phi(x))` with `x` the mirror point of `q`; zero outside
/// the mirror pupil.
pub fn transfer_function(q: TransverseWavevector, ab: &AberrationPhase, g: &SetupGeometry) -> Complex64 {
    let x = focal_plane_map(q, g);
    let r = math::hypot(x.x, x.y);
    if r > g.mirror_radius * RIM_TOLERANCE {
        return Complex64::new(0.0, 0.0);
    }
    if ab.is_empty() {
        return Complex64::new(1.0, 0.0);
    }
    let phi = ab.phase_polar_unchecked((r / g.mirror_radius).min(1.0), math::atan2(x.y, x.x));
    let (s, c) = math::sin_cos(phi);
    Complex64::new(c, s)
}

/// `2 J1(z) / z` with `jinc(0) = 1`.
pub fn jinc(z: f64) -> f64 {
    if math::abs(z) < 1e-6 {
        1.0 - z * z / 8.0
    } else {
        2.0 * libm::j1(z) / z
    }
}

/// Fourier transform of the circular detection aperture, normalized to 1 at
/// the origin.
pub fn aperture_ft(qsum: TransverseWavevector, g: &SetupGeometry) -> f64 {
    jinc(g.aperture_radius * qsum.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biphoton::CrystalParams;

    /// Power series of J1, the oracle for `libm::j1` on moderate arguments.
    fn j1_series(x: f64) -> f64 {
        let mut term = x / 2.0;
        let mut sum = term;
        for k in 1..80 {
            term *= -(x * x / 4.0) / (k as f64 * (k + 1) as f64);
            sum += term;
        }
        sum
    }

    fn geometry() -> SetupGeometry {
        SetupGeometry::experimental(CrystalParams::bbo_type2().k_degenerate())
    }

    #[test]
    fn focal_map_examples() {
        let g = geometry();
        let x = focal_plane_map(TransverseWavevector::ZERO, &g);
        assert_eq!((x.x, x.y), (0.0, 0.0));
        let x = focal_plane_map(TransverseWavevector::new(1.0, 0.0), &g);
        assert!((x.x - 0.02578).abs() < 1e-5, "{}", x.x);
        assert_eq!(x.y, 0.0);
        let q = TransverseWavevector::new(3.1, -7.4);
        let a = focal_plane_map(q * 2.0, &g);
        let b = focal_plane_map(q, &g);
        assert!((a.x - 2.0 * b.x).abs() < 1e-15 && (a.y - 2.0 * b.y).abs() < 1e-15);
    }

    #[test]
    fn transfer_examples() {
        let g = geometry();
        let flat = AberrationPhase::flat();
        let inside = TransverseWavevector::new(50.0, -20.0);
        assert_eq!(transfer_function(inside, &flat, &g), Complex64::new(1.0, 0.0));
        let outside = TransverseWavevector::new(g.pupil_radius_q() * 1.01, 0.0);
        let ab = AberrationPhase::single(3, 1, 2.0).unwrap();
        assert_eq!(transfer_function(outside, &ab, &g), Complex64::new(0.0, 0.0));

        let c = 0.8;
        let defocus = AberrationPhase::single(2, 0, c).unwrap();
        let edge = TransverseWavevector::new(0.0, g.pupil_radius_q() * (1.0 - 1e-15));
        let h = transfer_function(edge, &defocus, &g);
        assert!((h - Complex64::new(c.cos(), c.sin())).norm() < 1e-12);
    }

    #[test]
    fn aperture_examples() {
        let g = geometry();
        assert_eq!(aperture_ft(TransverseWavevector::ZERO, &g), 1.0);
        let u = TransverseWavevector::new(3.831_705_970_207_512 / g.aperture_radius, 0.0);
        assert!(aperture_ft(u, &g).abs() < 1e-12);
        let u = TransverseWavevector::new(0.0, 1.0 / g.aperture_radius);
        let v = aperture_ft(u, &g);
        assert!((v - 2.0 * j1_series(1.0)).abs() < 1e-14);
        assert!((v - 0.8801).abs() < 1e-4);
    }

    #[test]
    fn j1_agrees_with_series() {
        for i in 0..=240 {
            let x = i as f64 * 0.05;
            assert!((libm::j1(x) - j1_series(x)).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn integration_radius_is_collection_limited() {
        let g = geometry();
        let k0 = g.k0;
        assert!((g.pupil_radius_q() - k0 * 0.03).abs() < 1e-9);
        assert!((g.integration_radius() - k0 * 0.025).abs() < 1e-9);
        let small = SetupGeometry { mirror_radius: 0.5, ..g };
        assert!((small.integration_radius() - k0 * 0.5 / 200.0).abs() < 1e-12);
        assert!((small.integration_radius() - 19.39).abs() < 0.01);
    }

    #[test]
    fn unit_modulus_or_zero() {
        let g = geometry();
        let ab = AberrationPhase::single(3, -1, 4.2).unwrap();
        for i in 0..200 {
            let t = i as f64 * 0.37;
            let q = TransverseWavevector::new(260.0 * (t.sin()), 240.0 * (1.3 * t).cos());
            let m = transfer_function(q, &ab, &g).norm();
            assert!(m == 0.0 || (m - 1.0).abs() < 1e-15, "{m}");
        }
    }

    #[test]
    fn geometry_rejects() {
        assert!(SetupGeometry::new(0.0, 7757.0, 6.0, 4.0, 330.0, 0.025).is_err());
        assert!(SetupGeometry::new(200.0, 7757.0, 6.0, 4.0, -1.0, 0.025).is_err());
        assert!(SetupGeometry::new(200.0, 7757.0, 6.0, 4.0, 0.0, 0.025).is_ok());
    }
}
