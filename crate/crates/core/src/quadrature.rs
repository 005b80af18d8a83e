//! Quadrature over wavevector disks and their products.
//!
//! Rules are polar: a radial rule on `[0, radius]` (Gauss-Legendre or uniform
//! trapezoid, with the `r` Jacobian folded into the weights) times a uniform
//! periodic rule in angle. The integrand is assumed to vanish outside the disk.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::biphoton::{CrystalParams, TransverseWavevector};
use crate::error::{Error, Result};
use crate::interference::{FullSampling, Model};
use crate::math;
use crate::optics::SetupGeometry;

/// Smallest accepted grid order.
pub const MIN_ORDER: usize = 8;

/// Floor returned by [`min_order_for`].
pub const ORDER_FLOOR: usize = 64;

/// Points demanded per period of the fastest phase factor.
pub const POINTS_PER_PERIOD: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    GaussLegendre,
    Trapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Disk radius, rad/mm.
    pub radius: f64,
    /// Radial points (for the finite-aperture kernel: minimum samples per
    /// Cartesian axis).
    pub order: usize,
    /// Angular points; even so the rule is symmetric under `q -> -q`.
    pub angular: usize,
    pub scheme: Scheme,
}

impl GridSpec {
    pub fn new(radius: f64, order: usize, scheme: Scheme) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter {
                name: "radius",
                reason: "must be > 0",
            });
        }
        if order < MIN_ORDER {
            return Err(Error::InvalidParameter {
                name: "order",
                reason: "must be >= 8",
            });
        }
        Ok(Self {
            radius,
            order,
            angular: 2 * order,
            scheme,
        })
    }

    pub fn with_angular(mut self, angular: usize) -> Result<Self> {
        if angular < MIN_ORDER || !angular.is_multiple_of(2) {
            return Err(Error::InvalidParameter {
                name: "angular",
                reason: "must be even and >= 8",
            });
        }
        self.angular = angular;
        Ok(self)
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = math::cos(PI * (i as f64 + 0.75) / (nf + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let (p, pm1) = if n == 0 { (1.0, 0.0) } else { (p1, p0) };
            dp = nf * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if math::abs(dz) < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Nodes and weights of a polar rule on a disk.
#[derive(Debug, Clone)]
pub struct DiskRule {
    nodes: Vec<TransverseWavevector>,
    weights: Vec<f64>,
}

impl DiskRule {
    pub fn new(g: &GridSpec) -> Self {
        let radius = g.radius;
        let (radii, radial_w): (Vec<f64>, Vec<f64>) = match g.scheme {
            Scheme::GaussLegendre => {
                let (x, w) = gauss_legendre(g.order);
                x.iter()
                    .zip(&w)
                    .map(|(&xi, &wi)| {
                        let r = 0.5 * radius * (1.0 + xi);
                        (r, 0.5 * radius * wi * r)
                    })
                    .unzip()
            }
            Scheme::Trapezoid => {
                let h = radius / g.order as f64;
                // r = 0 carries zero weight
                (1..=g.order)
                    .map(|i| {
                        let r = i as f64 * h;
                        let end = if i == g.order { 0.5 } else { 1.0 };
                        (r, end * h * r)
                    })
                    .unzip()
            }
        };
        let dtheta = 2.0 * PI / g.angular as f64;
        let angles: Vec<(f64, f64)> = (0..g.angular)
            .map(|j| math::sin_cos((j as f64 + 0.5) * dtheta))
            .collect();
        let mut nodes = Vec::with_capacity(radii.len() * angles.len());
        let mut weights = Vec::with_capacity(nodes.capacity());
        for (&r, &wr) in radii.iter().zip(&radial_w) {
            for &(s, c) in &angles {
                nodes.push(TransverseWavevector::new(r * c, r * s));
                weights.push(wr * dtheta);
            }
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[TransverseWavevector] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F>(&self, mut f: F) -> Result<Complex64>
    where
        F: FnMut(TransverseWavevector) -> Complex64,
    {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&q, &w) in self.nodes.iter().zip(&self.weights) {
            let v = f(q);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFiniteIntegrand { qx: q.qx, qy: q.qy });
            }
            acc += v * w;
        }
        Ok(acc)
    }
}

/// `integral f(q) dq` over the disk of `g.radius`.
pub fn integrate_2d<F>(f: F, g: &GridSpec) -> Result<Complex64>
where
    F: FnMut(TransverseWavevector) -> Complex64,
{
    DiskRule::new(g).integrate(f)
}

/// `integral f(q, q') dq dq'` over the product of two disks of `g.radius`.
pub fn integrate_4d<F>(f: F, g: &GridSpec) -> Result<Complex64>
where
    F: FnMut(TransverseWavevector, TransverseWavevector) -> Complex64,
{
    integrate_4d_product(f, g, g)
}

/// `integral f(q, q') dq dq'` with separate rules for `q` and `q'`.
/// Costs `|rule_q| * |rule_q'|` integrand calls.
pub fn integrate_4d_product<F>(mut f: F, gq: &GridSpec, gp: &GridSpec) -> Result<Complex64>
where
    F: FnMut(TransverseWavevector, TransverseWavevector) -> Complex64,
{
    let outer = DiskRule::new(gq);
    let inner = if gq == gp {
        outer.clone()
    } else {
        DiskRule::new(gp)
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for (&q, &wq) in outer.nodes.iter().zip(&outer.weights) {
        let mut row = Complex64::new(0.0, 0.0);
        for (&p, &wp) in inner.nodes.iter().zip(&inner.weights) {
            let v = f(q, p);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFiniteIntegrand { qx: q.qx, qy: q.qy });
            }
            row += v * wp;
        }
        acc += row * wq;
    }
    Ok(acc)
}

/// Grid order that resolves the kernel phases out to `tau_max`.
///
/// Infinite aperture: at least [`POINTS_PER_PERIOD`] points per period of
/// `exp(-i (2M/D) tau qy)` across the disk diameter, floored at
/// [`ORDER_FLOOR`]. Finite aperture: Cartesian samples per axis needed so the
/// propagated field (chirp `exp(i 2 d1 |q|^2 / k_p)` plus the delay shift
/// `exp(-i (M/D) tau qy)`) does not alias onto the detection aperture.
pub fn min_order_for(
    tau_max: f64,
    g: &SetupGeometry,
    c: &CrystalParams,
    radius: f64,
    model: Model,
) -> usize {
    let tau = math::abs(tau_max);
    let needed = match model {
        Model::InfiniteAperture => {
            let k = 2.0 * c.walkoff * tau / c.gvm;
            POINTS_PER_PERIOD * 2.0 * radius * k / (2.0 * PI)
        }
        Model::FiniteAperture => {
            let plan = FullSampling::alias_limited(tau, g, c, radius);
            2.0 * radius / plan.dq
        }
    };
    ORDER_FLOOR.max(math::ceil(needed) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::jinc;

    fn gl(radius: f64, order: usize) -> GridSpec {
        GridSpec::new(radius, order, Scheme::GaussLegendre).unwrap()
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let (x, w) = gauss_legendre(10);
        for deg in 0..20 {
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((got - want).abs() < 1e-14, "deg {deg}");
        }
        let (_, w) = gauss_legendre(1000);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn disk_area() {
        let r = 3.0;
        let area = integrate_2d(|_| Complex64::new(1.0, 0.0), &gl(r, 16)).unwrap();
        assert!((area.re - PI * r * r).abs() < 1e-12);
        // pupil smaller than the domain: a jump inside the rule
        let pupil = 2.5;
        let f = |q: TransverseWavevector| Complex64::new(if q.norm() <= pupil { 1.0 } else { 0.0 }, 0.0);
        let area = integrate_2d(f, &gl(r, 256)).unwrap();
        let want = PI * pupil * pupil;
        assert!(((area.re - want) / want).abs() < 5e-3);
    }

    #[test]
    fn odd_integrand_vanishes() {
        let v = integrate_2d(|q| Complex64::new(q.qx, q.qy * q.qy * q.qy), &gl(5.0, 40)).unwrap();
        assert!(v.norm() < 1e-12, "{v}");
    }

    #[test]
    fn disk_fourier_transform() {
        let (r, a) = (2.0, 3.7);
        let want = 2.0 * PI * r * r * libm::j1(a * r) / (a * r);
        for scheme in [Scheme::GaussLegendre, Scheme::Trapezoid] {
            let order = if scheme == Scheme::GaussLegendre { 48 } else { 2000 };
            let g = GridSpec::new(r, order, scheme).unwrap().with_angular(96).unwrap();
            let v = integrate_2d(|q| Complex64::new(0.0, a * q.qy).exp(), &g).unwrap();
            assert!((v.re - want).abs() < 1e-6 * want.abs().max(1.0), "{scheme:?} {v} {want}");
            assert!(v.im.abs() < 1e-12);
        }
        // same value through the jinc normalization
        assert!((want - PI * r * r * jinc(a * r)).abs() < 1e-12);
    }

    #[test]
    fn four_d_cases() {
        let r = 1.5;
        let g = gl(r, 12);
        let one = integrate_4d(|_, _| Complex64::new(1.0, 0.0), &g).unwrap();
        assert!((one.re - (PI * r * r).powi(2)).abs() < 1e-10);

        let gq = |q: TransverseWavevector| Complex64::new(q.qx * q.qx, q.qy);
        let hq = |q: TransverseWavevector| Complex64::new(1.0 + q.qy * q.qy, -q.qx);
        let sep = integrate_4d(|q, p| gq(q) * hq(p), &g).unwrap();
        let prod = integrate_2d(gq, &g).unwrap() * integrate_2d(hq, &g).unwrap();
        assert!((sep - prod).norm() < 1e-10);

        let a = 1.1;
        let v = integrate_4d(|q, p| Complex64::new(0.0, a * (q.qy - p.qy)).exp(), &g).unwrap();
        let disk = 2.0 * PI * r * r * libm::j1(a * r) / (a * r);
        assert!((v.re - disk * disk).abs() < 1e-9, "{v}");
    }

    #[test]
    fn non_finite_reported_with_point() {
        let g = gl(1.0, 8);
        let err = integrate_2d(|q| Complex64::new(1.0 / (q.qx - q.qx), 0.0), &g).unwrap_err();
        assert!(matches!(err, Error::NonFiniteIntegrand { .. }));
    }

    #[test]
    fn grid_spec_rejects() {
        assert!(GridSpec::new(1.0, 7, Scheme::GaussLegendre).is_err());
        assert!(GridSpec::new(0.0, 32, Scheme::GaussLegendre).is_err());
        assert!(gl(1.0, 32).with_angular(9).is_err());
    }

    #[test]
    fn deterministic() {
        let g = gl(4.0, 30);
        let f = |q: TransverseWavevector| Complex64::new(0.0, q.qx * 0.3 + q.qy * q.qy).exp();
        let a = integrate_2d(f, &g).unwrap();
        let b = integrate_2d(f, &g).unwrap();
        assert_eq!(a.re.to_bits(), b.re.to_bits());
        assert_eq!(a.im.to_bits(), b.im.to_bits());
    }

    #[test]
    fn min_order_floor_and_monotone() {
        let c = CrystalParams::bbo_type2();
        let g = SetupGeometry::experimental(c.k_degenerate());
        let r = g.integration_radius();
        assert_eq!(min_order_for(1e-9, &g, &c, r, Model::InfiniteAperture), ORDER_FLOOR);
        let mut prev = 0;
        let mut tau = 0.01;
        for _ in 0..8 {
            let o = min_order_for(tau, &g, &c, r, Model::InfiniteAperture);
            assert!(o >= prev);
            prev = o;
            tau *= 2.0;
        }
        let mut prev = 0;
        let mut tau = 0.01;
        for _ in 0..6 {
            let o = min_order_for(tau, &g, &c, r, Model::FiniteAperture);
            assert!(o >= prev);
            prev = o;
            tau *= 2.0;
        }
    }

    #[test]
    fn min_order_default_geometry() {
        let c = CrystalParams::bbo_type2();
        let g = SetupGeometry::experimental(c.k_degenerate());
        let r = g.integration_radius();
        let o = min_order_for(c.dip_width(), &g, &c, r, Model::InfiniteAperture);
        // 8 * 2R * (2 M L) / (2 pi) with R = 0.025 k0
        let want = (8.0 * 2.0 * r * 2.0 * c.walkoff * c.thickness / (2.0 * PI)).ceil() as usize;
        assert_eq!(o, want);
        assert_eq!(o, 108);
    }
}
