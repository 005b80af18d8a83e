//! Zernike radial polynomials and aberration phase maps on the unit disk.
//!
//! Angular convention: `cos(m θ)` for `m >= 0` and `sin(|m| θ)` for `m < 0`.
//! Polynomials carry no normalization factor, so `R_n^m(1) = 1`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::biphoton::TransverseWavevector;
use crate::error::{Error, Result};
use crate::math;

/// Highest radial order accepted. The factorial-sum coefficients stay exact in
/// `f64` well past this, but cancellation near `rho = 1` grows with `n`.
pub const MAX_RADIAL_ORDER: u32 = 40;

/// Samples per axis of the polar scan used for peak-to-valley normalization.
pub const PV_SCAN_SIZE: usize = 512;

fn check_indices(n: u32, m: i32) -> Result<()> {
    let am = m.unsigned_abs();
    if am > n || !(n - am).is_multiple_of(2) || n > MAX_RADIAL_ORDER {
        return Err(Error::InvalidZernikeIndices { n, m });
    }
    Ok(())
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * f64::from(n - i) / f64::from(i + 1);
    }
    // Every partial product is an integer, so rounding only removes drift.
    libm::round(acc)
}

/// Coefficients of `R_n^|m|` in powers of `rho^2`, after factoring out
/// `rho^|m|`. Entry `j` multiplies `rho^(|m| + 2j)`.
///
/// From the factorial sum
/// `(-1)^k (n-k)! / (k! ((n+|m|)/2-k)! ((n-|m|)/2-k)!)`, written as the
/// product of binomials `C(n-k, k) * C(n-2k, (n-|m|)/2-k)`.
fn radial_coefficients(n: u32, m: i32) -> Vec<f64> {
    let am = m.unsigned_abs();
    let half = (n - am) / 2;
    let mut coeffs = alloc::vec![0.0; half as usize + 1];
    for k in 0..=half {
        let c = binomial(n - k, k) * binomial(n - 2 * k, half - k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        // power n - 2k = |m| + 2 (half - k)
        coeffs[(half - k) as usize] = sign * c;
    }
    coeffs
}

fn eval_radial(coeffs: &[f64], am: u32, rho: f64) -> f64 {
    let r2 = rho * rho;
    let poly = coeffs.iter().rev().fold(0.0, |acc, &c| acc * r2 + c);
    let mut lead = 1.0;
    for _ in 0..am {
        lead *= rho;
    }
    lead * poly
}

/// `R_n^|m|(rho)`.
pub fn radial_poly(n: u32, m: i32, rho: f64) -> Result<f64> {
    check_indices(n, m)?;
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::OutsidePupil { rho });
    }
    Ok(eval_radial(&radial_coefficients(n, m), m.unsigned_abs(), rho))
}

/// Terms of `R_n^m` as `(power of rho, coefficient)`, highest power first.
pub fn radial_terms(n: u32, m: i32) -> Result<Vec<(u32, f64)>> {
    check_indices(n, m)?;
    let am = m.unsigned_abs();
    Ok(radial_coefficients(n, m)
        .iter()
        .enumerate()
        .rev()
        .map(|(j, &c)| (am + 2 * j as u32, c))
        .collect())
}

#[inline]
fn angular(m: i32, theta: f64) -> f64 {
    if m >= 0 {
        math::cos(f64::from(m) * theta)
    } else {
        math::sin(f64::from(-m) * theta)
    }
}

/// One aberration term: radial order `n`, azimuthal order `m`, phase
/// coefficient in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct ZernikeMode {
    n: u32,
    m: i32,
    coeff: f64,
    radial: Vec<f64>,
}

impl ZernikeMode {
    pub fn new(n: u32, m: i32, coeff: f64) -> Result<Self> {
        check_indices(n, m)?;
        if !coeff.is_finite() {
            return Err(Error::InvalidParameter {
                name: "coeff",
                reason: "must be finite",
            });
        }
        Ok(Self {
            n,
            m,
            coeff,
            radial: radial_coefficients(n, m),
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> i32 {
        self.m
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn is_odd(&self) -> bool {
        self.m % 2 != 0
    }

    /// Unit-coefficient basis value `R_n^|m|(rho) * angular(m, theta)`; no pupil check.
    #[inline]
    fn basis(&self, rho: f64, theta: f64) -> f64 {
        eval_radial(&self.radial, self.m.unsigned_abs(), rho) * angular(self.m, theta)
    }
}

/// `coeff * R_n^|m|(rho) * angular(m, theta)`.
pub fn zernike_eval(mode: &ZernikeMode, rho: f64, theta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::OutsidePupil { rho });
    }
    Ok(mode.coeff * mode.basis(rho, theta))
}

/// A set of Zernike modes with distinct `(n, m)`, defining a phase over the
/// unit disk.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AberrationPhase {
    modes: Vec<ZernikeMode>,
}

impl AberrationPhase {
    /// The flat mirror.
    pub fn flat() -> Self {
        Self::default()
    }

    pub fn new(modes: Vec<ZernikeMode>) -> Result<Self> {
        for (i, a) in modes.iter().enumerate() {
            if modes[..i].iter().any(|b| b.n == a.n && b.m == a.m) {
                return Err(Error::DuplicateMode { n: a.n, m: a.m });
            }
        }
        Ok(Self { modes })
    }

    pub fn single(n: u32, m: i32, coeff: f64) -> Result<Self> {
        Ok(Self {
            modes: alloc::vec![ZernikeMode::new(n, m, coeff)?],
        })
    }

    pub fn modes(&self) -> &[ZernikeMode] {
        &self.modes
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Phase at polar pupil coordinates, `rho` in `[0, 1]`.
    pub fn phase_polar(&self, rho: f64, theta: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::OutsidePupil { rho });
        }
        Ok(self.phase_polar_unchecked(rho, theta))
    }

    #[inline]
    pub(crate) fn phase_polar_unchecked(&self, rho: f64, theta: f64) -> f64 {
        self.modes
            .iter()
            .map(|md| md.coeff * md.basis(rho, theta))
            .sum()
    }
}

/// `phi(q)` with `rho = |q| / pupil_scale` and `theta = atan2(qy, qx)`.
pub fn phase_map(ab: &AberrationPhase, q: TransverseWavevector, pupil_scale: f64) -> Result<f64> {
    let rho = q.norm() / pupil_scale;
    ab.phase_polar(rho, math::atan2(q.qy, q.qx))
}

/// The modes with odd `m`. These are the only ones that survive in
/// `phi(q) - phi(-q)`, which equals twice the odd part.
pub fn odd_part(ab: &AberrationPhase) -> AberrationPhase {
    AberrationPhase {
        modes: ab.modes.iter().filter(|md| md.is_odd()).cloned().collect(),
    }
}

/// The modes with even `m`.
pub fn even_part(ab: &AberrationPhase) -> AberrationPhase {
    AberrationPhase {
        modes: ab.modes.iter().filter(|md| !md.is_odd()).cloned().collect(),
    }
}

/// Peak-to-valley of the unit-coefficient mode over the unit disk, from a
/// `PV_SCAN_SIZE x PV_SCAN_SIZE` polar scan (radii include 0 and 1).
pub fn basis_peak_to_valley(n: u32, m: i32) -> Result<f64> {
    let mode = ZernikeMode::new(n, m, 1.0)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..PV_SCAN_SIZE {
        let rho = i as f64 / (PV_SCAN_SIZE - 1) as f64;
        for j in 0..PV_SCAN_SIZE {
            let theta = 2.0 * PI * j as f64 / PV_SCAN_SIZE as f64;
            let v = mode.basis(rho, theta);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    Ok(hi - lo)
}

/// Phase coefficient (rad) for a mirror deformation of peak-to-valley `pv`
/// (mm) in mode `(n, m)`. The reflected phase is `2 k0 zeta`, so the returned
/// coefficient makes the single-mode phase map span exactly `2 k0 pv`.
pub fn pv_to_coeff(pv: f64, n: u32, m: i32, k0: f64) -> Result<f64> {
    pv_to_coeff_with_span(pv, basis_peak_to_valley(n, m)?, k0)
}

fn pv_to_coeff_with_span(pv: f64, span: f64, k0: f64) -> Result<f64> {
    if !pv.is_finite() || pv < 0.0 {
        return Err(Error::InvalidParameter {
            name: "pv",
            reason: "must be finite and non-negative",
        });
    }
    if pv == 0.0 {
        return Ok(0.0);
    }
    if span <= 0.0 {
        // piston has no peak-to-valley to scale
        return Err(Error::InvalidParameter {
            name: "pv",
            reason: "mode has zero peak-to-valley over the pupil",
        });
    }
    Ok(2.0 * k0 * pv / span)
}

/// Per-worker cache of peak-to-valley spans keyed by `(n, m)`.
#[derive(Debug, Default, Clone)]
pub struct PvCache {
    spans: BTreeMap<(u32, i32), f64>,
}

impl PvCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn span(&mut self, n: u32, m: i32) -> Result<f64> {
        if let Some(&s) = self.spans.get(&(n, m)) {
            return Ok(s);
        }
        let s = basis_peak_to_valley(n, m)?;
        self.spans.insert((n, m), s);
        Ok(s)
    }

    pub fn pv_to_coeff(&mut self, pv: f64, n: u32, m: i32, k0: f64) -> Result<f64> {
        let span = self.span(n, m)?;
        pv_to_coeff_with_span(pv, span, k0)
    }
}
