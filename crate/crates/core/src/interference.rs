//! Coincidence rate `R_C(tau) = R_0 [1 - Lambda(1 - 2 tau / DL) Re W(tau)]`
//! and the aberration kernel `W(tau)`.
//!
//! Two kernels are provided:
//!
//! * Infinite aperture. The detection-aperture transform collapses to a delta
//!   function on `q + q' = 0`, leaving
//!   `W(tau) = int H(q) H*(-q) exp(-i (2M/D) tau qy) dq / int p^2 dq`.
//! * Finite aperture, the full double integral over `(q, q')` with the
//!   propagation chirp, the aperture transform `P_A(q + q')` and the walk-off
//!   sinc. It is normalized by `a^2 / (4 pi)` (the inverse area of `P_A`) and
//!   `int p^2`, so that it tends to the infinite-aperture kernel as the
//!   aperture radius `a` grows.
//!
//! The finite-aperture kernel is evaluated through the detection plane: the
//! product `P_A(s) sinc(b s_y)` is the Fourier transform of the aperture disk
//! smeared by `+-b` along y, which splits the double integral into
//! `int w(x) F(x) conj(F(-x)) dx` with `F` a single 2D transform of the
//! chirped, delayed transfer function. `F` is computed on a Cartesian grid
//! with a centered chirp-z transform. [`full_kernel_quadrature`] evaluates the
//! same double integral directly on a 4D tensor rule and serves as its
//! independent check.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::biphoton::{triangular, CrystalParams, TransverseWavevector};
use crate::error::{Error, Result};
use crate::math;
use crate::optics::{RIM_TOLERANCE, aperture_ft, focal_plane_map, transfer_function, SetupGeometry};
use crate::quadrature::{integrate_4d, min_order_for, DiskRule, GridSpec};
use crate::spectral::CenteredDft;
use crate::zernike::AberrationPhase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    FiniteAperture,
    InfiniteAperture,
}

/// Transfer function restricted to the collection cone.
fn collected_transfer(q: TransverseWavevector, ab: &AberrationPhase, g: &SetupGeometry) -> Complex64 {
    if q.norm() > g.collection_radius_q() * RIM_TOLERANCE {
        Complex64::new(0.0, 0.0)
    } else {
        transfer_function(q, ab, g)
    }
}

/// Mirror phase factor with the pupil coordinate clamped to the rim; used
/// for grid cells that straddle the pupil edge.
fn clamped_phase_factor(q: TransverseWavevector, ab: &AberrationPhase, g: &SetupGeometry) -> Complex64 {
    if ab.is_empty() {
        return Complex64::new(1.0, 0.0);
    }
    let x = focal_plane_map(q, g);
    let rho = (math::hypot(x.x, x.y) / g.mirror_radius).min(1.0);
    let phi = ab.phase_polar_unchecked(rho, math::atan2(x.y, x.x));
    let (s, c) = math::sin_cos(phi);
    Complex64::new(c, s)
}

/// False on any NaN.
fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

/// Walk-off smear half-width `b = M L Lambda(1 - 2 tau / DL)`, mm.
fn walkoff_halfwidth(tau: f64, c: &CrystalParams) -> f64 {
    c.walkoff * c.thickness * triangular(1.0 - 2.0 * tau / c.dip_width())
}

/// Infinite-aperture kernel with the pupil-dependent factor tabulated on a
/// polar rule, so each delay costs one weighted sum.
#[derive(Debug, Clone)]
pub struct InfiniteKernel {
    qy: Vec<f64>,
    weighted: Vec<Complex64>,
    norm: f64,
    rate: f64,
}

impl InfiniteKernel {
    pub fn new(ab: &AberrationPhase, g: &SetupGeometry, c: &CrystalParams, grid: &GridSpec) -> Result<Self> {
        let rule = DiskRule::new(grid);
        let mut qy = Vec::with_capacity(rule.len());
        let mut weighted = Vec::with_capacity(rule.len());
        let mut norm = 0.0;
        for (&q, &w) in rule.nodes().iter().zip(rule.weights()) {
            let h = collected_transfer(q, ab, g);
            let hm = collected_transfer(-q, ab, g);
            let v = h * hm.conj();
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFiniteIntegrand { qx: q.qx, qy: q.qy });
            }
            norm += w * h.norm_sqr();
            if v != Complex64::new(0.0, 0.0) {
                qy.push(q.qy);
                weighted.push(v * w);
            }
        }
        if norm <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: "integration disk does not overlap the pupil",
            });
        }
        Ok(Self {
            qy,
            weighted,
            norm,
            rate: 2.0 * c.walkoff / c.gvm,
        })
    }

    pub fn evaluate(&self, tau: f64) -> Complex64 {
        let a = self.rate * tau;
        let mut acc = Complex64::new(0.0, 0.0);
        for (&qy, &v) in self.qy.iter().zip(&self.weighted) {
            let (s, c) = math::sin_cos(-a * qy);
            acc += v * Complex64::new(c, s);
        }
        acc / self.norm
    }
}

/// `W(tau)` in the large-aperture limit, normalized to 1 for a flat mirror at
/// `tau = 0`.
pub fn w_m_infinite(
    tau: f64,
    ab: &AberrationPhase,
    g: &SetupGeometry,
    c: &CrystalParams,
    grid: &GridSpec,
) -> Result<Complex64> {
    Ok(InfiniteKernel::new(ab, g, c, grid)?.evaluate(tau))
}

/// Cartesian sampling for the finite-aperture kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullSampling {
    /// Wavevector step, rad/mm.
    pub dq: f64,
    /// Wavevector samples per axis are `2 * half_q + 1`.
    pub half_q: usize,
    /// Detection-plane step, mm.
    pub dx: f64,
    /// Detection-plane samples per axis are `2 * half_x + 1`.
    pub half_x: usize,
}

impl FullSampling {
    /// Wavevector step only, chosen so the periodic images of the propagated
    /// field (period `2 pi / dq`) stay clear of the detection aperture.
    pub fn alias_limited(tau_max: f64, g: &SetupGeometry, c: &CrystalParams, radius: f64) -> Self {
        let reach = g.aperture_radius + c.walkoff * c.thickness;
        let chirp = 2.0 * g.d1 / c.k_pump();
        // field support: chirp spread plus the delay shift
        let spread = 2.0 * chirp * radius + c.walkoff / c.gvm * tau_max;
        let period = 1.25 * (reach + spread) + 20.0 * PI / radius;
        let dq = 2.0 * PI / period;
        let dx = (PI / (2.0 * radius)).min(g.aperture_radius / 32.0);
        Self {
            dq,
            half_q: math::ceil(radius / dq) as usize,
            dx,
            half_x: math::ceil(reach / dx) as usize,
        }
    }

    pub fn new(tau_max: f64, g: &SetupGeometry, c: &CrystalParams, grid: &GridSpec) -> Self {
        let radius = grid.radius;
        let mut s = Self::alias_limited(tau_max, g, c, radius);
        s.dq = s.dq.min(2.0 * radius / grid.order as f64);
        s.half_q = math::ceil(radius / s.dq) as usize;
        s
    }

    pub fn q_samples(&self) -> usize {
        2 * self.half_q + 1
    }

    pub fn x_samples(&self) -> usize {
        2 * self.half_x + 1
    }
}

/// Fraction of the square cell of side `h` centred at `(x, y)` inside the
/// disk of radius `r`.
fn cell_coverage(x: f64, y: f64, h: f64, r: f64) -> f64 {
    let d = math::hypot(x, y);
    let half_diag = h * core::f64::consts::FRAC_1_SQRT_2;
    if d + half_diag <= r {
        return 1.0;
    }
    if d - half_diag >= r {
        return 0.0;
    }
    const SUB: usize = 8;
    let mut inside = 0usize;
    for i in 0..SUB {
        let sx = x + h * ((i as f64 + 0.5) / SUB as f64 - 0.5);
        for j in 0..SUB {
            let sy = y + h * ((j as f64 + 0.5) / SUB as f64 - 0.5);
            if sx * sx + sy * sy <= r * r {
                inside += 1;
            }
        }
    }
    inside as f64 / (SUB * SUB) as f64
}

/// Unnormalized density of the aperture disk (radius `a`) smeared uniformly
/// over `[-b, b]` along y.
fn smeared_aperture(x: f64, y: f64, a: f64, b: f64) -> f64 {
    if math::abs(x) >= a {
        return 0.0;
    }
    let h = math::sqrt(a * a - x * x);
    if b <= 0.0 {
        return if math::abs(y) <= h { 1.0 } else { 0.0 };
    }
    let lo = (y - h).max(-b);
    let hi = (y + h).min(b);
    if hi > lo {
        (hi - lo) / (2.0 * b)
    } else {
        0.0
    }
}

/// Finite-aperture kernel evaluated through the detection plane.
#[derive(Debug, Clone)]
pub struct FullKernel {
    sampling: FullSampling,
    /// Coverage-weighted transfer function on the Cartesian grid, row-major
    /// with rows along qy.
    h0: Vec<Complex64>,
    q: Vec<f64>,
    pupil_norm: f64,
    chirp: f64,
    delay_rate: f64,
    aperture_radius: f64,
    crystal: CrystalParams,
    dft: CenteredDft,
}

impl FullKernel {
    pub fn new(
        ab: &AberrationPhase,
        g: &SetupGeometry,
        c: &CrystalParams,
        grid: &GridSpec,
        tau_max: f64,
    ) -> Result<Self> {
        let sampling = FullSampling::new(tau_max, g, c, grid);
        let n = sampling.q_samples();
        let k = sampling.half_q as f64;
        let q: Vec<f64> = (0..n).map(|i| (i as f64 - k) * sampling.dq).collect();
        let pupil = grid.radius.min(g.integration_radius());
        let mut h0 = alloc::vec![Complex64::new(0.0, 0.0); n * n];
        let mut pupil_norm = 0.0;
        for (row, &qy) in q.iter().enumerate() {
            for (col, &qx) in q.iter().enumerate() {
                let cov = cell_coverage(qx, qy, sampling.dq, pupil);
                if cov == 0.0 {
                    continue;
                }
                let v = clamped_phase_factor(TransverseWavevector::new(qx, qy), ab, g) * cov;
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NonFiniteIntegrand { qx, qy });
                }
                h0[row * n + col] = v;
                pupil_norm += cov * cov;
            }
        }
        if pupil_norm <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: "integration disk does not overlap the pupil",
            });
        }
        let dft = CenteredDft::new(sampling.half_q, sampling.half_x, sampling.dq * sampling.dx);
        Ok(Self {
            sampling,
            h0,
            q,
            pupil_norm,
            chirp: 2.0 * g.d1 / c.k_pump(),
            delay_rate: c.walkoff / c.gvm,
            aperture_radius: g.aperture_radius,
            crystal: *c,
            dft,
        })
    }

    pub fn sampling(&self) -> &FullSampling {
        &self.sampling
    }

    /// Propagated field `F(x_j, y_l)` up to the factor `dq^2`, row-major with
    /// rows along y.
    fn field(&self, tau: f64) -> Vec<Complex64> {
        let n = self.sampling.q_samples();
        let m = self.sampling.x_samples();
        let beta = self.delay_rate * tau;
        let phases: Vec<Complex64> = self
            .q
            .iter()
            .map(|&q| {
                let (s, c) = math::sin_cos(self.chirp * q * q);
                Complex64::new(c, s)
            })
            .collect();

        let mut scratch = self.dft.scratch();
        let mut row_in = alloc::vec![Complex64::new(0.0, 0.0); n];
        // partial[row * m + j]: transform along qx for every qy row
        let mut partial = alloc::vec![Complex64::new(0.0, 0.0); n * m];
        for row in 0..n {
            let src = &self.h0[row * n..(row + 1) * n];
            if src.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
                continue;
            }
            let qy = self.q[row];
            let (s, c) = math::sin_cos(-beta * qy);
            let row_phase = phases[row] * Complex64::new(c, s);
            for (dst, (h, p)) in row_in.iter_mut().zip(src.iter().zip(&phases)) {
                *dst = h * p * row_phase;
            }
            self.dft
                .apply(&row_in, &mut partial[row * m..(row + 1) * m], &mut scratch);
        }

        let mut field = alloc::vec![Complex64::new(0.0, 0.0); m * m];
        let mut col_out = alloc::vec![Complex64::new(0.0, 0.0); m];
        for j in 0..m {
            for (row, dst) in row_in.iter_mut().enumerate() {
                *dst = partial[row * m + j];
            }
            self.dft.apply(&row_in, &mut col_out, &mut scratch);
            for (l, v) in col_out.iter().enumerate() {
                field[l * m + j] = *v;
            }
        }
        field
    }

    pub fn evaluate(&self, tau: f64) -> Complex64 {
        let m = self.sampling.x_samples();
        let half = self.sampling.half_x as f64;
        let dx = self.sampling.dx;
        let a = self.aperture_radius;
        let b = walkoff_halfwidth(tau, &self.crystal);
        let field = self.field(tau);

        const SUB: usize = 4;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut wsum = 0.0;
        for l in 0..m {
            let y = (l as f64 - half) * dx;
            for j in 0..m {
                let x = (j as f64 - half) * dx;
                let mut w = 0.0;
                for si in 0..SUB {
                    let sx = x + dx * ((si as f64 + 0.5) / SUB as f64 - 0.5);
                    for sj in 0..SUB {
                        let sy = y + dx * ((sj as f64 + 0.5) / SUB as f64 - 0.5);
                        w += smeared_aperture(sx, sy, a, b);
                    }
                }
                if w == 0.0 {
                    continue;
                }
                wsum += w;
                let mirror = field[(m - 1 - l) * m + (m - 1 - j)];
                acc += field[l * m + j] * mirror.conj() * w;
            }
        }
        // The aperture average of F conj(F(-x)) carries dq^4 (F holds dq^2);
        // int p^2 = dq^2 * pupil_norm.
        let dq = self.sampling.dq;
        let avg = acc / wsum;
        avg * (a * a / (4.0 * PI)) * (dq * dq) / self.pupil_norm
    }
}

/// `W(tau)` for the finite detection aperture.
pub fn w_m_full(
    tau: f64,
    ab: &AberrationPhase,
    g: &SetupGeometry,
    c: &CrystalParams,
    grid: &GridSpec,
) -> Result<Complex64> {
    Ok(FullKernel::new(ab, g, c, grid, tau)?.evaluate(tau))
}

/// Which factors of the finite-aperture integrand to keep; used to build
/// reduced cases for checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FullKernelTerms {
    pub aperture: bool,
    pub walkoff_sinc: bool,
    pub propagation: bool,
}

impl FullKernelTerms {
    pub const ALL: Self = Self {
        aperture: true,
        walkoff_sinc: true,
        propagation: true,
    };
}

/// The raw finite-aperture double integral (no normalization) on a 4D tensor
/// rule.
pub fn full_kernel_quadrature(
    tau: f64,
    ab: &AberrationPhase,
    g: &SetupGeometry,
    c: &CrystalParams,
    grid: &GridSpec,
    terms: FullKernelTerms,
) -> Result<Complex64> {
    let chirp = if terms.propagation { 2.0 * g.d1 / c.k_pump() } else { 0.0 };
    let beta = c.walkoff / c.gvm * tau;
    let b = walkoff_halfwidth(tau, c);
    let field = |q: TransverseWavevector| {
        let (s, co) = math::sin_cos(chirp * q.norm_sqr() - beta * q.qy);
        collected_transfer(q, ab, g) * Complex64::new(co, s)
    };
    integrate_4d(
        |q, p| {
            let s = q + p;
            let mut v = field(q) * field(p).conj();
            if terms.aperture {
                v *= aperture_ft(s, g);
            }
            if terms.walkoff_sinc {
                v *= math::sinc(b * s.qy);
            }
            v
        },
        grid,
    )
}

/// Finite-aperture `W(tau)` from the direct 4D quadrature, with the same
/// normalization as [`w_m_full`].
pub fn w_m_full_quadrature(
    tau: f64,
    ab: &AberrationPhase,
    g: &SetupGeometry,
    c: &CrystalParams,
    grid: &GridSpec,
) -> Result<Complex64> {
    let raw = full_kernel_quadrature(tau, ab, g, c, grid, FullKernelTerms::ALL)?;
    let norm = DiskRule::new(grid)
        .integrate(|q| Complex64::new(collected_transfer(q, ab, g).norm_sqr(), 0.0))?
        .re;
    let a = g.aperture_radius;
    Ok(raw * (a * a / (4.0 * PI)) / norm)
}

/// Either kernel, prepared once for a delay range.
#[derive(Debug, Clone)]
pub enum Kernel {
    Infinite(InfiniteKernel),
    Full(Box<FullKernel>),
}

impl Kernel {
    pub fn new(
        model: Model,
        ab: &AberrationPhase,
        g: &SetupGeometry,
        c: &CrystalParams,
        grid: &GridSpec,
        tau_max: f64,
    ) -> Result<Self> {
        Ok(match model {
            Model::InfiniteAperture => Kernel::Infinite(InfiniteKernel::new(ab, g, c, grid)?),
            Model::FiniteAperture => Kernel::Full(Box::new(FullKernel::new(ab, g, c, grid, tau_max)?)),
        })
    }

    pub fn evaluate(&self, tau: f64) -> Complex64 {
        match self {
            Kernel::Infinite(k) => k.evaluate(tau),
            Kernel::Full(k) => k.evaluate(tau),
        }
    }
}

/// `R_0 (1 - Lambda(1 - 2 tau / DL) Re W)`.
pub fn rate_from_kernel(tau: f64, w: Complex64, c: &CrystalParams, r0: f64) -> f64 {
    r0 * (1.0 - triangular(1.0 - 2.0 * tau / c.dip_width()) * w.re)
}

#[allow(clippy::too_many_arguments)]
pub fn coincidence_rate(
    tau: f64,
    ab: &AberrationPhase,
    g: &SetupGeometry,
    c: &CrystalParams,
    grid: &GridSpec,
    model: Model,
    r0: f64,
) -> Result<f64> {
    if triangular(1.0 - 2.0 * tau / c.dip_width()) == 0.0 {
        return Ok(r0);
    }
    let w = Kernel::new(model, ab, g, c, grid, tau)?.evaluate(tau);
    Ok(rate_from_kernel(tau, w, c, r0))
}

/// Quadrature bookkeeping carried with every curve.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelDiagnostics {
    pub grid_order: usize,
    /// Order demanded by [`min_order_for`] at the largest delay.
    pub required_order: usize,
    pub under_resolved: bool,
    /// Largest `|Im W|` over the curve; dropped from the rate.
    pub max_abs_imag: f64,
    /// Cartesian samples per axis (finite-aperture kernel only).
    pub q_samples: Option<usize>,
    pub x_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DipCurve {
    pub tau: Vec<f64>,
    pub rate: Vec<f64>,
    pub r0: f64,
    pub model: Model,
    pub diagnostics: KernelDiagnostics,
}

impl DipCurve {
    pub fn from_samples(
        tau: Vec<f64>,
        rate: Vec<f64>,
        r0: f64,
        model: Model,
        diagnostics: KernelDiagnostics,
    ) -> Result<Self> {
        if tau.len() != rate.len() {
            return Err(Error::MismatchedGrids);
        }
        if !strictly_increasing(&tau) {
            return Err(Error::NonIncreasingTau);
        }
        for (&t, &r) in tau.iter().zip(&rate) {
            if !(r >= -1e-12 * r0 && r <= 2.0 * r0) {
                return Err(Error::RateOutOfBand { tau: t, rate: r });
            }
        }
        Ok(Self {
            tau,
            rate,
            r0,
            model,
            diagnostics,
        })
    }
}

/// `points` uniform delays over `[0, DL]`.
pub fn default_tau_grid(c: &CrystalParams, points: usize) -> Vec<f64> {
    let dl = c.dip_width();
    let last = points.saturating_sub(1).max(1) as f64;
    (0..points).map(|i| dl * i as f64 / last).collect()
}

/// Everything a curve needs besides the delays: kernel, bookkeeping.
pub struct CurvePlan {
    pub kernel: Kernel,
    pub diagnostics: KernelDiagnostics,
}

impl CurvePlan {
    pub fn new(
        tau_grid: &[f64],
        ab: &AberrationPhase,
        g: &SetupGeometry,
        c: &CrystalParams,
        grid: &GridSpec,
        model: Model,
    ) -> Result<Self> {
        if !strictly_increasing(tau_grid) {
            return Err(Error::NonIncreasingTau);
        }
        let tau_max = tau_grid.iter().fold(0.0f64, |m, t| m.max(math::abs(*t)));
        let kernel = Kernel::new(model, ab, g, c, grid, tau_max)?;
        let required_order = min_order_for(tau_max, g, c, grid.radius, model);
        let (q_samples, x_samples, grid_order) = match &kernel {
            Kernel::Full(k) => {
                let s = k.sampling();
                (Some(s.q_samples()), Some(s.x_samples()), s.q_samples())
            }
            Kernel::Infinite(_) => (None, None, grid.order),
        };
        Ok(Self {
            kernel,
            diagnostics: KernelDiagnostics {
                grid_order,
                required_order,
                under_resolved: grid_order < required_order,
                max_abs_imag: 0.0,
                q_samples,
                x_samples,
            },
        })
    }

    /// Kernel value at one delay; `None` where the triangle vanishes and the
    /// kernel does not enter the rate.
    pub fn kernel_at(&self, tau: f64, c: &CrystalParams) -> Option<Complex64> {
        if triangular(1.0 - 2.0 * tau / c.dip_width()) == 0.0 {
            None
        } else {
            Some(self.kernel.evaluate(tau))
        }
    }

    /// Assemble a curve from kernel values computed in any order.
    pub fn assemble(
        mut self,
        tau_grid: &[f64],
        kernels: &[Option<Complex64>],
        c: &CrystalParams,
        model: Model,
        r0: f64,
    ) -> Result<DipCurve> {
        let mut rate = Vec::with_capacity(tau_grid.len());
        for (&t, w) in tau_grid.iter().zip(kernels) {
            match w {
                Some(w) => {
                    if !(w.re.is_finite() && w.im.is_finite()) {
                        return Err(Error::NonFiniteIntegrand { qx: f64::NAN, qy: f64::NAN });
                    }
                    self.diagnostics.max_abs_imag = self.diagnostics.max_abs_imag.max(math::abs(w.im));
                    rate.push(rate_from_kernel(t, *w, c, r0));
                }
                None => rate.push(r0),
            }
        }
        DipCurve::from_samples(tau_grid.to_vec(), rate, r0, model, self.diagnostics)
    }
}

#[allow(clippy::too_many_arguments)]
pub fn dip_curve(
    tau_grid: &[f64],
    ab: &AberrationPhase,
    g: &SetupGeometry,
    c: &CrystalParams,
    grid: &GridSpec,
    model: Model,
    r0: f64,
) -> Result<DipCurve> {
    let plan = CurvePlan::new(tau_grid, ab, g, c, grid, model)?;
    let kernels: Vec<Option<Complex64>> = tau_grid.iter().map(|&t| plan.kernel_at(t, c)).collect();
    plan.assemble(tau_grid, &kernels, c, model, r0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipMetrics {
    /// `1 - min(rate) / r0`.
    pub visibility: f64,
    /// `max |rate - rate_ref| / r0`.
    pub residual_vs_flat: f64,
    /// Delay of the minimum rate, ps.
    pub min_location: f64,
}

pub fn dip_metrics(curve: &DipCurve, reference: &DipCurve) -> Result<DipMetrics> {
    if curve.tau != reference.tau {
        return Err(Error::MismatchedGrids);
    }
    let (imin, &rmin) = curve
        .rate
        .iter()
        .enumerate()
        .fold((0, &f64::INFINITY), |best, (i, r)| if *r < *best.1 { (i, r) } else { best });
    let residual = curve
        .rate
        .iter()
        .zip(&reference.rate)
        .map(|(a, b)| math::abs(a - b) / curve.r0)
        .fold(0.0, f64::max);
    Ok(DipMetrics {
        visibility: 1.0 - rmin / curve.r0,
        residual_vs_flat: residual,
        min_location: curve.tau.get(imin).copied().unwrap_or(0.0),
    })
}
