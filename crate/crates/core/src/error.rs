use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid Zernike indices (n={n}, m={m}): need |m| <= n and n - |m| even")]
    InvalidZernikeIndices { n: u32, m: i32 },
    #[error("duplicate Zernike mode (n={n}, m={m})")]
    DuplicateMode { n: u32, m: i32 },
    #[error("point at rho={rho} lies outside the unit pupil")]
    OutsidePupil { rho: f64 },
    #[error("parameter `{name}` out of range: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("non-finite integrand at q=({qx}, {qy})")]
    NonFiniteIntegrand { qx: f64, qy: f64 },
    #[error("tau grids differ between curve and reference")]
    MismatchedGrids,
    #[error("tau grid must be strictly increasing")]
    NonIncreasingTau,
    #[error("rate {rate} at tau={tau} ps is outside the sanity band [0, 2*r0]")]
    RateOutOfBand { tau: f64, rate: f64 },
}
