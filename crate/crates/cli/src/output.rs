//! CSV tables, metadata sidecars and the file writer.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use aberdip_core::interference::KernelDiagnostics;
use aberdip_core::{DipCurve, Model};
use serde::Serialize;

use crate::config::{Scenario, ScenarioConfig};
use crate::error::{CliError, CliResult};

/// Significant digits in every CSV number.
pub const CSV_DIGITS: usize = 12;

/// `v` rounded to [`CSV_DIGITS`] significant digits, printed in the shortest
/// form that reads back to the rounded value. Magnitudes outside
/// `[1e-4, 1e15)` use exponent notation.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{:.*e}", CSV_DIGITS - 1, v).parse().expect("float formats");
    let a = rounded.abs();
    if (1e-4..1e15).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

pub fn curve_csv(curve: &DipCurve) -> String {
    let mut out = String::from("tau_ps,rate,rate_normalized\n");
    for (&t, &r) in curve.tau.iter().zip(&curve.rate) {
        writeln!(out, "{},{},{}", fmt_sig(t), fmt_sig(r), fmt_sig(r / curve.r0)).unwrap();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub pv_um: f64,
    pub visibility: f64,
    pub residual_vs_flat: f64,
}

pub fn summary_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("pv_um,visibility,residual_vs_flat\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{}",
            fmt_sig(r.pv_um),
            fmt_sig(r.visibility),
            fmt_sig(r.residual_vs_flat)
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Serialize)]
pub struct Generator {
    pub name: &'static str,
    pub version: &'static str,
}

pub const GENERATOR: Generator = Generator {
    name: env!("CARGO_PKG_NAME"),
    version: env!("CARGO_PKG_VERSION"),
};

#[derive(Debug, Serialize)]
pub struct ResolvedMode {
    pub n: u32,
    pub m: i32,
    pub coeff_rad: f64,
}

/// Derived quantities and quadrature bookkeeping.
#[derive(Debug, Serialize)]
pub struct Resolved {
    pub model: &'static str,
    pub k0_rad_per_mm: f64,
    pub k_pump_rad_per_mm: f64,
    pub dip_width_ps: f64,
    pub pupil_radius_rad_per_mm: f64,
    pub integration_radius_rad_per_mm: f64,
    pub modes: Vec<ResolvedMode>,
    pub grid_order: usize,
    pub grid_order_auto: bool,
    pub angular_points: usize,
    pub required_order: usize,
    pub under_resolved: bool,
    pub max_abs_imag_w: f64,
    pub q_samples_per_axis: Option<usize>,
    pub x_samples_per_axis: Option<usize>,
}

pub fn model_name(m: Model) -> &'static str {
    match m {
        Model::FiniteAperture => "finite",
        Model::InfiniteAperture => "infinite",
    }
}

impl Resolved {
    pub fn new(s: &Scenario, diag: &KernelDiagnostics) -> Self {
        Self {
            model: model_name(s.model),
            k0_rad_per_mm: s.geometry.k0,
            k_pump_rad_per_mm: s.crystal.k_pump(),
            dip_width_ps: s.crystal.dip_width(),
            pupil_radius_rad_per_mm: s.geometry.pupil_radius_q(),
            integration_radius_rad_per_mm: s.grid.radius,
            modes: s
                .aberration
                .modes()
                .iter()
                .map(|md| ResolvedMode {
                    n: md.n(),
                    m: md.m(),
                    coeff_rad: md.coeff(),
                })
                .collect(),
            grid_order: s.grid.order,
            grid_order_auto: s.config.grid_order == crate::config::GridOrder::Auto,
            angular_points: s.grid.angular,
            required_order: diag.required_order,
            under_resolved: diag.under_resolved,
            max_abs_imag_w: diag.max_abs_imag,
            q_samples_per_axis: diag.q_samples,
            x_samples_per_axis: diag.x_samples,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CurveSummary {
    pub visibility: f64,
    pub min_location_ps: f64,
}

/// Sidecar for a single curve. Its `config` member is a complete config.
#[derive(Debug, Serialize)]
pub struct DipMetadata<'a> {
    pub generator: Generator,
    pub config: &'a ScenarioConfig,
    pub resolved: Resolved,
    pub curve: CurveSummary,
    pub files: Vec<String>,
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("metadata serializes");
    s.push('\n');
    s
}

/// `prefix` with `suffix` appended to the file name.
pub fn with_suffix(prefix: &str, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}{suffix}"))
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}
