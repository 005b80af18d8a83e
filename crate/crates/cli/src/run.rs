//! Scenario execution. Delays are spread over the rayon pool; every file is
//! written once, after all computation, from the calling thread.

use std::fmt::Write as _;
use std::path::PathBuf;

use aberdip_core::interference::{dip_metrics, CurvePlan};
use aberdip_core::zernike::{radial_terms, MAX_RADIAL_ORDER};
use aberdip_core::{AberrationPhase, Complex64, DipCurve, ZernikeMode};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ModeSpec, Scenario, ScenarioConfig};
use crate::error::{CliError, CliResult};
use crate::output::{
    curve_csv, fmt_sig, summary_csv, to_json, with_suffix, write_file, CurveSummary, DipMetadata, Generator,
    Resolved, SweepRow, GENERATOR,
};

/// Dip curve for `ab` on the scenario's delay grid and quadrature.
pub fn compute_curve(s: &Scenario, ab: &AberrationPhase) -> CliResult<DipCurve> {
    let plan = CurvePlan::new(&s.tau, ab, &s.geometry, &s.crystal, &s.grid, s.model)?;
    let kernels: Vec<Option<Complex64>> = s.tau.par_iter().map(|&t| plan.kernel_at(t, &s.crystal)).collect();
    Ok(plan.assemble(&s.tau, &kernels, &s.crystal, s.model, s.config.r0)?)
}

pub fn flat_curve(s: &Scenario) -> CliResult<DipCurve> {
    compute_curve(s, &AberrationPhase::flat())
}

#[derive(Debug)]
pub struct DipOutput {
    pub curve: DipCurve,
    pub csv: PathBuf,
    pub metadata: PathBuf,
}

pub fn run_dip(s: &Scenario) -> CliResult<DipOutput> {
    let curve = compute_curve(s, &s.aberration)?;
    let prefix = &s.config.output;
    let csv = with_suffix(prefix, ".csv");
    let metadata = with_suffix(prefix, ".json");
    let (imin, _) = curve
        .rate
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |b, (i, &r)| if r < b.1 { (i, r) } else { b });
    let meta = DipMetadata {
        generator: GENERATOR,
        config: &s.config,
        resolved: Resolved::new(s, &curve.diagnostics),
        curve: CurveSummary {
            visibility: 1.0 - curve.rate[imin] / curve.r0,
            min_location_ps: curve.tau[imin],
        },
        files: vec![csv.display().to_string()],
    };
    write_file(&csv, &curve_csv(&curve))?;
    write_file(&metadata, &to_json(&meta))?;
    Ok(DipOutput { curve, csv, metadata })
}

/// File-name label for an amplitude: `0.75` becomes `0p75`.
pub fn pv_label(pv_um: f64) -> String {
    fmt_sig(pv_um).replace('.', "p").replace('-', "m")
}

#[derive(Debug, Serialize)]
struct SweepMetadata<'a> {
    generator: Generator,
    config: &'a ScenarioConfig,
    mode: (u32, i32),
    rows: &'a [SweepRow],
    files: Vec<String>,
}

#[derive(Debug)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub summary: PathBuf,
    pub curves: Vec<PathBuf>,
}

/// One curve per amplitude of the single mode `(n, m)`; the config's own
/// aberration list is replaced by the swept mode. Residuals are taken
/// against the flat mirror on the same grid.
pub fn run_sweep(s: &Scenario, n: u32, m: i32, pv_um: &[f64]) -> CliResult<SweepOutput> {
    if pv_um.is_empty() {
        return Err(CliError::Usage("sweep needs at least one amplitude".into()));
    }
    if let Some(bad) = pv_um.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(CliError::Usage(format!("amplitude {bad} must be a finite number >= 0")));
    }
    ZernikeMode::new(n, m, 0.0).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut spans = s.pv_spans.clone();
    let mut phases = Vec::with_capacity(pv_um.len());
    for &pv in pv_um {
        let coeff = spans.pv_to_coeff(pv * 1e-3, n, m, s.geometry.k0)?;
        phases.push(AberrationPhase::single(n, m, coeff)?);
    }
    let flat = flat_curve(s)?;
    let curves: Vec<DipCurve> = phases
        .par_iter()
        .map(|ab| compute_curve(s, ab))
        .collect::<CliResult<_>>()?;

    let prefix = &s.config.output;
    let mut rows = Vec::with_capacity(curves.len());
    let mut files = Vec::with_capacity(curves.len());
    for (&pv, curve) in pv_um.iter().zip(&curves) {
        let mt = dip_metrics(curve, &flat)?;
        rows.push(SweepRow {
            pv_um: pv,
            visibility: mt.visibility,
            residual_vs_flat: mt.residual_vs_flat,
        });
        files.push(with_suffix(prefix, &format!("_pv{}.csv", pv_label(pv))));
    }
    let summary = with_suffix(prefix, "_summary.csv");
    let config = ScenarioConfig {
        aberration: vec![ModeSpec {
            n,
            m,
            pv_um: Some(0.0),
            coeff_rad: None,
        }],
        ..s.config.clone()
    };
    let meta = SweepMetadata {
        generator: GENERATOR,
        config: &config,
        mode: (n, m),
        rows: &rows,
        files: files.iter().map(|p| p.display().to_string()).collect(),
    };
    for (path, curve) in files.iter().zip(&curves) {
        write_file(path, &curve_csv(curve))?;
    }
    write_file(&summary, &summary_csv(&rows))?;
    write_file(&with_suffix(prefix, "_sweep.json"), &to_json(&meta))?;
    Ok(SweepOutput {
        rows,
        summary,
        curves: files,
    })
}

/// Residual below which a mode counts as cancelled.
pub const CANCEL_THRESHOLD: f64 = 1e-6;
/// Residual above which a mode counts as a visible effect.
pub const EFFECT_THRESHOLD: f64 = 1e-3;
/// Amplitude of every battery entry, microns.
pub const BATTERY_PV_UM: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Expectation {
    Cancel,
    Effect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatteryEntry {
    pub n: u32,
    pub m: i32,
    pub expect: Expectation,
}

pub fn default_battery() -> Vec<BatteryEntry> {
    let cancel = [(2, 0), (2, 2), (2, -2), (4, 0), (4, 4)];
    let effect = [(1, 1), (3, 1), (3, -1), (3, 3)];
    cancel
        .iter()
        .map(|&(n, m)| BatteryEntry {
            n,
            m,
            expect: Expectation::Cancel,
        })
        .chain(effect.iter().map(|&(n, m)| BatteryEntry {
            n,
            m,
            expect: Expectation::Effect,
        }))
        .collect()
}

/// Sets the expectation for `(n, m)`, appending the mode if it is new.
pub fn set_expectation(battery: &mut Vec<BatteryEntry>, n: u32, m: i32, expect: Expectation) {
    match battery.iter_mut().find(|e| (e.n, e.m) == (n, m)) {
        Some(e) => e.expect = expect,
        None => battery.push(BatteryEntry { n, m, expect }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CancelRow {
    pub n: u32,
    pub m: i32,
    pub expect: Expectation,
    pub residual_vs_flat: f64,
    pub verdict: Verdict,
}

#[derive(Debug)]
pub struct CancelOutput {
    pub rows: Vec<CancelRow>,
    pub report: PathBuf,
    pub text: String,
}

impl CancelOutput {
    pub fn failed_modes(&self) -> Vec<String> {
        self.rows
            .iter()
            .filter(|r| r.verdict == Verdict::Fail)
            .map(|r| format!("({}, {})", r.n, r.m))
            .collect()
    }

    pub fn inconclusive(&self) -> usize {
        self.rows.iter().filter(|r| r.verdict == Verdict::Inconclusive).count()
    }
}

fn verdict(expect: Expectation, residual: f64) -> Verdict {
    match expect {
        Expectation::Cancel if residual < CANCEL_THRESHOLD => Verdict::Pass,
        Expectation::Cancel => Verdict::Fail,
        Expectation::Effect if residual >= EFFECT_THRESHOLD => Verdict::Pass,
        // an odd mode too weak to register says nothing about cancellation
        Expectation::Effect => Verdict::Inconclusive,
    }
}

/// Runs the battery at [`BATTERY_PV_UM`] and writes the report. Failing rows
/// are reported through [`CancelOutput::failed_modes`]; the caller decides
/// the exit status.
pub fn run_cancellation_test(s: &Scenario, battery: &[BatteryEntry]) -> CliResult<CancelOutput> {
    let mut spans = s.pv_spans.clone();
    let mut phases = Vec::with_capacity(battery.len());
    for e in battery {
        ZernikeMode::new(e.n, e.m, 0.0).map_err(|err| CliError::Usage(err.to_string()))?;
        let coeff = spans.pv_to_coeff(BATTERY_PV_UM * 1e-3, e.n, e.m, s.geometry.k0)?;
        phases.push(AberrationPhase::single(e.n, e.m, coeff)?);
    }
    let flat = flat_curve(s)?;
    let residuals: Vec<f64> = phases
        .par_iter()
        .map(|ab| Ok(dip_metrics(&compute_curve(s, ab)?, &flat)?.residual_vs_flat))
        .collect::<CliResult<_>>()?;
    let rows: Vec<CancelRow> = battery
        .iter()
        .zip(&residuals)
        .map(|(e, &r)| CancelRow {
            n: e.n,
            m: e.m,
            expect: e.expect,
            residual_vs_flat: r,
            verdict: verdict(e.expect, r),
        })
        .collect();

    let mut text = String::new();
    writeln!(text, "cancellation test, model {}, pv {} um", crate::output::model_name(s.model), BATTERY_PV_UM).unwrap();
    writeln!(
        text,
        "cancel threshold {:e}, effect threshold {:e}",
        CANCEL_THRESHOLD, EFFECT_THRESHOLD
    )
    .unwrap();
    writeln!(text, "{:<10} {:<8} {:<20} verdict", "mode", "expect", "residual_vs_flat").unwrap();
    for r in &rows {
        let expect = match r.expect {
            Expectation::Cancel => "cancel",
            Expectation::Effect => "effect",
        };
        let verdict = match r.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "inconclusive: pupil too small",
        };
        writeln!(
            text,
            "{:<10} {:<8} {:<20} {verdict}",
            format!("({},{})", r.n, r.m),
            expect,
            fmt_sig(r.residual_vs_flat)
        )
        .unwrap();
    }
    let failed = rows.iter().filter(|r| r.verdict == Verdict::Fail).count();
    writeln!(text, "{} rows, {} failed", rows.len(), failed).unwrap();

    let report = with_suffix(&s.config.output, "_cancel.txt");
    write_file(&report, &text)?;
    Ok(CancelOutput { rows, report, text })
}

/// `n,m,power,coefficient` for every radial polynomial up to `max_n`.
pub fn zernike_table(max_n: u32) -> CliResult<String> {
    if max_n > MAX_RADIAL_ORDER {
        return Err(CliError::Usage(format!("max radial order is {MAX_RADIAL_ORDER}")));
    }
    let mut out = String::from("n,m,power,coefficient\n");
    for n in 0..=max_n {
        for k in 0..=n {
            let m = n as i32 - 2 * k as i32;
            if m < 0 {
                continue;
            }
            for (p, c) in radial_terms(n, m)? {
                writeln!(out, "{n},{m},{p},{c}").unwrap();
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts() {
        assert_eq!(verdict(Expectation::Cancel, 0.0), Verdict::Pass);
        assert_eq!(verdict(Expectation::Cancel, 2e-6), Verdict::Fail);
        assert_eq!(verdict(Expectation::Effect, 0.05), Verdict::Pass);
        assert_eq!(verdict(Expectation::Effect, 1e-4), Verdict::Inconclusive);
    }

    #[test]
    fn battery_override() {
        let mut b = default_battery();
        assert_eq!(b.len(), 9);
        set_expectation(&mut b, 3, 1, Expectation::Cancel);
        assert_eq!(b.iter().find(|e| (e.n, e.m) == (3, 1)).unwrap().expect, Expectation::Cancel);
        set_expectation(&mut b, 5, 1, Expectation::Effect);
        assert_eq!(b.len(), 10);
    }

    #[test]
    fn table_rows() {
        let t = zernike_table(4).unwrap();
        assert!(t.contains("\n4,0,4,6\n4,0,2,-6\n4,0,0,1\n"));
        assert!(t.contains("\n3,1,3,3\n3,1,1,-2\n"));
        assert!(zernike_table(41).is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(pv_label(0.75), "0p75");
        assert_eq!(pv_label(0.0), "0");
        assert_eq!(pv_label(2.0), "2");
    }
}
