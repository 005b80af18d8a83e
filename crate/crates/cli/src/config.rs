//! JSON scenario configuration.
//!
//! A document is either a bare [`ScenarioConfig`] or a metadata sidecar
//! written by a previous run, in which case its `config` member is used.
//! Missing members take the experimental defaults printed by
//! `--print-default-config`.

use std::fmt;
use std::path::Path;

use aberdip_core::interference::default_tau_grid;
use aberdip_core::quadrature::min_order_for;
use aberdip_core::zernike::PvCache;
use aberdip_core::{AberrationPhase, CrystalParams, GridSpec, Model, Scheme, SetupGeometry, ZernikeMode};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CliError, CliResult, ConfigErrors, Diagnostic};
use crate::locate::key_lines;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrystalConfig {
    pub thickness_mm: f64,
    pub gvm_ps_per_mm: f64,
    pub walkoff: f64,
    pub pump_wavelength_nm: f64,
    pub degenerate_wavelength_nm: f64,
}

impl Default for CrystalConfig {
    fn default() -> Self {
        Self {
            thickness_mm: 1.5,
            gvm_ps_per_mm: 0.182,
            walkoff: 0.0723,
            pump_wavelength_nm: 405.0,
            degenerate_wavelength_nm: 810.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub focal_length_mm: f64,
    pub mirror_radius_mm: f64,
    pub aperture_radius_mm: f64,
    pub d1_mm: f64,
    pub collection_angle_rad: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            focal_length_mm: 200.0,
            mirror_radius_mm: 6.0,
            aperture_radius_mm: 4.0,
            d1_mm: 330.0,
            collection_angle_rad: 0.025,
        }
    }
}

/// One Zernike term, given either as a surface peak-to-valley in microns or
/// as a phase coefficient in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub n: u32,
    pub m: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pv_um: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeff_rad: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Finite,
    #[default]
    Infinite,
}

impl From<ModelChoice> for Model {
    fn from(m: ModelChoice) -> Self {
        match m {
            ModelChoice::Finite => Model::FiniteAperture,
            ModelChoice::Infinite => Model::InfiniteAperture,
        }
    }
}

impl std::str::FromStr for ModelChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "finite" => Ok(Self::Finite),
            "infinite" => Ok(Self::Infinite),
            _ => Err(format!("expected `finite` or `infinite`, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeChoice {
    #[default]
    GaussLegendre,
    Trapezoid,
}

impl From<SchemeChoice> for Scheme {
    fn from(s: SchemeChoice) -> Self {
        match s {
            SchemeChoice::GaussLegendre => Scheme::GaussLegendre,
            SchemeChoice::Trapezoid => Scheme::Trapezoid,
        }
    }
}

/// Grid order per axis, or `"auto"` for the resolution bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridOrder {
    #[default]
    Auto,
    Fixed(u64),
}

impl fmt::Display for GridOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridOrder::Auto => f.write_str("auto"),
            GridOrder::Fixed(n) => write!(f, "{n}"),
        }
    }
}

impl std::str::FromStr for GridOrder {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        s.parse()
            .map(Self::Fixed)
            .map_err(|_| format!("expected a positive integer or `auto`, got `{s}`"))
    }
}

impl Serialize for GridOrder {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            GridOrder::Auto => s.serialize_str("auto"),
            GridOrder::Fixed(n) => s.serialize_u64(*n),
        }
    }
}

impl<'de> Deserialize<'de> for GridOrder {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = GridOrder;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive integer or \"auto\"")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<GridOrder, E> {
                Ok(GridOrder::Fixed(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<GridOrder, E> {
                u64::try_from(v)
                    .map(GridOrder::Fixed)
                    .map_err(|_| E::invalid_value(de::Unexpected::Signed(v), &self))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<GridOrder, E> {
                if v == "auto" {
                    Ok(GridOrder::Auto)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub crystal: CrystalConfig,
    pub geometry: GeometryConfig,
    pub aberration: Vec<ModeSpec>,
    pub model: ModelChoice,
    pub tau_points: usize,
    pub grid_order: GridOrder,
    pub quadrature: SchemeChoice,
    pub r0: f64,
    /// Output path prefix; extensions and suffixes are appended.
    pub output: String,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            crystal: CrystalConfig::default(),
            geometry: GeometryConfig::default(),
            aberration: Vec::new(),
            model: ModelChoice::Infinite,
            tau_points: 201,
            grid_order: GridOrder::Auto,
            quadrature: SchemeChoice::GaussLegendre,
            r0: 1.0,
            output: "aberdip".into(),
        }
    }
}

/// A metadata sidecar; only its `config` member is read back.
#[derive(Deserialize)]
struct Sidecar {
    config: ScenarioConfig,
}

/// Everything a run needs, checked and converted to core types.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub crystal: CrystalParams,
    pub geometry: SetupGeometry,
    pub aberration: AberrationPhase,
    pub model: Model,
    pub tau: Vec<f64>,
    pub grid: GridSpec,
    pub pv_spans: PvCache,
}

impl ScenarioConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Parses a config or sidecar document; `source` names it in messages.
    pub fn parse(text: &str, source: &str) -> CliResult<Self> {
        let fail = |e: serde_json::Error| {
            CliError::Config(ConfigErrors {
                source: source.into(),
                diagnostics: vec![Diagnostic {
                    line: Some(e.line()),
                    path: String::new(),
                    message: e.to_string(),
                }],
            })
        };
        let value: serde_json::Value = serde_json::from_str(text).map_err(fail)?;
        let is_sidecar = value.get("config").is_some_and(|v| v.is_object());
        if is_sidecar {
            serde_json::from_str::<Sidecar>(text).map(|s| s.config).map_err(fail)
        } else {
            serde_json::from_str(text).map_err(fail)
        }
    }

    pub fn load(path: &Path) -> CliResult<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Ok((Self::parse(&text, &path.display().to_string())?, text))
    }

    /// Field-level checks. Each problem carries the dotted path of the field.
    pub fn problems(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |p: &str, m: &str| out.push((p.to_string(), m.to_string()));
        let positive = |v: f64| v.is_finite() && v > 0.0;

        let c = &self.crystal;
        for (name, v) in [
            ("crystal.thickness_mm", c.thickness_mm),
            ("crystal.gvm_ps_per_mm", c.gvm_ps_per_mm),
            ("crystal.pump_wavelength_nm", c.pump_wavelength_nm),
            ("crystal.degenerate_wavelength_nm", c.degenerate_wavelength_nm),
        ] {
            if !positive(v) {
                push(name, "must be a finite number > 0");
            }
        }
        if !c.walkoff.is_finite() {
            push("crystal.walkoff", "must be finite");
        }
        if positive(c.pump_wavelength_nm)
            && positive(c.degenerate_wavelength_nm)
            && (c.degenerate_wavelength_nm - 2.0 * c.pump_wavelength_nm).abs() > 1e-9 * c.degenerate_wavelength_nm
        {
            push(
                "crystal.degenerate_wavelength_nm",
                "must equal twice pump_wavelength_nm",
            );
        }

        let g = &self.geometry;
        for (name, v) in [
            ("geometry.focal_length_mm", g.focal_length_mm),
            ("geometry.mirror_radius_mm", g.mirror_radius_mm),
            ("geometry.aperture_radius_mm", g.aperture_radius_mm),
            ("geometry.collection_angle_rad", g.collection_angle_rad),
        ] {
            if !positive(v) {
                push(name, "must be a finite number > 0");
            }
        }
        if !(g.d1_mm.is_finite() && g.d1_mm >= 0.0) {
            push("geometry.d1_mm", "must be a finite number >= 0");
        }

        for (i, md) in self.aberration.iter().enumerate() {
            let at = format!("aberration[{i}]");
            if ZernikeMode::new(md.n, md.m, 0.0).is_err() {
                push(
                    &at,
                    &format!(
                        "(n, m) = ({}, {}) is not a Zernike index pair (need |m| <= n, n - |m| even, n <= 40)",
                        md.n, md.m
                    ),
                );
            }
            match (md.pv_um, md.coeff_rad) {
                (Some(_), Some(_)) => push(&at, "give exactly one of pv_um and coeff_rad, not both"),
                (None, None) => push(&at, "give exactly one of pv_um and coeff_rad"),
                (Some(pv), None) if !(pv.is_finite() && pv >= 0.0) => {
                    push(&format!("{at}.pv_um"), "must be a finite number >= 0")
                }
                (None, Some(a)) if !a.is_finite() => push(&format!("{at}.coeff_rad"), "must be finite"),
                _ => {}
            }
            if self.aberration[..i].iter().any(|o| (o.n, o.m) == (md.n, md.m)) {
                push(&at, &format!("mode ({}, {}) listed twice", md.n, md.m));
            }
        }

        if self.tau_points < 3 {
            push("tau_points", "must be >= 3");
        }
        if let GridOrder::Fixed(n) = self.grid_order {
            if n < aberdip_core::quadrature::MIN_ORDER as u64 {
                push("grid_order", "must be >= 8 or \"auto\"");
            }
        }
        if !positive(self.r0) {
            push("r0", "must be a finite number > 0");
        }
        if self.output.trim().is_empty() {
            push("output", "must be a non-empty path prefix");
        }
        out
    }

    /// Validates and converts. `text` is the source document, used only to
    /// attach line numbers to problems.
    pub fn resolve(&self, text: Option<&str>, source: &str) -> CliResult<Scenario> {
        let problems = self.problems();
        if !problems.is_empty() {
            return Err(CliError::Config(locate_problems(problems, text, source)));
        }
        let c = &self.crystal;
        let crystal = CrystalParams::new(
            c.thickness_mm,
            c.gvm_ps_per_mm,
            c.walkoff,
            c.pump_wavelength_nm,
            c.degenerate_wavelength_nm,
        )?;
        let g = &self.geometry;
        let geometry = SetupGeometry::new(
            g.focal_length_mm,
            crystal.k_degenerate(),
            g.mirror_radius_mm,
            g.aperture_radius_mm,
            g.d1_mm,
            g.collection_angle_rad,
        )?;
        let mut pv_spans = PvCache::new();
        let mut modes = Vec::with_capacity(self.aberration.len());
        for md in &self.aberration {
            let coeff = match (md.pv_um, md.coeff_rad) {
                (Some(pv), _) => pv_spans.pv_to_coeff(pv * 1e-3, md.n, md.m, geometry.k0)?,
                (None, Some(a)) => a,
                (None, None) => unreachable!("checked above"),
            };
            modes.push(ZernikeMode::new(md.n, md.m, coeff)?);
        }
        let aberration = AberrationPhase::new(modes)?;
        let model = Model::from(self.model);
        let tau = default_tau_grid(&crystal, self.tau_points);
        let radius = geometry.integration_radius();
        let order = match self.grid_order {
            GridOrder::Auto => min_order_for(crystal.dip_width(), &geometry, &crystal, radius, model),
            GridOrder::Fixed(n) => n as usize,
        };
        let grid = GridSpec::new(radius, order, self.quadrature.into())?;
        Ok(Scenario {
            config: self.clone(),
            crystal,
            geometry,
            aberration,
            model,
            tau,
            grid,
            pv_spans,
        })
    }
}

fn locate_problems(problems: Vec<(String, String)>, text: Option<&str>, source: &str) -> ConfigErrors {
    let lines = text.map(key_lines).unwrap_or_default();
    // Sidecar documents nest the config one level down.
    let find = |path: &str| -> Option<usize> {
        let mut p = path.to_string();
        loop {
            for candidate in [p.clone(), format!("config.{p}")] {
                if let Some(&l) = lines.get(&candidate) {
                    return Some(l);
                }
            }
            // fall back to the nearest enclosing field
            let cut = p.rfind(['.', '['])?;
            p.truncate(cut);
        }
    };
    ConfigErrors {
        source: source.into(),
        diagnostics: problems
            .into_iter()
            .map(|(path, message)| Diagnostic {
                line: find(&path),
                path,
                message,
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = ScenarioConfig::default();
        let back = ScenarioConfig::parse(&cfg.to_json(), "x").unwrap();
        assert_eq!(back, cfg);
        let s = back.resolve(None, "x").unwrap();
        assert_eq!(s.grid.order, 108);
        assert_eq!(s.tau.len(), 201);
        assert_eq!(s.crystal, CrystalParams::bbo_type2());
    }

    #[test]
    fn partial_document_takes_defaults() {
        let cfg = ScenarioConfig::parse(r#"{"aberration": [{"n": 3, "m": 1, "pv_um": 0.75}]}"#, "x").unwrap();
        assert_eq!(cfg.geometry, GeometryConfig::default());
        let s = cfg.resolve(None, "x").unwrap();
        let c = s.aberration.modes()[0].coeff();
        assert!((c - 2.0 * s.geometry.k0 * 0.75e-3 / 2.0).abs() < 1e-9, "{c}");
    }

    #[test]
    fn grid_order_forms() {
        let cfg = ScenarioConfig::parse(r#"{"grid_order": 64}"#, "x").unwrap();
        assert_eq!(cfg.grid_order, GridOrder::Fixed(64));
        assert!(ScenarioConfig::parse(r#"{"grid_order": "fine"}"#, "x").is_err());
        assert!(ScenarioConfig::parse(r#"{"grid_order": -3}"#, "x").is_err());
        assert_eq!("auto".parse::<GridOrder>(), Ok(GridOrder::Auto));
    }

    #[test]
    fn problems_are_line_numbered() {
        let text = "{\n  \"tau_points\": 2,\n  \"aberration\": [\n    {\"n\": 3, \"m\": 1},\n    {\"n\": 3, \"m\": 2, \"pv_um\": 0.1}\n  ]\n}";
        let cfg = ScenarioConfig::parse(text, "c.json").unwrap();
        let CliError::Config(e) = cfg.resolve(Some(text), "c.json").unwrap_err() else {
            panic!("expected config error");
        };
        let lines: Vec<_> = e.diagnostics.iter().map(|d| (d.path.as_str(), d.line)).collect();
        assert!(lines.contains(&("tau_points", Some(2))), "{lines:?}");
        assert!(lines.contains(&("aberration[0]", Some(4))), "{lines:?}");
        assert!(lines.contains(&("aberration[1]", Some(5))), "{lines:?}");
    }

    #[test]
    fn syntax_errors_carry_line() {
        let CliError::Config(e) = ScenarioConfig::parse("{\n\"r0\": 1,\n\"bogus\": 2\n}", "c").unwrap_err() else {
            panic!();
        };
        assert_eq!(e.diagnostics[0].line, Some(3));
    }

    #[test]
    fn sidecar_is_accepted() {
        let cfg = ScenarioConfig {
            tau_points: 11,
            ..Default::default()
        };
        let doc = format!("{{\"generator\": {{\"name\": \"aberdip\"}}, \"config\": {}}}", cfg.to_json());
        assert_eq!(ScenarioConfig::parse(&doc, "x").unwrap(), cfg);
    }
}
