//! Scenario configuration in `[section]` / `key = value` form.
//!
//! ```toml
//! [domain]
//! boxes = [
//!   { region = 1, min = [-1, 0, 0], max = [0, 1, 1], h = 0.1 },
//!   { region = 2, min = [0, 0, 0], max = [1, 1, 1], h = 0.1 },
//! ]
//!
//! [region.1]
//! kind = "elastic"
//! rho = 2.7
//! c_p = 6.2
//! c_s = 3.12
//! degree = 2
//!
//! [region.2]
//! kind = "acoustic"
//! rho = 1.0
//! c = 1.0
//!
//! [discretization]
//! acoustic_degree = 2
//!
//! [time]
//! end = 0.1
//!
//! [source]
//! analytic = "verification"
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::analytic::RickerSource;
use crate::diagnostics::Receiver;
use crate::error::{Error, Result};
use crate::mesh::{BoundaryCondition, BoundarySpec, DomainKind, Point3, Side};
use crate::space::{AcousticMaterial, ElasticMaterial, Material};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub domain: DomainConfig,
    #[serde(default)]
    pub region: BTreeMap<String, RegionConfig>,
    #[serde(default)]
    pub discretization: DiscretizationConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default)]
    pub receivers: ReceiversConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Exactly one of `boxes`, `mesh_file` or `cavity`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boxes: Vec<BoxConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity: Option<CavityConfig>,
}

/// Structured box; `subdivisions` or a target meshsize `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub region: u32,
    pub min: Point3,
    pub max: Point3,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subdivisions: Option<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
}

impl BoxConfig {
    pub fn resolved_subdivisions(&self) -> Result<[usize; 3]> {
        match (self.subdivisions, self.h) {
            (Some(s), None) => Ok(s),
            (None, Some(h)) if h > 0.0 => Ok(std::array::from_fn(|d| {
                (((self.max[d] - self.min[d]) / h).round() as usize).max(1)
            })),
            (None, Some(h)) => Err(Error::config("domain.boxes.h", format!("meshsize must be positive, got {h}"))),
            _ => Err(Error::config(
                "domain.boxes",
                format!("box of region {} needs exactly one of `subdivisions` or `h`", self.region),
            )),
        }
    }

    /// Largest cell edge.
    pub fn meshsize(&self) -> Result<f64> {
        let s = self.resolved_subdivisions()?;
        Ok((0..3).map(|d| (self.max[d] - self.min[d]) / s[d] as f64).fold(0.0, f64::max))
    }
}

/// Box with a box-shaped acoustic cavity meshed independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    pub outer_min: Point3,
    pub outer_max: Point3,
    pub outer_subdivisions: [usize; 3],
    pub cavity_min: Point3,
    pub cavity_max: Point3,
    pub cavity_subdivisions: [usize; 3],
    pub elastic_region: u32,
    pub acoustic_region: u32,
}

/// Elastic regions take `rho` with `c_p`, `c_s` or with `lambda`, `mu`;
/// acoustic regions take `rho` and `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub kind: DomainKind,
    pub rho: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
}

impl RegionConfig {
    pub fn elastic(rho: f64, c_p: f64, c_s: f64, degree: usize) -> Self {
        Self {
            kind: DomainKind::Elastic,
            rho,
            c_p: Some(c_p),
            c_s: Some(c_s),
            lambda: None,
            mu: None,
            c: None,
            degree: Some(degree),
        }
    }

    pub fn acoustic(rho: f64, c: f64) -> Self {
        Self {
            kind: DomainKind::Acoustic,
            rho,
            c_p: None,
            c_s: None,
            lambda: None,
            mu: None,
            c: Some(c),
            degree: None,
        }
    }

    fn material(&self, at: &str) -> Result<Material> {
        let wrap = |e: Error| Error::config(at, e.to_string());
        match self.kind {
            DomainKind::Elastic => {
                if self.c.is_some() {
                    return Err(Error::config(at, "`c` is only valid for acoustic regions"));
                }
                let m = match (self.c_p, self.c_s, self.lambda, self.mu) {
                    (Some(cp), Some(cs), None, None) => ElasticMaterial::from_velocities(self.rho, cp, cs),
                    (None, None, Some(l), Some(m)) => ElasticMaterial::new(self.rho, l, m),
                    _ => {
                        return Err(Error::config(at, "elastic region needs `c_p` and `c_s`, or `lambda` and `mu`"));
                    }
                };
                Ok(Material::Elastic(m.map_err(wrap)?))
            }
            DomainKind::Acoustic => {
                if self.c_p.is_some() || self.c_s.is_some() || self.lambda.is_some() || self.mu.is_some() {
                    return Err(Error::config(at, "acoustic region takes only `rho` and `c`"));
                }
                if self.degree.is_some() {
                    return Err(Error::config(at, "acoustic degree is set by `discretization.acoustic_degree`"));
                }
                let c = self.c.ok_or_else(|| Error::config(at, "missing key `c`"))?;
                Ok(Material::Acoustic(AcousticMaterial::new(self.rho, c).map_err(wrap)?))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationConfig {
    #[serde(default = "default_degree")]
    pub acoustic_degree: usize,
    #[serde(default = "default_alpha")]
    pub penalty_alpha: f64,
}

fn default_degree() -> usize {
    2
}

fn default_alpha() -> f64 {
    1.0
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        Self {
            acoustic_degree: default_degree(),
            penalty_alpha: default_alpha(),
        }
    }
}

/// Without `dt` the step is `safety` times the estimated critical step,
/// shrunk so that whole steps reach `end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_safety")]
    pub safety: f64,
    /// Upper bound applied to the estimated step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_max: Option<f64>,
}

fn default_safety() -> f64 {
    0.5
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<BoundaryCondition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xmin: Option<BoundaryCondition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xmax: Option<BoundaryCondition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ymin: Option<BoundaryCondition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ymax: Option<BoundaryCondition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zmin: Option<BoundaryCondition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zmax: Option<BoundaryCondition>,
}

impl BoundaryConfig {
    pub fn uniform(bc: BoundaryCondition) -> Self {
        Self {
            default: Some(bc),
            ..Default::default()
        }
    }

    pub fn spec(&self) -> BoundarySpec {
        let mut s = BoundarySpec {
            default: self.default,
            sides: [None; 6],
        };
        let sides = [self.xmin, self.xmax, self.ymin, self.ymax, self.zmin, self.zmax];
        for (side, bc) in Side::ALL.into_iter().zip(sides) {
            if let Some(bc) = bc {
                s = s.with_side(side, bc);
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalyticKind {
    #[default]
    None,
    Verification,
    Scholte,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldSource {
    /// Zero fields.
    #[default]
    Zero,
    /// Taken from the analytic model.
    Analytic,
}

/// `analytic` selects the reference solution used for errors; `initial`
/// and `boundary_data` default to it when one is set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    #[serde(default)]
    pub analytic: AnalyticKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<FieldSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_data: Option<FieldSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scholte_omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ricker: Vec<RickerSource>,
}

impl SourceConfig {
    fn field(&self, explicit: Option<FieldSource>) -> FieldSource {
        explicit.unwrap_or(match self.analytic {
            AnalyticKind::None => FieldSource::Zero,
            _ => FieldSource::Analytic,
        })
    }

    pub fn initial_source(&self) -> FieldSource {
        self.field(self.initial)
    }

    pub fn boundary_source(&self) -> FieldSource {
        self.field(self.boundary_data)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiversConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<Receiver>,
    /// Sampling cadence in steps.
    #[serde(default = "one")]
    pub every: usize,
}

fn one() -> usize {
    1
}

impl Default for ReceiversConfig {
    fn default() -> Self {
        Self {
            points: Vec::new(),
            every: 1,
        }
    }
}

/// Cadences are in steps; zero disables the output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default)]
    pub energy_every: usize,
}

impl ScenarioConfig {
    /// Parses and validates configuration text.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let location = match e.span() {
                Some(span) => {
                    let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                    format!("line {line}")
                }
                None => "input".to_string(),
            };
            Error::config(location, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Region materials keyed by id.
    pub fn materials(&self) -> Result<BTreeMap<u32, Material>> {
        let mut out = BTreeMap::new();
        for (key, r) in &self.region {
            let at = format!("region.{key}");
            let id: u32 = key
                .parse()
                .map_err(|_| Error::config(&at, "region id must be a nonnegative integer"))?;
            out.insert(id, r.material(&at)?);
        }
        Ok(out)
    }

    pub fn region_config(&self, id: u32) -> Option<&RegionConfig> {
        self.region.get(&id.to_string())
    }

    pub fn validate(&self) -> Result<()> {
        let materials = self.materials()?;
        for (key, r) in &self.region {
            if r.kind == DomainKind::Elastic && r.degree.is_none_or(|n| n == 0 || n > 16) {
                return Err(Error::config(format!("region.{key}.degree"), "elastic degree must be in 1..=16"));
            }
        }
        let d = &self.domain;
        let layouts = [!d.boxes.is_empty(), d.mesh_file.is_some(), d.cavity.is_some()];
        if layouts.iter().filter(|&&b| b).count() != 1 {
            return Err(Error::config("domain", "set exactly one of `boxes`, `mesh_file`, `cavity`"));
        }
        let check_region = |id: u32, kind: Option<DomainKind>, at: &str| -> Result<()> {
            let r = self
                .region_config(id)
                .ok_or_else(|| Error::config(at, format!("region {id} is not defined")))?;
            if let Some(k) = kind {
                if r.kind != k {
                    return Err(Error::config(at, format!("region {id} must be {k:?}")));
                }
            }
            Ok(())
        };
        for (i, b) in d.boxes.iter().enumerate() {
            let at = format!("domain.boxes[{i}]");
            check_region(b.region, None, &at)?;
            b.resolved_subdivisions()?;
            if (0..3).any(|k| !(b.max[k] > b.min[k])) {
                return Err(Error::config(at, "box `max` must exceed `min`"));
            }
        }
        if let Some(c) = &d.cavity {
            check_region(c.elastic_region, Some(DomainKind::Elastic), "domain.cavity")?;
            check_region(c.acoustic_region, Some(DomainKind::Acoustic), "domain.cavity")?;
        }
        if !(self.time.end > 0.0) {
            return Err(Error::config("time.end", format!("end time must be positive, got {}", self.time.end)));
        }
        if let Some(dt) = self.time.dt {
            if !(dt > 0.0) {
                return Err(Error::config("time.dt", format!("time step must be positive, got {dt}")));
            }
        }
        if !(self.time.safety > 0.0) {
            return Err(Error::config("time.safety", "safety factor must be positive"));
        }
        if !(self.discretization.penalty_alpha > 0.0) {
            return Err(Error::config("discretization.penalty_alpha", "penalty must be positive"));
        }
        if !(1..=16).contains(&self.discretization.acoustic_degree) {
            return Err(Error::config("discretization.acoustic_degree", "degree must be in 1..=16"));
        }
        if self.receivers.every == 0 {
            return Err(Error::config("receivers.every", "sampling cadence must be positive"));
        }
        for s in &self.source.ricker {
            if !(s.peak_frequency > 0.0) {
                return Err(Error::config("source.ricker", "peak frequency must be positive"));
            }
        }
        if self.source.analytic == AnalyticKind::None
            && (self.source.initial == Some(FieldSource::Analytic)
                || self.source.boundary_data == Some(FieldSource::Analytic))
        {
            return Err(Error::config("source", "analytic fields requested without an analytic model"));
        }
        if self.source.analytic == AnalyticKind::Scholte {
            let kinds = materials.values();
            let (mut e, mut a) = (0, 0);
            for m in kinds {
                match m {
                    Material::Elastic(_) => e += 1,
                    Material::Acoustic(_) => a += 1,
                }
            }
            if e != 1 || a != 1 {
                return Err(Error::config("source.analytic", "scholte model needs one elastic and one acoustic region"));
            }
        }
        Ok(())
    }
}
