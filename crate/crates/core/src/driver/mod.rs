//! Scenario orchestration: configuration, assembly, time loop and outputs.

mod config;
mod presets;
mod snapshot;

pub use config::{
    AnalyticKind, BoundaryConfig, BoxConfig, CavityConfig, DiscretizationConfig, DomainConfig, FieldSource,
    OutputConfig, ReceiversConfig, RegionConfig, ScenarioConfig, SourceConfig, TimeConfig,
};
pub use presets::{preset, scholte, verification, PRESETS};
pub use snapshot::{write_snapshot, write_snapshot_to};

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytic::{scholte_dispersion_solve, AnalyticModel, ScholteWave, VerificationSolution};
use crate::assembly::{LoadAssembler, PenaltySpec, PointSource, SourceSpec, SystemOperators};
use crate::diagnostics::{
    fit_convergence_rate, total_discrete_energy, ConvergenceSeries, Diagnostics, DiscreteEnergy, ErrorNorms,
    FitMode, ReceiverSet,
};
use crate::error::{Error, Result};
use crate::integrator::{estimate_stable_dt, BoundaryData, Dirichlet, Homogeneous, Integrator, SimState, StableStep};
use crate::mesh::{
    build_box_mesh, build_cube_cavity_mesh, classify_faces, read_mesh_file, BoxExtents, DomainKind, FaceSets,
    HexMesh, Region,
};
use crate::space::{build_acoustic_space, build_elastic_space, Material, MaterialTable};

/// Assembled scenario ready to run.
pub struct Scenario {
    pub config: ScenarioConfig,
    pub mesh: HexMesh,
    pub faces: FaceSets,
    pub materials: MaterialTable,
    pub ops: SystemOperators,
    pub loads: Option<LoadAssembler>,
    pub model: Option<Arc<dyn AnalyticModel>>,
    pub boundary_data: Arc<dyn BoundaryData>,
    pub dt: f64,
    pub steps: usize,
    pub estimate: Option<StableStep>,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("elements", &self.mesh.elements.len())
            .field("dt", &self.dt)
            .field("steps", &self.steps)
            .finish()
    }
}

fn build_mesh(config: &ScenarioConfig, materials: &BTreeMap<u32, Material>) -> Result<HexMesh> {
    let kind = |id: u32| match materials.get(&id) {
        Some(Material::Elastic(_)) => DomainKind::Elastic,
        _ => DomainKind::Acoustic,
    };
    let d = &config.domain;
    if let Some(path) = &d.mesh_file {
        let mesh = read_mesh_file(path)?;
        for r in &mesh.regions {
            match config.region_config(r.id) {
                Some(c) if c.kind == r.kind => {}
                Some(_) => return Err(Error::config(format!("region.{}", r.id), "kind differs from the mesh file")),
                None => return Err(Error::config("region", format!("mesh region {} is not defined", r.id))),
            }
        }
        return Ok(mesh);
    }
    if let Some(c) = &d.cavity {
        return build_cube_cavity_mesh(
            &BoxExtents::new(c.outer_min, c.outer_max)?,
            c.outer_subdivisions,
            &BoxExtents::new(c.cavity_min, c.cavity_max)?,
            c.cavity_subdivisions,
            Region { id: c.elastic_region, kind: DomainKind::Elastic },
            Region { id: c.acoustic_region, kind: DomainKind::Acoustic },
        );
    }
    let parts = d
        .boxes
        .iter()
        .map(|b| {
            build_box_mesh(
                &BoxExtents::new(b.min, b.max)?,
                b.resolved_subdivisions()?,
                Region { id: b.region, kind: kind(b.region) },
            )
        })
        .collect::<Result<Vec<_>>>()?;
    HexMesh::merge(parts)
}

fn build_model(config: &ScenarioConfig, materials: &MaterialTable, mesh: &HexMesh) -> Result<Option<Arc<dyn AnalyticModel>>> {
    let first = |k: DomainKind| mesh.regions.iter().find(|r| r.kind == k).map(|r| r.id);
    let pair = || -> Result<_> {
        let e = first(DomainKind::Elastic).ok_or_else(|| Error::config("source.analytic", "no elastic region"))?;
        let a = first(DomainKind::Acoustic).ok_or_else(|| Error::config("source.analytic", "no acoustic region"))?;
        Ok((materials.elastic(e)?, materials.acoustic(a)?))
    };
    Ok(match config.source.analytic {
        AnalyticKind::None => None,
        AnalyticKind::Verification => {
            let (elastic, acoustic) = pair()?;
            Some(Arc::new(VerificationSolution { elastic, acoustic }))
        }
        AnalyticKind::Scholte => {
            let (e, a) = pair()?;
            let p = scholte_dispersion_solve(&e, &a, config.source.scholte_omega.unwrap_or(1.0))?;
            log::info!("scholte speed {:.13}, amplitudes {:?}", p.c_sch, p.amplitudes);
            Some(Arc::new(ScholteWave::new(p)))
        }
    })
}

impl Scenario {
    pub fn build(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let region_materials = config.materials()?;
        let mesh = build_mesh(config, &region_materials)?;
        let mut materials = MaterialTable::new();
        for (&id, m) in &region_materials {
            materials = match *m {
                Material::Elastic(m) => materials.with_elastic(id, m),
                Material::Acoustic(m) => materials.with_acoustic(id, m),
            };
        }
        let faces = classify_faces(&mesh, &config.boundary.spec())?;
        let degrees: BTreeMap<u32, usize> = mesh
            .regions
            .iter()
            .filter(|r| r.kind == DomainKind::Elastic)
            .map(|r| (r.id, config.region_config(r.id).and_then(|c| c.degree).unwrap_or(2)))
            .collect();
        let elastic = Arc::new(build_elastic_space(&mesh, &faces, &degrees)?);
        let acoustic = Arc::new(build_acoustic_space(&mesh, &faces, config.discretization.acoustic_degree)?);
        let penalty = PenaltySpec::new(config.discretization.penalty_alpha)?;
        let ops = SystemOperators::assemble(&mesh, &faces, elastic.clone(), acoustic.clone(), &materials, penalty)?;
        log::info!(
            "{} elements, {} elastic and {} acoustic unknowns",
            mesh.elements.len(),
            elastic.n_dofs(),
            acoustic.n_dofs()
        );

        let mut spec = SourceSpec::default();
        for s in &config.source.ricker {
            let s = *s;
            spec.points.push(PointSource {
                domain: DomainKind::Elastic,
                location: s.location,
                direction: s.direction,
                time: Arc::new(move |t| s.value(t)),
            });
        }
        let loads = LoadAssembler::new(&mesh, &faces, &elastic, &acoustic, &materials, spec)?;
        let loads = (!loads.is_empty()).then_some(loads);

        let model = build_model(config, &materials, &mesh)?;
        let boundary_data: Arc<dyn BoundaryData> = match (config.source.boundary_source(), &model) {
            (FieldSource::Analytic, Some(m)) => Arc::new(ModelBoundary(m.clone())),
            _ => Arc::new(Homogeneous),
        };

        let end = config.time.end;
        let (target, estimate) = match config.time.dt {
            Some(dt) => (dt, None),
            None => {
                let est = estimate_stable_dt(&ops.view(), config.time.safety);
                log::info!("estimated time step {:e} (converged: {})", est.dt, est.converged);
                (config.time.dt_max.map_or(est.dt, |m| est.dt.min(m)), Some(est))
            }
        };
        let steps = ((end / target) - 1e-9).ceil().max(1.0) as usize;
        let dt = end / steps as f64;
        Ok(Self {
            config: config.clone(),
            mesh,
            faces,
            materials,
            ops,
            loads,
            model,
            boundary_data,
            dt,
            steps,
            estimate,
        })
    }

    /// Fields at `t = 0` before Dirichlet data and accelerations are set.
    pub fn initial_state(&self) -> SimState {
        let (e, a) = (&self.ops.elastic, &self.ops.acoustic);
        let mut s = SimState::zeros(e.n_dofs(), a.n_dofs());
        if let (FieldSource::Analytic, Some(m)) = (self.config.source.initial_source(), &self.model) {
            s.u = e.interpolate(|x, out| out.copy_from_slice(&m.elastic(x, 0.0).u));
            s.v = e.interpolate(|x, out| out.copy_from_slice(&m.elastic(x, 0.0).v));
            s.phi = a.interpolate(|x, out| out[0] = m.acoustic(x, 0.0).phi);
            s.psi = a.interpolate(|x, out| out[0] = m.acoustic(x, 0.0).dphi);
        }
        s
    }

    pub fn dirichlet(&self) -> Dirichlet {
        Dirichlet::new(&self.ops.elastic, &self.ops.acoustic, self.boundary_data.clone())
    }

    pub fn integrator(&self) -> Result<Integrator<'_>> {
        Integrator::new(self.ops.view(), self.loads.as_ref(), self.dirichlet(), self.dt)
    }

    pub fn diagnostics(&self) -> Diagnostics<'_> {
        Diagnostics::new(&self.mesh, &self.materials, &self.ops)
    }

    pub fn energy(&self, state: &SimState) -> DiscreteEnergy {
        total_discrete_energy(state, &self.ops.view())
    }

    /// Runs every step, calling `observer` on the initial state and after
    /// each step.
    pub fn simulate(&self, observer: &mut dyn FnMut(&SimState) -> Result<()>) -> Result<SimState> {
        let mut integrator = self.integrator()?;
        let mut state = self.initial_state();
        integrator.initialize(&mut state)?;
        observer(&state)?;
        for _ in 0..self.steps {
            integrator.step(&mut state)?;
            observer(&state)?;
        }
        Ok(state)
    }

    /// Runs the scenario and writes outputs into `output_dir`, or into the
    /// configured directory when `None`.
    pub fn run(&self, output_dir: Option<&Path>) -> Result<RunArtifacts> {
        let dir = output_dir.map(Path::to_path_buf).or_else(|| self.config.output.dir.clone());
        if let Some(d) = &dir {
            std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
        }
        let out = &self.config.output;
        let every = self.config.receivers.every;
        let mut receivers = ReceiverSet::new(
            &self.mesh,
            &self.ops.elastic,
            &self.ops.acoustic,
            self.config.receivers.points.clone(),
        )?;
        receivers.reserve(self.steps / every + 1);
        let mut energy = Vec::new();
        let mut snapshots = Vec::new();
        let snap_dir = dir.as_ref().map(|d| d.join("snapshots"));
        if let (Some(d), true) = (&snap_dir, out.snapshot_every > 0) {
            std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
        }
        let start = std::time::Instant::now();
        let state = self.simulate(&mut |s| {
            if s.step % every == 0 {
                receivers.record(s)?;
            }
            if out.energy_every > 0 && s.step % out.energy_every == 0 {
                energy.push((s.t, self.energy(s)));
            }
            if let (Some(d), true) = (&snap_dir, out.snapshot_every > 0 && s.step % out.snapshot_every == 0) {
                let path = d.join(format!("snapshot_{:06}.vtk", s.step));
                write_snapshot(s, &self.ops.elastic, &self.ops.acoustic, &self.mesh, &path)?;
                snapshots.push(path);
            }
            Ok(())
        })?;
        let seconds = start.elapsed().as_secs_f64();
        let errors = self
            .model
            .as_ref()
            .map(|m| self.diagnostics().error_vs_analytic(&state, m.as_ref(), state.t));
        let mut artifacts = RunArtifacts {
            errors,
            energy,
            receiver_files: Vec::new(),
            snapshot_files: snapshots,
            metadata: self.metadata(&state, errors, seconds),
            state,
        };
        if let Some(d) = &dir {
            if !receivers.is_empty() {
                artifacts.receiver_files = receivers.write_csv(&d.join("receivers"))?;
            }
            if !artifacts.energy.is_empty() {
                write_energy(&d.join("energy.csv"), &artifacts.energy)?;
            }
            let path = d.join("metadata.json");
            let text = serde_json::to_string_pretty(&artifacts.metadata).expect("metadata serializes");
            std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        }
        Ok(artifacts)
    }

    fn metadata(&self, state: &SimState, errors: Option<ErrorNorms>, seconds: f64) -> RunMetadata {
        RunMetadata {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: config_hash(&self.config),
            penalty_alpha: self.config.discretization.penalty_alpha,
            zeta: 0.0,
            dt: self.dt,
            steps: self.steps,
            end_time: state.t,
            dt_estimate: self.estimate.map(|e| e.dt),
            dt_estimate_converged: self.estimate.map(|e| e.converged),
            threads: rayon::current_num_threads(),
            elements: self.mesh.elements.len(),
            elastic_dofs: self.ops.elastic.n_dofs(),
            acoustic_dofs: self.ops.acoustic.n_dofs(),
            energy_error: errors.map(|e| e.energy()),
            l2_error: errors.map(|e| e.l2()),
            wall_seconds: seconds,
        }
    }
}

/// Dirichlet data from an analytic model.
struct ModelBoundary(Arc<dyn AnalyticModel>);

impl BoundaryData for ModelBoundary {
    fn elastic(&self, x: crate::mesh::Point3, t: f64) -> [[f64; 3]; 3] {
        let s = self.0.elastic(x, t);
        [s.u, s.v, s.a]
    }

    fn acoustic(&self, x: crate::mesh::Point3, t: f64) -> [f64; 3] {
        let s = self.0.acoustic(x, t);
        [s.phi, s.dphi, s.ddphi]
    }
}

/// SHA-256 of the canonical configuration text.
pub fn config_hash(config: &ScenarioConfig) -> String {
    let digest = Sha256::digest(config.to_toml().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub version: String,
    pub config_sha256: String,
    pub penalty_alpha: f64,
    /// Weight of the undefined velocity term in the elastic energy norm.
    pub zeta: f64,
    pub dt: f64,
    pub steps: usize,
    pub end_time: f64,
    pub dt_estimate: Option<f64>,
    pub dt_estimate_converged: Option<bool>,
    pub threads: usize,
    pub elements: usize,
    pub elastic_dofs: usize,
    pub acoustic_dofs: usize,
    pub energy_error: Option<f64>,
    pub l2_error: Option<f64>,
    pub wall_seconds: f64,
}

#[derive(Debug)]
pub struct RunArtifacts {
    pub state: SimState,
    pub errors: Option<ErrorNorms>,
    pub energy: Vec<(f64, DiscreteEnergy)>,
    pub receiver_files: Vec<PathBuf>,
    pub snapshot_files: Vec<PathBuf>,
    pub metadata: RunMetadata,
}

fn write_energy(path: &Path, rows: &[(f64, DiscreteEnergy)]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    let io = |e| Error::io(path, e);
    writeln!(w, "t,elastic,acoustic,total").map_err(io)?;
    for (t, e) in rows {
        writeln!(w, "{t:.16e},{:.16e},{:.16e},{:.16e}", e.elastic(), e.acoustic(), e.total()).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sweep {
    /// Meshsize; every box is rescaled so the finest box gets the value.
    #[serde(rename = "h")]
    H,
    /// Polynomial degree of every region.
    #[serde(rename = "N")]
    N,
}

impl std::str::FromStr for Sweep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "h" => Ok(Sweep::H),
            "N" | "n" => Ok(Sweep::N),
            _ => Err(Error::config("--sweep", format!("unknown sweep `{s}` (expected h or N)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRow {
    pub param: f64,
    pub energy_error: f64,
    pub l2_error: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<ErrorRow>,
    /// Fit of the energy-norm errors.
    pub energy_fit: ConvergenceSeries,
    pub l2_fit: ConvergenceSeries,
}

/// Configuration for one sweep value.
pub fn sweep_config(base: &ScenarioConfig, sweep: Sweep, value: f64) -> Result<ScenarioConfig> {
    let mut cfg = base.clone();
    match sweep {
        Sweep::H => {
            if cfg.domain.boxes.is_empty() {
                return Err(Error::config("domain", "an h sweep needs a `boxes` domain"));
            }
            if !(value > 0.0) {
                return Err(Error::config("--values", format!("meshsize must be positive, got {value}")));
            }
            let base_h = cfg
                .domain
                .boxes
                .iter()
                .map(|b| b.meshsize())
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            let scale = value / base_h;
            for b in &mut cfg.domain.boxes {
                let h = b.meshsize()? * scale;
                b.subdivisions = None;
                b.h = Some(h);
            }
        }
        Sweep::N => {
            if value.fract() != 0.0 || !(1.0..=16.0).contains(&value) {
                return Err(Error::config("--values", format!("degree must be an integer in 1..=16, got {value}")));
            }
            let n = value as usize;
            for r in cfg.region.values_mut() {
                if r.kind == DomainKind::Elastic {
                    r.degree = Some(n);
                }
            }
            cfg.discretization.acoustic_degree = n;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// One run per value; writes `errors.csv` into `output_dir` if given.
pub fn converge_sweep(
    base: &ScenarioConfig,
    sweep: Sweep,
    values: &[f64],
    output_dir: Option<&Path>,
) -> Result<SweepResult> {
    if values.len() < 3 {
        return Err(Error::Fit(format!("a sweep needs at least 3 values, got {}", values.len())));
    }
    if base.source.analytic == AnalyticKind::None {
        return Err(Error::config("source.analytic", "a convergence sweep needs an analytic model"));
    }
    let mut rows = Vec::new();
    for &v in values {
        let cfg = sweep_config(base, sweep, v)?;
        let scenario = Scenario::build(&cfg)?;
        let run = scenario.run(None)?;
        let e = run.errors.expect("analytic model present");
        log::info!("{sweep:?} = {v}: energy error {:e}, L2 error {:e}", e.energy(), e.l2());
        rows.push(ErrorRow {
            param: v,
            energy_error: e.energy(),
            l2_error: e.l2(),
        });
    }
    let mode = match sweep {
        Sweep::H => FitMode::PowerLaw,
        Sweep::N => FitMode::Exponential,
    };
    let params: Vec<f64> = rows.iter().map(|r| r.param).collect();
    let energy: Vec<f64> = rows.iter().map(|r| r.energy_error).collect();
    let l2: Vec<f64> = rows.iter().map(|r| r.l2_error).collect();
    let result = SweepResult {
        energy_fit: fit_convergence_rate(&params, &energy, mode)?,
        l2_fit: fit_convergence_rate(&params, &l2, mode)?,
        rows,
    };
    if let Some(d) = output_dir {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
        let path = d.join("errors.csv");
        let f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_error_table(&result.rows, std::io::BufWriter::new(f)).map_err(|e| Error::io(&path, e))?;
    }
    Ok(result)
}

/// CSV with header `param,energy_error,l2_error`.
pub fn write_error_table<W: Write>(rows: &[ErrorRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "param,energy_error,l2_error")?;
    for r in rows {
        writeln!(w, "{},{:.16e},{:.16e}", r.param, r.energy_error, r.l2_error)?;
    }
    w.flush()
}
