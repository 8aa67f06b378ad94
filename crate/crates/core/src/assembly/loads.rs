use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{DomainKind, FaceSets, HexMesh, Point3};
use crate::space::{DofSpace, MaterialTable};

use super::boundary::face_nodes;

/// Vector field of space and time.
pub type VectorField = Arc<dyn Fn(Point3, f64) -> [f64; 3] + Send + Sync>;
/// Scalar field of space and time.
pub type ScalarField = Arc<dyn Fn(Point3, f64) -> f64 + Send + Sync>;
/// Source time function.
pub type TimeFunction = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Point force `f(t) d δ(x - x_0)`.
#[derive(Clone)]
pub struct PointSource {
    pub domain: DomainKind,
    pub location: Point3,
    /// Force direction for elastic sources; ignored for acoustic ones.
    pub direction: Point3,
    pub time: TimeFunction,
}

impl std::fmt::Debug for PointSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PointSource")
            .field("domain", &self.domain)
            .field("location", &self.location)
            .field("direction", &self.direction)
            .finish()
    }
}

/// Registered sources before assembly.
#[derive(Clone, Default)]
pub struct SourceSpec {
    pub body_elastic: Option<VectorField>,
    pub body_acoustic: Option<ScalarField>,
    /// Traction on elastic Neumann faces.
    pub neumann_elastic: Option<VectorField>,
    /// Normal derivative of φ on acoustic Neumann faces.
    pub neumann_acoustic: Option<ScalarField>,
    pub points: Vec<PointSource>,
}

struct CompiledPoint {
    elastic: bool,
    dofs: Vec<(usize, f64)>,
    time: TimeFunction,
}

/// Evaluates `f_e(t)` and `f_a(t)` into preallocated vectors.
pub struct LoadAssembler {
    spec: SourceSpec,
    e_nodes: Vec<(usize, Point3, f64)>,
    a_nodes: Vec<(usize, Point3, f64)>,
    e_neumann: Vec<(usize, Point3, f64)>,
    a_neumann: Vec<(usize, Point3, f64)>,
    points: Vec<CompiledPoint>,
}

impl std::fmt::Debug for LoadAssembler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LoadAssembler")
            .field("points", &self.points.len())
            .finish()
    }
}

fn lumped_nodes(space: &DofSpace, scale: impl Fn(u32) -> f64) -> Vec<(usize, Point3, f64)> {
    let mut w = vec![0.0; space.n_nodes()];
    for b in space.blocks() {
        let s = scale(b.region);
        for l in b.elements.clone() {
            for (&node, g) in space.element_nodes(l).iter().zip(space.element_geometry(l)) {
                w[node] += s * g.wdet;
            }
        }
    }
    w.into_iter()
        .enumerate()
        .map(|(n, w)| (n, space.node_coords()[n], w))
        .collect()
}

fn neumann_nodes(
    mesh: &HexMesh,
    faces: &FaceSets,
    space: &DofSpace,
    scale: impl Fn(u32) -> f64,
) -> Vec<(usize, Point3, f64)> {
    let mut out = Vec::new();
    for &f in &faces.boundary(space.kind()).neumann {
        let Some(l) = space.local_element(f.element) else {
            continue;
        };
        let s = scale(mesh.elements[f.element].region);
        let nodes = space.element_nodes(l);
        for fnode in face_nodes(mesh, space, f) {
            out.push((nodes[fnode.local], fnode.x, s * fnode.weight));
        }
    }
    out
}

impl LoadAssembler {
    /// Acoustic sources are multiplied by `ρ_a`, matching the scaling of
    /// the acoustic equation.
    pub fn new(
        mesh: &HexMesh,
        faces: &FaceSets,
        elastic: &DofSpace,
        acoustic: &DofSpace,
        materials: &MaterialTable,
        spec: SourceSpec,
    ) -> Result<Self> {
        let rho_a = |r: u32| materials.acoustic(r).map(|m| m.rho).unwrap_or(1.0);
        let e_nodes = if spec.body_elastic.is_some() {
            lumped_nodes(elastic, |_| 1.0)
        } else {
            Vec::new()
        };
        let a_nodes = if spec.body_acoustic.is_some() {
            lumped_nodes(acoustic, rho_a)
        } else {
            Vec::new()
        };
        let e_neumann = if spec.neumann_elastic.is_some() {
            neumann_nodes(mesh, faces, elastic, |_| 1.0)
        } else {
            Vec::new()
        };
        let a_neumann = if spec.neumann_acoustic.is_some() {
            neumann_nodes(mesh, faces, acoustic, rho_a)
        } else {
            Vec::new()
        };
        let mut points = Vec::new();
        let (mut vals, mut grads) = (Vec::new(), Vec::new());
        for p in &spec.points {
            let space = match p.domain {
                DomainKind::Elastic => elastic,
                DomainKind::Acoustic => acoustic,
            };
            let (e, xi) = mesh
                .locate(p.location, Some(p.domain))
                .ok_or(Error::PointOutsideDomain(p.location))?;
            let l = space.local_element(e).ok_or(Error::PointOutsideDomain(p.location))?;
            space.basis_at(mesh, l, xi, &mut vals, &mut grads);
            let nodes = space.element_nodes(l);
            let mut dofs = Vec::new();
            for (a, &phi) in vals.iter().enumerate() {
                if phi == 0.0 {
                    continue;
                }
                match p.domain {
                    DomainKind::Elastic => {
                        for c in 0..3 {
                            if p.direction[c] != 0.0 {
                                dofs.push((3 * nodes[a] + c, phi * p.direction[c]));
                            }
                        }
                    }
                    DomainKind::Acoustic => {
                        dofs.push((nodes[a], phi * rho_a(mesh.elements[e].region)));
                    }
                }
            }
            points.push(CompiledPoint {
                elastic: p.domain == DomainKind::Elastic,
                dofs,
                time: p.time.clone(),
            });
        }
        Ok(Self {
            spec,
            e_nodes,
            a_nodes,
            e_neumann,
            a_neumann,
            points,
        })
    }

    /// True when every source is absent.
    pub fn is_empty(&self) -> bool {
        self.e_nodes.is_empty() && self.a_nodes.is_empty() && self.e_neumann.is_empty()
            && self.a_neumann.is_empty()
            && self.points.is_empty()
    }

    /// Overwrites `fe` and `fa` with the load vectors at time `t`.
    pub fn assemble(&self, t: f64, fe: &mut [f64], fa: &mut [f64]) {
        fe.fill(0.0);
        fa.fill(0.0);
        if let Some(f) = &self.spec.body_elastic {
            for &(n, x, w) in &self.e_nodes {
                let v = f(x, t);
                for c in 0..3 {
                    fe[3 * n + c] += w * v[c];
                }
            }
        }
        if let Some(g) = &self.spec.neumann_elastic {
            for &(n, x, w) in &self.e_neumann {
                let v = g(x, t);
                for c in 0..3 {
                    fe[3 * n + c] += w * v[c];
                }
            }
        }
        if let Some(f) = &self.spec.body_acoustic {
            for &(n, x, w) in &self.a_nodes {
                fa[n] += w * f(x, t);
            }
        }
        if let Some(g) = &self.spec.neumann_acoustic {
            for &(n, x, w) in &self.a_neumann {
                fa[n] += w * g(x, t);
            }
        }
        for p in &self.points {
            let s = (p.time)(t);
            let target = if p.elastic { &mut *fe } else { &mut *fa };
            for &(d, w) in &p.dofs {
                target[d] += s * w;
            }
        }
    }
}
