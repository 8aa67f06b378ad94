//! Materials and degree-of-freedom layouts.
//!
//! Elastic spaces are continuous inside a region and discontinuous across
//! regions; the acoustic space is globally continuous. Global node numbering
//! is region-major, then by first appearance in element order; DoF
//! `node * components + c`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::basis::{gll_rule, local_index, QuadratureRule1D};
use crate::error::{Error, Result};
use crate::mesh::{inv3, trilinear_map, DomainKind, FaceRef, FaceSets, HexMesh, Mat3, Point3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticMaterial {
    pub rho: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl ElasticMaterial {
    pub fn new(rho: f64, lambda: f64, mu: f64) -> Result<Self> {
        if !(rho > 0.0) || !(mu > 0.0) || !(lambda + 2.0 * mu > 0.0) {
            return Err(Error::Material(format!(
                "elastic material needs rho > 0, mu > 0, lambda + 2 mu > 0 (rho={rho}, lambda={lambda}, mu={mu})"
            )));
        }
        Ok(Self { rho, lambda, mu })
    }

    /// From density and P/S wave speeds.
    pub fn from_velocities(rho: f64, c_p: f64, c_s: f64) -> Result<Self> {
        if !(c_p > 0.0) || !(c_s > 0.0) {
            return Err(Error::Material(format!(
                "wave speeds must be positive (c_p={c_p}, c_s={c_s})"
            )));
        }
        let mu = rho * c_s * c_s;
        Self::new(rho, rho * c_p * c_p - 2.0 * mu, mu)
    }

    /// `λ + 2μ`.
    pub fn p_modulus(&self) -> f64 {
        self.lambda + 2.0 * self.mu
    }

    pub fn wave_speeds(&self) -> (f64, f64) {
        wave_speeds(self)
    }
}

/// `(c_P, c_S)`.
pub fn wave_speeds(m: &ElasticMaterial) -> (f64, f64) {
    ((m.p_modulus() / m.rho).sqrt(), (m.mu / m.rho).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcousticMaterial {
    pub rho: f64,
    pub c: f64,
}

impl AcousticMaterial {
    pub fn new(rho: f64, c: f64) -> Result<Self> {
        if !(rho > 0.0) || !(c > 0.0) {
            return Err(Error::Material(format!(
                "acoustic material needs rho > 0 and c > 0 (rho={rho}, c={c})"
            )));
        }
        Ok(Self { rho, c })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Material {
    Elastic(ElasticMaterial),
    Acoustic(AcousticMaterial),
}

/// Material per region id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaterialTable {
    regions: BTreeMap<u32, Material>,
}

impl MaterialTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_elastic(mut self, region: u32, m: ElasticMaterial) -> Self {
        self.regions.insert(region, Material::Elastic(m));
        self
    }

    pub fn with_acoustic(mut self, region: u32, m: AcousticMaterial) -> Self {
        self.regions.insert(region, Material::Acoustic(m));
        self
    }

    pub fn get(&self, region: u32) -> Option<&Material> {
        self.regions.get(&region)
    }

    pub fn elastic(&self, region: u32) -> Result<ElasticMaterial> {
        match self.regions.get(&region) {
            Some(Material::Elastic(m)) => Ok(*m),
            _ => Err(Error::Material(format!("no elastic material for region {region}"))),
        }
    }

    pub fn acoustic(&self, region: u32) -> Result<AcousticMaterial> {
        match self.regions.get(&region) {
            Some(Material::Acoustic(m)) => Ok(*m),
            _ => Err(Error::Material(format!("no acoustic material for region {region}"))),
        }
    }
}

/// Contiguous run of space-local elements sharing region and degree.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementBlock {
    pub region: u32,
    pub degree: usize,
    pub elements: std::ops::Range<usize>,
}

/// Geometric factors at one GLL node of an element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeGeometry {
    /// `jinv[r][i] = ∂ξ_r/∂x_i`.
    pub jinv: Mat3,
    /// Tensor GLL weight times `det J`.
    pub wdet: f64,
    pub det_j: f64,
}

#[derive(Debug, Clone)]
pub struct DofSpace {
    kind: DomainKind,
    components: usize,
    elements: Vec<usize>,
    local_of: Vec<usize>,
    blocks: Vec<ElementBlock>,
    rules: BTreeMap<usize, QuadratureRule1D>,
    elem_offset: Vec<usize>,
    node_ids: Vec<usize>,
    geometry: Vec<NodeGeometry>,
    node_coords: Vec<Point3>,
    node_region: Vec<u32>,
    dirichlet: Vec<usize>,
}

impl DofSpace {
    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn n_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.node_coords.len() * self.components
    }

    /// Mesh element ids of this space in space-local order.
    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    /// Space-local index of a mesh element, if it belongs to this space.
    pub fn local_element(&self, mesh_element: usize) -> Option<usize> {
        self.local_of
            .get(mesh_element)
            .copied()
            .filter(|&l| l != usize::MAX)
    }

    pub fn blocks(&self) -> &[ElementBlock] {
        &self.blocks
    }

    pub fn rule(&self, degree: usize) -> &QuadratureRule1D {
        &self.rules[&degree]
    }

    pub fn block_of(&self, local: usize) -> &ElementBlock {
        self.blocks
            .iter()
            .find(|b| b.elements.contains(&local))
            .expect("local element index in range")
    }

    pub fn element_degree(&self, local: usize) -> usize {
        self.block_of(local).degree
    }

    /// Global node ids of a space-local element in lexicographic order.
    pub fn element_nodes(&self, local: usize) -> &[usize] {
        &self.node_ids[self.elem_offset[local]..self.elem_offset[local + 1]]
    }

    pub fn element_geometry(&self, local: usize) -> &[NodeGeometry] {
        &self.geometry[self.elem_offset[local]..self.elem_offset[local + 1]]
    }

    pub fn node_coords(&self) -> &[Point3] {
        &self.node_coords
    }

    pub fn node_region(&self, node: usize) -> u32 {
        self.node_region[node]
    }

    /// Sorted node ids lying on Dirichlet faces.
    pub fn dirichlet_nodes(&self) -> &[usize] {
        &self.dirichlet
    }

    /// Local node indices (into `element_nodes`) on a face of a
    /// degree-`n` element, ordered by the face's tangent axes.
    pub fn face_local_nodes(n: usize, face: u8) -> Vec<usize> {
        let f = FaceRef::new(0, face);
        let fixed = if face.is_multiple_of(2) { 0 } else { n };
        let (t1, t2) = f.tangent_axes();
        let mut out = Vec::with_capacity((n + 1) * (n + 1));
        for b in 0..=n {
            for a in 0..=n {
                let mut ijk = [0; 3];
                ijk[f.axis()] = fixed;
                ijk[t1] = a;
                ijk[t2] = b;
                out.push(local_index(n + 1, ijk[0], ijk[1], ijk[2]));
            }
        }
        out
    }

    /// Nodal interpolant of `f`, which writes `components` values at a point.
    pub fn interpolate(&self, mut f: impl FnMut(Point3, &mut [f64])) -> Vec<f64> {
        let c = self.components;
        let mut out = vec![0.0; self.n_dofs()];
        for (node, x) in self.node_coords.iter().enumerate() {
            f(*x, &mut out[node * c..(node + 1) * c]);
        }
        out
    }

    /// Values and physical gradients of every basis function of a
    /// space-local element at reference point `xi`, in local node order.
    pub fn basis_at(
        &self,
        mesh: &HexMesh,
        local: usize,
        xi: Point3,
        values: &mut Vec<f64>,
        grads: &mut Vec<[f64; 3]>,
    ) {
        let n = self.element_degree(local);
        let rule = self.rule(n);
        let m = n + 1;
        let mut b = [[0.0; 17]; 3];
        let mut db = [[0.0; 17]; 3];
        for d in 0..3 {
            rule.basis_values(xi[d], &mut b[d][..m]);
            rule.basis_derivatives(xi[d], &mut db[d][..m]);
        }
        let g = trilinear_map(&mesh.element_corners(self.elements[local]), xi);
        let jinv = inv3(&g.jacobian, g.det_j);
        values.clear();
        grads.clear();
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    values.push(b[0][i] * b[1][j] * b[2][k]);
                    let r = [
                        db[0][i] * b[1][j] * b[2][k],
                        b[0][i] * db[1][j] * b[2][k],
                        b[0][i] * b[1][j] * db[2][k],
                    ];
                    grads.push(std::array::from_fn(|d| {
                        r[0] * jinv[0][d] + r[1] * jinv[1][d] + r[2] * jinv[2][d]
                    }));
                }
            }
        }
    }

    /// Evaluates a discrete field and its physical gradient at reference
    /// point `xi` of a space-local element. `value` has `components`
    /// entries, `grad[c][d] = ∂_d value_c`.
    pub fn evaluate(
        &self,
        mesh: &HexMesh,
        values: &[f64],
        local: usize,
        xi: Point3,
        value: &mut [f64],
        grad: &mut [[f64; 3]],
    ) {
        let n = self.element_degree(local);
        let rule = self.rule(n);
        let m = n + 1;
        let mut b = [[0.0; 17]; 3];
        let mut db = [[0.0; 17]; 3];
        for d in 0..3 {
            rule.basis_values(xi[d], &mut b[d][..m]);
            rule.basis_derivatives(xi[d], &mut db[d][..m]);
        }
        let g = trilinear_map(&mesh.element_corners(self.elements[local]), xi);
        let jinv = inv3(&g.jacobian, g.det_j);
        let c = self.components;
        value[..c].fill(0.0);
        let mut rgrad = [[0.0; 3]; 3];
        let nodes = self.element_nodes(local);
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    let node = nodes[local_index(m, i, j, k)];
                    let phi = b[0][i] * b[1][j] * b[2][k];
                    let dphi = [
                        db[0][i] * b[1][j] * b[2][k],
                        b[0][i] * db[1][j] * b[2][k],
                        b[0][i] * b[1][j] * db[2][k],
                    ];
                    for comp in 0..c {
                        let v = values[node * c + comp];
                        value[comp] += phi * v;
                        for r in 0..3 {
                            rgrad[comp][r] += dphi[r] * v;
                        }
                    }
                }
            }
        }
        for comp in 0..c {
            for d in 0..3 {
                grad[comp][d] = (0..3).map(|r| rgrad[comp][r] * jinv[r][d]).sum();
            }
        }
    }
}

/// Merges points that coincide within `delta` by hashing onto a grid and
/// probing the neighbouring cells.
struct PointMerger {
    delta: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
}

impl PointMerger {
    fn new(delta: f64) -> Self {
        Self {
            delta,
            cells: HashMap::new(),
        }
    }

    fn find_or_insert(&mut self, x: Point3, coords: &mut Vec<Point3>) -> usize {
        let key = x.map(|c| (c / self.delta).floor() as i64);
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let k = [key[0] + dx, key[1] + dy, key[2] + dz];
                    if let Some(ids) = self.cells.get(&k) {
                        for &id in ids {
                            let p = coords[id];
                            if (0..3).all(|d| (p[d] - x[d]).abs() <= self.delta) {
                                return id;
                            }
                        }
                    }
                }
            }
        }
        let id = coords.len();
        coords.push(x);
        self.cells.entry(key).or_default().push(id);
        id
    }
}

fn build_space(
    mesh: &HexMesh,
    faces: &FaceSets,
    kind: DomainKind,
    degree_of: impl Fn(u32) -> Result<usize>,
) -> Result<DofSpace> {
    let components = match kind {
        DomainKind::Elastic => 3,
        DomainKind::Acoustic => 1,
    };
    let mut region_ids: Vec<u32> = mesh
        .regions
        .iter()
        .filter(|r| r.kind == kind)
        .map(|r| r.id)
        .collect();
    region_ids.sort_unstable();

    let delta = 1e-9 * mesh.diameter().max(f64::MIN_POSITIVE);
    let mut elements = Vec::new();
    let mut blocks = Vec::new();
    let mut rules = BTreeMap::new();
    let mut elem_offset = vec![0];
    let mut node_ids = Vec::new();
    let mut geometry = Vec::new();
    let mut node_coords = Vec::new();
    let mut node_region = Vec::new();
    for &region in &region_ids {
        let members: Vec<usize> = (0..mesh.elements.len())
            .filter(|&e| mesh.elements[e].region == region)
            .collect();
        if members.is_empty() {
            continue;
        }
        let n = degree_of(region)?;
        if n < 1 {
            return Err(Error::InvalidDegree(n));
        }
        if let std::collections::btree_map::Entry::Vacant(e) = rules.entry(n) {
            e.insert(gll_rule(n)?);
        }
        let rule = &rules[&n];
        let m = n + 1;
        let start = elements.len();
        let mut merger = PointMerger::new(delta);
        let first_node = node_coords.len();
        let mut region_coords: Vec<Point3> = Vec::new();
        for &e in &members {
            let corners = mesh.element_corners(e);
            for k in 0..m {
                for j in 0..m {
                    for i in 0..m {
                        let xi = [rule.nodes()[i], rule.nodes()[j], rule.nodes()[k]];
                        let g = trilinear_map(&corners, xi);
                        if !(g.det_j > 0.0) {
                            return Err(Error::InvertedElement {
                                element: e,
                                det_j: g.det_j,
                            });
                        }
                        let id = merger.find_or_insert(g.x, &mut region_coords);
                        node_ids.push(first_node + id);
                        geometry.push(NodeGeometry {
                            jinv: inv3(&g.jacobian, g.det_j),
                            wdet: rule.weights()[i] * rule.weights()[j] * rule.weights()[k] * g.det_j,
                            det_j: g.det_j,
                        });
                    }
                }
            }
            elements.push(e);
            elem_offset.push(node_ids.len());
        }
        node_region.extend(std::iter::repeat_n(region, region_coords.len()));
        node_coords.extend(region_coords);
        blocks.push(ElementBlock {
            region,
            degree: n,
            elements: start..elements.len(),
        });
    }

    let mut local_of = vec![usize::MAX; mesh.elements.len()];
    for (l, &e) in elements.iter().enumerate() {
        local_of[e] = l;
    }
    let mut space = DofSpace {
        kind,
        components,
        elements,
        local_of,
        blocks,
        rules,
        elem_offset,
        node_ids,
        geometry,
        node_coords,
        node_region,
        dirichlet: Vec::new(),
    };
    let mut dirichlet = Vec::new();
    for f in &faces.boundary(kind).dirichlet {
        let Some(l) = space.local_element(f.element) else {
            continue;
        };
        let n = space.element_degree(l);
        let nodes = space.element_nodes(l);
        dirichlet.extend(DofSpace::face_local_nodes(n, f.face).into_iter().map(|a| nodes[a]));
    }
    dirichlet.sort_unstable();
    dirichlet.dedup();
    space.dirichlet = dirichlet;
    Ok(space)
}

/// Vector-valued space on the elastic regions with per-region degrees.
pub fn build_elastic_space(
    mesh: &HexMesh,
    faces: &FaceSets,
    degrees: &BTreeMap<u32, usize>,
) -> Result<DofSpace> {
    build_space(mesh, faces, DomainKind::Elastic, |r| {
        degrees
            .get(&r)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("no polynomial degree for region {r}")))
    })
}

/// Scalar continuous space on all acoustic regions with degree `n_a`.
pub fn build_acoustic_space(mesh: &HexMesh, faces: &FaceSets, n_a: usize) -> Result<DofSpace> {
    build_space(mesh, faces, DomainKind::Acoustic, |_| Ok(n_a))
}
