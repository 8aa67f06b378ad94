//! Matrix-free stiffness operators.
//!
//! Each element (and each interior-penalty face pair) writes its local
//! result into a private slice of a contribution buffer in parallel; a
//! second pass sums the buffer into the global vector through a fixed
//! incidence list, so results do not depend on the thread count.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use super::csr::{CsrMatrix, LinearOperator};
use super::{harmonic_mean, PenaltySpec};
use crate::basis::local_index;
use crate::error::Result;
use crate::mesh::{build_interface_pairs, FaceSets, HexMesh, MortarPair, Point3};
use crate::space::{DofSpace, MaterialTable};

/// Which pieces of the elastic bilinear form to include.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StiffnessParts {
    pub volume: bool,
    /// Consistency and symmetry face terms.
    pub consistency: bool,
    pub penalty: bool,
}

impl Default for StiffnessParts {
    fn default() -> Self {
        Self {
            volume: true,
            consistency: true,
            penalty: true,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Coefficient {
    Elastic { lambda: f64, mu: f64 },
    Acoustic { rho: f64 },
}

#[derive(Debug)]
struct VolumeSegment {
    elements: std::ops::Range<usize>,
    m: usize,
    diff: Vec<f64>,
    coef: Coefficient,
}

/// Quadrature data of one face pair between two elastic regions.
#[derive(Debug, Clone)]
pub struct FaceKernel {
    /// Space-local elements on each side.
    pub elements: [usize; 2],
    pub nodes: [usize; 2],
    pub lambda: [f64; 2],
    pub mu: [f64; 2],
    pub eta: f64,
    pub weights: Vec<f64>,
    pub normals: Vec<Point3>,
    pub points: Vec<Point3>,
    /// Basis values per side, `q * nodes + a`.
    pub phi: [Vec<f64>; 2],
    pub dphi: [Vec<[f64; 3]>; 2],
}

#[derive(Debug)]
struct FaceSegment {
    faces: Vec<FaceKernel>,
    parts: StiffnessParts,
}

#[derive(Debug)]
enum Segment {
    Volume(VolumeSegment),
    Faces(FaceSegment),
}

struct Layout {
    offset: usize,
    local_len: usize,
    count: usize,
}

/// Stiffness operator `K_e` or `K_a` applied without forming the matrix.
pub struct StiffnessOperator {
    space: Arc<DofSpace>,
    segments: Vec<Segment>,
    layout: Vec<Layout>,
    incidence_ptr: Vec<usize>,
    incidence: Vec<usize>,
    buffer: Mutex<Vec<f64>>,
}

impl std::fmt::Debug for StiffnessOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StiffnessOperator")
            .field("dofs", &self.space.n_dofs())
            .field("segments", &self.segments.len())
            .finish()
    }
}

thread_local! {
    static SCRATCH: RefCell<Vec<f64>> = const { RefCell::new(Vec::new()) };
}

fn with_scratch<R>(len: usize, f: impl FnOnce(&mut [f64]) -> R) -> R {
    SCRATCH.with(|s| {
        let mut s = s.borrow_mut();
        if s.len() < len {
            s.resize(len, 0.0);
        }
        f(&mut s[..len])
    })
}

/// `out = ∫ σ(u) : ∇φ` on one element, `u` and `out` node-major with 3
/// components.
fn elastic_volume(
    m: usize,
    d: &[f64],
    geo: &[crate::space::NodeGeometry],
    lambda: f64,
    mu: f64,
    u: &[f64],
    flux: &mut [f64],
    out: &mut [f64],
) {
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                let p = local_index(m, i, j, k);
                let mut g = [[0.0; 3]; 3];
                for a in 0..m {
                    let (di, dj, dk) = (d[i * m + a], d[j * m + a], d[k * m + a]);
                    let qi = 3 * local_index(m, a, j, k);
                    let qj = 3 * local_index(m, i, a, k);
                    let qk = 3 * local_index(m, i, j, a);
                    for c in 0..3 {
                        g[c][0] += di * u[qi + c];
                        g[c][1] += dj * u[qj + c];
                        g[c][2] += dk * u[qk + c];
                    }
                }
                let jinv = &geo[p].jinv;
                let mut grad = [[0.0; 3]; 3];
                for c in 0..3 {
                    for x in 0..3 {
                        grad[c][x] = g[c][0] * jinv[0][x] + g[c][1] * jinv[1][x] + g[c][2] * jinv[2][x];
                    }
                }
                let ldiv = lambda * (grad[0][0] + grad[1][1] + grad[2][2]);
                let mut sigma = [[0.0; 3]; 3];
                for c in 0..3 {
                    for x in 0..3 {
                        sigma[c][x] = mu * (grad[c][x] + grad[x][c]);
                    }
                    sigma[c][c] += ldiv;
                }
                let w = geo[p].wdet;
                let f = &mut flux[9 * p..9 * p + 9];
                for c in 0..3 {
                    for r in 0..3 {
                        f[3 * c + r] =
                            w * (sigma[c][0] * jinv[r][0] + sigma[c][1] * jinv[r][1] + sigma[c][2] * jinv[r][2]);
                    }
                }
            }
        }
    }
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                let p = local_index(m, i, j, k);
                let mut acc = [0.0; 3];
                for a in 0..m {
                    let (di, dj, dk) = (d[a * m + i], d[a * m + j], d[a * m + k]);
                    let fi = 9 * local_index(m, a, j, k);
                    let fj = 9 * local_index(m, i, a, k);
                    let fk = 9 * local_index(m, i, j, a);
                    for c in 0..3 {
                        acc[c] += di * flux[fi + 3 * c] + dj * flux[fj + 3 * c + 1] + dk * flux[fk + 3 * c + 2];
                    }
                }
                out[3 * p..3 * p + 3].copy_from_slice(&acc);
            }
        }
    }
}

/// `out = ∫ ρ ∇φ · ∇ψ` on one element.
fn acoustic_volume(
    m: usize,
    d: &[f64],
    geo: &[crate::space::NodeGeometry],
    rho: f64,
    u: &[f64],
    flux: &mut [f64],
    out: &mut [f64],
) {
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                let p = local_index(m, i, j, k);
                let mut g = [0.0; 3];
                for a in 0..m {
                    g[0] += d[i * m + a] * u[local_index(m, a, j, k)];
                    g[1] += d[j * m + a] * u[local_index(m, i, a, k)];
                    g[2] += d[k * m + a] * u[local_index(m, i, j, a)];
                }
                let jinv = &geo[p].jinv;
                let grad: [f64; 3] =
                    std::array::from_fn(|x| g[0] * jinv[0][x] + g[1] * jinv[1][x] + g[2] * jinv[2][x]);
                let w = rho * geo[p].wdet;
                for r in 0..3 {
                    flux[3 * p + r] = w * (grad[0] * jinv[r][0] + grad[1] * jinv[r][1] + grad[2] * jinv[r][2]);
                }
            }
        }
    }
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                let mut acc = 0.0;
                for a in 0..m {
                    acc += d[a * m + i] * flux[3 * local_index(m, a, j, k)]
                        + d[a * m + j] * flux[3 * local_index(m, i, a, k) + 1]
                        + d[a * m + k] * flux[3 * local_index(m, i, j, a) + 2];
                }
                out[local_index(m, i, j, k)] = acc;
            }
        }
    }
}

/// Interior-penalty face terms for one pair. `u` and `out` hold the plus
/// element's nodes followed by the minus element's, 3 components each.
fn sipg_face(face: &FaceKernel, parts: StiffnessParts, u: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    let off = [0, 3 * face.nodes[0]];
    for (q, (&w, n)) in face.weights.iter().zip(&face.normals).enumerate() {
        let mut val = [[0.0; 3]; 2];
        let mut grad = [[[0.0; 3]; 3]; 2];
        for s in 0..2 {
            let nn = face.nodes[s];
            let phi = &face.phi[s][q * nn..(q + 1) * nn];
            let dphi = &face.dphi[s][q * nn..(q + 1) * nn];
            for a in 0..nn {
                let ua = &u[off[s] + 3 * a..off[s] + 3 * a + 3];
                for c in 0..3 {
                    val[s][c] += phi[a] * ua[c];
                    for x in 0..3 {
                        grad[s][c][x] += dphi[a][x] * ua[c];
                    }
                }
            }
        }
        let jump: [f64; 3] = std::array::from_fn(|c| val[0][c] - val[1][c]);
        let jn = jump[0] * n[0] + jump[1] * n[1] + jump[2] * n[2];
        let mut traction = [0.0; 3];
        let mut sym = [[[0.0; 3]; 3]; 2];
        if parts.consistency {
            for s in 0..2 {
                let (lam, mu) = (face.lambda[s], face.mu[s]);
                let g = &grad[s];
                let ldiv = lam * (g[0][0] + g[1][1] + g[2][2]);
                for c in 0..3 {
                    let mut t = ldiv * n[c];
                    for x in 0..3 {
                        t += mu * (g[c][x] + g[x][c]) * n[x];
                    }
                    traction[c] += 0.5 * t;
                    for x in 0..3 {
                        sym[s][c][x] = 0.5 * mu * (jump[c] * n[x] + n[c] * jump[x]);
                    }
                    sym[s][c][c] += 0.5 * lam * jn;
                }
            }
        }
        let pen = if parts.penalty { face.eta } else { 0.0 };
        for s in 0..2 {
            let sign = if s == 0 { 1.0 } else { -1.0 };
            let nn = face.nodes[s];
            let phi = &face.phi[s][q * nn..(q + 1) * nn];
            let dphi = &face.dphi[s][q * nn..(q + 1) * nn];
            for a in 0..nn {
                let o = &mut out[off[s] + 3 * a..off[s] + 3 * a + 3];
                for c in 0..3 {
                    let sd = sym[s][c][0] * dphi[a][0] + sym[s][c][1] * dphi[a][1] + sym[s][c][2] * dphi[a][2];
                    o[c] += w * (sign * (pen * jump[c] - traction[c]) * phi[a] - sd);
                }
            }
        }
    }
}

impl StiffnessOperator {
    /// Elastic stiffness with interior-penalty terms on faces between
    /// elastic regions.
    pub fn elastic(
        mesh: &HexMesh,
        faces: &FaceSets,
        space: Arc<DofSpace>,
        materials: &MaterialTable,
        penalty: PenaltySpec,
        parts: StiffnessParts,
    ) -> Result<Self> {
        let mut segments = Vec::new();
        if parts.volume {
            for b in space.blocks() {
                let m = materials.elastic(b.region)?;
                segments.push(Segment::Volume(VolumeSegment {
                    elements: b.elements.clone(),
                    m: b.degree + 1,
                    diff: space.rule(b.degree).diff_matrix().to_vec(),
                    coef: Coefficient::Elastic {
                        lambda: m.lambda,
                        mu: m.mu,
                    },
                }));
            }
        }
        if parts.consistency || parts.penalty {
            let kernels = face_kernels(mesh, faces, &space, materials, penalty)?;
            let mut by_shape: BTreeMap<[usize; 2], Vec<FaceKernel>> = BTreeMap::new();
            for k in kernels {
                by_shape.entry(k.nodes).or_default().push(k);
            }
            for (_, faces) in by_shape {
                segments.push(Segment::Faces(FaceSegment { faces, parts }));
            }
        }
        Ok(Self::finish(space, segments))
    }

    pub fn acoustic(space: Arc<DofSpace>, materials: &MaterialTable) -> Result<Self> {
        let mut segments = Vec::new();
        for b in space.blocks() {
            let m = materials.acoustic(b.region)?;
            segments.push(Segment::Volume(VolumeSegment {
                elements: b.elements.clone(),
                m: b.degree + 1,
                diff: space.rule(b.degree).diff_matrix().to_vec(),
                coef: Coefficient::Acoustic { rho: m.rho },
            }));
        }
        Ok(Self::finish(space, segments))
    }

    fn finish(space: Arc<DofSpace>, segments: Vec<Segment>) -> Self {
        let comps = space.components();
        let mut layout = Vec::new();
        let mut offset = 0;
        let mut entries: Vec<(usize, usize)> = Vec::new();
        for seg in &segments {
            let (local_len, count) = match seg {
                Segment::Volume(v) => (v.m.pow(3) * comps, v.elements.len()),
                Segment::Faces(f) => (3 * (f.faces[0].nodes[0] + f.faces[0].nodes[1]), f.faces.len()),
            };
            for item in 0..count {
                let base = offset + item * local_len;
                let mut pos = base;
                let mut push_nodes = |nodes: &[usize]| {
                    for &node in nodes {
                        for c in 0..comps {
                            entries.push((node * comps + c, pos));
                            pos += 1;
                        }
                    }
                };
                match seg {
                    Segment::Volume(v) => push_nodes(space.element_nodes(v.elements.start + item)),
                    Segment::Faces(f) => {
                        let k = &f.faces[item];
                        push_nodes(space.element_nodes(k.elements[0]));
                        push_nodes(space.element_nodes(k.elements[1]));
                    }
                }
            }
            layout.push(Layout {
                offset,
                local_len,
                count,
            });
            offset += local_len * count;
        }
        entries.sort_unstable();
        let n = space.n_dofs();
        let mut incidence_ptr = vec![0; n + 1];
        for &(d, _) in &entries {
            incidence_ptr[d + 1] += 1;
        }
        for d in 0..n {
            incidence_ptr[d + 1] += incidence_ptr[d];
        }
        Self {
            space,
            segments,
            layout,
            incidence_ptr,
            incidence: entries.into_iter().map(|(_, p)| p).collect(),
            buffer: Mutex::new(vec![0.0; offset]),
        }
    }

    pub fn space(&self) -> &Arc<DofSpace> {
        &self.space
    }

    /// Face pairs carrying interior-penalty terms.
    pub fn face_kernels(&self) -> impl Iterator<Item = &FaceKernel> {
        self.segments.iter().flat_map(|s| match s {
            Segment::Faces(f) => f.faces.as_slice(),
            Segment::Volume(_) => &[],
        })
    }

    fn item_dofs(&self, seg: &Segment, item: usize, out: &mut Vec<usize>) {
        let comps = self.space.components();
        out.clear();
        let mut push = |nodes: &[usize]| {
            for &node in nodes {
                for c in 0..comps {
                    out.push(node * comps + c);
                }
            }
        };
        match seg {
            Segment::Volume(v) => push(self.space.element_nodes(v.elements.start + item)),
            Segment::Faces(f) => {
                push(self.space.element_nodes(f.faces[item].elements[0]));
                push(self.space.element_nodes(f.faces[item].elements[1]));
            }
        }
    }

    fn local_apply(&self, seg: &Segment, item: usize, x: &[f64], out: &mut [f64]) {
        match seg {
            Segment::Volume(v) => {
                let nn = v.m.pow(3);
                let geo = self.space.element_geometry(v.elements.start + item);
                with_scratch(9 * nn, |flux| match v.coef {
                    Coefficient::Elastic { lambda, mu } => {
                        elastic_volume(v.m, &v.diff, geo, lambda, mu, x, flux, out)
                    }
                    Coefficient::Acoustic { rho } => acoustic_volume(v.m, &v.diff, geo, rho, x, flux, out),
                })
            }
            Segment::Faces(f) => sipg_face(&f.faces[item], f.parts, x, out),
        }
    }

    /// Assembles the operator into CSR by applying each local kernel to
    /// unit vectors.
    pub fn to_csr(&self) -> CsrMatrix {
        let mut triplets = Vec::new();
        let mut dofs = Vec::new();
        for (seg, lay) in self.segments.iter().zip(&self.layout) {
            let mut x = vec![0.0; lay.local_len];
            let mut y = vec![0.0; lay.local_len];
            for item in 0..lay.count {
                self.item_dofs(seg, item, &mut dofs);
                for col in 0..lay.local_len {
                    x.fill(0.0);
                    x[col] = 1.0;
                    self.local_apply(seg, item, &x, &mut y);
                    for (row, &v) in y.iter().enumerate() {
                        if v != 0.0 {
                            triplets.push((dofs[row], dofs[col], v));
                        }
                    }
                }
            }
        }
        let n = self.space.n_dofs();
        CsrMatrix::from_triplets(n, n, triplets)
    }
}

impl LinearOperator for StiffnessOperator {
    fn nrows(&self) -> usize {
        self.space.n_dofs()
    }

    fn ncols(&self) -> usize {
        self.space.n_dofs()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut buf = self.buffer.lock().expect("stiffness buffer poisoned");
        let comps = self.space.components();
        for (seg, lay) in self.segments.iter().zip(&self.layout) {
            if lay.count == 0 {
                continue;
            }
            let region = &mut buf[lay.offset..lay.offset + lay.local_len * lay.count];
            region
                .par_chunks_mut(lay.local_len)
                .enumerate()
                .for_each(|(item, out)| {
                    let gather = |xl: &mut [f64]| {
                        let mut pos = 0;
                        let mut take = |nodes: &[usize]| {
                            for &node in nodes {
                                for c in 0..comps {
                                    xl[pos] = x[node * comps + c];
                                    pos += 1;
                                }
                            }
                        };
                        match seg {
                            Segment::Volume(v) => take(self.space.element_nodes(v.elements.start + item)),
                            Segment::Faces(f) => {
                                take(self.space.element_nodes(f.faces[item].elements[0]));
                                take(self.space.element_nodes(f.faces[item].elements[1]));
                            }
                        }
                    };
                    GATHER.with(|g| {
                        let mut g = g.borrow_mut();
                        if g.len() < lay.local_len {
                            g.resize(lay.local_len, 0.0);
                        }
                        let xl = &mut g[..lay.local_len];
                        gather(xl);
                        self.local_apply(seg, item, xl, out);
                    });
                });
        }
        let buf = &*buf;
        y.par_iter_mut().enumerate().for_each(|(d, yd)| {
            let mut acc = 0.0;
            for &p in &self.incidence[self.incidence_ptr[d]..self.incidence_ptr[d + 1]] {
                acc += buf[p];
            }
            *yd = acc;
        });
    }
}

thread_local! {
    static GATHER: RefCell<Vec<f64>> = const { RefCell::new(Vec::new()) };
}

/// `η = α {λ+2μ}_H {N²/h}_H`.
pub fn penalty_value(alpha: f64, p_modulus: [f64; 2], degree: [usize; 2], meshsize: [f64; 2]) -> f64 {
    let nh = |s: usize| (degree[s] * degree[s]) as f64 / meshsize[s];
    alpha * harmonic_mean(p_modulus[0], p_modulus[1]) * harmonic_mean(nh(0), nh(1))
}

fn face_kernels(
    mesh: &HexMesh,
    faces: &FaceSets,
    space: &DofSpace,
    materials: &MaterialTable,
    penalty: PenaltySpec,
) -> Result<Vec<FaceKernel>> {
    let mut out = Vec::new();
    let mut vals = Vec::new();
    let mut grads = Vec::new();
    for group in faces.elastic_internal_groups() {
        let mat = [
            materials.elastic(group.plus_region)?,
            materials.elastic(group.minus_region)?,
        ];
        let local = |f: &crate::mesh::FaceRef| space.local_element(f.element).expect("elastic face in space");
        let deg = [
            group.plus.first().map(|f| space.element_degree(local(f))).unwrap_or(1),
            group.minus.first().map(|f| space.element_degree(local(f))).unwrap_or(1),
        ];
        let h = [
            mesh.region_meshsize(group.plus_region),
            mesh.region_meshsize(group.minus_region),
        ];
        let eta = penalty_value(penalty.alpha, [mat[0].p_modulus(), mat[1].p_modulus()], deg, h);
        let pairs: Vec<MortarPair> =
            build_interface_pairs(mesh, &group.plus, &group.minus, deg[0].max(deg[1]) + 1)?;
        for pair in pairs {
            let elements = [local(&pair.plus), local(&pair.minus)];
            let nodes = [(deg[0] + 1).pow(3), (deg[1] + 1).pow(3)];
            let mut k = FaceKernel {
                elements,
                nodes,
                lambda: [mat[0].lambda, mat[1].lambda],
                mu: [mat[0].mu, mat[1].mu],
                eta,
                weights: Vec::new(),
                normals: Vec::new(),
                points: Vec::new(),
                phi: [Vec::new(), Vec::new()],
                dphi: [Vec::new(), Vec::new()],
            };
            for p in &pair.points {
                k.weights.push(p.weight);
                k.normals.push(p.normal);
                k.points.push(p.x);
                for (s, xi) in [p.plus_ref, p.minus_ref].into_iter().enumerate() {
                    space.basis_at(mesh, elements[s], xi, &mut vals, &mut grads);
                    k.phi[s].extend_from_slice(&vals);
                    k.dphi[s].extend_from_slice(&grads);
                }
            }
            out.push(k);
        }
    }
    Ok(out)
}
