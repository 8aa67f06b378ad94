//! Hexahedral meshes, trilinear geometry maps, face classification and
//! interface pairing.
//!
//! Vertex ordering follows the VTK hexahedron convention: the bottom face
//! `ζ = -1` counter-clockwise (0..3), then the top face (4..7). Local faces
//! are numbered `0:-x, 1:+x, 2:-y, 3:+y, 4:-z, 5:+z` in reference
//! coordinates.

mod faces;
mod generate;
mod io;
mod mortar;

pub use faces::{
    classify_faces, BoundaryCondition, BoundarySets, BoundarySpec, CouplingGroup, CouplingKind,
    FaceSets, Side,
};
pub use generate::{build_box_mesh, build_cube_cavity_mesh, BoxExtents};
pub use io::{import_mesh, read_mesh_file, write_mesh};
pub use mortar::{build_interface_pairs, MortarPair, MortarPoint};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

/// Reference coordinates of the eight hexahedron corners.
pub const CORNERS: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

const EDGES: [(usize, usize); 12] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 0),
    (4, 5),
    (5, 6),
    (6, 7),
    (7, 4),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Elastic,
    Acoustic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub id: u32,
    pub kind: DomainKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HexElement {
    pub vertices: [usize; 8],
    pub region: u32,
}

/// A local face of a mesh element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaceRef {
    pub element: usize,
    pub face: u8,
}

impl FaceRef {
    pub fn new(element: usize, face: u8) -> Self {
        Self { element, face }
    }

    /// Reference axis normal to the face.
    pub fn axis(&self) -> usize {
        (self.face / 2) as usize
    }

    /// `-1` or `+1`: the fixed reference coordinate on the face.
    pub fn side(&self) -> f64 {
        if self.face.is_multiple_of(2) {
            -1.0
        } else {
            1.0
        }
    }

    /// The two reference axes spanning the face, ascending.
    pub fn tangent_axes(&self) -> (usize, usize) {
        match self.axis() {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        }
    }

    /// Reference point on the face for face-local coordinates `(r1, r2)`.
    pub fn reference_point(&self, r1: f64, r2: f64) -> Point3 {
        let mut p = [0.0; 3];
        let (t1, t2) = self.tangent_axes();
        p[self.axis()] = self.side();
        p[t1] = r1;
        p[t2] = r2;
        p
    }

    /// Local vertex indices (0..8) on this face.
    pub fn local_vertices(&self) -> [usize; 4] {
        let axis = self.axis();
        let side = self.side();
        let mut out = [0; 4];
        let mut k = 0;
        for (v, c) in CORNERS.iter().enumerate() {
            if c[axis] == side {
                out[k] = v;
                k += 1;
            }
        }
        out
    }
}

/// Physical point, Jacobian `J[i][r] = ∂x_i/∂ξ_r` and its determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryPoint {
    pub x: Point3,
    pub jacobian: Mat3,
    pub det_j: f64,
}

#[derive(Debug, Clone, Default)]
pub struct HexMesh {
    pub vertices: Vec<Point3>,
    pub elements: Vec<HexElement>,
    pub regions: Vec<Region>,
    /// Boundary tags read from a mesh file, keyed by face.
    pub face_tags: BTreeMap<FaceRef, BoundaryCondition>,
}

impl HexMesh {
    pub fn region(&self, id: u32) -> Option<&Region> {
        self.regions.iter().find(|r| r.id == id)
    }

    pub fn region_kind(&self, id: u32) -> Option<DomainKind> {
        self.region(id).map(|r| r.kind)
    }

    pub fn element_kind(&self, element: usize) -> DomainKind {
        self.region_kind(self.elements[element].region)
            .expect("element region is registered")
    }

    pub fn element_corners(&self, element: usize) -> [Point3; 8] {
        let verts = &self.elements[element].vertices;
        std::array::from_fn(|a| self.vertices[verts[a]])
    }

    /// Trilinear map of `element` at reference point `xi`.
    pub fn geometry_map(&self, element: usize, xi: Point3) -> Result<GeometryPoint> {
        if xi.iter().any(|c| !(-1.0..=1.0).contains(c)) {
            return Err(Error::OutsideReference(xi.to_vec()));
        }
        let g = trilinear_map(&self.element_corners(element), xi);
        if g.det_j <= 0.0 {
            return Err(Error::InvertedElement {
                element,
                det_j: g.det_j,
            });
        }
        Ok(g)
    }

    /// Maximum edge length of an element.
    pub fn element_size(&self, element: usize) -> f64 {
        let c = self.element_corners(element);
        EDGES
            .iter()
            .map(|&(a, b)| dist(&c[a], &c[b]))
            .fold(0.0, f64::max)
    }

    /// Meshsize of a region: the largest element size in it.
    pub fn region_meshsize(&self, region: u32) -> f64 {
        self.elements
            .iter()
            .enumerate()
            .filter(|(_, e)| e.region == region)
            .map(|(i, _)| self.element_size(i))
            .fold(0.0, f64::max)
    }

    pub fn bounding_box(&self) -> (Point3, Point3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for d in 0..3 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        dist(&lo, &hi)
    }

    /// Checks the Jacobian determinant at the given reference points of
    /// every element.
    pub fn validate_jacobians(&self, points: &[Point3]) -> Result<()> {
        for e in 0..self.elements.len() {
            let corners = self.element_corners(e);
            for p in points {
                let g = trilinear_map(&corners, *p);
                if !(g.det_j > 0.0) {
                    return Err(Error::InvertedElement {
                        element: e,
                        det_j: g.det_j,
                    });
                }
            }
        }
        Ok(())
    }

    /// Concatenates mesh fragments. Vertices are not merged; coincident
    /// nodes are identified later by the function spaces and face
    /// classification.
    pub fn merge(fragments: impl IntoIterator<Item = HexMesh>) -> Result<HexMesh> {
        let mut out = HexMesh::default();
        for frag in fragments {
            let v_off = out.vertices.len();
            let e_off = out.elements.len();
            for r in &frag.regions {
                match out.region(r.id) {
                    Some(existing) if existing.kind != r.kind => {
                        return Err(Error::InvalidInput(format!(
                            "region {} declared both {:?} and {:?}",
                            r.id, existing.kind, r.kind
                        )))
                    }
                    Some(_) => {}
                    None => out.regions.push(*r),
                }
            }
            out.vertices.extend_from_slice(&frag.vertices);
            out.elements
                .extend(frag.elements.iter().map(|e| HexElement {
                    vertices: e.vertices.map(|v| v + v_off),
                    region: e.region,
                }));
            for (f, tag) in frag.face_tags {
                out.face_tags
                    .insert(FaceRef::new(f.element + e_off, f.face), tag);
            }
        }
        Ok(out)
    }

    /// Volume by Gauss quadrature of the Jacobian determinant (exact for
    /// trilinear maps).
    pub fn volume(&self) -> f64 {
        let (x, w) = crate::basis::gauss_legendre(3).expect("three points");
        let mut vol = 0.0;
        for e in 0..self.elements.len() {
            let c = self.element_corners(e);
            for (i, wi) in w.iter().enumerate() {
                for (j, wj) in w.iter().enumerate() {
                    for (k, wk) in w.iter().enumerate() {
                        vol += wi * wj * wk * trilinear_map(&c, [x[i], x[j], x[k]]).det_j;
                    }
                }
            }
        }
        vol
    }

    /// Finds an element of the given domain containing `x` and the
    /// reference coordinates of `x` in it.
    pub fn locate(&self, x: Point3, kind: Option<DomainKind>) -> Option<(usize, Point3)> {
        let tol = 1e-9 * self.diameter().max(f64::MIN_POSITIVE);
        for e in 0..self.elements.len() {
            if let Some(k) = kind {
                if self.element_kind(e) != k {
                    continue;
                }
            }
            let c = self.element_corners(e);
            let inside_bbox = (0..3).all(|d| {
                let lo = c.iter().map(|p| p[d]).fold(f64::INFINITY, f64::min);
                let hi = c.iter().map(|p| p[d]).fold(f64::NEG_INFINITY, f64::max);
                x[d] >= lo - tol && x[d] <= hi + tol
            });
            if !inside_bbox {
                continue;
            }
            if let Some(xi) = inverse_map(&c, x) {
                if xi.iter().all(|v| v.abs() <= 1.0 + 1e-9) {
                    return Some((e, xi.map(|v| v.clamp(-1.0, 1.0))));
                }
            }
        }
        None
    }
}

pub(crate) fn dist(a: &Point3, b: &Point3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub(crate) fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Inverse of a 3×3 matrix with known determinant.
pub(crate) fn inv3(m: &Mat3, det: f64) -> Mat3 {
    let d = 1.0 / det;
    [
        [
            (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * d,
            (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * d,
            (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * d,
        ],
        [
            (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * d,
            (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * d,
            (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * d,
        ],
        [
            (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * d,
            (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * d,
            (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * d,
        ],
    ]
}

/// Trilinear interpolation of the corners, without validity checks.
pub fn trilinear_map(corners: &[Point3; 8], xi: Point3) -> GeometryPoint {
    let mut x = [0.0; 3];
    let mut jac = [[0.0; 3]; 3];
    for (a, c) in CORNERS.iter().enumerate() {
        let f = [
            0.5 * (1.0 + c[0] * xi[0]),
            0.5 * (1.0 + c[1] * xi[1]),
            0.5 * (1.0 + c[2] * xi[2]),
        ];
        let n = f[0] * f[1] * f[2];
        let dn = [
            0.5 * c[0] * f[1] * f[2],
            0.5 * c[1] * f[0] * f[2],
            0.5 * c[2] * f[0] * f[1],
        ];
        let p = &corners[a];
        for i in 0..3 {
            x[i] += n * p[i];
            for r in 0..3 {
                jac[i][r] += dn[r] * p[i];
            }
        }
    }
    GeometryPoint {
        x,
        jacobian: jac,
        det_j: det3(&jac),
    }
}

/// Newton inversion of the trilinear map. Returns `None` when the
/// iteration fails to converge.
pub fn inverse_map(corners: &[Point3; 8], x: Point3) -> Option<Point3> {
    let scale = EDGES
        .iter()
        .map(|&(a, b)| dist(&corners[a], &corners[b]))
        .fold(0.0, f64::max);
    let mut xi = [0.0; 3];
    for _ in 0..50 {
        let g = trilinear_map(corners, xi);
        if g.det_j.abs() < f64::MIN_POSITIVE {
            return None;
        }
        let r = [g.x[0] - x[0], g.x[1] - x[1], g.x[2] - x[2]];
        let inv = inv3(&g.jacobian, g.det_j);
        let mut step = [0.0; 3];
        for a in 0..3 {
            for b in 0..3 {
                step[a] += inv[a][b] * r[b];
            }
        }
        for a in 0..3 {
            xi[a] -= step[a];
        }
        let res = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if step.iter().map(|s| s.abs()).fold(0.0, f64::max) < 1e-13 || res < 1e-14 * scale {
            return Some(xi);
        }
        if xi.iter().any(|v| !v.is_finite() || v.abs() > 10.0) {
            return None;
        }
    }
    None
}
