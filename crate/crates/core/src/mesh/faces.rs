//! Face classification: outer boundary sets per domain, elastic
//! region-to-region faces and the elasto-acoustic interface.
//!
//! Faces shared topologically (same four vertex ids) or geometrically
//! (coincident corners) are conforming. The remaining faces are tested for
//! overlap against faces of other regions lying on the same axis-aligned
//! plane; that is the only non-conforming configuration supported.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{DomainKind, FaceRef, HexMesh, Point3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
    Absorbing,
}

/// Sides of the mesh bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

impl Side {
    pub const ALL: [Side; 6] = [
        Side::XMin,
        Side::XMax,
        Side::YMin,
        Side::YMax,
        Side::ZMin,
        Side::ZMax,
    ];

    pub fn axis(self) -> usize {
        self as usize / 2
    }

    pub fn is_max(self) -> bool {
        self as usize % 2 == 1
    }

    pub fn name(self) -> &'static str {
        ["xmin", "xmax", "ymin", "ymax", "zmin", "zmax"][self as usize]
    }
}

/// Boundary condition assignment for outer faces. Mesh-file tags win over
/// bounding-box side overrides, which win over the default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundarySpec {
    pub default: Option<BoundaryCondition>,
    pub sides: [Option<BoundaryCondition>; 6],
}

impl BoundarySpec {
    pub fn uniform(bc: BoundaryCondition) -> Self {
        Self {
            default: Some(bc),
            sides: [None; 6],
        }
    }

    pub fn with_side(mut self, side: Side, bc: BoundaryCondition) -> Self {
        self.sides[side as usize] = Some(bc);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundarySets {
    pub dirichlet: Vec<FaceRef>,
    pub neumann: Vec<FaceRef>,
    pub absorbing: Vec<FaceRef>,
}

impl BoundarySets {
    fn push(&mut self, bc: BoundaryCondition, f: FaceRef) {
        match bc {
            BoundaryCondition::Dirichlet => self.dirichlet.push(f),
            BoundaryCondition::Neumann => self.neumann.push(f),
            BoundaryCondition::Absorbing => self.absorbing.push(f),
        }
    }

    pub fn len(&self) -> usize {
        self.dirichlet.len() + self.neumann.len() + self.absorbing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn sort(&mut self) {
        self.dirichlet.sort();
        self.neumann.sort();
        self.absorbing.sort();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CouplingKind {
    /// Faces between two elastic regions (discontinuous, penalised).
    ElasticElastic,
    /// The elasto-acoustic interface; the plus side is elastic.
    ElasticAcoustic,
}

/// Faces of two regions that touch each other. Pairing into quadrature
/// patches is done by [`super::build_interface_pairs`].
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingGroup {
    pub kind: CouplingKind,
    pub plus_region: u32,
    pub minus_region: u32,
    pub plus: Vec<FaceRef>,
    pub minus: Vec<FaceRef>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FaceSets {
    pub elastic: BoundarySets,
    pub acoustic: BoundarySets,
    pub couplings: Vec<CouplingGroup>,
}

impl FaceSets {
    pub fn interface_groups(&self) -> impl Iterator<Item = &CouplingGroup> {
        self.couplings
            .iter()
            .filter(|g| g.kind == CouplingKind::ElasticAcoustic)
    }

    pub fn elastic_internal_groups(&self) -> impl Iterator<Item = &CouplingGroup> {
        self.couplings
            .iter()
            .filter(|g| g.kind == CouplingKind::ElasticElastic)
    }

    pub fn boundary(&self, kind: DomainKind) -> &BoundarySets {
        match kind {
            DomainKind::Elastic => &self.elastic,
            DomainKind::Acoustic => &self.acoustic,
        }
    }

    /// Number of element faces lying on the outer boundary.
    pub fn outer_face_count(&self) -> usize {
        self.elastic.len() + self.acoustic.len()
    }
}

type Rect = [f64; 4];

fn quantize(p: &Point3, delta: f64) -> [i64; 3] {
    p.map(|c| (c / delta).round() as i64)
}

/// Axis-aligned rectangle `(axis, plane, [lo1, hi1, lo2, hi2])` spanned by
/// a face, if it is one.
fn axis_rectangle(corners: &[Point3; 4], tol: f64) -> Option<(usize, f64, Rect)> {
    for axis in 0..3 {
        let c0 = corners[0][axis];
        if corners.iter().all(|p| (p[axis] - c0).abs() <= tol) {
            let (t1, t2) = match axis {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let lo1 = corners.iter().map(|p| p[t1]).fold(f64::INFINITY, f64::min);
            let hi1 = corners.iter().map(|p| p[t1]).fold(f64::NEG_INFINITY, f64::max);
            let lo2 = corners.iter().map(|p| p[t2]).fold(f64::INFINITY, f64::min);
            let hi2 = corners.iter().map(|p| p[t2]).fold(f64::NEG_INFINITY, f64::max);
            let on_corner = corners.iter().all(|p| {
                ((p[t1] - lo1).abs() <= tol || (p[t1] - hi1).abs() <= tol)
                    && ((p[t2] - lo2).abs() <= tol || (p[t2] - hi2).abs() <= tol)
            });
            let mean = corners.iter().map(|p| p[axis]).sum::<f64>() / 4.0;
            return on_corner.then_some((axis, mean, [lo1, hi1, lo2, hi2]));
        }
    }
    None
}

pub(crate) fn rect_overlap(a: &Rect, b: &Rect) -> Option<Rect> {
    let lo1 = a[0].max(b[0]);
    let hi1 = a[1].min(b[1]);
    let lo2 = a[2].max(b[2]);
    let hi2 = a[3].min(b[3]);
    (hi1 > lo1 && hi2 > lo2).then_some([lo1, hi1, lo2, hi2])
}

pub(crate) fn face_corners(mesh: &HexMesh, f: FaceRef) -> [Point3; 4] {
    let verts = &mesh.elements[f.element].vertices;
    f.local_vertices().map(|a| mesh.vertices[verts[a]])
}

/// Rectangle of an axis-aligned face, used by the mortar builder.
pub(crate) fn face_rectangle(mesh: &HexMesh, f: FaceRef, tol: f64) -> Option<(usize, f64, Rect)> {
    axis_rectangle(&face_corners(mesh, f), tol)
}

struct Classifier<'a> {
    mesh: &'a HexMesh,
    groups: BTreeMap<(CouplingKind, u32, u32), CouplingGroup>,
}

impl Classifier<'_> {
    /// Records that faces `a` and `b` touch. Returns false when they belong
    /// to the same continuous space (no face term needed).
    fn couple(&mut self, a: FaceRef, b: FaceRef) -> Result<bool> {
        let ra = self.mesh.elements[a.element].region;
        let rb = self.mesh.elements[b.element].region;
        let ka = self.mesh.element_kind(a.element);
        let kb = self.mesh.element_kind(b.element);
        let (kind, plus, minus) = match (ka, kb) {
            (DomainKind::Acoustic, DomainKind::Acoustic) => return Ok(false),
            (DomainKind::Elastic, DomainKind::Elastic) if ra == rb => return Ok(false),
            (DomainKind::Elastic, DomainKind::Elastic) => {
                if ra < rb {
                    (CouplingKind::ElasticElastic, a, b)
                } else {
                    (CouplingKind::ElasticElastic, b, a)
                }
            }
            (DomainKind::Elastic, DomainKind::Acoustic) => (CouplingKind::ElasticAcoustic, a, b),
            (DomainKind::Acoustic, DomainKind::Elastic) => (CouplingKind::ElasticAcoustic, b, a),
        };
        let pr = self.mesh.elements[plus.element].region;
        let mr = self.mesh.elements[minus.element].region;
        let g = self
            .groups
            .entry((kind, pr, mr))
            .or_insert_with(|| CouplingGroup {
                kind,
                plus_region: pr,
                minus_region: mr,
                plus: Vec::new(),
                minus: Vec::new(),
            });
        g.plus.push(plus);
        g.minus.push(minus);
        Ok(true)
    }
}

pub fn classify_faces(mesh: &HexMesh, spec: &BoundarySpec) -> Result<FaceSets> {
    let diam = mesh.diameter();
    let tol = 1e-9 * diam;
    let delta = tol.max(f64::MIN_POSITIVE);

    let mut topo: HashMap<[usize; 4], Vec<FaceRef>> = HashMap::new();
    for (e, el) in mesh.elements.iter().enumerate() {
        for f in 0..6u8 {
            let face = FaceRef::new(e, f);
            let mut key = face.local_vertices().map(|a| el.vertices[a]);
            key.sort_unstable();
            topo.entry(key).or_default().push(face);
        }
    }

    let mut cls = Classifier {
        mesh,
        groups: BTreeMap::new(),
    };
    let mut singles: Vec<FaceRef> = Vec::new();
    for faces in topo.into_values() {
        match faces.as_slice() {
            [f] => singles.push(*f),
            [a, b] => {
                cls.couple(*a, *b)?;
            }
            _ => {
                return Err(Error::Classification(format!(
                    "face shared by {} elements (first: element {})",
                    faces.len(),
                    faces[0].element
                )))
            }
        }
    }
    singles.sort();

    // Geometrically coincident faces with distinct vertex ids.
    let mut geo: HashMap<[[i64; 3]; 4], Vec<FaceRef>> = HashMap::new();
    for &f in &singles {
        let mut key = face_corners(mesh, f).map(|p| quantize(&p, delta));
        key.sort_unstable();
        geo.entry(key).or_default().push(f);
    }
    let mut remaining: Vec<FaceRef> = Vec::new();
    let mut geo_groups: Vec<Vec<FaceRef>> = geo.into_values().collect();
    geo_groups.sort();
    for faces in geo_groups {
        match faces.as_slice() {
            [f] => remaining.push(*f),
            [a, b] => {
                cls.couple(*a, *b)?;
            }
            _ => {
                return Err(Error::Classification(format!(
                    "{} coincident faces at element {}",
                    faces.len(),
                    faces[0].element
                )))
            }
        }
    }
    remaining.sort();

    // Non-conforming overlaps on shared axis-aligned planes.
    let mut planes: BTreeMap<(usize, i64), Vec<(FaceRef, Rect)>> = BTreeMap::new();
    let mut outer: Vec<FaceRef> = Vec::new();
    for &f in &remaining {
        match face_rectangle(mesh, f, tol) {
            Some((axis, plane, rect)) => planes
                .entry((axis, (plane / delta).round() as i64))
                .or_default()
                .push((f, rect)),
            None => outer.push(f),
        }
    }
    for faces in planes.values() {
        let mut covered = vec![0.0; faces.len()];
        for i in 0..faces.len() {
            for j in (i + 1)..faces.len() {
                let (fa, ra) = faces[i];
                let (fb, rb) = faces[j];
                let ka = mesh.element_kind(fa.element);
                let kb = mesh.element_kind(fb.element);
                let same_space = match (ka, kb) {
                    (DomainKind::Acoustic, DomainKind::Acoustic) => true,
                    _ => mesh.elements[fa.element].region == mesh.elements[fb.element].region,
                };
                let Some(ov) = rect_overlap(&ra, &rb) else {
                    continue;
                };
                if ov[1] - ov[0] <= tol || ov[3] - ov[2] <= tol {
                    continue;
                }
                if same_space {
                    return Err(Error::UnsupportedGeometry(format!(
                        "non-conforming faces inside one continuous space (elements {} and {})",
                        fa.element, fb.element
                    )));
                }
                let area = (ov[1] - ov[0]) * (ov[3] - ov[2]);
                covered[i] += area;
                covered[j] += area;
                // Each geometric overlap only needs to be recorded once per
                // face pair; duplicates are removed below.
                cls.couple(fa, fb)?;
            }
        }
        for (k, (f, r)) in faces.iter().enumerate() {
            let area = (r[1] - r[0]) * (r[3] - r[2]);
            if covered[k] == 0.0 {
                outer.push(*f);
            } else if (covered[k] - area).abs() > 1e-9 * area {
                return Err(Error::UnsupportedGeometry(format!(
                    "face {}/{} is only partially covered by neighbouring regions ({} of {})",
                    f.element, f.face, covered[k], area
                )));
            }
        }
    }
    outer.sort();

    let (lo, hi) = mesh.bounding_box();
    let mut sets = FaceSets::default();
    let mut used_tags = 0usize;
    for f in outer {
        let bc = if let Some(bc) = mesh.face_tags.get(&f) {
            used_tags += 1;
            Some(*bc)
        } else {
            let corners = face_corners(mesh, f);
            let side = Side::ALL.iter().find(|s| {
                let target = if s.is_max() { hi[s.axis()] } else { lo[s.axis()] };
                corners.iter().all(|p| (p[s.axis()] - target).abs() <= tol)
            });
            side.and_then(|s| spec.sides[*s as usize]).or(spec.default)
        };
        let bc = bc.ok_or_else(|| {
            Error::Classification(format!(
                "outer face {}/{} has no boundary condition",
                f.element, f.face
            ))
        })?;
        match mesh.element_kind(f.element) {
            DomainKind::Elastic => sets.elastic.push(bc, f),
            DomainKind::Acoustic => sets.acoustic.push(bc, f),
        }
    }
    if used_tags != mesh.face_tags.len() {
        return Err(Error::Classification(format!(
            "{} tagged faces are not on the outer boundary",
            mesh.face_tags.len() - used_tags
        )));
    }
    sets.elastic.sort();
    sets.acoustic.sort();
    sets.couplings = cls
        .groups
        .into_values()
        .map(|mut g| {
            g.plus.sort();
            g.plus.dedup();
            g.minus.sort();
            g.minus.dedup();
            g
        })
        .collect();
    Ok(sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_box_mesh, build_cube_cavity_mesh, BoxExtents, Region};

    fn two_box(nx_e: usize, nx_a: usize) -> HexMesh {
        let e = build_box_mesh(
            &BoxExtents::new([-1.0, 0.0, 0.0], [0.0, 1.0, 1.0]).unwrap(),
            [nx_e; 3],
            Region {
                id: 1,
                kind: DomainKind::Elastic,
            },
        )
        .unwrap();
        let a = build_box_mesh(
            &BoxExtents::new([0.0; 3], [1.0; 3]).unwrap(),
            [nx_a; 3],
            Region {
                id: 2,
                kind: DomainKind::Acoustic,
            },
        )
        .unwrap();
        HexMesh::merge([e, a]).unwrap()
    }

    #[test]
    fn verification_box_all_dirichlet() {
        let m = two_box(10, 10);
        let s = classify_faces(&m, &BoundarySpec::uniform(BoundaryCondition::Dirichlet)).unwrap();
        assert!(s.elastic.neumann.is_empty() && s.elastic.absorbing.is_empty());
        assert!(s.acoustic.neumann.is_empty() && s.acoustic.absorbing.is_empty());
        // Five outer sides of 100 faces per domain.
        assert_eq!(s.elastic.dirichlet.len(), 500);
        assert_eq!(s.acoustic.dirichlet.len(), 500);
        let g: Vec<_> = s.interface_groups().collect();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].plus.len(), 100);
        assert_eq!(g[0].minus.len(), 100);
        for f in &g[0].plus {
            assert_eq!(f.face, 1);
        }
    }

    #[test]
    fn nonmatching_interface_detected() {
        let m = two_box(10, 5);
        let s = classify_faces(&m, &BoundarySpec::uniform(BoundaryCondition::Dirichlet)).unwrap();
        let g: Vec<_> = s.interface_groups().collect();
        assert_eq!(g[0].plus.len(), 100);
        assert_eq!(g[0].minus.len(), 25);
        assert_eq!(s.acoustic.dirichlet.len(), 125);
    }

    #[test]
    fn scholte_layout_interface_at_z0() {
        let e = build_box_mesh(
            &BoxExtents::new([-1.0, -1.0, -10.0], [1.0, 1.0, 0.0]).unwrap(),
            [5, 5, 24],
            Region {
                id: 1,
                kind: DomainKind::Elastic,
            },
        )
        .unwrap();
        let a = build_box_mesh(
            &BoxExtents::new([-1.0, -1.0, 0.0], [1.0, 1.0, 10.0]).unwrap(),
            [5, 5, 24],
            Region {
                id: 2,
                kind: DomainKind::Acoustic,
            },
        )
        .unwrap();
        let m = HexMesh::merge([e, a]).unwrap();
        let s = classify_faces(&m, &BoundarySpec::uniform(BoundaryCondition::Dirichlet)).unwrap();
        let g: Vec<_> = s.interface_groups().collect();
        assert_eq!(g[0].plus.len(), 25);
        for f in &g[0].plus {
            assert_eq!(f.face, 5);
        }
    }

    #[test]
    fn cavity_outer_absorbing() {
        let m = build_cube_cavity_mesh(
            &BoxExtents::new([-2.0; 3], [2.0; 3]).unwrap(),
            [4, 4, 4],
            &BoxExtents::new([-1.0; 3], [1.0; 3]).unwrap(),
            [3, 3, 3],
            Region {
                id: 1,
                kind: DomainKind::Elastic,
            },
            Region {
                id: 2,
                kind: DomainKind::Acoustic,
            },
        )
        .unwrap();
        let s = classify_faces(&m, &BoundarySpec::uniform(BoundaryCondition::Absorbing)).unwrap();
        assert_eq!(s.elastic.absorbing.len(), 6 * 16);
        assert!(s.acoustic.is_empty());
        let g: Vec<_> = s.interface_groups().collect();
        assert_eq!(g[0].plus.len(), 6 * 4);
        assert_eq!(g[0].minus.len(), 6 * 9);
    }

    #[test]
    fn untagged_face_errors() {
        let m = two_box(2, 2);
        let spec = BoundarySpec::default().with_side(Side::XMin, BoundaryCondition::Dirichlet);
        assert!(matches!(classify_faces(&m, &spec), Err(Error::Classification(_))));
    }

    #[test]
    fn side_overrides() {
        let m = two_box(2, 2);
        let spec = BoundarySpec::uniform(BoundaryCondition::Dirichlet)
            .with_side(Side::XMax, BoundaryCondition::Absorbing)
            .with_side(Side::ZMax, BoundaryCondition::Neumann);
        let s = classify_faces(&m, &spec).unwrap();
        assert_eq!(s.acoustic.absorbing.len(), 4);
        assert_eq!(s.acoustic.neumann.len(), 4);
        assert_eq!(s.elastic.neumann.len(), 4);
        assert_eq!(s.outer_face_count(), 2 * 5 * 4);
    }

    #[test]
    fn two_elastic_regions_conforming() {
        let mut m = two_box(2, 2);
        m.regions[1].kind = DomainKind::Elastic;
        let s = classify_faces(&m, &BoundarySpec::uniform(BoundaryCondition::Dirichlet)).unwrap();
        assert_eq!(s.interface_groups().count(), 0);
        let g: Vec<_> = s.elastic_internal_groups().collect();
        assert_eq!(g.len(), 1);
        assert_eq!((g[0].plus_region, g[0].minus_region), (1, 2));
        assert_eq!(g[0].plus.len(), 4);
    }
}
