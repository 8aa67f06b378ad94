//! Quadrature on the intersections of paired faces from two sides of an
//! interface.

use std::collections::HashMap;

use super::faces::{face_corners, face_rectangle, rect_overlap};
use super::{inverse_map, trilinear_map, FaceRef, HexMesh, Point3};
use crate::basis::gauss_legendre;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MortarPoint {
    /// Physical location.
    pub x: Point3,
    pub weight: f64,
    /// Reference coordinates in the plus element.
    pub plus_ref: Point3,
    /// Reference coordinates in the minus element.
    pub minus_ref: Point3,
    /// Unit normal pointing out of the plus element.
    pub normal: Point3,
}

/// One intersection patch. On the elasto-acoustic interface the plus side
/// is elastic and `normal` is `n_e`.
#[derive(Debug, Clone, PartialEq)]
pub struct MortarPair {
    pub plus: FaceRef,
    pub minus: FaceRef,
    pub normal: Point3,
    pub points: Vec<MortarPoint>,
}

impl MortarPair {
    pub fn area(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }
}

fn snap_to_face(mut xi: Point3, face: FaceRef) -> Point3 {
    xi[face.axis()] = face.side();
    xi.map(|v| v.clamp(-1.0, 1.0))
}

fn locate_on_face(mesh: &HexMesh, face: FaceRef, x: Point3) -> Result<Point3> {
    let corners = mesh.element_corners(face.element);
    let xi = inverse_map(&corners, x).ok_or_else(|| {
        Error::UnsupportedGeometry(format!(
            "cannot invert the map of element {} at {x:?}",
            face.element
        ))
    })?;
    Ok(snap_to_face(xi, face))
}

fn cross(a: Point3, b: Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn conforming_pair(
    mesh: &HexMesh,
    plus: FaceRef,
    minus: FaceRef,
    gl: &(Vec<f64>, Vec<f64>),
) -> Result<MortarPair> {
    let corners = mesh.element_corners(plus.element);
    let (t1, t2) = plus.tangent_axes();
    let axis = plus.axis();
    let mut points = Vec::with_capacity(gl.0.len() * gl.0.len());
    for (j, wj) in gl.1.iter().enumerate() {
        for (i, wi) in gl.1.iter().enumerate() {
            let xi = plus.reference_point(gl.0[i], gl.0[j]);
            let g = trilinear_map(&corners, xi);
            let col = |r: usize| [g.jacobian[0][r], g.jacobian[1][r], g.jacobian[2][r]];
            let mut n = cross(col(t1), col(t2));
            let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            let out = col(axis);
            let orient = plus.side() * (n[0] * out[0] + n[1] * out[1] + n[2] * out[2]);
            let s = if orient < 0.0 { -1.0 } else { 1.0 } / len;
            n = n.map(|c| c * s);
            points.push(MortarPoint {
                x: g.x,
                weight: wi * wj * len,
                plus_ref: xi,
                minus_ref: locate_on_face(mesh, minus, g.x)?,
                normal: n,
            });
        }
    }
    let normal = points[points.len() / 2].normal;
    Ok(MortarPair {
        plus,
        minus,
        normal,
        points,
    })
}

/// Pairs `plus` faces with the `minus` faces they touch and builds a
/// `q × q` Gauss–Legendre rule on each intersection.
///
/// Faces that coincide exactly are paired directly (any bilinear shape);
/// the rest must be axis-aligned rectangles on common planes.
pub fn build_interface_pairs(
    mesh: &HexMesh,
    plus: &[FaceRef],
    minus: &[FaceRef],
    q: usize,
) -> Result<Vec<MortarPair>> {
    let gl = gauss_legendre(q)?;
    let tol = 1e-9 * mesh.diameter();
    let delta = tol.max(f64::MIN_POSITIVE);
    let key = |f: FaceRef| {
        let mut k = face_corners(mesh, f).map(|p| p.map(|c| (c / delta).round() as i64));
        k.sort_unstable();
        k
    };

    let mut minus_by_key: HashMap<[[i64; 3]; 4], FaceRef> = HashMap::new();
    for &m in minus {
        minus_by_key.insert(key(m), m);
    }
    let mut pairs = Vec::new();
    let mut matched_minus: Vec<FaceRef> = Vec::new();
    let mut open_plus: Vec<FaceRef> = Vec::new();
    for &p in plus {
        match minus_by_key.get(&key(p)) {
            Some(&m) => {
                pairs.push(conforming_pair(mesh, p, m, &gl)?);
                matched_minus.push(m);
            }
            None => open_plus.push(p),
        }
    }
    matched_minus.sort();
    let open_minus: Vec<FaceRef> = minus
        .iter()
        .copied()
        .filter(|m| matched_minus.binary_search(m).is_err())
        .collect();
    if open_plus.is_empty() && open_minus.is_empty() {
        return Ok(pairs);
    }

    let rect_of = |f: FaceRef| {
        face_rectangle(mesh, f, tol).ok_or_else(|| {
            Error::UnsupportedGeometry(format!(
                "non-matching face {}/{} is not an axis-aligned planar rectangle",
                f.element, f.face
            ))
        })
    };
    let mut minus_planes: HashMap<(usize, i64), Vec<(FaceRef, [f64; 4])>> = HashMap::new();
    for &m in &open_minus {
        let (axis, plane, r) = rect_of(m)?;
        minus_planes
            .entry((axis, (plane / delta).round() as i64))
            .or_default()
            .push((m, r));
    }
    let mut minus_cover: HashMap<FaceRef, f64> = HashMap::new();
    for &p in &open_plus {
        let (axis, plane, rp) = rect_of(p)?;
        let (t1, t2) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let centroid_axis = mesh
            .element_corners(p.element)
            .iter()
            .map(|c| c[axis])
            .sum::<f64>()
            / 8.0;
        let mut normal = [0.0; 3];
        normal[axis] = if plane > centroid_axis { 1.0 } else { -1.0 };
        let area_p = (rp[1] - rp[0]) * (rp[3] - rp[2]);
        let mut covered = 0.0;
        let candidates = minus_planes
            .get(&(axis, (plane / delta).round() as i64))
            .map(Vec::as_slice)
            .unwrap_or_default();
        for &(m, rm) in candidates {
            let Some(ov) = rect_overlap(&rp, &rm) else {
                continue;
            };
            let (l1, l2) = (ov[1] - ov[0], ov[3] - ov[2]);
            if l1 <= tol || l2 <= tol {
                continue;
            }
            covered += l1 * l2;
            *minus_cover.entry(m).or_default() += l1 * l2;
            let mut points = Vec::with_capacity(q * q);
            for (j, wj) in gl.1.iter().enumerate() {
                for (i, wi) in gl.1.iter().enumerate() {
                    let mut x = [0.0; 3];
                    x[axis] = plane;
                    x[t1] = ov[0] + 0.5 * (gl.0[i] + 1.0) * l1;
                    x[t2] = ov[2] + 0.5 * (gl.0[j] + 1.0) * l2;
                    points.push(MortarPoint {
                        x,
                        weight: 0.25 * wi * wj * l1 * l2,
                        plus_ref: locate_on_face(mesh, p, x)?,
                        minus_ref: locate_on_face(mesh, m, x)?,
                        normal,
                    });
                }
            }
            pairs.push(MortarPair {
                plus: p,
                minus: m,
                normal,
                points,
            });
        }
        if (covered - area_p).abs() > 1e-9 * area_p {
            return Err(Error::UnsupportedGeometry(format!(
                "face {}/{} covered {covered} of {area_p}",
                p.element, p.face
            )));
        }
    }
    for (m, r) in minus_planes.values().flatten() {
        let area = (r[1] - r[0]) * (r[3] - r[2]);
        let c = minus_cover.get(m).copied().unwrap_or(0.0);
        if (c - area).abs() > 1e-9 * area {
            return Err(Error::UnsupportedGeometry(format!(
                "face {}/{} covered {c} of {area}",
                m.element, m.face
            )));
        }
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{
        build_box_mesh, classify_faces, BoundaryCondition, BoundarySpec, BoxExtents, DomainKind,
        Region,
    };

    fn layout(e_sub: [usize; 3], a_sub: [usize; 3], e_max: [f64; 3], a_max: [f64; 3]) -> HexMesh {
        let e = build_box_mesh(
            &BoxExtents::new([-1.0, 0.0, 0.0], [0.0, e_max[1], e_max[2]]).unwrap(),
            e_sub,
            Region {
                id: 1,
                kind: DomainKind::Elastic,
            },
        )
        .unwrap();
        let a = build_box_mesh(
            &BoxExtents::new([0.0; 3], a_max).unwrap(),
            a_sub,
            Region {
                id: 2,
                kind: DomainKind::Acoustic,
            },
        )
        .unwrap();
        HexMesh::merge([e, a]).unwrap()
    }

    fn pairs_of(m: &HexMesh) -> Vec<MortarPair> {
        let s = classify_faces(m, &BoundarySpec::uniform(BoundaryCondition::Dirichlet)).unwrap();
        let g = s.interface_groups().next().unwrap();
        build_interface_pairs(m, &g.plus, &g.minus, 3).unwrap()
    }

    fn check_points_inside(m: &HexMesh, pairs: &[MortarPair]) {
        for p in pairs {
            for qp in &p.points {
                for (face, xi) in [(p.plus, qp.plus_ref), (p.minus, qp.minus_ref)] {
                    let x = m.geometry_map(face.element, xi).unwrap().x;
                    for d in 0..3 {
                        assert!((x[d] - qp.x[d]).abs() < 1e-12);
                    }
                    assert_eq!(xi[face.axis()], face.side());
                }
            }
        }
    }

    #[test]
    fn matching_pairs_full_faces() {
        let m = layout([10; 3], [10; 3], [0.0, 1.0, 1.0], [1.0; 3]);
        let pairs = pairs_of(&m);
        assert_eq!(pairs.len(), 100);
        for p in &pairs {
            assert!((p.area() - 0.01).abs() < 1e-14);
            assert!((p.normal[0] - 1.0).abs() < 1e-15 && p.normal[1].abs() + p.normal[2].abs() < 1e-15);
        }
        let total: f64 = pairs.iter().map(MortarPair::area).sum();
        assert!((total - 1.0).abs() < 1e-10);
        check_points_inside(&m, &pairs);
    }

    #[test]
    fn half_refined_pairs() {
        let m = layout([10; 3], [5; 3], [0.0, 1.0, 1.0], [1.0; 3]);
        let pairs = pairs_of(&m);
        assert_eq!(pairs.len(), 100);
        let mut per_minus: HashMap<FaceRef, usize> = HashMap::new();
        for p in &pairs {
            assert!((p.area() - 0.01).abs() < 1e-14);
            *per_minus.entry(p.minus).or_default() += 1;
        }
        assert!(per_minus.values().all(|&c| c == 4));
        let total: f64 = pairs.iter().map(MortarPair::area).sum();
        assert!((total - 1.0).abs() < 1e-10);
        check_points_inside(&m, &pairs);
    }

    #[test]
    fn ratio_one_and_a_half() {
        // 0.1 vs 0.15 on a 0.3 x 0.3 patch.
        let m = layout([3, 3, 3], [2, 2, 2], [0.0, 0.3, 0.3], [0.3, 0.3, 0.3]);
        let pairs = pairs_of(&m);
        let total: f64 = pairs.iter().map(MortarPair::area).sum();
        assert!((total - 0.09).abs() < 1e-12);
        // Elastic face [0,0.1]^2 meets acoustic face [0,0.15]^2 on [0,0.1]^2.
        let corner = pairs
            .iter()
            .find(|p| p.points.iter().all(|q| q.x[1] < 0.1 && q.x[2] < 0.1))
            .unwrap();
        assert!((corner.area() - 0.01).abs() < 1e-14);
        // Elastic face [0.1,0.2]x[0,0.1] overlaps [0,0.15]^2 on a 0.05 wide strip.
        let strip = pairs
            .iter()
            .find(|p| {
                p.points
                    .iter()
                    .all(|q| q.x[1] > 0.1 && q.x[1] < 0.15 && q.x[2] < 0.1)
            })
            .unwrap();
        assert!((strip.area() - 0.005).abs() < 1e-14);
        check_points_inside(&m, &pairs);
        for (ne, na, area) in [(10usize, 4usize, 1.0f64), (6, 4, 1.0)] {
            let m = layout([ne; 3], [na; 3], [0.0, 1.0, 1.0], [1.0; 3]);
            let total: f64 = pairs_of(&m).iter().map(MortarPair::area).sum();
            assert!((total - area).abs() < 1e-10);
        }
    }

    #[test]
    fn tilted_conforming_faces_pair_exactly() {
        // Two elements sharing a slanted face with duplicated vertices.
        let mut e = build_box_mesh(
            &BoxExtents::new([0.0; 3], [1.0; 3]).unwrap(),
            [2, 1, 1],
            Region {
                id: 1,
                kind: DomainKind::Elastic,
            },
        )
        .unwrap();
        for v in e.vertices.iter_mut() {
            if (v[0] - 0.5).abs() < 1e-12 {
                v[0] += 0.2 * v[2] - 0.1;
            }
        }
        let split: Vec<_> = e.elements.clone();
        let mut a = e.clone();
        e.elements = vec![split[0]];
        a.elements = vec![split[1]];
        a.regions = vec![Region {
            id: 2,
            kind: DomainKind::Acoustic,
        }];
        a.elements[0].region = 2;
        let m = HexMesh::merge([e, a]).unwrap();
        let pairs = pairs_of(&m);
        assert_eq!(pairs.len(), 1);
        let slant = (1.0f64 + 0.04).sqrt();
        assert!((pairs[0].area() - slant).abs() < 1e-12);
        check_points_inside(&m, &pairs);
    }

    #[test]
    fn slanted_nonmatching_rejected() {
        let mut m = layout([2; 3], [3; 3], [0.0, 1.0, 1.0], [1.0; 3]);
        for v in m.vertices.iter_mut() {
            if v[0].abs() < 1e-12 {
                v[0] += 0.01 * v[1];
            }
        }
        let plus: Vec<FaceRef> = (0..m.elements.len())
            .filter(|&e| m.element_kind(e) == DomainKind::Elastic)
            .map(|e| FaceRef::new(e, 1))
            .filter(|f| face_corners(&m, *f).iter().all(|p| p[0] > -1e-3))
            .collect();
        let minus: Vec<FaceRef> = (0..m.elements.len())
            .filter(|&e| m.element_kind(e) == DomainKind::Acoustic)
            .map(|e| FaceRef::new(e, 0))
            .filter(|f| face_corners(&m, *f).iter().all(|p| p[0] < 1e-1))
            .collect();
        assert!(matches!(
            build_interface_pairs(&m, &plus, &minus, 3),
            Err(Error::UnsupportedGeometry(_))
        ));
    }
}
