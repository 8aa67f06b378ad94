use crate::basis::local_index;
use crate::error::{Error, Result};
use crate::mesh::{build_interface_pairs, trilinear_map, FaceRef, FaceSets, HexMesh, Point3};
use crate::space::{DofSpace, MaterialTable};

use super::csr::CsrMatrix;

/// Lumped mass from co-located GLL quadrature: `ρ Σ w detJ` per node for
/// elastic spaces, `ρ_a c⁻² Σ w detJ` for acoustic ones.
pub fn assemble_mass(space: &DofSpace, materials: &MaterialTable) -> Result<Vec<f64>> {
    let comps = space.components();
    let mut node_mass = vec![0.0; space.n_nodes()];
    for b in space.blocks() {
        let coef = match space.kind() {
            crate::mesh::DomainKind::Elastic => materials.elastic(b.region)?.rho,
            crate::mesh::DomainKind::Acoustic => {
                let m = materials.acoustic(b.region)?;
                m.rho / (m.c * m.c)
            }
        };
        for l in b.elements.clone() {
            for (&node, g) in space.element_nodes(l).iter().zip(space.element_geometry(l)) {
                node_mass[node] += coef * g.wdet;
            }
        }
    }
    let mut out = Vec::with_capacity(space.n_dofs());
    for (node, &m) in node_mass.iter().enumerate() {
        if !(m > 0.0) {
            return Err(Error::Assembly(format!("nonpositive mass {m} at node {node}")));
        }
        out.extend(std::iter::repeat_n(m, comps));
    }
    Ok(out)
}

/// One GLL point on an element face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceNode {
    /// Index into the element's lexicographic node list.
    pub local: usize,
    pub x: Point3,
    /// Tensor face weight times the surface Jacobian.
    pub weight: f64,
    /// Outward unit normal.
    pub normal: Point3,
}

/// GLL points of `face` for a degree-`n` element.
pub fn face_nodes(mesh: &HexMesh, space: &DofSpace, face: FaceRef) -> Vec<FaceNode> {
    let local = space.local_element(face.element).expect("face element in space");
    let n = space.element_degree(local);
    let rule = space.rule(n);
    let corners = mesh.element_corners(face.element);
    let (t1, t2) = face.tangent_axes();
    let axis = face.axis();
    let fixed = if face.side() < 0.0 { 0 } else { n };
    let mut out = Vec::with_capacity((n + 1) * (n + 1));
    for b in 0..=n {
        for a in 0..=n {
            let xi = face.reference_point(rule.nodes()[a], rule.nodes()[b]);
            let g = trilinear_map(&corners, xi);
            let col = |r: usize| [g.jacobian[0][r], g.jacobian[1][r], g.jacobian[2][r]];
            let (u, v) = (col(t1), col(t2));
            let mut nrm = [
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ];
            let len = (nrm[0] * nrm[0] + nrm[1] * nrm[1] + nrm[2] * nrm[2]).sqrt();
            let out_dir = col(axis);
            let dot = nrm[0] * out_dir[0] + nrm[1] * out_dir[1] + nrm[2] * out_dir[2];
            let s = if dot * face.side() < 0.0 { -1.0 } else { 1.0 } / len;
            nrm = nrm.map(|c| c * s);
            let mut ijk = [0; 3];
            ijk[axis] = fixed;
            ijk[t1] = a;
            ijk[t2] = b;
            out.push(FaceNode {
                local: local_index(n + 1, ijk[0], ijk[1], ijk[2]),
                x: g.x,
                weight: rule.weights()[a] * rule.weights()[b] * len,
                normal: nrm,
            });
        }
    }
    out
}

/// Absorbing-boundary matrices. `S_e` holds `ρ w (c_P nnᵀ + c_S (I - nnᵀ))`
/// blocks at face nodes and `S_a` holds `ρ_a c⁻¹ w`, both positive
/// semidefinite and used on the left-hand side.
pub fn assemble_absorbing(
    mesh: &HexMesh,
    faces: &FaceSets,
    elastic: &DofSpace,
    acoustic: &DofSpace,
    materials: &MaterialTable,
) -> Result<(CsrMatrix, CsrMatrix)> {
    let mut te = Vec::new();
    for &f in &faces.boundary(crate::mesh::DomainKind::Elastic).absorbing {
        let Some(l) = elastic.local_element(f.element) else {
            continue;
        };
        let m = materials.elastic(mesh.elements[f.element].region)?;
        let (cp, cs) = m.wave_speeds();
        let nodes = elastic.element_nodes(l);
        for fnode in face_nodes(mesh, elastic, f) {
            let n = fnode.normal;
            let node = nodes[fnode.local];
            for r in 0..3 {
                for c in 0..3 {
                    let id = if r == c { 1.0 } else { 0.0 };
                    let v = m.rho * fnode.weight * (cp * n[r] * n[c] + cs * (id - n[r] * n[c]));
                    te.push((3 * node + r, 3 * node + c, v));
                }
            }
        }
    }
    let mut ta = Vec::new();
    for &f in &faces.boundary(crate::mesh::DomainKind::Acoustic).absorbing {
        let Some(l) = acoustic.local_element(f.element) else {
            continue;
        };
        let m = materials.acoustic(mesh.elements[f.element].region)?;
        let nodes = acoustic.element_nodes(l);
        for fnode in face_nodes(mesh, acoustic, f) {
            let node = nodes[fnode.local];
            ta.push((node, node, m.rho / m.c * fnode.weight));
        }
    }
    let (ne, na) = (elastic.n_dofs(), acoustic.n_dofs());
    Ok((CsrMatrix::from_triplets(ne, ne, te), CsrMatrix::from_triplets(na, na, ta)))
}

/// Interface coupling `(C_e ψ)·v = ⟨ρ_a ψ n_e, v⟩` on mortar quadrature,
/// and `C_a = -C_eᵀ`.
pub fn assemble_coupling(
    mesh: &HexMesh,
    faces: &FaceSets,
    elastic: &DofSpace,
    acoustic: &DofSpace,
    materials: &MaterialTable,
) -> Result<(CsrMatrix, CsrMatrix)> {
    let mut triplets = Vec::new();
    let (mut pe, mut ge, mut pa, mut ga) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut any = false;
    for group in faces.interface_groups() {
        any = true;
        let rho_a = materials.acoustic(group.minus_region)?.rho;
        let le = |f: &FaceRef| elastic.local_element(f.element).expect("elastic face");
        let la = |f: &FaceRef| acoustic.local_element(f.element).expect("acoustic face");
        let n_e = group.plus.first().map(|f| elastic.element_degree(le(f))).unwrap_or(1);
        let n_a = group.minus.first().map(|f| acoustic.element_degree(la(f))).unwrap_or(1);
        for pair in build_interface_pairs(mesh, &group.plus, &group.minus, n_e.max(n_a) + 1)? {
            let (l_e, l_a) = (le(&pair.plus), la(&pair.minus));
            let nodes_e = elastic.element_nodes(l_e);
            let nodes_a = acoustic.element_nodes(l_a);
            for p in &pair.points {
                elastic.basis_at(mesh, l_e, p.plus_ref, &mut pe, &mut ge);
                acoustic.basis_at(mesh, l_a, p.minus_ref, &mut pa, &mut ga);
                for (j, &phi_e) in pe.iter().enumerate() {
                    if phi_e == 0.0 {
                        continue;
                    }
                    for (k, &phi_a) in pa.iter().enumerate() {
                        if phi_a == 0.0 {
                            continue;
                        }
                        let v = rho_a * p.weight * phi_e * phi_a;
                        for c in 0..3 {
                            if p.normal[c] != 0.0 {
                                triplets.push((3 * nodes_e[j] + c, nodes_a[k], v * p.normal[c]));
                            }
                        }
                    }
                }
            }
        }
    }
    if !any && elastic.n_dofs() > 0 && acoustic.n_dofs() > 0 {
        log::warn!("elastic and acoustic domains share no interface; running decoupled");
    }
    let c_e = CsrMatrix::from_triplets(elastic.n_dofs(), acoustic.n_dofs(), triplets);
    let c_a = c_e.transpose().scaled(-1.0);
    Ok((c_e, c_a))
}
