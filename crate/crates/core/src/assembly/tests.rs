use std::collections::BTreeMap;
use std::sync::Arc;

use super::*;
use crate::mesh::{
    build_box_mesh, classify_faces, BoundaryCondition, BoundarySpec, BoxExtents, DomainKind, Region, Side,
};
use crate::space::{build_acoustic_space, build_elastic_space, AcousticMaterial, ElasticMaterial};

fn boxm(min: [f64; 3], max: [f64; 3], sub: [usize; 3], id: u32, kind: DomainKind) -> HexMesh {
    build_box_mesh(&BoxExtents::new(min, max).unwrap(), sub, Region { id, kind }).unwrap()
}

struct Setup {
    mesh: HexMesh,
    faces: FaceSets,
    e: Arc<DofSpace>,
    a: Arc<DofSpace>,
}

fn setup(mesh: HexMesh, spec: BoundarySpec, degrees: &[(u32, usize)], n_a: usize) -> Setup {
    let faces = classify_faces(&mesh, &spec).unwrap();
    let deg: BTreeMap<u32, usize> = degrees.iter().copied().collect();
    let e = Arc::new(build_elastic_space(&mesh, &faces, &deg).unwrap());
    let a = Arc::new(build_acoustic_space(&mesh, &faces, n_a).unwrap());
    Setup { mesh, faces, e, a }
}

fn dirichlet() -> BoundarySpec {
    BoundarySpec::uniform(BoundaryCondition::Dirichlet)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn apply(op: &dyn LinearOperator, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; op.nrows()];
    op.apply(x, &mut y);
    y
}

fn unit_material() -> MaterialTable {
    MaterialTable::new()
        .with_elastic(1, ElasticMaterial::new(1.0, 1.0, 1.0).unwrap())
        .with_elastic(2, ElasticMaterial::new(1.0, 1.0, 1.0).unwrap())
        .with_acoustic(3, AcousticMaterial::new(1.0, 1.0).unwrap())
}

#[test]
fn mass_examples() {
    let s = setup(boxm([0.0; 3], [1.0; 3], [1, 1, 1], 1, DomainKind::Elastic), dirichlet(), &[(1, 1)], 1);
    let m = MaterialTable::new().with_elastic(1, ElasticMaterial::new(1.0, 1.0, 1.0).unwrap());
    let mass = assemble_mass(&s.e, &m).unwrap();
    assert_eq!(mass.len(), 24);
    assert!(mass.iter().all(|&v| (v - 0.125).abs() < 1e-15));
    let m = MaterialTable::new().with_elastic(1, ElasticMaterial::new(2.7, 1.0, 1.0).unwrap());
    assert!(assemble_mass(&s.e, &m).unwrap().iter().all(|&v| (v - 0.3375).abs() < 1e-15));

    let s = setup(boxm([0.0; 3], [1.0; 3], [1, 1, 1], 3, DomainKind::Acoustic), dirichlet(), &[], 1);
    let m = MaterialTable::new().with_acoustic(3, AcousticMaterial::new(1.0, 2.0).unwrap());
    let mass = assemble_mass(&s.a, &m).unwrap();
    assert_eq!(mass.len(), 8);
    assert!(mass.iter().all(|&v| (v - 1.0 / 32.0).abs() < 1e-16));
}

#[test]
fn lumped_mass_keeps_total_of_consistent_mass() {
    // N = 1 on an affine element: each lumped entry is the row sum of the
    // exactly integrated Q1 mass matrix.
    let mut mesh = boxm([0.0; 3], [2.0, 1.0, 0.5], [1, 1, 1], 3, DomainKind::Acoustic);
    mesh.vertices.iter_mut().for_each(|v| v[0] += 0.3 * v[1]);
    let s = setup(mesh, dirichlet(), &[], 1);
    let m = MaterialTable::new().with_acoustic(3, AcousticMaterial::new(1.0, 1.0).unwrap());
    let mass = assemble_mass(&s.a, &m).unwrap();
    // Consistent row sum = ∫ φ_i = volume / 8 for affine trilinear elements.
    assert!(mass.iter().all(|&v| (v - 1.0 / 8.0).abs() < 1e-14));
}

#[test]
fn penalty_examples() {
    let a = 1.7;
    assert!((penalty_value(a, [3.0, 3.0], [2, 2], [0.5, 0.5]) - 24.0 * a).abs() < 1e-12);
    assert!((harmonic_mean(2.0, 6.0) - 3.0).abs() < 1e-15);
    let eta = penalty_value(1.0, [103.788, 103.788], [2, 2], [0.1, 0.1]);
    assert!((eta - 4151.52).abs() < 1e-9);
}

fn two_region_split(n: [usize; 2], skew: f64) -> Setup {
    let a = boxm([0.0; 3], [0.5, 1.0, 1.0], [1, 2, 2], 1, DomainKind::Elastic);
    let b = boxm([0.5, 0.0, 0.0], [1.0, 1.0, 1.0], [2, 2, 2], 2, DomainKind::Elastic);
    let mut mesh = HexMesh::merge([a, b]).unwrap();
    mesh.vertices.iter_mut().for_each(|v| {
        v[1] += skew * v[2] * (1.0 - v[2]);
    });
    setup(mesh, dirichlet(), &[(1, n[0]), (2, n[1])], 1)
}

#[test]
fn elastic_stiffness_kills_constants() {
    let s = two_region_split([2, 3], 0.1);
    let k = StiffnessOperator::elastic(
        &s.mesh,
        &s.faces,
        s.e.clone(),
        &unit_material(),
        PenaltySpec::default(),
        StiffnessParts::default(),
    )
    .unwrap();
    let u = s.e.interpolate(|_, o| o.copy_from_slice(&[0.3, -1.2, 2.0]));
    let r = apply(&k, &u);
    assert!(r.iter().all(|v| v.abs() < 1e-10), "{:?}", r.iter().fold(0.0f64, |m, v| m.max(v.abs())));
}

#[test]
fn elastic_linear_field_consistency() {
    let s = two_region_split([2, 2], 0.0);
    let k = StiffnessOperator::elastic(
        &s.mesh,
        &s.faces,
        s.e.clone(),
        &unit_material(),
        PenaltySpec::default(),
        StiffnessParts::default(),
    )
    .unwrap();
    assert!(k.face_kernels().count() > 0);
    let u = s.e.interpolate(|x, o| o.copy_from_slice(&[x[0], 0.0, 0.0]));
    let q = dot(&u, &apply(&k, &u));
    assert!((q - 3.0).abs() < 1e-10, "{q}");
}

#[test]
fn single_region_has_no_face_terms() {
    let s = setup(boxm([0.0; 3], [1.0; 3], [2, 2, 2], 1, DomainKind::Elastic), dirichlet(), &[(1, 2)], 1);
    let full = StiffnessOperator::elastic(
        &s.mesh,
        &s.faces,
        s.e.clone(),
        &unit_material(),
        PenaltySpec::default(),
        StiffnessParts::default(),
    )
    .unwrap();
    assert_eq!(full.face_kernels().count(), 0);
    // ∫ σ(u):ε(u) for u = (y, x, 0): ε has ε_xy = 1, so 2μ·2·1 = 4.
    let u = s.e.interpolate(|x, o| o.copy_from_slice(&[x[1], x[0], 0.0]));
    assert!((dot(&u, &apply(&full, &u)) - 4.0).abs() < 1e-11);
}

#[test]
fn elastic_stiffness_symmetric_and_matches_csr() {
    let s = two_region_split([2, 3], 0.15);
    let mats = MaterialTable::new()
        .with_elastic(1, ElasticMaterial::new(2.0, 3.0, 1.5).unwrap())
        .with_elastic(2, ElasticMaterial::new(1.0, 0.5, 0.7).unwrap());
    let k = StiffnessOperator::elastic(
        &s.mesh,
        &s.faces,
        s.e.clone(),
        &mats,
        PenaltySpec::new(4.0).unwrap(),
        StiffnessParts::default(),
    )
    .unwrap();
    let csr = k.to_csr();
    assert!(csr.asymmetry() < 1e-12, "{}", csr.asymmetry());
    let x: Vec<f64> = (0..s.e.n_dofs()).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
    let a = apply(&k, &x);
    let b = apply(&csr, &x);
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (p, q) in a.iter().zip(&b) {
        assert!((p - q).abs() < 1e-12 * scale);
    }
}

#[test]
fn penalty_scaling() {
    let s = two_region_split([2, 2], 0.1);
    let mats = unit_material();
    let build = |alpha: f64, parts: StiffnessParts| {
        StiffnessOperator::elastic(&s.mesh, &s.faces, s.e.clone(), &mats, PenaltySpec::new(alpha).unwrap(), parts)
            .unwrap()
    };
    let only_pen = StiffnessParts {
        volume: false,
        consistency: false,
        penalty: true,
    };
    let only_vol = StiffnessParts {
        volume: true,
        consistency: false,
        penalty: false,
    };
    let x: Vec<f64> = (0..s.e.n_dofs()).map(|i| ((i * 31) % 17) as f64 - 8.0).collect();
    let p1 = dot(&x, &apply(&build(1.0, only_pen), &x));
    let p2 = dot(&x, &apply(&build(2.0, only_pen), &x));
    assert!(p1 > 0.0);
    assert!((p2 - 2.0 * p1).abs() < 1e-10 * p1);
    let v1 = apply(&build(1.0, only_vol), &x);
    let v2 = apply(&build(2.0, only_vol), &x);
    assert_eq!(v1, v2);
}

#[test]
fn acoustic_stiffness_examples() {
    let mut mesh = boxm([0.0; 3], [1.0; 3], [2, 2, 2], 3, DomainKind::Acoustic);
    mesh.vertices.iter_mut().for_each(|v| v[2] += 0.1 * v[0] * v[1]);
    let s = setup(mesh, dirichlet(), &[], 3);
    let k = StiffnessOperator::acoustic(s.a.clone(), &unit_material()).unwrap();
    let ones = vec![1.0; s.a.n_dofs()];
    assert!(apply(&k, &ones).iter().all(|v| v.abs() < 1e-11));
    let phi = s.a.interpolate(|x, o| o[0] = x[0]);
    let q = dot(&phi, &apply(&k, &phi));
    assert!((q - s.mesh.volume()).abs() < 1e-11, "{q}");

    let heavy = MaterialTable::new().with_acoustic(3, AcousticMaterial::new(1024.0, 1.0).unwrap());
    let k2 = StiffnessOperator::acoustic(s.a.clone(), &heavy).unwrap();
    assert!((dot(&phi, &apply(&k2, &phi)) - 1024.0 * q).abs() < 1e-8);
    assert!(k.to_csr().asymmetry() < 1e-12);
}

fn interface_layout(e_sub: usize, a_sub: usize, n: usize) -> Setup {
    let e = boxm([-1.0, 0.0, 0.0], [0.0, 1.0, 1.0], [e_sub; 3], 1, DomainKind::Elastic);
    let a = boxm([0.0; 3], [1.0; 3], [a_sub; 3], 3, DomainKind::Acoustic);
    setup(HexMesh::merge([e, a]).unwrap(), dirichlet(), &[(1, n)], n)
}

#[test]
fn coupling_constant_fields() {
    let s = interface_layout(3, 3, 2);
    let (c_e, c_a) = assemble_coupling(&s.mesh, &s.faces, &s.e, &s.a, &unit_material()).unwrap();
    let psi = vec![1.0; s.a.n_dofs()];
    let v = s.e.interpolate(|_, o| o.copy_from_slice(&[1.0, 0.0, 0.0]));
    assert!((dot(&v, &apply(&c_e, &psi)) - 1.0).abs() < 1e-13);
    let t = c_e.transpose();
    for (r, c, val) in c_a.triplets() {
        assert_eq!(val + t.get(r, c), 0.0);
    }
    assert_eq!(c_a.nnz(), c_e.nnz());
}

#[test]
fn coupling_agrees_across_grids() {
    // ∫∫ ψ v_x over the unit interface with ψ = y² + z and v_x = y z.
    let exact = 7.0 / 24.0;
    for (es, as_) in [(4, 4), (4, 2), (6, 4)] {
        let s = interface_layout(es, as_, 2);
        let (c_e, c_a) = assemble_coupling(&s.mesh, &s.faces, &s.e, &s.a, &unit_material()).unwrap();
        let psi = s.a.interpolate(|x, o| o[0] = x[1] * x[1] + x[2]);
        let v = s.e.interpolate(|x, o| o.copy_from_slice(&[x[1] * x[2], x[1], x[2] * x[2]]));
        let val = dot(&v, &apply(&c_e, &psi));
        assert!((val - exact).abs() < 1e-12, "{es}/{as_}: {val}");
        let skew = dot(&v, &apply(&c_e, &psi)) + dot(&psi, &apply(&c_a, &v));
        assert!(skew.abs() < 1e-13);
    }
}

#[test]
fn absorbing_examples() {
    let s = interface_layout(2, 2, 2);
    let (s_e, s_a) = assemble_absorbing(&s.mesh, &s.faces, &s.e, &s.a, &unit_material()).unwrap();
    assert_eq!((s_e.nnz(), s_a.nnz()), (0, 0));

    let spec = dirichlet().with_side(Side::XMin, BoundaryCondition::Absorbing);
    let s = setup(boxm([0.0; 3], [1.0; 3], [2, 3, 2], 1, DomainKind::Elastic), spec, &[(1, 3)], 1);
    let (s_e, _) = assemble_absorbing(&s.mesh, &s.faces, &s.e, &s.a, &unit_material()).unwrap();
    let normal = s.e.interpolate(|_, o| o.copy_from_slice(&[1.0, 0.0, 0.0]));
    assert!((s_e.quadratic_form(&normal) - 3f64.sqrt()).abs() < 1e-13);
    let tangent = s.e.interpolate(|_, o| o.copy_from_slice(&[0.0, 0.6, 0.8]));
    assert!((s_e.quadratic_form(&tangent) - 1.0).abs() < 1e-13);
    assert!(s_e.asymmetry() < 1e-15);

    let spec = dirichlet().with_side(Side::ZMax, BoundaryCondition::Absorbing);
    let s = setup(boxm([0.0; 3], [1.0; 3], [2, 2, 2], 3, DomainKind::Acoustic), spec, &[], 2);
    let mats = MaterialTable::new().with_acoustic(3, AcousticMaterial::new(2.0, 4.0).unwrap());
    let (_, s_a) = assemble_absorbing(&s.mesh, &s.faces, &s.e, &s.a, &mats).unwrap();
    assert!((s_a.quadratic_form(&vec![1.0; s.a.n_dofs()]) - 0.5).abs() < 1e-14);
}

#[test]
fn loads_zero_and_point() {
    let s = interface_layout(2, 2, 2);
    let mats = unit_material();
    let empty = LoadAssembler::new(&s.mesh, &s.faces, &s.e, &s.a, &mats, SourceSpec::default()).unwrap();
    assert!(empty.is_empty());
    let mut fe = vec![1.0; s.e.n_dofs()];
    let mut fa = vec![1.0; s.a.n_dofs()];
    empty.assemble(0.3, &mut fe, &mut fa);
    assert!(fe.iter().chain(&fa).all(|&v| v == 0.0));

    // Element corners are GLL nodes.
    let x0 = [-0.5, 0.5, 0.5];
    let spec = SourceSpec {
        points: vec![PointSource {
            domain: DomainKind::Elastic,
            location: x0,
            direction: [0.0, 0.0, 1.0],
            time: Arc::new(|t| 3.0 * t),
        }],
        ..Default::default()
    };
    let loads = LoadAssembler::new(&s.mesh, &s.faces, &s.e, &s.a, &mats, spec).unwrap();
    loads.assemble(2.0, &mut fe, &mut fa);
    let nz: Vec<usize> = (0..fe.len()).filter(|&i| fe[i] != 0.0).collect();
    assert_eq!(nz.len(), 1);
    assert_eq!(fe[nz[0]], 6.0);
    assert_eq!(nz[0] % 3, 2);
    let node = s.e.node_coords()[nz[0] / 3];
    assert!((0..3).all(|d| (node[d] - x0[d]).abs() < 1e-14));

    let outside = SourceSpec {
        points: vec![PointSource {
            domain: DomainKind::Elastic,
            location: [5.0, 0.0, 0.0],
            direction: [0.0, 0.0, 1.0],
            time: Arc::new(|_| 1.0),
        }],
        ..Default::default()
    };
    assert!(matches!(
        LoadAssembler::new(&s.mesh, &s.faces, &s.e, &s.a, &mats, outside),
        Err(Error::PointOutsideDomain(_))
    ));
}

#[test]
fn neumann_and_body_loads_integrate() {
    let spec = dirichlet().with_side(Side::YMax, BoundaryCondition::Neumann);
    let s = setup(boxm([0.0; 3], [1.0, 2.0, 1.0], [2, 2, 2], 1, DomainKind::Elastic), spec, &[(1, 2)], 1);
    let src = SourceSpec {
        body_elastic: Some(Arc::new(|_, t| [t, 0.0, 0.0])),
        neumann_elastic: Some(Arc::new(|x, _| [0.0, x[0], 0.0])),
        ..Default::default()
    };
    let loads = LoadAssembler::new(&s.mesh, &s.faces, &s.e, &s.a, &unit_material(), src).unwrap();
    let mut fe = vec![0.0; s.e.n_dofs()];
    let mut fa = vec![];
    loads.assemble(3.0, &mut fe, &mut fa);
    let sum = |c: usize| (0..fe.len() / 3).map(|n| fe[3 * n + c]).sum::<f64>();
    // body: 3 · volume 2; traction: ∫ x over the unit face = 1/2.
    assert!((sum(0) - 6.0).abs() < 1e-13);
    assert!((sum(1) - 0.5).abs() < 1e-13);
}

#[test]
fn system_dump_writes_files() {
    let s = interface_layout(1, 1, 1);
    let ops = SystemOperators::assemble(&s.mesh, &s.faces, s.e.clone(), s.a.clone(), &unit_material(), PenaltySpec::default())
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    ops.dump(dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("C_e.txt")).unwrap();
    assert_eq!(text.lines().count(), ops.c_e.nnz());
    let first: Vec<&str> = text.lines().next().unwrap().split(' ').collect();
    assert_eq!(first.len(), 3);
}
