use super::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-3;

fn d1(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    (-f(x + 2.0 * H) + 8.0 * f(x + H) - 8.0 * f(x - H) + f(x - 2.0 * H)) / (12.0 * H)
}

fn d2(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    (-f(x + 2.0 * H) + 16.0 * f(x + H) - 30.0 * f(x) + 16.0 * f(x - H) - f(x - 2.0 * H)) / (12.0 * H * H)
}

fn shift(x: Point3, j: usize, s: f64) -> Point3 {
    let mut y = x;
    y[j] += s;
    y
}

fn fd_grad_u(m: &dyn AnalyticModel, x: Point3, t: f64) -> Mat3 {
    let mut g = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            g[i][j] = d1(|s| m.elastic(shift(x, j, s), t).u[i], 0.0);
        }
    }
    g
}

fn fd_stress(m: &dyn AnalyticModel, mat: &ElasticMaterial, x: Point3, t: f64) -> Mat3 {
    stress(&fd_grad_u(m, x, t), mat)
}

/// `ρ ü - div σ(u)` with every derivative taken by finite differences.
fn elastic_residual(m: &dyn AnalyticModel, mat: &ElasticMaterial, x: Point3, t: f64) -> (f64, f64) {
    let mut res: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..3 {
        let acc = mat.rho * d2(|s| m.elastic(x, t + s).u[i], 0.0);
        let mut div = 0.0;
        for j in 0..3 {
            div += d1(|s| fd_stress(m, mat, shift(x, j, s), t)[i][j], 0.0);
        }
        res = res.max((acc - div).abs());
        scale = scale.max(acc.abs()).max(div.abs());
    }
    (res, scale)
}

/// `c⁻² φ̈ - Δφ`.
fn acoustic_residual(m: &dyn AnalyticModel, mat: &AcousticMaterial, x: Point3, t: f64) -> (f64, f64) {
    let acc = d2(|s| m.acoustic(x, t + s).phi, 0.0) / (mat.c * mat.c);
    let lap: f64 = (0..3).map(|j| d2(|s| m.acoustic(shift(x, j, s), t).phi, 0.0)).sum();
    ((acc - lap).abs(), acc.abs().max(lap.abs()))
}

/// Traction and normal-velocity residuals on the interface with elastic normal `n`.
fn interface_residual(
    m: &dyn AnalyticModel,
    e: &ElasticMaterial,
    a: &AcousticMaterial,
    x: Point3,
    t: f64,
    n: Point3,
) -> (f64, f64) {
    let sigma = fd_stress(m, e, x, t);
    let dphi = d1(|s| m.acoustic(x, t + s).phi, 0.0);
    let mut res: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..3 {
        let tr: f64 = (0..3).map(|j| sigma[i][j] * n[j]).sum();
        res = res.max((tr + a.rho * dphi * n[i]).abs());
        scale = scale.max(tr.abs()).max((a.rho * dphi * n[i]).abs());
    }
    let dn_a: f64 = (0..3).map(|j| -n[j] * d1(|s| m.acoustic(shift(x, j, s), t).phi, 0.0)).sum();
    let un_a: f64 = (0..3).map(|j| -n[j] * d1(|s| m.elastic(x, t + s).u[j], 0.0)).sum();
    res = res.max((dn_a + un_a).abs());
    scale = scale.max(dn_a.abs()).max(un_a.abs());
    (res, scale)
}

fn check_derivatives(m: &dyn AnalyticModel, x: Point3, t: f64) {
    let e = m.elastic(x, t);
    let g = fd_grad_u(m, x, t);
    for i in 0..3 {
        let v = d1(|s| m.elastic(x, t + s).u[i], 0.0);
        let a = d2(|s| m.elastic(x, t + s).u[i], 0.0);
        assert!((e.v[i] - v).abs() < 1e-8, "v {i}: {} {v}", e.v[i]);
        assert!((e.a[i] - a).abs() < 1e-6, "a {i}: {} {a}", e.a[i]);
        for j in 0..3 {
            assert!((e.grad[i][j] - g[i][j]).abs() < 1e-8, "grad {i}{j}");
        }
    }
    let p = m.acoustic(x, t);
    assert!((p.dphi - d1(|s| m.acoustic(x, t + s).phi, 0.0)).abs() < 1e-8);
    assert!((p.ddphi - d2(|s| m.acoustic(x, t + s).phi, 0.0)).abs() < 1e-6);
    for j in 0..3 {
        assert!((p.grad[j] - d1(|s| m.acoustic(shift(x, j, s), t).phi, 0.0)).abs() < 1e-8);
    }
}

fn scholte() -> (ScholteWave, ElasticMaterial, AcousticMaterial) {
    let (e, a) = ScholteWave::standard_materials();
    let p = scholte_dispersion_solve(&e, &a, 1.0).unwrap();
    (ScholteWave::new(p), e, a)
}

#[test]
fn verification_at_origin() {
    let v = VerificationSolution::standard();
    for y in [0.0, 0.3, 0.9] {
        let s = AnalyticModel::elastic(&v, [0.0, y, 1.0 - y], 0.0);
        assert_eq!(s.u, [1.0, 1.0, 1.0]);
        assert_eq!(AnalyticModel::acoustic(&v, [0.0, y, y], 0.0).phi, 0.0);
    }
}

#[test]
fn verification_satisfies_equations() {
    let v = VerificationSolution::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let t = rng.random_range(0.0..1.0);
        let (y, z) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        let xe = [rng.random_range(-1.0..0.0), y, z];
        let xa = [rng.random_range(0.0..1.0), y, z];
        let (r, s) = elastic_residual(&v, &v.elastic, xe, t);
        assert!(r <= 1e-8 * s.max(1.0), "elastic {r} {s}");
        let (r, s) = acoustic_residual(&v, &v.acoustic, xa, t);
        assert!(r <= 1e-8 * s.max(1.0), "acoustic {r} {s}");
        let (r, s) = interface_residual(&v, &v.elastic, &v.acoustic, [0.0, y, z], t, [1.0, 0.0, 0.0]);
        assert!(r <= 1e-8 * s.max(1.0), "interface {r} {s}");
    }
}

#[test]
fn verification_derivatives_match_differences() {
    let v = VerificationSolution::standard();
    for (x, t) in [([-0.3, 0.1, 0.2], 0.07), ([0.4, 0.5, 0.5], 0.61), ([-0.9, 0.0, 1.0], 0.33)] {
        check_derivatives(&v, x, t);
    }
}

#[test]
fn scholte_constants() {
    let (w, _, _) = scholte();
    let p = w.params;
    assert!((p.c_sch - 0.7110017230197).abs() < 1e-9, "{}", p.c_sch);
    assert!((p.amplitudes[0] - 0.3594499773037).abs() < 1e-9, "{:?}", p.amplitudes);
    assert!((p.amplitudes[1] - 0.8194642725978).abs() < 1e-9, "{:?}", p.amplitudes);
    assert_eq!(p.amplitudes[2], 1.0);
    assert!((p.k - 1.4064663525).abs() < 1e-9, "{}", p.k);
    assert!((p.b1p - 0.70320).abs() < 1e-5);
    assert!((p.b2s - 0.70320).abs() < 1e-5);
    assert!((p.b2p - 0.91186).abs() < 1e-5);
}

#[test]
fn scholte_null_vector() {
    let (w, e, a) = scholte();
    let m = scholte_matrix(&e, &a, w.params.c_sch);
    let norm = m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    assert!(det3(&m).abs() < 1e-10 * norm);
    for row in &m {
        let r: f64 = row.iter().zip(&w.params.amplitudes).map(|(a, b)| a * b).sum();
        assert!(r.abs() < 1e-8, "{r}");
    }
}

#[test]
fn scholte_wave_shape() {
    let (w, _, _) = scholte();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-10.0..0.0)];
        let s = AnalyticModel::elastic(&w, x, rng.random_range(0.0..1.0));
        assert_eq!(s.u[1], 0.0);
    }
    let amp = |z: f64| {
        (0..64)
            .map(|i| {
                let u = AnalyticModel::elastic(&w, [0.0, 0.0, z], i as f64 * 0.1).u;
                (u[0] * u[0] + u[2] * u[2]).sqrt()
            })
            .fold(0.0, f64::max)
    };
    let a: Vec<f64> = [0.0, -1.0, -5.0, -10.0].iter().map(|&z| amp(z)).collect();
    assert!(a.windows(2).all(|p| p[1] < p[0]), "{a:?}");
    assert!(a[3] / a[0] < 1e-3);
}

#[test]
fn scholte_satisfies_equations() {
    let (w, e, a) = scholte();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let t = rng.random_range(0.0..1.0);
        let (x, y) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let (r, s) = elastic_residual(&w, &e, [x, y, rng.random_range(-10.0..0.0)], t);
        assert!(r <= 1e-8 * s.max(1.0), "elastic {r} {s}");
        let (r, s) = acoustic_residual(&w, &a, [x, y, rng.random_range(0.0..10.0)], t);
        assert!(r <= 1e-8 * s.max(1.0), "acoustic {r} {s}");
        let (r, s) = interface_residual(&w, &e, &a, [x, y, 0.0], t, [0.0, 0.0, 1.0]);
        assert!(r <= 1e-8 * s.max(1.0), "interface {r} {s}");
    }
}

#[test]
fn scholte_derivatives_match_differences() {
    let (w, _, _) = scholte();
    for (x, t) in [([0.3, 0.1, -0.2], 0.07), ([-0.4, 0.5, -3.0], 0.61), ([0.9, 0.0, 2.0], 0.33)] {
        check_derivatives(&w, x, t);
    }
}

#[test]
fn scholte_rejects_bad_frequency() {
    let (e, a) = ScholteWave::standard_materials();
    assert!(scholte_dispersion_solve(&e, &a, 0.0).is_err());
}

#[test]
fn ricker_properties() {
    let src = RickerSource::cavity(22.0);
    assert_eq!(src.value(0.25), 1e10);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let s: f64 = rng.random_range(0.0..0.2);
        let (a, b) = (src.value(0.25 + s), src.value(0.25 - s));
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
    let s0 = 1.0 / (2f64.sqrt() * PI * 22.0);
    assert!((s0 - 0.010233).abs() < 3e-6);
    for s in [s0, -s0] {
        assert!(src.value(0.25 + s).abs() < 1e-6 * src.amplitude);
    }
    assert!(src.value(0.25 + 0.9 * s0) > 0.0 && src.value(0.25 + 1.1 * s0) < 0.0);
}
