//! Energy and L² norms, errors against exact fields, total discrete
//! energy, convergence fits and receiver time histories.
//!
//! The `ζ` term of the elastic energy norm is taken as zero.

mod receivers;

pub use receivers::{Receiver, ReceiverSet};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{stress, AnalyticModel};
use crate::assembly::{LinearOperator, SystemOperators};
use crate::basis::{gauss_legendre, QuadratureRule1D};
use crate::error::{Error, Result};
use crate::integrator::{Operators, SimState};
use crate::mesh::{inv3, trilinear_map, HexMesh, Mat3, Point3};
use crate::space::{DofSpace, MaterialTable};

/// Squared elastic contributions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ElasticNorms {
    pub kinetic: f64,
    pub strain: f64,
    pub jump: f64,
    pub l2: f64,
}

impl ElasticNorms {
    pub fn energy(&self) -> f64 {
        (self.kinetic + self.strain + self.jump).sqrt()
    }
}

/// Squared acoustic contributions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct AcousticNorms {
    pub kinetic: f64,
    pub gradient: f64,
    pub l2: f64,
}

impl AcousticNorms {
    pub fn energy(&self) -> f64 {
        (self.kinetic + self.gradient).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Energy,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ErrorNorms {
    pub elastic: ElasticNorms,
    pub acoustic: AcousticNorms,
}

impl ErrorNorms {
    pub fn energy(&self) -> f64 {
        (self.elastic.kinetic + self.elastic.strain + self.elastic.jump + self.acoustic.kinetic
            + self.acoustic.gradient)
            .sqrt()
    }

    pub fn l2(&self) -> f64 {
        (self.elastic.l2 + self.acoustic.l2).sqrt()
    }

    pub fn get(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::Energy => self.energy(),
            NormKind::L2 => self.l2(),
        }
    }
}

/// Basis tables at `N + 2` Gauss points per direction.
struct Table {
    m: usize,
    q: usize,
    xi: Vec<f64>,
    w: Vec<f64>,
    b: Vec<f64>,
    db: Vec<f64>,
}

impl Table {
    fn new(rule: &QuadratureRule1D) -> Self {
        let m = rule.len();
        let q = m + 1;
        let (xi, w) = gauss_legendre(q).expect("positive point count");
        let mut b = vec![0.0; q * m];
        let mut db = vec![0.0; q * m];
        for (p, &x) in xi.iter().enumerate() {
            rule.basis_values(x, &mut b[p * m..(p + 1) * m]);
            rule.basis_derivatives(x, &mut db[p * m..(p + 1) * m]);
        }
        Self { m, q, xi, w, b, db }
    }
}

/// Field values at one quadrature point.
struct Sample {
    x: Point3,
    w: f64,
    val: [f64; 3],
    grad: Mat3,
    rate: [f64; 3],
}

fn tables(space: &DofSpace) -> BTreeMap<usize, Table> {
    space
        .blocks()
        .iter()
        .map(|b| (b.degree, Table::new(space.rule(b.degree))))
        .collect()
}

/// Integrates `kernel` over every element of `space`; `field` supplies
/// values and gradients, `rate` values only.
fn integrate<const K: usize>(
    mesh: &HexMesh,
    space: &DofSpace,
    tables: &BTreeMap<usize, Table>,
    field: &[f64],
    rate: &[f64],
    kernel: &(dyn Fn(u32, &Sample) -> [f64; K] + Sync),
) -> [f64; K] {
    let comps = space.components();
    let per_element: Vec<[f64; K]> = (0..space.elements().len())
        .into_par_iter()
        .map(|l| {
            let block = space.block_of(l);
            let t = &tables[&block.degree];
            let nodes = space.element_nodes(l);
            let corners = mesh.element_corners(space.elements()[l]);
            let m = t.m;
            let mut acc = [0.0; K];
            for k in 0..t.q {
                for j in 0..t.q {
                    for i in 0..t.q {
                        let g = trilinear_map(&corners, [t.xi[i], t.xi[j], t.xi[k]]);
                        let jinv = inv3(&g.jacobian, g.det_j);
                        let mut s = Sample {
                            x: g.x,
                            w: t.w[i] * t.w[j] * t.w[k] * g.det_j.abs(),
                            val: [0.0; 3],
                            grad: [[0.0; 3]; 3],
                            rate: [0.0; 3],
                        };
                        let (bi, bj, bk) = (&t.b[i * m..], &t.b[j * m..], &t.b[k * m..]);
                        let (di, dj, dk) = (&t.db[i * m..], &t.db[j * m..], &t.db[k * m..]);
                        let mut a = 0;
                        for c3 in 0..m {
                            for c2 in 0..m {
                                for c1 in 0..m {
                                    let phi = bi[c1] * bj[c2] * bk[c3];
                                    let r = [di[c1] * bj[c2] * bk[c3], bi[c1] * dj[c2] * bk[c3], bi[c1] * bj[c2] * dk[c3]];
                                    let gphys: [f64; 3] =
                                        std::array::from_fn(|d| r[0] * jinv[0][d] + r[1] * jinv[1][d] + r[2] * jinv[2][d]);
                                    let base = nodes[a] * comps;
                                    for c in 0..comps {
                                        let f = field[base + c];
                                        s.val[c] += f * phi;
                                        s.rate[c] += rate[base + c] * phi;
                                        for d in 0..3 {
                                            s.grad[c][d] += f * gphys[d];
                                        }
                                    }
                                    a += 1;
                                }
                            }
                        }
                        let r = kernel(block.region, &s);
                        for (acc, r) in acc.iter_mut().zip(r) {
                            *acc += r;
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = [0.0; K];
    for e in per_element {
        for (t, v) in total.iter_mut().zip(e) {
            *t += v;
        }
    }
    total
}

fn contract(a: &Mat3, b: &Mat3) -> f64 {
    (0..3).map(|i| (0..3).map(|j| a[i][j] * b[i][j]).sum::<f64>()).sum()
}

/// Norm evaluation on assembled spaces.
pub struct Diagnostics<'a> {
    mesh: &'a HexMesh,
    materials: &'a MaterialTable,
    ops: &'a SystemOperators,
    elastic_tables: BTreeMap<usize, Table>,
    acoustic_tables: BTreeMap<usize, Table>,
}

impl<'a> Diagnostics<'a> {
    pub fn new(mesh: &'a HexMesh, materials: &'a MaterialTable, ops: &'a SystemOperators) -> Self {
        Self {
            mesh,
            materials,
            ops,
            elastic_tables: tables(&ops.elastic),
            acoustic_tables: tables(&ops.acoustic),
        }
    }

    /// Norms of `(u, u̇)` minus the exact field at `t`, if given.
    pub fn elastic_norms(&self, u: &[f64], v: &[f64], exact: Option<(&dyn AnalyticModel, f64)>) -> ElasticNorms {
        let mats: BTreeMap<u32, _> = self
            .ops
            .elastic
            .blocks()
            .iter()
            .map(|b| (b.region, self.materials.elastic(b.region).expect("elastic region material")))
            .collect();
        let kernel = |region: u32, s: &Sample| {
            let m = &mats[&region];
            let (mut eu, mut ev, mut eg) = (s.val, s.rate, s.grad);
            if let Some((model, t)) = exact {
                let x = model.elastic(s.x, t);
                for c in 0..3 {
                    eu[c] -= x.u[c];
                    ev[c] -= x.v[c];
                    for d in 0..3 {
                        eg[c][d] -= x.grad[c][d];
                    }
                }
            }
            let sq = |a: [f64; 3]| a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
            [
                s.w * m.rho * sq(ev),
                s.w * contract(&stress(&eg, m), &eg),
                s.w * sq(eu),
            ]
        };
        let [kinetic, strain, l2] = integrate(self.mesh, &self.ops.elastic, &self.elastic_tables, u, v, &kernel);
        ElasticNorms {
            kinetic,
            strain,
            jump: self.jump_norm(u),
            l2,
        }
    }

    /// `Σ_F η ∫_F |[u]|²` over faces between elastic regions. Exact fields
    /// are continuous there, so this is also the jump part of an error.
    pub fn jump_norm(&self, u: &[f64]) -> f64 {
        let space = &self.ops.elastic;
        let per_face: Vec<f64> = self
            .ops
            .k_e
            .face_kernels()
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|f| {
                let nodes = [space.element_nodes(f.elements[0]), space.element_nodes(f.elements[1])];
                let mut acc = 0.0;
                for (q, &w) in f.weights.iter().enumerate() {
                    let mut jump = [0.0; 3];
                    for (s, sign) in [(0, 1.0), (1, -1.0)] {
                        let n = f.nodes[s];
                        for a in 0..n {
                            let phi = f.phi[s][q * n + a];
                            if phi == 0.0 {
                                continue;
                            }
                            for c in 0..3 {
                                jump[c] += sign * phi * u[3 * nodes[s][a] + c];
                            }
                        }
                    }
                    acc += w * f.eta * (jump[0] * jump[0] + jump[1] * jump[1] + jump[2] * jump[2]);
                }
                acc
            })
            .collect();
        per_face.iter().sum()
    }

    /// Norms of `(φ, φ̇)` minus the exact field at `t`, if given.
    pub fn acoustic_norms(&self, phi: &[f64], psi: &[f64], exact: Option<(&dyn AnalyticModel, f64)>) -> AcousticNorms {
        let mats: BTreeMap<u32, _> = self
            .ops
            .acoustic
            .blocks()
            .iter()
            .map(|b| (b.region, self.materials.acoustic(b.region).expect("acoustic region material")))
            .collect();
        let kernel = |region: u32, s: &Sample| {
            let m = &mats[&region];
            let (mut e, mut er, mut eg) = (s.val[0], s.rate[0], s.grad[0]);
            if let Some((model, t)) = exact {
                let x = model.acoustic(s.x, t);
                e -= x.phi;
                er -= x.dphi;
                for d in 0..3 {
                    eg[d] -= x.grad[d];
                }
            }
            [
                s.w * m.rho / (m.c * m.c) * er * er,
                s.w * m.rho * (eg[0] * eg[0] + eg[1] * eg[1] + eg[2] * eg[2]),
                s.w * e * e,
            ]
        };
        let [kinetic, gradient, l2] =
            integrate(self.mesh, &self.ops.acoustic, &self.acoustic_tables, phi, psi, &kernel);
        AcousticNorms { kinetic, gradient, l2 }
    }

    pub fn energy_norm_elastic(&self, u: &[f64], v: &[f64]) -> f64 {
        self.elastic_norms(u, v, None).energy()
    }

    pub fn energy_norm_acoustic(&self, phi: &[f64], psi: &[f64]) -> f64 {
        self.acoustic_norms(phi, psi, None).energy()
    }

    /// Error of `state` against `model` at time `t`.
    pub fn error_vs_analytic(&self, state: &SimState, model: &dyn AnalyticModel, t: f64) -> ErrorNorms {
        ErrorNorms {
            elastic: self.elastic_norms(&state.u, &state.v, Some((model, t))),
            acoustic: self.acoustic_norms(&state.phi, &state.psi, Some((model, t))),
        }
    }
}

/// Halves of `vᵀMv`, `uᵀKu` per domain.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DiscreteEnergy {
    pub elastic_kinetic: f64,
    pub elastic_potential: f64,
    pub acoustic_kinetic: f64,
    pub acoustic_potential: f64,
}

impl DiscreteEnergy {
    pub fn elastic(&self) -> f64 {
        self.elastic_kinetic + self.elastic_potential
    }

    pub fn acoustic(&self) -> f64 {
        self.acoustic_kinetic + self.acoustic_potential
    }

    pub fn total(&self) -> f64 {
        self.elastic() + self.acoustic()
    }
}

fn quadratic(k: &dyn LinearOperator, x: &[f64]) -> f64 {
    let mut y = vec![0.0; x.len()];
    k.apply(x, &mut y);
    y.iter().zip(x).map(|(a, b)| a * b).sum()
}

fn weighted(m: &[f64], x: &[f64]) -> f64 {
    m.iter().zip(x).map(|(m, x)| m * x * x).sum()
}

/// `½(vᵀM_e v + uᵀK_e u + ψᵀM_a ψ + φᵀK_a φ)`. The coupling is skew and
/// stores no energy.
pub fn total_discrete_energy(state: &SimState, ops: &Operators<'_>) -> DiscreteEnergy {
    let e = DiscreteEnergy {
        elastic_kinetic: 0.5 * weighted(ops.mass_e, &state.v),
        elastic_potential: 0.5 * quadratic(ops.k_e, &state.u),
        acoustic_kinetic: 0.5 * weighted(ops.mass_a, &state.psi),
        acoustic_potential: 0.5 * quadratic(ops.k_a, &state.phi),
    };
    if e.elastic_potential < 0.0 {
        log::warn!(
            "negative elastic strain energy {:e}: penalty alpha is too small",
            e.elastic_potential
        );
    }
    e
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMode {
    /// `log e` against `log h`.
    PowerLaw,
    /// `log e` against `N`.
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceSeries {
    pub mode: FitMode,
    pub params: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through the logarithms of `errors`.
pub fn fit_convergence_rate(params: &[f64], errors: &[f64], mode: FitMode) -> Result<ConvergenceSeries> {
    if params.len() != errors.len() {
        return Err(Error::Fit(format!(
            "{} parameters but {} errors",
            params.len(),
            errors.len()
        )));
    }
    if params.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 samples, got {}", params.len())));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0)) {
        return Err(Error::Fit(format!("error values must be positive, got {e}")));
    }
    if mode == FitMode::PowerLaw && params.iter().any(|p| !(*p > 0.0)) {
        return Err(Error::Fit("power-law fit needs positive parameters".into()));
    }
    let xs: Vec<f64> = match mode {
        FitMode::PowerLaw => params.iter().map(|p| p.ln()).collect(),
        FitMode::Exponential => params.to_vec(),
    };
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("parameters are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(ConvergenceSeries {
        mode,
        params: params.to_vec(),
        errors: errors.to_vec(),
        slope,
        intercept,
        r_squared,
    })
}
