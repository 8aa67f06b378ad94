//! Closed-form reference solutions and source wavelets.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::BoundaryData;
use crate::mesh::{Mat3, Point3};
use crate::space::{AcousticMaterial, ElasticMaterial};

/// Displacement and derivatives at one point; `grad[i][j] = ∂u_i/∂x_j`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ElasticSample {
    pub u: Point3,
    pub v: Point3,
    pub a: Point3,
    pub grad: Mat3,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AcousticSample {
    pub phi: f64,
    pub dphi: f64,
    pub ddphi: f64,
    pub grad: Point3,
}

/// Exact fields on both domains.
pub trait AnalyticModel: Send + Sync {
    fn elastic(&self, x: Point3, t: f64) -> ElasticSample;
    fn acoustic(&self, x: Point3, t: f64) -> AcousticSample;
}

impl<M: AnalyticModel> BoundaryData for M {
    fn elastic(&self, x: Point3, t: f64) -> [[f64; 3]; 3] {
        let s = AnalyticModel::elastic(self, x, t);
        [s.u, s.v, s.a]
    }

    fn acoustic(&self, x: Point3, t: f64) -> [f64; 3] {
        let s = AnalyticModel::acoustic(self, x, t);
        [s.phi, s.dphi, s.ddphi]
    }
}

/// `σ = λ tr(ε) I + 2μ ε`.
pub fn stress(grad: &Mat3, m: &ElasticMaterial) -> Mat3 {
    let tr = grad[0][0] + grad[1][1] + grad[2][2];
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = m.mu * (grad[i][j] + grad[j][i]);
        }
        s[i][i] += m.lambda * tr;
    }
    s
}

/// Plane-wave manufactured solution on `x < 0` (elastic) and `x > 0`
/// (acoustic) with vanishing body forces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationSolution {
    pub elastic: ElasticMaterial,
    pub acoustic: AcousticMaterial,
}

impl VerificationSolution {
    /// `ρ_e = 2.7`, `c_P = 6.20`, `c_S = 3.12`, `ρ_a = 1`, `c = 1`.
    pub fn standard() -> Self {
        Self {
            elastic: ElasticMaterial::from_velocities(2.7, 6.20, 3.12).expect("valid material"),
            acoustic: AcousticMaterial::new(1.0, 1.0).expect("valid material"),
        }
    }
}

impl AnalyticModel for VerificationSolution {
    fn elastic(&self, x: Point3, t: f64) -> ElasticSample {
        let (cp, cs) = self.elastic.wave_speeds();
        let w = 4.0 * PI;
        let k = [w / cp, w / cs, w / cs];
        let (st, ct) = (w * t).sin_cos();
        let mut s = ElasticSample::default();
        for i in 0..3 {
            let (sx, cx) = (k[i] * x[0]).sin_cos();
            s.u[i] = cx * ct;
            s.v[i] = -w * cx * st;
            s.a[i] = -w * w * cx * ct;
            s.grad[i][0] = -k[i] * sx * ct;
        }
        s
    }

    fn acoustic(&self, x: Point3, t: f64) -> AcousticSample {
        let w = 4.0 * PI;
        let k = w / self.acoustic.c;
        let (sx, cx) = (k * x[0]).sin_cos();
        let (st, ct) = (w * t).sin_cos();
        AcousticSample {
            phi: sx * st,
            dphi: w * sx * ct,
            ddphi: -w * w * sx * st,
            grad: [k * cx * st, 0.0, 0.0],
        }
    }
}

/// Parameters of a Scholte interface wave on `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScholteParams {
    pub omega: f64,
    pub c_sch: f64,
    pub k: f64,
    pub b1p: f64,
    pub b2p: f64,
    pub b2s: f64,
    /// `[B_1, B_2, B_3]` with `B_3 = 1`.
    pub amplitudes: [f64; 3],
}

fn decay(c_sch: f64, c: f64) -> f64 {
    (1.0 - (c_sch / c).powi(2)).sqrt()
}

/// Transmission-condition matrix acting on `[B_1, B_2, B_3]`, rows scaled by `k⁻²`:
/// tangential traction, normal traction plus pressure, normal velocity.
pub fn scholte_matrix(e: &ElasticMaterial, a: &AcousticMaterial, c_sch: f64) -> Mat3 {
    let (cp, cs) = e.wave_speeds();
    let b1p = decay(c_sch, a.c);
    let b2p = decay(c_sch, cp);
    let b2s = decay(c_sch, cs);
    [
        [0.0, 2.0 * e.mu * b2p, -e.mu * (1.0 + b2s * b2s)],
        [
            a.rho * c_sch * c_sch,
            e.lambda * (b2p * b2p - 1.0) + 2.0 * e.mu * b2p * b2p,
            -2.0 * e.mu * b2s,
        ],
        [b1p, b2p, -1.0],
    ]
}

fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn cross(a: &Point3, b: &Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Scholte speed from `det Λ = 0` and amplitudes from the null vector of `Λ`.
pub fn scholte_dispersion_solve(e: &ElasticMaterial, a: &AcousticMaterial, omega: f64) -> Result<ScholteParams> {
    if !(omega > 0.0) {
        return Err(Error::InvalidInput(format!("frequency must be positive, got {omega}")));
    }
    let c_min = a.c.min(e.wave_speeds().1);
    let f = |c: f64| det3(&scholte_matrix(e, a, c));
    let (lo0, hi0) = (0.01 * c_min, 0.999 * c_min);
    let steps = 200;
    let mut bracket = None;
    let mut prev = (lo0, f(lo0));
    for i in 1..=steps {
        let c = lo0 + (hi0 - lo0) * i as f64 / steps as f64;
        let v = f(c);
        if prev.1 == 0.0 {
            bracket = Some((prev.0, prev.0));
            break;
        }
        if prev.1 * v <= 0.0 {
            bracket = Some((prev.0, c));
            break;
        }
        prev = (c, v);
    }
    let (mut lo, mut hi) = bracket.ok_or(Error::NoRoot { lo: lo0, hi: hi0 })?;
    let mut flo = f(lo);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    let c_sch = 0.5 * (lo + hi);
    let m = scholte_matrix(e, a, c_sch);
    let mut best: Point3 = [0.0; 3];
    for (i, j) in [(0, 2), (0, 1), (1, 2)] {
        let n = cross(&m[i], &m[j]);
        if n[2].abs() > best[2].abs() {
            best = n;
        }
    }
    if best[2] == 0.0 {
        return Err(Error::NoRoot { lo: lo0, hi: hi0 });
    }
    let (cp, cs) = e.wave_speeds();
    Ok(ScholteParams {
        omega,
        c_sch,
        k: omega / c_sch,
        b1p: decay(c_sch, a.c),
        b2p: decay(c_sch, cp),
        b2s: decay(c_sch, cs),
        amplitudes: [best[0] / best[2], best[1] / best[2], 1.0],
    })
}

/// Scholte wave: elastic half-space below `z = 0`, fluid above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScholteWave {
    pub params: ScholteParams,
}

impl ScholteWave {
    pub fn new(params: ScholteParams) -> Self {
        Self { params }
    }

    /// `λ = μ = ρ_e = 1`, `c = ρ_a = 1`.
    pub fn standard_materials() -> (ElasticMaterial, AcousticMaterial) {
        (
            ElasticMaterial::new(1.0, 1.0, 1.0).expect("valid material"),
            AcousticMaterial::new(1.0, 1.0).expect("valid material"),
        )
    }
}

impl AnalyticModel for ScholteWave {
    fn elastic(&self, x: Point3, t: f64) -> ElasticSample {
        let p = &self.params;
        let [_, b2, b3] = p.amplitudes;
        let (k, w) = (p.k, p.omega);
        let e2 = (k * p.b2p * x[2]).exp();
        let e3 = (k * p.b2s * x[2]).exp();
        let a1 = k * (b2 * e2 - b3 * p.b2s * e3);
        let a3 = k * (b2 * p.b2p * e2 - b3 * e3);
        let d1 = k * k * (b2 * p.b2p * e2 - b3 * p.b2s * p.b2s * e3);
        let d3 = k * k * (b2 * p.b2p * p.b2p * e2 - b3 * p.b2s * e3);
        let (s, c) = (k * x[0] - w * t).sin_cos();
        let mut out = ElasticSample {
            u: [a1 * c, 0.0, a3 * s],
            v: [w * a1 * s, 0.0, -w * a3 * c],
            a: [-w * w * a1 * c, 0.0, -w * w * a3 * s],
            grad: [[0.0; 3]; 3],
        };
        out.grad[0][0] = -k * a1 * s;
        out.grad[0][2] = d1 * c;
        out.grad[2][0] = k * a3 * c;
        out.grad[2][2] = d3 * s;
        out
    }

    fn acoustic(&self, x: Point3, t: f64) -> AcousticSample {
        let p = &self.params;
        let (k, w) = (p.k, p.omega);
        let amp = w * p.amplitudes[0] * (-k * p.b1p * x[2]).exp();
        let (s, c) = (k * x[0] - w * t).sin_cos();
        AcousticSample {
            phi: amp * c,
            dphi: w * amp * s,
            ddphi: -w * w * amp * c,
            grad: [-k * amp * s, 0.0, -k * p.b1p * amp * c],
        }
    }
}

/// Ricker point source `f(t) d δ(x - x_0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RickerSource {
    pub amplitude: f64,
    pub peak_frequency: f64,
    pub delay: f64,
    pub location: Point3,
    pub direction: Point3,
}

impl RickerSource {
    /// `f_0 = 1e10`, `t_0 = 0.25`, `x_0 = (200, 0, 300)`, vertical force.
    pub fn cavity(peak_frequency: f64) -> Self {
        Self {
            amplitude: 1e10,
            peak_frequency,
            delay: 0.25,
            location: [200.0, 0.0, 300.0],
            direction: [0.0, 0.0, 1.0],
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        ricker(t, self)
    }
}

pub fn ricker(t: f64, src: &RickerSource) -> f64 {
    let a = (PI * src.peak_frequency * (t - src.delay)).powi(2);
    src.amplitude * (1.0 - 2.0 * a) * (-a).exp()
}

#[cfg(test)]
mod tests;
