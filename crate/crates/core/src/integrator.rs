//! Explicit Newmark predictor-corrector staggered time stepping.
//!
//! Each step predicts both domains, solves the elastic acceleration with
//! the acoustic velocity predictor, corrects the elastic velocity, and then
//! solves the acoustic acceleration with the corrected elastic velocity.
//! Dirichlet values are overwritten from boundary data after every update.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{LinearOperator, LoadAssembler, SystemOperators};
use crate::error::{Error, Result};
use crate::mesh::Point3;
use crate::space::DofSpace;

/// Borrowed view of the system matrices.
#[derive(Clone, Copy)]
pub struct Operators<'a> {
    pub mass_e: &'a [f64],
    pub mass_a: &'a [f64],
    pub k_e: &'a dyn LinearOperator,
    pub k_a: &'a dyn LinearOperator,
    pub c_e: &'a dyn LinearOperator,
    pub c_a: &'a dyn LinearOperator,
    pub s_e: &'a dyn LinearOperator,
    pub s_a: &'a dyn LinearOperator,
}

impl SystemOperators {
    pub fn view(&self) -> Operators<'_> {
        Operators {
            mass_e: &self.mass_e,
            mass_a: &self.mass_a,
            k_e: &self.k_e,
            k_a: &self.k_a,
            c_e: &self.c_e,
            c_a: &self.c_a,
            s_e: &self.s_e,
            s_a: &self.s_a,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub step: usize,
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub a_e: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub a_a: Vec<f64>,
}

impl SimState {
    pub fn zeros(n_elastic: usize, n_acoustic: usize) -> Self {
        Self {
            step: 0,
            t: 0.0,
            u: vec![0.0; n_elastic],
            v: vec![0.0; n_elastic],
            a_e: vec![0.0; n_elastic],
            phi: vec![0.0; n_acoustic],
            psi: vec![0.0; n_acoustic],
            a_a: vec![0.0; n_acoustic],
        }
    }

    pub fn is_finite(&self) -> bool {
        [&self.u, &self.v, &self.a_e, &self.phi, &self.psi, &self.a_a]
            .iter()
            .all(|x| x.iter().all(|v| v.is_finite()))
    }
}

/// Prescribed values on Dirichlet nodes.
pub trait BoundaryData: Send + Sync {
    /// `[u, u̇, ü]` at `x`, time `t`.
    fn elastic(&self, x: Point3, t: f64) -> [[f64; 3]; 3];
    /// `[φ, φ̇, φ̈]`.
    fn acoustic(&self, x: Point3, t: f64) -> [f64; 3];
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Homogeneous;

impl BoundaryData for Homogeneous {
    fn elastic(&self, _: Point3, _: f64) -> [[f64; 3]; 3] {
        [[0.0; 3]; 3]
    }

    fn acoustic(&self, _: Point3, _: f64) -> [f64; 3] {
        [0.0; 3]
    }
}

/// Dirichlet nodes of both spaces with their data.
#[derive(Clone)]
pub struct Dirichlet {
    elastic: Vec<(usize, Point3)>,
    acoustic: Vec<(usize, Point3)>,
    data: Arc<dyn BoundaryData>,
}

impl Dirichlet {
    pub fn new(elastic: &DofSpace, acoustic: &DofSpace, data: Arc<dyn BoundaryData>) -> Self {
        let pick = |s: &DofSpace| {
            s.dirichlet_nodes()
                .iter()
                .map(|&n| (n, s.node_coords()[n]))
                .collect()
        };
        Self {
            elastic: pick(elastic),
            acoustic: pick(acoustic),
            data,
        }
    }

    pub fn none() -> Self {
        Self {
            elastic: Vec::new(),
            acoustic: Vec::new(),
            data: Arc::new(Homogeneous),
        }
    }

    fn set_elastic(&self, t: f64, which: usize, out: &mut [f64]) {
        for &(n, x) in &self.elastic {
            let d = self.data.elastic(x, t)[which];
            out[3 * n..3 * n + 3].copy_from_slice(&d);
        }
    }

    fn set_acoustic(&self, t: f64, which: usize, out: &mut [f64]) {
        for &(n, x) in &self.acoustic {
            out[n] = self.data.acoustic(x, t)[which];
        }
    }

    /// Overwrites every Dirichlet entry of `state` with data at `state.t`.
    pub fn apply(&self, state: &mut SimState) {
        let t = state.t;
        self.set_elastic(t, 0, &mut state.u);
        self.set_elastic(t, 1, &mut state.v);
        self.set_elastic(t, 2, &mut state.a_e);
        self.set_acoustic(t, 0, &mut state.phi);
        self.set_acoustic(t, 1, &mut state.psi);
        self.set_acoustic(t, 2, &mut state.a_a);
    }
}

/// `ũ = u + Δt v + Δt²/2 a`, `ṽ = v + Δt/2 a` in place.
pub fn predict(x: &mut [f64], xdot: &mut [f64], a: &[f64], dt: f64) {
    let h = 0.5 * dt * dt;
    for i in 0..x.len() {
        x[i] += dt * xdot[i] + h * a[i];
        xdot[i] += 0.5 * dt * a[i];
    }
}

/// Predictors of both domains as new vectors `(ũ, ṽ, φ̃, ψ̃)`.
pub fn predictors(state: &SimState, dt: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let (mut u, mut v) = (state.u.clone(), state.v.clone());
    let (mut phi, mut psi) = (state.phi.clone(), state.psi.clone());
    predict(&mut u, &mut v, &state.a_e, dt);
    predict(&mut phi, &mut psi, &state.a_a, dt);
    (u, v, phi, psi)
}

/// `a = M⁻¹(f - S xdot - K x - C y)` with `work` as scratch.
fn solve_acceleration(
    mass: &[f64],
    f: &[f64],
    s: &dyn LinearOperator,
    xdot: &[f64],
    k: &dyn LinearOperator,
    x: &[f64],
    c: &dyn LinearOperator,
    y: &[f64],
    work: &mut [f64],
    a: &mut [f64],
) {
    if a.is_empty() {
        return;
    }
    k.apply(x, a);
    for i in 0..a.len() {
        a[i] = f[i] - a[i];
    }
    if s.nrows() > 0 {
        s.apply(xdot, work);
        a.iter_mut().zip(work.iter()).for_each(|(ai, w)| *ai -= w);
    }
    if !y.is_empty() {
        c.apply(y, work);
        a.iter_mut().zip(work.iter()).for_each(|(ai, w)| *ai -= w);
    }
    a.iter_mut().zip(mass).for_each(|(ai, m)| *ai /= m);
}

/// Time stepper with preallocated work vectors.
pub struct Integrator<'a> {
    ops: Operators<'a>,
    loads: Option<&'a LoadAssembler>,
    dirichlet: Dirichlet,
    dt: f64,
    fe: Vec<f64>,
    fa: Vec<f64>,
    we: Vec<f64>,
    wa: Vec<f64>,
}

impl<'a> Integrator<'a> {
    pub fn new(ops: Operators<'a>, loads: Option<&'a LoadAssembler>, dirichlet: Dirichlet, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
        }
        let (ne, na) = (ops.mass_e.len(), ops.mass_a.len());
        if ops.mass_e.iter().chain(ops.mass_a).any(|&m| !(m > 0.0)) {
            return Err(Error::Assembly("mass matrix has a nonpositive entry".into()));
        }
        Ok(Self {
            ops,
            loads,
            dirichlet,
            dt,
            fe: vec![0.0; ne],
            fa: vec![0.0; na],
            we: vec![0.0; ne],
            wa: vec![0.0; na],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn loads_at(&mut self, t: f64) {
        match self.loads {
            Some(l) => l.assemble(t, &mut self.fe, &mut self.fa),
            None => {
                self.fe.fill(0.0);
                self.fa.fill(0.0);
            }
        }
    }

    /// Imposes Dirichlet data at `state.t` and computes `a_e⁰`, `a_a⁰`.
    pub fn initialize(&mut self, state: &mut SimState) -> Result<()> {
        self.dirichlet.apply(state);
        self.loads_at(state.t);
        let o = self.ops;
        solve_acceleration(
            o.mass_e, &self.fe, o.s_e, &state.v, o.k_e, &state.u, o.c_e, &state.psi, &mut self.we, &mut state.a_e,
        );
        solve_acceleration(
            o.mass_a, &self.fa, o.s_a, &state.psi, o.k_a, &state.phi, o.c_a, &state.v, &mut self.wa, &mut state.a_a,
        );
        let t = state.t;
        self.dirichlet.set_elastic(t, 2, &mut state.a_e);
        self.dirichlet.set_acoustic(t, 2, &mut state.a_a);
        if !state.is_finite() {
            return Err(Error::Divergence { step: state.step, time: t });
        }
        Ok(())
    }

    /// Advances `state` by one step.
    pub fn step(&mut self, state: &mut SimState) -> Result<()> {
        let dt = self.dt;
        let o = self.ops;
        predict(&mut state.u, &mut state.v, &state.a_e, dt);
        predict(&mut state.phi, &mut state.psi, &state.a_a, dt);
        state.step += 1;
        state.t = state.step as f64 * dt;
        let t = state.t;
        self.dirichlet.set_elastic(t, 0, &mut state.u);
        self.dirichlet.set_acoustic(t, 0, &mut state.phi);
        self.loads_at(t);

        solve_acceleration(
            o.mass_e, &self.fe, o.s_e, &state.v, o.k_e, &state.u, o.c_e, &state.psi, &mut self.we, &mut state.a_e,
        );
        for (v, a) in state.v.iter_mut().zip(&state.a_e) {
            *v += 0.5 * dt * a;
        }
        self.dirichlet.set_elastic(t, 1, &mut state.v);
        self.dirichlet.set_elastic(t, 2, &mut state.a_e);

        solve_acceleration(
            o.mass_a, &self.fa, o.s_a, &state.psi, o.k_a, &state.phi, o.c_a, &state.v, &mut self.wa, &mut state.a_a,
        );
        for (p, a) in state.psi.iter_mut().zip(&state.a_a) {
            *p += 0.5 * dt * a;
        }
        self.dirichlet.set_acoustic(t, 1, &mut state.psi);
        self.dirichlet.set_acoustic(t, 2, &mut state.a_a);

        if !state.is_finite() {
            return Err(Error::Divergence { step: state.step, time: t });
        }
        Ok(())
    }
}

/// Result of the stable time step estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableStep {
    pub dt: f64,
    /// Largest eigenvalue estimate of `M⁻¹K` over both domains.
    pub lambda_max: f64,
    /// Largest eigenvalue estimate of `M⁻¹S` over both domains.
    pub damping_max: f64,
    /// False when the eigenvalue iteration hit the iteration cap.
    pub converged: bool,
}

/// Number of eigenvalues of the symmetric tridiagonal `(alpha, beta)` below `x`.
fn sturm_count(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..alpha.len() {
        let b2 = if i == 0 { 0.0 } else { beta[i - 1] * beta[i - 1] };
        d = alpha[i] - x - if d == 0.0 { b2 / f64::EPSILON } else { b2 / d };
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn tridiagonal_max(alpha: &[f64], beta: &[f64]) -> f64 {
    let n = alpha.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { beta[i - 1].abs() } else { 0.0 } + if i + 1 < n { beta[i].abs() } else { 0.0 };
        lo = lo.min(alpha[i] - r);
        hi = hi.max(alpha[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(alpha, beta, mid) < n {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Largest eigenvalue of `M^{-1/2} K M^{-1/2}` by Lanczos, at most 500 steps.
fn lanczos_max(mass: &[f64], k: &dyn LinearOperator, seed: u64) -> (f64, bool) {
    let n = mass.len();
    if n == 0 {
        return (0.0, true);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inv_sqrt: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let mut v_prev = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut lambda = 0.0;
    for it in 0..500.min(n) {
        for i in 0..n {
            z[i] = v[i] * inv_sqrt[i];
        }
        k.apply(&z, &mut w);
        let b_prev = beta.last().copied().unwrap_or(0.0);
        let mut a = 0.0;
        for i in 0..n {
            w[i] *= inv_sqrt[i];
            a += w[i] * v[i];
        }
        for i in 0..n {
            w[i] -= a * v[i] + b_prev * v_prev[i];
        }
        alpha.push(a);
        let b = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let estimate = tridiagonal_max(&alpha, &beta);
        if it + 1 == n || b <= 1e-14 * estimate.abs() {
            return (estimate, true);
        }
        if it >= 4 && (estimate - lambda).abs() <= 1e-6 * estimate.abs() {
            return (estimate, true);
        }
        lambda = estimate;
        beta.push(b);
        std::mem::swap(&mut v_prev, &mut v);
        for i in 0..n {
            v[i] = w[i] / b;
        }
    }
    (lambda, false)
}

fn damping_max(mass: &[f64], s: &dyn LinearOperator, seed: u64) -> (f64, bool) {
    if s.nrows() == 0 {
        return (0.0, true);
    }
    lanczos_max(mass, s, seed)
}

/// `safety · 2/(σ/2 + √(σ²/4 + λ))` per domain, with `λ` the largest
/// eigenvalue of `M⁻¹K` and `σ` that of `M⁻¹S`, both by Lanczos iteration.
/// Without absorbing faces this is `safety · 2/√λ`. The coupling blocks
/// satisfy `C_a = -C_eᵀ`, so their symmetric part vanishes and they do not
/// enter the estimate.
pub fn estimate_stable_dt(ops: &Operators<'_>, safety: f64) -> StableStep {
    let (le, ce) = lanczos_max(ops.mass_e, ops.k_e, 0x5eed);
    let (la, ca) = lanczos_max(ops.mass_a, ops.k_a, 0x5eed + 1);
    let (se, de) = damping_max(ops.mass_e, ops.s_e, 0x5eed + 2);
    let (sa, da) = damping_max(ops.mass_a, ops.s_a, 0x5eed + 3);
    let converged = ce && ca && de && da;
    if !converged {
        log::warn!("eigenvalue iteration did not converge in 500 steps; time step estimate is approximate");
    }
    let critical = |l: f64, s: f64| {
        let d = 0.5 * s + (0.25 * s * s + l).sqrt();
        if d > 0.0 { 2.0 / d } else { f64::INFINITY }
    };
    StableStep {
        dt: safety * critical(le, se).min(critical(la, sa)),
        lambda_max: le.max(la),
        damping_max: se.max(sa),
        converged,
    }
}
