//! Gauss–Lobatto–Legendre rules, 1D Lagrange bases and their tensor
//! products on the reference hexahedron `(-1,1)^3`.
//!
//! Nodes are the roots of `(1-x²)P'_N(x)`; they are found by Newton
//! iteration from Chebyshev–Lobatto guesses and then symmetrised so that
//! `ξ_i = -ξ_{N-i}` holds bit-exactly.

use crate::error::{Error, Result};

const NEWTON_TOL: f64 = 1e-14;
const NEWTON_MAX_ITER: usize = 100;

/// GLL nodes, weights and collocation differentiation matrix for degree `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule1D {
    degree: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Row-major `(N+1)×(N+1)`; entry `(i, j)` is `ℓ'_j(ξ_i)`.
    diff: Vec<f64>,
}

impl QuadratureRule1D {
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of nodes, `N + 1`.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Derivative of the `j`-th Lagrange basis function at node `i`.
    #[inline]
    pub fn diff(&self, i: usize, j: usize) -> f64 {
        self.diff[i * self.nodes.len() + j]
    }

    /// The full differentiation matrix, row-major.
    pub fn diff_matrix(&self) -> &[f64] {
        &self.diff
    }

    /// Values of every basis function at `x`, written into `out`.
    pub fn basis_values(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.len());
        for (i, o) in out.iter_mut().enumerate() {
            *o = lagrange_value(&self.nodes, i, x);
        }
    }

    /// Derivatives of every basis function at `x`, written into `out`.
    pub fn basis_derivatives(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.len());
        let n = self.len();
        // On a node, reuse the collocation matrix.
        if let Some(k) = self.nodes.iter().position(|&xi| xi == x) {
            for (j, o) in out.iter_mut().enumerate() {
                *o = self.diff[k * n + j];
            }
            return;
        }
        for (i, o) in out.iter_mut().enumerate() {
            let mut sum = 0.0;
            for m in 0..n {
                if m == i {
                    continue;
                }
                let mut prod = 1.0 / (self.nodes[i] - self.nodes[m]);
                for j in 0..n {
                    if j != i && j != m {
                        prod *= (x - self.nodes[j]) / (self.nodes[i] - self.nodes[j]);
                    }
                }
                sum += prod;
            }
            *o = sum;
        }
    }
}

/// Legendre polynomial `P_n(x)` together with `P_{n-1}(x)` (three-term recurrence).
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

/// Builds the GLL rule of degree `n` (`n + 1` points).
pub fn gll_rule(n: usize) -> Result<QuadratureRule1D> {
    if n < 1 {
        return Err(Error::InvalidDegree(n));
    }
    let np = n + 1;
    let nf = n as f64;
    let mut nodes = vec![0.0; np];
    nodes[0] = -1.0;
    nodes[n] = 1.0;
    for (i, node) in nodes.iter_mut().enumerate().take(n).skip(1) {
        let mut x = -(std::f64::consts::PI * i as f64 / nf).cos();
        for _ in 0..NEWTON_MAX_ITER {
            // (1-x²)P'_N = N(P_{N-1} - x P_N), derivative -N(N+1)P_N.
            let (p, p_prev) = legendre(n, x);
            let dx = (p_prev - x * p) / ((nf + 1.0) * p);
            x += dx;
            if dx.abs() < NEWTON_TOL {
                break;
            }
        }
        *node = x;
    }
    for i in 0..np / 2 {
        let sym = 0.5 * (nodes[n - i] - nodes[i]);
        nodes[i] = -sym;
        nodes[n - i] = sym;
    }
    if np % 2 == 1 {
        nodes[n / 2] = 0.0;
    }

    let mut weights: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            let (p, _) = legendre(n, x);
            2.0 / (nf * (nf + 1.0) * p * p)
        })
        .collect();
    for i in 0..np / 2 {
        let w = 0.5 * (weights[i] + weights[n - i]);
        weights[i] = w;
        weights[n - i] = w;
    }

    let bary: Vec<f64> = (0..np)
        .map(|j| {
            let prod: f64 = (0..np)
                .filter(|&k| k != j)
                .map(|k| nodes[j] - nodes[k])
                .product();
            1.0 / prod
        })
        .collect();
    let mut diff = vec![0.0; np * np];
    for i in 0..np {
        let mut row_sum = 0.0;
        for j in 0..np {
            if i != j {
                let d = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
                diff[i * np + j] = d;
                row_sum += d;
            }
        }
        diff[i * np + i] = -row_sum;
    }

    Ok(QuadratureRule1D {
        degree: n,
        nodes,
        weights,
        diff,
    })
}

/// Gauss–Legendre points and weights with `npts` points on `(-1,1)`.
///
/// Exact for polynomials up to degree `2·npts - 1`.
pub fn gauss_legendre(npts: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if npts < 1 {
        return Err(Error::InvalidDegree(npts));
    }
    let nf = npts as f64;
    let mut nodes = vec![0.0; npts];
    let mut weights = vec![0.0; npts];
    for i in 0..npts {
        // Largest root first; stored ascending below.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, p_prev) = legendre(npts, x);
            dp = nf * (x * p - p_prev) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < NEWTON_TOL {
                let (p, p_prev) = legendre(npts, x);
                dp = nf * (x * p - p_prev) / (x * x - 1.0);
                break;
            }
        }
        nodes[npts - 1 - i] = x;
        weights[npts - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    for i in 0..npts / 2 {
        let x = 0.5 * (nodes[npts - 1 - i] - nodes[i]);
        nodes[i] = -x;
        nodes[npts - 1 - i] = x;
        let w = 0.5 * (weights[i] + weights[npts - 1 - i]);
        weights[i] = w;
        weights[npts - 1 - i] = w;
    }
    if npts % 2 == 1 {
        nodes[npts / 2] = 0.0;
    }
    Ok((nodes, weights))
}

#[inline]
fn lagrange_value(nodes: &[f64], i: usize, x: f64) -> f64 {
    let xi = nodes[i];
    nodes
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .fold(1.0, |acc, (_, &xj)| acc * (x - xj) / (xi - xj))
}

/// `ℓ_i(x)`: the `i`-th Lagrange basis polynomial on the rule's nodes.
pub fn lagrange_eval(rule: &QuadratureRule1D, i: usize, x: f64) -> Result<f64> {
    if i > rule.degree {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: rule.len(),
        });
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::OutsideReference(vec![x]));
    }
    Ok(lagrange_value(&rule.nodes, i, x))
}

/// Value and reference gradient of `ℓ_i(ξ)ℓ_j(η)ℓ_k(ζ)`.
pub fn tensor_eval(
    rule: &QuadratureRule1D,
    multi_index: [usize; 3],
    point: [f64; 3],
) -> Result<(f64, [f64; 3])> {
    let n = rule.len();
    let mut vals = [0.0; 3];
    let mut ders = [0.0; 3];
    let mut scratch_v = vec![0.0; n];
    let mut scratch_d = vec![0.0; n];
    for axis in 0..3 {
        let idx = multi_index[axis];
        let x = point[axis];
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, len: n });
        }
        if !(-1.0..=1.0).contains(&x) {
            return Err(Error::OutsideReference(point.to_vec()));
        }
        rule.basis_values(x, &mut scratch_v);
        rule.basis_derivatives(x, &mut scratch_d);
        vals[axis] = scratch_v[idx];
        ders[axis] = scratch_d[idx];
    }
    let value = vals[0] * vals[1] * vals[2];
    let grad = [
        ders[0] * vals[1] * vals[2],
        vals[0] * ders[1] * vals[2],
        vals[0] * vals[1] * ders[2],
    ];
    Ok((value, grad))
}

/// Lexicographic local node index, `i` fastest.
#[inline]
pub fn local_index(n: usize, i: usize, j: usize, k: usize) -> usize {
    i + n * (j + n * k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn degree_one_is_trapezoid() {
        let r = gll_rule(1).unwrap();
        assert_eq!(r.nodes(), &[-1.0, 1.0]);
        assert_eq!(r.weights(), &[1.0, 1.0]);
    }

    #[test]
    fn degree_two_is_simpson() {
        let r = gll_rule(2).unwrap();
        assert_eq!(r.nodes(), &[-1.0, 0.0, 1.0]);
        for (w, e) in r.weights().iter().zip([1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0]) {
            assert!((w - e).abs() < 1e-15);
        }
    }

    #[test]
    fn degree_four_closed_form() {
        let r = gll_rule(4).unwrap();
        let a = (3.0f64 / 7.0).sqrt();
        let expect_x = [-1.0, -a, 0.0, a, 1.0];
        let expect_w = [0.1, 49.0 / 90.0, 32.0 / 45.0, 49.0 / 90.0, 0.1];
        for i in 0..5 {
            assert!((r.nodes()[i] - expect_x[i]).abs() < 1e-15);
            assert!((r.weights()[i] - expect_w[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn degree_zero_rejected() {
        assert!(matches!(gll_rule(0), Err(Error::InvalidDegree(0))));
    }

    #[test]
    fn invariants_up_to_sixteen() {
        for n in 1..=16 {
            let r = gll_rule(n).unwrap();
            let x = r.nodes();
            assert!(x.windows(2).all(|w| w[0] < w[1]), "N={n}");
            for i in 0..=n {
                assert_eq!(x[i], -x[n - i]);
            }
            let s: f64 = r.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "N={n} sum={s}");
            assert!(r.weights().iter().all(|&w| w > 0.0));
            for i in 0..=n {
                let row: f64 = (0..=n).map(|j| r.diff(i, j)).sum();
                assert!(row.abs() < 1e-12);
            }
            for k in 0..=(2 * n - 1) {
                let q: f64 = x
                    .iter()
                    .zip(r.weights())
                    .map(|(&xi, &w)| w * xi.powi(k as i32))
                    .sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-12, "N={n} k={k}");
            }
        }
    }

    #[test]
    fn diff_matrix_reproduces_monomial_derivatives() {
        for n in 1..=10 {
            let r = gll_rule(n).unwrap();
            for k in 1..=n {
                let vals: Vec<f64> = r.nodes().iter().map(|x| x.powi(k as i32)).collect();
                for i in 0..=n {
                    let d: f64 = (0..=n).map(|j| r.diff(i, j) * vals[j]).sum();
                    let exact = k as f64 * r.nodes()[i].powi(k as i32 - 1);
                    assert!((d - exact).abs() < 1e-10, "N={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn lagrange_examples() {
        let r = gll_rule(2).unwrap();
        assert_eq!(lagrange_eval(&r, 1, 0.0).unwrap(), 1.0);
        assert_eq!(lagrange_eval(&r, 0, 1.0).unwrap(), 0.0);
        assert!((lagrange_eval(&r, 1, 0.5).unwrap() - 0.75).abs() < 1e-15);
        assert!(lagrange_eval(&r, 3, 0.0).is_err());
        assert!(lagrange_eval(&r, 0, 1.5).is_err());
    }

    #[test]
    fn tensor_examples() {
        let r1 = gll_rule(1).unwrap();
        assert_eq!(tensor_eval(&r1, [0, 0, 0], [-1.0, -1.0, -1.0]).unwrap().0, 1.0);
        assert_eq!(tensor_eval(&r1, [0, 0, 0], [1.0, -1.0, -1.0]).unwrap().0, 0.0);

        let r2 = gll_rule(2).unwrap();
        let (v, g) = tensor_eval(&r2, [1, 1, 1], [0.0, 0.0, 0.0]).unwrap();
        assert_eq!(v, 1.0);
        assert!(g.iter().all(|x| x.abs() < 1e-15));
        let (v, g) = tensor_eval(&r2, [1, 1, 1], [0.5, 0.0, 0.0]).unwrap();
        assert!((v - 0.75).abs() < 1e-15);
        assert!((g[0] + 1.0).abs() < 1e-14 && g[1].abs() < 1e-15 && g[2].abs() < 1e-15);
        assert!(tensor_eval(&r2, [3, 0, 0], [0.0; 3]).is_err());
    }

    #[test]
    fn tensor_nodal_property() {
        let r = gll_rule(3).unwrap();
        let x = r.nodes().to_vec();
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    let (v, _) = tensor_eval(&r, [1, 2, 0], [x[a], x[b], x[c]]).unwrap();
                    let expect = if (a, b, c) == (1, 2, 0) { 1.0 } else { 0.0 };
                    assert!((v - expect).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn derivatives_off_node_match_finite_differences() {
        let r = gll_rule(5).unwrap();
        let mut d = vec![0.0; 6];
        let mut vp = vec![0.0; 6];
        let mut vm = vec![0.0; 6];
        for &x in &[-0.83, -0.1, 0.37, 0.91] {
            r.basis_derivatives(x, &mut d);
            let h = 1e-6;
            r.basis_values(x + h, &mut vp);
            r.basis_values(x - h, &mut vm);
            for i in 0..6 {
                let fd = (vp[i] - vm[i]) / (2.0 * h);
                assert!((fd - d[i]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn gauss_legendre_exactness() {
        for q in 1..=10 {
            let (x, w) = gauss_legendre(q).unwrap();
            for k in 0..2 * q {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((s - exact).abs() < 1e-13, "q={q} k={k}");
            }
        }
    }

    proptest! {
        #[test]
        fn partition_of_unity(n in 1usize..=8, xs in proptest::collection::vec(-1.0f64..=1.0, 100)) {
            let r = gll_rule(n).unwrap();
            let mut v = vec![0.0; n + 1];
            for x in xs {
                r.basis_values(x, &mut v);
                let s: f64 = v.iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn quadrature_exact_for_random_polynomials(
            n in 1usize..=8,
            coeffs in proptest::collection::vec((-50i32..=50, 1i32..=7), 16),
        ) {
            let r = gll_rule(n).unwrap();
            let deg = 2 * n - 1;
            let c: Vec<f64> = coeffs[..=deg].iter().map(|&(p, q)| p as f64 / q as f64).collect();
            let quad: f64 = r.nodes().iter().zip(r.weights()).map(|(&x, &w)| {
                w * c.iter().enumerate().map(|(k, ck)| ck * x.powi(k as i32)).sum::<f64>()
            }).sum();
            let exact: f64 = c.iter().enumerate()
                .map(|(k, ck)| if k % 2 == 1 { 0.0 } else { 2.0 * ck / (k as f64 + 1.0) })
                .sum();
            prop_assert!((quad - exact).abs() < 1e-12 * (1.0 + exact.abs()));
        }
    }
}
