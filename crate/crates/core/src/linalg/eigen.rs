//! Symmetric eigensolvers: Householder tridiagonalization, implicit QL for
//! the eigenvalues and inverse iteration for the requested eigenvectors.

use super::{cholesky, DenseSymMatrix, LinalgError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

struct Tridiagonal {
    d: Vec<f64>,
    e: Vec<f64>,
    /// Householder vector for rows `k+1..n` and its scale `τ`; `H = I − τvvᵀ`.
    reflectors: Vec<(Vec<f64>, f64)>,
}

/// Reduces `A = Q T Qᵀ`, working on the lower triangle of a full copy.
fn tridiagonalize(a: &DenseSymMatrix) -> Tridiagonal {
    let n = a.order();
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        w[i * n..i * n + i + 1].copy_from_slice(a.lower_row(i));
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n.saturating_sub(1)];
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));

    for k in 0..n.saturating_sub(2) {
        d[k] = w[k * n + k];
        let m = n - k - 1;
        let base = k + 1;
        let x: Vec<f64> = (0..m).map(|t| w[(base + t) * n + k]).collect();
        let tail: f64 = x[1..].iter().map(|v| v * v).sum();
        if tail == 0.0 {
            e[k] = x[0];
            reflectors.push((Vec::new(), 0.0));
            continue;
        }
        let norm = (x[0] * x[0] + tail).sqrt();
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let tau = 2.0 / (v[0] * v[0] + tail);

        let mut p = vec![0.0; m];
        for i in 0..m {
            let row = &w[(base + i) * n + base..(base + i) * n + base + i + 1];
            let vi = v[i];
            let mut acc = 0.0;
            for j in 0..i {
                acc += row[j] * v[j];
                p[j] += row[j] * vi;
            }
            p[i] += acc + row[i] * vi;
        }
        for pi in p.iter_mut() {
            *pi *= tau;
        }
        let half = 0.5 * tau * v.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>();
        for (pi, vi) in p.iter_mut().zip(&v) {
            *pi -= half * vi;
        }
        for i in 0..m {
            let (vi, pi) = (v[i], p[i]);
            let row = &mut w[(base + i) * n + base..(base + i) * n + base + i + 1];
            for j in 0..=i {
                row[j] -= vi * p[j] + pi * v[j];
            }
        }
        e[k] = alpha;
        reflectors.push((v, tau));
    }
    if n >= 2 {
        d[n - 2] = w[(n - 2) * n + n - 2];
        e[n - 2] = w[(n - 1) * n + n - 2];
    }
    if n >= 1 {
        d[n - 1] = w[(n - 1) * n + n - 1];
    }
    Tridiagonal { d, e, reflectors }
}

/// All eigenvalues of the tridiagonal `(d, e)`, ascending.
fn tql_values(d: &[f64], e_in: &[f64]) -> Result<Vec<f64>> {
    let n = d.len();
    let mut d = d.to_vec();
    let mut e = e_in.to_vec();
    e.push(0.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(LinalgError::NoConvergence(l));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Pivoted LU of `T − σI`, reused across inverse-iteration sweeps.
struct ShiftedLu {
    dl: Vec<f64>,
    dd: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn new(d: &[f64], e: &[f64], sigma: f64, tiny: f64) -> Self {
        let n = d.len();
        let mut dl = e.to_vec();
        let mut du = e.to_vec();
        let mut dd: Vec<f64> = d.iter().map(|x| x - sigma).collect();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if dd[i].abs() >= dl[i].abs() {
                if dd[i] == 0.0 {
                    dd[i] = tiny;
                }
                let fact = dl[i] / dd[i];
                dl[i] = fact;
                dd[i + 1] -= fact * du[i];
            } else {
                let fact = dd[i] / dl[i];
                dd[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = dd[i + 1];
                dd[i + 1] = temp - fact * dd[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if n > 0 && dd[n - 1] == 0.0 {
            dd[n - 1] = tiny;
        }
        ShiftedLu { dl, dd, du, du2, swapped }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.dl[i] * b[i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= self.du[i] * b[i + 1];
            }
            if i + 2 < n {
                s -= self.du2[i] * b[i + 2];
            }
            b[i] = s / self.dd[i];
        }
    }
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in x.iter_mut() {
        *v /= norm;
    }
}

/// Eigenvectors of the tridiagonal for the given (ascending) eigenvalues.
fn inverse_iteration(d: &[f64], e: &[f64], values: &[f64]) -> Vec<Vec<f64>> {
    let n = d.len();
    let tnorm = (0..n)
        .map(|i| {
            d[i].abs()
                + if i > 0 { e[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { e[i].abs() } else { 0.0 }
        })
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * tnorm;
    let cluster = 1e-3 * tnorm;

    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(values.len());
    let mut cluster_start = 0;
    for (k, &lam) in values.iter().enumerate() {
        if k > 0 && lam - values[k - 1] > cluster {
            cluster_start = k;
        }
        let lu = ShiftedLu::new(d, e, lam, tiny);
        // fixed pseudo-random start so runs are reproducible
        let mut state = 0x9E37_79B9_7F4A_7C15u64 ^ (k as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        let mut x: Vec<f64> = (0..n)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                0.5 + (state >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect();
        for _ in 0..3 {
            lu.solve(&mut x);
            for prev in &vectors[cluster_start..k] {
                let dot: f64 = prev.iter().zip(&x).map(|(a, b)| a * b).sum();
                for (xi, pi) in x.iter_mut().zip(prev) {
                    *xi -= dot * pi;
                }
            }
            normalize(&mut x);
        }
        vectors.push(x);
    }
    vectors
}

fn back_transform(tri: &Tridiagonal, y: &mut [f64]) {
    for (k, (v, tau)) in tri.reflectors.iter().enumerate().rev() {
        if *tau == 0.0 {
            continue;
        }
        let seg = &mut y[k + 1..];
        let dot: f64 = v.iter().zip(seg.iter()).map(|(a, b)| a * b).sum();
        let f = tau * dot;
        for (yi, vi) in seg.iter_mut().zip(v) {
            *yi -= f * vi;
        }
    }
}

fn lowest_pairs(a: &DenseSymMatrix, count: usize) -> Result<Vec<EigenPair>> {
    let tri = tridiagonalize(a);
    let values = tql_values(&tri.d, &tri.e)?;
    let wanted = &values[..count];
    let vectors = inverse_iteration(&tri.d, &tri.e, wanted);
    Ok(wanted
        .iter()
        .zip(vectors)
        .map(|(&value, mut vector)| {
            back_transform(&tri, &mut vector);
            EigenPair { value, vector }
        })
        .collect())
}

/// Full eigendecomposition of a symmetric matrix, ascending, orthonormal vectors.
pub fn sym_eig(a: &DenseSymMatrix) -> Result<Vec<EigenPair>> {
    lowest_pairs(a, a.order())
}

/// The `count` smallest eigenpairs of `S v = λ M v`, with `vᵢᵀ M vⱼ = δᵢⱼ`.
pub fn sym_generalized_eig(
    s: &DenseSymMatrix,
    m: &DenseSymMatrix,
    count: usize,
) -> Result<Vec<EigenPair>> {
    let n = s.order();
    if m.order() != n {
        return Err(LinalgError::DimensionMismatch { expected: n, got: m.order() });
    }
    if count > n {
        return Err(LinalgError::TooManyEigenpairs { count, order: n });
    }
    let l = cholesky(m)?;

    // W = L⁻¹ S column by column, then C = L⁻¹ Wᵀ.
    let mut w = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        for (i, c) in col.iter_mut().enumerate() {
            *c = s.get(i, j);
        }
        l.solve_lower_in_place(&mut col);
        for i in 0..n {
            w[i * n + j] = col[i];
        }
    }
    let mut c_full = vec![0.0; n * n];
    for i in 0..n {
        col.copy_from_slice(&w[i * n..(i + 1) * n]);
        l.solve_lower_in_place(&mut col);
        for j in 0..n {
            c_full[j * n + i] = col[j];
        }
    }
    drop(w);
    let c = DenseSymMatrix::from_lower_fn(n, |i, j| 0.5 * (c_full[i * n + j] + c_full[j * n + i]));
    drop(c_full);

    let mut pairs = lowest_pairs(&c, count)?;
    for p in &mut pairs {
        l.solve_upper_in_place(&mut p.vector);
    }
    Ok(pairs)
}
