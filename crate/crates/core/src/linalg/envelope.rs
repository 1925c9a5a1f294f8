//! Envelope (skyline) Cholesky under a reverse Cuthill–McKee ordering.

use std::collections::VecDeque;

use super::{LinalgError, Result, SparseMatrix};

fn adjacency(a: &SparseMatrix) -> Vec<Vec<usize>> {
    (0..a.n_rows())
        .map(|r| a.row(r).0.iter().copied().filter(|&c| c != r).collect())
        .collect()
}

/// Breadth-first levels from `root` restricted to unvisited nodes.
fn level_structure(adj: &[Vec<usize>], root: usize, blocked: &[bool]) -> Vec<Vec<usize>> {
    let mut seen = blocked.to_vec();
    seen[root] = true;
    let mut levels = vec![vec![root]];
    loop {
        let mut next = Vec::new();
        for &u in levels.last().unwrap() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            return levels;
        }
        levels.push(next);
    }
}

/// George–Liu search: walk to a node of (near) maximal eccentricity.
fn pseudo_peripheral(adj: &[Vec<usize>], start: usize, blocked: &[bool]) -> usize {
    let mut root = start;
    let mut levels = level_structure(adj, root, blocked);
    loop {
        let candidate = *levels
            .last()
            .unwrap()
            .iter()
            .min_by_key(|&&v| (adj[v].len(), v))
            .unwrap();
        let trial = level_structure(adj, candidate, blocked);
        if trial.len() > levels.len() {
            root = candidate;
            levels = trial;
        } else {
            return root;
        }
    }
}

/// Reverse Cuthill–McKee ordering of a structurally symmetric matrix.
/// Returns `perm` with `perm[new] = old`. Ties break on (degree, index), so the
/// result is deterministic.
pub fn reverse_cuthill_mckee(a: &SparseMatrix) -> Vec<usize> {
    let n = a.n_rows();
    let adj = adjacency(a);
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let start = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (adj[v].len(), v))
            .unwrap();
        let root = pseudo_peripheral(&adj, start, &visited);
        visited[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> = adj[u].iter().copied().filter(|&v| !visited[v]).collect();
            nbrs.sort_by_key(|&v| (adj[v].len(), v));
            for v in nbrs {
                visited[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

/// `P A Pᵀ = L Lᵀ` with `L` stored row-wise inside its envelope.
#[derive(Debug, Clone)]
pub struct EnvelopeFactor {
    perm: Vec<usize>,
    inv: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeFactor {
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        Self::factor_with_order(a, reverse_cuthill_mckee(a))
    }

    pub fn factor_with_order(a: &SparseMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.n_rows();
        if a.n_cols() != n || perm.len() != n {
            return Err(LinalgError::DimensionMismatch { expected: n, got: perm.len() });
        }
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let first: Vec<usize> = (0..n)
            .map(|i| a.row(perm[i]).0.iter().map(|&c| inv[c]).filter(|&j| j <= i).min().unwrap_or(i))
            .collect();
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for i in 0..n {
            offset.push(offset[i] + i - first[i] + 1);
        }
        let mut data = vec![0.0; offset[n]];

        for i in 0..n {
            let fi = first[i];
            let (cols, vals) = a.row(perm[i]);
            for (&c, &v) in cols.iter().zip(vals) {
                let j = inv[c];
                if j <= i {
                    data[offset[i] + j - fi] += v;
                }
            }
            let (done, rest) = data.split_at_mut(offset[i]);
            let row = &mut rest[..i - fi + 1];
            for j in fi..=i {
                let fj = first[j];
                let start = fi.max(fj);
                let s = if j == i {
                    row[j - fi] - row[start - fi..j - fi].iter().map(|v| v * v).sum::<f64>()
                } else {
                    let rj = &done[offset[j]..offset[j + 1]];
                    let dot: f64 = row[start - fi..j - fi]
                        .iter()
                        .zip(&rj[start - fj..j - fj])
                        .map(|(x, y)| x * y)
                        .sum();
                    row[j - fi] - dot
                };
                if j == i {
                    if !(s > 0.0) {
                        return Err(LinalgError::NotPositiveDefinite { pivot: perm[i], value: s });
                    }
                    row[j - fi] = s.sqrt();
                } else {
                    row[j - fi] = s / done[offset[j + 1] - 1];
                }
            }
        }
        Ok(EnvelopeFactor { perm, inv, first, offset, data })
    }

    pub fn order(&self) -> usize {
        self.perm.len()
    }

    /// `perm[new] = old`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Position of original index `old` in the factor ordering.
    pub fn position(&self, old: usize) -> usize {
        self.inv[old]
    }

    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[self.offset[i]..self.offset[i + 1]]
    }

    /// Solves `P A Pᵀ X = B` in place for a row-major `n × width` block that is
    /// already in factor ordering. Rows before `start` must be zero.
    pub fn solve_block_permuted(&self, x: &mut [f64], width: usize, start: usize) {
        let n = self.order();
        assert_eq!(x.len(), n * width);
        let mut acc = vec![0.0; width];
        for i in start..n {
            let fi = self.first[i];
            let row = self.row(i);
            acc.copy_from_slice(&x[i * width..(i + 1) * width]);
            for k in fi.max(start)..i {
                let l = row[k - fi];
                if l != 0.0 {
                    let xk = &x[k * width..(k + 1) * width];
                    for (a, b) in acc.iter_mut().zip(xk) {
                        *a -= l * b;
                    }
                }
            }
            let d = row[i - fi];
            for (dst, a) in x[i * width..(i + 1) * width].iter_mut().zip(&acc) {
                *dst = a / d;
            }
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = self.row(i);
            let d = row[i - fi];
            let (head, tail) = x.split_at_mut(i * width);
            let xi = &mut tail[..width];
            for v in xi.iter_mut() {
                *v /= d;
            }
            for k in fi..i {
                let l = row[k - fi];
                if l != 0.0 {
                    for (a, b) in head[k * width..(k + 1) * width].iter_mut().zip(xi.iter()) {
                        *a -= l * b;
                    }
                }
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.order();
        let mut x: Vec<f64> = (0..n).map(|i| b[self.perm[i]]).collect();
        self.solve_block_permuted(&mut x, 1, 0);
        let mut out = vec![0.0; n];
        for i in 0..n {
            out[self.perm[i]] = x[i];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid_laplacian(nx: usize, ny: usize, shift: f64) -> SparseMatrix {
        let idx = |i: usize, j: usize| j * nx + i;
        let mut t = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let p = idx(i, j);
                t.push((p, p, 4.0 + shift));
                if i + 1 < nx {
                    t.push((p, idx(i + 1, j), -1.0));
                    t.push((idx(i + 1, j), p, -1.0));
                }
                if j + 1 < ny {
                    t.push((p, idx(i, j + 1), -1.0));
                    t.push((idx(i, j + 1), p, -1.0));
                }
            }
        }
        SparseMatrix::from_triplets(nx * ny, nx * ny, &t)
    }

    fn bandwidth(a: &SparseMatrix, perm: &[usize]) -> usize {
        let mut inv = vec![0; perm.len()];
        for (k, &p) in perm.iter().enumerate() {
            inv[p] = k;
        }
        (0..a.n_rows())
            .flat_map(|r| a.row(r).0.iter().map(move |&c| (r, c)))
            .map(|(r, c)| inv[r].abs_diff(inv[c]))
            .max()
            .unwrap()
    }

    #[test]
    fn rcm_is_a_permutation_and_reduces_bandwidth() {
        let a = grid_laplacian(30, 5, 0.0);
        let p = reverse_cuthill_mckee(&a);
        let mut sorted = p.clone();
        sorted.sort();
        assert_eq!(sorted, (0..150).collect::<Vec<_>>());
        let natural: Vec<usize> = (0..150).collect();
        assert!(bandwidth(&a, &p) < bandwidth(&a, &natural));
        assert_eq!(p, reverse_cuthill_mckee(&a));
    }

    #[test]
    fn disconnected_components() {
        let t = vec![(0, 0, 2.0), (1, 1, 2.0), (2, 2, 2.0), (0, 2, -1.0), (2, 0, -1.0)];
        let a = SparseMatrix::from_triplets(3, 3, &t);
        let f = EnvelopeFactor::factor(&a).unwrap();
        let x = f.solve(&[1.0, 2.0, 1.0]);
        let r = a.matvec(&x);
        for (u, v) in r.iter().zip([1.0, 2.0, 1.0]) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        // pure Neumann Laplacian on a path: constants are in the kernel
        let t = vec![(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)];
        let a = SparseMatrix::from_triplets(2, 2, &t);
        assert!(matches!(EnvelopeFactor::factor(&a), Err(LinalgError::NotPositiveDefinite { .. })));
    }

    proptest! {
        #[test]
        fn solve_residual(nx in 2usize..12, ny in 2usize..12, shift in 0.0f64..1.0, width in 1usize..5) {
            let a = grid_laplacian(nx, ny, shift);
            let f = EnvelopeFactor::factor(&a).unwrap();
            let n = nx * ny;
            let cols: Vec<Vec<f64>> = (0..width)
                .map(|c| (0..n).map(|i| ((i * (c + 3)) as f64).sin()).collect())
                .collect();
            let mut block = vec![0.0; n * width];
            for i in 0..n {
                for c in 0..width {
                    block[i * width + c] = cols[c][f.permutation()[i]];
                }
            }
            f.solve_block_permuted(&mut block, width, 0);
            for c in 0..width {
                let mut x = vec![0.0; n];
                for i in 0..n {
                    x[f.permutation()[i]] = block[i * width + c];
                }
                let r = a.matvec(&x);
                for i in 0..n {
                    prop_assert!((r[i] - cols[c][i]).abs() < 1e-11);
                }
                let single = f.solve(&cols[c]);
                for i in 0..n {
                    prop_assert!((single[i] - x[i]).abs() < 1e-12);
                }
            }
        }
    }
}
