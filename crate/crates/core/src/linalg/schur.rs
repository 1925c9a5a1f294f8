use rayon::prelude::*;

use super::{DenseSymMatrix, EnvelopeFactor, LinalgError, Result, SparseMatrix};

const BLOCK: usize = 32;

/// Eliminates every dof not listed in `boundary`:
/// `S = K_BB − K_BI K_II⁻¹ K_IB`, with rows of `S` in the order of `boundary`.
///
/// Each column of `S` comes from its own interior solve, so the result does
/// not depend on how blocks are scheduled across threads.
pub fn schur_condense(k: &SparseMatrix, boundary: &[usize]) -> Result<DenseSymMatrix> {
    let n = k.n_rows();
    if k.n_cols() != n {
        return Err(LinalgError::DimensionMismatch { expected: n, got: k.n_cols() });
    }
    // local index of each global dof: Ok(boundary position) or Err(interior position)
    let mut local: Vec<Option<std::result::Result<usize, usize>>> = vec![None; n];
    for (p, &b) in boundary.iter().enumerate() {
        if b >= n {
            return Err(LinalgError::IndexOutOfRange { index: b, order: n });
        }
        local[b] = Some(Ok(p));
    }
    let mut interior = Vec::new();
    for g in 0..n {
        if local[g].is_none() {
            local[g] = Some(Err(interior.len()));
            interior.push(g);
        }
    }
    let local: Vec<_> = local.into_iter().map(Option::unwrap).collect();
    let nb = boundary.len();
    let ni = interior.len();

    let mut s = DenseSymMatrix::zeros(nb);
    for (p, &g) in boundary.iter().enumerate() {
        let (cols, vals) = k.row(g);
        for (&c, &v) in cols.iter().zip(vals) {
            if let Ok(q) = local[c] {
                if q <= p {
                    s.add(p, q, v);
                }
            }
        }
    }
    if ni == 0 {
        return Ok(s);
    }

    let mut triplets = Vec::new();
    for (p, &g) in interior.iter().enumerate() {
        let (cols, vals) = k.row(g);
        for (&c, &v) in cols.iter().zip(vals) {
            if let Err(q) = local[c] {
                triplets.push((p, q, v));
            }
        }
    }
    let kii = SparseMatrix::from_triplets(ni, ni, &triplets);
    let factor =
        EnvelopeFactor::factor(&kii).map_err(|e| LinalgError::SingularInterior(Box::new(e)))?;

    // Row q of K restricted to interior dofs, in factor ordering. By symmetry
    // it is both column q of K_IB and row q of K_BI.
    let coupling: Vec<Vec<(usize, f64)>> = boundary
        .iter()
        .map(|&g| {
            let (cols, vals) = k.row(g);
            cols.iter()
                .zip(vals)
                .filter_map(|(&c, &v)| local[c].err().map(|q| (factor.position(q), v)))
                .collect()
        })
        .collect();

    let starts: Vec<usize> = (0..nb).step_by(BLOCK).collect();
    let columns: Vec<Vec<(usize, Vec<f64>)>> = starts
        .par_iter()
        .map(|&c0| {
            let width = BLOCK.min(nb - c0);
            let mut x = vec![0.0; ni * width];
            let mut start = ni;
            for (c, list) in coupling[c0..c0 + width].iter().enumerate() {
                for &(row, v) in list {
                    x[row * width + c] = v;
                    start = start.min(row);
                }
            }
            if start == ni {
                start = 0;
            }
            factor.solve_block_permuted(&mut x, width, start);
            (0..width)
                .map(|c| {
                    let q = c0 + c;
                    // entries S[p][q] for p >= q
                    let col: Vec<f64> = (q..nb)
                        .map(|p| {
                            coupling[p]
                                .iter()
                                .map(|&(row, v)| v * x[row * width + c])
                                .sum::<f64>()
                        })
                        .collect();
                    (q, col)
                })
                .collect()
        })
        .collect();

    for block in columns {
        for (q, col) in block {
            for (off, v) in col.into_iter().enumerate() {
                s.add(q + off, q, -v);
            }
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn chain(n: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for e in 0..n - 1 {
            t.extend([(e, e, 1.0), (e + 1, e + 1, 1.0), (e, e + 1, -1.0), (e + 1, e, -1.0)]);
        }
        SparseMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn empty_interior_returns_boundary_block() {
        let k = chain(3);
        let s = schur_condense(&k, &[2, 0, 1]).unwrap();
        assert_eq!(s.get(0, 0), 1.0);
        assert_eq!(s.get(1, 1), 1.0);
        assert_eq!(s.get(2, 2), 2.0);
        assert_eq!(s.get(0, 1), 0.0);
        assert_eq!(s.get(2, 0), -1.0);
    }

    #[test]
    fn three_node_chain() {
        let s = schur_condense(&chain(3), &[0, 2]).unwrap();
        assert_abs_diff_eq!(s.get(0, 0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.get(1, 0), -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.get(1, 1), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn long_chain_is_series_resistance() {
        let n = 101;
        let s = schur_condense(&chain(n), &[0, n - 1]).unwrap();
        assert_abs_diff_eq!(s.get(0, 0), 1.0 / (n - 1) as f64, epsilon = 1e-13);
        assert_abs_diff_eq!(s.get(1, 0), -1.0 / (n - 1) as f64, epsilon = 1e-13);
    }

    #[test]
    fn singular_interior_is_reported() {
        // node 1 is disconnected from the boundary and has no diagonal
        let t = vec![(0, 0, 1.0), (2, 2, 1.0), (0, 2, -1.0), (2, 0, -1.0), (1, 1, 0.0)];
        let k = SparseMatrix::from_triplets(3, 3, &t);
        assert!(matches!(schur_condense(&k, &[0, 2]), Err(LinalgError::SingularInterior(_))));
    }

    #[test]
    fn matches_dense_elimination_on_grid() {
        // 6×5 Neumann grid Laplacian with the left and right columns as boundary
        let (nx, ny) = (6, 5);
        let idx = |i: usize, j: usize| j * nx + i;
        let mut t = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let mut edge = |a: usize, b: usize| {
                    t.extend([(a, a, 1.0), (b, b, 1.0), (a, b, -1.0), (b, a, -1.0)]);
                };
                if i + 1 < nx {
                    edge(idx(i, j), idx(i + 1, j));
                }
                if j + 1 < ny {
                    edge(idx(i, j), idx(i, j + 1));
                }
            }
        }
        let k = SparseMatrix::from_triplets(nx * ny, nx * ny, &t);
        let boundary: Vec<usize> =
            (0..ny).map(|j| idx(0, j)).chain((0..ny).map(|j| idx(nx - 1, j))).collect();
        let s = schur_condense(&k, &boundary).unwrap();

        // oracle: Gaussian elimination of interior nodes one at a time on a dense copy
        let n = nx * ny;
        let mut a: Vec<Vec<f64>> = (0..n).map(|r| (0..n).map(|c| k.get(r, c)).collect()).collect();
        for p in 0..n {
            if boundary.contains(&p) {
                continue;
            }
            let piv = a[p][p];
            for r in 0..n {
                if r == p || a[r][p] == 0.0 {
                    continue;
                }
                let f = a[r][p] / piv;
                for c in 0..n {
                    a[r][c] -= f * a[p][c];
                }
            }
        }
        for (p, &gp) in boundary.iter().enumerate() {
            for (q, &gq) in boundary.iter().enumerate() {
                assert_abs_diff_eq!(s.get(p, q), a[gp][gq], epsilon = 1e-12);
            }
            let row_sum: f64 = (0..boundary.len()).map(|q| s.get(p, q)).sum();
            assert!(row_sum.abs() < 1e-12);
        }
    }
}
