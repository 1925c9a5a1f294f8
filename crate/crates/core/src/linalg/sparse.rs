/// Compressed sparse row matrix with sorted, duplicate-free columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Sums duplicate `(row, col)` entries. Explicit zeros are kept so the
    /// sparsity pattern does not depend on cancellation.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n_rows + 1];
        for &(r, c, _) in triplets {
            assert!(r < n_rows && c < n_cols, "triplet ({r},{c}) out of range");
            counts[r + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut entries = vec![(0usize, 0.0f64); triplets.len()];
        for &(r, c, v) in triplets {
            entries[next[r]] = (c, v);
            next[r] += 1;
        }

        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for r in 0..n_rows {
            let row = &mut entries[counts[r]..counts[r + 1]];
            // stable sort keeps duplicate summation order fixed
            row.sort_by_key(|e| e.0);
            for &(c, v) in row.iter() {
                if cols.len() > *row_ptr.last().unwrap() && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseMatrix { n_rows, n_cols, row_ptr, cols, vals }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.cols[s..e], &self.vals[s..e])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.n_rows == self.n_cols
            && (0..self.n_rows).all(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).all(|(&c, &v)| (self.get(c, r) - v).abs() <= tol)
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_sorted() {
        let m = SparseMatrix::from_triplets(
            2,
            3,
            &[(0, 2, 1.0), (0, 0, 2.0), (1, 1, 1.0), (0, 2, 0.5), (1, 1, -1.0)],
        );
        assert_eq!(m.row(0), (&[0usize, 2][..], &[2.0, 1.5][..]));
        assert_eq!(m.row(1), (&[1usize][..], &[0.0][..]));
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.matvec(&[1.0, 1.0, 2.0]), vec![5.0, 0.0]);
    }

    #[test]
    fn symmetry_check() {
        let s = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0), (0, 0, 3.0)]);
        assert!(s.is_symmetric(0.0));
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0)]);
        assert!(!a.is_symmetric(0.0));
    }
}
