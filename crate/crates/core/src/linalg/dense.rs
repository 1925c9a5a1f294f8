use super::{LinalgError, Result};

/// Symmetric matrix stored as its packed lower triangle, row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymMatrix {
    n: usize,
    data: Vec<f64>,
}

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    i * (i + 1) / 2 + j
}

impl DenseSymMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseSymMatrix { n, data: vec![0.0; n * (n + 1) / 2] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds from `f(i, j)` evaluated on the lower triangle only.
    pub fn from_lower_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                data.push(f(i, j));
            }
        }
        DenseSymMatrix { n, data }
    }

    /// Reads the lower triangle of a square row list; the upper part is ignored.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(LinalgError::DimensionMismatch { expected: n, got: r.len() });
            }
        }
        Ok(Self::from_lower_fn(n, |i, j| rows[i][j]))
    }

    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[packed(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[packed(i, j)] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[packed(i, j)] += v;
    }

    /// Row `i` of the lower triangle: entries `(i, 0..=i)`.
    pub fn lower_row(&self, i: usize) -> &[f64] {
        let s = i * (i + 1) / 2;
        &self.data[s..s + i + 1]
    }

    pub fn lower_row_mut(&mut self, i: usize) -> &mut [f64] {
        let s = i * (i + 1) / 2;
        &mut self.data[s..s + i + 1]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = self.lower_row(i);
            let mut acc = 0.0;
            for j in 0..i {
                acc += row[j] * x[j];
                y[j] += row[j] * x[i];
            }
            y[i] += acc + row[i] * x[i];
        }
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        let mut sums = vec![0.0; self.n];
        for i in 0..self.n {
            let row = self.lower_row(i);
            for j in 0..i {
                sums[i] += row[j].abs();
                sums[j] += row[j].abs();
            }
            sums[i] += row[i].abs();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn to_full(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Index of the first structurally nonzero entry in each lower row.
    pub fn row_envelope(&self) -> Vec<usize> {
        (0..self.n)
            .map(|i| self.lower_row(i).iter().position(|&v| v != 0.0).unwrap_or(i))
            .collect()
    }
}

/// Cholesky factor `L` with `L Lᵀ = A`, stored packed with its row envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerFactor {
    l: DenseSymMatrix,
    first: Vec<usize>,
}

/// Row-oriented Cholesky. Zeros ahead of each row's first nonzero stay zero in
/// `L`, so banded and cyclic-banded inputs factor in linear time.
pub fn cholesky(a: &DenseSymMatrix) -> Result<LowerFactor> {
    let n = a.order();
    let first = a.row_envelope();
    let mut l = DenseSymMatrix::zeros(n);
    for i in 0..n {
        let fi = first[i];
        for j in fi..=i {
            let start = fi.max(first[j]);
            let mut s = a.get(i, j);
            {
                let (ri, rj) = (l.lower_row(i), l.lower_row(j));
                for k in start..j {
                    s -= ri[k] * rj[k];
                }
            }
            if j == i {
                if !(s > 0.0) {
                    return Err(LinalgError::NotPositiveDefinite { pivot: i, value: s });
                }
                l.set(i, i, s.sqrt());
            } else {
                let v = s / l.get(j, j);
                l.set(i, j, v);
            }
        }
    }
    Ok(LowerFactor { l, first })
}

impl LowerFactor {
    pub fn order(&self) -> usize {
        self.l.order()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.l.get(i, j)
        }
    }

    pub fn first_nonzero(&self, i: usize) -> usize {
        self.first[i]
    }

    /// Overwrites `b` with `L⁻¹ b`.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        let n = self.order();
        let start = b.iter().position(|&v| v != 0.0).unwrap_or(n);
        for i in start..n {
            let row = self.l.lower_row(i);
            let mut s = b[i];
            for k in self.first[i].max(start)..i {
                s -= row[k] * b[k];
            }
            b[i] = s / row[i];
        }
    }

    /// Overwrites `b` with `L⁻ᵀ b`.
    pub fn solve_upper_in_place(&self, b: &mut [f64]) {
        for i in (0..self.order()).rev() {
            let row = self.l.lower_row(i);
            let xi = b[i] / row[i];
            b[i] = xi;
            for k in self.first[i]..i {
                b[k] -= row[k] * xi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_lower_in_place(&mut x);
        self.solve_upper_in_place(&mut x);
        x
    }

    /// `L Lᵀ`, for checking the factorization.
    pub fn reconstruct(&self) -> DenseSymMatrix {
        let n = self.order();
        DenseSymMatrix::from_lower_fn(n, |i, j| {
            let (ri, rj) = (self.l.lower_row(i), self.l.lower_row(j));
            (0..=j).map(|k| ri[k] * rj[k]).sum()
        })
    }
}
