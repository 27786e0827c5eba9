//! Small dense linear solves with rank detection.
//!
//! Pattern systems are at most `2n + 2` square, so a plain row-echelon
//! reduction with partial pivoting is enough. Pivots are compared against
//! `PIVOT_TOL` scaled by the largest matrix entry, so that a system and its
//! rescaled copy classify the same way.

/// Relative pivot threshold below which a column is treated as dependent.
pub const PIVOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum LinearSolution {
    Unique(Vec<f64>),
    /// Rank deficient but consistent: a continuum of solutions.
    Underdetermined,
    /// Rank deficient and inconsistent: no solution.
    Inconsistent,
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut m = DenseMatrix::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Solves `self · x = rhs`, consuming both.
    pub fn solve(mut self, mut rhs: Vec<f64>) -> LinearSolution {
        let n = self.n;
        assert_eq!(rhs.len(), n);
        let scale = self.max_abs();
        if scale == 0.0 {
            return if rhs.iter().all(|v| *v == 0.0) {
                LinearSolution::Underdetermined
            } else {
                LinearSolution::Inconsistent
            };
        }
        let tol = PIVOT_TOL * scale;
        let rhs_scale = rhs.iter().fold(scale, |m, v| m.max(v.abs()));

        // Row echelon form; `pivots[r]` is the column pivoted in row r.
        let mut pivots = Vec::with_capacity(n);
        let mut row = 0;
        for col in 0..n {
            if row == n {
                break;
            }
            let (best, best_abs) = (row..n)
                .map(|r| (r, self.get(r, col).abs()))
                .fold((row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best_abs <= tol {
                continue;
            }
            if best != row {
                for j in 0..n {
                    self.data.swap(row * n + j, best * n + j);
                }
                rhs.swap(row, best);
            }
            let p = self.get(row, col);
            for r in row + 1..n {
                let factor = self.get(r, col) / p;
                if factor == 0.0 {
                    continue;
                }
                self.set(r, col, 0.0);
                for j in col + 1..n {
                    let v = self.get(row, j);
                    self.add(r, j, -factor * v);
                }
                rhs[r] -= factor * rhs[row];
            }
            pivots.push(col);
            row += 1;
        }

        if pivots.len() < n {
            let consistent = rhs[pivots.len()..]
                .iter()
                .all(|v| v.abs() <= PIVOT_TOL * rhs_scale);
            return if consistent {
                LinearSolution::Underdetermined
            } else {
                LinearSolution::Inconsistent
            };
        }

        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            for (j, xj) in x.iter().enumerate().skip(i + 1) {
                acc -= self.get(i, j) * xj;
            }
            x[i] = acc / self.get(i, i);
        }
        LinearSolution::Unique(x)
    }

    pub fn det_2x2(&self) -> f64 {
        assert_eq!(self.n, 2);
        self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0)
    }
}
