use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::SizeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, o) in dst.iter_mut().zip(orow) {
                    *d += a * o;
                }
            }
        }
        out
    }

    /// `self · v`
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Square matrix checked for symmetry at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(Matrix);

impl SymmetricMatrix {
    /// Relative symmetry tolerance: `|a_ij - a_ji| <= 1e-12 * max(1, max|a|)`.
    pub const SYMMETRY_TOL: f64 = 1e-12;

    pub fn new(m: Matrix) -> Result<Self> {
        if m.rows != m.cols || m.rows == 0 {
            return Err(Error::InvalidInput(format!(
                "symmetric matrix must be square and non-empty, got {}x{}",
                m.rows, m.cols
            )));
        }
        if m.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let tol = Self::SYMMETRY_TOL * m.max_abs().max(1.0);
        for i in 0..m.rows {
            for j in i + 1..m.cols {
                if (m[(i, j)] - m[(j, i)]).abs() > tol {
                    return Err(Error::InvalidInput(format!(
                        "matrix not symmetric at ({i},{j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        Ok(Self(m))
    }

    pub fn from_rows(n: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(Matrix::from_rows(n, n, data)?)
    }

    pub fn n(&self) -> usize {
        self.0.rows
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        (0..self.n()).map(|i| self.0[(i, i)]).sum()
    }

    /// Copy with `ridge` added to the diagonal.
    pub fn with_ridge(&self, ridge: f64) -> Self {
        let mut m = self.0.clone();
        for i in 0..m.rows {
            m[(i, i)] += ridge;
        }
        Self(m)
    }
}

impl std::ops::Index<(usize, usize)> for SymmetricMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Mean of `n` row vectors of length `dim` stored contiguously.
pub fn mean_vector(rows: &[f64], dim: usize) -> Vec<f64> {
    let n = rows.len() / dim;
    let mut mean = vec![0.0; dim];
    for r in rows.chunks_exact(dim) {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    mean
}

/// Sample covariance (divisor n - 1) of contiguous row vectors, accumulated
/// in row order. Returns the mean alongside.
pub fn covariance(rows: &[f64], dim: usize) -> Result<(Vec<f64>, SymmetricMatrix)> {
    let n = rows.len() / dim;
    if n < 2 || !rows.len().is_multiple_of(dim) {
        return Err(Error::InvalidInput(format!(
            "covariance needs at least 2 observations of dimension {dim}"
        )));
    }
    let mean = mean_vector(rows, dim);
    let mut acc = vec![0.0; dim * dim];
    let mut centered = vec![0.0; dim];
    for r in rows.chunks_exact(dim) {
        for ((c, v), m) in centered.iter_mut().zip(r).zip(&mean) {
            *c = v - m;
        }
        for i in 0..dim {
            let ci = centered[i];
            if ci == 0.0 {
                continue;
            }
            let row = &mut acc[i * dim..(i + 1) * dim];
            for (a, cj) in row[i..].iter_mut().zip(&centered[i..]) {
                *a += ci * cj;
            }
        }
    }
    let denom = (n - 1) as f64;
    let mut m = Matrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let v = acc[i * dim + j] / denom;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok((mean, SymmetricMatrix::new(m)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_identity() {
        let a = Matrix::from_rows(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(Matrix::identity(2).matmul(&a), a);
        assert_eq!(a.matmul(&Matrix::identity(3)), a);
        assert_eq!(a.transpose().transpose(), a);
        assert_eq!(a.mul_vec(&[1.0, 0.0, -1.0]), vec![-2.0, -2.0]);
    }

    #[test]
    fn asymmetric_rejected() {
        assert!(SymmetricMatrix::from_rows(2, vec![1.0, 2.0, 2.1, 1.0]).is_err());
    }

    #[test]
    fn covariance_two_points() {
        let (mean, cov) = covariance(&[1.0, 0.0, 3.0, 2.0], 2).unwrap();
        assert_eq!(mean, vec![2.0, 1.0]);
        assert_eq!(cov.matrix().data(), &[2.0, 2.0, 2.0, 2.0]);
    }
}
