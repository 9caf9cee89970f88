use super::matrix::{Matrix, SymmetricMatrix};
use crate::error::{Error, Result};

/// Convergence threshold on the off-diagonal Frobenius norm, relative to the
/// Frobenius norm of the input.
pub const OFF_DIAGONAL_TOL: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct Eigen {
    /// Descending.
    pub values: Vec<f64>,
    /// Column `j` is the unit eigenvector of `values[j]`, with its
    /// largest-magnitude component positive.
    pub vectors: Matrix,
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigensolver.
pub fn symmetric_eig(m: &SymmetricMatrix) -> Result<Eigen> {
    let n = m.n();
    let mut a = m.matrix().clone();
    let mut v = Matrix::identity(n);
    let norm = a.data().iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = OFF_DIAGONAL_TOL * norm;

    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    let nkp = c * akp - s * akq;
                    let nkq = s * akp + c * akq;
                    a[(k, p)] = nkp;
                    a[(p, k)] = nkp;
                    a[(k, q)] = nkq;
                    a[(q, k)] = nkq;
                }
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > tol {
        return Err(Error::Numerical(format!(
            "Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        let mut lead = 0;
        for k in 1..n {
            if col[k].abs() > col[lead].abs() {
                lead = k;
            }
        }
        if col[lead] < 0.0 {
            col.iter_mut().for_each(|x| *x = -*x);
        }
        for (k, x) in col.into_iter().enumerate() {
            vectors[(k, dst)] = x;
        }
    }
    Ok(Eigen { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity() {
        let m = SymmetricMatrix::new(Matrix::identity(3)).unwrap();
        let e = symmetric_eig(&m).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_axis_aligned() {
        let m = SymmetricMatrix::from_rows(2, vec![1.0, 0.0, 0.0, 3.0]).unwrap();
        let e = symmetric_eig(&m).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert_eq!(e.vectors.column(0), vec![0.0, 1.0]);
        assert_eq!(e.vectors.column(1), vec![1.0, 0.0]);
    }

    #[test]
    fn zero_matrix() {
        let m = SymmetricMatrix::new(Matrix::zeros(4, 4)).unwrap();
        let e = symmetric_eig(&m).unwrap();
        assert!(e.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn residuals_and_orthonormality() {
        let n = 12;
        let mut rs = crate::numerics::RandomSource::new(11);
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let x = rs.next_gaussian();
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        let sm = SymmetricMatrix::new(m.clone()).unwrap();
        let e = symmetric_eig(&sm).unwrap();
        let vt_v = e.vectors.transpose().matmul(&e.vectors);
        assert!(vt_v.max_abs_diff(&Matrix::identity(n)) <= 1e-9);
        let mnorm = m.max_abs();
        for j in 0..n {
            let v = e.vectors.column(j);
            let mv = m.mul_vec(&v);
            let res: f64 = mv
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - e.values[j] * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(res <= 1e-9 * mnorm, "residual {res}");
        }
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }
}
