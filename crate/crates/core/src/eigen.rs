//! Cyclic Jacobi eigenvalue iteration for dense symmetric matrices.

/// Outcome of a Jacobi run.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiReport {
    /// Eigenvalues in ascending order.
    pub eigenvalues: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

pub const MAX_SWEEPS: usize = 100;
pub const REL_THRESHOLD: f64 = 1e-12;

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Eigenvalues of the symmetric `n × n` row-major matrix `matrix`.
///
/// Sweeps over all off-diagonal pairs, annihilating each with a plane
/// rotation, until the off-diagonal Frobenius norm falls below
/// `1e-12 · max(|trace|, ‖A‖_F)` or [`MAX_SWEEPS`] sweeps have run.
pub fn symmetric_eigenvalues(matrix: &[f64], n: usize) -> JacobiReport {
    assert_eq!(matrix.len(), n * n, "matrix must be n × n");
    let mut a = matrix.to_vec();
    let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = REL_THRESHOLD * trace.abs().max(frob);

    let mut sweeps = 0;
    let mut converged = off_diagonal_norm(&a, n) <= threshold;
    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    a[k * n + p] = new_kp;
                    a[p * n + k] = new_kp;
                    a[k * n + q] = new_kq;
                    a[q * n + k] = new_kq;
                }
            }
        }
        converged = off_diagonal_norm(&a, n) <= threshold;
    }

    let mut eigenvalues: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eigenvalues.sort_by(f64::total_cmp);
    JacobiReport {
        eigenvalues,
        sweeps,
        converged,
    }
}
