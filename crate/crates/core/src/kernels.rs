//! Kernels over document points and Gram matrix diagnostics.
//!
//! * geodesic: `K(u, v) = exp(−λ · d(u, v)^q)` with `d` the Poincaré
//!   distance; `q = 1` is the geodesic Laplacian kernel (positive definite
//!   on the ball), `q = 2` the geodesic Gaussian kernel (not positive
//!   definite in general).
//! * euclidean_rbf: `K(u, v) = exp(−λ · ‖u − v‖²)`.
//! * linear: `K(u, v) = ⟨u, v⟩`.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen;
use crate::error::{Error, Result};
use crate::gyroball::{self, BallPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    Geodesic { lambda: f64, q: f64 },
    EuclideanRbf { lambda: f64 },
    Linear,
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {v}")))
    }
}

impl KernelSpec {
    pub fn geodesic(lambda: f64, q: f64) -> Result<Self> {
        check_positive("lambda", lambda)?;
        check_positive("q", q)?;
        Ok(Self::Geodesic { lambda, q })
    }

    pub fn geodesic_laplacian(lambda: f64) -> Result<Self> {
        Self::geodesic(lambda, 1.0)
    }

    pub fn geodesic_gaussian(lambda: f64) -> Result<Self> {
        Self::geodesic(lambda, 2.0)
    }

    pub fn euclidean_rbf(lambda: f64) -> Result<Self> {
        check_positive("lambda", lambda)?;
        Ok(Self::EuclideanRbf { lambda })
    }

    pub fn linear() -> Self {
        Self::Linear
    }

    /// Kernel value on raw coordinates. Geodesic kinds assume both inputs
    /// lie in the unit ball; use [`KernelSpec::check_points`] beforehand.
    pub fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        match *self {
            Self::Geodesic { lambda, q } => {
                let d = gyroball::poincare_distance_raw(u, v);
                if d == 0.0 {
                    1.0
                } else {
                    (-lambda * d.powf(q)).exp()
                }
            }
            Self::EuclideanRbf { lambda } => (-lambda * gyroball::sq_dist(u, v)).exp(),
            Self::Linear => gyroball::dot(u, v),
        }
    }

    /// Validates that `points` are finite, share one dimension, and lie in
    /// the unit ball when the kernel is geodesic.
    pub fn check_points<P: AsRef<[f64]>>(&self, points: &[P]) -> Result<()> {
        let dim = points.first().ok_or(Error::Empty("kernel inputs"))?.as_ref().len();
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite("kernel input"));
            }
            if matches!(self, Self::Geodesic { .. }) {
                let n = gyroball::norm(p);
                if n >= 1.0 {
                    return Err(Error::OutsideBall { norm: n, radius: 1.0 });
                }
            }
        }
        Ok(())
    }

    /// True when every Gram matrix of the kernel is known to be PSD.
    pub fn is_known_mercer(&self) -> bool {
        match *self {
            Self::Geodesic { q, .. } => q <= 1.0,
            Self::EuclideanRbf { .. } | Self::Linear => true,
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Geodesic { lambda, q: 1.0 } => {
                write!(f, "geodesic-laplacian(lambda={lambda})")
            }
            Self::Geodesic { lambda, q: 2.0 } => {
                write!(f, "geodesic-gaussian(lambda={lambda})")
            }
            Self::Geodesic { lambda, q } => write!(f, "geodesic(lambda={lambda},q={q})"),
            Self::EuclideanRbf { lambda } => write!(f, "rbf(lambda={lambda})"),
            Self::Linear => f.write_str("linear"),
        }
    }
}

/// `exp(−λ · d(u, v)^q)` for two unit-ball points.
pub fn geodesic_kernel(u: &BallPoint, v: &BallPoint, lambda: f64, q: f64) -> Result<f64> {
    let spec = KernelSpec::geodesic(lambda, q)?;
    gyroball::poincare_distance(u, v)?;
    Ok(spec.eval(u.coords(), v.coords()))
}

/// Dense symmetric kernel matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    entries: Vec<f64>,
    spec: Option<KernelSpec>,
}

pub const SYMMETRY_TOL: f64 = 1e-12;

impl GramMatrix {
    /// Builds a matrix from explicit rows, checking squareness, finiteness
    /// and symmetry within [`SYMMETRY_TOL`].
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty("matrix"));
        }
        let mut entries = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: r.len(),
                });
            }
            entries.extend(r);
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        let g = Self {
            n,
            entries,
            spec: None,
        };
        let asym = g.max_asymmetry();
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spec(&self) -> Option<&KernelSpec> {
        self.spec.as_ref()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Principal submatrix on `idx` (in the given order).
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let m = idx.len();
        let mut entries = Vec::with_capacity(m * m);
        for &i in idx {
            entries.extend(idx.iter().map(|&j| self.get(i, j)));
        }
        Self {
            n: m,
            entries,
            spec: self.spec,
        }
    }
}

/// Gram matrix of ball points.
pub fn gram_matrix(points: &[BallPoint], spec: &KernelSpec) -> Result<GramMatrix> {
    let coords: Vec<&[f64]> = points.iter().map(BallPoint::coords).collect();
    gram_matrix_of(&coords, spec)
}

/// Gram matrix of raw representation vectors. Rows are filled in parallel;
/// only the upper triangle is evaluated and then mirrored.
pub fn gram_matrix_of<P: AsRef<[f64]> + Sync>(points: &[P], spec: &KernelSpec) -> Result<GramMatrix> {
    spec.check_points(points)?;
    let n = points.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let pi = points[i].as_ref();
            (i..n).map(|j| spec.eval(pi, points[j].as_ref())).collect()
        })
        .collect();
    let mut entries = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + off;
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    if entries.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("gram matrix"));
    }
    Ok(GramMatrix {
        n,
        entries,
        spec: Some(*spec),
    })
}

/// Kernel values of each query against every training point: one row per
/// query, suitable for [`crate::classify::svm_decision`].
pub fn cross_kernel<P, Q>(train: &[P], queries: &[Q], spec: &KernelSpec) -> Result<Vec<Vec<f64>>>
where
    P: AsRef<[f64]> + Sync,
    Q: AsRef<[f64]> + Sync,
{
    spec.check_points(train)?;
    if queries.is_empty() {
        return Ok(Vec::new());
    }
    spec.check_points(queries)?;
    let dim = train[0].as_ref().len();
    let qdim = queries[0].as_ref().len();
    if dim != qdim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: qdim,
        });
    }
    Ok(queries
        .par_iter()
        .map(|q| {
            let q = q.as_ref();
            train.iter().map(|t| spec.eval(t.as_ref(), q)).collect()
        })
        .collect())
}

/// Smallest eigenvalue, by cyclic Jacobi rotations.
pub fn min_eigenvalue(gram: &GramMatrix) -> Result<f64> {
    let asym = gram.max_asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    let report = eigen::symmetric_eigenvalues(&gram.entries, gram.n);
    if !report.converged {
        log::warn!(
            "jacobi iteration stopped after {} sweeps without reaching its threshold",
            report.sweeps
        );
    }
    Ok(report.eigenvalues[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdReport {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
    /// Eigenvalues at or above this value count as non-negative.
    pub threshold: f64,
}

/// PSD verdict: `min_eigenvalue ≥ −tol · max(1, trace / n)`.
pub fn psd_check(gram: &GramMatrix, tol: f64) -> Result<PsdReport> {
    let min = min_eigenvalue(gram)?;
    let scale = (gram.trace() / gram.n as f64).max(1.0);
    let threshold = -tol * scale;
    Ok(PsdReport {
        is_psd: min >= threshold,
        min_eigenvalue: min,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(c: &[f64]) -> BallPoint {
        BallPoint::unit(c.to_vec()).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(KernelSpec::geodesic(0.0, 1.0).is_err());
        assert!(KernelSpec::geodesic(1.0, -1.0).is_err());
        assert!(KernelSpec::euclidean_rbf(f64::NAN).is_err());
        assert!(KernelSpec::geodesic_laplacian(1.0).unwrap().is_known_mercer());
        assert!(!KernelSpec::geodesic_gaussian(1.0).unwrap().is_known_mercer());
    }

    #[test]
    fn geodesic_kernel_examples() {
        let u = p(&[0.3, -0.2]);
        assert_eq!(geodesic_kernel(&u, &u, 1.0, 1.0).unwrap(), 1.0);
        let o = BallPoint::origin(2);
        let v = p(&[0.5, 0.0]);
        assert_abs_diff_eq!(geodesic_kernel(&o, &v, 1.0, 1.0).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        // exp(-(ln 3)^2) evaluated at 40 digits with mpmath.
        assert_abs_diff_eq!(
            geodesic_kernel(&o, &v, 1.0, 2.0).unwrap(),
            0.299_108_480_363_034_85,
            epsilon = 1e-15
        );
        assert!(geodesic_kernel(&o, &v, 0.0, 1.0).is_err());
    }

    #[test]
    fn gram_examples() {
        let spec = KernelSpec::geodesic_laplacian(1.0).unwrap();
        let g = gram_matrix(&[p(&[0.1, 0.1])], &spec).unwrap();
        assert_eq!(g.entries(), &[1.0]);
        let g = gram_matrix(&[p(&[0.1, 0.1]), p(&[0.1, 0.1])], &spec).unwrap();
        assert_eq!(g.entries(), &[1.0, 1.0, 1.0, 1.0]);
        let g = gram_matrix(&[p(&[0.5, 0.0]), p(&[0.0, 0.5])], &KernelSpec::linear()).unwrap();
        assert_eq!(g.entries(), &[0.25, 0.0, 0.0, 0.25]);
        assert!(gram_matrix(&[], &spec).is_err());
        assert!(gram_matrix(&[p(&[0.1]), p(&[0.1, 0.0])], &spec).is_err());
    }

    #[test]
    fn geodesic_gram_rejects_points_outside_unit_ball() {
        let spec = KernelSpec::geodesic_laplacian(1.0).unwrap();
        assert!(gram_matrix_of(&[vec![1.5, 0.0]], &spec).is_err());
        assert!(gram_matrix_of(&[vec![1.5, 0.0]], &KernelSpec::linear()).is_ok());
    }

    #[test]
    fn rbf_values() {
        let spec = KernelSpec::euclidean_rbf(2.0).unwrap();
        assert_abs_diff_eq!(spec.eval(&[0.0, 0.0], &[0.3, 0.4]), (-0.5f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn min_eigenvalue_examples() {
        let id = GramMatrix::from_rows(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert_eq!(min_eigenvalue(&id).unwrap(), 1.0);
        let ones = GramMatrix::from_rows(vec![vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_abs_diff_eq!(min_eigenvalue(&ones).unwrap(), 0.0, epsilon = 1e-15);
        let m = GramMatrix::from_rows(vec![vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert_abs_diff_eq!(min_eigenvalue(&m).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn asymmetric_input_rejected() {
        assert!(matches!(
            GramMatrix::from_rows(vec![vec![1.0, 0.5], vec![0.4, 1.0]]),
            Err(Error::NotSymmetric(_))
        ));
        assert!(GramMatrix::from_rows(vec![vec![1.0, 0.5]]).is_err());
    }

    #[test]
    fn psd_examples() {
        let id = GramMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(psd_check(&id, 1e-8).unwrap().is_psd);
        let bad = GramMatrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let r = psd_check(&bad, 1e-8).unwrap();
        assert!(!r.is_psd);
        assert_abs_diff_eq!(r.min_eigenvalue, -1.0, epsilon = 1e-14);
    }

    #[test]
    fn cross_kernel_rows() {
        let spec = KernelSpec::linear();
        let rows = cross_kernel(&[vec![1.0, 0.0], vec![0.0, 2.0]], &[vec![3.0, 4.0]], &spec).unwrap();
        assert_eq!(rows, vec![vec![3.0, 8.0]]);
        assert!(cross_kernel(&[vec![1.0, 0.0]], &[vec![3.0]], &spec).is_err());
    }

    #[test]
    fn submatrix_picks_entries() {
        let g = GramMatrix::from_rows(vec![
            vec![1.0, 0.1, 0.2],
            vec![0.1, 1.0, 0.3],
            vec![0.2, 0.3, 1.0],
        ])
        .unwrap();
        let s = g.submatrix(&[2, 0]);
        assert_eq!(s.entries(), &[1.0, 0.2, 0.2, 1.0]);
    }
}
