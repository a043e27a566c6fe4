//! Dense solves shared by the SBT and reference systems.

use crate::error::{Result, SbtError};
use ndarray::{Array1, Array2};
use ndarray_linalg::{Factorize, LUFactorized, LeastSquaresSvd, OperationNorm, Solve};

/// Systems whose estimated 1-norm condition number exceeds this are refused.
pub const MAX_CONDITION: f64 = 1e12;

/// LU factorization with a 1-norm condition estimate.
pub struct DenseLu {
    lu: LUFactorized<ndarray::OwnedRepr<f64>>,
    condition: f64,
    dim: usize,
}

impl std::fmt::Debug for DenseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DenseLu").field("dim", &self.dim).field("condition", &self.condition).finish()
    }
}

impl DenseLu {
    /// Factor `a`, failing with [`SbtError::Singular`] when the estimated
    /// condition number exceeds [`MAX_CONDITION`]. `hint` names the likely
    /// cause in that error.
    pub fn factor(a: &Array2<f64>, hint: &str) -> Result<Self> {
        let lu = Self::factor_unchecked(a)?;
        if !(lu.condition <= MAX_CONDITION) {
            return Err(SbtError::Singular { condition: lu.condition, hint: hint.to_string() });
        }
        Ok(lu)
    }

    pub fn factor_unchecked(a: &Array2<f64>) -> Result<Self> {
        assert_eq!(a.nrows(), a.ncols());
        let dim = a.nrows();
        if a.iter().any(|x| !x.is_finite()) {
            return Err(SbtError::Linalg("matrix has non-finite entries".into()));
        }
        let anorm = a.opnorm_one().map_err(linalg_err)?;
        let lu = match a.factorize() {
            Ok(lu) => lu,
            Err(_) => {
                return Ok(Self { lu: Array2::<f64>::eye(dim).factorize().map_err(linalg_err)?, condition: f64::INFINITY, dim });
            }
        };
        let mut out = Self { lu, condition: f64::INFINITY, dim };
        out.condition = anorm * out.inverse_norm_estimate()?;
        Ok(out)
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if !self.condition.is_finite() {
            return Err(SbtError::Singular { condition: self.condition, hint: "exactly singular".into() });
        }
        let x = self.lu.solve(&Array1::from(b.to_vec())).map_err(linalg_err)?;
        Ok(x.to_vec())
    }

    /// Hager's estimate of `||A^{-1}||_1` with Higham's extra test vector.
    fn inverse_norm_estimate(&self) -> Result<f64> {
        let n = self.dim;
        if n == 0 {
            return Ok(0.0);
        }
        let mut x = Array1::from_elem(n, 1.0 / n as f64);
        let mut est = 0.0;
        let mut last = usize::MAX;
        for _ in 0..5 {
            let y = self.lu.solve(&x).map_err(linalg_err)?;
            est = y.iter().map(|v| v.abs()).sum::<f64>();
            let xi = y.mapv(|v| if v >= 0.0 { 1.0 } else { -1.0 });
            let z = self.lu.solve_t(&xi).map_err(linalg_err)?;
            let (j, zmax) = z
                .iter()
                .enumerate()
                .fold((0, 0.0), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
            if zmax <= z.dot(&x) || j == last {
                break;
            }
            last = j;
            x.fill(0.0);
            x[j] = 1.0;
        }
        let alt = Array1::from_shape_fn(n, |i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * (1.0 + i as f64 / (n.max(2) - 1) as f64)
        });
        let y = self.lu.solve(&alt).map_err(linalg_err)?;
        let alt_est = 2.0 * y.iter().map(|v| v.abs()).sum::<f64>() / (3.0 * n as f64);
        let est = est.max(alt_est);
        Ok(if est.is_finite() { est } else { f64::INFINITY })
    }
}

/// Minimum-norm least-squares solution via SVD, with the 2-norm condition
/// number of `a` (infinite when rank deficient).
pub fn least_squares(a: &Array2<f64>, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let res = a.least_squares(&Array1::from(b.to_vec())).map_err(linalg_err)?;
    let sv = &res.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let full_rank = res.rank as usize == a.nrows().min(a.ncols());
    let condition = if full_rank && smin > 0.0 { smax / smin } else { f64::INFINITY };
    Ok((res.solution.to_vec(), condition))
}

fn linalg_err(e: ndarray_linalg::error::LinalgError) -> SbtError {
    SbtError::Linalg(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solves_and_estimates_condition_of_diagonal() {
        let a = Array2::from_diag(&Array1::from(vec![1.0, 2.0, 1e-3, 4.0]));
        let lu = DenseLu::factor(&a, "test").unwrap();
        assert_relative_eq!(lu.condition(), 4.0 / 1e-3, max_relative = 1e-12);
        let x = lu.solve(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_relative_eq!(x[2], 3000.0, max_relative = 1e-12);
    }

    #[test]
    fn estimate_brackets_exact_condition() {
        // Hilbert-like matrix with a known dense inverse
        let n = 6;
        let a = Array2::from_shape_fn((n, n), |(i, j)| 1.0 / (i + j + 1) as f64 + if i == j { 0.5 } else { 0.0 });
        let lu = DenseLu::factor(&a, "test").unwrap();
        let mut inv = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = lu.solve(&e).unwrap();
            for i in 0..n {
                inv[[i, j]] = col[i];
            }
        }
        let exact = a.opnorm_one().unwrap() * inv.opnorm_one().unwrap();
        assert!(lu.condition() <= exact * (1.0 + 1e-12));
        assert!(lu.condition() >= exact / 3.0);
    }

    #[test]
    fn singular_is_reported() {
        let a = Array2::from_shape_vec((2, 2), vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(DenseLu::factor(&a, "rank one"), Err(SbtError::Singular { .. })));
        let b = Array2::from_shape_vec((2, 2), vec![1.0, 0.0, 0.0, 1e-14]).unwrap();
        assert!(matches!(DenseLu::factor(&b, "tiny pivot"), Err(SbtError::Singular { .. })));
    }

    #[test]
    fn least_squares_overdetermined() {
        let a = Array2::from_shape_vec((3, 2), vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let (x, cond) = least_squares(&a, &[1.0, 2.0, 3.0]).unwrap();
        assert_relative_eq!(x[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(x[1], 2.0, max_relative = 1e-12);
        assert_relative_eq!(cond, 3f64.sqrt(), max_relative = 1e-12);
    }
}
