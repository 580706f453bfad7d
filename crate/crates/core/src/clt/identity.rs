//! Closed-form asymptotic moments for the `R M = I` case with the test
//! functions g1(x) = x and g2(x) = x^2, in terms of the population summaries
//! (b_R, c_R), the ratio y, and the elliptical fourth-moment parameter tau.
//!
//! Means:
//!   E X_{g1} = (b_R - y) / 2
//!   E X_{g2} = -(3/2) y^2 + (tau - 5) y + 2 b_R + (3/2) b_R y
//! Variances and covariance:
//!   Var X_{g1} = 2 c_R - 2 y
//!   Var X_{g2} = 4 y^2 + 8 (1+y)^2 (c_R - y)
//!   Cov        = 4 (1+y) (c_R - y)
//!
//! At R = I (b_R = c_R = y) these reduce to (0, (tau-3) y) and
//! (0, 4 y^2, 0).

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use nalgebra::DMatrix;

/// Asymptotic means and covariance matrix of a vector of LSS, with contour
/// diagnostics when produced by quadrature.
#[derive(Debug, Clone)]
pub struct CltMoments<T: Real> {
    pub means: Vec<T>,
    pub cov: DMatrix<T>,
    /// max |imaginary part| seen across contour integrals (0 for closed forms)
    pub imag_max: T,
    /// true if the covariance needed a PSD clamp beyond -1e-8
    pub clamped: bool,
}

impl<T: Real> CltMoments<T> {
    /// Symmetrize, check the diagonal, and clamp tiny negative eigenvalues.
    pub fn finalize(mut means: Vec<T>, mut cov: DMatrix<T>, imag_max: T) -> Result<Self> {
        let k = cov.nrows();
        if cov.ncols() != k || means.len() != k {
            return Err(Error::InvalidDimension("moment dimensions disagree".into()));
        }
        let mut asym = T::zero();
        for i in 0..k {
            for j in (i + 1)..k {
                let d = (cov[(i, j)] - cov[(j, i)]).abs();
                if d > asym {
                    asym = d;
                }
                let v = (cov[(i, j)] + cov[(j, i)]) * lit::<T>(0.5);
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        if asym > lit::<T>(1e-8) {
            return Err(Error::Precision(format!(
                "covariance asymmetry {:?} exceeds 1e-8",
                asym.to_f64()
            )));
        }
        let mut clamped = false;
        for i in 0..k {
            let d = cov[(i, i)];
            if d < T::zero() {
                if d < lit::<T>(-1e-8) {
                    return Err(Error::ModelInconsistency(format!(
                        "negative variance {:?}",
                        d.to_f64()
                    )));
                }
                cov[(i, i)] = T::zero();
                clamped = true;
            }
        }
        for m in means.iter_mut() {
            *m += T::zero();
        }
        Ok(Self { means, cov, imag_max, clamped })
    }
}

/// Closed-form moments for (g1, g2) = (x, x^2) at R M = I. The first summary
/// argument is accepted for interface compatibility but the means depend only
/// on (b_R, y, tau); see the module docs.
pub fn identity_case_moments<T: Real>(
    _a_r: T,
    b_r: T,
    c_r: T,
    y: T,
    tau: T,
) -> Result<CltMoments<T>> {
    if y <= T::zero() {
        return Err(Error::Configuration("ratio y must be positive".into()));
    }
    let half = lit::<T>(0.5);
    let e1 = (b_r - y) * half;
    let e2 = -lit::<T>(1.5) * y * y + (tau - lit::<T>(5.0)) * y + lit::<T>(2.0) * b_r
        + lit::<T>(1.5) * b_r * y;
    let v1 = lit::<T>(2.0) * (c_r - y);
    let one_y = T::one() + y;
    let v2 = lit::<T>(4.0) * y * y + lit::<T>(8.0) * one_y * one_y * (c_r - y);
    let c12 = lit::<T>(4.0) * one_y * (c_r - y);
    let cov = DMatrix::from_row_slice(2, 2, &[v1, c12, c12, v2]);
    CltMoments::finalize(vec![e1, e2], cov, T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_r_values() {
        // R = I inputs (b = c = y), tau = 2, y = 0.5: means (0, -0.5), cov diag (0, 1)
        let y = 0.5;
        let m = identity_case_moments(2.0 * y, y, y, y, 2.0).unwrap();
        assert_abs_diff_eq!(m.means[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.means[1], -0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(m.cov[(0, 0)], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.cov[(1, 1)], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.cov[(0, 1)], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn covariance_sign_tracks_c_minus_y() {
        // c_R >= y always (unit diagonal); covariance vanishes exactly at c..= y
        let m = identity_case_moments(1.0, 0.6, 0.9, 0.5, 2.0).unwrap();
        assert!(m.cov[(0, 1)] > 0.0);
        let m = identity_case_moments(1.0, 0.6, 0.5, 0.5, 2.0).unwrap();
        assert_abs_diff_eq!(m.cov[(0, 1)], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn tau_shifts_only_the_quadratic_mean() {
        let m0 = identity_case_moments(1.0, 0.8, 0.9, 0.5, 0.0).unwrap();
        let m2 = identity_case_moments(1.0, 0.8, 0.9, 0.5, 2.0).unwrap();
        assert_abs_diff_eq!(m0.means[0], m2.means[0], epsilon = 1e-14);
        assert_abs_diff_eq!(m2.means[1] - m0.means[1], 2.0 * 0.5, epsilon = 1e-14);
        assert_eq!(m0.cov, m2.cov);
    }
}
