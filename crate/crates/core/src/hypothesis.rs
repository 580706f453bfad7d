//! The tests of H0: R = R0 built on T1 = tr(Rhat R0^{-1} - I)^2 and
//! T2 = tr(Rhat - R0)^2, their asymptotic null parameters, the joint
//! correlation of the standardized pair, and the max-statistic critical
//! value.
//!
//! Under H0 the matrix behind T1 is Rhat R0^{-1} (R M = I), so its
//! parameters come from the closed identity-case moments; T2 mixes the
//! M = I and M = R0 spectra and is calibrated through the general kernels:
//! writing T2 = L_{x^2}(M=I) - 2 L_x(M=R0) + tr(R0^2) and subtracting the
//! exact centerings leaves
//!   mu2    = p y + E X_{x^2}^{(I)} - 2 E X_x^{(R0)},
//!   sigma2^2 = Var X_{x^2}^{(I)} + 4 Var X_x^{(R0)} - 4 Cov(X_{x^2}^{(I)}, X_x^{(R0)}).

use crate::clt::{
    clt_cov, clt_cov_cross, clt_mean, cov_contour_pair, identity_case_moments, mean_contour,
    CltContext, Structure,
};
use crate::correlation::{sample_correlation, sample_covariance, summary_sums, RescaledSpec};
use crate::error::{Error, Result};
use crate::population::SampleBatch;
use crate::probability::{bvn_rectangle, normal_cdf, normal_quantile};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Null-distribution parameters of (T1, T2) and the combined test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NullParams {
    pub mu1: f64,
    pub var1: f64,
    pub mu2: f64,
    pub var2: f64,
    pub lambda: f64,
    pub t_alpha: f64,
    pub alpha: f64,
    /// true when R0 = I, where T1 and T2 coincide and the joint law is
    /// degenerate (lambda = 1)
    pub degenerate: bool,
}

/// Outcome of the combined test on one batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestReport {
    pub t1: f64,
    pub t2: f64,
    pub z1: f64,
    pub z2: f64,
    pub tm: f64,
    pub reject: bool,
    pub p_value_t1: f64,
    pub p_value_t2: f64,
    pub null_params: NullParams,
}

fn sym_half_inverse(r0: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let es = r0.clone().symmetric_eigen();
    if es.eigenvalues.min() <= 0.0 {
        return Err(Error::IllConditioned("R0 is not positive-definite".into()));
    }
    let p = r0.nrows();
    let mut qd = es.eigenvectors.clone();
    for j in 0..p {
        let s = 1.0 / es.eigenvalues[j].sqrt();
        for i in 0..p {
            qd[(i, j)] *= s;
        }
    }
    Ok(&qd * es.eigenvectors.transpose())
}

fn sym_sqrt(r0: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let es = r0.clone().symmetric_eigen();
    if es.eigenvalues.min() <= 0.0 {
        return Err(Error::IllConditioned("R0 is not positive-definite".into()));
    }
    let p = r0.nrows();
    let mut qd = es.eigenvectors.clone();
    for j in 0..p {
        let s = es.eigenvalues[j].sqrt();
        for i in 0..p {
            qd[(i, j)] *= s;
        }
    }
    Ok(&qd * es.eigenvectors.transpose())
}

/// `T1 = tr((Rhat R0^{-1} - I)^2)`, via the symmetric conjugation
/// `R0^{-1/2} Rhat R0^{-1/2}`.
pub fn t1_statistic(rhat: &DMatrix<f64>, r0: &DMatrix<f64>) -> Result<f64> {
    if rhat.nrows() != r0.nrows() {
        return Err(Error::InvalidDimension("Rhat and R0 dimensions differ".into()));
    }
    let rih = sym_half_inverse(r0)?;
    let b = &rih * rhat * &rih;
    let p = r0.nrows();
    let mut acc = 0.0;
    for i in 0..p {
        for j in 0..p {
            let v = b[(i, j)] - if i == j { 1.0 } else { 0.0 };
            acc += v * v;
        }
    }
    Ok(acc)
}

/// `T2 = tr((Rhat - R0)^2) = ||Rhat - R0||_F^2`.
pub fn t2_statistic(rhat: &DMatrix<f64>, r0: &DMatrix<f64>) -> Result<f64> {
    if rhat.nrows() != r0.nrows() {
        return Err(Error::InvalidDimension("Rhat and R0 dimensions differ".into()));
    }
    Ok((rhat - r0).norm_squared())
}

/// Shared calibration machinery: contexts for M = R0^{-1}, I, R0 built once.
pub struct NullCalibration {
    pub r0: DMatrix<f64>,
    pub params: NullParams,
    r0_inv_half: DMatrix<f64>,
    q975: f64,
}

/// Options controlling the contour quadrature inside the calibration.
#[derive(Debug, Clone, Copy)]
pub struct CalibrationOpts {
    pub mean_nodes: usize,
    pub cov_nodes: usize,
    pub v0: f64,
    pub inflation: f64,
}

impl Default for CalibrationOpts {
    fn default() -> Self {
        Self { mean_nodes: 1024, cov_nodes: 384, v0: 0.6, inflation: 0.1 }
    }
}

struct Moments {
    e1: f64,
    e2: f64,
    v1: f64,
    v2: f64,
    c12: f64,
}

fn moments_via_kernels(ctx: &CltContext<f64>, opts: &CalibrationOpts) -> Result<Moments> {
    let sup = ctx.require_support()?;
    let contour = mean_contour(&sup, ctx.y, 0.5, opts.mean_nodes, opts.inflation)?;
    let gx = |z: Complex64| z;
    let gx2 = |z: Complex64| z * z;
    let e1 = clt_mean(gx, ctx, &contour)?.0;
    let e2 = clt_mean(gx2, ctx, &contour)?.0;
    let (c1, c2) = cov_contour_pair(&sup, &sup, opts.v0, opts.cov_nodes, opts.inflation)?;
    let v1 = clt_cov(gx, gx, ctx, &c1, &c2)?.0;
    let v2 = clt_cov(gx2, gx2, ctx, &c1, &c2)?.0;
    let c12 = clt_cov(gx, gx2, ctx, &c1, &c2)?.0;
    Ok(Moments { e1, e2, v1, v2, c12 })
}

/// (mu1, var1) of T1 under H0. The elliptical path uses the closed
/// identity-case moments of R0; the linear path evaluates the general
/// kernels at M = R0^{-1}.
pub fn t1_null_params(
    p: usize,
    n: usize,
    r0: &DMatrix<f64>,
    structure: Structure<f64>,
) -> Result<(f64, f64)> {
    t1_null_params_with_g(p, n, r0, None, structure)
}

/// As [`t1_null_params`] with an explicit population factor G (G G^T = R0);
/// the factor matters for the linear structure, whose kernels depend on the
/// entries of G beyond R0.
pub fn t1_null_params_with_g(
    p: usize,
    n: usize,
    r0: &DMatrix<f64>,
    g: Option<&DMatrix<f64>>,
    structure: Structure<f64>,
) -> Result<(f64, f64)> {
    let y = p as f64 / (n - 1) as f64;
    let (e1, e2, v1, v2, c12) = match structure {
        Structure::Elliptical { tau } => {
            let (sa, sb, sc) = summary_sums(r0)?;
            let scale = y / p as f64;
            let m = identity_case_moments(sa * scale, sb * scale, sc * scale, y, tau)?;
            (m.means[0], m.means[1], m.cov[(0, 0)], m.cov[(1, 1)], m.cov[(0, 1)])
        }
        Structure::Linear { .. } => {
            let g_own;
            let g_ref = match g {
                Some(g) => g,
                None => {
                    g_own = sym_sqrt(r0)?;
                    &g_own
                }
            };
            let ctx = ctx_with_m(r0, g_ref, MKind::InverseR0, y, structure)?;
            let mm = moments_via_kernels(&ctx, &CalibrationOpts::default())?;
            (mm.e1, mm.e2, mm.v1, mm.v2, mm.c12)
        }
    };
    let mu1 = p as f64 * y - 2.0 * e1 + e2;
    let var1 = v2 + 4.0 * v1 - 4.0 * c12;
    if var1 < -1e-6 {
        return Err(Error::ModelInconsistency(format!("negative var1 = {var1}")));
    }
    Ok((mu1, var1.max(0.0)))
}

enum MKind {
    Identity,
    R0,
    InverseR0,
}

fn ctx_with_m(
    r0: &DMatrix<f64>,
    g: &DMatrix<f64>,
    kind: MKind,
    y: f64,
    structure: Structure<f64>,
) -> Result<CltContext<f64>> {
    let g = g.clone();
    let p = r0.nrows();
    let m = match kind {
        MKind::Identity => RescaledSpec::identity(p),
        MKind::R0 => RescaledSpec::new(r0.clone())?,
        MKind::InverseR0 => {
            let inv = sym_half_inverse(r0)?;
            RescaledSpec::new(&inv * &inv)?
        }
    };
    CltContext::new(r0.clone(), m, g, y, structure)
}

/// (mu2, var2) of T2 under H0 via the general kernels at M = I and M = R0.
pub fn t2_null_params(
    p: usize,
    n: usize,
    r0: &DMatrix<f64>,
    structure: Structure<f64>,
    opts: &CalibrationOpts,
) -> Result<(f64, f64)> {
    t2_null_params_with_g(p, n, r0, None, structure, opts)
}

pub fn t2_null_params_with_g(
    p: usize,
    n: usize,
    r0: &DMatrix<f64>,
    g: Option<&DMatrix<f64>>,
    structure: Structure<f64>,
    opts: &CalibrationOpts,
) -> Result<(f64, f64)> {
    let y = p as f64 / (n - 1) as f64;
    if is_identity(r0) {
        return t1_null_params_with_g(p, n, r0, g, structure);
    }
    let g_own;
    let g_ref = match g {
        Some(g) => g,
        None => {
            g_own = sym_sqrt(r0)?;
            &g_own
        }
    };
    let ctx_i = ctx_with_m(r0, g_ref, MKind::Identity, y, structure)?;
    let ctx_r0 = ctx_with_m(r0, g_ref, MKind::R0, y, structure)?;
    let gx = |z: Complex64| z;
    let gx2 = |z: Complex64| z * z;

    let sup_i = ctx_i.require_support()?;
    let sup_r0 = ctx_r0.require_support()?;
    let contour_i = mean_contour(&sup_i, y, 0.5, opts.mean_nodes, opts.inflation)?;
    let contour_r0 = mean_contour(&sup_r0, y, 0.5, opts.mean_nodes, opts.inflation)?;
    let e2_i = clt_mean(gx2, &ctx_i, &contour_i)?.0;
    let e1_r0 = clt_mean(gx, &ctx_r0, &contour_r0)?.0;
    let mu2 = p as f64 * y + e2_i - 2.0 * e1_r0;

    let (ci1, ci2) = cov_contour_pair(&sup_i, &sup_i, opts.v0, opts.cov_nodes, opts.inflation)?;
    let v2_i = clt_cov(gx2, gx2, &ctx_i, &ci1, &ci2)?.0;
    let (cr1, cr2) = cov_contour_pair(&sup_r0, &sup_r0, opts.v0, opts.cov_nodes, opts.inflation)?;
    let v1_r0 = clt_cov(gx, gx, &ctx_r0, &cr1, &cr2)?.0;
    let (cx1, cx2) = cov_contour_pair(&sup_i, &sup_r0, opts.v0, opts.cov_nodes, opts.inflation)?;
    let cv = clt_cov_cross(gx2, &ctx_i, gx, &ctx_r0, &cx1, &cx2)?.0;
    let var2 = v2_i + 4.0 * v1_r0 - 4.0 * cv;
    if var2 < -1e-6 {
        return Err(Error::ModelInconsistency(format!("negative var2 = {var2}")));
    }
    Ok((mu2, var2.max(0.0)))
}

fn is_identity(r0: &DMatrix<f64>) -> bool {
    let p = r0.nrows();
    (r0 - DMatrix::<f64>::identity(p, p)).amax() < 1e-12
}

/// Correlation lambda of the standardized (T1, T2) under H0, from the four
/// cross-kernel double-contour integrals
/// sigma_12 = s121 - 2 s122 - 2 s123 + 4 s124 with
/// (M1, M2, g1, g2) = (R0^{-1}, I, x^2, x^2), (R0^{-1}, R0, x^2, x),
/// (R0^{-1}, I, x, x^2), (R0^{-1}, R0, x, x).
pub fn joint_lambda(
    p: usize,
    n: usize,
    r0: &DMatrix<f64>,
    structure: Structure<f64>,
    opts: &CalibrationOpts,
) -> Result<f64> {
    joint_lambda_with_g(p, n, r0, None, structure, opts)
}

pub fn joint_lambda_with_g(
    p: usize,
    n: usize,
    r0: &DMatrix<f64>,
    g: Option<&DMatrix<f64>>,
    structure: Structure<f64>,
    opts: &CalibrationOpts,
) -> Result<f64> {
    if is_identity(r0) {
        // T1 = T2 identically: degenerate joint law
        return Ok(1.0);
    }
    let (_, var1) = t1_null_params_with_g(p, n, r0, g, structure)?;
    let (_, var2) = t2_null_params_with_g(p, n, r0, g, structure, opts)?;
    if var1 <= 0.0 || var2 <= 0.0 {
        return Err(Error::ModelInconsistency(
            "degenerate joint law: zero variance".into(),
        ));
    }
    let s12 = sigma12(p, n, r0, g, structure, opts)?;
    let lambda = s12 / (var1 * var2).sqrt();
    if lambda.abs() > 1.0 + 1e-6 {
        return Err(Error::ModelInconsistency(format!(
            "joint correlation {lambda} escaped [-1, 1]"
        )));
    }
    Ok(lambda.clamp(-1.0, 1.0))
}

fn sigma12(
    p: usize,
    n: usize,
    r0: &DMatrix<f64>,
    g: Option<&DMatrix<f64>>,
    structure: Structure<f64>,
    opts: &CalibrationOpts,
) -> Result<f64> {
    let y = p as f64 / (n - 1) as f64;
    let g_own;
    let g_ref = match g {
        Some(g) => g,
        None => {
            g_own = sym_sqrt(r0)?;
            &g_own
        }
    };
    let ctx_ri = ctx_with_m(r0, g_ref, MKind::InverseR0, y, structure)?;
    let ctx_i = ctx_with_m(r0, g_ref, MKind::Identity, y, structure)?;
    let ctx_r0 = ctx_with_m(r0, g_ref, MKind::R0, y, structure)?;
    let gx = |z: Complex64| z;
    let gx2 = |z: Complex64| z * z;
    let sup_ri = ctx_ri.require_support()?;
    let sup_i = ctx_i.require_support()?;
    let sup_r0 = ctx_r0.require_support()?;
    let (a1, a2) = cov_contour_pair(&sup_ri, &sup_i, opts.v0, opts.cov_nodes, opts.inflation)?;
    let s121 = clt_cov_cross(gx2, &ctx_ri, gx2, &ctx_i, &a1, &a2)?.0;
    let s123 = clt_cov_cross(gx, &ctx_ri, gx2, &ctx_i, &a1, &a2)?.0;
    let (b1, b2) = cov_contour_pair(&sup_ri, &sup_r0, opts.v0, opts.cov_nodes, opts.inflation)?;
    let s122 = clt_cov_cross(gx2, &ctx_ri, gx, &ctx_r0, &b1, &b2)?.0;
    let s124 = clt_cov_cross(gx, &ctx_ri, gx, &ctx_r0, &b1, &b2)?.0;
    Ok(s121 - 2.0 * s122 - 2.0 * s123 + 4.0 * s124)
}

/// Critical value t_alpha of the max statistic: solves
/// `P(|X1| <= t, |X2| <= t) = 1 - alpha` for a bivariate normal with
/// correlation lambda, by bisection on [1, 5] to 1e-8 in probability.
pub fn critical_value(lambda: f64, alpha: f64) -> Result<f64> {
    if !(0.0 < alpha && alpha <= 0.5) {
        return Err(Error::Configuration("alpha must lie in (0, 0.5]".into()));
    }
    if lambda.abs() > 1.0 + 1e-8 {
        return Err(Error::Domain(format!("lambda {lambda} outside [-1, 1]")));
    }
    if lambda.abs() >= 1.0 - 1e-9 {
        return Ok(normal_quantile(1.0 - alpha / 2.0));
    }
    let target = 1.0 - alpha;
    let (mut lo, mut hi) = (1.0f64, 5.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let prob = bvn_rectangle(mid, lambda)?;
        if prob < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (bvn_rectangle(hi, lambda)? - bvn_rectangle(lo, lambda)?).abs() < 1e-8
            && (hi - lo) < 1e-10
        {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

impl NullCalibration {
    /// Compute all null parameters for testing H0: R = R0 at level alpha.
    pub fn compute(
        p: usize,
        n: usize,
        r0: DMatrix<f64>,
        structure: Structure<f64>,
        alpha: f64,
        opts: &CalibrationOpts,
    ) -> Result<Self> {
        Self::compute_with_g(p, n, r0, None, structure, alpha, opts)
    }

    pub fn compute_with_g(
        p: usize,
        n: usize,
        r0: DMatrix<f64>,
        g: Option<&DMatrix<f64>>,
        structure: Structure<f64>,
        alpha: f64,
        opts: &CalibrationOpts,
    ) -> Result<Self> {
        let (mu1, var1) = t1_null_params_with_g(p, n, &r0, g, structure)?;
        let degenerate = is_identity(&r0);
        let (mu2, var2, lambda) = if degenerate {
            (mu1, var1, 1.0)
        } else {
            let (mu2, var2) = t2_null_params_with_g(p, n, &r0, g, structure, opts)?;
            let lambda = joint_lambda_with_g(p, n, &r0, g, structure, opts)?;
            (mu2, var2, lambda)
        };
        let t_alpha = critical_value(lambda, alpha)?;
        let q975 = normal_quantile(1.0 - alpha / 2.0);
        let r0_inv_half = sym_half_inverse(&r0)?;
        Ok(Self {
            r0,
            params: NullParams { mu1, var1, mu2, var2, lambda, t_alpha, alpha, degenerate },
            r0_inv_half,
            q975,
        })
    }

    /// T1 via the cached R0^{-1/2} (fast path for repeated evaluation).
    pub fn t1_of(&self, rhat: &DMatrix<f64>) -> f64 {
        let b = &self.r0_inv_half * rhat * &self.r0_inv_half;
        let p = b.nrows();
        let mut acc = 0.0;
        for i in 0..p {
            for j in 0..p {
                let v = b[(i, j)] - if i == j { 1.0 } else { 0.0 };
                acc += v * v;
            }
        }
        acc
    }

    /// Standardize the pair and apply both marginal tests and the combined
    /// max test to a sample correlation matrix.
    pub fn evaluate(&self, rhat: &DMatrix<f64>) -> Result<TestReport> {
        let t1 = self.t1_of(rhat);
        let t2 = t2_statistic(rhat, &self.r0)?;
        self.evaluate_statistics(t1, t2)
    }

    /// Same but from precomputed statistic values.
    pub fn evaluate_statistics(&self, t1: f64, t2: f64) -> Result<TestReport> {
        let p = &self.params;
        let z1 = (t1 - p.mu1) / p.var1.sqrt();
        let z2 = (t2 - p.mu2) / p.var2.sqrt();
        let tm = z1.abs().max(z2.abs());
        Ok(TestReport {
            t1,
            t2,
            z1,
            z2,
            tm,
            reject: tm > p.t_alpha,
            p_value_t1: 2.0 * (1.0 - normal_cdf(z1.abs())),
            p_value_t2: 2.0 * (1.0 - normal_cdf(z2.abs())),
            null_params: p.clone(),
        })
    }

    /// The marginal T1 test at level alpha (|z1| > q_{1-alpha/2}).
    pub fn marginal_t1_rejects(&self, report: &TestReport) -> bool {
        report.z1.abs() > self.q975
    }

    /// The marginal T2 test at level alpha.
    pub fn marginal_t2_rejects(&self, report: &TestReport) -> bool {
        report.z2.abs() > self.q975
    }
}

/// One-call version: compute Rhat from the batch, calibrate, and test.
pub fn run_test(
    batch: &SampleBatch<f64>,
    r0: &DMatrix<f64>,
    alpha: f64,
    structure: Structure<f64>,
) -> Result<TestReport> {
    let s = sample_covariance(batch)?;
    let rhat = sample_correlation(&s)?;
    let calib = NullCalibration::compute(
        rhat.nrows(),
        batch.n,
        r0.clone(),
        structure,
        alpha,
        &CalibrationOpts::default(),
    )?;
    calib.evaluate(&rhat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;

    fn ar1(p: usize, rho: f64) -> DMatrix<f64> {
        DMatrix::from_fn(p, p, |i, j| rho.powi((i as i32 - j as i32).abs()))
    }

    #[test]
    fn statistics_basic_values() {
        let r0 = ar1(4, 0.4);
        assert_abs_diff_eq!(t1_statistic(&r0, &r0).unwrap(), 0.0, epsilon = 1e-18);
        assert_abs_diff_eq!(t2_statistic(&r0, &r0).unwrap(), 0.0, epsilon = 1e-18);

        // R0 = I: T1 = T2 = ||Rhat - I||_F^2
        let rhat = dmatrix![1.0, 0.5; 0.5, 1.0];
        let i2 = DMatrix::<f64>::identity(2, 2);
        assert_abs_diff_eq!(t1_statistic(&rhat, &i2).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(t2_statistic(&rhat, &i2).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn statistics_permutation_invariant() {
        let p = 5;
        let rhat = ar1(p, 0.35);
        let r0 = ar1(p, 0.5);
        // reverse-order permutation
        let perm = DMatrix::<f64>::from_fn(p, p, |i, j| if i + j == p - 1 { 1.0 } else { 0.0 });
        let rhat_p = &perm * &rhat * perm.transpose();
        let r0_p = &perm * &r0 * perm.transpose();
        assert_abs_diff_eq!(
            t1_statistic(&rhat, &r0).unwrap(),
            t1_statistic(&rhat_p, &r0_p).unwrap(),
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            t2_statistic(&rhat, &r0).unwrap(),
            t2_statistic(&rhat_p, &r0_p).unwrap(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn t1_params_identity_closed_form() {
        // R0 = I, tau = 2, p = 100, n = 201: mu1 = p y - 0 + (tau-3) y = 49.5
        let p = 100;
        let n = 201;
        let r0 = DMatrix::<f64>::identity(p, p);
        let (mu1, var1) =
            t1_null_params(p, n, &r0, Structure::Elliptical { tau: 2.0 }).unwrap();
        assert_abs_diff_eq!(mu1, 49.5, epsilon = 1e-10);
        assert_abs_diff_eq!(var1, 4.0 * 0.25, epsilon = 1e-10);
    }

    #[test]
    fn t2_params_reduce_to_t1_at_identity() {
        let p = 40;
        let n = 81;
        let r0 = DMatrix::<f64>::identity(p, p);
        let s = Structure::Elliptical { tau: 2.0 };
        let (mu1, var1) = t1_null_params(p, n, &r0, s).unwrap();
        let (mu2, var2) = t2_null_params(p, n, &r0, s, &CalibrationOpts::default()).unwrap();
        assert_abs_diff_eq!(mu1, mu2, epsilon = 1e-4);
        assert_abs_diff_eq!(var1, var2, epsilon = 1e-4);
    }

    #[test]
    fn critical_values_reference() {
        // lambda = 1: univariate two-sided quantile
        assert_abs_diff_eq!(critical_value(1.0, 0.05).unwrap(), 1.95996, epsilon = 1e-4);
        // lambda = 0: (2 Phi(t) - 1)^2 = 0.95
        assert_abs_diff_eq!(critical_value(0.0, 0.05).unwrap(), 2.2365, epsilon = 1e-3);
        // decreasing in |lambda|
        let mut prev = critical_value(0.0, 0.05).unwrap();
        for k in 1..=21 {
            let l = (k - 1) as f64 * 0.99 / 20.0;
            let t = critical_value(l, 0.05).unwrap();
            assert!(t <= prev + 1e-9, "lambda {l}: {t} > {prev}");
            prev = t;
        }
        assert!(critical_value(0.99, 0.05).unwrap() < critical_value(0.0, 0.05).unwrap());
    }

    #[test]
    fn joint_lambda_degenerate_and_clamped() {
        let p = 30;
        let n = 61;
        let i = DMatrix::<f64>::identity(p, p);
        let l = joint_lambda(p, n, &i, Structure::Elliptical { tau: 2.0 }, &CalibrationOpts::default())
            .unwrap();
        assert_eq!(l, 1.0);
    }

    #[test]
    fn deterministic_report_at_exact_null() {
        // Rhat = R0 exactly: z-scores sit at their most negative values
        let p = 20;
        let n = 41;
        let r0 = ar1(p, 0.5);
        let calib = NullCalibration::compute(
            p,
            n,
            r0.clone(),
            Structure::Elliptical { tau: 2.0 },
            0.05,
            &CalibrationOpts::default(),
        )
        .unwrap();
        let rep = calib.evaluate(&r0).unwrap();
        assert!(rep.t1.abs() < 1e-20);
        assert!(rep.t2.abs() < 1e-25);
        assert_abs_diff_eq!(rep.z1, -rep.null_params.mu1 / rep.null_params.var1.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(rep.tm, rep.z1.abs().max(rep.z2.abs()), epsilon = 0.0);
    }
}
