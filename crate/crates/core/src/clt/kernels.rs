//! Mean and covariance kernels of the CLT, term by term.
//!
//! Naming: `e3_*` are the elliptical mean terms, `e4_*` the extra linear
//! independent-component mean terms, `cv_*` the covariance terms. Terms that
//! are M-conjugates of one another have identical diagonals and are folded
//! together with an explicit factor of two (`*_pair`).

use super::context::{CltContext, NodeData, Structure};
use crate::error::{Error, Result};
use crate::scalar::{creal, lit, Cplx, Real};
use nalgebra::ComplexField;

#[inline]
fn two<T: Real>() -> Cplx<T> {
    creal(lit::<T>(2.0))
}

#[inline]
fn dot<T: Real>(a: &[Cplx<T>], b: &[Cplx<T>]) -> Cplx<T> {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[inline]
fn dot_real<T: Real>(a: &nalgebra::DVector<T>, b: &[Cplx<T>]) -> Cplx<T> {
    a.iter().zip(b).map(|(&x, &y)| creal(x) * y).sum()
}

// ---------------------------------------------------------------------------
// mean kernel terms
// ---------------------------------------------------------------------------

/// `y \int [t m']^2 / (m (1+tm)^3) dH(t)`.
pub fn e3_t1<T: Real>(ctx: &CltContext<T>, nd: &NodeData<T>) -> Cplx<T> {
    creal(ctx.y) * nd.mp * nd.mp / nd.m * ctx.mean_l2w3(nd)
}

/// `(tau - 2)(1 + z m) \int t m'/(1+tm)^2 dH(t)`; zero for the linear case.
pub fn e3_t2<T: Real>(ctx: &CltContext<T>, nd: &NodeData<T>) -> Cplx<T> {
    match ctx.structure {
        Structure::Elliptical { tau } => {
            let one = Cplx::new(T::one(), T::zero());
            creal(tau - lit::<T>(2.0)) * (one + nd.z * nd.m) * nd.mp * ctx.mean_lw2(nd)
        }
        Structure::Linear { .. } => Cplx::new(T::zero(), T::zero()),
    }
}

/// The conjugate pair of derivative terms
/// `(1/n) sum_k d/dz [ m (Rz R)_kk (R M Rz)_kk ]` (each member of the pair has
/// the same diagonals, hence the factor two).
pub fn e3_t3_t4_pair<T: Real>(ctx: &CltContext<T>, nd: &NodeData<T>) -> Cplx<T> {
    let a = ctx.apply_pattern(&ctx.e2, &nd.u); // [Rz R]_kk
    let b = ctx.apply_pattern(&ctx.e1, &nd.u); // [R M Rz]_kk
    let ad = ctx.apply_pattern(&ctx.e2, &nd.ud);
    let bd = ctx.apply_pattern(&ctx.e1, &nd.ud);
    let mut acc = Cplx::new(T::zero(), T::zero());
    for k in 0..ctx.p {
        acc += nd.mp * a[k] * b[k] + nd.m * (ad[k] * b[k] + a[k] * bd[k]);
    }
    two::<T>() * creal(ctx.inv_n()) * acc
}

/// Trace pair `(1/(4z)) (1/n) [tr Rz + tr(M Rz M^{-1})]`, with the linear
/// per-row weights folded in.
pub fn e3_t5_t6_pair<T: Real>(ctx: &CltContext<T>, nd: &NodeData<T>) -> Cplx<T> {
    let d_r = ctx.apply_pattern(&ctx.e1, &nd.w);
    let s = dot_real(&ctx.kap, &d_r);
    two::<T>() * creal(ctx.inv_n()) / (creal(lit::<T>(4.0)) * nd.z) * s
}

/// Trace pair `-(1/(4z)) (1/n) [tr Rz^2 + tr(M Rz^2 M^{-1})]`.
pub fn e3_t7_t8_pair<T: Real>(ctx: &CltContext<T>, nd: &NodeData<T>) -> Cplx<T> {
    let w2 = nd.w2();
    let d_r2 = ctx.apply_pattern(&ctx.e1, &w2);
    let s = dot_real(&ctx.kap, &d_r2);
    -two::<T>() * creal(ctx.inv_n()) / (creal(lit::<T>(4.0)) * nd.z) * s
}

/// `-(1/(2z)) (1/n) sum_{kl} W_kl (M^{-1})_kl (M Rz)_kl` with the structure
/// weight W; reduces to `sum_a w_a h_a` in the eigenbasis.
pub fn e3_t9<T: Real>(ctx: &CltContext<T>, nd: &NodeData<T>) -> Cplx<T> {
    let s = dot_real(&ctx.h_vec, &nd.w);
    -creal(ctx.inv_n()) / (two::<T>() * nd.z) * s
}

/// `+(1/(2z)) (1/n) sum_{kl} W_kl (M^{-1})_kl (M Rz^2)_kl`.
pub fn e3_t10<T: Real>(ctx: &CltContext<T>, nd: &NodeData<T>) -> Cplx<T> {
    let w2 = nd.w2();
    let s = dot_real(&ctx.h_vec, &w2);
    creal(ctx.inv_n()) / (two::<T>() * nd.z) * s
}

/// Entrywise derivative pair `(1/4)(1/n) sum W_kl d/dz [Rz_kl Rz_lk]` plus its
/// M-conjugate (equal), via the K11 tensor.
pub fn e3_t11_t13_pair<T: Real>(ctx: &CltContext<T>, nd: &NodeData<T>) -> Cplx<T> {
    let s = ctx.bilinear(&ctx.k11, &nd.wd, &nd.w) + ctx.bilinear(&ctx.k11, &nd.w, &nd.wd);
    two::<T>() * creal(ctx.inv_n()) / creal(lit::<T>(4.0)) * s
}

/// `(1/2)(1/n) sum W_kl d/dz [(Rz M^{-1})_kl (M Rz)_lk]` via K12.
pub fn e3_t12<T: Real>(ctx: &CltContext<T>, nd: &NodeData<T>) -> Cplx<T> {
    let s = ctx.bilinear(&ctx.k12, &nd.wd, &nd.w) + ctx.bilinear(&ctx.k12, &nd.w, &nd.wd);
    creal(ctx.inv_n()) / two::<T>() * s
}

/// Linear-only: `beta_x m m' (1/n) sum_k (G^T M Rz G)_kk (G^T M Rz^2 G)_kk`.
pub fn e4_t2<T: Real>(ctx: &CltContext<T>, nd: &NodeData<T>) -> Cplx<T> {
    let beta = ctx.structure.beta_x();
    if beta == T::zero() {
        return Cplx::new(T::zero(), T::zero());
    }
    let gm = ctx.apply_pattern(&ctx.eg1, &nd.w);
    let w2 = nd.w2();
    let gm2 = ctx.apply_pattern(&ctx.eg1, &w2);
    creal(beta) * nd.m * nd.mp * creal(ctx.inv_n()) * dot(&gm, &gm2)
}

/// Linear-only conjugate pair
/// `(beta/2)(1/n) sum_{kl} g_kl^2 d/dz [ m (G^T M Rz)_lk (Rz G)_kl ]`.
pub fn e4_t5_t6_pair<T: Real>(ctx: &CltContext<T>, nd: &NodeData<T>) -> Cplx<T> {
    let beta = ctx.structure.beta_x();
    let Some(k5s) = ctx.k5s.as_ref() else {
        return Cplx::new(T::zero(), T::zero());
    };
    // t5 + t6 = (beta/2)(1/n) d/dz [ m w^T (K5 + K5^T) w ]
    let s_ww = ctx.bilinear(k5s, &nd.w, &nd.w);
    let s_dw = ctx.bilinear(k5s, &nd.wd, &nd.w) + ctx.bilinear(k5s, &nd.w, &nd.wd);
    creal(beta * lit::<T>(0.5) * ctx.inv_n()) * (nd.mp * s_ww + nd.m * s_dw)
}

/// Mean kernel E M(z): evaluates every term of the displayed equation for the
/// context's structure.
pub fn em_kernel<T: Real>(ctx: &CltContext<T>, nd: &NodeData<T>) -> Cplx<T> {
    let mut acc = e3_t1(ctx, nd)
        + e3_t2(ctx, nd)
        + e3_t3_t4_pair(ctx, nd)
        + e3_t5_t6_pair(ctx, nd)
        + e3_t7_t8_pair(ctx, nd)
        + e3_t9(ctx, nd)
        + e3_t10(ctx, nd)
        + e3_t11_t13_pair(ctx, nd)
        + e3_t12(ctx, nd);
    if matches!(ctx.structure, Structure::Linear { .. }) {
        acc += e4_t2(ctx, nd) + e4_t5_t6_pair(ctx, nd);
    }
    acc
}

// ---------------------------------------------------------------------------
// covariance kernel terms
// ---------------------------------------------------------------------------

/// Universal bracket `2 { m'(z1) m'(z2) / [m(z2)-m(z1)]^2 - 1/(z1-z2)^2 }`
/// for a shared spectral measure.
pub fn cv_bracket<T: Real>(n1: &NodeData<T>, n2: &NodeData<T>) -> Result<Cplx<T>> {
    let dm = n2.m - n1.m;
    if dm.modulus() < lit::<T>(1e-10) {
        return Err(Error::Domain(
            "coincident points: covariance kernel needs non-overlapping contours".into(),
        ));
    }
    let dz = n1.z - n2.z;
    Ok(two::<T>() * (n1.mp * n2.mp / (dm * dm) - Cplx::new(T::one(), T::zero()) / (dz * dz)))
}

/// Quartic-weight block: `(1/n) (d1 diag Rz)^T W_cov (d2 diag Rz)`; covers the
/// four conjugate-pair terms of the displayed covariance in one bilinear form.
pub fn cv_quartic<T: Real>(
    ctx: &CltContext<T>,
    d1_dr: &[Cplx<T>],
    d2_dr: &[Cplx<T>],
) -> Cplx<T> {
    creal(ctx.inv_n()) * ctx.bilinear(&ctx.w_cov, d1_dr, d2_dr)
}

/// The four rank-one-in-k terms
/// `- (1/n) sum_k { d1[Rz]_kk d2[Rz R]_kk + d1[Rz R]_kk d2[Rz]_kk }` (each
/// appears twice through its M-conjugate).
pub fn cv_rank_one<T: Real>(
    ctx: &CltContext<T>,
    d1_dr: &[Cplx<T>],
    d1_drr: &[Cplx<T>],
    d2_dr: &[Cplx<T>],
    d2_drr: &[Cplx<T>],
) -> Cplx<T> {
    -two::<T>() * creal(ctx.inv_n()) * (dot(d1_dr, d2_drr) + dot(d1_drr, d2_dr))
}

/// Linear-only: `beta y (1/n)-normalized sum_k d1[m (G^T M Rz G)_kk] d2[...]`.
pub fn cv_lin_factor<T: Real>(ctx: &CltContext<T>, v1: &[Cplx<T>], v2: &[Cplx<T>]) -> Cplx<T> {
    creal(ctx.structure.beta_x() * ctx.inv_n()) * dot(v1, v2)
}

/// Linear-only conjugate pairs mixing `d[Rz]_kk` with `d[m (G^T M Rz G)_ll]`.
pub fn cv_lin_mixed<T: Real>(
    ctx: &CltContext<T>,
    d1_dr: &[Cplx<T>],
    v1: &[Cplx<T>],
    d2_dr: &[Cplx<T>],
    v2: &[Cplx<T>],
) -> Cplx<T> {
    let gg = &ctx.gg;
    let a = ctx.bilinear(gg, d1_dr, v2);
    let b = {
        // v1^T (GG)^T d2 = d2^T GG v1
        let ggt = gg.transpose();
        ctx.bilinear(&ggt, v1, d2_dr)
    };
    creal(ctx.structure.beta_x() * ctx.inv_n()) * (a + b)
}

/// Per-node derivative vectors used by the covariance kernels.
pub struct CovVectors<T: Real> {
    /// d/dz [Rz]_kk (equals d/dz [M Rz M^{-1}]_kk)
    pub d_dr: Vec<Cplx<T>>,
    /// d/dz [Rz R]_kk
    pub d_drr: Vec<Cplx<T>>,
    /// linear: d/dz [ m (G^T M Rz G)_kk ]; empty otherwise
    pub v: Vec<Cplx<T>>,
}

pub fn cov_vectors<T: Real>(ctx: &CltContext<T>, nd: &NodeData<T>) -> CovVectors<T> {
    let d_dr = ctx.apply_pattern(&ctx.e1, &nd.wd);
    let d_drr = ctx.apply_pattern(&ctx.e2, &nd.ud);
    let v = if matches!(ctx.structure, Structure::Linear { .. }) {
        let gm = ctx.apply_pattern(&ctx.eg1, &nd.w);
        let gmd = ctx.apply_pattern(&ctx.eg1, &nd.wd);
        gm.iter()
            .zip(&gmd)
            .map(|(&a, &b)| nd.mp * a + nd.m * b)
            .collect()
    } else {
        Vec::new()
    };
    CovVectors { d_dr, d_drr, v }
}

/// Same-measure covariance kernel Cov(M(z1), M(z2)) at a point pair.
pub fn cov_kernel<T: Real>(ctx: &CltContext<T>, n1: &NodeData<T>, n2: &NodeData<T>) -> Result<Cplx<T>> {
    let c1 = cov_vectors(ctx, n1);
    let c2 = cov_vectors(ctx, n2);
    let mut acc = cv_bracket(n1, n2)?
        + cv_quartic(ctx, &c1.d_dr, &c2.d_dr)
        + cv_rank_one(ctx, &c1.d_dr, &c1.d_drr, &c2.d_dr, &c2.d_drr);
    if matches!(ctx.structure, Structure::Linear { .. }) {
        acc += cv_lin_factor(ctx, &c1.v, &c2.v)
            + cv_lin_mixed(ctx, &c1.d_dr, &c1.v, &c2.d_dr, &c2.v);
    }
    Ok(acc)
}

/// The coupling scalar `a(z1, z2) = m_j(z1) m_h(z2) y (1/p) u1^T C u2` and its
/// partial derivatives, assembled from overlap-row precomputations.
pub struct CrossRows<T: Real> {
    /// u1^T C (row vector, length p)
    pub q: Vec<Cplx<T>>,
    /// u1d^T C
    pub qd: Vec<Cplx<T>>,
}

pub fn cross_rows<T: Real>(
    ctx1: &CltContext<T>,
    c_overlap: &nalgebra::DMatrix<T>,
    n1: &NodeData<T>,
) -> CrossRows<T> {
    let p = ctx1.p;
    let mut q = vec![Cplx::new(T::zero(), T::zero()); p];
    let mut qd = vec![Cplx::new(T::zero(), T::zero()); p];
    for a in 0..p {
        let (ua, uda) = (n1.u[a], n1.ud[a]);
        for b in 0..p {
            let c = creal(c_overlap[(a, b)]);
            q[b] += ua * c;
            qd[b] += uda * c;
        }
    }
    CrossRows { q, qd }
}

/// Log-coupling term `2 [a''(1-a) + a'_1 a'_2] / (1-a)^2` for two contexts,
/// equal to the universal bracket when the contexts coincide.
pub fn cv_cross_bracket<T: Real>(
    ctx1: &CltContext<T>,
    rows: &CrossRows<T>,
    n1: &NodeData<T>,
    n2: &NodeData<T>,
) -> Result<Cplx<T>> {
    let yp = creal(ctx1.inv_n()); // the trace normalization lim 1/n = y/p
    let t = dot(&rows.q, &n2.u) * yp;
    let td1 = dot(&rows.qd, &n2.u) * yp;
    let td2 = dot(&rows.q, &n2.ud) * yp;
    let td12 = dot(&rows.qd, &n2.ud) * yp;
    let (m1, m2, m1p, m2p) = (n1.m, n2.m, n1.mp, n2.mp);
    let a = m1 * m2 * t;
    let a1 = m1p * m2 * t + m1 * m2 * td1;
    let a2 = m1 * m2p * t + m1 * m2 * td2;
    let a12 = m1p * m2p * t + m1p * m2 * td2 + m2p * m1 * td1 + m1 * m2 * td12;
    let one = Cplx::new(T::one(), T::zero());
    let om = one - a;
    if om.modulus() < lit::<T>(1e-10) {
        return Err(Error::Singularity(
            "1 - a(z1,z2) vanished; separate the two contours".into(),
        ));
    }
    Ok(two::<T>() * (a12 * om + a1 * a2) / (om * om))
}

/// Cross-matrix covariance kernel Cov(M^j(z1), M^h(z2)) at a point pair.
/// Both contexts must share R, G, the structure, and y.
pub fn cov_kernel_cross<T: Real>(
    ctx1: &CltContext<T>,
    n1: &NodeData<T>,
    ctx2: &CltContext<T>,
    n2: &NodeData<T>,
) -> Result<Cplx<T>> {
    let c = ctx1.cross_overlap(ctx2);
    let rows = cross_rows(ctx1, &c, n1);
    let c1 = cov_vectors(ctx1, n1);
    let c2 = cov_vectors(ctx2, n2);
    let mut acc = cv_cross_bracket(ctx1, &rows, n1, n2)?
        + cv_quartic(ctx1, &c1.d_dr, &c2.d_dr)
        + cv_rank_one(ctx1, &c1.d_dr, &c1.d_drr, &c2.d_dr, &c2.d_drr);
    if matches!(ctx1.structure, Structure::Linear { .. }) {
        acc += cv_lin_factor(ctx1, &c1.v, &c2.v)
            + cv_lin_mixed(ctx1, &c1.d_dr, &c1.v, &c2.d_dr, &c2.v);
    }
    Ok(acc)
}
