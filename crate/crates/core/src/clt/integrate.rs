//! Contour integration of the CLT kernels: the asymptotic mean
//! `-(1/2 pi i) \oint g(z) EM(z) dz` and the covariance double integral
//! `-(1/4 pi^2) \oint\oint g1 g2 Cov(M(z1), M(z2)) dz2 dz1`.
//!
//! Covariance integrals factorize: all kernel terms except the universal
//! bracket are sums of products f(z1) h(z2), so their double integrals
//! reduce to vector accumulations per contour; only the bracket needs a
//! loop over node pairs.

use super::context::{CltContext, NodeData, Structure};
use super::kernels::{
    cov_vectors, cross_rows, cv_bracket, cv_cross_bracket, em_kernel,
};
use crate::error::{Error, Result};
use crate::quad::ContourSpec;
use crate::scalar::{creal, lit, Cplx, Real};
use crate::support::SupportInfo;
use nalgebra::ComplexField;

/// Convergence / accuracy report of a contour integral.
#[derive(Debug, Clone, Copy, Default)]
pub struct IntegralDiagnostics<T> {
    pub imag_part: T,
    pub refinement_delta: T,
    pub nodes_used: usize,
}

/// Mean-integral contour for one measure. Strictly encloses the support; for
/// y < 1 it must exclude the origin (the mean kernel has 1/z terms there),
/// for y >= 1 it must enclose it (the LSD carries the atom at zero).
pub fn mean_contour<T: Real>(
    support: &SupportInfo<T>,
    y: T,
    v0: T,
    num_nodes: usize,
    inflation: T,
) -> Result<ContourSpec<T>> {
    let (a, b) = (support.a, support.b);
    let width = b - a;
    let x_r = b + inflation * width;
    let raw_xl = a - inflation * width - lit::<T>(0.05);
    let tiny = lit::<T>(1e-9) * (T::one() + b);
    let x_l = if y >= T::one() - lit::<T>(1e-12) || a <= tiny {
        // enclose the origin
        let forced = -lit::<T>(0.05) * (T::one() + width * lit::<T>(0.1));
        if raw_xl < forced {
            raw_xl
        } else {
            forced
        }
    } else if raw_xl > T::zero() {
        raw_xl
    } else {
        a * lit::<T>(0.5)
    };
    ContourSpec::new(x_l, x_r, v0, num_nodes)
}

/// Spec-level contour builder (the raw geometry rule, plus node list).
pub fn build_contour<T: Real>(
    support: &SupportInfo<T>,
    y: T,
    v0: T,
    num_nodes: usize,
    inflation: T,
) -> Result<(ContourSpec<T>, Vec<(Cplx<T>, Cplx<T>)>)> {
    let spec = mean_contour(support, y, v0, num_nodes, inflation)?;
    let nodes = spec.nodes();
    Ok((spec, nodes))
}

/// Nested contour pair for covariance integrals. Both rectangles enclose the
/// origin (the covariance kernels are analytic there), the inner encloses the
/// first support, the outer encloses both, with v0_inner = 0.4 v0.
pub fn cov_contour_pair<T: Real>(
    sup1: &SupportInfo<T>,
    sup2: &SupportInfo<T>,
    v0: T,
    num_nodes: usize,
    inflation: T,
) -> Result<(ContourSpec<T>, ContourSpec<T>)> {
    let b1 = sup1.b;
    let bmax = if sup2.b > b1 { sup2.b } else { b1 };
    let x_l1 = -lit::<T>(0.1) * b1 - lit::<T>(0.05);
    let x_r1 = b1 * (T::one() + inflation) + lit::<T>(0.02);
    let inner = ContourSpec::new(x_l1, x_r1, v0 * lit::<T>(0.4), num_nodes)?;
    let mut x_l2 = -lit::<T>(0.2) * bmax - lit::<T>(0.15);
    if x_l2 > x_l1 - lit::<T>(0.05) {
        x_l2 = x_l1 - lit::<T>(0.05) * (T::one() + b1);
    }
    let mut x_r2 = bmax * (T::one() + inflation * lit::<T>(2.0)) + lit::<T>(0.1);
    if x_r2 < x_r1 + lit::<T>(0.05) {
        x_r2 = x_r1 + lit::<T>(0.05) * (T::one() + bmax);
    }
    let outer = ContourSpec::new(x_l2, x_r2, v0, num_nodes)?;
    debug_assert!(outer.contains_contour(&inner));
    Ok((inner, outer))
}

fn solve_nodes<T: Real>(
    ctx: &CltContext<T>,
    contour: &ContourSpec<T>,
) -> Result<Vec<(NodeData<T>, Cplx<T>)>> {
    let nodes = contour.nodes();
    let mut out = Vec::with_capacity(nodes.len());
    let mut guess = None;
    for (z, w) in nodes {
        let nd = ctx.node(z, guess)?;
        guess = Some(nd.m);
        out.push((nd, w));
    }
    Ok(out)
}

fn mean_pass<T: Real>(
    ctx: &CltContext<T>,
    contour: &ContourSpec<T>,
    g: &impl Fn(Cplx<T>) -> Cplx<T>,
) -> Result<Cplx<T>> {
    let nodes = solve_nodes(ctx, contour)?;
    let mut acc = Cplx::new(T::zero(), T::zero());
    for (nd, w) in &nodes {
        acc += *w * g(nd.z) * em_kernel(ctx, nd);
    }
    // -(1/(2 pi i)) = i/(2 pi)
    let scale = Cplx::new(T::zero(), T::one() / (lit::<T>(2.0) * T::pi()));
    Ok(scale * acc)
}

/// Asymptotic mean `E X_g` for the context, with node-doubling refinement.
pub fn clt_mean<T: Real>(
    g: impl Fn(Cplx<T>) -> Cplx<T>,
    ctx: &CltContext<T>,
    contour: &ContourSpec<T>,
) -> Result<(T, IntegralDiagnostics<T>)> {
    let coarse = mean_pass(ctx, contour, &g)?;
    let mut spec = contour.refined();
    let mut fine = mean_pass(ctx, &spec, &g)?;
    let mut delta = (fine - coarse).modulus();
    let tol = lit::<T>(1e-8) * (T::one() + fine.modulus());
    if delta > tol {
        let spec2 = spec.refined();
        let finest = mean_pass(ctx, &spec2, &g)?;
        delta = (finest - fine).modulus();
        fine = finest;
        spec = spec2;
    }
    let im = fine.im.abs();
    let re = fine.re;
    if im > lit::<T>(1e-3) * (T::one() + re.abs()) {
        return Err(Error::Precision(format!(
            "mean contour integral has imaginary part {:?}",
            im.to_f64()
        )));
    }
    Ok((
        re,
        IntegralDiagnostics { imag_part: im, refinement_delta: delta, nodes_used: spec.num_nodes },
    ))
}

struct CovAccum<T: Real> {
    u_dr: Vec<Cplx<T>>,
    u_drr: Vec<Cplx<T>>,
    u_v: Vec<Cplx<T>>,
}

fn accumulate<T: Real>(
    ctx: &CltContext<T>,
    nodes: &[(NodeData<T>, Cplx<T>)],
    g: &impl Fn(Cplx<T>) -> Cplx<T>,
) -> CovAccum<T> {
    let p = ctx.p;
    let zero = Cplx::new(T::zero(), T::zero());
    let mut u_dr = vec![zero; p];
    let mut u_drr = vec![zero; p];
    let lin = matches!(ctx.structure, Structure::Linear { .. });
    let mut u_v = vec![zero; if lin { p } else { 0 }];
    for (nd, w) in nodes {
        let cw = *w * g(nd.z);
        let cv = cov_vectors(ctx, nd);
        for k in 0..p {
            u_dr[k] += cw * cv.d_dr[k];
            u_drr[k] += cw * cv.d_drr[k];
        }
        if lin {
            for k in 0..p {
                u_v[k] += cw * cv.v[k];
            }
        }
    }
    CovAccum { u_dr, u_drr, u_v }
}

fn cov_pass<T: Real>(
    g1: &impl Fn(Cplx<T>) -> Cplx<T>,
    ctx1: &CltContext<T>,
    c1: &ContourSpec<T>,
    g2: &impl Fn(Cplx<T>) -> Cplx<T>,
    ctx2: &CltContext<T>,
    c2: &ContourSpec<T>,
    same: bool,
) -> Result<Cplx<T>> {
    let n1 = solve_nodes(ctx1, c1)?;
    let n2 = solve_nodes(ctx2, c2)?;
    let a1 = accumulate(ctx1, &n1, g1);
    let a2 = accumulate(ctx2, &n2, g2);

    // separable terms
    let inv_n = creal(ctx1.inv_n());
    let mut acc = inv_n * ctx1.bilinear(&ctx1.w_cov, &a1.u_dr, &a2.u_dr);
    let mut rank1 = Cplx::new(T::zero(), T::zero());
    for k in 0..ctx1.p {
        rank1 += a1.u_dr[k] * a2.u_drr[k] + a1.u_drr[k] * a2.u_dr[k];
    }
    acc -= creal(lit::<T>(2.0)) * inv_n * rank1;
    if matches!(ctx1.structure, Structure::Linear { .. }) {
        let beta = creal(ctx1.structure.beta_x());
        let mut fac = Cplx::new(T::zero(), T::zero());
        for k in 0..ctx1.p {
            fac += a1.u_v[k] * a2.u_v[k];
        }
        acc += beta * inv_n * fac;
        let mixed = ctx1.bilinear(&ctx1.gg, &a1.u_dr, &a2.u_v)
            + ctx1.bilinear(&ctx1.gg.transpose(), &a1.u_v, &a2.u_dr);
        acc += beta * inv_n * mixed;
    }

    // bracket over node pairs
    let mut brack = Cplx::new(T::zero(), T::zero());
    if same {
        for (nd1, w1) in &n1 {
            let gw1 = *w1 * g1(nd1.z);
            for (nd2, w2) in &n2 {
                brack += gw1 * *w2 * g2(nd2.z) * cv_bracket(nd1, nd2)?;
            }
        }
    } else {
        let c_overlap = ctx1.cross_overlap(ctx2);
        for (nd1, w1) in &n1 {
            let rows = cross_rows(ctx1, &c_overlap, nd1);
            let gw1 = *w1 * g1(nd1.z);
            for (nd2, w2) in &n2 {
                brack += gw1 * *w2 * g2(nd2.z) * cv_cross_bracket(ctx1, &rows, nd1, nd2)?;
            }
        }
    }
    acc += brack;

    // -(1/4 pi^2)
    let four_pi2 = lit::<T>(4.0) * T::pi() * T::pi();
    Ok(-acc / creal(four_pi2))
}

fn cov_driver<T: Real>(
    g1: &impl Fn(Cplx<T>) -> Cplx<T>,
    ctx1: &CltContext<T>,
    c1: &ContourSpec<T>,
    g2: &impl Fn(Cplx<T>) -> Cplx<T>,
    ctx2: &CltContext<T>,
    c2: &ContourSpec<T>,
    same: bool,
) -> Result<(T, IntegralDiagnostics<T>)> {
    if !c2.contains_contour(c1) {
        return Err(Error::Domain(
            "covariance contours must be nested (c1 strictly inside c2)".into(),
        ));
    }
    let coarse = cov_pass(g1, ctx1, c1, g2, ctx2, c2, same)?;
    let (c1f, c2f) = (c1.refined(), c2.refined());
    let fine = cov_pass(g1, ctx1, &c1f, g2, ctx2, &c2f, same)?;
    let delta = (fine - coarse).modulus();
    let im = fine.im.abs();
    let re = fine.re;
    if im > lit::<T>(1e-3) * (T::one() + re.abs()) {
        return Err(Error::Precision(format!(
            "covariance integral has imaginary part {:?}",
            im.to_f64()
        )));
    }
    Ok((
        re,
        IntegralDiagnostics {
            imag_part: im,
            refinement_delta: delta,
            nodes_used: c1f.num_nodes + c2f.num_nodes,
        },
    ))
}

/// Same-matrix covariance `Cov(X_{g1}, X_{g2})` for one context.
pub fn clt_cov<T: Real>(
    g1: impl Fn(Cplx<T>) -> Cplx<T>,
    g2: impl Fn(Cplx<T>) -> Cplx<T>,
    ctx: &CltContext<T>,
    c1: &ContourSpec<T>,
    c2: &ContourSpec<T>,
) -> Result<(T, IntegralDiagnostics<T>)> {
    cov_driver(&g1, ctx, c1, &g2, ctx, c2, true)
}

/// Cross-matrix covariance `Cov(X^j_{g1}, X^h_{g2})` for two contexts sharing
/// R, G, structure, and y.
pub fn clt_cov_cross<T: Real>(
    g1: impl Fn(Cplx<T>) -> Cplx<T>,
    ctx1: &CltContext<T>,
    g2: impl Fn(Cplx<T>) -> Cplx<T>,
    ctx2: &CltContext<T>,
    c1: &ContourSpec<T>,
    c2: &ContourSpec<T>,
) -> Result<(T, IntegralDiagnostics<T>)> {
    if ctx1.same_matrix(ctx2) {
        return cov_driver(&g1, ctx1, c1, &g2, ctx2, c2, true);
    }
    cov_driver(&g1, ctx1, c1, &g2, ctx2, c2, false)
}
