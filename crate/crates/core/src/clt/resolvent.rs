//! Dense resolvent `(I + m(z) R M)^{-1}` and its analytic z-derivative,
//! mostly used for audits and finite-difference checks of the kernel terms.

use super::context::CltContext;
use crate::error::{Error, Result};
use crate::scalar::{creal, lit, Cplx, Real};
use crate::stieltjes::StieltjesEval;
use nalgebra::{ComplexField, DMatrix};

fn assemble<T: Real>(ctx: &CltContext<T>, diag: &[Cplx<T>]) -> DMatrix<Cplx<T>> {
    let p = ctx.p;
    DMatrix::from_fn(p, p, |i, j| {
        let mut acc = Cplx::new(T::zero(), T::zero());
        for a in 0..p {
            acc += creal(ctx.phi[(i, a)]) * diag[a] * creal(ctx.psi[(j, a)]);
        }
        acc
    })
}

/// `(I + m R M)^{-1}`; shifts Im z upward by 10x and retries once when the
/// smallest `|1 + m lam|` signals near-singularity. Returns the matrix and
/// whether a shift was applied.
pub fn resolvent<T: Real>(
    eval: &StieltjesEval<T>,
    ctx: &CltContext<T>,
) -> Result<(DMatrix<Cplx<T>>, bool)> {
    let node = ctx.node_from_eval(eval);
    let min_d = node
        .w
        .iter()
        .map(|w| (Cplx::new(T::one(), T::zero()) / *w).modulus())
        .fold(T::max_value().unwrap_or_else(T::one), |a, b| if b < a { b } else { a });
    let max_d = node
        .w
        .iter()
        .map(|w| (Cplx::new(T::one(), T::zero()) / *w).modulus())
        .fold(T::zero(), |a, b| if b > a { b } else { a });
    if min_d < lit::<T>(1e-12) * max_d {
        if eval.z.im == T::zero() {
            return Err(Error::Singularity("I + m R M numerically singular".into()));
        }
        let shifted = Cplx::new(eval.z.re, eval.z.im * lit::<T>(10.0));
        let eval2 = crate::stieltjes::solve_underline_s(shifted, &ctx.h)?;
        let node2 = ctx.node_from_eval(&eval2);
        return Ok((assemble(ctx, &node2.w), true));
    }
    Ok((assemble(ctx, &node.w), false))
}

/// Analytic derivative `d Rz/dz = -m'(z) R M Rz^2`.
pub fn resolvent_derivative<T: Real>(eval: &StieltjesEval<T>, ctx: &CltContext<T>) -> DMatrix<Cplx<T>> {
    let node = ctx.node_from_eval(eval);
    assemble(ctx, &node.wd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clt::context::Structure;
    use crate::correlation::RescaledSpec;
    use crate::stieltjes::solve_underline_s;
    use num_complex::Complex64;

    fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
        let es = m.clone().symmetric_eigen();
        let mut qd = es.eigenvectors.clone();
        for j in 0..m.nrows() {
            let s = es.eigenvalues[j].sqrt();
            for i in 0..m.nrows() {
                qd[(i, j)] *= s;
            }
        }
        qd * es.eigenvectors.transpose()
    }

    #[test]
    fn identity_cases() {
        // R M = I: Rz = (1+m)^{-1} I
        let p = 5;
        let r = DMatrix::from_fn(p, p, |i, j| 0.5f64.powi((i as i32 - j as i32).abs()));
        let g = sym_sqrt(&r);
        let rinv = r.clone().try_inverse().unwrap();
        let m = RescaledSpec::new((rinv.clone() + rinv.transpose()) * 0.5).unwrap();
        let ctx = CltContext::new(r, m, g, 0.5, Structure::Elliptical { tau: 2.0 }).unwrap();
        let eval = solve_underline_s(Complex64::new(1.5, 0.4), &ctx.h).unwrap();
        let (rz, shifted) = resolvent(&eval, &ctx).unwrap();
        assert!(!shifted);
        let scalar = Complex64::new(1.0, 0.0) / (Complex64::new(1.0, 0.0) + eval.m);
        for i in 0..p {
            for j in 0..p {
                let expect = if i == j { scalar } else { Complex64::new(0.0, 0.0) };
                assert!((rz[(i, j)] - expect).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = 3;
        let r = DMatrix::from_row_slice(3, 3, &[1.0, 0.4, 0.1, 0.4, 1.0, 0.3, 0.1, 0.3, 1.0]);
        let g = sym_sqrt(&r);
        let m = RescaledSpec::new(DMatrix::from_row_slice(
            3,
            3,
            &[1.3, 0.2, 0.0, 0.2, 0.9, 0.1, 0.0, 0.1, 1.1],
        ))
        .unwrap();
        let ctx = CltContext::new(r, m, g, 0.4, Structure::Elliptical { tau: 2.0 }).unwrap();
        let z = Complex64::new(1.2, 0.5);
        let h = 1e-6;
        let e0 = solve_underline_s(z, &ctx.h).unwrap();
        let ep = solve_underline_s(z + Complex64::new(h, 0.0), &ctx.h).unwrap();
        let em = solve_underline_s(z - Complex64::new(h, 0.0), &ctx.h).unwrap();
        let d = resolvent_derivative(&e0, &ctx);
        let (rp, _) = resolvent(&ep, &ctx).unwrap();
        let (rm, _) = resolvent(&em, &ctx).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let fd = (rp[(i, j)] - rm[(i, j)]) / Complex64::new(2.0 * h, 0.0);
                assert!((d[(i, j)] - fd).norm() < 1e-6 * (1.0 + fd.norm()));
            }
        }
    }
}
