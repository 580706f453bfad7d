//! Cross-validation of the three evaluation paths for asymptotic LSS moments
//! and of the general-M mean kernel against an independent perturbation
//! oracle for g(x) = x.

use corrspec_core::clt::{
    clt_cov, clt_cov_cross, clt_mean, cov_contour_pair, identity_case_moments, mean_contour,
    unit_circle_cov, unit_circle_mean, CltContext, Structure,
};
use corrspec_core::correlation::{summary_sums, RescaledSpec};
use nalgebra::DMatrix;
use num_complex::Complex64;

fn ar1(p: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| rho.powi((i as i32 - j as i32).abs()))
}

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

fn sym_inv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let inv = m.clone().try_inverse().unwrap();
    (inv.clone() + inv.transpose()) * 0.5
}

fn gx(z: Complex64) -> Complex64 {
    z
}
fn gx2(z: Complex64) -> Complex64 {
    z * z
}

/// E X_{g1} via elliptical contour kernels.
fn mean_path(ctx: &CltContext<f64>, g: impl Fn(Complex64) -> Complex64) -> f64 {
    let sup = ctx.require_support().unwrap();
    let contour = mean_contour(&sup, ctx.y, 0.5, 1024, 0.1).unwrap();
    clt_mean(g, ctx, &contour).unwrap().0
}

fn cov_path(
    ctx: &CltContext<f64>,
    g1: impl Fn(Complex64) -> Complex64,
    g2: impl Fn(Complex64) -> Complex64,
) -> f64 {
    let sup = ctx.require_support().unwrap();
    let (c1, c2) = cov_contour_pair(&sup, &sup, 0.6, 512, 0.1).unwrap();
    clt_cov(g1, g2, ctx, &c1, &c2).unwrap().0
}

#[test]
fn triple_path_equivalence_identity_rm() {
    // R M = I with a non-identity AR(1) R at p = 20: the contour kernels, the
    // unit-circle integrals, and the closed forms agree pairwise to 1e-4.
    let p = 20;
    let r = ar1(p, 0.5);
    let g = sym_sqrt(&r);
    let m = RescaledSpec::new(sym_inv(&r)).unwrap();
    let (sa, sb, sc) = summary_sums(&r).unwrap();
    for &y in &[0.1, 0.5, 0.8, 2.0] {
        let (a_r, b_r, c_r) = (sa * y / p as f64, sb * y / p as f64, sc * y / p as f64);
        for &tau in &[0.0, 2.0, 4.0] {
            let ctx = CltContext::new(
                r.clone(),
                m.clone(),
                g.clone(),
                y,
                Structure::Elliptical { tau },
            )
            .unwrap();
            let closed = identity_case_moments(a_r, b_r, c_r, y, tau).unwrap();
            let circ1 = unit_circle_mean(gx, a_r, b_r, y, tau).unwrap();
            let circ2 = unit_circle_mean(gx2, a_r, b_r, y, tau).unwrap();
            let cont1 = mean_path(&ctx, gx);
            let cont2 = mean_path(&ctx, gx2);
            for (label, lhs, rhs) in [
                ("closed vs circle g1", closed.means[0], circ1),
                ("closed vs circle g2", closed.means[1], circ2),
                ("closed vs contour g1", closed.means[0], cont1),
                ("closed vs contour g2", closed.means[1], cont2),
                ("circle vs contour g1", circ1, cont1),
                ("circle vs contour g2", circ2, cont2),
            ] {
                assert!(
                    (lhs - rhs).abs() < 1e-4 * (1.0 + lhs.abs()),
                    "y={y} tau={tau} {label}: {lhs} vs {rhs}"
                );
            }
        }
        // covariances are tau-free
        let ctx = CltContext::new(
            r.clone(),
            m.clone(),
            g.clone(),
            y,
            Structure::Elliptical { tau: 2.0 },
        )
        .unwrap();
        let closed = identity_case_moments(a_r, b_r, c_r, y, 2.0).unwrap();
        let pairs: [(&str, f64, f64); 3] = [
            ("var g1", closed.cov[(0, 0)], cov_path(&ctx, gx, gx)),
            ("var g2", closed.cov[(1, 1)], cov_path(&ctx, gx2, gx2)),
            ("cov", closed.cov[(0, 1)], cov_path(&ctx, gx, gx2)),
        ];
        for (label, lhs, rhs) in pairs {
            assert!(
                (lhs - rhs).abs() < 1e-4 * (1.0 + lhs.abs()),
                "y={y} cov {label}: closed {lhs} vs contour {rhs}"
            );
            let circ = match label {
                "var g1" => unit_circle_cov(gx, gx, c_r, y).unwrap(),
                "var g2" => unit_circle_cov(gx2, gx2, c_r, y).unwrap(),
                _ => unit_circle_cov(gx, gx2, c_r, y).unwrap(),
            };
            assert!(
                (lhs - circ).abs() < 1e-4 * (1.0 + lhs.abs()),
                "y={y} cov {label}: closed {lhs} vs circle {circ}"
            );
        }
    }
}

/// Independent oracle for the general-M linear statistic g(x) = x under a
/// Gaussian population: first-order perturbation of the sample correlation
/// gives E X_{g1} = -(y/(2p)) [tr(M R) - sum_{kl} M_kl R_kl^3].
fn g1_oracle(r: &DMatrix<f64>, m: &DMatrix<f64>, y: f64) -> f64 {
    let p = r.nrows() as f64;
    let tr_mr = (m * r).trace();
    let mut cubic = 0.0;
    for i in 0..r.nrows() {
        for j in 0..r.nrows() {
            cubic += m[(i, j)] * r[(i, j)].powi(3);
        }
    }
    -(y / (2.0 * p)) * (tr_mr - cubic)
}

#[test]
fn general_m_mean_matches_perturbation_oracle() {
    let p = 60;
    let y = 0.5;
    let cases = [
        (ar1(p, 0.5), ar1(p, 0.3)),
        (ar1(p, 0.5), DMatrix::identity(p, p)),
        (ar1(p, 0.6), ar1(p, 0.6)),
    ];
    for (r, mmat) in cases {
        let g = sym_sqrt(&r);
        let m = RescaledSpec::new(mmat.clone()).unwrap();
        let ctx = CltContext::new(r.clone(), m, g, y, Structure::Elliptical { tau: 2.0 }).unwrap();
        let got = mean_path(&ctx, gx);
        let oracle = g1_oracle(&r, &mmat, y);
        assert!(
            (got - oracle).abs() < 2e-3 * (1.0 + oracle.abs()),
            "kernel {got} vs oracle {oracle}"
        );
    }
}

#[test]
fn lss_of_trace_is_degenerate_at_identity_m() {
    // tr Rhat = p identically: the mean and the variance of X_{g1} at M = I
    // must vanish for any R.
    let p = 60;
    let r = ar1(p, 0.6);
    let g = sym_sqrt(&r);
    let ctx = CltContext::with_identity_m(r, g, 0.5, Structure::Elliptical { tau: 2.0 }).unwrap();
    let mean = mean_path(&ctx, gx);
    assert!(mean.abs() < 1e-8, "mean {mean}");
    let var = cov_path(&ctx, gx, gx);
    assert!(var.abs() < 1e-8, "var {var}");
}

#[test]
fn cross_route_agrees_with_same_route() {
    let p = 40;
    let r = ar1(p, 0.5);
    let g = sym_sqrt(&r);
    let y = 0.5;
    let s = Structure::Elliptical { tau: 2.0 };
    let m = RescaledSpec::new(sym_inv(&r)).unwrap();
    let ctx_a = CltContext::new(r.clone(), m.clone(), g.clone(), y, s).unwrap();
    let ctx_b = CltContext::new(r, m, g, y, s).unwrap();
    let sup = ctx_a.require_support().unwrap();
    let (c1, c2) = cov_contour_pair(&sup, &sup, 0.6, 512, 0.1).unwrap();
    let same = clt_cov(gx, gx2, &ctx_a, &c1, &c2).unwrap().0;
    let cross = clt_cov_cross(gx, &ctx_a, gx2, &ctx_b, &c1, &c2).unwrap().0;
    assert!(
        (same - cross).abs() < 1e-6 * (1.0 + same.abs()),
        "same {same} cross {cross}"
    );
}

#[test]
fn linear_gaussian_matches_elliptical_chisq() {
    // A Gaussian population lies in both model classes (beta_x = 0, tau = 2):
    // contour means must agree.
    let p = 40;
    let r = ar1(p, 0.5);
    let g = sym_sqrt(&r);
    let mmat = ar1(p, 0.25);
    let y = 0.5;
    let ell = CltContext::new(
        r.clone(),
        RescaledSpec::new(mmat.clone()).unwrap(),
        g.clone(),
        y,
        Structure::Elliptical { tau: 2.0 },
    )
    .unwrap();
    let lin = CltContext::new(
        r,
        RescaledSpec::new(mmat).unwrap(),
        g,
        y,
        Structure::Linear { beta_x: 0.0 },
    )
    .unwrap();
    for gfun in [gx as fn(Complex64) -> Complex64, gx2] {
        let a = mean_path(&ell, gfun);
        let b = mean_path(&lin, gfun);
        assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()), "{a} vs {b}");
    }
    let va = cov_path(&ell, gx2, gx2);
    let vb = cov_path(&lin, gx2, gx2);
    assert!((va - vb).abs() < 1e-6 * (1.0 + va.abs()));
}

#[test]
fn contour_doubling_stability() {
    let p = 20;
    let r = ar1(p, 0.5);
    let g = sym_sqrt(&r);
    let m = RescaledSpec::new(sym_inv(&r)).unwrap();
    let ctx = CltContext::new(r, m, g, 0.5, Structure::Elliptical { tau: 2.0 }).unwrap();
    let sup = ctx.require_support().unwrap();
    let c_a = mean_contour(&sup, ctx.y, 0.5, 2048, 0.1).unwrap();
    let c_b = mean_contour(&sup, ctx.y, 0.5, 4096, 0.1).unwrap();
    let (v_a, _) = clt_mean(gx2, &ctx, &c_a).unwrap();
    let (v_b, _) = clt_mean(gx2, &ctx, &c_b).unwrap();
    assert!((v_a - v_b).abs() < 1e-8 * (1.0 + v_a.abs()));
}
