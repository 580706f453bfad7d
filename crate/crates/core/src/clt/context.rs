//! Evaluation context for the CLT kernels.
//!
//! For a symmetric positive-definite M, write `B = M^{1/2} R M^{1/2} =
//! Q diag(lam) Q^T`. With `Phi = M^{-1/2} Q` and `Psi = M^{1/2} Q`,
//!
//!   R M           = Phi diag(lam)   Psi^T,
//!   (I + m R M)^-1 = Phi diag(w)    Psi^T,   w_a = 1/(1 + lam_a m),
//!
//! and every diagonal bilinear form appearing in the kernels becomes a real
//! (p x p) "pattern" matrix applied to a function of (lam, m). Quartic sums
//! over matrix entries reduce to fixed p x p tensors contracted with w.

use crate::correlation::RescaledSpec;
use crate::error::{Error, Result};
use crate::scalar::{creal, lit, Cplx, Real};
use crate::stieltjes::{solve_with_guess, SpectralMeasure, StieltjesEval};
use crate::support::{support_interval, SupportInfo};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Data-generating structure and its fourth-order parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Structure<T> {
    Elliptical { tau: T },
    Linear { beta_x: T },
}

impl<T: Real> Structure<T> {
    pub fn beta_x(&self) -> T {
        match self {
            Structure::Elliptical { .. } => T::zero(),
            Structure::Linear { beta_x } => *beta_x,
        }
    }
    pub fn tau(&self) -> Option<T> {
        match self {
            Structure::Elliptical { tau } => Some(*tau),
            Structure::Linear { .. } => None,
        }
    }
}

/// Immutable kernel-evaluation bundle for one rescaling matrix M.
#[derive(Debug, Clone)]
pub struct CltContext<T: Real> {
    pub r: DMatrix<T>,
    pub m: RescaledSpec<T>,
    pub g: DMatrix<T>,
    pub y: T,
    pub structure: Structure<T>,
    pub h: SpectralMeasure<T>,
    /// Support of the LSD when it is a single interval; contour builders
    /// require it, point evaluations do not.
    pub support: Option<SupportInfo<T>>,
    pub p: usize,
    pub(crate) lam: DVector<T>,
    pub(crate) phi: DMatrix<T>,
    pub(crate) psi: DMatrix<T>,
    /// diag patterns: [Rz]_kk = E1 w ; [Rz R]_kk = E2 (lam w)
    pub(crate) e1: DMatrix<T>,
    pub(crate) e2: DMatrix<T>,
    /// (G^T Psi) o (G^T Psi): [G^T M Rz G]_kk = EG1 w
    pub(crate) eg1: DMatrix<T>,
    pub(crate) gg: DMatrix<T>,
    /// per-row trace weights: elliptical 1; linear 1 + (beta/2) sum_j g_{kj}^4
    pub(crate) kap: DVector<T>,
    /// diag(Psi^T (W o M^{-1}) Psi) with the structure weight W
    pub(crate) h_vec: DVector<T>,
    /// covariance weight matrix: 2 R o R (+ beta QG for the linear case)
    pub(crate) w_cov: DMatrix<T>,
    pub(crate) k11: DMatrix<T>,
    pub(crate) k12: DMatrix<T>,
    /// linear only: K5 + K5^T for the beta-weighted derivative pair
    pub(crate) k5s: Option<DMatrix<T>>,
    fingerprint: u64,
}

/// K tensor: K[a,b] = sum_{k,l} W_kl X1[k,a] Y1[l,a] X2[l,b] Y2[k,b].
fn k_tensor<T: Real>(
    w: &DMatrix<T>,
    x1: &DMatrix<T>,
    y1: &DMatrix<T>,
    x2: &DMatrix<T>,
    y2: &DMatrix<T>,
) -> DMatrix<T> {
    let p = w.nrows();
    (0..p)
        .into_par_iter()
        .fold(
            || DMatrix::<T>::zeros(p, p),
            |mut acc, k| {
                // D[a,b] = sum_l W_kl Y1[l,a] X2[l,b]
                let mut scaled = DMatrix::<T>::zeros(p, p);
                for l in 0..p {
                    let wk = w[(k, l)];
                    if wk != T::zero() {
                        for a in 0..p {
                            scaled[(l, a)] = wk * y1[(l, a)];
                        }
                    }
                }
                let d = scaled.transpose() * x2;
                for a in 0..p {
                    let x1ka = x1[(k, a)];
                    for b in 0..p {
                        acc[(a, b)] += x1ka * y2[(k, b)] * d[(a, b)];
                    }
                }
                acc
            },
        )
        .reduce(|| DMatrix::<T>::zeros(p, p), |a, b| a + b)
}

impl<T: Real> CltContext<T> {
    pub fn new(
        r: DMatrix<T>,
        m: RescaledSpec<T>,
        g: DMatrix<T>,
        y: T,
        structure: Structure<T>,
    ) -> Result<Self> {
        let p = r.nrows();
        if m.dim() != p || g.nrows() != p || g.ncols() != p {
            return Err(Error::InvalidDimension("R, M, G must share dimension".into()));
        }
        let ggt = &g * g.transpose();
        if (&ggt - &r).amax() > lit::<T>(1e-10) {
            return Err(Error::Configuration("G G^T must equal R (within 1e-10)".into()));
        }
        let b = &m.m_half * &r * &m.m_half;
        let es = b.symmetric_eigen();
        let lam = es.eigenvalues.clone();
        let q = es.eigenvectors;
        let phi = &m.m_inv_half * &q;
        let psi = &m.m_half * &q;
        let h = SpectralMeasure::equal_weights(lam.iter().copied().collect(), y)?;
        let support = support_interval(&h).ok();

        let e1 = phi.component_mul(&psi);
        let e2 = phi.component_mul(&phi);
        let gt_psi = g.transpose() * &psi;
        let eg1 = gt_psi.component_mul(&gt_psi);
        let gg = g.component_mul(&g);

        let beta = structure.beta_x();
        let half_beta = beta * lit::<T>(0.5);
        let rr = r.component_mul(&r);
        // quartic weight: W_struct = R o R (+ beta/2 (GoG)(GoG)^T in the linear case)
        let w_struct = if beta == T::zero() {
            rr.clone()
        } else {
            &rr + (&gg * gg.transpose()) * half_beta
        };
        let kap = if beta == T::zero() {
            DVector::from_element(p, T::one())
        } else {
            let g4 = gg.component_mul(&gg);
            DVector::from_fn(p, |k, _| T::one() + half_beta * g4.row(k).sum())
        };
        let f = w_struct.component_mul(&m.m_inv);
        let h_vec = DVector::from_fn(p, |a, _| {
            let col = psi.column(a);
            (&f * col).dot(&col.clone_owned())
        });
        let w_cov = if beta == T::zero() {
            &rr * lit::<T>(2.0)
        } else {
            &rr * lit::<T>(2.0) + (&gg * gg.transpose()) * beta
        };
        let k11 = k_tensor(&w_struct, &phi, &psi, &phi, &psi);
        let k12 = k_tensor(&w_struct, &phi, &phi, &psi, &psi);
        let k5s = if beta == T::zero() {
            None
        } else {
            let k5 = k_tensor(&gg, &psi, &gt_psi, &gt_psi, &phi);
            Some(&k5 + k5.transpose())
        };

        let mut fp: u64 = 0xcbf29ce484222325;
        let mut eat = |x: u64| {
            fp ^= x;
            fp = fp.wrapping_mul(0x100000001b3);
        };
        for v in r.iter().chain(m.m.iter()).chain(g.iter()) {
            eat(v.to_f64().unwrap_or(0.0).to_bits());
        }
        eat(y.to_f64().unwrap_or(0.0).to_bits());

        Ok(Self {
            r,
            m,
            g,
            y,
            structure,
            h,
            support,
            p,
            lam,
            phi,
            psi,
            e1,
            e2,
            eg1,
            gg,
            kap,
            h_vec,
            w_cov,
            k11,
            k12,
            k5s,
            fingerprint: fp,
        })
    }

    /// Context with M = I (spectrum of Rhat itself).
    pub fn with_identity_m(r: DMatrix<T>, g: DMatrix<T>, y: T, structure: Structure<T>) -> Result<Self> {
        let p = r.nrows();
        Self::new(r, RescaledSpec::identity(p), g, y, structure)
    }

    pub fn same_matrix(&self, other: &Self) -> bool {
        self.fingerprint == other.fingerprint
    }

    /// The single-interval support, or the detailed error that prevented it.
    pub fn require_support(&self) -> Result<SupportInfo<T>> {
        match self.support {
            Some(s) => Ok(s),
            None => support_interval(&self.h).map_err(|e| e),
        }
    }

    /// Solve the Stieltjes fixed point and cache the per-node quantities.
    pub fn node(&self, z: Cplx<T>, guess: Option<Cplx<T>>) -> Result<NodeData<T>> {
        let eval = solve_with_guess(z, &self.h, guess)?;
        Ok(self.node_from_eval(&eval))
    }

    /// Node data from an externally supplied solver evaluation.
    pub fn node_from_eval(&self, eval: &StieltjesEval<T>) -> NodeData<T> {
        let p = self.p;
        let m = eval.m;
        let mp = eval.m_prime;
        let one = Cplx::new(T::one(), T::zero());
        let mut w = vec![one; p];
        let mut wd = vec![one; p];
        let mut u = vec![one; p];
        let mut ud = vec![one; p];
        for a in 0..p {
            let lam = creal(self.lam[a]);
            let d = one + lam * m;
            let wa = one / d;
            w[a] = wa;
            wd[a] = -mp * lam * wa * wa;
            u[a] = lam * wa;
            ud[a] = lam * wd[a];
        }
        NodeData { z: eval.z, m, mp, w, wd, u, ud }
    }

    /// Apply a real pattern matrix to a complex coefficient vector.
    pub(crate) fn apply_pattern(&self, e: &DMatrix<T>, v: &[Cplx<T>]) -> Vec<Cplx<T>> {
        let p = self.p;
        let re = DVector::from_fn(p, |i, _| v[i].re);
        let im = DVector::from_fn(p, |i, _| v[i].im);
        let rre = e * re;
        let rim = e * im;
        (0..p).map(|i| Cplx::new(rre[i], rim[i])).collect()
    }

    /// Complex bilinear form u^T K v with a real K.
    pub(crate) fn bilinear(&self, k: &DMatrix<T>, u: &[Cplx<T>], v: &[Cplx<T>]) -> Cplx<T> {
        let p = self.p;
        let vre = DVector::from_fn(p, |i, _| v[i].re);
        let vim = DVector::from_fn(p, |i, _| v[i].im);
        let kre = k * vre;
        let kim = k * vim;
        let mut acc = Cplx::new(T::zero(), T::zero());
        for i in 0..p {
            acc += u[i] * Cplx::new(kre[i], kim[i]);
        }
        acc
    }

    /// Mean over H of `lam^2 w^3`.
    pub(crate) fn mean_l2w3(&self, node: &NodeData<T>) -> Cplx<T> {
        let mut acc = Cplx::new(T::zero(), T::zero());
        for a in 0..self.p {
            let l = creal(self.lam[a]);
            let w = node.w[a];
            acc += l * l * w * w * w;
        }
        acc / creal(T::from_usize_(self.p))
    }

    /// Mean over H of `lam w^2`.
    pub(crate) fn mean_lw2(&self, node: &NodeData<T>) -> Cplx<T> {
        let mut acc = Cplx::new(T::zero(), T::zero());
        for a in 0..self.p {
            acc += creal(self.lam[a]) * node.w[a] * node.w[a];
        }
        acc / creal(T::from_usize_(self.p))
    }

    /// The normalization y/p standing in for every `lim 1/n`.
    pub(crate) fn inv_n(&self) -> T {
        self.y / T::from_usize_(self.p)
    }

    /// Overlap pattern for the cross-context trace
    /// `tr[R M_j Rz_j(z1) R M_h Rz_h(z2)] = u1^T C u2`:
    /// `C = (Psi_j^T Phi_h) o (Phi_j^T Psi_h)`.
    pub fn cross_overlap(&self, other: &Self) -> DMatrix<T> {
        let a = self.psi.transpose() * &other.phi;
        let b = self.phi.transpose() * &other.psi;
        a.component_mul(&b)
    }
}

/// Per-z cached quantities shared by all kernel terms.
#[derive(Debug, Clone)]
pub struct NodeData<T: Real> {
    pub z: Cplx<T>,
    pub m: Cplx<T>,
    pub mp: Cplx<T>,
    /// w_a = 1/(1 + lam_a m)
    pub w: Vec<Cplx<T>>,
    /// d w_a / dz
    pub wd: Vec<Cplx<T>>,
    /// lam_a w_a
    pub u: Vec<Cplx<T>>,
    /// lam_a dw_a/dz
    pub ud: Vec<Cplx<T>>,
}

impl<T: Real> NodeData<T> {
    pub fn w2(&self) -> Vec<Cplx<T>> {
        self.w.iter().map(|&w| w * w).collect()
    }
    pub fn lw(&self) -> &[Cplx<T>] {
        &self.u
    }
    pub fn lwd(&self) -> &[Cplx<T>] {
        &self.ud
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

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

    #[test]
    fn context_requires_g_factorization() {
        let r = ar1(4, 0.5);
        let g_bad = DMatrix::<f64>::identity(4, 4);
        let m = RescaledSpec::identity(4);
        assert!(CltContext::new(r, m, g_bad, 0.5, Structure::Elliptical { tau: 2.0 }).is_err());
    }

    #[test]
    fn diag_patterns_match_dense_resolvent() {
        let p = 6;
        let r = ar1(p, 0.6);
        let g = sym_sqrt(&r);
        let mmat = ar1(p, 0.3) + DMatrix::identity(p, p) * 0.5;
        let m = RescaledSpec::new(mmat.clone()).unwrap();
        let ctx = CltContext::new(r.clone(), m, g, 0.5, Structure::Elliptical { tau: 2.0 }).unwrap();
        let z = Cplx::new(1.3, 0.6);
        let node = ctx.node(z, None).unwrap();
        // dense (I + m R M)^{-1}
        let rm = &r * &mmat;
        let mut a = DMatrix::<Cplx<f64>>::identity(p, p);
        for i in 0..p {
            for j in 0..p {
                a[(i, j)] += node.m * Cplx::new(rm[(i, j)], 0.0);
            }
        }
        let rz = a.try_inverse().unwrap();
        let d_r = ctx.apply_pattern(&ctx.e1, &node.w);
        let lw: Vec<_> = node.u.clone();
        let d_rr = ctx.apply_pattern(&ctx.e2, &lw);
        let rz_r = {
            let mut rr = DMatrix::<Cplx<f64>>::zeros(p, p);
            for i in 0..p {
                for j in 0..p {
                    rr[(i, j)] = Cplx::new(r[(i, j)], 0.0);
                }
            }
            &rz * rr
        };
        for k in 0..p {
            assert!((d_r[k] - rz[(k, k)]).norm() < 1e-10);
            assert!((d_rr[k] - rz_r[(k, k)]).norm() < 1e-10);
        }
    }

    #[test]
    fn k_tensor_matches_brute_force() {
        let p = 5;
        let r = ar1(p, 0.5);
        let g = sym_sqrt(&r);
        let m = RescaledSpec::new(dmatrix![
            1.0, 0.2, 0.0, 0.0, 0.0;
            0.2, 1.5, 0.1, 0.0, 0.0;
            0.0, 0.1, 0.8, 0.0, 0.0;
            0.0, 0.0, 0.0, 1.2, 0.3;
            0.0, 0.0, 0.0, 0.3, 2.0
        ])
        .unwrap();
        let ctx = CltContext::new(r.clone(), m, g, 0.4, Structure::Elliptical { tau: 2.0 }).unwrap();
        let w = r.component_mul(&r);
        let mut brute = DMatrix::<f64>::zeros(p, p);
        for a in 0..p {
            for b in 0..p {
                let mut acc = 0.0;
                for k in 0..p {
                    for l in 0..p {
                        acc += w[(k, l)] * ctx.phi[(k, a)] * ctx.psi[(l, a)] * ctx.phi[(l, b)] * ctx.psi[(k, b)];
                    }
                }
                brute[(a, b)] = acc;
            }
        }
        assert!((&ctx.k11 - brute).amax() < 1e-12);
    }
}
