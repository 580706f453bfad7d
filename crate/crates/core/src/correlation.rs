//! Sample covariance/correlation matrices, the spectrum of the rescaled
//! matrix `Rhat * M`, linear spectral statistics, and finite-n population
//! summaries.

use crate::error::{Error, Result};
use crate::population::SampleBatch;
use crate::scalar::{lit, Real};
use nalgebra::{DMatrix, DVector};

/// Symmetric positive-definite rescaling matrix M with cached inverse and
/// symmetric square roots.
#[derive(Debug, Clone)]
pub struct RescaledSpec<T: Real> {
    pub m: DMatrix<T>,
    pub m_inv: DMatrix<T>,
    pub m_half: DMatrix<T>,
    pub m_inv_half: DMatrix<T>,
    pub cond: T,
}

impl<T: Real> RescaledSpec<T> {
    pub fn new(m: DMatrix<T>) -> Result<Self> {
        let p = m.nrows();
        if p == 0 || m.ncols() != p {
            return Err(Error::InvalidDimension("M must be square and nonempty".into()));
        }
        let asym = (&m - m.transpose()).amax();
        let scale = m.amax();
        if asym > lit::<T>(1e-10) * (T::one() + scale) {
            return Err(Error::Configuration("M must be symmetric".into()));
        }
        let es = m.clone().symmetric_eigen();
        let lmin = es.eigenvalues.min();
        let lmax = es.eigenvalues.max();
        if lmin <= T::zero() {
            return Err(Error::Configuration("M must be positive-definite".into()));
        }
        let cond = lmax / lmin;
        if cond > lit::<T>(1e12) {
            return Err(Error::IllConditioned(format!(
                "condition number {:?} exceeds 1e12",
                cond.to_f64()
            )));
        }
        let q = &es.eigenvectors;
        let build = |f: &dyn Fn(T) -> T| -> DMatrix<T> {
            let d = DVector::from_iterator(p, es.eigenvalues.iter().map(|&l| f(l)));
            let mut qd = q.clone();
            for j in 0..p {
                let s = d[j];
                for i in 0..p {
                    qd[(i, j)] *= s;
                }
            }
            qd * q.transpose()
        };
        let m_inv = build(&|l| T::one() / l);
        let m_half = build(&|l| l.sqrt());
        let m_inv_half = build(&|l| T::one() / l.sqrt());
        let check = (&m * &m_inv - DMatrix::<T>::identity(p, p)).amax();
        if check > lit::<T>(1e-8) {
            return Err(Error::IllConditioned(format!(
                "M * M^-1 deviates from identity by {:?}",
                check.to_f64()
            )));
        }
        Ok(Self { m, m_inv, m_half, m_inv_half, cond })
    }

    pub fn identity(p: usize) -> Self {
        let i = DMatrix::<T>::identity(p, p);
        Self {
            m: i.clone(),
            m_inv: i.clone(),
            m_half: i.clone(),
            m_inv_half: i,
            cond: T::one(),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }
}

/// Descending-sorted spectrum of `Rhat * M`.
#[derive(Debug, Clone)]
pub struct Spectrum<T: Real> {
    pub eigenvalues: Vec<T>,
    pub zero_threshold: T,
}

impl<T: Real> Spectrum<T> {
    pub fn positive(&self) -> impl Iterator<Item = T> + '_ {
        let cutoff = self.zero_threshold * self.eigenvalues.first().copied().unwrap_or_else(T::zero);
        self.eigenvalues.iter().copied().filter(move |&l| l > cutoff)
    }
}

/// Sample covariance with divisor n-1 and mean centering.
pub fn sample_covariance<T: Real>(batch: &SampleBatch<T>) -> Result<DMatrix<T>> {
    let (p, n) = (batch.data.nrows(), batch.data.ncols());
    if n < 2 {
        return Err(Error::InsufficientData("sample covariance needs n >= 2".into()));
    }
    let mut mean = DVector::<T>::zeros(p);
    for j in 0..n {
        mean += batch.data.column(j);
    }
    mean /= T::from_usize_(n);
    let mut centered = batch.data.clone();
    for j in 0..n {
        for i in 0..p {
            centered[(i, j)] -= mean[i];
        }
    }
    let mut s = &centered * centered.transpose();
    s /= T::from_usize_(n - 1);
    // symmetrize against rounding
    for i in 0..p {
        for j in (i + 1)..p {
            let v = (s[(i, j)] + s[(j, i)]) * lit::<T>(0.5);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    Ok(s)
}

/// Sample correlation from a covariance matrix; unit diagonal is set exactly.
pub fn sample_correlation<T: Real>(s: &DMatrix<T>) -> Result<DMatrix<T>> {
    let p = s.nrows();
    let mut d = DVector::<T>::zeros(p);
    for i in 0..p {
        let v = s[(i, i)];
        if v <= T::zero() {
            return Err(Error::DegenerateVariable {
                index: i,
                message: "nonpositive sample variance".into(),
            });
        }
        d[i] = T::one() / v.sqrt();
    }
    let mut r = s.clone();
    for i in 0..p {
        for j in 0..p {
            r[(i, j)] *= d[i] * d[j];
        }
    }
    for i in 0..p {
        r[(i, i)] = T::one();
    }
    Ok(r)
}

/// Eigenvalues of `Rhat * M`, computed from the symmetric conjugation
/// `M^{1/2} Rhat M^{1/2}` and sorted descending.
pub fn rescaled_spectrum<T: Real>(rhat: &DMatrix<T>, m: &RescaledSpec<T>) -> Result<Spectrum<T>> {
    if rhat.nrows() != m.dim() {
        return Err(Error::InvalidDimension("Rhat and M dimensions differ".into()));
    }
    let sym = &m.m_half * rhat * &m.m_half;
    let mut eig: Vec<T> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let spec = Spectrum { eigenvalues: eig, zero_threshold: lit(1e-9) };
    // eigenvalue sum must match tr(Rhat M)
    let tr: T = (rhat * &m.m).diagonal().iter().copied().sum();
    let sum: T = spec.eigenvalues.iter().copied().sum();
    let rel = (sum - tr).abs() / (T::one() + tr.abs());
    if rel > lit::<T>(1e-8) {
        return Err(Error::Precision(format!(
            "eigenvalue sum deviates from tr(Rhat M) by rel {:?}",
            rel.to_f64()
        )));
    }
    Ok(spec)
}

/// Linear spectral statistic: sum of g over eigenvalues above the positive
/// cutoff.
pub fn lss<T: Real>(spec: &Spectrum<T>, g: impl Fn(T) -> T) -> T {
    spec.positive().map(g).sum()
}

/// Finite-n plug-ins (a_R, b_R, c_R) of the population summaries:
/// `a = tr(R + R^{-1})/n`, `b = sum (R_kl)^3 (R^{-1})_kl / n`,
/// `c = sum (R_kl)^2 / n`.
pub fn population_summaries<T: Real>(r: &DMatrix<T>, n: usize) -> Result<(T, T, T)> {
    let (sa, sb, sc) = summary_sums(r)?;
    let nf = T::from_usize_(n);
    Ok((sa / nf, sb / nf, sc / nf))
}

/// Raw summary sums without the 1/n normalization: `tr(R + R^{-1})`,
/// `sum R^3 o R^{-1}`, `sum R o R`.
pub fn summary_sums<T: Real>(r: &DMatrix<T>) -> Result<(T, T, T)> {
    let p = r.nrows();
    let rinv = r
        .clone()
        .cholesky()
        .ok_or_else(|| Error::IllConditioned("R is not positive-definite".into()))?
        .inverse();
    let mut sa = T::zero();
    for i in 0..p {
        sa += r[(i, i)] + rinv[(i, i)];
    }
    let mut sb = T::zero();
    let mut sc = T::zero();
    for i in 0..p {
        for j in 0..p {
            let rij = r[(i, j)];
            sb += rij * rij * rij * rinv[(i, j)];
            sc += rij * rij;
        }
    }
    Ok((sa, sb, sc))
}
