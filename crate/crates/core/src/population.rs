//! Population specifications and samplers for the two data-generating
//! structures: elliptical (random radius times a uniform direction) and
//! linear independent components.

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Which data-generating structure a population follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StructureKind {
    Elliptical,
    LinearIC,
}

/// Law of the elliptical radius rho. All laws are normalized so E rho^2 = p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RadiusLaw {
    /// rho^2 ~ chi^2_p; fourth-moment parameter tau = 2.
    ChiSq,
    /// rho ~ Gamma(p, 1) rescaled by sqrt(p/(p+p^2)); tau = 4 + o(1).
    GammaNormalized,
    /// rho^2 = p deterministically; tau = 0.
    Constant,
}

impl RadiusLaw {
    /// The second-order fourth-moment parameter tau with E rho^4 = p^2 + tau p + o(p).
    pub fn tau<T: Real>(self) -> T {
        match self {
            RadiusLaw::ChiSq => lit(2.0),
            RadiusLaw::GammaNormalized => lit(4.0),
            RadiusLaw::Constant => T::zero(),
        }
    }
}

/// Entry law of the linear independent-component structure, standardized to
/// mean zero and unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntryLaw {
    /// beta_x = 0.
    Gaussian,
    /// Unit-variance Laplace; beta_x = E x^4 - 3 = 3.
    DoubleExponential,
}

impl EntryLaw {
    pub fn beta_x<T: Real>(self) -> T {
        match self {
            EntryLaw::Gaussian => T::zero(),
            EntryLaw::DoubleExponential => lit(3.0),
        }
    }
}

/// Scalar sampling methods for the laws used here. Implemented for `f32` and
/// `f64`; keeps the rand_distr trait bounds out of the generic signatures.
pub trait RandScalar: Real {
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
    fn chi_squared<R: Rng + ?Sized>(df: Self, rng: &mut R) -> Self;
    fn gamma<R: Rng + ?Sized>(shape: Self, scale: Self, rng: &mut R) -> Self;
    fn uniform<R: Rng + ?Sized>(lo: Self, hi: Self, rng: &mut R) -> Self;
    /// Laplace with unit variance (scale 1/sqrt(2)).
    fn laplace_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let u: Self = Self::uniform(-Self::one(), Self::one(), rng);
        let b = Self::lit(std::f64::consts::FRAC_1_SQRT_2);
        // inverse CDF; u = 0 maps to 0
        let a = Self::one() - u.abs();
        let mag = -b * a.ln();
        if u < Self::zero() {
            -mag
        } else {
            mag
        }
    }
}

macro_rules! impl_rand_scalar {
    ($t:ty) => {
        impl RandScalar for $t {
            fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.sample(rand_distr::StandardNormal)
            }
            fn chi_squared<R: Rng + ?Sized>(df: Self, rng: &mut R) -> Self {
                rng.sample(rand_distr::ChiSquared::new(df).expect("df > 0"))
            }
            fn gamma<R: Rng + ?Sized>(shape: Self, scale: Self, rng: &mut R) -> Self {
                rng.sample(rand_distr::Gamma::new(shape, scale).expect("valid gamma"))
            }
            fn uniform<R: Rng + ?Sized>(lo: Self, hi: Self, rng: &mut R) -> Self {
                rng.gen_range(lo..hi)
            }
        }
    };
}
impl_rand_scalar!(f32);
impl_rand_scalar!(f64);

/// Full description of a data-generating law.
///
/// The moment condition E|(rho^2-p)/sqrt(p)|^{2+eps} < infinity behind the
/// elliptical CLT holds for every radius law offered here; it plays no
/// runtime role and is not checked.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
#[serde(try_from = "PopulationSpecRepr<T>", into = "PopulationSpecRepr<T>")]
pub struct PopulationSpec<T: Real> {
    pub kind: StructureKind,
    pub p: usize,
    pub gamma: DMatrix<T>,
    pub mu: DVector<T>,
    pub radius_law: Option<RadiusLaw>,
    pub tau: T,
    pub entry_law: Option<EntryLaw>,
    pub beta_x: T,
}

/// JSON wire form: field names per the domain model, matrices as row-major
/// nested arrays.
#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
struct PopulationSpecRepr<T: Real> {
    kind: StructureKind,
    p: usize,
    gamma: Vec<Vec<T>>,
    mu: Vec<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius_law: Option<RadiusLaw>,
    tau: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entry_law: Option<EntryLaw>,
    beta_x: T,
}

impl<T: Real> From<PopulationSpec<T>> for PopulationSpecRepr<T> {
    fn from(s: PopulationSpec<T>) -> Self {
        let gamma = (0..s.p)
            .map(|i| (0..s.p).map(|j| s.gamma[(i, j)]).collect())
            .collect();
        Self {
            kind: s.kind,
            p: s.p,
            gamma,
            mu: s.mu.iter().copied().collect(),
            radius_law: s.radius_law,
            tau: s.tau,
            entry_law: s.entry_law,
            beta_x: s.beta_x,
        }
    }
}

impl<T: Real> TryFrom<PopulationSpecRepr<T>> for PopulationSpec<T> {
    type Error = Error;
    fn try_from(r: PopulationSpecRepr<T>) -> Result<Self> {
        let p = r.p;
        if r.gamma.len() != p || r.gamma.iter().any(|row| row.len() != p) {
            return Err(Error::Parse("gamma must be a p x p row-major array".into()));
        }
        let gamma = DMatrix::from_fn(p, p, |i, j| r.gamma[i][j]);
        let mu = DVector::from_vec(r.mu);
        match r.kind {
            StructureKind::Elliptical => {
                let law = r
                    .radius_law
                    .ok_or_else(|| Error::Parse("elliptical spec needs radius_law".into()))?;
                PopulationSpec::elliptical(gamma, Some(mu), law)
            }
            StructureKind::LinearIC => {
                let law = r
                    .entry_law
                    .ok_or_else(|| Error::Parse("linear spec needs entry_law".into()))?;
                PopulationSpec::linear(gamma, Some(mu), law)
            }
        }
    }
}

impl<T: Real> PopulationSpec<T> {
    fn validate_gamma(gamma: &DMatrix<T>) -> Result<usize> {
        let p = gamma.nrows();
        if p == 0 || gamma.ncols() != p {
            return Err(Error::InvalidDimension("gamma must be square and nonempty".into()));
        }
        let svd = gamma.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin <= lit::<T>(1e-10) * smax {
            return Err(Error::Configuration(
                "gamma is rank deficient (smallest singular value <= 1e-10 * largest)".into(),
            ));
        }
        Ok(p)
    }

    pub fn elliptical(gamma: DMatrix<T>, mu: Option<DVector<T>>, law: RadiusLaw) -> Result<Self> {
        let p = Self::validate_gamma(&gamma)?;
        let mu = mu.unwrap_or_else(|| DVector::zeros(p));
        if mu.len() != p {
            return Err(Error::Configuration("mu length must equal p".into()));
        }
        Ok(Self {
            kind: StructureKind::Elliptical,
            p,
            gamma,
            mu,
            radius_law: Some(law),
            tau: law.tau(),
            entry_law: None,
            beta_x: T::zero(),
        })
    }

    pub fn linear(gamma: DMatrix<T>, mu: Option<DVector<T>>, law: EntryLaw) -> Result<Self> {
        let p = Self::validate_gamma(&gamma)?;
        let mu = mu.unwrap_or_else(|| DVector::zeros(p));
        if mu.len() != p {
            return Err(Error::Configuration("mu length must equal p".into()));
        }
        Ok(Self {
            kind: StructureKind::LinearIC,
            p,
            gamma,
            mu,
            radius_law: None,
            tau: T::zero(),
            entry_law: Some(law),
            beta_x: law.beta_x(),
        })
    }

    /// Cheap content fingerprint used to tie batches back to their spec.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |x: u64| {
            h ^= x;
            h = h.wrapping_mul(0x100000001b3);
        };
        eat(self.p as u64);
        eat(match self.kind {
            StructureKind::Elliptical => 1,
            StructureKind::LinearIC => 2,
        });
        for v in self.gamma.iter().chain(self.mu.iter()) {
            eat(v.to_f64().unwrap_or(0.0).to_bits());
        }
        h
    }
}

/// A generated sample: columns are observations.
#[derive(Debug, Clone)]
pub struct SampleBatch<T: Real> {
    pub data: DMatrix<T>,
    pub n: usize,
    pub spec_ref: u64,
    pub seed: u64,
}

/// Uniform draw from the unit sphere S^{p-1} via a normalized Gaussian.
pub fn sample_unit_sphere<T: RandScalar, R: Rng + ?Sized>(p: usize, rng: &mut R) -> Result<DVector<T>> {
    if p == 0 {
        return Err(Error::InvalidDimension("sphere dimension must be >= 1".into()));
    }
    loop {
        let v = DVector::from_fn(p, |_, _| T::std_normal(rng));
        let norm = v.norm();
        if norm > lit::<T>(1e-30) {
            return Ok(v / norm);
        }
    }
}

/// Radius draw; every law satisfies E rho^2 = p.
pub fn sample_radius<T: RandScalar, R: Rng + ?Sized>(law: RadiusLaw, p: usize, rng: &mut R) -> Result<T> {
    if p == 0 {
        return Err(Error::InvalidDimension("radius dimension must be >= 1".into()));
    }
    let pf = T::from_usize_(p);
    Ok(match law {
        RadiusLaw::ChiSq => T::chi_squared(pf, rng).sqrt(),
        RadiusLaw::GammaNormalized => {
            // deterministic rescale c = sqrt(p/(p+p^2)) so E (c X)^2 = p
            let c = (pf / (pf + pf * pf)).sqrt();
            c * T::gamma(pf, T::one(), rng)
        }
        RadiusLaw::Constant => pf.sqrt(),
    })
}

/// Generate `n` i.i.d. columns according to the spec.
pub fn generate_batch<T: RandScalar, R: Rng + ?Sized>(
    spec: &PopulationSpec<T>,
    n: usize,
    rng: &mut R,
    seed: u64,
) -> Result<SampleBatch<T>> {
    if n < 2 {
        return Err(Error::InsufficientData("need n >= 2 observations".into()));
    }
    let p = spec.p;
    let mut x = DMatrix::<T>::zeros(p, n);
    match spec.kind {
        StructureKind::Elliptical => {
            let law = spec.radius_law.expect("elliptical spec carries a radius law");
            for j in 0..n {
                let dir = sample_unit_sphere::<T, _>(p, rng)?;
                let rho = sample_radius::<T, _>(law, p, rng)?;
                for i in 0..p {
                    x[(i, j)] = rho * dir[i];
                }
            }
        }
        StructureKind::LinearIC => {
            let law = spec.entry_law.expect("linear spec carries an entry law");
            for j in 0..n {
                for i in 0..p {
                    x[(i, j)] = match law {
                        EntryLaw::Gaussian => T::std_normal(rng),
                        EntryLaw::DoubleExponential => T::laplace_unit(rng),
                    };
                }
            }
        }
    }
    let mut data = &spec.gamma * x;
    for j in 0..n {
        for i in 0..p {
            data[(i, j)] += spec.mu[i];
        }
    }
    Ok(SampleBatch { data, n, spec_ref: spec.fingerprint(), seed })
}

/// Population correlation matrix R and the normalized factor
/// G = diag(Sigma)^{-1/2} Gamma with Sigma = Gamma Gamma^T.
pub fn population_correlation<T: Real>(spec: &PopulationSpec<T>) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let sigma = &spec.gamma * spec.gamma.transpose();
    let p = spec.p;
    let mut dinv_sqrt = DVector::<T>::zeros(p);
    for i in 0..p {
        let d = sigma[(i, i)];
        if d <= T::zero() {
            return Err(Error::SingularScale(format!("Sigma has nonpositive diagonal at {i}")));
        }
        dinv_sqrt[i] = T::one() / d.sqrt();
    }
    let mut r = sigma;
    for i in 0..p {
        for j in 0..p {
            r[(i, j)] *= dinv_sqrt[i] * dinv_sqrt[j];
        }
    }
    for i in 0..p {
        r[(i, i)] = T::one();
    }
    let mut g = spec.gamma.clone();
    for i in 0..p {
        for j in 0..p {
            g[(i, j)] *= dinv_sqrt[i];
        }
    }
    Ok((r, g))
}
