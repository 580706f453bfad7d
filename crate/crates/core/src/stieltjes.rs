//! The limiting-spectral-distribution fixed point: for a discrete measure H
//! (eigenvalues of R M) and ratio y, solve
//! `z = -1/m + y \int t/(1 + t m) dH(t)` for the companion transform
//! m(z), with the branch Im(m) * sign(Im z) > 0.

use crate::correlation::RescaledSpec;
use crate::error::{Error, Result};
use crate::scalar::{creal, lit, Cplx, Real};
use nalgebra::ComplexField;
use nalgebra::DMatrix;

/// Discrete spectral measure: atoms with weights, plus the dimension ratio y.
#[derive(Debug, Clone)]
pub struct SpectralMeasure<T: Real> {
    pub atoms: Vec<T>,
    pub weights: Vec<T>,
    pub y: T,
}

impl<T: Real> SpectralMeasure<T> {
    pub fn new(atoms: Vec<T>, weights: Vec<T>, y: T) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::InvalidDimension("measure needs matching nonempty atoms/weights".into()));
        }
        if y <= T::zero() {
            return Err(Error::Configuration("ratio y must be positive".into()));
        }
        let sum: T = weights.iter().copied().sum();
        if weights.iter().any(|&w| w <= T::zero()) || (sum - T::one()).abs() > lit::<T>(1e-12) {
            return Err(Error::Configuration("weights must be positive and sum to 1".into()));
        }
        Ok(Self { atoms, weights, y })
    }

    /// Equal-weight measure at the given atoms.
    pub fn equal_weights(mut atoms: Vec<T>, y: T) -> Result<Self> {
        atoms.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let w = T::one() / T::from_usize_(atoms.len());
        let weights = vec![w; atoms.len()];
        Self::new(atoms, weights, y)
    }

    /// Point mass at a single atom.
    pub fn point_mass(t: T, y: T) -> Self {
        Self { atoms: vec![t], weights: vec![T::one()], y }
    }

    pub fn t_min(&self) -> T {
        self.atoms.iter().copied().fold(self.atoms[0], |a, b| if b < a { b } else { a })
    }

    pub fn t_max(&self) -> T {
        self.atoms.iter().copied().fold(self.atoms[0], |a, b| if b > a { b } else { a })
    }

    /// `\int t^k dH(t)`.
    pub fn moment(&self, k: u32) -> T {
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * t.powi(k as i32))
            .sum()
    }

    /// `\int t/(1+tm) dH`.
    pub fn j1(&self, m: Cplx<T>) -> Cplx<T> {
        let mut acc = Cplx::new(T::zero(), T::zero());
        for (&t, &w) in self.atoms.iter().zip(&self.weights) {
            let tc = creal(t);
            acc += tc * creal(w) / (Cplx::new(T::one(), T::zero()) + tc * m);
        }
        acc
    }

    /// `\int t^2/(1+tm)^2 dH`.
    pub fn j2(&self, m: Cplx<T>) -> Cplx<T> {
        let mut acc = Cplx::new(T::zero(), T::zero());
        for (&t, &w) in self.atoms.iter().zip(&self.weights) {
            let tc = creal(t);
            let d = Cplx::new(T::one(), T::zero()) + tc * m;
            acc += tc * tc * creal(w) / (d * d);
        }
        acc
    }

    /// `\int 1/(1+tm) dH`.
    pub fn j0(&self, m: Cplx<T>) -> Cplx<T> {
        let mut acc = Cplx::new(T::zero(), T::zero());
        for (&t, &w) in self.atoms.iter().zip(&self.weights) {
            acc += creal(w) / (Cplx::new(T::one(), T::zero()) + creal(t) * m);
        }
        acc
    }
}

/// The ESD of R M as a spectral measure: atoms are the eigenvalues of
/// `M^{1/2} R M^{1/2}` with equal weights.
pub fn esd_measure<T: Real>(r: &DMatrix<T>, m: &RescaledSpec<T>, y: T) -> Result<SpectralMeasure<T>> {
    if r.nrows() != m.dim() {
        return Err(Error::InvalidDimension("R and M dimensions differ".into()));
    }
    let sym = &m.m_half * r * &m.m_half;
    let eig: Vec<T> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    SpectralMeasure::equal_weights(eig, y)
}

/// One solved point of the fixed-point equation.
#[derive(Debug, Clone, Copy)]
pub struct StieltjesEval<T: Real> {
    pub z: Cplx<T>,
    /// Stieltjes transform s(z) of the limiting spectral distribution.
    pub s: Cplx<T>,
    /// Companion transform m(z) (the solution of the fixed point).
    pub m: Cplx<T>,
    pub m_prime: Cplx<T>,
    pub residual: T,
}

fn fixed_point_residual<T: Real>(z: Cplx<T>, m: Cplx<T>, h: &SpectralMeasure<T>) -> Cplx<T> {
    -Cplx::new(T::one(), T::zero()) / m + creal(h.y) * h.j1(m) - z
}

/// Solve the fixed point at z. Damped fixed-point iteration from
/// m0 = -1/z, followed by a Newton polish; the returned eval satisfies
/// residual <= 1e-10 and the Im-sign branch condition.
pub fn solve_underline_s<T: Real>(z: Cplx<T>, h: &SpectralMeasure<T>) -> Result<StieltjesEval<T>> {
    solve_with_guess(z, h, None)
}

/// Same as [`solve_underline_s`] but seeded with a previous solution, which
/// speeds up continuation along contours and small imaginary offsets.
pub fn solve_with_guess<T: Real>(
    z: Cplx<T>,
    h: &SpectralMeasure<T>,
    guess: Option<Cplx<T>>,
) -> Result<StieltjesEval<T>> {
    let one = Cplx::new(T::one(), T::zero());
    let tol_step = lit::<T>(1e-12);
    let mut m = guess.unwrap_or(-one / z);
    let mut res_prev = fixed_point_residual(z, m, h).modulus();
    let mut damping = T::one();
    let max_fp = 10_000usize;
    for _ in 0..max_fp {
        let target = one / (-z + creal(h.y) * h.j1(m));
        let m_new = m + (target - m) * creal(damping);
        let res_new = fixed_point_residual(z, m_new, h).modulus();
        if res_new > res_prev && damping > lit::<T>(0.06) {
            damping *= lit::<T>(0.5);
            continue;
        }
        let step = (m_new - m).modulus();
        m = m_new;
        res_prev = res_new;
        if step < tol_step * (T::one() + m.modulus()) {
            break;
        }
    }
    // Newton polish: F(m) = -1/m + y J1(m) - z, F'(m) = 1/m^2 - y J2(m)
    for _ in 0..60 {
        let f = fixed_point_residual(z, m, h);
        let df = one / (m * m) - creal(h.y) * h.j2(m);
        if df.modulus() < lit::<T>(1e-300) {
            break;
        }
        let step = f / df;
        m -= step;
        if step.modulus() < lit::<T>(1e-15) * (T::one() + m.modulus()) {
            break;
        }
    }
    let residual = fixed_point_residual(z, m, h).modulus();
    if residual > lit::<T>(1e-10) * (T::one() + z.modulus()) {
        return Err(Error::SolverNoConvergence { residual: residual.to_f64().unwrap_or(f64::NAN) });
    }
    if z.im != T::zero() && m.im * z.im < T::zero() {
        return Err(Error::Branch(format!(
            "Im m has the wrong sign at z = {:?}+{:?}i",
            z.re.to_f64(),
            z.im.to_f64()
        )));
    }
    let m_prime = one / (one / (m * m) - creal(h.y) * h.j2(m));
    // s(z) = -(1/z) \int dH/(1+tm): stable form of the primal equation
    let s = -h.j0(m) / z;
    Ok(StieltjesEval { z, s, m, m_prime, residual })
}


#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    #[test]
    fn matches_mp_closed_form() {
        let h = SpectralMeasure::point_mass(1.0f64, 0.5);
        for &x in &[-1.0, 0.3, 1.0, 2.5, 4.0] {
            for &v in &[0.01, 0.1, 1.0] {
                let z = Complex64::new(x, v);
                let e = solve_underline_s(z, &h).unwrap();
                let oracle = mp_oracle::mp_m(z, 0.5);
                assert!((e.m - oracle).modulus() < 1e-9, "z={z} m={} oracle={oracle}", e.m);
            }
        }
    }

    #[test]
    fn companion_relation_holds() {
        let h = SpectralMeasure::equal_weights(vec![0.5, 1.0, 2.0], 0.7).unwrap();
        let z = Complex64::new(1.3, 0.4);
        let e = solve_underline_s(z, &h).unwrap();
        // m = -(1-y)/z + y s
        let lhs = e.m;
        let rhs = -Complex64::new(1.0 - 0.7, 0.0) / z + 0.7 * e.s;
        assert!((lhs - rhs).modulus() < 1e-12);
        assert!(e.residual <= 1e-10);
        assert!(e.m.im > 0.0 && e.s.im > 0.0);
    }

    #[test]
    fn small_y_degenerates_to_point_mass_transform() {
        // y -> 0+: s(z) -> 1/(1-z) for H = delta_1
        let h = SpectralMeasure::point_mass(1.0f64, 1e-6);
        let z = Complex64::new(0.4, 0.2);
        let e = solve_underline_s(z, &h).unwrap();
        let expect = Complex64::new(1.0, 0.0) / (Complex64::new(1.0, 0.0) - z);
        assert!((e.s - expect).modulus() < 1e-4, "s={} expect={expect}", e.s);
    }

    #[test]
    fn m_prime_matches_finite_differences() {
        let h = SpectralMeasure::equal_weights(vec![0.6, 1.0, 1.4, 2.2], 0.5).unwrap();
        let zs = [
            Complex64::new(0.2, 0.3),
            Complex64::new(1.5, 0.1),
            Complex64::new(3.0, 1.0),
            Complex64::new(-0.5, 0.4),
        ];
        let dh = 1e-5;
        for z in zs {
            let e = solve_underline_s(z, &h).unwrap();
            let ep = solve_underline_s(z + Complex64::new(dh, 0.0), &h).unwrap();
            let em = solve_underline_s(z - Complex64::new(dh, 0.0), &h).unwrap();
            let fd = (ep.m - em.m) / (2.0 * dh);
            assert!((e.m_prime - fd).modulus() / e.m_prime.modulus() < 1e-6);
        }
    }

    #[test]
    fn y_above_one_branch() {
        let h = SpectralMeasure::point_mass(1.0f64, 2.0);
        let z = Complex64::new(1.0, 0.5);
        let e = solve_underline_s(z, &h).unwrap();
        assert!(e.m.im > 0.0);
        assert!(e.residual < 1e-10);
    }
}
