//! Limiting spectral density, its cumulative distribution, the centering
//! integrals `p \int g f^{y, H} dx`, and Marchenko–Pastur moments.

use crate::error::{Error, Result};
use crate::quad::integrate_edge_singular;
use crate::scalar::{cplx, lit, Real};
use crate::stieltjes::{solve_with_guess, SpectralMeasure};
use crate::support::{support_interval, SupportInfo};

/// A density evaluation; `out_of_support` marks points outside [a, b] and
/// `clamped` marks negative values that were clipped to zero.
#[derive(Debug, Clone, Copy)]
pub struct DensityEval<T> {
    pub value: T,
    pub out_of_support: bool,
    pub clamped: bool,
}

/// Density of the LSD at x: `Im m(x + iv) / (y pi)` extrapolated to v = 0
/// by three-point Richardson in v over {1e-5, 1e-6, 1e-7}.
pub fn lsd_density<T: Real>(
    x: T,
    h: &SpectralMeasure<T>,
    support: &SupportInfo<T>,
) -> Result<DensityEval<T>> {
    if x < support.a || x > support.b {
        return Ok(DensityEval { value: T::zero(), out_of_support: true, clamped: false });
    }
    let vs = [lit::<T>(1e-5), lit::<T>(1e-6), lit::<T>(1e-7)];
    let mut ims = [T::zero(); 3];
    let mut guess = None;
    for (i, &v) in vs.iter().enumerate() {
        let e = solve_with_guess(cplx(x, v), h, guess)?;
        ims[i] = e.m.im;
        guess = Some(e.m);
    }
    // Lagrange extrapolation to v = 0
    let mut f0 = T::zero();
    for i in 0..3 {
        let mut c = T::one();
        for j in 0..3 {
            if j != i {
                c *= vs[j] / (vs[j] - vs[i]);
            }
        }
        f0 += c * ims[i];
    }
    let mut value = f0 / (h.y * T::pi());
    let mut clamped = false;
    if value < T::zero() {
        clamped = value < lit::<T>(-1e-8);
        value = T::zero();
    }
    Ok(DensityEval { value, out_of_support: false, clamped })
}

/// `p \int_a^b g(x) f^{y_{n-1}, H_n}(x) dx` plus `p g(0) (1 - 1/y)` when
/// y > 1, with y = p/(n-1) built into the supplied measure.
///
/// The quadrature substitutes `x = a + (b-a) sin^2 t`, which absorbs the
/// square-root edges, and verifies convergence under node doubling.
pub fn centering_integral<T: Real>(
    g: impl Fn(T) -> T,
    p: usize,
    h: &SpectralMeasure<T>,
) -> Result<T> {
    let support = support_interval(h)?;
    let eval = |x: T| -> T {
        lsd_density(x, h, &support).map(|d| d.value).unwrap_or_else(|_| T::zero())
    };
    let quad = |n: usize| integrate_edge_singular(support.a, support.b, n, |x| g(x) * eval(x));
    let coarse = quad(256);
    let fine = quad(512);
    let rel = (fine - coarse).abs() / (T::one() + fine.abs());
    if rel > lit::<T>(1e-6) {
        return Err(Error::Precision(format!(
            "centering quadrature not converged: refinement delta {:?}",
            rel.to_f64()
        )));
    }
    let mut total = fine;
    if support.atom_at_zero > T::zero() {
        total += g(T::zero()) * support.atom_at_zero;
    }
    Ok(T::from_usize_(p) * total)
}

/// CDF of the continuous part on a grid (for KS-style comparisons):
/// returns (grid, cumulative mass up to grid point), not including the atom.
pub fn lsd_cdf_grid<T: Real>(h: &SpectralMeasure<T>, n_grid: usize) -> Result<(Vec<T>, Vec<T>)> {
    let support = support_interval(h)?;
    let mut xs = Vec::with_capacity(n_grid);
    let mut cdf = Vec::with_capacity(n_grid);
    // trapezoid accumulation in the sin^2 variable to keep edge accuracy
    let len = support.b - support.a;
    let mut acc = T::zero();
    let mut prev_x = support.a;
    let mut prev_f = T::zero();
    for k in 0..n_grid {
        let th = T::frac_pi_2() * T::from_usize_(k + 1) / T::from_usize_(n_grid + 1);
        let s = th.sin();
        let x = support.a + len * s * s;
        let f = lsd_density(x, h, &support)?.value;
        acc += (f + prev_f) * (x - prev_x) * lit::<T>(0.5);
        xs.push(x);
        cdf.push(acc);
        prev_x = x;
        prev_f = f;
    }
    Ok((xs, cdf))
}

/// k-th moment of the standard Marchenko–Pastur law with index y:
/// `m_k(y) = sum_{r=0}^{k-1} 1/(r+1) C(k,r) C(k-1,r) y^r`.
pub fn mp_moment<T: Real>(k: u32, y: T) -> T {
    assert!(k >= 1);
    let binom = |n: u64, r: u64| -> f64 {
        if r > n {
            return 0.0;
        }
        let mut v = 1.0f64;
        for i in 0..r {
            v = v * (n - i) as f64 / (i + 1) as f64;
        }
        v
    };
    let mut acc = T::zero();
    let mut ypow = T::one();
    for r in 0..k {
        let coef = binom(k as u64, r as u64) * binom((k - 1) as u64, r as u64) / (r as f64 + 1.0);
        acc += lit::<T>(coef) * ypow;
        ypow *= y;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mp_density(x: f64, y: f64) -> f64 {
        let a = (1.0 - y.sqrt()).powi(2);
        let b = (1.0 + y.sqrt()).powi(2);
        if x <= a || x >= b {
            return 0.0;
        }
        ((b - x) * (x - a)).sqrt() / (2.0 * std::f64::consts::PI * y * x)
    }

    #[test]
    fn density_matches_mp_formula() {
        let h = SpectralMeasure::point_mass(1.0f64, 0.5);
        let s = support_interval(&h).unwrap();
        for &x in &[0.2, 0.5, 1.0, 1.5, 2.0, 2.5] {
            let d = lsd_density(x, &h, &s).unwrap();
            assert!((d.value - mp_density(x, 0.5)).abs() < 1e-6, "x={x}");
        }
    }

    #[test]
    fn density_outside_support_is_zero() {
        let h = SpectralMeasure::point_mass(1.0f64, 0.5);
        let s = support_interval(&h).unwrap();
        let d = lsd_density(s.b + 0.1, &h, &s).unwrap();
        assert_eq!(d.value, 0.0);
        assert!(d.out_of_support);
    }

    #[test]
    fn total_mass_is_one() {
        // continuous mass + atom = 1 for several measures
        for (atoms, y) in [
            (vec![1.0f64], 0.5),
            (vec![1.0], 2.0),
            (vec![0.5, 1.0, 1.5, 2.0], 0.6),
            (vec![0.8, 1.0, 1.2], 1.5),
        ] {
            let h = SpectralMeasure::equal_weights(atoms, y).unwrap();
            let s = support_interval(&h).unwrap();
            let mass = integrate_edge_singular(s.a, s.b, 512, |x| {
                lsd_density(x, &h, &s).map(|d| d.value).unwrap_or(0.0)
            });
            assert!(
                (mass + s.atom_at_zero - 1.0).abs() < 1e-6,
                "y={y}: mass {mass} atom {}",
                s.atom_at_zero
            );
        }
    }

    #[test]
    fn mp_moments_formula() {
        assert_abs_diff_eq!(mp_moment(1, 0.37), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(mp_moment(2, 0.37), 1.37, epsilon = 1e-14);
        assert_abs_diff_eq!(mp_moment(3, 0.5), 2.75, epsilon = 1e-14);
        // m_3(y) = 1 + 3y + y^2
        assert_abs_diff_eq!(mp_moment(3, 0.2), 1.0 + 0.6 + 0.04, epsilon = 1e-14);
    }

    #[test]
    fn centering_matches_mp_moments() {
        let p = 40;
        let n = 81; // y_{n-1} = 0.5
        let y = p as f64 / (n - 1) as f64;
        let h = SpectralMeasure::equal_weights(vec![1.0; p], y).unwrap();
        for k in 1..=4u32 {
            let v = centering_integral(|x| x.powi(k as i32), p, &h).unwrap();
            let expect = p as f64 * mp_moment(k, y);
            assert!(
                (v - expect).abs() / expect.abs() < 1e-6,
                "k={k}: got {v}, expect {expect}"
            );
        }
    }

    #[test]
    fn centering_handles_y_above_one_atom() {
        let p = 50;
        let n = 26; // y_{n-1} = 2
        let y = p as f64 / (n - 1) as f64;
        let h = SpectralMeasure::equal_weights(vec![1.0; p], y).unwrap();
        // g(x) = x: atom contributes nothing; p * m_1 = p
        let v = centering_integral(|x| x, p, &h).unwrap();
        assert!((v - p as f64).abs() / (p as f64) < 1e-6, "got {v}");
        // constant g(x) = 1 integrates the full mass including the atom: p * 1
        let v = centering_integral(|_| 1.0, p, &h).unwrap();
        assert!((v - p as f64).abs() / (p as f64) < 1e-6, "got {v}");
    }
}
