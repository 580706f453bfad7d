//! Support of the limiting spectral distribution via the Silverstein–Choi
//! characterization: on the real line, the map
//! `z(m) = -1/m + y \int t/(1+tm) dH(t)` is increasing exactly outside the
//! support, and the edges are the critical values z(m*) with z'(m*) = 0.

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use crate::stieltjes::SpectralMeasure;

/// Support interval of the LSD together with the point mass at zero for y > 1.
#[derive(Debug, Clone, Copy)]
pub struct SupportInfo<T> {
    pub a: T,
    pub b: T,
    pub atom_at_zero: T,
}

fn z_of_m<T: Real>(m: T, h: &SpectralMeasure<T>) -> T {
    let mut j = T::zero();
    for (&t, &w) in h.atoms.iter().zip(&h.weights) {
        j += w * t / (T::one() + t * m);
    }
    -T::one() / m + h.y * j
}

fn z_prime<T: Real>(m: T, h: &SpectralMeasure<T>) -> T {
    let mut j = T::zero();
    for (&t, &w) in h.atoms.iter().zip(&h.weights) {
        let d = T::one() + t * m;
        j += w * t * t / (d * d);
    }
    T::one() / (m * m) - h.y * j
}

/// Bisection for a root of z'(m) in (lo, hi), given z'(lo) and z'(hi) have
/// opposite signs.
fn bisect_zprime<T: Real>(mut lo: T, mut hi: T, h: &SpectralMeasure<T>) -> T {
    let mut flo = z_prime(lo, h);
    for _ in 0..200 {
        let mid = (lo + hi) * lit::<T>(0.5);
        let fm = z_prime(mid, h);
        if (fm > T::zero()) == (flo > T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() < lit::<T>(1e-14) * (T::one() + lo.abs()) {
            break;
        }
    }
    (lo + hi) * lit::<T>(0.5)
}

/// Distinct atoms in increasing order (clustered within a relative
/// tolerance, so that eigensolver noise does not create spurious poles).
fn distinct_atoms<T: Real>(h: &SpectralMeasure<T>) -> Vec<T> {
    let mut atoms = h.atoms.clone();
    atoms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let scale = atoms.last().copied().unwrap().abs();
    let tol = lit::<T>(1e-9) * (T::one() + scale);
    let mut out: Vec<T> = Vec::with_capacity(atoms.len());
    for t in atoms {
        match out.last() {
            Some(&last) if (t - last).abs() <= tol => {}
            _ => out.push(t),
        }
    }
    out
}

/// Locate the support interval [a, b]. Rejects measures whose LSD has more
/// than one component.
pub fn support_interval<T: Real>(h: &SpectralMeasure<T>) -> Result<SupportInfo<T>> {
    let atoms = distinct_atoms(h);
    let t_min = atoms[0];
    let t_max = *atoms.last().unwrap();
    if t_min <= T::zero() {
        return Err(Error::Configuration("measure atoms must be positive".into()));
    }
    let y = h.y;
    let one = T::one();

    // Right edge: single critical point of z(m) on (-1/t_max, 0).
    let b = {
        let lo = -one / t_max;
        let hi = T::zero();
        // z' -> -inf at lo+, z' -> +inf at 0-: bracket by marching in from 0
        let mut hi_probe = hi - (hi - lo) * lit::<T>(1e-9);
        let mut lo_probe = lo + (hi - lo) * lit::<T>(1e-9);
        // make sure the signs are as expected; refine probes if not
        for _ in 0..60 {
            if z_prime(hi_probe, h) > T::zero() {
                break;
            }
            hi_probe = (hi_probe + hi) * lit::<T>(0.5);
        }
        for _ in 0..60 {
            if z_prime(lo_probe, h) < T::zero() {
                break;
            }
            lo_probe = (lo_probe + lo) * lit::<T>(0.5);
        }
        let m_star = bisect_zprime(lo_probe, hi_probe, h);
        z_of_m(m_star, h)
    };

    // Left edge.
    let (a, atom_at_zero) = if (y - one).abs() < lit::<T>(1e-12) {
        (T::zero(), T::zero())
    } else if y < one {
        // critical point on (-inf, -1/t_min)
        let hi = -one / t_min;
        let mut hi_probe = hi - lit::<T>(1e-9) * (one + hi.abs());
        for _ in 0..60 {
            if z_prime(hi_probe, h) < T::zero() {
                break;
            }
            hi_probe = hi + (hi_probe - hi) * lit::<T>(0.5);
        }
        // march out until z' > 0
        let mut lo_probe = hi * lit::<T>(2.0) - one;
        for _ in 0..200 {
            if z_prime(lo_probe, h) > T::zero() {
                break;
            }
            lo_probe *= lit::<T>(2.0);
        }
        let m_star = bisect_zprime(lo_probe, hi_probe, h);
        (z_of_m(m_star, h), T::zero())
    } else {
        // y > 1: critical point on (0, +inf); LSD carries mass 1 - 1/y at 0
        let mut lo_probe = lit::<T>(1e-9) / t_max;
        for _ in 0..200 {
            if z_prime(lo_probe, h) > T::zero() {
                break;
            }
            lo_probe *= lit::<T>(0.5);
        }
        let mut hi_probe = one / t_min;
        for _ in 0..200 {
            if z_prime(hi_probe, h) < T::zero() {
                break;
            }
            hi_probe *= lit::<T>(2.0);
        }
        let m_star = bisect_zprime(lo_probe, hi_probe, h);
        (z_of_m(m_star, h), one - one / y)
    };

    // Detect additional support components: any z' > 0 region strictly
    // between consecutive poles -1/t_i (a spectral gap of the LSD).
    let mut gap_edges: Vec<f64> = Vec::new();
    for w in atoms.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        let lo = -one / ta;
        let hi = -one / tb;
        if hi - lo < lit::<T>(1e-13) * (one + lo.abs()) {
            continue;
        }
        let coarse = 64usize;
        let mut found = false;
        for k in 1..coarse {
            let frac = T::from_usize_(k) / T::from_usize_(coarse);
            let m = lo + (hi - lo) * frac;
            if z_prime(m, h) > T::zero() {
                found = true;
                break;
            }
        }
        if found {
            // refine the sign-change grid to report edge candidates
            let dense = 10_000usize;
            let mut prev_m = lo + (hi - lo) * lit::<T>(1e-6);
            let mut prev = z_prime(prev_m, h);
            for k in 1..dense {
                let frac = T::from_usize_(k) / T::from_usize_(dense);
                let m = lo + (hi - lo) * frac;
                let cur = z_prime(m, h);
                if (cur > T::zero()) != (prev > T::zero()) {
                    let m_star = bisect_zprime(prev_m, m, h);
                    gap_edges.push(z_of_m(m_star, h).to_f64().unwrap_or(f64::NAN));
                }
                prev = cur;
                prev_m = m;
            }
        }
    }
    if !gap_edges.is_empty() {
        let mut edges = vec![a.to_f64().unwrap_or(f64::NAN)];
        edges.extend(gap_edges);
        edges.push(b.to_f64().unwrap_or(f64::NAN));
        return Err(Error::UnsupportedSupport { edges });
    }

    // Bracketing sanity (classical envelope expanded by 1%).
    let lo_env = if y < one {
        t_min * (one - y.sqrt()) * (one - y.sqrt()) * lit::<T>(0.99)
    } else {
        T::zero()
    };
    let hi_env = t_max * (one + y.sqrt()) * (one + y.sqrt()) * lit::<T>(1.01);
    if a < lo_env - lit::<T>(1e-9) || b > hi_env + lit::<T>(1e-9) || a >= b {
        return Err(Error::Precision(format!(
            "support edges [{:?}, {:?}] escaped the bracketing envelope [{:?}, {:?}]",
            a.to_f64(),
            b.to_f64(),
            lo_env.to_f64(),
            hi_env.to_f64()
        )));
    }
    Ok(SupportInfo { a, b, atom_at_zero })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn mp_edges() {
        let h = SpectralMeasure::point_mass(1.0f64, 0.5);
        let s = support_interval(&h).unwrap();
        let sq = 0.5f64.sqrt();
        assert_abs_diff_eq!(s.a, (1.0 - sq).powi(2), epsilon = 1e-10);
        assert_abs_diff_eq!(s.b, (1.0 + sq).powi(2), epsilon = 1e-10);
        assert_eq!(s.atom_at_zero, 0.0);
    }

    #[test]
    fn scaled_point_mass_edges_scale() {
        let c = 3.2f64;
        let h = SpectralMeasure::point_mass(c, 0.25);
        let s = support_interval(&h).unwrap();
        assert_abs_diff_eq!(s.a, c * (1.0 - 0.5f64).powi(2), epsilon = 1e-9);
        assert_abs_diff_eq!(s.b, c * 1.5f64.powi(2), epsilon = 1e-9);
    }

    #[test]
    fn atom_at_zero_for_y_above_one() {
        let h = SpectralMeasure::point_mass(1.0f64, 2.0);
        let s = support_interval(&h).unwrap();
        assert_abs_diff_eq!(s.atom_at_zero, 0.5, epsilon = 1e-14);
        let sq = 2.0f64.sqrt();
        assert_abs_diff_eq!(s.a, (1.0 - sq).powi(2), epsilon = 1e-9);
        assert_abs_diff_eq!(s.b, (1.0 + sq).powi(2), epsilon = 1e-9);
    }

    #[test]
    fn split_support_detected() {
        // two far-apart atom clusters at small y must split
        let mut atoms = vec![1.0f64; 10];
        atoms.extend(vec![50.0f64; 10]);
        let h = SpectralMeasure::equal_weights(atoms, 0.05).unwrap();
        match support_interval(&h) {
            Err(Error::UnsupportedSupport { edges }) => assert!(edges.len() >= 3),
            other => panic!("expected multi-interval rejection, got {other:?}"),
        }
    }

    #[test]
    fn merged_support_accepted() {
        // moderate spread at y = 0.5 stays a single interval
        let atoms: Vec<f64> = (0..50).map(|i| 0.5 + 1.5 * i as f64 / 49.0).collect();
        let h = SpectralMeasure::equal_weights(atoms, 0.5).unwrap();
        let s = support_interval(&h).unwrap();
        assert!(s.a > 0.0 && s.b > s.a);
    }
}
