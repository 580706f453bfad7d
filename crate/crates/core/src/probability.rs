//! Scalar probability utilities: the standard normal CDF/quantile and the
//! symmetric-rectangle probability of a correlated bivariate normal.

use crate::error::{Error, Result};
use crate::quad::gl_on_interval;

/// Complementary error function, double-precision accurate: Maclaurin series
/// of erf for small arguments, Lentz continued fraction for the tail.
pub fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let v = if z < 2.5 {
        // erf(z) = 2/sqrt(pi) sum (-1)^n z^{2n+1} / (n! (2n+1))
        let mut term = z;
        let mut sum = z;
        let z2 = z * z;
        for n in 1..200 {
            term *= -z2 / n as f64;
            let add = term / (2 * n + 1) as f64;
            sum += add;
            if add.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        1.0 - 2.0 / std::f64::consts::PI.sqrt() * sum
    } else {
        // erfc(z) = e^{-z^2}/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
        let tiny = 1e-300;
        let mut f = z;
        let mut c = f64::MAX;
        let mut d = 0.0;
        for n in 1..300 {
            let an = n as f64 / 2.0;
            d = z + an * d;
            if d.abs() < tiny {
                d = tiny;
            }
            c = z + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (-z * z).exp() / std::f64::consts::PI.sqrt() / f
    };
    if x >= 0.0 {
        v
    } else {
        2.0 - v
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Acklam's rational approximation to the normal quantile (~1e-9), used as a
/// seed for Newton refinement.
fn normal_quantile_raw(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let p_low = 0.02425;
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Standard normal quantile with Newton polish.
pub fn normal_quantile(p: f64) -> f64 {
    let mut x = normal_quantile_raw(p);
    if !x.is_finite() {
        return x;
    }
    for _ in 0..3 {
        let err = normal_cdf(x) - p;
        let pdf = (-(x * x) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if pdf < 1e-300 {
            break;
        }
        x -= err / pdf;
    }
    x
}

/// `P(|X1| <= t, |X2| <= t)` for a standard bivariate normal with
/// correlation `lambda`.
///
/// The rotation U = (X1+X2)/sqrt(2(1+l)), V = (X1-X2)/sqrt(2(1-l)) maps the
/// square to a region where the probability becomes a one-dimensional
/// integral `int phi(u) [2 Phi(v_max(u)) - 1] du`, which stays accurate
/// uniformly in lambda (including the degenerate limits).
pub fn bvn_rectangle(t: f64, lambda: f64) -> Result<f64> {
    if t <= 0.0 {
        return Ok(0.0);
    }
    if lambda.abs() > 1.0 + 1e-8 {
        return Err(Error::Domain(format!("correlation {lambda} outside [-1, 1]")));
    }
    let l = lambda.clamp(-1.0, 1.0);
    // P is even in lambda for the symmetric square
    let l = l.abs();
    if l >= 1.0 - 1e-12 {
        return Ok(2.0 * normal_cdf(t) - 1.0);
    }
    let sp = (1.0 + l).sqrt();
    let sm = (1.0 - l).sqrt();
    let u_max = t * std::f64::consts::SQRT_2 / sp;
    let (us, ws) = gl_on_interval(0.0f64, u_max, 256);
    let mut acc = 0.0;
    for (&u, &w) in us.iter().zip(ws.iter()) {
        let v_max = (t * std::f64::consts::SQRT_2 - sp * u) / sm;
        let phi_u = (-(u * u) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        acc += w * phi_u * (2.0 * normal_cdf(v_max) - 1.0);
    }
    Ok(2.0 * acc) // symmetry in u
}
