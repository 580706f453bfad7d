//! Quadrature primitives: Gauss–Legendre rules, panel composition, and the
//! rectangular contours used by the contour-integral layer.

use crate::error::{Error, Result};
use crate::scalar::{cplx, lit, Cplx, Real};
use serde::{Deserialize, Serialize};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
///
/// Newton iteration on the Legendre recurrence; accurate to machine
/// precision for the orders used here (< 10^4).
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1);
    let mut x = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    let nf = lit::<T>(n as f64);
    for i in 0..n.div_ceil(2) {
        // Tricomi-style initial guess
        let mut xi = lit::<T>(
            (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos(),
        );
        let mut dp = T::one();
        for _ in 0..100 {
            // p_n(xi) and p_{n-1}(xi) by upward recurrence
            let mut p0 = T::one();
            let mut p1 = xi;
            for k in 2..=n {
                let kf = lit::<T>(k as f64);
                let p2 = ((lit::<T>(2.0) * kf - T::one()) * xi * p1 - (kf - T::one()) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            // derivative: p'_n = n (x p_n - p_{n-1}) / (x^2 - 1)
            dp = nf * (xi * p1 - p0) / (xi * xi - T::one());
            let step = p1 / dp;
            xi -= step;
            if step.abs() < lit::<T>(1e-16) {
                break;
            }
        }
        let wi = lit::<T>(2.0) / ((T::one() - xi * xi) * dp * dp);
        x[i] = -xi;
        w[i] = wi;
        x[n - 1 - i] = xi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Nodes/weights for `\int_a^b`.
pub fn gl_on_interval<T: Real>(a: T, b: T, n: usize) -> (Vec<T>, Vec<T>) {
    let (x, w) = gauss_legendre::<T>(n);
    let half = lit::<T>(0.5);
    let mid = half * (a + b);
    let rad = half * (b - a);
    (
        x.iter().map(|&t| mid + rad * t).collect(),
        w.iter().map(|&t| rad * t).collect(),
    )
}

/// Integrate `f` over the support interval `[a, b]` with the substitution
/// `x = a + (b-a) sin^2(theta)`, which absorbs square-root behaviour at both
/// edges. `n` is the node count of the underlying Gauss rule.
pub fn integrate_edge_singular<T: Real, F: FnMut(T) -> T>(a: T, b: T, n: usize, mut f: F) -> T {
    let (ths, ws) = gl_on_interval(T::zero(), T::frac_pi_2(), n);
    let len = b - a;
    let mut acc = T::zero();
    for (&th, &wq) in ths.iter().zip(ws.iter()) {
        let (s, c) = (th.sin(), th.cos());
        let x = a + len * s * s;
        let jac = len * lit::<T>(2.0) * s * c;
        acc += wq * jac * f(x);
    }
    acc
}

/// Rectangular contour around a real interval: `[x_l, x_r] x [-v0, v0]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ContourSpec<T> {
    pub x_l: T,
    pub x_r: T,
    pub v0: T,
    pub num_nodes: usize,
}

impl<T: Real> ContourSpec<T> {
    pub fn new(x_l: T, x_r: T, v0: T, num_nodes: usize) -> Result<Self> {
        if !(x_l < x_r) || v0 <= T::zero() {
            return Err(Error::Configuration(format!(
                "contour requires x_l < x_r and v0 > 0 (got x_l={:?}, x_r={:?}, v0={:?})",
                x_l.to_f64(),
                x_r.to_f64(),
                v0.to_f64()
            )));
        }
        if num_nodes < 64 {
            return Err(Error::Configuration(
                "contour needs at least 64 nodes".into(),
            ));
        }
        Ok(Self { x_l, x_r, v0, num_nodes })
    }

    /// Counterclockwise node/weight list. Nodes are distributed over the four
    /// sides proportionally to side length (Gauss–Legendre on each side, so
    /// nodes cluster toward the corners where integrands vary fastest).
    pub fn nodes(&self) -> Vec<(Cplx<T>, Cplx<T>)> {
        let width = self.x_r - self.x_l;
        let height = lit::<T>(2.0) * self.v0;
        let perim = lit::<T>(2.0) * (width + height);
        let total = self.num_nodes;
        let nw = (((width / perim).to_f64().unwrap() * total as f64).round() as usize).max(48);
        let nh = ((total.saturating_sub(2 * nw)) / 2).max(48);

        let mut out = Vec::with_capacity(2 * nw + 2 * nh);
        // bottom: x_l - i v0 -> x_r - i v0
        let corners = [
            (cplx(self.x_l, -self.v0), cplx(self.x_r, -self.v0), nw),
            (cplx(self.x_r, -self.v0), cplx(self.x_r, self.v0), nh),
            (cplx(self.x_r, self.v0), cplx(self.x_l, self.v0), nw),
            (cplx(self.x_l, self.v0), cplx(self.x_l, -self.v0), nh),
        ];
        for (za, zb, n) in corners {
            let (ts, ws) = gl_on_interval(T::zero(), T::one(), n);
            let dz = zb - za;
            for (&t, &wq) in ts.iter().zip(ws.iter()) {
                out.push((za + dz * creal_t(t), dz * creal_t(wq)));
            }
        }
        out
    }

    /// Same contour with twice the nodes (convergence checks).
    pub fn refined(&self) -> Self {
        Self { num_nodes: self.num_nodes * 2, ..*self }
    }

    pub fn encloses(&self, z: Cplx<T>) -> bool {
        z.re > self.x_l && z.re < self.x_r && z.im.abs() < self.v0
    }

    /// True if `inner` lies strictly inside `self`.
    pub fn contains_contour(&self, inner: &ContourSpec<T>) -> bool {
        inner.x_l > self.x_l && inner.x_r < self.x_r && inner.v0 < self.v0
    }
}

#[inline]
fn creal_t<T: Real>(t: T) -> Cplx<T> {
    cplx(t, T::zero())
}

/// Trapezoid nodes on the unit circle `|xi| = r`, counterclockwise.
/// Returns `(xi_k, w_k)` with `sum w_k f(xi_k) ~ \oint f(xi) d xi`.
pub fn unit_circle_nodes<T: Real>(r: T, n: usize) -> Vec<(Cplx<T>, Cplx<T>)> {
    let two_pi = lit::<T>(2.0) * T::pi();
    let h = two_pi / lit::<T>(n as f64);
    (0..n)
        .map(|k| {
            let th = h * lit::<T>(k as f64);
            let xi = cplx(r * th.cos(), r * th.sin());
            // d xi = i xi d theta
            let w = cplx(T::zero(), h) * xi;
            (xi, w)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        let (x, w) = gl_on_interval(0.0f64, 2.0, 8);
        let val: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi.powi(7)).sum();
        assert_abs_diff_eq!(val, 2.0f64.powi(8) / 8.0, epsilon = 1e-12);
    }

    #[test]
    fn contour_cauchy_integral() {
        // closed-curve test: oint dz/(z-c) = 2 pi i for c inside, 0 outside
        let c = ContourSpec::new(0.05f64, 3.0, 0.5, 2048).unwrap();
        let inside = Complex64::new(1.525, 0.0);
        let outside = Complex64::new(5.0, 0.0);
        let mut acc_in = Complex64::default();
        let mut acc_out = Complex64::default();
        let mut acc_z = Complex64::default();
        for (z, w) in c.nodes() {
            acc_in += w / (z - inside);
            acc_out += w / (z - outside);
            acc_z += w * z;
        }
        let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
        assert!((acc_in - two_pi_i).norm() < 1e-10, "got {acc_in}");
        assert!(acc_out.norm() < 1e-10);
        assert!(acc_z.norm() < 1e-10);
    }

    #[test]
    fn edge_singular_rule_handles_sqrt_edges() {
        // integral of sqrt((b-x)(x-a)) over [a,b] = pi (b-a)^2 / 8
        let (a, b) = (0.25f64, 2.25);
        let v = integrate_edge_singular(a, b, 128, |x| ((b - x) * (x - a)).sqrt());
        assert_abs_diff_eq!(v, std::f64::consts::PI * (b - a).powi(2) / 8.0, epsilon = 1e-12);
    }

    #[test]
    fn unit_circle_winding() {
        let nodes = unit_circle_nodes(1.0f64, 512);
        let mut acc = Complex64::default();
        for (xi, w) in nodes {
            acc += w / xi;
        }
        assert!((acc - Complex64::new(0.0, 2.0 * std::f64::consts::PI)).norm() < 1e-12);
    }
}
