//! Forward-mode truncated-Taylor (hyper-dual) arithmetic in two variables.
//!
//! [`Jet2`] carries a value together with all partial derivatives up to
//! second order; it is the currency of every curvature formula in this
//! crate (a graph surface needs `f, f_u, f_v, f_uu, f_uv, f_vv` and nothing
//! else). [`Jet3`] extends this to third order; it exists so that derived
//! fields such as `f_u` (which show up as coordinates of dual surfaces)
//! still have exact second-order jets.
//!
//! Arithmetic implements the exact product/quotient/chain rules on the
//! stored slots, so polynomial expressions evaluate exactly to roundoff.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Second-order jet: value and partials up to order two at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub value: f64,
    pub du: f64,
    pub dv: f64,
    pub duu: f64,
    pub duv: f64,
    pub dvv: f64,
}

/// Third-order jet: value and partials up to order three at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet3 {
    pub value: f64,
    pub du: f64,
    pub dv: f64,
    pub duu: f64,
    pub duv: f64,
    pub dvv: f64,
    pub duuu: f64,
    pub duuv: f64,
    pub duvv: f64,
    pub dvvv: f64,
}

impl Jet2 {
    pub const fn constant(c: f64) -> Self {
        Jet2 { value: c, du: 0.0, dv: 0.0, duu: 0.0, duv: 0.0, dvv: 0.0 }
    }

    /// The coordinate function `u` seeded at `u = u0`.
    pub const fn var_u(u0: f64) -> Self {
        Jet2 { value: u0, du: 1.0, dv: 0.0, duu: 0.0, duv: 0.0, dvv: 0.0 }
    }

    /// The coordinate function `v` seeded at `v = v0`.
    pub const fn var_v(v0: f64) -> Self {
        Jet2 { value: v0, du: 0.0, dv: 1.0, duu: 0.0, duv: 0.0, dvv: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.du.is_finite()
            && self.dv.is_finite()
            && self.duu.is_finite()
            && self.duv.is_finite()
            && self.dvv.is_finite()
    }

    /// All derivative slots vanish: the jet represents a constant.
    pub fn is_const(&self) -> bool {
        self.du == 0.0 && self.dv == 0.0 && self.duu == 0.0 && self.duv == 0.0 && self.dvv == 0.0
    }

    /// Chain rule through a univariate function given its value and first
    /// two derivatives at `self.value`.
    pub fn compose(self, d0: f64, d1: f64, d2: f64) -> Self {
        Jet2 {
            value: d0,
            du: d1 * self.du,
            dv: d1 * self.dv,
            duu: d2 * self.du * self.du + d1 * self.duu,
            duv: d2 * self.du * self.dv + d1 * self.duv,
            dvv: d2 * self.dv * self.dv + d1 * self.dvv,
        }
    }

    pub fn recip(self) -> Self {
        let x = self.value;
        self.compose(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }

    /// Integer power by repeated squaring (no logarithms involved).
    pub fn powi(self, n: i64) -> Self {
        powi_by_squaring(self, n, Jet2::constant(1.0), Jet2::recip)
    }
}

impl Jet3 {
    pub const fn constant(c: f64) -> Self {
        Jet3 {
            value: c,
            du: 0.0,
            dv: 0.0,
            duu: 0.0,
            duv: 0.0,
            dvv: 0.0,
            duuu: 0.0,
            duuv: 0.0,
            duvv: 0.0,
            dvvv: 0.0,
        }
    }

    pub const fn var_u(u0: f64) -> Self {
        let mut j = Jet3::constant(u0);
        j.du = 1.0;
        j
    }

    pub const fn var_v(v0: f64) -> Self {
        let mut j = Jet3::constant(v0);
        j.dv = 1.0;
        j
    }

    pub fn is_const(&self) -> bool {
        self.du == 0.0
            && self.dv == 0.0
            && self.duu == 0.0
            && self.duv == 0.0
            && self.dvv == 0.0
            && self.duuu == 0.0
            && self.duuv == 0.0
            && self.duvv == 0.0
            && self.dvvv == 0.0
    }

    /// Drop the third-order slots.
    pub fn truncate(self) -> Jet2 {
        Jet2 {
            value: self.value,
            du: self.du,
            dv: self.dv,
            duu: self.duu,
            duv: self.duv,
            dvv: self.dvv,
        }
    }

    /// Jet of `∂f/∂u` to second order, read off the third-order slots.
    pub fn shift_u(self) -> Jet2 {
        Jet2 {
            value: self.du,
            du: self.duu,
            dv: self.duv,
            duu: self.duuu,
            duv: self.duuv,
            dvv: self.duvv,
        }
    }

    /// Jet of `∂f/∂v` to second order, read off the third-order slots.
    pub fn shift_v(self) -> Jet2 {
        Jet2 {
            value: self.dv,
            du: self.duv,
            dv: self.dvv,
            duu: self.duuv,
            duv: self.duvv,
            dvv: self.dvvv,
        }
    }

    /// Chain rule through a univariate function given its value and first
    /// three derivatives at `self.value` (Faà di Bruno to order three).
    pub fn compose(self, d0: f64, d1: f64, d2: f64, d3: f64) -> Self {
        let (fu, fv) = (self.du, self.dv);
        let (fuu, fuv, fvv) = (self.duu, self.duv, self.dvv);
        Jet3 {
            value: d0,
            du: d1 * fu,
            dv: d1 * fv,
            duu: d2 * fu * fu + d1 * fuu,
            duv: d2 * fu * fv + d1 * fuv,
            dvv: d2 * fv * fv + d1 * fvv,
            duuu: d3 * fu * fu * fu + 3.0 * d2 * fu * fuu + d1 * self.duuu,
            duuv: d3 * fu * fu * fv + d2 * (2.0 * fu * fuv + fv * fuu) + d1 * self.duuv,
            duvv: d3 * fu * fv * fv + d2 * (2.0 * fv * fuv + fu * fvv) + d1 * self.duvv,
            dvvv: d3 * fv * fv * fv + 3.0 * d2 * fv * fvv + d1 * self.dvvv,
        }
    }

    pub fn recip(self) -> Self {
        let x = self.value;
        let x2 = x * x;
        self.compose(1.0 / x, -1.0 / x2, 2.0 / (x2 * x), -6.0 / (x2 * x2))
    }

    pub fn powi(self, n: i64) -> Self {
        powi_by_squaring(self, n, Jet3::constant(1.0), Jet3::recip)
    }
}

fn powi_by_squaring<J: Copy + Mul<Output = J>>(x: J, n: i64, one: J, recip: impl Fn(J) -> J) -> J {
    if n == 0 {
        return one;
    }
    let mut base = if n < 0 { recip(x) } else { x };
    let mut e = n.unsigned_abs();
    let mut acc = one;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base;
        }
        base = base * base;
        e >>= 1;
    }
    acc
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 {
            value: self.value + o.value,
            du: self.du + o.du,
            dv: self.dv + o.dv,
            duu: self.duu + o.duu,
            duv: self.duv + o.duv,
            dvv: self.dvv + o.dvv,
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        Jet2 {
            value: self.value - o.value,
            du: self.du - o.du,
            dv: self.dv - o.dv,
            duu: self.duu - o.duu,
            duv: self.duv - o.duv,
            dvv: self.dvv - o.dvv,
        }
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2 {
            value: -self.value,
            du: -self.du,
            dv: -self.dv,
            duu: -self.duu,
            duv: -self.duv,
            dvv: -self.dvv,
        }
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2 {
            value: self.value * o.value,
            du: self.du * o.value + self.value * o.du,
            dv: self.dv * o.value + self.value * o.dv,
            duu: self.duu * o.value + 2.0 * self.du * o.du + self.value * o.duu,
            duv: self.duv * o.value + self.du * o.dv + self.dv * o.du + self.value * o.duv,
            dvv: self.dvv * o.value + 2.0 * self.dv * o.dv + self.value * o.dvv,
        }
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, o: Jet2) -> Jet2 {
        self * o.recip()
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, s: f64) -> Jet2 {
        Jet2 {
            value: self.value * s,
            du: self.du * s,
            dv: self.dv * s,
            duu: self.duu * s,
            duv: self.duv * s,
            dvv: self.dvv * s,
        }
    }
}

impl Add for Jet3 {
    type Output = Jet3;
    fn add(self, o: Jet3) -> Jet3 {
        Jet3 {
            value: self.value + o.value,
            du: self.du + o.du,
            dv: self.dv + o.dv,
            duu: self.duu + o.duu,
            duv: self.duv + o.duv,
            dvv: self.dvv + o.dvv,
            duuu: self.duuu + o.duuu,
            duuv: self.duuv + o.duuv,
            duvv: self.duvv + o.duvv,
            dvvv: self.dvvv + o.dvvv,
        }
    }
}

impl Sub for Jet3 {
    type Output = Jet3;
    fn sub(self, o: Jet3) -> Jet3 {
        self + (-o)
    }
}

impl Neg for Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        Jet3 {
            value: -self.value,
            du: -self.du,
            dv: -self.dv,
            duu: -self.duu,
            duv: -self.duv,
            dvv: -self.dvv,
            duuu: -self.duuu,
            duuv: -self.duuv,
            duvv: -self.duvv,
            dvvv: -self.dvvv,
        }
    }
}

impl Mul for Jet3 {
    type Output = Jet3;
    fn mul(self, o: Jet3) -> Jet3 {
        let (f, g) = (self, o);
        Jet3 {
            value: f.value * g.value,
            du: f.du * g.value + f.value * g.du,
            dv: f.dv * g.value + f.value * g.dv,
            duu: f.duu * g.value + 2.0 * f.du * g.du + f.value * g.duu,
            duv: f.duv * g.value + f.du * g.dv + f.dv * g.du + f.value * g.duv,
            dvv: f.dvv * g.value + 2.0 * f.dv * g.dv + f.value * g.dvv,
            duuu: f.duuu * g.value
                + 3.0 * f.duu * g.du
                + 3.0 * f.du * g.duu
                + f.value * g.duuu,
            duuv: f.duuv * g.value
                + f.duu * g.dv
                + 2.0 * f.duv * g.du
                + 2.0 * f.du * g.duv
                + f.dv * g.duu
                + f.value * g.duuv,
            duvv: f.duvv * g.value
                + f.dvv * g.du
                + 2.0 * f.duv * g.dv
                + 2.0 * f.dv * g.duv
                + f.du * g.dvv
                + f.value * g.duvv,
            dvvv: f.dvvv * g.value
                + 3.0 * f.dvv * g.dv
                + 3.0 * f.dv * g.dvv
                + f.value * g.dvvv,
        }
    }
}

impl Div for Jet3 {
    type Output = Jet3;
    fn div(self, o: Jet3) -> Jet3 {
        self * o.recip()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn poly2(u: f64, v: f64) -> Jet2 {
        // f = u^2 v + 3 u v^3 - 2
        let uj = Jet2::var_u(u);
        let vj = Jet2::var_v(v);
        uj * uj * vj + Jet2::constant(3.0) * uj * vj * vj * vj - Jet2::constant(2.0)
    }

    #[test]
    fn jet2_polynomial_exact() {
        let (u, v) = (1.3, -0.7);
        let j = poly2(u, v);
        assert_relative_eq!(j.value, u * u * v + 3.0 * u * v * v * v - 2.0, max_relative = 1e-15);
        assert_relative_eq!(j.du, 2.0 * u * v + 3.0 * v * v * v, max_relative = 1e-15);
        assert_relative_eq!(j.dv, u * u + 9.0 * u * v * v, max_relative = 1e-15);
        assert_relative_eq!(j.duu, 2.0 * v, max_relative = 1e-15);
        assert_relative_eq!(j.duv, 2.0 * u + 9.0 * v * v, max_relative = 1e-15);
        assert_relative_eq!(j.dvv, 18.0 * u * v, max_relative = 1e-15);
    }

    #[test]
    fn jet3_shift_matches_hand_derivative() {
        // f = u^3 v^2: f_u = 3u^2 v^2 with jets of its own.
        let (u, v) = (0.9, 1.7);
        let f = Jet3::var_u(u).powi(3) * Jet3::var_v(v).powi(2);
        let fu = f.shift_u();
        assert_relative_eq!(fu.value, 3.0 * u * u * v * v, max_relative = 1e-14);
        assert_relative_eq!(fu.du, 6.0 * u * v * v, max_relative = 1e-14);
        assert_relative_eq!(fu.dv, 6.0 * u * u * v, max_relative = 1e-14);
        assert_relative_eq!(fu.duu, 6.0 * v * v, max_relative = 1e-14);
        assert_relative_eq!(fu.duv, 12.0 * u * v, max_relative = 1e-14);
        assert_relative_eq!(fu.dvv, 6.0 * u * u, max_relative = 1e-14);
    }

    #[test]
    fn jet3_compose_third_order() {
        // sin(u*v) third-order partials, against hand differentiation.
        let (u, v) = (0.4, -1.1);
        let x = Jet3::var_u(u) * Jet3::var_v(v);
        let s = x.value.sin();
        let c = x.value.cos();
        let j = x.compose(s, c, -s, -c);
        // d^3/du^2 dv sin(uv) = -2uv^2 ... compute symbolically:
        // f_u = v cos, f_uu = -v^2 sin, f_uuv = -2v sin - uv^2 cos
        assert_relative_eq!(j.duuv, -2.0 * v * s - u * v * v * c, max_relative = 1e-13);
        assert_relative_eq!(j.duuu, -v * v * v * c, max_relative = 1e-13);
    }

    #[test]
    fn powi_negative_and_zero() {
        let x = Jet2::var_u(2.0);
        let inv2 = x.powi(-2);
        assert_relative_eq!(inv2.value, 0.25, max_relative = 1e-15);
        assert_relative_eq!(inv2.du, -2.0 / 8.0, max_relative = 1e-15);
        assert_eq!(x.powi(0), Jet2::constant(1.0));
    }

    #[test]
    fn division_roundtrip() {
        let f = poly2(0.3, 0.8);
        let g = poly2(-0.5, 0.2) + Jet2::constant(5.0);
        let h = f / g * g;
        assert_relative_eq!(h.value, f.value, max_relative = 1e-13);
        assert_relative_eq!(h.duv, f.duv, max_relative = 1e-12, epsilon = 1e-12);
    }
}
