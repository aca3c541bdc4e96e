//! Second-order dual numbers in two parameters.
//!
//! Chart maps are written once in `Jet2` arithmetic and yield exact first and
//! second partial derivatives, so curvature data is smooth to machine
//! precision. Finite differences are reserved for test oracles.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Truncated second-order Taylor jet of a scalar function of (u, v).
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub du: f64,
    pub dv: f64,
    pub duu: f64,
    pub duv: f64,
    pub dvv: f64,
}

impl Jet2 {
    pub const fn constant(c: f64) -> Self {
        Jet2 { v: c, du: 0.0, dv: 0.0, duu: 0.0, duv: 0.0, dvv: 0.0 }
    }

    /// The coordinate u as a jet.
    pub const fn var_u(u: f64) -> Self {
        Jet2 { v: u, du: 1.0, dv: 0.0, duu: 0.0, duv: 0.0, dvv: 0.0 }
    }

    /// The coordinate v as a jet.
    pub const fn var_v(v: f64) -> Self {
        Jet2 { v, du: 0.0, dv: 1.0, duu: 0.0, duv: 0.0, dvv: 0.0 }
    }

    /// Chain rule for a smooth univariate f applied to this jet.
    fn lift(self, f0: f64, f1: f64, f2: f64) -> Self {
        Jet2 {
            v: f0,
            du: f1 * self.du,
            dv: f1 * self.dv,
            duu: f2 * self.du * self.du + f1 * self.duu,
            duv: f2 * self.du * self.dv + f1 * self.duv,
            dvv: f2 * self.dv * self.dv + f1 * self.dvv,
        }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.lift(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.lift(c, -s, -c)
    }

    pub fn tan(self) -> Self {
        let t = self.v.tan();
        let sec2 = 1.0 + t * t;
        self.lift(t, sec2, 2.0 * t * sec2)
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.lift(e, e, e)
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.lift(s, 0.5 / s, -0.25 / (s * s * s))
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.lift(r, -r * r, 2.0 * r * r * r)
    }

    pub fn powi(self, n: i32) -> Self {
        let f0 = self.v.powi(n);
        let f1 = f64::from(n) * self.v.powi(n - 1);
        let f2 = f64::from(n) * f64::from(n - 1) * self.v.powi(n - 2);
        self.lift(f0, f1, f2)
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v + o.v,
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
            v: self.v - o.v,
            du: self.du - o.du,
            dv: self.dv - o.dv,
            duu: self.duu - o.duu,
            duv: self.duv - o.duv,
            dvv: self.dvv - o.dvv,
        }
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v * o.v,
            du: self.du * o.v + self.v * o.du,
            dv: self.dv * o.v + self.v * o.dv,
            duu: self.duu * o.v + 2.0 * self.du * o.du + self.v * o.duu,
            duv: self.duv * o.v + self.du * o.dv + self.dv * o.du + self.v * o.duv,
            dvv: self.dvv * o.v + 2.0 * self.dv * o.dv + self.v * o.dvv,
        }
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, o: Jet2) -> Jet2 {
        self * o.recip()
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2 {
            v: -self.v,
            du: -self.du,
            dv: -self.dv,
            duu: -self.duu,
            duv: -self.duv,
            dvv: -self.dvv,
        }
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, s: f64) -> Jet2 {
        Jet2 {
            v: self.v * s,
            du: self.du * s,
            dv: self.dv * s,
            duu: self.duu * s,
            duv: self.duv * s,
            dvv: self.dvv * s,
        }
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    fn add(self, s: f64) -> Jet2 {
        Jet2 { v: self.v + s, ..self }
    }
}

impl Sub<f64> for Jet2 {
    type Output = Jet2;
    fn sub(self, s: f64) -> Jet2 {
        Jet2 { v: self.v - s, ..self }
    }
}

/// A point in R^3 whose coordinates are jets; the output type of chart maps.
pub type Jet2Vec3 = [Jet2; 3];

#[cfg(test)]
mod tests {
    use super::*;

    fn f(u: f64, v: f64) -> f64 {
        ((u * v).sin() + (1.2 + u * u).sqrt() * (-v).exp()) / (2.0 + (u + 2.0 * v).cos())
    }

    fn f_jet(u: f64, v: f64) -> Jet2 {
        let u = Jet2::var_u(u);
        let v = Jet2::var_v(v);
        ((u * v).sin() + (u * u + 1.2).sqrt() * (-v).exp()) / ((u + v * 2.0).cos() + 2.0)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let (u0, v0) = (0.37, -0.81);
        let j = f_jet(u0, v0);
        let h = 1e-5;
        let du = (f(u0 + h, v0) - f(u0 - h, v0)) / (2.0 * h);
        let dv = (f(u0, v0 + h) - f(u0, v0 - h)) / (2.0 * h);
        let duu = (f(u0 + h, v0) - 2.0 * f(u0, v0) + f(u0 - h, v0)) / (h * h);
        let dvv = (f(u0, v0 + h) - 2.0 * f(u0, v0) + f(u0, v0 - h)) / (h * h);
        let duv = (f(u0 + h, v0 + h) - f(u0 + h, v0 - h) - f(u0 - h, v0 + h)
            + f(u0 - h, v0 - h))
            / (4.0 * h * h);
        assert!((j.v - f(u0, v0)).abs() < 1e-14);
        assert!((j.du - du).abs() < 1e-9);
        assert!((j.dv - dv).abs() < 1e-9);
        assert!((j.duu - duu).abs() < 1e-5);
        assert!((j.duv - duv).abs() < 1e-5);
        assert!((j.dvv - dvv).abs() < 1e-5);
    }

    #[test]
    fn powi_and_recip() {
        let u = Jet2::var_u(1.7);
        let p = u.powi(3);
        assert!((p.v - 1.7f64.powi(3)).abs() < 1e-14);
        assert!((p.du - 3.0 * 1.7f64.powi(2)).abs() < 1e-13);
        assert!((p.duu - 6.0 * 1.7).abs() < 1e-13);
        let r = u.recip() * u;
        assert!((r.v - 1.0).abs() < 1e-15 && r.du.abs() < 1e-15 && r.duu.abs() < 1e-14);
    }
}
