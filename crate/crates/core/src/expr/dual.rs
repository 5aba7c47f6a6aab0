//! Second-order forward-mode dual numbers ("jets").
//!
//! A [`Jet`] carries a value together with its first and second derivative
//! along one seed direction. Every elementary function is applied through
//! the chain rule `(f∘u)'' = f''(u)·u'² + f'(u)·u''`, so derivatives are
//! exact up to floating-point rounding.

use num_complex::{Complex64, ComplexFloat};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar types the evaluator can run on: `f64` and `Complex64`.
pub trait Scalar:
    ComplexFloat
    + Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + std::fmt::Debug
    + Send
    + Sync
{
    fn from_f64(v: f64) -> Self;
    fn imag_unit() -> Option<Self>;
    /// True where `ln` and `sqrt` are analytic.
    fn log_ok(self) -> bool;
    fn is_zero(self) -> bool;
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn imag_unit() -> Option<Self> {
        None
    }
    fn log_ok(self) -> bool {
        self > 0.0
    }
    fn is_zero(self) -> bool {
        self == 0.0
    }
}

impl Scalar for Complex64 {
    fn from_f64(v: f64) -> Self {
        Complex64::new(v, 0.0)
    }
    fn imag_unit() -> Option<Self> {
        Some(Complex64::i())
    }
    fn log_ok(self) -> bool {
        self != Complex64::new(0.0, 0.0)
    }
    fn is_zero(self) -> bool {
        self == Complex64::new(0.0, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<S> {
    pub v: S,
    pub d1: S,
    pub d2: S,
}

impl<S: Scalar> Jet<S> {
    pub fn constant(v: S) -> Self {
        let z = S::from_f64(0.0);
        Jet { v, d1: z, d2: z }
    }

    /// The independent variable: derivative one, curvature zero.
    pub fn variable(v: S) -> Self {
        Jet {
            v,
            d1: S::from_f64(1.0),
            d2: S::from_f64(0.0),
        }
    }

    /// Applies `f` given `f(v)`, `f'(v)` and `f''(v)`.
    #[inline]
    fn chain(self, f0: S, f1: S, f2: S) -> Self {
        Jet {
            v: f0,
            d1: f1 * self.d1,
            d2: f2 * self.d1 * self.d1 + f1 * self.d2,
        }
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    /// Caller guarantees `v` lies in the analytic domain.
    pub fn ln(self) -> Self {
        let r = self.v.recip();
        self.chain(self.v.ln(), r, -(r * r))
    }

    pub fn sin(self) -> Self {
        let (s, c) = (self.v.sin(), self.v.cos());
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = (self.v.sin(), self.v.cos());
        self.chain(c, -s, -c)
    }

    pub fn sinh(self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(s, c, s)
    }

    pub fn cosh(self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(c, s, c)
    }

    /// Caller guarantees `v` lies in the analytic domain.
    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        let half = S::from_f64(0.5);
        let d1 = half / s;
        let d2 = -(d1 / (S::from_f64(2.0) * self.v));
        self.chain(s, d1, d2)
    }

    /// Integer power. Negative exponents require a nonzero base.
    pub fn powi(self, n: i32) -> Self {
        let nf = S::from_f64(n as f64);
        match n {
            0 => Jet::constant(S::from_f64(1.0)),
            1 => self,
            2 => self.chain(self.v * self.v, S::from_f64(2.0) * self.v, S::from_f64(2.0)),
            _ => {
                let p2 = self.v.powi(n - 2);
                let p1 = p2 * self.v;
                let p0 = p1 * self.v;
                self.chain(p0, nf * p1, nf * S::from_f64((n - 1) as f64) * p2)
            }
        }
    }

    pub fn recip(self) -> Self {
        let r = self.v.recip();
        self.chain(r, -(r * r), S::from_f64(2.0) * r * r * r)
    }
}

impl<S: Scalar> Add for Jet<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Jet {
            v: self.v + o.v,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
        }
    }
}

impl<S: Scalar> Sub for Jet<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Jet {
            v: self.v - o.v,
            d1: self.d1 - o.d1,
            d2: self.d2 - o.d2,
        }
    }
}

impl<S: Scalar> Mul for Jet<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Jet {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + S::from_f64(2.0) * self.d1 * o.d1 + self.v * o.d2,
        }
    }
}

impl<S: Scalar> Div for Jet<S> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl<S: Scalar> Neg for Jet<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Jet {
            v: -self.v,
            d1: -self.d1,
            d2: -self.d2,
        }
    }
}
