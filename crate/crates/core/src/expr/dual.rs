//! Dual numbers for forward-mode differentiation.
//!
//! `Dual<f64>` carries one directional derivative; `Dual<Dual<f64>>` carries
//! two independent directions and their mixed second derivative.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar types an expression can be evaluated in.
pub trait Real:
    Copy
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(x: f64) -> Self;
    /// The underlying `f64` value, with every tangent dropped.
    fn primal(&self) -> f64;
    /// True if every tangent component is zero.
    fn is_constant(&self) -> bool;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    /// `self^c` for a constant real exponent (base assumed positive).
    fn powf(self, c: f64) -> Self;

    /// Integer power by repeated multiplication (square-and-multiply).
    fn powi(self, k: i64) -> Self {
        let mut base = self;
        let mut e = k.unsigned_abs();
        let mut acc = Self::cst(1.0);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            e >>= 1;
            if e > 0 {
                base = base * base;
            }
        }
        if k < 0 {
            Self::cst(1.0) / acc
        } else {
            acc
        }
    }
}

impl Real for f64 {
    fn cst(x: f64) -> Self {
        x
    }
    fn primal(&self) -> f64 {
        *self
    }
    fn is_constant(&self) -> bool {
        true
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn powf(self, c: f64) -> Self {
        f64::powf(self, c)
    }
}

/// `re + eps·ε` with `ε² = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Real> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Self { re, eps }
    }

    pub fn constant(re: T) -> Self {
        Self { re, eps: T::cst(0.0) }
    }

    fn chain(self, value: T, slope: T) -> Self {
        Self { re: value, eps: self.eps * slope }
    }
}

fn is_zero<T: Real>(x: &T) -> bool {
    x.primal() == 0.0 && x.is_constant()
}

impl<T: Real> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { re: self.re + o.re, eps: self.eps + o.eps }
    }
}

impl<T: Real> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { re: self.re - o.re, eps: self.eps - o.eps }
    }
}

impl<T: Real> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self { re: self.re * o.re, eps: self.eps * o.re + self.re * o.eps }
    }
}

impl<T: Real> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q = self.re / o.re;
        Self { re: q, eps: (self.eps - q * o.eps) / o.re }
    }
}

impl<T: Real> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { re: -self.re, eps: -self.eps }
    }
}

impl<T: Real> Real for Dual<T> {
    fn cst(x: f64) -> Self {
        Self::constant(T::cst(x))
    }
    fn primal(&self) -> f64 {
        self.re.primal()
    }
    fn is_constant(&self) -> bool {
        self.re.is_constant() && is_zero(&self.eps)
    }
    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        Self { re: self.re.ln(), eps: self.eps / self.re }
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Self { re: s, eps: self.eps / (T::cst(2.0) * s) }
    }
    fn abs(self) -> Self {
        let p = self.re.primal();
        let sign = if p > 0.0 {
            1.0
        } else if p < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.chain(self.re.abs(), T::cst(sign))
    }
    fn powf(self, c: f64) -> Self {
        self.chain(self.re.powf(c), T::cst(c) * self.re.powf(c - 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type D = Dual<f64>;
    type DD = Dual<Dual<f64>>;

    #[test]
    fn first_derivatives() {
        let x = D::new(3.0, 1.0);
        assert_eq!((x * x).eps, 6.0);
        assert_eq!(x.powi(3).eps, 27.0);
        assert_eq!(x.powi(-1).eps, -1.0 / 9.0);
        assert_eq!(x.powi(0), D::cst(1.0));
        assert_eq!(D::new(0.0, 1.0).sin(), D::new(0.0, 1.0));
        assert!((x.powf(0.5).eps - 0.5 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(D::new(-2.0, 1.0).abs().eps, -1.0);
    }

    #[test]
    fn nested_mixed_second_derivative() {
        // f(x, y) = x^2 y at (2, 5): f_xy = 2x = 4, f_xx = 2y = 10
        let x = DD::new(D::new(2.0, 0.0), D::new(1.0, 0.0));
        let y = DD::new(D::new(5.0, 1.0), D::cst(0.0));
        let f = x * x * y;
        assert_eq!(f.eps.eps, 4.0);
        let xx = DD::new(D::new(2.0, 1.0), D::new(1.0, 0.0));
        let g = xx * xx * DD::cst(5.0);
        assert_eq!(g.eps.eps, 10.0);
    }

    #[test]
    fn constancy() {
        assert!(D::cst(2.0).is_constant());
        assert!(!D::new(2.0, 1.0).is_constant());
        assert!(!DD::new(D::new(1.0, 1.0), D::cst(0.0)).is_constant());
        assert!(DD::cst(3.0).is_constant());
    }
}
