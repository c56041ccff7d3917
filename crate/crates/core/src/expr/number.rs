//! Number types the expression evaluator is generic over.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed to evaluate an [`Expression`](super::Expression).
///
/// Implemented for `f64`, for first-order [`Dual`] numbers and for the
/// nested jets used by the exterior calculus. Domain checks happen in the
/// evaluator on [`Scalar::re`], so implementations only need to propagate
/// values.
pub trait Scalar:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn constant(value: f64) -> Self;
    /// The real (non-infinitesimal) part.
    fn re(&self) -> f64;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn abs(&self) -> Self;
    /// `atan2(self, x)` with `self` as the ordinate.
    fn atan2(&self, x: &Self) -> Self;
    fn powf(&self, exponent: f64) -> Self;
}

impl Scalar for f64 {
    fn constant(value: f64) -> Self {
        value
    }
    fn re(&self) -> f64 {
        *self
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn atan2(&self, x: &Self) -> Self {
        f64::atan2(*self, *x)
    }
    fn powf(&self, exponent: f64) -> Self {
        power(*self, exponent)
    }
}

/// `base^exponent`, using `powi` for integral exponents so that negative
/// bases and exact small powers behave.
pub(crate) fn power(base: f64, exponent: f64) -> f64 {
    if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
        base.powi(exponent as i32)
    } else {
        base.powf(exponent)
    }
}

/// Sign used for the derivative of `abs`; zero at the kink.
pub(crate) fn kink_sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// A first-order dual number `value + deriv·ε` with `ε² = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub deriv: f64,
}

impl Dual {
    pub fn new(value: f64, deriv: f64) -> Self {
        Dual { value, deriv }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        Dual::new(self.value + rhs.value, self.deriv + rhs.deriv)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        Dual::new(self.value - rhs.value, self.deriv - rhs.deriv)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        Dual::new(
            self.value * rhs.value,
            self.deriv * rhs.value + self.value * rhs.deriv,
        )
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        Dual::new(
            self.value / rhs.value,
            (self.deriv * rhs.value - self.value * rhs.deriv) / (rhs.value * rhs.value),
        )
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.value, -self.deriv)
    }
}

impl Scalar for Dual {
    fn constant(value: f64) -> Self {
        Dual::new(value, 0.0)
    }
    fn re(&self) -> f64 {
        self.value
    }
    fn sin(&self) -> Self {
        Dual::new(self.value.sin(), self.deriv * self.value.cos())
    }
    fn cos(&self) -> Self {
        Dual::new(self.value.cos(), -self.deriv * self.value.sin())
    }
    fn exp(&self) -> Self {
        let e = self.value.exp();
        Dual::new(e, self.deriv * e)
    }
    fn ln(&self) -> Self {
        Dual::new(self.value.ln(), self.deriv / self.value)
    }
    fn sqrt(&self) -> Self {
        let s = self.value.sqrt();
        Dual::new(s, self.deriv / (2.0 * s))
    }
    fn abs(&self) -> Self {
        Dual::new(self.value.abs(), self.deriv * kink_sign(self.value))
    }
    fn atan2(&self, x: &Self) -> Self {
        let r2 = x.value * x.value + self.value * self.value;
        Dual::new(
            self.value.atan2(x.value),
            (x.value * self.deriv - self.value * x.deriv) / r2,
        )
    }
    fn powf(&self, exponent: f64) -> Self {
        Dual::new(
            power(self.value, exponent),
            exponent * power(self.value, exponent - 1.0) * self.deriv,
        )
    }
}
