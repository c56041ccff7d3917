//! Nested forward-mode numbers.
//!
//! A jet of level `L` is a polynomial in `L` independent infinitesimals
//! `ε₁…ε_L` with `εᵢ² = 0`, stored densely as `2^L` coefficients indexed by
//! the bitmask of the infinitesimals in each monomial. Seeding coordinate
//! `j` with every infinitesimal assigned to axis `j` makes the top
//! coefficient the exact mixed partial derivative.
//!
//! Operations recurse on the highest infinitesimal:
//! `f(b + c·ε) = f(b) + f'(b)·c·ε`, with `b` and `c` jets one level down.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::expr::{kink_sign, power, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet(Vec<f64>);

impl Jet {
    pub fn constant(value: f64) -> Jet {
        Jet(vec![value])
    }

    pub fn level(&self) -> usize {
        self.0.len().trailing_zeros() as usize
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.0
    }

    /// Embeds the jet into a higher level with zero coefficients on the
    /// new infinitesimals.
    pub fn promote(&self, level: usize) -> Jet {
        debug_assert!(level >= self.level());
        let mut coeffs = self.0.clone();
        coeffs.resize(1 << level, 0.0);
        Jet(coeffs)
    }

    /// `self + seed·ε_{L+1}` where `L` is the current level.
    pub fn with_new_infinitesimal(&self, seed: f64) -> Jet {
        let mut coeffs = self.0.clone();
        let half = coeffs.len();
        coeffs.resize(2 * half, 0.0);
        coeffs[half] = seed;
        Jet(coeffs)
    }

    /// Splits `b + c·ε_L` into `(b, c)`. `None` at level 0.
    fn split(&self) -> Option<(Jet, Jet)> {
        if self.0.len() == 1 {
            return None;
        }
        let half = self.0.len() / 2;
        Some((Jet(self.0[..half].to_vec()), Jet(self.0[half..].to_vec())))
    }

    /// Splits at a given level, promoting first if needed.
    fn split_at(&self, level: usize) -> (Jet, Jet) {
        self.promote(level).split().expect("level > 0")
    }

    fn join(b: Jet, c: Jet) -> Jet {
        let level = b.level().max(c.level());
        let mut coeffs = b.promote(level).0;
        coeffs.extend(c.promote(level).0);
        Jet(coeffs)
    }

    /// A coordinate value carrying unit slope along every infinitesimal in
    /// `seeds`, embedded at `level`.
    pub fn seeded(value: f64, level: usize, seeds: impl IntoIterator<Item = usize>) -> Jet {
        let mut coeffs = vec![0.0; 1 << level];
        coeffs[0] = value;
        for m in seeds {
            coeffs[1 << m] = 1.0;
        }
        Jet(coeffs)
    }

    /// Coefficient of the monomial whose infinitesimals are the set bits of
    /// `mask`.
    pub fn coefficient(&self, mask: usize) -> f64 {
        self.0.get(mask).copied().unwrap_or(0.0)
    }

    fn binary(a: &Jet, b: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        let level = a.level().max(b.level());
        let a = a.promote(level);
        let b = b.promote(level);
        Jet(a.0.iter().zip(&b.0).map(|(x, y)| f(*x, *y)).collect())
    }

    fn scale(&self, s: f64) -> Jet {
        Jet(self.0.iter().map(|x| x * s).collect())
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        Jet::binary(&self, &rhs, |a, b| a + b)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        Jet::binary(&self, &rhs, |a, b| a - b)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        if rhs.0.len() == 1 {
            return self.scale(rhs.0[0]);
        }
        if self.0.len() == 1 {
            return rhs.scale(self.0[0]);
        }
        let level = self.level().max(rhs.level());
        let (b1, c1) = self.split_at(level);
        let (b2, c2) = rhs.split_at(level);
        let cross = b1.clone() * c2 + c1 * b2.clone();
        Jet::join(b1 * b2, cross)
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        if rhs.0.len() == 1 {
            return self.scale(1.0 / rhs.0[0]);
        }
        let level = self.level().max(rhs.level());
        let (b1, c1) = self.split_at(level);
        let (b2, c2) = rhs.split_at(level);
        let quotient = b1.clone() / b2.clone();
        let slope = (c1 * b2.clone() - b1 * c2) / (b2.clone() * b2);
        Jet::join(quotient, slope)
    }
}

impl Scalar for Jet {
    fn constant(value: f64) -> Self {
        Jet::constant(value)
    }

    fn re(&self) -> f64 {
        self.0[0]
    }

    fn sin(&self) -> Self {
        match self.split() {
            None => Jet::constant(self.0[0].sin()),
            Some((b, c)) => Jet::join(b.sin(), b.cos() * c),
        }
    }

    fn cos(&self) -> Self {
        match self.split() {
            None => Jet::constant(self.0[0].cos()),
            Some((b, c)) => Jet::join(b.cos(), -(b.sin() * c)),
        }
    }

    fn exp(&self) -> Self {
        match self.split() {
            None => Jet::constant(self.0[0].exp()),
            Some((b, c)) => {
                let e = b.exp();
                Jet::join(e.clone(), e * c)
            }
        }
    }

    fn ln(&self) -> Self {
        match self.split() {
            None => Jet::constant(self.0[0].ln()),
            Some((b, c)) => Jet::join(b.ln(), c / b),
        }
    }

    fn sqrt(&self) -> Self {
        match self.split() {
            None => Jet::constant(self.0[0].sqrt()),
            Some((b, c)) => {
                let s = b.sqrt();
                Jet::join(s.clone(), c / s.scale(2.0))
            }
        }
    }

    fn abs(&self) -> Self {
        let sign = kink_sign(self.0[0]);
        self.scale(if sign == 0.0 { 1.0 } else { sign })
            .with_kink(sign)
    }

    fn atan2(&self, x: &Self) -> Self {
        let level = self.level().max(x.level());
        if level == 0 {
            return Jet::constant(self.0[0].atan2(x.0[0]));
        }
        let (yb, yc) = self.split_at(level);
        let (xb, xc) = x.split_at(level);
        let r2 = xb.clone() * xb.clone() + yb.clone() * yb.clone();
        let slope = (xb.clone() * yc - yb.clone() * xc) / r2;
        Jet::join(yb.atan2(&xb), slope)
    }

    fn powf(&self, exponent: f64) -> Self {
        match self.split() {
            None => Jet::constant(power(self.0[0], exponent)),
            Some((b, c)) => {
                let slope = if exponent == 1.0 {
                    c
                } else {
                    b.powf(exponent - 1.0).scale(exponent) * c
                };
                Jet::join(b.powf(exponent), slope)
            }
        }
    }
}

impl Jet {
    // |x| is sign(x)·x away from zero; at the kink the infinitesimal part is
    // dropped, matching the dual-number convention.
    fn with_kink(mut self, sign: f64) -> Jet {
        if sign == 0.0 {
            for c in self.0.iter_mut().skip(1) {
                *c = 0.0;
            }
        }
        self
    }
}
