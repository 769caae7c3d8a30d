//! Scalar abstraction: the whole geometric pipeline is generic over the
//! scalar type, so the same code runs on plain `f64` and on [`Dual`]
//! numbers carrying exact first derivatives.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic interface shared by `f64` and dual numbers.
///
/// `value()` exposes the underlying real part; branching (pivot choice,
/// domain checks, bump cutoffs) is always decided on the value part so
/// that derivative propagation never changes control flow.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn value(&self) -> f64;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;

    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        let mut base = if n > 0 { self } else { Self::one() / self };
        let mut k = n.unsigned_abs();
        let mut acc = Self::one();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
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
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// First-order dual number: `val + der·ε` with `ε² = 0`.
///
/// Generic over the base scalar so duals can nest when a second
/// derivative of a derived quantity is ever needed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub val: T,
    pub der: T,
}

impl<T: Scalar> Dual<T> {
    pub fn new(val: T, der: T) -> Self {
        Dual { val, der }
    }

    /// Constant lift: derivative part zero.
    pub fn constant(val: T) -> Self {
        Dual {
            val,
            der: T::zero(),
        }
    }

    /// Seed with unit derivative (the active variable).
    pub fn seeded(val: T) -> Self {
        Dual {
            val,
            der: T::one(),
        }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Dual::new(self.val + rhs.val, self.der + rhs.der)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Dual::new(self.val - rhs.val, self.der - rhs.der)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        // Leibniz rule
        Dual::new(
            self.val * rhs.val,
            self.der * rhs.val + self.val * rhs.der,
        )
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let q = self.val / rhs.val;
        Dual::new(q, (self.der - q * rhs.der) / rhs.val)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.val, -self.der)
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn from_f64(x: f64) -> Self {
        Dual::constant(T::from_f64(x))
    }
    fn value(&self) -> f64 {
        self.val.value()
    }
    fn sqrt(self) -> Self {
        let r = self.val.sqrt();
        Dual::new(r, self.der / (T::from_f64(2.0) * r))
    }
    fn sin(self) -> Self {
        Dual::new(self.val.sin(), self.val.cos() * self.der)
    }
    fn cos(self) -> Self {
        Dual::new(self.val.cos(), -self.val.sin() * self.der)
    }
    fn exp(self) -> Self {
        let e = self.val.exp();
        Dual::new(e, e * self.der)
    }
    fn ln(self) -> Self {
        Dual::new(self.val.ln(), self.der / self.val)
    }
    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        Dual::new(
            self.val.powi(n),
            T::from_f64(n as f64) * self.val.powi(n - 1) * self.der,
        )
    }
}

/// Dual over `f64`, the workhorse for exact directional derivatives.
pub type Dual64 = Dual<f64>;
