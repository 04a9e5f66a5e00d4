//! Scalar abstraction for the differentiation core.
//!
//! Everything numeric in this crate is written against [`Scalar`] so the same
//! tape code runs on plain floats and on [`Dual`] numbers. Evaluating a
//! gradient with dual-valued parameters yields exact Hessian-vector products:
//! the tangent component of the gradient of `f` at `theta` with tangent seed
//! `v` is `H(theta) v`.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_traits::{One, Zero};

/// Field with the handful of transcendental functions the models need.
///
/// Implemented for `f32`, `f64` and [`Dual<S>`]. The `real` accessor exposes
/// the value part; branch decisions (max shifts, convergence checks) go
/// through it so they never depend on tangent data.
pub trait Scalar:
    Copy
    + PartialEq
    + PartialOrd
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum<Self>
{
    fn from_real(x: f64) -> Self;

    /// Value part; for duals this drops the tangent.
    fn real(self) -> f64;

    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn tanh(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn is_finite(self) -> bool;

    /// Logistic function, stable on both tails.
    fn sigmoid(self) -> Self {
        let one = Self::one();
        if self.real() >= 0.0 {
            one / (one + (-self).exp())
        } else {
            let e = self.exp();
            e / (one + e)
        }
    }
}

macro_rules! impl_scalar_float {
    ($($t:ty)*) => {$(
        impl Scalar for $t {
            #[inline]
            fn from_real(x: f64) -> Self {
                x as $t
            }
            #[inline]
            fn real(self) -> f64 {
                self as f64
            }
            #[inline]
            fn exp(self) -> Self {
                <$t>::exp(self)
            }
            #[inline]
            fn ln(self) -> Self {
                <$t>::ln(self)
            }
            #[inline]
            fn tanh(self) -> Self {
                <$t>::tanh(self)
            }
            #[inline]
            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }
            #[inline]
            fn abs(self) -> Self {
                <$t>::abs(self)
            }
            #[inline]
            fn is_finite(self) -> bool {
                <$t>::is_finite(self)
            }
        }
    )*};
}

impl_scalar_float!(f32 f64);

/// Forward-mode dual number `val + tan * eps` with `eps^2 = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<S> {
    pub val: S,
    pub tan: S,
}

impl<S: Scalar> Dual<S> {
    #[inline]
    pub fn new(val: S, tan: S) -> Self {
        Dual { val, tan }
    }

    /// Lift a plain value with zero tangent.
    #[inline]
    pub fn constant(val: S) -> Self {
        Dual {
            val,
            tan: S::zero(),
        }
    }
}

impl<S: Scalar> fmt::Display for Dual<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}eps", self.val, self.tan)
    }
}

impl<S: Scalar> PartialOrd for Dual<S> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.val.partial_cmp(&other.val)
    }
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Dual::new(self.val + rhs.val, self.tan + rhs.tan)
    }
}

impl<S: Scalar> Sub for Dual<S> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Dual::new(self.val - rhs.val, self.tan - rhs.tan)
    }
}

impl<S: Scalar> Mul for Dual<S> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Dual::new(
            self.val * rhs.val,
            self.tan * rhs.val + self.val * rhs.tan,
        )
    }
}

impl<S: Scalar> Div for Dual<S> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let val = self.val / rhs.val;
        Dual::new(val, (self.tan - val * rhs.tan) / rhs.val)
    }
}

impl<S: Scalar> Neg for Dual<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual::new(-self.val, -self.tan)
    }
}

impl<S: Scalar> AddAssign for Dual<S> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<S: Scalar> SubAssign for Dual<S> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<S: Scalar> MulAssign for Dual<S> {
    #[inline]
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl<S: Scalar> DivAssign for Dual<S> {
    #[inline]
    fn div_assign(&mut self, rhs: Self) {
        *self = *self / rhs;
    }
}

impl<S: Scalar> Zero for Dual<S> {
    #[inline]
    fn zero() -> Self {
        Dual::new(S::zero(), S::zero())
    }
    #[inline]
    fn is_zero(&self) -> bool {
        self.val.is_zero() && self.tan.is_zero()
    }
}

impl<S: Scalar> One for Dual<S> {
    #[inline]
    fn one() -> Self {
        Dual::new(S::one(), S::zero())
    }
}

impl<S: Scalar> Sum for Dual<S> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Zero::zero(), |acc, x| acc + x)
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    #[inline]
    fn from_real(x: f64) -> Self {
        Dual::new(S::from_real(x), S::zero())
    }

    #[inline]
    fn real(self) -> f64 {
        self.val.real()
    }

    #[inline]
    fn exp(self) -> Self {
        let e = self.val.exp();
        Dual::new(e, self.tan * e)
    }

    #[inline]
    fn ln(self) -> Self {
        Dual::new(self.val.ln(), self.tan / self.val)
    }

    #[inline]
    fn tanh(self) -> Self {
        let t = self.val.tanh();
        Dual::new(t, self.tan * (S::one() - t * t))
    }

    #[inline]
    fn sqrt(self) -> Self {
        let r = self.val.sqrt();
        Dual::new(r, self.tan / (S::from_real(2.0) * r))
    }

    #[inline]
    fn abs(self) -> Self {
        if self.val.real() < 0.0 {
            -self
        } else {
            self
        }
    }

    #[inline]
    fn is_finite(self) -> bool {
        self.val.is_finite() && self.tan.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type D = Dual<f64>;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn dual_product_rule() {
        let x = D::new(3.0, 1.0);
        let y = x * x; // d/dx x^2 = 2x
        assert_eq!(y.val, 9.0);
        assert_eq!(y.tan, 6.0);
    }

    #[test]
    fn dual_quotient_rule() {
        let x = D::new(2.0, 1.0);
        let y = D::constant(1.0) / x; // d/dx 1/x = -1/x^2
        assert!(close(y.val, 0.5, 1e-15));
        assert!(close(y.tan, -0.25, 1e-15));
    }

    #[test]
    fn dual_transcendentals_match_derivatives() {
        let x = D::new(0.7, 1.0);
        assert!(close(x.exp().tan, 0.7f64.exp(), 1e-14));
        assert!(close(x.ln().tan, 1.0 / 0.7, 1e-14));
        let t = 0.7f64.tanh();
        assert!(close(x.tanh().tan, 1.0 - t * t, 1e-14));
        assert!(close(x.sqrt().tan, 0.5 / 0.7f64.sqrt(), 1e-14));
        let s = Scalar::sigmoid(x);
        let sv = 1.0 / (1.0 + (-0.7f64).exp());
        assert!(close(s.val, sv, 1e-14));
        assert!(close(s.tan, sv * (1.0 - sv), 1e-14));
    }

    #[test]
    fn sigmoid_stable_on_tails() {
        assert!(close(Scalar::sigmoid(-800.0f64), 0.0, 1e-300));
        assert!(close(Scalar::sigmoid(800.0f64), 1.0, 1e-15));
        assert!(Scalar::sigmoid(-800.0f64).is_finite());
    }

    #[test]
    fn dual_finiteness_covers_tangent() {
        let x = D::new(1.0, f64::NAN);
        assert!(!Scalar::is_finite(x));
    }
}
