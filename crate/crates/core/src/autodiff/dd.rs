//! Double-double scalar (about 106 significand bits) for high-precision
//! reference evaluation, e.g. the numeric side of gradient checks.
//!
//! Arithmetic, `exp`, `ln`, `ln_1p`, `tanh`, `sqrt` and `powi` carry full
//! precision. Trigonometric and other rarely used functions go through `f64`.

use std::fmt;
use std::iter::Sum;
use std::num::FpCategory;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign};

use num_traits::{Float, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};
use qd::Quad;

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Dd(Quad);

impl Dd {
    pub fn new(v: f64) -> Self {
        Dd(Quad(v, 0.0))
    }

    pub fn hi(self) -> f64 {
        self.0 .0
    }

    fn via_f64(self, f: impl Fn(f64) -> f64) -> Self {
        Dd::new(f(self.hi()))
    }
}

impl Default for Dd {
    fn default() -> Self {
        Dd::new(0.0)
    }
}

impl From<f64> for Dd {
    fn from(v: f64) -> Self {
        Dd(Quad(v, 0.0))
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&(self.0 .0 + self.0 .1), f)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, rhs: Dd) -> Dd {
        Dd(self.0.add_accurate(rhs.0))
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, rhs: Dd) -> Dd {
        Dd(self.0.sub_accurate(rhs.0))
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, rhs: Dd) -> Dd {
        Dd(self.0 * rhs.0)
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, rhs: Dd) -> Dd {
        Dd(self.0 / rhs.0)
    }
}

impl Rem for Dd {
    type Output = Dd;
    fn rem(self, rhs: Dd) -> Dd {
        self - (self / rhs).trunc() * rhs
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd(-self.0)
    }
}

macro_rules! assign_op {
    ($($tr:ident $method:ident $op:tt),+) => {
        $(impl $tr for Dd {
            fn $method(&mut self, rhs: Dd) {
                *self = *self $op rhs;
            }
        })+
    };
}

assign_op!(AddAssign add_assign +, SubAssign sub_assign -, MulAssign mul_assign *, DivAssign div_assign /, RemAssign rem_assign %);

impl Sum for Dd {
    fn sum<I: Iterator<Item = Dd>>(iter: I) -> Dd {
        iter.fold(Dd::zero(), |a, b| a + b)
    }
}

impl Zero for Dd {
    fn zero() -> Self {
        Dd::new(0.0)
    }

    fn is_zero(&self) -> bool {
        self.hi() == 0.0
    }
}

impl One for Dd {
    fn one() -> Self {
        Dd::new(1.0)
    }
}

impl Num for Dd {
    type FromStrRadixErr = num_traits::ParseFloatError;

    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        f64::from_str_radix(s, radix).map(Dd::new)
    }
}

impl ToPrimitive for Dd {
    fn to_i64(&self) -> Option<i64> {
        self.to_f64().and_then(|v| v.to_i64())
    }

    fn to_u64(&self) -> Option<u64> {
        self.to_f64().and_then(|v| v.to_u64())
    }

    fn to_f64(&self) -> Option<f64> {
        Some(self.0 .0 + self.0 .1)
    }
}

impl FromPrimitive for Dd {
    fn from_i64(n: i64) -> Option<Self> {
        let hi = n as f64;
        let lo = (n - hi as i64) as f64;
        Some(Dd(Quad(hi, 0.0).add_accurate(Quad(lo, 0.0))))
    }

    fn from_u64(n: u64) -> Option<Self> {
        let hi = n as f64;
        let lo = n.wrapping_sub(hi as u64) as i64 as f64;
        Some(Dd(Quad(hi, 0.0).add_accurate(Quad(lo, 0.0))))
    }

    fn from_f64(n: f64) -> Option<Self> {
        Some(Dd::new(n))
    }
}

impl NumCast for Dd {
    fn from<N: ToPrimitive>(n: N) -> Option<Self> {
        n.to_f64().map(Dd::new)
    }
}

impl Float for Dd {
    fn nan() -> Self {
        Dd(Quad::NAN)
    }

    fn infinity() -> Self {
        Dd(Quad::INFINITY)
    }

    fn neg_infinity() -> Self {
        Dd(Quad::NEG_INFINITY)
    }

    fn neg_zero() -> Self {
        Dd::new(-0.0)
    }

    fn min_value() -> Self {
        Dd(Quad::MIN)
    }

    fn min_positive_value() -> Self {
        Dd(Quad::MIN_POSITIVE)
    }

    fn max_value() -> Self {
        Dd(Quad::MAX)
    }

    fn is_nan(self) -> bool {
        self.0.is_nan()
    }

    fn is_infinite(self) -> bool {
        self.hi().is_infinite()
    }

    fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    fn is_normal(self) -> bool {
        self.hi().is_normal()
    }

    fn classify(self) -> FpCategory {
        self.hi().classify()
    }

    fn floor(self) -> Self {
        let hi = self.hi().floor();
        if hi == self.hi() {
            Dd(Quad(hi, 0.0).add_accurate(Quad(self.0 .1.floor(), 0.0)))
        } else {
            Dd::new(hi)
        }
    }

    fn ceil(self) -> Self {
        -(-self).floor()
    }

    fn round(self) -> Self {
        (self + Dd::new(0.5)).floor()
    }

    fn trunc(self) -> Self {
        if self.hi() >= 0.0 {
            self.floor()
        } else {
            self.ceil()
        }
    }

    fn fract(self) -> Self {
        self - self.trunc()
    }

    fn abs(self) -> Self {
        if self.hi() < 0.0 {
            -self
        } else {
            self
        }
    }

    fn signum(self) -> Self {
        self.via_f64(f64::signum)
    }

    fn is_sign_positive(self) -> bool {
        self.hi().is_sign_positive()
    }

    fn is_sign_negative(self) -> bool {
        self.hi().is_sign_negative()
    }

    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }

    fn recip(self) -> Self {
        Dd::one() / self
    }

    fn powi(self, n: i32) -> Self {
        let mut base = if n < 0 { self.recip() } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Dd::one();
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base *= base;
            e >>= 1;
        }
        acc
    }

    fn powf(self, n: Self) -> Self {
        (self.ln() * n).exp()
    }

    fn sqrt(self) -> Self {
        Dd(self.0.sqrt())
    }

    fn exp(self) -> Self {
        Dd(self.0.exp())
    }

    fn exp2(self) -> Self {
        (self * Dd(Quad::LN_2)).exp()
    }

    fn ln(self) -> Self {
        Dd(self.0.ln())
    }

    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }

    fn log2(self) -> Self {
        self.ln() / Dd(Quad::LN_2)
    }

    fn log10(self) -> Self {
        self.ln() / Dd(Quad::LN_10)
    }

    fn max(self, other: Self) -> Self {
        if self.is_nan() || other > self {
            other
        } else {
            self
        }
    }

    fn min(self, other: Self) -> Self {
        if self.is_nan() || other < self {
            other
        } else {
            self
        }
    }

    fn abs_sub(self, other: Self) -> Self {
        (self - other).max(Dd::zero())
    }

    fn cbrt(self) -> Self {
        self.via_f64(f64::cbrt)
    }

    fn hypot(self, other: Self) -> Self {
        (self * self + other * other).sqrt()
    }

    fn sin(self) -> Self {
        self.via_f64(f64::sin)
    }

    fn cos(self) -> Self {
        self.via_f64(f64::cos)
    }

    fn tan(self) -> Self {
        self.via_f64(f64::tan)
    }

    fn asin(self) -> Self {
        self.via_f64(f64::asin)
    }

    fn acos(self) -> Self {
        self.via_f64(f64::acos)
    }

    fn atan(self) -> Self {
        self.via_f64(f64::atan)
    }

    fn atan2(self, other: Self) -> Self {
        Dd::new(self.hi().atan2(other.hi()))
    }

    fn sin_cos(self) -> (Self, Self) {
        (self.sin(), self.cos())
    }

    fn exp_m1(self) -> Self {
        self.exp() - Dd::one()
    }

    fn ln_1p(self) -> Self {
        (Dd::one() + self).ln()
    }

    fn sinh(self) -> Self {
        let e = self.exp();
        (e - e.recip()) / Dd::new(2.0)
    }

    fn cosh(self) -> Self {
        let e = self.exp();
        (e + e.recip()) / Dd::new(2.0)
    }

    fn tanh(self) -> Self {
        if self.hi().abs() > 40.0 {
            return Dd::new(self.hi().signum());
        }
        let e = (self.abs() * Dd::new(-2.0)).exp();
        let t = (Dd::one() - e) / (Dd::one() + e);
        if self.hi() < 0.0 {
            -t
        } else {
            t
        }
    }

    fn asinh(self) -> Self {
        self.via_f64(f64::asinh)
    }

    fn acosh(self) -> Self {
        self.via_f64(f64::acosh)
    }

    fn atanh(self) -> Self {
        self.via_f64(f64::atanh)
    }

    fn integer_decode(self) -> (u64, i16, i8) {
        self.hi().integer_decode()
    }
}

impl Scalar for Dd {}
