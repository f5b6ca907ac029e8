//! Scalar types for the floating-point routes.
//!
//! Every numeric route (series, matrix exponential, eigen assembly) is generic
//! over [`Real`], implemented for `f64` and for [`ExtFloat`], a binary float
//! carrying [`EXTENDED_BITS`] bits of mantissa (about 60 decimal digits).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_ratio::RBig;

/// Mantissa width of [`ExtFloat`].
pub const EXTENDED_BITS: usize = 200;

type Big = FBig<HalfEven, 2>;

/// Working precision selector exposed to the CLI and bindings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    Double,
    Extended,
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "double" => Ok(Precision::Double),
            "extended" => Ok(Precision::Extended),
            other => Err(format!("unknown precision '{other}' (expected double or extended)")),
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Precision::Double => f.write_str("double"),
            Precision::Extended => f.write_str("extended"),
        }
    }
}

pub trait Real:
    Clone
    + fmt::Debug
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    /// Relative spacing of representable numbers near one.
    const UNIT_ROUNDOFF: f64;

    fn from_f64(x: f64) -> Self;
    fn from_rational(r: &RBig) -> Self;
    fn from_int(n: i64) -> Self;
    fn exp(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn to_f64(&self) -> f64;

    fn zero() -> Self {
        Self::from_int(0)
    }

    fn one() -> Self {
        Self::from_int(1)
    }

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn powi(&self, mut n: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base.clone();
            }
            n >>= 1;
            if n > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }
}

impl Real for f64 {
    const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

    fn from_f64(x: f64) -> Self {
        x
    }

    fn from_rational(r: &RBig) -> Self {
        r.to_f64().value()
    }

    fn from_int(n: i64) -> Self {
        n as f64
    }

    fn exp(&self) -> Self {
        f64::exp(*self)
    }

    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }
}

/// Binary float with [`EXTENDED_BITS`] bits of precision.
#[derive(Clone, PartialEq)]
pub struct ExtFloat(Big);

impl ExtFloat {
    fn wrap(x: Big) -> Self {
        ExtFloat(x.with_precision(EXTENDED_BITS).value())
    }
}

impl fmt::Debug for ExtFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExtFloat({:e})", self.to_f64())
    }
}

impl PartialOrd for ExtFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

macro_rules! ext_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for ExtFloat {
            type Output = ExtFloat;
            fn $method(self, rhs: ExtFloat) -> ExtFloat {
                ExtFloat(self.0 $op rhs.0)
            }
        }
    };
}

ext_binop!(Add, add, +);
ext_binop!(Sub, sub, -);
ext_binop!(Mul, mul, *);
ext_binop!(Div, div, /);

impl Neg for ExtFloat {
    type Output = ExtFloat;
    fn neg(self) -> ExtFloat {
        ExtFloat(-self.0)
    }
}

impl Real for ExtFloat {
    const UNIT_ROUNDOFF: f64 = 6.223015277861142e-61; // 2^-200

    fn from_f64(x: f64) -> Self {
        let big = Big::try_from(x).expect("finite f64");
        ExtFloat::wrap(big)
    }

    fn from_rational(r: &RBig) -> Self {
        ExtFloat(r.to_float::<HalfEven, 2>(EXTENDED_BITS).value())
    }

    fn from_int(n: i64) -> Self {
        ExtFloat::wrap(Big::from(n))
    }

    fn exp(&self) -> Self {
        ExtFloat(self.0.exp())
    }

    fn sqrt(&self) -> Self {
        ExtFloat(self.0.sqrt())
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dashu_int::{IBig, UBig};

    #[test]
    fn extended_resolves_beyond_double() {
        let one = ExtFloat::one();
        let tiny = ExtFloat::from_f64(1e-30);
        let back = (one.clone() + tiny.clone()) - one;
        assert!((back.to_f64() - 1e-30).abs() < 1e-45);
    }

    #[test]
    fn extended_transcendentals() {
        let two = ExtFloat::from_int(2);
        assert!((two.sqrt().to_f64() - std::f64::consts::SQRT_2).abs() < 1e-16);
        assert!((ExtFloat::from_f64(-0.5).exp().to_f64() - (-0.5f64).exp()).abs() < 1e-16);
        let r = RBig::from_parts(IBig::from(-7), UBig::from(3u8));
        let x = ExtFloat::from_rational(&r) * ExtFloat::from_int(3);
        assert!((x.to_f64() + 7.0).abs() < 1e-50);
    }

    #[test]
    fn powi_matches_repeated_product() {
        assert_eq!(Real::powi(&1.5f64, 0), 1.0);
        assert_eq!(Real::powi(&1.5f64, 5), 1.5f64.powi(5));
        let e = ExtFloat::from_int(3).powi(7);
        assert_eq!(e.to_f64(), 2187.0);
    }

    #[test]
    fn precision_parses() {
        assert_eq!("double".parse::<Precision>().unwrap(), Precision::Double);
        assert_eq!("extended".parse::<Precision>().unwrap(), Precision::Extended);
        assert!("quad".parse::<Precision>().is_err());
    }
}
