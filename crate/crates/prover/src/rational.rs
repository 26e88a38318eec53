//! Exact rationals with a string serialization (`"2/3"`, `"0"`).

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ProverError;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Q(pub BigRational);

impl Q {
    pub fn new(numer: i64, denom: i64) -> Q {
        Q(BigRational::new(numer.into(), denom.into()))
    }

    pub fn integer(n: i64) -> Q {
        Q(BigRational::from_integer(n.into()))
    }

    pub fn from_big(numer: BigInt, denom: BigInt) -> Q {
        Q(BigRational::new(numer, denom))
    }

    pub fn zero() -> Q {
        Q(BigRational::zero())
    }

    pub fn one() -> Q {
        Q(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = (self.0.numer(), self.0.denom());
        match (n.to_i64(), d.to_i64()) {
            (Some(n), Some(1)) => write!(f, "{n}"),
            (Some(n), Some(d)) => write!(f, "{n}/{d}"),
            _ if self.0.is_integer() => write!(f, "{n}"),
            _ => write!(f, "{n}/{d}"),
        }
    }
}

fn small(n: &str, d: &str) -> Option<Q> {
    let n: i64 = n.parse().ok()?;
    let d: i64 = d.parse().ok()?;
    if d == 0 || n == i64::MIN || d == i64::MIN {
        return None;
    }
    let r = Ratio::new(n, d);
    Some(Q(BigRational::new_raw(
        (*r.numer()).into(),
        (*r.denom()).into(),
    )))
}

impl FromStr for Q {
    type Err = ProverError;

    fn from_str(s: &str) -> Result<Q, ProverError> {
        let bad = || ProverError::Parse(format!("not a rational: `{s}`"));
        let (n, d) = match s.trim().split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        if let Some(q) = small(n, d) {
            return Ok(q);
        }
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(Q(BigRational::new(n, d)))
    }
}

impl Serialize for Q {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

struct QVisitor;

impl serde::de::Visitor<'_> for QVisitor {
    type Value = Q;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a rational such as \"2/3\"")
    }

    fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Q, E> {
        v.parse().map_err(E::custom)
    }
}

impl<'de> Deserialize<'de> for Q {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        d.deserialize_str(QVisitor)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident) => {
        impl $tr<&Q> for &Q {
            type Output = Q;
            fn $m(self, rhs: &Q) -> Q {
                Q((&self.0).$m(&rhs.0))
            }
        }
        impl $tr for Q {
            type Output = Q;
            fn $m(self, rhs: Q) -> Q {
                Q(self.0.$m(rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Q {
    type Output = Q;
    fn neg(self) -> Q {
        Q(-self.0)
    }
}

impl std::iter::Sum for Q {
    fn sum<I: Iterator<Item = Q>>(iter: I) -> Q {
        iter.fold(Q::zero(), |a, b| a + b)
    }
}

impl<'a> std::iter::Sum<&'a Q> for Q {
    fn sum<I: Iterator<Item = &'a Q>>(iter: I) -> Q {
        iter.fold(Q::zero(), |a, b| &a + b)
    }
}
