//! Exact rational scalars and vectors, plus the `"num/den"` string encoding
//! used at every I/O boundary.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

pub type Rational = BigRational;
pub type Vector = Vec<Rational>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse rational from {0:?}")]
pub struct ParseRationalError(pub String);

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"3"`, `"-3/4"` or `" 7 / 2 "`.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(s.to_string());
    let t = s.trim();
    if t.is_empty() {
        return Err(err());
    }
    match t.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| err())?;
            let d: BigInt = d.trim().parse().map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            Ok(Rational::new(n, d))
        }
        None => {
            let n: BigInt = t.parse().map_err(|_| err())?;
            Ok(Rational::from_integer(n))
        }
    }
}

/// Canonical string form: `"p/q"` in lowest terms, or `"p"` for integers.
pub fn fmt_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn vec_from_ints(v: &[i64]) -> Vector {
    v.iter().map(|&x| int(x)).collect()
}

pub fn zeros(n: usize) -> Vector {
    vec![Rational::zero(); n]
}

pub fn unit(n: usize, i: usize) -> Vector {
    let mut v = zeros(n);
    v[i] = Rational::one();
    v
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Rational::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            acc += x * y;
        }
    }
    acc
}

pub fn add(a: &[Rational], b: &[Rational]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[Rational], b: &[Rational]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(c: &Rational, a: &[Rational]) -> Vector {
    a.iter().map(|x| c * x).collect()
}

pub fn neg(a: &[Rational]) -> Vector {
    a.iter().map(|x| -x).collect()
}

pub fn is_zero_vec(a: &[Rational]) -> bool {
    a.iter().all(Zero::is_zero)
}

/// Scales a nonzero vector to the unique positive multiple with coprime
/// integer entries. The zero vector is returned unchanged.
pub fn primitive(a: &[Rational]) -> Vector {
    primitive_int(a).into_iter().map(Rational::from_integer).collect()
}

pub fn primitive_int(a: &[Rational]) -> Vec<BigInt> {
    let mut lcm = BigInt::one();
    for x in a {
        lcm = lcm.lcm(x.denom());
    }
    let ints: Vec<BigInt> = a.iter().map(|x| (x * &lcm).to_integer()).collect();
    primitive_bigint(ints)
}

pub fn primitive_bigint(mut v: Vec<BigInt>) -> Vec<BigInt> {
    let mut g = BigInt::zero();
    for x in &v {
        if !x.is_zero() {
            g = g.gcd(x);
            if g.is_one() {
                return v;
            }
        }
    }
    if g.is_zero() || g.is_one() {
        return v;
    }
    for x in v.iter_mut() {
        *x /= &g;
    }
    v
}

/// Canonical representative of a line: primitive, with first nonzero entry positive.
pub fn primitive_line(a: &[Rational]) -> Vector {
    let mut p = primitive(a);
    if let Some(first) = p.iter().find(|x| !x.is_zero()) {
        if first.is_negative() {
            p = neg(&p);
        }
    }
    p
}

pub struct DisplayVec<'a>(pub &'a [Rational]);

impl fmt::Display for DisplayVec<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", fmt_rational(x))?;
        }
        write!(f, ")")
    }
}

/// Serde adapters for rationals as `"num/den"` strings. Integers in JSON
/// input are accepted as well.
pub mod serde_q {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let v = RationalRepr::deserialize(d)?;
        v.into_rational().map_err(de::Error::custom)
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    pub(crate) enum RationalRepr {
        Str(String),
        Int(i64),
    }

    impl RationalRepr {
        pub(crate) fn into_rational(self) -> Result<Rational, ParseRationalError> {
            match self {
                RationalRepr::Str(s) => parse_rational(&s),
                RationalRepr::Int(i) => Ok(int(i)),
            }
        }
    }
}

pub mod serde_qvec {
    use super::serde_q::RationalRepr;
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let strs: Vec<String> = v.iter().map(fmt_rational).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector, D::Error> {
        let v = Vec::<RationalRepr>::deserialize(d)?;
        v.into_iter()
            .map(|r| r.into_rational().map_err(de::Error::custom))
            .collect()
    }
}

pub mod serde_qmat {
    use super::serde_q::RationalRepr;
    use super::*;

    pub fn serialize<S: Serializer>(m: &[Vector], s: S) -> Result<S::Ok, S::Error> {
        let strs: Vec<Vec<String>> = m
            .iter()
            .map(|row| row.iter().map(fmt_rational).collect())
            .collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vector>, D::Error> {
        let m = Vec::<Vec<RationalRepr>>::deserialize(d)?;
        m.into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|r| r.into_rational().map_err(de::Error::custom))
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rational("-6/8").unwrap(), frac(-3, 4));
        assert_eq!(parse_rational(" 5 ").unwrap(), int(5));
        assert_eq!(fmt_rational(&frac(10, 4)), "5/2");
        assert_eq!(fmt_rational(&frac(-4, 2)), "-2");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn primitive_scaling() {
        let v = vec![frac(1, 2), frac(3, 4), int(0)];
        assert_eq!(primitive(&v), vec_from_ints(&[2, 3, 0]));
        let w = vec_from_ints(&[-4, 6]);
        assert_eq!(primitive(&w), vec_from_ints(&[-2, 3]));
        assert_eq!(primitive_line(&w), vec_from_ints(&[2, -3]));
        assert_eq!(primitive(&zeros(2)), zeros(2));
    }
}
