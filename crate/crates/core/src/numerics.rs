//! Exact scalars, fixed-size 4-vectors and 4×4 matrices.
//!
//! Everything here is exact: integers are `BigInt`, rationals are `BigRational`
//! (always reduced, positive denominator). Floating point only shows up in
//! [`approx_decimal`], which renders an exact value for human consumption.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type BigInteger = BigInt;
pub type ExactRational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericsError {
    #[error("cannot normalize a vector with zero l1 norm")]
    DegenerateNormalization,
    #[error("normalization requires non-negative entries, entry {index} is {value}")]
    NegativeEntry { index: usize, value: String },
    #[error("malformed exact number {0:?}")]
    Parse(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

/// A column vector of length four.
///
/// Indexing is zero-based; [`Vec4::basis`] takes the one-based basis index
/// used when talking about `e_1..e_4`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Vec4<T>(pub [T; 4]);

impl<T> Vec4<T> {
    pub fn new(entries: [T; 4]) -> Self {
        Vec4(entries)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.0.iter()
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Vec4<U> {
        Vec4(self.0.each_ref().map(f))
    }

    pub fn into_inner(self) -> [T; 4] {
        self.0
    }
}

impl<T: Zero + One> Vec4<T> {
    /// The standard basis vector `e_j`, `j` in `1..=4`.
    pub fn basis(j: usize) -> Self {
        assert!((1..=4).contains(&j), "basis index {j} out of range 1..=4");
        Vec4(std::array::from_fn(|i| {
            if i + 1 == j {
                T::one()
            } else {
                T::zero()
            }
        }))
    }
}

impl<T> Index<usize> for Vec4<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> IndexMut<usize> for Vec4<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

impl<T: fmt::Display> fmt::Display for Vec4<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {})",
            self.0[0], self.0[1], self.0[2], self.0[3]
        )
    }
}

/// A 4×4 matrix stored row-major; `get(i, j)` is row `i`, column `j`, zero-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mat4<T> {
    rows: [[T; 4]; 4],
}

impl<T> Mat4<T> {
    pub fn from_rows(rows: [[T; 4]; 4]) -> Self {
        Mat4 { rows }
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> T) -> Self {
        Mat4 {
            rows: std::array::from_fn(|i| std::array::from_fn(|j| f(i, j))),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.rows[i][j]
    }

    pub fn rows(&self) -> &[[T; 4]; 4] {
        &self.rows
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Mat4<U> {
        Mat4::from_fn(|i, j| f(&self.rows[i][j]))
    }
}

impl<T: Clone> Mat4<T> {
    /// Column `j` (zero-based), i.e. `M e_{j+1}`.
    pub fn column(&self, j: usize) -> Vec4<T> {
        Vec4(std::array::from_fn(|i| self.rows[i][j].clone()))
    }

    pub fn transpose(&self) -> Self {
        Mat4::from_fn(|i, j| self.rows[j][i].clone())
    }
}

impl<T: Zero + One> Mat4<T> {
    pub fn identity() -> Self {
        Mat4::from_fn(|i, j| if i == j { T::one() } else { T::zero() })
    }
}

impl<T: fmt::Display> fmt::Display for Mat4<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{} {} {} {}", row[0], row[1], row[2], row[3])?;
        }
        Ok(())
    }
}

/// `Σ |v_i|`.
pub fn l1_norm<T: Signed + Clone>(v: &Vec4<T>) -> T {
    v.iter().fold(T::zero(), |acc, x| acc + x.abs())
}

pub fn mat_mul<T>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T>
where
    T: Zero + Clone,
    for<'x> &'x T: Mul<&'x T, Output = T>,
{
    Mat4::from_fn(|i, j| (0..4).fold(T::zero(), |acc, k| acc + &a.rows[i][k] * &b.rows[k][j]))
}

pub fn mat_vec<T>(m: &Mat4<T>, v: &Vec4<T>) -> Vec4<T>
where
    T: Zero + Clone,
    for<'x> &'x T: Mul<&'x T, Output = T>,
{
    Vec4(std::array::from_fn(|i| {
        (0..4).fold(T::zero(), |acc, k| acc + &m.rows[i][k] * &v.0[k])
    }))
}

impl<T: Add<Output = T> + Clone> Add for &Vec4<T> {
    type Output = Vec4<T>;
    fn add(self, rhs: Self) -> Vec4<T> {
        Vec4(std::array::from_fn(|i| {
            self.0[i].clone() + rhs.0[i].clone()
        }))
    }
}

/// `v / |v|_1`. Entries must be non-negative and not all zero.
pub fn normalize(v: &Vec4<BigRational>) -> Result<Vec4<BigRational>, NumericsError> {
    if let Some(index) = v.iter().position(|x| x.is_negative()) {
        return Err(NumericsError::NegativeEntry {
            index,
            value: rational_text(&v[index]),
        });
    }
    let norm = l1_norm(v);
    if norm.is_zero() {
        return Err(NumericsError::DegenerateNormalization);
    }
    Ok(v.map(|x| x / &norm))
}

/// Integer-vector convenience for [`normalize`].
pub fn normalize_int(v: &Vec4<BigInt>) -> Result<Vec4<BigRational>, NumericsError> {
    normalize(&v.map(|x| BigRational::from_integer(x.clone())))
}

pub fn ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> BigRational {
    BigRational::new(num.into(), den.into())
}

pub fn int(n: impl Into<BigInt>) -> BigInt {
    n.into()
}

/// `"p/q"` in lowest terms, denominator always written.
pub fn rational_text(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Accepts `"p/q"` or a bare integer `"p"`.
pub fn parse_rational(s: &str) -> Result<BigRational, NumericsError> {
    let t = s.trim();
    let (p, q) = match t.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (t, "1"),
    };
    let p: BigInt = p.parse().map_err(|_| NumericsError::Parse(s.to_string()))?;
    let q: BigInt = q.parse().map_err(|_| NumericsError::Parse(s.to_string()))?;
    if q.is_zero() {
        return Err(NumericsError::ZeroDenominator(s.to_string()));
    }
    Ok(BigRational::new(p, q))
}

pub fn parse_integer(s: &str) -> Result<BigInt, NumericsError> {
    s.trim()
        .parse()
        .map_err(|_| NumericsError::Parse(s.to_string()))
}

/// Decimal rendering with `digits` significant digits in scientific notation,
/// e.g. `6.92234346859e-1`. Computed with integer arithmetic, so it works for
/// magnitudes far outside the `f64` range. Rounds half away from zero.
pub fn approx_decimal(r: &BigRational, digits: u32) -> String {
    assert!(digits >= 1);
    if r.is_zero() {
        return "0".to_string();
    }
    let sign = if r.is_negative() { "-" } else { "" };
    let p = r.numer().abs();
    let q = r.denom().clone();
    // first guess at floor(log10(p/q)) from digit counts, then correct
    let mut e = p.to_string().len() as i64 - q.to_string().len() as i64;
    let ten = BigInt::from(10u32);
    let scaled = |e: i64| -> (BigInt, BigInt) {
        // p/q * 10^(digits-1-e) as a fraction num/den
        let shift = digits as i64 - 1 - e;
        if shift >= 0 {
            (&p * ten.clone().pow(shift as u32), q.clone())
        } else {
            (p.clone(), &q * ten.clone().pow((-shift) as u32))
        }
    };
    let lower = ten.clone().pow(digits - 1);
    let upper = ten.clone().pow(digits);
    let mantissa = loop {
        let (num, den) = scaled(e);
        let (m, rem) = num.div_rem(&den);
        if m < lower {
            e -= 1;
            continue;
        }
        if m >= upper {
            e += 1;
            continue;
        }
        let mut m = m;
        if &rem * 2u32 >= den {
            m += 1u32;
        }
        if m == upper {
            e += 1;
            m = lower.clone();
        }
        break m;
    };
    let s = mantissa.to_string();
    let (head, tail) = s.split_at(1);
    if tail.is_empty() {
        format!("{sign}{head}e{e}")
    } else {
        format!("{sign}{head}.{tail}e{e}")
    }
}

/// Approximate `log2 |x|` for a non-zero integer of any size.
pub fn log2_approx(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return x.abs().to_f64().unwrap().log2();
    }
    let shift = bits - 64;
    let top = (x.abs() >> shift).to_f64().unwrap();
    top.log2() + shift as f64
}

/// Approximate `log2` of a positive rational.
pub fn log2_approx_rational(r: &BigRational) -> f64 {
    log2_approx(r.numer()) - log2_approx(r.denom())
}

pub fn rational_pow(r: &BigRational, e: u32) -> BigRational {
    BigRational::new(r.numer().pow(e), r.denom().pow(e))
}

/// Serde support for exact numbers: big integers travel as decimal strings,
/// rationals as `"p/q"`, and plain machine counters as JSON numbers.
pub trait ExactRepr: Sized {
    fn serialize_exact<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error>;
    fn deserialize_exact<'de, D: Deserializer<'de>>(d: D) -> Result<Self, D::Error>;
}

#[derive(Deserialize)]
#[serde(untagged)]
enum IntText {
    Text(String),
    Signed(i64),
    Unsigned(u64),
}

impl ExactRepr for BigInt {
    fn serialize_exact<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
    fn deserialize_exact<'de, D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match IntText::deserialize(d)? {
            IntText::Text(t) => parse_integer(&t).map_err(de::Error::custom),
            IntText::Signed(v) => Ok(BigInt::from(v)),
            IntText::Unsigned(v) => Ok(BigInt::from(v)),
        }
    }
}

impl ExactRepr for BigRational {
    fn serialize_exact<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&rational_text(self))
    }
    fn deserialize_exact<'de, D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match IntText::deserialize(d)? {
            IntText::Text(t) => parse_rational(&t).map_err(de::Error::custom),
            IntText::Signed(v) => Ok(BigRational::from_integer(v.into())),
            IntText::Unsigned(v) => Ok(BigRational::from_integer(v.into())),
        }
    }
}

impl ExactRepr for u64 {
    fn serialize_exact<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(*self)
    }
    fn deserialize_exact<'de, D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        u64::deserialize(d)
    }
}

struct Exact<'a, T>(&'a T);

impl<T: ExactRepr> Serialize for Exact<'_, T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize_exact(s)
    }
}

struct Owned<T>(T);

impl<'de, T: ExactRepr> Deserialize<'de> for Owned<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        T::deserialize_exact(d).map(Owned)
    }
}

impl<T: ExactRepr> Serialize for Vec4<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(4))?;
        for x in self.iter() {
            seq.serialize_element(&Exact(x))?;
        }
        seq.end()
    }
}

impl<T: ExactRepr> Serialize for Mat4<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(4))?;
        for row in &self.rows {
            let row: Vec<Exact<'_, T>> = row.iter().map(Exact).collect();
            seq.serialize_element(&row)?;
        }
        seq.end()
    }
}

impl<'de, T: ExactRepr> Deserialize<'de> for Vec4<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v: [Owned<T>; 4] = Deserialize::deserialize(d)?;
        Ok(Vec4(v.map(|o| o.0)))
    }
}

impl<'de, T: ExactRepr> Deserialize<'de> for Mat4<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v: [[Owned<T>; 4]; 4] = Deserialize::deserialize(d)?;
        Ok(Mat4::from_rows(v.map(|r| r.map(|o| o.0))))
    }
}

/// `#[serde(with = "exact")]` for a single exact scalar field.
pub mod exact {
    use super::*;

    pub fn serialize<T: ExactRepr, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        v.serialize_exact(s)
    }

    pub fn deserialize<'de, T: ExactRepr, D: Deserializer<'de>>(d: D) -> Result<T, D::Error> {
        T::deserialize_exact(d)
    }
}

/// `#[serde(with = "exact_vec")]` for `Vec<T>` of exact scalars.
pub mod exact_vec {
    use super::*;

    pub fn serialize<T: ExactRepr, S: Serializer>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&Exact(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, T: ExactRepr, D: Deserializer<'de>>(d: D) -> Result<Vec<T>, D::Error> {
        let v: Vec<Owned<T>> = Deserialize::deserialize(d)?;
        Ok(v.into_iter().map(|o| o.0).collect())
    }
}

/// `#[serde(with = "exact_opt")]` for `Option<T>`.
pub mod exact_opt {
    use super::*;

    pub fn serialize<T: ExactRepr, S: Serializer>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_some(&Exact(x)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, T: ExactRepr, D: Deserializer<'de>>(
        d: D,
    ) -> Result<Option<T>, D::Error> {
        let v: Option<Owned<T>> = Deserialize::deserialize(d)?;
        Ok(v.map(|o| o.0))
    }
}
