//! Keane's construction: parameter sequences `(m_k, n_k)`, the landing
//! matrices `A_{m,n}`, their products, and the truncated length and weight
//! vectors derived from them.
//!
//! Levels are one-based in the parameter sequence (`m_1, n_1` is the first
//! pair) and level `0` is the ambient map. A depth-`K` truncation uses the
//! first `K` pairs only.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iet::{IetError, IetMap, Permutation4};
use crate::numerics::{self, exact, l1_norm, mat_mul, mat_vec, Mat4, NumericsError, Vec4};

/// Default cap on the size of generated parameters.
pub const DEFAULT_BIT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeaneError {
    #[error("parameter {name}_{k} = {value} must be at least 1")]
    InvalidParameter {
        name: &'static str,
        k: usize,
        value: String,
    },
    #[error("level {k} outside the allowed range {min}..={max}")]
    LevelOutOfRange { k: usize, min: usize, max: usize },
    #[error("truncation depth {depth} is too small, need at least {min}")]
    DepthTooSmall { depth: usize, min: usize },
    #[error("basis index {0} is not one of 1..=4")]
    BasisOutOfRange(usize),
    #[error("generation depth must be at least 1")]
    EmptySequence,
    #[error("parameter at level {k} needs {bits} bits, over the budget of {budget}")]
    BitBudget { k: usize, bits: u64, budget: u64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Iet(#[from] IetError),
}

/// Named parameter families.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SequenceKind {
    /// Tightest sequence admitted by Keane's inequalities from `n_1 = 10`.
    Minimal,
    /// `n_k = 9^{4^{k-1}}`, `m_k = 9^{4^{k-1}+k}`.
    Theorem4,
    /// `m_k ≥ k² n_k` growth; `r` is the exponent the sequence is meant to
    /// be checked against.
    Theorem3 { r: BigRational },
    /// Super-exponential `n_{k+1}` driving the cover sums to zero dimension.
    Corollary1,
    /// Pairs supplied by the user.
    Explicit,
}

impl SequenceKind {
    pub fn name(&self) -> &'static str {
        match self {
            SequenceKind::Minimal => "minimal",
            SequenceKind::Theorem4 => "theorem4",
            SequenceKind::Theorem3 { .. } => "theorem3",
            SequenceKind::Corollary1 => "corollary1",
            SequenceKind::Explicit => "explicit",
        }
    }
}

impl fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SequenceKind::Theorem3 { r } => write!(f, "theorem3(r={})", numerics::rational_text(r)),
            other => f.write_str(other.name()),
        }
    }
}

/// A finite parameter sequence `(m_1, n_1), .., (m_d, n_d)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSeq {
    pairs: Vec<(BigInt, BigInt)>,
    kind: SequenceKind,
}

impl ParamSeq {
    pub fn new(pairs: Vec<(BigInt, BigInt)>, kind: SequenceKind) -> Result<Self, KeaneError> {
        for (i, (m, n)) in pairs.iter().enumerate() {
            for (name, value) in [("m", m), ("n", n)] {
                if value < &BigInt::one() {
                    return Err(KeaneError::InvalidParameter {
                        name,
                        k: i + 1,
                        value: value.to_string(),
                    });
                }
            }
        }
        Ok(ParamSeq { pairs, kind })
    }

    pub fn from_u64(pairs: &[(u64, u64)]) -> Result<Self, KeaneError> {
        Self::new(
            pairs.iter().map(|&(m, n)| (m.into(), n.into())).collect(),
            SequenceKind::Explicit,
        )
    }

    pub fn kind(&self) -> &SequenceKind {
        &self.kind
    }

    pub fn pairs(&self) -> &[(BigInt, BigInt)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `m_k`, one-based.
    pub fn m(&self, k: usize) -> &BigInt {
        &self.pairs[k - 1].0
    }

    /// `n_k`, one-based.
    pub fn n(&self, k: usize) -> &BigInt {
        &self.pairs[k - 1].1
    }

    /// Same pairs, first `depth` only.
    pub fn truncated(&self, depth: usize) -> ParamSeq {
        ParamSeq {
            pairs: self.pairs[..depth.min(self.pairs.len())].to_vec(),
            kind: self.kind.clone(),
        }
    }

    pub fn record(&self) -> ParamSeqRecord {
        ParamSeqRecord {
            pairs: self
                .pairs
                .iter()
                .map(|(m, n)| [m.to_string(), n.to_string()])
                .collect(),
            kind: self.kind.name().to_string(),
            r: match &self.kind {
                SequenceKind::Theorem3 { r } => Some(numerics::rational_text(r)),
                _ => None,
            },
            depth: self.pairs.len(),
        }
    }

    pub fn from_record(record: &ParamSeqRecord) -> Result<Self, KeaneError> {
        let mut pairs = Vec::with_capacity(record.pairs.len());
        for [m, n] in &record.pairs {
            pairs.push((numerics::parse_integer(m)?, numerics::parse_integer(n)?));
        }
        let kind = match record.kind.as_str() {
            "minimal" => SequenceKind::Minimal,
            "theorem4" => SequenceKind::Theorem4,
            "corollary1" => SequenceKind::Corollary1,
            "theorem3" => SequenceKind::Theorem3 {
                r: numerics::parse_rational(record.r.as_deref().unwrap_or("1"))?,
            },
            _ => SequenceKind::Explicit,
        };
        ParamSeq::new(pairs, kind)
    }
}

/// Wire form of a [`ParamSeq`]: integers as decimal strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSeqRecord {
    pub pairs: Vec<[String; 2]>,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<String>,
    pub depth: usize,
}

/// `A_{m,n}` with rows `(0 0 1 1; m-1 m 0 0; n n n-1 n; 1 1 1 1)`.
pub fn keane_matrix(m: &BigInt, n: &BigInt) -> Result<Mat4<BigInt>, KeaneError> {
    for (name, value) in [("m", m), ("n", n)] {
        if value < &BigInt::one() {
            return Err(KeaneError::InvalidParameter {
                name,
                k: 0,
                value: value.to_string(),
            });
        }
    }
    let z = BigInt::zero;
    let o = BigInt::one;
    Ok(Mat4::from_rows([
        [z(), z(), o(), o()],
        [m - 1, m.clone(), z(), z()],
        [n.clone(), n.clone(), n - 1, n.clone()],
        [o(), o(), o(), o()],
    ]))
}

/// Keane's inequalities at one level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationLevel {
    pub k: usize,
    /// `3(n_k + 1) ≤ m_k`
    pub lower_holds: bool,
    pub lower_tight: bool,
    /// `m_k ≤ (n_{k+1} + 1) / 2`
    pub upper_holds: bool,
    pub upper_tight: bool,
    #[serde(with = "exact")]
    pub lower_bound: BigInt,
    #[serde(with = "exact")]
    pub m: BigInt,
    #[serde(with = "exact")]
    pub upper_bound: BigRational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    #[serde(with = "exact")]
    pub n1: BigInt,
    /// `n_1 ≥ 10`
    pub n1_holds: bool,
    pub levels: Vec<ValidationLevel>,
    /// Every ratio inequality holds (the `n_1` condition is separate).
    pub ratios_hold: bool,
}

impl ValidationReport {
    pub fn all_hold(&self) -> bool {
        self.n1_holds && self.ratios_hold
    }
}

/// Check `3(n_k+1) ≤ m_k ≤ (n_{k+1}+1)/2` for every `k < len` and `n_1 ≥ 10`.
pub fn validate_sequence(seq: &ParamSeq) -> ValidationReport {
    let mut levels = Vec::new();
    for k in 1..seq.len() {
        let lower_bound = (seq.n(k) + 1u32) * 3u32;
        let upper_bound = BigRational::new(seq.n(k + 1) + 1u32, BigInt::from(2));
        let m_q = BigRational::from_integer(seq.m(k).clone());
        levels.push(ValidationLevel {
            k,
            lower_holds: &lower_bound <= seq.m(k),
            lower_tight: &lower_bound == seq.m(k),
            upper_holds: m_q <= upper_bound,
            upper_tight: m_q == upper_bound,
            lower_bound,
            m: seq.m(k).clone(),
            upper_bound,
        });
    }
    let ratios_hold = levels.iter().all(|l| l.lower_holds && l.upper_holds);
    let n1 = seq.pairs.first().map(|p| p.1.clone()).unwrap_or_default();
    ValidationReport {
        n1_holds: n1 >= BigInt::from(10),
        n1,
        levels,
        ratios_hold,
    }
}

fn check_level(k: usize, min: usize, max: usize) -> Result<(), KeaneError> {
    if k < min || k > max {
        return Err(KeaneError::LevelOutOfRange { k, min, max });
    }
    Ok(())
}

fn check_basis(i: usize) -> Result<(), KeaneError> {
    if !(1..=4).contains(&i) {
        return Err(KeaneError::BasisOutOfRange(i));
    }
    Ok(())
}

/// `A_{m_{from+1},n_{from+1}} ··· A_{m_to,n_to}`; identity when `from == to`.
pub fn range_product(seq: &ParamSeq, from: usize, to: usize) -> Result<Mat4<BigInt>, KeaneError> {
    check_level(to, 0, seq.len())?;
    check_level(from, 0, to)?;
    let mut acc = Mat4::identity();
    for k in from + 1..=to {
        acc = mat_mul(&acc, &keane_matrix(seq.m(k), seq.n(k))?);
    }
    Ok(acc)
}

/// `B_k = A_{m_1,n_1} ··· A_{m_k,n_k}`, `B_0 = I`.
pub fn product_matrix(seq: &ParamSeq, k: usize) -> Result<Mat4<BigInt>, KeaneError> {
    range_product(seq, 0, k)
}

/// `b_{k,i} = |B_k e_i|_1`.
pub fn column_mass(seq: &ParamSeq, k: usize, i: usize) -> Result<BigInt, KeaneError> {
    check_basis(i)?;
    Ok(l1_norm(&product_matrix(seq, k)?.column(i - 1)))
}

/// All four `b_{k,i}` at once.
pub fn column_masses(seq: &ParamSeq, k: usize) -> Result<Vec4<BigInt>, KeaneError> {
    let b = product_matrix(seq, k)?;
    Ok(Vec4(std::array::from_fn(|j| l1_norm(&b.column(j)))))
}

/// `(Π m_i, Π (m_i + n_i + 1))` over `i ≤ k`, the coarse bounds on `b_{k,2}`.
pub fn mass_bounds(seq: &ParamSeq, k: usize) -> Result<(BigInt, BigInt), KeaneError> {
    check_level(k, 1, seq.len())?;
    let mut lower = BigInt::one();
    let mut upper = BigInt::one();
    for i in 1..=k {
        lower *= seq.m(i);
        upper *= seq.m(i) + seq.n(i) + 1u32;
    }
    Ok((lower, upper))
}

/// `normalize(B_K e_3)`: the depth-`K` interval lengths of the ambient map.
pub fn length_vector(seq: &ParamSeq, depth: usize) -> Result<Vec4<BigRational>, KeaneError> {
    if depth < 2 {
        return Err(KeaneError::DepthTooSmall { depth, min: 2 });
    }
    check_level(depth, 2, seq.len())?;
    Ok(numerics::normalize_int(
        &product_matrix(seq, depth)?.column(2),
    )?)
}

/// `A_{m_{k+1},n_{k+1}} ··· A_{m_K,n_K} e_basis`, unnormalized.
///
/// Entry `j` is proportional to the `λ_basis` measure of `I_j^(k)`, and for
/// `basis = 3` it is exactly the length of `I_j^(k)` on the grid of the
/// depth-`K` map (denominator `|B_K e_3|_1`).
pub fn tail_vector(
    seq: &ParamSeq,
    k: usize,
    depth: usize,
    basis: usize,
) -> Result<Vec4<BigInt>, KeaneError> {
    check_basis(basis)?;
    check_level(depth, 1, seq.len())?;
    if k >= depth {
        return Err(KeaneError::LevelOutOfRange {
            k,
            min: 0,
            max: depth - 1,
        });
    }
    let tail = range_product(seq, k, depth)?;
    Ok(mat_vec(&tail, &Vec4::basis(basis)))
}

/// Depth-`K` proportions of `I_1^(k)..I_4^(k)` inside `I^(k)` for the
/// measure `λ_basis`.
pub fn level_weights(
    seq: &ParamSeq,
    k: usize,
    depth: usize,
    basis: usize,
) -> Result<Vec4<BigRational>, KeaneError> {
    Ok(numerics::normalize_int(&tail_vector(
        seq, k, depth, basis,
    )?)?)
}

/// Absolute (ambient) depth-`K` measure of each `I_j^(k)`:
/// `(tail e_basis)_j / |B_K e_basis|_1`.
pub fn ambient_weights(
    seq: &ParamSeq,
    k: usize,
    depth: usize,
    basis: usize,
) -> Result<Vec4<BigRational>, KeaneError> {
    let tail = tail_vector(seq, k, depth, basis)?;
    let total = l1_norm(&product_matrix(seq, depth)?.column(basis - 1));
    Ok(tail.map(|x| BigRational::new(x.clone(), total.clone())))
}

/// Everything known about level `k` of a depth-`K` truncation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelData {
    pub level: usize,
    pub depth: usize,
    /// `b_{k,1..4}`
    pub masses: Vec4<BigInt>,
    /// λ3 proportions of `I_j^(k)` within `I^(k)`.
    pub lambda3: Vec4<BigRational>,
    /// λ2 proportions of `I_j^(k)` within `I^(k)`.
    pub lambda2: Vec4<BigRational>,
}

pub fn level_data(seq: &ParamSeq, k: usize, depth: usize) -> Result<LevelData, KeaneError> {
    Ok(LevelData {
        level: k,
        depth,
        masses: column_masses(seq, k)?,
        lambda3: level_weights(seq, k, depth, 3)?,
        lambda2: level_weights(seq, k, depth, 2)?,
    })
}

/// The depth-`K` truncated map: lengths `normalize(B_K e_3)` with Keane's
/// permutation, on the grid `|B_K e_3|_1`.
pub fn keane_iet(seq: &ParamSeq, depth: usize) -> Result<IetMap, KeaneError> {
    let lengths = length_vector(seq, depth)?;
    let denominator = l1_norm(&product_matrix(seq, depth)?.column(2));
    Ok(IetMap::with_denominator(
        lengths,
        Permutation4::keane(),
        denominator,
    )?)
}

fn check_bits(k: usize, value: &BigInt, budget: u64) -> Result<(), KeaneError> {
    let bits = value.bits();
    if bits > budget {
        return Err(KeaneError::BitBudget { k, bits, budget });
    }
    Ok(())
}

/// Build a named parameter family of the given depth.
pub fn generate(kind: SequenceKind, depth: usize, bit_budget: u64) -> Result<ParamSeq, KeaneError> {
    if depth == 0 {
        return Err(KeaneError::EmptySequence);
    }
    let three = BigInt::from(3);
    let mut pairs: Vec<(BigInt, BigInt)> = Vec::with_capacity(depth);
    match &kind {
        SequenceKind::Minimal | SequenceKind::Theorem3 { .. } => {
            let mut n = BigInt::from(10);
            for k in 1..=depth {
                let mut m = &three * (&n + 1u32);
                if matches!(kind, SequenceKind::Theorem3 { .. }) {
                    let grown = &n * BigInt::from(k * k);
                    if grown > m {
                        m = grown;
                    }
                }
                check_bits(k, &m, bit_budget)?;
                let next = &m * 2u32 - 1u32;
                pairs.push((m, std::mem::replace(&mut n, next)));
            }
        }
        SequenceKind::Theorem4 => {
            let nine = BigInt::from(9);
            for k in 1..=depth {
                let e = 4f64.powi(k as i32 - 1) + k as f64;
                let estimated = (e * 9f64.log2()).ceil();
                if estimated > bit_budget as f64 {
                    return Err(KeaneError::BitBudget {
                        k,
                        bits: estimated as u64,
                        budget: bit_budget,
                    });
                }
                let base = 1u32 << (2 * (k - 1));
                let n = nine.clone().pow(base);
                let m = nine.clone().pow(base + k as u32);
                pairs.push((m, n));
            }
        }
        SequenceKind::Corollary1 => {
            let mut n = BigInt::from(10);
            let mut b = Mat4::identity();
            for k in 1..=depth {
                let m = &three * (&n + 1u32);
                check_bits(k, &m, bit_budget)?;
                b = mat_mul(&b, &keane_matrix(&m, &n)?);
                let b2 = l1_norm(&b.column(1));
                let scaled = &b2 * BigInt::from(2).pow(k as u32);
                // bound the size before forming the power
                let bits = scaled.bits() * k as u64 + m.bits();
                if k < depth && bits > bit_budget {
                    return Err(KeaneError::BitBudget {
                        k: k + 1,
                        bits,
                        budget: bit_budget,
                    });
                }
                let fast = scaled.pow(k as u32) * &m;
                let slow = &m * 2u32 - 1u32;
                let next = if fast > slow { fast } else { slow };
                pairs.push((m, std::mem::replace(&mut n, next)));
            }
        }
        SequenceKind::Explicit => return Err(KeaneError::EmptySequence),
    }
    ParamSeq::new(pairs, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ratio;

    fn minimal(depth: usize) -> ParamSeq {
        generate(SequenceKind::Minimal, depth, DEFAULT_BIT_BUDGET).unwrap()
    }

    fn iv(v: [i64; 4]) -> Vec4<BigInt> {
        Vec4(v.map(BigInt::from))
    }

    #[test]
    fn keane_matrix_shape() {
        let a = keane_matrix(&1.into(), &1.into()).unwrap();
        assert_eq!(
            a,
            Mat4::from_rows(
                [[0, 0, 1, 1], [0, 1, 0, 0], [1, 1, 0, 1], [1, 1, 1, 1]]
                    .map(|r| r.map(BigInt::from))
            )
        );
        let a = keane_matrix(&33.into(), &10.into()).unwrap();
        assert_eq!(a.rows()[1], [32, 33, 0, 0].map(BigInt::from));
        assert_eq!(a.rows()[2], [10, 10, 9, 10].map(BigInt::from));
        assert_eq!(a.column(1), iv([0, 33, 10, 1]));
        assert!(keane_matrix(&0.into(), &5.into()).is_err());
        assert!(keane_matrix(&5.into(), &0.into()).is_err());
    }

    #[test]
    fn generators() {
        let s = minimal(3);
        assert_eq!(
            s,
            ParamSeq::new(
                ParamSeq::from_u64(&[(33, 10), (198, 65), (1188, 395)])
                    .unwrap()
                    .pairs,
                SequenceKind::Minimal
            )
            .unwrap()
        );
        let t4 = generate(SequenceKind::Theorem4, 2, DEFAULT_BIT_BUDGET).unwrap();
        assert_eq!(
            t4.pairs(),
            ParamSeq::from_u64(&[(81, 9), (531441, 6561)])
                .unwrap()
                .pairs()
        );
        let t3 = generate(
            SequenceKind::Theorem3 { r: ratio(2, 1) },
            6,
            DEFAULT_BIT_BUDGET,
        )
        .unwrap();
        for k in 1..=6 {
            assert!(t3.m(k) >= &(t3.n(k) * BigInt::from(k * k)));
        }
        assert!(validate_sequence(&t3).all_hold());
        assert!(matches!(
            generate(SequenceKind::Minimal, 0, 10),
            Err(KeaneError::EmptySequence)
        ));
        assert!(matches!(
            generate(SequenceKind::Theorem4, 12, DEFAULT_BIT_BUDGET),
            Err(KeaneError::BitBudget { k: 11, .. })
        ));
        assert!(matches!(
            generate(SequenceKind::Minimal, 40, 64),
            Err(KeaneError::BitBudget { .. })
        ));
    }

    #[test]
    fn corollary1_keeps_both_hypotheses() {
        let s = generate(SequenceKind::Corollary1, 5, DEFAULT_BIT_BUDGET).unwrap();
        assert!(validate_sequence(&s).all_hold());
        // n_2 = max(2·33 - 1, (44·2)^1·33)
        assert_eq!(s.n(2), &BigInt::from(88 * 33));
    }

    #[test]
    fn theorem1_validation() {
        let rep = validate_sequence(&minimal(3));
        assert!(rep.all_hold());
        assert!(rep.levels.iter().all(|l| l.lower_tight && l.upper_tight));
        let t4 = generate(SequenceKind::Theorem4, 3, DEFAULT_BIT_BUDGET).unwrap();
        let rep = validate_sequence(&t4);
        assert!(rep.ratios_hold);
        assert!(!rep.n1_holds);
        let bad = ParamSeq::from_u64(&[(10, 10), (100, 500)]).unwrap();
        let rep = validate_sequence(&bad);
        assert!(!rep.levels[0].lower_holds);
        assert!(rep.levels[0].upper_holds);
    }

    #[test]
    fn products_and_masses() {
        let s = minimal(3);
        assert_eq!(product_matrix(&s, 0).unwrap(), Mat4::identity());
        assert_eq!(
            product_matrix(&s, 1).unwrap(),
            keane_matrix(s.m(1), s.n(1)).unwrap()
        );
        assert_eq!(
            product_matrix(&s, 2).unwrap().column(1),
            iv([66, 6534, 2575, 264])
        );
        assert!(product_matrix(&s, 4).is_err());
        assert_eq!(column_masses(&s, 1).unwrap(), iv([43, 44, 11, 12]));
        assert_eq!(column_mass(&s, 2, 2).unwrap(), BigInt::from(9439));
        assert_eq!(column_masses(&s, 0).unwrap(), iv([1, 1, 1, 1]));
        assert!(column_mass(&s, 1, 5).is_err());
    }

    #[test]
    fn sandwich_bounds() {
        let s = minimal(3);
        let (lo, hi) = mass_bounds(&s, 2).unwrap();
        assert_eq!(
            (lo.clone(), hi.clone()),
            (BigInt::from(6534), BigInt::from(11616))
        );
        let b = column_mass(&s, 2, 2).unwrap();
        assert!(lo <= b && b <= hi);
        let (lo1, hi1) = mass_bounds(&s, 1).unwrap();
        assert_eq!((lo1, hi1.clone()), (BigInt::from(33), BigInt::from(44)));
        assert_eq!(hi1, column_mass(&s, 1, 2).unwrap());
        assert!(mass_bounds(&s, 0).is_err());
    }

    #[test]
    fn truncated_vectors() {
        let s = minimal(3);
        assert_eq!(
            length_vector(&s, 2).unwrap(),
            Vec4([
                ratio(65, 759),
                ratio(32, 759),
                ratio(596, 759),
                ratio(66, 759)
            ])
        );
        assert!(matches!(
            length_vector(&s, 1),
            Err(KeaneError::DepthTooSmall { .. })
        ));
        let w2 = level_weights(&s, 1, 3, 2).unwrap();
        assert_eq!(
            w2,
            Vec4([396, 235224, 102565, 1584].map(|x| ratio(x, 339769)))
        );
        let w3 = level_weights(&s, 1, 3, 3).unwrap();
        assert_eq!(w3[1], ratio(197, 26334));
        let last = level_weights(&s, 2, 3, 3).unwrap();
        let n = 395;
        assert_eq!(
            last,
            Vec4([
                ratio(1, n + 1),
                ratio(0, 1),
                ratio(n - 1, n + 1),
                ratio(1, n + 1)
            ])
        );
        assert_eq!(
            level_weights(&s, 0, 3, 3).unwrap(),
            length_vector(&s, 3).unwrap()
        );
        assert!(level_weights(&s, 3, 3, 2).is_err());
    }

    #[test]
    fn ambient_weights_sum_through_the_masses() {
        // λ(I_i) = Σ_j (B_k)_{ij} λ(I_j^(k)), so Σ_j b_{k,j} λ(I_j^(k)) = 1
        let s = minimal(5);
        for basis in [2, 3] {
            for k in 0..4 {
                let w = ambient_weights(&s, k, 5, basis).unwrap();
                let b = column_masses(&s, k).unwrap();
                let total: BigRational = (0..4)
                    .map(|j| &w[j] * BigRational::from_integer(b[j].clone()))
                    .sum();
                assert_eq!(total, ratio(1, 1));
            }
        }
    }

    #[test]
    fn record_round_trip() {
        let s = generate(
            SequenceKind::Theorem3 { r: ratio(5, 2) },
            3,
            DEFAULT_BIT_BUDGET,
        )
        .unwrap();
        let json = serde_json::to_string(&s.record()).unwrap();
        assert!(json.contains(r#""pairs":[["33","10"]"#));
        let back: ParamSeqRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(ParamSeq::from_record(&back).unwrap(), s);
    }

    #[test]
    fn rejects_non_positive_parameters() {
        assert!(matches!(
            ParamSeq::from_u64(&[(33, 10), (0, 65)]),
            Err(KeaneError::InvalidParameter {
                name: "m",
                k: 2,
                ..
            })
        ));
    }
}
