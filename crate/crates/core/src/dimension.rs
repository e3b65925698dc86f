//! Quantities behind the Hausdorff-dimension bounds for the singular
//! measure: cover sums over images of `I_2^(k)`, a bisection estimate of the
//! critical exponent, the growth hypotheses of the upper and lower bounds,
//! and finite-horizon recurrence statistics.
//!
//! Rational exponents `s = p/q` are never evaluated in floating point for a
//! decision. Both sides of a comparison are raised to the `q`-th power and
//! compared as exact rationals. Decimal renderings are for reports only.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::analysis::{AnalysisError, InductionTower, Relation, VerificationReport};
use crate::iet::{IetError, IetMap, InduceOptions, Point};
use crate::keane::{self, KeaneError, ParamSeq};
use crate::numerics::{
    approx_decimal, exact, exact_opt, log2_approx, log2_approx_rational, rational_pow,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DimensionError {
    #[error(transparent)]
    Keane(#[from] KeaneError),
    #[error(transparent)]
    Iet(#[from] IetError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("exponent {0} does not fit the exact power machinery")]
    ExponentTooLarge(String),
}

fn precondition(ok: bool, msg: impl FnOnce() -> String) -> Result<(), DimensionError> {
    if ok {
        Ok(())
    } else {
        Err(DimensionError::Precondition(msg()))
    }
}

fn q(x: &BigInt) -> BigRational {
    BigRational::from_integer(x.clone())
}

/// `(p, q)` of a non-negative rational as machine integers.
fn exponent_parts(s: &BigRational) -> Result<(u32, u32), DimensionError> {
    match (s.numer().to_u32(), s.denom().to_u32()) {
        (Some(p), Some(q)) => Ok((p, q)),
        _ => Err(DimensionError::ExponentTooLarge(
            crate::numerics::rational_text(s),
        )),
    }
}

fn decimal_from_log2(log2: f64) -> String {
    if log2.is_infinite() && log2 < 0.0 {
        return "0".into();
    }
    let log10 = log2 * std::f64::consts::LOG10_2;
    let mut e = log10.floor();
    let mut mantissa = 10f64.powf(log10 - e);
    if mantissa >= 9.999_999_999_995 {
        mantissa /= 10.0;
        e += 1.0;
    }
    format!("{mantissa:.11}e{e}")
}

/// One level of the cover sum: `t_k(s) = b_{k,2} · λ3(I_2^(k))^s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverTerm {
    pub k: usize,
    #[serde(with = "exact")]
    pub b_k2: BigInt,
    /// Depth-`K` ambient length of `I_2^(k)`.
    #[serde(with = "exact")]
    pub lambda3_i2k: BigRational,
    /// `t_k(s)^q = b_{k,2}^q · λ3(I_2^(k))^p` for `s = p/q`.
    #[serde(with = "exact")]
    pub term_power: BigRational,
    pub term_decimal: String,
    /// `t_k(s) ≤ 2^{-k}`, decided exactly.
    pub below_geometric: bool,
    #[serde(skip)]
    log2_term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverSumSeries {
    #[serde(with = "exact")]
    pub exponent: BigRational,
    pub start: usize,
    pub depth: usize,
    pub terms: Vec<CoverTerm>,
    /// Decimal partial sums `Σ_{j=L}^{k} t_j(s)`.
    pub partial_sums: Vec<String>,
    /// `t_{k+1} ≤ t_k / 2` for every consecutive pair.
    pub decays: bool,
}

fn cover_term(
    seq: &ParamSeq,
    depth: usize,
    k: usize,
    p: u32,
    qd: u32,
) -> Result<CoverTerm, DimensionError> {
    let b_k2 = keane::column_mass(seq, k, 2)?;
    let lambda3 = keane::ambient_weights(seq, k, depth, 3)?[1].clone();
    let term_power = q(&b_k2.pow(qd)) * rational_pow(&lambda3, p);
    // 2^{-kq}
    let geometric = BigRational::new(BigInt::one(), BigInt::from(2).pow(k as u32 * qd));
    let log2_term = if lambda3.is_zero() {
        f64::NEG_INFINITY
    } else {
        log2_approx(&b_k2) + (p as f64 / qd as f64) * log2_approx_rational(&lambda3)
    };
    Ok(CoverTerm {
        k,
        below_geometric: term_power <= geometric,
        term_decimal: decimal_from_log2(log2_term),
        b_k2,
        lambda3_i2k: lambda3,
        term_power,
        log2_term,
    })
}

/// `t_{k}(s) ≤ t_{k-1}(s) / 2` exactly, from the stored `q`-th powers.
fn halves(prev: &CoverTerm, next: &CoverTerm, qd: u32) -> bool {
    &next.term_power * q(&BigInt::from(2).pow(qd)) <= prev.term_power
}

/// Cover-sum terms `t_k(s)` for `L ≤ k ≤ K - 2`.
pub fn cover_terms(
    seq: &ParamSeq,
    depth: usize,
    s: &BigRational,
    start: usize,
) -> Result<CoverSumSeries, DimensionError> {
    precondition(s.is_positive() && s <= &BigRational::one(), || {
        format!(
            "exponent must lie in (0, 1], got {}",
            crate::numerics::rational_text(s)
        )
    })?;
    precondition(start >= 1 && start + 2 <= depth, || {
        format!("start level {start} must satisfy 1 <= L <= K - 2 with K = {depth}")
    })?;
    precondition(depth <= seq.len(), || {
        format!("depth {depth} exceeds sequence length {}", seq.len())
    })?;
    let (p, qd) = exponent_parts(s)?;
    let terms = (start..=depth - 2)
        .map(|k| cover_term(seq, depth, k, p, qd))
        .collect::<Result<Vec<_>, _>>()?;
    let decays = terms.windows(2).all(|w| halves(&w[0], &w[1], qd));
    let mut partial_sums = Vec::with_capacity(terms.len());
    let mut acc = f64::NEG_INFINITY;
    for t in &terms {
        // log-sum-exp in base 2
        let (hi, lo) = if acc >= t.log2_term {
            (acc, t.log2_term)
        } else {
            (t.log2_term, acc)
        };
        acc = if hi == f64::NEG_INFINITY {
            hi
        } else {
            hi + (1.0 + (lo - hi).exp2()).log2()
        };
        partial_sums.push(decimal_from_log2(acc));
    }
    Ok(CoverSumSeries {
        exponent: s.clone(),
        start,
        depth,
        terms,
        partial_sums,
        decays,
    })
}

/// Whether the cover terms halve from every level to the next over
/// `1 ≤ k-1 < k ≤ K-2`.
pub fn decays_at(seq: &ParamSeq, depth: usize, s: &BigRational) -> Result<bool, DimensionError> {
    Ok(cover_terms(seq, depth, s, 1)?.decays_from(2))
}

impl CoverSumSeries {
    /// Halving holds for every pair `(k-1, k)` with `k ≥ from`.
    pub fn decays_from(&self, from: usize) -> bool {
        let (_, qd) = exponent_parts(&self.exponent).expect("validated on construction");
        self.terms
            .windows(2)
            .filter(|w| w[1].k >= from)
            .all(|w| halves(&w[0], &w[1], qd))
    }

    pub fn term(&self, k: usize) -> Option<&CoverTerm> {
        self.terms.iter().find(|t| t.k == k)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum BracketFlag {
    /// Even `s = 1` fails the halving test.
    #[serde(rename = "no_decay")]
    NoDecay,
    /// Every tested exponent passed; the bracket touches 0.
    #[serde(rename = "all_decay")]
    AllDecay,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExponentBracket {
    /// Largest tested exponent whose terms do not halve.
    #[serde(with = "exact")]
    pub lo: BigRational,
    /// Smallest tested exponent whose terms halve.
    #[serde(with = "exact")]
    pub hi: BigRational,
    /// Number of exponents tested, including `s = 1`.
    pub evaluations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flag: Option<BracketFlag>,
}

/// Bisection for the smallest `s ∈ (0, 1]` whose cover terms halve at every
/// level in `[2, K-2]`. Larger exponents shrink the ratio `t_k/t_{k-1}`, so
/// the halving set is an interval `[s*, 1]`, and the returned bracket has
/// `lo < s* ≤ hi` with `hi - lo ≤ tolerance`.
pub fn critical_exponent(
    seq: &ParamSeq,
    depth: usize,
    tolerance: &BigRational,
) -> Result<ExponentBracket, DimensionError> {
    precondition(depth >= 4, || {
        format!("critical exponent needs K >= 4, got {depth}")
    })?;
    precondition(tolerance.is_positive(), || {
        "tolerance must be positive".into()
    })?;
    let one = BigRational::one();
    let mut evaluations = 1;
    if !decays_at(seq, depth, &one)? {
        return Ok(ExponentBracket {
            lo: one.clone(),
            hi: one,
            evaluations,
            flag: Some(BracketFlag::NoDecay),
        });
    }
    let mut lo = BigRational::zero();
    let mut hi = one;
    let half = BigRational::new(1.into(), 2.into());
    while &hi - &lo > *tolerance {
        let mid = (&lo + &hi) * &half;
        evaluations += 1;
        if decays_at(seq, depth, &mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let flag = lo.is_zero().then_some(BracketFlag::AllDecay);
    Ok(ExponentBracket {
        lo,
        hi,
        evaluations,
        flag,
    })
}

/// `n_{k+1} ≥ b_{k,2}^r · 2^{rk} · m_k`, compared after raising to the
/// power `q` for `r = p/q`.
pub fn check_theorem2_condition(
    seq: &ParamSeq,
    r: &BigRational,
    k: usize,
) -> Result<VerificationReport, DimensionError> {
    precondition(r.is_positive(), || "r must be positive".into())?;
    precondition(k >= 1 && k < seq.len(), || {
        format!("level {k} must satisfy 1 <= k < {}", seq.len())
    })?;
    let (p, qd) = exponent_parts(r)?;
    let b2 = keane::column_mass(seq, k, 2)?;
    let lhs = seq.n(k + 1).pow(qd);
    let rhs = b2.pow(p) * BigInt::from(2).pow(p * k as u32) * seq.m(k).pow(qd);
    let mut rep = VerificationReport::compare(
        "UPPER_GROWTH",
        seq,
        Some(k),
        None,
        q(&lhs),
        Relation::Ge,
        q(&rhs),
    );
    if qd != 1 {
        rep = rep.with_note(format!("both sides raised to the power {qd}"));
    }
    Ok(rep)
}

/// The two growth hypotheses of the lower bound at level `k`:
/// `b_{k+1,2} ≤ b_{k,2}^r` (as `q`-th powers) and `m_k ≥ k² n_k`.
pub fn check_theorem3_condition(
    seq: &ParamSeq,
    r: &BigRational,
    k: usize,
) -> Result<[VerificationReport; 2], DimensionError> {
    precondition(r.is_positive(), || "r must be positive".into())?;
    precondition(k >= 1 && k < seq.len(), || {
        format!("level {k} must satisfy 1 <= k < {}", seq.len())
    })?;
    let (p, qd) = exponent_parts(r)?;
    let b_here = keane::column_mass(seq, k, 2)?;
    let b_next = keane::column_mass(seq, k + 1, 2)?;
    let mut growth = VerificationReport::compare(
        "LOWER_MASS_GROWTH",
        seq,
        Some(k),
        None,
        q(&b_next.pow(qd)),
        Relation::Le,
        q(&b_here.pow(p)),
    );
    if qd != 1 {
        growth = growth.with_note(format!("both sides raised to the power {qd}"));
    }
    let ratio = VerificationReport::compare(
        "LOWER_RATIO",
        seq,
        Some(k),
        None,
        q(seq.m(k)),
        Relation::Ge,
        q(&(seq.n(k) * BigInt::from(k * k))),
    );
    Ok([growth, ratio])
}

/// One level of the upper-bound chain: the growth hypothesis and, where it
/// holds and the truncation allows, the cover bound `t_k(1/r) ≤ 2^{-k}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainLevel {
    pub k: usize,
    pub condition: VerificationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cover: Option<CoverTerm>,
}

/// Evaluate the upper-bound chain at every level `1 ≤ k < len`; cover terms
/// are attached for `k ≤ K - 2`.
pub fn upper_bound_chain(
    seq: &ParamSeq,
    r: &BigRational,
    depth: usize,
) -> Result<Vec<ChainLevel>, DimensionError> {
    let s = r.recip();
    let (p, qd) = exponent_parts(&s)?;
    precondition(s <= BigRational::one(), || "r must be at least 1".into())?;
    (1..seq.len())
        .map(|k| {
            let condition = check_theorem2_condition(seq, r, k)?;
            let cover = if k + 2 <= depth {
                Some(cover_term(seq, depth, k, p, qd)?)
            } else {
                None
            };
            Ok(ChainLevel {
                k,
                condition,
                cover,
            })
        })
        .collect()
}

/// `E_k = (4^k - 1)/3 + k(k+1)/2`, the exponent in the explicit bounds on
/// `b_{k,2}` for the `n_k = 9^{4^{k-1}}` family.
fn explicit_exponent(k: u32) -> BigInt {
    (BigInt::from(4).pow(k) - 1u32) / 3u32 + BigInt::from(k * (k + 1) / 2)
}

/// Exact evaluation of
/// `(2^k 9^{E_k})^2 · 2^{2k} · 9^{4^{k-1}+k} < 9^{4^k}`.
pub fn power_family_inequality(k: u32) -> Result<VerificationReport, DimensionError> {
    precondition(k >= 1, || "k starts at 1".into())?;
    let nine = BigInt::from(9);
    let e = explicit_exponent(k)
        .to_u32()
        .ok_or_else(|| DimensionError::ExponentTooLarge(format!("k = {k}")))?;
    let upper_b = BigInt::from(2).pow(k) * nine.clone().pow(e);
    let m_k = nine.clone().pow(4u32.pow(k - 1) + k);
    let lhs = upper_b.pow(2u32) * BigInt::from(2).pow(2 * k) * m_k;
    let rhs = nine.pow(4u32.pow(k));
    let seq = keane::generate(keane::SequenceKind::Theorem4, 1, keane::DEFAULT_BIT_BUDGET)?;
    Ok(VerificationReport::compare(
        "POWER_FAMILY_INEQUALITY",
        &seq,
        Some(k as usize),
        None,
        q(&lhs),
        Relation::Lt,
        q(&rhs),
    ))
}

/// Smallest `k ≤ max_k` from which the inequality holds through `max_k`.
pub fn power_family_threshold(
    max_k: u32,
) -> Result<(Option<u32>, Vec<VerificationReport>), DimensionError> {
    let reports = (1..=max_k)
        .map(power_family_inequality)
        .collect::<Result<Vec<_>, _>>()?;
    let mut threshold = None;
    for (i, r) in reports.iter().enumerate().rev() {
        if r.holds {
            threshold = Some(i as u32 + 1);
        } else {
            break;
        }
    }
    Ok((threshold, reports))
}

/// A record-minimum sample: `d = |T^n x - x|` at a new running minimum of
/// `n^β d`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecurrenceSample {
    pub n: u64,
    #[serde(with = "exact")]
    pub distance: BigRational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecurrenceSeries {
    #[serde(with = "exact")]
    pub x: BigRational,
    pub horizon: u64,
    #[serde(with = "exact")]
    pub beta: BigRational,
    pub samples: Vec<RecurrenceSample>,
    pub argmin: u64,
    #[serde(with = "exact")]
    pub min_distance: BigRational,
    /// `(min_n n^β |T^n x - x|)^q` for `β = p/q`.
    #[serde(with = "exact")]
    pub statistic_power: BigRational,
    /// The statistic itself when `β` is an integer.
    #[serde(with = "exact_opt")]
    pub statistic: Option<BigRational>,
    pub statistic_decimal: String,
    /// Times `n` at which `T^n x` sits exactly on a discontinuity.
    pub breakpoint_hits: Vec<u64>,
}

/// `min_{1 ≤ n ≤ N} n^β |T^n x - x|` with its running minima.
pub fn recurrence_statistic(
    t: &IetMap,
    x: &Point,
    horizon: u64,
    beta: &BigRational,
) -> Result<RecurrenceSeries, DimensionError> {
    precondition(horizon >= 1, || "horizon must be at least 1".into())?;
    precondition(!beta.is_negative(), || "beta must be non-negative".into())?;
    let (p, qd) = exponent_parts(beta)?;
    let d = t.denominator().clone();
    t.interval_of(x)?;

    let exchange = t.exchange();
    let mut y = x.units().clone();
    let mut best: Option<(u64, BigInt, BigInt)> = None; // (n, distance, n^p d^q)
    let mut samples = Vec::new();
    let mut breakpoint_hits = Vec::new();
    for n in 1..=horizon {
        let idx = exchange.locate(&y).expect("orbit stays in [0, 1)");
        y += &exchange.pieces()[idx].shift;
        if t.is_breakpoint(&Point::from_units(y.clone())) {
            breakpoint_hits.push(n);
        }
        let dist = (&y - x.units()).abs();
        let key = if p == 0 {
            dist.pow(qd)
        } else {
            BigInt::from(n).pow(p) * dist.pow(qd)
        };
        if best.as_ref().is_none_or(|(_, _, k)| &key < k) {
            samples.push(RecurrenceSample {
                n,
                distance: BigRational::new(dist.clone(), d.clone()),
            });
            best = Some((n, dist, key));
        }
    }
    let (argmin, dist, key) = best.expect("horizon >= 1");
    let statistic_power = BigRational::new(key, d.clone().pow(qd));
    let statistic = (qd == 1).then(|| statistic_power.clone());
    let statistic_decimal = if dist.is_zero() {
        "0".into()
    } else {
        let log2 =
            (p as f64 / qd as f64) * (argmin as f64).log2() + log2_approx(&dist) - log2_approx(&d);
        match &statistic {
            Some(s) => approx_decimal(s, 12),
            None => decimal_from_log2(log2),
        }
    };
    Ok(RecurrenceSeries {
        x: t.value(x),
        horizon,
        beta: beta.clone(),
        samples,
        argmin,
        min_distance: BigRational::new(dist, d),
        statistic_power,
        statistic,
        statistic_decimal,
        breakpoint_hits,
    })
}

/// The depth-`K` map on a doubled grid together with the midpoint of
/// `I_2^(k)`, the base point used for separation and recurrence runs.
pub fn midpoint_of_i2(
    seq: &ParamSeq,
    depth: usize,
    k: usize,
    options: &InduceOptions,
) -> Result<(IetMap, Point, BigRational), DimensionError> {
    let tower = InductionTower::build(seq, depth, k, options)?;
    let fine = tower.map().refined(2);
    let i2 = tower.subinterval(k, 2);
    let x = Point::from_units(&i2.lo + &i2.hi);
    let lengths = tower.lengths(k);
    let min_other = [&lengths[0], &lengths[2], &lengths[3]]
        .into_iter()
        .min()
        .unwrap()
        .clone();
    let min_other = BigRational::new(min_other, tower.map().denominator().clone());
    Ok((fine, x, min_other))
}

/// For `x` the midpoint of `I_2^(k)`: `|T^s x - x| ≥ min_{i≠2} λ3(I_i^(k))`
/// for every `1 ≤ s < b_{k,2}`.
pub fn separation_check(
    seq: &ParamSeq,
    depth: usize,
    k: usize,
    options: &InduceOptions,
) -> Result<VerificationReport, DimensionError> {
    precondition(k + 2 <= depth, || {
        format!("level {k} needs depth at least {}", k + 2)
    })?;
    let b2 = keane::column_mass(seq, k, 2)?;
    let steps = b2
        .to_u64()
        .filter(|&v| v <= options.step_budget)
        .ok_or_else(|| AnalysisError::BudgetExceeded {
            needed: b2.to_string(),
            budget: options.step_budget,
        })?;
    let (fine, x, min_other) = midpoint_of_i2(seq, depth, k, options)?;
    if steps <= 1 {
        return Ok(VerificationReport::compare(
            "SEPARATION",
            seq,
            Some(k),
            Some(depth),
            min_other.clone(),
            Relation::Ge,
            min_other,
        )
        .with_note("vacuous: no s with 1 <= s < b_{k,2}"));
    }
    let series = recurrence_statistic(&fine, &x, steps - 1, &BigRational::zero())?;
    let mut rep = VerificationReport::compare(
        "SEPARATION",
        seq,
        Some(k),
        Some(depth),
        series.min_distance,
        Relation::Ge,
        min_other,
    );
    if !series.breakpoint_hits.is_empty() {
        rep = rep.with_note(format!(
            "orbit met a discontinuity at {} times",
            series.breakpoint_hits.len()
        ));
    }
    Ok(rep)
}
