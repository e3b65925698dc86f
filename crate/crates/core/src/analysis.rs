//! Finite-level verification of the structural facts behind Keane's
//! construction: landing patterns, measure-ratio inequalities, the geometry
//! of the orbit of `I_2^(k)`, and the two separating Birkhoff frequencies.
//!
//! Every statement is checked on a depth-`K` truncation and reported with
//! its exact left- and right-hand sides.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iet::{Exchange, IetError, IetMap, InduceOptions, InducedMap, Piece};
use crate::keane::{self, KeaneError, ParamSeq};
use crate::numerics::{approx_decimal, exact, exact_opt, exact_vec, l1_norm, Mat4, Vec4};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Keane(#[from] KeaneError),
    #[error(transparent)]
    Iet(#[from] IetError),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("image of I_2^({level}) split across a discontinuity at step {step}")]
    SegmentSplit { level: usize, step: u64 },
    #[error("orbit needs {needed} steps, over the budget of {budget}")]
    BudgetExceeded { needed: String, budget: u64 },
    #[error("level {level} induced map has {found} subintervals instead of 4")]
    NotFourIntervals { level: usize, found: usize },
    #[error("unknown claim {0:?}")]
    UnknownClaim(String),
}

/// Spatial (left-to-right, zero-based) position of the subinterval named
/// `name` (one-based) at induction level `level`.
///
/// Each induction step renames the induced subintervals in reverse spatial
/// order, which amounts to reflecting the base. Two reflections cancel, so
/// names run right-to-left at odd levels and left-to-right at even levels.
pub fn spatial_index(level: usize, name: usize) -> usize {
    assert!((1..=4).contains(&name));
    if level.is_multiple_of(2) {
        name - 1
    } else {
        4 - name
    }
}

/// The depth-`K` map together with its induced maps on `I^(1), .., I^(top)`.
#[derive(Debug, Clone)]
pub struct InductionTower {
    depth: usize,
    map: IetMap,
    levels: Vec<Exchange>,
    induced: Vec<InducedMap>,
}

impl InductionTower {
    /// Induce `top` times, each time on the subinterval named 4.
    /// Requires `top + 2 ≤ K` so that every level has four non-empty pieces.
    pub fn build(
        seq: &ParamSeq,
        depth: usize,
        top: usize,
        options: &InduceOptions,
    ) -> Result<Self, AnalysisError> {
        if top + 2 > depth {
            return Err(AnalysisError::Precondition(format!(
                "level {top} needs truncation depth at least {}, got {depth}",
                top + 2
            )));
        }
        let map = keane::keane_iet(seq, depth)?;
        let mut levels = vec![map.exchange().clone()];
        let mut induced = Vec::with_capacity(top);
        for k in 1..=top {
            let parent = &levels[k - 1];
            let base = &parent.pieces()[spatial_index(k - 1, 4)];
            let ind = parent.induce(&base.lo, &base.hi, options)?;
            if ind.len() != 4 {
                return Err(AnalysisError::NotFourIntervals {
                    level: k,
                    found: ind.len(),
                });
            }
            levels.push(ind.exchange());
            induced.push(ind);
        }
        Ok(InductionTower {
            depth,
            map,
            levels,
            induced,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn top(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn map(&self) -> &IetMap {
        &self.map
    }

    pub fn level(&self, k: usize) -> &Exchange {
        &self.levels[k]
    }

    /// The induced map producing level `k ≥ 1`.
    pub fn induced(&self, k: usize) -> Option<&InducedMap> {
        k.checked_sub(1).and_then(|i| self.induced.get(i))
    }

    /// `I_name^(k)` in grid units.
    pub fn subinterval(&self, k: usize, name: usize) -> &Piece {
        &self.levels[k].pieces()[spatial_index(k, name)]
    }

    /// Lengths of `I_1^(k)..I_4^(k)` in grid units, by name.
    pub fn lengths(&self, k: usize) -> Vec4<BigInt> {
        Vec4(std::array::from_fn(|j| {
            let p = self.subinterval(k, j + 1);
            &p.hi - &p.lo
        }))
    }

    /// Visit matrix at level `k ≥ 1` with rows and columns indexed by name:
    /// entry `(i, j)` counts visits of `I_j^(k)` to `I_i^(k-1)` before
    /// returning to `I^(k)`.
    pub fn named_visit_matrix(&self, k: usize) -> Option<Mat4<BigInt>> {
        let ind = self.induced(k)?;
        let p = ind.pieces();
        Some(Mat4::from_fn(|i, j| {
            BigInt::from(p[spatial_index(k, j + 1)].visits[spatial_index(k - 1, i + 1)])
        }))
    }
}

/// Result of comparing an induced visit matrix with `A_{m_k,n_k}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LandingReport {
    pub level: usize,
    pub depth: usize,
    pub expected: Mat4<BigInt>,
    pub observed: Mat4<BigInt>,
    pub holds: bool,
    /// `(row, column, expected, observed)`, one-based.
    pub mismatches: Vec<(usize, usize, String, String)>,
    pub steps: u64,
}

/// Induce `k` times on the depth-`K` map and compare the level-`k` visit
/// matrix, after renaming, with `A_{m_k,n_k}`.
pub fn verify_landing_pattern(
    seq: &ParamSeq,
    depth: usize,
    k: usize,
    options: &InduceOptions,
) -> Result<LandingReport, AnalysisError> {
    if k == 0 {
        return Err(AnalysisError::Precondition(
            "landing patterns start at level 1".into(),
        ));
    }
    let tower = InductionTower::build(seq, depth, k, options)?;
    landing_report(seq, &tower, k)
}

/// Landing report for level `k` of an existing tower.
pub fn landing_report(
    seq: &ParamSeq,
    tower: &InductionTower,
    k: usize,
) -> Result<LandingReport, AnalysisError> {
    let expected = keane::keane_matrix(seq.m(k), seq.n(k))?;
    let observed = tower
        .named_visit_matrix(k)
        .ok_or_else(|| AnalysisError::Precondition(format!("tower has no level {k}")))?;
    let mut mismatches = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            if expected.get(i, j) != observed.get(i, j) {
                mismatches.push((
                    i + 1,
                    j + 1,
                    expected.get(i, j).to_string(),
                    observed.get(i, j).to_string(),
                ));
            }
        }
    }
    Ok(LandingReport {
        level: k,
        depth: tower.depth(),
        holds: mismatches.is_empty(),
        expected,
        observed,
        mismatches,
        steps: tower.induced(k).map_or(0, |m| m.steps()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Claim {
    /// `λ3(I_2^(k))/λ3(I^(k)) ≤ 2m_k/((n_{k+1}+1)(n_k+1))`
    L1,
    /// `λ2(I_2^(k))/λ2(I^(k)) ≥ 1/3`
    L2,
    /// `λ2(I_2^(k))/λ2(I^(k)) > k²/(k²+4)` when `m_i ≥ i² n_i`
    L5,
    /// `λ3(I_1^(k)) ≥ λ3(I_3^(k+1))`
    L7,
    /// `λ3(I^(k)) ≥ 1/b_{k,2}`
    #[serde(rename = "L7_FLOOR")]
    L7Floor,
    /// `b_{k,2} ≥ max_{i≠2} b_{k,i}`
    #[serde(rename = "DOM")]
    Dom,
    /// `b_{k,2}·λ2(I_2^(k)) ≥ 1/3`
    #[serde(rename = "MASS")]
    Mass,
}

impl Claim {
    pub const ALL: [Claim; 7] = [
        Claim::L1,
        Claim::L2,
        Claim::L5,
        Claim::L7,
        Claim::L7Floor,
        Claim::Dom,
        Claim::Mass,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Claim::L1 => "L1",
            Claim::L2 => "L2",
            Claim::L5 => "L5",
            Claim::L7 => "L7",
            Claim::L7Floor => "L7_FLOOR",
            Claim::Dom => "DOM",
            Claim::Mass => "MASS",
        }
    }

    /// Whether the claim reads truncated measures (and so needs `k + 2 ≤ K`).
    pub fn uses_measures(&self) -> bool {
        !matches!(self, Claim::Dom)
    }
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Claim {
    type Err = AnalysisError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Claim::ALL
            .into_iter()
            .find(|c| c.id().eq_ignore_ascii_case(s))
            .ok_or_else(|| AnalysisError::UnknownClaim(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl Relation {
    pub fn eval<T: Ord>(&self, lhs: &T, rhs: &T) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Lt => lhs < rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Gt => lhs > rhs,
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }
}

/// One exact inequality check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub claim: String,
    pub sequence: String,
    pub level: Option<usize>,
    pub depth: Option<usize>,
    #[serde(with = "exact")]
    pub lhs: BigRational,
    pub relation: Relation,
    #[serde(with = "exact")]
    pub rhs: BigRational,
    pub holds: bool,
    pub applicable: bool,
    /// `rhs - lhs`
    #[serde(with = "exact")]
    pub margin: BigRational,
    /// 12-significant-digit approximations of the two sides.
    pub lhs_approx: String,
    pub rhs_approx: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl VerificationReport {
    pub fn compare(
        claim: impl Into<String>,
        seq: &ParamSeq,
        level: Option<usize>,
        depth: Option<usize>,
        lhs: BigRational,
        relation: Relation,
        rhs: BigRational,
    ) -> Self {
        VerificationReport {
            claim: claim.into(),
            sequence: seq.kind().to_string(),
            level,
            depth,
            holds: relation.eval(&lhs, &rhs),
            applicable: true,
            margin: &rhs - &lhs,
            lhs_approx: approx_decimal(&lhs, 12),
            rhs_approx: approx_decimal(&rhs, 12),
            lhs,
            relation,
            rhs,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Counts as a pass: either not applicable or the inequality holds.
    pub fn passed(&self) -> bool {
        !self.applicable || self.holds
    }
}

fn q(x: &BigInt) -> BigRational {
    BigRational::from_integer(x.clone())
}

fn precondition(ok: bool, msg: impl FnOnce() -> String) -> Result<(), AnalysisError> {
    if ok {
        Ok(())
    } else {
        Err(AnalysisError::Precondition(msg()))
    }
}

/// Evaluate one claim at level `k` of the depth-`K` truncation.
pub fn verify_claim(
    claim: Claim,
    seq: &ParamSeq,
    k: usize,
    depth: usize,
) -> Result<VerificationReport, AnalysisError> {
    precondition(depth <= seq.len(), || {
        format!("depth {depth} exceeds sequence length {}", seq.len())
    })?;
    if claim.uses_measures() {
        precondition(k + 2 <= depth, || {
            format!("{claim} at level {k} needs depth at least {}", k + 2)
        })?;
    } else {
        precondition(k <= depth, || format!("level {k} exceeds depth {depth}"))?;
    }
    let report = |lhs, rel, rhs| {
        VerificationReport::compare(claim.id(), seq, Some(k), Some(depth), lhs, rel, rhs)
    };
    Ok(match claim {
        Claim::L1 => {
            precondition(k >= 1, || "L1 starts at level 1".into())?;
            let lhs = keane::level_weights(seq, k, depth, 3)?[1].clone();
            let rhs = BigRational::new(seq.m(k) * 2u32, (seq.n(k + 1) + 1u32) * (seq.n(k) + 1u32));
            report(lhs, Relation::Le, rhs)
        }
        Claim::L2 => {
            let lhs = keane::level_weights(seq, k, depth, 2)?[1].clone();
            report(lhs, Relation::Ge, BigRational::new(1.into(), 3.into()))
        }
        Claim::L5 => {
            precondition(k >= 1, || "L5 starts at level 1".into())?;
            let kk = BigInt::from(k * k);
            let rhs = BigRational::new(kk.clone(), kk + 4u32);
            let lhs = keane::level_weights(seq, k, depth, 2)?[1].clone();
            let growth_ok = (1..=depth).all(|i| seq.m(i) >= &(seq.n(i) * BigInt::from(i * i)));
            let mut r = report(lhs, Relation::Gt, rhs);
            if !growth_ok {
                r.applicable = false;
                r = r.with_note("sequence violates m_i >= i^2 n_i; claim not applicable");
            }
            r
        }
        Claim::L7 => {
            let here = keane::ambient_weights(seq, k, depth, 3)?;
            let next = keane::ambient_weights(seq, k + 1, depth, 3)?;
            report(here[0].clone(), Relation::Ge, next[2].clone()).with_note(
                "lambda3(I_1^(k)) >= lambda3(I^(k+1)) * lambda3(I_3^(k+1))/lambda3(I^(k+1)), simplified",
            )
        }
        Claim::L7Floor => {
            let here = keane::ambient_weights(seq, k, depth, 3)?;
            let lhs: BigRational = here.iter().sum();
            let b2 = keane::column_mass(seq, k, 2)?;
            report(lhs, Relation::Ge, BigRational::new(One::one(), b2))
        }
        Claim::Dom => {
            let b = keane::column_masses(seq, k)?;
            let others = [&b[0], &b[2], &b[3]].into_iter().max().unwrap().clone();
            report(q(&b[1]), Relation::Ge, q(&others))
        }
        Claim::Mass => {
            let b2 = keane::column_mass(seq, k, 2)?;
            let w = keane::ambient_weights(seq, k, depth, 2)?;
            report(
                &w[1] * q(&b2),
                Relation::Ge,
                BigRational::new(1.into(), 3.into()),
            )
        }
    })
}

/// Run every `(claim, k, K)` combination in parallel; results come back
/// ordered by claim, then level, then depth.
pub fn verify_suite(
    seq: &ParamSeq,
    claims: &[Claim],
    cases: &[(usize, usize)],
) -> Result<Vec<VerificationReport>, AnalysisError> {
    let mut jobs: Vec<(Claim, usize, usize)> = claims
        .iter()
        .flat_map(|&c| cases.iter().map(move |&(k, d)| (c, k, d)))
        .collect();
    jobs.sort();
    jobs.dedup();
    jobs.into_par_iter()
        .map(|(c, k, d)| verify_claim(c, seq, k, d))
        .collect()
}

/// Positions of the images of `I_2^(k)` over one return cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrbitGeometry {
    pub level: usize,
    pub depth: usize,
    pub image_count: u64,
    #[serde(with = "exact")]
    pub image_length: BigRational,
    /// Sorted left endpoints of `T^s(I_2^(k))`, `0 ≤ s < b_{k,2}`.
    #[serde(with = "exact_vec")]
    pub positions: Vec<BigRational>,
    /// Gaps between consecutive images.
    #[serde(with = "exact_vec")]
    pub gaps: Vec<BigRational>,
    #[serde(with = "exact_opt")]
    pub min_gap: Option<BigRational>,
    /// `min_{i≠2} λ3(I_i^(k))`
    #[serde(with = "exact")]
    pub min_other_length: BigRational,
    pub disjoint: bool,
    /// Every gap is at least `min_other_length`.
    pub gaps_separated: bool,
}

fn orbit_length(seq: &ParamSeq, k: usize, budget: u64) -> Result<u64, AnalysisError> {
    let b2 = keane::column_mass(seq, k, 2)?;
    match b2.to_u64() {
        Some(v) if v <= budget => Ok(v),
        _ => Err(AnalysisError::BudgetExceeded {
            needed: b2.to_string(),
            budget,
        }),
    }
}

/// Push `I_2^(k)` forward for `b_{k,2}` steps of the ambient map, checking
/// that it never meets a discontinuity, and record where it goes.
pub fn orbit_geometry(
    seq: &ParamSeq,
    depth: usize,
    k: usize,
    options: &InduceOptions,
) -> Result<OrbitGeometry, AnalysisError> {
    let steps = orbit_length(seq, k, options.step_budget)?;
    let tower = InductionTower::build(seq, depth, k, options)?;
    let ambient = tower.level(0);
    let d = tower.map().denominator().clone();
    let seg = tower.subinterval(k, 2).clone();
    let len = &seg.hi - &seg.lo;

    let mut lo = seg.lo.clone();
    let mut units = Vec::with_capacity(steps as usize);
    for s in 0..steps {
        let idx = ambient.locate(&lo).expect("orbit stays inside [0, 1)");
        let piece = &ambient.pieces()[idx];
        if &lo + &len > piece.hi {
            return Err(AnalysisError::SegmentSplit { level: k, step: s });
        }
        units.push(lo.clone());
        lo += &piece.shift;
    }
    let (base_lo, base_hi) = tower.level(k).domain();
    if !(base_lo <= &lo && &(&lo + &len) <= base_hi) {
        return Err(AnalysisError::Precondition(format!(
            "I_2^({k}) did not return to I^({k}) after b_{{{k},2}} = {steps} steps"
        )));
    }

    units.sort();
    let gap_units: Vec<BigInt> = units.windows(2).map(|w| &w[1] - &w[0] - &len).collect();
    let lengths = tower.lengths(k);
    let min_other = [&lengths[0], &lengths[2], &lengths[3]]
        .into_iter()
        .min()
        .unwrap()
        .clone();
    let to_q = |x: &BigInt| BigRational::new(x.clone(), d.clone());
    let min_gap = gap_units.iter().min().cloned();
    Ok(OrbitGeometry {
        level: k,
        depth,
        image_count: steps,
        image_length: to_q(&len),
        disjoint: gap_units.iter().all(|g| !g.is_negative()),
        gaps_separated: gap_units.iter().all(|g| g >= &min_other),
        positions: units.iter().map(to_q).collect(),
        gaps: gap_units.iter().map(to_q).collect(),
        min_gap: min_gap.as_ref().map(to_q),
        min_other_length: to_q(&min_other),
    })
}

/// `((B_K e_2)_2 / b_{K,2}, (B_K e_3)_2 / b_{K,3})`: the fraction of time the
/// return cycles of `I_2^(K)` and `I_3^(K)` spend in `I_2`.
pub fn ergodicity_gap(
    seq: &ParamSeq,
    depth: usize,
) -> Result<(BigRational, BigRational), AnalysisError> {
    precondition(depth >= 1, || {
        "ergodicity gap needs depth at least 1".into()
    })?;
    let b = keane::product_matrix(seq, depth)?;
    let c2 = b.column(1);
    let c3 = b.column(2);
    Ok((
        BigRational::new(c2[1].clone(), l1_norm(&c2)),
        BigRational::new(c3[1].clone(), l1_norm(&c3)),
    ))
}

/// The two frequency checks at depth `K`: `(B_K e_2)_2 / b_{K,2} ≥ 1/3`, and
/// `(B_K e_3)_2 / b_{K,3} ≤ 2m_K / ((n_{K+1}+1)(n_K+1))`. The second needs
/// `n_{K+1}`, so the sequence must be longer than `K`.
pub fn ergodicity_checks(
    seq: &ParamSeq,
    depth: usize,
) -> Result<[VerificationReport; 2], AnalysisError> {
    precondition(depth < seq.len(), || {
        format!(
            "ergodicity checks at K = {depth} need n_{{K+1}}, sequence has length {}",
            seq.len()
        )
    })?;
    let (freq2, freq3) = ergodicity_gap(seq, depth)?;
    let bound = BigRational::new(
        seq.m(depth) * 2u32,
        (seq.n(depth + 1) + 1u32) * (seq.n(depth) + 1u32),
    );
    Ok([
        VerificationReport::compare(
            "ERG_FREQ2",
            seq,
            None,
            Some(depth),
            freq2,
            Relation::Ge,
            BigRational::new(1.into(), 3.into()),
        ),
        VerificationReport::compare(
            "ERG_FREQ3",
            seq,
            None,
            Some(depth),
            freq3,
            Relation::Le,
            bound,
        ),
    ])
}

/// Finite-level proxy for `λ2(O(I_2^(k)))`: `b_{k,2}` times the depth-`K`
/// λ2 weight of `I_2^(k)`, for every `k ≤ K - 2`.
pub fn orbit_mass_trend(seq: &ParamSeq, depth: usize) -> Result<Vec<BigRational>, AnalysisError> {
    (0..=depth.saturating_sub(2))
        .map(|k| verify_claim(Claim::Mass, seq, k, depth).map(|r| r.lhs))
        .collect()
}
