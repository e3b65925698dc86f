//! Four-interval exchange transformations with exact evaluation and
//! first-return induction.
//!
//! A map with rational lengths is stored on the integer grid `{0, .., D-1}`
//! where `D` is the common denominator of its lengths: a [`Point`] is the
//! numerator `x·D`, and applying the map is one integer addition. Induced
//! maps live on the same grid, so iterated induction never grows
//! denominators.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::numerics::{self, exact, exact_vec, rational_text, Mat4, NumericsError, Vec4};

/// Default cap on total segment steps for one induction.
pub const DEFAULT_STEP_BUDGET: u64 = 50_000_000;
/// Default cap on the number of subintervals an induced map may have.
pub const DEFAULT_MAX_SUBINTERVALS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IetError {
    #[error("lengths sum to {0}, expected exactly 1")]
    NonUnitSum(String),
    #[error("length of interval {index} is {value}, lengths must be strictly positive")]
    NonPositiveLength { index: usize, value: String },
    #[error("{0:?} is not a permutation of 1..=4")]
    InvalidPermutation([u8; 4]),
    #[error("point {0} lies outside [0, 1)")]
    PointOutOfRange(String),
    #[error("point {value} is not on the grid with denominator {denominator}")]
    NotOnGrid { value: String, denominator: String },
    #[error("induction base [{a}, {b}) is empty or not inside [0, 1]")]
    InvalidBase { a: String, b: String },
    #[error(
        "step budget {budget} exhausted after {steps} steps \
         ({returned} returned segments, {pending} pending)"
    )]
    BudgetExhausted {
        budget: u64,
        steps: u64,
        returned: usize,
        pending: usize,
    },
    #[error("induced map has {found} subintervals, more than the allowed {max}")]
    TooManySubintervals { found: usize, max: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// A permutation of `{1, 2, 3, 4}` in one-line notation: position `i` holds
/// `π(i)`, the rank of the image of `I_i` among the image intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Permutation4 {
    images: [u8; 4],
}

impl Permutation4 {
    pub fn new(images: [u8; 4]) -> Result<Self, IetError> {
        let mut seen = [false; 4];
        for &v in &images {
            if !(1..=4).contains(&v) || seen[v as usize - 1] {
                return Err(IetError::InvalidPermutation(images));
            }
            seen[v as usize - 1] = true;
        }
        Ok(Permutation4 { images })
    }

    pub fn identity() -> Self {
        Permutation4 {
            images: [1, 2, 3, 4],
        }
    }

    /// The exchange used by Keane's family: after one application the
    /// images of `I_4, I_2, I_1, I_3` appear left to right, i.e. the
    /// combinatorics written `(4213)` as an image order.
    pub fn keane() -> Self {
        Permutation4 {
            images: [3, 2, 4, 1],
        }
    }

    /// `π(i)` for one-based `i`.
    pub fn image(&self, i: usize) -> usize {
        self.images[i - 1] as usize
    }

    pub fn images(&self) -> [u8; 4] {
        self.images
    }

    pub fn inverse(&self) -> Self {
        let mut inv = [0u8; 4];
        for (i, &v) in self.images.iter().enumerate() {
            inv[v as usize - 1] = i as u8 + 1;
        }
        Permutation4 { images: inv }
    }
}

impl fmt::Display for Permutation4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.images;
        write!(f, "({a}{b}{c}{d})")
    }
}

/// A point of `[0, 1)` stored as its numerator over the owning map's
/// common denominator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point(BigInt);

impl Point {
    /// Raw grid coordinate; the caller is responsible for the denominator.
    pub fn from_units(units: BigInt) -> Self {
        Point(units)
    }

    pub fn units(&self) -> &BigInt {
        &self.0
    }
}

/// One continuity piece of a piecewise translation: `[lo, hi)` moves by `shift`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub lo: BigInt,
    pub hi: BigInt,
    pub shift: BigInt,
}

/// A bijective piecewise translation of a grid interval, given by contiguous
/// pieces in left-to-right order. Both an [`IetMap`] and an [`InducedMap`]
/// expose one, which is what makes induction iterable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exchange {
    pieces: Vec<Piece>,
}

impl Exchange {
    pub fn new(pieces: Vec<Piece>) -> Self {
        debug_assert!(pieces.windows(2).all(|w| w[0].hi == w[1].lo));
        debug_assert!(pieces.iter().all(|p| p.lo < p.hi));
        Exchange { pieces }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn domain(&self) -> (&BigInt, &BigInt) {
        (&self.pieces[0].lo, &self.pieces[self.pieces.len() - 1].hi)
    }

    /// Index of the piece containing `x`, if any.
    pub fn locate(&self, x: &BigInt) -> Option<usize> {
        let idx = self.pieces.partition_point(|p| &p.lo <= x);
        if idx == 0 {
            return None;
        }
        let p = &self.pieces[idx - 1];
        (x < &p.hi).then_some(idx - 1)
    }

    /// Exact first-return map to `[a, b)` by segment propagation.
    ///
    /// The base is pushed forward as a segment. Whenever a segment straddles
    /// a piece boundary it is split there, and whenever it straddles `a` or
    /// `b` after at least one step it is split there too. Segments lying
    /// inside `[a, b)` after a positive number of steps have returned.
    /// Returned segments with equal return time, translation and visit
    /// counts that abut in the base are merged.
    pub fn induce(
        &self,
        a: &BigInt,
        b: &BigInt,
        options: &InduceOptions,
    ) -> Result<InducedMap, IetError> {
        let (lo_all, hi_all) = self.domain();
        if !(a < b && lo_all <= a && b <= hi_all) {
            return Err(IetError::InvalidBase {
                a: a.to_string(),
                b: b.to_string(),
            });
        }

        struct Segment {
            origin: BigInt,
            lo: BigInt,
            hi: BigInt,
            time: u64,
            visits: Vec<u64>,
        }

        let mut stack = vec![Segment {
            origin: a.clone(),
            lo: a.clone(),
            hi: b.clone(),
            time: 0,
            visits: vec![0; self.pieces.len()],
        }];
        let mut returned: Vec<InducedPiece> = Vec::new();
        let mut steps: u64 = 0;

        while let Some(mut seg) = stack.pop() {
            loop {
                if seg.time > 0 {
                    if a <= &seg.lo && &seg.hi <= b {
                        returned.push(InducedPiece {
                            lo: seg.origin.clone(),
                            hi: &seg.origin + (&seg.hi - &seg.lo),
                            return_time: seg.time,
                            shift: &seg.lo - &seg.origin,
                            visits: seg.visits,
                        });
                        break;
                    }
                    let cut = [a, b].into_iter().find(|c| &seg.lo < *c && *c < &seg.hi);
                    if let Some(c) = cut {
                        stack.push(Segment {
                            origin: &seg.origin + (c - &seg.lo),
                            lo: c.clone(),
                            hi: std::mem::replace(&mut seg.hi, c.clone()),
                            time: seg.time,
                            visits: seg.visits.clone(),
                        });
                        continue;
                    }
                }
                let idx = self
                    .locate(&seg.lo)
                    .expect("segment left the domain of a bijective exchange");
                let piece = &self.pieces[idx];
                if seg.hi > piece.hi {
                    stack.push(Segment {
                        origin: &seg.origin + (&piece.hi - &seg.lo),
                        lo: piece.hi.clone(),
                        hi: std::mem::replace(&mut seg.hi, piece.hi.clone()),
                        time: seg.time,
                        visits: seg.visits.clone(),
                    });
                }
                if steps >= options.step_budget {
                    return Err(IetError::BudgetExhausted {
                        budget: options.step_budget,
                        steps,
                        returned: returned.len(),
                        pending: stack.len() + 1,
                    });
                }
                steps += 1;
                seg.visits[idx] += 1;
                seg.lo += &piece.shift;
                seg.hi += &piece.shift;
                seg.time += 1;
            }
        }

        returned.sort_by(|x, y| x.lo.cmp(&y.lo));
        let mut merged: Vec<InducedPiece> = Vec::with_capacity(returned.len());
        for p in returned {
            match merged.last_mut() {
                Some(last)
                    if last.hi == p.lo
                        && last.shift == p.shift
                        && last.return_time == p.return_time
                        && last.visits == p.visits =>
                {
                    last.hi = p.hi;
                }
                _ => merged.push(p),
            }
        }
        if merged.len() > options.max_subintervals {
            return Err(IetError::TooManySubintervals {
                found: merged.len(),
                max: options.max_subintervals,
            });
        }

        let mut order: Vec<usize> = (0..merged.len()).collect();
        order.sort_by(|&i, &j| {
            (&merged[i].lo + &merged[i].shift).cmp(&(&merged[j].lo + &merged[j].shift))
        });
        let mut permutation = vec![0; merged.len()];
        for (rank, &i) in order.iter().enumerate() {
            permutation[i] = rank + 1;
        }

        Ok(InducedMap {
            base_lo: a.clone(),
            base_hi: b.clone(),
            pieces: merged,
            permutation,
            steps,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InduceOptions {
    pub step_budget: u64,
    pub max_subintervals: usize,
}

impl Default for InduceOptions {
    fn default() -> Self {
        InduceOptions {
            step_budget: DEFAULT_STEP_BUDGET,
            max_subintervals: DEFAULT_MAX_SUBINTERVALS,
        }
    }
}

impl InduceOptions {
    pub fn with_budget(step_budget: u64) -> Self {
        InduceOptions {
            step_budget,
            ..Default::default()
        }
    }
}

/// A subinterval of an induced map together with its excursion data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InducedPiece {
    pub lo: BigInt,
    pub hi: BigInt,
    pub return_time: u64,
    /// `T^r(x) - x` on this piece, in grid units.
    pub shift: BigInt,
    /// Visits to each piece of the parent exchange at times `0..r`.
    pub visits: Vec<u64>,
}

/// First-return map of an exchange to a base interval, subintervals in
/// spatial (left-to-right) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InducedMap {
    base_lo: BigInt,
    base_hi: BigInt,
    pieces: Vec<InducedPiece>,
    permutation: Vec<usize>,
    steps: u64,
}

impl InducedMap {
    pub fn base(&self) -> (&BigInt, &BigInt) {
        (&self.base_lo, &self.base_hi)
    }

    pub fn pieces(&self) -> &[InducedPiece] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn return_times(&self) -> Vec<u64> {
        self.pieces.iter().map(|p| p.return_time).collect()
    }

    /// Rank of each piece's image inside the base, one-based, same
    /// convention as [`Permutation4`].
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// Total segment steps spent computing this map.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Visit counts as a matrix: entry `(i, j)` counts visits of induced
    /// piece `j` to parent piece `i`, both in spatial order. Only defined
    /// when parent and induced map both have four pieces.
    pub fn visit_matrix(&self) -> Option<Mat4<u64>> {
        if self.pieces.len() != 4 || self.pieces.iter().any(|p| p.visits.len() != 4) {
            return None;
        }
        Some(Mat4::from_fn(|i, j| self.pieces[j].visits[i]))
    }

    /// The induced map as an exchange on its base, ready to be induced again.
    pub fn exchange(&self) -> Exchange {
        Exchange::new(
            self.pieces
                .iter()
                .map(|p| Piece {
                    lo: p.lo.clone(),
                    hi: p.hi.clone(),
                    shift: p.shift.clone(),
                })
                .collect(),
        )
    }

    /// Serializable view with exact endpoints over `denominator`.
    pub fn record(&self, denominator: &BigInt) -> InducedMapRecord {
        let q = |x: &BigInt| BigRational::new(x.clone(), denominator.clone());
        let mut endpoints: Vec<BigRational> = self.pieces.iter().map(|p| q(&p.lo)).collect();
        endpoints.push(q(&self.base_hi));
        InducedMapRecord {
            base: vec![q(&self.base_lo), q(&self.base_hi)],
            endpoints,
            lengths: self.pieces.iter().map(|p| q(&(&p.hi - &p.lo))).collect(),
            return_times: self.return_times(),
            visit_matrix: (0..self.pieces.first().map_or(0, |p| p.visits.len()))
                .map(|i| self.pieces.iter().map(|p| p.visits[i]).collect())
                .collect(),
            permutation: self.permutation.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InducedMapRecord {
    #[serde(with = "exact_vec")]
    pub base: Vec<BigRational>,
    #[serde(with = "exact_vec")]
    pub endpoints: Vec<BigRational>,
    #[serde(with = "exact_vec")]
    pub lengths: Vec<BigRational>,
    pub return_times: Vec<u64>,
    pub visit_matrix: Vec<Vec<u64>>,
    pub permutation: Vec<usize>,
}

/// One step of an orbit: the interval index (one-based) and the point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItineraryStep {
    pub index: usize,
    pub point: Point,
    /// The point sits exactly on an interior discontinuity.
    pub at_breakpoint: bool,
}

/// A 4-interval exchange of `[0, 1)` with exact rational lengths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IetMap {
    lengths: Vec4<BigRational>,
    permutation: Permutation4,
    denominator: BigInt,
    exchange: Exchange,
    image_left: [BigInt; 4],
}

impl IetMap {
    pub fn new(lengths: Vec4<BigRational>, permutation: Permutation4) -> Result<Self, IetError> {
        let denominator = lengths
            .iter()
            .fold(BigInt::one(), |acc, l| acc.lcm(l.denom()));
        Self::with_denominator(lengths, permutation, denominator)
    }

    /// Build on a finer grid: `denominator` must be a multiple of every
    /// length's denominator.
    pub fn with_denominator(
        lengths: Vec4<BigRational>,
        permutation: Permutation4,
        denominator: BigInt,
    ) -> Result<Self, IetError> {
        for (index, l) in lengths.iter().enumerate() {
            if !l.is_positive() {
                return Err(IetError::NonPositiveLength {
                    index: index + 1,
                    value: rational_text(l),
                });
            }
        }
        let total: BigRational = lengths.iter().sum();
        if !total.is_one() {
            return Err(IetError::NonUnitSum(rational_text(&total)));
        }
        let mut units: [BigInt; 4] = Default::default();
        for (i, l) in lengths.iter().enumerate() {
            let scaled = l * BigRational::from_integer(denominator.clone());
            if !scaled.is_integer() {
                return Err(IetError::NotOnGrid {
                    value: rational_text(l),
                    denominator: denominator.to_string(),
                });
            }
            units[i] = scaled.to_integer();
        }
        let mut left: [BigInt; 4] = Default::default();
        for i in 1..4 {
            left[i] = &left[i - 1] + &units[i - 1];
        }
        let image_left: [BigInt; 4] = std::array::from_fn(|j| {
            (0..4)
                .filter(|&k| permutation.image(k + 1) < permutation.image(j + 1))
                .fold(BigInt::zero(), |acc, k| acc + &units[k])
        });
        let pieces = (0..4)
            .map(|j| Piece {
                lo: left[j].clone(),
                hi: &left[j] + &units[j],
                shift: &image_left[j] - &left[j],
            })
            .collect();
        Ok(IetMap {
            lengths,
            permutation,
            denominator,
            exchange: Exchange::new(pieces),
            image_left,
        })
    }

    /// The same map on a grid `factor` times finer.
    pub fn refined(&self, factor: u32) -> Self {
        Self::with_denominator(
            self.lengths.clone(),
            self.permutation,
            &self.denominator * factor,
        )
        .expect("refining a valid map keeps it valid")
    }

    pub fn lengths(&self) -> &Vec4<BigRational> {
        &self.lengths
    }

    pub fn permutation(&self) -> Permutation4 {
        self.permutation
    }

    pub fn denominator(&self) -> &BigInt {
        &self.denominator
    }

    pub fn exchange(&self) -> &Exchange {
        &self.exchange
    }

    /// Left endpoints of `I_1..I_4` as exact rationals.
    pub fn left_endpoints(&self) -> Vec4<BigRational> {
        Vec4(std::array::from_fn(|j| {
            self.value_of(&self.exchange.pieces[j].lo)
        }))
    }

    /// Left endpoints of `T(I_1)..T(I_4)`.
    pub fn image_left_endpoints(&self) -> Vec4<BigRational> {
        Vec4(std::array::from_fn(|j| self.value_of(&self.image_left[j])))
    }

    fn value_of(&self, units: &BigInt) -> BigRational {
        BigRational::new(units.clone(), self.denominator.clone())
    }

    pub fn value(&self, x: &Point) -> BigRational {
        self.value_of(&x.0)
    }

    /// The grid point for an exact rational in `[0, 1)`.
    pub fn point(&self, x: &BigRational) -> Result<Point, IetError> {
        if x.is_negative() || x >= &BigRational::one() {
            return Err(IetError::PointOutOfRange(rational_text(x)));
        }
        let scaled = x * BigRational::from_integer(self.denominator.clone());
        if !scaled.is_integer() {
            return Err(IetError::NotOnGrid {
                value: rational_text(x),
                denominator: self.denominator.to_string(),
            });
        }
        Ok(Point(scaled.to_integer()))
    }

    fn check_range(&self, x: &Point) -> Result<(), IetError> {
        if x.0.is_negative() || x.0 >= self.denominator {
            return Err(IetError::PointOutOfRange(rational_text(&self.value(x))));
        }
        Ok(())
    }

    /// One-based index `j` with `x ∈ I_j`.
    pub fn interval_of(&self, x: &Point) -> Result<usize, IetError> {
        self.check_range(x)?;
        Ok(self.exchange.locate(&x.0).expect("range checked") + 1)
    }

    /// `T(x) = x - Σ_{k<j} l_k + Σ_{π(k)<π(j)} l_k` for `x ∈ I_j`.
    pub fn apply(&self, x: &Point) -> Result<Point, IetError> {
        let j = self.interval_of(x)?;
        Ok(Point(&x.0 + &self.exchange.pieces[j - 1].shift))
    }

    pub fn apply_inverse(&self, y: &Point) -> Result<Point, IetError> {
        self.check_range(y)?;
        let j = (0..4)
            .find(|&j| {
                let p = &self.exchange.pieces[j];
                self.image_left[j] <= y.0 && y.0 < &self.image_left[j] + (&p.hi - &p.lo)
            })
            .expect("image intervals tile [0, 1)");
        Ok(Point(&y.0 - &self.exchange.pieces[j].shift))
    }

    /// `x` sits on the left endpoint of `I_2`, `I_3` or `I_4`.
    pub fn is_breakpoint(&self, x: &Point) -> bool {
        self.exchange.pieces[1..].iter().any(|p| p.lo == x.0)
    }

    /// `(j_s, x_s)` for `s = 0..n`, with `x_0 = x` and `x_{s+1} = T(x_s)`.
    pub fn itinerary(&self, x: &Point, n: usize) -> Result<Vec<ItineraryStep>, IetError> {
        let mut out = Vec::with_capacity(n);
        let mut cur = x.clone();
        for s in 0..n {
            let index = self.interval_of(&cur)?;
            let at_breakpoint = self.is_breakpoint(&cur);
            let next = if s + 1 < n {
                Some(Point(&cur.0 + &self.exchange.pieces[index - 1].shift))
            } else {
                None
            };
            out.push(ItineraryStep {
                index,
                point: cur,
                at_breakpoint,
            });
            match next {
                Some(p) => cur = p,
                None => break,
            }
        }
        Ok(out)
    }

    /// First-return map to `[a, b)`; `b` may equal 1 (the grid point `D`).
    pub fn induce(
        &self,
        a: &Point,
        b: &Point,
        options: &InduceOptions,
    ) -> Result<InducedMap, IetError> {
        self.exchange.induce(&a.0, &b.0, options)
    }

    /// Serializable description of the map.
    pub fn record(&self) -> IetRecord {
        IetRecord {
            lengths: self.lengths.clone(),
            permutation: self.permutation.images(),
            denominator: self.denominator.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IetRecord {
    pub lengths: Vec4<BigRational>,
    pub permutation: [u8; 4],
    #[serde(with = "exact")]
    pub denominator: BigInt,
}

/// Parse four lengths given as `"p/q"` strings.
pub fn parse_lengths(text: [&str; 4]) -> Result<Vec4<BigRational>, IetError> {
    let mut out: [BigRational; 4] = Default::default();
    for (i, t) in text.iter().enumerate() {
        out[i] = numerics::parse_rational(t)?;
    }
    Ok(Vec4(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ratio;
    use std::collections::HashSet;

    fn example_map() -> IetMap {
        let lengths = Vec4([ratio(1, 10), ratio(1, 5), ratio(3, 10), ratio(2, 5)]);
        IetMap::new(lengths, Permutation4::new([4, 2, 1, 3]).unwrap())
            .unwrap()
            .refined(2)
    }

    fn pt(t: &IetMap, p: i64, q: i64) -> Point {
        t.point(&ratio(p, q)).unwrap()
    }

    #[test]
    fn permutation_validation() {
        assert!(Permutation4::new([1, 2, 3, 3]).is_err());
        assert!(Permutation4::new([0, 1, 2, 3]).is_err());
        let p = Permutation4::new([4, 2, 1, 3]).unwrap();
        assert_eq!(p.inverse(), Permutation4::keane());
        assert_eq!(p.inverse().inverse(), p);
        assert_eq!(p.to_string(), "(4213)");
    }

    #[test]
    fn build_rejects_degenerate_lengths() {
        let p = Permutation4::identity();
        let zero = Vec4([ratio(1, 2), ratio(1, 2), ratio(0, 1), ratio(0, 1)]);
        assert!(matches!(
            IetMap::new(zero, p),
            Err(IetError::NonPositiveLength { index: 3, .. })
        ));
        let big = Vec4([ratio(1, 3), ratio(1, 3), ratio(1, 3), ratio(1, 3)]);
        assert_eq!(IetMap::new(big, p), Err(IetError::NonUnitSum("4/3".into())));
    }

    #[test]
    fn apply_follows_the_formula() {
        let t = example_map();
        assert_eq!(t.denominator(), &BigInt::from(20));
        assert_eq!(t.value(&t.apply(&pt(&t, 1, 20)).unwrap()), ratio(19, 20));
        assert_eq!(t.apply(&pt(&t, 3, 10)).unwrap(), pt(&t, 0, 1));
        assert_eq!(t.apply_inverse(&pt(&t, 19, 20)).unwrap(), pt(&t, 1, 20));
    }

    #[test]
    fn off_grid_and_out_of_range_points() {
        let t = example_map();
        assert!(matches!(
            t.point(&ratio(1, 1)),
            Err(IetError::PointOutOfRange(_))
        ));
        assert!(matches!(
            t.point(&ratio(-1, 10)),
            Err(IetError::PointOutOfRange(_))
        ));
        assert!(matches!(
            t.point(&ratio(1, 7)),
            Err(IetError::NotOnGrid { .. })
        ));
        assert!(t.apply(&Point::from_units(BigInt::from(20))).is_err());
        assert!(matches!(
            t.point(&ratio(1, 30)),
            Err(IetError::NotOnGrid { .. })
        ));
        assert!(t
            .apply_inverse(&Point::from_units(BigInt::from(-1)))
            .is_err());
        let fine = t.refined(7);
        assert_eq!(fine.value(&fine.point(&ratio(1, 7)).unwrap()), ratio(1, 7));
    }

    #[test]
    fn identity_permutation_is_identity() {
        let lengths = Vec4([ratio(1, 10), ratio(1, 5), ratio(3, 10), ratio(2, 5)]);
        let t = IetMap::new(lengths, Permutation4::identity()).unwrap();
        for k in 0..10 {
            let x = pt(&t, k, 10);
            assert_eq!(t.apply(&x).unwrap(), x);
            assert_eq!(t.apply_inverse(&x).unwrap(), x);
        }
    }

    #[test]
    fn apply_is_a_bijection_on_the_grid() {
        let t = example_map().refined(3);
        let d: i64 = 60;
        let images: HashSet<Point> = (0..d)
            .map(|k| t.apply(&Point::from_units(k.into())).unwrap())
            .collect();
        assert_eq!(images.len(), d as usize);
        assert!(images.iter().all(|p| t.check_range(p).is_ok()));
    }

    #[test]
    fn images_preserve_lengths() {
        let t = example_map();
        let left = t.left_endpoints();
        let img = t.image_left_endpoints();
        // T(I_j) = [img_j, img_j + l_j) and the images tile [0, 1)
        let mut spans: Vec<(BigRational, BigRational)> = (0..4)
            .map(|j| (img[j].clone(), &img[j] + &t.lengths()[j]))
            .collect();
        spans.sort();
        assert_eq!(spans[0].0, ratio(0, 1));
        assert!(spans.windows(2).all(|w| w[0].1 == w[1].0));
        assert_eq!(spans[3].1, ratio(1, 1));
        assert_eq!(left[3], ratio(3, 5));
    }

    #[test]
    fn itinerary_edges() {
        let t = example_map();
        let x = pt(&t, 1, 20);
        assert!(t.itinerary(&x, 0).unwrap().is_empty());
        let one = t.itinerary(&x, 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!((one[0].index, &one[0].point), (1, &x));
        let three = t.itinerary(&pt(&t, 1, 10), 3).unwrap();
        assert!(three[0].at_breakpoint);
        assert_eq!(three[1].point, t.apply(&three[0].point).unwrap());
    }

    #[test]
    fn inducing_on_everything_returns_the_map() {
        let t = example_map();
        let d = Point::from_units(t.denominator().clone());
        let ind = t
            .induce(&pt(&t, 0, 1), &d, &InduceOptions::default())
            .unwrap();
        assert_eq!(ind.len(), 4);
        assert_eq!(ind.return_times(), vec![1, 1, 1, 1]);
        assert_eq!(ind.visit_matrix().unwrap(), Mat4::identity());
        assert_eq!(ind.permutation(), &[4, 2, 1, 3]);
    }

    #[test]
    fn induce_rejects_bad_base_and_budget() {
        let t = example_map();
        let a = pt(&t, 1, 2);
        assert!(matches!(
            t.induce(&a, &a, &InduceOptions::default()),
            Err(IetError::InvalidBase { .. })
        ));
        let b = pt(&t, 6, 10);
        assert!(matches!(
            t.induce(&a, &b, &InduceOptions::with_budget(1)),
            Err(IetError::BudgetExhausted { budget: 1, .. })
        ));
        let tight = InduceOptions {
            max_subintervals: 1,
            ..Default::default()
        };
        let whole = Point::from_units(t.denominator().clone());
        assert!(matches!(
            t.induce(&pt(&t, 3, 5), &whole, &tight),
            Err(IetError::TooManySubintervals { max: 1, .. })
        ));
    }

    #[test]
    fn induced_record_serializes_exactly() {
        let t = example_map();
        let ind = t
            .induce(
                &pt(&t, 3, 5),
                &Point::from_units(BigInt::from(20)),
                &InduceOptions::default(),
            )
            .unwrap();
        let json = serde_json::to_value(ind.record(t.denominator())).unwrap();
        assert_eq!(json["base"], serde_json::json!(["3/5", "1/1"]));
        let lengths: Vec<BigRational> = json["lengths"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| numerics::parse_rational(v.as_str().unwrap()).unwrap())
            .collect();
        assert_eq!(lengths.iter().sum::<BigRational>(), ratio(2, 5));
        assert_eq!(json["visit_matrix"].as_array().unwrap().len(), 4);
    }
}
