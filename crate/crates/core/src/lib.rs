//! Exact-arithmetic laboratory for Keane's family of non-uniquely ergodic
//! 4-interval exchange transformations.
//!
//! The crate builds the maps from `(m_k, n_k)` parameter sequences, runs
//! exact first-return induction, checks the structural inequalities of the
//! construction at finite truncation depth, and computes the cover sums and
//! recurrence statistics that sit behind Hausdorff-dimension bounds for the
//! singular invariant measure.

pub mod analysis;
pub mod cli;
pub mod dimension;
pub mod iet;
pub mod keane;
pub mod numerics;
