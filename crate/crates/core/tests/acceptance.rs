//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Every comparison is exact; the only tolerances are the wall-clock limits.
//! Criteria listed in `EXPECTED_FAIL` are known not to hold at finite depth;
//! they still print FAIL, and the run only errors if one of them starts
//! passing or any other criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use keane_core::analysis::{self, Claim, InductionTower};
use keane_core::dimension;
use keane_core::iet::InduceOptions;
use keane_core::keane::{self, ParamSeq, SequenceKind, DEFAULT_BIT_BUDGET};
use keane_core::numerics::{approx_decimal, rational_text, Mat4};

const EXPECTED_FAIL: &[usize] = &[9];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn seq(kind: SequenceKind, depth: usize) -> ParamSeq {
    keane::generate(kind, depth, DEFAULT_BIT_BUDGET).unwrap()
}

fn growth_family(depth: usize) -> ParamSeq {
    seq(SequenceKind::Theorem3 { r: q(2, 1) }, depth)
}

/// `A_{m,n}` written out from its definition.
fn a_matrix(m: i64, n: i64) -> Mat4<BigInt> {
    let rows = [
        [0, 0, 1, 1],
        [m - 1, m, 0, 0],
        [n, n, n - 1, n],
        [1, 1, 1, 1],
    ];
    Mat4::from_fn(|i, j| BigInt::from(rows[i][j]))
}

fn landing() -> Outcome {
    let s = seq(SequenceKind::Minimal, 4);
    let tower = InductionTower::build(&s, 4, 2, &InduceOptions::default()).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, m, n) in [(1, 33, 10), (2, 198, 65)] {
        let observed = tower.named_visit_matrix(k).unwrap();
        let eq = observed == a_matrix(m, n);
        ok &= eq;
        parts.push(format!(
            "k={k} A_{{{m},{n}}} {}",
            if eq { "equal" } else { "differs" }
        ));
    }
    outcome(ok, parts.join(", "))
}

fn validation() -> Outcome {
    let minimal = keane::validate_sequence(&seq(SequenceKind::Minimal, 6));
    let tight = minimal.all_hold()
        && minimal
            .levels
            .iter()
            .all(|l| l.lower_tight && l.upper_tight);
    let t4 = keane::validate_sequence(&seq(SequenceKind::Theorem4, 4));
    let t4_ratios = t4
        .levels
        .iter()
        .filter(|l| l.k <= 3)
        .all(|l| l.lower_holds && l.upper_holds);
    outcome(
        tight && t4_ratios && !t4.n1_holds,
        format!(
            "minimal all tight: {tight}; theorem4 ratios k<=3: {t4_ratios}; theorem4 n1>=10: {}",
            t4.n1_holds
        ),
    )
}

fn sandwich() -> Outcome {
    let mut ok = true;
    for (s, top) in [
        (seq(SequenceKind::Minimal, 4), 4),
        (seq(SequenceKind::Theorem4, 3), 3),
    ] {
        let mut lower = BigInt::one();
        let mut upper = BigInt::one();
        for k in 1..=top {
            lower *= s.m(k);
            upper *= s.m(k) + s.n(k) + 1u32;
            let b2 = keane::column_mass(&s, k, 2).unwrap();
            ok &= lower <= b2 && b2 <= upper;
        }
    }
    let spot = keane::column_mass(&seq(SequenceKind::Minimal, 2), 2, 2).unwrap();
    ok &= spot == BigInt::from(9439);
    outcome(ok, format!("b_{{2,2}} = {spot}"))
}

fn ratio_inequalities() -> Outcome {
    let minimal = seq(SequenceKind::Minimal, 6);
    let mut cases = Vec::new();
    for depth in 3..=6 {
        cases.extend((1..=depth - 2).map(|k| (k, depth)));
    }
    let reports = analysis::verify_suite(&minimal, &[Claim::L1, Claim::L2], &cases).unwrap();
    let l12 = reports.iter().all(|r| r.holds && r.applicable);
    let spot = analysis::verify_claim(Claim::L2, &minimal, 1, 3)
        .unwrap()
        .lhs;
    let spot_ok = spot == q(235224, 339769);
    let t3 = growth_family(6);
    let l5 = (1..=4).all(|k| {
        let r = analysis::verify_claim(Claim::L5, &t3, k, 6).unwrap();
        r.applicable && r.holds
    });
    outcome(
        l12 && spot_ok && l5,
        format!(
            "L1/L2 over {} cases: {l12}; L2 lhs (1,3) = {}; L5 k<=4: {l5}",
            reports.len(),
            rational_text(&spot)
        ),
    )
}

fn dominance_and_mass() -> Outcome {
    let mut total = 0;
    let mut failed = Vec::new();
    for s in [seq(SequenceKind::Minimal, 6), growth_family(6)] {
        for depth in 2..=6 {
            for k in 0..=depth - 2 {
                for claim in [Claim::Dom, Claim::Mass] {
                    let r = analysis::verify_claim(claim, &s, k, depth).unwrap();
                    total += 1;
                    if !r.holds {
                        failed.push(format!("{} {} k={k} K={depth}", s.kind(), r.claim));
                    }
                }
            }
        }
    }
    outcome(
        failed.is_empty(),
        format!("{total} checks, failures: {failed:?}"),
    )
}

fn orbit_geometry() -> Outcome {
    let s = seq(SequenceKind::Minimal, 4);
    let mut ok = true;
    let mut parts = Vec::new();
    for k in 1..=2 {
        let g = analysis::orbit_geometry(&s, 4, k, &InduceOptions::default()).unwrap();
        let b2 = keane::column_mass(&s, k, 2).unwrap();
        // the images are equal-length translates, so they fit in [0, 1)
        let fits = &g.image_length * BigRational::from_integer(b2.clone()) <= BigRational::one();
        let good = g.disjoint && g.gaps_separated && fits && BigInt::from(g.image_count) == b2;
        ok &= good;
        parts.push(format!(
            "k={k}: {} images, min gap {} vs {}",
            g.image_count,
            g.min_gap
                .as_ref()
                .map_or("-".into(), |m| approx_decimal(m, 6)),
            approx_decimal(&g.min_other_length, 6)
        ));
    }
    outcome(ok, parts.join("; "))
}

fn separation() -> Outcome {
    let s = seq(SequenceKind::Minimal, 4);
    let opts = InduceOptions::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for k in 0..=2 {
        let rep = dimension::separation_check(&s, 4, k, &opts).unwrap();
        ok &= rep.holds;
        let steps = keane::column_mass(&s, k, 2).unwrap() - 1u32;
        if k > 0 {
            let (fine, x, min_other) = dimension::midpoint_of_i2(&s, 4, k, &opts).unwrap();
            let series = dimension::recurrence_statistic(
                &fine,
                &x,
                steps.to_u64().unwrap(),
                &BigRational::zero(),
            )
            .unwrap();
            ok &= series.min_distance >= min_other;
        }
        parts.push(format!(
            "k={k}: {steps} steps {}",
            if rep.holds { "ok" } else { "violated" }
        ));
    }
    outcome(ok, parts.join("; "))
}

/// Threshold predicted by comparing base-2 logarithms of the two sides.
fn power_family_log_oracle(max_k: u32) -> Option<u32> {
    let l9 = 9f64.log2();
    let holds = |k: u32| {
        let k = k as f64;
        let e = (4f64.powf(k) - 1.0) / 3.0 + k * (k + 1.0) / 2.0;
        let lhs = 2.0 * (k + e * l9) + 2.0 * k + (4f64.powf(k - 1.0) + k) * l9;
        lhs < 4f64.powf(k) * l9
    };
    let mut t = None;
    for k in (1..=max_k).rev() {
        if holds(k) {
            t = Some(k);
        } else {
            break;
        }
    }
    t
}

fn upper_bound_chain() -> Outcome {
    let two = q(2, 1);
    let c1 = seq(SequenceKind::Corollary1, 5);
    let conditions: Vec<bool> = (1..5)
        .map(|k| {
            dimension::check_theorem2_condition(&c1, &two, k)
                .unwrap()
                .holds
        })
        .collect();
    let from_two = conditions[1..].iter().all(|&h| h);

    // the level-4 cover term needs one more factor than depth 5 provides
    let c1_long = seq(SequenceKind::Corollary1, 6);
    let prefix = c1_long.pairs()[..5] == *c1.pairs();
    let mut implied = prefix;
    let mut covered = Vec::new();
    for (k, depth) in [(2, 5), (3, 5), (4, 6)] {
        if !conditions[k - 1] {
            continue;
        }
        let s = if depth == 5 { &c1 } else { &c1_long };
        let t = dimension::cover_terms(s, depth, &q(1, 2), k).unwrap();
        let term = t.term(k).unwrap();
        implied &= term.below_geometric;
        covered.push(format!("t_{k}={}", term.term_decimal));
    }

    let (threshold, _) = dimension::power_family_threshold(8).unwrap();
    let oracle = power_family_log_oracle(8);
    outcome(
        from_two && implied && threshold == oracle,
        format!(
            "conditions k=1..4 {conditions:?}; {}; theorem4 inequality threshold k={} (log oracle {})",
            covered.join(" "),
            threshold.map_or("none".into(), |t| t.to_string()),
            oracle.map_or("none".into(), |t| t.to_string()),
        ),
    )
}

fn ergodicity() -> Outcome {
    let s = seq(SequenceKind::Minimal, 6);
    let (f2, f3) = analysis::ergodicity_gap(&s, 2).unwrap();
    let spot = f2 == q(6534, 9439) && f3 == q(32, 759);
    let mut freq2 = true;
    let mut freq3_fail = Vec::new();
    for depth in 2..=5 {
        let [a, b] = analysis::ergodicity_checks(&s, depth).unwrap();
        freq2 &= a.holds;
        if !b.holds {
            freq3_fail.push(format!("K={depth} {} > {}", b.lhs_approx, b.rhs_approx));
        }
    }
    outcome(
        spot && freq2 && freq3_fail.is_empty(),
        format!(
            "spot values: {spot}; freq2 >= 1/3: {freq2}; freq3 bound violated at [{}]",
            freq3_fail.join(", ")
        ),
    )
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_keane-lab");
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        r#"{"sequence":{"kind":"minimal","depth":6},"command":"generate"}"#,
        r#"{"sequence":{"kind":"theorem4","depth":3},"command":"validate"}"#,
        r#"{"sequence":{"kind":"minimal","depth":5},"K":5,"command":"lengths"}"#,
        r#"{"sequence":{"kind":"minimal","depth":4},"command":"induce","levels":[1,2]}"#,
        r#"{"sequence":{"kind":"minimal","depth":6},"K":6,"command":"verify"}"#,
        r#"{"sequence":{"kind":"minimal","depth":4},"command":"geometry","levels":[1,2]}"#,
        r#"{"sequence":{"kind":"minimal","depth":6},"K":5,"command":"ergodicity"}"#,
        r#"{"sequence":{"kind":"corollary1","depth":5},"command":"cover","exponent":"1/2","tolerance":"1/64"}"#,
        r#"{"sequence":{"kind":"corollary1","depth":6},"command":"conditions","r":"2","max_k":8}"#,
        r#"{"sequence":{"kind":"minimal","depth":4},"command":"recurrence","levels":[0,1,2],"x":"1/7","horizon":"20000","beta":"1/2"}"#,
    ];
    let path = dir.path().join("run.json");
    let mut differing = Vec::new();
    for config in configs {
        std::fs::write(&path, config).unwrap();
        let outputs: Vec<Vec<u8>> = ["1", "1", "4", "16"]
            .iter()
            .map(|t| {
                Command::new(bin)
                    .args(["--threads", t, "--config"])
                    .arg(&path)
                    .output()
                    .unwrap()
                    .stdout
            })
            .collect();
        if outputs[0].is_empty() || outputs.iter().any(|o| o != &outputs[0]) {
            differing.push(config);
        }
    }
    outcome(
        differing.is_empty(),
        format!(
            "{} commands x 4 runs, differing: {differing:?}",
            configs.len()
        ),
    )
}

fn main() {
    type Criterion = (usize, &'static str, Duration, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        (
            1,
            "landing-pattern exactness",
            Duration::from_secs(60),
            landing,
        ),
        (2, "sequence validation", Duration::from_secs(1), validation),
        (3, "orbit-length sandwich", Duration::from_secs(1), sandwich),
        (
            4,
            "ratio inequalities",
            Duration::from_secs(10),
            ratio_inequalities,
        ),
        (
            5,
            "column dominance and mass",
            Duration::from_secs(60),
            dominance_and_mass,
        ),
        (
            6,
            "orbit geometry",
            Duration::from_secs(300),
            orbit_geometry,
        ),
        (
            7,
            "separation statistic",
            Duration::from_secs(300),
            separation,
        ),
        (
            8,
            "upper-bound chain",
            Duration::from_secs(30),
            upper_bound_chain,
        ),
        (9, "ergodicity gap", Duration::from_secs(1), ergodicity),
        (10, "determinism", Duration::from_secs(300), determinism),
    ];
    let mut unexpected = Vec::new();
    for (id, name, limit, check) in criteria {
        let started = Instant::now();
        let out = check();
        let elapsed = started.elapsed();
        let in_time = elapsed <= limit;
        let pass = out.pass && in_time;
        println!(
            "{} [{id:>2}] {name}: {} ({:.3}s, limit {}s{})",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            limit.as_secs(),
            if in_time { "" } else { ", over time" },
        );
        if pass == EXPECTED_FAIL.contains(&id) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("criteria with unexpected outcome: {unexpected:?}");
        std::process::exit(1);
    }
}
