//! Configuration parsing, command dispatch and report emission for the
//! `keane-lab` executable.
//!
//! A run is described by one JSON document. Integers may be given as JSON
//! numbers or decimal strings, rationals as `"p/q"` strings. Every problem
//! with a document is collected before it is rejected.

use std::fmt;
use std::io::Write;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::analysis::{self, Claim, VerificationReport};
use crate::dimension::{self, CoverSumSeries};
use crate::iet::{IetMap, InduceOptions, DEFAULT_MAX_SUBINTERVALS, DEFAULT_STEP_BUDGET};
use crate::keane::{self, ParamSeq, SequenceKind, DEFAULT_BIT_BUDGET};
use crate::numerics::{approx_decimal, parse_integer, parse_rational, rational_text};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CliError {
    #[error("invalid config: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("{0}")]
    Run(String),
    #[error("csv output is not available for `{0}`")]
    NoCsv(Command),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        1
    }
}

fn run_err(e: impl fmt::Display) -> CliError {
    CliError::Run(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Generate,
    Validate,
    Lengths,
    Induce,
    Verify,
    Geometry,
    Ergodicity,
    Cover,
    Conditions,
    Recurrence,
}

impl Command {
    const ALL: [Command; 10] = [
        Command::Generate,
        Command::Validate,
        Command::Lengths,
        Command::Induce,
        Command::Verify,
        Command::Geometry,
        Command::Ergodicity,
        Command::Cover,
        Command::Conditions,
        Command::Recurrence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Validate => "validate",
            Command::Lengths => "lengths",
            Command::Induce => "induce",
            Command::Verify => "verify",
            Command::Geometry => "geometry",
            Command::Ergodicity => "ergodicity",
            Command::Cover => "cover",
            Command::Conditions => "conditions",
            Command::Recurrence => "recurrence",
        }
    }

    /// Keys accepted beyond the common ones.
    fn keys(self) -> &'static [&'static str] {
        match self {
            Command::Generate | Command::Validate | Command::Lengths => &[],
            Command::Induce => &["level", "levels"],
            Command::Verify => &["claims", "levels"],
            Command::Geometry => &["levels"],
            Command::Ergodicity => &["depths"],
            Command::Cover => &["exponent", "start", "tolerance"],
            Command::Conditions => &["r", "levels", "max_k"],
            Command::Recurrence => &["x", "horizon", "beta", "levels"],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const COMMON_KEYS: [&str; 6] = [
    "sequence",
    "K",
    "command",
    "step_budget",
    "bit_budget",
    "max_subintervals",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SequenceSpec {
    Generated { kind: SequenceKind, depth: usize },
    Explicit(Vec<(BigInt, BigInt)>),
}

impl SequenceSpec {
    pub fn len(&self) -> usize {
        match self {
            SequenceSpec::Generated { depth, .. } => *depth,
            SequenceSpec::Explicit(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn build(&self, bit_budget: u64) -> Result<ParamSeq, CliError> {
        match self {
            SequenceSpec::Generated { kind, depth } => {
                keane::generate(kind.clone(), *depth, bit_budget).map_err(run_err)
            }
            SequenceSpec::Explicit(pairs) => {
                ParamSeq::new(pairs.clone(), SequenceKind::Explicit).map_err(run_err)
            }
        }
    }
}

/// A validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub sequence: SequenceSpec,
    /// Truncation depth `K`.
    pub depth: usize,
    pub levels: Vec<usize>,
    pub claims: Vec<Claim>,
    pub exponent: BigRational,
    pub start: usize,
    pub tolerance: Option<BigRational>,
    pub r: BigRational,
    pub max_k: Option<u32>,
    pub x: Option<BigRational>,
    pub horizon: Option<u64>,
    pub beta: BigRational,
    pub depths: Vec<usize>,
    pub step_budget: u64,
    pub bit_budget: u64,
    pub max_subintervals: usize,
    /// The document as given, echoed into reports.
    pub echo: Value,
}

impl RunConfig {
    pub fn induce_options(&self) -> InduceOptions {
        InduceOptions {
            step_budget: self.step_budget,
            max_subintervals: self.max_subintervals,
        }
    }
}

/// Typed access to a JSON object that records every problem it meets.
struct Fields<'a> {
    obj: &'a Map<String, Value>,
    prefix: &'static str,
    errors: &'a mut Vec<String>,
}

impl Fields<'_> {
    fn bad(&mut self, key: &str, what: &str) {
        self.errors.push(format!("{}{key}: {what}", self.prefix));
    }

    fn text(&mut self, key: &str) -> Option<String> {
        match self.obj.get(key)? {
            Value::String(s) => Some(s.clone()),
            Value::Number(n) => Some(n.to_string()),
            _ => {
                self.bad(key, "expected a string or a number");
                None
            }
        }
    }

    fn int_of(&mut self, key: &str, v: &Value) -> Option<BigInt> {
        let parsed = match v {
            Value::String(s) => parse_integer(s).ok(),
            Value::Number(n) => n
                .as_u64()
                .map(BigInt::from)
                .or_else(|| n.as_i64().map(BigInt::from)),
            _ => None,
        };
        if parsed.is_none() {
            self.bad(key, "expected an integer (number or decimal string)");
        }
        parsed
    }

    fn big(&mut self, key: &str) -> Option<BigInt> {
        let v = self.obj.get(key)?;
        self.int_of(key, v)
    }

    fn count(&mut self, key: &str) -> Option<u64> {
        let v = self.big(key)?;
        let out = v.to_u64();
        if out.is_none() {
            self.bad(key, "must be a non-negative integer that fits in 64 bits");
        }
        out
    }

    fn index(&mut self, key: &str) -> Option<usize> {
        self.count(key).map(|v| v as usize)
    }

    fn rational(&mut self, key: &str) -> Option<BigRational> {
        let t = self.text(key)?;
        let out = parse_rational(&t).ok();
        if out.is_none() {
            self.bad(key, "expected a rational such as \"3/2\"");
        }
        out
    }

    fn list(&mut self, key: &str) -> Option<&'_ Vec<Value>> {
        match self.obj.get(key)? {
            Value::Array(a) => Some(a),
            _ => {
                self.bad(key, "expected an array");
                None
            }
        }
    }

    fn indices(&mut self, key: &str) -> Option<Vec<usize>> {
        let items = self.list(key)?.clone();
        let mut out = Vec::with_capacity(items.len());
        for v in &items {
            out.push(self.int_of(key, v)?.to_usize().or_else(|| {
                self.bad(key, "entries must be small non-negative integers");
                None
            })?);
        }
        Some(out)
    }

    fn unknown(&mut self, allowed: &[&str]) {
        let extra: Vec<String> = self
            .obj
            .keys()
            .filter(|k| !allowed.contains(&k.as_str()))
            .cloned()
            .collect();
        for k in extra {
            self.bad(&k, "unknown key");
        }
    }
}

fn parse_sequence(v: &Value, errors: &mut Vec<String>) -> Option<SequenceSpec> {
    let Value::Object(obj) = v else {
        errors.push("sequence: expected an object".into());
        return None;
    };
    let mut f = Fields {
        obj,
        prefix: "sequence.",
        errors,
    };
    f.unknown(&["kind", "depth", "r", "pairs"]);
    let kind = f.text("kind");
    let depth = f.index("depth");
    let r = f.rational("r");

    if let Some(items) = f.list("pairs").cloned() {
        if kind.as_deref().is_some_and(|k| k != "explicit") {
            f.bad("pairs", "only allowed with kind \"explicit\" or no kind");
        }
        let mut pairs = Vec::with_capacity(items.len());
        for item in &items {
            match item.as_array().map(Vec::as_slice) {
                Some([m, n]) => {
                    let (m, n) = (f.int_of("pairs", m), f.int_of("pairs", n));
                    if let (Some(m), Some(n)) = (m, n) {
                        if !m.is_positive() || !n.is_positive() {
                            f.bad("pairs", "entries must be positive");
                        }
                        pairs.push((m, n));
                    }
                }
                _ => f.bad("pairs", "each entry must be a [m, n] pair"),
            }
        }
        if pairs.is_empty() {
            f.bad("pairs", "at least one pair is required");
        }
        if depth.is_some_and(|d| d != pairs.len()) {
            f.bad("depth", "does not match the number of pairs");
        }
        return Some(SequenceSpec::Explicit(pairs));
    }

    let depth = match depth {
        Some(0) => {
            f.bad("depth", "must be at least 1");
            None
        }
        Some(d) => Some(d),
        None => {
            f.bad("depth", "required for generated sequences");
            None
        }
    };
    if r.is_some() && kind.as_deref().is_some_and(|k| k != "theorem3") {
        f.bad("r", "only used by kind \"theorem3\"");
    }
    let kind = match kind.as_deref() {
        Some("minimal") => Some(SequenceKind::Minimal),
        Some("theorem4") => Some(SequenceKind::Theorem4),
        Some("corollary1") => Some(SequenceKind::Corollary1),
        Some("theorem3") => match r {
            Some(r) if r.is_positive() => Some(SequenceKind::Theorem3 { r }),
            Some(_) => {
                f.bad("r", "must be positive");
                None
            }
            None => {
                f.bad("r", "required for kind \"theorem3\"");
                None
            }
        },
        Some("explicit") => {
            f.bad("pairs", "required for kind \"explicit\"");
            None
        }
        Some(other) => {
            f.bad("kind", &format!("unknown sequence kind {other:?}"));
            None
        }
        None => {
            f.bad("kind", "required unless pairs are given");
            None
        }
    };
    Some(SequenceSpec::Generated {
        kind: kind?,
        depth: depth?,
    })
}

fn level_range(lo: usize, hi: usize) -> Vec<usize> {
    (lo..=hi).collect()
}

/// Parse and validate a configuration document.
pub fn parse_config(document: &str) -> Result<RunConfig, CliError> {
    let echo: Value = serde_json::from_str(document)
        .map_err(|e| CliError::Config(vec![format!("malformed JSON: {e}")]))?;
    let Value::Object(obj) = &echo else {
        return Err(CliError::Config(vec!["top level must be an object".into()]));
    };
    let mut errors = Vec::new();
    let mut f = Fields {
        obj,
        prefix: "",
        errors: &mut errors,
    };

    let command = match f.text("command") {
        Some(name) => {
            let c = Command::ALL.into_iter().find(|c| c.name() == name);
            if c.is_none() {
                f.bad("command", &format!("unknown command {name:?}"));
            }
            c
        }
        None => {
            f.bad("command", "required");
            None
        }
    };
    if let Some(c) = command {
        let allowed: Vec<&str> = COMMON_KEYS.iter().chain(c.keys()).copied().collect();
        f.unknown(&allowed);
    }

    let step_budget = f.count("step_budget").unwrap_or(DEFAULT_STEP_BUDGET);
    let bit_budget = f.count("bit_budget").unwrap_or(DEFAULT_BIT_BUDGET);
    let max_subintervals = f
        .index("max_subintervals")
        .unwrap_or(DEFAULT_MAX_SUBINTERVALS);
    for (key, v) in [
        ("step_budget", step_budget),
        ("bit_budget", bit_budget),
        ("max_subintervals", max_subintervals as u64),
    ] {
        if v == 0 {
            f.bad(key, "must be positive");
        }
    }

    let k_given = f.index("K");
    let level = f.index("level");
    let levels = f.indices("levels");
    let claim_names = f.list("claims").cloned();
    let exponent = f.rational("exponent");
    let start = f.index("start");
    let tolerance = f.rational("tolerance");
    let r = f.rational("r");
    let max_k = f.count("max_k");
    let x = f.rational("x");
    let horizon = f.count("horizon");
    let beta = f.rational("beta");
    let depths = f.indices("depths");

    let sequence = match obj.get("sequence") {
        Some(v) => parse_sequence(v, &mut errors),
        None => {
            errors.push("sequence: required".into());
            None
        }
    };
    let (Some(command), Some(sequence)) = (command, sequence) else {
        return Err(CliError::Config(errors));
    };
    let seq_len = sequence.len();
    let depth = k_given.unwrap_or(seq_len);
    if depth == 0 {
        errors.push("K: must be at least 1".into());
    }
    if depth > seq_len {
        errors.push(format!("K: {depth} exceeds the sequence depth {seq_len}"));
    }

    let mut claims = Vec::new();
    if let Some(items) = claim_names {
        for v in &items {
            match v.as_str().map(str::parse::<Claim>) {
                Some(Ok(c)) => claims.push(c),
                _ => errors.push(format!("claims: unknown claim {v}")),
            }
        }
    }
    if claims.is_empty() {
        claims = Claim::ALL.to_vec();
    }

    let mut levels = match (level, levels) {
        (Some(_), Some(_)) => {
            errors.push("level: give either level or levels, not both".into());
            Vec::new()
        }
        (Some(l), None) => vec![l],
        (None, Some(ls)) => ls,
        (None, None) => Vec::new(),
    };
    let tower_levels = |errors: &mut Vec<String>, levels: &[usize], min: usize| {
        for &l in levels {
            if l < min {
                errors.push(format!("level: {l} is below the minimum {min}"));
            } else if l + 2 > depth {
                errors.push(format!(
                    "level: level {l} requires K >= level+2 (K = {depth})"
                ));
            }
        }
    };

    let exponent = exponent.unwrap_or_else(BigRational::one);
    let start = start.unwrap_or(1);
    let r = r.unwrap_or_else(|| BigRational::from_integer(2.into()));
    let beta = beta.unwrap_or_else(BigRational::zero);
    let mut depths = depths.unwrap_or_default();

    match command {
        Command::Induce => {
            if levels.is_empty() {
                levels = level_range(1, depth.saturating_sub(2));
            }
            if levels.is_empty() && depth < 3 {
                errors.push(format!(
                    "level: level 1 requires K >= level+2 (K = {depth})"
                ));
            }
            tower_levels(&mut errors, &levels, 1);
        }
        Command::Verify | Command::Geometry => {
            if levels.is_empty() {
                levels = level_range(1, depth.saturating_sub(2));
            }
            if levels.is_empty() {
                errors.push(format!("K: {command} needs K >= 3"));
            }
            tower_levels(
                &mut errors,
                &levels,
                if command == Command::Verify { 0 } else { 1 },
            );
        }
        Command::Ergodicity => {
            if depths.is_empty() {
                depths = level_range(2.min(depth), depth);
            }
            for &d in &depths {
                if d == 0 || d >= seq_len {
                    errors.push(format!(
                        "depths: {d} must satisfy 1 <= K' < sequence depth {seq_len} (the bound uses n_{{K'+1}})"
                    ));
                }
            }
        }
        Command::Cover => {
            if !exponent.is_positive() || exponent > BigRational::one() {
                errors.push("exponent: must lie in (0, 1]".into());
            }
            if start == 0 || start + 2 > depth {
                errors.push(format!(
                    "start: must satisfy 1 <= start <= K-2 (K = {depth})"
                ));
            }
            if let Some(t) = &tolerance {
                if !t.is_positive() {
                    errors.push("tolerance: must be positive".into());
                }
                if depth < 4 {
                    errors.push("tolerance: the critical exponent needs K >= 4".into());
                }
            }
        }
        Command::Conditions => {
            if levels.is_empty() {
                levels = level_range(1, seq_len.saturating_sub(1));
            }
            if r < BigRational::one() {
                errors.push("r: must be at least 1".into());
            }
            for &l in &levels {
                if l == 0 || l >= seq_len {
                    errors.push(format!(
                        "levels: {l} must satisfy 1 <= k < sequence depth {seq_len}"
                    ));
                }
            }
            if max_k.is_some_and(|m| !(1..=12).contains(&m)) {
                errors.push("max_k: must lie in 1..=12".into());
            }
        }
        Command::Recurrence => {
            tower_levels(&mut errors, &levels, 0);
            if beta.is_negative() {
                errors.push("beta: must be non-negative".into());
            }
            match (&x, horizon) {
                (Some(x), Some(n)) => {
                    if x.is_negative() || x >= &BigRational::one() {
                        errors.push("x: must lie in [0, 1)".into());
                    }
                    if n == 0 {
                        errors.push("horizon: must be at least 1".into());
                    }
                    if n > step_budget {
                        errors.push("horizon: exceeds step_budget".into());
                    }
                }
                (Some(_), None) => errors.push("horizon: required with x".into()),
                (None, Some(_)) => errors.push("x: required with horizon".into()),
                (None, None) if levels.is_empty() => {
                    errors.push("recurrence needs x and horizon, or levels".into())
                }
                (None, None) => {}
            }
        }
        Command::Lengths => {
            if depth < 2 {
                errors.push("K: lengths need K >= 2".into());
            }
        }
        Command::Generate | Command::Validate => {}
    }

    if !errors.is_empty() {
        return Err(CliError::Config(errors));
    }
    Ok(RunConfig {
        command,
        sequence,
        depth,
        levels,
        claims,
        exponent,
        start,
        tolerance,
        r,
        max_k: max_k.map(|m| m as u32),
        x,
        horizon,
        beta,
        depths,
        step_budget,
        bit_budget,
        max_subintervals,
        echo,
    })
}

/// A named pass/fail outcome counted toward the exit code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub checks: usize,
    pub failed: usize,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: Command,
    pub config: Value,
    pub tool_version: &'static str,
    pub results: Value,
    pub summary: Summary,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.summary.failed == 0 {
            0
        } else {
            2
        }
    }
}

/// Rows for CSV output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Report,
    pub table: Option<Table>,
}

struct Collector {
    checks: Vec<Check>,
}

impl Collector {
    fn new() -> Self {
        Collector { checks: Vec::new() }
    }

    fn add(&mut self, name: impl Into<String>, passed: bool) {
        self.checks.push(Check {
            name: name.into(),
            passed,
        });
    }

    fn report(&mut self, r: &VerificationReport) {
        let name = match (r.level, r.depth) {
            (Some(k), Some(d)) => format!("{} k={k} K={d}", r.claim),
            (Some(k), None) => format!("{} k={k}", r.claim),
            (None, Some(d)) => format!("{} K={d}", r.claim),
            (None, None) => r.claim.clone(),
        };
        self.add(name, r.passed());
    }

    fn summary(self) -> Summary {
        let failures: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.clone())
            .collect();
        Summary {
            checks: self.checks.len(),
            failed: failures.len(),
            failures,
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

const REPORT_COLUMNS: [&str; 11] = [
    "claim",
    "sequence",
    "level",
    "depth",
    "lhs",
    "relation",
    "rhs",
    "holds",
    "applicable",
    "lhs_approx",
    "rhs_approx",
];

fn report_rows(reports: &[VerificationReport]) -> Table {
    let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    Table {
        header: REPORT_COLUMNS.to_vec(),
        rows: reports
            .iter()
            .map(|r| {
                vec![
                    r.claim.clone(),
                    r.sequence.clone(),
                    opt(r.level),
                    opt(r.depth),
                    rational_text(&r.lhs),
                    r.relation.symbol().to_string(),
                    rational_text(&r.rhs),
                    r.holds.to_string(),
                    r.applicable.to_string(),
                    r.lhs_approx.clone(),
                    r.rhs_approx.clone(),
                ]
            })
            .collect(),
    }
}

fn cover_rows(series: &CoverSumSeries) -> Table {
    let q = series.exponent.denom();
    Table {
        header: vec!["k", "b_k2", "lambda3_I2k", "term_exact", "term_decimal"],
        rows: series
            .terms
            .iter()
            .map(|t| {
                let exact = if q.is_one() {
                    rational_text(&t.term_power)
                } else {
                    format!("({})^(1/{q})", rational_text(&t.term_power))
                };
                vec![
                    t.k.to_string(),
                    t.b_k2.to_string(),
                    rational_text(&t.lambda3_i2k),
                    exact,
                    t.term_decimal.clone(),
                ]
            })
            .collect(),
    }
}

#[derive(Serialize)]
struct GenerateResult {
    sequence: keane::ParamSeqRecord,
    validation: keane::ValidationReport,
}

#[derive(Serialize)]
struct LengthsResult {
    map: crate::iet::IetRecord,
    #[serde(with = "crate::numerics::exact_vec")]
    lengths: Vec<BigRational>,
    lengths_approx: Vec<String>,
    #[serde(with = "crate::numerics::exact_vec")]
    column_masses: Vec<BigInt>,
}

#[derive(Serialize)]
struct ErgodicityRow {
    depth: usize,
    freq2: VerificationReport,
    freq3: VerificationReport,
}

#[derive(Serialize)]
struct CoverResult {
    series: CoverSumSeries,
    /// `t_k(1) ≤ 1` at every level.
    measure_bound: Vec<VerificationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    critical_exponent: Option<dimension::ExponentBracket>,
}

#[derive(Serialize)]
struct ConditionsResult {
    #[serde(with = "crate::numerics::exact")]
    r: BigRational,
    upper_bound: Vec<dimension::ChainLevel>,
    lower_bound: Vec<VerificationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    power_family_inequality: Option<PowerFamilyTable>,
}

#[derive(Serialize)]
struct PowerFamilyTable {
    threshold: Option<u32>,
    levels: Vec<VerificationReport>,
}

#[derive(Serialize)]
struct RecurrenceResult {
    #[serde(skip_serializing_if = "Option::is_none")]
    series: Option<dimension::RecurrenceSeries>,
    separation: Vec<VerificationReport>,
}

/// Execute a validated configuration.
pub fn run_command(config: &RunConfig) -> Result<Outcome, CliError> {
    let seq = config.sequence.build(config.bit_budget)?;
    let depth = config.depth;
    let options = config.induce_options();
    let mut checks = Collector::new();
    let (results, table) = match config.command {
        Command::Generate | Command::Validate => {
            let validation = keane::validate_sequence(&seq);
            checks.add("n1 >= 10", validation.n1_holds);
            for l in &validation.levels {
                checks.add(format!("3(n+1) <= m k={}", l.k), l.lower_holds);
                checks.add(format!("m <= (n'+1)/2 k={}", l.k), l.upper_holds);
            }
            let v = if config.command == Command::Generate {
                to_value(&GenerateResult {
                    sequence: seq.record(),
                    validation,
                })
            } else {
                to_value(&validation)
            };
            (v, None)
        }
        Command::Lengths => {
            let lengths = keane::length_vector(&seq, depth).map_err(run_err)?;
            let map = keane::keane_iet(&seq, depth).map_err(run_err)?;
            let sum: BigRational = lengths.iter().cloned().sum();
            checks.add("lengths sum to 1", sum.is_one());
            let result = LengthsResult {
                map: map.record(),
                lengths_approx: lengths.iter().map(|l| approx_decimal(l, 12)).collect(),
                lengths: lengths.into_inner().to_vec(),
                column_masses: keane::column_masses(&seq, depth)
                    .map_err(run_err)?
                    .into_inner()
                    .to_vec(),
            };
            (to_value(&result), None)
        }
        Command::Induce => {
            let top = *config.levels.iter().max().expect("validated non-empty");
            let tower =
                analysis::InductionTower::build(&seq, depth, top, &options).map_err(run_err)?;
            let mut reports = Vec::new();
            for &k in &config.levels {
                let rep = analysis::landing_report(&seq, &tower, k).map_err(run_err)?;
                checks.add(format!("landing k={k} K={depth}"), rep.holds);
                reports.push(rep);
            }
            (to_value(&reports), None)
        }
        Command::Verify => {
            let cases: Vec<(usize, usize)> = config.levels.iter().map(|&k| (k, depth)).collect();
            let reports = analysis::verify_suite(&seq, &config.claims, &cases).map_err(run_err)?;
            reports.iter().for_each(|r| checks.report(r));
            let table = report_rows(&reports);
            (to_value(&reports), Some(table))
        }
        Command::Geometry => {
            let geoms = config
                .levels
                .par_iter()
                .map(|&k| analysis::orbit_geometry(&seq, depth, k, &options))
                .collect::<Result<Vec<_>, _>>()
                .map_err(run_err)?;
            for g in &geoms {
                checks.add(
                    format!("images disjoint k={} K={depth}", g.level),
                    g.disjoint,
                );
                checks.add(
                    format!("gaps separated k={} K={depth}", g.level),
                    g.gaps_separated,
                );
            }
            (to_value(&geoms), None)
        }
        Command::Ergodicity => {
            let mut rows = Vec::new();
            let mut flat = Vec::new();
            for &d in &config.depths {
                let [freq2, freq3] = analysis::ergodicity_checks(&seq, d).map_err(run_err)?;
                checks.report(&freq2);
                checks.report(&freq3);
                flat.push(freq2.clone());
                flat.push(freq3.clone());
                rows.push(ErgodicityRow {
                    depth: d,
                    freq2,
                    freq3,
                });
            }
            (to_value(&rows), Some(report_rows(&flat)))
        }
        Command::Cover => {
            let series = dimension::cover_terms(&seq, depth, &config.exponent, config.start)
                .map_err(run_err)?;
            let unit = dimension::cover_terms(&seq, depth, &BigRational::one(), config.start)
                .map_err(run_err)?;
            let measure_bound: Vec<VerificationReport> = unit
                .terms
                .iter()
                .map(|t| {
                    VerificationReport::compare(
                        "COVER_MEASURE",
                        &seq,
                        Some(t.k),
                        Some(depth),
                        t.term_power.clone(),
                        analysis::Relation::Le,
                        BigRational::one(),
                    )
                })
                .collect();
            measure_bound.iter().for_each(|r| checks.report(r));
            let critical_exponent = match &config.tolerance {
                Some(t) => Some(dimension::critical_exponent(&seq, depth, t).map_err(run_err)?),
                None => None,
            };
            let table = cover_rows(&series);
            let result = CoverResult {
                series,
                measure_bound,
                critical_exponent,
            };
            (to_value(&result), Some(table))
        }
        Command::Conditions => {
            let s = config.r.recip();
            let (p, q) = (s.numer().to_u32(), s.denom().to_u32());
            if p.is_none() || q.is_none() {
                return Err(CliError::Run("r is too large for exact powers".into()));
            }
            let chain = dimension::upper_bound_chain(&seq, &config.r, depth).map_err(run_err)?;
            let chain: Vec<_> = chain
                .into_iter()
                .filter(|l| config.levels.contains(&l.k))
                .collect();
            for l in &chain {
                if let (true, Some(c)) = (l.condition.holds, &l.cover) {
                    checks.add(
                        format!("condition implies t_k(1/r) <= 2^-k k={} K={depth}", l.k),
                        c.below_geometric,
                    );
                }
            }
            let mut lower = Vec::new();
            for &k in &config.levels {
                lower.extend(
                    dimension::check_theorem3_condition(&seq, &config.r, k).map_err(run_err)?,
                );
            }
            let family = match config.max_k {
                Some(m) => {
                    let (threshold, levels) =
                        dimension::power_family_threshold(m).map_err(run_err)?;
                    Some(PowerFamilyTable { threshold, levels })
                }
                None => None,
            };
            let mut flat: Vec<VerificationReport> =
                chain.iter().map(|l| l.condition.clone()).collect();
            flat.extend(lower.iter().cloned());
            if let Some(t) = &family {
                flat.extend(t.levels.iter().cloned());
            }
            let result = ConditionsResult {
                r: config.r.clone(),
                upper_bound: chain,
                lower_bound: lower,
                power_family_inequality: family,
            };
            (to_value(&result), Some(report_rows(&flat)))
        }
        Command::Recurrence => {
            let separation = config
                .levels
                .par_iter()
                .map(|&k| dimension::separation_check(&seq, depth, k, &options))
                .collect::<Result<Vec<_>, _>>()
                .map_err(run_err)?;
            separation.iter().for_each(|r| checks.report(r));
            let series = match (&config.x, config.horizon) {
                (Some(x), Some(n)) => {
                    let map = keane::keane_iet(&seq, depth).map_err(run_err)?;
                    let map = on_grid(map, x);
                    let point = map.point(x).map_err(run_err)?;
                    Some(
                        dimension::recurrence_statistic(&map, &point, n, &config.beta)
                            .map_err(run_err)?,
                    )
                }
                _ => None,
            };
            let table = Table {
                header: vec!["n", "distance", "distance_decimal"],
                rows: series
                    .iter()
                    .flat_map(|s| &s.samples)
                    .map(|r| {
                        vec![
                            r.n.to_string(),
                            rational_text(&r.distance),
                            approx_decimal(&r.distance, 12),
                        ]
                    })
                    .collect(),
            };
            (
                to_value(&RecurrenceResult { series, separation }),
                Some(table),
            )
        }
    };
    Ok(Outcome {
        report: Report {
            command: config.command,
            config: config.echo.clone(),
            tool_version: TOOL_VERSION,
            results,
            summary: checks.summary(),
        },
        table,
    })
}

/// Refine the grid of `map` until `x` lies on it.
fn on_grid(map: IetMap, x: &BigRational) -> IetMap {
    let d = map.denominator();
    let g = num_integer::Integer::gcd(x.denom(), d);
    let factor = x.denom() / g;
    match factor.to_u32() {
        Some(1) => map,
        Some(f) => map.refined(f),
        None => map.refined(u32::MAX),
    }
}

/// Serialize an outcome in the requested format.
pub fn render(outcome: &Outcome, format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(&outcome.report)
                .map_err(|e| CliError::Io(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let table = outcome
                .table
                .as_ref()
                .ok_or(CliError::NoCsv(outcome.report.command))?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&table.header)
                .map_err(|e| CliError::Io(e.to_string()))?;
            for row in &table.rows {
                w.write_record(row)
                    .map_err(|e| CliError::Io(e.to_string()))?;
            }
            w.into_inner().map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

/// Write the rendered outcome to `<out>/<command>.<ext>`, or to `sink` when
/// no directory is given. Returns the path written, if any.
pub fn emit_report(
    outcome: &Outcome,
    format: Format,
    out: Option<&Path>,
    sink: &mut dyn Write,
) -> Result<Option<std::path::PathBuf>, CliError> {
    let bytes = render(outcome, format)?;
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(io)?;
            let ext = match format {
                Format::Json => "json",
                Format::Csv => "csv",
            };
            let path = dir.join(format!("{}.{ext}", outcome.report.command));
            std::fs::write(&path, bytes).map_err(io)?;
            Ok(Some(path))
        }
        None => {
            sink.write_all(&bytes).map_err(io)?;
            Ok(None)
        }
    }
}
