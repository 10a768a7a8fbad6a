use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde_json::{json, Value};

use super::json::{number, optional};
use super::SCHEMA;
use crate::basis::{atom_lp_norm, dictionary, HaarAtom, Orientation};
use crate::bounds::{
    check_lemma1, check_lemma2_3, check_littlewood_paley, check_projector_lemma, theorem1_constant, theorem2_constant,
    Direction, SLACK,
};
use crate::error::{Error, Result};
use crate::greedy::{greedy_from_table, greedy_residual, is_tie_free};
use crate::grid::{cell_count, GridFunction};
use crate::martingale::{
    build_filtration_1d, build_filtration_oriented, multivariate_counterexample, verify_conditionally_symmetric,
    DifferenceSequence, Filtration, MARTINGALE_TOL,
};
use crate::oracle::{sigma_m_with, Schedule, SolverOptions};
use crate::transform::{analyze, analyze_coefficients};

pub const SUITES: [&str; 8] = [
    "lemma1",
    "lemma23",
    "lemma4",
    "littlewood-paley",
    "martingale",
    "theorem1",
    "theorem2",
    "oracle-consistency",
];

/// Violations listed individually in the JSON summary; the count is always complete.
const LISTED_VIOLATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    /// Parallelism over trials. Summaries do not depend on it.
    pub schedule: Schedule,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            trials: 100,
            seed: 0,
            tol: crate::oracle::DEFAULT_TOL,
            schedule: Schedule::default(),
        }
    }
}

/// Generator for trial `trial`: ChaCha8 keyed by `seed`, on stream `trial`.
/// Each trial owns its stream, so results do not depend on scheduling.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// One evaluated inequality `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub check: &'static str,
    pub trial: usize,
    pub d: usize,
    pub level: Option<u32>,
    pub p: Option<f64>,
    pub m: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
    /// The tightness statistic reported per group; `lhs / rhs` unless the
    /// check defines its own (the greedy ratio for the theorem suites).
    pub ratio: Option<f64>,
    pub holds: bool,
    pub detail: String,
}

impl Record {
    fn new(check: &'static str, trial: usize, d: usize, lhs: f64, rhs: f64) -> Self {
        Self {
            check,
            trial,
            d,
            level: None,
            p: None,
            m: None,
            lhs,
            rhs,
            ratio: (rhs > 0.0).then(|| lhs / rhs),
            holds: lhs <= rhs + SLACK,
            detail: String::new(),
        }
    }

    fn p(mut self, p: f64) -> Self {
        self.p = Some(p);
        self
    }

    fn m(mut self, m: usize) -> Self {
        self.m = Some(m);
        self
    }

    fn level(mut self, level: u32) -> Self {
        self.level = Some(level);
        self
    }

    fn holds(mut self, holds: bool) -> Self {
        self.holds = holds;
        self
    }

    fn ratio(mut self, ratio: Option<f64>) -> Self {
        self.ratio = ratio;
        self
    }

    fn detail(mut self, detail: String) -> Self {
        self.detail = detail;
        self
    }

    fn to_json(&self) -> Value {
        json!({
            "check": self.check,
            "trial": self.trial,
            "d": self.d,
            "J": self.level,
            "p": optional(self.p),
            "m": self.m,
            "lhs": number(self.lhs),
            "rhs": number(self.rhs),
            "detail": self.detail,
        })
    }
}

/// Statistics for one `(check, d, J, p, m)` group. Slack is `rhs - lhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupStats {
    pub check: &'static str,
    pub d: usize,
    pub level: Option<u32>,
    pub p: Option<f64>,
    pub m: Option<usize>,
    pub count: usize,
    pub violations: usize,
    pub max_ratio: Option<f64>,
    pub min_slack: f64,
    pub mean_slack: f64,
}

impl GroupStats {
    fn to_json(&self) -> Value {
        json!({
            "check": self.check,
            "d": self.d,
            "J": self.level,
            "p": optional(self.p),
            "m": self.m,
            "count": self.count,
            "violations": self.violations,
            "max_ratio": optional(self.max_ratio),
            "min_slack": number(self.min_slack),
            "mean_slack": number(self.mean_slack),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSummary {
    pub suite: String,
    pub seed: u64,
    pub trials: usize,
    pub checks: usize,
    pub groups: Vec<GroupStats>,
    pub violations: Vec<Record>,
    /// Suite-specific output.
    pub extras: Value,
}

impl SuiteSummary {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// Group statistics for one check name.
    pub fn groups_for<'a>(&'a self, check: &'a str) -> impl Iterator<Item = &'a GroupStats> + 'a {
        self.groups.iter().filter(move |g| g.check == check)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "schema": SCHEMA,
            "suite": self.suite,
            "seed": self.seed,
            "trials": self.trials,
            "checks": self.checks,
            "violation_count": self.violations.len(),
            "passed": self.passed(),
            "groups": self.groups.iter().map(GroupStats::to_json).collect::<Vec<_>>(),
            "violations": self
                .violations
                .iter()
                .take(LISTED_VIOLATIONS)
                .map(Record::to_json)
                .collect::<Vec<_>>(),
            "extras": self.extras,
        })
    }

    fn from_records(name: &str, opts: &SuiteOptions, records: Vec<Record>, extras: Value) -> Self {
        type Key = (&'static str, usize, Option<u32>, Option<u64>, Option<usize>);
        let mut groups: BTreeMap<Key, Vec<&Record>> = BTreeMap::new();
        for r in &records {
            // Exponents are positive, so their bit patterns sort numerically.
            let key = (r.check, r.d, r.level, r.p.map(f64::to_bits), r.m);
            groups.entry(key).or_default().push(r);
        }
        let groups = groups
            .into_values()
            .map(|rs| {
                let first = rs[0];
                let slacks: Vec<f64> = rs.iter().map(|r| r.rhs - r.lhs).collect();
                GroupStats {
                    check: first.check,
                    d: first.d,
                    level: first.level,
                    p: first.p,
                    m: first.m,
                    count: rs.len(),
                    violations: rs.iter().filter(|r| !r.holds).count(),
                    max_ratio: rs.iter().filter_map(|r| r.ratio).reduce(f64::max),
                    min_slack: slacks.iter().copied().fold(f64::INFINITY, f64::min),
                    mean_slack: slacks.iter().sum::<f64>() / slacks.len() as f64,
                }
            })
            .collect();
        let checks = records.len();
        Self {
            suite: name.to_string(),
            seed: opts.seed,
            trials: opts.trials,
            checks,
            groups,
            violations: records.into_iter().filter(|r| !r.holds).collect(),
            extras,
        }
    }
}

/// Runs a named property suite.
pub fn run_suite(name: &str, opts: &SuiteOptions) -> Result<SuiteSummary> {
    let solver = SolverOptions::with_tol(opts.tol);
    let (records, extras) = match name {
        "theorem1" => (
            run_trials(opts, |t, rng| theorem_trial(t, rng, 1, 3, &[1.5, 2.0, 3.0], &solver))?,
            Value::Null,
        ),
        "theorem2" => (
            run_trials(opts, |t, rng| theorem_trial(t, rng, 2, 2, &[1.5, 2.0], &solver))?,
            Value::Null,
        ),
        "oracle-consistency" => (
            run_trials(opts, |t, rng| consistency_trial(t, rng, &solver))?,
            Value::Null,
        ),
        "lemma1" => (run_trials(opts, lemma1_trial)?, Value::Null),
        "lemma23" => (run_trials(opts, lemma23_trial)?, Value::Null),
        "lemma4" => (run_trials(opts, |t, rng| lemma4_trial(t, rng, &solver))?, Value::Null),
        "littlewood-paley" => (run_trials(opts, littlewood_paley_trial)?, Value::Null),
        "martingale" => {
            let mut records = run_trials(opts, martingale_trial)?;
            let report = multivariate_counterexample()?;
            records.push(
                Record::new("counterexample", 0, 2, 0.0, 0.0)
                    .level(1)
                    .holds(report.reproduced())
                    .ratio(None)
                    .detail("three conditionals equal 1 and the mixed ordering is not a martingale".into()),
            );
            let extras = json!({
                "counterexample": serde_json::to_value(&report).expect("report serializes"),
            });
            (records, extras)
        }
        other => {
            return Err(Error::Input(format!(
                "unknown suite {other:?}; expected one of {}",
                SUITES.join(", ")
            )))
        }
    };
    Ok(SuiteSummary::from_records(name, opts, records, extras))
}

fn run_trials<F>(opts: &SuiteOptions, trial: F) -> Result<Vec<Record>>
where
    F: Fn(usize, &mut ChaCha8Rng) -> Result<Vec<Record>> + Sync,
{
    let run = |t: usize| trial(t, &mut trial_rng(opts.seed, t));
    let results: Vec<Result<Vec<Record>>> = match opts.schedule {
        Schedule::Serial => (0..opts.trials).map(run).collect(),
        Schedule::Parallel => (0..opts.trials).into_par_iter().map(run).collect(),
    };
    let mut records = Vec::new();
    for r in results {
        records.extend(r?);
    }
    Ok(records)
}

fn normal_grid(rng: &mut ChaCha8Rng, d: usize, level: u32) -> Result<GridFunction> {
    let n = cell_count(d, level).ok_or_else(|| Error::InvalidArgument("grid too large".into()))?;
    GridFunction::new(d, level, (0..n).map(|_| rng.sample(StandardNormal)).collect())
}

fn atom_list(atoms: &[HaarAtom]) -> String {
    atoms.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

fn theorem_trial(
    trial: usize,
    rng: &mut ChaCha8Rng,
    d: usize,
    level: u32,
    exponents: &[f64],
    solver: &SolverOptions,
) -> Result<Vec<Record>> {
    let g = normal_grid(rng, d, level)?;
    let mut out = Vec::new();
    for &p in exponents {
        let constant = if d == 1 {
            theorem1_constant(p)?
        } else {
            theorem2_constant(p, d)?
        };
        let table = analyze(&g, p)?;
        for m in 1..=4 {
            let (residual, selected) = greedy_residual(&table, m)?;
            let err = residual.lp_norm(p)?;
            let best = sigma_m_with(&g, p, m, solver, Schedule::Serial)?;
            let name = if d == 1 { "theorem1" } else { "theorem2" };
            out.push(
                Record::new(name, trial, d, err, constant * best.sigma)
                    .level(level)
                    .p(p)
                    .m(m)
                    .ratio((best.sigma > 0.0).then(|| err / best.sigma))
                    .detail(format!(
                        "greedy [{}] oracle [{}]",
                        atom_list(selected.atoms()),
                        atom_list(best.support.atoms())
                    )),
            );
        }
    }
    Ok(out)
}

fn consistency_trial(trial: usize, rng: &mut ChaCha8Rng, solver: &SolverOptions) -> Result<Vec<Record>> {
    let (d, level) = if rng.random_bool(0.5) { (1, 3) } else { (2, 2) };
    let m = rng.random_range(1..=4);
    let g = normal_grid(rng, d, level)?;
    let best = sigma_m_with(&g, 2.0, m, solver, Schedule::Serial)?;
    let mut squares: Vec<f64> = analyze_coefficients(&g).iter().map(|c| c * c).collect();
    squares.sort_by(|a, b| b.total_cmp(a));
    let tail = squares[m..].iter().sum::<f64>().sqrt();
    let gap = (best.sigma - tail).abs();
    let mut out = vec![Record::new("tail-sum", trial, d, gap, 1e-8)
        .level(level)
        .p(2.0)
        .m(m)
        .holds(gap <= 1e-8)
        .detail(format!("sigma {:e} tail {:e}", best.sigma, tail))];
    let table = analyze(&g, 2.0)?;
    if is_tie_free(&table, m) {
        let (_, greedy) = greedy_from_table(&table, m)?;
        let same = greedy == best.support;
        out.push(
            Record::new("greedy-support", trial, d, 0.0, 0.0)
                .level(level)
                .p(2.0)
                .m(m)
                .holds(same)
                .ratio(None)
                .detail(format!(
                    "greedy [{}] oracle [{}]",
                    atom_list(greedy.atoms()),
                    atom_list(best.support.atoms())
                )),
        );
    }
    Ok(out)
}

fn random_dim_level(rng: &mut ChaCha8Rng) -> (usize, u32) {
    if rng.random_bool(0.5) {
        (1, rng.random_range(1..=4))
    } else {
        (2, rng.random_range(1..=3))
    }
}

fn lemma1_trial(trial: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Record>> {
    let (d, level) = random_dim_level(rng);
    let cells = cell_count(d, level).expect("small grid");
    let s = rng.random_range(1..=4);
    let mut pool: Vec<i32> = (-3..=6).collect();
    pool.shuffle(rng);
    let mut n: Vec<i32> = pool[..s].to_vec();
    n.sort_unstable();
    let sets: Vec<GridFunction> = (0..s)
        .map(|_| {
            let density: f64 = rng.random();
            let values = (0..cells)
                .map(|_| if rng.random_bool(density) { 1.0 } else { 0.0 })
                .collect();
            GridFunction::new(d, level, values)
        })
        .collect::<Result<_>>()?;
    let q = rng.random_range(0.25..=4.0);
    let check = check_lemma1(&n, &sets, q, d)?;
    Ok(vec![Record::new("lemma1", trial, d, check.lhs, check.rhs)
        .holds(check.holds)
        .detail(format!("q {q} n {n:?}"))])
}

fn lemma23_trial(trial: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Record>> {
    let (d, level) = random_dim_level(rng);
    let p = rng.random_range(1.0..=4.0);
    let mut atoms: Vec<HaarAtom> = dictionary(d, level).into_iter().filter(|a| !a.is_constant()).collect();
    atoms.shuffle(rng);
    let size = rng.random_range(1..=atoms.len());
    let mut q = atoms[..size].to_vec();
    q.sort();
    let mut out = Vec::new();
    for direction in [Direction::Upper, Direction::Lower] {
        let terms: Vec<(HaarAtom, f64)> = q
            .iter()
            .map(|a| {
                let extremal = rng.random_bool(0.5);
                let w: f64 = match (direction, extremal) {
                    (_, true) => 1.0,
                    (Direction::Upper, false) => 1.0 - rng.random::<f64>(),
                    (Direction::Lower, false) => 1.0 + rng.sample::<f64, _>(Exp1),
                };
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                (a.clone(), sign * w / atom_lp_norm(a, p, 1.0))
            })
            .collect();
        let check = check_lemma2_3(&terms, level, p, d, direction)?;
        let (name, lhs, rhs) = match direction {
            Direction::Upper => ("lemma2-upper", check.fnorm, check.bound),
            Direction::Lower => ("lemma3-lower", check.bound, check.fnorm),
        };
        out.push(
            Record::new(name, trial, d, lhs, rhs)
                .holds(check.holds)
                .detail(format!("p {p} J {level} N {size} Q [{}]", atom_list(&q))),
        );
    }
    Ok(out)
}

fn lemma4_trial(trial: usize, rng: &mut ChaCha8Rng, solver: &SolverOptions) -> Result<Vec<Record>> {
    let (d, level, m) = if rng.random_bool(0.5) {
        (1, 3, rng.random_range(1..=4))
    } else {
        (2, 2, rng.random_range(1..=3))
    };
    let p = [1.5, 2.0, 3.0][rng.random_range(0..3)];
    let g = normal_grid(rng, d, level)?;
    let (check, lambda) = check_projector_lemma(&g, p, m, d, solver)?;
    Ok(vec![Record::new("lemma4", trial, d, check.lhs, check.rhs)
        .level(level)
        .p(p)
        .m(m)
        .holds(check.holds)
        .detail(format!(
            "exchanged {} oracle [{}]",
            check.exchanged,
            atom_list(lambda.atoms())
        ))])
}

fn littlewood_paley_trial(trial: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Record>> {
    let level = 1 + (trial % 6) as u32;
    let f = normal_grid(rng, 1, level)?;
    let mut out = Vec::new();
    for p in [1.5, 2.0, 3.0] {
        let c = check_littlewood_paley(&f, p)?;
        out.push(Record::new("lp-lower", trial, 1, c.lower, c.norm).p(p));
        out.push(Record::new("lp-upper", trial, 1, c.norm, c.upper).p(p));
        if p == 2.0 {
            let gap = (c.square_norm - c.norm).abs();
            out.push(
                Record::new("lp-parseval", trial, 1, gap, 1e-10)
                    .p(p)
                    .holds(gap <= 1e-10)
                    .ratio(None),
            );
        }
    }
    Ok(out)
}

fn martingale_trial(trial: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    let symmetric = |name: &'static str, d: usize, level: u32, f: &GridFunction, filt: &Filtration| -> Result<Record> {
        let seq = DifferenceSequence::from_function(f, filt)?;
        let report = verify_conditionally_symmetric(&seq, filt)?;
        Ok(Record::new(name, trial, d, report.max_conditional_mean, MARTINGALE_TOL)
            .level(level)
            .holds(report.passed())
            .ratio(None)
            .detail(format!("{} violations", report.violations.len())))
    };

    let level = (trial % 5) as u32;
    let f = normal_grid(rng, 1, level)?;
    out.push(symmetric("martingale-1d", 1, level, &f, &build_filtration_1d(level)?)?);

    let level = 1 + (trial % 3) as u32;
    let f = normal_grid(rng, 2, level)?;
    for e in Orientation::all(2) {
        // The per-orientation series: the mean plus the e-oriented terms.
        let filt = build_filtration_oriented(2, level, &e)?;
        let seq = DifferenceSequence::from_function(&f, &filt)?;
        let part = seq.sum().expect("constant term present");
        out.push(symmetric("martingale-oriented", 2, level, &part, &filt)?);
    }

    // Negative control: one term replaced by its absolute value must be caught.
    let level = 2 + (trial % 3) as u32;
    let f = normal_grid(rng, 1, level)?;
    let filt = build_filtration_1d(level)?;
    let mut seq = DifferenceSequence::from_function(&f, &filt)?;
    let k = rng.random_range(1..seq.len());
    seq.terms[k] = seq.terms[k].map(f64::abs);
    let report = verify_conditionally_symmetric(&seq, &filt)?;
    out.push(
        Record::new("negative-control", trial, 1, 0.0, 0.0)
            .level(level)
            .holds(!report.passed())
            .ratio(None)
            .detail(format!("corrupted term {k}, {} violations", report.violations.len())),
    );
    Ok(out)
}
