use std::time::Instant;

use serde_json::{json, Value};

use super::json::{number, optional};
use super::{Input, SCHEMA};
use crate::bounds::{greedy_bound_constant, SLACK};
use crate::error::{Error, Result};
use crate::greedy::{greedy_residual, Support};
use crate::oracle::{sigma_m_with, Schedule, SolverOptions, MAX_ORACLE_ATOMS, MAX_ORACLE_TERMS};
use crate::transform::analyze;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxOptions {
    pub p: f64,
    pub m: usize,
    /// Run the exhaustive best m-term oracle.
    pub oracle: bool,
    pub tol: f64,
    pub schedule: Schedule,
    /// Include wall-clock timings. They vary between runs, so they are off
    /// by default to keep reports byte-identical.
    pub timings: bool,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        Self {
            p: 2.0,
            m: 1,
            oracle: true,
            tol: crate::oracle::DEFAULT_TOL,
            schedule: Schedule::default(),
            timings: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxReport {
    pub dim: usize,
    pub level: u32,
    pub source: String,
    pub p: f64,
    pub m: usize,
    pub greedy_error: f64,
    pub sigma_m: Option<f64>,
    pub bound_constant: f64,
    /// Whether the bound is a theorem at this `(p, d)`: always in one
    /// dimension, for `p <= 2` otherwise.
    pub asserted: bool,
    pub ratio: Option<f64>,
    pub holds: Option<bool>,
    pub selected_support: Support,
    pub oracle_support: Option<Support>,
    /// Seconds spent in (greedy, oracle).
    pub timings: Option<(f64, f64)>,
}

impl ApproxReport {
    /// An asserted bound that fails.
    pub fn is_violation(&self) -> bool {
        self.asserted && self.holds == Some(false)
    }

    pub fn to_json(&self) -> Value {
        let atoms = |s: &Support| -> Value {
            Value::Array(
                s.atoms()
                    .iter()
                    .map(|a| serde_json::to_value(a.descriptor()).expect("descriptor serializes"))
                    .collect(),
            )
        };
        let mut doc = json!({
            "schema": SCHEMA,
            "input": { "d": self.dim, "J": self.level, "source": self.source },
            "p": number(self.p),
            "m": self.m,
            "greedy_error": number(self.greedy_error),
            "bound_constant": number(self.bound_constant),
            "asserted": self.asserted,
            "selected_support": atoms(&self.selected_support),
        });
        let obj = doc.as_object_mut().expect("object literal");
        if let Some(sigma) = self.sigma_m {
            obj.insert("sigma_m".into(), number(sigma));
            obj.insert("ratio".into(), optional(self.ratio));
            obj.insert("holds".into(), Value::from(self.holds));
        }
        if let Some(s) = &self.oracle_support {
            obj.insert("oracle_support".into(), atoms(s));
        }
        if let Some((greedy, oracle)) = self.timings {
            obj.insert(
                "timings".into(),
                json!({ "greedy_seconds": number(greedy), "oracle_seconds": number(oracle) }),
            );
        }
        doc
    }
}

/// Greedy approximation of `input`, optionally compared against the best
/// m-term error and the greedy bound constant.
pub fn run_approx(input: &Input, opts: &ApproxOptions) -> Result<ApproxReport> {
    let g = &input.function;
    let (d, level) = (g.dim(), g.level());
    crate::error::require_exponent(opts.p, 1.0, "(1, inf)")?;
    let n = g.len();
    if opts.m > n {
        return Err(Error::TooManyTerms { m: opts.m, n });
    }
    if opts.oracle && (n > MAX_ORACLE_ATOMS || opts.m > MAX_ORACLE_TERMS) {
        return Err(Error::OracleCap(format!(
            "dictionary size {n} and m = {} exceed the limits N <= {MAX_ORACLE_ATOMS}, m <= {MAX_ORACLE_TERMS}; use --no-oracle",
            opts.m
        )));
    }
    let bound_constant = greedy_bound_constant(opts.p, d)?;

    let start = Instant::now();
    let table = analyze(g, opts.p)?;
    let (residual, selected) = greedy_residual(&table, opts.m)?;
    let greedy_error = residual.lp_norm(opts.p)?;
    let greedy_time = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let best = if opts.oracle {
        let solver = SolverOptions::with_tol(opts.tol);
        Some(sigma_m_with(g, opts.p, opts.m, &solver, opts.schedule)?)
    } else {
        None
    };
    let oracle_time = start.elapsed().as_secs_f64();

    let sigma_m = best.as_ref().map(|b| b.sigma);
    Ok(ApproxReport {
        dim: d,
        level,
        source: input.source.clone(),
        p: opts.p,
        m: opts.m,
        greedy_error,
        sigma_m,
        bound_constant,
        asserted: d == 1 || opts.p <= 2.0,
        ratio: sigma_m.filter(|&s| s > 0.0).map(|s| greedy_error / s),
        holds: sigma_m.map(|s| greedy_error <= bound_constant * s + SLACK),
        selected_support: selected,
        oracle_support: best.map(|b| b.support),
        timings: opts.timings.then_some((greedy_time, oracle_time)),
    })
}
