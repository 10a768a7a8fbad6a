use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::grid::{cell_count, GridFunction};

/// A grid function plus a description of where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Input {
    pub function: GridFunction,
    pub source: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonInput {
    d: usize,
    #[serde(rename = "J")]
    level: u32,
    values: Vec<f64>,
}

/// `{"d": 1, "J": 2, "values": [...]}` with `2^{J d}` values in row-major order.
pub fn parse_json(text: &str) -> Result<GridFunction> {
    let raw: JsonInput = serde_json::from_str(text).map_err(|e| Error::Input(e.to_string()))?;
    if raw.d == 0 {
        return Err(Error::Input("d must be at least 1".into()));
    }
    if cell_count(raw.d, raw.level).is_none() {
        return Err(Error::Input(format!("grid 2^({} * {}) is too large", raw.level, raw.d)));
    }
    GridFunction::new(raw.d, raw.level, raw.values)
}

/// One value per line; blank lines and `#` comments are skipped. The level
/// is inferred from the count, which must be a power of `2^d`.
pub fn parse_csv(text: &str, d: usize) -> Result<GridFunction> {
    if d == 0 {
        return Err(Error::Input("d must be at least 1".into()));
    }
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim().trim_end_matches(',').trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::Input(format!("line {}: not a number: {line:?}", lineno + 1)))?;
        values.push(v);
    }
    let n = values.len();
    let bits = n.trailing_zeros() as usize;
    if n == 0 || !n.is_power_of_two() || bits % d != 0 {
        return Err(Error::Input(format!("{n} values do not fill a d = {d} dyadic grid")));
    }
    GridFunction::new(d, (bits / d) as u32, values)
}

/// Reads JSON (by extension or a leading `{`) or CSV. `d` applies to CSV only.
pub fn read_input(path: &Path, d: Option<usize>) -> Result<Input> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let is_json =
        path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) || text.trim_start().starts_with('{');
    let function = if is_json {
        let f = parse_json(&text)?;
        if let Some(d) = d.filter(|&d| d != f.dim()) {
            return Err(Error::Input(format!(
                "--d {d} disagrees with d = {} in the file",
                f.dim()
            )));
        }
        f
    } else {
        parse_csv(&text, d.unwrap_or(1))?
    };
    Ok(Input {
        function,
        source: path.display().to_string(),
    })
}

/// I.i.d. standard normal cell values from ChaCha8 seeded with `seed`.
pub fn random_function(d: usize, level: u32, seed: u64) -> Result<Input> {
    let n = cell_count(d, level)
        .filter(|_| d > 0)
        .ok_or_else(|| Error::Input(format!("no grid for d = {d}, J = {level}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    Ok(Input {
        function: GridFunction::new(d, level, values)?,
        source: format!("random:chacha8:seed={seed}"),
    })
}
