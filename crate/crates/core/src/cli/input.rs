//! Problem and mechanism files.

use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use super::CliError;
use crate::design::SignalMatrix;
use crate::model::{DatabasePrior, DecisionProblem, EpsilonBudget, StatePrior, MAX_RESPONDENTS};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    schema: u32,
    #[serde(default)]
    state_prior: Option<Vec<f64>>,
    #[serde(default)]
    database_prior: Option<RawDatabasePrior>,
    epsilon: f64,
    #[serde(default)]
    actions: Option<Vec<f64>>,
    #[serde(default)]
    payoffs: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    options: RawOptions,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDatabasePrior {
    n: usize,
    probs: Vec<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptions {
    #[serde(default)]
    max_n: Option<usize>,
    #[serde(default)]
    tolerance: Option<f64>,
}

#[derive(Debug, Clone)]
pub enum PriorSpec {
    State(StatePrior),
    Database(DatabasePrior),
}

/// Validated problem file.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub prior: PriorSpec,
    pub epsilon: EpsilonBudget,
    pub problem: Option<DecisionProblem>,
    pub max_n: Option<usize>,
    pub tolerance: Option<f64>,
}

impl ProblemSpec {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let raw: RawSpec = serde_json::from_str(text).map_err(|e| CliError::json(origin, &e))?;
        let at = |key: &str, index: Option<usize>, msg: String| {
            CliError::at(origin, locate(text, Some(key), index).unwrap_or(1), msg)
        };
        if raw.schema != SCHEMA_VERSION {
            return Err(at("schema", None, format!("unsupported schema {}, expected {SCHEMA_VERSION}", raw.schema)));
        }
        let prior = match (raw.state_prior, raw.database_prior) {
            (Some(p), None) => PriorSpec::State(StatePrior::new(p).map_err(|e| at("state_prior", None, e.to_string()))?),
            (None, Some(d)) => {
                if d.n > MAX_RESPONDENTS {
                    return Err(at("database_prior", None, format!("n = {} exceeds {MAX_RESPONDENTS}", d.n)));
                }
                PriorSpec::Database(
                    DatabasePrior::new(d.n, d.probs).map_err(|e| at("database_prior", None, e.to_string()))?,
                )
            }
            (Some(_), Some(_)) => {
                return Err(at("database_prior", None, "give either state_prior or database_prior, not both".into()))
            }
            (None, None) => return Err(CliError::at(origin, 1, "missing state_prior or database_prior".into())),
        };
        let states = match &prior {
            PriorSpec::State(p) => p.probs().len(),
            PriorSpec::Database(p) => p.n() + 1,
        };
        let epsilon = EpsilonBudget::new(raw.epsilon).map_err(|e| at("epsilon", None, e.to_string()))?;

        let problem = match raw.payoffs {
            None => {
                if raw.actions.is_some() {
                    return Err(at("actions", None, "actions given without payoffs".into()));
                }
                None
            }
            Some(payoffs) => {
                for (i, row) in payoffs.iter().enumerate() {
                    if row.len() != states {
                        return Err(at(
                            "payoffs",
                            Some(i),
                            format!("payoff row {i} has {} entries, expected {states} (one per state)", row.len()),
                        ));
                    }
                    if let Some(bad) = row.iter().position(|u| !u.is_finite()) {
                        return Err(at("payoffs", Some(i), format!("payoff row {i} entry {bad} is not finite")));
                    }
                }
                let dp = match raw.actions {
                    Some(actions) => DecisionProblem::new(actions, payoffs),
                    None => DecisionProblem::with_indexed_actions(payoffs),
                };
                let line = locate(text, Some("actions"), None).or_else(|| locate(text, Some("payoffs"), None));
                Some(dp.map_err(|e| CliError::at(origin, line.unwrap_or(1), e.to_string()))?)
            }
        };
        if let Some(t) = raw.options.tolerance {
            if !(t.is_finite() && t > 0.0) {
                return Err(at("tolerance", None, format!("tolerance must be positive, got {t}")));
            }
        }
        Ok(Self { prior, epsilon, problem, max_n: raw.options.max_n, tolerance: raw.options.tolerance })
    }

    /// Number of respondents.
    pub fn n(&self) -> usize {
        match &self.prior {
            PriorSpec::State(p) => p.n(),
            PriorSpec::Database(p) => p.n(),
        }
    }

    /// The prior over counts (projected for database priors).
    pub fn state_prior(&self) -> StatePrior {
        match &self.prior {
            PriorSpec::State(p) => p.clone(),
            PriorSpec::Database(p) => p.state_prior(),
        }
    }
}

/// Which inputs index the rows of a mechanism table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    States,
    Databases { n: usize },
}

#[derive(Debug, Clone)]
pub struct MechanismFile {
    pub label: String,
    pub signal: SignalMatrix,
    pub inputs: InputKind,
    /// Budget recorded in a solve report, if any.
    pub epsilon: Option<f64>,
}

impl MechanismFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read(path)?;
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "mechanism".into());
        Self::parse(&text, &path.display().to_string(), &stem)
    }

    /// Accepts a bare matrix, `{label, outputs, rows}` or a solve report.
    pub fn parse(text: &str, origin: &str, default_label: &str) -> Result<Self, CliError> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::json(origin, &e))?;
        let mut label = default_label.to_string();
        let mut epsilon = None;
        let (table, rows_key) = match &value {
            Value::Array(_) => (&value, None),
            Value::Object(map) => {
                if let Some(Value::String(l)) = map.get("label") {
                    label = l.clone();
                }
                epsilon = map.get("epsilon").and_then(Value::as_f64);
                match map.get("signal") {
                    Some(signal @ Value::Object(_)) => {
                        if !map.contains_key("label") {
                            label = "optimal".into();
                        }
                        (signal, Some("rows"))
                    }
                    _ => (&value, Some("rows")),
                }
            }
            _ => return Err(CliError::at(origin, 1, "mechanism file must be a matrix or an object".into())),
        };
        let at = |index: Option<usize>, msg: String| {
            let key = if rows_key.is_some() { Some("rows") } else { None };
            CliError::at(origin, locate(text, key, index).unwrap_or(1), msg)
        };
        let rows_value = match table {
            Value::Array(_) => table,
            Value::Object(map) => map.get("rows").ok_or_else(|| CliError::at(origin, 1, "missing rows".into()))?,
            _ => unreachable!(),
        };
        let Value::Array(raw_rows) = rows_value else {
            return Err(at(None, "rows must be an array".into()));
        };
        let mut rows = Vec::with_capacity(raw_rows.len());
        for (i, r) in raw_rows.iter().enumerate() {
            let row: Option<Vec<f64>> = r.as_array().and_then(|a| a.iter().map(Value::as_f64).collect());
            rows.push(row.ok_or_else(|| at(Some(i), format!("row {i} is not an array of numbers")))?);
        }
        if rows.len() < 2 {
            return Err(at(None, "a mechanism needs at least two rows".into()));
        }
        let width = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(at(Some(i), format!("row {i} has {} entries, expected {width}", row.len())));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(at(Some(i), format!("row {i} has a negative or non-finite entry")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > crate::model::NORMALIZATION_TOL {
                return Err(at(Some(i), format!("row {i} sums to {total}, not 1")));
            }
        }
        let outputs = match table.get("outputs").and_then(Value::as_array) {
            Some(o) if o.len() == width => o
                .iter()
                .map(|v| match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect(),
            Some(o) => return Err(at(None, format!("{} output labels for {width} columns", o.len()))),
            None => (0..width).map(|j| j.to_string()).collect(),
        };
        let inputs = match table.get("kind").and_then(Value::as_str) {
            None | Some("states") => InputKind::States,
            Some("databases") => {
                let n = rows.len().trailing_zeros() as usize;
                if rows.len() != 1 << n {
                    return Err(at(None, format!("{} rows is not a power of two", rows.len())));
                }
                InputKind::Databases { n }
            }
            Some(other) => return Err(at(None, format!("unknown input kind {other:?}"))),
        };
        let signal = SignalMatrix::new(outputs, rows).map_err(|e| at(None, e.to_string()))?;
        Ok(Self { label, signal, inputs, epsilon })
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// 1-based line of `key`'s value, or of its `index`-th element when the
/// value is an array. `key = None` starts at the first array in the text.
pub(crate) fn locate(text: &str, key: Option<&str>, index: Option<usize>) -> Option<usize> {
    let mut pos = match key {
        Some(k) => {
            let needle = format!("\"{k}\"");
            text.find(&needle)? + needle.len()
        }
        None => 0,
    };
    if let Some(target) = index {
        let open = text[pos..].find('[')? + pos;
        let mut depth = 0usize;
        let mut in_string = false;
        let mut escaped = false;
        let mut expecting = true;
        let mut count = 0usize;
        let mut found = None;
        for (off, c) in text[open + 1..].char_indices() {
            let at = open + 1 + off;
            if in_string {
                match (escaped, c) {
                    (true, _) => escaped = false,
                    (false, '\\') => escaped = true,
                    (false, '"') => in_string = false,
                    _ => {}
                }
                continue;
            }
            if depth == 0 && expecting && !c.is_whitespace() && c != ']' {
                if count == target {
                    found = Some(at);
                    break;
                }
                count += 1;
                expecting = false;
            }
            match c {
                '"' => in_string = true,
                '[' | '{' => depth += 1,
                ']' | '}' if depth == 0 => break,
                ']' | '}' => depth -= 1,
                ',' if depth == 0 => expecting = true,
                _ => {}
            }
        }
        pos = found?;
    }
    Some(text[..pos].matches('\n').count() + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{
  "schema": 1,
  "state_prior": [0.25, 0.5, 0.25],
  "epsilon": 1.0,
  "payoffs": [
    [3.0, 0.0, -2.5],
    [1.0, 1.0]
  ]
}"#;

    #[test]
    fn locates_rows() {
        assert_eq!(locate(EXAMPLE, Some("epsilon"), None), Some(4));
        assert_eq!(locate(EXAMPLE, Some("payoffs"), Some(0)), Some(6));
        assert_eq!(locate(EXAMPLE, Some("payoffs"), Some(1)), Some(7));
        assert_eq!(locate(EXAMPLE, Some("payoffs"), Some(2)), None);
        assert_eq!(locate("[[1, 0],\n [0, 1]]", None, Some(1)), Some(2));
    }

    #[test]
    fn short_payoff_row_is_line_referenced() {
        let e = ProblemSpec::parse(EXAMPLE, "spec.json").unwrap_err();
        assert_eq!(e.code, 2);
        assert_eq!(e.line, Some(7));
        assert!(e.message.contains("row 1"));
    }

    #[test]
    fn rejects_two_priors_and_unknown_fields() {
        let both = r#"{"schema":1,"state_prior":[0.5,0.5],"database_prior":{"n":1,"probs":[0.5,0.5]},"epsilon":1}"#;
        assert_eq!(ProblemSpec::parse(both, "s").unwrap_err().code, 2);
        let extra = r#"{"schema":1,"state_prior":[0.5,0.5],"epsilon":1,
"colour":"red"}"#;
        let e = ProblemSpec::parse(extra, "s").unwrap_err();
        assert_eq!((e.code, e.line), (2, Some(2)));
    }

    #[test]
    fn mechanism_formats() {
        let bare = MechanismFile::parse("[[0.5, 0.5], [0.25, 0.75]]", "m", "bare").unwrap();
        assert_eq!(bare.label, "bare");
        assert_eq!(bare.inputs, InputKind::States);
        let obj = MechanismFile::parse(r#"{"label":"g","outputs":["a","b"],"rows":[[1,0],[0,1]]}"#, "m", "x").unwrap();
        assert_eq!(obj.label, "g");
        assert_eq!(obj.signal.outputs(), ["a", "b"]);
        let bad = MechanismFile::parse("[[0.5, 0.5],\n[0.5, 0.6]]", "m", "bad").unwrap_err();
        assert_eq!((bad.code, bad.line), (2, Some(2)));
    }
}
