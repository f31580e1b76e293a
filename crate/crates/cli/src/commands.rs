//! The `info`, `table` and `count` subcommands.

use cmtori::apps::{
    cm_point_count_with, isogeny_class_counts_with, shimura_components, LevelData, ShimuraInput,
};
use cmtori::arith::{is_squarefree, primes_below};
use cmtori::torus::{class_number, class_number_family_sqrt_p_j};
use cmtori::{CMAlgebraSpec, Error, Overrides};
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error as ThisError;

use crate::grammar::{parse_spec, ParseError};
use crate::report::{estimate, rational, report_row, Row, REPORT_FIELDS};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INSUFFICIENT: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

pub const MAX_BOUND: i64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, ThisError)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn insufficient(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INSUFFICIENT,
            message: message.into(),
        }
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InsufficientInvariants(_) | Error::HypothesisNotAsserted(_) => EXIT_INSUFFICIENT,
            Error::RouteDisagreement(_) | Error::PrecisionUnstable { .. } => EXIT_VERIFY,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

/// Rows plus the column order used for CSV and text.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub fields: Vec<&'static str>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Options {
    pub overrides: Overrides,
    pub index_u: Option<u64>,
    pub mu_index: Option<u64>,
    pub assert_noncompact: bool,
    pub bound: Option<i64>,
}

impl Options {
    fn level(&self) -> Result<LevelData, CliError> {
        Ok(LevelData::new(self.index_u.unwrap_or(1), self.mu_index.unwrap_or(1))?)
    }

    fn bound(&self, default: i64) -> Result<i64, CliError> {
        let b = self.bound.unwrap_or(default);
        if !(1..=MAX_BOUND).contains(&b) {
            return Err(CliError::usage(format!("--bound must lie in 1..={MAX_BOUND}, got {b}")));
        }
        Ok(b)
    }
}

pub fn info(spec_text: &str, opts: &Options) -> Result<Table, CliError> {
    let spec = parse_spec(spec_text)?;
    let rep = class_number(&spec, &opts.overrides)?;
    if rep.q.is_none() {
        return Err(CliError::insufficient(format!("Q unknown for {spec}; supply --Q")));
    }
    if rep.h_k.is_none() {
        return Err(CliError::insufficient(format!("h_K unknown for {spec}; supply --hK")));
    }
    Ok(Table {
        fields: REPORT_FIELDS.to_vec(),
        rows: vec![report_row(&rep)],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Family {
    #[value(name = "sqrtp-1")]
    SqrtP1,
    #[value(name = "sqrtp-2")]
    SqrtP2,
    #[value(name = "sqrtp-3")]
    SqrtP3,
    #[value(name = "biq-range")]
    BiqRange,
}

fn table_fields() -> Vec<&'static str> {
    let mut f = REPORT_FIELDS.to_vec();
    f.extend(["closed_form", "note"]);
    f
}

fn skipped_row(spec: &str, note: &str) -> Row {
    let mut row: Row = table_fields().into_iter().map(|f| (f.to_string(), Value::Null)).collect();
    row.insert("spec".into(), json!(spec));
    row.insert("note".into(), json!(note));
    row
}

fn family_row(p: i64, j: i64, overrides: &Overrides) -> Result<(CMAlgebraSpec, Row), CliError> {
    let spec = CMAlgebraSpec::biquadratic(p, j)?;
    let closed = match class_number_family_sqrt_p_j(p, j) {
        Ok(h) => h,
        Err(Error::Unsupported(why)) => return Ok((spec.clone(), skipped_row(&spec.to_string(), &format!("skipped: {why}")))),
        Err(e) => return Err(e.into()),
    };
    let rep = class_number(&spec, overrides)?;
    let mut row = report_row(&rep);
    let agrees = rep.route_agreement && rep.h_t_exact() == Some(closed);
    row.insert("route_agreement".into(), json!(agrees));
    row.insert("closed_form".into(), json!(closed));
    row.insert("note".into(), Value::Null);
    Ok((spec, row))
}

fn range_row(d: i64, j: i64, overrides: &Overrides) -> Result<(CMAlgebraSpec, Row), CliError> {
    let spec = CMAlgebraSpec::biquadratic(d, j)?;
    let rep = class_number(&spec, overrides)?;
    let mut row = report_row(&rep);
    row.insert("closed_form".into(), rep.closed_form_route.map_or(Value::Null, rational));
    row.insert("note".into(), Value::Null);
    Ok((spec, row))
}

pub fn table(family: Family, opts: &Options) -> Result<Table, CliError> {
    let overrides = opts.overrides;
    let mut rows: Vec<(CMAlgebraSpec, Row)> = match family {
        Family::BiqRange => {
            let bound = opts.bound(10)?;
            let pairs: Vec<(i64, i64)> = (2..bound)
                .filter(|&d| is_squarefree(d))
                .flat_map(|d| (1..bound).filter(|&j| is_squarefree(j)).map(move |j| (d, j)))
                .collect();
            pairs
                .par_iter()
                .map(|&(d, j)| range_row(d, j, &overrides))
                .collect::<Result<_, _>>()?
        }
        _ => {
            let j = match family {
                Family::SqrtP1 => 1,
                Family::SqrtP2 => 2,
                _ => 3,
            };
            let bound = opts.bound(100)?;
            primes_below(bound)
                .par_iter()
                .map(|&p| family_row(p, j, &overrides))
                .collect::<Result<_, _>>()?
        }
    };
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(Table {
        fields: table_fields(),
        rows: rows.into_iter().map(|(_, r)| r).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Subject {
    #[value(name = "cm-points")]
    CmPoints,
    Shimura,
    Isogeny,
}

pub fn count(subject: Subject, spec_text: &str, n: Option<u32>, opts: &Options) -> Result<Table, CliError> {
    let spec = parse_spec(spec_text)?;
    let level = opts.level()?;
    let rep = class_number(&spec, &opts.overrides)?;
    let mut row = Row::new();
    row.insert("spec".into(), json!(spec.to_string()));
    let name = match subject {
        Subject::CmPoints => "cm-points",
        Subject::Shimura => "shimura",
        Subject::Isogeny => "isogeny",
    };
    row.insert("subject".into(), json!(name));
    row.insert("index_U".into(), json!(level.index_u));
    row.insert("mu_index".into(), json!(level.mu_index));
    row.insert("mu_order".into(), json!(rep.mu_order));
    row.insert("h_T".into(), estimate(&rep.h_t));
    row.insert("h_T1".into(), rational(rep.h_t1));
    let fields = match subject {
        Subject::CmPoints => {
            let c = cm_point_count_with(&spec, &level, &opts.overrides)?;
            row.insert("count".into(), estimate(&c));
            row.insert("formula".into(), json!("h_T * index_U / mu_index"));
            vec!["spec", "subject", "count", "formula", "h_T", "index_U", "mu_index", "mu_order"]
        }
        Subject::Shimura => {
            let n = n.ok_or_else(|| CliError::usage("shimura needs --n <rank>"))?;
            let input = ShimuraInput {
                field: spec.clone(),
                n,
                level,
                noncompact_assertion: opts.assert_noncompact,
                overrides: opts.overrides,
            };
            let c = shimura_components(&input).map_err(|e| match e {
                Error::HypothesisNotAsserted(h) => CliError::insufficient(format!(
                    "hypothesis not asserted: \"Assume that {h}\"; pass --assert-noncompact"
                )),
                other => other.into(),
            })?;
            row.insert("n".into(), json!(n));
            row.insert("count".into(), estimate(&c));
            let formula = if n % 2 == 1 {
                "h_T * index_U / mu_index (n odd)"
            } else {
                "h_T1 * index_U / mu_index (n even)"
            };
            row.insert("formula".into(), json!(formula));
            vec!["spec", "subject", "n", "count", "formula", "h_T", "h_T1", "index_U", "mu_index", "mu_order"]
        }
        Subject::Isogeny => {
            let c = isogeny_class_counts_with(&spec, &level, &level, &opts.overrides)?;
            row.insert("lambda_count".into(), estimate(&c.lambda_count));
            row.insert("similitude_count".into(), estimate(&c.similitude_count));
            row.insert(
                "formula".into(),
                json!("(h_T1, h_T) * index_U / mu_index"),
            );
            vec![
                "spec",
                "subject",
                "lambda_count",
                "similitude_count",
                "formula",
                "h_T",
                "h_T1",
                "index_U",
                "mu_index",
                "mu_order",
            ]
        }
    };
    Ok(Table {
        fields,
        rows: vec![row],
    })
}
