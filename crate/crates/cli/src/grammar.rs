//! Textual field specs: `iq:<m>`, `biq:<d>,<j>` and `prod:<spec>;<spec>;...`.

use cmtori::arith::is_squarefree;
use cmtori::{CMAlgebraSpec, CmField};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at column {column}: {message}")]
pub struct ParseError {
    /// 1-based column in the original input.
    pub column: usize,
    pub message: String,
}

fn fail(offset: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        column: offset + 1,
        message: message.into(),
    }
}

fn integer(text: &str, offset: usize) -> Result<i64, ParseError> {
    let lead = text.len() - text.trim_start().len();
    text.trim()
        .parse()
        .map_err(|_| fail(offset + lead, format!("expected an integer, found {:?}", text.trim())))
}

fn component(text: &str, offset: usize) -> Result<CmField, ParseError> {
    if let Some(m) = text.strip_prefix("iq:") {
        let m = integer(m, offset + 3)?;
        return CmField::imaginary(m).map_err(|e| fail(offset + 3, e.to_string()));
    }
    if let Some(rest) = text.strip_prefix("biq:") {
        let at = offset + 4;
        let (d, j) = rest
            .split_once(',')
            .ok_or_else(|| fail(at + rest.len(), "expected ',' between d and j"))?;
        let j_at = at + d.len() + 1;
        let (dv, jv) = (integer(d, at)?, integer(j, j_at)?);
        return CmField::biquadratic(dv, jv).map_err(|e| {
            // blame j only once d is known good
            let pos = if dv > 1 && is_squarefree(dv) { j_at } else { at };
            fail(pos, e.to_string())
        });
    }
    if text.starts_with("prod:") {
        return Err(fail(offset, "products cannot be nested"));
    }
    Err(fail(offset, format!("expected 'iq:', 'biq:' or 'prod:', found {text:?}")))
}

pub fn parse_spec(text: &str) -> Result<CMAlgebraSpec, ParseError> {
    let lead = text.len() - text.trim_start().len();
    let body = text.trim();
    if body.is_empty() {
        return Err(fail(0, "empty spec"));
    }
    match body.strip_prefix("prod:") {
        Some(rest) => {
            let mut offset = lead + 5;
            let mut parts = Vec::new();
            for part in rest.split(';') {
                if part.is_empty() {
                    return Err(fail(offset, "empty component"));
                }
                parts.push(component(part, offset)?);
                offset += part.len() + 1;
            }
            CMAlgebraSpec::new(parts).map_err(|e| fail(lead, e.to_string()))
        }
        None => component(body, lead).map(CMAlgebraSpec::single),
    }
}

pub fn render_spec(spec: &CMAlgebraSpec) -> String {
    spec.to_string()
}
