//! Plain-text design and response files.
//!
//! A design file starts with a line `n p`, followed by `n` rows of `p`
//! numbers separated by whitespace or commas. A response file holds one
//! value per line. Blank lines and lines starting with `#` are skipped.

use std::fs;
use std::path::Path;

use covtest_core::{ColumnScaling, DesignMatrix, Response};

use crate::error::{CliError, Result};

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
}

fn number(tok: &str, what: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| CliError::Input(format!("{what}, line {line}: `{tok}` is not a number")))?;
    if !v.is_finite() {
        return Err(CliError::Input(format!(
            "{what}, line {line}: non-finite value `{tok}`"
        )));
    }
    Ok(v)
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn parse_design(text: &str, name: &str, scaling: ColumnScaling) -> Result<DesignMatrix> {
    let mut lines = content_lines(text);
    let (hl, header) = lines
        .next()
        .ok_or_else(|| CliError::Input(format!("{name}: empty file")))?;
    let dims: Vec<&str> = fields(header).collect();
    let parse_dim = |s: &str| {
        s.parse::<usize>().map_err(|_| {
            CliError::Input(format!(
                "{name}, line {hl}: header must be `n p`, got `{header}`"
            ))
        })
    };
    if dims.len() != 2 {
        return Err(CliError::Input(format!(
            "{name}, line {hl}: header must be `n p`, got `{header}`"
        )));
    }
    let (n, p) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
    let mut values = Vec::with_capacity(n * p);
    let mut rows = 0;
    for (ln, line) in lines {
        let row: Vec<f64> = fields(line)
            .map(|t| number(t, name, ln))
            .collect::<Result<_>>()?;
        if row.len() != p {
            return Err(CliError::Input(format!(
                "{name}, line {ln}: expected {p} values, found {}",
                row.len()
            )));
        }
        rows += 1;
        if rows > n {
            return Err(CliError::Input(format!(
                "{name}, line {ln}: more than the declared {n} rows"
            )));
        }
        values.extend(row);
    }
    if rows != n {
        return Err(CliError::Input(format!(
            "{name}: declared {n} rows, found {rows}"
        )));
    }
    Ok(DesignMatrix::from_row_major(n, p, &values, scaling)?)
}

pub fn parse_response(text: &str, name: &str) -> Result<Response> {
    let mut y = Vec::new();
    for (ln, line) in content_lines(text) {
        let toks: Vec<&str> = fields(line).collect();
        if toks.len() != 1 {
            return Err(CliError::Input(format!(
                "{name}, line {ln}: expected one value, found {}",
                toks.len()
            )));
        }
        y.push(number(toks[0], name, ln)?);
    }
    if y.is_empty() {
        return Err(CliError::Input(format!("{name}: no values")));
    }
    Ok(Response::new(y)?)
}
