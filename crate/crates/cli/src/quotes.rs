//! Market quote CSV parsing with line-numbered errors.
//!
//! Expected header:
//! `strike,maturity,observable_type,observable,option_type,volume,open_interest`
//! with `observable_type` in {price, iv}, `option_type` in {call, put}, and
//! the last two columns optionally empty.

use std::path::Path;

use carma_hawkes::{MarketQuote, Observable, OptionKind};

use crate::CliError;

const HEADER: &str = "strike,maturity,observable_type,observable,option_type,volume,open_interest";

pub fn read_quotes(path: &Path) -> Result<Vec<MarketQuote>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read quotes {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == HEADER => {}
        Some((_, header)) => {
            return Err(CliError::usage(format!(
                "{}: line 1: expected header {HEADER:?}, got {:?}",
                path.display(),
                header.trim()
            )))
        }
        None => return Err(CliError::usage(format!("{}: empty file", path.display()))),
    }

    let mut quotes = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 7 {
            return Err(CliError::usage(format!(
                "{}: line {line_no}: expected 7 fields, got {}",
                path.display(),
                fields.len()
            )));
        }
        let parse_f64 = |s: &str, what: &str| -> Result<f64, CliError> {
            s.parse().map_err(|_| {
                CliError::usage(format!(
                    "{}: line {line_no}: bad {what} {s:?}",
                    path.display()
                ))
            })
        };
        let strike = parse_f64(fields[0], "strike")?;
        let maturity = parse_f64(fields[1], "maturity")?;
        let value = parse_f64(fields[3], "observable")?;
        let observable = match fields[2] {
            "price" => Observable::Price(value),
            "iv" => Observable::Vol(value),
            other => {
                return Err(CliError::usage(format!(
                    "{}: line {line_no}: observable_type must be price or iv, got {other:?}",
                    path.display()
                )))
            }
        };
        let option_type = match fields[4] {
            "call" => OptionKind::Call,
            "put" => OptionKind::Put,
            other => {
                return Err(CliError::usage(format!(
                    "{}: line {line_no}: option_type must be call or put, got {other:?}",
                    path.display()
                )))
            }
        };
        let parse_count = |s: &str, what: &str| -> Result<Option<u64>, CliError> {
            if s.is_empty() {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|_| {
                CliError::usage(format!(
                    "{}: line {line_no}: bad {what} {s:?}",
                    path.display()
                ))
            })
        };
        quotes.push(MarketQuote {
            strike,
            maturity,
            observable,
            option_type,
            volume: parse_count(fields[5], "volume")?,
            open_interest: parse_count(fields[6], "open_interest")?,
        });
    }
    if quotes.is_empty() {
        return Err(CliError::usage(format!(
            "{}: no quote rows",
            path.display()
        )));
    }
    Ok(quotes)
}
