//! File ingestion and small format helpers for the CLI.
//!
//! Pair files are `x,y` CSV with an optional header (auto-detected); rows
//! that fail to parse are skipped and counted. Tick files are
//! `timestamp_ms,bid,ask` CSV, parsed strictly because a malformed quote is a
//! data defect rather than noise.

use anyhow::{anyhow, bail, Context, Result};
use corr_core::ticks::TickRecord;
use std::io::BufRead;

/// Splits a CSV line into at most `n` trimmed fields.
fn fields(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

fn parse_pair(line: &str) -> Option<(f64, f64)> {
    let f = fields(line);
    if f.len() != 2 {
        return None;
    }
    match (f[0].parse::<f64>(), f[1].parse::<f64>()) {
        // Non-finite values would poison a coefficient state; such rows are
        // as unusable as unparsable ones.
        (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => Some((x, y)),
        _ => None,
    }
}

/// Feeds every `x,y` row of `reader` to `sink`, skipping an optional header
/// and counting malformed rows. Returns the number of skipped rows.
pub fn for_each_pair<R: BufRead>(
    reader: R,
    mut sink: impl FnMut(f64, f64) -> Result<()>,
) -> Result<usize> {
    let mut skipped = 0usize;
    let mut first_data_line = true;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.with_context(|| format!("reading line {}", lineno + 1))?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_pair(&line) {
            Some((x, y)) => {
                first_data_line = false;
                sink(x, y)?;
            }
            None => {
                // The first unparsable line is treated as the header.
                if first_data_line {
                    first_data_line = false;
                } else {
                    skipped += 1;
                }
            }
        }
    }
    Ok(skipped)
}

/// Parses a strict `timestamp_ms,bid,ask` tick file (optional header).
pub fn parse_ticks<R: BufRead>(reader: R) -> Result<Vec<TickRecord>> {
    let mut ticks = Vec::new();
    let mut saw_any = false;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.with_context(|| format!("reading line {}", lineno + 1))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let f = fields(trimmed);
        if f.len() != 3 {
            bail!("line {}: expected `timestamp_ms,bid,ask`", lineno + 1);
        }
        let parsed = (
            f[0].parse::<u64>(),
            f[1].parse::<f64>(),
            f[2].parse::<f64>(),
        );
        match parsed {
            (Ok(ts), Ok(bid), Ok(ask)) => {
                saw_any = true;
                ticks.push(
                    TickRecord::new(ts, bid, ask)
                        .map_err(|e| anyhow!("line {}: {e}", lineno + 1))?,
                );
            }
            _ if !saw_any && lineno == 0 => continue, // header
            _ => bail!("line {}: malformed tick row", lineno + 1),
        }
    }
    Ok(ticks)
}

/// Parses an interval such as `60s`, `1m`, `2h`, or `500ms` into milliseconds.
pub fn parse_interval(text: &str) -> Result<u64> {
    let text = text.trim();
    let (digits, unit): (String, String) = {
        let idx = text
            .find(|c: char| !c.is_ascii_digit())
            .ok_or_else(|| anyhow!("interval `{text}` is missing a unit (ms, s, m, h)"))?;
        (text[..idx].to_string(), text[idx..].to_string())
    };
    let value: u64 = digits
        .parse()
        .with_context(|| format!("interval `{text}`"))?;
    let scale = match unit.as_str() {
        "ms" => 1,
        "s" => 1_000,
        "m" => 60_000,
        "h" => 3_600_000,
        other => bail!("unknown interval unit `{other}` (use ms, s, m, h)"),
    };
    let ms = value
        .checked_mul(scale)
        .ok_or_else(|| anyhow!("interval `{text}` overflows"))?;
    if ms == 0 {
        bail!("interval must be positive");
    }
    Ok(ms)
}
