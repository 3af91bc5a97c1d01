use std::io::Read;
use std::path::Path;

use rcassoc::{parse_counts, ContingencyTable, LinearConstraint, LogitType};

use crate::CliError;

pub fn read_text(path: &Path) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn read_counts(path: &Path) -> Result<ContingencyTable, CliError> {
    Ok(parse_counts(&read_text(path)?)?)
}

/// Rows of real numbers separated by commas or whitespace; `#` starts a
/// comment line.
pub fn read_matrix(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let text = read_text(path)?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    CliError::usage(format!(
                        "{}:{}: '{f}' is not a number",
                        path.display(),
                        lineno + 1
                    ))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    if let Some(first) = rows.first() {
        if rows.iter().any(|r| r.len() != first.len()) {
            return Err(CliError::usage(format!(
                "{}: rows have different lengths",
                path.display()
            )));
        }
    }
    Ok(rows)
}

/// All numbers of a file in reading order.
pub fn read_vector(path: &Path) -> Result<Vec<f64>, CliError> {
    Ok(read_matrix(path)?.into_iter().flatten().collect())
}

pub fn parse_constraints(names: &[String]) -> Result<Vec<LinearConstraint>, CliError> {
    names
        .iter()
        .flat_map(|n| n.split(','))
        .filter(|n| !n.trim().is_empty())
        .map(|n| n.parse::<LinearConstraint>().map_err(CliError::from))
        .collect()
}

/// `LL,GG,CC` style pair lists.
pub fn parse_pairs(list: &str) -> Result<Vec<(LogitType, LogitType)>, CliError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let chars: Vec<char> = s.chars().collect();
            if chars.len() != 2 {
                return Err(CliError::usage(format!(
                    "logit pair '{s}' should be two letters, e.g. GG"
                )));
            }
            Ok((
                chars[0].to_string().parse::<LogitType>()?,
                chars[1].to_string().parse::<LogitType>()?,
            ))
        })
        .collect()
}

/// `min:max:step` into the grid points, endpoints included.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::usage(format!("grid '{spec}' should be min:max:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if step.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
        || !lo.is_finite()
        || !hi.is_finite()
        || hi < lo
    {
        return Err(CliError::usage(format!(
            "grid '{spec}' needs min <= max and step > 0"
        )));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    // Rounding keeps points like -0.04 exact in the output.
    Ok((0..=n)
        .map(|k| ((lo + k as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// `4x4` into (rows, cols).
pub fn parse_size(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::usage(format!("size '{s}' should look like 4x4"));
    let (r, c) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let r: usize = r.trim().parse().map_err(|_| bad())?;
    let c: usize = c.trim().parse().map_err(|_| bad())?;
    if r < 2 || c < 2 {
        return Err(bad());
    }
    Ok((r, c))
}
