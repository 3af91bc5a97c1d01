//! Two-way contingency tables, logit types and the event classes from which
//! marginal logits, log-odds ratios and scaled interactions are built.
//!
//! Cut points and category indices are 1-based throughout the public API:
//! a variable with `I` categories has cut points `1..=I-1`, and cut `x`
//! separates categories at or below `x` from those above it.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when validating that probabilities sum to one.
pub const PROB_TOL: f64 = 1e-12;

/// The four logit types for an ordinal variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LogitType {
    /// Local: adjacent categories.
    L,
    /// Global: categories up to the cut against those above.
    G,
    /// Continuation: the category at the cut against all above.
    C,
    /// Reverse continuation: the category after the cut against all below.
    R,
}

impl LogitType {
    pub const ALL: [LogitType; 4] = [LogitType::L, LogitType::G, LogitType::C, LogitType::R];

    /// All 16 ordered (row, column) pairs.
    pub fn all_pairs() -> impl Iterator<Item = (LogitType, LogitType)> {
        Self::ALL
            .into_iter()
            .flat_map(|a| Self::ALL.into_iter().map(move |b| (a, b)))
    }

    pub fn as_char(self) -> char {
        match self {
            LogitType::L => 'L',
            LogitType::G => 'G',
            LogitType::C => 'C',
            LogitType::R => 'R',
        }
    }
}

impl fmt::Display for LogitType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for LogitType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "L" | "LOCAL" => Ok(LogitType::L),
            "G" | "GLOBAL" => Ok(LogitType::G),
            "C" | "CONTINUATION" => Ok(LogitType::C),
            "R" | "REVERSE" => Ok(LogitType::R),
            other => Err(Error::Spec(format!("unknown logit type '{other}'"))),
        }
    }
}

/// Which of the two events defined by a cut point: `Low` is the `b = 0`
/// event, `High` the `b = 1` event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Low,
    High,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Low, Side::High];

    pub fn from_bit(b: u8) -> Side {
        if b == 0 {
            Side::Low
        } else {
            Side::High
        }
    }
}

/// A contiguous, nonempty set of 1-based category indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventSet {
    first: usize,
    last: usize,
}

impl EventSet {
    pub fn first(&self) -> usize {
        self.first
    }

    pub fn last(&self) -> usize {
        self.last
    }

    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, index: usize) -> bool {
        (self.first..=self.last).contains(&index)
    }

    /// 1-based indices in ascending order.
    pub fn indices(&self) -> impl Iterator<Item = usize> {
        self.first..=self.last
    }

    /// Zero-based half-open range, for indexing storage.
    pub(crate) fn range0(&self) -> std::ops::Range<usize> {
        self.first - 1..self.last
    }

    pub fn is_disjoint(&self, other: &EventSet) -> bool {
        self.last < other.first || other.last < self.first
    }
}

fn check_cut(x: usize, size: usize) -> Result<()> {
    if x == 0 || x >= size {
        return Err(Error::CutOutOfRange {
            cut: x,
            max: size.saturating_sub(1),
        });
    }
    Ok(())
}

/// The event `E(x, b, l)` for a variable with `size` categories.
pub fn event_set(x: usize, side: Side, logit: LogitType, size: usize) -> Result<EventSet> {
    check_cut(x, size)?;
    let set = match (side, logit) {
        (Side::Low, LogitType::L | LogitType::C) => EventSet { first: x, last: x },
        (Side::Low, LogitType::G | LogitType::R) => EventSet { first: 1, last: x },
        (Side::High, LogitType::L | LogitType::R) => EventSet {
            first: x + 1,
            last: x + 1,
        },
        (Side::High, LogitType::G | LogitType::C) => EventSet {
            first: x + 1,
            last: size,
        },
    };
    Ok(set)
}

/// Probability that a variable with marginal `margin` falls in `E(x, b, l)`.
pub fn marginal_event_prob(margin: &[f64], x: usize, side: Side, logit: LogitType) -> Result<f64> {
    let set = event_set(x, side, logit, margin.len())?;
    Ok(margin[set.range0()].iter().sum())
}

/// Observed or model-based two-way table of an `I1 x I2` cross-classification.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    counts: Option<DMatrix<f64>>,
    n: f64,
    pi: DMatrix<f64>,
    pi_row: DVector<f64>,
    pi_col: DVector<f64>,
}

impl ContingencyTable {
    /// Builds a table from nonnegative integer counts given row by row.
    pub fn from_counts(rows: usize, cols: usize, counts: &[u64]) -> Result<Self> {
        check_shape(rows, cols)?;
        if counts.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "expected {} counts for a {rows}x{cols} table, got {}",
                rows * cols,
                counts.len()
            )));
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::Domain("table has zero total count".into()));
        }
        let counts = DMatrix::from_row_iterator(rows, cols, counts.iter().map(|&c| c as f64));
        let n = total as f64;
        let pi = &counts / n;
        let mut table = Self::from_parts(pi);
        table.counts = Some(counts);
        table.n = n;
        Ok(table)
    }

    /// Wraps a probability matrix that must already sum to one.
    pub fn from_probs(pi: DMatrix<f64>) -> Result<Self> {
        check_shape(pi.nrows(), pi.ncols())?;
        if pi
            .iter()
            .any(|&p| !(0.0..=1.0).contains(&p) || !p.is_finite())
        {
            return Err(Error::Domain("probabilities must lie in [0, 1]".into()));
        }
        let total = pi.sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::Domain(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self::from_parts(pi))
    }

    /// Rescales nonnegative weights (e.g. a table printed to four decimals)
    /// so that they sum to one.
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        check_shape(weights.nrows(), weights.ncols())?;
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::Domain(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total = weights.sum();
        if total <= 0.0 {
            return Err(Error::Domain("weights sum to zero".into()));
        }
        Ok(Self::from_parts(weights / total))
    }

    fn from_parts(pi: DMatrix<f64>) -> Self {
        let pi_row = DVector::from_iterator(pi.nrows(), pi.row_iter().map(|r| r.sum()));
        let pi_col = DVector::from_iterator(pi.ncols(), pi.column_iter().map(|c| c.sum()));
        Self {
            counts: None,
            n: 1.0,
            pi,
            pi_row,
            pi_col,
        }
    }

    pub fn rows(&self) -> usize {
        self.pi.nrows()
    }

    pub fn cols(&self) -> usize {
        self.pi.ncols()
    }

    /// Total count, or 1 for tables built from probabilities.
    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn counts(&self) -> Option<&DMatrix<f64>> {
        self.counts.as_ref()
    }

    pub fn pi(&self) -> &DMatrix<f64> {
        &self.pi
    }

    pub fn pi_row(&self) -> &DVector<f64> {
        &self.pi_row
    }

    pub fn pi_col(&self) -> &DVector<f64> {
        &self.pi_col
    }

    /// Cell probabilities with the column index running fastest.
    pub fn pi_vec(&self) -> Vec<f64> {
        self.pi.transpose().iter().copied().collect()
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.pi.iter().all(|&p| p > 0.0)
    }

    /// `p(i, j; u, v; l1, l2)`: mass of the rectangle formed by the row and
    /// column events at cuts `(i, j)`.
    pub fn quadrant_prob(
        &self,
        i: usize,
        j: usize,
        u: Side,
        v: Side,
        l1: LogitType,
        l2: LogitType,
    ) -> Result<f64> {
        let a = event_set(i, u, l1, self.rows())?;
        let b = event_set(j, v, l2, self.cols())?;
        Ok(self
            .pi
            .view((a.first() - 1, b.first() - 1), (a.len(), b.len()))
            .sum())
    }

    /// Row-marginal event probability `p1(i; u; l)`.
    pub fn row_event_prob(&self, i: usize, u: Side, l: LogitType) -> Result<f64> {
        marginal_event_prob(self.pi_row.as_slice(), i, u, l)
    }

    /// Column-marginal event probability `p2(j; v; l)`.
    pub fn col_event_prob(&self, j: usize, v: Side, l: LogitType) -> Result<f64> {
        marginal_event_prob(self.pi_col.as_slice(), j, v, l)
    }

    /// The same table with the row categories in reverse order.
    pub fn row_reversed(&self) -> Self {
        let r = self.rows();
        let pi = DMatrix::from_fn(r, self.cols(), |i, j| self.pi[(r - 1 - i, j)]);
        let counts = self
            .counts
            .as_ref()
            .map(|c| DMatrix::from_fn(r, self.cols(), |i, j| c[(r - 1 - i, j)]));
        let mut t = Self::from_parts(pi);
        t.counts = counts;
        t.n = self.n;
        t
    }

    /// The transposed table (rows become columns).
    pub fn transposed(&self) -> Self {
        let mut t = Self::from_parts(self.pi.transpose());
        t.counts = self.counts.as_ref().map(|c| c.transpose());
        t.n = self.n;
        t
    }

    /// Independence table with the same margins.
    pub fn independence(&self) -> Self {
        Self::from_parts(&self.pi_row * self.pi_col.transpose())
    }
}

fn check_shape(rows: usize, cols: usize) -> Result<()> {
    if rows < 2 || cols < 2 {
        return Err(Error::Dimension(format!(
            "a contingency table needs at least 2 rows and 2 columns, got {rows}x{cols}"
        )));
    }
    Ok(())
}

/// Parses a delimited counts file: one table row per line, fields separated
/// by commas and/or whitespace. A first line containing any non-numeric
/// field is treated as a header. Blank lines and lines starting with `#`
/// are skipped.
pub fn parse_counts(text: &str) -> Result<ContingencyTable> {
    let mut rows: Vec<Vec<u64>> = Vec::new();
    let mut seen_data = false;
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields = split_fields(line);
        let parsed: Vec<std::result::Result<u64, (usize, String)>> = fields
            .iter()
            .map(|&(col, f)| {
                f.parse::<u64>()
                    .map_err(|_| (col, format!("'{f}' is not a nonnegative integer")))
            })
            .collect();
        if !seen_data {
            seen_data = true;
            // A header has at least one field that is not a number at all.
            if fields.iter().any(|(_, f)| f.parse::<f64>().is_err()) {
                continue;
            }
        }
        let mut row = Vec::with_capacity(parsed.len());
        for p in parsed {
            match p {
                Ok(v) => row.push(v),
                Err((column, message)) => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        column,
                        message,
                    })
                }
            }
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    column: 1,
                    message: format!("expected {} fields, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    let flat: Vec<u64> = rows.into_iter().flatten().collect();
    ContingencyTable::from_counts(nrows, ncols, &flat)
}

/// Splits a line on commas and whitespace, returning 1-based column offsets.
fn split_fields(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (pos, ch) in line.char_indices() {
        let sep = ch == ',' || ch.is_whitespace();
        match (sep, start) {
            (true, Some(s)) => {
                out.push((s + 1, &line[s..pos]));
                start = None;
            }
            (false, None) => start = Some(pos),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}
