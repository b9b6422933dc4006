//! Index domains: which coefficients `(k, j)` the method is allowed to read.

use std::collections::BTreeSet;
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};

/// A finite set of index pairs `(k, j)`.
///
/// * `Cross { r, n }` — the hyperbolic cross `{(k,j): k j <= r n - 1, r <= k, j <= n - 1}`.
/// * `Square { r, n }` — the full square `[r, n] x [r, n]`.
/// * `Explicit` — any user-supplied set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndexDomain {
    Cross { r: usize, n: usize },
    Square { r: usize, n: usize },
    Explicit(BTreeSet<(usize, usize)>),
}

fn check_sizes(r: usize, n: usize) -> Result<()> {
    if n <= r {
        return Err(Error::Domain(format!(
            "size parameter n = {n} must exceed the derivative order r = {r}"
        )));
    }
    Ok(())
}

impl IndexDomain {
    pub fn cross(r: usize, n: usize) -> Result<Self> {
        check_sizes(r, n)?;
        Ok(Self::Cross { r, n })
    }

    pub fn square(r: usize, n: usize) -> Result<Self> {
        check_sizes(r, n)?;
        Ok(Self::Square { r, n })
    }

    pub fn explicit<I: IntoIterator<Item = (usize, usize)>>(pairs: I) -> Self {
        Self::Explicit(pairs.into_iter().collect())
    }

    /// Largest `j` admitted in row `k` of the cross, or `None` if the row is empty.
    fn cross_row_end(r: usize, n: usize, k: usize) -> Option<usize> {
        if k < r || k >= n || k == 0 {
            return None;
        }
        let budget = (r * n).checked_sub(1)?;
        let end = (budget / k).min(n - 1);
        (end >= r).then_some(end)
    }

    pub fn contains(&self, k: usize, j: usize) -> bool {
        match self {
            Self::Cross { r, n } => {
                Self::cross_row_end(*r, *n, k).is_some_and(|end| j >= *r && j <= end)
            }
            Self::Square { r, n } => (*r..=*n).contains(&k) && (*r..=*n).contains(&j),
            Self::Explicit(set) => set.contains(&(k, j)),
        }
    }

    /// Members in lexicographic `(k, j)` order.
    pub fn members(&self) -> Vec<(usize, usize)> {
        match self {
            Self::Cross { r, n } => {
                let mut out = Vec::new();
                for k in *r..*n {
                    if let Some(end) = Self::cross_row_end(*r, *n, k) {
                        out.extend((*r..=end).map(|j| (k, j)));
                    }
                }
                out
            }
            Self::Square { r, n } => (*r..=*n)
                .flat_map(|k| (*r..=*n).map(move |j| (k, j)))
                .collect(),
            Self::Explicit(set) => set.iter().copied().collect(),
        }
    }

    /// Number of members, computed without enumerating for the structured shapes.
    pub fn cardinality(&self) -> usize {
        match self {
            Self::Cross { r, n } => (*r..*n)
                .filter_map(|k| Self::cross_row_end(*r, *n, k).map(|end| end + 1 - r))
                .sum(),
            Self::Square { r, n } => (n - r + 1) * (n - r + 1),
            Self::Explicit(set) => set.len(),
        }
    }

    /// Largest `k` and largest `j` over the members (`(0, 0)` when empty).
    pub fn degree_bounds(&self) -> (usize, usize) {
        match self {
            Self::Cross { r, n } => {
                if self.cardinality() == 0 {
                    (0, 0)
                } else {
                    // The cross is symmetric and row r is the longest.
                    let end = Self::cross_row_end(*r, *n, *r).unwrap_or(0);
                    (end, end)
                }
            }
            Self::Square { n, .. } => (*n, *n),
            Self::Explicit(set) => set
                .iter()
                .fold((0, 0), |(a, b), &(k, j)| (a.max(k), b.max(j))),
        }
    }

    /// Reads an explicit domain from `k,j` lines. A non-numeric first line is
    /// treated as a header; blank lines are skipped.
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if lineno == 1 && fields[0].parse::<f64>().is_err() {
                continue;
            }
            if fields.len() != 2 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected 2 fields, found {}", fields.len()),
                });
            }
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|e| Error::Parse {
                    line: lineno,
                    msg: format!("bad index {s:?}: {e}"),
                })
            };
            let pair = (parse(fields[0])?, parse(fields[1])?);
            if !set.insert(pair) {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("duplicate index pair {pair:?}"),
                });
            }
        }
        Ok(Self::Explicit(set))
    }

    pub fn load_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}
