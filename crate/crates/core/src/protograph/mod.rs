//! Protographs, their circulant liftings and the codes built from them.

mod alist;
mod code;
mod encoder;
mod lift;

use std::fmt;

use crate::error::{Error, Result};

pub use alist::{parse_alist, write_alist};
pub use code::{build_repetition_baseline, LiftedCode, ParityCheck};
pub use encoder::{derive_encoder, Encoder};
pub use lift::{count_protograph_four_cycles, lift, lift_with, LiftOptions};

/// Base matrix of edge multiplicities between `rows` check nodes and
/// `cols` variable nodes. Parallel edges are allowed.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Protograph {
    rows: usize,
    cols: usize,
    entries: Vec<u32>,
}

impl Protograph {
    /// Builds a validated protograph from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<u32>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidProtograph("empty base matrix".into()));
        }
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} base matrix",
                entries.len()
            )));
        }
        let p = Protograph {
            rows,
            cols,
            entries,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_rows(rows: &[&[u32]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged base matrix".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    fn validate(&self) -> Result<()> {
        if let Some(i) = (0..self.rows).find(|&i| self.row_degree(i) == 0) {
            return Err(Error::InvalidProtograph(format!(
                "disconnected check node (row {i})"
            )));
        }
        if let Some(j) = (0..self.cols).find(|&j| self.col_degree(j) == 0) {
            return Err(Error::InvalidProtograph(format!(
                "disconnected variable node (column {j})"
            )));
        }
        if self.rows >= self.cols {
            return Err(Error::InvalidProtograph(format!(
                "non-positive design rate 1 - {}/{}",
                self.rows, self.cols
            )));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn row_degree(&self, i: usize) -> u32 {
        self.entries[i * self.cols..(i + 1) * self.cols].iter().sum()
    }

    pub fn col_degree(&self, j: usize) -> u32 {
        (0..self.rows).map(|i| self.get(i, j)).sum()
    }

    pub fn max_multiplicity(&self) -> u32 {
        self.entries.iter().copied().max().unwrap_or(0)
    }

    pub fn design_rate(&self) -> f64 {
        1.0 - self.rows as f64 / self.cols as f64
    }

    /// Total number of protograph edges, counting multiplicity.
    pub fn edge_count(&self) -> u32 {
        self.entries.iter().sum()
    }

    /// Protograph of the code obtained by sending every bit of `self` twice:
    /// `[[B, 0], [I, I]]`.
    pub fn repetition(&self) -> Protograph {
        let (r, c) = (self.rows, self.cols);
        let cols = 2 * c;
        let mut entries = vec![0; (r + c) * cols];
        for i in 0..r {
            for j in 0..c {
                entries[i * cols + j] = self.get(i, j);
            }
        }
        for j in 0..c {
            entries[(r + j) * cols + j] = 1;
            entries[(r + j) * cols + c + j] = 1;
        }
        Protograph {
            rows: r + c,
            cols,
            entries,
        }
    }

    /// Parses the text format: a `rows cols` header followed by one line of
    /// `cols` non-negative integers per row. Blank lines and `#` comments
    /// are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing `rows cols` header".into(),
        })?;
        let dims = parse_numbers(hline, header)?;
        let [rows, cols] = dims[..] else {
            return Err(Error::Parse {
                line: hline,
                msg: format!("header must hold 2 numbers, found {}", dims.len()),
            });
        };
        let (rows, cols) = (rows as usize, cols as usize);
        if rows == 0 || cols == 0 {
            return Err(Error::Parse {
                line: hline,
                msg: "rows and cols must be positive".into(),
            });
        }

        let mut entries = Vec::with_capacity(rows * cols);
        let mut last_line = hline;
        for r in 0..rows {
            let (ln, body) = lines.next().ok_or(Error::Parse {
                line: last_line + 1,
                msg: format!("expected {rows} rows, found {r}"),
            })?;
            let vals = parse_numbers(ln, body)?;
            if vals.len() != cols {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("expected {cols} entries, found {}", vals.len()),
                });
            }
            if vals.iter().all(|&v| v == 0) {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("disconnected check node (row {r})"),
                });
            }
            entries.extend(vals);
            last_line = ln;
        }
        if let Some((ln, _)) = lines.next() {
            return Err(Error::Parse {
                line: ln,
                msg: format!("trailing data after {rows} rows"),
            });
        }
        Protograph::new(rows, cols, entries).map_err(|e| match e {
            Error::InvalidProtograph(msg) => Error::Parse {
                line: last_line,
                msg,
            },
            e => e,
        })
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Protograph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Protograph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Protograph::parse(s)
    }
}

fn parse_numbers(line: usize, body: &str) -> Result<Vec<u32>> {
    body.split_whitespace()
        .map(|tok| {
            if tok.starts_with('-') && tok[1..].parse::<u64>().is_ok() {
                return Err(Error::Parse {
                    line,
                    msg: format!("negative entry {tok}"),
                });
            }
            tok.parse::<u32>().map_err(|_| Error::Parse {
                line,
                msg: format!("not a non-negative integer: {tok:?}"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_regular_36() {
        let p = Protograph::parse("1 2\n3 3").unwrap();
        assert_eq!((p.rows(), p.cols()), (1, 2));
        assert_eq!(p.entries(), &[3, 3]);
        assert_eq!(p.design_rate(), 0.5);
        assert_eq!(p.to_text().parse::<Protograph>().unwrap(), p);
    }

    #[test]
    fn rejects_disconnected_variable() {
        let err = Protograph::parse("3 4\n1 0 1 1\n1 0 2 1\n0 0 1 3\n").unwrap_err();
        assert!(err.to_string().contains("disconnected variable node"), "{err}");
        assert!(matches!(err, Error::Parse { line: 4, .. }));
    }

    #[test]
    fn rejects_zero_rate() {
        let err = Protograph::parse("2 2\n1 1\n1 1").unwrap_err();
        assert!(err.to_string().contains("non-positive design rate"), "{err}");
    }

    #[test]
    fn malformed_inputs_name_their_line() {
        let cases = [
            ("", 1),
            ("1 2 3\n1 1 1", 1),
            ("1 2\n3", 2),
            ("1 2\n3 -1", 2),
            ("2 3\n1 1 1", 3),
            ("1 3\n0 0 0", 2),
            ("1 2\n3 3\n1 1", 3),
            ("1 2\n\n# comment\n3 x", 4),
        ];
        for (text, line) in cases {
            match Protograph::parse(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        let neg = Protograph::parse("1 2\n3 -1").unwrap_err();
        assert!(neg.to_string().contains("negative"));
    }

    #[test]
    fn repetition_of_36_is_rate_quarter() {
        let p = Protograph::from_rows(&[&[3, 3]]).unwrap();
        let r = p.repetition();
        assert_eq!(r.rows(), 3);
        assert_eq!(r.cols(), 4);
        assert_eq!(r.entries(), &[3, 3, 0, 0, 1, 0, 1, 0, 0, 1, 0, 1]);
        assert_eq!(r.design_rate(), 0.25);
    }
}
