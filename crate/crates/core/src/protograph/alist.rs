//! MacKay's alist sparse-matrix text format.
//!
//! ```text
//! n m
//! max_col_degree max_row_degree
//! col degrees (n values)
//! row degrees (m values)
//! n lines: 1-based row indices of each column, zero padded
//! m lines: 1-based column indices of each row, zero padded
//! ```

use std::fmt::Write as _;

use super::code::ParityCheck;
use crate::error::{Error, Result};

pub fn write_alist(h: &ParityCheck) -> String {
    let (n, m) = (h.n(), h.m());
    let max_col = (0..n).map(|j| h.col(j).len()).max().unwrap_or(0);
    let max_row = (0..m).map(|i| h.row(i).len()).max().unwrap_or(0);
    let mut out = String::new();
    let join = |v: &mut dyn Iterator<Item = usize>| {
        v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
    };
    let _ = writeln!(out, "{n} {m}");
    let _ = writeln!(out, "{max_col} {max_row}");
    let _ = writeln!(out, "{}", join(&mut (0..n).map(|j| h.col(j).len())));
    let _ = writeln!(out, "{}", join(&mut (0..m).map(|i| h.row(i).len())));
    for j in 0..n {
        let col = h.col(j);
        let _ = writeln!(
            out,
            "{}",
            join(&mut col.iter().map(|r| r + 1).chain(std::iter::repeat_n(0, max_col - col.len())))
        );
    }
    for i in 0..m {
        let row = h.row(i);
        let _ = writeln!(
            out,
            "{}",
            join(&mut row.iter().map(|c| c + 1).chain(std::iter::repeat_n(0, max_row - row.len())))
        );
    }
    out
}

pub fn parse_alist(text: &str) -> Result<ParityCheck> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut next = |what: &str| -> Result<(usize, Vec<usize>)> {
        let (ln, body) = lines.next().ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!("unexpected end of alist, expected {what}"),
        })?;
        let vals = body
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>().map_err(|_| Error::Parse {
                    line: ln,
                    msg: format!("not a non-negative integer: {t:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((ln, vals))
    };
    let expect_len = |ln: usize, v: &[usize], len: usize, what: &str| {
        if v.len() == len {
            Ok(())
        } else {
            Err(Error::Parse {
                line: ln,
                msg: format!("expected {len} {what}, found {}", v.len()),
            })
        }
    };

    let (ln, dims) = next("dimensions")?;
    expect_len(ln, &dims, 2, "dimensions")?;
    let (n, m) = (dims[0], dims[1]);
    let (ln, maxes) = next("maximum degrees")?;
    expect_len(ln, &maxes, 2, "maximum degrees")?;
    let (ln, col_deg) = next("column degrees")?;
    expect_len(ln, &col_deg, n, "column degrees")?;
    let (ln, row_deg) = next("row degrees")?;
    expect_len(ln, &row_deg, m, "row degrees")?;

    let mut col_lists = Vec::with_capacity(n);
    for (j, &deg) in col_deg.iter().enumerate() {
        let (ln, vals) = next("column list")?;
        let rows: Vec<usize> = vals.into_iter().filter(|&v| v != 0).collect();
        if rows.len() != deg || rows.iter().any(|&r| r > m) {
            return Err(Error::Parse {
                line: ln,
                msg: format!("column {} list does not match degree {deg}", j + 1),
            });
        }
        col_lists.push(rows);
    }
    let mut rows = Vec::with_capacity(m);
    for (i, &deg) in row_deg.iter().enumerate() {
        let (ln, vals) = next("row list")?;
        let cols: Vec<usize> = vals.into_iter().filter(|&v| v != 0).map(|c| c - 1).collect();
        if cols.len() != deg || cols.iter().any(|&c| c >= n) {
            return Err(Error::Parse {
                line: ln,
                msg: format!("row {} list does not match degree {deg}", i + 1),
            });
        }
        rows.push(cols);
    }
    let h = ParityCheck::from_rows(n, rows)?;
    for (j, list) in col_lists.iter().enumerate() {
        let mut expected: Vec<usize> = list.iter().map(|r| r - 1).collect();
        expected.sort_unstable();
        if expected != h.col(j) {
            return Err(Error::Parse {
                line: 0,
                msg: format!("column {} disagrees with row lists", j + 1),
            });
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_small() {
        let h = ParityCheck::from_dense(&[&[1, 1, 0, 1], &[0, 1, 1, 0]]).unwrap();
        let text = write_alist(&h);
        assert!(text.starts_with("4 2\n2 3\n1 2 1 1\n3 2\n"));
        assert_eq!(parse_alist(&text).unwrap(), h);
    }

    #[test]
    fn inconsistent_lists_are_rejected() {
        let text = "2 1\n1 2\n1 1\n2\n1\n1\n1 2\n";
        assert!(parse_alist(text).is_ok());
        let bad = "2 1\n1 2\n1 1\n2\n1\n0\n1 2\n";
        assert!(parse_alist(bad).is_err());
    }
}
