use std::collections::HashSet;

use super::encoder::{derive_encoder, Encoder};
use crate::error::{Error, Result};

/// Sparse binary parity-check matrix with adjacency kept both ways.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParityCheck {
    n: usize,
    row_cols: Vec<Vec<usize>>,
    col_rows: Vec<Vec<usize>>,
}

impl ParityCheck {
    /// Builds H from the column support of each row. Duplicate entries in a
    /// row cancel over GF(2).
    pub fn from_rows(n: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        let mut row_cols = Vec::with_capacity(rows.len());
        for (i, mut r) in rows.into_iter().enumerate() {
            if let Some(&c) = r.iter().find(|&&c| c >= n) {
                return Err(Error::Dimension(format!(
                    "row {i} references column {c} of {n}"
                )));
            }
            r.sort_unstable();
            let mut reduced: Vec<usize> = Vec::with_capacity(r.len());
            for c in r {
                if reduced.last() == Some(&c) {
                    reduced.pop();
                } else {
                    reduced.push(c);
                }
            }
            row_cols.push(reduced);
        }
        let mut col_rows = vec![Vec::new(); n];
        for (i, r) in row_cols.iter().enumerate() {
            for &c in r {
                col_rows[c].push(i);
            }
        }
        Ok(ParityCheck {
            n,
            row_cols,
            col_rows,
        })
    }

    pub fn from_dense(rows: &[&[u8]]) -> Result<Self> {
        let n = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("ragged matrix".into()));
        }
        let sparse = rows
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, &b)| b & 1 == 1).map(|(c, _)| c).collect())
            .collect();
        Self::from_rows(n, sparse)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_rows(n, (0..n).map(|i| vec![i]).collect()).expect("identity is well formed")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.row_cols.len()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.row_cols[i]
    }

    pub fn col(&self, j: usize) -> &[usize] {
        &self.col_rows[j]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.row_cols
    }

    pub fn edge_count(&self) -> usize {
        self.row_cols.iter().map(Vec::len).sum()
    }

    pub fn is_codeword(&self, word: &[u8]) -> bool {
        word.len() == self.n
            && self
                .row_cols
                .iter()
                .all(|r| r.iter().fold(0u8, |acc, &c| acc ^ (word[c] & 1)) == 0)
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        self.row_cols
            .iter()
            .map(|r| {
                let mut d = vec![0u8; self.n];
                r.iter().for_each(|&c| d[c] = 1);
                d
            })
            .collect()
    }

    /// Number of 4-cycles, i.e. unordered column pairs sharing two checks,
    /// counted once per extra shared check.
    pub fn count_four_cycles(&self) -> usize {
        let mut seen: HashSet<(usize, usize)> = HashSet::new();
        let mut cycles = 0;
        for r in &self.row_cols {
            for (a, &u) in r.iter().enumerate() {
                for &v in &r[a + 1..] {
                    if !seen.insert((u, v)) {
                        cycles += 1;
                    }
                }
            }
        }
        cycles
    }
}

/// A binary LDPC code: its sparse parity-check matrix, a systematic encoder
/// and, for lifted codes, the protograph column of every bit.
#[derive(Clone, Debug)]
pub struct LiftedCode {
    h: ParityCheck,
    encoder: Encoder,
    proto_col: Option<Vec<usize>>,
}

impl LiftedCode {
    pub fn from_parity_check(h: ParityCheck) -> Result<Self> {
        let encoder = derive_encoder(&h)?;
        Ok(LiftedCode {
            h,
            encoder,
            proto_col: None,
        })
    }

    pub(crate) fn with_proto_cols(h: ParityCheck, proto_col: Vec<usize>) -> Result<Self> {
        let mut code = Self::from_parity_check(h)?;
        code.proto_col = Some(proto_col);
        Ok(code)
    }

    pub fn h(&self) -> &ParityCheck {
        &self.h
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn n(&self) -> usize {
        self.h.n()
    }

    pub fn m(&self) -> usize {
        self.h.m()
    }

    pub fn k(&self) -> usize {
        self.encoder.k()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    pub fn proto_col(&self) -> Option<&[usize]> {
        self.proto_col.as_deref()
    }

    pub fn encode(&self, info: &[u8]) -> Vec<u8> {
        self.encoder.encode(info)
    }

    pub fn is_codeword(&self, word: &[u8]) -> bool {
        self.h.is_codeword(word)
    }
}

/// Composite code `[[H_inner, 0], [I, I]]` whose codewords are `(c, c)` for
/// every inner codeword `c`.
pub fn build_repetition_baseline(inner: &ParityCheck) -> Result<LiftedCode> {
    let half = inner.n();
    if inner.m() >= half {
        return Err(Error::Dimension(format!(
            "inner code is {}x{half}, needs fewer checks than bits",
            inner.m()
        )));
    }
    let mut rows: Vec<Vec<usize>> = inner.rows().to_vec();
    rows.extend((0..half).map(|i| vec![i, half + i]));
    let h = ParityCheck::from_rows(2 * half, rows)?;
    LiftedCode::from_parity_check(h)
}

pub(crate) fn repetition_proto_cols(inner: &LiftedCode, inner_cols: usize) -> Option<Vec<usize>> {
    inner.proto_col().map(|pc| {
        pc.iter()
            .copied()
            .chain(pc.iter().map(|&c| c + inner_cols))
            .collect()
    })
}

impl LiftedCode {
    /// Repetition baseline of a lifted inner code, keeping protograph columns
    /// aligned with [`super::Protograph::repetition`].
    pub fn repetition_of(inner: &LiftedCode, inner_cols: usize) -> Result<LiftedCode> {
        let mut code = build_repetition_baseline(inner.h())?;
        code.proto_col = repetition_proto_cols(inner, inner_cols);
        Ok(code)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_entries_cancel() {
        let h = ParityCheck::from_rows(3, vec![vec![0, 1, 1, 2]]).unwrap();
        assert_eq!(h.row(0), &[0, 2]);
        assert_eq!(h.col(1), &[] as &[usize]);
    }

    #[test]
    fn four_cycle_count() {
        let h = ParityCheck::from_dense(&[&[1, 1, 0], &[1, 1, 1], &[0, 1, 1]]).unwrap();
        // pairs (0,1) and (1,2) each share two rows
        assert_eq!(h.count_four_cycles(), 2);
    }

    #[test]
    fn repetition_codewords_are_doubled() {
        let inner = ParityCheck::from_dense(&[&[1, 1, 0, 0], &[0, 1, 1, 1]]).unwrap();
        let code = build_repetition_baseline(&inner).unwrap();
        assert_eq!((code.n(), code.k()), (8, 2));
        for u in 0..4u8 {
            let c = code.encode(&[u & 1, u >> 1]);
            assert!(code.is_codeword(&c));
            assert_eq!(c[..4], c[4..]);
            assert!(inner.is_codeword(&c[..4]));
        }
    }

    #[test]
    fn repetition_rejects_square_inner() {
        assert!(build_repetition_baseline(&ParityCheck::identity(3)).is_err());
    }
}
