use super::code::ParityCheck;
use crate::error::{Error, Result};

/// Systematic encoder obtained by Gaussian elimination of H over GF(2).
///
/// Information bits land on `info_cols` unchanged; every pivot column holds
/// the parity of a fixed subset of information bits.
#[derive(Clone, Debug)]
pub struct Encoder {
    n: usize,
    info_cols: Vec<usize>,
    pivot_cols: Vec<usize>,
    // one bitset over the k information bits per pivot column
    parity: Vec<Vec<u64>>,
}

impl Encoder {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.info_cols.len()
    }

    pub fn rank(&self) -> usize {
        self.pivot_cols.len()
    }

    pub fn info_cols(&self) -> &[usize] {
        &self.info_cols
    }

    pub fn pivot_cols(&self) -> &[usize] {
        &self.pivot_cols
    }

    /// Encodes `k` information bits (values 0/1).
    ///
    /// Panics if `info.len() != k`.
    pub fn encode(&self, info: &[u8]) -> Vec<u8> {
        let mut word = vec![0u8; self.n];
        self.encode_into(info, &mut word);
        word
    }

    pub fn encode_into(&self, info: &[u8], word: &mut [u8]) {
        assert_eq!(info.len(), self.k(), "information length");
        assert_eq!(word.len(), self.n, "codeword length");
        let mut packed = vec![0u64; self.k().div_ceil(64)];
        for (i, &b) in info.iter().enumerate() {
            word[self.info_cols[i]] = b & 1;
            packed[i / 64] |= u64::from(b & 1) << (i % 64);
        }
        for (p, row) in self.pivot_cols.iter().zip(&self.parity) {
            let ones: u32 = row.iter().zip(&packed).map(|(a, b)| (a & b).count_ones()).sum();
            word[*p] = (ones & 1) as u8;
        }
    }

    /// Information bits of a codeword.
    pub fn extract(&self, word: &[u8]) -> Vec<u8> {
        self.info_cols.iter().map(|&c| word[c]).collect()
    }
}

/// Reduces H to reduced row echelon form and records the pivot columns.
/// Rank deficiency is fine and only raises `k`; a code with `k = 0` is
/// rejected.
pub fn derive_encoder(h: &ParityCheck) -> Result<Encoder> {
    let n = h.n();
    let words = n.div_ceil(64);
    let mut rows: Vec<Vec<u64>> = h
        .rows()
        .iter()
        .map(|r| {
            let mut bits = vec![0u64; words];
            r.iter().for_each(|&c| bits[c / 64] ^= 1 << (c % 64));
            bits
        })
        .collect();

    let bit = |row: &[u64], c: usize| (row[c / 64] >> (c % 64)) & 1 == 1;
    let mut pivot_cols = Vec::new();
    let mut rank = 0;
    for c in 0..n {
        let Some(p) = (rank..rows.len()).find(|&r| bit(&rows[r], c)) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && bit(row, c) {
                row.iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
            }
        }
        pivot_cols.push(c);
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }

    let mut is_pivot = vec![false; n];
    pivot_cols.iter().for_each(|&c| is_pivot[c] = true);
    let info_cols: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
    if info_cols.is_empty() {
        return Err(Error::ZeroRate);
    }
    let k = info_cols.len();
    let parity = rows[..rank]
        .iter()
        .map(|row| {
            let mut bits = vec![0u64; k.div_ceil(64)];
            for (i, &c) in info_cols.iter().enumerate() {
                if bit(row, c) {
                    bits[i / 64] |= 1 << (i % 64);
                }
            }
            bits
        })
        .collect();

    Ok(Encoder {
        n,
        info_cols,
        pivot_cols,
        parity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_check_is_repetition() {
        let h = ParityCheck::from_dense(&[&[1, 1]]).unwrap();
        let enc = derive_encoder(&h).unwrap();
        assert_eq!(enc.k(), 1);
        assert_eq!(enc.encode(&[0]), vec![0, 0]);
        assert_eq!(enc.encode(&[1]), vec![1, 1]);
    }

    #[test]
    fn identity_has_zero_rate() {
        let h = ParityCheck::identity(4);
        assert!(matches!(derive_encoder(&h), Err(Error::ZeroRate)));
    }

    #[test]
    fn rank_deficiency_raises_dimension() {
        // third row is the sum of the first two
        let h = ParityCheck::from_dense(&[&[1, 1, 0, 0], &[0, 1, 1, 0], &[1, 0, 1, 0]]).unwrap();
        let enc = derive_encoder(&h).unwrap();
        assert_eq!((enc.rank(), enc.k()), (2, 2));
    }

    #[test]
    fn hamming_code_exhaustive() {
        let h = ParityCheck::from_dense(&[
            &[1, 1, 0, 1, 1, 0, 0],
            &[1, 0, 1, 1, 0, 1, 0],
            &[0, 1, 1, 1, 0, 0, 1],
        ])
        .unwrap();
        let enc = derive_encoder(&h).unwrap();
        assert_eq!(enc.k(), 4);
        let mut words = std::collections::HashSet::new();
        for u in 0..16u8 {
            let info: Vec<u8> = (0..4).map(|i| (u >> i) & 1).collect();
            let c = enc.encode(&info);
            assert!(h.is_codeword(&c));
            assert_eq!(enc.extract(&c), info);
            words.insert(c);
        }
        assert_eq!(words.len(), 16);
    }
}
