use rand::seq::index::sample;
use rand::Rng;

use super::code::{LiftedCode, ParityCheck};
use super::Protograph;
use crate::error::{Error, Result};
use crate::rng;

/// Retry budget for circulant lifting.
#[derive(Clone, Copy, Debug)]
pub struct LiftOptions {
    /// Fresh shift assignments tried before accepting the best one seen.
    pub max_attempts: usize,
    /// Single-edge resamplings per attempt while 4-cycles remain.
    pub repair_steps: usize,
}

impl Default for LiftOptions {
    fn default() -> Self {
        LiftOptions {
            max_attempts: 32,
            repair_steps: 400,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Edge {
    row: usize,
    col: usize,
    shift: usize,
}

/// Lifts `p` by a factor `z`: a multiplicity-`e` entry becomes the sum of
/// `e` circulant permutation matrices with distinct shifts. Shifts are
/// resampled until the Tanner graph has no 4-cycles or the retry budget
/// runs out, in which case the assignment with the fewest 4-cycles is kept.
pub fn lift(p: &Protograph, z: usize, seed: u64) -> Result<LiftedCode> {
    lift_with(p, z, seed, &LiftOptions::default())
}

pub fn lift_with(p: &Protograph, z: usize, seed: u64, opts: &LiftOptions) -> Result<LiftedCode> {
    if z == 0 {
        return Err(Error::Lift("lifting factor must be at least 1".into()));
    }
    if p.max_multiplicity() as usize > z {
        return Err(Error::Lift(format!(
            "multiplicity {} exceeds lifting factor {z}",
            p.max_multiplicity()
        )));
    }

    let mut rng = rng::stream(seed, &[0x6c69_6674]);
    let topology = Topology::new(p);
    let mut best: Option<(usize, Vec<Edge>)> = None;
    'attempts: for _ in 0..opts.max_attempts.max(1) {
        let mut edges = topology.random_shifts(z, &mut rng);
        for _ in 0..=opts.repair_steps {
            let Some(bad) = topology.first_cycle(&edges, z) else {
                best = Some((0, edges));
                break 'attempts;
            };
            let victim = bad[rng.random_range(0..4)];
            topology.resample(&mut edges, victim, z, &mut rng);
        }
        let count = topology.count_cycles(&edges, z);
        if best.as_ref().is_none_or(|(c, _)| count < *c) {
            best = Some((count, edges));
        }
    }
    let (_, edges) = best.expect("at least one attempt");

    let mut rows = vec![Vec::new(); p.rows() * z];
    for e in &edges {
        for r in 0..z {
            rows[e.row * z + r].push(e.col * z + (r + e.shift) % z);
        }
    }
    let h = ParityCheck::from_rows(p.cols() * z, rows)?;
    let proto_col = (0..p.cols() * z).map(|v| v / z).collect();
    LiftedCode::with_proto_cols(h, proto_col)
}

/// Number of non-backtracking closed walks of length 4 in the protograph
/// whose shifts sum to zero mod `z`. Zero iff the lifted graph has girth at
/// least 6. `edges` holds `(row, col, shift)` triples.
pub fn count_protograph_four_cycles(p: &Protograph, edges: &[(usize, usize, usize)], z: usize) -> usize {
    let edges: Vec<Edge> = edges
        .iter()
        .map(|&(row, col, shift)| Edge { row, col, shift })
        .collect();
    let mut topology = Topology::new(p);
    topology.index(&edges);
    topology.count_cycles(&edges, z)
}

struct Topology {
    edges_template: Vec<Edge>,
    row_edges: Vec<Vec<usize>>,
    col_edges: Vec<Vec<usize>>,
    block_edges: Vec<Vec<usize>>,
    cols: usize,
}

impl Topology {
    fn new(p: &Protograph) -> Self {
        let mut edges_template = Vec::new();
        for i in 0..p.rows() {
            for j in 0..p.cols() {
                for _ in 0..p.get(i, j) {
                    edges_template.push(Edge {
                        row: i,
                        col: j,
                        shift: 0,
                    });
                }
            }
        }
        let mut t = Topology {
            edges_template: Vec::new(),
            row_edges: vec![Vec::new(); p.rows()],
            col_edges: vec![Vec::new(); p.cols()],
            block_edges: vec![Vec::new(); p.rows() * p.cols()],
            cols: p.cols(),
        };
        t.index(&edges_template);
        t.edges_template = edges_template;
        t
    }

    fn index(&mut self, edges: &[Edge]) {
        self.row_edges.iter_mut().for_each(Vec::clear);
        self.col_edges.iter_mut().for_each(Vec::clear);
        self.block_edges.iter_mut().for_each(Vec::clear);
        for (idx, e) in edges.iter().enumerate() {
            self.row_edges[e.row].push(idx);
            self.col_edges[e.col].push(idx);
            self.block_edges[e.row * self.cols + e.col].push(idx);
        }
    }

    fn random_shifts(&self, z: usize, rng: &mut impl Rng) -> Vec<Edge> {
        let mut edges = self.edges_template.clone();
        for block in &self.block_edges {
            if block.is_empty() {
                continue;
            }
            let shifts = sample(rng, z, block.len());
            for (&e, s) in block.iter().zip(shifts.iter()) {
                edges[e].shift = s;
            }
        }
        edges
    }

    fn resample(&self, edges: &mut [Edge], victim: usize, z: usize, rng: &mut impl Rng) {
        let e = edges[victim];
        let block = &self.block_edges[e.row * self.cols + e.col];
        if block.len() >= z {
            return;
        }
        loop {
            let s = rng.random_range(0..z);
            if block.iter().all(|&o| edges[o].shift != s) {
                edges[victim].shift = s;
                return;
            }
        }
    }

    fn walks(&self, edges: &[Edge], z: usize, mut visit: impl FnMut([usize; 4]) -> bool) {
        for (e1, a) in edges.iter().enumerate() {
            for &e2 in &self.row_edges[a.row] {
                if e2 == e1 {
                    continue;
                }
                let b = edges[e2];
                for &e3 in &self.col_edges[b.col] {
                    if e3 == e2 {
                        continue;
                    }
                    let c = edges[e3];
                    for &e4 in &self.block_edges[c.row * self.cols + a.col] {
                        if e4 == e3 || e4 == e1 {
                            continue;
                        }
                        let d = edges[e4];
                        let sum = (b.shift + d.shift + 2 * z - a.shift - c.shift) % z;
                        if sum == 0 && !visit([e1, e2, e3, e4]) {
                            return;
                        }
                    }
                }
            }
        }
    }

    fn first_cycle(&self, edges: &[Edge], z: usize) -> Option<[usize; 4]> {
        let mut found = None;
        self.walks(edges, z, |w| {
            found = Some(w);
            false
        });
        found
    }

    fn count_cycles(&self, edges: &[Edge], z: usize) -> usize {
        let mut count = 0;
        self.walks(edges, z, |_| {
            count += 1;
            true
        });
        count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge_lifts_to_permutation() {
        let p = Protograph::from_rows(&[&[1, 1]]).unwrap();
        let code = lift(&p, 4, 0).unwrap();
        let h = code.h();
        assert_eq!((h.m(), h.n()), (4, 8));
        for j in 0..8 {
            assert_eq!(h.col(j).len(), 1);
        }
        for i in 0..4 {
            assert_eq!(h.row(i).len(), 2);
        }
    }

    #[test]
    fn multiplicity_above_z_is_rejected() {
        let p = Protograph::from_rows(&[&[3, 3]]).unwrap();
        assert!(matches!(lift(&p, 2, 0), Err(Error::Lift(_))));
        assert!(matches!(lift(&p, 0, 0), Err(Error::Lift(_))));
    }

    #[test]
    fn algebraic_count_matches_matrix_count() {
        // Two columns with shifts {0,1} and {0,1}: shared differences give
        // 4-cycles in both views.
        let p = Protograph::from_rows(&[&[2, 2]]).unwrap();
        let edges = [(0, 0, 0), (0, 0, 1), (0, 1, 0), (0, 1, 1)];
        assert!(count_protograph_four_cycles(&p, &edges, 7) > 0);
        let edges = [(0, 0, 0), (0, 0, 1), (0, 1, 0), (0, 1, 3)];
        assert_eq!(count_protograph_four_cycles(&p, &edges, 7), 0);
    }

    #[test]
    fn regular_36_lifts_without_four_cycles() {
        let p = Protograph::from_rows(&[&[3, 3]]).unwrap();
        let code = lift(&p, 91, 1).unwrap();
        assert_eq!(code.h().count_four_cycles(), 0);
    }
}
