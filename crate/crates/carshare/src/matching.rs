//! Weighted perfect-matching engines at desk scale: an exact subset-DP
//! solver for complete general graphs, an O(n^3) assignment solver for
//! bipartite problems (negative weights included), exhaustive baselines, and
//! enumeration of all minimum matchings for adversarial tie-break analysis.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::DEFAULT_TOLERANCE;

/// Vertex count caps for the exact engines; beyond them the request is a
/// capability error, never a silent approximation.
pub const MAX_GENERAL_SOLVE: usize = 20;
pub const MAX_GENERAL_ENUMERATE: usize = 12;
pub const MAX_BIPARTITE_ENUMERATE: usize = 8;

#[derive(Debug, Error)]
pub enum MatchingError {
    #[error("perfect matching needs an even vertex count, got {count}")]
    OddVertexCount { count: usize },
    #[error("weight row {row} has {len} entries, expected {size}")]
    NotSquare { row: usize, len: usize, size: usize },
    #[error("weight at ({x}, {y}) is not finite")]
    NonFiniteWeight { x: usize, y: usize },
    #[error("{vertices} vertices exceed the exact-solve cap of {max}")]
    TooLargeToSolve { vertices: usize, max: usize },
    #[error("{size} vertices exceed the enumeration cap of {max}")]
    TooLargeToEnumerate { size: usize, max: usize },
}

/// How ties among minimum-weight matchings are resolved. The solvers here
/// always produce the lexicographically smallest pair list; adversarial
/// selection (the optimum maximizing a downstream objective) is performed by
/// callers over [`GeneralMatchingProblem::enumerate_optimal`] /
/// [`BipartiteMatchingProblem::enumerate_optimal`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TiePolicy {
    Lexicographic,
    Adversarial,
}

/// Complete undirected graph with symmetric edge weights.
#[derive(Debug, Clone)]
pub struct GeneralMatchingProblem {
    size: usize,
    weight: Vec<Vec<f64>>,
}

/// Square bipartite weight matrix (left x right); entries may be negative.
#[derive(Debug, Clone)]
pub struct BipartiteMatchingProblem {
    size: usize,
    weight: Vec<Vec<f64>>,
}

/// A perfect matching: pairs sorted by first element, plus its weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingResult {
    pub pairs: Vec<(usize, usize)>,
    pub total_weight: f64,
    pub policy: TiePolicy,
}

fn check_square(weight: &[Vec<f64>]) -> Result<(), MatchingError> {
    let size = weight.len();
    for (row, values) in weight.iter().enumerate() {
        if values.len() != size {
            return Err(MatchingError::NotSquare { row, len: values.len(), size });
        }
        for (y, value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(MatchingError::NonFiniteWeight { x: row, y });
            }
        }
    }
    Ok(())
}

impl GeneralMatchingProblem {
    pub fn new(weight: Vec<Vec<f64>>) -> Result<Self, MatchingError> {
        check_square(&weight)?;
        Ok(Self { size: weight.len(), weight })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Minimum-weight perfect matching by dynamic programming over vertex
    /// subsets; reconstruction picks the smallest partner first, so ties
    /// resolve to the lexicographically smallest pair list.
    pub fn solve_min(&self) -> Result<MatchingResult, MatchingError> {
        let n = self.size;
        if n % 2 == 1 {
            return Err(MatchingError::OddVertexCount { count: n });
        }
        if n > MAX_GENERAL_SOLVE {
            return Err(MatchingError::TooLargeToSolve { vertices: n, max: MAX_GENERAL_SOLVE });
        }
        if n == 0 {
            return Ok(MatchingResult {
                pairs: Vec::new(),
                total_weight: 0.0,
                policy: TiePolicy::Lexicographic,
            });
        }
        let full: usize = (1 << n) - 1;
        let mut dp = vec![f64::INFINITY; full + 1];
        dp[0] = 0.0;
        for mask in 1..=full {
            if (mask as u32).count_ones() % 2 == 1 {
                continue;
            }
            let i = mask.trailing_zeros() as usize;
            for j in (i + 1)..n {
                if mask & (1 << j) == 0 {
                    continue;
                }
                let prev = mask & !(1 << i) & !(1 << j);
                let candidate = dp[prev] + self.weight[i][j];
                if candidate < dp[mask] {
                    dp[mask] = candidate;
                }
            }
        }
        let mut pairs = Vec::with_capacity(n / 2);
        let mut mask = full;
        while mask != 0 {
            let i = mask.trailing_zeros() as usize;
            let mut chosen = None;
            for j in (i + 1)..n {
                if mask & (1 << j) == 0 {
                    continue;
                }
                let prev = mask & !(1 << i) & !(1 << j);
                if dp[prev] + self.weight[i][j] == dp[mask] {
                    chosen = Some(j);
                    break;
                }
            }
            let j = chosen.expect("optimal continuation exists by construction");
            pairs.push((i, j));
            mask &= !(1 << i) & !(1 << j);
        }
        let total_weight = pairs.iter().map(|&(i, j)| self.weight[i][j]).sum();
        Ok(MatchingResult { pairs, total_weight, policy: TiePolicy::Lexicographic })
    }

    fn for_each_matching<F: FnMut(&[(usize, usize)], f64)>(&self, visit: &mut F) {
        fn descend<F: FnMut(&[(usize, usize)], f64)>(
            weight: &[Vec<f64>],
            unmatched: &[usize],
            stack: &mut Vec<(usize, usize)>,
            acc: f64,
            visit: &mut F,
        ) {
            if unmatched.is_empty() {
                visit(stack, acc);
                return;
            }
            let i = unmatched[0];
            for pos in 1..unmatched.len() {
                let j = unmatched[pos];
                let rest: Vec<usize> =
                    unmatched.iter().copied().filter(|&v| v != i && v != j).collect();
                stack.push((i, j));
                descend(weight, &rest, stack, acc + weight[i][j], visit);
                stack.pop();
            }
        }
        let unmatched: Vec<usize> = (0..self.size).collect();
        let mut stack = Vec::with_capacity(self.size / 2);
        descend(&self.weight, &unmatched, &mut stack, 0.0, visit);
    }

    fn check_enumerable(&self) -> Result<(), MatchingError> {
        if self.size % 2 == 1 {
            return Err(MatchingError::OddVertexCount { count: self.size });
        }
        if self.size > MAX_GENERAL_ENUMERATE {
            return Err(MatchingError::TooLargeToEnumerate {
                size: self.size,
                max: MAX_GENERAL_ENUMERATE,
            });
        }
        Ok(())
    }

    /// Brute-force optimum over all (n-1)!! perfect matchings; the baseline
    /// the solver is tested against.
    pub fn exhaustive_min(&self) -> Result<MatchingResult, MatchingError> {
        self.check_enumerable()?;
        let mut best = f64::INFINITY;
        let mut best_pairs = Vec::new();
        self.for_each_matching(&mut |pairs, weight| {
            if weight < best {
                best = weight;
                best_pairs = pairs.to_vec();
            }
        });
        let total_weight = best_pairs.iter().map(|&(i, j)| self.weight[i][j]).sum();
        Ok(MatchingResult { pairs: best_pairs, total_weight, policy: TiePolicy::Lexicographic })
    }

    /// Every perfect matching whose weight sits within tolerance of the
    /// optimum, in lexicographic order, truncated at `cap`.
    pub fn enumerate_optimal(&self, cap: usize) -> Result<Vec<MatchingResult>, MatchingError> {
        self.check_enumerable()?;
        let mut best = f64::INFINITY;
        let mut optima: Vec<MatchingResult> = Vec::new();
        self.for_each_matching(&mut |pairs, weight| {
            if weight < best - DEFAULT_TOLERANCE {
                best = weight;
                optima.clear();
            }
            if (weight - best).abs() <= DEFAULT_TOLERANCE && optima.len() < cap {
                optima.push(MatchingResult {
                    pairs: pairs.to_vec(),
                    total_weight: pairs.iter().map(|&(i, j)| self.weight[i][j]).sum(),
                    policy: TiePolicy::Lexicographic,
                });
            }
        });
        if self.size == 0 {
            optima.push(MatchingResult {
                pairs: Vec::new(),
                total_weight: 0.0,
                policy: TiePolicy::Lexicographic,
            });
        }
        Ok(optima)
    }
}

/// Shortest-augmenting-path assignment solver with potentials; handles
/// arbitrary finite weights. Returns the matched column per row.
fn assignment(weight: &[Vec<f64>]) -> Vec<usize> {
    let n = weight.len();
    if n == 0 {
        return Vec::new();
    }
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1]; // column -> row, 1-based, 0 = free
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = weight[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![0usize; n];
    for j in 1..=n {
        result[matched_row[j] - 1] = j - 1;
    }
    result
}

impl BipartiteMatchingProblem {
    pub fn new(weight: Vec<Vec<f64>>) -> Result<Self, MatchingError> {
        check_square(&weight)?;
        Ok(Self { size: weight.len(), weight })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn total_of(&self, assign: &[usize]) -> f64 {
        assign.iter().enumerate().map(|(i, &j)| self.weight[i][j]).sum()
    }

    /// Minimum-weight perfect assignment, refined to the lexicographically
    /// smallest optimal pair list by fixing rows in order and re-solving the
    /// remainder.
    pub fn solve_min(&self) -> Result<MatchingResult, MatchingError> {
        let n = self.size;
        let base = assignment(&self.weight);
        let optimum = self.total_of(&base);

        let mut taken = vec![false; n];
        let mut chosen = vec![0usize; n];
        let mut fixed = 0.0;
        for i in 0..n {
            let mut found = false;
            for j in 0..n {
                if taken[j] {
                    continue;
                }
                let rest = self.reduced_optimum(i + 1, &taken, j);
                if fixed + self.weight[i][j] + rest <= optimum + DEFAULT_TOLERANCE {
                    chosen[i] = j;
                    taken[j] = true;
                    fixed += self.weight[i][j];
                    found = true;
                    break;
                }
            }
            if !found {
                // tolerance slipped on pathological weights; complete the
                // remaining rows with a fresh solve over the free columns
                let cols: Vec<usize> = (0..n).filter(|&j| !taken[j]).collect();
                let reduced: Vec<Vec<f64>> =
                    (i..n).map(|row| cols.iter().map(|&j| self.weight[row][j]).collect()).collect();
                for (offset, &c) in assignment(&reduced).iter().enumerate() {
                    chosen[i + offset] = cols[c];
                    taken[cols[c]] = true;
                }
                break;
            }
        }
        Ok(MatchingResult {
            pairs: chosen.iter().copied().enumerate().collect(),
            total_weight: self.total_of(&chosen),
            policy: TiePolicy::Lexicographic,
        })
    }

    /// Optimum of the subproblem on rows `from_row..` and columns that are
    /// neither taken nor `extra`.
    fn reduced_optimum(&self, from_row: usize, taken: &[bool], extra: usize) -> f64 {
        if from_row == self.size {
            return 0.0;
        }
        let cols: Vec<usize> = (0..self.size).filter(|&j| !taken[j] && j != extra).collect();
        let reduced: Vec<Vec<f64>> = (from_row..self.size)
            .map(|i| cols.iter().map(|&j| self.weight[i][j]).collect())
            .collect();
        let assign = assignment(&reduced);
        assign.iter().enumerate().map(|(r, &c)| reduced[r][c]).sum()
    }

    fn check_enumerable(&self) -> Result<(), MatchingError> {
        if self.size > MAX_BIPARTITE_ENUMERATE {
            return Err(MatchingError::TooLargeToEnumerate {
                size: self.size,
                max: MAX_BIPARTITE_ENUMERATE,
            });
        }
        Ok(())
    }

    fn for_each_assignment<F: FnMut(&[usize], f64)>(&self, visit: &mut F) {
        fn descend<F: FnMut(&[usize], f64)>(
            weight: &[Vec<f64>],
            row: usize,
            taken: &mut Vec<bool>,
            prefix: &mut Vec<usize>,
            acc: f64,
            visit: &mut F,
        ) {
            if row == weight.len() {
                visit(prefix, acc);
                return;
            }
            for j in 0..weight.len() {
                if taken[j] {
                    continue;
                }
                taken[j] = true;
                prefix.push(j);
                descend(weight, row + 1, taken, prefix, acc + weight[row][j], visit);
                prefix.pop();
                taken[j] = false;
            }
        }
        let mut taken = vec![false; self.size];
        let mut prefix = Vec::with_capacity(self.size);
        descend(&self.weight, 0, &mut taken, &mut prefix, 0.0, visit);
    }

    /// Brute-force optimum over all n! assignments.
    pub fn exhaustive_min(&self) -> Result<MatchingResult, MatchingError> {
        self.check_enumerable()?;
        let mut best = f64::INFINITY;
        let mut best_assign = Vec::new();
        self.for_each_assignment(&mut |assign, weight| {
            if weight < best {
                best = weight;
                best_assign = assign.to_vec();
            }
        });
        Ok(MatchingResult {
            pairs: best_assign.iter().copied().enumerate().collect(),
            total_weight: self.total_of(&best_assign),
            policy: TiePolicy::Lexicographic,
        })
    }

    /// Every optimal assignment within tolerance of the optimum, in
    /// lexicographic order, truncated at `cap`.
    pub fn enumerate_optimal(&self, cap: usize) -> Result<Vec<MatchingResult>, MatchingError> {
        self.check_enumerable()?;
        let mut best = f64::INFINITY;
        let mut optima: Vec<MatchingResult> = Vec::new();
        self.for_each_assignment(&mut |assign, weight| {
            if weight < best - DEFAULT_TOLERANCE {
                best = weight;
                optima.clear();
            }
            if (weight - best).abs() <= DEFAULT_TOLERANCE && optima.len() < cap {
                optima.push(MatchingResult {
                    pairs: assign.iter().copied().enumerate().collect(),
                    total_weight: self.total_of(assign),
                    policy: TiePolicy::Lexicographic,
                });
            }
        });
        if self.size == 0 {
            optima.push(MatchingResult {
                pairs: Vec::new(),
                total_weight: 0.0,
                policy: TiePolicy::Lexicographic,
            });
        }
        Ok(optima)
    }
}
