//! Codeword-length functional: Huffman-optimal expected length for a
//! distribution, its conditional version over a joint table, Kraft's
//! inequality and an exhaustive oracle for small supports.
//!
//! Lengths are in bits. A symbol outside the support gets an infinite length
//! (`None`); with `0 * inf = 0` it never contributes to the expectation. A
//! degenerate distribution costs nothing: the receiver already knows the
//! symbol.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Probability-vector sum tolerance for length inputs.
const SUM_TOLERANCE: f64 = 1e-9;

/// Codeword lengths over an index set. `None` marks an infinite length.
#[derive(Clone, Debug, PartialEq)]
pub struct LengthFunction {
    pub lengths: Vec<Option<u32>>,
    pub expected_length: f64,
}

fn check_distribution(dist: &[f64]) -> Result<()> {
    if dist.is_empty() {
        return Err(Error::NotProbability("empty vector".into()));
    }
    if let Some(p) = dist.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::NotProbability(format!("entry {p}")));
    }
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::NotProbability(format!("sums to {sum}")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug)]
struct HeapNode {
    weight: f64,
    min_symbol: usize,
    id: usize,
}

impl PartialEq for HeapNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapNode {}

impl PartialOrd for HeapNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapNode {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then(self.min_symbol.cmp(&other.min_symbol))
    }
}

/// Huffman code lengths for nonnegative weights (need not be normalized).
///
/// Merges the two lightest nodes each round, breaking weight ties by the
/// smallest symbol index contained in the node, so the lengths are
/// reproducible. Zero weights get `None`; a single-symbol support gets length 0.
pub fn huffman_lengths(weights: &[f64]) -> Vec<Option<u32>> {
    let support: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    let mut lengths = vec![None; weights.len()];
    match support.len() {
        0 => return lengths,
        1 => {
            lengths[support[0]] = Some(0);
            return lengths;
        }
        _ => {}
    }
    // Min-heap on (weight, smallest contained symbol); `parent` links every
    // merged node to the node it was merged into.
    let mut heap: BinaryHeap<Reverse<HeapNode>> = support
        .iter()
        .enumerate()
        .map(|(id, &i)| Reverse(HeapNode { weight: weights[i], min_symbol: i, id }))
        .collect();
    let mut parent = vec![usize::MAX; 2 * support.len() - 1];
    let mut next_id = support.len();
    while heap.len() > 1 {
        let Reverse(a) = heap.pop().unwrap();
        let Reverse(b) = heap.pop().unwrap();
        parent[a.id] = next_id;
        parent[b.id] = next_id;
        heap.push(Reverse(HeapNode {
            weight: a.weight + b.weight,
            min_symbol: a.min_symbol.min(b.min_symbol),
            id: next_id,
        }));
        next_id += 1;
    }
    // Parents have larger ids than their children, so one descending pass
    // fixes every depth.
    let mut node_depth = vec![0u32; parent.len()];
    for id in (0..parent.len() - 1).rev() {
        node_depth[id] = node_depth[parent[id]] + 1;
    }
    for (id, &i) in support.iter().enumerate() {
        lengths[i] = Some(node_depth[id]);
    }
    lengths
}

fn expectation(weights: &[f64], lengths: &[Option<u32>]) -> f64 {
    weights
        .iter()
        .zip(lengths)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, l)| w * l.expect("support symbol has finite length") as f64)
        .sum()
}

/// Expected Huffman length of `weights / sum(weights)`; 0 for a degenerate
/// or empty support. No validation; used on hot paths.
pub(crate) fn expected_length_of_weights(weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 || weights.iter().filter(|w| **w > 0.0).count() <= 1 {
        return 0.0;
    }
    expectation(weights, &huffman_lengths(weights)) / total
}

/// Optimal instantaneous code for `dist` and its expected length.
pub fn huffman_expected_length(dist: &[f64]) -> Result<LengthFunction> {
    check_distribution(dist)?;
    let lengths = huffman_lengths(dist);
    let expected_length = expectation(dist, &lengths);
    Ok(LengthFunction {
        lengths,
        expected_length,
    })
}

/// `sum_z P(z) * L(P(. | z))` for a joint table indexed `joint[y][z]`.
pub fn conditional_expected_length(joint: &[Vec<f64>]) -> Result<f64> {
    let cols = joint.first().map_or(0, Vec::len);
    if joint.iter().any(|row| row.len() != cols) {
        return Err(Error::NotProbability("ragged joint table".into()));
    }
    let flat: Vec<f64> = joint.iter().flatten().copied().collect();
    check_distribution(&flat)?;
    Ok(conditional_length_unchecked(joint.len(), cols, |y, z| joint[y][z]))
}

/// Conditional length for a table given by accessor, rows `y`, columns `z`.
pub(crate) fn conditional_length_unchecked(
    ys: usize,
    zs: usize,
    mass: impl Fn(usize, usize) -> f64,
) -> f64 {
    let mut column = vec![0.0; ys];
    let mut total = 0.0;
    for z in 0..zs {
        for (y, c) in column.iter_mut().enumerate() {
            *c = mass(y, z);
        }
        let pz: f64 = column.iter().sum();
        if pz > 0.0 {
            total += pz * expected_length_of_weights(&column);
        }
    }
    total
}

/// True iff `sum 2^-l <= 1` over the finite lengths.
pub fn kraft_check(lengths: &[Option<u32>]) -> bool {
    let finite: Vec<u32> = lengths.iter().flatten().copied().collect();
    let Some(&max) = finite.iter().max() else {
        return true;
    };
    if max < 127 {
        // Exact: sum 2^(max - l) <= 2^max.
        let sum: u128 = finite.iter().map(|&l| 1u128 << (max - l)).sum();
        sum <= 1u128 << max
    } else {
        finite.iter().map(|&l| 2f64.powi(-(l as i32))).sum::<f64>() <= 1.0
    }
}

/// Minimum of `sum P(y) l(y)` over every Kraft-feasible integer length
/// assignment on the support with lengths in `1..=n` (`n` = support size);
/// 0 for a degenerate distribution.
pub fn oracle_min_expected_length(dist: &[f64]) -> Result<f64> {
    check_distribution(dist)?;
    let support: Vec<f64> = dist.iter().copied().filter(|p| *p > 0.0).collect();
    let n = support.len();
    if n > 8 {
        return Err(Error::SupportTooLarge(n));
    }
    if n <= 1 {
        return Ok(0.0);
    }
    // Kraft sums in units of 2^-n.
    let unit = 1u64 << n;
    let mut best = f64::INFINITY;
    let mut lengths = vec![0u32; n];
    fn walk(
        i: usize,
        used: u64,
        unit: u64,
        n: usize,
        support: &[f64],
        lengths: &mut Vec<u32>,
        best: &mut f64,
    ) {
        if i == n {
            let v: f64 = support.iter().zip(lengths.iter()).map(|(p, &l)| p * l as f64).sum();
            if v < *best {
                *best = v;
            }
            return;
        }
        for l in 1..=n as u32 {
            let cost = unit >> l;
            if used + cost <= unit {
                lengths[i] = l;
                walk(i + 1, used + cost, unit, n, support, lengths, best);
            }
        }
    }
    walk(0, 0, unit, n, &support, &mut lengths, &mut best);
    Ok(best)
}
