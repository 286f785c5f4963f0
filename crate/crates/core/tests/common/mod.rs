//! Trajectory-enumeration oracles shared by the integration tests. They read
//! the raw policy tables and never call into the crate's evaluators.

#![allow(dead_code)]

use rtcode_core::length::oracle_min_expected_length;
use rtcode_core::{DecoderPolicy, EncoderPolicy, ProblemSpec};

pub struct Brute {
    pub total: f64,
    pub avg_distortion: f64,
    pub avg_length: f64,
}

/// `P(y_t = . | history)` straight from the encoder tables.
fn encoder_row(enc: &EncoderPolicy, spec: &ProblemSpec, t: usize, xs: &[usize], ys: &[usize], zy: usize) -> Vec<f64> {
    let y = spec.y_size;
    let one_hot = |k: usize| (0..y).map(|i| (i == k) as u8 as f64).collect();
    let history: Vec<usize> = xs.iter().chain(ys).copied().collect();
    match enc {
        EncoderPolicy::TrackingDeterministic(s) => one_hot(*s[t - 1].get(&[xs[t - 1], zy])),
        EncoderPolicy::TrackingStochastic(s) => (0..y).map(|k| *s[t - 1].get(&[xs[t - 1], zy, k])).collect(),
        EncoderPolicy::FullHistoryDeterministic(s) => one_hot(*s[t - 1].get(&history)),
        EncoderPolicy::FullHistoryStochastic(s) => (0..y)
            .map(|k| {
                let mut idx = history.clone();
                idx.push(k);
                *s[t - 1].get(&idx)
            })
            .collect(),
        EncoderPolicy::SiBeliefDeterministic(_) => panic!("oracle does not resolve belief encoders"),
    }
}

struct Acc<'a> {
    spec: &'a ProblemSpec,
    enc: &'a EncoderPolicy,
    dec: &'a DecoderPolicy,
    zy_size: usize,
    dist: Vec<f64>,
    /// `[t][zy][y]`
    joint: Vec<Vec<Vec<f64>>>,
}

impl Acc<'_> {
    #[allow(clippy::too_many_arguments)]
    fn walk(&mut self, t: usize, xs: &mut Vec<usize>, ys: &mut Vec<usize>, zy: usize, zw: usize, p: f64) {
        let spec = self.spec;
        if t > spec.horizon || p == 0.0 {
            return;
        }
        let ws = if spec.has_si() { spec.w_size } else { 1 };
        for x in 0..spec.x_size {
            let px = match xs.last() {
                None => spec.initial[x],
                Some(&prev) => spec.transitions[t - 2][prev][x],
            };
            xs.push(x);
            let row = encoder_row(self.enc, spec, t, xs, ys, zy);
            for w in 0..ws {
                let pw = spec.si_channel.as_ref().map_or(1.0, |c| c[x][w]);
                for (y, &py) in row.iter().enumerate() {
                    let q = p * px * pw * py;
                    if q == 0.0 {
                        continue;
                    }
                    let xhat = if spec.has_si() {
                        *self.dec.reproduction[t - 1].get(&[w, y, zw, zy])
                    } else {
                        *self.dec.reproduction[t - 1].get(&[y, zy])
                    };
                    self.dist[t - 1] += q * spec.distortion[t - 1][x][xhat];
                    self.joint[t - 1][zy][y] += q;
                    let zy2 = *self.dec.memory.next_state[t - 1].get(&[y, zy]);
                    let zw2 = match &self.dec.memory.si_next_state {
                        Some(g) => *g[t - 1].get(&[w, y, zw]),
                        None => 0,
                    };
                    ys.push(y);
                    self.walk(t + 1, xs, ys, zy2, zw2, q);
                    ys.pop();
                }
            }
            xs.pop();
        }
    }
}

/// Exact cost by summing over every `(x^T, w^T, y^T)`; code lengths come
/// from the exhaustive length oracle applied to `P(y_t | zy_{t-1})`.
pub fn brute_cost(spec: &ProblemSpec, enc: &EncoderPolicy, dec: &DecoderPolicy) -> Brute {
    let zy_size = dec.memory.next_state[0].shape()[1];
    let mut acc = Acc {
        spec,
        enc,
        dec,
        zy_size,
        dist: vec![0.0; spec.horizon],
        joint: vec![vec![vec![0.0; spec.y_size]; zy_size]; spec.horizon],
    };
    acc.walk(1, &mut Vec::new(), &mut Vec::new(), 0, 0, 1.0);
    let lengths: Vec<f64> = acc
        .joint
        .iter()
        .map(|by_z| {
            by_z.iter()
                .map(|col| {
                    let pz: f64 = col.iter().sum();
                    if pz == 0.0 {
                        return 0.0;
                    }
                    let cond: Vec<f64> = col.iter().map(|v| v / pz).collect();
                    pz * oracle_min_expected_length(&cond).unwrap()
                })
                .sum()
        })
        .collect();
    let n = spec.horizon as f64;
    let avg_distortion = acc.dist.iter().sum::<f64>() / n;
    let avg_length = lengths.iter().sum::<f64>() / n;
    Brute {
        total: avg_distortion + spec.lambda * avg_length,
        avg_distortion,
        avg_length,
    }
}

/// `P(x_t)` for every stage by direct recursion.
pub fn marginals(spec: &ProblemSpec) -> Vec<Vec<f64>> {
    let mut out = vec![spec.initial.clone()];
    for t in 2..=spec.horizon {
        let prev = &out[t - 2];
        let next = (0..spec.x_size)
            .map(|x| (0..spec.x_size).map(|a| prev[a] * spec.transitions[t - 2][a][x]).sum())
            .collect();
        out.push(next);
    }
    out
}

/// Every map `X -> Y` in lexicographic order.
pub fn all_maps(from: usize, to: usize) -> Vec<Vec<usize>> {
    (0..to.pow(from as u32))
        .map(|mut c| {
            let mut m = vec![0; from];
            for d in m.iter_mut().rev() {
                *d = c % to;
                c /= to;
            }
            m
        })
        .collect()
}
