//! Seeded trajectory simulation of a coding system.
//!
//! Each trajectory is charged `rho_t(x_t, xhat_t) + lambda * l_t(y_t | zy_{t-1})`
//! where `l_t` is the Huffman code designed for the exact conditional law of
//! `y_t` given the decoder state, so the sample mean estimates the exact cost.
//!
//! Trajectories run in batches of [`BATCH`]; batch `i` draws from ChaCha8
//! stream `i` under the master seed, and batch statistics are merged in
//! batch order, so results do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::length::huffman_lengths;
use crate::model::ProblemSpec;
use crate::system::flow::Dims;
use crate::system::{
    Belief, DecoderPolicy, Draw, EncoderPolicy, HISTORY_BUDGET, HistoryEncoder, encoder_belief_update, stage_masses,
};

/// Trajectories per batch.
pub const BATCH: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub n: usize,
    pub seed: u64,
    /// Mean over trajectories of `(1/T) sum_t J_t`.
    pub mean_cost: f64,
    /// Sample standard deviation over `sqrt(n)`.
    pub std_error: f64,
    pub per_stage_means: Vec<f64>,
}

/// Running count, mean and squared deviation (merged with Chan's rule).
#[derive(Clone, Debug)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
    stage_sums: Vec<f64>,
}

impl Moments {
    fn new(horizon: usize) -> Self {
        Moments { n: 0.0, mean: 0.0, m2: 0.0, stage_sums: vec![0.0; horizon] }
    }

    fn push(&mut self, value: f64) {
        self.n += 1.0;
        let delta = value - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (value - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0.0 {
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n / n;
        self.m2 += other.m2 + delta * delta * self.n * other.n / n;
        self.n = n;
        for (a, b) in self.stage_sums.iter_mut().zip(&other.stage_sums) {
            *a += b;
        }
    }
}

fn categorical(r: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = r.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

fn draw_output(r: &mut ChaCha8Rng, d: Draw<'_>) -> usize {
    match d {
        Draw::Det(y) => y,
        Draw::Stoch(row) => categorical(r, row),
    }
}

/// Per-stage `[y, zy]` code lengths for the exact conditional laws.
fn code_lengths(dims: &Dims, masses: &[Vec<f64>]) -> Vec<Vec<Option<u32>>> {
    masses
        .iter()
        .map(|m| {
            let mut out = vec![None; dims.y * dims.zy];
            let mut column = vec![0.0; dims.y];
            for zy in 0..dims.zy {
                column.iter_mut().for_each(|c| *c = 0.0);
                for x in 0..dims.x {
                    for (y, c) in column.iter_mut().enumerate() {
                        for zw in 0..dims.zw {
                            for w in 0..dims.w {
                                *c += m[dims.mass_at(x, y, zy, zw, w)];
                            }
                        }
                    }
                }
                for (y, l) in huffman_lengths(&column).into_iter().enumerate() {
                    out[y * dims.zy + zy] = l;
                }
            }
            out
        })
        .collect()
}

struct Runner<'a> {
    spec: &'a ProblemSpec,
    decoder: &'a DecoderPolicy,
    resolver: HistoryEncoder<'a>,
    lengths: Vec<Vec<Option<u32>>>,
    zy: usize,
}

impl Runner<'_> {
    fn trajectory(&self, r: &mut ChaCha8Rng, stage_sums: &mut [f64]) -> Result<f64> {
        let spec = self.spec;
        let memory = &self.decoder.memory;
        let mut xs: Vec<usize> = Vec::with_capacity(spec.horizon);
        let mut ys = Vec::with_capacity(spec.horizon);
        let (mut zy, mut zw) = (0, 0);
        let mut belief = Belief::degenerate(spec.zw_size.max(1), 0);
        let mut total = 0.0;
        for t in 1..=spec.horizon {
            let x = match xs.last() {
                None => categorical(r, &spec.initial),
                Some(&prev) => categorical(r, &spec.transition(t)[prev]),
            };
            xs.push(x);
            let w = match &spec.si_channel {
                Some(ch) => categorical(r, &ch[x]),
                None => 0,
            };
            let y = draw_output(r, self.resolver.draw(&xs, &ys, zy, &belief.probs)?);
            let length = self.lengths[t - 1][y * self.zy + zy]
                .ok_or_else(|| Error::dim(format!("stage {t}: sampled an output of probability 0")))?;
            let xhat = self.decoder.reproduce(t, w, y, zw, zy);
            let cost = spec.distortion_at(t)[x][xhat] + spec.lambda * length as f64;
            stage_sums[t - 1] += cost;
            total += cost;
            if let Some(si) = &memory.si_next_state {
                belief = encoder_belief_update(spec, &belief, x, y, &si[t - 1])?;
            }
            zw = memory.next_w(t, w, y, zw);
            zy = memory.next(t, y, zy);
            ys.push(y);
        }
        Ok(total / spec.horizon as f64)
    }
}

/// Simulates `n` independent trajectories with master seed `seed`.
pub fn simulate(
    spec: &ProblemSpec,
    encoder: &EncoderPolicy,
    decoder: &DecoderPolicy,
    n: usize,
    seed: u64,
) -> Result<SimResult> {
    if n == 0 {
        return Err(Error::spec("n", "need at least one trajectory"));
    }
    decoder.validate(spec)?;
    let zy = decoder.zy_size();
    let masses = stage_masses(spec, encoder, &decoder.memory, HISTORY_BUDGET)?;
    let dims = Dims::new(spec, zy);
    let runner = Runner {
        spec,
        decoder,
        resolver: HistoryEncoder::new(spec, encoder),
        lengths: code_lengths(&dims, &masses),
        zy,
    };
    let batches = n.div_ceil(BATCH);
    let parts: Vec<Moments> = (0..batches)
        .into_par_iter()
        .map(|b| -> Result<Moments> {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(b as u64);
            let count = BATCH.min(n - b * BATCH);
            let mut m = Moments::new(spec.horizon);
            for _ in 0..count {
                let c = runner.trajectory(&mut r, &mut m.stage_sums)?;
                m.push(c);
            }
            Ok(m)
        })
        .collect::<Result<_>>()?;
    let mut all = Moments::new(spec.horizon);
    for p in &parts {
        all.merge(p);
    }
    let std_error = if n > 1 { (all.m2 / (all.n - 1.0)).sqrt() / all.n.sqrt() } else { 0.0 };
    Ok(SimResult {
        n,
        seed,
        mean_cost: all.mean,
        std_error,
        per_stage_means: all.stage_sums.iter().map(|s| s / n as f64).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{InstanceShape, random_decoder, random_spec, random_tracking_encoder, rng};
    use crate::system::evaluate_cost;

    #[test]
    fn deterministic_source_has_zero_variance() {
        let spec = ProblemSpec::from_json(
            r#"{"x_size":2,"y_size":2,"zy_size":2,"xhat_size":2,"horizon":3,"lambda":0.5,
                "initial":[0.0,1.0],"transitions":[[1,0],[0,1]],"distortion":[[0,1],[1,0]]}"#,
        )
        .unwrap();
        let enc = random_tracking_encoder(&mut rng(1), &spec, 2);
        let dec = random_decoder(&mut rng(2), &spec, 2);
        let sim = simulate(&spec, &enc, &dec, 1000, 3).unwrap();
        assert_eq!(sim.std_error, 0.0);
        let exact = evaluate_cost(&spec, &enc, &dec).unwrap().total;
        assert!((sim.mean_cost - exact).abs() < 1e-12);
    }

    #[test]
    fn zero_lambda_zero_distortion_costs_nothing() {
        let mut spec = random_spec(&mut rng(4), &InstanceShape::binary(2, 0.0));
        spec.distortion = vec![vec![vec![0.0; 2]; 2]; 2];
        let enc = random_tracking_encoder(&mut rng(5), &spec, 2);
        let dec = random_decoder(&mut rng(6), &spec, 2);
        assert_eq!(simulate(&spec, &enc, &dec, 500, 7).unwrap().mean_cost, 0.0);
    }

    #[test]
    fn batches_merge_like_one_pass() {
        let mut a = Moments::new(1);
        let mut b = Moments::new(1);
        let mut whole = Moments::new(1);
        for (i, v) in [0.5, 1.5, 2.0, 7.0, 3.25].iter().enumerate() {
            whole.push(*v);
            if i < 2 { a.push(*v) } else { b.push(*v) }
        }
        a.merge(&b);
        assert!((a.mean - whole.mean).abs() < 1e-12 && (a.m2 - whole.m2).abs() < 1e-12);
    }

    #[test]
    fn stochastic_encoders_simulate() {
        let spec = random_spec(&mut rng(8), &InstanceShape::binary(2, 1.0));
        let dec = random_decoder(&mut rng(9), &spec, 2);
        let enc = crate::instances::random_stochastic_tracking_encoder(&mut rng(10), &spec, 2);
        let sim = simulate(&spec, &enc, &dec, 20_000, 11).unwrap();
        let exact = evaluate_cost(&spec, &enc, &dec).unwrap().total;
        assert!((sim.mean_cost - exact).abs() <= 4.0 * sim.std_error);
    }
}
