//! Seeded fixtures shared by the benchmarks.

use rtcode_core::instances::{InstanceShape, random_decoder, random_spec, random_tracking_encoder, rng};
use rtcode_core::{DecoderPolicy, EncoderPolicy, ProblemSpec};

pub fn binary(horizon: usize, seed: u64) -> ProblemSpec {
    random_spec(&mut rng(seed), &InstanceShape::binary(horizon, 1.0))
}

/// Random spec plus a random tracking encoder and decoder with `zy` states.
pub fn system(horizon: usize, zy: usize, seed: u64) -> (ProblemSpec, EncoderPolicy, DecoderPolicy) {
    let spec = binary(horizon, seed);
    let mut r = rng(seed.wrapping_add(1));
    let dec = random_decoder(&mut r, &spec, zy);
    let enc = random_tracking_encoder(&mut r, &spec, zy);
    (spec, enc, dec)
}

/// Distribution over `n` symbols with geometric weights.
pub fn geometric(n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|i| 0.7f64.powi(i as i32)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}
