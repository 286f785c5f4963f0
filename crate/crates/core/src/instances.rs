//! Seeded random instances and policies for tests, benches and the CLI.
//!
//! All sampling goes through [`ChaCha8Rng`], so a seed pins every draw on
//! every platform.

use rand::Rng;
use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

use crate::grid::Grid;
use crate::model::{Matrix, ProblemSpec, validate_spec};
use crate::system::{DecoderPolicy, EncoderPolicy, MemoryUpdate, history_shape, reproduction_shape};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from the probability simplex (flat Dirichlet).
pub fn sample_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| loop {
            let e = -(1.0 - rng.gen::<f64>()).ln();
            if e > 0.0 {
                break e;
            }
        })
        .collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|p| *p /= s);
    v
}

fn stochastic_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    (0..rows).map(|_| sample_simplex(rng, cols)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DistortionKind {
    /// `rho(x, xhat) = 1{x != xhat}`; requires `xhat_size == x_size`.
    Hamming,
    /// Independent uniform entries in `[0, 1)` per stage.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InstanceShape {
    pub x_size: usize,
    pub y_size: usize,
    pub zy_size: usize,
    pub xhat_size: usize,
    pub horizon: usize,
    pub lambda: f64,
    /// `(w_size, zw_size)` when side information is on.
    pub side_info: Option<(usize, usize)>,
    pub distortion: DistortionKind,
}

impl InstanceShape {
    /// Binary source, outputs, states and reproductions with Hamming distortion.
    pub fn binary(horizon: usize, lambda: f64) -> Self {
        InstanceShape {
            x_size: 2,
            y_size: 2,
            zy_size: 2,
            xhat_size: 2,
            horizon,
            lambda,
            side_info: None,
            distortion: DistortionKind::Hamming,
        }
    }

    pub fn with_side_info(mut self, w_size: usize, zw_size: usize) -> Self {
        self.side_info = Some((w_size, zw_size));
        self
    }
}

/// Random Markov source (time-invariant kernel) with the given shape.
pub fn random_spec<R: Rng + ?Sized>(rng: &mut R, shape: &InstanceShape) -> ProblemSpec {
    let x = shape.x_size;
    let initial = sample_simplex(rng, x);
    let kernel = stochastic_matrix(rng, x, x);
    let distortion = match shape.distortion {
        DistortionKind::Hamming => {
            let m: Matrix = (0..x)
                .map(|a| (0..shape.xhat_size).map(|b| (a != b) as u8 as f64).collect())
                .collect();
            vec![m; shape.horizon]
        }
        DistortionKind::Random => (0..shape.horizon)
            .map(|_| {
                (0..x)
                    .map(|_| (0..shape.xhat_size).map(|_| rng.gen::<f64>()).collect())
                    .collect()
            })
            .collect(),
    };
    let (w_size, zw_size, si_channel) = match shape.side_info {
        Some((w, zw)) => (w, zw, Some(stochastic_matrix(rng, x, w))),
        None => (0, 0, None),
    };
    validate_spec(ProblemSpec {
        x_size: x,
        y_size: shape.y_size,
        zy_size: shape.zy_size,
        zw_size,
        w_size,
        xhat_size: shape.xhat_size,
        horizon: shape.horizon,
        lambda: shape.lambda,
        initial,
        transitions: vec![kernel; shape.horizon - 1],
        distortion,
        si_channel,
    })
    .expect("random spec is valid by construction")
}

fn random_table<R: Rng + ?Sized>(rng: &mut R, shape: Vec<usize>, bound: usize) -> Grid<usize> {
    let len = shape.iter().product();
    Grid::from_vec(shape, (0..len).map(|_| rng.gen_range(0..bound)).collect()).unwrap()
}

pub fn random_si_memory<R: Rng + ?Sized>(rng: &mut R, spec: &ProblemSpec) -> Vec<Grid<usize>> {
    (0..spec.horizon)
        .map(|_| random_table(rng, vec![spec.w_size, spec.y_size, spec.zw_size], spec.zw_size))
        .collect()
}

pub fn random_memory<R: Rng + ?Sized>(rng: &mut R, spec: &ProblemSpec, zy_size: usize) -> MemoryUpdate {
    let next_state = (0..spec.horizon)
        .map(|_| random_table(rng, vec![spec.y_size, zy_size], zy_size))
        .collect();
    let si_next_state = spec.has_si().then(|| random_si_memory(rng, spec));
    MemoryUpdate { next_state, si_next_state }
}

pub fn random_reproduction<R: Rng + ?Sized>(rng: &mut R, spec: &ProblemSpec, zy_size: usize) -> Vec<Grid<usize>> {
    (0..spec.horizon)
        .map(|_| random_table(rng, reproduction_shape(spec, zy_size), spec.xhat_size))
        .collect()
}

pub fn random_decoder<R: Rng + ?Sized>(rng: &mut R, spec: &ProblemSpec, zy_size: usize) -> DecoderPolicy {
    let memory = random_memory(rng, spec, zy_size);
    DecoderPolicy {
        memory,
        reproduction: random_reproduction(rng, spec, zy_size),
    }
}

pub fn random_tracking_encoder<R: Rng + ?Sized>(rng: &mut R, spec: &ProblemSpec, zy_size: usize) -> EncoderPolicy {
    EncoderPolicy::TrackingDeterministic(
        (0..spec.horizon)
            .map(|_| random_table(rng, vec![spec.x_size, zy_size], spec.y_size))
            .collect(),
    )
}

pub fn random_stochastic_rows<R: Rng + ?Sized>(rng: &mut R, mut shape: Vec<usize>, y_size: usize) -> Grid<f64> {
    let rows: usize = shape.iter().product();
    let data = (0..rows).flat_map(|_| sample_simplex(rng, y_size)).collect();
    shape.push(y_size);
    Grid::from_vec(shape, data).unwrap()
}

pub fn random_stochastic_tracking_encoder<R: Rng + ?Sized>(
    rng: &mut R,
    spec: &ProblemSpec,
    zy_size: usize,
) -> EncoderPolicy {
    EncoderPolicy::TrackingStochastic(
        (0..spec.horizon)
            .map(|_| random_stochastic_rows(rng, vec![spec.x_size, zy_size], spec.y_size))
            .collect(),
    )
}

pub fn random_full_history_stochastic<R: Rng + ?Sized>(rng: &mut R, spec: &ProblemSpec) -> EncoderPolicy {
    EncoderPolicy::FullHistoryStochastic(
        (1..=spec.horizon)
            .map(|t| random_stochastic_rows(rng, history_shape(spec, t), spec.y_size))
            .collect(),
    )
}

pub fn random_full_history_deterministic<R: Rng + ?Sized>(rng: &mut R, spec: &ProblemSpec) -> EncoderPolicy {
    EncoderPolicy::FullHistoryDeterministic(
        (1..=spec.horizon)
            .map(|t| random_table(rng, history_shape(spec, t), spec.y_size))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_samples_are_probability_vectors() {
        let mut r = rng(7);
        for n in 1..6 {
            let v = sample_simplex(&mut r, n);
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(v.iter().all(|p| *p > 0.0));
        }
    }

    #[test]
    fn random_instances_validate() {
        let mut r = rng(1);
        let spec = random_spec(&mut r, &InstanceShape::binary(3, 1.0).with_side_info(2, 2));
        let dec = random_decoder(&mut r, &spec, 2);
        dec.validate(&spec).unwrap();
        random_stochastic_tracking_encoder(&mut r, &spec, 2).validate(&spec, 2).unwrap();
        random_full_history_stochastic(&mut r, &spec).validate(&spec, 2).unwrap();
    }

    #[test]
    fn seeds_reproduce() {
        let a = random_spec(&mut rng(5), &InstanceShape::binary(2, 0.5));
        let b = random_spec(&mut rng(5), &InstanceShape::binary(2, 0.5));
        assert_eq!(a, b);
    }
}
