//! Sampled concavity of stage and downstream costs in one stage's
//! stochastic encoder.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::instances::{random_stochastic_rows, rng};
use crate::model::ProblemSpec;
use crate::system::{DecoderPolicy, EncoderPolicy, evaluate_cost};

use super::CHECK_TOLERANCE;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcavityReport {
    pub trials: usize,
    pub seed: u64,
    pub same_stage_violations: usize,
    /// Trials whose perturbed stage has later stages.
    pub downstream_trials: usize,
    pub downstream_violations: usize,
    /// Smallest `J(f_a) - (a J(f_1) + (1 - a) J(f_2))` seen.
    pub worst_same_stage_gap: f64,
    pub worst_downstream_gap: f64,
}

fn mix(a: &Grid<f64>, b: &Grid<f64>, alpha: f64) -> Grid<f64> {
    let data = a.data().iter().zip(b.data()).map(|(p, q)| alpha * p + (1.0 - alpha) * q).collect();
    Grid::from_vec(a.shape().to_vec(), data).unwrap()
}

/// Concavity gaps at `stage` for `f_alpha = alpha f_1 + (1 - alpha) f_2`
/// with the other stages taken from `stages`: the same-stage gap and, if
/// later stages exist, the gap of their summed cost.
pub fn concavity_gaps(
    spec: &ProblemSpec,
    decoder: &DecoderPolicy,
    stages: &[Grid<f64>],
    stage: usize,
    f1: &Grid<f64>,
    f2: &Grid<f64>,
    alpha: f64,
) -> Result<(f64, Option<f64>)> {
    if stage == 0 || stage > spec.horizon {
        return Err(Error::dim(format!("stage {stage} outside 1..={}", spec.horizon)));
    }
    let costs = |f: &Grid<f64>| -> Result<(f64, f64)> {
        let mut s = stages.to_vec();
        s[stage - 1] = f.clone();
        let report = evaluate_cost(spec, &EncoderPolicy::TrackingStochastic(s), decoder)?;
        let here = report.per_stage[stage - 1].cost;
        let later = report.per_stage[stage..].iter().map(|c| c.cost).sum();
        Ok((here, later))
    };
    let (h1, l1) = costs(f1)?;
    let (h2, l2) = costs(f2)?;
    let (ha, la) = costs(&mix(f1, f2, alpha))?;
    let same = ha - (alpha * h1 + (1.0 - alpha) * h2);
    let downstream = (stage < spec.horizon).then_some(la - (alpha * l1 + (1.0 - alpha) * l2));
    Ok((same, downstream))
}

fn one_hot(spec: &ProblemSpec, zy: usize, r: &mut impl Rng) -> Grid<f64> {
    let mut g = Grid::filled(vec![spec.x_size, zy, spec.y_size], 0.0);
    for x in 0..spec.x_size {
        for z in 0..zy {
            g.set(&[x, z, r.gen_range(0..spec.y_size)], 1.0);
        }
    }
    g
}

/// Draws `trials` (stage, f_1, f_2, alpha) cases. Earlier stages use random
/// stochastic encoders, later stages random deterministic ones.
pub fn sample_concavity(spec: &ProblemSpec, decoder: &DecoderPolicy, trials: usize, seed: u64) -> Result<ConcavityReport> {
    spec.require_no_si()?;
    decoder.validate(spec)?;
    let zy = decoder.zy_size();
    let mut r = rng(seed);
    let mut report = ConcavityReport {
        trials,
        seed,
        same_stage_violations: 0,
        downstream_trials: 0,
        downstream_violations: 0,
        worst_same_stage_gap: f64::INFINITY,
        worst_downstream_gap: f64::INFINITY,
    };
    for _ in 0..trials {
        let stage = r.gen_range(1..=spec.horizon);
        let stages: Vec<Grid<f64>> = (1..=spec.horizon)
            .map(|t| {
                if t < stage {
                    random_stochastic_rows(&mut r, vec![spec.x_size, zy], spec.y_size)
                } else {
                    one_hot(spec, zy, &mut r)
                }
            })
            .collect();
        let f1 = random_stochastic_rows(&mut r, vec![spec.x_size, zy], spec.y_size);
        let f2 = random_stochastic_rows(&mut r, vec![spec.x_size, zy], spec.y_size);
        let alpha: f64 = r.gen();
        let (same, downstream) = concavity_gaps(spec, decoder, &stages, stage, &f1, &f2, alpha)?;
        report.worst_same_stage_gap = report.worst_same_stage_gap.min(same);
        if same < -CHECK_TOLERANCE {
            report.same_stage_violations += 1;
        }
        if let Some(d) = downstream {
            report.downstream_trials += 1;
            report.worst_downstream_gap = report.worst_downstream_gap.min(d);
            if d < -CHECK_TOLERANCE {
                report.downstream_violations += 1;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{InstanceShape, random_decoder, random_spec};

    #[test]
    fn endpoints_and_equal_encoders_are_exact() {
        let spec = random_spec(&mut rng(1), &InstanceShape::binary(3, 1.0));
        let dec = random_decoder(&mut rng(2), &spec, 2);
        let mut r = rng(3);
        let stages: Vec<Grid<f64>> = (0..3).map(|_| random_stochastic_rows(&mut r, vec![2, 2], 2)).collect();
        let f1 = random_stochastic_rows(&mut r, vec![2, 2], 2);
        let f2 = random_stochastic_rows(&mut r, vec![2, 2], 2);
        for alpha in [0.0, 1.0] {
            let (s, d) = concavity_gaps(&spec, &dec, &stages, 1, &f1, &f2, alpha).unwrap();
            assert!(s.abs() <= 1e-12 && d.unwrap().abs() <= 1e-12);
        }
        let (s, d) = concavity_gaps(&spec, &dec, &stages, 2, &f1, &f1, 0.37).unwrap();
        assert!(s.abs() <= 1e-12 && d.unwrap().abs() <= 1e-12);
        assert!(concavity_gaps(&spec, &dec, &stages, 3, &f1, &f2, 0.5).unwrap().1.is_none());
    }

    #[test]
    fn small_sample_has_no_violations() {
        let spec = random_spec(&mut rng(4), &InstanceShape::binary(3, 1.0));
        let dec = random_decoder(&mut rng(5), &spec, 2);
        let rep = sample_concavity(&spec, &dec, 200, 6).unwrap();
        assert_eq!(rep.same_stage_violations, 0);
        assert_eq!(rep.downstream_violations, 0);
        assert!(rep.downstream_trials > 0);
    }
}
