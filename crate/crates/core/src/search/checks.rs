use crate::error::Result;
use crate::instances::{random_stochastic_tracking_encoder, rng};
use crate::mdp::{solve_backward, solve_backward_si};
use crate::model::ProblemSpec;
use crate::grid::Grid;
use crate::system::{DecoderPolicy, MemoryUpdate, evaluate_cost};

use super::{
    CHECK_TOLERANCE, SampledCheck, TheoremReport, Witness, optimize_belief_measurable, optimize_full_history,
    optimize_full_history_bayes, optimize_sliding_window, optimize_system, optimize_tracking,
    optimize_tracking_bayes,
};

/// Stochastic encoders drawn per deterministic-encoder check.
pub const DEFAULT_STOCHASTIC_SAMPLES: usize = 1000;

fn equality(name: &str, lhs: f64, rhs: f64, witness: Vec<Witness>) -> TheoremReport {
    TheoremReport {
        name: name.into(),
        lhs,
        rhs,
        slack: lhs - rhs,
        holds: (lhs - rhs).abs() <= CHECK_TOLERANCE,
        witness,
        sampled: None,
    }
}

/// Full-history deterministic optimum (`lhs`) against the tracking optimum
/// (`rhs`) for a fixed decoder, plus `samples` random stochastic tracking
/// encoders that must not beat `rhs`.
pub fn check_theorem1(
    spec: &ProblemSpec,
    decoder: &DecoderPolicy,
    samples: usize,
    seed: u64,
    budget: u64,
) -> Result<TheoremReport> {
    let full = optimize_full_history(spec, decoder, budget)?;
    let tracking = optimize_tracking(spec, decoder, budget)?;
    let mut report = equality(
        "deterministic tracking encoders are optimal",
        full.best_cost,
        tracking.best_cost,
        vec![
            Witness::from_result("full_history", &full),
            Witness::from_result("tracking", &tracking),
        ],
    );
    if samples > 0 {
        let mut r = rng(seed);
        let mut min_cost = f64::INFINITY;
        for _ in 0..samples {
            let enc = random_stochastic_tracking_encoder(&mut r, spec, decoder.zy_size());
            min_cost = min_cost.min(evaluate_cost(spec, &enc, decoder)?.total);
        }
        let holds = min_cost >= tracking.best_cost - CHECK_TOLERANCE;
        report.holds &= holds;
        report.sampled = Some(SampledCheck {
            samples,
            seed,
            min_cost,
            holds,
            note: "sampled stochastic encoders; evidence, not proof".into(),
        });
    }
    Ok(report)
}

/// Belief-state dynamic program (`lhs`) against exhaustive tracking search
/// with an infinite-memory decoder and Bayes reproduction (`rhs`).
pub fn check_theorem2(spec: &ProblemSpec, budget: u64) -> Result<TheoremReport> {
    let mdp = solve_backward(spec, budget)?;
    let brute = optimize_tracking_bayes(spec, &MemoryUpdate::prefix_tree(spec), budget)?;
    let (encoder, decoder) = crate::mdp::policy_to_tracking(spec, &mdp)?;
    let mdp_witness = Witness {
        label: "belief_policy".into(),
        cost: mdp.cost,
        encoder,
        decoder,
    };
    Ok(equality(
        "belief-state dynamic program matches exhaustive search",
        mdp.cost,
        brute.best_cost,
        vec![mdp_witness, Witness::from_result("prefix_tree_search", &brute)],
    ))
}

/// `Delta_|Z| >= Delta~_l - lambda log2|Z| / l`.
pub fn check_theorem3(spec: &ProblemSpec, zy_size: usize, window: usize, budget: u64) -> Result<TheoremReport> {
    let window_result = optimize_sliding_window(spec, window, budget)?;
    let system = optimize_system(spec, zy_size, budget)?;
    Ok(theorem3_report(spec, zy_size, window, &system, &window_result))
}

/// Assembles the sliding-window bound from precomputed optima.
pub fn theorem3_report(
    spec: &ProblemSpec,
    zy_size: usize,
    window: usize,
    system: &super::SearchResult,
    window_result: &super::SearchResult,
) -> TheoremReport {
    let lhs = system.best_cost;
    let rhs = window_result.best_cost - spec.lambda * (zy_size as f64).log2() / window as f64;
    TheoremReport {
        name: format!("sliding window of length {window} is within the memory penalty of {zy_size} states"),
        lhs,
        rhs,
        slack: lhs - rhs,
        holds: lhs - rhs >= -CHECK_TOLERANCE,
        witness: vec![
            Witness::from_result("system", system),
            Witness::from_result("sliding_window", window_result),
        ],
        sampled: None,
    }
}

/// Full-history optimum (`lhs`) against the optimum over encoders
/// measurable in `(b_{t-1}, x_t, zy_{t-1})` (`rhs`), fixed decoder with
/// side information.
pub fn check_theorem6(spec: &ProblemSpec, decoder: &DecoderPolicy, budget: u64) -> Result<TheoremReport> {
    let full = optimize_full_history(spec, decoder, budget)?;
    let grouped = optimize_belief_measurable(spec, decoder, budget)?;
    Ok(equality(
        "belief-measurable encoders are optimal with side information",
        full.best_cost,
        grouped.best_cost,
        vec![
            Witness::from_result("full_history", &full),
            Witness::from_result("belief_measurable", &grouped),
        ],
    ))
}

/// Side-information belief-state program (`lhs`) against exhaustive
/// full-history search with infinite `zy` memory, the given `r^w` and Bayes
/// reproduction (`rhs`).
pub fn check_theorem7(spec: &ProblemSpec, si_next_state: &[Grid<usize>], budget: u64) -> Result<TheoremReport> {
    let mdp = solve_backward_si(spec, si_next_state, budget)?;
    let memory = MemoryUpdate::prefix_tree(spec).with_si(si_next_state.to_vec());
    let brute = optimize_full_history_bayes(spec, &memory, budget)?;
    let (encoder, decoder) = crate::mdp::policy_to_tracking(spec, &mdp)?;
    Ok(equality(
        "side-information belief-state program matches exhaustive search",
        mdp.cost,
        brute.best_cost,
        vec![
            Witness {
                label: "belief_policy".into(),
                cost: mdp.cost,
                encoder,
                decoder,
            },
            Witness::from_result("full_history_search", &brute),
        ],
    ))
}
