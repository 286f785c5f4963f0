//! Exhaustive optimizers over policy tables and the structure checks built
//! on them.

mod checks;
mod concavity;
pub(crate) mod engine;
mod history;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::ProblemSpec;
use crate::system::{DecoderPolicy, EncoderPolicy, MemoryUpdate, bayes_decoder, evaluate};

pub use checks::{
    DEFAULT_STOCHASTIC_SAMPLES, check_theorem1, check_theorem2, check_theorem3, check_theorem6, check_theorem7,
    theorem3_report,
};
pub use concavity::{ConcavityReport, concavity_gaps, sample_concavity};

use engine::{JointSearch, Memory, Reproduction};
use history::{Grouping, HistorySearch};

/// Tolerance for equalities and inequalities between optimal costs.
pub const CHECK_TOLERANCE: f64 = 1e-9;

/// Optimal cost and the policies attaining it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// Cost of `best_encoder` with `best_decoder`, re-evaluated exactly.
    pub best_cost: f64,
    pub best_encoder: EncoderPolicy,
    pub best_decoder: DecoderPolicy,
    pub candidates_evaluated: u64,
}

/// Outcome of comparing two optimal values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`.
    pub slack: f64,
    pub holds: bool,
    pub witness: Vec<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampled: Option<SampledCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub label: String,
    pub cost: f64,
    pub encoder: EncoderPolicy,
    pub decoder: DecoderPolicy,
}

/// Random stochastic encoders compared against a deterministic optimum.
/// This is evidence, not a proof.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledCheck {
    pub samples: usize,
    pub seed: u64,
    pub min_cost: f64,
    pub holds: bool,
    pub note: String,
}

impl Witness {
    pub(crate) fn from_result(label: &str, r: &SearchResult) -> Self {
        Witness {
            label: label.into(),
            cost: r.best_cost,
            encoder: r.best_encoder.clone(),
            decoder: r.best_decoder.clone(),
        }
    }
}

fn tables(shape: &[usize], flat: Vec<Vec<usize>>) -> Result<Vec<Grid<usize>>> {
    flat.into_iter().map(|d| Grid::from_vec(shape.to_vec(), d)).collect()
}

fn finish(
    spec: &ProblemSpec,
    encoder: EncoderPolicy,
    decoder: DecoderPolicy,
    evaluated: u64,
    searched: Option<f64>,
) -> Result<SearchResult> {
    let best_cost = evaluate(spec, &encoder, &decoder)?.total;
    if let Some(v) = searched {
        debug_assert!((v - best_cost).abs() < 1e-9, "search value {v} vs evaluated {best_cost}");
    }
    Ok(SearchResult {
        best_cost,
        best_encoder: encoder,
        best_decoder: decoder,
        candidates_evaluated: evaluated,
    })
}

fn run_joint(
    spec: &ProblemSpec,
    repro: Reproduction<'_>,
    memory: Memory<'_>,
    si_next_state: Option<Vec<Grid<usize>>>,
    budget: u64,
) -> Result<(EncoderPolicy, MemoryUpdate, u64, f64)> {
    let search = JointSearch::new(spec, repro, memory, budget);
    let dims = search.dims();
    let plan = search.run()?;
    let encoder = EncoderPolicy::TrackingDeterministic(tables(&[dims.x, dims.zy], plan.encoder)?);
    let memory = MemoryUpdate {
        next_state: tables(&[dims.y, dims.zy], plan.next_state)?,
        si_next_state,
    };
    Ok((encoder, memory, plan.evaluated, plan.value))
}

/// Best deterministic tracking encoder `y = f_t(x, zy)` for a fixed decoder.
pub fn optimize_tracking(spec: &ProblemSpec, decoder: &DecoderPolicy, budget: u64) -> Result<SearchResult> {
    decoder.validate(spec)?;
    let (encoder, _, evaluated, value) = run_joint(
        spec,
        Reproduction::Fixed(&decoder.reproduction),
        Memory::Fixed(&decoder.memory),
        decoder.memory.si_next_state.clone(),
        budget,
    )?;
    finish(spec, encoder, decoder.clone(), evaluated, Some(value))
}

/// Best deterministic tracking encoder for fixed decoder memory, with the
/// reproduction set to the Bayes response.
pub fn optimize_tracking_bayes(spec: &ProblemSpec, memory: &MemoryUpdate, budget: u64) -> Result<SearchResult> {
    memory.validate(spec)?;
    let (encoder, memory, evaluated, value) = run_joint(
        spec,
        Reproduction::Bayes,
        Memory::Fixed(memory),
        memory.si_next_state.clone(),
        budget,
    )?;
    let decoder = bayes_decoder(spec, &encoder, &memory)?;
    finish(spec, encoder, decoder, evaluated, Some(value))
}

/// Best deterministic encoder `y = f_t(x^t, y^{t-1})` for a fixed decoder.
pub fn optimize_full_history(spec: &ProblemSpec, decoder: &DecoderPolicy, budget: u64) -> Result<SearchResult> {
    decoder.validate(spec)?;
    let plan = HistorySearch::new(
        spec,
        &decoder.memory,
        Reproduction::Fixed(&decoder.reproduction),
        Grouping::PerHistory,
        budget,
    )
    .run()?;
    finish(spec, plan.encoder, decoder.clone(), plan.evaluated, None)
}

/// Best full-history encoder for fixed memory with Bayes reproduction.
pub fn optimize_full_history_bayes(spec: &ProblemSpec, memory: &MemoryUpdate, budget: u64) -> Result<SearchResult> {
    memory.validate(spec)?;
    let plan = HistorySearch::new(spec, memory, Reproduction::Bayes, Grouping::PerHistory, budget).run()?;
    let decoder = bayes_decoder(spec, &plan.encoder, memory)?;
    finish(spec, plan.encoder, decoder, plan.evaluated, None)
}

/// Best encoder measurable in `(b_{t-1}, x_t, zy_{t-1})` for a fixed
/// side-information decoder.
pub fn optimize_belief_measurable(spec: &ProblemSpec, decoder: &DecoderPolicy, budget: u64) -> Result<SearchResult> {
    spec.require_si()?;
    decoder.validate(spec)?;
    let plan = HistorySearch::new(
        spec,
        &decoder.memory,
        Reproduction::Fixed(&decoder.reproduction),
        Grouping::ByBelief,
        budget,
    )
    .run()?;
    finish(spec, plan.encoder, decoder.clone(), plan.evaluated, None)
}

/// `Delta_|Z|`: best next-state tables over `zy_size` states, tracking
/// encoders and Bayes reproduction.
pub fn optimize_system(spec: &ProblemSpec, zy_size: usize, budget: u64) -> Result<SearchResult> {
    spec.require_no_si()?;
    if zy_size == 0 {
        return Err(Error::spec("zy_size", "must be >= 1"));
    }
    let (encoder, memory, evaluated, value) =
        run_joint(spec, Reproduction::Bayes, Memory::Search { zy: zy_size }, None, budget)?;
    let decoder = bayes_decoder(spec, &encoder, &memory)?;
    finish(spec, encoder, decoder, evaluated, Some(value))
}

/// `Delta~_l`: decoder state is the last `window` outputs (null-padded),
/// tracking encoders and Bayes reproduction.
pub fn optimize_sliding_window(spec: &ProblemSpec, window: usize, budget: u64) -> Result<SearchResult> {
    spec.require_no_si()?;
    if window == 0 || !spec.horizon.is_multiple_of(window) {
        return Err(Error::WindowDivisibility {
            window,
            horizon: spec.horizon,
        });
    }
    optimize_tracking_bayes(spec, &MemoryUpdate::sliding_window(spec, window, true), budget)
}

/// Exhaustive search over every reproduction table for fixed encoder and
/// memory. Exponential; meant for validating the Bayes construction.
pub fn exhaustive_reproduction(
    spec: &ProblemSpec,
    encoder: &EncoderPolicy,
    memory: &MemoryUpdate,
    budget: u64,
) -> Result<SearchResult> {
    let shape = crate::system::reproduction_shape(spec, memory.zy_size());
    let cells: usize = shape.iter().product::<usize>() * spec.horizon;
    let mut digits = vec![0; cells];
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut evaluated = 0u64;
    let per_stage = cells / spec.horizon;
    loop {
        evaluated += 1;
        if evaluated > budget {
            return Err(Error::BudgetExceeded {
                what: "reproduction search".into(),
                budget,
            });
        }
        let decoder = DecoderPolicy {
            memory: memory.clone(),
            reproduction: tables(&shape, digits.chunks(per_stage).map(<[usize]>::to_vec).collect())?,
        };
        let c = evaluate(spec, encoder, &decoder)?.total;
        if best.as_ref().is_none_or(|b| c < b.0 - engine::TIE) {
            best = Some((c, digits.clone()));
        }
        if !engine::odometer(&mut digits, spec.xhat_size) {
            break;
        }
    }
    let (_, digits) = best.expect("at least one table");
    let decoder = DecoderPolicy {
        memory: memory.clone(),
        reproduction: tables(&shape, digits.chunks(per_stage).map(<[usize]>::to_vec).collect())?,
    };
    finish(spec, encoder.clone(), decoder, evaluated, None)
}
