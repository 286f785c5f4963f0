//! Encoder/decoder/memory policies and exact evaluation of the Lagrangian
//! cost, with and without decoder side information.

mod belief;
pub(crate) mod flow;
mod policy;

use serde::{Deserialize, Serialize};

pub use belief::{BELIEF_ROUNDING, Belief, Interner, encoder_belief_update, modified_distortion};
pub use policy::{BeliefStage, DecoderPolicy, EncoderPolicy, MemoryUpdate};

pub(crate) use belief::belief_key;
pub(crate) use policy::{Draw, HistoryEncoder, history_offset, history_shape, reproduction_shape};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::ProblemSpec;
use flow::Dims;

/// Default cap on the number of explicit histories kept per stage.
pub const HISTORY_BUDGET: usize = 1_000_000;

/// `P(x_t, zy_{t-1})` (shape `[x, zy]`) or `P(x_t, zy_{t-1}, zw_{t-1})`
/// (shape `[x, zy, zw]`) at a stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub stage: usize,
    pub table: Grid<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageCost {
    pub distortion: f64,
    pub length: f64,
    pub cost: f64,
}

/// Per-stage and averaged cost of a system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub per_stage: Vec<StageCost>,
    /// `(1/T) sum_t J_t`.
    pub total: f64,
    pub avg_distortion: f64,
    pub avg_length: f64,
}

impl CostReport {
    pub(crate) fn from_stages(lambda: f64, parts: &[(f64, f64)]) -> Self {
        let per_stage: Vec<StageCost> = parts
            .iter()
            .map(|&(distortion, length)| StageCost {
                distortion,
                length,
                cost: distortion + lambda * length,
            })
            .collect();
        let n = per_stage.len() as f64;
        CostReport {
            total: per_stage.iter().map(|s| s.cost).sum::<f64>() / n,
            avg_distortion: per_stage.iter().map(|s| s.distortion).sum::<f64>() / n,
            avg_length: per_stage.iter().map(|s| s.length).sum::<f64>() / n,
            per_stage,
        }
    }
}

impl MemoryUpdate {
    /// Infinite memory: state at stage `t` is the whole prefix `y^{t-1}`.
    ///
    /// Prefixes of length `k` occupy indices `offset(k) .. offset(k) + |Y|^k`
    /// with `offset(k) = sum_{j<k} |Y|^j`; the empty prefix is state 0.
    pub fn prefix_tree(spec: &ProblemSpec) -> Self {
        let y = spec.y_size;
        let mut offsets = vec![0usize];
        for k in 0..spec.horizon {
            offsets.push(offsets[k] + y.pow(k as u32));
        }
        let zy = offsets[spec.horizon];
        let next_state = (1..=spec.horizon)
            .map(|t| {
                let mut g = Grid::filled(vec![y, zy], 0usize);
                let len = t - 1;
                for p in 0..y.pow(len as u32) {
                    for sym in 0..y {
                        let child = if t < spec.horizon { offsets[t] + p * y + sym } else { 0 };
                        g.set(&[sym, offsets[len] + p], child);
                    }
                }
                g
            })
            .collect();
        MemoryUpdate { next_state, si_next_state: None }
    }

    /// Sliding window over the last `window` outputs, newest symbol least
    /// significant. With `padded`, digit 0 is a reserved null symbol and
    /// output `y` is digit `y + 1` (alphabet `(|Y|+1)^window`); otherwise the
    /// window starts as all zeros (alphabet `|Y|^window`).
    pub fn sliding_window(spec: &ProblemSpec, window: usize, padded: bool) -> Self {
        let y = spec.y_size;
        let base = if padded { y + 1 } else { y };
        let zy = base.pow(window as u32);
        let mut g = Grid::filled(vec![y, zy], 0usize);
        for sym in 0..y {
            let digit = if padded { sym + 1 } else { sym };
            for z in 0..zy {
                g.set(&[sym, z], (z * base + digit) % zy);
            }
        }
        MemoryUpdate {
            next_state: vec![g; spec.horizon],
            si_next_state: None,
        }
    }

    pub fn with_si(mut self, si_next_state: Vec<Grid<usize>>) -> Self {
        self.si_next_state = Some(si_next_state);
        self
    }
}

fn check_encoder_memory(spec: &ProblemSpec, encoder: &EncoderPolicy, memory: &MemoryUpdate) -> Result<()> {
    memory.validate(spec)?;
    encoder.validate(spec, memory.zy_size())
}

/// Exact stage masses `P(x_t, y_t, zy_{t-1}, zw_{t-1}, w_t)` for any encoder.
pub(crate) fn stage_masses(
    spec: &ProblemSpec,
    encoder: &EncoderPolicy,
    memory: &MemoryUpdate,
    budget: usize,
) -> Result<Vec<Vec<f64>>> {
    check_encoder_memory(spec, encoder, memory)?;
    if encoder.is_tracking() {
        Ok(flow::tracking_flow(spec, encoder, memory).1)
    } else {
        flow::history_flow(spec, encoder, memory, budget)
    }
}

/// Joint law of `(x_t, zy_{t-1}[, zw_{t-1}])` for every stage under a
/// tracking encoder.
pub fn propagate_joint(
    spec: &ProblemSpec,
    encoder: &EncoderPolicy,
    memory: &MemoryUpdate,
) -> Result<Vec<JointState>> {
    check_encoder_memory(spec, encoder, memory)?;
    if !encoder.is_tracking() {
        return Err(Error::dim("propagate_joint needs a tracking encoder"));
    }
    let dims = Dims::new(spec, memory.zy_size());
    let shape = if spec.has_si() {
        vec![dims.x, dims.zy, dims.zw]
    } else {
        vec![dims.x, dims.zy]
    };
    let (joints, _) = flow::tracking_flow(spec, encoder, memory);
    joints
        .into_iter()
        .enumerate()
        .map(|(i, j)| {
            Ok(JointState {
                stage: i + 1,
                table: Grid::from_vec(shape.clone(), j)?,
            })
        })
        .collect()
}

fn report_from_masses(spec: &ProblemSpec, decoder: &DecoderPolicy, masses: &[Vec<f64>]) -> CostReport {
    let dims = Dims::new(spec, decoder.zy_size());
    let parts: Vec<(f64, f64)> = masses
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let t = i + 1;
            let d = flow::stage_distortion(spec, &dims, t, m, |w, y, zw, zy| {
                decoder.reproduce(t, w, y, zw, zy)
            });
            (d, flow::stage_length(&dims, m))
        })
        .collect();
    CostReport::from_stages(spec.lambda, &parts)
}

/// Exact cost of a system without side information.
pub fn evaluate_cost(spec: &ProblemSpec, encoder: &EncoderPolicy, decoder: &DecoderPolicy) -> Result<CostReport> {
    evaluate_cost_with_budget(spec, encoder, decoder, HISTORY_BUDGET)
}

pub fn evaluate_cost_with_budget(
    spec: &ProblemSpec,
    encoder: &EncoderPolicy,
    decoder: &DecoderPolicy,
    budget: usize,
) -> Result<CostReport> {
    spec.require_no_si()?;
    decoder.validate(spec)?;
    let masses = stage_masses(spec, encoder, &decoder.memory, budget)?;
    Ok(report_from_masses(spec, decoder, &masses))
}

/// Exact cost of a system whose decoder sees side information. The code
/// length conditions on `zy` only, since `zw` is unknown to the encoder.
pub fn evaluate_cost_si(spec: &ProblemSpec, encoder: &EncoderPolicy, decoder: &DecoderPolicy) -> Result<CostReport> {
    spec.require_si()?;
    decoder.validate(spec)?;
    let masses = stage_masses(spec, encoder, &decoder.memory, HISTORY_BUDGET)?;
    Ok(report_from_masses(spec, decoder, &masses))
}

/// Evaluates with whichever routine matches the problem spec.
pub fn evaluate(spec: &ProblemSpec, encoder: &EncoderPolicy, decoder: &DecoderPolicy) -> Result<CostReport> {
    if spec.has_si() {
        evaluate_cost_si(spec, encoder, decoder)
    } else {
        evaluate_cost(spec, encoder, decoder)
    }
}

/// Reproduction tables that minimize expected distortion for a fixed encoder
/// and memory. Unreachable cells get 0; ties go to the smaller symbol.
pub fn bayes_decoder(spec: &ProblemSpec, encoder: &EncoderPolicy, memory: &MemoryUpdate) -> Result<DecoderPolicy> {
    let masses = stage_masses(spec, encoder, memory, HISTORY_BUDGET)?;
    let zy = memory.zy_size();
    let dims = Dims::new(spec, zy);
    let shape = reproduction_shape(spec, zy);
    let reproduction = masses
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mut table = Vec::new();
            flow::stage_bayes(spec, &dims, i + 1, m, &mut table);
            Grid::from_vec(shape.clone(), table)
        })
        .collect::<Result<_>>()?;
    Ok(DecoderPolicy {
        memory: memory.clone(),
        reproduction,
    })
}
