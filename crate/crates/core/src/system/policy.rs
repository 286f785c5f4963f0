use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::ProblemSpec;

use super::belief::belief_key;

const ROW_TOLERANCE: f64 = 1e-12;

/// Per-stage encoder tables.
///
/// Layouts (row-major, one grid per stage `t = 1..=T`):
/// * `tracking_deterministic`: `[x, zy] -> y`
/// * `tracking_stochastic`: `[x, zy, y] -> P(y | x, zy)`
/// * `full_history_deterministic`: `[x_1..x_t, y_1..y_{t-1}] -> y`
/// * `full_history_stochastic`: `[x_1..x_t, y_1..y_{t-1}, y] -> P(y | history)`
/// * `si_belief_deterministic`: interned beliefs plus `[belief, x, zy] -> y`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "stages", rename_all = "snake_case")]
pub enum EncoderPolicy {
    TrackingDeterministic(Vec<Grid<usize>>),
    TrackingStochastic(Vec<Grid<f64>>),
    FullHistoryDeterministic(Vec<Grid<usize>>),
    FullHistoryStochastic(Vec<Grid<f64>>),
    SiBeliefDeterministic(Vec<BeliefStage>),
}

/// One stage of a belief-measurable encoder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefStage {
    /// Beliefs over `Z^w` this stage can see; row `i` is belief id `i`.
    pub beliefs: Vec<Vec<f64>>,
    /// `[belief id, x, zy] -> y`.
    pub table: Grid<usize>,
}

/// Next-state functions of the decoder memory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryUpdate {
    /// Per stage `[y, zy] -> zy'`; stage 1 reads column 0 only.
    pub next_state: Vec<Grid<usize>>,
    /// Per stage `[w, y, zw] -> zw'`, present iff side information is on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub si_next_state: Option<Vec<Grid<usize>>>,
}

/// Decoder memory plus reproduction tables.
///
/// `reproduction` is `[y, zy] -> xhat` per stage without side information and
/// `[w, y, zw, zy] -> xhat` with it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderPolicy {
    #[serde(flatten)]
    pub memory: MemoryUpdate,
    pub reproduction: Vec<Grid<usize>>,
}

/// What the encoder emits for one cell.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Draw<'a> {
    Det(usize),
    Stoch(&'a [f64]),
}

impl Draw<'_> {
    pub(crate) fn prob(&self, y: usize) -> f64 {
        match *self {
            Draw::Det(v) => (v == y) as u8 as f64,
            Draw::Stoch(row) => row[y],
        }
    }
}

fn check_rows(grid: &Grid<f64>, y_size: usize, what: &str) -> Result<()> {
    for row in grid.data().chunks(y_size) {
        if row.iter().any(|p| !p.is_finite() || *p < 0.0)
            || (row.iter().sum::<f64>() - 1.0).abs() > ROW_TOLERANCE
        {
            return Err(Error::NotProbability(format!("{what}: row {row:?}")));
        }
    }
    Ok(())
}

fn expect_shape(got: &[usize], want: &[usize], what: &str) -> Result<()> {
    if got != want {
        return Err(Error::dim(format!("{what}: shape {got:?}, expected {want:?}")));
    }
    Ok(())
}

pub(crate) fn history_shape(spec: &ProblemSpec, t: usize) -> Vec<usize> {
    let mut shape = vec![spec.x_size; t];
    shape.extend(std::iter::repeat_n(spec.y_size, t - 1));
    shape
}

pub(crate) fn history_offset(spec: &ProblemSpec, xs: &[usize], ys: &[usize]) -> usize {
    let xo = xs.iter().fold(0, |acc, &x| acc * spec.x_size + x);
    ys.iter().fold(xo, |acc, &y| acc * spec.y_size + y)
}

impl EncoderPolicy {
    pub fn stages(&self) -> usize {
        match self {
            EncoderPolicy::TrackingDeterministic(s) | EncoderPolicy::FullHistoryDeterministic(s) => s.len(),
            EncoderPolicy::TrackingStochastic(s) | EncoderPolicy::FullHistoryStochastic(s) => s.len(),
            EncoderPolicy::SiBeliefDeterministic(s) => s.len(),
        }
    }

    pub fn is_tracking(&self) -> bool {
        matches!(
            self,
            EncoderPolicy::TrackingDeterministic(_) | EncoderPolicy::TrackingStochastic(_)
        )
    }

    /// Checks stage count, shapes, symbol ranges and row sums against a
    /// decoder with `zy_size` states.
    pub fn validate(&self, spec: &ProblemSpec, zy_size: usize) -> Result<()> {
        if self.stages() != spec.horizon {
            return Err(Error::dim(format!(
                "encoder has {} stages, horizon is {}",
                self.stages(),
                spec.horizon
            )));
        }
        let (x, y) = (spec.x_size, spec.y_size);
        match self {
            EncoderPolicy::TrackingDeterministic(stages) => {
                for (i, g) in stages.iter().enumerate() {
                    expect_shape(g.shape(), &[x, zy_size], &format!("encoder stage {}", i + 1))?;
                    g.check_bound(y, "encoder output")?;
                }
            }
            EncoderPolicy::TrackingStochastic(stages) => {
                for (i, g) in stages.iter().enumerate() {
                    let what = format!("encoder stage {}", i + 1);
                    expect_shape(g.shape(), &[x, zy_size, y], &what)?;
                    check_rows(g, y, &what)?;
                }
            }
            EncoderPolicy::FullHistoryDeterministic(stages) => {
                for (i, g) in stages.iter().enumerate() {
                    let what = format!("encoder stage {}", i + 1);
                    expect_shape(g.shape(), &history_shape(spec, i + 1), &what)?;
                    g.check_bound(y, "encoder output")?;
                }
            }
            EncoderPolicy::FullHistoryStochastic(stages) => {
                for (i, g) in stages.iter().enumerate() {
                    let what = format!("encoder stage {}", i + 1);
                    let mut shape = history_shape(spec, i + 1);
                    shape.push(y);
                    expect_shape(g.shape(), &shape, &what)?;
                    check_rows(g, y, &what)?;
                }
            }
            EncoderPolicy::SiBeliefDeterministic(stages) => {
                spec.require_si()?;
                for (i, s) in stages.iter().enumerate() {
                    let what = format!("encoder stage {}", i + 1);
                    expect_shape(s.table.shape(), &[s.beliefs.len(), x, zy_size], &what)?;
                    s.table.check_bound(y, "encoder output")?;
                    if s.beliefs.iter().any(|b| b.len() != spec.zw_size) {
                        return Err(Error::dim(format!("{what}: belief length != zw_size")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Tracking encoders only: the output law in cell `(x, zy)` at stage `t`.
    pub(crate) fn tracking_draw(&self, t: usize, x: usize, zy: usize) -> Draw<'_> {
        match self {
            EncoderPolicy::TrackingDeterministic(s) => Draw::Det(*s[t - 1].get(&[x, zy])),
            EncoderPolicy::TrackingStochastic(s) => {
                let g = &s[t - 1];
                let n = g.shape()[2];
                let at = g.offset(&[x, zy, 0]);
                Draw::Stoch(&g.data()[at..at + n])
            }
            _ => unreachable!("tracking_draw on a non-tracking encoder"),
        }
    }
}

/// Resolves encoder outputs along explicit histories.
pub(crate) struct HistoryEncoder<'a> {
    spec: &'a ProblemSpec,
    encoder: &'a EncoderPolicy,
    belief_ids: Vec<HashMap<Vec<i64>, usize>>,
}

impl<'a> HistoryEncoder<'a> {
    pub(crate) fn new(spec: &'a ProblemSpec, encoder: &'a EncoderPolicy) -> Self {
        let belief_ids = match encoder {
            EncoderPolicy::SiBeliefDeterministic(stages) => stages
                .iter()
                .map(|s| s.beliefs.iter().enumerate().map(|(i, b)| (belief_key(b), i)).collect())
                .collect(),
            _ => Vec::new(),
        };
        HistoryEncoder { spec, encoder, belief_ids }
    }

    /// `xs` is `x^t`, `ys` is `y^{t-1}`, `belief` is `b_{t-1}` (normalized).
    pub(crate) fn draw(&self, xs: &[usize], ys: &[usize], zy: usize, belief: &[f64]) -> Result<Draw<'a>> {
        let t = xs.len();
        let x = xs[t - 1];
        Ok(match self.encoder {
            EncoderPolicy::TrackingDeterministic(_) | EncoderPolicy::TrackingStochastic(_) => {
                self.encoder.tracking_draw(t, x, zy)
            }
            EncoderPolicy::FullHistoryDeterministic(s) => {
                Draw::Det(s[t - 1].data()[history_offset(self.spec, xs, ys)])
            }
            EncoderPolicy::FullHistoryStochastic(s) => {
                let n = self.spec.y_size;
                let at = history_offset(self.spec, xs, ys) * n;
                Draw::Stoch(&s[t - 1].data()[at..at + n])
            }
            EncoderPolicy::SiBeliefDeterministic(s) => {
                let id = *self.belief_ids[t - 1]
                    .get(&belief_key(belief))
                    .ok_or(Error::UnknownBelief(t))?;
                Draw::Det(*s[t - 1].table.get(&[id, x, zy]))
            }
        })
    }
}

impl MemoryUpdate {
    pub fn zy_size(&self) -> usize {
        self.next_state.first().map_or(1, |g| g.shape()[1])
    }

    pub fn validate(&self, spec: &ProblemSpec) -> Result<()> {
        if self.next_state.len() != spec.horizon {
            return Err(Error::dim(format!(
                "{} next-state stages, horizon is {}",
                self.next_state.len(),
                spec.horizon
            )));
        }
        let zy = self.zy_size();
        for (i, g) in self.next_state.iter().enumerate() {
            expect_shape(g.shape(), &[spec.y_size, zy], &format!("next_state stage {}", i + 1))?;
            g.check_bound(zy, "next state")?;
        }
        match (&self.si_next_state, spec.has_si()) {
            (Some(stages), true) => {
                if stages.len() != spec.horizon {
                    return Err(Error::dim("si_next_state stage count != horizon"));
                }
                for (i, g) in stages.iter().enumerate() {
                    expect_shape(
                        g.shape(),
                        &[spec.w_size, spec.y_size, spec.zw_size],
                        &format!("si_next_state stage {}", i + 1),
                    )?;
                    g.check_bound(spec.zw_size, "si next state")?;
                }
                Ok(())
            }
            (None, false) => Ok(()),
            (None, true) => Err(Error::dim("spec has side information but si_next_state is missing")),
            (Some(_), false) => Err(Error::SideInfoUnsupported),
        }
    }

    #[inline]
    pub(crate) fn next(&self, t: usize, y: usize, zy: usize) -> usize {
        let g = &self.next_state[t - 1];
        g.data()[y * g.shape()[1] + zy]
    }

    #[inline]
    pub(crate) fn next_w(&self, t: usize, w: usize, y: usize, zw: usize) -> usize {
        match &self.si_next_state {
            Some(s) => *s[t - 1].get(&[w, y, zw]),
            None => 0,
        }
    }
}

pub(crate) fn reproduction_shape(spec: &ProblemSpec, zy: usize) -> Vec<usize> {
    if spec.has_si() {
        vec![spec.w_size, spec.y_size, spec.zw_size, zy]
    } else {
        vec![spec.y_size, zy]
    }
}

impl DecoderPolicy {
    pub fn zy_size(&self) -> usize {
        self.memory.zy_size()
    }

    pub fn validate(&self, spec: &ProblemSpec) -> Result<()> {
        self.memory.validate(spec)?;
        if self.reproduction.len() != spec.horizon {
            return Err(Error::dim("reproduction stage count != horizon"));
        }
        let shape = reproduction_shape(spec, self.zy_size());
        for (i, g) in self.reproduction.iter().enumerate() {
            expect_shape(g.shape(), &shape, &format!("reproduction stage {}", i + 1))?;
            g.check_bound(spec.xhat_size, "reproduction")?;
        }
        Ok(())
    }

    /// Reproduction symbol; `w`/`zw` are ignored without side information.
    #[inline]
    pub(crate) fn reproduce(&self, t: usize, w: usize, y: usize, zw: usize, zy: usize) -> usize {
        let g = &self.reproduction[t - 1];
        if g.shape().len() == 4 {
            *g.get(&[w, y, zw, zy])
        } else {
            *g.get(&[y, zy])
        }
    }
}
