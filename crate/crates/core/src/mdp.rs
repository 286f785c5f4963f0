//! Finite-horizon dynamic program over posterior beliefs for a decoder with
//! infinite memory (it remembers every received index).
//!
//! Without side information the state at stage `t` is `P(x_t | y^{t-1})`;
//! with it, `P(x_t, zw_{t-1} | y^{t-1})`, stored flat as `[x, zw]`. An action
//! is a map `a: X -> Y`. The stage cost is the Bayes-envelope distortion
//! plus `lambda` times the Huffman length of the induced output law.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::length::expected_length_of_weights;
use crate::model::ProblemSpec;
use crate::search::engine::{TIE, odometer};
use crate::system::flow::bayes_argmin;
use crate::system::{DecoderPolicy, EncoderPolicy, Interner, MemoryUpdate, bayes_decoder, belief_key};

/// Pairs of distinct interned states closer than this are reported.
pub const NEAR_COLLISION: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MdpAction {
    /// `mapping[x]` is the output sent for source symbol `x`.
    pub mapping: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdpState {
    pub stage: usize,
    pub id: usize,
    /// Over `X`, or `[x, zw]` flat with side information.
    pub belief: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueEntry {
    pub state: MdpState,
    /// Unnormalized optimal cost from this stage to the horizon.
    pub cost_to_go: f64,
    pub action: MdpAction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    pub stages: Vec<Vec<ValueEntry>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdpSolution {
    /// Optimal average cost `u_1 / T`.
    pub cost: f64,
    pub table: ValueTable,
    pub near_collisions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub si_next_state: Option<Vec<Grid<usize>>>,
}

/// `(argmin_xhat, min)` of `sum_x posterior(x) rho(x, xhat)`; ties go to the
/// smallest index.
pub fn bayes_response(posterior: &[f64], rho: &[Vec<f64>]) -> Result<(usize, f64)> {
    let sum: f64 = posterior.iter().sum();
    if posterior.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::NotProbability(format!("posterior {posterior:?}")));
    }
    if posterior.len() != rho.len() || rho.is_empty() {
        return Err(Error::dim("posterior and distortion disagree on |X|"));
    }
    Ok(bayes_argmin(posterior, rho, rho[0].len()))
}

/// Shared machinery; without side information `zw = w = 1`.
struct Ctx<'a> {
    spec: &'a ProblemSpec,
    si: Option<&'a [Grid<usize>]>,
    zw: usize,
    w: usize,
}

impl<'a> Ctx<'a> {
    fn new(spec: &'a ProblemSpec, si: Option<&'a [Grid<usize>]>) -> Self {
        let (w, zw) = spec.si_dims();
        Ctx { spec, si, zw, w }
    }

    fn check(&self, belief: &[f64], action: &MdpAction) -> Result<()> {
        if belief.len() != self.spec.x_size * self.zw {
            return Err(Error::dim(format!(
                "belief has {} entries, expected {}",
                belief.len(),
                self.spec.x_size * self.zw
            )));
        }
        if action.mapping.len() != self.spec.x_size || action.mapping.iter().any(|&y| y >= self.spec.y_size) {
            return Err(Error::dim("action must map every source symbol to a valid output"));
        }
        Ok(())
    }

    fn output_law(&self, belief: &[f64], action: &MdpAction) -> Vec<f64> {
        let mut py = vec![0.0; self.spec.y_size];
        for (i, &s) in belief.iter().enumerate() {
            py[action.mapping[i / self.zw]] += s;
        }
        py
    }

    fn cost(&self, t: usize, belief: &[f64], action: &MdpAction) -> f64 {
        let spec = self.spec;
        let rho = spec.distortion_at(t);
        let mut distortion = 0.0;
        let mut weights = vec![0.0; spec.x_size];
        for y in 0..spec.y_size {
            for w in 0..self.w {
                for zw in 0..self.zw {
                    let mut any = false;
                    for (x, wt) in weights.iter_mut().enumerate() {
                        *wt = if action.mapping[x] == y {
                            belief[x * self.zw + zw] * spec.channel(x, w)
                        } else {
                            0.0
                        };
                        any |= *wt > 0.0;
                    }
                    if any {
                        distortion += bayes_argmin(&weights, rho, spec.xhat_size).1;
                    }
                }
            }
        }
        distortion + spec.lambda * expected_length_of_weights(&self.output_law(belief, action))
    }

    fn update(&self, t: usize, belief: &[f64], action: &MdpAction, y: usize) -> Result<Vec<f64>> {
        let spec = self.spec;
        let kernel = spec.transition(t + 1);
        let mut next = vec![0.0; spec.x_size * self.zw];
        for x in 0..spec.x_size {
            if action.mapping[x] != y {
                continue;
            }
            for zw in 0..self.zw {
                let s = belief[x * self.zw + zw];
                if s <= 0.0 {
                    continue;
                }
                for w in 0..self.w {
                    let nw = self.si.map_or(0, |g| *g[t - 1].get(&[w, y, zw]));
                    let m = s * spec.channel(x, w);
                    for (x2, &p) in kernel[x].iter().enumerate() {
                        next[x2 * self.zw + nw] += m * p;
                    }
                }
            }
        }
        let total: f64 = next.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroProbabilityObservation(y));
        }
        next.iter_mut().for_each(|p| *p /= total);
        Ok(next)
    }

    fn initial(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.spec.x_size * self.zw];
        for (x, &p) in self.spec.initial.iter().enumerate() {
            b[x * self.zw] = p;
        }
        b
    }

    fn actions(&self) -> Vec<MdpAction> {
        let mut digits = vec![0; self.spec.x_size];
        let mut out = Vec::new();
        loop {
            out.push(MdpAction { mapping: digits.clone() });
            if !odometer(&mut digits, self.spec.y_size) {
                return out;
            }
        }
    }

    fn enumerate(&self, budget: u64) -> Result<Vec<Interner>> {
        let actions = self.actions();
        let mut stages = Vec::with_capacity(self.spec.horizon);
        let mut first = Interner::new();
        first.intern(&self.initial());
        stages.push(first);
        let mut charged = 0u64;
        for t in 1..self.spec.horizon {
            let mut next = Interner::new();
            for belief in stages[t - 1].items() {
                for a in &actions {
                    charged += 1;
                    if charged > budget {
                        return Err(Error::BudgetExceeded {
                            what: "belief-state expansion".into(),
                            budget,
                        });
                    }
                    for (y, &p) in self.output_law(belief, a).iter().enumerate() {
                        if p > 0.0 {
                            next.intern(&self.update(t, belief, a, y)?);
                        }
                    }
                }
            }
            stages.push(next);
        }
        Ok(stages)
    }

    fn solve(&self, budget: u64) -> Result<MdpSolution> {
        let stages = self.enumerate(budget)?;
        let actions = self.actions();
        let horizon = self.spec.horizon;
        let mut values: Vec<Vec<(f64, usize)>> = vec![Vec::new(); horizon];
        for t in (1..=horizon).rev() {
            let later = (t < horizon).then(|| (&stages[t], &values[t]));
            let row: Vec<(f64, usize)> = stages[t - 1]
                .items()
                .par_iter()
                .map(|belief| -> Result<(f64, usize)> {
                    let mut best = (f64::INFINITY, 0);
                    for (ai, a) in actions.iter().enumerate() {
                        let mut v = self.cost(t, belief, a);
                        if let Some((states, vals)) = later {
                            for (y, &p) in self.output_law(belief, a).iter().enumerate() {
                                if p > 0.0 {
                                    let next = self.update(t, belief, a, y)?;
                                    let id = states.get(&next).ok_or(Error::UnknownBelief(t + 1))?;
                                    v += p * vals[id].0;
                                }
                            }
                        }
                        if v < best.0 - TIE {
                            best = (v, ai);
                        }
                    }
                    Ok(best)
                })
                .collect::<Result<_>>()?;
            values[t - 1] = row;
        }
        let near_collisions = stages.iter().map(|s| near_collisions(s.items())).sum();
        let table = ValueTable {
            stages: stages
                .iter()
                .zip(&values)
                .enumerate()
                .map(|(i, (states, vals))| {
                    states
                        .items()
                        .iter()
                        .zip(vals)
                        .enumerate()
                        .map(|(id, (belief, &(v, a)))| ValueEntry {
                            state: MdpState {
                                stage: i + 1,
                                id,
                                belief: belief.clone(),
                            },
                            cost_to_go: v,
                            action: actions[a].clone(),
                        })
                        .collect()
                })
                .collect(),
        };
        Ok(MdpSolution {
            cost: values[0][0].0 / horizon as f64,
            table,
            near_collisions,
            si_next_state: self.si.map(<[Grid<usize>]>::to_vec),
        })
    }
}

fn near_collisions(items: &[Vec<f64>]) -> usize {
    let mut count = 0;
    for (i, a) in items.iter().enumerate() {
        for b in &items[i + 1..] {
            if a.iter().zip(b).all(|(p, q)| (p - q).abs() < NEAR_COLLISION) {
                count += 1;
            }
        }
    }
    count
}

fn check_si_tables(spec: &ProblemSpec, si: &[Grid<usize>]) -> Result<()> {
    spec.require_si()?;
    if si.len() != spec.horizon {
        return Err(Error::dim("si_next_state stage count != horizon"));
    }
    for g in si {
        if g.shape() != [spec.w_size, spec.y_size, spec.zw_size] {
            return Err(Error::dim("si_next_state must be [w, y, zw]"));
        }
        g.check_bound(spec.zw_size, "si next state")?;
    }
    Ok(())
}

/// `s_{t+1}(x') ~ sum_x s_t(x) P(x' | x) 1{a(x) = y}` at stage `t`.
pub fn belief_update(spec: &ProblemSpec, t: usize, belief: &[f64], action: &MdpAction, y: usize) -> Result<Vec<f64>> {
    spec.require_no_si()?;
    let ctx = Ctx::new(spec, None);
    ctx.check(belief, action)?;
    ctx.update(t, belief, action, y)
}

/// Side-information update over `[x, zw]` using `si_next_state`, the
/// stage-`t` table `[w, y, zw] -> zw'`.
pub fn belief_update_si(
    spec: &ProblemSpec,
    t: usize,
    belief: &[f64],
    action: &MdpAction,
    y: usize,
    si_next_state: &Grid<usize>,
) -> Result<Vec<f64>> {
    spec.require_si()?;
    if si_next_state.shape() != [spec.w_size, spec.y_size, spec.zw_size] {
        return Err(Error::dim("si_next_state must be [w, y, zw]"));
    }
    si_next_state.check_bound(spec.zw_size, "si next state")?;
    // Ctx indexes tables by stage.
    let tables = vec![si_next_state.clone(); t];
    let ctx = Ctx::new(spec, Some(&tables));
    ctx.check(belief, action)?;
    ctx.update(t, belief, action, y)
}

/// `P(x_t | y^t)` from the state and action after observing `y`.
pub fn output_posterior(belief: &[f64], action: &MdpAction, y: usize) -> Result<Vec<f64>> {
    let mut post: Vec<f64> = belief
        .iter()
        .zip(&action.mapping)
        .map(|(&s, &a)| if a == y { s } else { 0.0 })
        .collect();
    let total: f64 = post.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroProbabilityObservation(y));
    }
    post.iter_mut().for_each(|p| *p /= total);
    Ok(post)
}

/// Stage cost `beta + lambda alpha` of an action in a state.
pub fn stage_cost(spec: &ProblemSpec, t: usize, belief: &[f64], action: &MdpAction) -> Result<f64> {
    spec.require_no_si()?;
    let ctx = Ctx::new(spec, None);
    ctx.check(belief, action)?;
    Ok(ctx.cost(t, belief, action))
}

/// Side-information stage cost; reproduction is the Bayes response given
/// `(y, w, zw)`.
pub fn stage_cost_si(spec: &ProblemSpec, t: usize, belief: &[f64], action: &MdpAction) -> Result<f64> {
    spec.require_si()?;
    let ctx = Ctx::new(spec, None);
    ctx.check(belief, action)?;
    Ok(ctx.cost(t, belief, action))
}

fn states_of(interners: Vec<Interner>) -> Vec<Vec<MdpState>> {
    interners
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            s.into_items()
                .into_iter()
                .enumerate()
                .map(|(id, belief)| MdpState { stage: i + 1, id, belief })
                .collect()
        })
        .collect()
}

/// Reachable states per stage under every action sequence. `budget` caps the
/// number of (state, action) expansions.
pub fn enumerate_reachable(spec: &ProblemSpec, budget: u64) -> Result<Vec<Vec<MdpState>>> {
    spec.require_no_si()?;
    Ok(states_of(Ctx::new(spec, None).enumerate(budget)?))
}

pub fn enumerate_reachable_si(
    spec: &ProblemSpec,
    si_next_state: &[Grid<usize>],
    budget: u64,
) -> Result<Vec<Vec<MdpState>>> {
    check_si_tables(spec, si_next_state)?;
    Ok(states_of(Ctx::new(spec, Some(si_next_state)).enumerate(budget)?))
}

/// Backward induction over reachable states; ties go to the
/// lexicographically smallest action.
pub fn solve_backward(spec: &ProblemSpec, budget: u64) -> Result<MdpSolution> {
    spec.require_no_si()?;
    Ctx::new(spec, None).solve(budget)
}

/// Backward induction with side information and fixed `r^w` tables.
pub fn solve_backward_si(spec: &ProblemSpec, si_next_state: &[Grid<usize>], budget: u64) -> Result<MdpSolution> {
    check_si_tables(spec, si_next_state)?;
    Ctx::new(spec, Some(si_next_state)).solve(budget)
}

/// Runs the optimal policy forward as a tracking encoder over the
/// prefix-tree memory, with Bayes reproduction.
pub fn policy_to_tracking(spec: &ProblemSpec, solution: &MdpSolution) -> Result<(EncoderPolicy, DecoderPolicy)> {
    let si = solution.si_next_state.as_deref();
    if si.is_some() != spec.has_si() {
        return Err(Error::dim("solution and spec disagree on side information"));
    }
    let ctx = Ctx::new(spec, si);
    let mut memory = MemoryUpdate::prefix_tree(spec);
    if let Some(s) = si {
        memory = memory.with_si(s.to_vec());
    }
    let zy = memory.zy_size();
    let lookup: Vec<HashMap<Vec<i64>, &ValueEntry>> = solution
        .table
        .stages
        .iter()
        .map(|s| s.iter().map(|e| (belief_key(&e.state.belief), e)).collect())
        .collect();
    let mut tables = vec![Grid::filled(vec![spec.x_size, zy], 0usize); spec.horizon];
    // (prefix index within its length, belief)
    let mut frontier = vec![(0usize, ctx.initial())];
    let mut offset = 0;
    for t in 1..=spec.horizon {
        let mut next = Vec::new();
        for (p, belief) in &frontier {
            let entry = lookup[t - 1]
                .get(&belief_key(belief))
                .ok_or(Error::UnknownBelief(t))?;
            let a = &entry.action;
            for x in 0..spec.x_size {
                tables[t - 1].set(&[x, offset + p], a.mapping[x]);
            }
            if t < spec.horizon {
                for (y, &py) in ctx.output_law(belief, a).iter().enumerate() {
                    if py > 0.0 {
                        next.push((p * spec.y_size + y, ctx.update(t, belief, a, y)?));
                    }
                }
            }
        }
        offset += spec.y_size.pow(t as u32 - 1);
        frontier = next;
    }
    let encoder = EncoderPolicy::TrackingDeterministic(tables);
    let decoder = bayes_decoder(spec, &encoder, &memory)?;
    Ok((encoder, decoder))
}
