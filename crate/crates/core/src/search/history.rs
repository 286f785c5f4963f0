//! Exhaustive search over deterministic encoders that see the whole history
//! `(x^t, y^{t-1})`, optionally constrained to agree on histories sharing the
//! encoder belief, source symbol and decoder state.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::ProblemSpec;
use crate::system::flow::{Dims, HistoryNode, expand_histories, stage_bayes, stage_distortion, stage_length};
use crate::system::{BeliefStage, belief_key, Draw, EncoderPolicy, Interner, MemoryUpdate, history_offset, history_shape};

use super::engine::{Reproduction, TIE, odometer};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Grouping {
    /// One free choice per realized history.
    PerHistory,
    /// Histories with equal `(b_{t-1}, x_t, zy_{t-1})` share a choice.
    ByBelief,
}

/// One chosen output for one extended history.
#[derive(Clone, Debug)]
struct Decision {
    xs: Vec<usize>,
    ys: Vec<usize>,
    belief: Vec<f64>,
    zy: usize,
    y: usize,
}

pub(crate) struct HistorySearch<'a> {
    spec: &'a ProblemSpec,
    dims: Dims,
    memory: &'a MemoryUpdate,
    repro: Reproduction<'a>,
    grouping: Grouping,
    budget: u64,
    evaluated: u64,
}

pub(crate) struct HistoryPlan {
    pub encoder: EncoderPolicy,
    pub evaluated: u64,
}

impl<'a> HistorySearch<'a> {
    pub(crate) fn new(
        spec: &'a ProblemSpec,
        memory: &'a MemoryUpdate,
        repro: Reproduction<'a>,
        grouping: Grouping,
        budget: u64,
    ) -> Self {
        HistorySearch {
            spec,
            dims: Dims::new(spec, memory.zy_size()),
            memory,
            repro,
            grouping,
            budget,
            evaluated: 0,
        }
    }

    fn charge(&mut self) -> Result<()> {
        self.evaluated += 1;
        if self.evaluated > self.budget {
            return Err(Error::BudgetExceeded {
                what: "full-history search".into(),
                budget: self.budget,
            });
        }
        Ok(())
    }

    /// Decision units over the extended histories `(node, x)`: returns, per
    /// cell in expansion order, its unit index, plus the unit count.
    fn units(&self, t: usize, nodes: &[HistoryNode]) -> (Vec<(usize, usize)>, Vec<usize>, usize) {
        let mut cells = Vec::new();
        let mut unit_of = Vec::new();
        let mut keys: HashMap<(Vec<i64>, usize, usize), usize> = HashMap::new();
        for (i, node) in nodes.iter().enumerate() {
            let prev = node.xs.last().copied();
            for x in 0..self.dims.x {
                if self.spec.source_step(t, prev, x) <= 0.0 {
                    continue;
                }
                let unit = match self.grouping {
                    Grouping::PerHistory => cells.len(),
                    Grouping::ByBelief => {
                        let n = keys.len();
                        *keys.entry((belief_key(&node.belief()), x, node.zy)).or_insert(n)
                    }
                };
                cells.push((i, x));
                unit_of.push(unit);
            }
        }
        let count = match self.grouping {
            Grouping::PerHistory => cells.len(),
            Grouping::ByBelief => keys.len(),
        };
        (cells, unit_of, count)
    }

    fn stage_cost(&self, t: usize, masses: &[f64]) -> f64 {
        let distortion = match self.repro {
            Reproduction::Fixed(g) => {
                let dims = &self.dims;
                stage_distortion(self.spec, dims, t, masses, |w, y, zw, zy| {
                    g[t - 1].data()[dims.repro_at(w, y, zw, zy)]
                })
            }
            Reproduction::Bayes => stage_bayes(self.spec, &self.dims, t, masses, &mut Vec::new()),
        };
        distortion + self.spec.lambda * stage_length(&self.dims, masses)
    }

    /// Expands `nodes` under an assignment of outputs to cells.
    fn expand(
        &self,
        t: usize,
        nodes: &[HistoryNode],
        lookup: &HashMap<(usize, usize), usize>,
        want_children: bool,
        masses: &mut Vec<f64>,
    ) -> Result<Vec<HistoryNode>> {
        let memory = self.memory;
        expand_histories(
            self.spec,
            &self.dims,
            t,
            nodes,
            |i, _, x, _| Ok(Draw::Det(lookup[&(i, x)])),
            Some(memory),
            &|y, zy| memory.next(t, y, zy),
            want_children,
            masses,
        )
    }

    fn decisions(
        nodes: &[HistoryNode],
        cells: &[(usize, usize)],
        unit_of: &[usize],
        choice: &[usize],
    ) -> Vec<Decision> {
        cells
            .iter()
            .zip(unit_of)
            .map(|(&(i, x), &u)| {
                let node = &nodes[i];
                let mut xs = node.xs.clone();
                xs.push(x);
                Decision {
                    xs,
                    ys: node.ys.clone(),
                    belief: node.belief(),
                    zy: node.zy,
                    y: choice[u],
                }
            })
            .collect()
    }

    /// Final stage: decoder states do not interact, so each group of
    /// histories sharing `zy` is optimized alone.
    fn last_stage(&mut self, t: usize, nodes: &[HistoryNode]) -> Result<(f64, Vec<Decision>)> {
        let mut total = 0.0;
        let mut chosen = Vec::new();
        for zy in 0..self.dims.zy {
            let group: Vec<HistoryNode> = nodes.iter().filter(|n| n.zy == zy).cloned().collect();
            if group.is_empty() {
                continue;
            }
            let (cells, unit_of, count) = self.units(t, &group);
            let mut choice = vec![0; count];
            let mut best = (f64::INFINITY, choice.clone());
            let mut masses = Vec::new();
            loop {
                self.charge()?;
                let lookup = cells.iter().zip(&unit_of).map(|(&c, &u)| (c, choice[u])).collect();
                self.expand(t, &group, &lookup, false, &mut masses)?;
                let c = self.stage_cost(t, &masses);
                if c < best.0 - TIE {
                    best = (c, choice.clone());
                }
                if !odometer(&mut choice, self.dims.y) {
                    break;
                }
            }
            total += best.0;
            chosen.extend(Self::decisions(&group, &cells, &unit_of, &best.1));
        }
        Ok((total, chosen))
    }

    fn dfs(&mut self, t: usize, nodes: &[HistoryNode]) -> Result<(f64, Vec<Vec<Decision>>)> {
        if t == self.spec.horizon {
            let (v, d) = self.last_stage(t, nodes)?;
            return Ok((v, vec![d]));
        }
        let (cells, unit_of, count) = self.units(t, nodes);
        let mut choice = vec![0; count];
        let mut best: (f64, Vec<Vec<Decision>>) = (f64::INFINITY, Vec::new());
        let mut masses = Vec::new();
        loop {
            self.charge()?;
            let lookup = cells.iter().zip(&unit_of).map(|(&c, &u)| (c, choice[u])).collect();
            let children = self.expand(t, nodes, &lookup, true, &mut masses)?;
            let stage = self.stage_cost(t, &masses);
            let (rest, path) = self.dfs(t + 1, &children)?;
            if stage + rest < best.0 - TIE {
                let mut full = vec![Self::decisions(nodes, &cells, &unit_of, &choice)];
                full.extend(path);
                best = (stage + rest, full);
            }
            if !odometer(&mut choice, self.dims.y) {
                break;
            }
        }
        Ok(best)
    }

    pub(crate) fn run(mut self) -> Result<HistoryPlan> {
        let root = vec![HistoryNode::root(&self.dims)];
        let (_, path) = self.dfs(1, &root)?;
        let encoder = match self.grouping {
            Grouping::PerHistory => EncoderPolicy::FullHistoryDeterministic(
                path.iter()
                    .enumerate()
                    .map(|(i, stage)| {
                        let mut g = Grid::filled(history_shape(self.spec, i + 1), 0usize);
                        for d in stage {
                            g.data_mut()[history_offset(self.spec, &d.xs, &d.ys)] = d.y;
                        }
                        g
                    })
                    .collect(),
            ),
            Grouping::ByBelief => EncoderPolicy::SiBeliefDeterministic(
                path.iter()
                    .map(|stage| {
                        let mut interner = Interner::new();
                        let ids: Vec<usize> = stage.iter().map(|d| interner.intern(&d.belief).0).collect();
                        let mut table = Grid::filled(vec![interner.len(), self.dims.x, self.dims.zy], 0usize);
                        for (d, &id) in stage.iter().zip(&ids) {
                            table.set(&[id, *d.xs.last().unwrap(), d.zy], d.y);
                        }
                        BeliefStage {
                            beliefs: interner.into_items(),
                            table,
                        }
                    })
                    .collect(),
            ),
        };
        Ok(HistoryPlan {
            encoder,
            evaluated: self.evaluated,
        })
    }
}
