//! Exhaustive search over tracking encoders (and optionally next-state
//! tables) by memoized recursion on the stage joint `P(x_t, zy_{t-1}, zw_{t-1})`.
//!
//! The cost to go from stage `t` depends on earlier choices only through that
//! joint, so the search keys a memo on it. Only reachable cells vary; the
//! rest stay 0. Choices are enumerated in ascending lexicographic order and a
//! candidate replaces the incumbent only when strictly better (by more than
//! [`TIE`]), which yields the lexicographically smallest optimum.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::length::expected_length_of_weights;
use crate::model::ProblemSpec;
use crate::system::flow::{Dims, initial_joint};
use crate::system::MemoryUpdate;

/// Improvements smaller than this count as ties.
pub(crate) const TIE: f64 = 1e-12;
/// Memo keys round joint entries to this grid.
const KEY_ROUNDING: f64 = 1e-12;

#[derive(Clone, Copy)]
pub(crate) enum Reproduction<'a> {
    /// Given reproduction tables.
    Fixed(&'a [Grid<usize>]),
    /// Stagewise Bayes response to the induced posterior.
    Bayes,
}

#[derive(Clone, Copy)]
pub(crate) enum Memory<'a> {
    Fixed(&'a MemoryUpdate),
    /// Search next-state tables over `zy` states, up to relabeling.
    Search { zy: usize },
}

/// Optimal choices per stage: encoder `[x, zy]` and next-state `[y, zy]`
/// tables, flat.
pub(crate) struct Plan {
    pub encoder: Vec<Vec<usize>>,
    pub next_state: Vec<Vec<usize>>,
    pub value: f64,
    pub evaluated: u64,
}

pub(crate) struct JointSearch<'a> {
    spec: &'a ProblemSpec,
    dims: Dims,
    repro: Reproduction<'a>,
    memory: Memory<'a>,
    budget: u64,
    evaluated: u64,
    memo: Vec<HashMap<Vec<i64>, f64>>,
    rgs_cache: HashMap<(usize, usize), Vec<Vec<usize>>>,
}

/// Advances a mixed-radix counter (last digit fastest); false on wrap.
pub(crate) fn odometer(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// Restricted growth strings of length `n` over labels `< k`, ascending.
pub(crate) fn restricted_growth(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn walk(prefix: &mut Vec<usize>, max: usize, n: usize, k: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let top = if prefix.is_empty() { 0 } else { (max + 1).min(k - 1) };
        for label in 0..=top {
            prefix.push(label);
            walk(prefix, max.max(label), n, k, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    walk(&mut Vec::with_capacity(n), 0, n, k, &mut out);
    out
}

fn joint_key(joint: &[f64]) -> Vec<i64> {
    joint.iter().map(|p| (p / KEY_ROUNDING).round() as i64).collect()
}

impl<'a> JointSearch<'a> {
    pub(crate) fn new(spec: &'a ProblemSpec, repro: Reproduction<'a>, memory: Memory<'a>, budget: u64) -> Self {
        let zy = match memory {
            Memory::Fixed(m) => m.zy_size(),
            Memory::Search { zy } => zy,
        };
        JointSearch {
            spec,
            dims: Dims::new(spec, zy),
            repro,
            memory,
            budget,
            evaluated: 0,
            memo: vec![HashMap::new(); spec.horizon],
            rgs_cache: HashMap::new(),
        }
    }

    fn charge(&mut self) -> Result<()> {
        self.evaluated += 1;
        if self.evaluated > self.budget {
            return Err(Error::BudgetExceeded {
                what: "tracking search".into(),
                budget: self.budget,
            });
        }
        Ok(())
    }

    fn cell_mass(&self, joint: &[f64], x: usize, zy: usize) -> f64 {
        (0..self.dims.zw).map(|zw| joint[self.dims.joint_at(x, zy, zw)]).sum()
    }

    /// Distortion plus weighted length contributed by decoder state `zy` when
    /// source symbol `x` is sent as `out(x)`.
    fn column_cost(&self, t: usize, joint: &[f64], zy: usize, out: impl Fn(usize) -> usize) -> f64 {
        let d = &self.dims;
        let rho = self.spec.distortion_at(t);
        let mut py = vec![0.0; d.y];
        let mut distortion = 0.0;
        let mut weights = match self.repro {
            Reproduction::Bayes => vec![0.0; d.w * d.y * d.zw * d.x],
            Reproduction::Fixed(_) => Vec::new(),
        };
        for x in 0..d.x {
            let y = out(x);
            for zw in 0..d.zw {
                let pj = joint[d.joint_at(x, zy, zw)];
                if pj <= 0.0 {
                    continue;
                }
                for w in 0..d.w {
                    let m = pj * self.spec.channel(x, w);
                    py[y] += m;
                    match self.repro {
                        Reproduction::Fixed(g) => {
                            distortion += m * rho[x][g[t - 1].data()[d.repro_at(w, y, zw, zy)]];
                        }
                        Reproduction::Bayes => {
                            weights[((w * d.y + y) * d.zw + zw) * d.x + x] += m;
                        }
                    }
                }
            }
        }
        if let Reproduction::Bayes = self.repro {
            for cell in weights.chunks(d.x) {
                if cell.iter().any(|m| *m > 0.0) {
                    distortion += (0..self.spec.xhat_size)
                        .map(|xh| cell.iter().zip(rho).map(|(m, r)| m * r[xh]).sum::<f64>())
                        .fold(f64::INFINITY, f64::min);
                }
            }
        }
        let total: f64 = py.iter().sum();
        distortion + self.spec.lambda * total * expected_length_of_weights(&py)
    }

    fn stage_cost(&self, t: usize, joint: &[f64], f: &[usize]) -> f64 {
        (0..self.dims.zy)
            .filter(|&zy| (0..self.dims.x).any(|x| self.cell_mass(joint, x, zy) > 0.0))
            .map(|zy| self.column_cost(t, joint, zy, |x| f[x * self.dims.zy + zy]))
            .sum()
    }

    fn next_joint(&self, t: usize, joint: &[f64], f: &[usize], r: &[usize]) -> Vec<f64> {
        let d = &self.dims;
        let kernel = self.spec.transition(t + 1);
        let si = match self.memory {
            Memory::Fixed(m) => m.si_next_state.as_ref().map(|s| &s[t - 1]),
            Memory::Search { .. } => None,
        };
        let mut out = vec![0.0; d.joint_len()];
        for x in 0..d.x {
            for zy in 0..d.zy {
                let y = f[x * d.zy + zy];
                let nz = r[y * d.zy + zy];
                for zw in 0..d.zw {
                    let pj = joint[d.joint_at(x, zy, zw)];
                    if pj <= 0.0 {
                        continue;
                    }
                    for w in 0..d.w {
                        let m = pj * self.spec.channel(x, w);
                        let nw = si.map_or(0, |g| *g.get(&[w, y, zw]));
                        for (x2, &p) in kernel[x].iter().enumerate() {
                            out[d.joint_at(x2, nz, nw)] += m * p;
                        }
                    }
                }
            }
        }
        out
    }

    fn reachable_cells(&self, joint: &[f64]) -> Vec<usize> {
        (0..self.dims.x * self.dims.zy)
            .filter(|&c| self.cell_mass(joint, c / self.dims.zy, c % self.dims.zy) > 0.0)
            .collect()
    }

    fn next_options(&mut self, t: usize, joint: &[f64], f: &[usize]) -> Vec<Vec<usize>> {
        let d = self.dims;
        match self.memory {
            Memory::Fixed(m) => vec![m.next_state[t - 1].data().to_vec()],
            Memory::Search { zy } => {
                let mut used = vec![false; d.y * d.zy];
                for c in self.reachable_cells(joint) {
                    let (x, z) = (c / d.zy, c % d.zy);
                    used[f[x * d.zy + z] * d.zy + z] = true;
                }
                let cells: Vec<usize> = (0..used.len()).filter(|&i| used[i]).collect();
                let strings = self
                    .rgs_cache
                    .entry((cells.len(), zy))
                    .or_insert_with(|| restricted_growth(cells.len(), zy));
                strings
                    .iter()
                    .map(|labels| {
                        let mut r = vec![0; d.y * d.zy];
                        for (&c, &l) in cells.iter().zip(labels) {
                            r[c] = l;
                        }
                        r
                    })
                    .collect()
            }
        }
    }

    /// Final stage: columns are independent, so each is minimized alone.
    fn last_stage(&mut self, t: usize, joint: &[f64]) -> Result<(f64, Vec<usize>)> {
        let d = self.dims;
        let mut f = vec![0; d.x * d.zy];
        let mut total = 0.0;
        for zy in 0..d.zy {
            let xs: Vec<usize> = (0..d.x).filter(|&x| self.cell_mass(joint, x, zy) > 0.0).collect();
            if xs.is_empty() {
                continue;
            }
            let mut digits = vec![0; xs.len()];
            let mut column = vec![0; d.x];
            let mut best = (f64::INFINITY, digits.clone());
            loop {
                self.charge()?;
                for (&x, &y) in xs.iter().zip(&digits) {
                    column[x] = y;
                }
                let c = self.column_cost(t, joint, zy, |x| column[x]);
                if c < best.0 - TIE {
                    best = (c, digits.clone());
                }
                if !odometer(&mut digits, d.y) {
                    break;
                }
            }
            for (&x, &y) in xs.iter().zip(&best.1) {
                f[x * d.zy + zy] = y;
            }
            total += best.0;
        }
        Ok((total, f))
    }

    fn value(&mut self, t: usize, joint: &[f64]) -> Result<f64> {
        let key = joint_key(joint);
        if let Some(&v) = self.memo[t - 1].get(&key) {
            return Ok(v);
        }
        let v = if t == self.spec.horizon {
            self.last_stage(t, joint)?.0
        } else {
            self.best(t, joint)?.0
        };
        self.memo[t - 1].insert(key, v);
        Ok(v)
    }

    fn best(&mut self, t: usize, joint: &[f64]) -> Result<(f64, Vec<usize>, Vec<usize>)> {
        let d = self.dims;
        let cells = self.reachable_cells(joint);
        let mut digits = vec![0; cells.len()];
        let mut f = vec![0; d.x * d.zy];
        let mut best = (f64::INFINITY, Vec::new(), Vec::new());
        loop {
            for (&c, &y) in cells.iter().zip(&digits) {
                f[c] = y;
            }
            let stage = self.stage_cost(t, joint, &f);
            for r in self.next_options(t, joint, &f) {
                self.charge()?;
                let next = self.next_joint(t, joint, &f, &r);
                let v = stage + self.value(t + 1, &next)?;
                if v < best.0 - TIE {
                    best = (v, f.clone(), r);
                }
            }
            if !odometer(&mut digits, d.y) {
                break;
            }
        }
        Ok(best)
    }

    pub(crate) fn run(mut self) -> Result<Plan> {
        let horizon = self.spec.horizon;
        let mut joint = initial_joint(self.spec, &self.dims);
        let mut encoder = Vec::with_capacity(horizon);
        let mut next_state = Vec::with_capacity(horizon);
        let mut value = 0.0;
        for t in 1..=horizon {
            if t < horizon {
                let (v, f, r) = self.best(t, &joint)?;
                if t == 1 {
                    value = v;
                }
                joint = self.next_joint(t, &joint, &f, &r);
                encoder.push(f);
                next_state.push(r);
            } else {
                let (v, f) = self.last_stage(t, &joint)?;
                if t == 1 {
                    value = v;
                }
                encoder.push(f);
                next_state.push(match self.memory {
                    Memory::Fixed(m) => m.next_state[t - 1].data().to_vec(),
                    Memory::Search { .. } => vec![0; self.dims.y * self.dims.zy],
                });
            }
        }
        Ok(Plan {
            encoder,
            next_state,
            value: value / horizon as f64,
            evaluated: self.evaluated,
        })
    }

    pub(crate) fn dims(&self) -> Dims {
        self.dims
    }
}
