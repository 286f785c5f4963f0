//! Exact per-stage probability flow through encoder and decoder memory.
//!
//! Both routes produce, for every stage `t`, the mass table
//! `P(x_t, y_t, zy_{t-1}, zw_{t-1}, w_t)`. Everything downstream (cost,
//! Bayes reproduction, code lengths) is a function of these tables. Without
//! side information the `zw` and `w` axes have a single dummy symbol.

use crate::error::{Error, Result};
use crate::length::conditional_length_unchecked;
use crate::model::ProblemSpec;

use super::policy::{Draw, HistoryEncoder, MemoryUpdate};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Dims {
    pub x: usize,
    pub y: usize,
    pub zy: usize,
    pub zw: usize,
    pub w: usize,
}

impl Dims {
    pub(crate) fn new(spec: &ProblemSpec, zy: usize) -> Self {
        let (w, zw) = spec.si_dims();
        Dims { x: spec.x_size, y: spec.y_size, zy, zw, w }
    }

    pub(crate) fn mass_len(&self) -> usize {
        self.x * self.y * self.zy * self.zw * self.w
    }

    pub(crate) fn joint_len(&self) -> usize {
        self.x * self.zy * self.zw
    }

    #[inline]
    pub(crate) fn mass_at(&self, x: usize, y: usize, zy: usize, zw: usize, w: usize) -> usize {
        (((x * self.y + y) * self.zy + zy) * self.zw + zw) * self.w + w
    }

    #[inline]
    pub(crate) fn joint_at(&self, x: usize, zy: usize, zw: usize) -> usize {
        (x * self.zy + zy) * self.zw + zw
    }

    /// Flat index in the `[w, y, zw, zy]` reproduction layout (which equals
    /// `[y, zy]` when the dummy axes have one symbol).
    #[inline]
    pub(crate) fn repro_at(&self, w: usize, y: usize, zw: usize, zy: usize) -> usize {
        ((w * self.y + y) * self.zw + zw) * self.zy + zy
    }

    pub(crate) fn repro_len(&self) -> usize {
        self.w * self.y * self.zw * self.zy
    }
}

/// Stage-1 joint: `P(x_1)` with both memories in state 0.
pub(crate) fn initial_joint(spec: &ProblemSpec, dims: &Dims) -> Vec<f64> {
    let mut joint = vec![0.0; dims.joint_len()];
    for x in 0..dims.x {
        joint[dims.joint_at(x, 0, 0)] = spec.initial[x];
    }
    joint
}

/// Masses at stage `t` from the joint `P(x_t, zy_{t-1}, zw_{t-1})` and an
/// encoder filling `P(y | x, zy)` into `out`.
pub(crate) fn tracking_masses(
    spec: &ProblemSpec,
    dims: &Dims,
    joint: &[f64],
    mut encoder: impl FnMut(usize, usize, &mut [f64]),
    masses: &mut Vec<f64>,
) {
    masses.clear();
    masses.resize(dims.mass_len(), 0.0);
    let mut row = vec![0.0; dims.y];
    for x in 0..dims.x {
        for zy in 0..dims.zy {
            let cell: f64 = (0..dims.zw).map(|zw| joint[dims.joint_at(x, zy, zw)]).sum();
            if cell <= 0.0 {
                continue;
            }
            encoder(x, zy, &mut row);
            for (y, &py) in row.iter().enumerate() {
                if py <= 0.0 {
                    continue;
                }
                for zw in 0..dims.zw {
                    let p = joint[dims.joint_at(x, zy, zw)] * py;
                    if p <= 0.0 {
                        continue;
                    }
                    for w in 0..dims.w {
                        masses[dims.mass_at(x, y, zy, zw, w)] = p * spec.channel(x, w);
                    }
                }
            }
        }
    }
}

/// Joint at stage `t + 1` from stage-`t` masses.
pub(crate) fn next_joint(
    spec: &ProblemSpec,
    dims: &Dims,
    t: usize,
    masses: &[f64],
    next_zy: impl Fn(usize, usize) -> usize,
    next_zw: impl Fn(usize, usize, usize) -> usize,
    out: &mut Vec<f64>,
) {
    out.clear();
    out.resize(dims.joint_len(), 0.0);
    let kernel = spec.transition(t + 1);
    for x in 0..dims.x {
        for y in 0..dims.y {
            for zy in 0..dims.zy {
                for zw in 0..dims.zw {
                    for w in 0..dims.w {
                        let m = masses[dims.mass_at(x, y, zy, zw, w)];
                        if m <= 0.0 {
                            continue;
                        }
                        let nz = next_zy(y, zy);
                        let nw = next_zw(w, y, zw);
                        for (x2, &p) in kernel[x].iter().enumerate() {
                            out[dims.joint_at(x2, nz, nw)] += m * p;
                        }
                    }
                }
            }
        }
    }
}

/// `sum_zy P(zy) L(P(y | zy))` from stage masses.
pub(crate) fn stage_length(dims: &Dims, masses: &[f64]) -> f64 {
    let mut pyz = vec![0.0; dims.y * dims.zy];
    for x in 0..dims.x {
        for y in 0..dims.y {
            for zy in 0..dims.zy {
                for zw in 0..dims.zw {
                    for w in 0..dims.w {
                        pyz[y * dims.zy + zy] += masses[dims.mass_at(x, y, zy, zw, w)];
                    }
                }
            }
        }
    }
    conditional_length_unchecked(dims.y, dims.zy, |y, z| pyz[y * dims.zy + z])
}

/// Expected distortion for a fixed reproduction rule.
pub(crate) fn stage_distortion(
    spec: &ProblemSpec,
    dims: &Dims,
    t: usize,
    masses: &[f64],
    reproduce: impl Fn(usize, usize, usize, usize) -> usize,
) -> f64 {
    let rho = spec.distortion_at(t);
    let mut total = 0.0;
    for x in 0..dims.x {
        for y in 0..dims.y {
            for zy in 0..dims.zy {
                for zw in 0..dims.zw {
                    for w in 0..dims.w {
                        let m = masses[dims.mass_at(x, y, zy, zw, w)];
                        if m > 0.0 {
                            total += m * rho[x][reproduce(w, y, zw, zy)];
                        }
                    }
                }
            }
        }
    }
    total
}

/// Bayes reproduction per `(w, y, zw, zy)` cell and the resulting expected
/// distortion. Unreachable cells get symbol 0; ties go to the smaller index.
pub(crate) fn stage_bayes(
    spec: &ProblemSpec,
    dims: &Dims,
    t: usize,
    masses: &[f64],
    table: &mut Vec<usize>,
) -> f64 {
    let rho = spec.distortion_at(t);
    table.clear();
    table.resize(dims.repro_len(), 0);
    let mut total = 0.0;
    let mut weights = vec![0.0; dims.x];
    for w in 0..dims.w {
        for y in 0..dims.y {
            for zw in 0..dims.zw {
                for zy in 0..dims.zy {
                    let mut any = false;
                    for (x, wt) in weights.iter_mut().enumerate() {
                        *wt = masses[dims.mass_at(x, y, zy, zw, w)];
                        any |= *wt > 0.0;
                    }
                    if !any {
                        continue;
                    }
                    let (best, value) = bayes_argmin(&weights, rho, spec.xhat_size);
                    table[dims.repro_at(w, y, zw, zy)] = best;
                    total += value;
                }
            }
        }
    }
    total
}

/// `argmin_xhat sum_x weights[x] rho[x][xhat]`, smallest index on ties.
pub(crate) fn bayes_argmin(weights: &[f64], rho: &[Vec<f64>], xhat_size: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for xhat in 0..xhat_size {
        let v: f64 = weights.iter().zip(rho).map(|(w, r)| w * r[xhat]).sum();
        if v < best.1 {
            best = (xhat, v);
        }
    }
    best
}

/// Stage masses for a tracking encoder via the compact joint recursion.
pub(crate) fn tracking_flow(
    spec: &ProblemSpec,
    encoder: &super::EncoderPolicy,
    memory: &MemoryUpdate,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let dims = Dims::new(spec, memory.zy_size());
    let mut joint = initial_joint(spec, &dims);
    let mut joints = Vec::with_capacity(spec.horizon);
    let mut all = Vec::with_capacity(spec.horizon);
    for t in 1..=spec.horizon {
        let mut masses = Vec::new();
        tracking_masses(
            spec,
            &dims,
            &joint,
            |x, zy, out| {
                let d = encoder.tracking_draw(t, x, zy);
                for (y, o) in out.iter_mut().enumerate() {
                    *o = d.prob(y);
                }
            },
            &mut masses,
        );
        joints.push(joint.clone());
        if t < spec.horizon {
            let mut next = Vec::new();
            next_joint(
                spec,
                &dims,
                t,
                &masses,
                |y, zy| memory.next(t, y, zy),
                |w, y, zw| memory.next_w(t, w, y, zw),
                &mut next,
            );
            joint = next;
        }
        all.push(masses);
    }
    (joints, all)
}

/// A realized `(x^{t-1}, y^{t-1})` prefix with its decoder state and the
/// unnormalized `P(x^{t-1}, y^{t-1}, zw_{t-1})` for each `zw`.
#[derive(Clone, Debug)]
pub(crate) struct HistoryNode {
    pub xs: Vec<usize>,
    pub ys: Vec<usize>,
    pub zy: usize,
    pub mass: Vec<f64>,
}

impl HistoryNode {
    pub(crate) fn root(dims: &Dims) -> Self {
        let mut mass = vec![0.0; dims.zw];
        mass[0] = 1.0;
        HistoryNode { xs: Vec::new(), ys: Vec::new(), zy: 0, mass }
    }

    pub(crate) fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Normalized belief over `zw`.
    pub(crate) fn belief(&self) -> Vec<f64> {
        let s = self.total();
        self.mass.iter().map(|m| m / s).collect()
    }
}

/// Expands every node by `x_t` and `y_t`, accumulating stage masses.
/// `draw(index, node, x, x^t)` gives the encoder output law for the extended
/// history.
#[allow(clippy::too_many_arguments)]
pub(crate) fn expand_histories<'e>(
    spec: &ProblemSpec,
    dims: &Dims,
    t: usize,
    nodes: &[HistoryNode],
    mut draw: impl FnMut(usize, &HistoryNode, usize, &[usize]) -> Result<Draw<'e>>,
    memory: Option<&MemoryUpdate>,
    next_zy: &dyn Fn(usize, usize) -> usize,
    want_children: bool,
    masses: &mut Vec<f64>,
) -> Result<Vec<HistoryNode>> {
    masses.clear();
    masses.resize(dims.mass_len(), 0.0);
    let mut children = Vec::new();
    let mut xs = Vec::with_capacity(t);
    for (index, node) in nodes.iter().enumerate() {
        let prev = node.xs.last().copied();
        for x in 0..dims.x {
            let px = spec.source_step(t, prev, x);
            if px <= 0.0 {
                continue;
            }
            xs.clear();
            xs.extend_from_slice(&node.xs);
            xs.push(x);
            let d = draw(index, node, x, &xs)?;
            for y in 0..dims.y {
                let py = d.prob(y);
                if py <= 0.0 {
                    continue;
                }
                let mut child_mass = vec![0.0; dims.zw];
                for zw in 0..dims.zw {
                    let base = node.mass[zw] * px * py;
                    if base <= 0.0 {
                        continue;
                    }
                    for w in 0..dims.w {
                        let m = base * spec.channel(x, w);
                        masses[dims.mass_at(x, y, node.zy, zw, w)] += m;
                        let nw = memory.map_or(0, |mem| mem.next_w(t, w, y, zw));
                        child_mass[nw] += m;
                    }
                }
                if want_children {
                    let mut ys = node.ys.clone();
                    ys.push(y);
                    children.push(HistoryNode {
                        xs: xs.clone(),
                        ys,
                        zy: next_zy(y, node.zy),
                        mass: child_mass,
                    });
                }
            }
        }
    }
    Ok(children)
}

/// Stage masses for any encoder by walking explicit histories.
pub(crate) fn history_flow(
    spec: &ProblemSpec,
    encoder: &super::EncoderPolicy,
    memory: &MemoryUpdate,
    budget: usize,
) -> Result<Vec<Vec<f64>>> {
    let dims = Dims::new(spec, memory.zy_size());
    let resolver = HistoryEncoder::new(spec, encoder);
    let mut nodes = vec![HistoryNode::root(&dims)];
    let mut all = Vec::with_capacity(spec.horizon);
    for t in 1..=spec.horizon {
        let mut masses = Vec::new();
        let children = expand_histories(
            spec,
            &dims,
            t,
            &nodes,
            |_, node, _x, xs| resolver.draw(xs, &node.ys, node.zy, &node.belief()),
            Some(memory),
            &|y, zy| memory.next(t, y, zy),
            t < spec.horizon,
            &mut masses,
        )?;
        if children.len() > budget {
            return Err(Error::BudgetExceeded {
                what: format!("history expansion at stage {}", t + 1),
                budget: budget as u64,
            });
        }
        nodes = children;
        all.push(masses);
    }
    Ok(all)
}
