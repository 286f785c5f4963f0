//! Encoder-side belief over the decoder's side-information sub-state.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::ProblemSpec;

/// Coordinate rounding used to intern beliefs.
pub const BELIEF_ROUNDING: f64 = 1e-9;

pub(crate) fn belief_key(probs: &[f64]) -> Vec<i64> {
    probs.iter().map(|p| (p / BELIEF_ROUNDING).round() as i64).collect()
}

/// Probability vector over `Z^w`, as tracked by the encoder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    pub probs: Vec<f64>,
}

impl Belief {
    /// Point mass on `state`.
    pub fn degenerate(size: usize, state: usize) -> Self {
        let mut probs = vec![0.0; size];
        probs[state] = 1.0;
        Belief { probs }
    }

    pub fn key(&self) -> Vec<i64> {
        belief_key(&self.probs)
    }
}

/// Deduplicates beliefs (or any probability vectors) by rounded coordinates.
#[derive(Clone, Debug, Default)]
pub struct Interner {
    ids: HashMap<Vec<i64>, usize>,
    items: Vec<Vec<f64>>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id and whether the vector was new.
    pub fn intern(&mut self, probs: &[f64]) -> (usize, bool) {
        let key = belief_key(probs);
        if let Some(&id) = self.ids.get(&key) {
            return (id, false);
        }
        let id = self.items.len();
        self.ids.insert(key, id);
        self.items.push(probs.to_vec());
        (id, true)
    }

    pub fn get(&self, probs: &[f64]) -> Option<usize> {
        self.ids.get(&belief_key(probs)).copied()
    }

    pub fn items(&self) -> &[Vec<f64>] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn into_items(self) -> Vec<Vec<f64>> {
        self.items
    }
}

/// `b_t(z) = sum over (w, z') with r^w(w, y, z') = z of P(w | x) b_{t-1}(z')`.
///
/// `si_next_state` is the stage-`t` table `[w, y, zw] -> zw'`.
pub fn encoder_belief_update(
    spec: &ProblemSpec,
    belief: &Belief,
    x: usize,
    y: usize,
    si_next_state: &Grid<usize>,
) -> Result<Belief> {
    spec.require_si()?;
    if belief.probs.len() != spec.zw_size {
        return Err(Error::dim(format!(
            "belief has {} entries, zw_size is {}",
            belief.probs.len(),
            spec.zw_size
        )));
    }
    if si_next_state.shape() != [spec.w_size, spec.y_size, spec.zw_size] {
        return Err(Error::dim("si_next_state shape"));
    }
    if x >= spec.x_size || y >= spec.y_size {
        return Err(Error::dim("symbol out of range"));
    }
    let mut probs = vec![0.0; spec.zw_size];
    for w in 0..spec.w_size {
        let pw = spec.channel(x, w);
        for (zw, &b) in belief.probs.iter().enumerate() {
            probs[*si_next_state.get(&[w, y, zw])] += pw * b;
        }
    }
    Ok(Belief { probs })
}

/// Expected stage-`t` distortion of emitting `y` for source symbol `x` when
/// the encoder's belief over `Z^w_{t-1}` is `belief`:
/// `sum_{w, zw} P(w | x) b(zw) rho_t(x, g_t(w, y, zw, zy))`.
pub fn modified_distortion(
    spec: &ProblemSpec,
    t: usize,
    belief: &Belief,
    x: usize,
    y: usize,
    zy: usize,
    reproduction: &Grid<usize>,
) -> Result<f64> {
    spec.require_si()?;
    if belief.probs.len() != spec.zw_size {
        return Err(Error::dim("belief length != zw_size"));
    }
    if reproduction.shape().len() != 4
        || reproduction.shape()[..3] != [spec.w_size, spec.y_size, spec.zw_size]
    {
        return Err(Error::dim("reproduction must be [w, y, zw, zy]"));
    }
    let rho = spec.distortion_at(t);
    let mut total = 0.0;
    for w in 0..spec.w_size {
        for (zw, &b) in belief.probs.iter().enumerate() {
            total += spec.channel(x, w) * b * rho[x][*reproduction.get(&[w, y, zw, zy])];
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn si_spec() -> ProblemSpec {
        ProblemSpec::from_json(
            r#"{"x_size":2,"y_size":2,"zy_size":1,"zw_size":2,"w_size":2,"xhat_size":2,
                "horizon":2,"lambda":0.5,"initial":[0.6,0.4],
                "transitions":[[0.8,0.2],[0.3,0.7]],"distortion":[[0,1],[1,0]],
                "si_channel":[[0.9,0.1],[0.25,0.75]]}"#,
        )
        .unwrap()
    }

    #[test]
    fn constant_update_is_degenerate() {
        let spec = si_spec();
        let rw = Grid::filled(vec![2, 2, 2], 1usize);
        let b = Belief { probs: vec![0.3, 0.7] };
        let out = encoder_belief_update(&spec, &b, 0, 1, &rw).unwrap();
        assert_eq!(out.probs, vec![0.0, 1.0]);
    }

    #[test]
    fn identity_update_is_fixed_point() {
        let spec = si_spec();
        let rw = Grid::from_vec(vec![2, 2, 2], vec![0, 1, 0, 1, 0, 1, 0, 1]).unwrap();
        let b = Belief { probs: vec![0.3, 0.7] };
        let out = encoder_belief_update(&spec, &b, 1, 0, &rw).unwrap();
        assert!((out.probs[0] - 0.3).abs() < 1e-15 && (out.probs[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn modified_distortion_collapses() {
        let spec = si_spec();
        // g ignores w: g(w, y, zw, zy) = zw.
        let g = Grid::from_vec(vec![2, 2, 2, 1], vec![0, 1, 0, 1, 0, 1, 0, 1]).unwrap();
        let b = Belief::degenerate(2, 1);
        let v = modified_distortion(&spec, 1, &b, 0, 0, 0, &g).unwrap();
        assert_eq!(v, 1.0);
        let v = modified_distortion(&spec, 1, &b, 1, 0, 0, &g).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn interner_rounds() {
        let mut i = Interner::new();
        assert_eq!(i.intern(&[0.5, 0.5]), (0, true));
        assert_eq!(i.intern(&[0.5 + 1e-13, 0.5 - 1e-13]), (0, false));
        assert_eq!(i.intern(&[0.4, 0.6]), (1, true));
    }
}
