//! Problem instances: alphabets, horizon, tradeoff, Markov source law,
//! distortion tables and the optional side-information channel.
//!
//! Stages are 1-based in the public accessors (`transition(t)` for
//! `t = 2..=T`, `distortion_at(t)` for `t = 1..=T`).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Row-major dense matrix, one inner vector per row.
pub type Matrix = Vec<Vec<f64>>;

/// Row-sum tolerance for probability inputs.
pub const VALIDATION_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProblemSpec {
    pub x_size: usize,
    pub y_size: usize,
    pub zy_size: usize,
    /// Side-information sub-state alphabet; 0 when side information is off.
    pub zw_size: usize,
    /// Side-information alphabet; 0 when side information is off.
    pub w_size: usize,
    pub xhat_size: usize,
    pub horizon: usize,
    pub lambda: f64,
    pub initial: Vec<f64>,
    /// `transitions[t - 2]` is `P(x_t | x_{t-1})`, rows indexed by `x_{t-1}`.
    pub transitions: Vec<Matrix>,
    /// `distortion[t - 1]` is `rho_t(x, xhat)`.
    pub distortion: Vec<Matrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub si_channel: Option<Matrix>,
}

/// Either a single table (broadcast to every stage) or one table per stage.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum PerStage {
    Many(Vec<Matrix>),
    One(Matrix),
}

impl PerStage {
    fn resolve(self, stages: usize, field: &str) -> Result<Vec<Matrix>> {
        match self {
            PerStage::One(m) => Ok(vec![m; stages]),
            PerStage::Many(list) if list.len() == stages => Ok(list),
            PerStage::Many(list) => Err(Error::spec(
                field,
                format!("expected {stages} per-stage tables, got {}", list.len()),
            )),
        }
    }
}

/// On-disk JSON layout of a problem spec.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDocument {
    x_size: usize,
    y_size: usize,
    zy_size: usize,
    #[serde(default)]
    zw_size: usize,
    #[serde(default)]
    w_size: usize,
    xhat_size: usize,
    horizon: usize,
    lambda: f64,
    initial: Vec<f64>,
    transitions: PerStage,
    distortion: PerStage,
    #[serde(default)]
    si_channel: Option<Matrix>,
}

impl ProblemSpec {
    /// Parses and validates a JSON problem document.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SpecDocument = serde_json::from_str(text)?;
        let horizon = doc.horizon;
        let raw = ProblemSpec {
            x_size: doc.x_size,
            y_size: doc.y_size,
            zy_size: doc.zy_size,
            zw_size: doc.zw_size,
            w_size: doc.w_size,
            xhat_size: doc.xhat_size,
            horizon,
            lambda: doc.lambda,
            initial: doc.initial,
            transitions: doc
                .transitions
                .resolve(horizon.saturating_sub(1), "transitions")?,
            distortion: doc.distortion.resolve(horizon, "distortion")?,
            si_channel: doc.si_channel,
        };
        validate_spec(raw)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn has_si(&self) -> bool {
        self.si_channel.is_some()
    }

    /// `P(x_t | x_{t-1})` for 1-based `t >= 2`.
    pub fn transition(&self, t: usize) -> &Matrix {
        &self.transitions[t - 2]
    }

    /// `rho_t` for 1-based `t`.
    pub fn distortion_at(&self, t: usize) -> &Matrix {
        &self.distortion[t - 1]
    }

    /// `P(w | x)`, or `1` on a single dummy symbol when side information is off.
    pub(crate) fn channel(&self, x: usize, w: usize) -> f64 {
        match &self.si_channel {
            Some(c) => c[x][w],
            None => 1.0,
        }
    }

    /// Effective `(|W|, |Z^w|)`: a single dummy symbol each without side information.
    pub(crate) fn si_dims(&self) -> (usize, usize) {
        if self.has_si() {
            (self.w_size, self.zw_size)
        } else {
            (1, 1)
        }
    }

    pub(crate) fn require_si(&self) -> Result<()> {
        if self.has_si() {
            Ok(())
        } else {
            Err(Error::SideInfoRequired)
        }
    }

    pub(crate) fn require_no_si(&self) -> Result<()> {
        if self.has_si() {
            Err(Error::SideInfoUnsupported)
        } else {
            Ok(())
        }
    }

    /// Probability of stage-`t` symbol `x` given the previous symbol.
    pub(crate) fn source_step(&self, t: usize, prev: Option<usize>, x: usize) -> f64 {
        match prev {
            None => self.initial[x],
            Some(p) => self.transition(t)[p][x],
        }
    }

    /// Marginal law of `X_t` for every stage.
    pub fn marginals(&self) -> Vec<Vec<f64>> {
        let mut out = vec![self.initial.clone()];
        for t in 2..=self.horizon {
            let prev = out.last().unwrap();
            let kernel = self.transition(t);
            let next = (0..self.x_size)
                .map(|x| (0..self.x_size).map(|p| prev[p] * kernel[p][x]).sum())
                .collect();
            out.push(next);
        }
        out
    }

    /// Same instance with a different tradeoff.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        ProblemSpec {
            lambda,
            ..self.clone()
        }
    }

    /// JSON document in the same layout accepted by [`ProblemSpec::from_json`].
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("spec serializes")
    }
}

fn check_row(row: &[f64], field: &str, len: usize, strictly_positive: bool) -> Result<()> {
    if row.len() != len {
        return Err(Error::spec(
            field,
            format!("row has {} entries, expected {len}", row.len()),
        ));
    }
    for (i, &p) in row.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::spec(field, format!("negative or non-finite probability {p} at {i}")));
        }
        if strictly_positive && p <= 0.0 {
            return Err(Error::spec(
                field,
                format!("entry {i} is zero; side-information channel must be strictly positive"),
            ));
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > VALIDATION_TOLERANCE {
        return Err(Error::spec(field, format!("row sums to {sum}, not 1")));
    }
    Ok(())
}

fn check_matrix(m: &Matrix, field: &str, rows: usize, cols: usize, positive: bool) -> Result<()> {
    if m.len() != rows {
        return Err(Error::spec(field, format!("{} rows, expected {rows}", m.len())));
    }
    m.iter()
        .enumerate()
        .try_for_each(|(i, row)| check_row(row, &format!("{field}[{i}]"), cols, positive))
}

/// Returns the problem spec unchanged when every invariant holds.
pub fn validate_spec(raw: ProblemSpec) -> Result<ProblemSpec> {
    for (name, v) in [
        ("x_size", raw.x_size),
        ("y_size", raw.y_size),
        ("zy_size", raw.zy_size),
        ("xhat_size", raw.xhat_size),
        ("horizon", raw.horizon),
    ] {
        if v == 0 {
            return Err(Error::spec(name, "must be at least 1"));
        }
    }
    if !raw.lambda.is_finite() || raw.lambda < 0.0 {
        return Err(Error::spec("lambda", format!("must be finite and >= 0, got {}", raw.lambda)));
    }
    check_row(&raw.initial, "initial", raw.x_size, false)?;
    if raw.transitions.len() != raw.horizon - 1 {
        return Err(Error::spec(
            "transitions",
            format!("expected {} stage matrices, got {}", raw.horizon - 1, raw.transitions.len()),
        ));
    }
    for (i, m) in raw.transitions.iter().enumerate() {
        check_matrix(m, &format!("transitions[{i}]"), raw.x_size, raw.x_size, false)?;
    }
    if raw.distortion.len() != raw.horizon {
        return Err(Error::spec(
            "distortion",
            format!("expected {} stage tables, got {}", raw.horizon, raw.distortion.len()),
        ));
    }
    for (i, m) in raw.distortion.iter().enumerate() {
        let field = format!("distortion[{i}]");
        if m.len() != raw.x_size || m.iter().any(|r| r.len() != raw.xhat_size) {
            return Err(Error::spec(field, format!("expected {}x{} table", raw.x_size, raw.xhat_size)));
        }
        if m.iter().flatten().any(|&d| !d.is_finite() || d < 0.0) {
            return Err(Error::spec(field, "entries must be finite and >= 0"));
        }
    }
    match &raw.si_channel {
        Some(c) => {
            if raw.w_size == 0 || raw.zw_size == 0 {
                return Err(Error::spec("si_channel", "w_size and zw_size must be >= 1 with side information"));
            }
            check_matrix(c, "si_channel", raw.x_size, raw.w_size, true)?;
        }
        None => {
            if raw.w_size != 0 || raw.zw_size != 0 {
                return Err(Error::spec("si_channel", "absent, so w_size and zw_size must be 0"));
            }
        }
    }
    Ok(raw)
}

/// Rewrites a `k`-order Markov source as a first-order source over `X^k`.
///
/// The lifted symbol at stage `t` is the window `(x_{t-k+1}, ..., x_t)`,
/// most recent last, with positions before stage 1 filled by symbol 0. The
/// `kernel` has shape `[|X|; k + 1]` and gives `P(x_t | x_{t-k}, ..., x_{t-1})`
/// with the same left padding during the first `k - 1` steps. `X_1` keeps the
/// law of `spec.initial`. Distortion and the side-information channel read the
/// last coordinate; the horizon is unchanged.
pub fn lift_korder(spec: &ProblemSpec, k: usize, kernel: &Grid<f64>) -> Result<ProblemSpec> {
    if k == 0 {
        return Err(Error::dim("Markov order must be >= 1"));
    }
    let n = spec.x_size;
    if kernel.shape() != vec![n; k + 1].as_slice() {
        return Err(Error::dim(format!(
            "kernel shape {:?}, expected {:?}",
            kernel.shape(),
            vec![n; k + 1]
        )));
    }
    let lifted = n.checked_pow(k as u32).ok_or_else(|| Error::dim("lifted alphabet overflows"))?;
    let last = |s: usize| s % n;

    // Window (0, ..., 0, x) has index x.
    let mut initial = vec![0.0; lifted];
    initial[..n].copy_from_slice(&spec.initial);
    let mut step = vec![vec![0.0; lifted]; lifted];
    for (s, row) in step.iter_mut().enumerate() {
        for x in 0..n {
            let p = *kernel.data().get(s * n + x).unwrap();
            row[(s * n + x) % lifted] += p;
        }
    }
    let distortion = spec
        .distortion
        .iter()
        .map(|m| (0..lifted).map(|s| m[last(s)].clone()).collect())
        .collect();
    let si_channel = spec
        .si_channel
        .as_ref()
        .map(|c| (0..lifted).map(|s| c[last(s)].clone()).collect());

    validate_spec(ProblemSpec {
        x_size: lifted,
        initial,
        transitions: vec![step; spec.horizon - 1],
        distortion,
        si_channel,
        ..spec.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn binary_doc() -> String {
        r#"{
            "x_size": 2, "y_size": 2, "zy_size": 2, "xhat_size": 2,
            "horizon": 3, "lambda": 1.0,
            "initial": [0.5, 0.5],
            "transitions": [[0.9, 0.1], [0.1, 0.9]],
            "distortion": [[0, 1], [1, 0]]
        }"#
        .to_string()
    }

    #[test]
    fn accepts_binary_uniform_source() {
        let spec = ProblemSpec::from_json(&binary_doc()).unwrap();
        assert_eq!(spec.transitions.len(), 2);
        assert_eq!(spec.distortion.len(), 3);
        assert!(!spec.has_si());
    }

    #[test]
    fn rejects_short_row() {
        let doc = binary_doc().replace("[0.9, 0.1]", "[0.8, 0.1]");
        let err = ProblemSpec::from_json(&doc).unwrap_err();
        assert!(err.to_string().contains("sums to"), "{err}");
    }

    #[test]
    fn rejects_negative_lambda_and_probability() {
        let doc = binary_doc().replace("\"lambda\": 1.0", "\"lambda\": -0.5");
        assert!(ProblemSpec::from_json(&doc).unwrap_err().to_string().contains("lambda"));
        let doc = binary_doc().replace("[0.5, 0.5]", "[1.5, -0.5]");
        assert!(ProblemSpec::from_json(&doc).unwrap_err().to_string().contains("negative"));
    }

    #[test]
    fn rejects_zero_si_entry() {
        let doc = binary_doc().replace(
            "\"horizon\": 3",
            "\"horizon\": 3, \"w_size\": 2, \"zw_size\": 2, \"si_channel\": [[1.0, 0.0], [0.2, 0.8]]",
        );
        let err = ProblemSpec::from_json(&doc).unwrap_err();
        assert!(err.to_string().contains("strictly positive"), "{err}");
    }

    #[test]
    fn per_stage_lists_must_match_horizon() {
        let doc = binary_doc().replace(
            "\"distortion\": [[0, 1], [1, 0]]",
            "\"distortion\": [[[0, 1], [1, 0]], [[0, 1], [1, 0]]]",
        );
        assert!(ProblemSpec::from_json(&doc).is_err());
    }

    #[test]
    fn lift_order_one_is_identity() {
        let spec = ProblemSpec::from_json(&binary_doc()).unwrap();
        let kernel = Grid::from_vec(vec![2, 2], vec![0.9, 0.1, 0.1, 0.9]).unwrap();
        let lifted = lift_korder(&spec, 1, &kernel).unwrap();
        assert_eq!(lifted, spec);
    }

    #[test]
    fn lift_with_memoryless_older_coordinate_is_block_constant() {
        let spec = ProblemSpec::from_json(&binary_doc()).unwrap();
        // P(x_t | x_{t-2}, x_{t-1}) depends only on x_{t-1}.
        let kernel =
            Grid::from_vec(vec![2, 2, 2], vec![0.7, 0.3, 0.4, 0.6, 0.7, 0.3, 0.4, 0.6]).unwrap();
        let lifted = lift_korder(&spec, 2, &kernel).unwrap();
        let m = lifted.transition(2);
        // Rows (0,a) and (1,a) agree after dropping the older coordinate.
        for a in 0..2 {
            for b in 0..2 {
                assert_eq!(m[a][(a * 2 + b) % 4], m[2 + a][(a * 2 + b) % 4]);
            }
        }
    }

    #[test]
    fn lift_rejects_bad_kernel_shape() {
        let spec = ProblemSpec::from_json(&binary_doc()).unwrap();
        let kernel = Grid::from_vec(vec![2, 2], vec![0.5; 4]).unwrap();
        assert!(lift_korder(&spec, 2, &kernel).is_err());
    }
}
