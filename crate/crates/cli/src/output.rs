use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Value, json};

use crate::config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Version, resolved config and seed, attached to every artifact.
pub fn meta(cfg: &RunConfig) -> Value {
    json!({
        "version": VERSION,
        "config": cfg,
        "seed": cfg.seed,
    })
}

/// Pretty JSON; `serde_json::Value` objects are B-tree maps, so keys come out sorted.
pub fn to_sorted_json(value: &impl Serialize) -> std::io::Result<String> {
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

/// Wraps `body` with the run metadata.
pub fn document(cfg: &RunConfig, body: Value) -> Value {
    let mut doc = meta(cfg);
    if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
        d.extend(b);
    }
    doc
}

pub fn emit(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

/// `res.json` -> `res.<tag>.json`.
pub fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}.{tag}.json"))
}

/// `res.csv` -> `res.csv.meta.json`.
pub fn meta_sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub struct SweepRow {
    pub lambda: f64,
    pub avg_distortion: f64,
    pub avg_length: f64,
    pub cost: f64,
    pub solver: &'static str,
}

pub const CSV_HEADER: &str = "lambda,avg_distortion,avg_length,cost,solver";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.lambda, r.avg_distortion, r.avg_length, r.cost, r.solver
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_names() {
        assert_eq!(sibling(Path::new("a/res.json"), "encoder"), PathBuf::from("a/res.encoder.json"));
        assert_eq!(meta_sidecar(Path::new("a/s.csv")), PathBuf::from("a/s.csv.meta.json"));
    }

    #[test]
    fn keys_are_sorted() {
        let s = to_sorted_json(&json!({"b": 1, "a": {"d": 2, "c": 3}})).unwrap();
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert!(s.find("\"c\"").unwrap() < s.find("\"d\"").unwrap());
    }

    #[test]
    fn csv_uses_plain_decimals() {
        let rows = [SweepRow { lambda: 0.5, avg_distortion: 0.125, avg_length: 1.0, cost: 0.625, solver: "mdp" }];
        assert_eq!(sweep_csv(&rows), "lambda,avg_distortion,avg_length,cost,solver\n0.5,0.125,1,0.625,mdp\n");
    }
}
