use std::path::Path;

use serde_json::{Value, json};

use rtcode_core::instances::{random_decoder, random_si_memory, rng};
use rtcode_core::mdp::{MdpSolution, policy_to_tracking, solve_backward, solve_backward_si};
use rtcode_core::search::{
    CHECK_TOLERANCE, TheoremReport, check_theorem1, check_theorem2, check_theorem3, check_theorem6, check_theorem7,
    optimize_sliding_window, optimize_system, optimize_tracking, optimize_tracking_bayes, sample_concavity,
};
use rtcode_core::system::evaluate;
use rtcode_core::{DecoderPolicy, EncoderPolicy, Grid, MemoryUpdate, ProblemSpec, SearchResult, simulate};

use crate::config::{Check, RunConfig, Solver};
use crate::output::{SweepRow, document, emit, meta, meta_sidecar, sibling, sweep_csv, to_sorted_json};
use crate::{Failure, Outcome};

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_decoder(cfg: &RunConfig, spec: &ProblemSpec) -> Result<Option<DecoderPolicy>, Failure> {
    let Some(path) = &cfg.decoder_path else { return Ok(None) };
    let dec: DecoderPolicy = read_json(path)?;
    dec.validate(spec)?;
    Ok(Some(dec))
}

/// `r^w` tables: from the decoder file when given, else drawn from the seed.
fn si_tables(cfg: &RunConfig, spec: &ProblemSpec, decoder: Option<&DecoderPolicy>) -> Vec<Grid<usize>> {
    decoder
        .and_then(|d| d.memory.si_next_state.clone())
        .unwrap_or_else(|| random_si_memory(&mut rng(cfg.seed), spec))
}

pub struct Solved {
    pub cost: f64,
    pub encoder: EncoderPolicy,
    pub decoder: DecoderPolicy,
    pub detail: Value,
}

pub fn solve(cfg: &RunConfig, spec: &ProblemSpec, solver: Solver) -> Result<Solved, Failure> {
    let decoder = load_decoder(cfg, spec)?;
    let from_search = |r: SearchResult| -> Result<Solved, Failure> {
        Ok(Solved {
            cost: r.best_cost,
            encoder: r.best_encoder.clone(),
            decoder: r.best_decoder.clone(),
            detail: json!({ "search": r }),
        })
    };
    match solver {
        Solver::Tracking => match &decoder {
            Some(d) => from_search(optimize_tracking(spec, d, cfg.budget)?),
            None => {
                let mut memory = MemoryUpdate::prefix_tree(spec);
                if spec.has_si() {
                    memory = memory.with_si(si_tables(cfg, spec, None));
                }
                from_search(optimize_tracking_bayes(spec, &memory, cfg.budget)?)
            }
        },
        Solver::System => from_search(optimize_system(spec, cfg.zy_size, cfg.budget)?),
        Solver::Window => from_search(optimize_sliding_window(spec, cfg.window, cfg.budget)?),
        Solver::Mdp => {
            let sol: MdpSolution = if spec.has_si() {
                solve_backward_si(spec, &si_tables(cfg, spec, decoder.as_ref()), cfg.budget)?
            } else {
                solve_backward(spec, cfg.budget)?
            };
            let (encoder, decoder) = policy_to_tracking(spec, &sol)?;
            Ok(Solved {
                cost: sol.cost,
                encoder,
                decoder,
                detail: json!({ "mdp": sol }),
            })
        }
    }
}

pub fn validate(cfg: &RunConfig, spec: &ProblemSpec) -> Result<Outcome, Failure> {
    let body = json!({
        "valid": true,
        "spec": spec.to_json_value(),
    });
    emit(cfg.output_path.as_deref(), &to_sorted_json(&document(cfg, body))?)?;
    Ok(Outcome::Ok)
}

pub fn optimize(cfg: &RunConfig, spec: &ProblemSpec) -> Result<Outcome, Failure> {
    let solved = solve(cfg, spec, cfg.solver)?;
    let report = evaluate(spec, &solved.encoder, &solved.decoder)?;
    let mut body = json!({
        "solver": cfg.solver,
        "cost": solved.cost,
        "report": report,
    });
    if let (Value::Object(b), Value::Object(d)) = (&mut body, solved.detail) {
        b.extend(d);
    }
    if let Some(out) = &cfg.output_path {
        for (tag, policy) in [
            ("encoder", serde_json::to_value(&solved.encoder)?),
            ("decoder", serde_json::to_value(&solved.decoder)?),
        ] {
            let doc = document(cfg, json!({ tag: policy }));
            std::fs::write(sibling(out, tag), to_sorted_json(&doc)?)?;
        }
    }
    emit(cfg.output_path.as_deref(), &to_sorted_json(&document(cfg, body))?)?;
    Ok(Outcome::Ok)
}

pub fn sweep(cfg: &RunConfig, spec: &ProblemSpec) -> Result<Outcome, Failure> {
    let solver_name = match cfg.solver {
        Solver::Tracking => "tracking",
        Solver::System => "system",
        Solver::Window => "window",
        Solver::Mdp => "mdp",
    };
    let rows = cfg
        .lambda_grid
        .iter()
        .map(|&lambda| {
            let s = spec.with_lambda(lambda);
            let solved = solve(cfg, &s, cfg.solver)?;
            let r = evaluate(&s, &solved.encoder, &solved.decoder)?;
            Ok(SweepRow {
                lambda,
                avg_distortion: r.avg_distortion,
                avg_length: r.avg_length,
                cost: r.total,
                solver: solver_name,
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let csv = sweep_csv(&rows);
    emit(cfg.output_path.as_deref(), &csv)?;
    if let Some(out) = &cfg.output_path {
        std::fs::write(meta_sidecar(out), to_sorted_json(&meta(cfg))?)?;
    }
    Ok(Outcome::Ok)
}

fn concavity_report(cfg: &RunConfig, spec: &ProblemSpec, decoder: &DecoderPolicy) -> Result<TheoremReport, Failure> {
    let rep = sample_concavity(spec, decoder, cfg.trials, cfg.seed)?;
    let worst = rep.worst_same_stage_gap.min(rep.worst_downstream_gap);
    Ok(TheoremReport {
        name: format!(
            "stage and downstream costs are concave ({} trials, {} same-stage and {} downstream violations)",
            rep.trials, rep.same_stage_violations, rep.downstream_violations
        ),
        lhs: worst,
        rhs: 0.0,
        slack: worst,
        holds: rep.same_stage_violations == 0 && rep.downstream_violations == 0 && worst >= -CHECK_TOLERANCE,
        witness: Vec::new(),
        sampled: None,
    })
}

pub fn verify(cfg: &RunConfig, spec: &ProblemSpec) -> Result<Outcome, Failure> {
    let decoder = match load_decoder(cfg, spec)? {
        Some(d) => d,
        None => random_decoder(&mut rng(cfg.seed), spec, cfg.zy_size),
    };
    let mut reports = Vec::new();
    for check in &cfg.checks {
        let r = match check {
            Check::Tracking => check_theorem1(spec, &decoder, cfg.trials, cfg.seed, cfg.budget)?,
            Check::Mdp => check_theorem2(spec, cfg.budget)?,
            Check::Window => check_theorem3(spec, cfg.zy_size, cfg.window, cfg.budget)?,
            Check::Concavity => concavity_report(cfg, spec, &decoder)?,
            Check::SiStructure => check_theorem6(spec, &decoder, cfg.budget)?,
            Check::SiMdp => check_theorem7(spec, &si_tables(cfg, spec, Some(&decoder)), cfg.budget)?,
        };
        reports.push(r);
    }
    let outcome = verdict(&reports);
    let all_hold = matches!(outcome, Outcome::Ok);
    let body = json!({
        "all_hold": all_hold,
        "decoder": decoder,
        "reports": reports,
    });
    emit(cfg.output_path.as_deref(), &to_sorted_json(&document(cfg, body))?)?;
    Ok(outcome)
}

fn verdict(reports: &[TheoremReport]) -> Outcome {
    if reports.iter().all(|r| r.holds) { Outcome::Ok } else { Outcome::CheckFailed }
}

pub fn simulate_cmd(cfg: &RunConfig, spec: &ProblemSpec) -> Result<Outcome, Failure> {
    let (encoder, decoder, source) = match &cfg.encoder_path {
        Some(path) => {
            let enc: EncoderPolicy = read_json(path)?;
            let dec = load_decoder(cfg, spec)?
                .ok_or_else(|| Failure::Input("--encoder needs --decoder".into()))?;
            (enc, dec, "files")
        }
        None => {
            let s = solve(cfg, spec, cfg.solver)?;
            (s.encoder, s.decoder, "solver")
        }
    };
    let exact = evaluate(spec, &encoder, &decoder)?.total;
    let sim = simulate(spec, &encoder, &decoder, cfg.trials, cfg.seed)?;
    let body = json!({
        "policies_from": source,
        "exact_cost": exact,
        "simulation": sim,
        "within_4_std_errors": (sim.mean_cost - exact).abs() <= 4.0 * sim.std_error,
    });
    emit(cfg.output_path.as_deref(), &to_sorted_json(&document(cfg, body))?)?;
    Ok(Outcome::Ok)
}
