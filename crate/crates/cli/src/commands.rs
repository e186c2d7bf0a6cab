//! Subcommand bodies. Every function returns the process exit code on its
//! success path; CliError carries failures that never got as far as doing
//! the work (exit 2) or broke it partway (exit 1).

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use futures::{stream, StreamExt};
use trajlab_core::analysis::{
    bench_score, emit_report, reflection_quality_histogram, AnalysisError, Report, ReportFormat,
};
use trajlab_core::config::{AppConfig, ConfigError, JudgeSpec};
use trajlab_core::dataset::{
    load_scores, load_tasks, load_trajectories, save_trajectories, sft_filter, DatasetError,
    ScoreRecord, TaskRecord,
};
use trajlab_core::reward::{RewardVector, ScoreError, Scorer, ScoringTask};
use trajlab_core::schema::TagSchema;
use trajlab_core::score::Score;
use trajlab_core::validate::{validate_trajectory, TurnValidation};
use trajlab_grpo::report::{report_json, sweep_csv, sweep_json};
use trajlab_grpo::{asymmetry_sweep, simulate_variance, GrpoError};
use trajlab_judge::{build_judge, BuildError};

use crate::scenario::Scenario;
use crate::JudgeArgs;

#[derive(Debug)]
pub enum CliError {
    /// Exit 2: bad invocation, unreadable input, invalid config.
    Usage(String),
    /// Exit 1: the work itself failed.
    Domain(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<BuildError> for CliError {
    fn from(e: BuildError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Io { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<ScoreError> for CliError {
    fn from(e: ScoreError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<GrpoError> for CliError {
    fn from(e: GrpoError) -> Self {
        match e {
            GrpoError::ConfigInvalid(_) => CliError::Usage(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

fn write_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}

pub fn load_config(path: Option<&Path>) -> Result<AppConfig, CliError> {
    Ok(match path {
        Some(p) => AppConfig::load(p)?,
        None => AppConfig::default(),
    })
}

/// Layer flag/env overrides over the config-file judge spec, then
/// revalidate the result.
fn resolve_judge(base: &JudgeSpec, args: &JudgeArgs) -> Result<JudgeSpec, CliError> {
    let mut spec = base.clone();
    if let Some(backend) = args.judge_backend {
        spec.backend = backend.into();
    }
    if let Some(endpoint) = &args.judge_endpoint {
        spec.endpoint = Some(endpoint.clone());
    }
    if let Some(script) = &args.judge_script {
        spec.script_path = Some(script.clone());
    }
    if let Some(model) = &args.judge_model {
        spec.model_name = Some(model.clone());
    }
    if let Some(token_env) = &args.token_env {
        spec.token_env = Some(token_env.clone());
    }
    spec.validate()?;
    Ok(spec)
}

fn out_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| write_err(path, e))
}

fn describe_defects(turn: &TurnValidation, schema: &TagSchema) -> String {
    let mut parts = Vec::new();
    for slot in &turn.slots {
        if slot.valid {
            continue;
        }
        let marker = schema.marker_name(&slot.kind);
        let mut part = format!("<{marker}> found {} of {}", slot.found, slot.expected);
        if slot.empty > 0 {
            part.push_str(&format!(" ({} empty)", slot.empty));
        }
        parts.push(part);
    }
    if !turn.order_ok {
        parts.push("tag order violates the pattern".to_string());
    }
    parts.join("; ")
}

/// Exit 0 iff every trajectory parses and every turn scores 1. One
/// diagnostic line per defective turn.
pub fn validate(config: &AppConfig, trajectories: &Path) -> Result<u8, CliError> {
    let records = match load_trajectories(trajectories, &config.schema) {
        Ok(records) => records,
        Err(e @ DatasetError::Io { .. }) => return Err(CliError::Usage(e.to_string())),
        // A file that does not parse is itself a validation finding.
        Err(e) => {
            println!("{}: {e}", trajectories.display());
            return Ok(1);
        }
    };
    let mut defects = 0usize;
    for record in &records {
        let validation = validate_trajectory(&record.trajectory, &config.schema)
            .map_err(|e| CliError::Domain(e.to_string()))?;
        for turn in &validation.turns {
            if turn.score == Score::ONE {
                continue;
            }
            defects += 1;
            println!(
                "{}: turn {}: {}",
                record.trajectory.id,
                turn.index,
                describe_defects(turn, &config.schema)
            );
        }
    }
    Ok(if defects == 0 { 0 } else { 1 })
}

/// One JSON line per input trajectory, in input order: a ScoreRecord, or
/// {"trajectory_id", "error"} when that trajectory could not be scored.
pub async fn score(
    config: &AppConfig,
    tasks: &Path,
    trajectories: &Path,
    out: &Path,
    judge_args: &JudgeArgs,
) -> Result<u8, CliError> {
    let spec = resolve_judge(&config.judge, judge_args)?;
    let judge = build_judge(&spec)?;
    let tasks = load_tasks(tasks)?;
    let by_id: BTreeMap<&str, &TaskRecord> = tasks.iter().map(|t| (t.id.as_str(), t)).collect();
    let records = load_trajectories(trajectories, &config.schema)?;
    let scorer = Scorer::new(config.schema.clone(), config.reward.clone());

    let error_line = |id: &str, message: String| {
        log::warn!("{id}: {message}");
        serde_json::json!({
            "schema_version": 1,
            "trajectory_id": id,
            "error": message,
        })
    };
    let lines: Vec<(serde_json::Value, bool)> = stream::iter(records.iter().map(|record| {
        let scorer = &scorer;
        let judge = judge.as_ref();
        let by_id = &by_id;
        let error_line = &error_line;
        async move {
            let t = &record.trajectory;
            let Some(task) = by_id.get(t.query_id.as_str()) else {
                let message = format!("no task with id {:?}", t.query_id);
                return (error_line(&t.id, message), true);
            };
            let scoring_task = ScoringTask {
                query: task.query.clone(),
                checkpoints: task.checkpoints.clone(),
                expected_images: task.expected_images,
                expected_videos: task.expected_videos,
            };
            match scorer.score_trajectory(t, &scoring_task, judge).await {
                Ok(scored) => {
                    let record = ScoreRecord::from_scored(&scored);
                    (serde_json::to_value(record).expect("score serializes"), false)
                }
                Err(e) => (error_line(&t.id, e.to_string()), true),
            }
        }
    }))
    .buffered(spec.in_flight.max(1))
    .collect()
    .await;

    out_dir(out)?;
    let path = out.join("scores.jsonl");
    let mut text = String::new();
    for (value, _) in &lines {
        text.push_str(&value.to_string());
        text.push('\n');
    }
    fs::write(&path, text).map_err(|e| write_err(&path, e))?;

    let failed = lines.iter().filter(|(_, failed)| *failed).count();
    println!(
        "scored {}/{} trajectories -> {}",
        lines.len() - failed,
        lines.len(),
        path.display()
    );
    Ok(if failed == 0 { 0 } else { 1 })
}

/// Join scores onto trajectories (if given), then split by the exact
/// requirements in config. Writes kept.jsonl and dropped.jsonl.
pub fn filter_sft(
    config: &AppConfig,
    trajectories: &Path,
    scores: Option<&Path>,
    out: &Path,
) -> Result<u8, CliError> {
    let mut records = load_trajectories(trajectories, &config.schema)?;
    if let Some(scores_path) = scores {
        let by_id: BTreeMap<String, RewardVector> = load_scores(scores_path)?
            .iter()
            .filter_map(|s| s.reward_vector().map(|v| (s.trajectory_id.clone(), v)))
            .collect();
        for record in &mut records {
            if let Some(vector) = by_id.get(&record.trajectory.id) {
                record.reward_vector = Some(vector.clone());
            }
        }
    }
    let total = records.len();
    let (kept, dropped) = sft_filter(records, &config.filter)?;

    out_dir(out)?;
    let kept_path = out.join("kept.jsonl");
    save_trajectories(&kept_path, &kept, &config.schema)?;
    let dropped_path = out.join("dropped.jsonl");
    let mut text = String::new();
    for d in &dropped {
        let line = serde_json::json!({
            "schema_version": 1,
            "trajectory_id": d.record.trajectory.id,
            "reason": d.reason.name(),
        });
        text.push_str(&line.to_string());
        text.push('\n');
    }
    fs::write(&dropped_path, text).map_err(|e| write_err(&dropped_path, e))?;
    println!(
        "kept {}/{total} -> {}, dropped {} -> {}",
        kept.len(),
        kept_path.display(),
        dropped.len(),
        dropped_path.display()
    );
    Ok(0)
}

pub async fn bench(
    config: &AppConfig,
    tasks: &Path,
    trajectories: &Path,
    out: &Path,
    format: ReportFormat,
    judge_args: &JudgeArgs,
) -> Result<u8, CliError> {
    let spec = resolve_judge(&config.judge, judge_args)?;
    let judge = build_judge(&spec)?;
    let tasks = load_tasks(tasks)?;
    let records = load_trajectories(trajectories, &config.schema)?;
    let report = bench_score(&tasks, &records, judge.as_ref(), spec.in_flight).await?;
    out_dir(out)?;
    let path = out.join(match format {
        ReportFormat::Csv => "bench.csv",
        ReportFormat::Json => "bench.json",
    });
    emit_report(&Report::Bench(report), format, &path)?;
    println!("wrote {}", path.display());
    Ok(0)
}

pub async fn report(
    config: &AppConfig,
    trajectories: &Path,
    out: &Path,
    format: ReportFormat,
    judge_args: &JudgeArgs,
) -> Result<u8, CliError> {
    let spec = resolve_judge(&config.judge, judge_args)?;
    let judge = build_judge(&spec)?;
    let records = load_trajectories(trajectories, &config.schema)?;
    let histogram = reflection_quality_histogram(&records, judge.as_ref(), spec.in_flight).await?;
    out_dir(out)?;
    let path = out.join(match format {
        ReportFormat::Csv => "reflection.csv",
        ReportFormat::Json => "reflection.json",
    });
    emit_report(&Report::Reflection(histogram), format, &path)?;
    println!("wrote {}", path.display());
    Ok(0)
}

/// No [[sweep]] points: variance.json. With sweep points: sweep.csv and
/// sweep.json, same rows.
pub fn simulate(scenario_path: &Path, seed: Option<u64>, out: &Path) -> Result<u8, CliError> {
    let scenario = Scenario::load(scenario_path, seed)?;
    out_dir(out)?;
    if scenario.sweep.is_empty() {
        let report = simulate_variance(
            &scenario.channel,
            &scenario.policy,
            &scenario.estimator,
            scenario.states.as_ref(),
        )?;
        let path = out.join("variance.json");
        fs::write(&path, report_json(&report)).map_err(|e| write_err(&path, e))?;
        println!("wrote {}", path.display());
    } else {
        if scenario.states.is_some() {
            return Err(CliError::Usage(
                "sweeps run on the single [channel]; remove [states] from the scenario".into(),
            ));
        }
        let rows = asymmetry_sweep(
            &scenario.channel,
            &scenario.policy,
            &scenario.estimator,
            &scenario.sweep,
        )?;
        let csv_path = out.join("sweep.csv");
        fs::write(&csv_path, sweep_csv(&rows)).map_err(|e| write_err(&csv_path, e))?;
        let json_path = out.join("sweep.json");
        fs::write(&json_path, sweep_json(&rows)).map_err(|e| write_err(&json_path, e))?;
        println!("wrote {}", csv_path.display());
        println!("wrote {}", json_path.display());
    }
    Ok(0)
}
