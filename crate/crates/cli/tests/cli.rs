//! Exit codes, file outputs, and option layering, driven through the real
//! binary.

mod common;

use common::*;

#[test]
fn validate_passes_a_conforming_corpus_silently() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trajectories.jsonl");
    write_jsonl(
        &path,
        &[perfect_trajectory("t1", "q1"), perfect_trajectory("t2", "q2")],
    );
    let res = run(&["validate", "--trajectories", path.to_str().unwrap()]);
    assert_eq!(res.code, 0, "stderr: {}", res.stderr);
    assert!(res.stdout.is_empty(), "stdout: {}", res.stdout);
}

#[test]
fn validate_reports_one_line_for_one_missing_tag() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trajectories.jsonl");
    write_jsonl(
        &path,
        &[trajectory_value(
            "t1",
            "q1",
            &[first_turn_without_plan(), middle_turn(), final_turn()],
        )],
    );
    let res = run(&["validate", "--trajectories", path.to_str().unwrap()]);
    assert_eq!(res.code, 1);
    let lines: Vec<&str> = res.stdout.lines().collect();
    assert_eq!(lines.len(), 1, "stdout: {}", res.stdout);
    assert!(lines[0].starts_with("t1: turn 1:"), "{}", lines[0]);
    assert!(lines[0].contains("<planning> found 0 of 1"), "{}", lines[0]);
}

#[test]
fn validate_unreadable_path_is_a_usage_error() {
    let res = run(&["validate", "--trajectories", "/no/such/file.jsonl"]);
    assert_eq!(res.code, 2);
    assert!(res.stderr.contains("error:"), "{}", res.stderr);
}

#[test]
fn score_with_the_default_mock_gives_a_perfect_total() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = dir.path().join("tasks.jsonl");
    let trajectories = dir.path().join("trajectories.jsonl");
    let out = dir.path().join("out");
    write_jsonl(&tasks, &[task_value("q1", QUERY)]);
    write_jsonl(&trajectories, &[perfect_trajectory("t1", "q1")]);
    let res = run(&[
        "score",
        "--tasks",
        tasks.to_str().unwrap(),
        "--trajectories",
        trajectories.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.code, 0, "stderr: {}", res.stderr);
    let scores = read(&out.join("scores.jsonl"));
    let lines: Vec<&str> = scores.lines().collect();
    assert_eq!(lines.len(), 1);
    let record: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(record["trajectory_id"], "t1");
    assert_eq!(record["total"], 1.0);
    assert_eq!(record["exact"]["total"], "1");
    assert_eq!(record["diagnostics"], serde_json::json!([]));
}

#[test]
fn scripted_scoring_replays_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = dir.path().join("tasks.jsonl");
    let trajectories = dir.path().join("trajectories.jsonl");
    let script = dir.path().join("script.json");
    write_jsonl(&tasks, &[task_value("q1", QUERY)]);
    write_jsonl(&trajectories, &[perfect_trajectory("t1", "q1")]);
    write_file(&script, &replay_script().to_string());

    let run_once = |out: &str| {
        let out = dir.path().join(out);
        let res = run(&[
            "score",
            "--tasks",
            tasks.to_str().unwrap(),
            "--trajectories",
            trajectories.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--judge-backend",
            "scripted",
            "--judge-script",
            script.to_str().unwrap(),
        ]);
        assert_eq!(res.code, 0, "stderr: {}", res.stderr);
        read(&out.join("scores.jsonl"))
    };
    let first = run_once("a");
    let second = run_once("b");
    assert_eq!(first, second);

    // cp_subject accepted, cp_style refused, plan 5/6:
    // (1/2 + 5/6 + 1 + 1 + 1) / 5 = 13/15.
    let record: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    assert_eq!(record["exact"]["reflection"], "1/2");
    assert_eq!(record["exact"]["plan"], "5/6");
    assert_eq!(record["exact"]["total"], "13/15");
}

#[test]
fn unreachable_remote_judge_writes_error_lines_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = dir.path().join("tasks.jsonl");
    let trajectories = dir.path().join("trajectories.jsonl");
    let config = dir.path().join("config.toml");
    let out = dir.path().join("out");
    write_jsonl(&tasks, &[task_value("q1", QUERY)]);
    write_jsonl(&trajectories, &[perfect_trajectory("t1", "q1")]);
    write_file(
        &config,
        "[judge]\nbackend = \"remote\"\nendpoint = \"http://127.0.0.1:9/judge\"\ntimeout_ms = 250\nmax_retries = 0\n",
    );
    let res = run(&[
        "--config",
        config.to_str().unwrap(),
        "score",
        "--tasks",
        tasks.to_str().unwrap(),
        "--trajectories",
        trajectories.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.code, 1, "stderr: {}", res.stderr);
    let scores = read(&out.join("scores.jsonl"));
    let record: serde_json::Value =
        serde_json::from_str(scores.lines().next().unwrap()).unwrap();
    assert_eq!(record["trajectory_id"], "t1");
    assert!(
        record["error"].as_str().unwrap().contains("unavailable"),
        "{record}"
    );
}

#[test]
fn score_records_an_error_line_for_an_unknown_task() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = dir.path().join("tasks.jsonl");
    let trajectories = dir.path().join("trajectories.jsonl");
    let out = dir.path().join("out");
    write_jsonl(&tasks, &[task_value("q1", QUERY)]);
    write_jsonl(
        &trajectories,
        &[
            perfect_trajectory("t1", "q1"),
            perfect_trajectory("t2", "q_missing"),
        ],
    );
    let res = run(&[
        "score",
        "--tasks",
        tasks.to_str().unwrap(),
        "--trajectories",
        trajectories.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.code, 1);
    let scores = read(&out.join("scores.jsonl"));
    let lines: Vec<serde_json::Value> = scores
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["total"], 1.0);
    assert_eq!(lines[1]["trajectory_id"], "t2");
    assert!(lines[1]["error"].as_str().unwrap().contains("q_missing"));
}

#[test]
fn filter_sft_joins_scores_and_drops_the_imperfect_record() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = dir.path().join("tasks.jsonl");
    let trajectories = dir.path().join("trajectories.jsonl");
    let score_out = dir.path().join("scores");
    let filter_out = dir.path().join("filtered");
    write_jsonl(
        &tasks,
        &[
            task_value("q1", QUERY),
            task_value("q2", QUERY),
            task_value("q3", QUERY),
        ],
    );
    write_jsonl(
        &trajectories,
        &[
            perfect_trajectory("t1", "q1"),
            perfect_trajectory("t2", "q2"),
            trajectory_value(
                "t3",
                "q3",
                &[first_turn_without_plan(), middle_turn(), final_turn()],
            ),
        ],
    );
    let res = run(&[
        "score",
        "--tasks",
        tasks.to_str().unwrap(),
        "--trajectories",
        trajectories.to_str().unwrap(),
        "--out",
        score_out.to_str().unwrap(),
    ]);
    assert_eq!(res.code, 0, "stderr: {}", res.stderr);

    let res = run(&[
        "filter-sft",
        "--trajectories",
        trajectories.to_str().unwrap(),
        "--scores",
        score_out.join("scores.jsonl").to_str().unwrap(),
        "--out",
        filter_out.to_str().unwrap(),
    ]);
    assert_eq!(res.code, 0, "stderr: {}", res.stderr);
    let kept = read(&filter_out.join("kept.jsonl"));
    assert_eq!(kept.lines().count(), 2);
    assert!(kept.contains("\"t1\"") && kept.contains("\"t2\""));
    let dropped = read(&filter_out.join("dropped.jsonl"));
    let reason: serde_json::Value =
        serde_json::from_str(dropped.lines().next().unwrap()).unwrap();
    assert_eq!(reason["trajectory_id"], "t3");
    assert_eq!(reason["reason"], "plan");
}

#[test]
fn filter_sft_reads_embedded_rewards_when_no_scores_are_given() {
    let dir = tempfile::tempdir().unwrap();
    let trajectories = dir.path().join("trajectories.jsonl");
    let out = dir.path().join("out");
    let mut keep = perfect_trajectory("t1", "q1");
    keep["reward"] = serde_json::json!({
        "reflection": "1", "plan": "1", "format": "1", "tool": "1",
        "result": "1", "total": "1",
    });
    let mut drop = perfect_trajectory("t2", "q2");
    drop["reward"] = serde_json::json!({
        "reflection": "1", "plan": "1", "format": "1", "tool": "4/5",
        "result": "1", "total": "14/15",
    });
    write_jsonl(&trajectories, &[keep, drop]);
    let res = run(&[
        "filter-sft",
        "--trajectories",
        trajectories.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.code, 0, "stderr: {}", res.stderr);
    assert_eq!(read(&out.join("kept.jsonl")).lines().count(), 1);
    let dropped: serde_json::Value =
        serde_json::from_str(read(&out.join("dropped.jsonl")).lines().next().unwrap()).unwrap();
    assert_eq!(dropped["reason"], "tool");
}

#[test]
fn bench_with_the_accepting_mock_scores_every_type_at_one() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = dir.path().join("tasks.jsonl");
    let trajectories = dir.path().join("trajectories.jsonl");
    let out = dir.path().join("out");
    write_jsonl(&tasks, &[task_value("q1", QUERY), task_value("q2", QUERY)]);
    write_jsonl(
        &trajectories,
        &[perfect_trajectory("t1", "q1"), perfect_trajectory("t2", "q2")],
    );
    let res = run(&[
        "bench",
        "--tasks",
        tasks.to_str().unwrap(),
        "--trajectories",
        trajectories.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.code, 0, "stderr: {}", res.stderr);
    let report: serde_json::Value =
        serde_json::from_str(&read(&out.join("bench.json"))).unwrap();
    assert_eq!(report["per_task_type"]["single_img"], "1");
    assert_eq!(report["n_queries"], 2);
}

#[test]
fn report_counts_reflection_instances_per_tag() {
    let dir = tempfile::tempdir().unwrap();
    let trajectories = dir.path().join("trajectories.jsonl");
    let out = dir.path().join("out");
    write_jsonl(&trajectories, &[perfect_trajectory("t1", "q1")]);
    let res = run(&[
        "report",
        "--trajectories",
        trajectories.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(res.code, 0, "stderr: {}", res.stderr);
    let csv = read(&out.join("reflection.csv"));
    // One middle and one final reflection, both Good under the mock.
    assert!(csv.contains("good,2,100.0"), "{csv}");
    assert!(csv.contains("under,0,0.0"), "{csv}");
}

const SWEEP_SCENARIO: &str = r#"
policy = [0.0, 0.0, 0.0, 0.0]

[channel]
base = [0.0, 0.25, 0.5, 1.0]

[estimator]
advantage_mode = { mode = "fixed_affine", b = 0.4375, c = 1.0 }
samples_outer = 200
samples_inner = 100
seed = 21
bootstrap_resamples = 20

[[sweep]]
sigma = 0.0
horizon = 1

[[sweep]]
sigma = 0.5
horizon = 1
"#;

#[test]
fn simulate_sweep_is_deterministic_and_zero_noise_has_zero_sigma_tau() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("scenario.toml");
    write_file(&scenario, SWEEP_SCENARIO);
    let run_once = |out: &str| {
        let out = dir.path().join(out);
        let res = run(&[
            "simulate",
            "--scenario",
            scenario.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(res.code, 0, "stderr: {}", res.stderr);
        (read(&out.join("sweep.csv")), read(&out.join("sweep.json")))
    };
    let (csv_a, json_a) = run_once("a");
    let (csv_b, json_b) = run_once("b");
    assert_eq!(csv_a, csv_b);
    assert_eq!(json_a, json_b);

    let lines: Vec<&str> = csv_a.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("sigma,horizon,sigma_eff,sigma_tau,"));
    // sigma = 0: sigma_eff and sigma_tau (and its SE) are exactly zero.
    assert!(lines[1].starts_with("0,1,0,0,0,"), "{}", lines[1]);
}

#[test]
fn simulate_without_any_seed_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("scenario.toml");
    write_file(&scenario, &SWEEP_SCENARIO.replace("seed = 21\n", ""));
    let out = dir.path().join("out");
    let res = run(&[
        "simulate",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.code, 2);
    assert!(res.stderr.contains("seed"), "{}", res.stderr);

    let res = run(&[
        "simulate",
        "--scenario",
        scenario.to_str().unwrap(),
        "--seed",
        "21",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.code, 0, "stderr: {}", res.stderr);
}

#[test]
fn remote_backend_without_endpoint_fails_usage_until_env_supplies_one() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = dir.path().join("tasks.jsonl");
    let trajectories = dir.path().join("trajectories.jsonl");
    let out = dir.path().join("out");
    write_jsonl(&tasks, &[task_value("q1", QUERY)]);
    write_jsonl(&trajectories, &[perfect_trajectory("t1", "q1")]);
    let args = [
        "score",
        "--tasks",
        tasks.to_str().unwrap(),
        "--trajectories",
        trajectories.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--judge-backend",
        "remote",
    ];
    let res = run(&args);
    assert_eq!(res.code, 2, "stderr: {}", res.stderr);
    assert!(res.stderr.contains("endpoint"), "{}", res.stderr);

    // Same invocation, endpoint from the environment: configuration now
    // resolves, and failure moves to the domain (connection refused).
    let res = run_env(&args, &[("TRAJLAB_JUDGE_ENDPOINT", "http://127.0.0.1:9/x")]);
    assert_eq!(res.code, 1, "stderr: {}", res.stderr);
}

#[test]
fn missing_token_variable_is_reported_before_any_request() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = dir.path().join("tasks.jsonl");
    let trajectories = dir.path().join("trajectories.jsonl");
    let out = dir.path().join("out");
    write_jsonl(&tasks, &[task_value("q1", QUERY)]);
    write_jsonl(&trajectories, &[perfect_trajectory("t1", "q1")]);
    let res = run(&[
        "score",
        "--tasks",
        tasks.to_str().unwrap(),
        "--trajectories",
        trajectories.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--judge-backend",
        "remote",
        "--judge-endpoint",
        "http://127.0.0.1:9/x",
        "--token-env",
        "TRAJLAB_TEST_TOKEN_THAT_IS_NOT_SET",
    ]);
    assert_eq!(res.code, 2, "stderr: {}", res.stderr);
    assert!(
        res.stderr.contains("TRAJLAB_TEST_TOKEN_THAT_IS_NOT_SET"),
        "{}",
        res.stderr
    );
}

#[test]
fn backend_flag_overrides_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = dir.path().join("tasks.jsonl");
    let trajectories = dir.path().join("trajectories.jsonl");
    let script = dir.path().join("script.json");
    let config = dir.path().join("config.toml");
    let out = dir.path().join("out");
    write_jsonl(&tasks, &[task_value("q1", QUERY)]);
    write_jsonl(&trajectories, &[perfect_trajectory("t1", "q1")]);
    write_file(&script, &replay_script().to_string());
    write_file(
        &config,
        &format!(
            "[judge]\nbackend = \"scripted\"\nscript_path = {:?}\n",
            script.to_str().unwrap()
        ),
    );
    let res = run(&[
        "--config",
        config.to_str().unwrap(),
        "score",
        "--tasks",
        tasks.to_str().unwrap(),
        "--trajectories",
        trajectories.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--judge-backend",
        "mock",
    ]);
    assert_eq!(res.code, 0, "stderr: {}", res.stderr);
    let record: serde_json::Value =
        serde_json::from_str(read(&out.join("scores.jsonl")).lines().next().unwrap()).unwrap();
    // The scripted replay would have said 13/15; the mock override says 1.
    assert_eq!(record["exact"]["total"], "1");
}
