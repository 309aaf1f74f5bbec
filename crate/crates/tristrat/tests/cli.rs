//! End-to-end tests of the `tristrat` binary: ingest, backtest, report.

use std::path::Path;
use std::process::{Command, Output};

use tristrat::fixtures;
use tristrat::pipeline::{OutputConfig, ProviderConfig, ProviderKind, RunConfig};

fn tristrat(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tristrat"))
        .args(args)
        .current_dir(cwd)
        .env_remove("TRISTRAT_API_KEY")
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).to_string()
}

/// Writes fixture data plus a ready-to-run TOML config into `dir`.
fn write_run_setup(dir: &Path, fx: &fixtures::Fixture, mode: &str) -> std::path::PathBuf {
    let paths = fx.write_files(dir).unwrap();
    let script_path = dir.join("stub_script.json");
    fx.write_stub_script(&script_path).unwrap();

    let config = RunConfig {
        data: tristrat::pipeline::DataConfig {
            bars: paths.bars,
            news: Some(paths.news),
            fundamentals: Some(paths.fundamentals),
            start: fx.range.start,
            end: fx.range.end,
            universe: fx.universe.iter().map(|s| s.as_str().to_string()).collect(),
            universe_file: None,
        },
        run: tristrat::pipeline::RunSettings {
            mode: tristrat::pipeline::RunMode::parse(mode).unwrap(),
            ..Default::default()
        },
        indicators: Default::default(),
        context: Default::default(),
        provider: ProviderConfig {
            kind: ProviderKind::Stub,
            script: Some(script_path),
            retry_backoff_ms: 1,
            ..Default::default()
        },
        output: OutputConfig {
            dir: dir.join("out"),
        },
    };
    let config_path = dir.join("run.toml");
    std::fs::write(&config_path, toml::to_string_pretty(&config).unwrap()).unwrap();
    config_path
}

#[test]
fn ingest_validates_and_is_idempotent() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = fixtures::six_stocks(3);
    let raw = tmp.path().join("raw");
    let paths = fx.write_files(&raw).unwrap();

    let store = tmp.path().join("store");
    let run = |out: &Path| {
        tristrat(
            &[
                "ingest",
                "--bars",
                paths.bars.to_str().unwrap(),
                "--news",
                paths.news.to_str().unwrap(),
                "--fundamentals",
                paths.fundamentals.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ],
            tmp.path(),
        )
    };
    let output = run(&store);
    assert!(output.status.success(), "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains(&format!("{} bars", fx.bars.len())));
    assert!(text.contains(&format!("{} news items", fx.news.len())));

    let first = std::fs::read(store.join("bars.csv")).unwrap();

    // Re-ingest the canonical store into a second store: byte-identical.
    let store2 = tmp.path().join("store2");
    let output = tristrat(
        &[
            "ingest",
            "--bars",
            store.join("bars.csv").to_str().unwrap(),
            "--out",
            store2.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert!(output.status.success());
    let second = std::fs::read(store2.join("bars.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn ingest_reports_corrupt_csv_with_line_number() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.csv");
    std::fs::write(
        &bad,
        "symbol,date,open,high,low,close,volume\nAAA,2022-05-16,10,11,9,10.5,100\nAAA,nonsense,10,11,9,10.5,100\n",
    )
    .unwrap();
    let output = tristrat(
        &[
            "ingest",
            "--bars",
            bad.to_str().unwrap(),
            "--out",
            tmp.path().join("store").to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert!(!output.status.success());
    let err = stderr(&output);
    assert!(err.contains("line 3"), "stderr was: {err}");
    assert!(err.contains("bad.csv"), "stderr was: {err}");
}

#[test]
fn backtest_baseline_writes_all_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = fixtures::six_by_eight();
    let config_path = write_run_setup(tmp.path(), &fx, "agents");

    let output = tristrat(
        &[
            "backtest",
            "--config",
            config_path.to_str().unwrap(),
            "--baseline",
            "1n",
        ],
        tmp.path(),
    );
    assert!(output.status.success(), "{}", stderr(&output));

    let out_dir = tmp.path().join("out");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["mode"], "1n");
    for key in ["accumulated_return", "sharpe", "calmar", "max_drawdown"] {
        assert!(
            report["metrics"].get(key).is_some(),
            "report.json missing metrics.{key}"
        );
    }
    let equity = std::fs::read_to_string(out_dir.join("equity.csv")).unwrap();
    assert_eq!(equity.lines().count(), 9); // header + 8 weeks
    assert!(out_dir.join("ledger.jsonl").exists());
    assert!(stdout(&output).contains("AR(%)"));
}

#[test]
fn backtest_agents_runs_from_scripted_stub() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = fixtures::six_by_eight();
    let config_path = write_run_setup(tmp.path(), &fx, "agents");

    let output = tristrat(
        &["backtest", "--config", config_path.to_str().unwrap(), "--agents"],
        tmp.path(),
    );
    assert!(output.status.success(), "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("provider transport calls:"));
    assert!(text.contains("week   5"));

    // The report command summarizes the finished run.
    let ledger = tmp.path().join("out").join("ledger.jsonl");
    let output = tristrat(&["report", ledger.to_str().unwrap()], tmp.path());
    assert!(output.status.success(), "{}", stderr(&output));
    let table = stdout(&output);
    assert!(table.contains("AR(%)"));
    assert!(table.contains("agents"));
}

#[test]
fn unknown_baseline_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let output = tristrat(
        &["backtest", "--config", "run.toml", "--baseline", "lstm"],
        tmp.path(),
    );
    assert!(!output.status.success());
    assert!(stderr(&output).contains("unknown baseline"));
}

#[test]
fn report_handles_multiple_and_empty_ledgers() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = fixtures::six_by_eight();
    let config_path = write_run_setup(tmp.path(), &fx, "1n");
    let out_a = tmp.path().join("out-a");
    let output = tristrat(
        &[
            "backtest",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            out_a.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert!(output.status.success(), "{}", stderr(&output));

    // A header-only ledger is a run with no completed weeks.
    let empty_dir = tmp.path().join("out-empty");
    std::fs::create_dir_all(&empty_dir).unwrap();
    let header_line = std::fs::read_to_string(out_a.join("ledger.jsonl"))
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    let empty_ledger = empty_dir.join("ledger.jsonl");
    std::fs::write(&empty_ledger, header_line + "\n").unwrap();

    let output = tristrat(
        &[
            "report",
            out_a.join("ledger.jsonl").to_str().unwrap(),
            empty_ledger.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert!(output.status.success(), "{}", stderr(&output));
    let table = stdout(&output);
    assert_eq!(table.lines().count(), 3, "header + two rows: {table}");
    assert!(table.contains("no completed weeks"));
}

#[test]
fn missing_credential_in_live_mode_is_actionable() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = fixtures::six_by_eight();
    let config_path = write_run_setup(tmp.path(), &fx, "agents");
    // Point the provider at HTTP without a key.
    let mut config = std::fs::read_to_string(&config_path).unwrap();
    config = config.replace("kind = \"stub\"", "kind = \"http\"\nbase_url = \"http://localhost:1\"");
    std::fs::write(&config_path, config).unwrap();

    let output = tristrat(
        &["backtest", "--config", config_path.to_str().unwrap(), "--agents"],
        tmp.path(),
    );
    assert!(!output.status.success());
    assert!(stderr(&output).contains("TRISTRAT_API_KEY"));
}

#[test]
fn backtest_resume_completes_a_partial_run() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = fixtures::six_by_eight();
    let config_path = write_run_setup(tmp.path(), &fx, "agents");

    // Full reference run.
    let out_full = tmp.path().join("out-full");
    let output = tristrat(
        &[
            "backtest",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            out_full.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert!(output.status.success(), "{}", stderr(&output));

    // Partial run via the library, then resume via the CLI.
    let out_resumed = tmp.path().join("out-resumed");
    {
        let mut config = RunConfig::from_toml_file(&config_path).unwrap();
        config.output.dir = out_resumed.clone();
        let provider = std::sync::Arc::new(tristrat::agents::StubProvider::new(fx.stub_script()));
        let mut runner =
            tristrat::pipeline::Runner::new(&config, fx.dataset(), Some(provider)).unwrap();
        for _ in 0..5 {
            runner.step().unwrap().unwrap();
        }
    }
    let output = tristrat(
        &[
            "backtest",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            out_resumed.to_str().unwrap(),
            "--resume",
        ],
        tmp.path(),
    );
    assert!(output.status.success(), "{}", stderr(&output));

    let full = std::fs::read(out_full.join("ledger.jsonl")).unwrap();
    let resumed = std::fs::read(out_resumed.join("ledger.jsonl")).unwrap();
    assert_eq!(full, resumed);
}
