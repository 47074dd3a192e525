//! Runs the real binary end to end: every subcommand, the exit-code
//! contract (2 for usage problems, 1 for failed checks, 0 otherwise), and
//! the promise that nothing is left behind after a usage error.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ncelm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncelm")).args(args).output().expect("binary launches")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited normally")
}

/// A few thousand tokens of cyclic pseudo-text: enough vocabulary overlap
/// between splits for a two-epoch smoke train to finish in well under a
/// second.
fn write_micro_corpus(dir: &Path) {
    let words =
        ["the", "cat", "sat", "on", "a", "mat", "dog", "ran", "by", "red", "big", "hill"];
    for (name, lines) in [("train.txt", 150usize), ("valid.txt", 15), ("test.txt", 15)] {
        let mut text = String::new();
        for i in 0..lines {
            for j in 0..9 {
                text.push_str(words[(3 * i + 7 * j + i * j) % words.len()]);
                text.push(' ');
            }
            text.push('\n');
        }
        fs::write(dir.join(name), text).unwrap();
    }
}

const MICRO_CONFIG: &str = "\
[model]
hidden = 8
embed = 8

[training]
epochs = 2
batch_size = 2
unroll = 4
eta0 = 0.5
tau = 1
seed = 7
";

#[test]
fn schedule_prints_decay_table_for_large_preset() {
    let out = ncelm(&["schedule", "--preset", "large"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("t,lr\n"), "got: {text}");
    assert!(text.contains("\n0,1.000000\n"), "plateau rows at eta0: {text}");
    assert!(text.contains("\n11,1.000000\n"), "last plateau epoch: {text}");
    assert!(text.contains("\n12,0.869565\n"), "first decayed epoch (1/1.15): {text}");
    assert_eq!(text.lines().count(), 56, "header plus one row per epoch");
}

#[test]
fn init_report_shows_heuristic_and_tuned_ranges() {
    let out = ncelm(&["init-report", "--preset", "medium"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("0.067937"), "glorot range for width 650: {text}");
    assert!(text.contains("0.016984"), "quarter range for width 650: {text}");
    assert!(text.contains("0.00849"), "tuned range for width 650: {text}");
}

#[test]
fn grad_check_passes_and_reports_per_tensor_errors() {
    let out = ncelm(&["grad-check"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("tensor,max_rel_err,coord,h\n"), "got: {text}");
    assert!(text.contains("lstm_cell/"), "per-tensor rows: {text}");
    assert!(text.contains("nce_learned_z/head.ln_z,"), "learned-offset row: {text}");
    assert!(text.contains("PASS"), "verdict line: {text}");
}

#[test]
fn grad_check_fails_with_exit_1_at_impossible_tolerance() {
    let out = ncelm(&["grad-check", "--tolerance", "1e-18"]);
    assert_eq!(code(&out), 1, "checks that fail are exit 1, not usage errors");
    assert!(stdout(&out).contains("FAIL"), "got: {}", stdout(&out));
}

#[test]
fn consistency_check_passes() {
    let out = ncelm(&["consistency"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("k=1000") || text.contains("1000,"), "largest fit shown: {text}");
    assert!(text.contains("PASS"), "verdict line: {text}");
}

#[test]
fn train_then_eval_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    fs::create_dir(&data).unwrap();
    write_micro_corpus(&data);
    let config = tmp.path().join("micro.conf");
    fs::write(&config, MICRO_CONFIG).unwrap();
    let out_dir = tmp.path().join("run");

    let out = ncelm(&[
        "train",
        config.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("# resolved configuration"), "config echo: {text}");
    assert!(text.contains("hidden = 8"), "resolved values echoed: {text}");
    assert!(text.contains("best valid PPL"), "summary line: {text}");

    for artifact in ["metrics.csv", "model.ckpt", "config.resolved.txt"] {
        assert!(out_dir.join(artifact).is_file(), "missing {artifact}");
    }
    let csv = fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "header plus two epochs: {csv}");

    let ckpt = out_dir.join("model.ckpt");
    let out = ncelm(&[
        "eval",
        ckpt.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--split",
        "valid",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("valid PPL"), "got: {}", stdout(&out));
}

#[test]
fn train_with_missing_corpus_exits_2_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    fs::create_dir(&data).unwrap();
    write_micro_corpus(&data);
    fs::remove_file(data.join("test.txt")).unwrap();
    let out_dir = tmp.path().join("run");

    let out = ncelm(&[
        "train",
        "--preset",
        "tiny",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "stdout: {}", stdout(&out));
    assert!(stderr(&out).contains("missing corpus file"), "got: {}", stderr(&out));
    assert!(!out_dir.exists(), "usage errors must not leave partial outputs");
}

#[test]
fn unknown_config_key_is_rejected_with_its_line_number() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.conf");
    fs::write(&config, "[model]\nhidden = 8\nwindow = 3\n").unwrap();

    let out = ncelm(&["schedule", config.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "stdout: {}", stdout(&out));
    let err = stderr(&out);
    assert!(err.contains("line 3"), "got: {err}");
    assert!(err.contains("window"), "got: {err}");
}

#[test]
fn config_file_and_preset_flag_conflict() {
    let out = ncelm(&["schedule", "some.conf", "--preset", "tiny"]);
    assert_eq!(code(&out), 2, "clap rejects the combination: {}", stderr(&out));
}

#[test]
fn sample_noise_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    fs::create_dir(&data).unwrap();
    write_micro_corpus(&data);

    let args =
        ["sample-noise", "--preset", "tiny", "--data", data.to_str().unwrap(), "-n", "500"];
    let first = ncelm(&args);
    let second = ncelm(&args);
    assert_eq!(code(&first), 0, "stderr: {}", stderr(&first));
    assert_eq!(stdout(&first), stdout(&second), "same config + seed, same draws");
    assert!(stdout(&first).contains("p_noise"), "frequency table: {}", stdout(&first));
}

#[test]
fn every_subcommand_documents_itself() {
    let root = ncelm(&["--help"]);
    assert_eq!(code(&root), 0);
    let text = stdout(&root);
    // The config-file grammar rides along with the root help.
    for key in ["hidden", "eta0", "psi", "tau", "clip_norm", "noise_shared", "max_vocab"] {
        assert!(text.contains(key), "root help documents {key}: {text}");
    }
    for sub in
        ["train", "eval", "grad-check", "consistency", "schedule", "sample-noise", "init-report"]
    {
        let out = ncelm(&[sub, "--help"]);
        assert_eq!(code(&out), 0, "{sub} --help");
        assert!(!stdout(&out).is_empty(), "{sub} --help prints usage");
    }
}
