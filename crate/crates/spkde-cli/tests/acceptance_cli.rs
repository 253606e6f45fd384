//! Acceptance criterion 12: every seeded command reproduces its output
//! files byte for byte across runs. Run with
//!
//! ```text
//! cargo test -p spkde-cli --test acceptance_cli -- --nocapture
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

fn run(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_spkde"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        files.insert(
            entry.file_name().to_string_lossy().into_owned(),
            std::fs::read(entry.path()).unwrap(),
        );
    }
    assert!(!files.is_empty(), "no outputs in {}", dir.display());
    files
}

fn identical_runs(label: &str, args: impl Fn(&str) -> Vec<String>) -> usize {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let to_args = |out: &Path| args(out.to_str().unwrap());
    let a_args = to_args(&out_a);
    let b_args = to_args(&out_b);
    run(&a_args.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    run(&b_args.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    let a = snapshot(&out_a);
    let b = snapshot(&out_b);
    assert_eq!(
        a.keys().collect::<Vec<_>>(),
        b.keys().collect::<Vec<_>>(),
        "{label}: file sets differ"
    );
    for (name, bytes) in &a {
        assert_eq!(bytes, &b[name], "{label}: {name} differs between runs");
    }
    a.len()
}

#[test]
fn criterion_12_seeded_commands_are_byte_reproducible() {
    let synth_files = identical_runs("synth", |out| {
        ["synth", "--scenario", "fig4", "--seed", "7", "--grid-h", "0.002", "--out", out]
            .iter()
            .map(|s| s.to_string())
            .collect()
    });

    // a shared input for fit
    let data_dir = tempfile::tempdir().unwrap();
    let data_out = data_dir.path().join("s");
    run(&[
        "synth", "--scenario", "fig4", "--n", "120", "--seed", "9",
        "--out", data_out.to_str().unwrap(),
    ]);
    let csv = data_out.join("samples.csv");
    let fit_files = identical_runs("fit", |out| {
        [
            "fit", "--input", csv.to_str().unwrap(), "--method", "spkde", "--beta", "1.25",
            "--sigma", "0.12", "--tol", "1e-6", "--seed", "21", "--out", out,
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    });

    let oracle_files = identical_runs("oracle", |out| {
        ["oracle", "--scenario", "fig4", "--eps", "0.2", "--grid-h", "0.002", "--out", out]
            .iter()
            .map(|s| s.to_string())
            .collect()
    });

    let eval_files = identical_runs("eval", |out| {
        [
            "eval", "--scenario", "fig4", "--pool-n0", "150", "--pool-n1", "60", "--n0", "50",
            "--eps", "0,0.2", "--seeds", "2", "--seed", "3", "--sigma-grid", "0.05:0.5:5",
            "--wilcoxon", "--out", out,
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    });

    println!(
        "[criterion 12] PASS — seeded synth/fit/oracle/eval byte-identical across two runs \
         ({synth_files}/{fit_files}/{oracle_files}/{eval_files} files compared)"
    );
}
