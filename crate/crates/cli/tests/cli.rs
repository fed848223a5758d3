use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
seed = 5
[arrays]
tx = { kind = "ula", n = 4 }
rx = { kind = "ula", n = 3 }
[dataset]
n_samples = 60
[dnn]
hidden_layers = 1
hidden_width = 16
[train]
max_epochs = 2
batch_size = 16
[eval]
n_b = [1, 2, 12]
[sweep]
size_fractions = [0.5, 1.0]
sigma_p = [0.0, 0.5]
sigma_o = [0.2]
antenna_n_t = [4, 6]
"#;

fn beamlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beamlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = beamlab(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn setup() -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(&cfg, TINY).unwrap();
    (dir, cfg)
}

#[test]
fn gen_train_eval_export_pipeline() {
    let (dir, cfg) = setup();
    let data = dir.path().join("d.bmal");
    ok(&["gen", "--config", p(&cfg), "--out", p(&data)]);
    let again = dir.path().join("d2.bmal");
    ok(&["gen", "--config", p(&cfg), "--out", p(&again)]);
    assert_eq!(
        std::fs::read(&data).unwrap(),
        std::fs::read(&again).unwrap()
    );

    for model in ["gnn", "dnn"] {
        let m = dir.path().join(format!("{model}.bin"));
        ok(&[
            "train",
            "--config",
            p(&cfg),
            "--data",
            p(&data),
            "--model",
            model,
            "--out",
            p(&m),
        ]);
        assert!(dir.path().join(format!("{model}.bin.json")).exists());
        let r = dir.path().join(format!("{model}.csv"));
        ok(&[
            "eval",
            "--model",
            p(&m),
            "--data",
            p(&data),
            "--nb",
            "1,2,12",
            "--out",
            p(&r),
        ]);
        let text = std::fs::read_to_string(&r).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "model,n_b,sigma_p,sigma_o,misalignment,ese_bps_hz,rss_dbm,n_samples"
        );
        assert_eq!(lines.len(), 4);
        assert!(
            lines[3].starts_with(&format!("{model},12,0,0,0.000000000,")),
            "{}",
            lines[3]
        );
        assert!(
            lines[1].ends_with(",12"),
            "test split holds 12 samples: {}",
            lines[1]
        );

        let noisy = dir.path().join(format!("{model}_noisy.csv"));
        ok(&[
            "eval",
            "--model",
            p(&m),
            "--data",
            p(&data),
            "--nb",
            "1",
            "--out",
            p(&noisy),
            "--sigma-p",
            "0.5",
        ]);
        assert!(std::fs::read_to_string(&noisy)
            .unwrap()
            .contains(&format!("{model},1,0.5,0,")));
    }

    let csv = dir.path().join("d.csv");
    ok(&["export-csv", "--data", p(&data), "--out", p(&csv)]);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("x,y,z,alpha,p,q\n"));
    assert_eq!(text.lines().count(), 61);
    ok(&["export-csv", "--data", p(&data), "--out", p(&csv), "--rss"]);
    let head = std::fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(head.split(',').count(), 6 + 12);
}

#[test]
fn complexity_prints_csv() {
    let out = ok(&["complexity"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,multiplications,parameters");
    assert_eq!(lines[1], "gnn_formula,376320,6336");
    assert_eq!(lines[2], "dnn_formula,394240,394240");
    assert!(lines[3].starts_with("gnn_model,,"));
    assert!(lines[4].starts_with("dnn_model,,"));
}

#[test]
fn sweeps_write_artifacts_deterministically() {
    let (dir, cfg) = setup();
    for kind in ["size", "noise", "antenna"] {
        let a = dir.path().join(format!("{kind}_a"));
        let b = dir.path().join(format!("{kind}_b"));
        ok(&[
            "--threads",
            "2",
            "sweep",
            "--kind",
            kind,
            "--config",
            p(&cfg),
            "--out",
            p(&a),
        ]);
        ok(&["sweep", "--kind", kind, "--config", p(&cfg), "--out", p(&b)]);
        for f in [
            "results.csv",
            "misalignment.svg",
            "ese.svg",
            "rss.svg",
            "manifest.json",
        ] {
            let fa = std::fs::read(a.join(f)).unwrap();
            assert_eq!(
                fa,
                std::fs::read(b.join(f)).unwrap(),
                "{kind}/{f} differs between runs"
            );
        }
        let csv = std::fs::read_to_string(a.join("results.csv")).unwrap();
        let rows = csv.lines().count() - 1;
        let expected = match kind {
            // 2 fractions x 2 models x 3 N_b values.
            "size" => 12,
            // 3 sigma pairs x 2 models x 3 N_b values.
            "noise" => 18,
            // N_b = 12 exceeds 4x3 for neither; 2 antenna sizes x 2 models x 3 N_b values.
            _ => 12,
        };
        assert_eq!(rows, expected, "{kind}: {csv}");
        let manifest = std::fs::read_to_string(a.join("manifest.json")).unwrap();
        assert!(manifest.contains("\"config_sha256\""));
        assert!(a.join("models").read_dir().unwrap().count() >= 4);
    }
}

#[test]
fn seed_flag_changes_output() {
    let (dir, cfg) = setup();
    let a = dir.path().join("a.bmal");
    let b = dir.path().join("b.bmal");
    ok(&["gen", "--config", p(&cfg), "--out", p(&a)]);
    ok(&["--seed", "99", "gen", "--config", p(&cfg), "--out", p(&b)]);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn exit_codes() {
    let (dir, cfg) = setup();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[train]\nbatch_size = 0\n").unwrap();
    let out = beamlab(&[
        "gen",
        "--config",
        p(&bad),
        "--out",
        p(&dir.path().join("x.bmal")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("train.batch_size"));

    let missing = beamlab(&[
        "export-csv",
        "--data",
        p(&dir.path().join("none.bmal")),
        "--out",
        p(&dir.path().join("o.csv")),
    ]);
    assert_eq!(missing.status.code(), Some(3));

    let junk = dir.path().join("junk.bmal");
    std::fs::write(&junk, b"not a dataset").unwrap();
    let out = beamlab(&[
        "export-csv",
        "--data",
        p(&junk),
        "--out",
        p(&dir.path().join("o.csv")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("magic"));

    let data = dir.path().join("d.bmal");
    ok(&["gen", "--config", p(&cfg), "--out", p(&data)]);
    let m = dir.path().join("m.bin");
    ok(&[
        "train",
        "--config",
        p(&cfg),
        "--data",
        p(&data),
        "--model",
        "gnn",
        "--out",
        p(&m),
    ]);
    // Corrupt a parameter so evaluation hits a non-finite score.
    let mut bytes = std::fs::read(&m).unwrap();
    let n = bytes.len();
    bytes[n - 8..].copy_from_slice(&f64::NAN.to_le_bytes());
    std::fs::write(&m, bytes).unwrap();
    let data_out = dir.path().join("r.csv");
    let out = beamlab(&[
        "eval",
        "--model",
        p(&m),
        "--data",
        p(&data),
        "--nb",
        "1",
        "--out",
        p(&data_out),
    ]);
    assert_eq!(
        out.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    assert_eq!(
        beamlab(&["sweep", "--kind", "bogus"]).status.code(),
        Some(2)
    );
}
