use std::path::Path;
use std::process::{Command, Output};

use mmdflow::ParticleCloud;
use mmdflow_cli::manifest::{Checkpoints, Preset, RunManifest, SummationSpec};
use mmdflow_cli::{bench, run, verify};

fn mmdflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmdflow")).args(args).output().expect("binary runs")
}

fn read_trace(path: &Path) -> Vec<(usize, f64, f64, f64)> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    assert_eq!(reader.headers().unwrap(), run::TRACE_HEADER.as_slice());
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            let f = |i: usize| r[i].parse::<f64>().unwrap();
            (r[0].parse().unwrap(), f(1), f(2), f(3))
        })
        .collect()
}

#[test]
fn presets_round_trip_through_toml() {
    for preset in [Preset::ThreeRings, Preset::Bananas, Preset::Annulus, Preset::HighDim] {
        let m = RunManifest::preset(preset);
        let text = m.to_toml();
        let back = RunManifest::from_toml(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_toml(), text);
    }
}

#[test]
fn manifests_reject_unknown_fields() {
    let mut text = RunManifest::preset(Preset::Annulus).to_toml();
    text = text.replace("[flow]", "[flow]\nstep = 3");
    assert!(RunManifest::from_toml(&text).is_err());
}

#[test]
fn checkpoint_and_summation_syntax() {
    assert_eq!("even:5".parse::<Checkpoints>().unwrap(), Checkpoints::Even(5));
    assert_eq!("0, 10,20".parse::<Checkpoints>().unwrap(), Checkpoints::List(vec![0, 10, 20]));
    assert!("0,x".parse::<Checkpoints>().is_err());
    assert_eq!("sliced:12".parse::<SummationSpec>().unwrap(), SummationSpec::Sliced(12));
    assert_eq!(SummationSpec::Sliced(12).to_string(), "sliced:12");
    assert!("sliced".parse::<SummationSpec>().is_err());
}

#[test]
fn zero_iterations_give_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = mmdflow(&["flow", "--preset", "annulus", "--iters", "0", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_trace(&out.join("trace.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].0, 0);
    assert!(out.join("snapshot_0.csv").exists());
}

#[test]
fn unwritable_output_fails_without_trace() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "not a directory").unwrap();
    let out = blocker.join("run");
    let o = mmdflow(&["flow", "--preset", "annulus", "--iters", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.join("trace.csv").exists());
}

#[test]
fn invalid_input_exits_with_two_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = mmdflow(&["flow", "--tau", "-1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    let o = mmdflow(&["flow", "--kernel", "gauss", "--summation", "sliced:6", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = mmdflow(&["flow", "--preset", "annulus", "--summation", "sliced:4", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    assert_eq!(mmdflow(&["verify", "nonsense"]).status.code(), Some(2));
}

#[test]
fn divergence_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = mmdflow(&[
        "flow", "--preset", "annulus", "--kernel", "nd", "--init", "uniform", "--tau", "1e300", "--iters", "5",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.join("trace.csv").exists());
}

#[test]
fn snapshots_and_trace_are_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = RunManifest::preset(Preset::Bananas);
    m.out = dir.path().join("run");
    m.target.points = Some(40);
    m.init.n = Some(30);
    m.flow.iters = 200;
    m.flow.checkpoints = Checkpoints::List(vec![0, 1, 50, 200]);
    let prepared = run::prepare(m.clone()).unwrap();
    let trace = run::execute(&prepared).unwrap();

    let rows = read_trace(&m.out.join("trace.csv"));
    let iters: Vec<usize> = rows.iter().map(|r| r.0).collect();
    assert_eq!(iters, vec![0, 1, 50, 200]);
    for (row, lib) in rows.iter().zip(trace.rows()) {
        assert_eq!((row.1, row.2, row.3), (lib.time, lib.mmd2, lib.w2));
    }
    let last = ParticleCloud::read_csv(run::snapshot_path(&m.out, 200)).unwrap();
    assert_eq!(&last, trace.final_state());
    let first = ParticleCloud::read_csv(run::snapshot_path(&m.out, 0)).unwrap();
    assert_eq!(first, prepared.init);
    let saved = std::fs::read_to_string(m.out.join("manifest.toml")).unwrap();
    assert_eq!(RunManifest::from_toml(&saved).unwrap(), m);
    assert!(!m.out.join("trace.csv.tmp").exists());
}

#[test]
fn command_line_overrides_reach_the_manifest() {
    let o = mmdflow(&[
        "flow", "--preset", "three-rings", "--kernel", "snd4", "--eps", "0.05", "--iters", "300", "--checkpoints",
        "even:4", "--precision", "f32", "--seed", "11", "--particles", "90", "--emit-manifest",
    ]);
    assert!(o.status.success());
    let m = RunManifest::from_toml(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(m.kernel.eps, 0.05);
    assert_eq!(m.flow.iters, 300);
    assert_eq!(m.flow.checkpoints, Checkpoints::Even(4));
    assert_eq!((m.init.seed, m.flow.seed, m.init.n), (11, 11, Some(90)));
    let cfg = m.flow_config().unwrap();
    assert_eq!(cfg.checkpoints, vec![0, 100, 200, 300]);
}

#[test]
fn csv_target_and_init() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("target.csv");
    let init = dir.path().join("init.csv");
    std::fs::write(&target, "0,0\n1,0\n0,1\n").unwrap();
    std::fs::write(&init, "0.1,0.1\n0.2,0.1\n").unwrap();
    let out = dir.path().join("run");
    let o = mmdflow(&[
        "flow",
        "--target",
        &format!("csv:{}", target.display()),
        "--init",
        &format!("csv:{}", init.display()),
        "--tau",
        "0.01",
        "--iters",
        "100",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_trace(&out.join("trace.csv"));
    assert!(rows.last().unwrap().2 < rows[0].2);
}

#[test]
fn every_verify_suite_passes() {
    for suite in verify::SUITES {
        for c in verify::run_suite(suite).unwrap() {
            assert!(c.passed, "{} / {}: {}", c.suite, c.name, c.detail);
        }
    }
}

#[test]
fn bench_output_is_csv() {
    let mut buf = Vec::new();
    bench::run(20, &mut buf).unwrap();
    let mut reader = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>().join(","), bench::BENCH_HEADER);
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), bench::KERNELS.len());
    for r in &rows {
        assert_eq!(&r[1], "20");
        assert!(r[2].parse::<f64>().unwrap() >= 0.0);
        assert!(r[4].parse::<f64>().unwrap().is_finite());
    }
}
