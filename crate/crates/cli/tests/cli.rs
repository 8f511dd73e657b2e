use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SHORT: &str = "beam.support = free-free\nbeam.n_elem = 24\nimpact.point = P4\n\
    impact.velocity_m_s = 1.1\nrom.f_cut_hz = 40e3\nintegration.dt_s = 2e-7\n\
    integration.t_end_s = 2e-4\npost.fit_window_s = 1e-4\n";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_beamimpact"));
    c.env("RUST_LOG", "error");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write_cfg(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn bundled(name: &str) -> String {
    format!("{}/../core/configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn print_defaults_lists_keys() {
    let o = run(&["--print-defaults"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("integration.dt_s = 1e-7"));
    assert!(text.contains("# impact.point = <required>"));
}

#[test]
fn negative_step_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), "bad.cfg", &SHORT.replace("2e-7", "-1"));
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", d.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("integration.dt_s must be > 0"), "{}", stderr(&o));
}

#[test]
fn unknown_key_strict_and_lenient() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), "typo.cfg", &format!("{SHORT}integration.dt = 1e-7\n"));
    let c = cfg.to_str().unwrap();
    let o = run(&["modes", "--config", c]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("integration.dt is not a known key"));
    assert!(run(&["--lenient", "modes", "--config", c]).status.success());
}

#[test]
fn unwritable_output_is_an_io_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), "ok.cfg", SHORT);
    let blocker = write_cfg(d.path(), "file", "");
    let out = blocker.join("sub");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn unstable_step_is_a_numerical_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), "big.cfg", &SHORT.replace("2e-7", "2e-5"));
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", d.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let d = tempfile::tempdir().unwrap();
    let cfg = bundled("freefree_central.cfg");
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 8);
    for n in names {
        assert_eq!(std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
    let manifest = std::fs::read_to_string(a.join("manifest.txt")).unwrap();
    let traj = std::fs::read_to_string(a.join("trajectory.csv")).unwrap();
    assert_eq!(manifest.lines().next(), traj.lines().next());
}

#[test]
fn post_rom_oracle_and_batch() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), "short.cfg", SHORT);
    let c = cfg.to_str().unwrap();
    let sim = d.path().join("sim");
    assert!(run(&["simulate", "--config", c, "--out", sim.to_str().unwrap()]).status.success());
    let post = d.path().join("post");
    let o = run(&["post", "--traj", sim.join("trajectory.csv").to_str().unwrap(), "--out", post.to_str().unwrap(), "--fit-window", "1e-4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let body = |p: &Path| {
        let t = std::fs::read_to_string(p).unwrap();
        t.split_once('\n').unwrap().1.to_string()
    };
    assert_eq!(body(&sim.join("modal_summary.csv")), body(&post.join("modal_summary.csv")));

    let rom = d.path().join("rom");
    assert!(run(&["rom", "--config", c, "--out", rom.to_str().unwrap()]).status.success());
    assert!(rom.join("beam.kred").exists() && rom.join("sphere.rmodes").exists());

    let oracle = d.path().join("oracle");
    let o = run(&["oracle", "--config", c, "--out", oracle.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("contact duration"));

    let batch = d.path().join("batch");
    let o = bin()
        .env("BEAMIMPACT_THREADS", "2")
        .args(["batch", "--out", batch.to_str().unwrap(), c])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        std::fs::read(batch.join("short/trajectory.csv")).unwrap(),
        std::fs::read(sim.join("trajectory.csv")).unwrap()
    );
    let o = bin()
        .env("BEAMIMPACT_THREADS", "zero")
        .args(["batch", "--out", batch.to_str().unwrap(), c])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_command_is_usage_error() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["simulate"]).status.code(), Some(2));
}
