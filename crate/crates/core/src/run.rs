//! Command implementations: each reads a scenario, runs the pipeline and
//! writes its artifacts into one directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;

use crate::bench::{run_bench as bench, BenchReport};
use crate::cms::{export_rom, solve_modes};
use crate::contact::{hertz_oracle, simulate, Trajectory};
use crate::error::{Error, Result};
use crate::output::{self, OutputDir};
use crate::post::{
    compare_routes, force_from_velocity, frf_model, pulse_spectrum, resample, ModalSummary,
    RIG_SAMPLE_RATE,
};
use crate::scenario::{parse_scenario, BuiltScenario, PointSpec, Scenario, Strictness};

/// Environment variable holding the batch thread count.
pub const THREADS_ENV: &str = "BEAMIMPACT_THREADS";

/// Probe used for the free-decay fit: P2 when configured, else the first.
fn fit_probe(built: &BuiltScenario) -> Option<usize> {
    let probes = &built.scenario.probes;
    probes
        .iter()
        .position(|p| *p == PointSpec::Label(2))
        .or((!probes.is_empty()).then_some(0))
}

fn notes(built: &BuiltScenario) -> Vec<String> {
    let s = &built.scenario;
    let mut n = vec![
        format!(
            "assumed point fractions P1..P4 = {:?} of the beam length",
            s.point_fractions
        ),
        format!(
            "impact at {} snapped to node {} at x = {} m",
            s.impact_point.name(),
            built.impact.node,
            built.impact.position
        ),
        format!(
            "sphere compliance rule {} gives {:e} m/N",
            s.sphere.compliance_rule.name(),
            built.sphere_spec.contact_compliance
        ),
        format!(
            "beam reduced model: {} boundary + {} modal dofs",
            built.setup.beam.n_boundary(),
            built.setup.beam.n_modal()
        ),
    ];
    for p in &built.setup.probes {
        n.push(format!("probe {} at x = {} m (dof {})", p.label, p.position, p.dof));
    }
    n
}

/// Mode table of the beam with the impact dof as boundary.
pub fn run_modes(scenario: &Scenario) -> Result<String> {
    let built = scenario.build()?;
    let basis = &built.beam_basis;
    let mut out = String::from("mode,freq_hz,kind,retained\n");
    for k in 0..basis.n_modes() {
        let _ = writeln!(
            out,
            "{},{:.6},{},{}",
            k,
            basis.frequency_hz(k),
            if basis.is_rigid(k) { "rigid" } else { "elastic" },
            built.retained.indices().contains(&k)
        );
    }
    Ok(out)
}

/// Export the sphere and beam reduced models.
pub fn run_rom(scenario: &Scenario, out_dir: &Path) -> Result<PathBuf> {
    let built = scenario.build()?;
    let mut out = OutputDir::create(out_dir, output::run_id(scenario.echo()))?;
    for (stem, rom) in [("beam", &built.setup.beam), ("sphere", &built.setup.sphere)] {
        export_rom(rom, &out.path(stem))?;
        for ext in ["mass", "stiff", "dofs", "rom", "kred", "rmodes"] {
            out.register(&format!("{stem}.{ext}"))?;
        }
    }
    out.finish(scenario.echo(), &notes(&built))
}

/// Artifacts shared by simulation, oracle and post-processing.
fn write_response(
    out: &mut OutputDir,
    traj: &Trajectory,
    probe_shapes: &[Vec<f64>],
    fit: Option<(usize, f64)>,
    downsample: bool,
) -> Result<Option<ModalSummary>> {
    out.write("trajectory.csv", &output::trajectory_csv(traj))?;
    out.write("modal.csv", &output::modal_csv(&traj.beam, &traj.time, probe_shapes))?;
    out.write("events.txt", &traj.events.to_text())?;
    out.write(
        "pulse_spectrum.csv",
        &output::spectrum_csv(&pulse_spectrum(&traj.contact_force, traj.sample_interval())),
    )?;
    let recovered = force_from_velocity(&traj.sphere_velocity, traj.sphere_mass, traj.sample_interval())?;
    out.write("force_from_velocity.csv", &output::series_csv("f_c", 0.0, traj.sample_interval(), &recovered))?;
    if downsample {
        let (v, dt) = resample(&traj.sphere_velocity, traj.sample_interval(), RIG_SAMPLE_RATE)?;
        let f = force_from_velocity(&v, traj.sphere_mass, dt)?;
        out.write("force_102k4.csv", &output::series_csv("f_c", 0.0, dt, &f))?;
    }
    let released = traj.events.first_window().is_some_and(|w| w.released);
    if !released {
        warn!("no completed contact window; modal summary not written");
        return Ok(None);
    }
    let summary = ModalSummary::from_trajectory(traj)?;
    out.write("modal_summary.csv", &output::summary_csv(&summary))?;
    if let Some((probe, window)) = fit {
        match compare_routes(traj, probe, &probe_shapes[probe], window) {
            Ok(r) => {
                out.write("modal_routes.csv", &output::routes_csv(&r))?;
            }
            Err(e) => warn!("modal route comparison skipped: {e}"),
        }
    }
    Ok(Some(summary))
}

/// Result of [`run_simulate`].
#[derive(Debug, Clone)]
pub struct SimulateOutcome {
    pub trajectory: Trajectory,
    pub summary: Option<ModalSummary>,
    pub manifest: PathBuf,
}

pub fn run_simulate(scenario: &Scenario, out_dir: &Path) -> Result<SimulateOutcome> {
    let built = scenario.build()?;
    let mut out = OutputDir::create(out_dir, output::run_id(scenario.echo()))?;
    let traj = simulate(&built.setup)?;
    info!(
        "{} steps, {} contact window(s), max residual {:.2e}",
        traj.steps,
        traj.events.windows.len(),
        traj.max_residual
    );
    let shapes: Vec<Vec<f64>> = built.setup.probes.iter().map(|p| built.shape_at(p.dof)).collect();
    let fit = fit_probe(&built).map(|p| (p, scenario.fit_window));
    let summary = write_response(&mut out, &traj, &shapes, fit, scenario.downsample)?;

    let drive = built.shape_at(built.impact.dof);
    let omegas: Vec<f64> = built.setup.beam.frequencies().to_vec();
    if let Some(resp) = shapes.first() {
        let grid: Vec<f64> = (0..=2000).map(|i| i as f64 * 10.0).collect();
        let frf = frf_model(&omegas, &drive, resp, &vec![0.0; omegas.len()], &grid)?;
        out.write("frf_model.csv", &output::frf_csv(&frf))?;
    }
    let mut n = notes(&built);
    n.push(format!("steps = {}, max scaled residual = {:e}", traj.steps, traj.max_residual));
    let manifest = out.finish(scenario.echo(), &n)?;
    Ok(SimulateOutcome {
        trajectory: traj,
        summary,
        manifest,
    })
}

/// Hertz reference solution on the same retained beam modes.
pub fn run_oracle(scenario: &Scenario, out_dir: &Path) -> Result<Trajectory> {
    let built = scenario.build()?;
    let mut out = OutputDir::create(out_dir, output::run_id(&format!("oracle\n{}", scenario.echo())))?;
    let traj = hertz_oracle(&built.oracle_setup(false))?;
    let shapes: Vec<Vec<f64>> = built.setup.probes.iter().map(|p| built.shape_at(p.dof)).collect();
    let fit = fit_probe(&built).map(|p| (p, scenario.fit_window));
    write_response(&mut out, &traj, &shapes, fit, scenario.downsample)?;
    let rigid = hertz_oracle(&built.oracle_setup(true))?;
    let mut n = notes(&built);
    n.push(format!(
        "rigid-target contact duration {:e} s (closed form {:e} s)",
        rigid.events.first_window().map_or(f64::NAN, |w| w.duration()),
        built
            .law
            .rigid_contact_duration(scenario.sphere.mass, scenario.impact_velocity)
    ));
    out.finish(&format!("oracle\n{}", scenario.echo()), &n)?;
    Ok(traj)
}

/// Post-process a written trajectory (with its sibling `modal.csv`).
pub fn run_post(
    trajectory_csv: &Path,
    out_dir: &Path,
    fit_window: f64,
    coalescence: f64,
) -> Result<Option<ModalSummary>> {
    let bytes = std::fs::read(trajectory_csv).map_err(|e| Error::io(trajectory_csv, e))?;
    let echo = format!(
        "post.input_sha256 = {}\npost.fit_window_s = {fit_window:e}\ncontact.coalescence_s = {coalescence:e}\n",
        output::sha256_hex(&bytes)
    );
    let loaded = output::read_trajectory(trajectory_csv, coalescence)?;
    let mut out = OutputDir::create(out_dir, output::run_id(&echo))?;
    let traj = &loaded.trajectory;
    let fit = (!traj.probes.is_empty()).then(|| {
        let p = traj.probes.iter().position(|p| p.label == "P2").unwrap_or(0);
        (p, fit_window)
    });
    let summary = write_response(&mut out, traj, &loaded.probe_shapes, fit, false)?;
    out.finish(&echo, &[format!("input {}", trajectory_csv.display())])?;
    Ok(summary)
}

/// Benchmark and write `bench.csv` when `out_dir` is given.
pub fn run_bench(scenario: &Scenario, out_dir: Option<&Path>, repeats: usize) -> Result<BenchReport> {
    let report = bench(scenario, repeats)?;
    if let Some(dir) = out_dir {
        // Wall times differ between runs; the id covers the config only.
        let mut out = OutputDir::create(dir, output::run_id(&format!("bench\n{}", scenario.echo())))?;
        out.write("bench.csv", &report.to_text())?;
        out.finish(scenario.echo(), &[])?;
    }
    Ok(report)
}

/// Thread count from [`THREADS_ENV`], if set.
pub fn configured_threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::invalid(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

/// Simulate several configs concurrently, each into `out_root/<config stem>`.
pub fn run_batch(
    configs: &[PathBuf],
    out_root: &Path,
    strictness: Strictness,
) -> Result<Vec<(PathBuf, Result<PathBuf>)>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = configured_threads()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let mut stems: Vec<String> = configs
        .iter()
        .map(|c| c.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned()))
        .collect();
    let mut sorted = stems.clone();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        for (i, s) in stems.iter_mut().enumerate() {
            *s = format!("{i:03}_{s}");
        }
    }
    Ok(pool.install(|| {
        configs
            .par_iter()
            .zip(stems.par_iter())
            .map(|(cfg, stem)| {
                let dir = out_root.join(stem);
                let result = parse_scenario(cfg, strictness)
                    .and_then(|s| run_simulate(&s, &dir))
                    .map(|o| o.manifest);
                (cfg.clone(), result)
            })
            .collect()
    }))
}

/// Solve the free modes of the unconstrained beam (no boundary) for a
/// scenario; used by `modes` when the impact point is irrelevant.
pub fn free_beam_frequencies_hz(scenario: &Scenario) -> Result<Vec<f64>> {
    let model = scenario.beam_model()?;
    let basis = solve_modes(&model)?;
    Ok((0..basis.n_modes()).map(|k| basis.frequency_hz(k)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario_str;

    const SHORT: &str = "beam.support = free-free\nbeam.n_elem = 24\nimpact.point = P4\n\
        impact.velocity_m_s = 1.1\nrom.f_cut_hz = 40e3\nintegration.dt_s = 2e-7\n\
        integration.t_end_s = 2e-4\npost.fit_window_s = 1e-4\noutput.downsample = true\n";

    #[test]
    fn simulate_is_deterministic_and_post_reproduces_summary() {
        let s = parse_scenario_str(SHORT, Strictness::Strict).unwrap();
        let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ra = run_simulate(&s, a.path()).unwrap();
        run_simulate(&s, b.path()).unwrap();
        for f in ["trajectory.csv", "modal.csv", "modal_summary.csv", "events.txt", "manifest.txt", "force_102k4.csv"] {
            let x = std::fs::read(a.path().join(f)).unwrap();
            let y = std::fs::read(b.path().join(f)).unwrap();
            assert_eq!(x, y, "{f} differs");
        }
        let post = run_post(&a.path().join("trajectory.csv"), c.path(), 1e-4, s.coalescence)
            .unwrap()
            .unwrap();
        assert_eq!(post, ra.summary.unwrap());
    }

    #[test]
    fn modes_table_lists_rigid_modes_first() {
        let s = parse_scenario_str(SHORT, Strictness::Strict).unwrap();
        let t = run_modes(&s).unwrap();
        let lines: Vec<&str> = t.lines().collect();
        assert!(lines[1].contains("rigid") && lines[2].contains("rigid") && lines[3].contains("elastic"));
        let f = free_beam_frequencies_hz(&s).unwrap();
        let f1: f64 = lines[3].split(',').nth(1).unwrap().parse().unwrap();
        assert!((f1 - f[2]).abs() < 1e-6 * f1);
    }

    #[test]
    fn rom_export_round_trips() {
        let s = parse_scenario_str(SHORT, Strictness::Strict).unwrap();
        let d = tempfile::tempdir().unwrap();
        run_rom(&s, d.path()).unwrap();
        let back = crate::cms::import_rom(&d.path().join("beam")).unwrap();
        assert_eq!(&back, &s.build().unwrap().setup.beam);
    }

    #[test]
    fn batch_writes_one_directory_per_config() {
        let d = tempfile::tempdir().unwrap();
        let cfg = d.path().join("short.cfg");
        std::fs::write(&cfg, SHORT).unwrap();
        let bad = d.path().join("bad.cfg");
        std::fs::write(&bad, "beam.support = free-free\n").unwrap();
        let res = run_batch(&[cfg, bad], &d.path().join("out"), Strictness::Strict).unwrap();
        assert!(res[0].1.is_ok());
        assert!(res[1].1.as_ref().unwrap_err().is_input());
        assert!(d.path().join("out/short/manifest.txt").exists());
    }
}
