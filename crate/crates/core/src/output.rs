//! CSV and text artifacts of a run.
//!
//! Every file starts with `# run <id>`, where the id hashes the canonical
//! config echo and the crate version. Numbers use the shortest text that
//! parses back to the same `f64`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use sha2::{Digest, Sha256};

use crate::contact::{detect_events, ModalHistory, Probe, Trajectory};
use crate::error::{Error, Result};
use crate::post::{FrfEstimate, ModalSummary, RouteComparison, Spectrum};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Run identifier for a config echo.
pub fn run_id(echo: &str) -> String {
    sha256_hex(format!("beamimpact {VERSION}\n{echo}").as_bytes())
}

/// Writes files into one directory and collects their checksums.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    run_id: String,
    files: Vec<(String, String)>,
}

impl OutputDir {
    pub fn create(dir: &Path, run_id: String) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            run_id,
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Write `body` after the run header line.
    pub fn write(&mut self, name: &str, body: &str) -> Result<PathBuf> {
        let text = format!("# run {}\n{body}", self.run_id);
        let path = self.dir.join(name);
        std::fs::write(&path, &text).map_err(|e| Error::io(&path, e))?;
        self.files.push((name.to_string(), sha256_hex(text.as_bytes())));
        Ok(path)
    }

    /// Record a file written by another writer (e.g. matrix export).
    pub fn register(&mut self, name: &str) -> Result<()> {
        let path = self.dir.join(name);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        self.files.push((name.to_string(), sha256_hex(&bytes)));
        Ok(())
    }

    /// `manifest.txt`: config echo, version, notes and file checksums.
    pub fn finish(mut self, echo: &str, notes: &[String]) -> Result<PathBuf> {
        self.files.sort();
        let mut body = format!("version = {VERSION}\n\n[config]\n{echo}\n[notes]\n");
        for n in notes {
            let _ = writeln!(body, "{n}");
        }
        body.push_str("\n[files]\n");
        for (name, sum) in &self.files {
            let _ = writeln!(body, "{sum}  {name}");
        }
        let text = format!("# run {}\n{body}", self.run_id);
        let path = self.dir.join("manifest.txt");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values
        .into_iter()
        .map(|v| format!("{v:e}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// `t,f_c,v_sph,v_<probe>…,lambda_1…`, preceded by `#` metadata lines.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# sphere_mass_kg={:e}", traj.sphere_mass);
    let _ = writeln!(out, "# dt_s={:e}", traj.dt);
    for p in &traj.probes {
        let _ = writeln!(out, "# probe {} dof={} x_m={:e}", p.label, p.dof, p.position);
    }
    let pairs = traj.lambda.first().map_or(0, |l| l.len());
    let mut header = vec!["t".to_string(), "f_c".into(), "v_sph".into()];
    header.extend(traj.probes.iter().map(|p| format!("v_{}", p.label)));
    header.extend((1..=pairs).map(|j| format!("lambda_{j}")));
    let _ = writeln!(out, "{}", header.join(","));
    for i in 0..traj.len() {
        let mut row = vec![traj.time[i], traj.contact_force[i], traj.sphere_velocity[i]];
        row.extend(traj.probe_velocity.iter().map(|v| v[i]));
        row.extend(traj.lambda[i].iter().copied());
        let _ = writeln!(out, "{}", join(row));
    }
    out
}

/// Beam modal history: `t,eta_1…,etadot_1…` with the basis data as metadata.
pub fn modal_csv(beam: &ModalHistory, time: &[f64], probe_shapes: &[Vec<f64>]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# rigid_count={}", beam.rigid_count);
    let _ = writeln!(out, "# omega_rad_s={}", join(beam.frequencies.iter().copied()));
    let _ = writeln!(out, "# impact_shape={}", join(beam.impact_shape.iter().copied()));
    for (p, s) in probe_shapes.iter().enumerate() {
        let _ = writeln!(out, "# probe_shape {}={}", p, join(s.iter().copied()));
    }
    let m = beam.frequencies.len();
    let mut header = vec!["t".to_string()];
    header.extend((1..=m).map(|k| format!("eta_{k}")));
    header.extend((1..=m).map(|k| format!("etadot_{k}")));
    let _ = writeln!(out, "{}", header.join(","));
    for (i, t) in time.iter().enumerate() {
        let row = std::iter::once(*t)
            .chain(beam.eta[i].iter().copied())
            .chain(beam.eta_dot[i].iter().copied());
        let _ = writeln!(out, "{}", join(row));
    }
    out
}

pub fn summary_csv(summary: &ModalSummary) -> String {
    let mut out = String::from("mode,label,freq_hz,E_mod_J,E_frac,r_k\n");
    for r in &summary.rows {
        let _ = writeln!(
            out,
            "{},{},{:e},{:e},{:e},{:e}",
            r.mode, r.label, r.freq_hz, r.energy, r.energy_fraction, r.restitution
        );
    }
    out
}

/// Undefined bins are written as `nan`.
pub fn frf_csv(frf: &FrfEstimate) -> String {
    let mut out = String::from("f_hz,re,im,mag,phase\n");
    for (f, h) in frf.frequencies.iter().zip(&frf.values) {
        match h {
            Some(h) => {
                let _ = writeln!(out, "{}", join([*f, h.re, h.im, h.norm(), h.arg()]));
            }
            None => {
                let _ = writeln!(out, "{f:e},nan,nan,nan,nan");
            }
        }
    }
    out
}

/// One-sided pulse spectrum, 1/N forward normalization.
pub fn spectrum_csv(spectrum: &Spectrum) -> String {
    let mut out = String::from("f_hz,re,im,mag\n");
    for (f, c) in spectrum.one_sided() {
        let _ = writeln!(out, "{}", join([f, c.re, c.im, c.norm()]));
    }
    out
}

pub fn routes_csv(routes: &RouteComparison) -> String {
    let mut out = format!(
        "# rigid_velocity_m_s={:e} fit_residual={:e}\n\
         mode,label,energy_share,proj_re,proj_im,fit_re,fit_im,duhamel_re,duhamel_im,max_rel_diff\n",
        routes.rigid_velocity, routes.fit_residual
    );
    for m in &routes.modes {
        let _ = writeln!(
            out,
            "{},{},{}",
            m.mode,
            m.label,
            join([
                m.energy_share,
                m.projection.re,
                m.projection.im,
                m.fit.re,
                m.fit.im,
                m.duhamel.re,
                m.duhamel.im,
                m.max_pairwise(),
            ])
        );
    }
    out
}

/// Two-column `t,<name>` series.
pub fn series_csv(name: &str, t0: f64, dt: f64, values: &[f64]) -> String {
    let mut out = format!("t,{name}\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{}", join([t0 + i as f64 * dt, *v]));
    }
    out
}

struct Table {
    meta: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut table = Table {
        meta: Vec::new(),
        header: Vec::new(),
        rows: Vec::new(),
    };
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(m) = line.strip_prefix('#') {
            table.meta.push(m.trim().to_string());
        } else if table.header.is_empty() {
            table.header = line.split(',').map(|s| s.trim().to_string()).collect();
        } else {
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| parse_err(k + 1, e.to_string()))?;
            if row.len() != table.header.len() {
                return Err(parse_err(
                    k + 1,
                    format!("{} fields, header has {}", row.len(), table.header.len()),
                ));
            }
            table.rows.push(row);
        }
    }
    if table.header.is_empty() {
        return Err(parse_err(0, "no header line".into()));
    }
    Ok(table)
}

fn meta_value<'a>(meta: &'a [String], key: &str) -> Option<&'a str> {
    meta.iter().find_map(|m| m.strip_prefix(key)?.strip_prefix('='))
}

fn parse_list(path: &Path, text: &str) -> Result<Vec<f64>> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })
}

/// Trajectory and per-probe mode shapes read back from `trajectory.csv` and
/// the sibling `modal.csv`.
#[derive(Debug, Clone)]
pub struct LoadedTrajectory {
    pub trajectory: Trajectory,
    pub probe_shapes: Vec<Vec<f64>>,
}

pub fn read_trajectory(path: &Path, coalescence: f64) -> Result<LoadedTrajectory> {
    let t = read_table(path)?;
    let missing = |what: &str| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: format!("missing {what}"),
    };
    let col = |name: &str| t.header.iter().position(|h| h == name).ok_or_else(|| missing(name));
    let (ct, cf, cv) = (col("t")?, col("f_c")?, col("v_sph")?);
    let sphere_mass: f64 = meta_value(&t.meta, "sphere_mass_kg")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| missing("sphere_mass_kg"))?;
    let dt: f64 = meta_value(&t.meta, "dt_s")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| missing("dt_s"))?;
    let mut probes = Vec::new();
    for m in &t.meta {
        if let Some(rest) = m.strip_prefix("probe ") {
            let mut parts = rest.split_whitespace();
            let label = parts.next().ok_or_else(|| missing("probe label"))?.to_string();
            fn field<'a>(p: Option<&'a str>, key: &str) -> Option<&'a str> {
                p.and_then(|s| s.strip_prefix(key))
            }
            let dof = field(parts.next(), "dof=")
                .ok_or_else(|| missing("probe dof"))?
                .parse().map_err(|_| missing("probe dof"))?;
            let position = field(parts.next(), "x_m=")
                .ok_or_else(|| missing("probe x"))?
                .parse().map_err(|_| missing("probe x"))?;
            probes.push(Probe { label, dof, position });
        }
    }
    let probe_cols = probes
        .iter()
        .map(|p| col(&format!("v_{}", p.label)))
        .collect::<Result<Vec<_>>>()?;
    let lambda_cols: Vec<usize> = (0..t.header.len())
        .filter(|&j| t.header[j].starts_with("lambda_"))
        .collect();
    let column = |j: usize| t.rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
    let time = column(ct);
    let contact_force = column(cf);

    let modal_path = path.with_file_name("modal.csv");
    let m = read_table(&modal_path)?;
    let rigid_count = meta_value(&m.meta, "rigid_count")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| missing("rigid_count in modal.csv"))?;
    let frequencies = parse_list(&modal_path, meta_value(&m.meta, "omega_rad_s").unwrap_or(""))?;
    let impact_shape = parse_list(&modal_path, meta_value(&m.meta, "impact_shape").unwrap_or(""))?;
    let probe_shapes = (0..probes.len())
        .map(|p| {
            let text = meta_value(&m.meta, &format!("probe_shape {p}"))
                .ok_or_else(|| missing("probe_shape in modal.csv"))?;
            parse_list(&modal_path, text)
        })
        .collect::<Result<Vec<_>>>()?;
    let nm = frequencies.len();
    if m.rows.len() != t.rows.len() || m.header.len() != 1 + 2 * nm || impact_shape.len() != nm {
        return Err(Error::Parse {
            path: modal_path,
            line: 0,
            message: "modal history does not match the trajectory".into(),
        });
    }
    let events = detect_events(&time, &contact_force, coalescence);
    let trajectory = Trajectory {
        lambda: t
            .rows
            .iter()
            .map(|r| DVector::from_iterator(lambda_cols.len(), lambda_cols.iter().map(|&j| r[j])))
            .collect(),
        sphere_velocity: column(cv),
        sphere_mass,
        probe_velocity: probe_cols.iter().map(|&j| column(j)).collect(),
        probes,
        beam: ModalHistory {
            frequencies,
            rigid_count,
            impact_shape,
            eta: m.rows.iter().map(|r| DVector::from_row_slice(&r[1..=nm])).collect(),
            eta_dot: m.rows.iter().map(|r| DVector::from_row_slice(&r[1 + nm..])).collect(),
        },
        steps: time.len().saturating_sub(1),
        dt,
        max_residual: f64::NAN,
        min_gap: f64::NAN,
        energy: Vec::new(),
        momentum: Vec::new(),
        events,
        time,
        contact_force,
    };
    Ok(LoadedTrajectory {
        trajectory,
        probe_shapes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trajectory {
        let time: Vec<f64> = (0..6).map(|i| i as f64 * 1e-7).collect();
        let force = vec![0.0, 0.0, 1.5, 2.25, 0.0, 0.0];
        Trajectory {
            events: detect_events(&time, &force, 0.0),
            lambda: force.iter().map(|f| DVector::from_element(1, *f)).collect(),
            contact_force: force,
            sphere_velocity: vec![-1.1, -1.1, -0.9, 0.2, 0.3, 0.3],
            sphere_mass: 5.58e-3,
            probes: vec![Probe {
                label: "P2".into(),
                dof: 7,
                position: 0.0525,
            }],
            probe_velocity: vec![vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.1 + 0.2]],
            beam: ModalHistory {
                frequencies: vec![0.0, 7.6e3],
                rigid_count: 1,
                impact_shape: vec![3.0, -4.5],
                eta: (0..6).map(|i| DVector::from_vec(vec![i as f64, 1.0 / 3.0])).collect(),
                eta_dot: (0..6).map(|i| DVector::from_vec(vec![0.1, -(i as f64)])).collect(),
            },
            steps: 5,
            dt: 1e-7,
            time,
            ..Trajectory::default()
        }
    }

    #[test]
    fn trajectory_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let traj = sample();
        let mut out = OutputDir::create(dir.path(), run_id("x = 1\n")).unwrap();
        let p = out.write("trajectory.csv", &trajectory_csv(&traj)).unwrap();
        out.write("modal.csv", &modal_csv(&traj.beam, &traj.time, &[vec![0.5, 0.25]]))
            .unwrap();
        let back = read_trajectory(&p, 0.0).unwrap();
        let b = &back.trajectory;
        assert_eq!(b.time, traj.time);
        assert_eq!(b.contact_force, traj.contact_force);
        assert_eq!(b.sphere_velocity, traj.sphere_velocity);
        assert_eq!(b.probe_velocity, traj.probe_velocity);
        assert_eq!(b.probes, traj.probes);
        assert_eq!(b.lambda, traj.lambda);
        assert_eq!(b.beam, traj.beam);
        assert_eq!(b.events, traj.events);
        assert_eq!(back.probe_shapes, vec![vec![0.5, 0.25]]);
    }

    #[test]
    fn manifest_lists_checksums() {
        let dir = tempfile::tempdir().unwrap();
        let id = run_id("a = 1\n");
        let mut out = OutputDir::create(dir.path(), id.clone()).unwrap();
        out.write("b.csv", "x\n1\n").unwrap();
        let text = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
        assert!(text.starts_with(&format!("# run {id}\n")));
        let manifest = out.finish("a = 1\n", &["note".into()]).unwrap();
        let m = std::fs::read_to_string(manifest).unwrap();
        assert!(m.contains(&format!("{}  b.csv", sha256_hex(text.as_bytes()))));
        assert!(m.contains("a = 1"));
        assert_ne!(run_id("a = 1\n"), run_id("a = 2\n"));
    }

    #[test]
    fn malformed_table_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("trajectory.csv");
        std::fs::write(&p, "# run x\nt,f_c,v_sph\n0,1,2\n0,oops,2\n").unwrap();
        let e = read_trajectory(&p, 0.0).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 4, .. }), "{e}");
    }
}
