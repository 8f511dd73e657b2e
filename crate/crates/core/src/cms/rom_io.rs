//! Reduced-model files next to the parent model files:
//!
//! * `<stem>.rom`: `retained`, `rigid`, `omega` lines and `shape i j value`
//!   entries of Φ_b (1-based boundary row, 1-based retained column);
//! * `<stem>.kred`: K̃ as symmetric triplets;
//! * `<stem>.rmodes`: R as general triplets.
//!
//! The boundary set is carried by `<stem>.dofs`.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::ReducedModel;
use crate::assembly::matrix_io::{
    content_lines, format_general, format_symmetric, format_value, parse_matrix, read_text,
    stem_path, write_text,
};
use crate::assembly::{export_matrices, import_matrices};
use crate::error::{Error, Result};

pub fn export_rom(rom: &ReducedModel, stem: &Path) -> Result<()> {
    export_matrices(rom.parent(), stem)?;
    let mut meta = String::from("# reduced model\n");
    let retained: Vec<String> = rom.retained().iter().map(|k| k.to_string()).collect();
    let _ = writeln!(meta, "retained {}", retained.join(" "));
    let _ = writeln!(meta, "rigid {}", rom.rigid_count());
    let omega: Vec<String> = rom.frequencies().iter().map(|&w| format_value(w)).collect();
    let _ = writeln!(meta, "omega {}", omega.join(" "));
    let phi_b = rom.boundary_shapes();
    for i in 0..phi_b.nrows() {
        for j in 0..phi_b.ncols() {
            let _ = writeln!(meta, "shape {} {} {}", i + 1, j + 1, format_value(phi_b[(i, j)]));
        }
    }
    write_text(&stem_path(stem, "rom"), &meta)?;
    write_text(
        &stem_path(stem, "kred"),
        &format_symmetric(&rom.reduced_stiffness()),
    )?;
    write_text(
        &stem_path(stem, "rmodes"),
        &format_general(rom.component_modes()),
    )
}

pub fn import_rom(stem: &Path) -> Result<ReducedModel> {
    let parent = Arc::new(import_matrices(stem)?);
    let path = stem_path(stem, "rom");
    let text = read_text(&path)?;
    let err = |line: usize, message: &str| Error::Parse {
        path: path.clone(),
        line,
        message: message.to_string(),
    };
    let mut retained = None;
    let mut rigid = None;
    let mut omega = None;
    let mut shapes = Vec::new();
    for (k, line) in content_lines(&text) {
        let mut f = line.split_whitespace();
        let key = f.next().unwrap_or_default();
        let rest: Vec<&str> = f.collect();
        match key {
            "retained" => {
                let v = rest
                    .iter()
                    .map(|s| s.parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| err(k, "malformed mode index"))?;
                retained = Some(v);
            }
            "rigid" => {
                let v = rest
                    .first()
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or_else(|| err(k, "malformed rigid count"))?;
                rigid = Some(v);
            }
            "omega" => {
                let v = rest
                    .iter()
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| err(k, "malformed frequency"))?;
                omega = Some(v);
            }
            "shape" => {
                if rest.len() != 3 {
                    return Err(err(k, "expected `shape i j value`"));
                }
                let i: usize = rest[0].parse().map_err(|_| err(k, "malformed row index"))?;
                let j: usize = rest[1].parse().map_err(|_| err(k, "malformed column index"))?;
                let v: f64 = rest[2].parse().map_err(|_| err(k, "malformed value"))?;
                shapes.push((k, i, j, v));
            }
            _ => return Err(err(k, &format!("unknown key `{key}`"))),
        }
    }
    let retained = retained.ok_or_else(|| err(0, "missing `retained`"))?;
    let rigid = rigid.ok_or_else(|| err(0, "missing `rigid`"))?;
    let omega = omega.ok_or_else(|| err(0, "missing `omega`"))?;
    let nb = parent.boundary().len();
    let mut phi_b = DMatrix::zeros(nb, retained.len());
    for (k, i, j, v) in shapes {
        if i == 0 || j == 0 || i > nb || j > retained.len() {
            return Err(err(k, "index out of range"));
        }
        phi_b[(i - 1, j - 1)] = v;
    }
    let kpath = stem_path(stem, "kred");
    let kred = parse_matrix(&read_text(&kpath)?, &kpath)?;
    let rpath = stem_path(stem, "rmodes");
    let r = parse_matrix(&read_text(&rpath)?, &rpath)?;
    ReducedModel::from_parts(parent, retained, omega, rigid, phi_b, &kred, r)
}
