//! Triplet text format for model matrices.
//!
//! ```text
//! symmetric <n>          # or: general <rows> <cols>
//! <i> <j> <value>        # 1-based; lower triangle for symmetric matrices
//! ```
//!
//! Values are written with 17 significant digits so that a round trip is
//! bit-exact. Blank lines and `#` comments are ignored. A model is stored
//! as three files sharing a stem: `<stem>.mass`, `<stem>.stiff` and
//! `<stem>.dofs` (`index node tag role position`, index `-` for eliminated
//! supports).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use super::{AssembledModel, DofKind, DofLabel};
use crate::error::{Error, Result};

pub(crate) fn stem_path(stem: &Path, ext: &str) -> PathBuf {
    PathBuf::from(format!("{}.{ext}", stem.display()))
}

pub(crate) fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Lower-triangle triplets of a symmetric matrix.
pub(crate) fn format_symmetric(m: &DMatrix<f64>) -> String {
    let mut out = format!("symmetric {}\n", m.nrows());
    for i in 0..m.nrows() {
        for j in 0..=i {
            let v = m[(i, j)];
            if v != 0.0 {
                let _ = writeln!(out, "{} {} {}", i + 1, j + 1, format_value(v));
            }
        }
    }
    out
}

pub(crate) fn format_general(m: &DMatrix<f64>) -> String {
    let mut out = format!("general {} {}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            if v != 0.0 {
                let _ = writeln!(out, "{} {} {}", i + 1, j + 1, format_value(v));
            }
        }
    }
    out
}

/// Content lines with their 1-based line numbers, comments stripped.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(k, line)| {
        let line = line.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((k + 1, line))
    })
}

pub(crate) fn parse_matrix(text: &str, path: &Path) -> Result<DMatrix<f64>> {
    let err = |line: usize, message: &str| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.to_string(),
    };
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| err(1, "missing header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (symmetric, rows, cols) = match fields.as_slice() {
        ["symmetric", n] => {
            let n: usize = n.parse().map_err(|_| err(hline, "malformed header"))?;
            (true, n, n)
        }
        ["general", r, c] => {
            let r: usize = r.parse().map_err(|_| err(hline, "malformed header"))?;
            let c: usize = c.parse().map_err(|_| err(hline, "malformed header"))?;
            (false, r, c)
        }
        _ => return Err(err(hline, "malformed header")),
    };

    let mut m = DMatrix::zeros(rows, cols);
    let mut seen: HashMap<(usize, usize), f64> = HashMap::new();
    for (k, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(err(k, "expected triplet `i j value`"));
        }
        let i: usize = f[0].parse().map_err(|_| err(k, "malformed row index"))?;
        let j: usize = f[1].parse().map_err(|_| err(k, "malformed column index"))?;
        let v: f64 = f[2].parse().map_err(|_| err(k, "malformed value"))?;
        if i == 0 || j == 0 || i > rows || j > cols {
            return Err(err(k, "index out of range"));
        }
        let (r, c) = if symmetric && j > i { (j - 1, i - 1) } else { (i - 1, j - 1) };
        if let Some(&prev) = seen.get(&(r, c)) {
            if prev != v {
                return Err(err(k, "asymmetric duplicate entry"));
            }
            continue;
        }
        seen.insert((r, c), v);
        m[(r, c)] = v;
        if symmetric {
            m[(c, r)] = v;
        }
    }
    Ok(m)
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Write `<stem>.mass`, `<stem>.stiff` and `<stem>.dofs`.
pub fn export_matrices(model: &AssembledModel, stem: &Path) -> Result<()> {
    write_text(
        &stem_path(stem, "mass"),
        &format_symmetric(model.mass_matrix()),
    )?;
    write_text(
        &stem_path(stem, "stiff"),
        &format_symmetric(model.stiffness_matrix()),
    )?;
    let mut dofs = String::from("# index node tag role position_m\n");
    for (i, d) in model.dofs().iter().enumerate() {
        let _ = writeln!(
            dofs,
            "{} {} {} {} {}",
            i + 1,
            d.node,
            d.kind.tag(),
            model.role(i).tag(),
            format_value(d.position)
        );
    }
    for d in model.constrained() {
        let _ = writeln!(
            dofs,
            "- {} {} constrained {}",
            d.node,
            d.kind.tag(),
            format_value(d.position)
        );
    }
    write_text(&stem_path(stem, "dofs"), &dofs)
}

pub fn import_matrices(stem: &Path) -> Result<AssembledModel> {
    let mpath = stem_path(stem, "mass");
    let kpath = stem_path(stem, "stiff");
    let dpath = stem_path(stem, "dofs");
    let mass = parse_matrix(&read_text(&mpath)?, &mpath)?;
    let stiffness = parse_matrix(&read_text(&kpath)?, &kpath)?;
    if mass.nrows() != mass.ncols() || stiffness.nrows() != stiffness.ncols() {
        return Err(Error::Parse {
            path: mpath,
            line: 1,
            message: "model matrices must be symmetric".into(),
        });
    }
    let n = mass.nrows();
    let text = read_text(&dpath)?;
    let err = |line: usize, message: &str| Error::Parse {
        path: dpath.clone(),
        line,
        message: message.to_string(),
    };
    let mut dofs: Vec<Option<DofLabel>> = vec![None; n];
    let mut constrained = Vec::new();
    let mut boundary = Vec::new();
    for (k, line) in content_lines(&text) {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 5 {
            return Err(err(k, "expected `index node tag role position`"));
        }
        let node: usize = f[1].parse().map_err(|_| err(k, "malformed node id"))?;
        let kind = DofKind::from_tag(f[2]).ok_or_else(|| err(k, "unknown dof tag"))?;
        let position: f64 = f[4].parse().map_err(|_| err(k, "malformed position"))?;
        let label = DofLabel {
            node,
            kind,
            position,
        };
        match (f[0], f[3]) {
            ("-", "constrained") => constrained.push(label),
            (idx, role @ ("boundary" | "inner")) => {
                let i: usize = idx.parse().map_err(|_| err(k, "malformed index"))?;
                if i == 0 || i > n {
                    return Err(err(k, "index out of range"));
                }
                if dofs[i - 1].replace(label).is_some() {
                    return Err(err(k, "duplicate dof index"));
                }
                if role == "boundary" {
                    boundary.push(i - 1);
                }
            }
            _ => return Err(err(k, "inconsistent index and role")),
        }
    }
    let dofs = dofs
        .into_iter()
        .enumerate()
        .map(|(i, d)| d.ok_or_else(|| err(0, &format!("dof {} missing", i + 1))))
        .collect::<Result<Vec<_>>>()?;
    AssembledModel::new(mass, stiffness, dofs, constrained, boundary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_beam, BeamGeometry, Material, MassStyle, Support};

    #[test]
    fn identity_has_two_triplets() {
        let text = format_symmetric(&DMatrix::identity(2, 2));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "symmetric 2");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1 1 1.0000000000000000e0"));
    }

    #[test]
    fn out_of_range_names_line() {
        let text = "symmetric 2\n# comment\n\n1 1 2.0\n3 1 0.5\n";
        let e = parse_matrix(text, Path::new("x.stiff")).unwrap_err();
        assert_eq!(e.to_string(), "x.stiff: index out of range at line 5");
    }

    #[test]
    fn conflicting_duplicates_rejected() {
        let text = "symmetric 2\n2 1 0.5\n1 2 0.25\n";
        let e = parse_matrix(text, Path::new("m")).unwrap_err();
        assert!(e.to_string().contains("asymmetric duplicate entry at line 3"));
        let same = "symmetric 2\n2 1 0.5\n1 2 0.5\n";
        assert!(parse_matrix(same, Path::new("m")).is_ok());
    }

    #[test]
    fn malformed_header() {
        for text in ["sym 2\n", "symmetric x\n", ""] {
            let e = parse_matrix(text, Path::new("m")).unwrap_err();
            assert!(e.to_string().contains("header"), "{e}");
        }
    }

    #[test]
    fn beam_round_trip_is_bit_exact() {
        let geo = BeamGeometry::new(0.21, 0.015, 0.01).unwrap();
        let model = assemble_beam(
            24,
            &Material::steel(),
            &geo,
            Support::ClampedClamped,
            MassStyle::Consistent,
        )
        .unwrap();
        let (model, _) = model.with_contact_at(0.0525).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("beam");
        export_matrices(&model, &stem).unwrap();
        let back = import_matrices(&stem).unwrap();
        assert_eq!(back, model);
        let diff = (back.stiffness_matrix() - model.stiffness_matrix()).amax();
        assert_eq!(diff, 0.0);
    }
}
