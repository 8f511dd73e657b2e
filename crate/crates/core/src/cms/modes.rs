use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::assembly::{describe, AssembledModel};
use crate::error::{Error, Result};

/// Below this fraction of the largest frequency an eigenvalue is treated as
/// round-off when looking for the first elastic mode.
const NOISE_FLOOR: f64 = 1e-6;
/// Rigid modes: ω < RIGID_RATIO · ω_first_elastic.
const RIGID_RATIO: f64 = 1e-4;

/// Mass-normalized free-interface normal modes, ascending in frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalBasis {
    frequencies: Vec<f64>,
    shapes: DMatrix<f64>,
    rigid_count: usize,
}

impl ModalBasis {
    /// Angular frequencies ω_k in rad/s; exactly zero for rigid modes.
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn frequency_hz(&self, k: usize) -> f64 {
        self.frequencies[k] / (2.0 * std::f64::consts::PI)
    }

    /// Columns are the mode shapes φ_k (n_dof × n_modes).
    pub fn shapes(&self) -> &DMatrix<f64> {
        &self.shapes
    }

    pub fn rigid_count(&self) -> usize {
        self.rigid_count
    }

    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }

    /// φ_k at one dof.
    pub fn value(&self, mode: usize, dof: usize) -> f64 {
        self.shapes[(dof, mode)]
    }

    pub fn is_rigid(&self, mode: usize) -> bool {
        mode < self.rigid_count
    }
}

/// All eigenpairs of `(K − ω²M)φ = 0` with `φᵀMφ = 1`.
///
/// Massless dofs are allowed only on the boundary; they are condensed out
/// statically and the shapes extended back onto them, so the basis then
/// holds only the finite-frequency modes. The zero-frequency subspace is
/// re-orthonormalized from the model's rigid seeds (translation first).
pub fn solve_modes(model: &AssembledModel) -> Result<ModalBasis> {
    let n = model.n_dof();
    let k = model.stiffness_matrix();
    let m = model.mass_matrix();
    let massless = model.massless_dofs();
    for &z in &massless {
        if model.boundary().binary_search(&z).is_err() {
            return Err(Error::MassNotPositive {
                dof: z,
                label: describe(&model.dofs()[z]),
            });
        }
    }
    let massive: Vec<usize> = (0..n).filter(|i| massless.binary_search(i).is_err()).collect();
    if massive.is_empty() {
        return Err(Error::invalid("model has no mass"));
    }

    let k_ss = k.select_rows(&massive).select_columns(&massive);
    let m_ss = m.select_rows(&massive).select_columns(&massive);
    // Static condensation of the massless dofs: q_z = −K_zz⁻¹ K_zs q_s.
    let (k_cond, z_map) = if massless.is_empty() {
        (k_ss, None)
    } else {
        let k_zz = k.select_rows(&massless).select_columns(&massless);
        let k_zs = k.select_rows(&massless).select_columns(&massive);
        let chol = Cholesky::new(k_zz).ok_or(Error::SingularMasslessBlock)?;
        let map = -chol.solve(&k_zs);
        let cond = &k_ss + k_zs.transpose() * &map;
        (symmetrize(cond), Some(map))
    };

    let chol = Cholesky::new(m_ss.clone()).ok_or_else(|| {
        let dof = massive[first_non_pd_pivot(&m_ss)];
        Error::MassNotPositive {
            dof,
            label: describe(&model.dofs()[dof]),
        }
    })?;
    let l = chol.l();
    // C = L⁻¹ K L⁻ᵀ
    let x = l
        .solve_lower_triangular(&k_cond)
        .ok_or_else(|| Error::Eigen("triangular solve failed".into()))?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::Eigen("triangular solve failed".into()))?;
    let eig = SymmetricEigen::new(symmetrize(c));
    let lt = l.transpose();
    let phi_s = lt
        .solve_upper_triangular(&eig.eigenvectors)
        .ok_or_else(|| Error::Eigen("triangular solve failed".into()))?;

    let n_modes = massive.len();
    let mut shapes = DMatrix::zeros(n, n_modes);
    for (r, &i) in massive.iter().enumerate() {
        shapes.row_mut(i).copy_from(&phi_s.row(r));
    }
    if let Some(map) = z_map {
        let phi_z = map * &phi_s;
        for (r, &i) in massless.iter().enumerate() {
            shapes.row_mut(i).copy_from(&phi_z.row(r));
        }
    }

    // Rayleigh quotients are far more accurate than the raw eigenvalues for
    // the low end of a widely spread spectrum.
    let kphi = k * &shapes;
    let mut lambdas: Vec<(f64, usize)> = (0..n_modes)
        .map(|j| (shapes.column(j).dot(&kphi.column(j)), j))
        .collect();
    lambdas.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let order: Vec<usize> = lambdas.iter().map(|&(_, j)| j).collect();
    let mut shapes = shapes.select_columns(&order);
    let mut frequencies: Vec<f64> = lambdas.iter().map(|&(l, _)| l.max(0.0).sqrt()).collect();

    let reference = (k.diagonal().amax() / m.diagonal().amax()).sqrt();
    let rigid_count = count_rigid(&frequencies, reference);
    if rigid_count > 0 {
        let rigid = orthonormal_rigid_modes(model, &shapes.columns(0, rigid_count).into_owned());
        shapes.columns_mut(0, rigid_count).copy_from(&rigid);
        for f in frequencies.iter_mut().take(rigid_count) {
            *f = 0.0;
        }
    }
    for j in rigid_count..n_modes {
        let col = shapes.column(j);
        let amax = col.amax();
        if let Some(first) = col.iter().find(|v| v.abs() > 1e-6 * amax) {
            if *first < 0.0 {
                shapes.column_mut(j).neg_mut();
            }
        }
    }
    Ok(ModalBasis {
        frequencies,
        shapes,
        rigid_count,
    })
}

/// `reference` is a frequency scale of the model, guarding against a
/// spectrum that holds nothing but round-off.
fn count_rigid(frequencies: &[f64], reference: f64) -> usize {
    let top = frequencies.last().copied().unwrap_or(0.0).max(reference);
    let first_elastic = frequencies.iter().copied().find(|&w| w > NOISE_FLOOR * top);
    match first_elastic {
        Some(w1) => frequencies
            .iter()
            .take_while(|&&w| w < RIGID_RATIO * w1)
            .count(),
        _ => frequencies.len(),
    }
}

/// Gram–Schmidt in the M-metric over, in order: seeds that are exactly
/// stress-free, seeds projected onto the computed rigid span, and the span
/// itself.
fn orthonormal_rigid_modes(model: &AssembledModel, span: &DMatrix<f64>) -> DMatrix<f64> {
    let m = model.mass_matrix();
    let k = model.stiffness_matrix();
    let r = span.ncols();
    let mspan = m * span;
    let seeds = model.rigid_seeds();
    let kmax = k.amax();
    let exact = seeds
        .iter()
        .filter(|s| (k * *s).amax() <= 1e-10 * kmax * s.amax())
        .cloned();
    let projected = seeds.iter().map(|s| span * (mspan.transpose() * s));
    let mut accepted: Vec<DVector<f64>> = Vec::with_capacity(r);
    let candidates = exact
        .chain(projected)
        .chain(span.column_iter().map(|c| c.into_owned()));
    for mut v in candidates {
        if accepted.len() == r {
            break;
        }
        let start = m_norm(m, &v);
        if start == 0.0 {
            continue;
        }
        for q in &accepted {
            let c = q.dot(&(m * &v));
            v.axpy(-c, q, 1.0);
        }
        let norm = m_norm(m, &v);
        if norm > 1e-6 * start {
            accepted.push(v / norm);
        }
    }
    DMatrix::from_columns(&accepted)
}

fn m_norm(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(m * v)).max(0.0).sqrt()
}

fn first_non_pd_pivot(m: &DMatrix<f64>) -> usize {
    (1..=m.nrows())
        .find(|&k| Cholesky::new(m.view((0, 0), (k, k)).into_owned()).is_none())
        .map(|k| k - 1)
        .unwrap_or(0)
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}
