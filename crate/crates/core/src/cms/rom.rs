use std::sync::Arc;

use log::warn;
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use super::modes::{symmetrize, ModalBasis};
use crate::assembly::AssembledModel;
use crate::error::{Error, Result};

/// Indices into a [`ModalBasis`] kept as modal coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetainedModes {
    indices: Vec<usize>,
}

impl RetainedModes {
    /// Explicit selection. Every rigid mode must be present, otherwise the
    /// residual flexibility of the free structure does not exist.
    pub fn new(basis: &ModalBasis, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&bad) = indices.iter().find(|&&k| k >= basis.n_modes()) {
            return Err(Error::invalid(format!(
                "mode {bad} out of range for {} modes",
                basis.n_modes()
            )));
        }
        if let Some(r) = (0..basis.rigid_count()).find(|r| indices.binary_search(r).is_err()) {
            return Err(Error::RigidModeOmitted(r));
        }
        if indices.last().is_some_and(|&l| l + 1 != indices.len()) {
            warn!("retained modes are not a contiguous lowest set: {indices:?}");
        }
        Ok(RetainedModes { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Rigid modes plus every mode with frequency ≤ `f_cut_hz`.
pub fn select_retained(basis: &ModalBasis, f_cut_hz: f64) -> Result<RetainedModes> {
    if !(f_cut_hz >= 0.0) {
        return Err(Error::invalid(format!("f_cut must be >= 0, got {f_cut_hz}")));
    }
    let w_cut = 2.0 * std::f64::consts::PI * f_cut_hz;
    let count = basis
        .frequencies()
        .iter()
        .enumerate()
        .take_while(|&(k, &w)| k < basis.rigid_count() || w <= w_cut)
        .count();
    RetainedModes::new(basis, (0..count).collect())
}

/// The lowest `count` modes (at least the rigid ones).
pub fn select_retained_count(basis: &ModalBasis, count: usize) -> Result<RetainedModes> {
    let count = count.max(basis.rigid_count()).min(basis.n_modes());
    RetainedModes::new(basis, (0..count).collect())
}

/// Static flexibility of the elastic modes that were not retained, evaluated
/// for unit loads on the boundary dofs (n_dof × n_boundary).
///
/// With a positive-definite mass matrix the complete spectrum is available
/// and this is the complementary modal sum. With massless boundary dofs the
/// basis lacks the infinitely stiff-inertia directions, so the shifted
/// inverse `(K + σ M Φ_r Φ_rᵀ M)⁻¹ − Φ_r Φ_rᵀ/σ`, minus the retained elastic
/// terms, is used instead.
pub fn residual_flexibility(
    model: &AssembledModel,
    basis: &ModalBasis,
    retained: &RetainedModes,
) -> Result<DMatrix<f64>> {
    let b = model.boundary();
    let phi = basis.shapes();
    if basis.n_modes() == model.n_dof() {
        let mut kept = vec![false; basis.n_modes()];
        for &k in retained.indices() {
            kept[k] = true;
        }
        let mut out = DMatrix::zeros(model.n_dof(), b.len());
        for k in basis.rigid_count()..basis.n_modes() {
            if !kept[k] {
                add_mode(&mut out, phi, k, b, basis.frequencies()[k].powi(-2));
            }
        }
        return Ok(out);
    }
    let mut flex = elastic_flexibility_columns(model, basis, b)?;
    for &k in retained.indices() {
        if !basis.is_rigid(k) {
            add_mode(&mut flex, phi, k, b, -basis.frequencies()[k].powi(-2));
        }
    }
    Ok(flex)
}

fn add_mode(out: &mut DMatrix<f64>, phi: &DMatrix<f64>, k: usize, b: &[usize], scale: f64) {
    let col = phi.column(k);
    for (j, &bj) in b.iter().enumerate() {
        out.column_mut(j).axpy(scale * col[bj], &col, 1.0);
    }
}

/// Elastic (rigid-free) flexibility columns `G[:, cols]` of the whole model,
/// `G = (K + σ M Φ_r Φ_rᵀ M)⁻¹ − Φ_r Φ_rᵀ / σ`.
pub fn elastic_flexibility_columns(
    model: &AssembledModel,
    basis: &ModalBasis,
    cols: &[usize],
) -> Result<DMatrix<f64>> {
    let k = model.stiffness_matrix();
    let m = model.mass_matrix();
    let n = model.n_dof();
    let r = basis.rigid_count();
    let phi_r = basis.shapes().columns(0, r).into_owned();
    let kmax = k.diagonal().amax();
    let mmax = m.diagonal().amax();
    let sigma = if mmax > 0.0 { kmax / mmax } else { 1.0 };
    let mphi = m * &phi_r;
    let shifted = symmetrize(k + &mphi * mphi.transpose() * sigma);
    let chol = Cholesky::new(shifted).ok_or_else(|| {
        Error::Eigen("shifted stiffness is singular; rigid modes incomplete".into())
    })?;
    let mut rhs = DMatrix::zeros(n, cols.len());
    for (j, &c) in cols.iter().enumerate() {
        rhs[(c, j)] = 1.0;
    }
    let mut g = chol.solve(&rhs);
    for (j, &c) in cols.iter().enumerate() {
        for q in 0..r {
            let s = phi_r[(c, q)] / sigma;
            g.column_mut(j).axpy(-s, &phi_r.column(q), 1.0);
        }
    }
    Ok(g)
}

/// Massless-boundary reduced model in coordinates `[q_b; η]`.
///
/// `K̃ = [[k_bb, k_bi], [k_biᵀ, k_ii]]`, `M̃ = [[0, 0], [0, I]]`, and
/// `q = R [q_b; η]` recovers the full field.
#[derive(Debug, Clone)]
pub struct ReducedModel {
    parent: Arc<AssembledModel>,
    boundary: Vec<usize>,
    retained: Vec<usize>,
    frequencies: Vec<f64>,
    rigid_count: usize,
    boundary_shapes: DMatrix<f64>,
    k_bb: DMatrix<f64>,
    k_bi: DMatrix<f64>,
    k_ii: DMatrix<f64>,
    component_modes: DMatrix<f64>,
}

impl PartialEq for ReducedModel {
    fn eq(&self, other: &Self) -> bool {
        *self.parent == *other.parent
            && self.boundary == other.boundary
            && self.retained == other.retained
            && self.frequencies == other.frequencies
            && self.rigid_count == other.rigid_count
            && self.boundary_shapes == other.boundary_shapes
            && self.k_bb == other.k_bb
            && self.k_bi == other.k_bi
            && self.k_ii == other.k_ii
            && self.component_modes == other.component_modes
    }
}

pub fn build_rom(
    model: Arc<AssembledModel>,
    basis: &ModalBasis,
    retained: &RetainedModes,
) -> Result<ReducedModel> {
    let b = model.boundary().to_vec();
    if b.is_empty() {
        return Err(Error::invalid("model has no boundary dofs"));
    }
    if basis.shapes().nrows() != model.n_dof() {
        return Err(Error::Dimension(format!(
            "basis has {} rows, model {} dofs",
            basis.shapes().nrows(),
            model.n_dof()
        )));
    }
    let flex = residual_flexibility(&model, basis, retained)?;
    let f_bb = symmetrize(flex.select_rows(&b));
    let spectrum = SymmetricEigen::new(f_bb.clone()).eigenvalues;
    let (lo, hi) = (spectrum.min(), spectrum.amax());
    if !(lo > 1e-12 * hi) {
        return Err(Error::SingularResidualFlexibility);
    }
    let k_bb = symmetrize(
        Cholesky::new(f_bb)
            .ok_or(Error::SingularResidualFlexibility)?
            .inverse(),
    );

    let idx = retained.indices();
    let phi = basis.shapes().select_columns(idx);
    let phi_b = phi.select_rows(&b);
    let frequencies: Vec<f64> = idx.iter().map(|&k| basis.frequencies()[k]).collect();
    let k_bi = -(&k_bb * &phi_b);
    let mut k_ii = phi_b.transpose() * &k_bb * &phi_b;
    for (j, w) in frequencies.iter().enumerate() {
        k_ii[(j, j)] += w * w;
    }
    let k_ii = symmetrize(k_ii);

    let attachment = &flex * &k_bb;
    let modal = &phi - &attachment * &phi_b;
    let (nb, nm) = (b.len(), idx.len());
    let mut r = DMatrix::zeros(model.n_dof(), nb + nm);
    r.columns_mut(0, nb).copy_from(&attachment);
    r.columns_mut(nb, nm).copy_from(&modal);
    for (j, &bj) in b.iter().enumerate() {
        r.row_mut(bj).fill(0.0);
        r[(bj, j)] = 1.0;
    }
    let rigid_count = idx.iter().filter(|&&k| basis.is_rigid(k)).count();
    Ok(ReducedModel {
        parent: model,
        boundary: b,
        retained: idx.to_vec(),
        frequencies,
        rigid_count,
        boundary_shapes: phi_b,
        k_bb,
        k_bi,
        k_ii,
        component_modes: r,
    })
}

impl ReducedModel {
    /// Assemble from stored blocks; used when reading an exported model.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        parent: Arc<AssembledModel>,
        retained: Vec<usize>,
        frequencies: Vec<f64>,
        rigid_count: usize,
        boundary_shapes: DMatrix<f64>,
        k_reduced: &DMatrix<f64>,
        component_modes: DMatrix<f64>,
    ) -> Result<Self> {
        let boundary = parent.boundary().to_vec();
        let (nb, nm) = (boundary.len(), retained.len());
        if k_reduced.shape() != (nb + nm, nb + nm)
            || component_modes.shape() != (parent.n_dof(), nb + nm)
            || frequencies.len() != nm
            || boundary_shapes.shape() != (nb, nm)
        {
            return Err(Error::Dimension(
                "reduced matrices do not match boundary and mode counts".into(),
            ));
        }
        let k_bb = k_reduced.view((0, 0), (nb, nb)).into_owned();
        let k_bi = k_reduced.view((0, nb), (nb, nm)).into_owned();
        let k_ii = k_reduced.view((nb, nb), (nm, nm)).into_owned();
        Ok(ReducedModel {
            parent,
            boundary,
            retained,
            frequencies,
            rigid_count,
            boundary_shapes,
            k_bb,
            k_bi,
            k_ii,
            component_modes,
        })
    }

    pub fn parent(&self) -> &Arc<AssembledModel> {
        &self.parent
    }

    /// Parent dof indices of the boundary coordinates.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// Parent mode indices of the modal coordinates.
    pub fn retained(&self) -> &[usize] {
        &self.retained
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn rigid_count(&self) -> usize {
        self.rigid_count
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary.len()
    }

    pub fn n_modal(&self) -> usize {
        self.retained.len()
    }

    pub fn dof_count(&self) -> usize {
        self.n_boundary() + self.n_modal()
    }

    /// Φ_b: retained shapes at the boundary dofs.
    pub fn boundary_shapes(&self) -> &DMatrix<f64> {
        &self.boundary_shapes
    }

    pub fn k_bb(&self) -> &DMatrix<f64> {
        &self.k_bb
    }

    pub fn k_bi(&self) -> &DMatrix<f64> {
        &self.k_bi
    }

    pub fn k_ii(&self) -> &DMatrix<f64> {
        &self.k_ii
    }

    /// R, n_dof × (n_b + n_m).
    pub fn component_modes(&self) -> &DMatrix<f64> {
        &self.component_modes
    }

    pub fn reduced_stiffness(&self) -> DMatrix<f64> {
        let (nb, nm) = (self.n_boundary(), self.n_modal());
        let mut k = DMatrix::zeros(nb + nm, nb + nm);
        k.view_mut((0, 0), (nb, nb)).copy_from(&self.k_bb);
        k.view_mut((0, nb), (nb, nm)).copy_from(&self.k_bi);
        k.view_mut((nb, 0), (nm, nb)).copy_from(&self.k_bi.transpose());
        k.view_mut((nb, nb), (nm, nm)).copy_from(&self.k_ii);
        k
    }

    pub fn reduced_mass(&self) -> DMatrix<f64> {
        let (nb, nm) = (self.n_boundary(), self.n_modal());
        let mut m = DMatrix::zeros(nb + nm, nb + nm);
        m.view_mut((nb, nb), (nm, nm)).fill_with_identity();
        m
    }

    /// Full-field displacement from reduced coordinates.
    pub fn expand(&self, q_b: &DVector<f64>, eta: &DVector<f64>) -> Result<DVector<f64>> {
        if q_b.len() != self.n_boundary() || eta.len() != self.n_modal() {
            return Err(Error::Dimension(format!(
                "expected {} boundary and {} modal values, got {} and {}",
                self.n_boundary(),
                self.n_modal(),
                q_b.len(),
                eta.len()
            )));
        }
        let nb = self.n_boundary();
        Ok(self.component_modes.columns(0, nb) * q_b
            + self.component_modes.columns(nb, self.n_modal()) * eta)
    }

    /// Static boundary flexibility of the reduced model,
    /// `F'_bb + Σ_elastic φ_b φ_bᵀ / ω²`.
    pub fn boundary_flexibility(&self) -> DMatrix<f64> {
        let mut f = Cholesky::new(self.k_bb.clone())
            .map(|c| c.inverse())
            .unwrap_or_else(|| DMatrix::zeros(self.n_boundary(), self.n_boundary()));
        for k in self.rigid_count..self.n_modal() {
            let col = self.boundary_shapes.column(k);
            f += col * col.transpose() / self.frequencies[k].powi(2);
        }
        f
    }

    /// `k_ii − k_biᵀ k_bb⁻¹ k_bi`: modal stiffness with the boundary
    /// condensed out (diag(ω²) by construction).
    pub fn condensed_modal_stiffness(&self) -> DMatrix<f64> {
        let chol = Cholesky::new(self.k_bb.clone()).expect("k_bb is positive definite");
        symmetrize(&self.k_ii - self.k_bi.transpose() * chol.solve(&self.k_bi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{
        assemble_beam, assemble_rod, assemble_sphere, BeamGeometry, DofKind, DofLabel,
        MassStyle, Material, SphereSpec, Support,
    };
    use crate::cms::solve_modes;

    fn chain(k: &[f64], m: &[f64], boundary: Vec<usize>) -> AssembledModel {
        let n = m.len();
        let dofs = (0..n)
            .map(|i| DofLabel {
                node: i,
                kind: DofKind::Axial,
                position: i as f64,
            })
            .collect();
        AssembledModel::new(
            DMatrix::from_diagonal(&DVector::from_column_slice(m)),
            DMatrix::from_row_slice(n, n, k),
            dofs,
            vec![],
            boundary,
        )
        .unwrap()
    }

    fn beam(support: Support, x: f64) -> Arc<AssembledModel> {
        let geo = BeamGeometry::new(0.21, 0.015, 0.01).unwrap();
        let m = assemble_beam(24, &Material::steel(), &geo, support, MassStyle::Consistent)
            .unwrap();
        Arc::new(m.with_contact_at(x).unwrap().0)
    }

    #[test]
    fn fixed_free_chain_against_direct_inverse() {
        // Grounded spring chain, boundary at the free end.
        let k = [2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0];
        let model = chain(&k, &[1.0, 1.0, 1.0], vec![2]);
        let basis = solve_modes(&model).unwrap();
        let kept = select_retained_count(&basis, 1).unwrap();
        let flex = residual_flexibility(&model, &basis, &kept).unwrap();
        let kinv = model.stiffness_matrix().clone().try_inverse().unwrap();
        let p = basis.shapes().column(0);
        let w2 = basis.frequencies()[0].powi(2);
        for i in 0..3 {
            let expect = kinv[(i, 2)] - p[i] * p[2] / w2;
            assert!((flex[(i, 0)] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn free_rod_residual_is_positive() {
        let rod = assemble_rod(20, &Material::steel(), 1e-4, 1.0, MassStyle::Consistent).unwrap();
        let rod = Arc::new(rod.with_boundary(vec![0]).unwrap());
        let basis = solve_modes(&rod).unwrap();
        let kept = select_retained_count(&basis, 3).unwrap();
        let rom = build_rom(rod, &basis, &kept).unwrap();
        assert!(rom.k_bb()[(0, 0)] > 0.0);
    }

    #[test]
    fn both_routes_agree_on_positive_definite_mass() {
        let model = beam(Support::FreeFree, 0.0525);
        let basis = solve_modes(&model).unwrap();
        let kept = select_retained_count(&basis, 6).unwrap();
        let sum = residual_flexibility(&model, &basis, &kept).unwrap();
        let mut shifted = elastic_flexibility_columns(&model, &basis, model.boundary()).unwrap();
        for &k in &kept.indices()[basis.rigid_count()..] {
            add_mode(&mut shifted, basis.shapes(), k, model.boundary(), -basis.frequencies()[k].powi(-2));
        }
        let scale = sum.amax();
        assert!((sum - shifted).amax() < 1e-8 * scale);
    }

    #[test]
    fn sphere_boundary_stiffness_is_contact_stiffness() {
        let c = 1.3e-8;
        let spec = SphereSpec::new(5.58e-3, 5.55e-3, c).unwrap();
        let model = Arc::new(assemble_sphere(&spec).unwrap());
        let basis = solve_modes(&model).unwrap();
        let kept = select_retained_count(&basis, 1).unwrap();
        let rom = build_rom(model, &basis, &kept).unwrap();
        assert!((rom.k_bb()[(0, 0)] * c - 1.0).abs() < 1e-10);
        let phi = 1.0 / 5.58e-3f64.sqrt();
        assert!((rom.k_bi()[(0, 0)] + phi / c).abs() < 1e-9 * phi / c);
        assert!(rom.frequencies()[0] == 0.0);
    }

    #[test]
    fn reduced_stiffness_is_projection() {
        for support in [Support::FreeFree, Support::ClampedClamped] {
            let model = beam(support, 0.06);
            let basis = solve_modes(&model).unwrap();
            let kept = select_retained(&basis, 20e3).unwrap();
            let rom = build_rom(model.clone(), &basis, &kept).unwrap();
            let r = rom.component_modes();
            let projected = r.transpose() * model.stiffness_matrix() * r;
            let k = rom.reduced_stiffness();
            assert!((&projected - &k).amax() < 1e-8 * k.amax(), "{support:?}");
            let condensed = rom.condensed_modal_stiffness();
            for (j, w) in rom.frequencies().iter().enumerate() {
                let w2max = rom.frequencies().last().unwrap().powi(2);
                assert!((condensed[(j, j)] - w * w).abs() < 1e-8 * w2max);
            }
        }
    }

    #[test]
    fn static_response_is_exact() {
        for support in [Support::FreeFree, Support::ClampedClamped] {
            let model = beam(support, 0.1);
            let basis = solve_modes(&model).unwrap();
            let kept = select_retained_count(&basis, 5).unwrap();
            let rom = build_rom(model.clone(), &basis, &kept).unwrap();
            let full = elastic_flexibility_columns(&model, &basis, model.boundary()).unwrap();
            let reduced = rom.boundary_flexibility();
            let b = model.boundary()[0];
            assert!((reduced[(0, 0)] - full[(b, 0)]).abs() < 1e-9 * full[(b, 0)].abs());
        }
    }

    #[test]
    fn enrichment_lowers_residual() {
        let model = beam(Support::ClampedClamped, 0.05);
        let basis = solve_modes(&model).unwrap();
        let mut last = f64::INFINITY;
        for count in 1..8 {
            let kept = select_retained_count(&basis, count).unwrap();
            let f = residual_flexibility(&model, &basis, &kept).unwrap();
            let v = f[(model.boundary()[0], 0)];
            assert!(v <= last * (1.0 + 1e-12));
            last = v;
        }
    }

    #[test]
    fn omitting_rigid_mode_is_rejected() {
        let model = beam(Support::FreeFree, 0.05);
        let basis = solve_modes(&model).unwrap();
        assert!(matches!(
            RetainedModes::new(&basis, vec![1, 2, 3]),
            Err(Error::RigidModeOmitted(0))
        ));
    }

    #[test]
    fn everything_retained_is_singular() {
        let model = beam(Support::ClampedClamped, 0.05);
        let basis = solve_modes(&model).unwrap();
        let all = select_retained_count(&basis, basis.n_modes()).unwrap();
        assert!(matches!(
            build_rom(model, &basis, &all),
            Err(Error::SingularResidualFlexibility)
        ));
    }

    #[test]
    fn expansion_recovers_boundary_and_modal_coordinates() {
        let model = beam(Support::FreeFree, 0.0525);
        let basis = solve_modes(&model).unwrap();
        let kept = select_retained(&basis, 30e3).unwrap();
        let rom = build_rom(model.clone(), &basis, &kept).unwrap();
        let qb = DVector::from_element(1, 3e-6);
        let eta = DVector::from_fn(rom.n_modal(), |i, _| 1e-6 * (i as f64 + 1.0).sin());
        let q = rom.expand(&qb, &eta).unwrap();
        assert_eq!(q[model.boundary()[0]], 3e-6);
        let phi = basis.shapes().select_columns(kept.indices());
        let back = phi.transpose() * model.mass_matrix() * &q;
        assert!((back - &eta).amax() < 1e-10 * eta.amax());
        assert!(rom.expand(&DVector::zeros(2), &eta).is_err());
    }
}
