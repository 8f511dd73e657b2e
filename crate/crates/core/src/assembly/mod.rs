//! Desk-scale linear-elastic finite-element models.
//!
//! Three model families are assembled here: axial rods (one translation per
//! node), planar Euler–Bernoulli beams bending about the width axis
//! (transverse displacement and rotation per node) and the two-node sphere
//! model (a rigid mass tied to a massless contact node by the static
//! compliance of the contact region). Every model carries a boundary/inner
//! partition of its free dofs; boundary dofs are the ones that can enter
//! contact.

mod hertz;
pub(crate) mod matrix_io;

pub use hertz::{ComplianceRule, HertzLaw};
pub use matrix_io::{export_matrices, import_matrices};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Isotropic linear-elastic material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    /// Young's modulus in Pa.
    pub elastic_modulus: f64,
    pub poisson_ratio: f64,
    /// Mass density in kg/m³.
    pub density: f64,
}

impl Material {
    pub fn new(elastic_modulus: f64, poisson_ratio: f64, density: f64) -> Result<Self> {
        if !(elastic_modulus > 0.0) {
            return Err(Error::invalid(format!(
                "elastic modulus must be > 0, got {elastic_modulus}"
            )));
        }
        if !(0.0..0.5).contains(&poisson_ratio) {
            return Err(Error::invalid(format!(
                "poisson ratio must lie in [0, 0.5), got {poisson_ratio}"
            )));
        }
        if !(density > 0.0) {
            return Err(Error::invalid(format!("density must be > 0, got {density}")));
        }
        Ok(Material {
            elastic_modulus,
            poisson_ratio,
            density,
        })
    }

    /// Structural steel (E = 210 GPa, ν = 0.3, ρ = 7800 kg/m³).
    pub fn steel() -> Self {
        Material {
            elastic_modulus: 210.0e9,
            poisson_ratio: 0.3,
            density: 7800.0,
        }
    }

    pub fn shear_modulus(&self) -> f64 {
        self.elastic_modulus / (2.0 * (1.0 + self.poisson_ratio))
    }

    /// Speed of transversal (shear) waves, √(E / (2(1+ν)ρ)).
    pub fn shear_wave_speed(&self) -> f64 {
        (self.shear_modulus() / self.density).sqrt()
    }

    /// Plane-strain modulus E / (1 − ν²).
    pub fn plane_strain_modulus(&self) -> f64 {
        self.elastic_modulus / (1.0 - self.poisson_ratio * self.poisson_ratio)
    }
}

/// Rectangular beam; bending happens about the width axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamGeometry {
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

impl BeamGeometry {
    pub fn new(length: f64, width: f64, height: f64) -> Result<Self> {
        for (name, v) in [("length", length), ("width", width), ("height", height)] {
            if !(v > 0.0) {
                return Err(Error::invalid(format!("beam {name} must be > 0, got {v}")));
            }
        }
        if length / height < 5.0 {
            log::warn!(
                "beam slenderness {:.2} is below 5; Euler-Bernoulli theory is questionable",
                length / height
            );
        }
        Ok(BeamGeometry {
            length,
            width,
            height,
        })
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Second moment of area for bending about the width axis.
    pub fn second_moment(&self) -> f64 {
        self.width * self.height.powi(3) / 12.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereSpec {
    /// kg
    pub mass: f64,
    /// m
    pub radius: f64,
    /// Static compliance of the contact region in m/N.
    pub contact_compliance: f64,
}

impl SphereSpec {
    pub fn new(mass: f64, radius: f64, contact_compliance: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::invalid(format!("sphere mass must be > 0, got {mass}")));
        }
        if !(radius > 0.0) {
            return Err(Error::invalid(format!(
                "sphere radius must be > 0, got {radius}"
            )));
        }
        if !(contact_compliance > 0.0) {
            return Err(Error::invalid(format!(
                "contact compliance must be > 0, got {contact_compliance}"
            )));
        }
        Ok(SphereSpec {
            mass,
            radius,
            contact_compliance,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassStyle {
    Consistent,
    /// Row-sum lumping (diagonal mass).
    Lumped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    FreeFree,
    ClampedClamped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DofKind {
    Axial,
    Transverse,
    Rotation,
}

impl DofKind {
    pub fn tag(self) -> &'static str {
        match self {
            DofKind::Axial => "axial",
            DofKind::Transverse => "transverse",
            DofKind::Rotation => "rotation",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "axial" => Some(DofKind::Axial),
            "transverse" => Some(DofKind::Transverse),
            "rotation" => Some(DofKind::Rotation),
            _ => None,
        }
    }

    pub fn is_translation(self) -> bool {
        !matches!(self, DofKind::Rotation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofRole {
    Boundary,
    Inner,
    Constrained,
}

impl DofRole {
    pub fn tag(self) -> &'static str {
        match self {
            DofRole::Boundary => "boundary",
            DofRole::Inner => "inner",
            DofRole::Constrained => "constrained",
        }
    }
}

/// Node id, direction tag and axial position of a nodal dof.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DofLabel {
    pub node: usize,
    pub kind: DofKind,
    pub position: f64,
}

/// Point on the beam snapped to the nearest node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnappedPoint {
    /// Matrix index of the transverse dof.
    pub dof: usize,
    pub node: usize,
    pub requested: f64,
    pub position: f64,
}

/// Symmetric mass and stiffness matrices with a boundary/inner partition.
///
/// Matrices are indexed by free dofs only; supports eliminated by
/// clamping are listed separately in `constrained`. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledModel {
    mass: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    dofs: Vec<DofLabel>,
    constrained: Vec<DofLabel>,
    boundary: Vec<usize>,
}

impl AssembledModel {
    pub fn new(
        mass: DMatrix<f64>,
        stiffness: DMatrix<f64>,
        dofs: Vec<DofLabel>,
        constrained: Vec<DofLabel>,
        boundary: Vec<usize>,
    ) -> Result<Self> {
        let n = dofs.len();
        if mass.shape() != (n, n) || stiffness.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "{n} dof labels but mass {:?} and stiffness {:?}",
                mass.shape(),
                stiffness.shape()
            )));
        }
        for (name, m) in [("mass", &mass), ("stiffness", &stiffness)] {
            for i in 0..n {
                for j in 0..i {
                    if m[(i, j)] != m[(j, i)] {
                        return Err(Error::invalid(format!(
                            "{name} matrix is not symmetric at ({}, {})",
                            i + 1,
                            j + 1
                        )));
                    }
                }
            }
        }
        for i in 0..n {
            if mass[(i, i)] < 0.0 {
                return Err(Error::MassNotPositive {
                    dof: i,
                    label: describe(&dofs[i]),
                });
            }
        }
        let model = AssembledModel {
            mass,
            stiffness,
            dofs,
            constrained,
            boundary: Vec::new(),
        };
        model.with_boundary(boundary)
    }

    /// Copy of the model with a new boundary set (indices of free dofs).
    pub fn with_boundary(mut self, mut boundary: Vec<usize>) -> Result<Self> {
        boundary.sort_unstable();
        boundary.dedup();
        if let Some(&bad) = boundary.iter().find(|&&b| b >= self.n_dof()) {
            return Err(Error::invalid(format!(
                "boundary dof {bad} out of range for {} dofs",
                self.n_dof()
            )));
        }
        if let Some(&rot) = boundary
            .iter()
            .find(|&&b| self.dofs[b].kind == DofKind::Rotation)
        {
            return Err(Error::invalid(format!(
                "rotational dof {rot} cannot be a contact boundary dof"
            )));
        }
        self.boundary = boundary;
        Ok(self)
    }

    pub fn n_dof(&self) -> usize {
        self.dofs.len()
    }

    pub fn mass_matrix(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn stiffness_matrix(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn dofs(&self) -> &[DofLabel] {
        &self.dofs
    }

    pub fn constrained(&self) -> &[DofLabel] {
        &self.constrained
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn inner(&self) -> Vec<usize> {
        (0..self.n_dof())
            .filter(|i| self.boundary.binary_search(i).is_err())
            .collect()
    }

    pub fn role(&self, dof: usize) -> DofRole {
        if self.boundary.binary_search(&dof).is_ok() {
            DofRole::Boundary
        } else {
            DofRole::Inner
        }
    }

    /// Dofs whose mass row is identically zero.
    pub fn massless_dofs(&self) -> Vec<usize> {
        (0..self.n_dof())
            .filter(|&i| self.mass.row(i).iter().all(|&v| v == 0.0))
            .collect()
    }

    /// Total of `1ᵀM1` over the translational dofs of the given kind.
    pub fn translational_mass(&self, kind: DofKind) -> f64 {
        let t = self.translation_vector(kind);
        t.dot(&(&self.mass * &t))
    }

    /// Unit rigid translation in the direction `kind` (zero on other dofs).
    pub fn translation_vector(&self, kind: DofKind) -> DVector<f64> {
        DVector::from_iterator(
            self.n_dof(),
            self.dofs
                .iter()
                .map(|d| if d.kind == kind { 1.0 } else { 0.0 }),
        )
    }

    /// Candidate rigid-body fields in a fixed order: translations first,
    /// then the in-plane rotation when rotational dofs exist.
    pub fn rigid_seeds(&self) -> Vec<DVector<f64>> {
        let mut seeds = Vec::new();
        for kind in [DofKind::Transverse, DofKind::Axial] {
            if self.dofs.iter().any(|d| d.kind == kind) {
                seeds.push(self.translation_vector(kind));
            }
        }
        if self.dofs.iter().any(|d| d.kind == DofKind::Rotation) {
            let xs: Vec<f64> = self
                .dofs
                .iter()
                .filter(|d| d.kind == DofKind::Transverse)
                .map(|d| d.position)
                .collect();
            let centre = xs.iter().sum::<f64>() / xs.len().max(1) as f64;
            seeds.push(DVector::from_iterator(
                self.n_dof(),
                self.dofs.iter().map(|d| match d.kind {
                    DofKind::Transverse => d.position - centre,
                    DofKind::Rotation => 1.0,
                    DofKind::Axial => 0.0,
                }),
            ));
        }
        seeds
    }

    /// Snap an axial coordinate to the transverse dof of the nearest node.
    pub fn transverse_dof_near(&self, x: f64) -> Result<SnappedPoint> {
        let (lo, hi) = self.span();
        if !(x >= lo && x <= hi) {
            return Err(Error::invalid(format!(
                "point {x} m lies outside the beam span [{lo}, {hi}]"
            )));
        }
        let nearest = |labels: &[DofLabel]| {
            labels
                .iter()
                .enumerate()
                .filter(|(_, d)| d.kind == DofKind::Transverse)
                .map(|(i, d)| (i, *d, (d.position - x).abs()))
                .min_by(|a, b| a.2.total_cmp(&b.2))
        };
        let free = nearest(&self.dofs);
        if let Some((_, c, dist)) = nearest(&self.constrained) {
            if free.is_none_or(|f| dist < f.2) {
                return Err(Error::invalid(format!(
                    "point {x} m snaps to constrained node {} at {} m",
                    c.node, c.position
                )));
            }
        }
        let (dof, label, _) =
            free.ok_or_else(|| Error::invalid("model has no transverse dofs"))?;
        Ok(SnappedPoint {
            dof,
            node: label.node,
            requested: x,
            position: label.position,
        })
    }

    /// Copy of the model whose boundary is the transverse dof nearest to `x`.
    pub fn with_contact_at(&self, x: f64) -> Result<(AssembledModel, SnappedPoint)> {
        let snapped = self.transverse_dof_near(x)?;
        let model = self.clone().with_boundary(vec![snapped.dof])?;
        Ok((model, snapped))
    }

    fn span(&self) -> (f64, f64) {
        self.dofs
            .iter()
            .chain(self.constrained.iter())
            .map(|d| d.position)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p), hi.max(p))
            })
    }
}

pub(crate) fn describe(d: &DofLabel) -> String {
    format!("node {} {} at x={}", d.node, d.kind.tag(), d.position)
}

/// 2-node linear axial rod elements, free at both ends.
pub fn assemble_rod(
    n_elem: usize,
    material: &Material,
    area: f64,
    length: f64,
    mass_style: MassStyle,
) -> Result<AssembledModel> {
    if n_elem < 1 {
        return Err(Error::invalid("rod needs at least one element"));
    }
    if !(area > 0.0) || !(length > 0.0) {
        return Err(Error::invalid(format!(
            "rod area and length must be > 0, got {area} and {length}"
        )));
    }
    let le = length / n_elem as f64;
    let k = material.elastic_modulus * area / le;
    let m = material.density * area * le;
    let ke = [[k, -k], [-k, k]];
    let me = match mass_style {
        MassStyle::Consistent => [[m / 3.0, m / 6.0], [m / 6.0, m / 3.0]],
        MassStyle::Lumped => [[m / 2.0, 0.0], [0.0, m / 2.0]],
    };
    let n = n_elem + 1;
    let mut kg = DMatrix::zeros(n, n);
    let mut mg = DMatrix::zeros(n, n);
    for e in 0..n_elem {
        for a in 0..2 {
            for b in 0..2 {
                kg[(e + a, e + b)] += ke[a][b];
                mg[(e + a, e + b)] += me[a][b];
            }
        }
    }
    let dofs = (0..n)
        .map(|i| DofLabel {
            node: i,
            kind: DofKind::Axial,
            position: i as f64 * le,
        })
        .collect();
    AssembledModel::new(mg, kg, dofs, Vec::new(), Vec::new())
}

/// Planar Euler–Bernoulli beam with cubic Hermite elements.
///
/// Node `j` sits at `x = j L / n_elem` and owns a transverse displacement
/// and a rotation. Clamping removes both dofs of the two end nodes.
pub fn assemble_beam(
    n_elem: usize,
    material: &Material,
    geometry: &BeamGeometry,
    support: Support,
    mass_style: MassStyle,
) -> Result<AssembledModel> {
    if n_elem < 2 {
        return Err(Error::invalid(format!(
            "beam needs at least 2 elements, got {n_elem}"
        )));
    }
    let le = geometry.length / n_elem as f64;
    let ei = material.elastic_modulus * geometry.second_moment();
    let rho_a = material.density * geometry.area();
    let ke = beam_element_stiffness(ei, le);
    let me = match mass_style {
        MassStyle::Consistent => beam_element_mass(rho_a, le),
        MassStyle::Lumped => beam_element_lumped_mass(rho_a, le),
    };

    let n_full = 2 * (n_elem + 1);
    let mut kg = DMatrix::zeros(n_full, n_full);
    let mut mg = DMatrix::zeros(n_full, n_full);
    for e in 0..n_elem {
        let base = 2 * e;
        for a in 0..4 {
            for b in 0..4 {
                kg[(base + a, base + b)] += ke[a][b];
                mg[(base + a, base + b)] += me[a][b];
            }
        }
    }
    let labels: Vec<DofLabel> = (0..n_full)
        .map(|i| DofLabel {
            node: i / 2,
            kind: if i % 2 == 0 {
                DofKind::Transverse
            } else {
                DofKind::Rotation
            },
            position: (i / 2) as f64 * le,
        })
        .collect();

    let is_constrained = |i: usize| match support {
        Support::FreeFree => false,
        Support::ClampedClamped => i < 2 || i >= n_full - 2,
    };
    let free: Vec<usize> = (0..n_full).filter(|&i| !is_constrained(i)).collect();
    let constrained = (0..n_full)
        .filter(|&i| is_constrained(i))
        .map(|i| labels[i])
        .collect();
    let kf = kg.select_rows(&free).select_columns(&free);
    let mf = mg.select_rows(&free).select_columns(&free);
    let dofs = free.iter().map(|&i| labels[i]).collect();
    AssembledModel::new(mf, kf, dofs, constrained, Vec::new())
}

fn beam_element_stiffness(ei: f64, l: f64) -> [[f64; 4]; 4] {
    let c = ei / (l * l * l);
    let (l2, l6, l12) = (l * l, 6.0 * l, 12.0);
    [
        [c * l12, c * l6, -c * l12, c * l6],
        [c * l6, c * 4.0 * l2, -c * l6, c * 2.0 * l2],
        [-c * l12, -c * l6, c * l12, -c * l6],
        [c * l6, c * 2.0 * l2, -c * l6, c * 4.0 * l2],
    ]
}

fn beam_element_mass(rho_a: f64, l: f64) -> [[f64; 4]; 4] {
    let c = rho_a * l / 420.0;
    let l2 = l * l;
    [
        [c * 156.0, c * 22.0 * l, c * 54.0, -c * 13.0 * l],
        [c * 22.0 * l, c * 4.0 * l2, c * 13.0 * l, -c * 3.0 * l2],
        [c * 54.0, c * 13.0 * l, c * 156.0, -c * 22.0 * l],
        [-c * 13.0 * l, -c * 3.0 * l2, -c * 22.0 * l, c * 4.0 * l2],
    ]
}

// Translations: row sums over the translational columns (ρAl/2 per node).
// Rotations: the diagonal scaled by the same factor (ρAl³/78), since a
// plain row sum of a rotational row mixes units.
fn beam_element_lumped_mass(rho_a: f64, l: f64) -> [[f64; 4]; 4] {
    let m = rho_a * l;
    let r = m * l * l / 78.0;
    [
        [m / 2.0, 0.0, 0.0, 0.0],
        [0.0, r, 0.0, 0.0],
        [0.0, 0.0, m / 2.0, 0.0],
        [0.0, 0.0, 0.0, r],
    ]
}

/// Two-dof sphere: a rigid mass (inner dof 0) tied by a spring of stiffness
/// `1/contact_compliance` to a massless contact dof (boundary dof 1).
pub fn assemble_sphere(spec: &SphereSpec) -> Result<AssembledModel> {
    let spec = SphereSpec::new(spec.mass, spec.radius, spec.contact_compliance)?;
    let k = 1.0 / spec.contact_compliance;
    let stiffness = DMatrix::from_row_slice(2, 2, &[k, -k, -k, k]);
    let mass = DMatrix::from_row_slice(2, 2, &[spec.mass, 0.0, 0.0, 0.0]);
    let dofs = vec![
        DofLabel {
            node: 0,
            kind: DofKind::Transverse,
            position: 0.0,
        },
        DofLabel {
            node: 1,
            kind: DofKind::Transverse,
            position: 0.0,
        },
    ];
    AssembledModel::new(mass, stiffness, dofs, Vec::new(), vec![1])
}

/// Mesh sizing from the shortest transversal wavelength at `f_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshRecommendation {
    /// m/s
    pub wave_speed: f64,
    /// m
    pub wavelength: f64,
    /// Maximum element length (20 nodes per wavelength), m.
    pub element_length: f64,
}

pub fn recommend_element_length(material: &Material, f_max: f64) -> Result<MeshRecommendation> {
    if !(f_max > 0.0) {
        return Err(Error::invalid(format!("f_max must be > 0, got {f_max}")));
    }
    let wave_speed = material.shear_wave_speed();
    let wavelength = wave_speed / f_max;
    Ok(MeshRecommendation {
        wave_speed,
        wavelength,
        element_length: wavelength / 20.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_beam(n: usize, support: Support) -> AssembledModel {
        assemble_beam(
            n,
            &Material::steel(),
            &BeamGeometry::new(0.210, 0.015, 0.010).unwrap(),
            support,
            MassStyle::Consistent,
        )
        .unwrap()
    }

    #[test]
    fn single_rod_element_closed_form() {
        let mat = Material::new(1.0, 0.0, 6.0).unwrap();
        let m = assemble_rod(1, &mat, 1.0, 1.0, MassStyle::Consistent).unwrap();
        assert_eq!(
            m.stiffness_matrix(),
            &DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0])
        );
        assert_eq!(
            m.mass_matrix(),
            &DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])
        );
        let l = assemble_rod(1, &mat, 1.0, 1.0, MassStyle::Lumped).unwrap();
        assert_eq!(
            l.mass_matrix(),
            &DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 3.0])
        );
    }

    #[test]
    fn rod_rejects_bad_inputs() {
        let mat = Material::steel();
        assert!(assemble_rod(0, &mat, 1.0, 1.0, MassStyle::Consistent).is_err());
        assert!(assemble_rod(3, &mat, -1.0, 1.0, MassStyle::Consistent).is_err());
        assert!(assemble_rod(3, &mat, 1.0, 0.0, MassStyle::Consistent).is_err());
    }

    #[test]
    fn material_invariants() {
        assert!(Material::new(0.0, 0.3, 1.0).is_err());
        assert!(Material::new(1.0, 0.5, 1.0).is_err());
        assert!(Material::new(1.0, -0.1, 1.0).is_err());
        assert!(Material::new(1.0, 0.3, 0.0).is_err());
    }

    #[test]
    fn rod_total_mass() {
        let mat = Material::steel();
        for style in [MassStyle::Consistent, MassStyle::Lumped] {
            let m = assemble_rod(37, &mat, 2.0e-4, 0.7, style).unwrap();
            let expect = mat.density * 2.0e-4 * 0.7;
            let got = m.translational_mass(DofKind::Axial);
            assert!(((got - expect) / expect).abs() < 1e-12, "{style:?}: {got}");
        }
    }

    #[test]
    fn beam_matrices_exactly_symmetric() {
        for support in [Support::FreeFree, Support::ClampedClamped] {
            let m = table_beam(13, support);
            assert_eq!(m.stiffness_matrix(), &m.stiffness_matrix().transpose());
            assert_eq!(m.mass_matrix(), &m.mass_matrix().transpose());
        }
    }

    #[test]
    fn free_beam_rigid_fields_are_stress_free() {
        let m = table_beam(20, Support::FreeFree);
        let k = m.stiffness_matrix();
        let scale = k.amax();
        for seed in m.rigid_seeds() {
            let r = k * &seed;
            assert!(r.amax() / (scale * seed.amax()) < 1e-10, "{}", r.amax());
        }
        assert_eq!(m.rigid_seeds().len(), 2);
    }

    #[test]
    fn beam_total_mass_matches_table_weight() {
        let m = table_beam(10, Support::FreeFree);
        // 210 x 15 x 10 mm of steel is 245.7 g (247 g weighed).
        let total = m.translational_mass(DofKind::Transverse);
        assert!((total - 0.24570).abs() < 1e-5, "{total}");
    }

    #[test]
    fn clamped_beam_drops_end_dofs() {
        let m = table_beam(10, Support::ClampedClamped);
        assert_eq!(m.n_dof(), 2 * 11 - 4);
        assert_eq!(m.constrained().len(), 4);
        assert!(m.transverse_dof_near(0.0).is_err());
        assert!(m.transverse_dof_near(0.21).is_err());
        assert!(m.transverse_dof_near(0.105).is_ok());
    }

    #[test]
    fn beam_rejects_too_few_elements_and_outside_points() {
        let geo = BeamGeometry::new(0.21, 0.015, 0.01).unwrap();
        let e = assemble_beam(
            1,
            &Material::steel(),
            &geo,
            Support::FreeFree,
            MassStyle::Consistent,
        );
        assert!(e.is_err());
        let m = table_beam(10, Support::FreeFree);
        assert!(m.with_contact_at(-0.001).is_err());
        assert!(m.with_contact_at(0.2101).is_err());
    }

    #[test]
    fn contact_point_snaps_to_nearest_node() {
        let m = table_beam(10, Support::FreeFree);
        let (with, snap) = m.with_contact_at(0.05).unwrap();
        // nodes every 21 mm: 0.05 is closest to node 2 at 0.042
        assert_eq!(snap.node, 2);
        assert!((snap.position - 0.042).abs() < 1e-12);
        assert_eq!(with.boundary(), &[snap.dof]);
        assert_eq!(with.dofs()[snap.dof].kind, DofKind::Transverse);
        assert_eq!(with.inner().len(), with.n_dof() - 1);
    }

    #[test]
    fn rotations_never_enter_the_boundary() {
        let m = table_beam(4, Support::FreeFree);
        assert!(m.clone().with_boundary(vec![1]).is_err());
        assert!(m.with_boundary(vec![2]).is_ok());
    }

    #[test]
    fn sphere_chain() {
        let spec = SphereSpec::new(5.58e-3, 5.55e-3, 2.0e-8).unwrap();
        let s = assemble_sphere(&spec).unwrap();
        assert_eq!(s.boundary(), &[1]);
        assert_eq!(s.massless_dofs(), vec![1]);
        // Static force F on the contact dof, mass dof held: stretch = c F.
        let f = 250.0;
        let k = s.stiffness_matrix()[(1, 1)];
        assert!((f / k - spec.contact_compliance * f).abs() < 1e-20);
        assert!(SphereSpec::new(1.0, 1.0, 0.0).is_err());
        assert!(SphereSpec::new(1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn sphere_spec_mirrors_test_rig() {
        let spec = SphereSpec::new(5.58e-3, 11.1e-3 / 2.0, 1.0e-8).unwrap();
        assert_eq!(spec.mass, 5.58e-3);
        assert_eq!(spec.radius, 5.55e-3);
    }

    #[test]
    fn wave_speed_and_element_length() {
        let r = recommend_element_length(&Material::steel(), 35.0e3).unwrap();
        assert!((r.wave_speed - 3218.0).abs() < 1.0, "{}", r.wave_speed);
        assert!((r.wavelength - 0.092).abs() < 0.0005, "{}", r.wavelength);
        let unit = Material::new(2.0, 0.0, 1.0).unwrap();
        let r = recommend_element_length(&unit, 1.0).unwrap();
        assert_eq!(r.wave_speed, 1.0);
        assert_eq!(r.element_length, 1.0 / 20.0);
        assert!(recommend_element_length(&unit, 0.0).is_err());
    }
}
