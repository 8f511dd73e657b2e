use nalgebra::{DMatrix, DVector};

use crate::contact::Trajectory;
use crate::error::{Error, Result};

/// E = ½(η̇² + ω²η²) for a mass-normalized mode.
pub fn modal_energy(eta: f64, eta_dot: f64, omega: f64) -> f64 {
    0.5 * (eta_dot * eta_dot + omega * omega * eta * eta)
}

/// η = ΦᵀMq and η̇ = ΦᵀMq̇.
pub fn project_to_modal(
    q: &DVector<f64>,
    q_dot: &DVector<f64>,
    shapes: &DMatrix<f64>,
    mass: &DMatrix<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = mass.nrows();
    if q.len() != n || q_dot.len() != n || shapes.nrows() != n || mass.ncols() != n {
        return Err(Error::Dimension(format!(
            "state lengths {} / {}, shapes {} rows, mass {:?}",
            q.len(),
            q_dot.len(),
            shapes.nrows(),
            mass.shape()
        )));
    }
    let pm = shapes.transpose() * mass;
    Ok((&pm * q, &pm * q_dot))
}

/// r_k = −(v_sph(t_E) − φ_k(P) η̇_k(t_E)) / v_sph(t_S), one entry per
/// mode in `impact_shape`.
pub fn restitution_coefficients(
    v_start: f64,
    v_end: f64,
    impact_shape: &[f64],
    eta_dot_end: &[f64],
) -> Result<Vec<f64>> {
    if impact_shape.len() != eta_dot_end.len() {
        return Err(Error::Dimension("mode shape and velocity counts differ".into()));
    }
    if v_start == 0.0 {
        return Err(Error::invalid("sphere velocity at contact start is zero"));
    }
    Ok(impact_shape
        .iter()
        .zip(eta_dot_end)
        .map(|(phi, ed)| -(v_end - phi * ed) / v_start)
        .collect())
}

/// Per-mode restitution over the first contact window of a trajectory.
pub fn modal_restitution(traj: &Trajectory) -> Result<Vec<f64>> {
    let w = traj.events.first_window().ok_or(Error::NoContact)?;
    if !w.released {
        return Err(Error::NoContact);
    }
    let (s, e) = (traj.index_at(w.start), traj.index_at(w.end));
    restitution_coefficients(
        traj.sphere_velocity[s],
        traj.sphere_velocity[e],
        &traj.beam.impact_shape,
        traj.beam.eta_dot[e].as_slice(),
    )
}

/// Energy bookkeeping across the first contact window.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyAudit {
    /// Sphere kinetic energy at t_S.
    pub sphere_before: f64,
    pub sphere_after: f64,
    /// ½ Σ η̇² over the beam's rigid modes at t_E.
    pub beam_rigid: f64,
    /// Σ E_mod over the beam's elastic modes at t_E.
    pub beam_modal: f64,
}

impl EnergyAudit {
    /// |E_before − E_after − E_rigid − ΣE_mod| / E_before.
    pub fn closure_error(&self) -> f64 {
        (self.sphere_before - self.sphere_after - self.beam_rigid - self.beam_modal).abs()
            / self.sphere_before
    }
}

pub fn energy_audit(traj: &Trajectory) -> Result<EnergyAudit> {
    let w = traj.events.first_window().ok_or(Error::NoContact)?;
    let (s, e) = (traj.index_at(w.start), traj.index_at(w.end));
    let m = traj.sphere_mass;
    let beam = &traj.beam;
    let mut rigid = 0.0;
    let mut modal = 0.0;
    for k in 0..beam.frequencies.len() {
        let en = modal_energy(beam.eta[e][k], beam.eta_dot[e][k], beam.frequencies[k]);
        if k < beam.rigid_count {
            rigid += en;
        } else {
            modal += en;
        }
    }
    Ok(EnergyAudit {
        sphere_before: 0.5 * m * traj.sphere_velocity[s].powi(2),
        sphere_after: 0.5 * m * traj.sphere_velocity[e].powi(2),
        beam_rigid: rigid,
        beam_modal: modal,
    })
}

/// One elastic mode of the post-impact summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalSummaryRow {
    /// Index within the retained modes.
    pub mode: usize,
    /// 1F, 2F, … in ascending frequency.
    pub label: String,
    pub freq_hz: f64,
    pub energy: f64,
    /// Energy over the sphere's pre-impact kinetic energy.
    pub energy_fraction: f64,
    pub restitution: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModalSummary {
    pub rows: Vec<ModalSummaryRow>,
    pub sphere_kinetic_before: f64,
}

impl ModalSummary {
    /// Elastic modes at the end of the first contact window.
    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        let audit = energy_audit(traj)?;
        let r = modal_restitution(traj)?;
        let w = traj.events.first_window().ok_or(Error::NoContact)?;
        let e = traj.index_at(w.end);
        let beam = &traj.beam;
        let rows = (beam.rigid_count..beam.frequencies.len())
            .enumerate()
            .map(|(n, k)| {
                let energy = modal_energy(beam.eta[e][k], beam.eta_dot[e][k], beam.frequencies[k]);
                ModalSummaryRow {
                    mode: k,
                    label: format!("{}F", n + 1),
                    freq_hz: beam.frequencies[k] / (2.0 * std::f64::consts::PI),
                    energy,
                    energy_fraction: energy / audit.sphere_before,
                    restitution: r[k],
                }
            })
            .collect();
        Ok(ModalSummary {
            rows,
            sphere_kinetic_before: audit.sphere_before,
        })
    }

    pub fn total_energy(&self) -> f64 {
        self.rows.iter().map(|r| r.energy).sum()
    }

    /// Rows whose share of the total bending energy exceeds `threshold`.
    pub fn significant(&self, threshold: f64) -> Vec<&ModalSummaryRow> {
        let total = self.total_energy();
        self.rows
            .iter()
            .filter(|r| r.energy > threshold * total)
            .collect()
    }

    /// Energy of even-ordered bending modes (2F, 4F, …) over the total.
    pub fn even_fraction(&self) -> f64 {
        let even: f64 = self
            .rows
            .iter()
            .enumerate()
            .filter(|(n, _)| n % 2 == 1)
            .map(|(_, r)| r.energy)
            .sum();
        even / self.total_energy()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::assembly::{assemble_beam, BeamGeometry, MassStyle, Material, Support};
    use crate::cms::solve_modes;

    #[test]
    fn energy_examples() {
        assert_eq!(modal_energy(0.0, 1.0, 7.0), 0.5);
        assert!((modal_energy(1.0 / 7.0, 0.0, 7.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn projection_identities() {
        let geo = BeamGeometry::new(0.21, 0.015, 0.01).unwrap();
        let beam = Arc::new(
            assemble_beam(10, &Material::steel(), &geo, Support::FreeFree, MassStyle::Consistent)
                .unwrap(),
        );
        let basis = solve_modes(&beam).unwrap();
        let phi = basis.shapes();
        let m = beam.mass_matrix();
        let q3 = phi.column(3).into_owned();
        let (eta, _) = project_to_modal(&q3, &q3, phi, m).unwrap();
        for (k, v) in eta.iter().enumerate() {
            let expect = if k == 3 { 1.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-10);
        }
        let t = beam.translation_vector(crate::assembly::DofKind::Transverse);
        let (eta, _) = project_to_modal(&t, &t, phi, m).unwrap();
        assert!(eta.rows(basis.rigid_count(), eta.len() - basis.rigid_count()).amax() < 1e-9 * eta.amax());
        let q = DVector::from_fn(beam.n_dof(), |i, _| ((i * 7 + 3) as f64).sin());
        let (eta, _) = project_to_modal(&q, &q, phi, m).unwrap();
        assert!((phi * eta - &q).amax() < 1e-10);
        assert!(project_to_modal(&DVector::zeros(3), &q, phi, m).is_err());
    }

    #[test]
    fn rigid_target_restitution_is_newtonian() {
        let r = restitution_coefficients(-1.2, 1.2, &[0.0, 0.0], &[3.0, -1.0]).unwrap();
        assert_eq!(r, vec![1.0, 1.0]);
    }

    #[test]
    fn two_body_collision_gives_unity() {
        let (m1, m2, v1): (f64, f64, f64) = (0.3, 0.7, -1.0);
        let v1p = v1 * (m1 - m2) / (m1 + m2);
        let v2p = 2.0 * m1 * v1 / (m1 + m2);
        let phi = 1.0 / m2.sqrt();
        let r = restitution_coefficients(v1, v1p, &[phi], &[v2p / phi]).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-12);
    }
}
