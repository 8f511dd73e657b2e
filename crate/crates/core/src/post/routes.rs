//! Three independent estimates of the post-impact modal state: projection
//! of the simulated field, a least-squares fit of a sensor's free decay, and
//! Duhamel's integral of the contact force.

use rustfft::num_complex::Complex64;

use super::energy::modal_energy;
use super::modal_fit::{duhamel_response, fit_modal_free};
use crate::contact::Trajectory;
use crate::error::{Error, Result};

/// `η̇ + i ω η` of one mode at t_E from each route.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeComparison {
    /// Index within the retained modes.
    pub mode: usize,
    pub label: String,
    /// Share of the total bending energy (projection route).
    pub energy_share: f64,
    pub projection: Complex64,
    pub fit: Complex64,
    pub duhamel: Complex64,
}

impl ModeComparison {
    /// Largest pairwise |a − b| / max(|a|, |b|).
    pub fn max_pairwise(&self) -> f64 {
        let pairs = [
            (self.projection, self.fit),
            (self.projection, self.duhamel),
            (self.fit, self.duhamel),
        ];
        pairs
            .iter()
            .map(|(a, b)| (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteComparison {
    pub modes: Vec<ModeComparison>,
    /// Constant velocity component at the sensor from the fit.
    pub rigid_velocity: f64,
    pub fit_residual: f64,
}

impl RouteComparison {
    /// Worst pairwise disagreement over modes holding at least `min_share`
    /// of the bending energy.
    pub fn worst(&self, min_share: f64) -> f64 {
        self.modes
            .iter()
            .filter(|m| m.energy_share >= min_share)
            .map(|m| m.max_pairwise())
            .fold(0.0, f64::max)
    }
}

/// Compare the routes for every elastic mode. `probe` selects the sensor
/// record; `probe_shape[k]` is φ_k at that sensor for each retained mode.
/// The fit uses samples from t_E up to `t_E + fit_window`.
pub fn compare_routes(
    traj: &Trajectory,
    probe: usize,
    probe_shape: &[f64],
    fit_window: f64,
) -> Result<RouteComparison> {
    let beam = &traj.beam;
    let nm = beam.frequencies.len();
    if probe >= traj.probe_velocity.len() || probe_shape.len() != nm {
        return Err(Error::Dimension("probe index or shape length".into()));
    }
    let w = traj.events.first_window().ok_or(Error::NoContact)?;
    if !w.released {
        return Err(Error::NoContact);
    }
    let (s, e) = (traj.index_at(w.start), traj.index_at(w.end));
    let last = traj.index_at(w.end + fit_window);
    let t_end = traj.time[e];
    let elastic: Vec<usize> = (beam.rigid_count..nm).collect();

    let omegas: Vec<f64> = elastic.iter().map(|&k| beam.frequencies[k]).collect();
    let shapes: Vec<f64> = elastic.iter().map(|&k| probe_shape[k]).collect();
    let fit = fit_modal_free(
        &traj.time[e..=last],
        &traj.probe_velocity[probe][e..=last],
        &omegas,
        &shapes,
    )?;

    let beam_force: Vec<f64> = traj.contact_force[s..=e].iter().map(|f| -f).collect();
    let dt = traj.sample_interval();
    let energies: Vec<f64> = elastic
        .iter()
        .map(|&k| modal_energy(beam.eta[e][k], beam.eta_dot[e][k], beam.frequencies[k]))
        .collect();
    let total: f64 = energies.iter().sum();
    let modes = elastic
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let om = beam.frequencies[k];
            let (d_eta, d_eta_dot) = duhamel_response(&beam_force, dt, om, beam.impact_shape[k])?;
            Ok(ModeComparison {
                mode: k,
                label: format!("{}F", j + 1),
                energy_share: energies[j] / total,
                projection: Complex64::new(beam.eta_dot[e][k], om * beam.eta[e][k]),
                fit: Complex64::new(fit.eta_dot(j, om, t_end), om * fit.eta(j, om, t_end)),
                duhamel: Complex64::new(d_eta_dot, om * d_eta),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RouteComparison {
        modes,
        rigid_velocity: fit.rigid_velocity,
        fit_residual: fit.residual_norm,
    })
}
