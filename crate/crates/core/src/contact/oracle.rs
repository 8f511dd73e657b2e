//! Reference solution with the nonlinear Hertz law acting directly between
//! the sphere mass and the modally truncated beam.

use log::warn;
use nalgebra::DVector;

use super::events::detect_events;
use super::simulate::{ModalHistory, Probe, Trajectory};
use crate::assembly::{AssembledModel, DofKind, HertzLaw};
use crate::cms::{ModalBasis, RetainedModes};
use crate::error::{Error, Result};

/// Step control for [`dopri5`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Dopri5Options {
            rtol: 1e-8,
            atol: 1e-14,
            h_max: f64::INFINITY,
            max_steps: 10_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// 5th-order weights minus the embedded 4th-order ones.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Dormand–Prince 5(4) with error-per-step control. Steps are shortened to
/// land exactly on every requested output time; the state at each time in
/// `samples` (ascending, ≥ `t0`) is returned.
pub fn dopri5<F>(
    mut f: F,
    t0: f64,
    y0: DVector<f64>,
    samples: &[f64],
    options: &Dopri5Options,
) -> Result<Vec<DVector<f64>>>
where
    F: FnMut(f64, &DVector<f64>) -> DVector<f64>,
{
    if samples.windows(2).any(|w| w[1] < w[0]) || samples.first().is_some_and(|&s| s < t0) {
        return Err(Error::invalid("output times must be ascending and >= t0"));
    }
    let mut out = Vec::with_capacity(samples.len());
    let mut t = t0;
    let mut y = y0;
    let mut k0 = f(t, &y);
    let span = samples.last().map_or(0.0, |&s| s - t0);
    let mut h = (1e-3 * span).min(options.h_max).max(f64::MIN_POSITIVE);
    let mut steps = 0;
    for &target in samples {
        while t < target {
            steps += 1;
            if steps > options.max_steps {
                return Err(Error::invalid("dopri5: step limit exceeded"));
            }
            let last = t + h >= target;
            let hs = if last { target - t } else { h };
            let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
            k.push(k0.clone());
            for s in 1..7 {
                let mut ys = y.clone();
                for (j, kj) in k.iter().enumerate() {
                    if A[s][j] != 0.0 {
                        ys.axpy(hs * A[s][j], kj, 1.0);
                    }
                }
                k.push(f(t + C[s] * hs, &ys));
            }
            // Row 6 of A holds the 5th-order weights (FSAL).
            let mut y_new = y.clone();
            for (j, kj) in k.iter().take(6).enumerate() {
                if A[6][j] != 0.0 {
                    y_new.axpy(hs * A[6][j], kj, 1.0);
                }
            }
            let mut err = 0.0f64;
            for i in 0..y.len() {
                let e: f64 = (0..7).map(|j| E[j] * k[j][i]).sum::<f64>() * hs;
                let sc = options.atol + options.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((e / sc).abs());
            }
            if err <= 1.0 {
                t = if last { target } else { t + hs };
                y = y_new;
                k0 = k.swap_remove(6);
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 && last {
                // Keep the unclipped step size for the next interval.
                h = h.max(hs).min(options.h_max);
            } else {
                h = (hs * factor).min(options.h_max);
            }
            if h < 1e-15 * t.abs().max(1e-300) {
                return Err(Error::invalid("dopri5: step size underflow"));
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// Beam modes seen by the oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleBeam {
    pub frequencies: Vec<f64>,
    pub rigid_count: usize,
    pub impact_shape: Vec<f64>,
    /// `probe_shapes[p][k]` = φ_k at probe p.
    pub probe_shapes: Vec<Vec<f64>>,
    /// `tᵀ M φ_k` for the transverse translation field t.
    pub momentum_weights: Vec<f64>,
}

impl OracleBeam {
    pub fn from_basis(
        model: &AssembledModel,
        basis: &ModalBasis,
        retained: &RetainedModes,
        impact_dof: usize,
        probes: &[Probe],
    ) -> Self {
        let idx = retained.indices();
        let phi = |dof: usize| idx.iter().map(|&k| basis.value(k, dof)).collect::<Vec<_>>();
        let mt = model.mass_matrix() * model.translation_vector(DofKind::Transverse);
        OracleBeam {
            frequencies: idx.iter().map(|&k| basis.frequencies()[k]).collect(),
            rigid_count: idx.iter().filter(|&&k| basis.is_rigid(k)).count(),
            impact_shape: phi(impact_dof),
            probe_shapes: probes.iter().map(|p| phi(p.dof)).collect(),
            momentum_weights: idx.iter().map(|&k| basis.shapes().column(k).dot(&mt)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSetup {
    pub sphere_mass: f64,
    pub law: HertzLaw,
    pub impact_speed: f64,
    /// `None` for a rigid, immovable target.
    pub beam: Option<OracleBeam>,
    pub probes: Vec<Probe>,
    pub sample_interval: f64,
    pub t_end: f64,
    pub coalescence: f64,
    pub rtol: f64,
}

/// Sphere mass plus beam modal equations with `F = k_H δ^{3/2}`,
/// `δ = Σ φ_k(P) η_k − u`.
pub fn hertz_oracle(setup: &OracleSetup) -> Result<Trajectory> {
    if !(setup.sample_interval > 0.0 && setup.t_end >= setup.sample_interval) {
        return Err(Error::invalid("oracle sampling interval and end time must be positive"));
    }
    if !(setup.rtol > 0.0 && setup.rtol <= 1e-8) {
        return Err(Error::invalid("oracle relative tolerance must be in (0, 1e-8]"));
    }
    let empty = OracleBeam {
        frequencies: vec![],
        rigid_count: 0,
        impact_shape: vec![],
        probe_shapes: vec![vec![]; setup.probes.len()],
        momentum_weights: vec![],
    };
    let beam = setup.beam.as_ref().unwrap_or(&empty);
    let nm = beam.frequencies.len();
    let m = setup.sphere_mass;
    let w2: Vec<f64> = beam.frequencies.iter().map(|w| w * w).collect();
    let phi = &beam.impact_shape;
    let law = setup.law;
    let indentation = |y: &DVector<f64>| -> f64 {
        (0..nm).map(|k| phi[k] * y[2 + k]).sum::<f64>() - y[0]
    };
    let rhs = |_t: f64, y: &DVector<f64>| -> DVector<f64> {
        let force = law.force(indentation(y));
        let mut dy = DVector::zeros(y.len());
        dy[0] = y[1];
        dy[1] = force / m;
        for k in 0..nm {
            dy[2 + k] = y[2 + nm + k];
            dy[2 + nm + k] = -w2[k] * y[2 + k] - phi[k] * force;
        }
        dy
    };
    let mut y0 = DVector::zeros(2 + 2 * nm);
    y0[1] = -setup.impact_speed;
    let n = (setup.t_end / setup.sample_interval).round() as usize;
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * setup.sample_interval).collect();
    let options = Dopri5Options {
        rtol: setup.rtol,
        // Shorter steps than any contact time scale resolve the onset kink.
        h_max: setup.sample_interval,
        ..Dopri5Options::default()
    };
    let states = dopri5(rhs, 0.0, y0, &times, &options)?;

    let mut traj = Trajectory {
        sphere_mass: m,
        probes: setup.probes.clone(),
        probe_velocity: vec![Vec::with_capacity(times.len()); setup.probes.len()],
        beam: ModalHistory {
            frequencies: beam.frequencies.clone(),
            rigid_count: beam.rigid_count,
            impact_shape: beam.impact_shape.clone(),
            ..ModalHistory::default()
        },
        steps: n,
        dt: setup.sample_interval,
        min_gap: f64::INFINITY,
        ..Trajectory::default()
    };
    let mut max_delta = 0.0f64;
    for (t, y) in times.iter().zip(&states) {
        let delta = indentation(y);
        max_delta = max_delta.max(delta);
        let force = law.force(delta);
        let eta = y.rows(2, nm).into_owned();
        let eta_dot = y.rows(2 + nm, nm).into_owned();
        let modal: f64 = (0..nm)
            .map(|k| 0.5 * (eta_dot[k].powi(2) + w2[k] * eta[k].powi(2)))
            .sum();
        let contact = if delta > 0.0 {
            0.4 * law.stiffness * delta.powf(2.5)
        } else {
            0.0
        };
        traj.time.push(*t);
        traj.contact_force.push(force);
        traj.lambda.push(DVector::from_element(1, force));
        traj.sphere_velocity.push(y[1]);
        for (p, shape) in beam.probe_shapes.iter().enumerate() {
            traj.probe_velocity[p].push(shape.iter().zip(eta_dot.iter()).map(|(a, b)| a * b).sum());
        }
        traj.energy.push(0.5 * m * y[1] * y[1] + modal + contact);
        traj.momentum.push(
            m * y[1]
                + beam
                    .momentum_weights
                    .iter()
                    .zip(eta_dot.iter())
                    .map(|(a, b)| a * b)
                    .sum::<f64>(),
        );
        traj.min_gap = traj.min_gap.min(-delta);
        traj.beam.eta.push(eta);
        traj.beam.eta_dot.push(eta_dot);
    }
    if max_delta > 0.01 * law.radius {
        warn!(
            "peak indentation {max_delta:.3e} m exceeds 1% of the sphere radius; Hertz theory is strained"
        );
    }
    traj.events = detect_events(&traj.time, &traj.contact_force, setup.coalescence);
    Ok(traj)
}
