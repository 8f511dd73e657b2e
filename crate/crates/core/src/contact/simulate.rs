use log::{info, warn};
use nalgebra::{DVector, RowDVector};

use super::events::{detect_events, EventLog};
use super::solver::ContactOptions;
use super::system::{ContactProblem, CoupledSystem, SimState};
use crate::assembly::DofKind;
use crate::cms::ReducedModel;
use crate::error::{Error, Result};

/// Velocity monitor at one beam dof.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub label: String,
    /// Free-dof index in the beam model.
    pub dof: usize,
    pub position: f64,
}

/// Sphere/beam impact: the sphere ROM sits on top of the beam's (first)
/// boundary dof and moves down at `impact_speed`.
#[derive(Debug, Clone)]
pub struct ImpactSetup {
    pub sphere: ReducedModel,
    pub beam: ReducedModel,
    pub impact_speed: f64,
    pub initial_gap: f64,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub options: ContactOptions,
    pub probes: Vec<Probe>,
    pub coalescence: f64,
}

/// Beam modal coordinates over time, in the mass-normalized retained basis.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModalHistory {
    pub frequencies: Vec<f64>,
    pub rigid_count: usize,
    /// φ_k at the impact dof.
    pub impact_shape: Vec<f64>,
    pub eta: Vec<DVector<f64>>,
    pub eta_dot: Vec<DVector<f64>>,
}

/// Sampled response of an impact simulation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub time: Vec<f64>,
    /// Contact multipliers per sample, N.
    pub lambda: Vec<DVector<f64>>,
    /// f_c = Σ λ, N.
    pub contact_force: Vec<f64>,
    /// Velocity of the sphere's mass dof, m/s (negative downward).
    pub sphere_velocity: Vec<f64>,
    pub sphere_mass: f64,
    pub probes: Vec<Probe>,
    /// `probe_velocity[p][i]`, m/s.
    pub probe_velocity: Vec<Vec<f64>>,
    pub beam: ModalHistory,
    /// Total mechanical energy, J.
    pub energy: Vec<f64>,
    /// Total transverse momentum of sphere and beam, kg m/s.
    pub momentum: Vec<f64>,
    /// Largest scaled complementarity residual over all steps.
    pub max_residual: f64,
    /// Smallest gap over all steps, m.
    pub min_gap: f64,
    pub steps: usize,
    pub dt: f64,
    pub events: EventLog,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    /// Sample spacing.
    pub fn sample_interval(&self) -> f64 {
        if self.time.len() > 1 {
            self.time[1] - self.time[0]
        } else {
            self.dt
        }
    }

    /// Index of the sample at (or nearest to) time `t`.
    pub fn index_at(&self, t: f64) -> usize {
        let k = self.time.partition_point(|&s| s < t);
        if k == 0 {
            0
        } else if k >= self.time.len() {
            self.time.len() - 1
        } else if (self.time[k] - t).abs() < (t - self.time[k - 1]).abs() {
            k
        } else {
            k - 1
        }
    }
}

impl ImpactSetup {
    fn validate(&self) -> Result<()> {
        if !(self.impact_speed >= 0.0) {
            return Err(Error::invalid("impact.velocity_m_s must be >= 0"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::invalid("integration.dt_s must be > 0"));
        }
        if !(self.t_end >= self.dt) {
            return Err(Error::invalid("integration.t_end_s must be >= integration.dt_s"));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("integration.record_every must be >= 1"));
        }
        if self.sphere.n_boundary() != 1 || self.sphere.n_modal() != 1 {
            return Err(Error::invalid("sphere model must have one boundary and one modal coordinate"));
        }
        if self.beam.n_boundary() == 0 {
            return Err(Error::invalid("beam model has no boundary dof"));
        }
        Ok(())
    }

    pub fn coupled_system(&self) -> Result<CoupledSystem> {
        let problem = ContactProblem::new(
            vec![(0, self.sphere.n_boundary())],
            DVector::from_element(1, self.initial_gap),
            self.options,
        )?;
        CoupledSystem::new(vec![self.sphere.clone(), self.beam.clone()], problem)
    }
}

/// `tᵀ M R` for the transverse translation field `t`: momentum per reduced velocity.
fn momentum_row(rom: &ReducedModel) -> RowDVector<f64> {
    let parent = rom.parent();
    let t = parent.translation_vector(DofKind::Transverse);
    (parent.mass_matrix() * t).transpose() * rom.component_modes()
}

/// March the coupled system from touch (gap `initial_gap`) to `t_end`.
pub fn simulate(setup: &ImpactSetup) -> Result<Trajectory> {
    setup.validate()?;
    let sys = setup.coupled_system()?;
    let product = sys.check_step(setup.dt)?;
    info!("dt * omega_max = {product:.4}");

    let n_steps = (setup.t_end / setup.dt).round() as usize;
    let nb = sys.n_boundary();
    let nm = sys.n_modal();
    let (sb, bb) = (sys.boundary_offset(0), sys.boundary_offset(1));
    let (sm, bm) = (sys.modal_offset(0), sys.modal_offset(1));
    let beam_nb = setup.beam.n_boundary();
    let beam_nm = setup.beam.n_modal();

    // Sphere rigid mode φ = 1/√m: η̇ = −v √m.
    let sphere_mass = setup.sphere.parent().mass_matrix()[(0, 0)];
    let mut eta_dot0 = DVector::zeros(nm);
    let phi_s = setup.sphere.boundary_shapes()[(0, 0)];
    eta_dot0[sm] = -setup.impact_speed / phi_s;

    let sphere_row = setup.sphere.component_modes().row(0).into_owned();
    let probe_rows: Vec<RowDVector<f64>> = setup
        .probes
        .iter()
        .map(|p| {
            if p.dof >= setup.beam.parent().n_dof() {
                return Err(Error::invalid(format!("probe {} dof out of range", p.label)));
            }
            Ok(setup.beam.component_modes().row(p.dof).into_owned())
        })
        .collect::<Result<_>>()?;
    let mom_sphere = momentum_row(&setup.sphere);
    let mom_beam = momentum_row(&setup.beam);
    let reduced_velocity = |row: &RowDVector<f64>, qb_dot: &DVector<f64>, eta_dot: &DVector<f64>, ob: usize, om: usize, b: usize, m: usize| {
        let r = row.as_slice();
        let q: f64 = r[..b].iter().zip(&qb_dot.as_slice()[ob..ob + b]).map(|(a, v)| a * v).sum();
        let e: f64 = r[b..b + m].iter().zip(&eta_dot.as_slice()[om..om + m]).map(|(a, v)| a * v).sum();
        q + e
    };

    let mut traj = Trajectory {
        sphere_mass,
        probes: setup.probes.clone(),
        probe_velocity: vec![Vec::new(); setup.probes.len()],
        beam: ModalHistory {
            frequencies: setup.beam.frequencies().to_vec(),
            rigid_count: setup.beam.rigid_count(),
            impact_shape: setup.beam.boundary_shapes().row(0).iter().copied().collect(),
            ..ModalHistory::default()
        },
        min_gap: f64::INFINITY,
        steps: n_steps,
        dt: setup.dt,
        ..Trajectory::default()
    };

    let samples = n_steps / setup.record_every + 1;
    for v in [&mut traj.time, &mut traj.contact_force, &mut traj.sphere_velocity, &mut traj.momentum, &mut traj.energy] {
        v.reserve_exact(samples);
    }
    traj.probe_velocity.iter_mut().for_each(|v| v.reserve_exact(samples));
    traj.lambda.reserve_exact(samples);
    traj.beam.eta.reserve_exact(samples);
    traj.beam.eta_dot.reserve_exact(samples);
    let mut state: SimState = sys.initial_state(DVector::zeros(nm), &eta_dot0, setup.dt)?;
    // `cur` holds state n while `state` advances to n + 1.
    let mut cur = state.clone();
    let mut prev_qb = state.q_b.clone();
    let mut free_gap = DVector::zeros(sys.n_pairs());
    let mut eta_dot = DVector::zeros(nm);
    let mut qb_dot = DVector::zeros(nb);
    let mut e0 = None;
    for n in 0..=n_steps {
        cur.clone_from(&state);
        sys.step_mut(&mut state, setup.dt, &mut free_gap)?;
        traj.max_residual = traj.max_residual.max(cur.residual);
        traj.min_gap = traj.min_gap.min(cur.gap.min());
        if n % setup.record_every == 0 {
            eta_dot.copy_from(&cur.eta_dot_half);
            eta_dot.axpy(0.5, &state.eta_dot_half, 0.5);
            if n == 0 {
                qb_dot.copy_from(&state.q_b);
                qb_dot.axpy(-1.0 / setup.dt, &cur.q_b, 1.0 / setup.dt);
            } else {
                qb_dot.copy_from(&state.q_b);
                qb_dot.axpy(-0.5 / setup.dt, &prev_qb, 0.5 / setup.dt);
            }
            let energy = sys.energy(&cur.q_b, &cur.eta, &eta_dot);
            let e_ref = *e0.get_or_insert(energy);
            if energy > 1.1 * e_ref + f64::MIN_POSITIVE {
                return Err(Error::EnergyGrowth {
                    time: cur.time,
                    ratio: energy / e_ref,
                });
            }
            traj.time.push(n as f64 * setup.dt);
            traj.contact_force.push(cur.lambda.sum());
            traj.lambda.push(cur.lambda.clone());
            traj.sphere_velocity.push(reduced_velocity(&sphere_row, &qb_dot, &eta_dot, sb, sm, 1, 1));
            for (p, row) in probe_rows.iter().enumerate() {
                traj.probe_velocity[p].push(reduced_velocity(row, &qb_dot, &eta_dot, bb, bm, beam_nb, beam_nm));
            }
            traj.momentum.push(
                reduced_velocity(&mom_sphere, &qb_dot, &eta_dot, sb, sm, 1, 1)
                    + reduced_velocity(&mom_beam, &qb_dot, &eta_dot, bb, bm, beam_nb, beam_nm),
            );
            traj.energy.push(energy);
            traj.beam.eta.push(cur.eta.rows(bm, beam_nm).into_owned());
            traj.beam.eta_dot.push(eta_dot.rows(bm, beam_nm).into_owned());
        }
        prev_qb.copy_from(&cur.q_b);
    }
    debug_assert_eq!(nb, sys.n_boundary());
    traj.events = detect_events(&traj.time, &traj.contact_force, setup.coalescence);
    if traj.events.windows.is_empty() && setup.impact_speed > 0.0 {
        warn!("no contact occurred within t_end");
    }
    if traj.events.windows.iter().any(|w| !w.released) {
        warn!("simulation ends while in contact; extend integration.t_end_s");
    }
    Ok(traj)
}
