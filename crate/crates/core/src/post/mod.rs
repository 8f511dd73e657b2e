//! Evaluation quantities from trajectories and measurement-like signals.

mod energy;
mod frf;
mod modal_fit;
mod routes;
mod signal;

pub use energy::{
    energy_audit, modal_energy, modal_restitution, project_to_modal, restitution_coefficients,
    EnergyAudit, ModalSummary, ModalSummaryRow,
};
pub use frf::{frf_model, h1_estimate, velocity_to_displacement, FrfEstimate, Realization};
pub use modal_fit::{duhamel_response, fit_modal_free, FreeFit};
pub use routes::{compare_routes, ModeComparison, RouteComparison};
pub use signal::{force_from_velocity, pulse_spectrum, resample, Spectrum, RIG_SAMPLE_RATE};
