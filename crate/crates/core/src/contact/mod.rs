//! Coupled sphere/beam time integration with unilateral contact, and the
//! Hertz reference solution.

mod events;
mod oracle;
mod simulate;
mod solver;
mod system;

pub use events::{detect_events, ContactWindow, EventLog};
pub use oracle::{dopri5, hertz_oracle, Dopri5Options, OracleBeam, OracleSetup};
pub use simulate::{simulate, ImpactSetup, ModalHistory, Probe, Trajectory};
pub use solver::{ContactOptions, Delassus, LcpSolution};
pub use system::{ContactProblem, CoupledSystem, SimState};
