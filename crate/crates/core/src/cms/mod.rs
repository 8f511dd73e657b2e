//! Free-interface normal modes and the massless-boundary reduction.

mod modes;
mod rom;
mod rom_io;

pub use modes::{solve_modes, ModalBasis};
pub use rom::{
    build_rom, elastic_flexibility_columns, residual_flexibility, select_retained,
    select_retained_count, ReducedModel, RetainedModes,
};
pub use rom_io::{export_rom, import_rom};
