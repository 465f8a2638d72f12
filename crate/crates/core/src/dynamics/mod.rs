//! Time evolution and spectra.

pub mod closed;
pub mod floquet;
pub mod master;
pub mod sector;
pub mod spectrum;

pub use closed::{
    analytic_state, analytic_trajectory, evolve_closed_numeric, TimeGrid, Trajectory,
    TrajectoryMeta,
};
pub use floquet::{
    assemble_report, floquet_gaps, floquet_slice, floquet_spectrum, FloquetReport, FloquetSlice,
    FloquetSweep, GapRecord, QuasiRow,
};
pub use master::{integrate_master, lindblad_rhs, thermal_occupation, MasterOptions, SectorMode};
pub use sector::{sector_phase, sector_propagator, SectorPhase};
pub use spectrum::{spectrum_sweep, Crossing, SpectrumRow, SpectrumTable};
