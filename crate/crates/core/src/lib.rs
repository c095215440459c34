//! Simulation core for a waveguide-coupled pair of resonators with a tunable
//! effective coupling mediated by a far-detuned qubit.

pub mod end;
pub mod error;
pub mod model;
pub mod oracle;
pub mod side;
pub mod steady;
mod transport;
pub mod wavegrid;

pub use error::{Result, SimError};
pub use model::{CouplingSchedule, Segment, SystemParams, SystemParamsBuilder};
pub use transport::StepLedger;
pub use wavegrid::{Grid1D, WaveState};
