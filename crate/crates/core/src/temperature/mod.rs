//! Temperature dependence of the resonance frequency: two-level-system
//! and thermal-quasiparticle shifts, and the strategies used to fit them.

mod ensemble;
mod fit;
mod model;

pub use ensemble::{ensemble_statistics, EnsembleFit};
pub use fit::{fit_temperature_sweep, FitStrategy, TemperatureFit, MIN_FIT_POINTS, TEMPERATURE_FLOOR};
pub use model::{critical_temperature, model_shift, qp_shift, tls_shift, BCS_RATIO};
