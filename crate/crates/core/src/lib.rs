//! Characterization of superconducting microwave resonators.
//!
//! * [`notch`]: circle-fit extraction of `f_r`, `Q_l`, `|Q_c|`, `phi` and
//!   `Q_int` from hanger-type transmission sweeps.
//! * [`calibration`]: Y-factor chain calibration, incident power and
//!   intracavity photon number.
//! * [`temperature`]: TLS and thermal-quasiparticle frequency shifts and
//!   the strategies used to fit them.
//! * [`microstrip`]: vacuum-gap microstrip inductance, capacitance and
//!   quarter-wave resonance.
//! * [`synth`]: seeded forward models used as test oracles and fixtures.
//! * [`pipeline`]: file I/O, batch runs and reports.

pub mod calibration;
pub mod constants;
pub mod digamma;
pub mod error;
pub mod lsq;
pub mod microstrip;
pub mod notch;
pub mod pipeline;
pub mod synth;
pub mod temperature;
pub mod types;
pub mod units;

pub use error::{Error, Result};
pub use types::{ComplexSweep, FixedMask, NotchFit, ParamUncertainty, TempModelParams, TemperatureSeries, Warning};
