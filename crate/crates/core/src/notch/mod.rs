//! Notch-type (hanger) resonator fitting.
//!
//! The fit removes the cable delay, fits a circle to the corrected
//! points, reads `f_r` and `Q_l` from the phase response around the circle
//! center, derives `|Q_c|` and `phi` from the circle geometry and finally
//! refines all seven parameters jointly against the raw transmission.

mod background;
mod circle;
mod fit;
mod model;

pub use background::{estimate_background, Background};
pub use circle::{fit_circle, Circle};
pub use fit::{fit_notch, fit_notch_with, NotchOptions, Weighting, MAX_LOADED_Q};
pub use model::{internal_q, InternalQ, NotchModel};
