//! Closed-form planar Couette flow between parallel plates.
//!
//! With the lower wall at y = -h fixed and the upper wall at y = +h moving
//! at speed U under zero pressure gradient, the steady solution is the
//! linear shear profile u = U (y + h) / (2h), v = 0, p = 0.

use crate::error::{CoreError, Result};

/// Channel half-height in meters.
pub const HALF_HEIGHT: f64 = 0.005;
/// Upper-wall speed in m/s.
pub const WALL_SPEED: f64 = 1.0;
/// Channel length in meters.
pub const CHANNEL_LENGTH: f64 = 0.5;

/// (u, v, p) of the analytic profile at a point inside the channel.
pub fn couette_analytic(x: f64, y: f64) -> Result<(f64, f64, f64)> {
    if !(0.0..=CHANNEL_LENGTH).contains(&x) {
        return Err(CoreError::OutOfDomain(format!(
            "x = {x} outside [0, {CHANNEL_LENGTH}]"
        )));
    }
    if !(-HALF_HEIGHT..=HALF_HEIGHT).contains(&y) {
        return Err(CoreError::OutOfDomain(format!(
            "y = {y} outside [-{HALF_HEIGHT}, {HALF_HEIGHT}]"
        )));
    }
    let u = WALL_SPEED * (y + HALF_HEIGHT) / (2.0 * HALF_HEIGHT);
    Ok((u, 0.0, 0.0))
}
