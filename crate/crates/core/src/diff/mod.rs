//! Expression graphs with exact derivatives.
//!
//! The training loss of every equation is assembled as a static graph:
//! network outputs, trial-function transforms, the spatial/temporal
//! derivatives appearing in the equation residual, and the squared-residual
//! penalty itself. `Graph::diff` expands input derivatives symbolically, so
//! a single first-order reverse sweep then yields the parameter gradient of
//! losses that contain second derivatives of the network.

mod builder;
mod expr;
mod scalar;

pub use builder::{Graph, Nd};
pub use expr::{DerivativeBundle, Expression, Workspace};
pub use scalar::{Bundle, Scalar};

/// Numerically stable ln(1 + e^x).
#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Numerically stable logistic function.
#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
