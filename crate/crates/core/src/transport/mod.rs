//! Transport maps: representation, evaluation, differentiation, inversion,
//! composition and the log-densities they induce.

mod affine;
pub mod basis;
mod compose;
mod density;
mod map;

pub use affine::AffineMap;
pub use basis::{DiagBasis, OffsetBasis};
pub use compose::{EmbeddedMap, MapComposition, Transport};
pub use density::{FnDensity, Pullback, Pushforward, Shifted};
pub use map::{InversionOptions, MapComponent, MapScratch, MapTemplate, MonotoneTriangularMap, Rectifier, Want, SHIFT};

use crate::error::Result;

/// Unnormalised log-density, the target interface used throughout.
pub trait LogDensity: Send + Sync {
    fn dim(&self) -> usize;

    /// Value at `x`; may be `-inf`.
    fn log_density(&self, x: &[f64]) -> f64;

    /// Analytic gradient, when available.
    fn gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Value and gradient; falls back to central differences.
    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let v = self.log_density(x);
        let g = self.gradient(x).unwrap_or_else(|| finite_difference_gradient(self, x));
        (v, g)
    }
}

/// Central-difference gradient with a step scaled to each coordinate.
pub fn finite_difference_gradient<D: LogDensity + ?Sized>(d: &D, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-6 * (1.0 + x[i].abs());
            y[i] = x[i] + h;
            let fp = d.log_density(&y);
            y[i] = x[i] - h;
            let fm = d.log_density(&y);
            y[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Diffeomorphism interface shared by triangular, affine, embedded and
/// composed maps.
pub trait TransportMap: Send + Sync {
    fn dim(&self) -> usize;
    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn log_det_jacobian(&self, x: &[f64]) -> Result<f64>;
    fn evaluate_with_log_det(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        Ok((self.evaluate(x)?, self.log_det_jacobian(x)?))
    }
    fn invert(&self, y: &[f64]) -> Result<Vec<f64>>;
    /// Vector–Jacobian product `∇T(x)ᵀ v`.
    fn vjp(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>>;
}

/// Writes a map checkpoint as JSON. Floats use the shortest representation
/// that parses back to the same bits.
pub fn to_checkpoint<T: serde::Serialize>(map: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(map)?)
}

pub fn from_checkpoint<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| crate::error::Error::Checkpoint(e.to_string()))
}
