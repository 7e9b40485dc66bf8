use super::{LogDensity, TransportMap};

/// `x ↦ log π(T(x)) + log det ∇T(x)`.
pub struct Pullback<'a> {
    pub map: &'a dyn TransportMap,
    pub target: &'a dyn LogDensity,
}

impl LogDensity for Pullback<'_> {
    fn dim(&self) -> usize {
        self.map.dim()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        match self.map.evaluate_with_log_det(x) {
            Ok((y, ld)) => self.target.log_density(&y) + ld,
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

/// `z ↦ log η(S(z)) + log det ∇S(z)` with `S = T⁻¹`, i.e.
/// `log η(x) − log det ∇T(x)` at `x = T⁻¹(z)`.
pub struct Pushforward<'a> {
    pub map: &'a dyn TransportMap,
    pub reference: &'a dyn LogDensity,
}

impl LogDensity for Pushforward<'_> {
    fn dim(&self) -> usize {
        self.map.dim()
    }

    fn log_density(&self, z: &[f64]) -> f64 {
        let x = match self.map.invert(z) {
            Ok(x) => x,
            Err(_) => return f64::NEG_INFINITY,
        };
        match self.map.log_det_jacobian(&x) {
            Ok(ld) => self.reference.log_density(&x) - ld,
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

/// Wraps a closure as a [`LogDensity`] without gradient.
pub struct FnDensity<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> FnDensity<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> LogDensity for FnDensity<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Adds a constant to another density.
pub struct Shifted<'a> {
    pub inner: &'a dyn LogDensity,
    pub shift: f64,
}

impl LogDensity for Shifted<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        self.inner.log_density(x) + self.shift
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.inner.gradient(x)
    }
}
