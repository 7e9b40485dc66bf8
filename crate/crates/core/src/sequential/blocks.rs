use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::transport::{AffineMap, MapComponent, MapTemplate, MonotoneTriangularMap, Transport};

/// Coordinate layout of a step map on `(x_θ, x_i, x_{i+1})`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepLayout {
    pub state_dim: usize,
    pub param_dim: usize,
}

impl StepLayout {
    pub fn new(state_dim: usize, param_dim: usize) -> Self {
        Self { state_dim, param_dim }
    }
    pub fn dim(&self) -> usize {
        self.param_dim + 2 * self.state_dim
    }
    pub fn theta(&self) -> Range<usize> {
        0..self.param_dim
    }
    pub fn current(&self) -> Range<usize> {
        self.param_dim..self.param_dim + self.state_dim
    }
    pub fn next(&self) -> Range<usize> {
        self.param_dim + self.state_dim..self.dim()
    }
    /// Component order: parameters, then `x_{i+1}`, then `x_i`.
    pub fn order(&self) -> Vec<usize> {
        self.theta().chain(self.next()).chain(self.current()).collect()
    }
    /// Parameters followed by `x_{i+1}`.
    pub fn upper_coords(&self) -> Vec<usize> {
        self.theta().chain(self.next()).collect()
    }
    /// Dense identity step map with the block-triangular structure.
    pub fn identity_map(&self, template: &MapTemplate) -> Result<MonotoneTriangularMap> {
        MonotoneTriangularMap::identity_ordered(&self.order(), template)
    }
}

/// Restricts `map` to `coords`, which must be closed under the map's input
/// dependencies. Coordinate `coords[j]` becomes `j` in the result.
pub fn sub_map(map: &Transport, coords: &[usize]) -> Result<Transport> {
    let dim = crate::transport::TransportMap::dim(map);
    let mut local = vec![usize::MAX; dim];
    for (j, &c) in coords.iter().enumerate() {
        if c >= dim || local[c] != usize::MAX {
            return Err(Error::Structure(format!("invalid block coordinates {coords:?}")));
        }
        local[c] = j;
    }
    match map {
        Transport::Monotone(m) => {
            let mut order = Vec::with_capacity(coords.len());
            let mut comps: Vec<MapComponent> = Vec::with_capacity(coords.len());
            for c in m.components().iter().filter(|c| local[c.target] != usize::MAX) {
                let mut c = c.clone();
                for a in c.active.iter_mut() {
                    if local[*a] == usize::MAX {
                        return Err(Error::Structure(format!(
                            "component for {} reads {a} outside the block",
                            c.target
                        )));
                    }
                    *a = local[*a];
                }
                c.target = local[c.target];
                order.push(c.target);
                comps.push(c);
            }
            Ok(Transport::Monotone(MonotoneTriangularMap::from_components(
                coords.len(),
                order,
                m.rectifier(),
                m.diag_basis(),
                comps,
            )?))
        }
        Transport::Affine(a) => {
            let m = a.matrix();
            for &r in coords {
                for c in 0..dim {
                    if local[c] == usize::MAX && m[(r, c)] != 0.0 {
                        return Err(Error::Structure(format!("row {r} reads {c} outside the block")));
                    }
                }
            }
            let k = coords.len();
            let sub = DMatrix::from_fn(k, k, |i, j| m[(coords[i], coords[j])]);
            let shift = DVector::from_fn(k, |i, _| a.shift()[coords[i]]);
            Ok(Transport::Affine(AffineMap::new(sub, shift)?))
        }
    }
}
