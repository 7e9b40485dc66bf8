use serde::{Deserialize, Serialize};

use super::{AffineMap, MonotoneTriangularMap, TransportMap};
use crate::error::{Error, Result};

/// A map that is either monotone triangular or closed-form affine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "map", rename_all = "kebab-case")]
pub enum Transport {
    Monotone(MonotoneTriangularMap),
    Affine(AffineMap),
}

impl Transport {
    fn inner(&self) -> &dyn TransportMap {
        match self {
            Transport::Monotone(m) => m,
            Transport::Affine(a) => a,
        }
    }

    pub fn as_monotone(&self) -> Option<&MonotoneTriangularMap> {
        match self {
            Transport::Monotone(m) => Some(m),
            Transport::Affine(_) => None,
        }
    }
}

impl TransportMap for Transport {
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.inner().evaluate(x)
    }
    fn log_det_jacobian(&self, x: &[f64]) -> Result<f64> {
        self.inner().log_det_jacobian(x)
    }
    fn evaluate_with_log_det(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        self.inner().evaluate_with_log_det(x)
    }
    fn invert(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.inner().invert(y)
    }
    fn vjp(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.inner().vjp(x, v)
    }
}

/// A low-dimensional map acting on `coords` of an ambient space and as the
/// identity on the remaining coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedMap {
    pub map: Transport,
    pub coords: Vec<usize>,
    pub ambient: usize,
}

impl EmbeddedMap {
    pub fn new(map: Transport, coords: Vec<usize>, ambient: usize) -> Result<Self> {
        if coords.len() != map.dim() {
            return Err(Error::Dimension { expected: map.dim(), got: coords.len() });
        }
        let mut seen = vec![false; ambient];
        for &c in &coords {
            if c >= ambient || seen[c] {
                return Err(Error::Structure(format!("embedding coordinates {coords:?} overlap or exceed {ambient}")));
            }
            seen[c] = true;
        }
        Ok(Self { map, coords, ambient })
    }

    /// Embeds a map acting on all coordinates.
    pub fn full(map: Transport) -> Self {
        let n = map.dim();
        Self { map, coords: (0..n).collect(), ambient: n }
    }

    fn gather(&self, x: &[f64]) -> Vec<f64> {
        self.coords.iter().map(|&c| x[c]).collect()
    }

    fn scatter(&self, x: &[f64], local: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        for (&c, v) in self.coords.iter().zip(local) {
            out[c] = *v;
        }
        out
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.ambient {
            return Err(Error::Dimension { expected: self.ambient, got: x.len() });
        }
        Ok(())
    }
}

impl TransportMap for EmbeddedMap {
    fn dim(&self) -> usize {
        self.ambient
    }
    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let y = self.map.evaluate(&self.gather(x))?;
        Ok(self.scatter(x, &y))
    }
    fn log_det_jacobian(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        self.map.log_det_jacobian(&self.gather(x))
    }
    fn evaluate_with_log_det(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        self.check(x)?;
        let (y, ld) = self.map.evaluate_with_log_det(&self.gather(x))?;
        Ok((self.scatter(x, &y), ld))
    }
    fn invert(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check(y)?;
        let x = self.map.invert(&self.gather(y))?;
        Ok(self.scatter(y, &x))
    }
    fn vjp(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let local = self.map.vjp(&self.gather(x), &self.gather(v))?;
        Ok(self.scatter(v, &local))
    }
}

/// Composition `T_1 ∘ T_2 ∘ ⋯ ∘ T_ℓ` of embedded maps; `members[0]` is
/// applied last.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MapComposition {
    pub dim: usize,
    pub members: Vec<EmbeddedMap>,
}

impl MapComposition {
    pub fn new(dim: usize, members: Vec<EmbeddedMap>) -> Result<Self> {
        if let Some(m) = members.iter().find(|m| m.ambient != dim) {
            return Err(Error::Dimension { expected: dim, got: m.ambient });
        }
        Ok(Self { dim, members })
    }
}

impl TransportMap for MapComposition {
    fn dim(&self) -> usize {
        self.dim
    }
    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.evaluate_with_log_det(x)?.0)
    }
    fn log_det_jacobian(&self, x: &[f64]) -> Result<f64> {
        Ok(self.evaluate_with_log_det(x)?.1)
    }
    fn evaluate_with_log_det(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        if x.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: x.len() });
        }
        let mut cur = x.to_vec();
        let mut ld = 0.0;
        for m in self.members.iter().rev() {
            let (next, l) = m.evaluate_with_log_det(&cur)?;
            cur = next;
            ld += l;
        }
        Ok((cur, ld))
    }
    fn invert(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut cur = y.to_vec();
        for m in &self.members {
            cur = m.invert(&cur)?;
        }
        Ok(cur)
    }
    fn vjp(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let mut inputs = Vec::with_capacity(self.members.len());
        let mut cur = x.to_vec();
        for m in self.members.iter().rev() {
            inputs.push(cur.clone());
            cur = m.evaluate(&cur)?;
        }
        let mut g = v.to_vec();
        for (m, input) in self.members.iter().zip(inputs.iter().rev()) {
            g = m.vjp(input, &g)?;
        }
        Ok(g)
    }
}
