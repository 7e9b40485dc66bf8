//! Monotone σ-triangular maps.
//!
//! Component `k` (in the order given by `order`) writes coordinate
//! `order[k]` and reads only its active inputs, which all precede it in the
//! order. Its value is
//!
//! ```text
//! T(x) = a(x_off) + ∫_0^{x_diag} r(b(x_off, t)) dt
//! ```
//!
//! where `a` is a Hermite polynomial expansion in the off-diagonal inputs,
//! `b` is an expansion that additionally uses a diagonal basis in `t`, and
//! `r > 0` is the rectifier. The integral uses 16-point Gauss–Legendre on
//! `[0, x_diag]`.

use std::convert::TryFrom;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::basis::{hermite_polynomial_derivatives, hermite_polynomials, total_degree_indices, DiagBasis, OffsetBasis};
use super::TransportMap;
use crate::error::{Error, Result};
use crate::graph::SparsityPattern;
use crate::quadrature::gauss_legendre_16;

/// Shift of the squared rectifier.
pub const SHIFT: f64 = 1e-8;

/// Positive function applied to the integrand expansion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rectifier {
    /// `u² + 1e-8`.
    #[default]
    ShiftedSquare,
    Exp,
}

impl Rectifier {
    #[inline]
    pub fn value(self, u: f64) -> f64 {
        match self {
            Rectifier::ShiftedSquare => u * u + SHIFT,
            Rectifier::Exp => u.exp(),
        }
    }

    #[inline]
    pub fn derivative(self, u: f64) -> f64 {
        match self {
            Rectifier::ShiftedSquare => 2.0 * u,
            Rectifier::Exp => u.exp(),
        }
    }

    /// Constant input giving `r(u) = 1`.
    pub fn unit_preimage(self) -> f64 {
        match self {
            Rectifier::ShiftedSquare => (1.0 - SHIFT).sqrt(),
            Rectifier::Exp => 0.0,
        }
    }
}

/// Structure of a parameterised map: expansion degree and basis choices.
///
/// Offsets use total degree `degree`; integrands use `degree - 1`, so a
/// degree-1 template is affine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapTemplate {
    pub degree: usize,
    #[serde(default)]
    pub rectifier: Rectifier,
    #[serde(default)]
    pub diag_basis: DiagBasis,
}

impl MapTemplate {
    pub fn new(degree: usize) -> Self {
        Self { degree, rectifier: Rectifier::default(), diag_basis: DiagBasis::default() }
    }

    pub fn linear() -> Self {
        Self::new(1)
    }

    pub fn with_rectifier(mut self, r: Rectifier) -> Self {
        self.rectifier = r;
        self
    }

    pub fn with_diag_basis(mut self, b: DiagBasis) -> Self {
        self.diag_basis = b;
        self
    }
}

/// One component of a [`MonotoneTriangularMap`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapComponent {
    /// Output coordinate.
    pub target: usize,
    /// Input coordinates; the last entry is `target`.
    pub active: Vec<usize>,
    /// Multi-indices over `active[..len-1]`.
    pub offset_indices: Vec<Vec<u32>>,
    pub offset_coeffs: Vec<f64>,
    /// Multi-indices over all of `active`; the last entry is the diagonal index.
    pub integrand_indices: Vec<Vec<u32>>,
    pub integrand_coeffs: Vec<f64>,
}

impl MapComponent {
    pub fn n_coefficients(&self) -> usize {
        self.offset_coeffs.len() + self.integrand_coeffs.len()
    }

    fn identity(target: usize, off: Vec<usize>, t: &MapTemplate) -> Result<Self> {
        if t.degree == 0 {
            return Err(Error::Structure("template degree must be at least 1".into()));
        }
        let m = off.len();
        let mut active = off;
        active.push(target);
        let offset_indices = total_degree_indices(m, t.degree);
        let integrand_indices = total_degree_indices(m + 1, t.degree - 1);
        let mut integrand_coeffs = vec![0.0; integrand_indices.len()];
        integrand_coeffs[0] = t.rectifier.unit_preimage();
        Ok(Self {
            target,
            active,
            offset_coeffs: vec![0.0; offset_indices.len()],
            offset_indices,
            integrand_indices,
            integrand_coeffs,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
struct ComponentMeta {
    off_degree: usize,
    diag_len: usize,
}

/// Serialised form of a map.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename = "MonotoneTriangularMap")]
struct MapRepr {
    dim: usize,
    permutation: Vec<usize>,
    rectifier: Rectifier,
    offset_basis: OffsetBasis,
    diag_basis: DiagBasis,
    components: Vec<MapComponent>,
}

/// Monotone σ-triangular transport map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapRepr", into = "MapRepr")]
pub struct MonotoneTriangularMap {
    dim: usize,
    order: Vec<usize>,
    rectifier: Rectifier,
    diag_basis: DiagBasis,
    components: Vec<MapComponent>,
    meta: Vec<ComponentMeta>,
}

impl TryFrom<MapRepr> for MonotoneTriangularMap {
    type Error = Error;
    fn try_from(r: MapRepr) -> Result<Self> {
        Self::from_components(r.dim, r.permutation, r.rectifier, r.diag_basis, r.components)
    }
}

impl From<MonotoneTriangularMap> for MapRepr {
    fn from(m: MonotoneTriangularMap) -> Self {
        MapRepr {
            dim: m.dim,
            permutation: m.order,
            rectifier: m.rectifier,
            offset_basis: OffsetBasis::HermitePolynomial,
            diag_basis: m.diag_basis,
            components: m.components,
        }
    }
}

/// Reusable buffers for component evaluation.
#[derive(Debug, Default)]
pub struct MapScratch {
    he: Vec<f64>,
    dhe: Vec<f64>,
    off_prod: Vec<f64>,
    int_prod: Vec<f64>,
    g: Vec<f64>,
    dg: Vec<f64>,
    phi: Vec<f64>,
    dphi: Vec<f64>,
    hq: Vec<f64>,
    din: Vec<f64>,
    /// Component value.
    pub value: f64,
    /// Diagonal derivative `r(b(x_off, x_diag))`.
    pub diag: f64,
    pub log_diag: f64,
    /// Derivative of the value with respect to the component coefficients.
    pub d_value: Vec<f64>,
    /// Derivative of the log diagonal derivative with respect to the coefficients.
    pub d_log_diag: Vec<f64>,
    /// Derivative of the value with respect to the active inputs.
    pub d_input: Vec<f64>,
}

/// Which derivatives [`MonotoneTriangularMap::eval_component`] computes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Want {
    pub coefficients: bool,
    pub inputs: bool,
}

fn fill(v: &mut Vec<f64>, n: usize) {
    v.clear();
    v.resize(n, 0.0);
}

impl MonotoneTriangularMap {
    /// Builds and validates a map from explicit components listed in `order`.
    pub fn from_components(
        dim: usize,
        order: Vec<usize>,
        rectifier: Rectifier,
        diag_basis: DiagBasis,
        components: Vec<MapComponent>,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::Structure(msg));
        if order.len() != dim || components.len() != dim {
            return bad(format!("expected {dim} components and permutation entries"));
        }
        let mut pos = vec![usize::MAX; dim];
        for (k, &o) in order.iter().enumerate() {
            if o >= dim || pos[o] != usize::MAX {
                return bad(format!("permutation {order:?} is invalid"));
            }
            pos[o] = k;
        }
        let mut meta = Vec::with_capacity(dim);
        for (k, c) in components.iter().enumerate() {
            if c.target != order[k] {
                return bad(format!("component {k} targets {} but the permutation says {}", c.target, order[k]));
            }
            let m = c.active.len();
            if m == 0 || *c.active.last().unwrap() != c.target {
                return bad(format!("component {k}: active set must end with the target"));
            }
            let mut last = None;
            for &a in &c.active[..m - 1] {
                if a >= dim || pos[a] >= k || last.is_some_and(|l| pos[a] <= l) {
                    return bad(format!("component {k}: active input {a} is not an earlier coordinate in order"));
                }
                last = Some(pos[a]);
            }
            if c.offset_indices.len() != c.offset_coeffs.len() || c.integrand_indices.len() != c.integrand_coeffs.len()
            {
                return bad(format!("component {k}: coefficient and index counts differ"));
            }
            if c.integrand_indices.is_empty() {
                return bad(format!("component {k}: integrand has no terms"));
            }
            if c.offset_indices.iter().any(|i| i.len() != m - 1) || c.integrand_indices.iter().any(|i| i.len() != m) {
                return bad(format!("component {k}: multi-index length mismatch"));
            }
            if c.offset_coeffs.iter().chain(&c.integrand_coeffs).any(|v| !v.is_finite()) {
                return Err(Error::Evaluation { component: k, reason: "non-finite coefficient".into() });
            }
            let off_degree = c
                .offset_indices
                .iter()
                .flat_map(|i| i.iter())
                .chain(c.integrand_indices.iter().flat_map(|i| i[..m - 1].iter()))
                .copied()
                .max()
                .unwrap_or(0) as usize;
            let diag_len = c.integrand_indices.iter().map(|i| i[m - 1]).max().unwrap_or(0) as usize + 1;
            meta.push(ComponentMeta { off_degree, diag_len });
        }
        Ok(Self { dim, order, rectifier, diag_basis, components, meta })
    }

    /// Dense lower-triangular identity map.
    pub fn identity(dim: usize, template: &MapTemplate) -> Result<Self> {
        Self::identity_ordered(&(0..dim).collect::<Vec<_>>(), template)
    }

    /// Dense σ-triangular identity map with `order` as σ.
    pub fn identity_ordered(order: &[usize], template: &MapTemplate) -> Result<Self> {
        let actives = (0..order.len()).map(|k| order[..k].to_vec()).collect();
        Self::identity_with_actives(order, actives, template)
    }

    /// Identity map whose component `k` reads `off_actives[k]` besides its
    /// own coordinate. Inputs are sorted into σ order.
    pub fn identity_with_actives(
        order: &[usize],
        off_actives: Vec<Vec<usize>>,
        template: &MapTemplate,
    ) -> Result<Self> {
        let dim = order.len();
        if off_actives.len() != dim {
            return Err(Error::Dimension { expected: dim, got: off_actives.len() });
        }
        let mut pos = vec![usize::MAX; dim];
        for (k, &o) in order.iter().enumerate() {
            if o < dim {
                pos[o] = k;
            }
        }
        let mut comps = Vec::with_capacity(dim);
        for (k, mut off) in off_actives.into_iter().enumerate() {
            if off.iter().any(|&a| a >= dim) {
                return Err(Error::Structure(format!("component {k}: active input out of range")));
            }
            off.sort_by_key(|&a| pos[a]);
            off.dedup();
            comps.push(MapComponent::identity(order[k], off, template)?);
        }
        Self::from_components(dim, order.to_vec(), template.rectifier, template.diag_basis, comps)
    }

    /// Lower-triangular identity map that ignores the pairs in `pattern`.
    pub fn from_direct_pattern(pattern: &SparsityPattern, template: &MapTemplate) -> Result<Self> {
        let n = pattern.n;
        let actives = (0..n).map(|k| (0..k).filter(|&j| !pattern.contains(j, k)).collect()).collect();
        Self::identity_with_actives(&(0..n).collect::<Vec<_>>(), actives, template)
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn rectifier(&self) -> Rectifier {
        self.rectifier
    }

    pub fn diag_basis(&self) -> DiagBasis {
        self.diag_basis
    }

    pub fn components(&self) -> &[MapComponent] {
        &self.components
    }

    pub fn n_coefficients(&self) -> usize {
        self.components.iter().map(MapComponent::n_coefficients).sum()
    }

    /// Start of each component's block in the flat coefficient vector.
    pub fn coefficient_offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dim + 1);
        let mut acc = 0;
        out.push(0);
        for c in &self.components {
            acc += c.n_coefficients();
            out.push(acc);
        }
        out
    }

    /// Flat coefficients: per component, offset then integrand.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_coefficients());
        for c in &self.components {
            v.extend_from_slice(&c.offset_coeffs);
            v.extend_from_slice(&c.integrand_coeffs);
        }
        v
    }

    pub fn set_coefficients(&mut self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.n_coefficients() {
            return Err(Error::Dimension { expected: self.n_coefficients(), got: coeffs.len() });
        }
        let mut at = 0;
        for c in &mut self.components {
            let no = c.offset_coeffs.len();
            let ni = c.integrand_coeffs.len();
            c.offset_coeffs.copy_from_slice(&coeffs[at..at + no]);
            c.integrand_coeffs.copy_from_slice(&coeffs[at + no..at + no + ni]);
            at += no + ni;
        }
        Ok(())
    }

    pub fn with_coefficients(&self, coeffs: &[f64]) -> Result<Self> {
        let mut m = self.clone();
        m.set_coefficients(coeffs)?;
        Ok(m)
    }

    /// Evaluates component `k` at the ambient point `x`, leaving results in `s`.
    pub fn eval_component(&self, k: usize, x: &[f64], want: Want, s: &mut MapScratch) -> Result<()> {
        let c = &self.components[k];
        let meta = &self.meta[k];
        let m = c.active.len();
        let off = m - 1;
        let dp1 = meta.off_degree + 1;
        let qn = meta.diag_len;
        let rect = self.rectifier;

        fill(&mut s.he, off * dp1);
        fill(&mut s.dhe, off * dp1);
        for j in 0..off {
            let row = j * dp1..(j + 1) * dp1;
            hermite_polynomials(x[c.active[j]], &mut s.he[row.clone()]);
            if want.inputs {
                let (he, dhe) = (&s.he[row.clone()], &mut s.dhe[row]);
                hermite_polynomial_derivatives(he, dhe);
            }
        }
        if want.inputs {
            fill(&mut s.d_input, m);
        }

        let n_off = c.offset_coeffs.len();
        fill(&mut s.off_prod, n_off);
        let mut value = 0.0;
        for (i, idx) in c.offset_indices.iter().enumerate() {
            let mut p = 1.0;
            for j in 0..off {
                p *= s.he[j * dp1 + idx[j] as usize];
            }
            s.off_prod[i] = p;
            value += c.offset_coeffs[i] * p;
            if want.inputs {
                for j in 0..off {
                    let mut dp = s.dhe[j * dp1 + idx[j] as usize];
                    if dp == 0.0 {
                        continue;
                    }
                    for l in (0..off).filter(|&l| l != j) {
                        dp *= s.he[l * dp1 + idx[l] as usize];
                    }
                    s.d_input[j] += c.offset_coeffs[i] * dp;
                }
            }
        }

        let n_int = c.integrand_coeffs.len();
        fill(&mut s.int_prod, n_int);
        fill(&mut s.g, qn);
        if want.inputs {
            fill(&mut s.dg, off * qn);
        }
        for (l, idx) in c.integrand_indices.iter().enumerate() {
            let mut p = 1.0;
            for j in 0..off {
                p *= s.he[j * dp1 + idx[j] as usize];
            }
            s.int_prod[l] = p;
            let q = idx[off] as usize;
            s.g[q] += c.integrand_coeffs[l] * p;
            if want.inputs {
                for j in 0..off {
                    let mut dp = s.dhe[j * dp1 + idx[j] as usize];
                    if dp == 0.0 {
                        continue;
                    }
                    for i in (0..off).filter(|&i| i != j) {
                        dp *= s.he[i * dp1 + idx[i] as usize];
                    }
                    s.dg[j * qn + q] += c.integrand_coeffs[l] * dp;
                }
            }
        }

        let t = x[c.target];
        let half = 0.5 * t;
        // With no diagonal dependence the integrand is constant in t and the
        // one-point rule is exact.
        let rule = gauss_legendre_16();
        let (nodes, weights): (&[f64], &[f64]) = if qn == 1 { (&[0.0], &[2.0]) } else { (&rule.0, &rule.1) };
        fill(&mut s.phi, qn);
        fill(&mut s.dphi, qn);
        fill(&mut s.hq, qn);
        fill(&mut s.din, off);
        let mut integral = 0.0;
        for (xi, w) in nodes.iter().zip(weights) {
            let u = half * (1.0 + xi);
            self.diag_basis.eval(u, &mut s.phi, &mut s.dphi);
            let b: f64 = s.g.iter().zip(&s.phi).map(|(g, p)| g * p).sum();
            integral += w * rect.value(b);
            if want.coefficients || want.inputs {
                let rp = w * rect.derivative(b);
                if want.coefficients {
                    for q in 0..qn {
                        s.hq[q] += rp * s.phi[q];
                    }
                }
                if want.inputs {
                    for j in 0..off {
                        let db: f64 = (0..qn).map(|q| s.dg[j * qn + q] * s.phi[q]).sum();
                        s.din[j] += rp * db;
                    }
                }
            }
        }
        value += half * integral;

        self.diag_basis.eval(t, &mut s.phi, &mut s.dphi);
        let bt: f64 = s.g.iter().zip(&s.phi).map(|(g, p)| g * p).sum();
        let rt = rect.value(bt);
        if !value.is_finite() || !rt.is_finite() || rt <= 0.0 {
            return Err(Error::Evaluation { component: k, reason: "non-finite value or rectifier overflow".into() });
        }
        s.value = value;
        s.diag = rt;
        s.log_diag = rt.ln();

        if want.coefficients {
            let nc = n_off + n_int;
            fill(&mut s.d_value, nc);
            fill(&mut s.d_log_diag, nc);
            s.d_value[..n_off].copy_from_slice(&s.off_prod);
            let rpt = rect.derivative(bt) / rt;
            for (l, idx) in c.integrand_indices.iter().enumerate() {
                let q = idx[off] as usize;
                s.d_value[n_off + l] = s.int_prod[l] * half * s.hq[q];
                s.d_log_diag[n_off + l] = rpt * s.int_prod[l] * s.phi[q];
            }
        }
        if want.inputs {
            for j in 0..off {
                s.d_input[j] += half * s.din[j];
            }
            s.d_input[off] = rt;
        }
        Ok(())
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    /// Evaluates into `out` and returns the log-determinant.
    pub fn evaluate_into(&self, x: &[f64], out: &mut [f64], s: &mut MapScratch) -> Result<f64> {
        self.check_dim(x)?;
        let mut ld = 0.0;
        for k in 0..self.dim {
            self.eval_component(k, x, Want::default(), s)?;
            out[self.components[k].target] = s.value;
            ld += s.log_diag;
        }
        Ok(ld)
    }

    /// Jacobian with respect to the inputs.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        let mut s = MapScratch::default();
        let mut jac = DMatrix::zeros(self.dim, self.dim);
        for k in 0..self.dim {
            self.eval_component(k, x, Want { coefficients: false, inputs: true }, &mut s)?;
            let c = &self.components[k];
            for (j, &a) in c.active.iter().enumerate() {
                jac[(c.target, a)] = s.d_input[j];
            }
        }
        Ok(jac)
    }

    fn solve_component(
        &self,
        k: usize,
        x: &mut [f64],
        y: f64,
        opts: &InversionOptions,
        s: &mut MapScratch,
    ) -> Result<()> {
        let target = self.components[k].target;
        let f = |xi: f64, x: &mut [f64], s: &mut MapScratch| -> Result<(f64, f64)> {
            x[target] = xi;
            self.eval_component(k, x, Want::default(), s)?;
            Ok((s.value - y, s.diag))
        };
        let fail = |reason: &str| Error::Inversion { component: k, reason: reason.into() };

        let (f0, _) = f(0.0, x, s)?;
        if f0 == 0.0 {
            x[target] = 0.0;
            return Ok(());
        }
        let (mut lo, mut hi);
        let mut step = 1.0;
        let mut doublings = 0;
        if f0 < 0.0 {
            lo = 0.0;
            hi = step;
            while f(hi, x, s)?.0 < 0.0 {
                doublings += 1;
                if doublings > opts.max_doublings {
                    return Err(fail("bracket expansion exceeded the maximum number of doublings"));
                }
                lo = hi;
                step *= 2.0;
                hi = step;
            }
        } else {
            hi = 0.0;
            lo = -step;
            while f(lo, x, s)?.0 > 0.0 {
                doublings += 1;
                if doublings > opts.max_doublings {
                    return Err(fail("bracket expansion exceeded the maximum number of doublings"));
                }
                hi = lo;
                step *= 2.0;
                lo = -step;
            }
        }

        let mut xi = 0.5 * (lo + hi);
        for _ in 0..opts.max_iterations {
            let (fv, d) = f(xi, x, s)?;
            // A small residual is not enough where the map is nearly flat:
            // also require the Newton correction in x to be negligible.
            let correction = (fv / d).abs();
            if fv == 0.0 || (fv.abs() <= opts.value_tolerance && correction <= 1e-13 * xi.abs().max(1.0)) {
                let cand = xi - fv / d;
                if fv != 0.0 && cand > lo && cand < hi {
                    let (fc, _) = f(cand, x, s)?;
                    if fc.abs() <= fv.abs() {
                        xi = cand;
                    }
                }
                x[target] = xi;
                return Ok(());
            }
            if fv < 0.0 {
                lo = xi;
            } else {
                hi = xi;
            }
            let newton = xi - fv / d;
            xi = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= 4.0 * f64::EPSILON * xi.abs().max(1.0) {
                x[target] = xi;
                return Ok(());
            }
        }
        Err(fail("root finding did not converge"))
    }

    /// Inverse map evaluation with explicit tolerances.
    pub fn invert_with(&self, y: &[f64], opts: &InversionOptions) -> Result<Vec<f64>> {
        self.check_dim(y)?;
        let mut x = vec![0.0; self.dim];
        let mut s = MapScratch::default();
        for k in 0..self.dim {
            let target = self.components[k].target;
            self.solve_component(k, &mut x, y[target], opts, &mut s)?;
        }
        Ok(x)
    }

    /// Same map written on permuted coordinates `y_i = x_{order[i]}`, which
    /// is lower triangular in the identity order.
    pub fn to_lower_triangular(&self) -> Self {
        let mut pos = vec![0; self.dim];
        for (k, &o) in self.order.iter().enumerate() {
            pos[o] = k;
        }
        let comps = self
            .components
            .iter()
            .map(|c| MapComponent {
                target: pos[c.target],
                active: c.active.iter().map(|&a| pos[a]).collect(),
                ..c.clone()
            })
            .collect();
        Self::from_components(self.dim, (0..self.dim).collect(), self.rectifier, self.diag_basis, comps)
            .expect("permuted map keeps a valid structure")
    }
}

/// Root-finding settings for inversion.
#[derive(Clone, Debug)]
pub struct InversionOptions {
    pub value_tolerance: f64,
    pub max_doublings: usize,
    pub max_iterations: usize,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self { value_tolerance: 1e-10, max_doublings: 60, max_iterations: 200 }
    }
}

impl TransportMap for MonotoneTriangularMap {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.evaluate_into(x, &mut out, &mut MapScratch::default())?;
        Ok(out)
    }

    fn log_det_jacobian(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let mut s = MapScratch::default();
        let mut ld = 0.0;
        for k in 0..self.dim {
            self.eval_component(k, x, Want::default(), &mut s)?;
            ld += s.log_diag;
        }
        Ok(ld)
    }

    fn evaluate_with_log_det(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        let mut out = vec![0.0; self.dim];
        let ld = self.evaluate_into(x, &mut out, &mut MapScratch::default())?;
        Ok((out, ld))
    }

    fn invert(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.invert_with(y, &InversionOptions::default())
    }

    fn vjp(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        self.check_dim(v)?;
        let mut s = MapScratch::default();
        let mut out = vec![0.0; self.dim];
        for k in 0..self.dim {
            let c = &self.components[k];
            let w = v[c.target];
            if w == 0.0 {
                continue;
            }
            self.eval_component(k, x, Want { coefficients: false, inputs: true }, &mut s)?;
            for (j, &a) in c.active.iter().enumerate() {
                out[a] += w * s.d_input[j];
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_identity() {
        for r in [Rectifier::ShiftedSquare, Rectifier::Exp] {
            let m = MonotoneTriangularMap::identity(3, &MapTemplate::new(3).with_rectifier(r)).unwrap();
            let x = [0.3, -1.7, 2.5];
            let (y, ld) = m.evaluate_with_log_det(&x).unwrap();
            for i in 0..3 {
                assert!((y[i] - x[i]).abs() < 1e-14);
            }
            assert!(ld.abs() < 1e-14);
        }
    }

    #[test]
    fn one_dimensional_affine() {
        let t = MapTemplate::linear().with_rectifier(Rectifier::Exp);
        let mut m = MonotoneTriangularMap::identity(1, &t).unwrap();
        let (mu, sigma) = (0.4f64, 1.7f64);
        m.set_coefficients(&[mu, sigma.ln()]).unwrap();
        let y = m.evaluate(&[2.0]).unwrap();
        assert!((y[0] - (mu + 2.0 * sigma)).abs() < 1e-13);
        assert!((m.log_det_jacobian(&[2.0]).unwrap() - sigma.ln()).abs() < 1e-14);
        let x = m.invert(&[mu + 3.0 * sigma]).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_integrand() {
        // a = 0, b(t) = t with a polynomial diagonal basis
        let t = MapTemplate::new(2).with_rectifier(Rectifier::Exp).with_diag_basis(DiagBasis::HermitePolynomial);
        let mut m = MonotoneTriangularMap::identity(1, &t).unwrap();
        // offset indices: []; integrand indices: [0], [1]
        m.set_coefficients(&[0.0, 0.0, 1.0]).unwrap();
        let y = m.evaluate(&[1.0]).unwrap();
        assert!((y[0] - (std::f64::consts::E - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_structure() {
        let t = MapTemplate::new(1);
        assert!(MonotoneTriangularMap::identity_with_actives(&[0, 1], vec![vec![1], vec![]], &t).is_err());
        let m = MonotoneTriangularMap::identity(2, &t).unwrap();
        let mut comps = m.components().to_vec();
        comps[1].offset_coeffs[0] = f64::NAN;
        assert!(MonotoneTriangularMap::from_components(
            2,
            vec![0, 1],
            Rectifier::ShiftedSquare,
            DiagBasis::HermiteFunction,
            comps
        )
        .is_err());
    }
}
