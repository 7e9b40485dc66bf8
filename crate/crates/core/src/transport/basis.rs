//! Univariate Hermite families and total-degree multi-index sets.

use serde::{Deserialize, Serialize};

/// Probabilists' Hermite polynomials `He_0..=He_deg` at `x`.
pub fn hermite_polynomials(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for k in 2..out.len() {
        out[k] = x * out[k - 1] - (k - 1) as f64 * out[k - 2];
    }
}

/// Derivatives `He_k' = k He_{k-1}` given the values.
pub fn hermite_polynomial_derivatives(values: &[f64], out: &mut [f64]) {
    for k in 0..out.len() {
        out[k] = if k == 0 { 0.0 } else { k as f64 * values[k - 1] };
    }
}

/// Normalised Hermite functions `ψ_k(x) = He_k(x) e^{-x²/4} / sqrt(√(2π) k!)`.
pub fn hermite_functions(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = (-0.25 * x * x).exp() / (2.0 * std::f64::consts::PI).powf(0.25);
    if out.len() > 1 {
        out[1] = x * out[0];
    }
    for k in 2..out.len() {
        let kf = k as f64;
        out[k] = (x * out[k - 1] - (kf - 1.0).sqrt() * out[k - 2]) / kf.sqrt();
    }
}

/// Basis used in the diagonal variable of the monotone integrand.
///
/// Index 0 is always the constant function. For Hermite functions, index
/// `q ≥ 1` is `ψ_{q-1}`, so the integrand tends to a function of the other
/// variables in the tails.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagBasis {
    #[default]
    HermiteFunction,
    HermitePolynomial,
}

impl DiagBasis {
    /// Values and derivatives of diagonal basis functions `0..vals.len()`.
    pub fn eval(self, x: f64, vals: &mut [f64], ders: &mut [f64]) {
        let m = vals.len();
        if m == 0 {
            return;
        }
        match self {
            DiagBasis::HermitePolynomial => {
                hermite_polynomials(x, vals);
                hermite_polynomial_derivatives(vals, ders);
            }
            DiagBasis::HermiteFunction => {
                vals[0] = 1.0;
                ders[0] = 0.0;
                if m > 1 {
                    hermite_functions(x, &mut vals[1..]);
                    for k in 1..m {
                        let j = k - 1;
                        let prev = if j == 0 { 0.0 } else { (j as f64).sqrt() * vals[k - 1] };
                        ders[k] = prev - 0.5 * x * vals[k];
                    }
                }
            }
        }
    }
}

/// Basis family of the offset term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffsetBasis {
    #[default]
    HermitePolynomial,
}

/// All multi-indices over `vars` variables with total degree at most
/// `degree`, ordered by degree and then reverse-lexicographically, so the
/// zero index comes first.
pub fn total_degree_indices(vars: usize, degree: usize) -> Vec<Vec<u32>> {
    fn rec(vars: usize, left: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == vars {
            out.push(cur.clone());
            return;
        }
        for d in (0..=left).rev() {
            cur.push(d as u32);
            rec(vars, left - d, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for d in 0..=degree {
        let mut level = Vec::new();
        let mut cur = Vec::new();
        rec(vars, d, &mut cur, &mut level);
        level.retain(|m| m.iter().map(|&v| v as usize).sum::<usize>() == d);
        out.extend(level);
    }
    out
}
