//! KL-divergence fitting of monotone maps, map regression and diagnostics.

mod fit;
mod objective;
pub mod optimize;
mod rule;

pub use fit::{compute_map, regress_map, FitOptions, FitReport, Regression};
pub use objective::{
    kl_objective, log_normalizing_constant, log_ratio_values, variance_diagnostic, ObjectiveValue, PENALTY,
};
pub use optimize::{Method, TraceRow};
pub use rule::{log_reference, ReferenceRule, RuleKind};

/// Serde helper writing non-finite floats as strings.
pub(crate) mod float_text {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("NaN")
        } else if *v > 0.0 {
            s.serialize_str("Infinity")
        } else {
            s.serialize_str("-Infinity")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "NaN" => Ok(f64::NAN),
                "Infinity" => Ok(f64::INFINITY),
                "-Infinity" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!("invalid float `{other}`"))),
            },
        }
    }
}
