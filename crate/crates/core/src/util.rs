//! Serde helpers for floats that may be non-finite.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Reads `null` as NaN (serde_json writes NaN as `null`).
pub(crate) fn nan_if_null<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Float {
    Num(f64),
    Text(String),
}

fn encode(v: f64) -> Float {
    if v.is_finite() {
        Float::Num(v)
    } else if v.is_nan() {
        Float::Text("nan".into())
    } else if v > 0.0 {
        Float::Text("inf".into())
    } else {
        Float::Text("-inf".into())
    }
}

fn decode<E: serde::de::Error>(f: Float) -> Result<f64, E> {
    match f {
        Float::Num(v) => Ok(v),
        Float::Text(s) => match s.as_str() {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            "nan" => Ok(f64::NAN),
            other => Err(E::custom(format!("not a float: {other:?}"))),
        },
    }
}

/// Vectors of floats with `"inf"`, `"-inf"` and `"nan"` spelled as strings.
pub(crate) mod float_vec {
    use super::*;

    pub(crate) fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&x| encode(x)))
    }

    pub(crate) fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Float>::deserialize(d)?.into_iter().map(decode).collect()
    }
}
