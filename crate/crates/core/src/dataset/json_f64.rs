//! Floating-point fields written with 17 significant digits.

use serde::ser::Error as _;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return Err(S::Error::custom(format!("non-finite value {x}")));
    }
    let raw = RawValue::from_string(format!("{x:.16e}")).map_err(S::Error::custom)?;
    raw.serialize(s)
}
