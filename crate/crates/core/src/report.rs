//! Serialization helpers and JSON report shapes shared by the CLI.

use num_bigint::BigInt;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::exactmath::Rational;

pub fn bigint_as_string<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

/// Rationals serialize as {"num": "...", "den": "..."} strings so exact
/// values survive the trip through JSON.
pub struct RationalJson<'a>(pub &'a Rational);

impl Serialize for RationalJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Rational", 2)?;
        st.serialize_field("num", &self.0.numer().to_string())?;
        st.serialize_field("den", &self.0.denom().to_string())?;
        st.end()
    }
}

pub fn rational_fields(r: &Rational) -> (String, String) {
    (r.numer().to_string(), r.denom().to_string())
}

/// Per-(q, n) local density row: type counts at the stabilized level plus
/// the exact density.
#[derive(Serialize)]
pub struct LocalDensityJson {
    pub q: u64,
    pub n: u64,
    pub v: u32,
    pub good: String,
    pub zero: String,
    pub bad: String,
    pub beta_num: String,
    pub beta_den: String,
}
