//! Serde helpers that write infinite reals as the strings `"inf"` and
//! `"-inf"` and accept either numbers or those strings on input.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Visitor};
use serde::ser::SerializeTuple;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Copy)]
struct Extended(f64);

impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

struct ExtendedVisitor;

impl<'de> Visitor<'de> for ExtendedVisitor {
    type Value = Extended;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number or the string \"inf\" / \"-inf\"")
    }
    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Extended, E> {
        Ok(Extended(v))
    }
    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Extended, E> {
        Ok(Extended(v as f64))
    }
    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Extended, E> {
        Ok(Extended(v as f64))
    }
    fn visit_str<E: de::Error>(self, v: &str) -> Result<Extended, E> {
        match v {
            "inf" | "+inf" => Ok(Extended(f64::INFINITY)),
            "-inf" => Ok(Extended(f64::NEG_INFINITY)),
            other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
        }
    }
}

impl<'de> Deserialize<'de> for Extended {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(ExtendedVisitor)
    }
}

pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    Extended(*v).serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Extended::deserialize(d).map(|e| e.0)
}

/// `[lo, hi]` with either end possibly infinite.
pub mod pair {
    use super::*;

    pub fn serialize<S: Serializer>(v: &(f64, f64), s: S) -> Result<S::Ok, S::Error> {
        let mut t = s.serialize_tuple(2)?;
        t.serialize_element(&Extended(v.0))?;
        t.serialize_element(&Extended(v.1))?;
        t.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(f64, f64), D::Error> {
        let (a, b) = <(Extended, Extended)>::deserialize(d)?;
        Ok((a.0, b.0))
    }
}

/// Map from key to `[lo, hi]`.
pub mod pair_map {
    use super::*;

    pub fn serialize<S: Serializer>(v: &BTreeMap<String, (f64, f64)>, s: S) -> Result<S::Ok, S::Error> {
        let m: BTreeMap<&String, (Extended, Extended)> =
            v.iter().map(|(k, (a, b))| (k, (Extended(*a), Extended(*b)))).collect();
        m.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, (f64, f64)>, D::Error> {
        let m = BTreeMap::<String, (Extended, Extended)>::deserialize(d)?;
        Ok(m.into_iter().map(|(k, (a, b))| (k, (a.0, b.0))).collect())
    }
}
