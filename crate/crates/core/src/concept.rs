use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// A JEL classification code such as `I24`: one uppercase letter followed by
/// one or two digits. Input is trimmed and uppercased before validation.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConceptCode(String);

impl ConceptCode {
    pub fn new(raw: &str) -> Result<Self, Error> {
        let code = raw.trim().to_ascii_uppercase();
        let bytes = code.as_bytes();
        let valid = (2..=3).contains(&bytes.len())
            && bytes[0].is_ascii_uppercase()
            && bytes[1..].iter().all(u8::is_ascii_digit);
        if valid {
            Ok(ConceptCode(code))
        } else {
            Err(Error::InvalidConceptCode(raw.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for ConceptCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConceptCode::new(s)
    }
}

impl fmt::Display for ConceptCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for ConceptCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for ConceptCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for ConceptCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        ConceptCode::new(&raw).map_err(serde::de::Error::custom)
    }
}

/// Convenience constructor for tests and fixtures; panics on invalid input.
pub fn code(raw: &str) -> ConceptCode {
    ConceptCode::new(raw).unwrap_or_else(|e| panic!("{e}"))
}
