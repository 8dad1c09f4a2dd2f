use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A bit string, most significant bit first.
///
/// Orders by length, then as an unsigned integer, which is the canonical
/// order of payloads within one generator.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Bits(Vec<bool>);

impl Bits {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push_field(&mut self, value: u64, width: u32) {
        for i in (0..width).rev() {
            self.0.push((value >> i) & 1 == 1);
        }
    }

    pub fn from_u64(value: u64, width: u32) -> Self {
        let mut b = Self::new();
        b.push_field(value, width);
        b
    }

    pub fn reader(&self) -> BitReader<'_> {
        BitReader { bits: &self.0, pos: 0 }
    }
}

impl From<Vec<bool>> for Bits {
    fn from(v: Vec<bool>) -> Self {
        Self(v)
    }
}

impl Ord for Bits {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Bits {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Bits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::MalformedPayload { field: "bit string" }),
            })
            .collect::<Result<Vec<_>>>()
            .map(Bits)
    }
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub struct BitReader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl BitReader<'_> {
    /// Reads a `width`-bit field; `field` names it in the error.
    pub fn read(&mut self, width: u32, field: &'static str) -> Result<u64> {
        let end = self.pos + width as usize;
        if end > self.bits.len() || width > 64 {
            return Err(Error::MalformedPayload { field });
        }
        let v = self.bits[self.pos..end]
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | b as u64);
        self.pos = end;
        Ok(v)
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_round_trip() {
        let mut b = Bits::new();
        b.push_field(5, 3);
        b.push_field(0, 2);
        b.push_field(1, 1);
        assert_eq!(b.to_string(), "101001");
        let mut r = b.reader();
        assert_eq!(r.read(3, "a").unwrap(), 5);
        assert_eq!(r.read(2, "b").unwrap(), 0);
        assert_eq!(r.read(1, "c").unwrap(), 1);
        assert!(matches!(r.read(1, "d"), Err(Error::MalformedPayload { field: "d" })));
    }

    #[test]
    fn order_is_length_then_value() {
        let a: Bits = "11".parse().unwrap();
        let b: Bits = "000".parse().unwrap();
        let c: Bits = "001".parse().unwrap();
        assert!(a < b && b < c);
    }
}
