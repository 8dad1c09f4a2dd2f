//! A constructive program model.
//!
//! A program is an 8-bit generator tag followed by a fixed-layout payload;
//! its description length is exact. The set of programs within a bit
//! budget is finite and enumerated in canonical order: by description
//! length, then generator tag, then payload as an unsigned integer.

mod bits;
mod expander;
mod generators;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub use bits::{BitReader, Bits};
pub use expander::{expand, Expander};
pub use generators::Generator;
use generators::Shape;

use crate::error::{Error, Result};
use crate::quantize::{QuantizedSignal, Resolution};
use crate::rng::Stream;

/// Width of the generator tag.
pub const HEADER_BITS: u32 = 8;

/// Default enumeration cap, about 1.3e8 candidates at most.
pub const DEFAULT_BUDGET_CAP: u32 = 26;

/// An upper bound `kappa * m` on description length, in bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ComplexityBudget {
    max_bits: u32,
}

impl ComplexityBudget {
    pub fn new(max_bits: u32) -> Result<Self> {
        Self::with_cap(max_bits, DEFAULT_BUDGET_CAP)
    }

    pub fn with_cap(max_bits: u32, cap: u32) -> Result<Self> {
        if max_bits == 0 {
            return Err(Error::domain("complexity budget", 0.0));
        }
        if max_bits > cap || cap > 63 {
            return Err(Error::BudgetTooLarge {
                budget: max_bits,
                cap: cap.min(63),
            });
        }
        Ok(Self { max_bits })
    }

    pub fn max_bits(self) -> u32 {
        self.max_bits
    }
}

/// A short program that prints one quantized signal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProgramEntry {
    pub generator: Generator,
    pub payload: Bits,
    pub n: usize,
    pub m: Resolution,
}

impl ProgramEntry {
    pub fn generator_id(&self) -> u8 {
        self.generator.id()
    }

    /// Header plus payload bits.
    pub fn description_length(&self) -> u32 {
        HEADER_BITS + self.payload.len() as u32
    }

    /// Complexity dimension `description_length / m`.
    pub fn kappa(&self) -> f64 {
        self.description_length() as f64 / self.m.bits() as f64
    }

    pub fn decode(&self) -> Result<QuantizedSignal> {
        let codes = self.generator.decode(&self.payload, self.n, self.m.bits())?;
        QuantizedSignal::from_codes(&codes, self.m)
    }

    /// Canonical order: length, generator tag, payload.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.description_length()
            .cmp(&other.description_length())
            .then_with(|| self.generator_id().cmp(&other.generator_id()))
            .then_with(|| self.payload.cmp(&other.payload))
    }

    /// Printable identifier, e.g. `K_SPARSE:1001100`.
    pub fn id(&self) -> String {
        format!("{}:{}", self.generator.name(), self.payload)
    }
}

#[derive(Clone, Copy, Debug)]
struct Block {
    shape: Shape,
    count: u128,
}

/// The enabled generator families at a fixed signal length and resolution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codebook {
    generators: Vec<Generator>,
    n: usize,
    m: Resolution,
}

impl Codebook {
    /// Generators are kept in tag order; each family may appear once.
    pub fn new(mut generators: Vec<Generator>, n: usize, m: Resolution) -> Result<Self> {
        if n == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if generators.is_empty() {
            return Err(Error::Config("codebook needs at least one generator".into()));
        }
        for g in &generators {
            g.validate()?;
        }
        generators.sort_by_key(|g| g.id());
        if generators.windows(2).any(|w| w[0].id() == w[1].id()) {
            return Err(Error::Config("generator family listed twice".into()));
        }
        Ok(Self { generators, n, m })
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> Resolution {
        self.m
    }

    fn blocks(&self, budget: ComplexityBudget) -> Vec<Block> {
        let m = self.m.bits();
        let mut blocks: Vec<(u32, u8, Block)> = self
            .generators
            .iter()
            .flat_map(|g| g.shapes(self.n))
            .filter_map(|shape| {
                let len = HEADER_BITS + shape.payload_len(self.n, m);
                (len <= budget.max_bits()).then(|| {
                    let count = shape.count(self.n, m);
                    (len, shape.generator.id(), Block { shape, count })
                })
            })
            .filter(|(_, _, b)| b.count > 0)
            .collect();
        blocks.sort_by_key(|&(len, id, _)| (len, id));
        blocks.into_iter().map(|(_, _, b)| b).collect()
    }

    fn entry(&self, shape: Shape, idx: u128) -> ProgramEntry {
        ProgramEntry {
            generator: shape.generator,
            payload: shape.unrank(self.n, self.m.bits(), idx),
            n: self.n,
            m: self.m,
        }
    }

    /// Every valid entry with description length within `budget`, in canonical order.
    pub fn enumerate(&self, budget: ComplexityBudget) -> Enumeration<'_> {
        Enumeration {
            codebook: self,
            blocks: self.blocks(budget),
            block: 0,
            idx: 0,
        }
    }

    /// Size of the enumeration.
    pub fn count(&self, budget: ComplexityBudget) -> u64 {
        self.blocks(budget).iter().map(|b| b.count as u64).sum()
    }

    /// The `index`-th entry of the enumeration.
    pub fn nth(&self, budget: ComplexityBudget, mut index: u64) -> Option<ProgramEntry> {
        for b in self.blocks(budget) {
            if (index as u128) < b.count {
                return Some(self.entry(b.shape, index as u128));
            }
            index -= b.count as u64;
        }
        None
    }

    /// Uniform draw from the enumeration, deterministic in `seed`.
    pub fn sample_entry(&self, budget: ComplexityBudget, seed: u64) -> Result<ProgramEntry> {
        let total = self.count(budget);
        if total == 0 {
            return Err(Error::EmptyCodebook);
        }
        let idx = Stream::new(seed).below(total);
        Ok(self.nth(budget, idx).expect("index below count"))
    }
}

/// Lazy stream over a codebook's entries.
pub struct Enumeration<'a> {
    codebook: &'a Codebook,
    blocks: Vec<Block>,
    block: usize,
    idx: u128,
}

impl Iterator for Enumeration<'_> {
    type Item = ProgramEntry;

    fn next(&mut self) -> Option<ProgramEntry> {
        loop {
            let b = *self.blocks.get(self.block)?;
            if self.idx < b.count {
                let e = self.codebook.entry(b.shape, self.idx);
                self.idx += 1;
                return Some(e);
            }
            self.block += 1;
            self.idx = 0;
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rest: u128 = self.blocks[self.block.min(self.blocks.len())..]
            .iter()
            .map(|b| b.count)
            .sum::<u128>()
            .saturating_sub(self.idx);
        let rest = rest.min(usize::MAX as u128) as usize;
        (rest, Some(rest))
    }
}
