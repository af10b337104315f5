//! Exact Cover instances over 3-bit clauses.
//!
//! A clause `(i, j, k)` is satisfied by an assignment exactly when one of the
//! three bits is 1 and the other two are 0. Assignments are little-endian
//! integers: bit `i` of the integer is `z_i`.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest bit count any brute-force or state-vector routine accepts.
pub const MAX_BITS: usize = 24;

/// Restarts allowed per [`generate_gusa`] call.
pub const GUSA_RESTART_LIMIT: usize = 10_000;

const PAR_THRESHOLD_BITS: usize = 16;

pub(crate) fn check_capacity(n: usize) -> Result<()> {
    if n > MAX_BITS {
        return Err(Error::Capacity {
            what: "n",
            value: n,
            limit: MAX_BITS,
        });
    }
    Ok(())
}

/// A 3-bit Exact Cover clause with indices stored in ascending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clause {
    idx: [usize; 3],
}

impl Clause {
    /// Builds a clause from three distinct bit indices in any order.
    pub fn new(a: usize, b: usize, c: usize) -> Result<Self> {
        let mut idx = [a, b, c];
        idx.sort_unstable();
        if idx[0] == idx[1] || idx[1] == idx[2] {
            return Err(Error::InvalidInstance(format!(
                "clause ({a}, {b}, {c}) repeats a bit index"
            )));
        }
        Ok(Clause { idx })
    }

    pub fn i(&self) -> usize {
        self.idx[0]
    }

    pub fn j(&self) -> usize {
        self.idx[1]
    }

    pub fn k(&self) -> usize {
        self.idx[2]
    }

    pub fn indices(&self) -> [usize; 3] {
        self.idx
    }

    /// Bitmask with the clause's three bits set.
    pub fn mask(&self) -> u32 {
        (1u32 << self.idx[0]) | (1u32 << self.idx[1]) | (1u32 << self.idx[2])
    }

    pub fn contains(&self, bit: usize) -> bool {
        self.idx.contains(&bit)
    }

    #[inline]
    fn cost_raw(mask: u32, z: u32) -> u32 {
        ((z & mask).count_ones() != 1) as u32
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.idx[0], self.idx[1], self.idx[2])
    }
}

/// A bit assignment `z_0 … z_{n-1}` encoded as the integer `Σ z_i 2^i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    index: u32,
    n: usize,
}

impl Assignment {
    pub fn new(index: u32, n: usize) -> Result<Self> {
        check_capacity(n)?;
        if (index as u64) >= (1u64 << n) {
            return Err(Error::InvalidArgument(format!(
                "assignment index {index} out of range for {n} bits"
            )));
        }
        Ok(Assignment { index, n })
    }

    /// Builds an assignment from a bit sequence, `bits[i]` being `z_i`.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mut index = 0u32;
        check_capacity(bits.len())?;
        for (i, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => index |= 1 << i,
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "bit {i} has value {b}, expected 0 or 1"
                    )))
                }
            }
        }
        Ok(Assignment {
            index,
            n: bits.len(),
        })
    }

    pub(crate) fn from_raw(index: u32, n: usize) -> Self {
        Assignment { index, n }
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bit(&self, i: usize) -> u8 {
        ((self.index >> i) & 1) as u8
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.n).map(|i| self.bit(i)).collect()
    }
}

impl fmt::Display for Assignment {
    /// Prints `z_0 z_1 … z_{n-1}` left to right.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            write!(f, "{}", self.bit(i))?;
        }
        Ok(())
    }
}

/// Cost of `clause` under `a`: 0 if exactly one of its bits is set, else 1.
pub fn clause_cost(clause: &Clause, a: &Assignment) -> Result<u32> {
    if clause.k() >= a.n() {
        return Err(Error::InvalidInstance(format!(
            "clause {clause} references a bit outside a {}-bit assignment",
            a.n()
        )));
    }
    Ok(Clause::cost_raw(clause.mask(), a.index()))
}

/// An `n`-bit Exact Cover instance: an ordered list of distinct clauses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactCoverInstance {
    n: usize,
    clauses: Vec<Clause>,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    clauses: Vec<Vec<usize>>,
}

impl ExactCoverInstance {
    pub fn new(n: usize, clauses: Vec<Clause>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInstance("n must be at least 1".into()));
        }
        check_capacity(n)?;
        let mut seen = HashSet::with_capacity(clauses.len());
        for (pos, c) in clauses.iter().enumerate() {
            if c.k() >= n {
                return Err(Error::InvalidInstance(format!(
                    "clause #{pos} {c} references bit {} but n = {n}",
                    c.k()
                )));
            }
            if !seen.insert(*c) {
                return Err(Error::InvalidInstance(format!(
                    "clause #{pos} {c} duplicates an earlier clause"
                )));
            }
        }
        Ok(ExactCoverInstance { n, clauses })
    }

    /// Instance with no clauses; every assignment satisfies it.
    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    /// The instance formed by the first `len` clauses.
    pub fn prefix(&self, len: usize) -> ExactCoverInstance {
        ExactCoverInstance {
            n: self.n,
            clauses: self.clauses[..len.min(self.clauses.len())].to_vec(),
        }
    }

    /// Number of clauses containing each bit.
    pub fn bit_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for c in &self.clauses {
            for i in c.indices() {
                d[i] += 1;
            }
        }
        d
    }

    /// Bits that appear in no clause.
    pub fn unconstrained_bits(&self) -> usize {
        self.bit_degrees().iter().filter(|&&d| d == 0).count()
    }

    pub(crate) fn masks(&self) -> Vec<u32> {
        self.clauses.iter().map(Clause::mask).collect()
    }

    #[inline]
    pub(crate) fn violations_raw(masks: &[u32], z: u32) -> u32 {
        masks.iter().map(|&m| Clause::cost_raw(m, z)).sum()
    }

    /// Number of clauses violated by `a`.
    pub fn violation_count(&self, a: &Assignment) -> Result<u32> {
        if a.n() != self.n {
            return Err(Error::InvalidInstance(format!(
                "assignment has {} bits, instance has {}",
                a.n(),
                self.n
            )));
        }
        Ok(Self::violations_raw(&self.masks(), a.index()))
    }

    /// Violation count for every assignment, indexed by its integer encoding.
    pub fn violation_table(&self) -> Result<Vec<u32>> {
        check_capacity(self.n)?;
        let masks = self.masks();
        let dim = 1u32 << self.n;
        let table = if self.n >= PAR_THRESHOLD_BITS {
            (0..dim)
                .into_par_iter()
                .map(|z| Self::violations_raw(&masks, z))
                .collect()
        } else {
            (0..dim).map(|z| Self::violations_raw(&masks, z)).collect()
        };
        Ok(table)
    }

    /// All satisfying assignments in ascending integer order.
    pub fn enumerate_satisfying(&self) -> Result<Vec<Assignment>> {
        check_capacity(self.n)?;
        let mut alive: Vec<u32> = (0..1u32 << self.n).collect();
        for m in self.masks() {
            alive.retain(|&z| (z & m).count_ones() == 1);
        }
        Ok(alive
            .into_iter()
            .map(|z| Assignment::from_raw(z, self.n))
            .collect())
    }

    pub fn count_satisfying(&self) -> Result<usize> {
        Ok(self.enumerate_satisfying()?.len())
    }

    /// Fewest violated clauses over all assignments, with every assignment
    /// attaining it (ascending).
    pub fn minimal_violation_set(&self) -> Result<(u32, Vec<Assignment>)> {
        let table = self.violation_table()?;
        let min = table.iter().copied().min().unwrap_or(0);
        let argmin = table
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v == min)
            .map(|(z, _)| Assignment::from_raw(z as u32, self.n))
            .collect();
        Ok((min, argmin))
    }

    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            n: self.n,
            clauses: self.clauses.iter().map(|c| c.indices().to_vec()).collect(),
        };
        let mut s = serde_json::to_string(&file).expect("instance serializes");
        s.push('\n');
        s
    }

    /// Parses and validates the JSON instance format.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInstance(format!("malformed instance JSON: {e}")))?;
        if file.n == 0 {
            return Err(Error::InvalidInstance("n must be at least 1".into()));
        }
        check_capacity(file.n)?;
        let mut clauses = Vec::with_capacity(file.clauses.len());
        for (pos, raw) in file.clauses.iter().enumerate() {
            let [a, b, c] = raw[..] else {
                return Err(Error::InvalidInstance(format!(
                    "clause #{pos} {raw:?} must have exactly three indices"
                )));
            };
            if !(a < b && b < c) {
                return Err(Error::InvalidInstance(format!(
                    "clause #{pos} {raw:?} is not strictly ascending"
                )));
            }
            clauses.push(Clause::new(a, b, c)?);
        }
        Self::new(file.n, clauses)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

fn draw_triple<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Clause {
    let picked = index::sample(rng, n, 3);
    Clause::new(picked.index(0), picked.index(1), picked.index(2))
        .expect("sampled indices are distinct")
}

fn binomial3(n: usize) -> usize {
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 6
    }
}

/// Random instance with a unique satisfying assignment, built by adding
/// uniformly random clauses until exactly one assignment survives.
///
/// An attempt whose satisfying count jumps from above one straight to zero is
/// thrown away and generation restarts from an empty clause list. A redrawn
/// duplicate triple does not count as an added clause.
pub fn generate_gusa<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<ExactCoverInstance> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "GUSA generation needs n >= 3, got {n}"
        )));
    }
    check_capacity(n)?;
    let total = binomial3(n);
    let all: Vec<u32> = (0..1u32 << n).collect();
    for _ in 0..GUSA_RESTART_LIMIT {
        let mut alive = all.clone();
        let mut used = HashSet::new();
        let mut clauses = Vec::new();
        while used.len() < total {
            let c = draw_triple(n, rng);
            if !used.insert(c) {
                continue;
            }
            clauses.push(c);
            let m = c.mask();
            alive.retain(|&z| (z & m).count_ones() == 1);
            match alive.len() {
                0 => break,
                1 => return ExactCoverInstance::new(n, clauses),
                _ => {}
            }
        }
    }
    Err(Error::GenerationFailure {
        n,
        restarts: GUSA_RESTART_LIMIT,
    })
}

/// Random instance with exactly `m` distinct, uniformly drawn clauses.
pub fn generate_fixed_clauses<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    rng: &mut R,
) -> Result<ExactCoverInstance> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "fixed-clause generation needs n >= 3, got {n}"
        )));
    }
    check_capacity(n)?;
    let total = binomial3(n);
    if m > total {
        return Err(Error::InvalidParameter(format!(
            "m = {m} exceeds the {total} distinct triples available at n = {n}"
        )));
    }
    let mut used = HashSet::with_capacity(m);
    let mut clauses = Vec::with_capacity(m);
    while clauses.len() < m {
        let c = draw_triple(n, rng);
        if used.insert(c) {
            clauses.push(c);
        }
    }
    ExactCoverInstance::new(n, clauses)
}
