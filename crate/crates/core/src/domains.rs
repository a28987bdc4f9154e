//! The three fitness landscapes and per-run task sampling.
//!
//! Every landscape maps a 16-bit genome to a fitness in `[0, 32]`:
//!
//! * **convex**: twice the number of one bits.
//! * **hashed**: `2^R` with `R = min(|X|, 5)` and `X ~ Normal(0, 4/3)` drawn
//!   from a stream seeded by hashing the genome together with a per-run
//!   constant. Neighbouring genomes are uncorrelated.
//! * **deceptive**: hierarchical if-and-only-if over adjacent disjoint blocks.

use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bitstring::{Genome, GENOME_BITS};
use crate::rng::splitmix64;
use crate::Error;

pub const MAX_FITNESS: f64 = 32.0;

/// Standard deviation of the normal draw behind the hashed landscape.
pub const HASHED_STD_DEV: f64 = 4.0 / 3.0;
/// Cap on the exponent of the hashed landscape.
pub const HASHED_MAX_EXPONENT: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Convex,
    Hashed,
    Deceptive,
}

impl DomainKind {
    pub const ALL: [DomainKind; 3] = [DomainKind::Convex, DomainKind::Hashed, DomainKind::Deceptive];

    pub fn name(self) -> &'static str {
        match self {
            DomainKind::Convex => "convex",
            DomainKind::Hashed => "hashed",
            DomainKind::Deceptive => "deceptive",
        }
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DomainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "convex" => Ok(DomainKind::Convex),
            "hashed" => Ok(DomainKind::Hashed),
            "deceptive" => Ok(DomainKind::Deceptive),
            other => Err(Error::UnknownDomain(other.into())),
        }
    }
}

/// One task drawn from a domain. The run constant only matters for the
/// hashed landscape and stays fixed for a whole GA run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub domain_kind: DomainKind,
    pub run_constant: u64,
}

impl TaskInstance {
    pub fn new(domain_kind: DomainKind, run_constant: u64) -> Self {
        TaskInstance { domain_kind, run_constant }
    }

    pub fn fitness(&self, genome: Genome) -> f64 {
        fitness(self, genome)
    }
}

pub fn sample_task<R: Rng + ?Sized>(domain_kind: DomainKind, rng: &mut R) -> TaskInstance {
    let run_constant = match domain_kind {
        DomainKind::Hashed => rng.random(),
        DomainKind::Convex | DomainKind::Deceptive => 0,
    };
    TaskInstance { domain_kind, run_constant }
}

pub fn fitness(task: &TaskInstance, genome: Genome) -> f64 {
    match task.domain_kind {
        DomainKind::Convex => convex_fitness(genome),
        DomainKind::Hashed => hashed_fitness(task.run_constant, genome),
        DomainKind::Deceptive => deceptive_fitness(genome) as f64,
    }
}

pub fn convex_fitness(genome: Genome) -> f64 {
    2.0 * genome.count_ones() as f64
}

/// Seed of the per-genome stream in the hashed landscape: the SplitMix64
/// finalizer applied to `genome + run_constant` (wrapping).
pub fn hashed_seed(run_constant: u64, genome: Genome) -> u64 {
    splitmix64((genome.to_u16() as u64).wrapping_add(run_constant))
}

pub fn hashed_fitness(run_constant: u64, genome: Genome) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(hashed_seed(run_constant, genome));
    let normal = Normal::new(0.0, HASHED_STD_DEV).expect("finite positive std dev");
    let x: f64 = normal.sample(&mut rng);
    let r = libm::fmin(libm::fabs(x), HASHED_MAX_EXPONENT);
    libm::exp2(r)
}

pub fn deceptive_fitness(genome: Genome) -> u32 {
    hiff(&genome.bits())
}

/// Longest bit slice [`hiff`] accepts.
pub const HIFF_MAX_BITS: usize = 64;

/// Hierarchical if-and-only-if score of a bit slice whose length is a power
/// of two (at most [`HIFF_MAX_BITS`]). Adjacent disjoint blocks pair up
/// level by level; a pair whose two children are both uniform and equal is
/// valid and awards the length of each child.
pub fn hiff(bits: &[u8]) -> u32 {
    assert!(
        bits.len().is_power_of_two() && bits.len() <= HIFF_MAX_BITS,
        "hiff needs a power-of-two length up to {HIFF_MAX_BITS}"
    );
    const MIXED: u8 = u8::MAX;
    let mut level = [0u8; HIFF_MAX_BITS];
    level[..bits.len()].copy_from_slice(bits);
    let mut len = bits.len();
    let mut child_len = 1u32;
    let mut total = 0u32;
    while len > 1 {
        len /= 2;
        for j in 0..len {
            let (a, b) = (level[2 * j], level[2 * j + 1]);
            level[j] = if a == b && a != MIXED {
                total += child_len;
                a
            } else {
                MIXED
            };
        }
        child_len *= 2;
    }
    total
}

const _: () = assert!(GENOME_BITS.is_power_of_two());
