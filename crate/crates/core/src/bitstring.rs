//! Fixed-length binary genomes.

use core::fmt;
use core::str::FromStr;

use alloc::string::String;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::Error;

pub const GENOME_BITS: usize = 16;

/// Per-bit probability that mutation replaces a bit with a fresh random bit.
pub const DEFAULT_MUTATION_RATE: f64 = 0.05;

/// A 16-bit genome.
///
/// Bit index 0 is the leftmost character of the textual form and the most
/// significant bit of [`Genome::to_u16`], so the integer value is the binary
/// number the string spells.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Genome(u16);

impl Genome {
    pub const ZEROS: Genome = Genome(0);
    pub const ONES: Genome = Genome(u16::MAX);

    pub const fn from_u16(value: u16) -> Self {
        Genome(value)
    }

    pub const fn to_u16(self) -> u16 {
        self.0
    }

    #[inline]
    pub fn bit(self, index: usize) -> bool {
        debug_assert!(index < GENOME_BITS);
        (self.0 >> (GENOME_BITS - 1 - index)) & 1 == 1
    }

    #[inline]
    pub fn with_bit(self, index: usize, value: bool) -> Self {
        let mask = 1u16 << (GENOME_BITS - 1 - index);
        if value {
            Genome(self.0 | mask)
        } else {
            Genome(self.0 & !mask)
        }
    }

    /// Bits in index order as 0/1 values.
    pub fn bits(self) -> [u8; GENOME_BITS] {
        let mut out = [0u8; GENOME_BITS];
        for (i, b) in out.iter_mut().enumerate() {
            *b = self.bit(i) as u8;
        }
        out
    }

    pub fn count_ones(self) -> u32 {
        self.0.count_ones()
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut g = Genome::ZEROS;
        for i in 0..GENOME_BITS {
            g = g.with_bit(i, rng.random_bool(0.5));
        }
        g
    }

    /// Copy of `self` where each bit, independently with probability `rate`,
    /// is replaced by a uniform random bit (which may equal the old one).
    ///
    /// Draws are made in index order: one Bernoulli(`rate`) per bit, followed
    /// by one Bernoulli(0.5) when that bit is resampled.
    pub fn mutate<R: Rng + ?Sized>(self, rate: f64, rng: &mut R) -> Self {
        let mut child = self;
        for i in 0..GENOME_BITS {
            if rng.random_bool(rate) {
                child = child.with_bit(i, rng.random_bool(0.5));
            }
        }
        child
    }

    #[inline]
    pub fn hamming(self, other: Genome) -> u32 {
        (self.0 ^ other.0).count_ones()
    }
}

pub fn random_genome<R: Rng + ?Sized>(rng: &mut R) -> Genome {
    Genome::random(rng)
}

pub fn mutate<R: Rng + ?Sized>(parent: Genome, rate: f64, rng: &mut R) -> Genome {
    parent.mutate(rate, rng)
}

pub fn hamming(a: Genome, b: Genome) -> u32 {
    a.hamming(b)
}

impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..GENOME_BITS {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Genome({self})")
    }
}

impl FromStr for Genome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != GENOME_BITS {
            return Err(Error::InvalidGenome(s.into()));
        }
        let mut g = Genome::ZEROS;
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => g = g.with_bit(i, true),
                _ => return Err(Error::InvalidGenome(s.into())),
            }
        }
        Ok(g)
    }
}

impl Serialize for Genome {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Genome {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use alloc::string::ToString;
    use proptest::prelude::*;

    fn g(s: &str) -> Genome {
        s.parse().unwrap()
    }

    #[test]
    fn text_rendering_is_index_ordered() {
        let x = Genome::ZEROS.with_bit(0, true);
        assert_eq!(x.to_string(), "1000000000000000");
        assert_eq!(x.to_u16(), 0x8000);
        assert_eq!(g("0000000000000001").to_u16(), 1);
        assert!("000".parse::<Genome>().is_err());
        assert!("000000000000000x".parse::<Genome>().is_err());
    }

    #[test]
    fn hamming_examples() {
        let a = g("0110100111000101");
        assert_eq!(hamming(a, a), 0);
        assert_eq!(hamming(Genome::ZEROS, Genome::ONES), 16);
        assert_eq!(hamming(g("0000000000000001"), g("0000000000000010")), 2);
    }

    #[test]
    fn random_genome_is_reproducible() {
        let a = random_genome(&mut seeded(9));
        let b = random_genome(&mut seeded(9));
        assert_eq!(a, b);
    }

    #[test]
    fn random_genome_statistics() {
        let mut rng = seeded(1);
        let n = 10_000;
        let mut per_bit = [0u32; GENOME_BITS];
        let mut total = 0u64;
        for _ in 0..n {
            let x = random_genome(&mut rng);
            total += x.count_ones() as u64;
            for (i, c) in per_bit.iter_mut().enumerate() {
                *c += x.bit(i) as u32;
            }
        }
        let mean = total as f64 / n as f64;
        assert!((mean - 8.0).abs() <= 0.15, "mean bit-sum {mean}");
        for c in per_bit {
            let f = c as f64 / n as f64;
            assert!((0.47..=0.53).contains(&f), "bit frequency {f}");
        }
    }

    #[test]
    fn zero_rate_mutation_is_identity() {
        let mut rng = seeded(3);
        let p = g("1011001110001111");
        for _ in 0..100 {
            assert_eq!(mutate(p, 0.0, &mut rng), p);
        }
    }

    #[test]
    fn mutation_statistics() {
        let mut rng = seeded(5);
        let p = g("1011001110001111");
        let n = 100_000;
        let mut dist = 0u64;
        let mut same = 0u64;
        for _ in 0..n {
            let c = mutate(p, DEFAULT_MUTATION_RATE, &mut rng);
            let d = hamming(p, c);
            dist += d as u64;
            same += (d == 0) as u64;
        }
        let mean = dist as f64 / n as f64;
        let frac_same = same as f64 / n as f64;
        // 16 bits * 0.05 resample * 0.5 chance the fresh bit differs
        assert!((mean - 0.4).abs() <= 0.02, "mean distance {mean}");
        // each bit survives with 1 - 0.025
        let expected_same = libm::pow(0.975, 16.0);
        assert!((frac_same - expected_same).abs() <= 0.01, "identical fraction {frac_same}");
    }

    proptest! {
        #[test]
        fn hamming_is_a_metric(a: u16, b: u16, c: u16) {
            let (a, b, c) = (Genome::from_u16(a), Genome::from_u16(b), Genome::from_u16(c));
            prop_assert_eq!(hamming(a, b), hamming(b, a));
            prop_assert_eq!(hamming(a, b) == 0, a == b);
            prop_assert!(hamming(a, b) <= 16);
            prop_assert!(hamming(a, c) <= hamming(a, b) + hamming(b, c));
        }

        #[test]
        fn text_round_trip(a: u16) {
            let x = Genome::from_u16(a);
            prop_assert_eq!(x.to_string().parse::<Genome>().unwrap(), x);
            prop_assert_eq!(x.to_string().len(), GENOME_BITS);
        }

        #[test]
        fn mutation_leaves_parent_untouched(a: u16, seed: u64) {
            let p = Genome::from_u16(a);
            let before = p;
            let c1 = p.mutate(0.5, &mut seeded(seed));
            let c2 = p.mutate(0.5, &mut seeded(seed));
            prop_assert_eq!(p, before);
            prop_assert_eq!(c1, c2);
        }
    }
}
