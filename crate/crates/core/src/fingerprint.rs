//! Circular (ECFP-style) binary fingerprints.
//!
//! Every heavy atom starts from a hash of (element, charge, aromatic flag,
//! heavy degree, attached hydrogens). Each iteration rehashes an atom's
//! identifier together with the sorted (bond, neighbour identifier) pairs, so
//! the identifier at iteration `r` describes the radius-`r` environment.
//! Identifiers from every iteration `0..=radius` set bit `id mod nbits`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chem::Molecule;
use crate::hash::hash_words;
use crate::Scalar;

pub const MAX_RADIUS: u32 = 6;
pub const MIN_BITS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FingerprintError {
    #[error("invalid fingerprint config: {0}")]
    InvalidConfig(String),
    #[error("fingerprint configs differ: {0} vs {1}")]
    ConfigMismatch(FingerprintConfig, FingerprintConfig),
    #[error("malformed fingerprint string: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawConfig")]
pub struct FingerprintConfig {
    radius: u32,
    nbits: usize,
    hash_seed: u64,
}

#[derive(Deserialize)]
struct RawConfig {
    radius: u32,
    nbits: usize,
    hash_seed: u64,
}

impl TryFrom<RawConfig> for FingerprintConfig {
    type Error = FingerprintError;

    fn try_from(r: RawConfig) -> Result<Self, Self::Error> {
        FingerprintConfig::new(r.radius, r.nbits, r.hash_seed)
    }
}

impl Default for FingerprintConfig {
    fn default() -> Self {
        FingerprintConfig {
            radius: 2,
            nbits: 2048,
            hash_seed: 0,
        }
    }
}

impl FingerprintConfig {
    pub fn new(radius: u32, nbits: usize, hash_seed: u64) -> Result<Self, FingerprintError> {
        if radius > MAX_RADIUS {
            return Err(FingerprintError::InvalidConfig(format!(
                "radius {radius} exceeds {MAX_RADIUS}"
            )));
        }
        if nbits < MIN_BITS || !nbits.is_power_of_two() {
            return Err(FingerprintError::InvalidConfig(format!(
                "nbits {nbits} must be a power of two >= {MIN_BITS}"
            )));
        }
        Ok(FingerprintConfig {
            radius,
            nbits,
            hash_seed,
        })
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn nbits(&self) -> usize {
        self.nbits
    }

    pub fn hash_seed(&self) -> u64 {
        self.hash_seed
    }
}

/// `r<radius>b<nbits>s<seed>`
impl fmt::Display for FingerprintConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}b{}s{}", self.radius, self.nbits, self.hash_seed)
    }
}

impl FromStr for FingerprintConfig {
    type Err = FingerprintError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FingerprintError::Malformed(s.to_string());
        let rest = s.strip_prefix('r').ok_or_else(bad)?;
        let (radius, rest) = rest.split_once('b').ok_or_else(bad)?;
        let (nbits, seed) = rest.split_once('s').ok_or_else(bad)?;
        FingerprintConfig::new(
            radius.parse().map_err(|_| bad())?,
            nbits.parse().map_err(|_| bad())?,
            seed.parse().map_err(|_| bad())?,
        )
    }
}

/// Fixed-length bit vector tagged with the config that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FingerprintVector {
    words: Vec<u64>,
    config: FingerprintConfig,
}

impl FingerprintVector {
    pub fn zeros(config: FingerprintConfig) -> Self {
        FingerprintVector {
            words: vec![0; config.nbits / 64],
            config,
        }
    }

    /// Vector with the given bit positions set; positions wrap modulo nbits.
    pub fn from_bits(config: FingerprintConfig, bits: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(config);
        for b in bits {
            v.set(b % config.nbits);
        }
        v
    }

    pub fn config(&self) -> &FingerprintConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.config.nbits
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&b| self.get(b))
    }

    /// Number of set bits.
    pub fn popcount(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// Set bits of `self & other`, or `ConfigMismatch`.
    pub fn intersection_count(&self, other: &Self) -> Result<u32, FingerprintError> {
        self.check_config(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum())
    }

    pub fn check_config(&self, other: &Self) -> Result<(), FingerprintError> {
        if self.config == other.config {
            Ok(())
        } else {
            Err(FingerprintError::ConfigMismatch(self.config, other.config))
        }
    }

    /// 0/1 entries as scalars, for use as network inputs.
    pub fn to_dense<T: Scalar>(&self) -> Vec<T> {
        (0..self.len())
            .map(|b| if self.get(b) { T::one() } else { T::zero() })
            .collect()
    }

    /// `r<radius>b<nbits>s<seed>:<hex>`; byte `k` of the hex payload holds
    /// bits `8k..8k+8`, least significant bit first.
    pub fn to_hex(&self) -> String {
        let bytes: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        format!("{}:{}", self.config, hex::encode(bytes))
    }

    pub fn from_hex(s: &str) -> Result<Self, FingerprintError> {
        let bad = || FingerprintError::Malformed(s.to_string());
        let (cfg, payload) = s.split_once(':').ok_or_else(bad)?;
        let config: FingerprintConfig = cfg.parse()?;
        let bytes = hex::decode(payload).map_err(|_| bad())?;
        if bytes.len() * 8 != config.nbits {
            return Err(bad());
        }
        let words = bytes
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(FingerprintVector { words, config })
    }
}

impl fmt::Display for FingerprintVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Per-atom environment identifiers for iterations `0..=radius`, heavy atoms
/// only; entry `[r][k]` belongs to the `k`-th heavy atom.
pub fn environment_ids(mol: &Molecule, radius: u32, seed: u64) -> Vec<Vec<u64>> {
    let heavy: Vec<usize> = (0..mol.atom_count()).filter(|&i| mol.is_heavy(i)).collect();
    let mut slot = vec![usize::MAX; mol.atom_count()];
    for (k, &i) in heavy.iter().enumerate() {
        slot[i] = k;
    }
    let mut ids: Vec<u64> = heavy
        .iter()
        .map(|&i| {
            let a = mol.atom(i);
            hash_words(
                seed,
                &[
                    a.element.atomic_number() as u64,
                    (a.formal_charge as i64) as u64,
                    a.aromatic as u64,
                    mol.heavy_degree(i) as u64,
                    mol.total_hydrogens(i) as u64,
                ],
            )
        })
        .collect();
    let mut layers = vec![ids.clone()];
    for r in 1..=radius {
        let next: Vec<u64> = heavy
            .iter()
            .map(|&i| {
                let mut env: Vec<(u64, u64)> = mol
                    .neighbors(i)
                    .filter(|&(j, _)| slot[j] != usize::MAX)
                    .map(|(j, b)| (b.order.code() as u64, ids[slot[j]]))
                    .collect();
                env.sort_unstable();
                let mut words = vec![r as u64, ids[slot[i]]];
                words.extend(env.into_iter().flat_map(|(o, id)| [o, id]));
                hash_words(seed, &words)
            })
            .collect();
        ids = next;
        layers.push(ids.clone());
    }
    layers
}

/// Fingerprint of the largest fragment of `mol`.
pub fn circular_fingerprint(mol: &Molecule, cfg: &FingerprintConfig) -> FingerprintVector {
    let frag = mol.largest_fragment();
    let layers = environment_ids(&frag, cfg.radius, cfg.hash_seed);
    FingerprintVector::from_bits(
        *cfg,
        layers
            .iter()
            .flatten()
            .map(|&id| (id % cfg.nbits as u64) as usize),
    )
}

/// Fingerprints for many molecules, computed in parallel, in input order.
pub fn fingerprint_batch(mols: &[Molecule], cfg: &FingerprintConfig) -> Vec<FingerprintVector> {
    mols.par_iter()
        .map(|m| circular_fingerprint(m, cfg))
        .collect()
}
