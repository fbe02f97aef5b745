//! Exhaustive census of n×n sign matrices.
//!
//! Two enumeration modes are provided. `Plain` visits all 2^{n²} matrices.
//! `SymmetryReduced` visits only matrices whose first row and first column
//! are all +1 and scales every tally by 2^{2n−1}, the size of each orbit
//! under independent row and column sign flips. Flips negate the
//! determinant and preserve equality-up-to-sign of rows and columns, so every
//! recorded statistic is orbit invariant.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::det::{det_small, SMALL_DET_MAX_N};
use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::parallel::{chunks, with_threads};
use crate::sign::{has_parallel_pair_bits, low_mask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CensusMode {
    Plain,
    SymmetryReduced,
}

impl CensusMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CensusMode::Plain => "plain",
            CensusMode::SymmetryReduced => "symmetric",
        }
    }

    fn code(&self) -> u8 {
        match self {
            CensusMode::Plain => 0,
            CensusMode::SymmetryReduced => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusRecord {
    pub n: usize,
    pub mode: CensusMode,
    /// 2^{n²}
    pub total: u128,
    pub singular_count: u128,
    pub sum_det_sq: u128,
    /// Matrices with two rows or two columns equal up to sign.
    pub parallel_pair_count: u128,
    pub det_abs_histogram: BTreeMap<u64, u128>,
    pub wall_seconds: f64,
}

impl CensusRecord {
    /// Exact P_n as a reduced fraction.
    pub fn p_n(&self) -> BigRational {
        BigRational::new(BigInt::from(self.singular_count), BigInt::from(self.total))
    }

    /// n!·2^{n²}: E[det²] = n! for i.i.d. ±1 entries.
    pub fn expected_sum_det_sq(n: usize) -> u128 {
        (1..=n as u128).product::<u128>() << (n * n)
    }

    /// Same tallies, ignoring mode and timing.
    pub fn same_counts(&self, other: &CensusRecord) -> bool {
        self.n == other.n
            && self.total == other.total
            && self.singular_count == other.singular_count
            && self.sum_det_sq == other.sum_det_sq
            && self.parallel_pair_count == other.parallel_pair_count
            && self.det_abs_histogram == other.det_abs_histogram
    }

    /// Arithmetic self-checks every completed census must pass.
    pub fn verify(&self) -> Result<()> {
        let expected = Self::expected_sum_det_sq(self.n);
        if self.sum_det_sq != expected {
            return Err(Error::CrossCheck(format!(
                "sum of det^2 is {} but n!·2^(n^2) = {expected}",
                self.sum_det_sq
            )));
        }
        let hist_total: u128 = self.det_abs_histogram.values().sum();
        if hist_total != self.total {
            return Err(Error::CrossCheck(format!(
                "histogram holds {hist_total} matrices, expected {}",
                self.total
            )));
        }
        let zero = self.det_abs_histogram.get(&0).copied().unwrap_or(0);
        if zero != self.singular_count || self.singular_count > self.total {
            return Err(Error::CrossCheck(format!(
                "singular count {} disagrees with histogram zero bin {zero}",
                self.singular_count
            )));
        }
        if self.parallel_pair_count > self.singular_count {
            return Err(Error::CrossCheck("parallel-pair matrices exceed singular ones".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CensusOptions {
    /// Worker threads; 0 uses the global pool.
    pub threads: usize,
    /// Resumable state file, rewritten after every block.
    pub checkpoint: Option<PathBuf>,
    /// Indices per checkpoint block.
    pub checkpoint_every: u64,
    /// Permit the multi-hour n = 7 symmetric census.
    pub allow_n7: bool,
    pub limits: Limits,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions {
            threads: 0,
            checkpoint: None,
            checkpoint_every: 1 << 26,
            allow_n7: false,
            limits: Limits::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Tally {
    singular: u128,
    sum_det_sq: u128,
    parallel_pairs: u128,
    hist: BTreeMap<u64, u128>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.singular += other.singular;
        self.sum_det_sq += other.sum_det_sq;
        self.parallel_pairs += other.parallel_pairs;
        for (k, v) in other.hist {
            *self.hist.entry(k).or_default() += v;
        }
        self
    }
}

const CHUNK: u64 = 1 << 16;

fn index_space(n: usize, mode: CensusMode) -> u64 {
    match mode {
        CensusMode::Plain => 1u64 << (n * n),
        CensusMode::SymmetryReduced => 1u64 << ((n - 1) * (n - 1)),
    }
}

fn orbit_size(n: usize, mode: CensusMode) -> u128 {
    match mode {
        CensusMode::Plain => 1,
        CensusMode::SymmetryReduced => 1u128 << (2 * n - 1),
    }
}

/// Row bit patterns of the matrix with the given enumeration index.
fn decode(n: usize, mode: CensusMode, index: u64, rows: &mut [u64]) {
    match mode {
        CensusMode::Plain => {
            let mask = low_mask(n);
            for (i, r) in rows.iter_mut().enumerate() {
                *r = index >> (i * n) & mask;
            }
        }
        CensusMode::SymmetryReduced => {
            let mask = low_mask(n - 1);
            rows[0] = 0;
            for (i, r) in rows.iter_mut().enumerate().skip(1) {
                *r = (index >> ((i - 1) * (n - 1)) & mask) << 1;
            }
        }
    }
}

fn tally_range(n: usize, mode: CensusMode, lo: u64, hi: u64) -> Tally {
    let mut rows = [0u64; SMALL_DET_MAX_N];
    let rows = &mut rows[..n];
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    let mut t = Tally::default();
    for index in lo..hi {
        decode(n, mode, index, rows);
        let d = det_small(rows, n);
        *counts.entry(d.unsigned_abs()).or_default() += 1;
        if d != 0 {
            t.sum_det_sq += (d as i128 * d as i128) as u128;
        } else if has_parallel_pair_bits(rows) {
            t.parallel_pairs += 1;
        }
    }
    t.singular = counts.get(&0).copied().unwrap_or(0) as u128;
    t.hist = counts.into_iter().map(|(k, v)| (k, v as u128)).collect();
    t
}

pub fn census_plain(n: usize, opts: &CensusOptions) -> Result<CensusRecord> {
    census(n, CensusMode::Plain, opts)
}

pub fn census_symmetric(n: usize, opts: &CensusOptions) -> Result<CensusRecord> {
    census(n, CensusMode::SymmetryReduced, opts)
}

fn check_domain(n: usize, mode: CensusMode, opts: &CensusOptions) -> Result<()> {
    match mode {
        CensusMode::Plain => {
            if n == 0 {
                return Err(Error::InvalidArgument("census needs n ≥ 1".into()));
            }
            let cap = opts.limits.census_plain_max_n.min(7);
            if n > cap {
                return Err(Error::limit("plain census dimension", n, cap));
            }
        }
        CensusMode::SymmetryReduced => {
            if n < 2 {
                return Err(Error::InvalidArgument("symmetric census needs n ≥ 2".into()));
            }
            let cap = if opts.allow_n7 { 7 } else { 6 };
            if n > cap {
                return Err(Error::limit("symmetric census dimension", n, cap));
            }
        }
    }
    Ok(())
}

pub fn census(n: usize, mode: CensusMode, opts: &CensusOptions) -> Result<CensusRecord> {
    check_domain(n, mode, opts)?;
    let started = Instant::now();
    let end = index_space(n, mode);
    let (mut next, mut tally) = match &opts.checkpoint {
        Some(path) if path.exists() => {
            let cp = Checkpoint::read(path)?;
            if cp.n != n || cp.mode != mode {
                return Err(Error::Checkpoint(format!(
                    "{} holds n = {} {} but n = {n} {} was requested",
                    path.display(),
                    cp.n,
                    cp.mode.as_str(),
                    mode.as_str()
                )));
            }
            (cp.next_index.min(end), cp.tally)
        }
        _ => (0, Tally::default()),
    };
    let block = opts.checkpoint_every.max(1);
    while next < end {
        let block_end = end.min(next.saturating_add(block));
        let ranges = chunks(next, block_end, CHUNK);
        let part = with_threads(opts.threads, || {
            ranges
                .par_iter()
                .map(|&(lo, hi)| tally_range(n, mode, lo, hi))
                .reduce(Tally::default, Tally::merge)
        });
        tally = tally.merge(part);
        next = block_end;
        if let Some(path) = &opts.checkpoint {
            Checkpoint {
                n,
                mode,
                next_index: next,
                tally: tally.clone(),
            }
            .write(path)?;
        }
    }
    let orbit = orbit_size(n, mode);
    let record = CensusRecord {
        n,
        mode,
        total: 1u128 << (n * n),
        singular_count: tally.singular * orbit,
        sum_det_sq: tally.sum_det_sq * orbit,
        parallel_pair_count: tally.parallel_pairs * orbit,
        det_abs_histogram: tally.hist.into_iter().map(|(k, v)| (k, v * orbit)).collect(),
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    Ok(record)
}

const CHECKPOINT_VERSION: u8 = 1;

/// Resumable census state. Tallies are in enumeration units (before orbit
/// scaling). Layout, all little-endian:
///
/// ```text
/// u8 version | u8 n | u8 mode | u64 next_index
/// u128 singular | u128 sum_det_sq | u128 parallel_pairs
/// u32 bins | bins × (u64 |det|, u128 count)
/// ```
#[derive(Debug, Clone, PartialEq)]
struct Checkpoint {
    n: usize,
    mode: CensusMode,
    next_index: u64,
    tally: Tally,
}

impl Checkpoint {
    fn encode(&self) -> Vec<u8> {
        let mut out = vec![CHECKPOINT_VERSION, self.n as u8, self.mode.code()];
        out.extend_from_slice(&self.next_index.to_le_bytes());
        out.extend_from_slice(&self.tally.singular.to_le_bytes());
        out.extend_from_slice(&self.tally.sum_det_sq.to_le_bytes());
        out.extend_from_slice(&self.tally.parallel_pairs.to_le_bytes());
        out.extend_from_slice(&(self.tally.hist.len() as u32).to_le_bytes());
        for (k, v) in &self.tally.hist {
            out.extend_from_slice(&k.to_le_bytes());
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    fn decode(mut bytes: &[u8]) -> Result<Self> {
        fn take<const N: usize>(bytes: &mut &[u8]) -> Result<[u8; N]> {
            let mut buf = [0u8; N];
            bytes
                .read_exact(&mut buf)
                .map_err(|_| Error::Checkpoint("truncated file".into()))?;
            Ok(buf)
        }
        let [version, n, mode] = take::<3>(&mut bytes)?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let mode = match mode {
            0 => CensusMode::Plain,
            1 => CensusMode::SymmetryReduced,
            m => return Err(Error::Checkpoint(format!("unknown mode byte {m}"))),
        };
        let next_index = u64::from_le_bytes(take(&mut bytes)?);
        let singular = u128::from_le_bytes(take(&mut bytes)?);
        let sum_det_sq = u128::from_le_bytes(take(&mut bytes)?);
        let parallel_pairs = u128::from_le_bytes(take(&mut bytes)?);
        let bins = u32::from_le_bytes(take(&mut bytes)?);
        let mut hist = BTreeMap::new();
        for _ in 0..bins {
            let k = u64::from_le_bytes(take(&mut bytes)?);
            let v = u128::from_le_bytes(take(&mut bytes)?);
            hist.insert(k, v);
        }
        if !bytes.is_empty() {
            return Err(Error::Checkpoint("trailing bytes".into()));
        }
        Ok(Checkpoint {
            n: n as usize,
            mode,
            next_index,
            tally: Tally {
                singular,
                sum_det_sq,
                parallel_pairs,
                hist,
            },
        })
    }

    fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::decode(&bytes)
    }

    fn write(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        let io = |e: std::io::Error| Error::Checkpoint(format!("{}: {e}", path.display()));
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(&self.encode()).map_err(io)?;
        f.sync_all().map_err(io)?;
        fs::rename(&tmp, path).map_err(io)
    }
}
