//! Prime enumeration and smallest-prime-factor tables.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Default sieve limit for experiments.
pub const DEFAULT_LIMIT: u64 = 10_000_000;

/// Largest limit accepted unless a caller raises it explicitly.
pub const MAX_LIMIT: u64 = 100_000_000;

const CACHE_MAGIC: &[u8; 8] = b"ADDSPF\0\0";
const CACHE_VERSION: u32 = 1;

fn check_limit(limit: u64, bound: u64) -> Result<()> {
    if limit < 2 {
        return Err(Error::EmptyTable(limit));
    }
    // spf entries are u32
    let bound = bound.min(u32::MAX as u64 - 1);
    if limit > bound {
        return Err(Error::Capacity {
            requested: limit,
            bound,
        });
    }
    Ok(())
}

/// All primes up to `limit`, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u32>,
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// Number of primes `<= x` (x may be below the limit).
    pub fn count_upto(&self, x: u64) -> usize {
        self.primes.partition_point(|&p| (p as u64) <= x)
    }

    /// The primes `<= x`.
    pub fn upto(&self, x: u64) -> &[u32] {
        &self.primes[..self.count_upto(x)]
    }
}

/// Smallest prime factor for every `2 <= n <= limit`.
///
/// Entries 0 and 1 are stored as 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorTable {
    limit: u64,
    spf: Vec<u32>,
}

impl FactorTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Smallest prime factor of `n`; panics if `n` is outside `2..=limit`.
    #[inline]
    pub fn spf(&self, n: u64) -> u32 {
        assert!(n >= 2 && n <= self.limit, "n = {n} outside the table");
        self.spf[n as usize]
    }

    pub fn raw(&self) -> &[u32] {
        &self.spf
    }

    pub fn is_prime(&self, n: u64) -> bool {
        n >= 2 && n <= self.limit && self.spf[n as usize] as u64 == n
    }

    /// Distinct prime factors of `n`, ascending.
    pub fn distinct_prime_factors(&self, mut n: u64) -> Vec<u32> {
        let mut out = Vec::new();
        while n > 1 {
            let p = self.spf(n);
            out.push(p);
            while n % p as u64 == 0 {
                n /= p as u64;
            }
        }
        out
    }

    /// Extracts the prime table (the `n` with `spf[n] = n`).
    pub fn primes(&self) -> PrimeTable {
        let primes = (2..=self.limit as usize)
            .filter(|&n| self.spf[n] as usize == n)
            .map(|n| n as u32)
            .collect();
        PrimeTable {
            limit: self.limit,
            primes,
        }
    }

    /// Writes the table as magic, version, limit and little-endian entries.
    pub fn save(&self, path: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::Cache(format!("{}: {e}", path.display()));
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        w.write_all(CACHE_MAGIC).map_err(io)?;
        w.write_all(&CACHE_VERSION.to_le_bytes()).map_err(io)?;
        w.write_all(&self.limit.to_le_bytes()).map_err(io)?;
        for &e in &self.spf {
            w.write_all(&e.to_le_bytes()).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// Reads a table written by [`FactorTable::save`]; any mismatch in the
    /// header or length is an error.
    pub fn load(path: &Path, expected_limit: u64) -> Result<Self> {
        let io = |e: std::io::Error| Error::Cache(format!("{}: {e}", path.display()));
        let mut r = BufReader::new(File::open(path).map_err(io)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::Cache("bad magic".into()));
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word).map_err(io)?;
        if u32::from_le_bytes(word) != CACHE_VERSION {
            return Err(Error::Cache("unsupported version".into()));
        }
        let mut long = [0u8; 8];
        r.read_exact(&mut long).map_err(io)?;
        let limit = u64::from_le_bytes(long);
        if limit != expected_limit {
            return Err(Error::Cache(format!(
                "limit mismatch: file has {limit}, wanted {expected_limit}"
            )));
        }
        let len = limit as usize + 1;
        let mut bytes = Vec::with_capacity(len * 4);
        r.read_to_end(&mut bytes).map_err(io)?;
        if bytes.len() != len * 4 {
            return Err(Error::Cache("truncated table".into()));
        }
        let spf = bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(FactorTable { limit, spf })
    }
}

/// Linear (Euler) sieve producing the smallest-prime-factor table.
pub fn spf_table(limit: u64) -> Result<FactorTable> {
    spf_table_bounded(limit, MAX_LIMIT)
}

pub fn spf_table_bounded(limit: u64, bound: u64) -> Result<FactorTable> {
    check_limit(limit, bound)?;
    let n = limit as usize;
    let mut spf = vec![0u32; n + 1];
    let mut primes: Vec<u32> = Vec::with_capacity(estimate_prime_count(limit));
    for i in 2..=n {
        if spf[i] == 0 {
            spf[i] = i as u32;
            primes.push(i as u32);
        }
        let si = spf[i];
        for &p in &primes {
            if p > si {
                break;
            }
            let m = i * p as usize;
            if m > n {
                break;
            }
            spf[m] = p;
        }
    }
    Ok(FactorTable { limit, spf })
}

/// Sieve of Eratosthenes over odd numbers.
pub fn sieve_primes(limit: u64) -> Result<PrimeTable> {
    sieve_primes_bounded(limit, MAX_LIMIT)
}

pub fn sieve_primes_bounded(limit: u64, bound: u64) -> Result<PrimeTable> {
    check_limit(limit, bound)?;
    let n = limit as usize;
    // index i <-> odd number 2i+1
    let mut composite = vec![false; n / 2 + 1];
    let mut i = 1usize;
    while (2 * i + 1) * (2 * i + 1) <= n {
        if !composite[i] {
            let p = 2 * i + 1;
            let mut m = p * p;
            while m <= n {
                composite[m / 2] = true;
                m += 2 * p;
            }
        }
        i += 1;
    }
    let mut primes = Vec::with_capacity(estimate_prime_count(limit));
    primes.push(2u32);
    primes.extend(
        (1..composite.len())
            .filter(|&i| !composite[i] && 2 * i + 1 <= n)
            .map(|i| (2 * i + 1) as u32),
    );
    Ok(PrimeTable { limit, primes })
}

fn estimate_prime_count(limit: u64) -> usize {
    let x = limit as f64;
    if x < 17.0 {
        8
    } else {
        (1.26 * x / x.ln()) as usize
    }
}

/// Both tables for one limit. Immutable once built and `Sync`.
#[derive(Debug, Clone)]
pub struct Sieve {
    factors: FactorTable,
    primes: PrimeTable,
}

impl Sieve {
    pub fn new(limit: u64) -> Result<Self> {
        let factors = spf_table(limit)?;
        let primes = factors.primes();
        Ok(Self { factors, primes })
    }

    /// Like [`Sieve::new`] but reuses a cache file in `dir` when present,
    /// writing one otherwise. A corrupt or mismatched file is rebuilt.
    pub fn with_cache(limit: u64, dir: &Path) -> Result<Self> {
        let path = cache_path(dir, limit);
        let factors = match FactorTable::load(&path, limit) {
            Ok(t) => t,
            Err(_) => {
                let t = spf_table(limit)?;
                // cache write failures are not fatal
                let _ = std::fs::create_dir_all(dir).and_then(|_| {
                    t.save(&path)
                        .map_err(std::io::Error::other)
                });
                t
            }
        };
        let primes = factors.primes();
        Ok(Self { factors, primes })
    }

    pub fn limit(&self) -> u64 {
        self.factors.limit
    }

    pub fn factors(&self) -> &FactorTable {
        &self.factors
    }

    pub fn primes(&self) -> &PrimeTable {
        &self.primes
    }

    pub fn check(&self, x: u64) -> Result<()> {
        if x > self.limit() {
            return Err(Error::Capacity {
                requested: x,
                bound: self.limit(),
            });
        }
        if x < 2 {
            return Err(Error::EmptyTable(x));
        }
        Ok(())
    }
}

pub fn cache_path(dir: &Path, limit: u64) -> PathBuf {
    dir.join(format!("spf-{limit}.bin"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_prime_trial(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= n {
            if n % d == 0 {
                return false;
            }
            d += 1;
        }
        true
    }

    fn smallest_factor_trial(n: u64) -> u64 {
        let mut d = 2;
        while d * d <= n {
            if n % d == 0 {
                return d;
            }
            d += 1;
        }
        n
    }

    #[test]
    fn primes_up_to_ten() {
        assert_eq!(sieve_primes(10).unwrap().primes(), &[2, 3, 5, 7]);
        assert_eq!(sieve_primes(2).unwrap().primes(), &[2]);
        assert_eq!(sieve_primes(3).unwrap().primes(), &[2, 3]);
    }

    #[test]
    fn prime_count_matches_trial_division() {
        let t = sieve_primes(100).unwrap();
        assert_eq!(t.len(), 25);
        let oracle: Vec<u32> = (2..=20_000u64)
            .filter(|&n| is_prime_trial(n))
            .map(|n| n as u32)
            .collect();
        assert_eq!(sieve_primes(20_000).unwrap().primes(), &oracle[..]);
    }

    #[test]
    fn prime_count_one_million() {
        // pi(10^6) from a one-off trial-division run
        assert_eq!(sieve_primes(1_000_000).unwrap().len(), 78_498);
        assert_eq!(spf_table(1_000_000).unwrap().primes().len(), 78_498);
    }

    #[test]
    fn spf_examples() {
        let t = spf_table(100).unwrap();
        assert_eq!(t.spf(12), 2);
        assert_eq!(t.spf(49), 7);
        assert_eq!(t.spf(97), 97);
        assert_eq!(t.distinct_prime_factors(60), vec![2, 3, 5]);
        assert_eq!(t.distinct_prime_factors(64), vec![2]);
    }

    #[test]
    fn spf_agrees_with_trial_division() {
        let t = spf_table(10_000).unwrap();
        for n in 2..=10_000u64 {
            assert_eq!(t.spf(n) as u64, smallest_factor_trial(n), "n = {n}");
        }
    }

    #[test]
    fn spf_invariants() {
        let t = spf_table(50_000).unwrap();
        let mut prime_count = 0;
        for n in 2..=50_000u64 {
            let p = t.spf(n) as u64;
            assert_eq!(n % p, 0);
            assert!(t.is_prime(p));
            let rest = n / p;
            if rest > 1 {
                assert!(t.spf(rest) as u64 >= p);
            }
            if p == n {
                prime_count += 1;
            }
        }
        assert_eq!(prime_count, sieve_primes(50_000).unwrap().len());
    }

    #[test]
    fn limit_errors() {
        assert_eq!(sieve_primes(1), Err(Error::EmptyTable(1)));
        assert!(matches!(spf_table(0), Err(Error::EmptyTable(0))));
        assert!(matches!(
            sieve_primes(MAX_LIMIT + 1),
            Err(Error::Capacity { .. })
        ));
        assert!(matches!(
            spf_table_bounded(1000, 999),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn cache_round_trip_is_invisible() {
        let dir = std::env::temp_dir().join(format!("spf-cache-test-{}", std::process::id()));
        let fresh = Sieve::new(5_000).unwrap();
        let first = Sieve::with_cache(5_000, &dir).unwrap();
        let second = Sieve::with_cache(5_000, &dir).unwrap();
        assert_eq!(fresh.factors(), first.factors());
        assert_eq!(fresh.factors(), second.factors());
        assert_eq!(fresh.primes(), second.primes());
        // wrong limit in the file name slot is rejected, not misread
        assert!(FactorTable::load(&cache_path(&dir, 5_000), 4_000).is_err());
        std::fs::write(cache_path(&dir, 5_000), b"garbage").unwrap();
        let rebuilt = Sieve::with_cache(5_000, &dir).unwrap();
        assert_eq!(fresh.factors(), rebuilt.factors());
        let _ = std::fs::remove_dir_all(&dir);
    }
}
