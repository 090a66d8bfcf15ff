//! Flat-file cache for capacity solves.
//!
//! One JSON record per key, named by the SHA-256 of the canonical key string.
//! Writes go to a temporary file in the cache directory and are renamed into
//! place, so concurrent writers can at worst duplicate work, never tear a
//! record. Records from other solver versions are ignored and recomputed.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Bumped whenever the discretization or solver changes in a way that alters
/// computed values; cached records from other versions are recomputed.
pub const SOLVER_VERSION: &str = "1";

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Canonical identity of one capacity solve at one resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheKey {
    /// Canonical JSON of the target set.
    pub set: String,
    pub q: f64,
    pub h: f64,
    pub support_radius: f64,
    pub solver_version: String,
}

impl CacheKey {
    pub fn new(set_canonical: String, q: f64, h: f64, support_radius: f64) -> CacheKey {
        CacheKey {
            set: set_canonical,
            q,
            h,
            support_radius,
            solver_version: SOLVER_VERSION.to_string(),
        }
    }

    /// SHA-256 over the canonical rendering of all key fields.
    pub fn hash_hex(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.set.as_bytes());
        hasher.update(format!(
            "|q={}|h={}|R={}|v={}",
            self.q, self.h, self.support_radius, self.solver_version
        ));
        crate::util::hex_string(&hasher.finalize())
    }
}

/// One cached single-resolution solve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CachedLevel {
    pub key: CacheKey,
    pub value: f64,
    pub mask_nodes: usize,
    pub iterations: usize,
    pub final_rel_decrease: f64,
    pub converged: bool,
    pub feasible: bool,
    pub delta: f64,
    pub stage_energies: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct CapacityCache {
    dir: PathBuf,
}

impl CapacityCache {
    pub fn new(dir: impl AsRef<Path>) -> Result<CapacityCache> {
        std::fs::create_dir_all(dir.as_ref())?;
        Ok(CapacityCache { dir: dir.as_ref().to_path_buf() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(format!("{}.json", key.hash_hex()))
    }

    /// Look the key up; on a miss (or a stale/corrupt record) run `compute`,
    /// store the result atomically, and return it. The boolean reports a hit.
    pub fn get_or_compute(
        &self,
        key: &CacheKey,
        compute: impl FnOnce() -> Result<CachedLevel>,
    ) -> Result<(CachedLevel, bool)> {
        let path = self.path_for(key);
        if let Ok(bytes) = std::fs::read(&path) {
            match serde_json::from_slice::<CachedLevel>(&bytes) {
                Ok(rec) if rec.key == *key => return Ok((rec, true)),
                Ok(_) => {} // different key or version under the same name: recompute
                Err(e) => {
                    eprintln!(
                        "warning: ignoring corrupt cache entry {} ({e})",
                        path.display()
                    );
                }
            }
        }
        let rec = compute()?;
        self.store(&path, &rec)?;
        Ok((rec, false))
    }

    fn store(&self, path: &Path, rec: &CachedLevel) -> Result<()> {
        let tmp = self.dir.join(format!(
            ".tmp-{}-{}",
            std::process::id(),
            TEMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        std::fs::write(&tmp, serde_json::to_vec_pretty(rec)?)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;

    fn level(key: &CacheKey, value: f64) -> CachedLevel {
        CachedLevel {
            key: key.clone(),
            value,
            mask_nodes: 3,
            iterations: 10,
            final_rel_decrease: 1e-9,
            converged: true,
            feasible: true,
            delta: 0.1,
            stage_energies: vec![value],
        }
    }

    #[test]
    fn cold_then_warm() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CapacityCache::new(dir.path()).unwrap();
        let key = CacheKey::new("{\"ball\":{}}".into(), 1.5, 0.25, 2.0);
        let calls = AtomicUsize::new(0);
        let (a, hit_a) = cache
            .get_or_compute(&key, || {
                calls.fetch_add(1, Ordering::SeqCst);
                Ok(level(&key, 1.25))
            })
            .unwrap();
        let (b, hit_b) = cache
            .get_or_compute(&key, || {
                calls.fetch_add(1, Ordering::SeqCst);
                Ok(level(&key, 9.99))
            })
            .unwrap();
        assert!(!hit_a && hit_b);
        assert_eq!(calls.load(Ordering::SeqCst), 1);
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn version_mismatch_recomputes() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CapacityCache::new(dir.path()).unwrap();
        let key = CacheKey::new("set".into(), 1.5, 0.25, 2.0);
        let mut stale = key.clone();
        stale.solver_version = "0-obsolete".into();
        // plant a record under the same file name but with a stale version
        let path = dir.path().join(format!("{}.json", key.hash_hex()));
        std::fs::write(&path, serde_json::to_vec(&level(&stale, 7.0)).unwrap()).unwrap();
        let (rec, hit) = cache.get_or_compute(&key, || Ok(level(&key, 2.0))).unwrap();
        assert!(!hit);
        assert_eq!(rec.value, 2.0);
    }

    #[test]
    fn corrupt_entry_recovered() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CapacityCache::new(dir.path()).unwrap();
        let key = CacheKey::new("set".into(), 1.5, 0.25, 2.0);
        std::fs::write(cache.path_for(&key), b"{ not json").unwrap();
        let (rec, hit) = cache.get_or_compute(&key, || Ok(level(&key, 3.5))).unwrap();
        assert!(!hit);
        assert_eq!(rec.value, 3.5);
        // and the repaired record is served afterwards
        let (rec2, hit2) = cache.get_or_compute(&key, || Ok(level(&key, 0.0))).unwrap();
        assert!(hit2);
        assert_eq!(rec2.value, 3.5);
    }

    #[test]
    fn concurrent_same_key_no_torn_files() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CapacityCache::new(dir.path()).unwrap();
        let key = CacheKey::new("set".into(), 1.5, 0.25, 2.0);
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| {
                    let (rec, _) = cache
                        .get_or_compute(&key, || Ok(level(&key, 4.25)))
                        .unwrap();
                    assert_eq!(rec.value, 4.25);
                });
            }
        });
        let (rec, hit) = cache.get_or_compute(&key, || Ok(level(&key, -1.0))).unwrap();
        assert!(hit);
        assert_eq!(rec.value, 4.25);
    }
}
