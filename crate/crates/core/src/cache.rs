//! Bounded LRU cache of kernel rows.

use std::collections::{BTreeMap, HashMap};

use crate::error::Result;

struct Entry {
    row: Vec<f64>,
    stamp: u64,
}

/// Caches fixed-length kernel rows keyed by row index, evicting the least
/// recently used row once `capacity_bytes` would be exceeded.
///
/// A capacity smaller than one row disables caching.
pub struct KernelRowCache {
    capacity_bytes: usize,
    row_len: usize,
    entries: HashMap<usize, Entry>,
    recency: BTreeMap<u64, usize>,
    clock: u64,
    hits: u64,
    misses: u64,
}

impl KernelRowCache {
    pub fn new(capacity_bytes: usize, row_len: usize) -> Self {
        KernelRowCache {
            capacity_bytes,
            row_len,
            entries: HashMap::new(),
            recency: BTreeMap::new(),
            clock: 0,
            hits: 0,
            misses: 0,
        }
    }

    fn row_bytes(&self) -> usize {
        self.row_len.max(1) * std::mem::size_of::<f64>()
    }

    pub fn max_rows(&self) -> usize {
        self.capacity_bytes / self.row_bytes()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn cached_bytes(&self) -> usize {
        self.entries.len() * self.row_bytes()
    }

    pub fn capacity_bytes(&self) -> usize {
        self.capacity_bytes
    }

    pub fn contains(&self, key: usize) -> bool {
        self.entries.contains_key(&key)
    }

    /// (hits, misses) since construction.
    pub fn stats(&self) -> (u64, u64) {
        (self.hits, self.misses)
    }

    /// Returns the cached row for `key`, computing it with `fill` on a miss.
    ///
    /// `fill` receives a zeroed buffer of the configured row length. When
    /// caching is disabled the row is written to `scratch` instead.
    pub fn get_or_fill<'s, F>(&'s mut self, key: usize, scratch: &'s mut Vec<f64>, fill: F) -> Result<&'s [f64]>
    where
        F: FnOnce(&mut [f64]) -> Result<()>,
    {
        self.clock += 1;
        let stamp = self.clock;
        if let Some(e) = self.entries.get_mut(&key) {
            self.hits += 1;
            self.recency.remove(&e.stamp);
            self.recency.insert(stamp, key);
            e.stamp = stamp;
            return Ok(&self.entries[&key].row);
        }
        self.misses += 1;
        if self.max_rows() == 0 {
            scratch.clear();
            scratch.resize(self.row_len, 0.0);
            fill(scratch)?;
            return Ok(scratch);
        }
        let mut row = vec![0.0; self.row_len];
        fill(&mut row)?;
        while self.entries.len() >= self.max_rows() {
            let (&old_stamp, &old_key) = self.recency.iter().next().expect("cache accounting");
            self.recency.remove(&old_stamp);
            self.entries.remove(&old_key);
        }
        self.recency.insert(stamp, key);
        self.entries.insert(key, Entry { row, stamp });
        Ok(&self.entries[&key].row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fill_with(v: f64) -> impl FnOnce(&mut [f64]) -> Result<()> {
        move |row| {
            row.iter_mut().for_each(|x| *x = v);
            Ok(())
        }
    }

    #[test]
    fn evicts_least_recently_used() {
        let mut c = KernelRowCache::new(2 * 4 * 8, 4);
        let mut s = Vec::new();
        c.get_or_fill(1, &mut s, fill_with(1.0)).unwrap();
        c.get_or_fill(2, &mut s, fill_with(2.0)).unwrap();
        // touch 1 so that 2 becomes the eviction candidate
        c.get_or_fill(1, &mut s, fill_with(-1.0)).unwrap();
        c.get_or_fill(3, &mut s, fill_with(3.0)).unwrap();
        assert!(c.contains(1));
        assert!(!c.contains(2));
        assert!(c.contains(3));
        assert!(c.cached_bytes() <= c.capacity_bytes());
        assert_eq!(c.get_or_fill(1, &mut s, fill_with(-1.0)).unwrap(), &[1.0; 4]);
        assert_eq!(c.stats(), (2, 3));
    }

    #[test]
    fn tiny_capacity_disables_caching() {
        let mut c = KernelRowCache::new(10, 4);
        let mut s = Vec::new();
        assert_eq!(c.get_or_fill(0, &mut s, fill_with(5.0)).unwrap(), &[5.0; 4]);
        assert!(c.is_empty());
    }

    #[test]
    fn fill_error_leaves_cache_untouched() {
        let mut c = KernelRowCache::new(1 << 20, 4);
        let mut s = Vec::new();
        let r = c.get_or_fill(0, &mut s, |_| {
            Err(crate::error::SvmError::InvalidParameter("boom".into()))
        });
        assert!(r.is_err());
        assert!(c.is_empty());
    }
}
