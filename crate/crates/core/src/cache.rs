//! In-memory memoization shared by the curation and embedding stages.
//!
//! [`KeyedCache`] gives concurrent readers and single-writer-per-key
//! semantics: concurrent requests for one missing key run the producer once,
//! the others wait for its result. [`InflightLimiter`] bounds how many
//! producer calls run at the same time.

use std::collections::HashMap;
use std::hash::Hash;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};

pub struct KeyedCache<K, V> {
    slots: Mutex<HashMap<K, Arc<Mutex<Option<V>>>>>,
    misses: AtomicUsize,
}

impl<K, V> Default for KeyedCache<K, V> {
    fn default() -> Self {
        Self { slots: Mutex::new(HashMap::new()), misses: AtomicUsize::new(0) }
    }
}

impl<K: Eq + Hash + Clone, V: Clone> KeyedCache<K, V> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &K) -> Option<V> {
        let slot = self.slots.lock().expect("cache poisoned").get(key).cloned()?;
        let value = slot.lock().expect("cache slot poisoned").clone();
        value
    }

    pub fn insert(&self, key: K, value: V) {
        let slot = self.slot(key);
        *slot.lock().expect("cache slot poisoned") = Some(value);
    }

    /// Returns the cached value for `key`, running `produce` at most once per
    /// key across threads. Errors are not cached. The flag is `true` when the
    /// value was already present.
    pub fn get_or_try_insert<E>(&self, key: K, produce: impl FnOnce() -> Result<V, E>) -> Result<(V, bool), E> {
        let slot = self.slot(key);
        let mut guard = slot.lock().expect("cache slot poisoned");
        if let Some(v) = guard.as_ref() {
            return Ok((v.clone(), true));
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let value = produce()?;
        *guard = Some(value.clone());
        Ok((value, false))
    }

    /// Number of times a producer was invoked.
    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        let slots = self.slots.lock().expect("cache poisoned");
        slots.values().filter(|s| s.lock().map(|g| g.is_some()).unwrap_or(false)).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Snapshot of all filled entries, in unspecified order.
    pub fn entries(&self) -> Vec<(K, V)> {
        let slots = self.slots.lock().expect("cache poisoned");
        slots.iter().filter_map(|(k, s)| s.lock().ok().and_then(|g| g.clone()).map(|v| (k.clone(), v))).collect()
    }

    fn slot(&self, key: K) -> Arc<Mutex<Option<V>>> {
        let mut slots = self.slots.lock().expect("cache poisoned");
        slots.entry(key).or_default().clone()
    }
}

/// Counting semaphore for provider rate limits.
pub struct InflightLimiter {
    max: usize,
    current: Mutex<usize>,
    freed: Condvar,
}

pub struct InflightPermit<'a> {
    limiter: &'a InflightLimiter,
}

impl InflightLimiter {
    pub fn new(max: usize) -> Self {
        Self { max: max.max(1), current: Mutex::new(0), freed: Condvar::new() }
    }

    pub fn acquire(&self) -> InflightPermit<'_> {
        let mut current = self.current.lock().expect("limiter poisoned");
        while *current >= self.max {
            current = self.freed.wait(current).expect("limiter poisoned");
        }
        *current += 1;
        InflightPermit { limiter: self }
    }

    pub fn in_flight(&self) -> usize {
        *self.current.lock().expect("limiter poisoned")
    }
}

impl Drop for InflightPermit<'_> {
    fn drop(&mut self) {
        let mut current = self.limiter.current.lock().expect("limiter poisoned");
        *current -= 1;
        self.limiter.freed.notify_one();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;
    use std::thread;
    use std::time::Duration;

    #[test]
    fn concurrent_requests_for_one_key_collapse() {
        let cache: Arc<KeyedCache<u32, u32>> = Arc::new(KeyedCache::new());
        let calls = Arc::new(AtomicUsize::new(0));
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let cache = cache.clone();
                let calls = calls.clone();
                thread::spawn(move || {
                    cache
                        .get_or_try_insert(1, || {
                            calls.fetch_add(1, Ordering::SeqCst);
                            thread::sleep(Duration::from_millis(20));
                            Ok::<_, ()>(42)
                        })
                        .unwrap()
                        .0
                })
            })
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), 42);
        }
        assert_eq!(calls.load(Ordering::SeqCst), 1);
        assert_eq!(cache.misses(), 1);
    }

    #[test]
    fn errors_are_not_cached() {
        let cache: KeyedCache<&str, u32> = KeyedCache::new();
        assert!(cache.get_or_try_insert("k", || Err::<u32, _>("boom")).is_err());
        let (v, hit) = cache.get_or_try_insert("k", || Ok::<_, &str>(3)).unwrap();
        assert_eq!((v, hit), (3, false));
        let (_, hit) = cache.get_or_try_insert("k", || Ok::<_, &str>(4)).unwrap();
        assert!(hit);
    }

    #[test]
    fn limiter_bounds_concurrency() {
        let limiter = Arc::new(InflightLimiter::new(2));
        let peak = Arc::new(AtomicUsize::new(0));
        let handles: Vec<_> = (0..6)
            .map(|_| {
                let limiter = limiter.clone();
                let peak = peak.clone();
                thread::spawn(move || {
                    let _permit = limiter.acquire();
                    peak.fetch_max(limiter.in_flight(), Ordering::SeqCst);
                    thread::sleep(Duration::from_millis(10));
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert!(peak.load(Ordering::SeqCst) <= 2);
        assert_eq!(limiter.in_flight(), 0);
    }
}
