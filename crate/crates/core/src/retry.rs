//! Bounded retries with exponential backoff for remote providers.

use std::sync::Arc;
use std::time::Duration;

pub type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;

#[derive(Clone)]
pub struct RetryPolicy {
    pub max_attempts: usize,
    pub initial_backoff: Duration,
    pub sleeper: Sleeper,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 3, initial_backoff: Duration::from_secs(1), sleeper: Arc::new(std::thread::sleep) }
    }
}

impl std::fmt::Debug for RetryPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RetryPolicy")
            .field("max_attempts", &self.max_attempts)
            .field("initial_backoff", &self.initial_backoff)
            .finish()
    }
}

/// Whether a failed attempt may be retried.
pub trait Retryable {
    fn is_transient(&self) -> bool;
}

impl RetryPolicy {
    /// Runs `op` until it succeeds, fails permanently, or attempts run out;
    /// sleeps `initial_backoff * 2^k` before retry `k + 1`.
    pub fn run<T, E: Retryable>(&self, mut op: impl FnMut(usize) -> Result<T, E>) -> Result<T, E> {
        let mut backoff = self.initial_backoff;
        let mut attempt = 1;
        loop {
            match op(attempt) {
                Ok(v) => return Ok(v),
                Err(e) if e.is_transient() && attempt < self.max_attempts.max(1) => {
                    log::warn!("attempt {attempt} failed; retrying in {backoff:?}");
                    (self.sleeper)(backoff);
                    backoff *= 2;
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    #[derive(Debug, PartialEq)]
    struct Flaky(bool);

    impl Retryable for Flaky {
        fn is_transient(&self) -> bool {
            self.0
        }
    }

    fn recording() -> (RetryPolicy, Arc<Mutex<Vec<Duration>>>) {
        let log = Arc::new(Mutex::new(Vec::new()));
        let sink = log.clone();
        let policy = RetryPolicy { sleeper: Arc::new(move |d| sink.lock().unwrap().push(d)), ..RetryPolicy::default() };
        (policy, log)
    }

    #[test]
    fn backoff_doubles_and_gives_up() {
        let (policy, log) = recording();
        let mut calls = 0;
        let r: Result<(), Flaky> = policy.run(|_| {
            calls += 1;
            Err(Flaky(true))
        });
        assert_eq!(r, Err(Flaky(true)));
        assert_eq!(calls, 3);
        assert_eq!(*log.lock().unwrap(), vec![Duration::from_secs(1), Duration::from_secs(2)]);
    }

    #[test]
    fn permanent_errors_not_retried() {
        let (policy, log) = recording();
        let r: Result<(), Flaky> = policy.run(|_| Err(Flaky(false)));
        assert!(r.is_err());
        assert!(log.lock().unwrap().is_empty());
    }

    #[test]
    fn succeeds_after_transient_failure() {
        let (policy, _) = recording();
        let r: Result<usize, Flaky> = policy.run(|a| if a < 2 { Err(Flaky(true)) } else { Ok(a) });
        assert_eq!(r, Ok(2));
    }
}
