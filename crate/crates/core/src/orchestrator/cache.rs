use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};

use crate::codebook::QuantizedBeam;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Counts attempts by one BS to touch state owned by another.
#[derive(Debug, Default, Clone)]
pub struct CrossBsAudit(Arc<AtomicUsize>);

impl CrossBsAudit {
    pub fn violations(&self) -> usize {
        self.0.load(Ordering::SeqCst)
    }

    fn record(&self) {
        self.0.fetch_add(1, Ordering::SeqCst);
    }

    /// Checks that `requester` owns the resource, counting a violation if not.
    pub fn check(&self, requester: usize, owner: usize) -> Result<()> {
        if requester != owner {
            self.record();
            return Err(Error::CrossBsAccess { requester, owner });
        }
        Ok(())
    }
}

/// Per-BS shared interference samples keyed by exact phase configuration.
///
/// Append-only: a lookup returns every sample ever appended under the key,
/// in append order.
#[derive(Debug)]
pub struct MeasurementCache<T> {
    owner: usize,
    samples: RwLock<HashMap<Vec<u16>, Vec<T>>>,
    audit: CrossBsAudit,
}

impl<T: Real> MeasurementCache<T> {
    pub fn new(owner: usize, audit: CrossBsAudit) -> Self {
        Self { owner, samples: RwLock::new(HashMap::new()), audit }
    }

    pub fn owner(&self) -> usize {
        self.owner
    }

    pub fn append(&self, requester: usize, beam: &QuantizedBeam<T>, new: &[T]) -> Result<()> {
        self.append_key(requester, beam.indices(), new)
    }

    pub fn append_key(&self, requester: usize, key: &[u16], new: &[T]) -> Result<()> {
        self.audit.check(requester, self.owner)?;
        let mut map = self.samples.write().expect("cache lock poisoned");
        map.entry(key.to_vec()).or_default().extend_from_slice(new);
        Ok(())
    }

    pub fn lookup(&self, requester: usize, beam: &QuantizedBeam<T>) -> Result<Vec<T>> {
        self.audit.check(requester, self.owner)?;
        let map = self.samples.read().expect("cache lock poisoned");
        Ok(map.get(beam.indices()).cloned().unwrap_or_default())
    }

    pub fn len(&self) -> usize {
        self.samples.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn cache_append<T: Real>(cache: &MeasurementCache<T>, requester: usize, beam: &QuantizedBeam<T>, samples: &[T]) -> Result<()> {
    cache.append(requester, beam, samples)
}

pub fn cache_lookup<T: Real>(cache: &MeasurementCache<T>, requester: usize, beam: &QuantizedBeam<T>) -> Result<Vec<T>> {
    cache.lookup(requester, beam)
}
