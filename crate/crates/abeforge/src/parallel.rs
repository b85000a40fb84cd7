//! Model enumeration fanned out over a rayon pool.
//!
//! The search tree is split at its first free cell. Each worker explores one
//! subtree and the results are merged in canonical order, so the models and
//! node counts do not depend on the number of workers.

use std::sync::atomic::{AtomicU64, Ordering};

use abeforge_core::enumerate::{Control, NodeBudget, Search, SearchResult};
use abeforge_core::Statement;
use rayon::prelude::*;
use rayon::ThreadPool;

/// A node budget shared by all workers.
#[derive(Debug)]
pub struct SharedBudget {
    limit: Option<u64>,
    used: AtomicU64,
}

impl SharedBudget {
    pub fn new(limit: Option<u64>) -> Self {
        SharedBudget { limit, used: AtomicU64::new(0) }
    }

    pub fn used(&self) -> u64 {
        self.used.load(Ordering::Relaxed)
    }
}

impl Control for &SharedBudget {
    fn tick(&mut self) -> bool {
        let used = self.used.fetch_add(1, Ordering::Relaxed) + 1;
        self.limit.is_none_or(|l| used <= l)
    }
}

pub struct Enumerator {
    pool: Option<ThreadPool>,
    budget: Option<u64>,
}

impl Enumerator {
    /// `threads <= 1` runs everything on the calling thread.
    pub fn new(threads: usize, budget: Option<u64>) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = if threads > 1 {
            Some(rayon::ThreadPoolBuilder::new().num_threads(threads).build()?)
        } else {
            None
        };
        Ok(Enumerator { pool, budget })
    }

    pub fn threads(&self) -> usize {
        self.pool.as_ref().map_or(1, |p| p.current_num_threads())
    }

    /// All models of size `n`, one per isomorphism class. The budget applies
    /// to this size alone.
    pub fn run(&self, axioms: &[Statement], n: usize) -> SearchResult {
        let search = Search::new(axioms, n);
        match &self.pool {
            None => search.run(&mut NodeBudget::new(self.budget)),
            Some(pool) => {
                let budget = SharedBudget::new(self.budget);
                let parts: Vec<SearchResult> = pool.install(|| {
                    search
                        .branches()
                        .into_par_iter()
                        .map(|b| search.run_branch(b, &mut &budget))
                        .collect()
                });
                SearchResult::merge(parts)
            }
        }
    }
}
