//! Exhaustive enumeration ground truth for small instances.
//!
//! The oracle walks every schedule that serves a full subset each slice:
//! exactly min(capacity_t, N) qubits, always including that slice's
//! T-gate pins. Serving a qubit never increases anyone's backlog, so any
//! schedule extends to a full one without getting worse; restricting to
//! full subsets therefore preserves the true minimum feasible gap while
//! giving the counts a fixed, predictable space of
//! prod_t C(N, min(capacity_t, N)) leaves.
//!
//! That product is also the refusal criterion: `brute_force` declines
//! instances whose formula size exceeds a hard cap rather than sampling.
//! The formula deliberately ignores pins (which only shrink the real
//! tree), keeping the refusal decision a function of the instance shape
//! alone; `brute_force_with_cap` overrides the cap when pins are known
//! to collapse the space.
//!
//! Nothing here shares search logic with the solver: subsets are
//! enumerated lexicographically, backlogs unrolled directly, and the
//! only pruning drops branches whose running maximum already exceeds the
//! requested `g_max` (which cannot affect counts at or below it).

use std::collections::BTreeMap;

use num_bigint::BigUint;
use thiserror::Error;

use crate::coda::binomial;
use crate::policy::AllocationMap;
use crate::workload::Workload;

pub const DEFAULT_LEAF_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error(
        "enumeration space has {leaves} leaves, over the cap of {cap}; \
         use an explicit cap to force it"
    )]
    TooLarge { leaves: BigUint, cap: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    /// Smallest gap in 1..=g_max some schedule satisfies, if any.
    pub min_feasible_g: Option<usize>,
    /// For each gap in 1..=g_max, how many enumerated schedules keep every
    /// backlog at or below it. Non-decreasing in the gap by construction.
    pub feasible_count_by_g: BTreeMap<usize, BigUint>,
    /// First enumerated schedule achieving the minimum, in lexicographic
    /// subset order, so reruns reproduce it byte for byte.
    pub witness: Option<AllocationMap>,
}

/// Formula size of the enumeration space (pins not deducted).
pub fn enumeration_size(w: &Workload) -> BigUint {
    (1..=w.num_slices())
        .map(|t| binomial(w.num_qubits(), w.capacity(t).min(w.num_qubits())))
        .product()
}

pub fn brute_force(w: &Workload, g_max: usize) -> Result<OracleResult, OracleError> {
    brute_force_with_cap(w, g_max, DEFAULT_LEAF_CAP)
}

pub fn brute_force_with_cap(
    w: &Workload,
    g_max: usize,
    leaf_cap: u64,
) -> Result<OracleResult, OracleError> {
    assert!(g_max >= 1, "gap bounds start at 1");
    let leaves = enumeration_size(w);
    if leaves > BigUint::from(leaf_cap) {
        return Err(OracleError::TooLarge {
            leaves,
            cap: leaf_cap,
        });
    }

    let mut e = Enumerator::new(w, g_max);
    e.dfs(1, 0);

    let l = w.num_slices();
    let mut feasible_count_by_g = BTreeMap::new();
    for g in 1..=g_max {
        let total: u64 = e.hist[..=g.min(l - 1)].iter().sum();
        feasible_count_by_g.insert(g, BigUint::from(total));
    }
    Ok(OracleResult {
        min_feasible_g: e
            .hist
            .iter()
            .position(|&c| c > 0)
            .map(|achieved| achieved.max(1)),
        feasible_count_by_g,
        witness: e.witness,
    })
}

struct Enumerator<'w> {
    w: &'w Workload,
    n: usize,
    l: usize,
    g_cap: usize,
    /// Per slice: pinned qubits, the remaining free pool, and how many of
    /// the pool to take so the subset is exactly full.
    pins: Vec<Vec<usize>>,
    free: Vec<Vec<usize>>,
    take: Vec<usize>,
    /// Per-level scratch, preallocated once: combination indices into the
    /// free pool, the served subset, and the backlog entering each slice.
    idx: Vec<Vec<usize>>,
    served: Vec<Vec<usize>>,
    backlog: Vec<Vec<usize>>,
    /// hist[b] counts leaves whose maximum backlog is exactly b.
    hist: Vec<u64>,
    best: Option<usize>,
    witness: Option<AllocationMap>,
}

impl<'w> Enumerator<'w> {
    fn new(w: &'w Workload, g_cap: usize) -> Self {
        let (n, l) = (w.num_qubits(), w.num_slices());
        let mut pins = Vec::with_capacity(l);
        let mut free = Vec::with_capacity(l);
        let mut take = Vec::with_capacity(l);
        for t in 1..=l {
            let p: Vec<usize> = w.pins_at(t).collect();
            let f: Vec<usize> = (0..n).filter(|q| !p.contains(q)).collect();
            let full = w.capacity(t).min(n);
            take.push(full - p.len());
            pins.push(p);
            free.push(f);
        }
        Enumerator {
            w,
            n,
            l,
            g_cap,
            pins,
            free,
            take,
            idx: vec![Vec::with_capacity(n); l],
            served: vec![Vec::with_capacity(n); l],
            backlog: vec![vec![0; n]; l + 1],
            hist: vec![0; l],
            best: None,
            witness: None,
        }
    }

    fn dfs(&mut self, t: usize, max_so_far: usize) {
        if t > self.l {
            self.hist[max_so_far] += 1;
            if self.best.map_or(true, |b| max_so_far < b) {
                self.best = Some(max_so_far);
                self.witness = Some(self.materialize());
            }
            return;
        }
        let level = t - 1;
        let r = self.take[level];
        self.idx[level].clear();
        self.idx[level].extend(0..r);
        loop {
            self.served[level].clear();
            let (pins_now, rest) = self.pins.split_at(level + 1);
            let _ = rest;
            self.served[level].extend_from_slice(&pins_now[level]);
            for i in 0..r {
                let pick = self.free[level][self.idx[level][i]];
                self.served[level].push(pick);
            }
            self.served[level].sort_unstable();

            let mut new_max = max_so_far;
            // U entering slice t+1; its final column (t = L) lies past
            // the horizon and never counts toward the maximum.
            let (head, tail) = self.backlog.split_at_mut(t);
            let (prev, next) = (&head[t - 1], &mut tail[0]);
            for q in 0..self.n {
                next[q] = if self.served[level].binary_search(&q).is_ok() {
                    0
                } else {
                    prev[q] + 1
                };
                if t < self.l {
                    new_max = new_max.max(next[q]);
                }
            }
            if new_max <= self.g_cap {
                self.dfs(t + 1, new_max);
            }
            if !next_combination(&mut self.idx[level], self.free[level].len()) {
                return;
            }
        }
    }

    fn materialize(&self) -> AllocationMap {
        let mut a = AllocationMap::new(self.l);
        for t in 1..=self.l {
            let decoders = self.w.available_decoders(t);
            for (&d, &q) in decoders.iter().zip(self.served[t - 1].iter()) {
                a.assign(t, d, q);
            }
        }
        a
    }
}

/// Advances `idx` to the next r-combination of 0..pool in lexicographic
/// order; false once exhausted. The empty combination has no successor.
fn next_combination(idx: &mut [usize], pool: usize) -> bool {
    let r = idx.len();
    let mut i = r;
    while i > 0 {
        i -= 1;
        if idx[i] < pool - (r - i) {
            idx[i] += 1;
            for j in i + 1..r {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
