//! Complete chronological backtracking over slices.
//!
//! The backlog bound turns into deadlines: a qubit last decoded at slice s
//! (s = 0 for "never") violates U <= G first at slice s + G + 2, so it
//! must be decoded again by slice s + G + 1; deadlines past L - 1 never
//! bind because the violation would fall outside the horizon. Each node
//! decides one slice: serve every forced qubit (T-gate pins for the next
//! slice, deadlines due now), then fill the remaining capacity with
//! deadline-carrying qubits in most-urgent-deadline order (the greedy MLS
//! instinct, used here only as branching order). Backtracking walks the
//! remaining subsets, so the procedure is a complete decision procedure,
//! not a heuristic.
//!
//! Two facts keep the restricted branching complete:
//!
//! * serving more never hurts: decoding only postpones deadlines, so any
//!   feasible schedule can be rewritten slice by slice into one that
//!   serves a superset-of-forced set of the same size bound (pointwise
//!   the rewritten state's deadlines are no earlier), and
//! * serving a qubit whose deadline already falls outside the horizon is
//!   a no-op for feasibility: deadlines only move later, so such a qubit
//!   can never develop an obligation again.
//!
//! Hence it suffices to branch over max-size subsets of the qubits that
//! still carry in-horizon deadlines. Infeasibility is detected early by a
//! demand/capacity window check: pins in [t, t'] plus deadline services
//! not covered by those pins must fit the available decoder slots of
//! [t, t']; with t' = t this subsumes the forced-overload check.
//!
//! Decoder identity is collapsed throughout; the witness materializes
//! available decoder ids ascending onto each slice's served qubits.

use std::time::Instant;

use super::{GapModel, SearchStats, Verdict};
use crate::policy::AllocationMap;
use crate::workload::Workload;

/// Slice-subset iterator: all k-element index subsets of 0..n in
/// lexicographic order, starting with {0, 1, .., k-1}. Yields exactly one
/// empty subset when k = 0.
struct Combos {
    n: usize,
    k: usize,
    idx: Vec<usize>,
    started: bool,
}

impl Combos {
    fn new(n: usize, k: usize) -> Self {
        debug_assert!(k <= n);
        Combos {
            n,
            k,
            idx: (0..k).collect(),
            started: false,
        }
    }

    fn next(&mut self) -> Option<&[usize]> {
        if !self.started {
            self.started = true;
            return Some(&self.idx);
        }
        let mut i = self.k;
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            if self.idx[i] != i + self.n - self.k {
                self.idx[i] += 1;
                for j in i + 1..self.k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                return Some(&self.idx);
            }
        }
    }
}

enum Outcome {
    Found,
    Exhausted,
    TimedOut,
}

struct Search<'w> {
    w: &'w Workload,
    gap: usize,
    l: usize,
    /// Last slice a qubit's deadline can occupy; later deadlines never bind.
    horizon: usize,
    cap: Vec<usize>,
    /// cap_prefix[t] = total capacity of slices 1..=t.
    cap_prefix: Vec<usize>,
    /// pins[t - 1]: qubits that must be decoded at slice t, ascending.
    pins: Vec<Vec<usize>>,
    pin_prefix: Vec<usize>,
    /// pin_slices[q]: slices at which q is pinned, ascending.
    pin_slices: Vec<Vec<usize>>,
    /// last[q]: most recent slice q was decoded, 0 for never.
    last: Vec<usize>,
    /// serving[t - 1]: chosen decode set per decided slice.
    serving: Vec<Vec<usize>>,
    deadline: Instant,
    nodes: u64,
    conflicts: u64,
}

pub(super) fn solve(model: &GapModel, deadline: Instant) -> (Verdict, SearchStats) {
    let w = model.workload();
    let (n, l) = (w.num_qubits(), w.num_slices());
    let cap: Vec<usize> = (1..=l).map(|t| w.capacity(t)).collect();
    let mut cap_prefix = vec![0usize; l + 1];
    let mut pin_prefix = vec![0usize; l + 1];
    let mut pins = vec![Vec::new(); l];
    let mut pin_slices = vec![Vec::new(); n];
    for t in 1..=l {
        let pinned: Vec<usize> = w.pins_at(t).collect();
        for &q in &pinned {
            pin_slices[q].push(t);
        }
        cap_prefix[t] = cap_prefix[t - 1] + cap[t - 1];
        pin_prefix[t] = pin_prefix[t - 1] + pinned.len();
        pins[t - 1] = pinned;
    }

    let mut search = Search {
        w,
        gap: model.gap(),
        l,
        horizon: l - 1,
        cap,
        cap_prefix,
        pins,
        pin_prefix,
        pin_slices,
        last: vec![0; n],
        serving: Vec::with_capacity(l),
        deadline,
        nodes: 0,
        conflicts: 0,
    };
    let outcome = search.dfs(1);
    let stats = SearchStats {
        nodes: search.nodes,
        conflicts: search.conflicts,
    };
    let verdict = match outcome {
        Outcome::Found => Verdict::Feasible(search.materialize()),
        Outcome::Exhausted => Verdict::ProvenInfeasible,
        Outcome::TimedOut => Verdict::Timeout,
    };
    (verdict, stats)
}

impl Search<'_> {
    fn due(&self, q: usize) -> usize {
        self.last[q] + self.gap + 1
    }

    /// Whether q must be decoded again somewhere in the horizon.
    fn has_obligation(&self, q: usize) -> bool {
        self.due(q) <= self.horizon
    }

    /// True when q is pinned at some slice in [from, to].
    fn pinned_within(&self, q: usize, from: usize, to: usize) -> bool {
        let slices = &self.pin_slices[q];
        let i = slices.partition_point(|&s| s < from);
        i < slices.len() && slices[i] <= to
    }

    /// Required services in [t, t'] exceed available capacity for some t'.
    fn window_overload(&self, t: usize) -> bool {
        // No deadline can sit past t + gap + 1 (the freshest possible
        // service is at t - 1), so longer windows add capacity but no
        // demand this check can see.
        let far = self.horizon.min(t + self.gap + 1);
        for upto in t..=far {
            let pin_load = self.pin_prefix[upto] - self.pin_prefix[t - 1];
            let mut extra = 0usize;
            for q in 0..self.w.num_qubits() {
                let due = self.due(q);
                if due <= upto && due <= self.horizon && !self.pinned_within(q, t, due) {
                    extra += 1;
                }
            }
            if pin_load + extra > self.cap_prefix[upto] - self.cap_prefix[t - 1] {
                return true;
            }
        }
        false
    }

    fn dfs(&mut self, t: usize) -> Outcome {
        if t > self.l {
            return Outcome::Found;
        }
        self.nodes += 1;
        if Instant::now() >= self.deadline {
            return Outcome::TimedOut;
        }
        if t <= self.horizon && self.window_overload(t) {
            self.conflicts += 1;
            return Outcome::Exhausted;
        }

        let mut forced: Vec<usize> = self.pins[t - 1].clone();
        if t <= self.horizon {
            for q in 0..self.w.num_qubits() {
                debug_assert!(self.due(q) >= t, "a deadline slipped past slice {t}");
                if self.due(q) == t && !forced.contains(&q) {
                    forced.push(q);
                }
            }
        }
        // The window check at t' = t already ruled out forced overload.
        debug_assert!(forced.len() <= self.cap[t - 1]);

        // Pinned qubits sit in `forced` even when their deadline is still
        // far out; they must not reappear as fill candidates.
        let mut candidates: Vec<usize> = (0..self.w.num_qubits())
            .filter(|&q| self.has_obligation(q) && self.due(q) > t && !forced.contains(&q))
            .collect();
        candidates.sort_by_key(|&q| (self.due(q), q));
        let fill = (self.cap[t - 1] - forced.len()).min(candidates.len());

        let mut combos = Combos::new(candidates.len(), fill);
        while let Some(pick) = combos.next() {
            let mut serve = forced.clone();
            serve.extend(pick.iter().map(|&i| candidates[i]));
            serve.sort_unstable();
            let saved: Vec<(usize, usize)> = serve.iter().map(|&q| (q, self.last[q])).collect();
            for &q in &serve {
                self.last[q] = t;
            }
            self.serving.push(serve);
            match self.dfs(t + 1) {
                Outcome::Found => return Outcome::Found,
                Outcome::TimedOut => return Outcome::TimedOut,
                Outcome::Exhausted => {}
            }
            self.serving.pop();
            for (q, old) in saved {
                self.last[q] = old;
            }
        }
        self.conflicts += 1;
        Outcome::Exhausted
    }

    fn materialize(&self) -> AllocationMap {
        let mut a = AllocationMap::new(self.l);
        for (i, served) in self.serving.iter().enumerate() {
            let t = i + 1;
            let decoders = self.w.available_decoders(t);
            for (&d, &q) in decoders.iter().zip(served.iter()) {
                a.assign(t, d, q);
            }
        }
        a
    }
}
