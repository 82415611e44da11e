//! Propositional cross-validation backend.
//!
//! The gap model collapses to per-qubit-slice decode variables y(q, t):
//!
//! * pins become unit clauses y(q, tau - 1),
//! * the backlog bound becomes sliding windows: U_q(t) <= G for t > G + 1
//!   iff q is decoded somewhere in the G + 1 slices before t, an
//!   at-least-one clause per (q, t in G+2..=L),
//! * per-slice capacity becomes an at-most-k constraint over {y(q, t)}_q
//!   (sequential-counter encoding), with k the number of available
//!   decoders; decoder identity is materialized afterwards, ascending.
//!
//! The solver is a plain chronological DPLL with two watched literals and
//! a slice-major, decode-first branching order, which mirrors the
//! complete-search backend's traversal. No clause learning: this backend
//! exists to double-check verdicts on small instances through an
//! independently derived encoding, not to scale.

use std::time::Instant;

use super::{GapModel, SearchStats, Verdict};
use crate::policy::AllocationMap;

type Lit = u32;

fn pos(var: usize) -> Lit {
    (var * 2) as Lit
}

fn neg(var: usize) -> Lit {
    (var * 2 + 1) as Lit
}

fn negate(lit: Lit) -> Lit {
    lit ^ 1
}

fn lit_var(lit: Lit) -> usize {
    (lit >> 1) as usize
}

fn lit_is_pos(lit: Lit) -> bool {
    lit & 1 == 0
}

const UNASSIGNED: u8 = 0;
const TRUE: u8 = 1;
const FALSE: u8 = 2;

struct Cnf {
    num_vars: usize,
    clauses: Vec<Vec<Lit>>,
}

impl Cnf {
    fn new_var(&mut self) -> usize {
        self.num_vars += 1;
        self.num_vars - 1
    }

    fn add(&mut self, clause: Vec<Lit>) {
        self.clauses.push(clause);
    }

    /// Sequential-counter at-most-k over `vars` (Sinz encoding). Counter
    /// register r(i, j) tracks "at least j+1 of the first i+1 are true".
    fn at_most_k(&mut self, vars: &[usize], k: usize) {
        let n = vars.len();
        if k >= n {
            return;
        }
        if k == 0 {
            for &v in vars {
                self.add(vec![neg(v)]);
            }
            return;
        }
        let reg: Vec<Vec<usize>> = (0..n - 1)
            .map(|_| (0..k).map(|_| self.new_var()).collect())
            .collect();
        self.add(vec![neg(vars[0]), pos(reg[0][0])]);
        for j in 1..k {
            self.add(vec![neg(reg[0][j])]);
        }
        for i in 1..n - 1 {
            self.add(vec![neg(vars[i]), pos(reg[i][0])]);
            self.add(vec![neg(reg[i - 1][0]), pos(reg[i][0])]);
            for j in 1..k {
                self.add(vec![
                    neg(vars[i]),
                    neg(reg[i - 1][j - 1]),
                    pos(reg[i][j]),
                ]);
                self.add(vec![neg(reg[i - 1][j]), pos(reg[i][j])]);
            }
            self.add(vec![neg(vars[i]), neg(reg[i - 1][k - 1])]);
        }
        self.add(vec![neg(vars[n - 1]), neg(reg[n - 2][k - 1])]);
    }
}

enum SatOutcome {
    Sat(Vec<u8>),
    Unsat,
    TimedOut,
}

struct Dpll {
    clauses: Vec<Vec<Lit>>,
    /// watches[lit] lists clause indices currently watching `lit`.
    watches: Vec<Vec<u32>>,
    assign: Vec<u8>,
    trail: Vec<Lit>,
    prop_head: usize,
    /// (trail length before the decision, decided literal, both tried).
    decisions: Vec<(usize, Lit, bool)>,
    order: Vec<usize>,
    stats: SearchStats,
}

impl Dpll {
    fn new(cnf: Cnf, order: Vec<usize>) -> Result<Self, ()> {
        let mut solver = Dpll {
            watches: vec![Vec::new(); cnf.num_vars * 2],
            assign: vec![UNASSIGNED; cnf.num_vars],
            trail: Vec::new(),
            prop_head: 0,
            decisions: Vec::new(),
            order,
            clauses: Vec::new(),
            stats: SearchStats::default(),
        };
        let mut units = Vec::new();
        for clause in cnf.clauses {
            debug_assert!(!clause.is_empty());
            match clause.len() {
                1 => units.push(clause[0]),
                _ => {
                    let idx = solver.clauses.len() as u32;
                    solver.watches[clause[0] as usize].push(idx);
                    solver.watches[clause[1] as usize].push(idx);
                    solver.clauses.push(clause);
                }
            }
        }
        for lit in units {
            if !solver.enqueue(lit) {
                return Err(());
            }
        }
        Ok(solver)
    }

    fn value(&self, lit: Lit) -> u8 {
        match self.assign[lit_var(lit)] {
            UNASSIGNED => UNASSIGNED,
            v => {
                if (v == TRUE) == lit_is_pos(lit) {
                    TRUE
                } else {
                    FALSE
                }
            }
        }
    }

    fn enqueue(&mut self, lit: Lit) -> bool {
        match self.value(lit) {
            TRUE => true,
            FALSE => false,
            _ => {
                self.assign[lit_var(lit)] = if lit_is_pos(lit) { TRUE } else { FALSE };
                self.trail.push(lit);
                true
            }
        }
    }

    /// Standard two-watch unit propagation. Returns false on conflict.
    fn propagate(&mut self) -> bool {
        while self.prop_head < self.trail.len() {
            let assigned = self.trail[self.prop_head];
            self.prop_head += 1;
            let falsified = negate(assigned);
            let mut i = 0;
            while i < self.watches[falsified as usize].len() {
                let c_idx = self.watches[falsified as usize][i] as usize;
                // Normalize so position 0 holds the falsified watch.
                if self.clauses[c_idx][1] == falsified {
                    self.clauses[c_idx].swap(0, 1);
                }
                let other = self.clauses[c_idx][1];
                if self.value(other) == TRUE {
                    i += 1;
                    continue;
                }
                let replacement = (2..self.clauses[c_idx].len())
                    .find(|&p| self.value(self.clauses[c_idx][p]) != FALSE);
                match replacement {
                    Some(p) => {
                        self.clauses[c_idx].swap(0, p);
                        let new_watch = self.clauses[c_idx][0];
                        self.watches[new_watch as usize].push(c_idx as u32);
                        self.watches[falsified as usize].swap_remove(i);
                    }
                    None => {
                        if !self.enqueue(other) {
                            return false;
                        }
                        i += 1;
                    }
                }
            }
        }
        true
    }

    fn backtrack(&mut self) -> bool {
        while let Some((trail_len, lit, flipped)) = self.decisions.pop() {
            for &l in &self.trail[trail_len..] {
                self.assign[lit_var(l)] = UNASSIGNED;
            }
            self.trail.truncate(trail_len);
            self.prop_head = trail_len;
            if !flipped {
                self.decisions.push((trail_len, negate(lit), true));
                let ok = self.enqueue(negate(lit));
                debug_assert!(ok);
                return true;
            }
        }
        false
    }

    fn solve(&mut self, deadline: Instant) -> SatOutcome {
        loop {
            if Instant::now() >= deadline {
                return SatOutcome::TimedOut;
            }
            if !self.propagate() {
                self.stats.conflicts += 1;
                if !self.backtrack() {
                    return SatOutcome::Unsat;
                }
                continue;
            }
            let next = self
                .order
                .iter()
                .copied()
                .find(|&v| self.assign[v] == UNASSIGNED);
            match next {
                None => return SatOutcome::Sat(self.assign.clone()),
                Some(v) => {
                    self.stats.nodes += 1;
                    self.decisions.push((self.trail.len(), pos(v), false));
                    let ok = self.enqueue(pos(v));
                    debug_assert!(ok);
                }
            }
        }
    }
}

pub(super) fn solve(model: &GapModel, deadline: Instant) -> (Verdict, SearchStats) {
    let w = model.workload();
    let (n, l, g) = (w.num_qubits(), w.num_slices(), model.gap());
    let y = |q: usize, t: usize| q * l + (t - 1);

    let mut cnf = Cnf {
        num_vars: n * l,
        clauses: Vec::new(),
    };
    for (tau, qubits) in w.tgate_entries() {
        for &q in qubits {
            cnf.add(vec![pos(y(q, tau - 1))]);
        }
    }
    for q in 0..n {
        for t in g + 2..=l {
            cnf.add((t - 1 - g..=t - 1).map(|s| pos(y(q, s))).collect());
        }
    }
    for t in 1..=l {
        let vars: Vec<usize> = (0..n).map(|q| y(q, t)).collect();
        cnf.at_most_k(&vars, w.capacity(t));
    }

    // Decide decode variables slice-major (all qubits of slice 1, then
    // slice 2, ...), auxiliary counter variables only afterwards.
    let mut order: Vec<usize> = Vec::with_capacity(cnf.num_vars);
    for t in 1..=l {
        for q in 0..n {
            order.push(y(q, t));
        }
    }
    order.extend(n * l..cnf.num_vars);

    let mut dpll = match Dpll::new(cnf, order) {
        Ok(d) => d,
        Err(()) => return (Verdict::ProvenInfeasible, SearchStats::default()),
    };
    match dpll.solve(deadline) {
        SatOutcome::Sat(assign) => {
            let mut a = AllocationMap::new(l);
            for t in 1..=l {
                let served: Vec<usize> = (0..n).filter(|&q| assign[y(q, t)] == TRUE).collect();
                let decoders = w.available_decoders(t);
                for (&d, &q) in decoders.iter().zip(served.iter()) {
                    a.assign(t, d, q);
                }
            }
            (Verdict::Feasible(a), dpll.stats)
        }
        SatOutcome::Unsat => (Verdict::ProvenInfeasible, dpll.stats),
        SatOutcome::TimedOut => (Verdict::Timeout, dpll.stats),
    }
}
