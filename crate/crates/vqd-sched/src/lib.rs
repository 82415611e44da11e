//! Discrete time-slice scheduling of a shared pool of QEC decoders across
//! many logical qubits.
//!
//! A workload is a horizon of `L` slices, `N` logical qubits, and `M`
//! decoders (with optional per-slice unavailability). Every qubit accrues
//! one slice of undecoded syndrome backlog per slice it is not assigned a
//! decoder; a T gate scheduled at slice `tau` forces its operand qubits to
//! be fully decoded at slice `tau - 1`. The scheduling question is how
//! large the worst-case backlog must get when `M < N`.
//!
//! The crate provides three schedulers over this model:
//!
//! * [`policy::schedule_rr`] - round-robin baseline with a rotating cursor,
//! * [`policy::schedule_mls`] - most-lagging-slice greedy baseline,
//! * [`coda::coda_schedule`] - gap-incremental constraint solving: for
//!   G = 1, 2, ... build the feasibility model "no qubit's backlog ever
//!   exceeds G" and hand it to a complete search under a time budget; the
//!   first feasible G is minimal (modulo timeouts) and its witness is the
//!   schedule.
//!
//! Supporting machinery: [`workload`] (model, file format, random
//! generation), [`metrics`] (schedule quality reports), [`oracle`]
//! (exhaustive enumeration ground truth for small instances), and [`cli`]
//! (the `vqd-sched` binary: gen / simulate / compare / sweep / oracle).
//!
//! Slices are 1-based (`t` in `1..=L`), qubit and decoder ids 0-based.
//! Everything is deterministic for fixed seeds except where a solver time
//! budget expires, and all published outputs keep timing in dedicated
//! fields so non-timing bytes reproduce exactly.

pub mod cli;
pub mod coda;
pub mod metrics;
pub mod oracle;
pub mod policy;
pub mod workload;

pub use coda::{
    coda_schedule, pigeonhole_floor, stirling_bound, theoretical_search_space, Backend,
    CodaOutcome, CodaSolution, FeasibilityOutcome, GapAttempt, GapModel, SolverConfig, Verdict,
};
pub use metrics::{compare_policies, compute_metrics, MetricsReport, PolicyComparison};
pub use oracle::{brute_force, brute_force_with_cap, OracleResult};
pub use policy::{
    check_schedule, derive_backlog, schedule_mls, schedule_rr, AllocationMap, BacklogTrace,
    ScheduleViolation,
};
pub use workload::{
    generate_workload, parse_workload, serialize_workload, Workload, WorkloadError,
    WorkloadGenSpec,
};
