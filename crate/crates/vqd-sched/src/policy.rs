//! Decoder-to-qubit assignment schedules, the backlog recurrence, the
//! independent constraint checker, and the two baseline policies.
//!
//! Backlog counts slices of syndrome data awaiting decode: U_q(1) = 0 and
//! U_q(t+1) = (1 - y_q(t)) * (U_q(t) + 1), where y_q(t) = 1 iff some
//! decoder is assigned to q at slice t. Decoding is all-or-nothing per
//! slice; one slice of service clears the whole accumulated backlog.
//!
//! Baselines:
//!
//! * round-robin (`schedule_rr`): a cursor rotates over qubit ids and
//!   hands each free decoder to the next unserved qubit. T-gate pins are
//!   satisfied first and do not move the cursor.
//! * most-lagging-slice (`schedule_mls`): after pins, free decoders go to
//!   the qubits with the largest current backlog (ties to the lowest id).
//!
//! Both fill every available decoder slot they can. Neither looks ahead,
//! which is exactly the weakness the gap-incremental solver exploits.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::workload::Workload;

/// Complete assignment of decoders to qubits over a horizon. Per slice,
/// entries are kept sorted by decoder id, so identical schedules compare
/// and serialize identically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationMap {
    slices: Vec<Vec<(usize, usize)>>,
}

impl AllocationMap {
    /// Empty schedule over `num_slices` slices.
    pub fn new(num_slices: usize) -> Self {
        AllocationMap {
            slices: vec![Vec::new(); num_slices],
        }
    }

    pub fn num_slices(&self) -> usize {
        self.slices.len()
    }

    /// Records decoder -> qubit at 1-based `slice`. Panics if the slice is
    /// outside the horizon; id validity is the checker's job, not ours.
    pub fn assign(&mut self, slice: usize, decoder: usize, qubit: usize) {
        let row = &mut self.slices[slice - 1];
        let pos = row.partition_point(|&(d, _)| d < decoder);
        row.insert(pos, (decoder, qubit));
    }

    /// (decoder, qubit) pairs at `slice`, ascending by decoder.
    pub fn assignments(&self, slice: usize) -> &[(usize, usize)] {
        &self.slices[slice - 1]
    }

    /// Every (slice, decoder, qubit) triple in slice order.
    pub fn iter_all(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.slices
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(d, q)| (i + 1, d, q)))
    }

    pub fn total_assignments(&self) -> usize {
        self.slices.iter().map(Vec::len).sum()
    }

    /// Whether qubit `q` receives a decoder at `slice`.
    pub fn decodes(&self, slice: usize, qubit: usize) -> bool {
        self.slices[slice - 1].iter().any(|&(_, q)| q == qubit)
    }
}

/// Backlog values U_q(t) for q in 0..N, t in 1..=L.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BacklogTrace {
    values: Vec<Vec<usize>>,
}

impl BacklogTrace {
    pub fn num_qubits(&self) -> usize {
        self.values.len()
    }

    pub fn num_slices(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn backlog(&self, qubit: usize, slice: usize) -> usize {
        self.values[qubit][slice - 1]
    }

    /// Largest backlog any qubit ever reaches.
    pub fn max(&self) -> usize {
        self.values
            .iter()
            .flat_map(|row| row.iter().copied())
            .max()
            .unwrap_or(0)
    }

    /// Total backlog across qubits at one slice (pending syndrome volume).
    pub fn column_sum(&self, slice: usize) -> usize {
        self.values.iter().map(|row| row[slice - 1]).sum()
    }

    /// Largest `column_sum` over the horizon.
    pub fn peak_column_sum(&self) -> usize {
        (1..=self.num_slices())
            .map(|t| self.column_sum(t))
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleViolation {
    #[error("schedule covers {got} slices but the workload has {expected}")]
    HorizonMismatch { got: usize, expected: usize },
    #[error("decoder {decoder} at slice {slice} is outside 0..{num_decoders}")]
    DecoderOutOfRange {
        decoder: usize,
        slice: usize,
        num_decoders: usize,
    },
    #[error("qubit {qubit} at slice {slice} is outside 0..{num_qubits}")]
    QubitOutOfRange {
        qubit: usize,
        slice: usize,
        num_qubits: usize,
    },
    #[error("decoder {decoder} is assigned at slice {slice} while unavailable")]
    DecoderUnavailable { decoder: usize, slice: usize },
    #[error("decoder {decoder} is assigned twice at slice {slice}")]
    DecoderReused { decoder: usize, slice: usize },
    #[error("qubit {qubit} is decoded by more than one decoder at slice {slice}")]
    QubitReused { qubit: usize, slice: usize },
    #[error("qubit {qubit} feeds a T gate at slice {gate_slice} but is not decoded at slice {}", gate_slice - 1)]
    PrecedenceMissed { qubit: usize, gate_slice: usize },
    #[error("qubit {qubit} reaches backlog {backlog} at slice {slice}, above the gap bound {gap}")]
    BacklogExceeded {
        qubit: usize,
        slice: usize,
        backlog: usize,
        gap: usize,
    },
}

/// Validates the per-slice assignment invariants (ids in range, decoder
/// available, no decoder or qubit used twice in a slice) and, if they
/// hold, unrolls the backlog recurrence.
pub fn derive_backlog(
    w: &Workload,
    a: &AllocationMap,
) -> Result<BacklogTrace, ScheduleViolation> {
    if a.num_slices() != w.num_slices() {
        return Err(ScheduleViolation::HorizonMismatch {
            got: a.num_slices(),
            expected: w.num_slices(),
        });
    }
    for t in 1..=w.num_slices() {
        let mut decoders_seen = BTreeSet::new();
        let mut qubits_seen = BTreeSet::new();
        for &(d, q) in a.assignments(t) {
            if d >= w.num_decoders() {
                return Err(ScheduleViolation::DecoderOutOfRange {
                    decoder: d,
                    slice: t,
                    num_decoders: w.num_decoders(),
                });
            }
            if q >= w.num_qubits() {
                return Err(ScheduleViolation::QubitOutOfRange {
                    qubit: q,
                    slice: t,
                    num_qubits: w.num_qubits(),
                });
            }
            if !w.is_available(d, t) {
                return Err(ScheduleViolation::DecoderUnavailable {
                    decoder: d,
                    slice: t,
                });
            }
            if !decoders_seen.insert(d) {
                return Err(ScheduleViolation::DecoderReused {
                    decoder: d,
                    slice: t,
                });
            }
            if !qubits_seen.insert(q) {
                return Err(ScheduleViolation::QubitReused {
                    qubit: q,
                    slice: t,
                });
            }
        }
    }

    let (n, l) = (w.num_qubits(), w.num_slices());
    let mut values = vec![vec![0usize; l]; n];
    for t in 1..l {
        let decoded: BTreeSet<usize> = a.assignments(t).iter().map(|&(_, q)| q).collect();
        for q in 0..n {
            values[q][t] = if decoded.contains(&q) {
                0
            } else {
                values[q][t - 1] + 1
            };
        }
    }
    Ok(BacklogTrace { values })
}

/// Full constraint check: assignment invariants, T-gate precedence, and
/// (when `gap` is given) the backlog bound. This is the single
/// ground-truth validator; solvers re-check their own witnesses through
/// it rather than being trusted.
pub fn check_schedule(
    w: &Workload,
    a: &AllocationMap,
    gap: Option<usize>,
) -> Result<BacklogTrace, ScheduleViolation> {
    let trace = derive_backlog(w, a)?;
    for (gate_slice, qubits) in w.tgate_entries() {
        for &q in qubits {
            if !a.decodes(gate_slice - 1, q) {
                return Err(ScheduleViolation::PrecedenceMissed {
                    qubit: q,
                    gate_slice,
                });
            }
        }
    }
    if let Some(g) = gap {
        for q in 0..w.num_qubits() {
            for t in 1..=w.num_slices() {
                let backlog = trace.backlog(q, t);
                if backlog > g {
                    return Err(ScheduleViolation::BacklogExceeded {
                        qubit: q,
                        slice: t,
                        backlog,
                        gap: g,
                    });
                }
            }
        }
    }
    Ok(trace)
}

/// Assigns the slice's pinned qubits (operands of next slice's T gates)
/// to the lowest available decoders: ascending qubit id onto ascending
/// decoder id. Returns the pinned qubit set.
fn assign_pins(w: &Workload, a: &mut AllocationMap, t: usize, avail: &[usize]) -> BTreeSet<usize> {
    let pins: BTreeSet<usize> = w.pins_at(t).collect();
    for (&d, &q) in avail.iter().zip(pins.iter()) {
        a.assign(t, d, q);
    }
    pins
}

/// Round-robin baseline. After pins, a cursor walks qubit ids cyclically
/// and each remaining decoder takes the next qubit not already served
/// this slice. The cursor advances just past the last qubit the fill
/// served; pinned service never moves it.
pub fn schedule_rr(w: &Workload) -> AllocationMap {
    let (n, l) = (w.num_qubits(), w.num_slices());
    let mut a = AllocationMap::new(l);
    let mut cursor = 0usize;
    for t in 1..=l {
        let avail = w.available_decoders(t);
        let served = assign_pins(w, &mut a, t, &avail);
        let free = &avail[served.len()..];
        let mut picked = Vec::new();
        for offset in 0..n {
            if picked.len() == free.len() {
                break;
            }
            let q = (cursor + offset) % n;
            if !served.contains(&q) {
                picked.push(q);
            }
        }
        for (&d, &q) in free.iter().zip(picked.iter()) {
            a.assign(t, d, q);
        }
        if let Some(&last) = picked.last() {
            cursor = (last + 1) % n;
        }
    }
    a
}

/// Most-lagging-slice baseline. After pins, remaining decoders go to the
/// unserved qubits with the largest backlog entering the slice, ties to
/// the lowest qubit id.
pub fn schedule_mls(w: &Workload) -> AllocationMap {
    let (n, l) = (w.num_qubits(), w.num_slices());
    let mut a = AllocationMap::new(l);
    let mut backlog = vec![0usize; n];
    for t in 1..=l {
        let avail = w.available_decoders(t);
        let mut served = assign_pins(w, &mut a, t, &avail);
        let free = &avail[served.len()..];
        let mut order: Vec<usize> = (0..n).filter(|q| !served.contains(q)).collect();
        order.sort_by_key(|&q| (std::cmp::Reverse(backlog[q]), q));
        for (&d, &q) in free.iter().zip(order.iter()) {
            a.assign(t, d, q);
            served.insert(q);
        }
        for (q, u) in backlog.iter_mut().enumerate() {
            *u = if served.contains(&q) { 0 } else { *u + 1 };
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{generate_workload, WorkloadGenSpec};

    fn rr_on(n: usize, l: usize, m: usize) -> (Workload, AllocationMap) {
        let w = Workload::uniform("t", n, l, m).unwrap();
        let a = schedule_rr(&w);
        (w, a)
    }

    #[test]
    fn abundant_decoders_keep_backlog_at_zero() {
        let (w, a) = rr_on(3, 5, 3);
        let trace = derive_backlog(&w, &a).unwrap();
        assert_eq!(trace.max(), 0);
        assert_eq!(a.total_assignments(), 15);
    }

    #[test]
    fn never_decoded_qubit_accumulates_linearly() {
        let w = Workload::uniform("idle", 1, 5, 1).unwrap();
        let a = AllocationMap::new(5);
        let trace = derive_backlog(&w, &a).unwrap();
        let got: Vec<usize> = (1..=5).map(|t| trace.backlog(0, t)).collect();
        assert_eq!(got, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn decode_resets_backlog_to_zero() {
        let w = Workload::uniform("reset", 1, 5, 1).unwrap();
        let mut a = AllocationMap::new(5);
        a.assign(4, 0, 0);
        let trace = derive_backlog(&w, &a).unwrap();
        let got: Vec<usize> = (1..=5).map(|t| trace.backlog(0, t)).collect();
        // U(4) = 3 from three unserved slices, then the decode at slice 4
        // zeroes U(5).
        assert_eq!(got, vec![0, 1, 2, 3, 0]);
    }

    #[test]
    fn validation_names_the_offending_triple() {
        let w = Workload::new("v", 3, 4, 2, &[], &[(1, &[2])]).unwrap();

        let mut reuse = AllocationMap::new(4);
        reuse.assign(1, 0, 0);
        reuse.assign(1, 0, 1);
        assert_eq!(
            derive_backlog(&w, &reuse).unwrap_err(),
            ScheduleViolation::DecoderReused {
                decoder: 0,
                slice: 1
            }
        );

        let mut dup = AllocationMap::new(4);
        dup.assign(3, 0, 1);
        dup.assign(3, 1, 1);
        assert_eq!(
            derive_backlog(&w, &dup).unwrap_err(),
            ScheduleViolation::QubitReused { qubit: 1, slice: 3 }
        );

        let mut down = AllocationMap::new(4);
        down.assign(2, 1, 0);
        assert_eq!(
            derive_backlog(&w, &down).unwrap_err(),
            ScheduleViolation::DecoderUnavailable {
                decoder: 1,
                slice: 2
            }
        );

        let mut range = AllocationMap::new(4);
        range.assign(3, 2, 0);
        assert_eq!(
            derive_backlog(&w, &range).unwrap_err(),
            ScheduleViolation::DecoderOutOfRange {
                decoder: 2,
                slice: 3,
                num_decoders: 2
            }
        );

        assert_eq!(
            derive_backlog(&w, &AllocationMap::new(3)).unwrap_err(),
            ScheduleViolation::HorizonMismatch {
                got: 3,
                expected: 4
            }
        );
    }

    #[test]
    fn checker_flags_missed_precedence_and_bound() {
        let w = Workload::new("chk", 2, 4, 1, &[(3, &[1])], &[]).unwrap();
        let mut a = AllocationMap::new(4);
        a.assign(1, 0, 0);
        a.assign(2, 0, 0);
        assert_eq!(
            check_schedule(&w, &a, None).unwrap_err(),
            ScheduleViolation::PrecedenceMissed {
                qubit: 1,
                gate_slice: 3
            }
        );

        let mut b = AllocationMap::new(4);
        b.assign(2, 0, 1);
        // Precedence holds, but qubit 0 is never decoded: U_0(4) = 3.
        check_schedule(&w, &b, None).unwrap();
        assert_eq!(
            check_schedule(&w, &b, Some(2)).unwrap_err(),
            ScheduleViolation::BacklogExceeded {
                qubit: 0,
                slice: 4,
                backlog: 3,
                gap: 2
            }
        );
        check_schedule(&w, &b, Some(3)).unwrap();
    }

    #[test]
    fn rr_alternates_two_qubits_on_one_decoder() {
        let (w, a) = rr_on(2, 4, 1);
        let got: Vec<(usize, usize, usize)> = a.iter_all().collect();
        assert_eq!(got, vec![(1, 0, 0), (2, 0, 1), (3, 0, 0), (4, 0, 1)]);
        assert_eq!(derive_backlog(&w, &a).unwrap().max(), 1);
    }

    #[test]
    fn rr_cycle_backlog_matches_rotation_period() {
        let (w, a) = rr_on(4, 12, 1);
        // Each qubit is served every 4 slices, so backlog tops out at 3.
        assert_eq!(derive_backlog(&w, &a).unwrap().max(), 3);
    }

    #[test]
    fn rr_pins_do_not_advance_the_cursor() {
        let w = Workload::new("pin", 3, 3, 1, &[(2, &[2])], &[]).unwrap();
        let a = schedule_rr(&w);
        // Slice 1 is consumed by the pin on qubit 2; the cursor stays at 0,
        // so slices 2 and 3 serve qubits 0 and 1.
        let got: Vec<(usize, usize, usize)> = a.iter_all().collect();
        assert_eq!(got, vec![(1, 0, 2), (2, 0, 0), (3, 0, 1)]);
    }

    #[test]
    fn rr_skips_qubits_already_pinned_this_slice() {
        let w = Workload::new("pinskip", 3, 2, 2, &[(2, &[0])], &[]).unwrap();
        let a = schedule_rr(&w);
        // Slice 1: pin takes qubit 0 on decoder 0; the fill starts at the
        // cursor (qubit 0), skips it, and serves qubit 1 on decoder 1.
        assert_eq!(a.assignments(1), &[(0, 0), (1, 1)]);
        // Cursor advanced past qubit 1, so slice 2 serves 2 then wraps to 0.
        assert_eq!(a.assignments(2), &[(0, 2), (1, 0)]);
    }

    #[test]
    fn mls_serves_largest_backlog_first() {
        let w = Workload::uniform("mls", 3, 4, 1).unwrap();
        let a = schedule_mls(&w);
        let got: Vec<(usize, usize, usize)> = a.iter_all().collect();
        // Ties break to the lowest id, after which the starved qubits
        // rotate: 0, then 1 and 2 (backlog 1 each), then 0 again.
        assert_eq!(got, vec![(1, 0, 0), (2, 0, 1), (3, 0, 2), (4, 0, 0)]);
        assert_eq!(derive_backlog(&w, &a).unwrap().max(), 2);
    }

    #[test]
    fn mls_priorities_are_recomputed_after_pins() {
        // Capacity is 1 until slice 3, leaving backlogs [1, 0, 2] there.
        // Qubit 2 leads but is pinned anyway (T gate at slice 4), so the
        // free decoder must go to the next laggard, qubit 0, rather than
        // double-serving the pinned leader.
        let w = Workload::new("repin", 3, 4, 2, &[(4, &[2])], &[(1, &[1, 2])]).unwrap();
        let a = schedule_mls(&w);
        assert_eq!(a.assignments(1), &[(0, 0)]);
        assert_eq!(a.assignments(2), &[(0, 1)]);
        assert_eq!(a.assignments(3), &[(0, 2), (1, 0)]);
    }

    #[test]
    fn policies_with_equal_supply_and_demand_coincide() {
        let w = Workload::uniform("eq", 3, 5, 3).unwrap();
        assert_eq!(schedule_rr(&w), schedule_mls(&w));
    }

    #[test]
    fn policies_respect_decoder_outages() {
        let w = Workload::new("out", 4, 6, 2, &[], &[(0, &[2, 3]), (1, &[3])]).unwrap();
        for a in [schedule_rr(&w), schedule_mls(&w)] {
            check_schedule(&w, &a, None).unwrap();
            assert_eq!(a.assignments(3), &[] as &[(usize, usize)]);
            assert_eq!(a.assignments(2).len(), 1);
        }
    }

    #[test]
    fn policies_produce_valid_schedules_on_random_workloads() {
        for seed in 0..25 {
            let w = generate_workload(&WorkloadGenSpec {
                num_qubits: 1 + (seed as usize % 9),
                num_slices: 1 + (seed as usize % 13),
                num_decoders: 1 + (seed as usize % 3),
                tgate_density: 0.2,
                rng_seed: seed,
            })
            .unwrap();
            for a in [schedule_rr(&w), schedule_mls(&w)] {
                let trace = check_schedule(&w, &a, None).unwrap();
                assert!(trace.max() <= w.num_slices().saturating_sub(1));
            }
        }
    }
}
