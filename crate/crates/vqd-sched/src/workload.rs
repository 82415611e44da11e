//! Workload model: qubits, slices, decoder availability, and T-gate
//! precedence demands, plus the TOML file format and a seeded random
//! generator.
//!
//! A workload is valid only if every T-gate slice is in `2..=L` (a gate at
//! slice 1 has no prior slice in which its operands could be decoded), all
//! qubit/decoder ids are in range, and every gate set fits the decoder
//! capacity of the preceding slice. Construction goes through validation;
//! a `Workload` in hand is always structurally sound.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How many times the generator redraws a slice whose T-gate set exceeds
/// capacity before giving up.
const RESAMPLE_ATTEMPTS: usize = 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("workload file syntax: {0}")]
    Syntax(String),
    #[error("{field} must be at least 1 (got {value})")]
    InvalidDimension { field: &'static str, value: i64 },
    #[error("T-gate slice {slice} is outside 2..={num_slices} (operands must be decodable in a prior slice)")]
    TgateSliceOutOfRange { slice: usize, num_slices: usize },
    #[error("duplicate T-gate record for slice {slice}")]
    DuplicateTgateSlice { slice: usize },
    #[error("qubit {qubit} at slice {slice} is outside 0..{num_qubits}")]
    QubitOutOfRange {
        slice: usize,
        qubit: usize,
        num_qubits: usize,
    },
    #[error("availability record names decoder {decoder}, outside 0..{num_decoders}")]
    DecoderOutOfRange { decoder: usize, num_decoders: usize },
    #[error("duplicate availability record for decoder {decoder}")]
    DuplicateDecoder { decoder: usize },
    #[error("availability slice {slice} for decoder {decoder} is outside 1..={num_slices}")]
    AvailabilitySliceOutOfRange {
        decoder: usize,
        slice: usize,
        num_slices: usize,
    },
    #[error("T gates at slice {slice} need {demand} decoders at slice {}, but only {capacity} are available", slice - 1)]
    StructurallyInfeasible {
        slice: usize,
        demand: usize,
        capacity: usize,
    },
    #[error("tgate_density must be in [0, 1] (got {0})")]
    InvalidDensity(f64),
    #[error(
        "cannot draw a T-gate set within capacity at slice {slice} after {attempts} resamples \
         (density {density} exceeds what {capacity} decoders can absorb for {num_qubits} qubits)"
    )]
    ResampleExhausted {
        slice: usize,
        attempts: usize,
        density: f64,
        capacity: usize,
        num_qubits: usize,
    },
}

/// One scheduling instance. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workload {
    name: String,
    num_qubits: usize,
    num_slices: usize,
    num_decoders: usize,
    /// T-gate slice tau (in 2..=L) -> operand qubits. Only nonempty sets.
    tgates: BTreeMap<usize, BTreeSet<usize>>,
    /// available[d][t-1]: decoder d can be assigned at slice t.
    available: Vec<Vec<bool>>,
}

impl Workload {
    /// Builds and validates a workload from its parts. `tgates` pairs a
    /// slice with operand qubits; `unavailable` pairs a decoder with the
    /// slices it cannot serve (decoders not listed are always available).
    pub fn new(
        name: impl Into<String>,
        num_qubits: usize,
        num_slices: usize,
        num_decoders: usize,
        tgates: &[(usize, &[usize])],
        unavailable: &[(usize, &[usize])],
    ) -> Result<Self, WorkloadError> {
        for (field, value) in [
            ("num_qubits", num_qubits),
            ("num_slices", num_slices),
            ("num_decoders", num_decoders),
        ] {
            if value == 0 {
                return Err(WorkloadError::InvalidDimension { field, value: 0 });
            }
        }

        let mut gate_map: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for &(slice, qubits) in tgates {
            if slice < 2 || slice > num_slices {
                return Err(WorkloadError::TgateSliceOutOfRange { slice, num_slices });
            }
            if gate_map.contains_key(&slice) {
                return Err(WorkloadError::DuplicateTgateSlice { slice });
            }
            let mut set = BTreeSet::new();
            for &qubit in qubits {
                if qubit >= num_qubits {
                    return Err(WorkloadError::QubitOutOfRange {
                        slice,
                        qubit,
                        num_qubits,
                    });
                }
                set.insert(qubit);
            }
            if !set.is_empty() {
                gate_map.insert(slice, set);
            }
        }

        let mut available = vec![vec![true; num_slices]; num_decoders];
        let mut seen = BTreeSet::new();
        for &(decoder, slices) in unavailable {
            if decoder >= num_decoders {
                return Err(WorkloadError::DecoderOutOfRange {
                    decoder,
                    num_decoders,
                });
            }
            if !seen.insert(decoder) {
                return Err(WorkloadError::DuplicateDecoder { decoder });
            }
            for &slice in slices {
                if slice < 1 || slice > num_slices {
                    return Err(WorkloadError::AvailabilitySliceOutOfRange {
                        decoder,
                        slice,
                        num_slices,
                    });
                }
                available[decoder][slice - 1] = false;
            }
        }

        let w = Workload {
            name: name.into(),
            num_qubits,
            num_slices,
            num_decoders,
            tgates: gate_map,
            available,
        };
        for (&slice, qubits) in &w.tgates {
            let capacity = w.capacity(slice - 1);
            if qubits.len() > capacity {
                return Err(WorkloadError::StructurallyInfeasible {
                    slice,
                    demand: qubits.len(),
                    capacity,
                });
            }
        }
        Ok(w)
    }

    /// Workload with no T gates and fully available decoders.
    pub fn uniform(
        name: impl Into<String>,
        num_qubits: usize,
        num_slices: usize,
        num_decoders: usize,
    ) -> Result<Self, WorkloadError> {
        Self::new(name, num_qubits, num_slices, num_decoders, &[], &[])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_slices(&self) -> usize {
        self.num_slices
    }

    pub fn num_decoders(&self) -> usize {
        self.num_decoders
    }

    /// Whether decoder `d` can take an assignment at slice `t` (1-based).
    pub fn is_available(&self, decoder: usize, slice: usize) -> bool {
        self.available[decoder][slice - 1]
    }

    /// Number of decoders available at slice `t`.
    pub fn capacity(&self, slice: usize) -> usize {
        (0..self.num_decoders)
            .filter(|&d| self.available[d][slice - 1])
            .count()
    }

    /// Ascending ids of the decoders available at slice `t`.
    pub fn available_decoders(&self, slice: usize) -> Vec<usize> {
        (0..self.num_decoders)
            .filter(|&d| self.available[d][slice - 1])
            .collect()
    }

    /// Total available decoder-slots over the whole horizon.
    pub fn total_capacity(&self) -> usize {
        (1..=self.num_slices).map(|t| self.capacity(t)).sum()
    }

    /// Operand qubits of the T gates at slice `tau`, empty if none.
    pub fn tgates_at(&self, tau: usize) -> impl Iterator<Item = usize> + '_ {
        self.tgates.get(&tau).into_iter().flatten().copied()
    }

    /// Qubits that must be decoded at slice `t` because a T gate consumes
    /// them at slice `t + 1`.
    pub fn pins_at(&self, slice: usize) -> impl Iterator<Item = usize> + '_ {
        self.tgates_at(slice + 1)
    }

    /// All (slice, operand set) T-gate entries in slice order.
    pub fn tgate_entries(&self) -> impl Iterator<Item = (usize, &BTreeSet<usize>)> {
        self.tgates.iter().map(|(&tau, qs)| (tau, qs))
    }

    pub fn total_tgates(&self) -> usize {
        self.tgates.values().map(BTreeSet::len).sum()
    }
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct WorkloadDoc {
    name: String,
    num_qubits: usize,
    num_slices: usize,
    num_decoders: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    tgates: Vec<TgateRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    availability: Vec<AvailabilityRecord>,
}

#[derive(Serialize, Deserialize)]
struct TgateRecord {
    slice: usize,
    qubits: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct AvailabilityRecord {
    decoder: usize,
    unavailable_slices: Vec<usize>,
}

/// Parses the TOML workload format and validates the result.
pub fn parse_workload(text: &str) -> Result<Workload, WorkloadError> {
    let doc: WorkloadDoc =
        toml::from_str(text).map_err(|e| WorkloadError::Syntax(e.to_string()))?;
    let tgates: Vec<(usize, Vec<usize>)> = doc
        .tgates
        .iter()
        .map(|r| (r.slice, r.qubits.clone()))
        .collect();
    let tgate_refs: Vec<(usize, &[usize])> = tgates
        .iter()
        .map(|(s, qs)| (*s, qs.as_slice()))
        .collect();
    let unavailable: Vec<(usize, Vec<usize>)> = doc
        .availability
        .iter()
        .map(|r| (r.decoder, r.unavailable_slices.clone()))
        .collect();
    let unavailable_refs: Vec<(usize, &[usize])> = unavailable
        .iter()
        .map(|(d, ss)| (*d, ss.as_slice()))
        .collect();
    Workload::new(
        doc.name,
        doc.num_qubits,
        doc.num_slices,
        doc.num_decoders,
        &tgate_refs,
        &unavailable_refs,
    )
}

/// Serializes a workload to the TOML format in canonical order (ascending
/// slices, ascending qubit/decoder ids). `parse_workload` inverts this.
pub fn serialize_workload(w: &Workload) -> String {
    let tgates = w
        .tgate_entries()
        .map(|(slice, qubits)| TgateRecord {
            slice,
            qubits: qubits.iter().copied().collect(),
        })
        .collect();
    let availability = (0..w.num_decoders)
        .filter_map(|decoder| {
            let slices: Vec<usize> = (1..=w.num_slices)
                .filter(|&t| !w.is_available(decoder, t))
                .collect();
            (!slices.is_empty()).then_some(AvailabilityRecord {
                decoder,
                unavailable_slices: slices,
            })
        })
        .collect();
    let doc = WorkloadDoc {
        name: w.name.clone(),
        num_qubits: w.num_qubits,
        num_slices: w.num_slices,
        num_decoders: w.num_decoders,
        tgates,
        availability,
    };
    toml::to_string(&doc).expect("workload doc serializes")
}

// ---------------------------------------------------------------------------
// Random generation
// ---------------------------------------------------------------------------

/// Parameters for `generate_workload`. Each (qubit, slice in 2..=L) pair
/// independently carries a T gate with probability `tgate_density`; slices
/// whose draw exceeds decoder capacity are redrawn wholesale.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadGenSpec {
    pub num_qubits: usize,
    pub num_slices: usize,
    pub num_decoders: usize,
    pub tgate_density: f64,
    pub rng_seed: u64,
}

/// Draws a workload from the spec. Deterministic: the same spec always
/// yields the same workload. Generated decoders are always available, so
/// per-slice capacity is `num_decoders`.
pub fn generate_workload(spec: &WorkloadGenSpec) -> Result<Workload, WorkloadError> {
    for (field, value) in [
        ("num_qubits", spec.num_qubits),
        ("num_slices", spec.num_slices),
        ("num_decoders", spec.num_decoders),
    ] {
        if value == 0 {
            return Err(WorkloadError::InvalidDimension { field, value: 0 });
        }
    }
    if !(0.0..=1.0).contains(&spec.tgate_density) {
        return Err(WorkloadError::InvalidDensity(spec.tgate_density));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let capacity = spec.num_decoders;
    let mut tgates: Vec<(usize, Vec<usize>)> = Vec::new();
    for slice in 2..=spec.num_slices {
        let mut qubits = draw_slice(&mut rng, spec.num_qubits, spec.tgate_density);
        let mut attempts = 0;
        while qubits.len() > capacity {
            attempts += 1;
            if attempts >= RESAMPLE_ATTEMPTS {
                return Err(WorkloadError::ResampleExhausted {
                    slice,
                    attempts,
                    density: spec.tgate_density,
                    capacity,
                    num_qubits: spec.num_qubits,
                });
            }
            qubits = draw_slice(&mut rng, spec.num_qubits, spec.tgate_density);
        }
        if !qubits.is_empty() {
            tgates.push((slice, qubits));
        }
    }

    let name = format!(
        "gen-n{}-l{}-m{}-d{}-s{}",
        spec.num_qubits, spec.num_slices, spec.num_decoders, spec.tgate_density, spec.rng_seed
    );
    let tgate_refs: Vec<(usize, &[usize])> = tgates
        .iter()
        .map(|(s, qs)| (*s, qs.as_slice()))
        .collect();
    Workload::new(
        name,
        spec.num_qubits,
        spec.num_slices,
        spec.num_decoders,
        &tgate_refs,
        &[],
    )
}

fn draw_slice(rng: &mut ChaCha8Rng, num_qubits: usize, density: f64) -> Vec<usize> {
    (0..num_qubits)
        .filter(|_| rng.gen_bool(density))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_parses() {
        let w = parse_workload(
            "name = \"tiny\"\nnum_qubits = 1\nnum_slices = 1\nnum_decoders = 1\n",
        )
        .unwrap();
        assert_eq!(w.num_qubits(), 1);
        assert_eq!(w.num_slices(), 1);
        assert_eq!(w.num_decoders(), 1);
        assert_eq!(w.total_tgates(), 0);
        assert_eq!(w.capacity(1), 1);
    }

    #[test]
    fn tgate_at_slice_one_is_rejected() {
        let err = Workload::new("bad", 2, 4, 1, &[(1, &[0])], &[]).unwrap_err();
        assert_eq!(
            err,
            WorkloadError::TgateSliceOutOfRange {
                slice: 1,
                num_slices: 4
            }
        );
    }

    #[test]
    fn tgate_demand_above_capacity_is_rejected() {
        let err = Workload::new("bad", 6, 8, 3, &[(4, &[0, 1, 2, 3])], &[]).unwrap_err();
        assert_eq!(
            err,
            WorkloadError::StructurallyInfeasible {
                slice: 4,
                demand: 4,
                capacity: 3
            }
        );
    }

    #[test]
    fn capacity_check_uses_the_slice_before_the_gate() {
        // Decoder 2 is down at slice 3, so the gate at slice 4 sees capacity 2.
        let err = Workload::new("bad", 6, 8, 3, &[(4, &[0, 1, 2])], &[(2, &[3])]).unwrap_err();
        assert_eq!(
            err,
            WorkloadError::StructurallyInfeasible {
                slice: 4,
                demand: 3,
                capacity: 2
            }
        );
        // The same demand is fine when the outage is elsewhere.
        Workload::new("ok", 6, 8, 3, &[(4, &[0, 1, 2])], &[(2, &[4])]).unwrap();
    }

    #[test]
    fn out_of_range_ids_are_rejected() {
        assert_eq!(
            Workload::new("bad", 2, 4, 1, &[(3, &[2])], &[]).unwrap_err(),
            WorkloadError::QubitOutOfRange {
                slice: 3,
                qubit: 2,
                num_qubits: 2
            }
        );
        assert_eq!(
            Workload::new("bad", 2, 4, 1, &[], &[(1, &[2])]).unwrap_err(),
            WorkloadError::DecoderOutOfRange {
                decoder: 1,
                num_decoders: 1
            }
        );
        assert_eq!(
            Workload::new("bad", 2, 4, 1, &[], &[(0, &[5])]).unwrap_err(),
            WorkloadError::AvailabilitySliceOutOfRange {
                decoder: 0,
                slice: 5,
                num_slices: 4
            }
        );
        assert_eq!(
            Workload::new("bad", 2, 4, 1, &[(5, &[0])], &[]).unwrap_err(),
            WorkloadError::TgateSliceOutOfRange {
                slice: 5,
                num_slices: 4
            }
        );
    }

    #[test]
    fn duplicate_records_are_rejected() {
        assert_eq!(
            Workload::new("bad", 3, 4, 2, &[(3, &[0]), (3, &[1])], &[]).unwrap_err(),
            WorkloadError::DuplicateTgateSlice { slice: 3 }
        );
        assert_eq!(
            Workload::new("bad", 3, 4, 2, &[], &[(0, &[1]), (0, &[2])]).unwrap_err(),
            WorkloadError::DuplicateDecoder { decoder: 0 }
        );
    }

    #[test]
    fn syntax_error_is_reported_as_syntax() {
        match parse_workload("name = ").unwrap_err() {
            WorkloadError::Syntax(_) => {}
            other => panic!("expected syntax error, got {other:?}"),
        }
        // Well-formed TOML with a missing key is also a syntax-level failure.
        match parse_workload("name = \"x\"").unwrap_err() {
            WorkloadError::Syntax(_) => {}
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_preserves_the_workload() {
        let w = Workload::new(
            "rt",
            6,
            8,
            3,
            &[(4, &[0, 1, 2]), (7, &[5])],
            &[(1, &[2, 5]), (2, &[8])],
        )
        .unwrap();
        let text = serialize_workload(&w);
        let back = parse_workload(&text).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn zero_density_generates_no_tgates() {
        let w = generate_workload(&WorkloadGenSpec {
            num_qubits: 8,
            num_slices: 10,
            num_decoders: 2,
            tgate_density: 0.0,
            rng_seed: 1,
        })
        .unwrap();
        assert_eq!(w.total_tgates(), 0);
    }

    #[test]
    fn generation_is_deterministic_in_the_seed() {
        let spec = WorkloadGenSpec {
            num_qubits: 12,
            num_slices: 20,
            num_decoders: 3,
            tgate_density: 0.15,
            rng_seed: 42,
        };
        let a = generate_workload(&spec).unwrap();
        let b = generate_workload(&spec).unwrap();
        assert_eq!(a, b);
        let c = generate_workload(&WorkloadGenSpec {
            rng_seed: 43,
            ..spec
        })
        .unwrap();
        assert_ne!(a, c, "different seeds should give different draws");
    }

    #[test]
    fn generated_tgate_count_tracks_the_binomial_mean() {
        let spec = WorkloadGenSpec {
            num_qubits: 20,
            num_slices: 50,
            num_decoders: 5,
            tgate_density: 0.05,
            rng_seed: 7,
        };
        let w = generate_workload(&spec).unwrap();
        // 20 qubits x 49 eligible slices, p = 0.05. Capacity resampling
        // barely perturbs this (P[Binom(20, 0.05) > 5] is tiny), so the
        // count must sit within 3 sigma of the binomial mean.
        let draws = (spec.num_qubits * (spec.num_slices - 1)) as f64;
        let mean = draws * spec.tgate_density;
        let sigma = (draws * spec.tgate_density * (1.0 - spec.tgate_density)).sqrt();
        let count = w.total_tgates() as f64;
        assert!(
            (count - mean).abs() <= 3.0 * sigma,
            "count {count} outside {mean} +- 3*{sigma:.2}"
        );
    }

    #[test]
    fn generated_workloads_respect_capacity() {
        for seed in 0..20 {
            let w = generate_workload(&WorkloadGenSpec {
                num_qubits: 10,
                num_slices: 15,
                num_decoders: 2,
                tgate_density: 0.25,
                rng_seed: seed,
            })
            .unwrap();
            for (_, qubits) in w.tgate_entries() {
                assert!(qubits.len() <= 2);
            }
        }
    }

    #[test]
    fn impossible_density_reports_resample_exhaustion() {
        let err = generate_workload(&WorkloadGenSpec {
            num_qubits: 5,
            num_slices: 4,
            num_decoders: 2,
            tgate_density: 1.0,
            rng_seed: 0,
        })
        .unwrap_err();
        assert!(matches!(err, WorkloadError::ResampleExhausted { .. }));
    }

    #[test]
    fn out_of_range_density_is_rejected() {
        for density in [-0.1, 1.5, f64::NAN] {
            let err = generate_workload(&WorkloadGenSpec {
                num_qubits: 2,
                num_slices: 2,
                num_decoders: 1,
                tgate_density: density,
                rng_seed: 0,
            })
            .unwrap_err();
            assert!(matches!(err, WorkloadError::InvalidDensity(_)));
        }
    }
}
