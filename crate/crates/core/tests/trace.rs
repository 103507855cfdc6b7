mod common;

use std::path::PathBuf;

use codehinter_core::trace::{merge_traces, parse_trace};
use codehinter_core::{CoverageSpectrum, TraceFile};
use common::random_spectrum;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn fixtures() -> Vec<PathBuf> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/traces");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    paths.sort();
    paths
}

#[test]
fn canonical_fixtures_round_trip_byte_for_byte() {
    let paths = fixtures();
    assert!(paths.len() >= 3);
    for path in paths {
        let bytes = std::fs::read(&path).unwrap();
        let trace = parse_trace(&bytes).unwrap();
        assert_eq!(trace.to_canonical_json().as_bytes(), &bytes[..], "{}", path.display());
    }
}

#[test]
fn extra_field_reports_its_path() {
    let text = std::fs::read_to_string(fixtures().into_iter().find(|p| p.ends_with("two_files.json")).unwrap())
        .unwrap()
        .replacen("\"outcome\":\"pass\"", "\"outcome\":\"pass\",\"extra\":1", 1);
    let err = parse_trace(text.as_bytes()).unwrap_err();
    assert_eq!(err.code(), "trace_invalid");
    assert!(err.to_string().contains("spectrum.records[0]"), "{err}");
}

/// Random traces over a shared subject list whose test ids overlap.
fn trace(rng: &mut StdRng, tag: &str) -> TraceFile {
    let mut spectrum: CoverageSpectrum = random_spectrum(rng);
    for r in &mut spectrum.records {
        let id = rng.random_range(0..8);
        r.test_id = format!("tests/test_x.py::test_{id}");
    }
    spectrum.records.sort_by(|a, b| a.test_id.cmp(&b.test_id));
    spectrum.records.dedup_by(|a, b| a.test_id == b.test_id);
    let mut t = TraceFile::new(tag, spectrum);
    t.created_at = "2026-01-01T00:00:00.000Z".into();
    t
}

proptest! {
    #[test]
    fn merge_is_idempotent(seed in any::<u64>()) {
        let a = trace(&mut StdRng::seed_from_u64(seed), "a");
        prop_assert_eq!(merge_traces(&a, &a).unwrap(), a);
    }

    #[test]
    fn merge_prefers_the_right(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (a, b) = (trace(&mut rng, "a"), trace(&mut rng, "b"));
        let m = merge_traces(&a, &b).unwrap();
        for r in &b.spectrum.records {
            prop_assert_eq!(m.spectrum.record(&r.test_id), Some(r));
        }
        for r in &a.spectrum.records {
            if b.spectrum.record(&r.test_id).is_none() {
                prop_assert_eq!(m.spectrum.record(&r.test_id), Some(r));
            }
        }
        let ids: std::collections::BTreeSet<&str> = a.spectrum.records.iter()
            .chain(&b.spectrum.records).map(|r| r.test_id.as_str()).collect();
        prop_assert_eq!(m.spectrum.records.len(), ids.len());
        prop_assert_eq!(m.adapter.as_str(), "b");
    }

    #[test]
    fn merge_is_associative(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (a, b, c) = (trace(&mut rng, "a"), trace(&mut rng, "b"), trace(&mut rng, "c"));
        let left = merge_traces(&merge_traces(&a, &b).unwrap(), &c).unwrap();
        let right = merge_traces(&a, &merge_traces(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn canonical_json_round_trips(seed in any::<u64>()) {
        let t = trace(&mut StdRng::seed_from_u64(seed), "x");
        let text = t.to_canonical_json();
        let back = parse_trace(text.as_bytes()).unwrap();
        prop_assert_eq!(back.to_canonical_json(), text);
        prop_assert_eq!(back, t);
    }
}
