//! Input generators for the benchmarks.

use codehinter_core::{CoverageSpectrum, Outcome, SourceLocation, TestRecord};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// `tests` records over `lines` lines of one file; roughly a fifth fail.
pub fn synthetic_spectrum(tests: usize, lines: u32, seed: u64) -> CoverageSpectrum {
    let mut rng = StdRng::seed_from_u64(seed);
    let records = (0..tests)
        .map(|i| TestRecord {
            test_id: format!("tests/test_bench.py::test_{i}"),
            outcome: if i == 0 || rng.random_bool(0.2) { Outcome::Fail } else { Outcome::Pass },
            message: None,
            covered: (1..=lines)
                .filter(|_| rng.random_bool(0.6))
                .map(|l| SourceLocation::new("subject.py", l).expect("valid location"))
                .collect(),
        })
        .collect();
    CoverageSpectrum {
        subject_files: vec!["subject.py".into()],
        syntax_error: None,
        records,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_seeded_and_has_a_failure() {
        let a = synthetic_spectrum(20, 50, 7);
        assert_eq!(a, synthetic_spectrum(20, 50, 7));
        assert!(a.failing_count() >= 1);
        assert!(a.validate().is_ok());
    }
}
