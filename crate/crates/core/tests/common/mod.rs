//! Test-only oracles shared by the property tests and the acceptance run.
#![allow(dead_code)]

pub mod formula_table;

use std::collections::BTreeSet;

use codehinter_core::{CoverageSpectrum, Formula, Outcome, SourceLocation, TestRecord};
use rand::Rng;

/// Suspiciousness straight from the four counts, written without looking
/// at the production code.
pub fn oracle_score(formula: Formula, ef: f64, ep: f64, nf: f64, np: f64) -> f64 {
    let f = ef + nf;
    let p = ep + np;
    match formula {
        Formula::Tarantula => {
            if ef == 0.0 {
                0.0
            } else {
                let a = ef / f;
                let b = if p > 0.0 { ep / p } else { 0.0 };
                a / (a + b)
            }
        }
        Formula::Ochiai => {
            if ef == 0.0 {
                0.0
            } else {
                ef / (f * (ef + ep)).sqrt()
            }
        }
        Formula::Dstar2 => {
            if ef == 0.0 {
                0.0
            } else if ep + nf == 0.0 {
                f64::INFINITY
            } else {
                ef.powi(2) / (ep + nf)
            }
        }
        Formula::Op2 => ef - ep / (p + 1.0),
    }
}

/// Brute-force ranking: recount every location from scratch, substitute
/// infinities, then sort by score and position.
pub fn oracle_rank(spectrum: &CoverageSpectrum, formula: Formula) -> Vec<(SourceLocation, f64)> {
    let mut universe: BTreeSet<(String, u32)> = BTreeSet::new();
    for r in &spectrum.records {
        for l in &r.covered {
            universe.insert((l.file.clone(), l.line));
        }
    }
    let mut scored: Vec<((String, u32), f64)> = universe
        .into_iter()
        .map(|key| {
            let (mut ef, mut ep, mut nf, mut np) = (0.0, 0.0, 0.0, 0.0);
            for r in &spectrum.records {
                let hit = r.covered.iter().any(|l| l.file == key.0 && l.line == key.1);
                let failing = r.outcome != Outcome::Pass;
                match (hit, failing) {
                    (true, true) => ef += 1.0,
                    (true, false) => ep += 1.0,
                    (false, true) => nf += 1.0,
                    (false, false) => np += 1.0,
                }
            }
            let s = oracle_score(formula, ef, ep, nf, np);
            (key, s)
        })
        .collect();
    let top_finite = scored
        .iter()
        .map(|(_, s)| *s)
        .filter(|s| s.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let replacement = if top_finite == f64::NEG_INFINITY { 1.0 } else { top_finite + 1.0 };
    for (_, s) in scored.iter_mut() {
        if s.is_infinite() {
            *s = replacement;
        }
    }
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    scored
        .into_iter()
        .map(|((file, line), s)| (SourceLocation::new(file, line).unwrap(), s))
        .collect()
}

pub const FILES: [&str; 2] = ["a.py", "b.py"];

/// `tests[i] = (outcome, [(file index, line)])`.
pub fn build_spectrum(tests: &[(Outcome, Vec<(usize, u32)>)]) -> CoverageSpectrum {
    let records = tests
        .iter()
        .enumerate()
        .map(|(i, (outcome, lines))| {
            let set: BTreeSet<(usize, u32)> = lines.iter().copied().collect();
            TestRecord {
                test_id: format!("tests/test_x.py::test_{i}"),
                outcome: *outcome,
                message: if *outcome == Outcome::Pass { None } else { Some("boom".into()) },
                covered: set
                    .into_iter()
                    .map(|(f, l)| SourceLocation::new(FILES[f], l).unwrap())
                    .collect(),
            }
        })
        .collect();
    CoverageSpectrum {
        subject_files: FILES.iter().map(|s| s.to_string()).collect(),
        syntax_error: None,
        records,
    }
}

/// A spectrum with 1..=6 tests (at least one failing) over at most 10
/// distinct lines.
pub fn random_spectrum(rng: &mut impl Rng) -> CoverageSpectrum {
    let n_tests = rng.random_range(1..=6);
    let n_lines = rng.random_range(1..=10usize);
    let lines: Vec<(usize, u32)> = (0..n_lines)
        .map(|i| (rng.random_range(0..2), i as u32 + 1))
        .collect();
    let mut tests: Vec<(Outcome, Vec<(usize, u32)>)> = (0..n_tests)
        .map(|_| {
            let outcome = match rng.random_range(0..3) {
                0 => Outcome::Pass,
                1 => Outcome::Fail,
                _ => Outcome::Error,
            };
            let covered = lines.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
            (outcome, covered)
        })
        .collect();
    if tests.iter().all(|(o, _)| *o == Outcome::Pass) {
        let i = rng.random_range(0..tests.len());
        tests[i].0 = Outcome::Fail;
    }
    if tests.iter().all(|(_, c)| c.is_empty()) {
        tests[0].1.push(lines[0]);
    }
    build_spectrum(&tests)
}
