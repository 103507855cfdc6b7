//! Spectrum-based fault localization.
//!
//! Every covered source line is reduced to its four-way count
//! decomposition (`ef`, `ep`, `nf`, `np`) and scored with one of the
//! supported suspiciousness formulas. Lines no test executed are never
//! scored.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::CoverageSpectrum;

/// Default number of lines surfaced to the student.
pub const DEFAULT_TOP_K: usize = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpectrumError {
    #[error("spectrum contains no tests")]
    EmptySpectrum,
    #[error("malformed location `{file}:{line}`: {reason}")]
    MalformedLocation {
        file: String,
        line: u32,
        reason: String,
    },
    #[error("unknown formula `{0}` (expected tarantula, ochiai, dstar2 or op2)")]
    UnknownFormula(String),
    #[error("spectrum has no failing tests; nothing to localize")]
    NoFailingTests,
}

impl SpectrumError {
    pub fn code(&self) -> &'static str {
        match self {
            SpectrumError::EmptySpectrum => "empty_spectrum",
            SpectrumError::MalformedLocation { .. } => "malformed_location",
            SpectrumError::UnknownFormula(_) => "unknown_formula",
            SpectrumError::NoFailingTests => "no_failing_tests",
        }
    }
}

/// A 1-based line in a project-relative source file.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceLocation {
    pub file: String,
    pub line: u32,
}

impl SourceLocation {
    pub fn new(file: impl Into<String>, line: u32) -> Result<Self, SpectrumError> {
        let loc = SourceLocation {
            file: file.into(),
            line,
        };
        loc.validate()?;
        Ok(loc)
    }

    pub fn validate(&self) -> Result<(), SpectrumError> {
        let malformed = |reason: &str| SpectrumError::MalformedLocation {
            file: self.file.clone(),
            line: self.line,
            reason: reason.to_string(),
        };
        if self.line == 0 {
            return Err(malformed("line numbers start at 1"));
        }
        validate_relative_path(&self.file).map_err(|r| malformed(&r))
    }
}

impl fmt::Display for SourceLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}

/// Checks that `path` is a normalized, project-relative path.
pub fn validate_relative_path(path: &str) -> Result<(), String> {
    if path.is_empty() {
        return Err("empty path".into());
    }
    if path.contains('\\') {
        return Err("backslash in path; use forward slashes".into());
    }
    if path.starts_with('/') {
        return Err("absolute path".into());
    }
    for seg in path.split('/') {
        match seg {
            "" => return Err("empty path segment".into()),
            "." | ".." => return Err(format!("non-normalized segment `{seg}`")),
            _ => {}
        }
    }
    Ok(())
}

/// Four-way partition of the test suite relative to one element.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ElementCounts {
    /// Failing tests that execute the element.
    pub ef: u32,
    /// Passing tests that execute the element.
    pub ep: u32,
    /// Failing tests that do not execute the element.
    pub nf: u32,
    /// Passing tests that do not execute the element.
    pub np: u32,
}

impl ElementCounts {
    pub fn new(ef: u32, ep: u32, nf: u32, np: u32) -> Self {
        ElementCounts { ef, ep, nf, np }
    }

    pub fn total_failing(&self) -> u32 {
        self.ef + self.nf
    }

    pub fn total_passing(&self) -> u32 {
        self.ep + self.np
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formula {
    Tarantula,
    #[default]
    Ochiai,
    Dstar2,
    Op2,
}

impl Formula {
    pub const ALL: [Formula; 4] = [
        Formula::Tarantula,
        Formula::Ochiai,
        Formula::Dstar2,
        Formula::Op2,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Formula::Tarantula => "tarantula",
            Formula::Ochiai => "ochiai",
            Formula::Dstar2 => "dstar2",
            Formula::Op2 => "op2",
        }
    }

    /// Raw suspiciousness. `Dstar2` may return `f64::INFINITY` when a line
    /// is executed by failing tests only and every failing test covers it.
    pub fn score(&self, c: ElementCounts) -> f64 {
        let ef = f64::from(c.ef);
        let ep = f64::from(c.ep);
        let nf = f64::from(c.nf);
        let failing = f64::from(c.total_failing());
        let passing = f64::from(c.total_passing());
        match self {
            Formula::Tarantula => {
                if c.ef == 0 || c.total_failing() == 0 {
                    return 0.0;
                }
                let fail_ratio = ef / failing;
                let pass_ratio = if c.total_passing() == 0 {
                    0.0
                } else {
                    ep / passing
                };
                fail_ratio / (fail_ratio + pass_ratio)
            }
            Formula::Ochiai => {
                let denom = (failing * (ef + ep)).sqrt();
                if denom == 0.0 {
                    0.0
                } else {
                    ef / denom
                }
            }
            Formula::Dstar2 => {
                if c.ef == 0 {
                    0.0
                } else if c.ep + c.nf == 0 {
                    f64::INFINITY
                } else {
                    ef * ef / (ep + nf)
                }
            }
            Formula::Op2 => ef - ep / (passing + 1.0),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Formula {
    type Err = SpectrumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tarantula" => Ok(Formula::Tarantula),
            "ochiai" => Ok(Formula::Ochiai),
            "dstar2" | "dstar" => Ok(Formula::Dstar2),
            "op2" => Ok(Formula::Op2),
            _ => Err(SpectrumError::UnknownFormula(s.to_string())),
        }
    }
}

/// Scores one element by formula name.
pub fn score(counts: ElementCounts, formula: &str) -> Result<f64, SpectrumError> {
    Ok(formula.parse::<Formula>()?.score(counts))
}

/// Count decomposition for every location covered by at least one test.
pub fn derive_counts(
    spectrum: &CoverageSpectrum,
) -> Result<BTreeMap<SourceLocation, ElementCounts>, SpectrumError> {
    if spectrum.records.is_empty() {
        return Err(SpectrumError::EmptySpectrum);
    }
    let total_failing = spectrum.records.iter().filter(|r| r.outcome.is_failing()).count() as u32;
    let total_passing = spectrum.records.len() as u32 - total_failing;

    let mut counts: BTreeMap<SourceLocation, ElementCounts> = BTreeMap::new();
    for record in &spectrum.records {
        let failing = record.outcome.is_failing();
        let mut seen = std::collections::BTreeSet::new();
        for loc in &record.covered {
            loc.validate()?;
            // A duplicated location in one record still counts that test once.
            if !seen.insert(loc) {
                continue;
            }
            let entry = counts.entry(loc.clone()).or_default();
            if failing {
                entry.ef += 1;
            } else {
                entry.ep += 1;
            }
        }
    }
    for c in counts.values_mut() {
        c.nf = total_failing - c.ef;
        c.np = total_passing - c.ep;
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedLocation {
    pub location: SourceLocation,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteTotals {
    pub failing: u32,
    pub passing: u32,
}

/// Locations ordered from most to least suspicious.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuspiciousnessRanking {
    pub formula: Formula,
    pub entries: Vec<RankedLocation>,
    pub totals: SuiteTotals,
}

impl SuspiciousnessRanking {
    pub fn position_of(&self, loc: &SourceLocation) -> Option<usize> {
        self.entries.iter().position(|e| &e.location == loc)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn rank(
    spectrum: &CoverageSpectrum,
    formula: Formula,
) -> Result<SuspiciousnessRanking, SpectrumError> {
    let counts = derive_counts(spectrum)?;
    let failing = spectrum.records.iter().filter(|r| r.outcome.is_failing()).count() as u32;
    if failing == 0 {
        return Err(SpectrumError::NoFailingTests);
    }
    let passing = spectrum.records.len() as u32 - failing;

    let mut entries: Vec<RankedLocation> = counts
        .into_iter()
        .map(|(location, c)| RankedLocation {
            location,
            score: formula.score(c),
        })
        .collect();
    // `counts` iterates in (file, line) order, so a stable sort on score
    // alone already applies the tie-break.
    entries.sort_by(|a, b| b.score.total_cmp(&a.score));

    let max_finite = entries
        .iter()
        .map(|e| e.score)
        .filter(|s| s.is_finite())
        .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |m| m.max(s))));
    let sentinel = max_finite.unwrap_or(0.0) + 1.0;
    for e in &mut entries {
        if e.score.is_infinite() {
            e.score = sentinel;
        }
    }

    Ok(SuspiciousnessRanking {
        formula,
        entries,
        totals: SuiteTotals { failing, passing },
    })
}

/// The `k` most suspicious entries, or all of them when fewer exist.
/// The single location covered by every failing test and no passing test,
/// provided every other covered location is hit by some passing test.
pub fn clean_signal_location(spectrum: &CoverageSpectrum) -> Option<SourceLocation> {
    let counts = derive_counts(spectrum).ok()?;
    let mut found = None;
    for (loc, c) in counts {
        if c.ep == 0 {
            if c.nf != 0 || c.ef == 0 || found.is_some() {
                return None;
            }
            found = Some(loc);
        }
    }
    found
}

pub fn top_k(ranking: &SuspiciousnessRanking, k: usize) -> Vec<RankedLocation> {
    ranking.entries.iter().take(k.max(1)).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{Outcome, TestRecord};

    fn rec(id: &str, outcome: Outcome, lines: &[u32]) -> TestRecord {
        TestRecord {
            test_id: id.into(),
            outcome,
            message: None,
            covered: lines
                .iter()
                .map(|&l| SourceLocation::new("a.py", l).unwrap())
                .collect(),
        }
    }

    fn spectrum(records: Vec<TestRecord>) -> CoverageSpectrum {
        CoverageSpectrum {
            subject_files: vec!["a.py".into()],
            syntax_error: None,
            records,
        }
    }

    fn loc(line: u32) -> SourceLocation {
        SourceLocation::new("a.py", line).unwrap()
    }

    #[test]
    fn counts_partition_by_hand() {
        let s = spectrum(vec![
            rec("f1", Outcome::Fail, &[3]),
            rec("f2", Outcome::Error, &[3]),
            rec("p1", Outcome::Pass, &[3, 5]),
        ]);
        let counts = derive_counts(&s).unwrap();
        assert_eq!(counts.len(), 2);
        assert_eq!(counts[&loc(3)], ElementCounts::new(2, 1, 0, 0));
        assert_eq!(counts[&loc(5)], ElementCounts::new(0, 1, 2, 0));
    }

    #[test]
    fn single_passing_test() {
        let counts = derive_counts(&spectrum(vec![rec("p", Outcome::Pass, &[1])])).unwrap();
        assert_eq!(counts[&loc(1)], ElementCounts::new(0, 1, 0, 0));
        assert!(!counts.contains_key(&loc(2)));
    }

    #[test]
    fn empty_spectrum_rejected() {
        assert_eq!(
            derive_counts(&spectrum(vec![])),
            Err(SpectrumError::EmptySpectrum)
        );
    }

    #[test]
    fn malformed_locations_rejected() {
        assert!(SourceLocation::new("a.py", 0).is_err());
        assert!(SourceLocation::new("../a.py", 1).is_err());
        assert!(SourceLocation::new("/abs/a.py", 1).is_err());
        assert!(SourceLocation::new("dir\\a.py", 1).is_err());
        assert!(SourceLocation::new("src/./a.py", 1).is_err());
        assert!(SourceLocation::new("src/a.py", 1).is_ok());

        let mut bad = spectrum(vec![rec("p", Outcome::Pass, &[1])]);
        bad.records[0].covered[0].line = 0;
        assert!(matches!(
            derive_counts(&bad),
            Err(SpectrumError::MalformedLocation { .. })
        ));
    }

    #[test]
    fn unknown_formula() {
        assert_eq!(
            score(ElementCounts::default(), "jaccard"),
            Err(SpectrumError::UnknownFormula("jaccard".into()))
        );
        assert_eq!(score(ElementCounts::new(1, 0, 0, 0), "OCHIAI"), Ok(1.0));
    }

    #[test]
    fn no_failing_tests() {
        let s = spectrum(vec![rec("p", Outcome::Pass, &[1])]);
        assert_eq!(
            rank(&s, Formula::Ochiai),
            Err(SpectrumError::NoFailingTests)
        );
    }

    #[test]
    fn ties_break_by_file_then_line() {
        let mk = |file: &str, line| SourceLocation::new(file, line).unwrap();
        let s = CoverageSpectrum {
            subject_files: vec!["a.py".into(), "b.py".into()],
            syntax_error: None,
            records: vec![TestRecord {
                test_id: "f".into(),
                outcome: Outcome::Fail,
                message: None,
                covered: vec![mk("a.py", 9), mk("b.py", 1), mk("a.py", 2)],
            }],
        };
        let r = rank(&s, Formula::Ochiai).unwrap();
        let order: Vec<_> = r.entries.iter().map(|e| e.location.to_string()).collect();
        assert_eq!(order, ["a.py:2", "a.py:9", "b.py:1"]);
    }

    #[test]
    fn dstar_sentinel_is_finite_and_first() {
        let s = spectrum(vec![
            rec("f1", Outcome::Fail, &[1, 2]),
            rec("f2", Outcome::Fail, &[1, 2]),
            rec("p1", Outcome::Pass, &[1]),
        ]);
        let r = rank(&s, Formula::Dstar2).unwrap();
        assert_eq!(r.entries[0].location, loc(2));
        // line 1: ef=2, ep=1, nf=0 -> 4/1 = 4; sentinel = 4 + 1
        assert_eq!(r.entries[0].score, 5.0);
        assert_eq!(r.entries[1].score, 4.0);
        assert!(r.entries.iter().all(|e| e.score.is_finite()));
    }

    #[test]
    fn all_infinite_scores_get_unit_sentinel() {
        let s = spectrum(vec![rec("f", Outcome::Fail, &[1, 2])]);
        let r = rank(&s, Formula::Dstar2).unwrap();
        assert!(r.entries.iter().all(|e| e.score == 1.0));
        assert_eq!(r.entries[0].location, loc(1));
    }

    #[test]
    fn top_k_semantics() {
        let s = spectrum(vec![
            rec("f", Outcome::Fail, &[1, 2, 3, 4, 5, 6, 7]),
            rec("p", Outcome::Pass, &[1, 2]),
        ]);
        let r = rank(&s, Formula::Ochiai).unwrap();
        assert_eq!(r.len(), 7);
        assert_eq!(top_k(&r, 3), r.entries[..3].to_vec());
        assert_eq!(top_k(&r, 1), r.entries[..1].to_vec());
        assert_eq!(top_k(&r, 50).len(), 7);

        let small = rank(&spectrum(vec![rec("f", Outcome::Fail, &[1, 2])]), Formula::Op2).unwrap();
        assert_eq!(top_k(&small, DEFAULT_TOP_K).len(), 2);
    }

    #[test]
    fn formula_names_round_trip() {
        for f in Formula::ALL {
            assert_eq!(f.as_str().parse::<Formula>().unwrap(), f);
            assert_eq!(serde_json::to_string(&f).unwrap(), format!("\"{f}\""));
        }
    }
}
