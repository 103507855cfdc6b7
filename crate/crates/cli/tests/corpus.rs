use std::path::{Path, PathBuf};

use codehinter_core::corpus::{load_corpus, read_corpus, Exercise, Invariant};
use codehinter_core::spectrum::{clean_signal_location, rank, Formula};

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../exercises")
}

fn adapter() -> Vec<String> {
    vec![
        env!("CARGO_BIN_EXE_codehinter-stub-adapter").to_string(),
        "--project".into(),
        "{PROJECT_ROOT}".into(),
        "--out".into(),
        "{TRACE_OUT}".into(),
    ]
}

#[test]
fn shipped_corpus_loads_and_localizes() {
    let exercises = load_corpus(&corpus_dir(), &adapter()).unwrap();
    assert!(exercises.len() >= 10);
    for id in ["move_zeroes", "summary_ranges"] {
        assert!(exercises.iter().any(|e| e.id == id), "missing {id}");
    }
    let mut single = 0;
    let mut top3 = 0;
    for e in &exercises {
        let runs = e.verify(&adapter()).unwrap();
        for (v, run) in e.variants.iter().zip(&runs) {
            if !v.is_single_line() {
                continue;
            }
            single += 1;
            let ranking = rank(&run.spectrum, Formula::Ochiai).unwrap();
            let pos = ranking.position_of(&v.known_lines[0]).unwrap();
            eprintln!("{}/{}: position {}", e.id, v.name, pos + 1);
            if pos < 3 {
                top3 += 1;
            }
            if clean_signal_location(&run.spectrum).as_ref() == Some(&v.known_lines[0]) {
                assert_eq!(pos, 0, "{}/{} has a clean signal", e.id, v.name);
            }
        }
    }
    assert!(top3 * 5 >= single * 4, "{top3}/{single} in top 3");
}

fn copy_exercise(id: &str) -> (tempfile::TempDir, PathBuf) {
    let tmp = tempfile::tempdir().unwrap();
    let dest = tmp.path().join(id);
    codehinter_core::runner::copy_tree(&corpus_dir().join(id), &dest).unwrap();
    (tmp, dest)
}

fn verify_error(dir: &Path) -> Invariant {
    let e = Exercise::read(dir).and_then(|e| e.verify(&adapter()).map(|_| ()));
    e.unwrap_err().invariant().unwrap()
}

#[test]
fn variant_that_passes_is_rejected() {
    let (_tmp, dir) = copy_exercise("running_sum");
    let fixed = std::fs::read_to_string(dir.join("solution/running.py")).unwrap();
    let patched = fixed.replace("    return out", "    return list(out)");
    std::fs::write(dir.join("buggy/reset/running.py"), patched).unwrap();
    assert_eq!(verify_error(&dir), Invariant::BuggyRed);
}

#[test]
fn three_line_diff_is_rejected() {
    let (_tmp, dir) = copy_exercise("running_sum");
    let text = "def running_sum(nums):\n    total = 1\n    out = [0]\n    for x in nums[1:]:\n        total += x\n        out.append(total)\n    return out\n";
    std::fs::write(dir.join("buggy/reset/running.py"), text).unwrap();
    assert_eq!(verify_error(&dir), Invariant::LineDiff);
}

#[test]
fn failing_reference_is_rejected() {
    let (_tmp, dir) = copy_exercise("fizzbuzz");
    let path = dir.join("solution/fizzbuzz.py");
    let text = std::fs::read_to_string(&path).unwrap().replace("\"Fizz\")", "\"fizz\")");
    std::fs::write(path, text).unwrap();
    assert_eq!(verify_error(&dir), Invariant::ReferenceGreen);
}

#[test]
fn unexecuted_known_line_is_rejected() {
    let (_tmp, dir) = copy_exercise("fizzbuzz");
    let meta = std::fs::read_to_string(dir.join("meta.json")).unwrap();
    // Line 1 is the `def` header, which no test executes.
    let meta = meta.replace("\"line\": 9", "\"line\": 1");
    std::fs::write(dir.join("meta.json"), meta).unwrap();
    assert_eq!(verify_error(&dir), Invariant::BugExecuted);
}

#[test]
fn missing_parts_are_layout_errors() {
    let (_tmp, dir) = copy_exercise("palindrome");
    std::fs::remove_file(dir.join("statement.md")).unwrap();
    assert_eq!(
        Exercise::read(&dir).unwrap_err().invariant(),
        Some(Invariant::Layout)
    );
    assert!(read_corpus(&dir.join("nope")).is_err());
}
