mod support;
#[path = "../../core/tests/common/mod.rs"]
mod oracle;

use std::path::{Path, PathBuf};
use std::process::Output;

use codehinter_core::trace::parse_trace;
use codehinter_core::{Formula, SessionDriver, SessionStore};
use support::{codehinter, project};

fn run(args: &[&str], project_dir: Option<&Path>) -> Output {
    let mut cmd = codehinter();
    if let Some(p) = project_dir {
        cmd.arg("--project").arg(p);
    }
    cmd.args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/traces").join(name)
}

#[test]
fn test_on_green_project_exits_zero() {
    let (_tmp, config) = project("running_sum", None);
    let o = run(&["test"], Some(&config.root));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let first = stdout(&o).lines().next().unwrap().to_string();
    assert!(first.starts_with("passed="), "{first}");
    assert!(first.ends_with(" failed=0"), "{first}");
}

#[test]
fn test_on_red_project_lists_failures() {
    let (_tmp, config) = project("move_zeroes", Some("swap_half"));
    let o = run(&["test"], Some(&config.root));
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.starts_with("passed=3 failed=3\n"), "{out}");
    assert_eq!(out.lines().filter(|l| l.starts_with("FAIL\t")).count(), 3);
}

#[test]
fn syntax_error_is_reported() {
    let (_tmp, config) = project("running_sum", None);
    std::fs::write(config.root.join(&config.subject_files[0]), "def f(:\n    pass\n").unwrap();
    let o = run(&["test"], Some(&config.root));
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("syntax error in "), "{}", stdout(&o));
}

#[test]
fn locate_on_trace_matches_brute_force_ranking() {
    for name in ["two_files.json", "move_zeroes_swap_half.json", "roman_numerals_add_smaller.json"] {
        let path = fixture(name);
        let o = run(
            &["locate", "--trace", path.to_str().unwrap(), "--formula", "ochiai", "--top", "3"],
            None,
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let spectrum = parse_trace(&std::fs::read(&path).unwrap()).unwrap().spectrum;
        let expected: Vec<String> = oracle::oracle_rank(&spectrum, Formula::Ochiai)
            .into_iter()
            .take(3)
            .map(|(loc, s)| format!("{}\t{}\t{:.6}", loc.file, loc.line, s))
            .collect();
        let got: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
        assert_eq!(got.len(), 3);
        assert_eq!(got, expected, "{name}");
    }
}

#[test]
fn saved_trace_feeds_locate() {
    let (tmp, config) = project("roman_numerals", Some("add_smaller"));
    let trace = tmp.path().join("saved.json");
    let o = run(&["test", "--save-trace", trace.to_str().unwrap()], Some(&config.root));
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["locate", "--trace", trace.to_str().unwrap(), "--formula", "dstar2", "--top", "5"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 5);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = run(&["locate", "--frobnicate"], None);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["locate"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("error[usage]"));
    let o = run(&["locate", "--trace", "x.json", "--formula", "nope"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_one_with_a_code() {
    let o = run(&["locate", "--trace", fixture("syntax_error.json").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error["), "{}", stderr(&o));
    let o = run(&["locate", "--trace", "/definitely/missing.json"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("error[io_error]"));
}

#[test]
fn quiz_card_and_answer() {
    let (_tmp, config) = project("roman_numerals", Some("add_smaller"));
    let o = run(&["quiz", "--json"], Some(&config.root));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let card: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(card["options"].as_array().unwrap().len(), 3);
    assert!(card.get("correct_index").is_none());
    let verdicts: Vec<bool> = (0..3)
        .map(|i| {
            let o = run(&["quiz", "--json", "--answer", &i.to_string()], Some(&config.root));
            let a: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
            a["is_correct"].as_bool().unwrap()
        })
        .collect();
    assert_eq!(verdicts.iter().filter(|&&v| v).count(), 1);
    let o = run(&["quiz", "--answer", "7"], Some(&config.root));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("error[index_out_of_range]"));
}

#[test]
fn prints_plan_and_run() {
    let (_tmp, config) = project("move_zeroes", Some("swap_half"));
    let o = run(&["prints"], Some(&config.root));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("[codehinter#1]"));
    let o = run(&["prints", "--run"], Some(&config.root));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("tests/test_move_zeroes.py::test_example\tFail"));
    // The student's files are untouched.
    let before = codehinter_core::corpus::Exercise::read(&support::corpus_dir().join("move_zeroes")).unwrap();
    let now = std::fs::read_to_string(config.root.join("move_zeroes.py")).unwrap();
    assert_eq!(before.variant("swap_half").unwrap().snapshot.content("move_zeroes.py"), Some(now.as_str()));
}

#[test]
fn diff_previews_and_applies() {
    let (tmp, config) = project("move_zeroes", Some("swap_half"));
    let file = "move_zeroes.py";
    let text = std::fs::read_to_string(config.root.join(file)).unwrap();
    let line = text.lines().position(|l| l.contains("nums[write] = nums[read]")).unwrap() as u32 + 1;
    let old = text.lines().nth(line as usize - 1).unwrap();
    let new = old.replace("nums[write] = nums[read]", "nums[write], nums[read] = nums[read], nums[write]");
    let proposal = serde_json::json!({
        "edits": [{"file": file, "line": line, "old_text": old, "new_text": new}],
        "rationale": "swap instead of copy",
        "origin": "student"
    });
    let pfile = tmp.path().join("p.json");
    std::fs::write(&pfile, proposal.to_string()).unwrap();

    let o = run(&["diff", "--proposal", pfile.to_str().unwrap()], Some(&config.root));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains(&format!("+{new}")), "{}", stdout(&o));
    assert_eq!(std::fs::read_to_string(config.root.join(file)).unwrap(), text);

    let o = run(&["diff", "--apply", "--proposal", pfile.to_str().unwrap()], Some(&config.root));
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["test"], Some(&config.root));
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    // Applying again no longer matches the file.
    let o = run(&["diff", "--proposal", pfile.to_str().unwrap()], Some(&config.root));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("error[stale_proposal]"), "{}", stderr(&o));
}

#[test]
fn report_reads_a_recorded_session() {
    let (tmp, config) = project("move_zeroes", Some("swap_half"));
    let data = tmp.path().join("data");
    let store = SessionStore::open(&data).unwrap();
    let session = store.create(config).unwrap();
    let id = session.id.clone();
    let mut driver = SessionDriver::new(session, std::sync::Arc::new(codehinter_core::assist::RuleProvider::new()));
    driver.run_e2e().unwrap();
    driver.locate().unwrap();
    driver.run_e2e().unwrap();

    let o = codehinter()
        .args(["report", "--data-dir", data.to_str().unwrap(), "--session", &id])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["counts"]["run_e2e"], 2);
    assert_eq!(report["counts"]["locate"], 1);
    assert_eq!(report["distinct_features"], 2);

    let o = codehinter()
        .args(["report", "--data-dir", data.to_str().unwrap(), "--session", "nope"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("error[not_found]"));
}
