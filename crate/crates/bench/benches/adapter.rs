use std::path::Path;

use codehinter_stub_adapter::{run_project, AdapterOptions};
use criterion::{criterion_group, criterion_main, Criterion};

fn bench_adapter(c: &mut Criterion) {
    let exercises = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../exercises");
    let mut group = c.benchmark_group("stub_adapter");
    for id in ["roman_numerals", "summary_ranges"] {
        let dir = tempfile_dir(&exercises.join(id));
        let opts = AdapterOptions::new(&dir);
        group.bench_function(id, |b| b.iter(|| run_project(&opts).unwrap()));
    }
    group.finish();
}

/// The reference solution laid out as a project next to its tests.
fn tempfile_dir(exercise: &Path) -> std::path::PathBuf {
    let dest = std::env::temp_dir().join(format!(
        "codehinter-bench-{}-{}",
        exercise.file_name().unwrap().to_string_lossy(),
        std::process::id()
    ));
    let _ = std::fs::remove_dir_all(&dest);
    std::fs::create_dir_all(dest.join("tests")).unwrap();
    for (from, to) in [(exercise.join("solution"), dest.clone()), (exercise.join("tests"), dest.join("tests"))] {
        for entry in std::fs::read_dir(from).unwrap() {
            let p = entry.unwrap().path();
            std::fs::copy(&p, to.join(p.file_name().unwrap())).unwrap();
        }
    }
    dest
}

criterion_group!(benches, bench_adapter);
criterion_main!(benches);
