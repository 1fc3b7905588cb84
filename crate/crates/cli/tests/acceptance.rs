use std::io::Write;

use nonfick_cli::verify::{run_one, VerifyOptions};

#[test]
fn all_primary_criteria() {
    let scratch = tempfile::tempdir().unwrap();
    let opts = VerifyOptions { fault: None, scratch: Some(scratch.path().to_path_buf()) };
    let results: Vec<_> = (1..=10).map(|id| run_one(id, &opts)).collect();
    // written to the raw handle so the lines survive output capture
    let mut err = std::io::stderr().lock();
    for r in &results {
        writeln!(err, "{}", r.line()).unwrap();
    }
    let failed: Vec<u8> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
