use std::time::{Duration, Instant};

use iegan_core::gradsuite::{run, END_TO_END_THRESHOLD, OP_THRESHOLD};

#[test]
fn every_case_is_within_tolerance() {
    let start = Instant::now();
    let cases = run(2024).unwrap();
    let elapsed = start.elapsed();
    for c in &cases {
        println!("{:<32} {:.3e} (< {:.0e}, {} coords)", c.name, c.max_relative_error, c.threshold, c.checked);
    }
    assert!(cases.len() > 30);
    assert!(cases.iter().any(|c| c.threshold == END_TO_END_THRESHOLD));
    assert!(cases.iter().filter(|c| c.threshold == OP_THRESHOLD).count() >= 30);
    let failed: Vec<_> = cases.iter().filter(|c| !c.passed()).map(|c| &c.name).collect();
    assert!(failed.is_empty(), "failing cases: {failed:?}");
    assert!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
}
