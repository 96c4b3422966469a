//! Runs every acceptance criterion and prints one line per criterion.
//! Criteria listed in `KNOWN_GAPS` are reported but do not fail the run.

use fogmimo::acceptance::{ids, run_criterion, KNOWN_GAPS};

fn main() {
    let mut unexpected = Vec::new();
    for id in ids() {
        let r = run_criterion(id).expect("listed criterion");
        println!("{}", r.line());
        let gap = KNOWN_GAPS.iter().find(|g| g.0 == id);
        match (r.passed, gap) {
            (false, Some((_, note))) => println!("     known gap: {note}"),
            (false, None) => unexpected.push(id),
            (true, Some(_)) => println!("     listed as a known gap but passed"),
            (true, None) => {}
        }
    }
    if !unexpected.is_empty() {
        eprintln!("acceptance failures: {unexpected:?}");
        std::process::exit(1);
    }
}
