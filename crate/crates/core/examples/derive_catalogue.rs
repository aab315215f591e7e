//! Regenerates the shipped catalogue of cyclic designs of order `2e + 1`.
//!
//! Usage: `cargo run --release --example derive_catalogue -- <output.cat>`

use theta_design::catalogue::{serialize, HEADER};
use theta_design::{enumerate_thetas, search, Budget, CatalogueEntry, SearchProblem};

fn main() {
    let out = std::env::args().nth(1).expect("output path");
    let mut entries = Vec::new();
    for e in 10..=15 {
        for theta in enumerate_thetas(e) {
            let n = 2 * e + 1;
            let mut p = SearchProblem::cyclic(theta, n, n, 1, 1, 0).expect("arity");
            p.budget = Budget::default();
            let d = search(&p).unwrap_or_else(|err| panic!("{theta} K{n}: {err}"));
            eprintln!("{theta} K{n}: found");
            entries.push(CatalogueEntry {
                decomposition: d,
                source: format!("search seed={} budget={}x{}", p.seed, p.budget.restarts, p.budget.steps),
            });
        }
    }
    let text = serialize(&entries);
    assert!(text.starts_with(HEADER));
    std::fs::write(&out, text).expect("write catalogue");
}
