mod common;

use theta_design::catalogue::{parse_catalogue, serialize, BUILTIN_FILES, HEADER};
use theta_design::{
    copy_counts, develop, enumerate_thetas, make_theta, verify_decomposition, Catalogue, CatalogueError,
    HostShape,
};

#[derive(Clone, Copy, Debug)]
enum Who {
    All,
    Bipartite,
    NonBipartite,
}

fn host(sizes: &[u32]) -> HostShape {
    match sizes {
        [n] => HostShape::Complete(*n),
        _ => HostShape::multipartite(sizes.to_vec()),
    }
}

/// Every host the constructions take directly from the tables, per edge count.
fn manifest() -> Vec<(u32, Who, Vec<Vec<u32>>)> {
    use Who::*;
    let k = |v: &[&[u32]]| v.iter().map(|s| s.to_vec()).collect::<Vec<_>>();
    vec![
        (10, All, k(&[&[16], &[20], &[25]])),
        (10, Bipartite, k(&[&[5, 10]])),
        (
            10,
            NonBipartite,
            k(&[
                &[36], &[40], &[41], &[45], &[56], &[65], &[10, 10, 10], &[5, 5, 5, 5], &[20, 20, 20, 25],
                &[5, 5, 5, 5, 5], &[5, 5, 5, 5, 15], &[5, 5, 5, 5, 20],
            ]),
        ),
        (11, All, k(&[&[11], &[12]])),
        (11, Bipartite, k(&[&[11, 11]])),
        (11, NonBipartite, k(&[&[22], &[11, 11, 11], &[11, 11, 11, 11], &[11, 11, 11, 11, 11]])),
        (12, All, k(&[&[16], &[24], &[33]])),
        (12, Bipartite, k(&[&[8, 12]])),
        (12, NonBipartite, k(&[&[40], &[49], &[57], &[81], &[8, 8, 8], &[8, 8, 8, 8], &[8, 8, 8, 24]])),
        (13, All, k(&[&[13], &[14]])),
        (13, Bipartite, k(&[&[13, 13]])),
        (13, NonBipartite, k(&[&[26], &[13, 13, 13], &[13, 13, 13, 13], &[13, 13, 13, 13, 13]])),
        (14, All, k(&[&[21], &[28], &[36]])),
        (14, Bipartite, k(&[&[7, 14]])),
        (
            14,
            NonBipartite,
            k(&[
                &[49], &[56], &[57], &[64], &[77], &[92], &[14, 14, 14], &[7, 7, 7, 7], &[28, 28, 28, 35],
                &[7, 7, 7, 7, 7], &[7, 7, 7, 7, 21], &[7, 7, 7, 7, 28],
            ]),
        ),
        (15, All, k(&[&[15], &[16], &[21], &[25]])),
        (15, Bipartite, k(&[&[15, 15], &[15, 20], &[15, 25]])),
        (
            15,
            NonBipartite,
            k(&[&[30], &[36], &[40], &[51], &[55], &[66], &[70], &[5, 5, 5], &[5, 5, 5, 5]]),
        ),
    ]
}

#[test]
fn manifest_coverage() {
    let cat = Catalogue::builtin();
    for (e, who, hosts) in manifest() {
        for theta in enumerate_thetas(e) {
            let wanted = match who {
                Who::All => true,
                Who::Bipartite => theta.is_bipartite(),
                Who::NonBipartite => !theta.is_bipartite(),
            };
            if !wanted {
                continue;
            }
            for h in &hosts {
                assert!(cat.contains(&theta, &host(h)), "missing {theta} on {}", host(h));
            }
        }
    }
}

#[test]
fn derived_covers_order_2e_plus_1() {
    let derived = Catalogue::shipped_derived();
    assert_eq!(derived.len(), 73);
    for e in 10..=15 {
        for theta in enumerate_thetas(e) {
            let entry = derived.lookup(&theta, &HostShape::Complete(2 * e + 1)).unwrap();
            assert!(entry.source.starts_with("search seed="), "{}", entry.source);
            assert_eq!(entry.decomposition.base_blocks.len(), 1);
        }
    }
}

#[test]
fn every_shipped_entry_verifies_with_exact_counts() {
    for entry in common::shipped() {
        let d = &entry.decomposition;
        let cert = verify_decomposition(d);
        assert!(cert.accepted(), "{} {}", d.theta, d.host.label());
        let need = copy_counts(d.theta.edge_count(), &d.host.shape()).unwrap();
        assert_eq!(cert.block_count, need);
        assert_eq!(develop(d).unwrap().len() as u64, need);
        assert_eq!(cert.edge_count, d.host.edge_count());
    }
}

#[test]
fn round_trip_every_file() {
    for (name, text) in BUILTIN_FILES {
        let entries = parse_catalogue(text).unwrap();
        assert!(!entries.is_empty(), "{name}");
        let again = parse_catalogue(&serialize(&entries)).unwrap();
        assert_eq!(entries, again, "{name}");
    }
}

#[test]
fn k20_file() {
    let (_, text) = BUILTIN_FILES.iter().find(|(n, _)| *n == "e10_k20.cat").unwrap();
    let entries = parse_catalogue(text).unwrap();
    assert_eq!(entries.len(), 7);
    assert!(entries.iter().all(|e| e.decomposition.base_blocks.len() == 7));
}

#[test]
fn parse_edge_cases() {
    assert!(parse_catalogue("").unwrap().is_empty());
    assert_eq!(serialize(&[]), HEADER);
    let short = "entry theta(1,2,7) host K(20)\nblock: 0 1 2 3 4 5 6 7\nend\n";
    assert!(matches!(parse_catalogue(short), Err(CatalogueError::ArityMismatch { expected: 9, got: 8, .. })));
    let out = "entry theta(1,2,7) host K(20)\nblock: 0 1 2 3 4 5 6 7 20\nend\n";
    assert!(matches!(parse_catalogue(out), Err(CatalogueError::PointOutOfRange { point: 20, .. })));
    let bad = "entry theta(1,2,7) hots K(20)\n";
    match parse_catalogue(bad) {
        Err(CatalogueError::Syntax { line, .. }) => assert_eq!(line, 1),
        other => panic!("{other:?}"),
    }
}

#[test]
fn lookup_examples() {
    let cat = Catalogue::standard();
    let entry = cat.lookup(&make_theta(4, 4, 4).unwrap(), &HostShape::Complete(24)).unwrap();
    assert_eq!(entry.decomposition.base_blocks.len(), 11);
    assert_eq!(entry.decomposition.developed_count, 6);
    let all_even = make_theta(2, 2, 6).unwrap();
    assert!(matches!(
        cat.lookup(&all_even, &HostShape::multipartite(vec![10, 10, 10])),
        Err(CatalogueError::NotFound { .. })
    ));
    assert!(cat.lookup(&make_theta(1, 2, 2).unwrap(), &HostShape::Complete(5)).is_err());
}

#[test]
fn parse_checked_rejects_bad_entries() {
    let (_, text) = BUILTIN_FILES.iter().find(|(n, _)| *n == "e10_k20.cat").unwrap();
    let broken = text.replacen("block: 4 17 0 9 7 1 12 15 13", "block: 4 17 0 9 7 1 12 15 14", 1);
    assert_ne!(&broken, text);
    assert!(matches!(Catalogue::parse_checked(&broken), Err(CatalogueError::Unverified { .. })));
}

#[test]
fn load_dir_reads_written_files() {
    let dir = std::env::temp_dir().join(format!("theta-cat-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let entries = Catalogue::builtin().entries()[..3].to_vec();
    std::fs::write(dir.join("a.cat"), serialize(&entries)).unwrap();
    std::fs::write(dir.join("ignored.txt"), "junk").unwrap();
    assert_eq!(Catalogue::load_dir(&dir).unwrap(), entries);
    assert!(Catalogue::load_dir(&dir.join("absent")).unwrap().is_empty());
    std::fs::remove_dir_all(&dir).unwrap();
}

mod synthetic {
    use super::*;
    use proptest::prelude::*;
    use theta_design::{CatalogueEntry, Decomposition, GroupAction, HostGraph, ThetaBlock};

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn one_entry_round_trip(e in 10u32..=15, extra in 0u32..10, step in 1u32..5, seed in any::<u64>()) {
            use rand::seq::index::sample;
            use rand::SeedableRng;
            let list = enumerate_thetas(e);
            let theta = list[(seed % list.len() as u64) as usize];
            let n = theta.vertex_count() as u32 + extra;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let blocks: Vec<ThetaBlock> = (0..3)
                .map(|_| ThetaBlock::new(theta, sample(&mut rng, n as usize, theta.vertex_count()).iter().map(|x| x as u32).collect()).unwrap())
                .collect();
            let action = GroupAction::cyclic(n - 1, step % (n - 1), 1).unwrap();
            let d = Decomposition::new(theta, HostGraph::complete(n), action, blocks, 2).unwrap();
            let entry = CatalogueEntry { decomposition: d, source: "synthetic".into() };
            let parsed = parse_catalogue(&serialize(std::slice::from_ref(&entry))).unwrap();
            prop_assert_eq!(parsed, vec![entry]);
        }
    }
}
