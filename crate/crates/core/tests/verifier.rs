mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use theta_design::{
    oracle_verify, verify_decomposition, verify_gdd_certificate, Decomposition, Gdd, HostGraph, ThetaBlock,
    ViolationKind,
};

fn agree(d: &Decomposition) -> bool {
    let (a, b) = (verify_decomposition(d), oracle_verify(d));
    a.verdict == b.verdict && a.block_count == b.block_count
}

#[test]
fn oracle_agrees_on_shipped_entries() {
    for entry in common::shipped() {
        let d = &entry.decomposition;
        assert!(oracle_verify(d).accepted(), "{} {}", d.theta, d.host.label());
        assert!(agree(d));
    }
}

#[test]
fn empty_decompositions() {
    let theta = theta_design::make_theta(1, 2, 7).unwrap();
    for n in [0, 1] {
        let d = Decomposition::empty(theta, n);
        assert!(verify_decomposition(&d).accepted());
        assert!(oracle_verify(&d).accepted());
        assert_eq!(verify_decomposition(&d).block_count, 0);
    }
}

#[test]
fn injected_within_part_edge_is_reported() {
    for entry in common::shipped().iter().filter(|e| !e.host().is_complete()).take(20) {
        let d = &entry.decomposition;
        let parts = d.host.parts().unwrap();
        let mut m = d.clone();
        let tuple = m.base_blocks[0].vertices().to_vec();
        // v1 and v2 are adjacent when a = 1; otherwise the first path vertex is.
        let anchor = tuple[0];
        let neighbour = if d.theta.a() == 1 { 1 } else { 2 };
        let part = &parts[d.host.part_of(anchor).unwrap() as usize];
        let Some(&same) = part.iter().find(|&&p| p != anchor && !tuple.contains(&p)) else { continue };
        let mut t = tuple.clone();
        t[neighbour] = same;
        m.base_blocks[0] = ThetaBlock::new(d.theta, t).unwrap();
        let cert = verify_decomposition(&m);
        assert!(!cert.accepted());
        assert!(cert.total(ViolationKind::WithinPartEdge) > 0);
        assert!(agree(&m));
    }
}

#[test]
fn gdd_certificates() {
    let trivial = Gdd::new(4, (0..4).map(|p| vec![p]).collect(), vec![vec![0, 1, 2, 3]], BTreeSet::from([4]));
    assert!(verify_gdd_certificate(&trivial).accepted());
    let fano: Vec<Vec<u32>> = (0..7).map(|i| vec![i, (i + 1) % 7, (i + 3) % 7]).collect();
    let fano = Gdd::new(7, (0..7).map(|p| vec![p]).collect(), fano, BTreeSet::from([3]));
    assert!(verify_gdd_certificate(&fano).accepted());
    let groups = vec![vec![0, 1], vec![2, 3], vec![4, 5]];
    let blocks = vec![vec![0, 2, 4], vec![0, 3, 5], vec![1, 2, 5], vec![1, 3, 4]];
    let full = Gdd::new(6, groups.clone(), blocks.clone(), BTreeSet::from([3]));
    assert!(verify_gdd_certificate(&full).accepted());
    let short = Gdd::new(6, groups, blocks[1..].to_vec(), BTreeSet::from([3]));
    let cert = verify_gdd_certificate(&short);
    assert!(!cert.accepted());
    assert_eq!(cert.total(ViolationKind::MissingEdge), 3);
    let wrong_size = Gdd::new(6, vec![vec![0, 1], vec![2, 3], vec![4, 5]], vec![vec![0, 2]], BTreeSet::from([3]));
    assert!(verify_gdd_certificate(&wrong_size).total(ViolationKind::MalformedBlock) > 0);
}

#[test]
fn collision_mutation_names_edges() {
    let entry = &common::shipped()[0];
    let d = &entry.decomposition;
    let mut m = d.clone();
    let mut t = m.base_blocks[0].vertices().to_vec();
    t[2] = (0..d.host.order()).find(|p| !t.contains(p)).unwrap();
    m.base_blocks[0] = ThetaBlock::new(d.theta, t).unwrap();
    let cert = verify_decomposition(&m);
    assert!(cert.total(ViolationKind::DuplicateEdge) + cert.total(ViolationKind::WithinPartEdge) > 0);
    assert!(cert.total(ViolationKind::MissingEdge) > 0);
    assert_eq!(oracle_verify(&m).verdict, cert.verdict);
}

#[test]
fn host_edge_counts() {
    assert_eq!(HostGraph::complete(20).edge_count(), 190);
    assert_eq!(HostGraph::multipartite_contiguous(&[8, 8, 8, 24]).edge_count(), 768);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn oracle_agrees_on_mutations(idx in any::<prop::sample::Index>(), seed in any::<u64>()) {
        use rand::SeedableRng;
        let entries = common::shipped();
        let d = &entries[idx.index(entries.len())].decomposition;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = common::random_mutation(d, &mut rng);
        prop_assert!(agree(&m));
    }
}
