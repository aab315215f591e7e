mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use theta_design::{develop, verify_decomposition, Decomposition, GroupAction, HostGraph, ThetaBlock};

#[test]
fn spec_examples() {
    let a = GroupAction::cyclic(20, 4, 0).unwrap();
    assert_eq!(a.apply(18).unwrap(), 2);
    assert_eq!(a.order(), 5);
    assert_eq!(GroupAction::cyclic(24, 8, 0).unwrap().order(), 3);
    assert_eq!(GroupAction::identity(7).order(), 1);
    let k16 = GroupAction::cyclic(15, 5, 1).unwrap();
    assert_eq!(k16.apply(15).unwrap(), 15);
    assert!(k16.apply(16).is_err());
}

#[test]
fn small_entries_develop_to_stated_counts() {
    let cat = theta_design::Catalogue::builtin();
    let theta = theta_design::make_theta(1, 2, 7).unwrap();
    let k20 = cat.lookup(&theta, &theta_design::HostShape::Complete(20)).unwrap();
    assert_eq!((k20.decomposition.base_blocks.len(), k20.decomposition.developed_count), (7, 3));
    assert_eq!(develop(&k20.decomposition).unwrap().len(), 19);
    let theta = theta_design::make_theta(4, 4, 4).unwrap();
    let k24 = cat.lookup(&theta, &theta_design::HostShape::Complete(24)).unwrap();
    assert_eq!((k24.decomposition.base_blocks.len(), k24.decomposition.developed_count), (11, 6));
    assert_eq!(k24.decomposition.action.order(), 3);
    assert_eq!(develop(&k24.decomposition).unwrap().len(), 23);
}

#[test]
fn actions_are_bijections_and_preserve_parts() {
    for entry in common::shipped() {
        let d = &entry.decomposition;
        let images: BTreeSet<u32> = d.action.images().iter().copied().collect();
        assert_eq!(images.len() as u32, d.host.order());
        assert!(images.iter().all(|&p| p < d.host.order()));
        assert!(d.action.permutes_parts(&d.host), "{} {}", d.theta, d.host.label());
    }
}

#[test]
fn develop_counts_and_set_invariance() {
    for entry in common::shipped() {
        let d = &entry.decomposition;
        let blocks = develop(d).unwrap();
        let need = theta_design::copy_counts(d.theta.edge_count(), &d.host.shape()).unwrap();
        assert_eq!(blocks.len() as u64, need, "{} {}", d.theta, d.host.label());
        if d.developed_count == d.base_blocks.len() {
            let set: BTreeSet<Vec<u32>> = blocks.iter().map(|b| b.vertices().to_vec()).collect();
            let image: BTreeSet<Vec<u32>> = blocks
                .iter()
                .map(|b| b.vertices().iter().map(|&p| d.action.apply(p).unwrap()).collect())
                .collect();
            assert_eq!(set, image, "{} {}", d.theta, d.host.label());
        }
    }
}

#[test]
fn undeveloped_blocks_pass_through() {
    let theta = theta_design::make_theta(1, 2, 2).unwrap();
    let blocks: Vec<ThetaBlock> = (0..4).map(|i| ThetaBlock::new(theta, vec![i, i + 1, i + 2, i + 3]).unwrap()).collect();
    let d = Decomposition::new(theta, HostGraph::complete(8), GroupAction::cyclic(8, 1, 0).unwrap(), blocks.clone(), 0)
        .unwrap();
    assert_eq!(develop(&d).unwrap(), blocks);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Relabelling every developed block by one permutation keeps a design valid.
    #[test]
    fn conjugation_invariance(idx in any::<prop::sample::Index>(), perm_seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let entries = common::shipped();
        let entry = &entries[idx.index(entries.len())];
        let d = &entry.decomposition;
        prop_assume!(d.host.is_complete());
        let n = d.host.order();
        let mut sigma: Vec<u32> = (0..n).collect();
        sigma.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed));
        let blocks: Vec<ThetaBlock> = develop(d)
            .unwrap()
            .iter()
            .map(|b| b.map(|p| sigma[p as usize]).unwrap())
            .collect();
        let relabelled = Decomposition::explicit(d.theta, d.host.clone(), blocks);
        prop_assert!(verify_decomposition(&relabelled).accepted());
        let table = d.action.conjugate_table(&sigma);
        for p in 0..n {
            prop_assert_eq!(table[sigma[p as usize] as usize], sigma[d.action.apply(p).unwrap() as usize]);
        }
    }
}
