#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use theta_design::{Catalogue, CatalogueEntry, Decomposition, ThetaBlock};

/// Every shipped entry, tabulated and derived.
pub fn shipped() -> Vec<CatalogueEntry> {
    Catalogue::standard().entries().to_vec()
}

/// Replaces one vertex of one base block by a point outside that block.
pub fn mutate_vertex<R: Rng>(d: &Decomposition, rng: &mut R) -> Decomposition {
    let mut out = d.clone();
    let n = d.host.order();
    let i = rng.gen_range(0..out.base_blocks.len());
    let mut tuple = out.base_blocks[i].vertices().to_vec();
    let j = rng.gen_range(0..tuple.len());
    let free: Vec<u32> = (0..n).filter(|p| !tuple.contains(p)).collect();
    tuple[j] = *free.choose(rng).expect("host larger than a block");
    out.base_blocks[i] = ThetaBlock::new(d.theta, tuple).expect("distinct vertices");
    out
}

/// Swaps two vertices inside one base block.
pub fn swap_vertices<R: Rng>(d: &Decomposition, rng: &mut R) -> Decomposition {
    let mut out = d.clone();
    let i = rng.gen_range(0..out.base_blocks.len());
    let mut tuple = out.base_blocks[i].vertices().to_vec();
    let a = rng.gen_range(0..tuple.len());
    let b = rng.gen_range(0..tuple.len());
    tuple.swap(a, b);
    out.base_blocks[i] = ThetaBlock::new(d.theta, tuple).expect("distinct vertices");
    out
}

/// Drops a base block, or duplicates one.
pub fn change_block_count<R: Rng>(d: &Decomposition, rng: &mut R) -> Decomposition {
    let mut out = d.clone();
    let i = rng.gen_range(0..out.base_blocks.len());
    if rng.gen_bool(0.5) {
        out.base_blocks.remove(i);
        out.developed_count = out.developed_count.min(out.base_blocks.len());
        if i < d.developed_count {
            out.developed_count = d.developed_count - 1;
        }
    } else {
        let b = out.base_blocks[i].clone();
        out.base_blocks.push(b);
    }
    out
}

/// A random mutation of one of several kinds.
pub fn random_mutation<R: Rng>(d: &Decomposition, rng: &mut R) -> Decomposition {
    match rng.gen_range(0..4) {
        0 | 1 => mutate_vertex(d, rng),
        2 => swap_vertices(d, rng),
        _ => change_block_count(d, rng),
    }
}

/// Sorted multiset of host edges covered by every developed block.
pub fn developed_edges(d: &Decomposition) -> Vec<(u32, u32)> {
    let image = d.action.images();
    let edges = d.theta.position_edges();
    let mut out = Vec::new();
    for (i, base) in d.base_blocks.iter().enumerate() {
        let reps = if i < d.developed_count { d.action.order() } else { 1 };
        let mut cur = base.vertices().to_vec();
        for _ in 0..reps {
            out.extend(edges.iter().map(|&(a, b)| theta_design::theta::ordered(cur[a], cur[b])));
            for p in cur.iter_mut() {
                *p = image[*p as usize];
            }
        }
    }
    out.sort_unstable();
    out
}
