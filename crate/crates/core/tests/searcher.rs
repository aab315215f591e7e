use proptest::prelude::*;
use theta_design::{
    cost, make_theta, resume, search, verify_decomposition, Budget, SearchError, SearchProblem, ThetaBlock,
};

fn k21_problem() -> SearchProblem {
    SearchProblem::cyclic(make_theta(1, 2, 7).unwrap(), 21, 21, 1, 1, 0).unwrap()
}

#[test]
fn spec_examples() {
    let d = search(&k21_problem()).unwrap();
    assert_eq!(d.base_blocks.len(), 1);
    assert_eq!(d.expanded_len(), 21);
    assert!(verify_decomposition(&d).accepted());

    let p = SearchProblem::cyclic(make_theta(2, 3, 6).unwrap(), 23, 23, 1, 1, 0).unwrap();
    assert!(verify_decomposition(&search(&p).unwrap()).accepted());

    let mut p = k21_problem();
    p.budget = Budget { restarts: 0, steps: 0 };
    assert!(matches!(search(&p), Err(SearchError::BudgetExhausted { .. })));
}

#[test]
fn arity_is_checked() {
    let p = SearchProblem::cyclic(make_theta(1, 2, 7).unwrap(), 21, 21, 1, 2, 0).unwrap();
    assert!(matches!(search(&p), Err(SearchError::InfeasibleArity(_))));
}

#[test]
fn deterministic_for_fixed_seed() {
    let mut a = k21_problem();
    a.jobs = 1;
    let mut b = k21_problem();
    b.jobs = 4;
    let first = search(&a).unwrap();
    assert_eq!(first, search(&a).unwrap());
    assert_eq!(first, search(&b).unwrap());
    let mut small = k21_problem();
    small.budget = Budget { restarts: 2, steps: 5 };
    assert_eq!(search(&small).is_ok(), search(&small).is_ok());
}

#[test]
fn resume_examples() {
    let p = k21_problem();
    let d = search(&p).unwrap();
    let mut tiny = p.clone();
    tiny.budget = Budget { restarts: 0, steps: 0 };
    assert_eq!(resume(&tiny, &d.base_blocks).unwrap(), d);

    let mut t = d.base_blocks[0].vertices().to_vec();
    t[3] = (0..21).find(|x| !t.contains(x)).unwrap();
    let perturbed = vec![ThetaBlock::new(p.theta, t).unwrap()];
    let mut small = p.clone();
    small.budget = Budget { restarts: 4, steps: 50_000 };
    assert!(verify_decomposition(&resume(&small, &perturbed).unwrap()).accepted());

    let two = vec![d.base_blocks[0].clone(), d.base_blocks[0].clone()];
    assert!(matches!(resume(&p, &two), Err(SearchError::InfeasibleArity(_))));
}

#[test]
fn cost_zero_on_accepted_entries() {
    for entry in theta_design::Catalogue::shipped_derived().entries() {
        let d = &entry.decomposition;
        let p = SearchProblem::new(d.theta, d.host.clone(), d.action.clone(), d.developed_count, d.base_blocks.len() - d.developed_count);
        assert_eq!(cost(&p, &d.base_blocks).unwrap(), 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cost_zero_iff_verifier_accepts_explicit(n_extra in 0u32..4, seed in any::<u64>()) {
        use rand::seq::index::sample;
        use rand::SeedableRng;
        let theta = make_theta(1, 2, 2).unwrap();
        let n = 5 + n_extra;
        prop_assume!(n * (n - 1) / 2 % 5 == 0);
        let total = (n * (n - 1) / 2 / 5) as usize;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let blocks: Vec<ThetaBlock> = (0..total)
            .map(|_| ThetaBlock::new(theta, sample(&mut rng, n as usize, 4).iter().map(|x| x as u32).collect()).unwrap())
            .collect();
        let p = SearchProblem::cyclic(theta, n, 1, 0, 0, total).unwrap();
        let d = theta_design::Decomposition::explicit(theta, theta_design::HostGraph::complete(n), blocks.clone());
        prop_assert_eq!(cost(&p, &blocks).unwrap() == 0, verify_decomposition(&d).accepted());
    }

    /// Multiplier images of a cyclic solution are solutions; random blocks mostly are not.
    #[test]
    fn cost_zero_iff_verifier_accepts_cyclic(k in 1u32..11, random in any::<bool>(), seed in any::<u64>()) {
        use rand::seq::index::sample;
        use rand::SeedableRng;
        let theta = make_theta(1, 2, 2).unwrap();
        let p = SearchProblem::cyclic(theta, 11, 11, 1, 1, 0).unwrap();
        let solution = search(&p).unwrap();
        let block = if random {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            ThetaBlock::new(theta, sample(&mut rng, 11, 4).iter().map(|x| x as u32).collect()).unwrap()
        } else {
            solution.base_blocks[0].map(|x| x * k % 11).unwrap()
        };
        let d = theta_design::Decomposition::new(theta, p.host.clone(), p.action.clone(), vec![block.clone()], 1).unwrap();
        let accepted = verify_decomposition(&d).accepted();
        prop_assert_eq!(cost(&p, &[block]).unwrap() == 0, accepted);
        if !random {
            prop_assert!(accepted);
        }
    }
}
