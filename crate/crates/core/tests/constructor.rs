use std::collections::BTreeMap;
use std::sync::OnceLock;

use theta_design::construct::{
    residue_class_set, general_generated, theta12_generated, theta15_generated, InflationGoals,
};
use theta_design::{
    construct, develop, enumerate_thetas, execute, inflate, make_theta, plan, realize_master, spectrum_table,
    verify_decomposition, ConstructError, ConstructionPlan, Context, HostShape, Step,
};

fn ctx() -> &'static Context {
    static CTX: OnceLock<Context> = OnceLock::new();
    CTX.get_or_init(|| Context::new(Some(std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("theta-cache"))))
}

#[test]
fn plan_examples() {
    let p = plan(ctx(), &make_theta(1, 2, 7).unwrap(), 76).unwrap();
    assert_eq!(p.step, Step::PatchCase { name: "15p+f'".into() });
    let goals: Vec<String> = p.children.iter().map(|(c, _)| c.goal.to_string()).collect();
    assert_eq!(goals, ["K(16)", "K(5,5,5,5)"]);
    assert!(p.inflation.as_ref().unwrap().infinity);

    let p = plan(ctx(), &make_theta(2, 2, 6).unwrap(), 36).unwrap();
    assert_eq!(p.step, Step::BipartiteTower { d: 5, f: 2, r: 2, s: 1, g: 3, e: 1, t: 1 });
    let mut goals: Vec<String> = p.children.iter().map(|(c, _)| c.goal.to_string()).collect();
    goals.sort();
    assert_eq!(goals, ["K(16)", "K(21)", "K(5,10)"]);

    let p = plan(ctx(), &make_theta(1, 2, 8).unwrap(), 22).unwrap();
    assert!(matches!(p.step, Step::CatalogueLeaf { .. }));

    let p = plan(ctx(), &make_theta(5, 5, 5).unwrap(), 85).unwrap();
    assert_eq!(p.step, Step::BipartiteAlt { r: 15, s: 25, e: 0, t: 4 });
}

#[test]
fn dispatch_by_parity() {
    let c = ctx();
    let step = |a, b, cc, n| plan(c, &make_theta(a, b, cc).unwrap(), n).unwrap().step;
    assert!(matches!(step(2, 4, 4, 100), Step::BipartiteTower { d: 5, r: 2, s: 1, f: 2, .. }));
    assert!(matches!(step(2, 2, 10, 141), Step::BipartiteTower { d: 7, r: 2, s: 1, f: 2, .. }));
    assert!(matches!(step(2, 2, 8, 96), Step::BipartiteTower { d: 4, r: 3, s: 2, f: 1, .. }));
    assert!(matches!(step(1, 3, 7, 55), Step::BipartiteTower { d: 11, r: 1, s: 1, f: 1, g: 0, .. }));
    assert!(matches!(step(1, 3, 9, 65), Step::BipartiteTower { d: 13, .. }));
    assert!(matches!(step(1, 3, 11, 130), Step::BipartiteAlt { .. }));
    assert!(matches!(step(1, 2, 8, 55), Step::PrimeTripartite { p: 11, t: 5, e: 0 }));
    assert!(matches!(step(1, 2, 8, 67), Step::PatchCase { .. }));
    assert!(matches!(step(1, 2, 7, 100), Step::TwoPrimeTripartite { p: 5, .. }));
    assert!(matches!(step(1, 2, 11, 141), Step::TwoPrimeTripartite { p: 7, .. }));
    assert!(matches!(step(1, 2, 9, 120), Step::Theta12Tower { .. }));
    assert!(matches!(step(1, 2, 12, 136), Step::Theta15Tower { .. }));
    assert!(matches!(step(1, 2, 12, 85), Step::PatchCase { .. }));
}

#[test]
fn execute_examples() {
    let c = ctx();
    for (t, n, blocks) in [((1, 2, 7), 76u64, 285u64), ((4, 5, 6), 15, 7), ((1, 3, 6), 100, 495)] {
        let theta = make_theta(t.0, t.1, t.2).unwrap();
        let d = construct(c, &theta, n).unwrap();
        let cert = verify_decomposition(&d);
        assert!(cert.accepted());
        assert_eq!(cert.block_count, blocks);
        assert_eq!(develop(&d).unwrap().len() as u64, blocks);
    }
}

#[test]
fn refusals() {
    let theta = make_theta(1, 2, 7).unwrap();
    assert!(matches!(plan(ctx(), &theta, 5), Err(ConstructError::NotInSpectrum { .. })));
    assert!(matches!(plan(ctx(), &theta, 22), Err(ConstructError::NotInSpectrum { .. })));
    assert!(plan(ctx(), &make_theta(1, 2, 2).unwrap(), 11).is_err());
}

#[test]
fn spectrum_table_examples() {
    let c = ctx();
    let ok = |t: (u32, u32, u32), n| -> Vec<u64> {
        spectrum_table(c, &make_theta(t.0, t.1, t.2).unwrap(), n)
            .into_iter()
            .filter(|&(_, ok)| ok)
            .map(|(n, _)| n)
            .collect()
    };
    assert_eq!(ok((1, 2, 7), 100), [0, 1, 16, 20, 21, 25, 36, 40, 41, 45, 56, 60, 61, 65, 76, 80, 81, 85, 96, 100]);
    assert_eq!(ok((1, 4, 6), 23), [0, 1, 11, 12, 22, 23]);
    assert_eq!(ok((2, 3, 5), 1), [0, 1]);
}

#[test]
fn inflation_examples() {
    let c = ctx();
    let pbd = c.gdds().provide_gdd(&[3, 4, 5], &[1; 11]).unwrap();
    let goals = inflate(&pbd, &[11; 11], 0);
    assert_eq!(goals.overlays, BTreeMap::from([(11, 11)]));
    assert!(goals.blocks.keys().all(|h| matches!(h, HostShape::Multipartite(p) if p.iter().all(|&x| x == 11) && (3..=5).contains(&p.len()))));

    let g = c.gdds().provide_gdd(&[3], &[2, 2, 2]).unwrap();
    let goals = inflate(&g, &[10; 6], 1);
    assert_eq!(goals.overlays, BTreeMap::from([(21, 3)]));
    assert_eq!(goals.blocks, BTreeMap::from([(HostShape::multipartite(vec![10, 10, 10]), 4)]));

    let goals = inflate(&g, &[1; 6], 0);
    assert_eq!(goals.blocks, BTreeMap::from([(HostShape::multipartite(vec![1, 1, 1]), 4)]));
}

fn goal_counts(goals: &InflationGoals) -> BTreeMap<HostShape, u64> {
    let mut out: BTreeMap<HostShape, u64> = goals.blocks.clone();
    for (&order, &k) in &goals.overlays {
        if order > 1 {
            *out.entry(HostShape::Complete(order)).or_default() += k;
        }
    }
    out
}

/// Children of every internal node are the ingredients its master needs;
/// goals with open counts may go unused.
fn check_children(c: &Context, p: &ConstructionPlan) {
    let Some(inf) = &p.inflation else {
        assert!(p.children.is_empty());
        return;
    };
    assert_eq!(HostShape::Complete(inf.order()), p.goal);
    let g = realize_master(c, &inf.master).unwrap();
    let need = goal_counts(&inflate(&g, &inf.weights, u32::from(inf.infinity)));
    let have: BTreeMap<HostShape, Option<u64>> = p.children.iter().map(|(c, k)| (c.goal.clone(), *k)).collect();
    for goal in need.keys() {
        assert!(have.contains_key(goal), "{} {} lacks {goal}", p.theta, p.goal);
    }
    for (goal, k) in &have {
        if let Some(k) = k {
            assert_eq!(need.get(goal), Some(k), "{} {} -> {goal}", p.theta, p.goal);
        }
    }
    for (child, _) in &p.children {
        check_children(c, child);
    }
}

#[test]
fn plan_children_match_ingredients() {
    let c = ctx();
    for e in 10..=15 {
        for theta in enumerate_thetas(e) {
            for n in 0..=150 {
                if let Ok(p) = plan(c, &theta, n) {
                    check_children(c, &p);
                }
            }
        }
    }
}

#[test]
fn plans_are_deterministic() {
    let theta = make_theta(1, 3, 6).unwrap();
    let a = plan(ctx(), &theta, 141).unwrap();
    let b = plan(&Context::new(None), &theta, 141).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.explain(), b.explain());
    let d1 = execute(ctx(), &a).unwrap();
    let d2 = execute(&Context::new(None), &b).unwrap();
    assert_eq!(d1, d2);
}

#[test]
fn explain_tree() {
    let p = plan(ctx(), &make_theta(2, 2, 6).unwrap(), 36).unwrap();
    let text = p.explain();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("K(36): BipartiteTower(d=5, f=2, r=2, s=1, g=3, e=1, t=1)"));
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.starts_with("  K(")));
}

#[test]
fn coverage_laws_to_2000() {
    let n_max = 2000;
    assert_eq!(general_generated(5, 0, n_max), residue_class_set(20, &[0, 1, 5, 16], &[5], n_max));
    assert_eq!(general_generated(7, 1, n_max), residue_class_set(28, &[0, 1, 8, 21], &[8], n_max));
    assert_eq!(theta12_generated(n_max), residue_class_set(24, &[0, 1, 9, 16], &[9], n_max));
    assert_eq!(theta15_generated(n_max), residue_class_set(15, &[0, 1, 6, 10], &[6, 10], n_max));
}
