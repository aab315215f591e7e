//! Stochastic local search for base blocks under a prescribed action.
//!
//! The state is a list of candidate base blocks. Coverage is tracked per host
//! pair over the full development, and the cost is the total deviation from
//! exact single coverage. Moves re-randomize one vertex of one block.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::action::{Decomposition, GroupAction};
use crate::theta::{copy_counts, edge_index, HostGraph, Point, ThetaBlock, ThetaGraph};
use crate::verify::verify_decomposition;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("search budget exhausted (best cost {best_cost})")]
    BudgetExhausted { best_cost: u64 },
    #[error("infeasible arity: {0}")]
    InfeasibleArity(String),
}

/// FNV-1a, used wherever a seed must be derived from a name.
pub fn stable_hash(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub restarts: u32,
    pub steps: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            restarts: 64,
            steps: 200_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchProblem {
    pub theta: ThetaGraph,
    pub host: HostGraph,
    pub action: GroupAction,
    pub developed_count: usize,
    pub fixed_count: usize,
    pub budget: Budget,
    pub seed: u64,
    /// Upper bound on parallel restarts; 0 means the rayon default.
    pub jobs: usize,
}

impl SearchProblem {
    /// A problem with the default budget and a seed derived from its data.
    pub fn new(theta: ThetaGraph, host: HostGraph, action: GroupAction, developed_count: usize, fixed_count: usize) -> Self {
        let seed = stable_hash(&format!("{theta} {} {action} {developed_count} {fixed_count}", host.label()));
        Self {
            theta,
            host,
            action,
            developed_count,
            fixed_count,
            budget: Budget::default(),
            seed,
            jobs: 0,
        }
    }

    /// `+step mod modulus` on `0..modulus`, with any further points fixed.
    pub fn cyclic(theta: ThetaGraph, n: u32, modulus: u32, step: u32, developed: usize, fixed: usize) -> Result<Self, SearchError> {
        if modulus == 0 || modulus > n {
            return Err(SearchError::InfeasibleArity(format!("modulus {modulus} does not fit K{n}")));
        }
        let action =
            GroupAction::cyclic(modulus, step, n - modulus).map_err(|e| SearchError::InfeasibleArity(e.to_string()))?;
        Ok(Self::new(theta, HostGraph::complete(n), action, developed, fixed))
    }

    fn check_arity(&self) -> Result<(), SearchError> {
        let need = copy_counts(self.theta.edge_count(), &self.host.shape())
            .map_err(|e| SearchError::InfeasibleArity(e.to_string()))?;
        let have = self.developed_count as u64 * self.action.order() + self.fixed_count as u64;
        if have != need {
            return Err(SearchError::InfeasibleArity(format!(
                "{} developed x order {} + {} fixed = {have}, host needs {need}",
                self.developed_count,
                self.action.order(),
                self.fixed_count
            )));
        }
        if self.action.point_count() != self.host.order() || self.theta.vertex_count() > self.host.order() as usize {
            return Err(SearchError::InfeasibleArity("action or theta does not fit the host".into()));
        }
        Ok(())
    }
}

/// Finds a verified decomposition from random starts.
pub fn search(p: &SearchProblem) -> Result<Decomposition, SearchError> {
    run(p, None)
}

/// As [`search`], with the first restart starting from `warm_start`.
pub fn resume(p: &SearchProblem, warm_start: &[ThetaBlock]) -> Result<Decomposition, SearchError> {
    if warm_start.len() != p.developed_count + p.fixed_count
        || warm_start.iter().any(|b| b.theta() != &p.theta || b.vertices().iter().any(|&v| v >= p.host.order()))
    {
        return Err(SearchError::InfeasibleArity(format!(
            "warm start has {} blocks, problem needs {} of {} on {} points",
            warm_start.len(),
            p.developed_count + p.fixed_count,
            p.theta,
            p.host.order()
        )));
    }
    run(p, Some(warm_start))
}

/// Total coverage deviation of `blocks` developed under the problem's action.
pub fn cost(p: &SearchProblem, blocks: &[ThetaBlock]) -> Result<u64, SearchError> {
    p.check_arity()?;
    if blocks.len() != p.developed_count + p.fixed_count
        || blocks.iter().any(|b| b.vertices().iter().any(|&v| v >= p.host.order()))
    {
        return Err(SearchError::InfeasibleArity(format!(
            "expected {} blocks on {} points",
            p.developed_count + p.fixed_count,
            p.host.order()
        )));
    }
    let ctx = Ctx::new(p);
    let st = State::new(&ctx, blocks.iter().map(|b| b.vertices().to_vec()).collect());
    Ok(st.cost as u64)
}

fn run(p: &SearchProblem, warm: Option<&[ThetaBlock]>) -> Result<Decomposition, SearchError> {
    p.check_arity()?;
    let ctx = Ctx::new(p);
    if let Some(w) = warm {
        let blocks: Vec<Vec<Point>> = w.iter().map(|b| b.vertices().to_vec()).collect();
        let st = State::new(&ctx, blocks);
        if st.cost == 0 {
            if let Some(d) = finish(p, &st.blocks) {
                return Ok(d);
            }
        }
    }
    if p.budget.restarts == 0 || p.budget.steps == 0 {
        return Err(SearchError::BudgetExhausted { best_cost: u64::MAX });
    }
    let winner = AtomicUsize::new(usize::MAX);
    let attempt = |r: usize| -> Result<Decomposition, u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed.wrapping_add(r as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let init = match (r, warm) {
            (0, Some(w)) => w.iter().map(|b| b.vertices().to_vec()).collect(),
            _ => ctx.random_blocks(&mut rng),
        };
        let mut st = State::new(&ctx, init);
        let res = st.climb(&ctx, &mut rng, p.budget.steps, || winner.load(Ordering::Relaxed) < r);
        if res == 0 {
            if let Some(d) = finish(p, &st.blocks) {
                winner.fetch_min(r, Ordering::Relaxed);
                return Ok(d);
            }
        }
        Err(st.best)
    };
    let restarts: Vec<usize> = (0..p.budget.restarts as usize).collect();
    let results: Vec<Result<Decomposition, u64>> = if p.jobs == 1 {
        let mut out = Vec::new();
        for r in restarts {
            let res = attempt(r);
            let done = res.is_ok();
            out.push(res);
            if done {
                break;
            }
        }
        out
    } else if p.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(p.jobs).build();
        match pool {
            Ok(pool) => pool.install(|| restarts.par_iter().map(|&r| attempt(r)).collect()),
            Err(_) => restarts.par_iter().map(|&r| attempt(r)).collect(),
        }
    } else {
        restarts.par_iter().map(|&r| attempt(r)).collect()
    };
    let mut best = u64::MAX;
    for res in results {
        match res {
            Ok(d) => return Ok(d),
            Err(c) => best = best.min(c),
        }
    }
    Err(SearchError::BudgetExhausted { best_cost: best })
}

fn finish(p: &SearchProblem, blocks: &[Vec<Point>]) -> Option<Decomposition> {
    let blocks: Vec<ThetaBlock> = blocks
        .iter()
        .map(|b| ThetaBlock::new(p.theta, b.clone()))
        .collect::<Result<_, _>>()
        .ok()?;
    let d = Decomposition::new(p.theta, p.host.clone(), p.action.clone(), blocks, p.developed_count).ok()?;
    verify_decomposition(&d).accepted().then_some(d)
}

/// Shared read-only search data.
struct Ctx {
    n: u32,
    vcount: usize,
    developed: usize,
    total: usize,
    /// `powers[g][x]`: image of `x` under the `g`-th power, for the full orbit.
    powers: Vec<Vec<Point>>,
    host_pair: Vec<bool>,
    /// Position pairs of the theta, and for each position the incident pairs.
    pos_edges: Vec<(usize, usize)>,
    incident: Vec<Vec<usize>>,
}

impl Ctx {
    fn new(p: &SearchProblem) -> Self {
        let n = p.host.order();
        let order = p.action.order();
        let mut powers = Vec::with_capacity(order as usize);
        let mut cur: Vec<Point> = (0..n).collect();
        for _ in 0..order {
            powers.push(cur.clone());
            for x in cur.iter_mut() {
                *x = p.action.images()[*x as usize];
            }
        }
        let mut host_pair = vec![false; (n as usize) * (n as usize).saturating_sub(1) / 2];
        for (u, v) in p.host.edges() {
            host_pair[edge_index(u, v)] = true;
        }
        let pos_edges = p.theta.position_edges();
        let mut incident = vec![Vec::new(); p.theta.vertex_count()];
        for (i, &(a, b)) in pos_edges.iter().enumerate() {
            incident[a].push(i);
            incident[b].push(i);
        }
        Self {
            n,
            vcount: p.theta.vertex_count(),
            developed: p.developed_count,
            total: p.developed_count + p.fixed_count,
            powers,
            host_pair,
            pos_edges,
            incident,
        }
    }

    fn random_blocks(&self, rng: &mut ChaCha8Rng) -> Vec<Vec<Point>> {
        (0..self.total)
            .map(|_| rand::seq::index::sample(rng, self.n as usize, self.vcount).iter().map(|x| x as Point).collect())
            .collect()
    }

    fn pair_cost(&self, idx: usize, cov: i32) -> i64 {
        if self.host_pair[idx] {
            (cov - 1).abs() as i64
        } else {
            cov as i64
        }
    }
}

struct State {
    blocks: Vec<Vec<Point>>,
    cov: Vec<i32>,
    cost: i64,
    best: u64,
}

impl State {
    fn new(ctx: &Ctx, blocks: Vec<Vec<Point>>) -> Self {
        let cov = vec![0; ctx.host_pair.len()];
        let cost = ctx.host_pair.iter().filter(|&&h| h).count() as i64;
        let mut st = Self {
            blocks,
            cov,
            cost,
            best: u64::MAX,
        };
        for b in 0..st.blocks.len() {
            for e in 0..ctx.pos_edges.len() {
                st.touch(ctx, b, e, 1);
            }
        }
        st.best = st.cost as u64;
        st
    }

    /// Adds `sign` times the development of edge `e` of block `b`.
    fn touch(&mut self, ctx: &Ctx, b: usize, e: usize, sign: i32) {
        let (i, j) = ctx.pos_edges[e];
        let (u, v) = (self.blocks[b][i], self.blocks[b][j]);
        let mut bump = |x: Point, y: Point| {
            let idx = edge_index(x.min(y), x.max(y));
            self.cost -= ctx.pair_cost(idx, self.cov[idx]);
            self.cov[idx] += sign;
            self.cost += ctx.pair_cost(idx, self.cov[idx]);
        };
        if b < ctx.developed {
            for pw in &ctx.powers {
                bump(pw[u as usize], pw[v as usize]);
            }
        } else {
            bump(u, v);
        }
    }

    fn set_vertex(&mut self, ctx: &Ctx, b: usize, pos: usize, val: Point) {
        for &e in &ctx.incident[pos] {
            self.touch(ctx, b, e, -1);
        }
        self.blocks[b][pos] = val;
        for &e in &ctx.incident[pos] {
            self.touch(ctx, b, e, 1);
        }
    }

    /// Badness of one vertex: cost attached to the base pairs it meets.
    fn vertex_badness(&self, ctx: &Ctx, b: usize, pos: usize) -> i64 {
        ctx.incident[pos]
            .iter()
            .map(|&e| {
                let (i, j) = ctx.pos_edges[e];
                let (u, v) = (self.blocks[b][i], self.blocks[b][j]);
                let idx = edge_index(u.min(v), u.max(v));
                ctx.pair_cost(idx, self.cov[idx]) + i64::from(self.cov[idx] != 1)
            })
            .sum()
    }

    fn climb(&mut self, ctx: &Ctx, rng: &mut ChaCha8Rng, steps: u64, cancelled: impl Fn() -> bool) -> i64 {
        let mut best = self.cost;
        let mut since_best = 0u64;
        let stagnation = 20_000 + 50 * ctx.host_pair.len() as u64;
        for step in 0..steps {
            if self.cost == 0 {
                break;
            }
            if step % 4096 == 0 && cancelled() {
                break;
            }
            let b = rng.gen_range(0..self.blocks.len());
            // Prefer the worse of two sampled vertices.
            let p1 = rng.gen_range(0..ctx.vcount);
            let p2 = rng.gen_range(0..ctx.vcount);
            let pos = if self.vertex_badness(ctx, b, p1) >= self.vertex_badness(ctx, b, p2) {
                p1
            } else {
                p2
            };
            let old = self.blocks[b][pos];
            let before = self.cost;
            let mut best_val = old;
            let mut best_cost = i64::MAX;
            for _ in 0..4 {
                let val = rng.gen_range(0..ctx.n);
                if self.blocks[b].contains(&val) {
                    continue;
                }
                self.set_vertex(ctx, b, pos, val);
                if self.cost < best_cost {
                    best_cost = self.cost;
                    best_val = val;
                }
                self.set_vertex(ctx, b, pos, old);
            }
            if best_val == old {
                continue;
            }
            if best_cost <= before || rng.gen_range(0..1000) < 3 {
                self.set_vertex(ctx, b, pos, best_val);
            }
            if self.cost < best {
                best = self.cost;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best > stagnation {
                    let keep = self.best;
                    *self = State::new(ctx, ctx.random_blocks(rng));
                    self.best = keep.min(self.best);
                    since_best = 0;
                    best = self.cost;
                }
            }
            self.best = self.best.min(self.cost as u64);
        }
        self.best = self.best.min(self.cost as u64);
        self.cost
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable() {
        assert_eq!(stable_hash(""), 0xcbf2_9ce4_8422_2325);
        assert_ne!(stable_hash("a"), stable_hash("b"));
    }

    #[test]
    fn zero_budget_exhausts() {
        let theta = ThetaGraph::new(1, 2, 7).unwrap();
        let mut p = SearchProblem::cyclic(theta, 21, 21, 1, 1, 0).unwrap();
        p.budget.restarts = 0;
        assert!(matches!(search(&p), Err(SearchError::BudgetExhausted { .. })));
    }

    #[test]
    fn arity_checked() {
        let theta = ThetaGraph::new(1, 2, 7).unwrap();
        let p = SearchProblem::cyclic(theta, 21, 21, 1, 2, 0).unwrap();
        assert!(matches!(search(&p), Err(SearchError::InfeasibleArity(_))));
    }
}
