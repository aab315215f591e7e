//! Recursive constructions: planning a design of order `n` from smaller
//! ingredients, executing the plan into an explicit verified block list, and
//! the residue arithmetic behind the row tables.
//!
//! Every internal construction is one weighted inflation of a master design:
//! point `i` of the master becomes `weights[i]` consecutive points, each block
//! becomes a complete multipartite ingredient, and each group is overlaid by
//! a complete design, optionally sharing one extra point placed last.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::PathBuf;
use std::sync::{Arc, RwLock, RwLockReadGuard};

use thiserror::Error;

use crate::action::{develop, Decomposition};
use crate::catalogue::{serialize, Catalogue, CatalogueEntry, CatalogueError};
use crate::gdd::{extend_with_group, sizes_string, type_string, write_atomic, Gdd, GddProvider};
use crate::search::{search, Budget, SearchProblem};
use crate::theta::{spectrum_membership, HostGraph, HostShape, Point, ThetaBlock, ThetaGraph};
use crate::verify::verify_decomposition;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstructError {
    #[error("{theta} has no design of order {n}")]
    NotInSpectrum { theta: ThetaGraph, n: u64 },
    #[error("no construction covers {theta} at order {n}")]
    PlanningFailure { theta: ThetaGraph, n: u64 },
    #[error("ingredient missing: {0}")]
    IngredientMissing(String),
    #[error("constructed design failed verification: {0}")]
    VerificationFailure(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// Shared state for planning and execution: the catalogue, the GDD provider,
/// the cache directory and the search budget.
pub struct Context {
    catalogue: RwLock<Catalogue>,
    gdds: GddProvider,
    cache_dir: Option<PathBuf>,
    pub budget: Budget,
    pub jobs: usize,
}

impl Default for Context {
    fn default() -> Self {
        Self::new(None)
    }
}

impl Context {
    /// Standard catalogue plus any derived entries under `cache_dir`.
    pub fn new(cache_dir: Option<PathBuf>) -> Self {
        let mut catalogue = Catalogue::standard();
        if let Some(dir) = &cache_dir {
            if let Ok(entries) = Catalogue::load_dir(&dir.join("derived")) {
                catalogue.extend(entries);
            }
        }
        Self {
            catalogue: RwLock::new(catalogue),
            gdds: GddProvider::new(cache_dir.clone()),
            cache_dir,
            budget: Budget::default(),
            jobs: 0,
        }
    }

    /// Uses `THETA_CACHE_DIR`, else the user cache directory.
    pub fn from_env() -> Self {
        Self::new(default_cache_dir())
    }

    pub fn catalogue(&self) -> RwLockReadGuard<'_, Catalogue> {
        self.catalogue.read().expect("catalogue lock")
    }

    pub fn gdds(&self) -> &GddProvider {
        &self.gdds
    }

    pub fn cache_dir(&self) -> Option<&PathBuf> {
        self.cache_dir.as_ref()
    }

    /// Adds entries; an existing entry for the same goal is kept.
    pub fn extend_catalogue(&self, entries: Vec<CatalogueEntry>) {
        self.catalogue.write().expect("catalogue lock").extend(entries);
    }

    /// Adds a found entry and appends it to the cache's derived catalogue.
    pub fn record_derived(&self, entry: CatalogueEntry) -> Result<(), CatalogueError> {
        if let Some(dir) = &self.cache_dir {
            let path = dir.join("derived").join(format!("e{}.cat", entry.theta().edge_count()));
            let mut entries = match std::fs::read_to_string(&path) {
                Ok(text) => Catalogue::parse_checked(&text).unwrap_or_default(),
                Err(_) => Vec::new(),
            };
            entries.retain(|x| x.theta() != entry.theta() || x.host().shape() != entry.host().shape());
            entries.push(entry.clone());
            write_atomic(&path, &serialize(&entries));
        }
        self.catalogue.write().expect("catalogue lock").extend([entry]);
        Ok(())
    }
}

/// `THETA_CACHE_DIR`, else `$XDG_CACHE_HOME/theta-design` or `~/.cache/theta-design`.
pub fn default_cache_dir() -> Option<PathBuf> {
    if let Some(d) = std::env::var_os("THETA_CACHE_DIR") {
        return Some(PathBuf::from(d));
    }
    if let Some(d) = std::env::var_os("XDG_CACHE_HOME") {
        return Some(PathBuf::from(d).join("theta-design"));
    }
    std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache").join("theta-design"))
}

/// How the master design of an inflation is obtained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Master {
    /// A `K`-GDD from the provider.
    Gdd { sizes: Vec<usize>, ty: Vec<u32> },
    /// A `k`-RGDD with `new_points` adjoined to the first classes.
    ExtendedRgdd { k: usize, ty: Vec<u32>, new_points: usize },
    /// `K_{a,b}` with its edges as blocks.
    Bipartite { a: u32, b: u32 },
    /// `K_m` with its edges as blocks.
    CompletePairs { m: u32 },
}

impl fmt::Display for Master {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Master::Gdd { sizes, ty } => {
                let s: BTreeSet<usize> = sizes.iter().copied().collect();
                write!(f, "{}-GDD {}", sizes_string(&s), type_string(ty))
            }
            Master::ExtendedRgdd { k, ty, new_points } => {
                write!(f, "{k}-RGDD {} + {new_points} new point(s)", type_string(ty))
            }
            Master::Bipartite { a, b } => write!(f, "K({a},{b}) as 2-GDD"),
            Master::CompletePairs { m } => write!(f, "K({m}) as 2-GDD"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Inflation {
    pub master: Master,
    pub weights: Vec<u32>,
    pub infinity: bool,
}

impl Inflation {
    pub fn order(&self) -> u32 {
        self.weights.iter().sum::<u32>() + u32::from(self.infinity)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Trivial,
    CatalogueLeaf { source: String },
    SearchLeaf { source: String },
    Missing,
    BipartiteTower { d: u32, f: u32, r: u32, s: u32, g: u32, e: u32, t: u32 },
    BipartiteAlt { r: u32, s: u32, e: u32, t: u32 },
    PrimeTripartite { p: u32, t: u32, e: u32 },
    TwoPrimeTripartite { p: u32, f: u32, x: u32, y: u32, z: u32, w: u32, t: u32, e: u32 },
    Theta12Tower { x: u32, y: u32, t: u32, e: u32 },
    Theta15Tower { w: u32, t: u32, e: u32 },
    PatchCase { name: String },
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Trivial => write!(f, "trivial"),
            Step::CatalogueLeaf { source } => write!(f, "catalogue ({source})"),
            Step::SearchLeaf { source } => write!(f, "{source}"),
            Step::Missing => write!(f, "missing"),
            Step::BipartiteTower { d, f: ff, r, s, g, e, t } => {
                write!(f, "BipartiteTower(d={d}, f={ff}, r={r}, s={s}, g={g}, e={e}, t={t})")
            }
            Step::BipartiteAlt { r, s, e, t } => write!(f, "BipartiteAlt(r={r}, s={s}, e={e}, t={t})"),
            Step::PrimeTripartite { p, t, e } => write!(f, "PrimeTripartite(p={p}, t={t}, e={e})"),
            Step::TwoPrimeTripartite { p, f: ff, x, y, z, w, t, e } => {
                write!(f, "TwoPrimeTripartite(p={p}, f={ff}, x={x}, y={y}, z={z}, w={w}, t={t}, e={e})")
            }
            Step::Theta12Tower { x, y, t, e } => write!(f, "Theta12Tower(x={x}, y={y}, t={t}, e={e})"),
            Step::Theta15Tower { w, t, e } => write!(f, "Theta15Tower(w={w}, t={t}, e={e})"),
            Step::PatchCase { name } => write!(f, "PatchCase({name})"),
        }
    }
}

/// One node of a plan: the goal, how it is met, and the distinct child goals
/// with their use counts (`None` when only the master design decides).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstructionPlan {
    pub theta: ThetaGraph,
    pub goal: HostShape,
    pub step: Step,
    pub inflation: Option<Inflation>,
    pub children: Vec<(ConstructionPlan, Option<u64>)>,
}

impl ConstructionPlan {
    /// Indented text tree, one step per line.
    pub fn explain(&self) -> String {
        let mut out = String::new();
        self.render(0, None, &mut out);
        out
    }

    fn render(&self, depth: usize, uses: Option<Option<u64>>, out: &mut String) {
        out.push_str(&"  ".repeat(depth));
        out.push_str(&format!("{}: {}", self.goal, self.step));
        if let Some(inf) = &self.inflation {
            let distinct: BTreeSet<u32> = inf.weights.iter().copied().collect();
            let w: Vec<String> = distinct.iter().map(u32::to_string).collect();
            out.push_str(&format!(" via {}, weights {{{}}}", inf.master, w.join(",")));
            if inf.infinity {
                out.push_str(", plus infinity");
            }
        }
        match uses {
            Some(Some(k)) => out.push_str(&format!(" x{k}")),
            Some(None) => out.push_str(" x?"),
            None => {}
        }
        out.push('\n');
        for (c, k) in &self.children {
            c.render(depth + 1, Some(*k), out);
        }
    }

    /// Every leaf goal in the tree, deduplicated.
    pub fn leaves(&self) -> BTreeSet<(String, String)> {
        let mut out = BTreeSet::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut BTreeSet<(String, String)>) {
        if self.children.is_empty() {
            out.insert((self.goal.to_string(), self.step.to_string()));
        }
        for (c, _) in &self.children {
            c.collect_leaves(out);
        }
    }
}

/// Row `(x, y, z, e)` of the two-prime table, with `f` substituted.
pub fn general_rows(f: u32) -> [(u32, u32, u32, u32); 12] {
    let g = 1 - f;
    [
        (0, 0, 0, 0),
        (0, 0, 1, 0),
        (0, 0, 2, 0),
        (0, 0, 0, 1),
        (0, 0, 1, 1),
        (0, 0, 2, 1),
        (1, 0, 1, f),
        (1, 0, 2, f),
        (1, 0, 3, f),
        (0, 1, 0, g),
        (0, 1, 1, g),
        (0, 1, 2, g),
    ]
}

/// Orders assumed directly by the two-prime construction.
pub fn general_hypotheses(p: u32, f: u32) -> Vec<u32> {
    let g = 1 - f;
    vec![3 * p + g, 4 * p, 4 * p + 1, 5 * p + f, 7 * p + g, 8 * p, 8 * p + 1, 9 * p + f, 11 * p + g, 13 * p + f]
}

pub fn general_patches(p: u32, f: u32) -> Vec<u32> {
    vec![12 * p, 12 * p + 1, 15 * p + 1 - f, 17 * p + f]
}

/// `(x, y, e)` rows of the 12-edge table.
pub const THETA12_ROWS: [(u32, u32, u32); 8] =
    [(0, 0, 0), (0, 1, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1), (1, 2, 1), (2, 0, 0), (2, 1, 0)];
pub const THETA12_HYPOTHESES: [u32; 8] = [16, 24, 25, 33, 40, 49, 57, 81];
pub const THETA12_PATCHES: [u32; 2] = [48, 64];

/// `(w, e, least t)` rows of the 15-edge table.
pub const THETA15_ROWS: [(u32, u32, u32); 8] =
    [(0, 0, 1), (3, 0, 1), (0, 1, 1), (3, 1, 1), (4, 1, 2), (7, 1, 3), (5, 0, 2), (8, 0, 3)];
pub const THETA15_HYPOTHESES: [u32; 12] = [15, 16, 21, 25, 30, 31, 36, 40, 51, 55, 66, 70];
pub const THETA15_PATCHES: [u32; 4] = [81, 85, 111, 115];

/// Orders up to `n_max` reached by the two-prime rows, hypotheses, patches
/// and the trivial orders.
pub fn general_generated(p: u32, f: u32, n_max: u64) -> BTreeSet<u64> {
    let mut out: BTreeSet<u64> = [0, 1].into();
    for (x, y, z, e) in general_rows(f) {
        let base = (4 * p + p * x + 3 * p * y + 4 * p * z + e) as u64;
        out.extend((1..).map(|t| 12 * p as u64 * t + base).take_while(|&n| n <= n_max));
    }
    out.extend(general_hypotheses(p, f).into_iter().chain(general_patches(p, f)).map(u64::from));
    out.retain(|&n| n <= n_max);
    out
}

pub fn theta12_generated(n_max: u64) -> BTreeSet<u64> {
    let mut out: BTreeSet<u64> = [0, 1].into();
    for (x, y, e) in THETA12_ROWS {
        let base = (24 + 8 * x + 24 * y + e) as u64;
        out.extend((1..).map(|t| 48 * t + base).take_while(|&n| n <= n_max));
    }
    out.extend(THETA12_HYPOTHESES.iter().chain(&THETA12_PATCHES).map(|&n| n as u64));
    out.retain(|&n| n <= n_max);
    out
}

pub fn theta15_generated(n_max: u64) -> BTreeSet<u64> {
    let mut out: BTreeSet<u64> = [0, 1].into();
    for (w, e, tmin) in THETA15_ROWS {
        let base = (15 + 5 * w + e) as u64;
        out.extend((tmin as u64..).map(|t| 30 * t + base).take_while(|&n| n <= n_max));
    }
    out.extend(THETA15_HYPOTHESES.iter().chain(&THETA15_PATCHES).map(|&n| n as u64));
    out.retain(|&n| n <= n_max);
    out
}

/// `n <= n_max` in the given residue classes, minus the exceptions.
pub fn residue_class_set(modulus: u64, residues: &[u64], exceptions: &[u64], n_max: u64) -> BTreeSet<u64> {
    (0..=n_max)
        .filter(|n| residues.contains(&(n % modulus)) && !exceptions.contains(n))
        .collect()
}

/// Goals of a weighted inflation of `g`: multipartite block goals and group
/// overlay orders, each with multiplicity.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InflationGoals {
    pub blocks: BTreeMap<HostShape, u64>,
    pub overlays: BTreeMap<u32, u64>,
}

pub fn inflate(g: &Gdd, weights: &[u32], e: u32) -> InflationGoals {
    let mut out = InflationGoals::default();
    for b in &g.blocks {
        let shape = HostShape::multipartite(b.iter().map(|&p| weights[p as usize]).collect());
        *out.blocks.entry(shape).or_default() += 1;
    }
    for grp in &g.groups {
        let w: u32 = grp.iter().map(|&p| weights[p as usize]).sum();
        *out.overlays.entry(w + e).or_default() += 1;
    }
    out
}

fn complete(n: u32) -> HostShape {
    HostShape::Complete(n)
}

fn multi(sizes: &[u32]) -> HostShape {
    HostShape::multipartite(sizes.to_vec())
}

/// Plans a design of order `n`.
pub fn plan(ctx: &Context, theta: &ThetaGraph, n: u64) -> Result<ConstructionPlan, ConstructError> {
    let member = spectrum_membership(theta, n).map_err(|e| ConstructError::Unsupported(e.to_string()))?;
    if !member {
        return Err(ConstructError::NotInSpectrum { theta: *theta, n });
    }
    let n = u32::try_from(n).map_err(|_| ConstructError::Unsupported(format!("order {n} too large")))?;
    let cat = ctx.catalogue();
    Planner { theta: *theta, cat: &cat }.complete(n)
}

struct Planner<'a> {
    theta: ThetaGraph,
    cat: &'a Catalogue,
}

struct Recipe {
    step: Step,
    inflation: Inflation,
    children: Vec<(HostShape, Option<u64>)>,
}

impl Planner<'_> {
    fn leaf(&self, goal: HostShape, step: Step) -> ConstructionPlan {
        ConstructionPlan {
            theta: self.theta,
            goal,
            step,
            inflation: None,
            children: Vec::new(),
        }
    }

    fn goal(&self, goal: &HostShape) -> Result<ConstructionPlan, ConstructError> {
        match goal {
            HostShape::Complete(n) => self.complete(*n),
            HostShape::Multipartite(_) => Ok(match self.cat.lookup(&self.theta, goal) {
                Ok(entry) => self.leaf(goal.clone(), leaf_step(&entry.source)),
                Err(_) => self.leaf(goal.clone(), Step::Missing),
            }),
        }
    }

    fn complete(&self, n: u32) -> Result<ConstructionPlan, ConstructError> {
        let goal = complete(n);
        if n <= 1 {
            return Ok(self.leaf(goal, Step::Trivial));
        }
        if let Ok(entry) = self.cat.lookup(&self.theta, &goal) {
            return Ok(self.leaf(goal, leaf_step(&entry.source)));
        }
        let e = self.theta.edge_count();
        if n == 2 * e + 1 {
            return Ok(self.leaf(goal, Step::SearchLeaf { source: "cyclic, not yet found".into() }));
        }
        let recipe = match (e, self.theta.is_bipartite()) {
            (10, true) => tower(n, 5, 2, 1, 2, &[0, 3, 5]),
            (14, true) => tower(n, 7, 2, 1, 2, &[0, 3, 5]),
            (12, true) => tower(n, 4, 3, 2, 1, &[0, 2, 4]),
            (11 | 13, true) => tower(n, e, 1, 1, 1, &[0]),
            (15, true) => alt(n),
            (11 | 13, false) => prime_tripartite(n, e),
            (10, false) => two_prime(n, 5, 0),
            (14, false) => two_prime(n, 7, 1),
            (12, false) => theta12(n),
            (15, false) => theta15(n),
            _ => None,
        }
        .ok_or(ConstructError::PlanningFailure {
            theta: self.theta,
            n: n as u64,
        })?;
        debug_assert_eq!(recipe.inflation.order(), n);
        let children = recipe
            .children
            .iter()
            .map(|(g, k)| Ok((self.goal(g)?, *k)))
            .collect::<Result<_, ConstructError>>()?;
        Ok(ConstructionPlan {
            theta: self.theta,
            goal,
            step: recipe.step,
            inflation: Some(recipe.inflation),
            children,
        })
    }
}

fn leaf_step(source: &str) -> Step {
    if source.starts_with("search") {
        Step::SearchLeaf { source: source.to_string() }
    } else {
        Step::CatalogueLeaf {
            source: if source.is_empty() { "catalogue".into() } else { source.to_string() },
        }
    }
}

fn rep(w: u32, k: u32) -> Vec<u32> {
    vec![w; k as usize]
}

/// Adds a child goal, merging repeats and skipping unused ones.
fn push_goal(children: &mut Vec<(HostShape, Option<u64>)>, goal: HostShape, uses: Option<u64>) {
    if uses == Some(0) {
        return;
    }
    if let Some(c) = children.iter_mut().find(|(g, _)| *g == goal) {
        c.1 = match (c.1, uses) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
    } else {
        children.push((goal, uses));
    }
}

/// Bipartite tower: `n = t f d r s + g d s + e`.
fn tower(n: u32, d: u32, r: u32, s: u32, f: u32, gs: &[u32]) -> Option<Recipe> {
    let unit = f * d * r * s;
    for e in [0, 1] {
        for &g in gs {
            let Some(rest) = n.checked_sub(g * d * s + e) else { continue };
            if rest % unit != 0 {
                continue;
            }
            let t = rest / unit;
            let (a, b, first, second) = if g > 0 {
                if t == 0 {
                    return None;
                }
                (t * f * s, g, t * unit + e, g * d * s + e)
            } else {
                if t <= 1 {
                    return None;
                }
                ((t - 1) * f * s, f * r, (t - 1) * unit + e, unit + e)
            };
            let weights = [rep(d * r, a), rep(d * s, b)].concat();
            let mut children = Vec::new();
            push_goal(&mut children, complete(first), Some(1));
            push_goal(&mut children, complete(second), Some(1));
            push_goal(&mut children, multi(&[d * r, d * s]), Some((a * b) as u64));
            return Some(Recipe {
                step: Step::BipartiteTower { d, f, r, s, g, e, t },
                inflation: Inflation {
                    master: Master::Bipartite { a, b },
                    weights,
                    infinity: e == 1,
                },
                children,
            });
        }
    }
    None
}

/// `n = t r + s + e` with one point weighted `s` and `t` weighted `r`.
fn alt(n: u32) -> Option<Recipe> {
    for (r, s, e) in [(15, 15, 0), (15, 15, 1), (15, 20, 1), (15, 25, 0)] {
        let Some(rest) = n.checked_sub(s + e) else { continue };
        if rest % r != 0 || rest == 0 {
            continue;
        }
        let t = rest / r;
        let weights = [vec![s], rep(r, t)].concat();
        let mut children = Vec::new();
        push_goal(&mut children, complete(r + e), Some(t as u64));
        push_goal(&mut children, complete(s + e), Some(1));
        push_goal(&mut children, multi(&[r, r]), Some((t * (t - 1) / 2) as u64));
        push_goal(&mut children, multi(&[r, s]), Some(t as u64));
        return Some(Recipe {
            step: Step::BipartiteAlt { r, s, e, t },
            inflation: Inflation {
                master: Master::CompletePairs { m: t + 1 },
                weights,
                infinity: e == 1,
            },
            children,
        });
    }
    None
}

fn prime_tripartite(n: u32, p: u32) -> Option<Recipe> {
    let e = n % p;
    if e > 1 {
        return None;
    }
    let t = n / p;
    if t <= 2 {
        return None;
    }
    let mut children = Vec::new();
    if t == 6 || t == 8 {
        let groups = t / 2;
        push_goal(&mut children, complete(2 * p + e), Some(groups as u64));
        // A 3-GDD of type 2^m has 2m(m-1)/3 blocks.
        push_goal(&mut children, multi(&rep(p, 3)), Some((2 * groups * (groups - 1) / 3) as u64));
        return Some(Recipe {
            step: Step::PatchCase { name: format!("{t}p+e") },
            inflation: Inflation {
                master: Master::Gdd { sizes: vec![3], ty: rep(2, groups) },
                weights: rep(p, t),
                infinity: e == 1,
            },
            children,
        });
    }
    push_goal(&mut children, complete(p + e), Some(t as u64));
    for k in 3..=5 {
        push_goal(&mut children, multi(&rep(p, k)), None);
    }
    Some(Recipe {
        step: Step::PrimeTripartite { p, t, e },
        inflation: Inflation {
            master: Master::Gdd { sizes: vec![3, 4, 5], ty: rep(1, t) },
            weights: rep(p, t),
            infinity: e == 1,
        },
        children,
    })
}

fn two_prime(n: u32, p: u32, f: u32) -> Option<Recipe> {
    let g = 1 - f;
    let mut children = Vec::new();
    for e in [0, 1] {
        if n == 12 * p + e {
            push_goal(&mut children, complete(4 * p + e), Some(3));
            push_goal(&mut children, multi(&rep(2 * p, 3)), Some(4));
            return Some(Recipe {
                step: Step::PatchCase { name: "12p+e".into() },
                inflation: Inflation {
                    master: Master::Gdd { sizes: vec![3], ty: rep(2, 3) },
                    weights: rep(2 * p, 6),
                    infinity: e == 1,
                },
                children,
            });
        }
    }
    if n == 15 * p + g {
        push_goal(&mut children, complete(3 * p + g), Some(5));
        push_goal(&mut children, multi(&rep(p, 4)), Some(15));
        return Some(Recipe {
            step: Step::PatchCase { name: "15p+f'".into() },
            inflation: Inflation {
                master: Master::Gdd { sizes: vec![4], ty: rep(3, 5) },
                weights: rep(p, 15),
                infinity: g == 1,
            },
            children,
        });
    }
    if n == 17 * p + f {
        push_goal(&mut children, complete(4 * p + f), Some(3));
        push_goal(&mut children, complete(5 * p + f), Some(1));
        push_goal(&mut children, multi(&[4 * p, 4 * p, 4 * p, 5 * p]), Some(1));
        return Some(Recipe {
            step: Step::PatchCase { name: "17p+f".into() },
            inflation: Inflation {
                master: Master::Gdd { sizes: vec![4], ty: rep(1, 4) },
                weights: vec![4 * p, 4 * p, 4 * p, 5 * p],
                infinity: f == 1,
            },
            children,
        });
    }
    let mut best: Option<(u32, (u32, u32, u32, u32))> = None;
    for row in general_rows(f) {
        let (x, y, z, e) = row;
        let base = 4 * p + p * x + 3 * p * y + 4 * p * z + e;
        if n > base && (n - base).is_multiple_of(12 * p) {
            let t = (n - base) / (12 * p);
            if best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, row));
            }
        }
    }
    let (t, (x, y, z, e)) = best?;
    let w = x + y + z;
    let u = 3 * t + 1;
    let weights = [rep(p, 4 * u), rep(p, x), rep(3 * p, y), rep(4 * p, z)].concat();
    push_goal(&mut children, complete(4 * p + e), Some(u as u64));
    if w > 0 {
        push_goal(&mut children, complete(p * x + 3 * p * y + 4 * p * z + e), Some(1));
    }
    let u64_ = u as u64;
    push_goal(&mut children, multi(&rep(p, 4)), Some((4 * t - w) as u64 * u64_));
    for (count, extra) in [(x, p), (y, 3 * p), (z, 4 * p)] {
        if count > 0 {
            push_goal(&mut children, multi(&[p, p, p, p, extra]), Some(count as u64 * u64_));
        }
    }
    Some(Recipe {
        step: Step::TwoPrimeTripartite { p, f, x, y, z, w, t, e },
        inflation: Inflation {
            master: Master::ExtendedRgdd {
                k: 4,
                ty: rep(4, u),
                new_points: w as usize,
            },
            weights,
            infinity: e == 1,
        },
        children,
    })
}

fn theta12(n: u32) -> Option<Recipe> {
    let mut children = Vec::new();
    if n == 48 || n == 64 {
        let m = n / 16;
        push_goal(&mut children, complete(16), Some(m as u64));
        push_goal(&mut children, multi(&[8, 8, 8]), Some((2 * m * (m - 1) / 3) as u64));
        return Some(Recipe {
            step: Step::PatchCase { name: n.to_string() },
            inflation: Inflation {
                master: Master::Gdd { sizes: vec![3], ty: rep(2, m) },
                weights: rep(8, 2 * m),
                infinity: false,
            },
            children,
        });
    }
    let mut best: Option<(u32, (u32, u32, u32))> = None;
    for row in THETA12_ROWS {
        let (x, y, e) = row;
        let base = 24 + 8 * x + 24 * y + e;
        if n > base && (n - base).is_multiple_of(48) {
            let t = (n - base) / 48;
            if best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, row));
            }
        }
    }
    let (t, (x, y, e)) = best?;
    let u = 2 * t + 1;
    let weights = [rep(8, 3 * u), rep(8, x), rep(24, y)].concat();
    push_goal(&mut children, complete(24 + e), Some(u as u64));
    if x + y > 0 {
        push_goal(&mut children, complete(8 * x + 24 * y + e), Some(1));
    }
    push_goal(&mut children, multi(&[8, 8, 8]), Some(((3 * t - x - y) * u) as u64));
    if x > 0 {
        push_goal(&mut children, multi(&[8, 8, 8, 8]), Some((x * u) as u64));
    }
    if y > 0 {
        push_goal(&mut children, multi(&[8, 8, 8, 24]), Some((y * u) as u64));
    }
    Some(Recipe {
        step: Step::Theta12Tower { x, y, t, e },
        inflation: Inflation {
            master: Master::ExtendedRgdd {
                k: 3,
                ty: rep(3, u),
                new_points: (x + y) as usize,
            },
            weights,
            infinity: e == 1,
        },
        children,
    })
}

fn theta15(n: u32) -> Option<Recipe> {
    let mut children = Vec::new();
    let patch = match n {
        81 => Some((vec![4, 4, 4, 4], true)),
        85 => Some((vec![3, 3, 3, 3, 5], false)),
        111 => Some((vec![4, 4, 4, 4, 6], true)),
        115 => Some((vec![3, 5, 5, 5, 5], false)),
        _ => None,
    };
    if let Some((ty, inf)) = patch {
        let points: u32 = ty.iter().sum();
        let e = u32::from(inf);
        for &g in &ty {
            push_goal(&mut children, complete(5 * g + e), Some(1));
        }
        let cross: u32 = (points * points - ty.iter().map(|g| g * g).sum::<u32>()) / 2;
        push_goal(&mut children, multi(&[5, 5, 5]), Some((cross / 3) as u64));
        return Some(Recipe {
            step: Step::PatchCase { name: n.to_string() },
            inflation: Inflation {
                master: Master::Gdd { sizes: vec![3], ty },
                weights: rep(5, points),
                infinity: inf,
            },
            children,
        });
    }
    let mut best: Option<(u32, (u32, u32))> = None;
    for (w, e, tmin) in THETA15_ROWS {
        let base = 15 + 5 * w + e;
        if n >= base + 30 * tmin && (n - base).is_multiple_of(30) {
            let t = (n - base) / 30;
            if w > 3 * t {
                continue;
            }
            if best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, (w, e)));
            }
        }
    }
    let (t, (w, e)) = best?;
    let u = 2 * t + 1;
    push_goal(&mut children, complete(15 + e), Some(u as u64));
    if w > 0 {
        push_goal(&mut children, complete(5 * w + e), Some(1));
    }
    push_goal(&mut children, multi(&[5, 5, 5]), Some(((3 * t - w) * u) as u64));
    if w > 0 {
        push_goal(&mut children, multi(&[5, 5, 5, 5]), Some((w * u) as u64));
    }
    Some(Recipe {
        step: Step::Theta15Tower { w, t, e },
        inflation: Inflation {
            master: Master::ExtendedRgdd {
                k: 3,
                ty: rep(3, u),
                new_points: w as usize,
            },
            weights: rep(5, 3 * u + w),
            infinity: e == 1,
        },
        children,
    })
}

/// Builds the master design of an inflation.
pub fn realize_master(ctx: &Context, m: &Master) -> Result<Arc<Gdd>, ConstructError> {
    let missing = |e: crate::gdd::GddError| ConstructError::IngredientMissing(e.to_string());
    Ok(match m {
        Master::Gdd { sizes, ty } => ctx.gdds().provide_gdd(sizes, ty).map_err(missing)?,
        Master::ExtendedRgdd { k, ty, new_points } => {
            let r = ctx.gdds().provide_rgdd(*k, ty).map_err(missing)?;
            let assignment: Vec<usize> = (0..*new_points).collect();
            Arc::new(extend_with_group(&r, &assignment).map_err(missing)?)
        }
        Master::Bipartite { a, b } => Arc::new(Gdd::complete_bipartite(*a, *b)),
        Master::CompletePairs { m } => Arc::new(Gdd::complete_pairs(*m)),
    })
}

/// A multipartite ingredient: its parts and explicit blocks.
struct Piece {
    parts: Vec<Vec<Point>>,
    blocks: Vec<Vec<Point>>,
}

struct Executor<'a> {
    ctx: &'a Context,
    theta: ThetaGraph,
    designs: HashMap<u32, Arc<Vec<Vec<Point>>>>,
    pieces: HashMap<HostShape, Arc<Piece>>,
}

/// Runs a plan into an explicit, verified decomposition of `K_n`.
pub fn execute(ctx: &Context, plan: &ConstructionPlan) -> Result<Decomposition, ConstructError> {
    let HostShape::Complete(n) = plan.goal else {
        return Err(ConstructError::Unsupported("plans are rooted at complete graphs".into()));
    };
    let mut ex = Executor {
        ctx,
        theta: plan.theta,
        designs: HashMap::new(),
        pieces: HashMap::new(),
    };
    let blocks = ex.design(plan)?;
    let blocks: Vec<ThetaBlock> = blocks
        .iter()
        .map(|b| ThetaBlock::new(plan.theta, b.clone()))
        .collect::<Result<_, _>>()
        .map_err(|e| ConstructError::VerificationFailure(e.to_string()))?;
    let d = Decomposition::explicit(plan.theta, HostGraph::complete(n), blocks);
    let cert = verify_decomposition(&d);
    if !cert.accepted() {
        return Err(ConstructError::VerificationFailure(format!(
            "{} of order {n}: {} violations",
            plan.theta, cert.violation_total
        )));
    }
    Ok(d)
}

/// Plans and executes.
pub fn construct(ctx: &Context, theta: &ThetaGraph, n: u64) -> Result<Decomposition, ConstructError> {
    execute(ctx, &plan(ctx, theta, n)?)
}

/// For each `n <= n_max`: whether `n` is in the spectrum and a design was built.
pub fn spectrum_table(ctx: &Context, theta: &ThetaGraph, n_max: u64) -> Vec<(u64, bool)> {
    (0..=n_max)
        .map(|n| {
            let ok = spectrum_membership(theta, n).unwrap_or(false) && construct(ctx, theta, n).is_ok();
            (n, ok)
        })
        .collect()
}

fn expand(entry: &CatalogueEntry) -> Result<Vec<Vec<Point>>, ConstructError> {
    let blocks = develop(&entry.decomposition).map_err(|e| ConstructError::IngredientMissing(e.to_string()))?;
    Ok(blocks.into_iter().map(|b| b.vertices().to_vec()).collect())
}

impl Executor<'_> {
    fn design(&mut self, plan: &ConstructionPlan) -> Result<Arc<Vec<Vec<Point>>>, ConstructError> {
        let HostShape::Complete(n) = plan.goal else {
            return Err(ConstructError::Unsupported(format!("{} is not complete", plan.goal)));
        };
        if let Some(d) = self.designs.get(&n) {
            return Ok(d.clone());
        }
        let blocks = match (&plan.step, &plan.inflation) {
            (Step::Trivial, _) => Vec::new(),
            (_, Some(inf)) => self.inflate(plan, inf)?,
            (Step::Missing, None) => return Err(ConstructError::IngredientMissing(format!("{} for {}", plan.goal, self.theta))),
            (_, None) => self.complete_leaf(n)?,
        };
        let d = Arc::new(blocks);
        self.designs.insert(n, d.clone());
        Ok(d)
    }

    fn complete_leaf(&mut self, n: u32) -> Result<Vec<Vec<Point>>, ConstructError> {
        let goal = complete(n);
        let found = self.ctx.catalogue().lookup(&self.theta, &goal).ok().cloned();
        if let Some(entry) = found {
            return expand(&entry);
        }
        let e = self.theta.edge_count();
        if n != 2 * e + 1 {
            return Err(ConstructError::IngredientMissing(format!("{goal} for {}", self.theta)));
        }
        let mut p = SearchProblem::cyclic(self.theta, n, n, 1, 1, 0)
            .map_err(|err| ConstructError::IngredientMissing(err.to_string()))?;
        p.budget = self.ctx.budget;
        p.jobs = self.ctx.jobs;
        let d = search(&p).map_err(|err| ConstructError::IngredientMissing(format!("{goal} for {}: {err}", self.theta)))?;
        let entry = CatalogueEntry {
            decomposition: d,
            source: format!("search seed={} budget={}x{}", p.seed, p.budget.restarts, p.budget.steps),
        };
        let blocks = expand(&entry)?;
        self.ctx
            .record_derived(entry)
            .map_err(|err| ConstructError::IngredientMissing(err.to_string()))?;
        Ok(blocks)
    }

    fn piece(&mut self, shape: &HostShape) -> Result<Arc<Piece>, ConstructError> {
        if let Some(p) = self.pieces.get(shape) {
            return Ok(p.clone());
        }
        let entry = self
            .ctx
            .catalogue()
            .lookup(&self.theta, shape)
            .map_err(|e| ConstructError::IngredientMissing(e.to_string()))?
            .clone();
        let parts = entry
            .host()
            .parts()
            .map(<[Vec<Point>]>::to_vec)
            .ok_or_else(|| ConstructError::IngredientMissing(format!("{shape} entry has no parts")))?;
        let piece = Arc::new(Piece {
            parts,
            blocks: expand(&entry)?,
        });
        self.pieces.insert(shape.clone(), piece.clone());
        Ok(piece)
    }

    fn inflate(&mut self, plan: &ConstructionPlan, inf: &Inflation) -> Result<Vec<Vec<Point>>, ConstructError> {
        let g = realize_master(self.ctx, &inf.master)?;
        if g.point_count as usize != inf.weights.len() {
            return Err(ConstructError::VerificationFailure(format!(
                "{} has {} points, plan weights {}",
                inf.master,
                g.point_count,
                inf.weights.len()
            )));
        }
        let mut offset = Vec::with_capacity(inf.weights.len());
        let mut next = 0u32;
        for &w in &inf.weights {
            offset.push(next);
            next += w;
        }
        let infinity = next;
        let mut out = Vec::new();
        for b in &g.blocks {
            let mut pts: Vec<Point> = b.clone();
            pts.sort_by_key(|&p| (inf.weights[p as usize], p));
            let shape = HostShape::multipartite(pts.iter().map(|&p| inf.weights[p as usize]).collect());
            let piece = self.piece(&shape)?;
            let mut parts: Vec<&Vec<Point>> = piece.parts.iter().collect();
            parts.sort_by_key(|q| q.len());
            let order: usize = parts.iter().map(|q| q.len()).sum();
            let mut map = vec![Point::MAX; order];
            for (q, &p) in parts.iter().zip(&pts) {
                for (j, &x) in q.iter().enumerate() {
                    map[x as usize] = offset[p as usize] + j as u32;
                }
            }
            out.extend(piece.blocks.iter().map(|blk| blk.iter().map(|&x| map[x as usize]).collect::<Vec<_>>()));
        }
        let children: HashMap<&HostShape, &ConstructionPlan> = plan.children.iter().map(|(c, _)| (&c.goal, c)).collect();
        for grp in &g.groups {
            let mut pts: Vec<Point> = grp
                .iter()
                .flat_map(|&p| offset[p as usize]..offset[p as usize] + inf.weights[p as usize])
                .collect();
            if inf.infinity {
                pts.push(infinity);
            }
            let order = pts.len() as u32;
            if order <= 1 {
                continue;
            }
            let child = children
                .get(&complete(order))
                .ok_or_else(|| ConstructError::IngredientMissing(format!("plan lacks K({order})")))?;
            let design = self.design(child)?;
            out.extend(design.iter().map(|blk| blk.iter().map(|&x| pts[x as usize]).collect::<Vec<_>>()));
        }
        Ok(out)
    }
}
