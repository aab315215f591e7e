//! Exact edge-partition checks with explicit certificates.
//!
//! [`verify_decomposition`] is the production checker: a dense bit array over
//! edge indices. [`oracle_verify`] reaches the same verdict by sorting the
//! full developed edge list and walking it against the sorted host edge
//! universe; the two share no coverage logic.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use crate::action::Decomposition;
use crate::gdd::Gdd;
use crate::theta::{edge_index, ordered, Edge, HostGraph, Point, ThetaGraph};

/// Reports beyond this many violations are counted but not listed.
pub const MAX_REPORTED: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ViolationKind {
    DuplicateEdge,
    MissingEdge,
    WithinPartEdge,
    MalformedBlock,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Detail {
    Edge(Point, Point),
    Block(usize),
    Group(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: Detail,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub block_count: u64,
    pub edge_count: u64,
    /// The first [`MAX_REPORTED`] violations in discovery order.
    pub violations: Vec<Violation>,
    pub violation_total: u64,
    /// Violation counts by kind, including unreported ones.
    pub totals: BTreeMap<ViolationKind, u64>,
}

impl Certificate {
    pub fn accepted(&self) -> bool {
        self.verdict == Verdict::Accept
    }

    /// Reported violations of `kind`.
    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    /// All violations of `kind`, reported or not.
    pub fn total(&self, kind: ViolationKind) -> u64 {
        self.totals.get(&kind).copied().unwrap_or(0)
    }

    /// Machine-readable key-value rendering.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match self.verdict {
            Verdict::Accept => "accept",
            Verdict::Reject => "reject",
        };
        writeln!(f, "verdict: {verdict}")?;
        writeln!(f, "blocks: {}", self.block_count)?;
        writeln!(f, "edges: {}", self.edge_count)?;
        writeln!(f, "violations: {}", self.violation_total)?;
        for v in &self.violations {
            match v.detail {
                Detail::Edge(a, b) => writeln!(f, "violation: {:?} edge {a} {b}", v.kind)?,
                Detail::Block(i) => writeln!(f, "violation: {:?} block {i}", v.kind)?,
                Detail::Group(i) => writeln!(f, "violation: {:?} group {i}", v.kind)?,
            }
        }
        Ok(())
    }
}

#[derive(Default)]
struct Report {
    violations: Vec<Violation>,
    total: u64,
    totals: BTreeMap<ViolationKind, u64>,
}

impl Report {
    fn push(&mut self, kind: ViolationKind, detail: Detail) {
        self.total += 1;
        *self.totals.entry(kind).or_default() += 1;
        if self.violations.len() < MAX_REPORTED {
            self.violations.push(Violation { kind, detail });
        }
    }

    fn finish(self, block_count: u64, edge_count: u64) -> Certificate {
        Certificate {
            verdict: if self.total == 0 { Verdict::Accept } else { Verdict::Reject },
            block_count,
            edge_count,
            violations: self.violations,
            violation_total: self.total,
            totals: self.totals,
        }
    }
}

struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    fn new(bits: usize) -> Self {
        Self {
            words: vec![0; bits.div_ceil(64)],
        }
    }

    /// Sets the bit and returns its previous value.
    fn test_and_set(&mut self, i: usize) -> bool {
        let (w, b) = (i / 64, i % 64);
        let old = self.words[w] >> b & 1 == 1;
        self.words[w] |= 1 << b;
        old
    }

    fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }
}

/// Coverage tracker shared by the decomposition and GDD checks.
struct Coverage<'h> {
    host: &'h HostGraph,
    seen: BitSet,
    overflow: HashMap<usize, u32>,
    report: Report,
    edges: u64,
}

impl<'h> Coverage<'h> {
    fn new(host: &'h HostGraph) -> Self {
        let n = host.order() as usize;
        Self {
            host,
            seen: BitSet::new(n * n.saturating_sub(1) / 2),
            overflow: HashMap::new(),
            report: Report::default(),
            edges: 0,
        }
    }

    fn cover(&mut self, u: Point, v: Point) {
        self.edges += 1;
        if !self.host.contains_edge(u, v) {
            self.report.push(ViolationKind::WithinPartEdge, edge_detail(u, v));
            return;
        }
        let idx = edge_index(u, v);
        if self.seen.test_and_set(idx) {
            let extra = self.overflow.entry(idx).or_insert(0);
            *extra += 1;
            if *extra == 1 {
                self.report.push(ViolationKind::DuplicateEdge, edge_detail(u, v));
            }
        }
    }

    fn finish(mut self, block_count: u64) -> Certificate {
        let n = self.host.order();
        for v in 1..n {
            for u in 0..v {
                if self.host.contains_edge(u, v) && !self.seen.get(edge_index(u, v)) {
                    self.report.push(ViolationKind::MissingEdge, Detail::Edge(u, v));
                }
            }
        }
        self.report.finish(block_count, self.edges)
    }
}

fn edge_detail(u: Point, v: Point) -> Detail {
    let (a, b) = ordered(u, v);
    Detail::Edge(a, b)
}

/// Whether `tuple` is a well-formed block for `theta` inside `host`.
fn well_formed(theta: &ThetaGraph, tuple: &[Point], host_order: u32) -> bool {
    tuple.len() == theta.vertex_count()
        && tuple.iter().all(|&p| p < host_order)
        && tuple.iter().enumerate().all(|(i, p)| !tuple[..i].contains(p))
}

/// Checks that the developed blocks of `d` partition the host's edges.
pub fn verify_decomposition(d: &Decomposition) -> Certificate {
    let host = &d.host;
    let mut cov = Coverage::new(host);
    let order = d.action.order();
    let image = d.action.images();
    let pos_edges = d.theta.position_edges();
    let mut blocks = 0u64;
    for (i, base) in d.base_blocks.iter().enumerate() {
        let tuple = base.vertices();
        if base.theta() != &d.theta || !well_formed(&d.theta, tuple, host.order()) || image.len() != host.order() as usize {
            cov.report.push(ViolationKind::MalformedBlock, Detail::Block(i));
            continue;
        }
        let reps = if i < d.developed_count { order } else { 1 };
        let mut cur = tuple.to_vec();
        for _ in 0..reps {
            blocks += 1;
            for &(a, b) in &pos_edges {
                cov.cover(cur[a], cur[b]);
            }
            for p in cur.iter_mut() {
                *p = image[*p as usize];
            }
        }
    }
    cov.finish(blocks)
}

/// Checks that a GDD covers every cross-group pair exactly once, no
/// within-group pair, and uses only block sizes from its size set.
pub fn verify_gdd_certificate(g: &Gdd) -> Certificate {
    let mut report = Report::default();
    let host = match HostGraph::multipartite(g.groups.clone()) {
        Ok(h) if h.order() == g.point_count => h,
        _ => {
            report.push(ViolationKind::MalformedBlock, Detail::Group(0));
            return report.finish(g.blocks.len() as u64, 0);
        }
    };
    let mut cov = Coverage::new(&host);
    cov.report = report;
    for (i, block) in g.blocks.iter().enumerate() {
        let distinct = block.iter().enumerate().all(|(j, p)| !block[..j].contains(p));
        if !g.sizes.contains(&block.len()) || !distinct || block.iter().any(|&p| p >= g.point_count) {
            cov.report.push(ViolationKind::MalformedBlock, Detail::Block(i));
            continue;
        }
        for (j, &u) in block.iter().enumerate() {
            for &v in &block[j + 1..] {
                cov.cover(u, v);
            }
        }
    }
    cov.finish(g.blocks.len() as u64)
}

/// Independent check of a decomposition by sorting.
///
/// Develops every base block by iterating the point permutation until the
/// whole permutation returns to the identity, sorts all resulting edges and
/// compares them element-wise against the host edge universe built from its
/// part lists.
pub fn oracle_verify(d: &Decomposition) -> Certificate {
    let n = d.host.order();
    let mut report = Report::default();
    let perm: Vec<Point> = (0..n).map(|p| d.action.apply(p).unwrap_or(p)).collect();
    let action_ok = d.action.point_count() == n;

    // order by brute iteration of the whole permutation
    let mut period = 1u64;
    let mut pow = perm.clone();
    while action_ok && pow.iter().enumerate().any(|(i, &p)| p as usize != i) {
        pow = pow.iter().map(|&p| perm[p as usize]).collect();
        period += 1;
    }

    let mut all: Vec<Edge> = Vec::new();
    let mut blocks = 0u64;
    for (i, base) in d.base_blocks.iter().enumerate() {
        let tuple = base.vertices();
        let arity_ok = tuple.len() == d.theta.vertex_count() && base.theta() == &d.theta;
        let mut sorted = tuple.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if !arity_ok || !action_ok || sorted.len() != tuple.len() || sorted.last().is_some_and(|&p| p >= n) {
            report.push(ViolationKind::MalformedBlock, Detail::Block(i));
            continue;
        }
        let reps = if i < d.developed_count { period } else { 1 };
        let mut cur = tuple.to_vec();
        for _ in 0..reps {
            blocks += 1;
            let paths = d.theta.paths();
            for path in &paths {
                for w in path.windows(2) {
                    all.push(ordered(cur[w[0]], cur[w[1]]));
                }
            }
            cur = cur.iter().map(|&p| perm[p as usize]).collect();
        }
    }
    let edge_count = all.len() as u64;
    all.sort_unstable();

    let universe: Vec<Edge> = match d.host.parts() {
        None => (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect(),
        Some(parts) => {
            let mut u = Vec::new();
            for (i, p) in parts.iter().enumerate() {
                for q in &parts[i + 1..] {
                    for &x in p {
                        for &y in q {
                            u.push(ordered(x, y));
                        }
                    }
                }
            }
            u.sort_unstable();
            u
        }
    };

    let (mut i, mut j) = (0, 0);
    while i < all.len() || j < universe.len() {
        match (all.get(i), universe.get(j)) {
            (Some(&a), Some(&b)) if a == b => {
                let mut k = i + 1;
                while k < all.len() && all[k] == a {
                    k += 1;
                }
                if k > i + 1 {
                    report.push(ViolationKind::DuplicateEdge, Detail::Edge(a.0, a.1));
                }
                i = k;
                j += 1;
            }
            (Some(&a), Some(&b)) if a < b => {
                report.push(ViolationKind::WithinPartEdge, Detail::Edge(a.0, a.1));
                i += 1;
            }
            (Some(_), Some(&b)) => {
                report.push(ViolationKind::MissingEdge, Detail::Edge(b.0, b.1));
                j += 1;
            }
            (Some(&a), None) => {
                report.push(ViolationKind::WithinPartEdge, Detail::Edge(a.0, a.1));
                i += 1;
            }
            (None, Some(&b)) => {
                report.push(ViolationKind::MissingEdge, Detail::Edge(b.0, b.1));
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    report.finish(blocks, edge_count)
}
