//! Theta graphs, their tuple encoding as blocks, host graphs and the counting
//! arithmetic that governs which orders can possibly admit a design.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

/// A vertex of a host graph. Points are dense nonnegative integers; a point
/// "at infinity" adjoined to a residue ring `Z_m` is stored as `m`.
pub type Point = u32;

/// An unordered pair of points, always stored with `0 < 1`.
pub type Edge = (Point, Point);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ThetaError {
    #[error("invalid theta graph ({0},{1},{2}): need 1 <= a <= b <= c and b >= 2")]
    InvalidTheta(u32, u32, u32),
    #[error("malformed block: {0}")]
    MalformedBlock(String),
    #[error("edge count {edges} of {host} is not divisible by {e}")]
    NotDivisible { host: String, edges: u64, e: u32 },
    #[error("spectrum is only known for 10..=15 edges, got {0}")]
    UnsupportedEdgeCount(u32),
    #[error("cannot parse {0:?}")]
    Parse(String),
}

/// The theta graph with paths of lengths `a <= b <= c` between two
/// degree-3 vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ThetaGraph {
    a: u32,
    b: u32,
    c: u32,
}

impl ThetaGraph {
    pub fn new(a: u32, b: u32, c: u32) -> Result<Self, ThetaError> {
        if a < 1 || a > b || b > c || b < 2 {
            return Err(ThetaError::InvalidTheta(a, b, c));
        }
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> u32 {
        self.a
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn c(&self) -> u32 {
        self.c
    }

    pub fn edge_count(&self) -> u32 {
        self.a + self.b + self.c
    }

    /// Number of vertices, which is also the arity of a block tuple.
    pub fn vertex_count(&self) -> usize {
        (self.a + self.b + self.c - 1) as usize
    }

    pub fn is_bipartite(&self) -> bool {
        self.a % 2 == self.b % 2 && self.b % 2 == self.c % 2
    }

    /// The three paths from `v1` to `v2` as sequences of tuple positions.
    pub fn paths(&self) -> [Vec<usize>; 3] {
        let (a, b, c) = (self.a as usize, self.b as usize, self.c as usize);
        let path = |inner: std::ops::Range<usize>| {
            let mut p = Vec::with_capacity(inner.len() + 2);
            p.push(0);
            p.extend(inner);
            p.push(1);
            p
        };
        [path(2..a + 1), path(a + 1..a + b), path(a + b..a + b + c - 1)]
    }

    /// Edges of the abstract graph as pairs of tuple positions.
    pub fn position_edges(&self) -> Vec<(usize, usize)> {
        self.paths()
            .iter()
            .flat_map(|p| p.windows(2).map(|w| (w[0], w[1])).collect::<Vec<_>>())
            .collect()
    }
}

impl fmt::Display for ThetaGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "theta({},{},{})", self.a, self.b, self.c)
    }
}

impl FromStr for ThetaGraph {
    type Err = ThetaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ThetaError::Parse(s.to_string());
        let inner = s
            .trim()
            .strip_prefix("theta(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?;
        let v: Vec<u32> = inner
            .split(',')
            .map(|x| x.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        match v[..] {
            [a, b, c] => ThetaGraph::new(a, b, c),
            _ => Err(bad()),
        }
    }
}

pub fn make_theta(a: u32, b: u32, c: u32) -> Result<ThetaGraph, ThetaError> {
    ThetaGraph::new(a, b, c)
}

/// All theta graphs with `e` edges in lexicographic `(a,b,c)` order.
pub fn enumerate_thetas(e: u32) -> Vec<ThetaGraph> {
    let mut out = Vec::new();
    for a in 1..=e / 3 {
        for b in a.max(2)..=(e - a) / 2 {
            let c = e - a - b;
            if c >= b {
                out.push(ThetaGraph { a, b, c });
            }
        }
    }
    out
}

/// Closed form for the number of theta graphs with `e` edges.
pub fn theta_count_formula(e: u32) -> u64 {
    // floor(e^2/12 - 1/2) = floor((e^2 - 6) / 12), clamped at zero
    let e2 = (e as i64) * (e as i64);
    ((e2 - 6).div_euclid(12)).max(0) as u64
}

/// Closed form for the number of bipartite theta graphs with `e` edges.
pub fn bipartite_count_formula(e: u32) -> u64 {
    // floor(e^2/48 + (e mod 2)(e-8)/8 + 1/2), over the common denominator 48
    let e = e as i64;
    let num = e * e + 6 * (e % 2) * (e - 8) + 24;
    num.div_euclid(48).max(0) as u64
}

/// Edges of the copy of `theta` spelled out by the tuple `vertices`.
pub fn block_edges(theta: &ThetaGraph, vertices: &[Point]) -> Result<Vec<Edge>, ThetaError> {
    if vertices.len() != theta.vertex_count() {
        return Err(ThetaError::MalformedBlock(format!(
            "{theta} needs {} vertices, got {}",
            theta.vertex_count(),
            vertices.len()
        )));
    }
    for (i, v) in vertices.iter().enumerate() {
        if vertices[..i].contains(v) {
            return Err(ThetaError::MalformedBlock(format!("repeated vertex {v}")));
        }
    }
    let edges: Vec<Edge> = theta
        .position_edges()
        .into_iter()
        .map(|(i, j)| ordered(vertices[i], vertices[j]))
        .collect();
    debug_assert_eq!(edges.len(), theta.edge_count() as usize);
    Ok(edges)
}

#[inline]
pub fn ordered(u: Point, v: Point) -> Edge {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Dense index of the unordered pair `{u, v}`: `v(v-1)/2 + u` for `u < v`.
#[inline]
pub fn edge_index(u: Point, v: Point) -> usize {
    let (u, v) = ordered(u, v);
    (v as usize) * (v as usize - 1) / 2 + u as usize
}

/// A single copy of a theta graph inside a host graph.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ThetaBlock {
    theta: ThetaGraph,
    vertices: Vec<Point>,
}

impl ThetaBlock {
    pub fn new(theta: ThetaGraph, vertices: Vec<Point>) -> Result<Self, ThetaError> {
        block_edges(&theta, &vertices)?;
        Ok(Self { theta, vertices })
    }

    pub fn theta(&self) -> &ThetaGraph {
        &self.theta
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> Vec<Edge> {
        self.theta
            .position_edges()
            .into_iter()
            .map(|(i, j)| ordered(self.vertices[i], self.vertices[j]))
            .collect()
    }

    /// Image of the block under a point map. Fails if the map is not injective
    /// on the block.
    pub fn map<F: FnMut(Point) -> Point>(&self, f: F) -> Result<Self, ThetaError> {
        Self::new(self.theta, self.vertices.iter().copied().map(f).collect())
    }
}

/// The graph whose edge set a decomposition must partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HostGraph {
    order: u32,
    /// Explicit parts for a multipartite host, in declared order.
    parts: Option<Vec<Vec<Point>>>,
    part_of: Vec<u32>,
}

/// Isomorphism class of a host: what a lookup is keyed on.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum HostShape {
    Complete(u32),
    /// Part sizes, sorted ascending.
    Multipartite(Vec<u32>),
}

impl HostShape {
    pub fn edge_count(&self) -> u64 {
        match self {
            HostShape::Complete(n) => (*n as u64) * (*n as u64).saturating_sub(1) / 2,
            HostShape::Multipartite(sizes) => multipartite_edges(sizes),
        }
    }

    pub fn order(&self) -> u32 {
        match self {
            HostShape::Complete(n) => *n,
            HostShape::Multipartite(sizes) => sizes.iter().sum(),
        }
    }

    pub fn multipartite(mut sizes: Vec<u32>) -> Self {
        sizes.sort_unstable();
        HostShape::Multipartite(sizes)
    }
}

impl fmt::Display for HostShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HostShape::Complete(n) => write!(f, "K({n})"),
            HostShape::Multipartite(sizes) => {
                let s: Vec<String> = sizes.iter().map(|g| g.to_string()).collect();
                write!(f, "K({})", s.join(","))
            }
        }
    }
}

fn multipartite_edges(sizes: &[u32]) -> u64 {
    let total: u64 = sizes.iter().map(|&g| g as u64).sum();
    let sq: u64 = sizes.iter().map(|&g| (g as u64) * (g as u64)).sum();
    (total * total - sq) / 2
}

impl HostGraph {
    pub fn complete(n: u32) -> Self {
        Self {
            order: n,
            parts: None,
            part_of: Vec::new(),
        }
    }

    /// Multipartite host with the given explicit parts; the parts must
    /// partition `0..order`.
    pub fn multipartite(parts: Vec<Vec<Point>>) -> Result<Self, ThetaError> {
        let order: usize = parts.iter().map(Vec::len).sum();
        let mut part_of = vec![u32::MAX; order];
        for (i, part) in parts.iter().enumerate() {
            if part.is_empty() {
                return Err(ThetaError::Parse("empty part".into()));
            }
            for &p in part {
                match part_of.get_mut(p as usize) {
                    Some(slot) if *slot == u32::MAX => *slot = i as u32,
                    _ => {
                        return Err(ThetaError::Parse(format!(
                            "parts do not partition 0..{order} (point {p})"
                        )))
                    }
                }
            }
        }
        Ok(Self {
            order: order as u32,
            parts: Some(parts),
            part_of,
        })
    }

    /// Multipartite host whose parts are consecutive runs of the given sizes.
    pub fn multipartite_contiguous(sizes: &[u32]) -> Self {
        let mut next = 0;
        let parts = sizes
            .iter()
            .map(|&g| {
                let p: Vec<Point> = (next..next + g).collect();
                next += g;
                p
            })
            .collect();
        Self::multipartite(parts).expect("contiguous parts always partition")
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn is_complete(&self) -> bool {
        self.parts.is_none()
    }

    pub fn parts(&self) -> Option<&[Vec<Point>]> {
        self.parts.as_deref()
    }

    pub fn part_sizes(&self) -> Vec<u32> {
        match &self.parts {
            None => vec![1; self.order as usize],
            Some(parts) => parts.iter().map(|p| p.len() as u32).collect(),
        }
    }

    pub fn part_of(&self, p: Point) -> Option<u32> {
        if p >= self.order {
            return None;
        }
        match &self.parts {
            None => Some(p),
            Some(_) => Some(self.part_of[p as usize]),
        }
    }

    pub fn shape(&self) -> HostShape {
        match &self.parts {
            None => HostShape::Complete(self.order),
            Some(parts) => HostShape::multipartite(parts.iter().map(|p| p.len() as u32).collect()),
        }
    }

    pub fn edge_count(&self) -> u64 {
        self.shape().edge_count()
    }

    pub fn contains_point(&self, p: Point) -> bool {
        p < self.order
    }

    /// Whether `{u, v}` belongs to the edge universe of the host.
    pub fn contains_edge(&self, u: Point, v: Point) -> bool {
        if u == v || u >= self.order || v >= self.order {
            return false;
        }
        match &self.parts {
            None => true,
            Some(_) => self.part_of[u as usize] != self.part_of[v as usize],
        }
    }

    /// Every edge of the host, sorted.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::with_capacity(self.edge_count() as usize);
        for u in 0..self.order {
            for v in u + 1..self.order {
                if self.contains_edge(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Label in declared part order, e.g. `K(20)` or `K(5,10)`.
    pub fn label(&self) -> String {
        match &self.parts {
            None => format!("K({})", self.order),
            Some(parts) => {
                let s: Vec<String> = parts.iter().map(|p| p.len().to_string()).collect();
                format!("K({})", s.join(","))
            }
        }
    }
}

impl fmt::Display for HostGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Number of theta copies in a decomposition of `host`.
pub fn copy_counts(e: u32, host: &HostShape) -> Result<u64, ThetaError> {
    let edges = host.edge_count();
    if e == 0 || !edges.is_multiple_of(e as u64) {
        return Err(ThetaError::NotDivisible {
            host: host.to_string(),
            edges,
            e,
        });
    }
    Ok(edges / e as u64)
}

/// The elementary counting conditions for a design of order `n`.
pub fn necessary_conditions(theta: &ThetaGraph, n: u64) -> bool {
    let e = theta.edge_count() as u64;
    let big_enough = n <= 1 || n >= e - 1;
    big_enough && (n * n.saturating_sub(1)).is_multiple_of(2 * e)
}

/// Whether a design of order `n` exists, for 10 to 15 edges.
pub fn spectrum_membership(theta: &ThetaGraph, n: u64) -> Result<bool, ThetaError> {
    let e = theta.edge_count();
    let (modulus, residues, exceptions): (u64, &[u64], &[u64]) = match e {
        10 => (20, &[0, 1, 5, 16], &[5]),
        11 => (11, &[0, 1], &[]),
        12 => (24, &[0, 1, 9, 16], &[9]),
        13 => (13, &[0, 1], &[]),
        14 => (28, &[0, 1, 8, 21], &[8]),
        15 => (15, &[0, 1, 6, 10], &[6, 10]),
        _ => return Err(ThetaError::UnsupportedEdgeCount(e)),
    };
    Ok(residues.contains(&(n % modulus)) && !exceptions.contains(&n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn th(a: u32, b: u32, c: u32) -> ThetaGraph {
        ThetaGraph::new(a, b, c).unwrap()
    }

    #[test]
    fn make_theta_examples() {
        let t = th(1, 2, 7);
        assert_eq!(t.edge_count(), 10);
        assert!(!t.is_bipartite());
        let t = th(2, 4, 4);
        assert_eq!(t.edge_count(), 10);
        assert!(t.is_bipartite());
        assert_eq!(make_theta(1, 1, 3), Err(ThetaError::InvalidTheta(1, 1, 3)));
        assert!(make_theta(3, 2, 5).is_err());
        assert!(make_theta(0, 2, 5).is_err());
    }

    #[test]
    fn theta_display_round_trip() {
        let t = th(3, 4, 5);
        assert_eq!(t.to_string(), "theta(3,4,5)");
        assert_eq!("theta(3,4,5)".parse::<ThetaGraph>().unwrap(), t);
        assert!("theta(1,1,3)".parse::<ThetaGraph>().is_err());
        assert!("theta(1,2)".parse::<ThetaGraph>().is_err());
    }

    #[test]
    fn enumeration_small_cases() {
        assert!(enumerate_thetas(4).is_empty());
        let ten = enumerate_thetas(10);
        assert_eq!(ten.len(), 7);
        assert_eq!(ten.iter().filter(|t| t.is_bipartite()).count(), 2);
        assert_eq!(ten[0], th(1, 2, 7));
        assert_eq!(ten[6], th(3, 3, 4));
        let fifteen = enumerate_thetas(15);
        assert_eq!(fifteen.len(), 18);
        assert_eq!(fifteen.iter().filter(|t| t.is_bipartite()).count(), 6);
    }

    #[test]
    fn block_edges_examples() {
        let e = block_edges(&th(1, 2, 2), &[0, 1, 2, 3]).unwrap();
        assert_eq!(e, vec![(0, 1), (0, 2), (1, 2), (0, 3), (1, 3)]);

        let e = block_edges(&th(1, 2, 7), &[4, 17, 0, 9, 7, 1, 12, 15, 13]).unwrap();
        let expected = vec![
            (4, 17),
            (0, 4),
            (0, 17),
            (4, 9),
            (7, 9),
            (1, 7),
            (1, 12),
            (12, 15),
            (13, 15),
            (13, 17),
        ];
        assert_eq!(e, expected);

        assert!(matches!(
            block_edges(&th(1, 2, 2), &[0, 1, 2, 2]),
            Err(ThetaError::MalformedBlock(_))
        ));
        assert!(matches!(
            block_edges(&th(1, 2, 2), &[0, 1, 2]),
            Err(ThetaError::MalformedBlock(_))
        ));
    }

    #[test]
    fn degree_profile_of_first_k20_block() {
        let vs = [4, 17, 0, 9, 7, 1, 12, 15, 13];
        let e = block_edges(&th(1, 2, 7), &vs).unwrap();
        for (i, v) in vs.iter().enumerate() {
            let deg = e.iter().filter(|(x, y)| x == v || y == v).count();
            assert_eq!(deg, if i < 2 { 3 } else { 2 }, "vertex {v}");
        }
    }

    #[test]
    fn necessary_condition_examples() {
        let ten = th(1, 2, 7);
        assert!(!necessary_conditions(&ten, 5));
        assert!(necessary_conditions(&th(2, 4, 6), 16));
        assert!(necessary_conditions(&ten, 1));
        assert!(necessary_conditions(&ten, 0));
        assert!(necessary_conditions(&ten, 16));
        assert!(!necessary_conditions(&ten, 17));
    }

    #[test]
    fn spectrum_examples() {
        assert!(!spectrum_membership(&th(5, 5, 5), 10).unwrap());
        assert!(!spectrum_membership(&th(5, 5, 5), 6).unwrap());
        assert!(spectrum_membership(&th(2, 4, 5), 22).unwrap());
        assert!(spectrum_membership(&th(2, 4, 8), 21).unwrap());
        assert!(!spectrum_membership(&th(2, 4, 8), 8).unwrap());
        assert!(!spectrum_membership(&th(1, 2, 7), 5).unwrap());
        assert!(!spectrum_membership(&th(4, 4, 4), 9).unwrap());
        assert!(spectrum_membership(&th(1, 2, 7), 0).unwrap());
        assert!(spectrum_membership(&th(1, 2, 7), 1).unwrap());
        assert_eq!(
            spectrum_membership(&th(1, 2, 6), 18),
            Err(ThetaError::UnsupportedEdgeCount(9))
        );
    }

    #[test]
    fn copy_count_examples() {
        assert_eq!(copy_counts(10, &HostShape::Complete(20)).unwrap(), 19);
        assert_eq!(
            copy_counts(15, &HostShape::multipartite(vec![5, 5, 5])).unwrap(),
            5
        );
        assert_eq!(
            copy_counts(12, &HostShape::multipartite(vec![8, 8, 8, 24])).unwrap(),
            64
        );
        assert!(matches!(
            copy_counts(10, &HostShape::Complete(7)),
            Err(ThetaError::NotDivisible { .. })
        ));
    }

    #[test]
    fn host_edges() {
        let h = HostGraph::multipartite(vec![vec![0, 3, 6, 9, 12], (0..15).filter(|x| x % 3 != 0).collect()])
            .unwrap();
        assert_eq!(h.edge_count(), 50);
        assert_eq!(h.edges().len(), 50);
        assert!(!h.contains_edge(0, 3));
        assert!(h.contains_edge(0, 1));
        assert_eq!(h.label(), "K(5,10)");
        assert_eq!(h.shape(), HostShape::Multipartite(vec![5, 10]));
        assert!(HostGraph::multipartite(vec![vec![0, 1], vec![1, 2]]).is_err());
        assert_eq!(HostGraph::complete(20).edges().len(), 190);
    }

    #[test]
    fn edge_index_is_dense() {
        let mut seen = Vec::new();
        for v in 1..30u32 {
            for u in 0..v {
                seen.push(edge_index(u, v));
            }
        }
        let expected: Vec<usize> = (0..seen.len()).collect();
        assert_eq!(seen, expected);
        assert_eq!(edge_index(5, 2), edge_index(2, 5));
    }
}
