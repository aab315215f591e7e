//! Point permutations built from residue wheels, and orbit development of
//! base blocks under them.

use std::fmt;

use thiserror::Error;

use crate::theta::{HostGraph, Point, ThetaBlock, ThetaError, ThetaGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ActionError {
    #[error("point {0} is not acted on")]
    UnknownPoint(Point),
    #[error("invalid action: {0}")]
    Invalid(String),
    #[error(transparent)]
    Theta(#[from] ThetaError),
}

/// `x -> start + ((x - start + step) mod length)` on `start..start+length`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Wheel {
    pub start: Point,
    pub length: u32,
    pub step: u32,
}

impl Wheel {
    pub fn new(start: Point, length: u32, step: u32) -> Result<Self, ActionError> {
        if length == 0 || step >= length {
            return Err(ActionError::Invalid(format!(
                "wheel at {start} needs 0 <= step < length, got step {step} length {length}"
            )));
        }
        Ok(Self {
            start,
            length,
            step,
        })
    }

    pub fn contains(&self, p: Point) -> bool {
        p >= self.start && p - self.start < self.length
    }

    pub fn apply(&self, p: Point) -> Point {
        self.start + (p - self.start + self.step) % self.length
    }

    pub fn order(&self) -> u64 {
        (self.length / gcd(self.step, self.length)) as u64
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd64(a, b) * b
}

fn gcd64(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd64(b, a % b)
    }
}

/// A permutation of `0..point_count` given by wheels and fixed points, which
/// together must partition the point set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupAction {
    segments: Vec<Wheel>,
    fixed_points: Vec<Point>,
    image: Vec<Point>,
}

impl GroupAction {
    pub fn new(point_count: u32, segments: Vec<Wheel>, fixed_points: Vec<Point>) -> Result<Self, ActionError> {
        let mut image = vec![Point::MAX; point_count as usize];
        for w in &segments {
            for p in w.start..w.start + w.length {
                match image.get_mut(p as usize) {
                    Some(slot) if *slot == Point::MAX => *slot = w.apply(p),
                    Some(_) => return Err(ActionError::Invalid(format!("point {p} is in two segments"))),
                    None => return Err(ActionError::Invalid(format!("point {p} outside 0..{point_count}"))),
                }
            }
        }
        for &p in &fixed_points {
            match image.get_mut(p as usize) {
                Some(slot) if *slot == Point::MAX => *slot = p,
                Some(_) => return Err(ActionError::Invalid(format!("point {p} listed twice"))),
                None => return Err(ActionError::Invalid(format!("point {p} outside 0..{point_count}"))),
            }
        }
        if let Some(p) = image.iter().position(|&x| x == Point::MAX) {
            return Err(ActionError::Invalid(format!("point {p} is not covered by the action")));
        }
        Ok(Self {
            segments,
            fixed_points,
            image,
        })
    }

    pub fn identity(point_count: u32) -> Self {
        Self::new(point_count, Vec::new(), (0..point_count).collect()).expect("identity is valid")
    }

    /// `x -> x + step (mod modulus)` on `0..modulus`, with `extra_fixed` further
    /// points fixed after it.
    pub fn cyclic(modulus: u32, step: u32, extra_fixed: u32) -> Result<Self, ActionError> {
        Self::new(
            modulus + extra_fixed,
            vec![Wheel::new(0, modulus, step % modulus.max(1))?],
            (modulus..modulus + extra_fixed).collect(),
        )
    }

    pub fn point_count(&self) -> u32 {
        self.image.len() as u32
    }

    pub fn segments(&self) -> &[Wheel] {
        &self.segments
    }

    pub fn fixed_points(&self) -> &[Point] {
        &self.fixed_points
    }

    pub fn apply(&self, p: Point) -> Result<Point, ActionError> {
        self.image.get(p as usize).copied().ok_or(ActionError::UnknownPoint(p))
    }

    /// The image table, indexed by point.
    pub fn images(&self) -> &[Point] {
        &self.image
    }

    /// Least `t >= 1` with the t-fold action equal to the identity.
    pub fn order(&self) -> u64 {
        self.segments.iter().map(Wheel::order).fold(1, lcm)
    }

    /// The `k`-th power as an image table.
    pub fn power(&self, k: u64) -> Vec<Point> {
        let mut out: Vec<Point> = (0..self.point_count()).collect();
        for _ in 0..k {
            for p in out.iter_mut() {
                *p = self.image[*p as usize];
            }
        }
        out
    }

    /// Whether every point of `host` is mapped into its own part.
    pub fn preserves_parts(&self, host: &HostGraph) -> bool {
        (0..self.point_count()).all(|p| host.part_of(p) == host.part_of(self.image[p as usize]))
    }

    /// Whether the image of every part of `host` is again a whole part.
    pub fn permutes_parts(&self, host: &HostGraph) -> bool {
        let Some(parts) = host.parts() else {
            return true;
        };
        parts.iter().all(|part| {
            let Some(&first) = part.first() else {
                return true;
            };
            let target = host.part_of(self.image[first as usize]);
            target.is_some_and(|t| {
                part.iter().all(|&p| host.part_of(self.image[p as usize]) == Some(t))
                    && parts[t as usize].len() == part.len()
            })
        })
    }

    /// The same permutation conjugated by the relabeling `sigma`
    /// (`x -> sigma(action(sigma^-1(x)))`), returned as an explicit table.
    pub fn conjugate_table(&self, sigma: &[Point]) -> Vec<Point> {
        let mut out = vec![0; self.image.len()];
        for (x, &img) in self.image.iter().enumerate() {
            out[sigma[x] as usize] = sigma[img as usize];
        }
        out
    }
}

impl fmt::Display for GroupAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let segs: Vec<String> = self
            .segments
            .iter()
            .map(|w| format!("({}..{} +{})", w.start, w.start + w.length - 1, w.step))
            .collect();
        write!(f, "act: {}", segs.join(","))?;
        if !self.fixed_points.is_empty() {
            let fixed: Vec<String> = self.fixed_points.iter().map(|p| p.to_string()).collect();
            write!(f, "\nfix: {}", fixed.join(" "))?;
        }
        Ok(())
    }
}

/// Base blocks plus the action that develops them. The first
/// `developed_count` base blocks are developed through the full orbit of the
/// action; the rest appear exactly once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub theta: ThetaGraph,
    pub host: HostGraph,
    pub action: GroupAction,
    pub base_blocks: Vec<ThetaBlock>,
    pub developed_count: usize,
}

impl Decomposition {
    pub fn new(
        theta: ThetaGraph,
        host: HostGraph,
        action: GroupAction,
        base_blocks: Vec<ThetaBlock>,
        developed_count: usize,
    ) -> Result<Self, ActionError> {
        if developed_count > base_blocks.len() {
            return Err(ActionError::Invalid(format!(
                "developed count {developed_count} exceeds {} base blocks",
                base_blocks.len()
            )));
        }
        if action.point_count() != host.order() {
            return Err(ActionError::Invalid(format!(
                "action acts on {} points but {} has {}",
                action.point_count(),
                host,
                host.order()
            )));
        }
        Ok(Self {
            theta,
            host,
            action,
            base_blocks,
            developed_count,
        })
    }

    /// A decomposition given as an explicit block list.
    pub fn explicit(theta: ThetaGraph, host: HostGraph, blocks: Vec<ThetaBlock>) -> Self {
        let n = blocks.len();
        let action = GroupAction::identity(host.order());
        Self {
            theta,
            host,
            action,
            base_blocks: blocks,
            developed_count: n,
        }
    }

    /// Empty decomposition of `K_n`, valid for `n <= 1`.
    pub fn empty(theta: ThetaGraph, n: u32) -> Self {
        Self::explicit(theta, HostGraph::complete(n), Vec::new())
    }

    pub fn expanded_len(&self) -> u64 {
        self.developed_count as u64 * self.action.order() + (self.base_blocks.len() - self.developed_count) as u64
    }
}

/// The full block list of a decomposition.
pub fn develop(d: &Decomposition) -> Result<Vec<ThetaBlock>, ActionError> {
    let order = d.action.order();
    let mut out = Vec::with_capacity(d.expanded_len() as usize);
    for (i, base) in d.base_blocks.iter().enumerate() {
        if i >= d.developed_count {
            out.push(base.clone());
            continue;
        }
        let mut cur = base.clone();
        for _ in 0..order {
            let image: Vec<Point> = cur
                .vertices()
                .iter()
                .map(|&p| d.action.apply(p))
                .collect::<Result<_, _>>()?;
            let next = ThetaBlock::new(*cur.theta(), image)?;
            out.push(cur);
            cur = next;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_examples() {
        let a = GroupAction::cyclic(20, 4, 0).unwrap();
        assert_eq!(a.apply(18), Ok(2));
        let k16 = GroupAction::cyclic(15, 5, 1).unwrap();
        assert_eq!(k16.apply(15), Ok(15));
        assert_eq!(k16.apply(14), Ok(4));
        let k5555 = GroupAction::new(20, vec![Wheel::new(0, 15, 1).unwrap(), Wheel::new(15, 5, 1).unwrap()], vec![])
            .unwrap();
        assert_eq!(k5555.apply(19), Ok(15));
        assert_eq!(k5555.apply(14), Ok(0));
        assert_eq!(a.apply(20), Err(ActionError::UnknownPoint(20)));
    }

    #[test]
    fn order_examples() {
        assert_eq!(GroupAction::cyclic(20, 4, 0).unwrap().order(), 5);
        assert_eq!(GroupAction::cyclic(24, 8, 0).unwrap().order(), 3);
        assert_eq!(GroupAction::identity(7).order(), 1);
        let mixed = GroupAction::new(40, vec![Wheel::new(0, 20, 4).unwrap(), Wheel::new(20, 15, 5).unwrap()], (35..40).collect())
            .unwrap();
        assert_eq!(mixed.order(), 15);
        assert_eq!(mixed.power(15), (0..40).collect::<Vec<_>>());
    }

    #[test]
    fn invalid_actions_rejected() {
        assert!(Wheel::new(0, 5, 5).is_err());
        assert!(GroupAction::new(10, vec![Wheel::new(0, 5, 1).unwrap()], vec![]).is_err());
        assert!(GroupAction::new(5, vec![Wheel::new(0, 5, 1).unwrap()], vec![3]).is_err());
        assert!(GroupAction::new(5, vec![Wheel::new(2, 5, 1).unwrap()], vec![0, 1]).is_err());
    }

    #[test]
    fn develop_counts() {
        let theta = ThetaGraph::new(1, 2, 2).unwrap();
        let host = HostGraph::complete(6);
        let blocks: Vec<ThetaBlock> = (0..4u32)
            .map(|i| ThetaBlock::new(theta, vec![i, (i + 1) % 6, (i + 2) % 6, (i + 3) % 6]).unwrap())
            .collect();
        let d = Decomposition::new(theta, host.clone(), GroupAction::cyclic(6, 2, 0).unwrap(), blocks.clone(), 0).unwrap();
        assert_eq!(develop(&d).unwrap(), blocks);
        let d = Decomposition::new(theta, host, GroupAction::cyclic(6, 2, 0).unwrap(), blocks, 2).unwrap();
        let dev = develop(&d).unwrap();
        assert_eq!(dev.len(), 2 * 3 + 2);
        assert_eq!(dev.len() as u64, d.expanded_len());
        assert_eq!(dev[1].vertices(), &[2, 3, 4, 5]);
    }

    #[test]
    fn decomposition_shape_checks() {
        let theta = ThetaGraph::new(1, 2, 2).unwrap();
        assert!(Decomposition::new(theta, HostGraph::complete(6), GroupAction::identity(5), vec![], 0).is_err());
        assert!(Decomposition::new(theta, HostGraph::complete(6), GroupAction::identity(6), vec![], 1).is_err());
    }
}
