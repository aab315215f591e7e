//! Group divisible designs: representation, a verified provider with a
//! persistent cache, the constructions behind it, and parallel-class
//! group extension.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::search::stable_hash;
use crate::theta::Point;
use crate::verify::verify_gdd_certificate;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GddError {
    #[error("cannot provide a {sizes}-GDD of type {ty}: {reason}")]
    Unprovidable { sizes: String, ty: String, reason: String },
    #[error("{new} new points but only {classes} parallel classes (or a repeated class)")]
    TooManyNewPoints { new: usize, classes: usize },
    #[error("bad GDD text at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A design on `0..point_count`: groups partition the points and every pair
/// from distinct groups lies in exactly one block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gdd {
    pub point_count: u32,
    pub groups: Vec<Vec<Point>>,
    pub blocks: Vec<Vec<Point>>,
    pub sizes: BTreeSet<usize>,
}

/// A GDD whose blocks are partitioned into parallel classes (block indices).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvableGdd {
    pub gdd: Gdd,
    pub classes: Vec<Vec<usize>>,
}

/// Renders a group-size vector in exponent form, e.g. `3^4 5^1`.
pub fn type_string(ty: &[u32]) -> String {
    let mut out: Vec<String> = Vec::new();
    let mut i = 0;
    while i < ty.len() {
        let mut j = i;
        while j < ty.len() && ty[j] == ty[i] {
            j += 1;
        }
        out.push(format!("{}^{}", ty[i], j - i));
        i = j;
    }
    if out.is_empty() {
        "empty".into()
    } else {
        out.join(" ")
    }
}

/// Parses exponent form (`2^3`, `3^4 5^1`) into a group-size vector.
pub fn parse_type(s: &str) -> Option<Vec<u32>> {
    let mut out = Vec::new();
    for tok in s.split_whitespace() {
        let (g, m) = tok.split_once('^')?;
        let g: u32 = g.parse().ok()?;
        let m: u32 = m.parse().ok()?;
        if g == 0 {
            return None;
        }
        out.extend(std::iter::repeat_n(g, m as usize));
    }
    Some(out)
}

pub fn sizes_string(sizes: &BTreeSet<usize>) -> String {
    let v: Vec<String> = sizes.iter().map(|k| k.to_string()).collect();
    if v.len() == 1 {
        v[0].clone()
    } else {
        format!("{{{}}}", v.join(","))
    }
}

fn canonical_key(kind: &str, sizes: &BTreeSet<usize>, ty: &[u32]) -> String {
    format!("{kind} {} {}", sizes_string(sizes), type_string(ty))
}

fn unprovidable(sizes: &BTreeSet<usize>, ty: &[u32], reason: impl Into<String>) -> GddError {
    GddError::Unprovidable {
        sizes: sizes_string(sizes),
        ty: type_string(ty),
        reason: reason.into(),
    }
}

/// Groups laid out as consecutive runs of points.
fn contiguous_groups(ty: &[u32]) -> Vec<Vec<Point>> {
    let mut next = 0;
    ty.iter()
        .map(|&g| {
            let grp: Vec<Point> = (next..next + g).collect();
            next += g;
            grp
        })
        .collect()
}

fn group_index(groups: &[Vec<Point>], n: u32) -> Vec<usize> {
    let mut out = vec![usize::MAX; n as usize];
    for (i, g) in groups.iter().enumerate() {
        for &p in g {
            out[p as usize] = i;
        }
    }
    out
}

impl Gdd {
    pub fn new(point_count: u32, groups: Vec<Vec<Point>>, blocks: Vec<Vec<Point>>, sizes: BTreeSet<usize>) -> Self {
        Self {
            point_count,
            groups,
            blocks,
            sizes,
        }
    }

    /// Group sizes in group order.
    pub fn type_vector(&self) -> Vec<u32> {
        self.groups.iter().map(|g| g.len() as u32).collect()
    }

    pub fn is_valid(&self) -> bool {
        verify_gdd_certificate(self).accepted()
    }

    /// The complete bipartite graph on groups of sizes `a` and `b`, blocks
    /// being its edges.
    pub fn complete_bipartite(a: u32, b: u32) -> Self {
        let groups = contiguous_groups(&[a, b]);
        let blocks = (0..a).flat_map(|u| (a..a + b).map(move |v| vec![u, v])).collect();
        Self::new(a + b, groups, blocks, BTreeSet::from([2]))
    }

    /// `K_m` as a 2-GDD of type `1^m`.
    pub fn complete_pairs(m: u32) -> Self {
        let groups = contiguous_groups(&vec![1; m as usize]);
        let blocks = (0..m).flat_map(|v| (0..v).map(move |u| vec![u, v])).collect();
        Self::new(m, groups, blocks, BTreeSet::from([2]))
    }

    fn to_text(&self, header: &str, classes: Option<&[Vec<usize>]>) -> String {
        let mut out = format!("{header}\npoints: {}\nsizes: {}\n", self.point_count, join(self.sizes.iter()));
        for g in &self.groups {
            out.push_str(&format!("group: {}\n", join(g.iter())));
        }
        for b in &self.blocks {
            out.push_str(&format!("block: {}\n", join(b.iter())));
        }
        for c in classes.unwrap_or(&[]) {
            out.push_str(&format!("class: {}\n", join(c.iter())));
        }
        out.push_str("end\n");
        out
    }
}

fn join<T: ToString>(it: impl Iterator<Item = T>) -> String {
    it.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Parses the cache text format (`points:`, `sizes:`, `group:`, `block:`,
/// `class:` lines, closed by `end`).
pub fn parse_gdd_text(text: &str) -> Result<(Gdd, Vec<Vec<usize>>), GddError> {
    let mut points = None;
    let mut sizes = BTreeSet::new();
    let mut groups = Vec::new();
    let mut blocks = Vec::new();
    let mut classes = Vec::new();
    let mut ended = false;
    for (i, raw) in text.lines().enumerate() {
        let err = |msg: &str| GddError::Parse {
            line: i + 1,
            msg: msg.into(),
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() || line.starts_with("gdd ") || line.starts_with("rgdd ") {
            continue;
        }
        if line == "end" {
            ended = true;
            continue;
        }
        let (key, rest) = line.split_once(':').ok_or_else(|| err("expected 'key: values'"))?;
        let nums: Vec<u64> = rest
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| err("expected integers"))?;
        match key {
            "points" => points = nums.first().map(|&n| n as u32),
            "sizes" => sizes.extend(nums.iter().map(|&n| n as usize)),
            "group" => groups.push(nums.iter().map(|&n| n as Point).collect()),
            "block" => blocks.push(nums.iter().map(|&n| n as Point).collect()),
            "class" => classes.push(nums.iter().map(|&n| n as usize).collect()),
            _ => return Err(err("unknown key")),
        }
    }
    if !ended {
        return Err(GddError::Parse {
            line: text.lines().count(),
            msg: "missing 'end'".into(),
        });
    }
    let point_count = points.ok_or(GddError::Parse {
        line: 1,
        msg: "missing 'points:'".into(),
    })?;
    Ok((Gdd::new(point_count, groups, blocks, sizes), classes))
}

impl ResolvableGdd {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Every block in exactly one class and every class a partition of the points.
    pub fn classes_valid(&self) -> bool {
        let mut seen = vec![false; self.gdd.blocks.len()];
        for c in &self.classes {
            let mut hit = vec![false; self.gdd.point_count as usize];
            for &b in c {
                match seen.get_mut(b) {
                    Some(s) if !*s => *s = true,
                    _ => return false,
                }
                for &p in &self.gdd.blocks[b] {
                    if std::mem::replace(&mut hit[p as usize], true) {
                        return false;
                    }
                }
            }
            if hit.iter().any(|h| !h) {
                return false;
            }
        }
        seen.iter().all(|&s| s)
    }

    pub fn is_valid(&self) -> bool {
        self.gdd.is_valid() && self.classes_valid()
    }
}

impl fmt::Display for Gdd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-GDD of type {} ({} blocks)",
            sizes_string(&self.sizes),
            type_string(&self.type_vector()),
            self.blocks.len()
        )
    }
}

/// Adjoins new point `point_count + i` to every block of class `assignment[i]`
/// and adds the new points as one extra group.
pub fn extend_with_group(r: &ResolvableGdd, assignment: &[usize]) -> Result<Gdd, GddError> {
    let classes = r.classes.len();
    let distinct: BTreeSet<_> = assignment.iter().collect();
    if assignment.len() > classes || distinct.len() != assignment.len() || assignment.iter().any(|&c| c >= classes) {
        return Err(GddError::TooManyNewPoints {
            new: assignment.len(),
            classes,
        });
    }
    let mut g = r.gdd.clone();
    if assignment.is_empty() {
        return Ok(g);
    }
    let base = g.point_count;
    for (i, &c) in assignment.iter().enumerate() {
        for &b in &r.classes[c] {
            g.blocks[b].push(base + i as Point);
        }
    }
    g.point_count += assignment.len() as u32;
    g.groups.push((base..g.point_count).collect());
    g.sizes = g.blocks.iter().map(Vec::len).collect();
    Ok(g)
}

/// Size limits for the provider's searches.
#[derive(Clone, Copy, Debug)]
pub struct Bounds {
    pub max_rgdd_t: u32,
    pub max_pbd_points: u32,
    pub max_search_points: u32,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            max_rgdd_t: 30,
            max_pbd_points: 50,
            max_search_points: 400,
        }
    }
}

/// Supplies verified GDDs, memoized in memory and optionally on disk.
pub struct GddProvider {
    cache_dir: Option<PathBuf>,
    bounds: Bounds,
    memo: Mutex<HashMap<String, Result<Arc<Gdd>, GddError>>>,
    rmemo: Mutex<HashMap<String, Result<Arc<ResolvableGdd>, GddError>>>,
}

impl Default for GddProvider {
    fn default() -> Self {
        Self::new(None)
    }
}

impl GddProvider {
    /// `cache_dir` is the root cache directory; files go under `gdd/`.
    pub fn new(cache_dir: Option<PathBuf>) -> Self {
        Self::with_bounds(cache_dir, Bounds::default())
    }

    pub fn with_bounds(cache_dir: Option<PathBuf>, bounds: Bounds) -> Self {
        Self {
            cache_dir,
            bounds,
            memo: Mutex::new(HashMap::new()),
            rmemo: Mutex::new(HashMap::new()),
        }
    }

    fn cache_path(&self, key: &str) -> Option<PathBuf> {
        let name: String = key
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
            .collect();
        self.cache_dir.as_ref().map(|d| d.join("gdd").join(format!("{name}.gdd")))
    }

    fn read_cache(&self, key: &str) -> Option<(Gdd, Vec<Vec<usize>>)> {
        let path = self.cache_path(key)?;
        let text = std::fs::read_to_string(path).ok()?;
        parse_gdd_text(&text).ok()
    }

    fn write_cache(&self, key: &str, text: &str) {
        if let Some(path) = self.cache_path(key) {
            write_atomic(&path, text);
        }
    }

    /// A `K`-GDD of the given type, verified.
    pub fn provide_gdd(&self, sizes: &[usize], ty: &[u32]) -> Result<Arc<Gdd>, GddError> {
        let sizes: BTreeSet<usize> = sizes.iter().copied().collect();
        let key = canonical_key("gdd", &sizes, ty);
        if let Some(g) = self.memo.lock().expect("gdd memo").get(&key) {
            return g.clone();
        }
        let result = self.build_gdd(&sizes, ty, &key).map(Arc::new);
        self.memo.lock().expect("gdd memo").insert(key, result.clone());
        result
    }

    fn build_gdd(&self, sizes: &BTreeSet<usize>, ty: &[u32], key: &str) -> Result<Gdd, GddError> {
        let g = match builtin_gdd(sizes, ty) {
            Some(g) => g,
            None => match self.read_cache(key) {
                Some((g, _)) if matches_request(&g, sizes, ty) && g.is_valid() => g,
                _ => {
                    let g = search_gdd(sizes, ty, &self.bounds, stable_hash(key))?;
                    self.write_cache(key, &g.to_text(&format!("# {key}"), None));
                    g
                }
            },
        };
        if !g.is_valid() || !matches_request(&g, sizes, ty) {
            return Err(unprovidable(sizes, ty, "construction failed verification"));
        }
        Ok(g)
    }

    /// A `k`-RGDD of type `k^u`, for `(k, u) = (3, 2t+1)` or `(4, 3t+1)`.
    pub fn provide_rgdd(&self, k: usize, ty: &[u32]) -> Result<Arc<ResolvableGdd>, GddError> {
        let sizes = BTreeSet::from([k]);
        let key = canonical_key("rgdd", &sizes, ty);
        if let Some(g) = self.rmemo.lock().expect("rgdd memo").get(&key) {
            return g.clone();
        }
        let result = self.build_rgdd(k, &sizes, ty, &key).map(Arc::new);
        self.rmemo.lock().expect("rgdd memo").insert(key, result.clone());
        result
    }

    fn build_rgdd(&self, k: usize, sizes: &BTreeSet<usize>, ty: &[u32], key: &str) -> Result<ResolvableGdd, GddError> {
        let u = ty.len() as u32;
        let t = match k {
            3 if u % 2 == 1 => (u - 1) / 2,
            4 if u % 3 == 1 => (u - 1) / 3,
            _ => 0,
        };
        if t == 0 || ty.iter().any(|&g| g as usize != k) {
            return Err(unprovidable(sizes, ty, "resolvable family is 3^(2t+1) or 4^(3t+1), t >= 1"));
        }
        if t > self.bounds.max_rgdd_t {
            return Err(unprovidable(sizes, ty, format!("t = {t} exceeds the bound {}", self.bounds.max_rgdd_t)));
        }
        let r = if u as usize == k {
            affine_rgdd(k as u32)
        } else {
            let cached = self.read_cache(key).map(|(gdd, classes)| ResolvableGdd { gdd, classes });
            match cached {
                Some(r) if matches_request(&r.gdd, sizes, ty) && r.is_valid() => r,
                _ => {
                    let seed = stable_hash(key);
                    let r = (u % 2 == 1)
                        .then(|| cyclic_rgdd(k as u32, u, seed))
                        .flatten()
                        .or_else(|| resolvable_sls(k as u32, u, (k as u32) * t, seed))
                        .ok_or_else(|| unprovidable(sizes, ty, "search budget exhausted"))?;
                    self.write_cache(key, &r.gdd.to_text(&format!("# {key}"), Some(&r.classes)));
                    r
                }
            }
        };
        if !r.is_valid() || r.class_count() as u32 != k as u32 * t {
            return Err(unprovidable(sizes, ty, "construction failed verification"));
        }
        Ok(r)
    }
}

fn matches_request(g: &Gdd, sizes: &BTreeSet<usize>, ty: &[u32]) -> bool {
    g.type_vector() == ty && g.sizes.is_subset(sizes) && g.blocks.iter().all(|b| sizes.contains(&b.len()))
}

pub(crate) fn write_atomic(path: &Path, text: &str) {
    if let Some(dir) = path.parent() {
        let _ = std::fs::create_dir_all(dir);
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    if std::fs::write(&tmp, text).is_ok() {
        let _ = std::fs::rename(&tmp, path);
    }
}

/// Designs with no search: one group, or one block on singleton groups.
fn builtin_gdd(sizes: &BTreeSet<usize>, ty: &[u32]) -> Option<Gdd> {
    let n: u32 = ty.iter().sum();
    let groups = contiguous_groups(ty);
    if ty.len() == 1 {
        return Some(Gdd::new(n, groups, Vec::new(), sizes.clone()));
    }
    if ty.iter().all(|&g| g == 1) && sizes.contains(&ty.len()) {
        return Some(Gdd::new(n, groups, vec![(0..n).collect()], sizes.clone()));
    }
    None
}

fn search_gdd(sizes: &BTreeSet<usize>, ty: &[u32], bounds: &Bounds, seed: u64) -> Result<Gdd, GddError> {
    let n: u32 = ty.iter().sum();
    if ty.is_empty() || sizes.is_empty() || sizes.iter().any(|&k| k < 2) {
        return Err(unprovidable(sizes, ty, "empty type or block size below 2"));
    }
    if n > bounds.max_search_points {
        return Err(unprovidable(sizes, ty, format!("{n} points exceeds the bound {}", bounds.max_search_points)));
    }
    let groups = contiguous_groups(ty);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if sizes.len() == 1 && sizes.contains(&3) {
        let gi = group_index(&groups, n);
        if !triangle_conditions(n, &gi) {
            return Err(unprovidable(sizes, ty, "divisibility conditions fail"));
        }
        let edges = cross_edges(n, &gi);
        let blocks = (0..200)
            .find_map(|_| hill_climb_triangles(n, &edges, &mut rng, 50_000 + 200 * edges.len() as u64))
            .ok_or_else(|| unprovidable(sizes, ty, "search budget exhausted"))?;
        return Ok(Gdd::new(n, groups, blocks, sizes.clone()));
    }
    let pbd = ty.iter().all(|&g| g == 1) && sizes.contains(&3) && sizes.is_subset(&BTreeSet::from([3, 4, 5]));
    if pbd && *sizes == BTreeSet::from([3, 4, 5]) {
        if matches!(n, 2 | 6 | 8) {
            return Err(unprovidable(sizes, ty, "no such design exists"));
        }
        if n > bounds.max_pbd_points {
            return Err(unprovidable(sizes, ty, format!("t = {n} exceeds the bound {}", bounds.max_pbd_points)));
        }
        if let Some(blocks) = pbd345(n, &mut rng) {
            return Ok(Gdd::new(n, groups, blocks, sizes.clone()));
        }
    }
    if n <= 40 {
        let ks: Vec<usize> = sizes.iter().copied().collect();
        for _ in 0..400 {
            if let Some(blocks) = backtrack_gdd(n, &groups, &ks, &mut rng, 200_000) {
                return Ok(Gdd::new(n, groups, blocks, sizes.clone()));
            }
        }
    }
    Err(unprovidable(sizes, ty, "search budget exhausted"))
}

fn cross_edges(n: u32, gi: &[usize]) -> Vec<(Point, Point)> {
    (0..n)
        .flat_map(|v| (0..v).map(move |u| (u, v)))
        .filter(|&(u, v)| gi[u as usize] != gi[v as usize])
        .collect()
}

fn triangle_conditions(n: u32, gi: &[usize]) -> bool {
    let degree = |p: u32| (0..n).filter(|&q| gi[q as usize] != gi[p as usize]).count();
    let edges: usize = (0..n).map(degree).sum::<usize>() / 2;
    edges.is_multiple_of(3) && (0..n).all(|p| degree(p) % 2 == 0)
}

const NONE: u32 = u32::MAX;

/// Triangle decomposition of the graph `edges` by hill-climbing.
fn hill_climb_triangles(n: u32, edges: &[(Point, Point)], rng: &mut ChaCha8Rng, max_steps: u64) -> Option<Vec<Vec<Point>>> {
    if !edges.len().is_multiple_of(3) {
        return None;
    }
    let nn = n as usize;
    let mut is_edge = vec![false; nn * nn];
    // third[u*n+v]: the third vertex of the triangle holding edge uv.
    let mut third = vec![NONE; nn * nn];
    let mut live: Vec<Vec<Point>> = vec![Vec::new(); nn];
    let mut pos = vec![usize::MAX; nn * nn];
    for &(u, v) in edges {
        let (u, v) = (u as usize, v as usize);
        is_edge[u * nn + v] = true;
        is_edge[v * nn + u] = true;
        pos[u * nn + v] = live[u].len();
        live[u].push(v as Point);
        pos[v * nn + u] = live[v].len();
        live[v].push(u as Point);
    }
    let mut live_points: Vec<Point> = (0..n).filter(|&p| !live[p as usize].is_empty()).collect();
    let mut lp_pos = vec![usize::MAX; nn];
    for (i, &p) in live_points.iter().enumerate() {
        lp_pos[p as usize] = i;
    }
    let target = edges.len() / 3;
    let mut count = 0usize;

    fn remove_live(
        live: &mut [Vec<Point>],
        pos: &mut [usize],
        live_points: &mut Vec<Point>,
        lp_pos: &mut [usize],
        nn: usize,
        u: usize,
        v: usize,
    ) {
        for (a, b) in [(u, v), (v, u)] {
            let i = pos[a * nn + b];
            let last = *live[a].last().expect("live edge");
            live[a].swap_remove(i);
            if last as usize != b {
                pos[a * nn + last as usize] = i;
            }
            pos[a * nn + b] = usize::MAX;
            if live[a].is_empty() {
                let j = lp_pos[a];
                let lastp = *live_points.last().expect("live point");
                live_points.swap_remove(j);
                if lastp as usize != a {
                    lp_pos[lastp as usize] = j;
                }
                lp_pos[a] = usize::MAX;
            }
        }
    }
    fn add_live(
        live: &mut [Vec<Point>],
        pos: &mut [usize],
        live_points: &mut Vec<Point>,
        lp_pos: &mut [usize],
        nn: usize,
        u: usize,
        v: usize,
    ) {
        for (a, b) in [(u, v), (v, u)] {
            if live[a].is_empty() {
                lp_pos[a] = live_points.len();
                live_points.push(a as Point);
            }
            pos[a * nn + b] = live[a].len();
            live[a].push(b as Point);
        }
    }

    let mut steps = 0u64;
    while count < target {
        steps += 1;
        if steps > max_steps || live_points.is_empty() {
            return None;
        }
        let x = live_points[rng.gen_range(0..live_points.len())] as usize;
        if live[x].len() < 2 {
            continue;
        }
        let i = rng.gen_range(0..live[x].len());
        let mut j = rng.gen_range(0..live[x].len() - 1);
        if j >= i {
            j += 1;
        }
        let (y, z) = (live[x][i] as usize, live[x][j] as usize);
        if !is_edge[y * nn + z] {
            continue;
        }
        let w = third[y * nn + z];
        if w == NONE {
            remove_live(&mut live, &mut pos, &mut live_points, &mut lp_pos, nn, y, z);
            count += 1;
        } else {
            let w = w as usize;
            for (a, b) in [(y, w), (z, w)] {
                third[a * nn + b] = NONE;
                third[b * nn + a] = NONE;
                add_live(&mut live, &mut pos, &mut live_points, &mut lp_pos, nn, a, b);
            }
        }
        remove_live(&mut live, &mut pos, &mut live_points, &mut lp_pos, nn, x, y);
        remove_live(&mut live, &mut pos, &mut live_points, &mut lp_pos, nn, x, z);
        for (a, b, c) in [(x, y, z), (x, z, y), (y, z, x)] {
            third[a * nn + b] = c as u32;
            third[b * nn + a] = c as u32;
        }
    }
    let mut out = Vec::with_capacity(target);
    for &(u, v) in edges {
        let w = third[u as usize * nn + v as usize];
        if w != NONE && w > v {
            let mut b = vec![u, v, w];
            b.sort_unstable();
            out.push(b);
        }
    }
    (out.len() == target).then_some(out)
}

/// Large blocks making the remaining graph of `K_t` meet the triangle
/// divisibility conditions.
fn pbd_template(t: u32) -> Option<Vec<Vec<Point>>> {
    let mut blocks = Vec::new();
    // Blocks of size four so that each point lies in an odd number of them.
    let odd_cover = |blocks: &mut Vec<Vec<Point>>| -> u32 {
        let mut next = 0;
        if t % 4 == 2 {
            blocks.extend([vec![0, 1, 2, 3], vec![0, 4, 5, 6], vec![0, 7, 8, 9]]);
            next = 10;
        }
        while next + 4 <= t {
            blocks.push((next..next + 4).collect());
            next += 4;
        }
        next
    };
    match t % 6 {
        1 | 3 => {}
        5 => blocks.push(vec![0, 1, 2, 3, 4]),
        0 | 4 => {
            if t < 4 || t % 4 == 2 && t < 10 || odd_cover(&mut blocks) != t {
                return None;
            }
        }
        _ => {
            // One block of size five meeting distinct blocks of the odd cover.
            if odd_cover(&mut blocks) != t {
                return None;
            }
            if t.is_multiple_of(4) && t >= 20 {
                blocks.push(vec![0, 4, 8, 12, 16]);
            } else if t >= 26 {
                blocks.push(vec![1, 4, 7, 10, 14]);
            } else {
                return None;
            }
        }
    }
    Some(blocks)
}

fn pbd345(t: u32, rng: &mut ChaCha8Rng) -> Option<Vec<Vec<Point>>> {
    let big = pbd_template(t)?;
    let nn = t as usize;
    let mut used = vec![false; nn * nn];
    for b in &big {
        for (i, &u) in b.iter().enumerate() {
            for &v in &b[i + 1..] {
                used[u as usize * nn + v as usize] = true;
                used[v as usize * nn + u as usize] = true;
            }
        }
    }
    let edges: Vec<(Point, Point)> = (0..t)
        .flat_map(|v| (0..v).map(move |u| (u, v)))
        .filter(|&(u, v)| !used[u as usize * nn + v as usize])
        .collect();
    let tri = (0..200).find_map(|_| hill_climb_triangles(t, &edges, rng, 50_000 + 200 * edges.len() as u64))?;
    Some(big.into_iter().chain(tri).collect())
}

/// Randomized exact-cover backtracking over cross-group pairs.
fn backtrack_gdd(
    n: u32,
    groups: &[Vec<Point>],
    ks: &[usize],
    rng: &mut ChaCha8Rng,
    node_budget: u64,
) -> Option<Vec<Vec<Point>>> {
    let nn = n as usize;
    let gi = group_index(groups, n);
    let mut covered = vec![false; nn * nn];
    for u in 0..nn {
        for v in 0..nn {
            if gi[u] == gi[v] {
                covered[u * nn + v] = true;
            }
        }
    }
    let mut order: Vec<usize> = (0..nn).collect();
    order.shuffle(rng);
    let mut state = Backtrack {
        nn,
        covered,
        blocks: Vec::new(),
        nodes: 0,
        budget: node_budget,
        order,
        ks: ks.to_vec(),
    };
    state.solve(rng).then_some(state.blocks)
}

struct Backtrack {
    nn: usize,
    covered: Vec<bool>,
    blocks: Vec<Vec<Point>>,
    nodes: u64,
    budget: u64,
    order: Vec<usize>,
    ks: Vec<usize>,
}

impl Backtrack {
    fn first_uncovered(&self) -> Option<(usize, usize)> {
        for (i, &u) in self.order.iter().enumerate() {
            for &v in &self.order[i + 1..] {
                if !self.covered[u * self.nn + v] {
                    return Some((u, v));
                }
            }
        }
        None
    }

    fn set(&mut self, block: &[usize], val: bool) {
        for (i, &u) in block.iter().enumerate() {
            for &v in &block[i + 1..] {
                self.covered[u * self.nn + v] = val;
                self.covered[v * self.nn + u] = val;
            }
        }
    }

    fn solve(&mut self, rng: &mut ChaCha8Rng) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            return false;
        }
        let Some((u, v)) = self.first_uncovered() else {
            return true;
        };
        let mut cands: Vec<usize> = (0..self.nn)
            .filter(|&w| w != u && w != v && !self.covered[u * self.nn + w] && !self.covered[v * self.nn + w])
            .collect();
        cands.shuffle(rng);
        let mut ks = self.ks.clone();
        ks.shuffle(rng);
        for k in ks {
            let mut block = vec![u, v];
            if self.extend(&mut block, &cands, 0, k, rng) {
                return true;
            }
            if self.nodes > self.budget {
                return false;
            }
        }
        false
    }

    fn extend(&mut self, block: &mut Vec<usize>, cands: &[usize], from: usize, k: usize, rng: &mut ChaCha8Rng) -> bool {
        if block.len() == k {
            self.set(block, true);
            self.blocks.push(block.iter().map(|&p| p as Point).collect());
            if self.solve(rng) {
                return true;
            }
            self.blocks.pop();
            self.set(block, false);
            return false;
        }
        for i in from..cands.len() {
            let w = cands[i];
            if block.iter().all(|&b| !self.covered[b * self.nn + w]) {
                block.push(w);
                let ok = self.extend(block, cands, i + 1, k, rng);
                block.pop();
                if ok {
                    return true;
                }
                if self.nodes > self.budget {
                    return false;
                }
            }
        }
        false
    }
}

/// Finite field tables for `q` in {3, 4}.
fn field(q: u32) -> (Vec<Vec<u32>>, Vec<Vec<u32>>) {
    let q = q as usize;
    let mut add = vec![vec![0; q]; q];
    let mut mul = vec![vec![0; q]; q];
    for a in 0..q {
        for b in 0..q {
            if q == 4 {
                add[a][b] = (a ^ b) as u32;
                const M: [[u32; 4]; 4] = [[0, 0, 0, 0], [0, 1, 2, 3], [0, 2, 3, 1], [0, 3, 1, 2]];
                mul[a][b] = M[a][b];
            } else {
                add[a][b] = ((a + b) % q) as u32;
                mul[a][b] = ((a * b) % q) as u32;
            }
        }
    }
    (add, mul)
}

/// The affine plane of order `q` minus one parallel class, which becomes the
/// groups: a `q`-RGDD of type `q^q` with `q` classes.
fn affine_rgdd(q: u32) -> ResolvableGdd {
    let (add, mul) = field(q);
    let idx = |x: u32, y: u32| x * q + y;
    let groups: Vec<Vec<Point>> = (0..q).map(|x| (0..q).map(|y| idx(x, y)).collect()).collect();
    let mut blocks = Vec::new();
    let mut classes = Vec::new();
    for m in 0..q {
        let mut class = Vec::new();
        for b in 0..q {
            class.push(blocks.len());
            blocks.push((0..q).map(|x| idx(x, add[mul[m as usize][x as usize] as usize][b as usize])).collect());
        }
        classes.push(class);
    }
    ResolvableGdd {
        gdd: Gdd::new(q * q, groups, blocks, BTreeSet::from([q as usize])),
        classes,
    }
}

/// A `k`-RGDD of type `k^u` (odd `u`) on `Z_u x Z_k` invariant under
/// `(x, y) -> (x + 1, y)`: one base parallel class developed into `u`
/// classes, plus transversal base blocks whose orbits are classes.
fn cyclic_rgdd(k: u32, u: u32, seed: u64) -> Option<ResolvableGdd> {
    let classes_needed = if k == 3 { 3 * (u - 1) / 2 } else { 4 * (u - 1) / 3 };
    let transversals = (classes_needed - u) as usize;
    let steps = (3_000 * (k * u) as u64 * (k * u) as u64).max(200_000);
    let base = (0..6u64).find_map(|r| cyclic_rgdd_search(k, u, transversals, seed.wrapping_add(r), steps))?;
    let (c, ts) = base;
    let pt = |x: u32, y: u32| y * u + x;
    let groups: Vec<Vec<Point>> = (0..u).map(|x| (0..k).map(|y| pt(x, y)).collect()).collect();
    let mut blocks = Vec::new();
    let mut classes = Vec::new();
    for g in 0..u {
        let mut class = Vec::new();
        for blk in c.chunks(k as usize) {
            class.push(blocks.len());
            blocks.push(blk.iter().map(|&(x, y)| pt((x + g) % u, y)).collect());
        }
        classes.push(class);
    }
    for t in &ts {
        let mut class = Vec::new();
        for g in 0..u {
            class.push(blocks.len());
            blocks.push(t.iter().enumerate().map(|(y, &x)| pt((x + g) % u, y as u32)).collect());
        }
        classes.push(class);
    }
    let r = ResolvableGdd {
        gdd: Gdd::new(u * k, groups, blocks, BTreeSet::from([k as usize])),
        classes,
    };
    r.is_valid().then_some(r)
}

type CyclicBase = (Vec<(u32, u32)>, Vec<Vec<u32>>);

fn cyclic_rgdd_search(k: u32, u: u32, tcount: usize, seed: u64, steps: u64) -> Option<CyclicBase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ku = k as usize;
    let half = (u / 2) as usize;
    let mixed_base = (k * (k - 1) / 2) as usize;
    // Orbit ids: pure (row, d) for d in 1..=u/2, then mixed (row pair, d) for d in 1..u.
    let pure_count = ku * half;
    let pair_rank = |y1: u32, y2: u32| -> usize {
        let (a, b) = if y1 < y2 { (y1, y2) } else { (y2, y1) };
        (a * k - a * (a + 1) / 2 + (b - a - 1)) as usize
    };
    let orbit = |(x1, y1): (u32, u32), (x2, y2): (u32, u32)| -> Option<usize> {
        if x1 == x2 {
            return None;
        }
        if y1 == y2 {
            let d = (x2 + u - x1) % u;
            let d = d.min(u - d) as usize;
            Some(y1 as usize * half + d - 1)
        } else {
            let d = if y1 < y2 { (x2 + u - x1) % u } else { (x1 + u - x2) % u } as usize;
            Some(pure_count + pair_rank(y1, y2) * (u as usize - 1) + d - 1)
        }
    };
    let total = pure_count + mixed_base * (u as usize - 1);
    let mut count = vec![0i32; total];
    let mut bad = 0i64;

    let mut c: Vec<(u32, u32)> = (0..k).flat_map(|y| (0..u).map(move |x| (x, y))).collect();
    c.shuffle(&mut rng);
    let mut ts: Vec<Vec<u32>> = (0..tcount)
        .map(|_| {
            let mut xs: Vec<u32> = (0..u).collect();
            xs.shuffle(&mut rng);
            xs.truncate(ku);
            xs
        })
        .collect();

    fn cost_of(c: i32) -> i64 {
        (c - 1).abs() as i64
    }
    let mut cost: i64 = total as i64;
    let apply = |pts: &[(u32, u32)], sign: i32, count: &mut [i32], cost: &mut i64, bad: &mut i64| {
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                match orbit(pts[i], pts[j]) {
                    Some(o) => {
                        *cost -= cost_of(count[o]);
                        count[o] += sign;
                        *cost += cost_of(count[o]);
                    }
                    None => *bad += sign as i64,
                }
            }
        }
    };
    let tpts = |t: &[u32]| -> Vec<(u32, u32)> { t.iter().enumerate().map(|(y, &x)| (x, y as u32)).collect() };
    for blk in c.chunks(ku) {
        apply(blk, 1, &mut count, &mut cost, &mut bad);
    }
    for t in &ts {
        apply(&tpts(t), 1, &mut count, &mut cost, &mut bad);
    }
    let blocks_in_c = u as usize;
    let mut temp = 1.0f64;
    let cooling = (0.05f64 / temp).powf(1.0 / steps as f64);
    for _ in 0..steps {
        temp *= cooling;
        let score = cost + 2 * bad;
        if score == 0 {
            return Some((c, ts));
        }
        let use_t = tcount > 0 && rng.gen_range(0..blocks_in_c + tcount) >= blocks_in_c;
        if use_t {
            let j = rng.gen_range(0..tcount);
            let y = rng.gen_range(0..ku);
            let old = ts[j].clone();
            let nx = rng.gen_range(0..u);
            if old.contains(&nx) {
                continue;
            }
            apply(&tpts(&old), -1, &mut count, &mut cost, &mut bad);
            ts[j][y] = nx;
            apply(&tpts(&ts[j]), 1, &mut count, &mut cost, &mut bad);
            let delta = cost + 2 * bad - score;
            if delta > 0 && rng.gen::<f64>() >= (-(delta as f64) / temp).exp() {
                apply(&tpts(&ts[j]), -1, &mut count, &mut cost, &mut bad);
                ts[j] = old;
                apply(&tpts(&ts[j]), 1, &mut count, &mut cost, &mut bad);
            }
        } else {
            let i = rng.gen_range(0..c.len());
            let j = rng.gen_range(0..c.len());
            let (bi, bj) = (i / ku, j / ku);
            if bi == bj {
                continue;
            }
            let (ri, rj) = (bi * ku..bi * ku + ku, bj * ku..bj * ku + ku);
            apply(&c[ri.clone()], -1, &mut count, &mut cost, &mut bad);
            apply(&c[rj.clone()], -1, &mut count, &mut cost, &mut bad);
            c.swap(i, j);
            apply(&c[ri.clone()], 1, &mut count, &mut cost, &mut bad);
            apply(&c[rj.clone()], 1, &mut count, &mut cost, &mut bad);
            let delta = cost + 2 * bad - score;
            if delta > 0 && rng.gen::<f64>() >= (-(delta as f64) / temp).exp() {
                apply(&c[ri.clone()], -1, &mut count, &mut cost, &mut bad);
                apply(&c[rj.clone()], -1, &mut count, &mut cost, &mut bad);
                c.swap(i, j);
                apply(&c[ri], 1, &mut count, &mut cost, &mut bad);
                apply(&c[rj], 1, &mut count, &mut cost, &mut bad);
            }
        }
    }
    None
}

/// A `k`-RGDD of type `k^u` with `classes` parallel classes. Each class stays
/// a partition of the points; annealing swaps repair the pair coverage.
fn resolvable_sls(k: u32, u: u32, classes: u32, seed: u64) -> Option<ResolvableGdd> {
    let n = (k * u) as usize;
    let ku = k as usize;
    let blocks_per_class = u as usize;
    let steps = 4_000 * (n * n) as u64;
    for r in 0..8u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ r.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut sls = ResolvableSls::new(n, ku, classes as usize, &mut rng);
        let mut temp = 1.5f64;
        let cooling = (0.03f64 / temp).powf(1.0 / steps as f64);
        for _ in 0..steps {
            if sls.cost == 0 {
                break;
            }
            temp *= cooling;
            let c = rng.gen_range(0..sls.classes.len());
            // Focus on a block of this class holding a conflicting pair.
            let bad: Vec<usize> = (0..blocks_per_class).filter(|&b| sls.block_conflicts(c, b)).collect();
            let bi = match bad.len() {
                0 => rng.gen_range(0..blocks_per_class),
                len => bad[rng.gen_range(0..len)],
            };
            let mut bj = rng.gen_range(0..blocks_per_class - 1);
            if bj >= bi {
                bj += 1;
            }
            let i = bi * ku + rng.gen_range(0..ku);
            let j = bj * ku + rng.gen_range(0..ku);
            let before = sls.cost;
            sls.swap(c, i, j);
            let delta = (sls.cost - before) as f64;
            if delta > 0.0 && rng.gen::<f64>() >= (-delta / temp).exp() {
                sls.swap(c, i, j);
            }
        }
        if sls.cost != 0 {
            continue;
        }
        let groups: Vec<Vec<Point>> = (0..u).map(|g| (g * k..g * k + k).collect()).collect();
        let mut blocks = Vec::new();
        let mut classes_out = Vec::new();
        for c in &sls.classes {
            let mut class = Vec::new();
            for blk in c.chunks(ku) {
                class.push(blocks.len());
                let mut b = blk.to_vec();
                b.sort_unstable();
                blocks.push(b);
            }
            classes_out.push(class);
        }
        let r = ResolvableGdd {
            gdd: Gdd::new(n as u32, groups, blocks, BTreeSet::from([ku])),
            classes: classes_out,
        };
        if r.is_valid() {
            return Some(r);
        }
    }
    None
}

struct ResolvableSls {
    n: usize,
    k: usize,
    classes: Vec<Vec<u32>>,
    cov: Vec<i32>,
    cost: i64,
}

impl ResolvableSls {
    fn new(n: usize, k: usize, class_count: usize, rng: &mut ChaCha8Rng) -> Self {
        let classes = (0..class_count)
            .map(|_| {
                let mut v: Vec<u32> = (0..n as u32).collect();
                v.shuffle(rng);
                v
            })
            .collect();
        let mut s = Self {
            n,
            k,
            classes,
            cov: vec![0; n * n],
            cost: (n * (n - k) / 2) as i64,
        };
        for c in 0..class_count {
            for b in 0..n / k {
                s.touch(c, b, 1);
            }
        }
        s
    }

    fn pair_cost(&self, a: u32, b: u32, c: i32) -> i64 {
        if a / self.k as u32 == b / self.k as u32 {
            c as i64
        } else {
            (c - 1).abs() as i64
        }
    }

    fn touch(&mut self, c: usize, b: usize, sign: i32) {
        let k = self.k;
        for i in 0..k {
            for j in i + 1..k {
                let (x, y) = (self.classes[c][b * k + i], self.classes[c][b * k + j]);
                let (x, y) = (x.min(y), x.max(y));
                let idx = x as usize * self.n + y as usize;
                self.cost -= self.pair_cost(x, y, self.cov[idx]);
                self.cov[idx] += sign;
                self.cost += self.pair_cost(x, y, self.cov[idx]);
            }
        }
    }

    fn block_conflicts(&self, c: usize, b: usize) -> bool {
        let k = self.k;
        (0..k).any(|i| {
            (i + 1..k).any(|j| {
                let (x, y) = (self.classes[c][b * k + i], self.classes[c][b * k + j]);
                let (x, y) = (x.min(y), x.max(y));
                x / k as u32 == y / k as u32 || self.cov[x as usize * self.n + y as usize] > 1
            })
        })
    }

    fn swap(&mut self, c: usize, i: usize, j: usize) {
        let (bi, bj) = (i / self.k, j / self.k);
        self.touch(c, bi, -1);
        self.touch(c, bj, -1);
        self.classes[c].swap(i, j);
        self.touch(c, bi, 1);
        self.touch(c, bj, 1);
    }
}
