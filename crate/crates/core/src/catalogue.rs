//! Text catalogue of base-block decompositions: parsing, serialization,
//! lookup, and the embedded tables.
//!
//! The format is line oriented with `#` comments:
//!
//! ```text
//! entry theta(1,2,7) host K(20)
//! source: tabulated
//! act: (0..19 +4)
//! developed: 3
//! block: 4 17 0 9 7 1 12 15 13
//! ...
//! end
//! ```
//!
//! A multipartite host declares its parts either inline
//! (`host K(10,10,10) parts residue-mod 3`) or with one `part:` line per part.
//! Without any declaration the parts are consecutive runs of points.
//! Points not in an `act:` wheel must be listed on a `fix:` line.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use thiserror::Error;

use crate::action::{Decomposition, GroupAction, Wheel};
use crate::theta::{HostGraph, HostShape, Point, ThetaBlock, ThetaGraph};
use crate::verify::verify_decomposition;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CatalogueError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}: {theta} needs {expected} vertices, block has {got}")]
    ArityMismatch {
        line: usize,
        theta: ThetaGraph,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: point {point} outside host of order {order}")]
    PointOutOfRange { line: usize, point: Point, order: u32 },
    #[error("no catalogue entry for {theta} on {host}")]
    NotFound { theta: ThetaGraph, host: HostShape },
    #[error("entry {theta} on {host} does not verify ({violations} violations)")]
    Unverified {
        theta: ThetaGraph,
        host: String,
        violations: u64,
    },
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CatalogueEntry {
    pub decomposition: Decomposition,
    pub source: String,
}

impl CatalogueEntry {
    pub fn theta(&self) -> &ThetaGraph {
        &self.decomposition.theta
    }

    pub fn host(&self) -> &HostGraph {
        &self.decomposition.host
    }
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> CatalogueError {
    CatalogueError::Syntax {
        line,
        col,
        msg: msg.into(),
    }
}

struct Draft {
    line: usize,
    theta: ThetaGraph,
    sizes: Vec<u32>,
    residue_mod: Option<u32>,
    source: String,
    parts: Vec<Vec<Point>>,
    wheels: Vec<Wheel>,
    fixed: Vec<Point>,
    has_action: bool,
    developed: Option<usize>,
    blocks: Vec<(usize, Vec<Point>)>,
}

fn parse_points(text: &str, line: usize, col: usize) -> Result<Vec<Point>, CatalogueError> {
    let mut out = Vec::new();
    let mut offset = 0;
    for tok in text.split_whitespace() {
        let at = text[offset..].find(tok).map_or(offset, |i| offset + i);
        offset = at + tok.len();
        out.push(
            tok.parse()
                .map_err(|_| syntax(line, col + at, format!("expected a point, found {tok:?}")))?,
        );
    }
    Ok(out)
}

fn parse_host(text: &str, line: usize, col: usize) -> Result<(Vec<u32>, Option<u32>), CatalogueError> {
    let (host, rest) = match text.find(')') {
        Some(i) => (&text[..=i], text[i + 1..].trim()),
        None => return Err(syntax(line, col, "unterminated host")),
    };
    let inner = host
        .strip_prefix("K(")
        .and_then(|h| h.strip_suffix(')'))
        .ok_or_else(|| syntax(line, col, format!("expected K(...), found {host:?}")))?;
    let sizes: Vec<u32> = inner
        .split(',')
        .map(|s| s.trim().parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|_| syntax(line, col, format!("bad host {host:?}")))?;
    let residue = if rest.is_empty() {
        None
    } else {
        let m = rest
            .strip_prefix("parts residue-mod")
            .and_then(|m| m.trim().parse::<u32>().ok())
            .ok_or_else(|| syntax(line, col + host.len(), format!("unexpected {rest:?}")))?;
        Some(m)
    };
    Ok((sizes, residue))
}

fn parse_wheels(text: &str, line: usize, col: usize) -> Result<Vec<Wheel>, CatalogueError> {
    let mut out = Vec::new();
    let mut rest = text.trim();
    let mut at = col + (text.len() - text.trim_start().len());
    while !rest.is_empty() {
        let close = rest.find(')').ok_or_else(|| syntax(line, at, "unterminated segment"))?;
        let seg = rest[..close]
            .strip_prefix('(')
            .ok_or_else(|| syntax(line, at, "segment must start with '('"))?;
        let bad = || syntax(line, at, format!("segment must look like (a..b +k), found {seg:?}"));
        let (range, step) = seg.split_once('+').ok_or_else(bad)?;
        let (lo, hi) = range.trim().split_once("..").ok_or_else(bad)?;
        let lo: Point = lo.trim().parse().map_err(|_| bad())?;
        let hi: Point = hi.trim().parse().map_err(|_| bad())?;
        let step: u32 = step.trim().parse().map_err(|_| bad())?;
        if hi < lo {
            return Err(bad());
        }
        out.push(Wheel::new(lo, hi - lo + 1, step).map_err(|e| syntax(line, at, e.to_string()))?);
        let consumed = close + 1;
        let next = rest[consumed..].trim_start();
        let skipped = rest.len() - next.len();
        rest = next;
        at += skipped;
        if let Some(r) = rest.strip_prefix(',') {
            rest = r.trim_start();
            at += 1;
        } else if !rest.is_empty() {
            return Err(syntax(line, at, "expected ',' between segments"));
        }
    }
    Ok(out)
}

impl Draft {
    fn finish(self) -> Result<CatalogueEntry, CatalogueError> {
        let line = self.line;
        let order: u32 = self.sizes.iter().sum();
        let host = if self.sizes.len() == 1 {
            if !self.parts.is_empty() || self.residue_mod.is_some() {
                return Err(syntax(line, 1, "complete host cannot declare parts"));
            }
            HostGraph::complete(self.sizes[0])
        } else if let Some(m) = self.residue_mod {
            let mut parts = vec![Vec::new(); m as usize];
            for p in 0..order {
                parts[(p % m) as usize].push(p);
            }
            let got: Vec<u32> = parts.iter().map(|p| p.len() as u32).collect();
            if got != self.sizes {
                return Err(syntax(line, 1, format!("residues mod {m} do not give parts {:?}", self.sizes)));
            }
            HostGraph::multipartite(parts).map_err(|e| syntax(line, 1, e.to_string()))?
        } else if self.parts.is_empty() {
            HostGraph::multipartite_contiguous(&self.sizes)
        } else {
            let got: Vec<u32> = self.parts.iter().map(|p| p.len() as u32).collect();
            if got != self.sizes {
                return Err(syntax(line, 1, format!("part lines give sizes {got:?}, host declares {:?}", self.sizes)));
            }
            HostGraph::multipartite(self.parts).map_err(|e| syntax(line, 1, e.to_string()))?
        };
        let action = if self.has_action {
            GroupAction::new(order, self.wheels, self.fixed).map_err(|e| syntax(line, 1, e.to_string()))?
        } else {
            GroupAction::identity(order)
        };
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (bline, pts) in self.blocks {
            if pts.len() != self.theta.vertex_count() {
                return Err(CatalogueError::ArityMismatch {
                    line: bline,
                    theta: self.theta,
                    expected: self.theta.vertex_count(),
                    got: pts.len(),
                });
            }
            if let Some(&p) = pts.iter().find(|&&p| p >= order) {
                return Err(CatalogueError::PointOutOfRange { line: bline, point: p, order });
            }
            blocks.push(ThetaBlock::new(self.theta, pts).map_err(|e| syntax(bline, 1, e.to_string()))?);
        }
        let developed = self.developed.unwrap_or(blocks.len());
        let decomposition =
            Decomposition::new(self.theta, host, action, blocks, developed).map_err(|e| syntax(line, 1, e.to_string()))?;
        Ok(CatalogueEntry {
            decomposition,
            source: self.source,
        })
    }
}

/// Parses catalogue text into entries.
pub fn parse_catalogue(text: &str) -> Result<Vec<CatalogueEntry>, CatalogueError> {
    let mut entries = Vec::new();
    let mut draft: Option<Draft> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let indent = content.len() - content.trim_start().len();
        let content = content.trim();
        if content.is_empty() {
            continue;
        }
        let (key, rest) = content.split_once(' ').unwrap_or((content, ""));
        let rest_col = indent + key.len() + 2;
        if key == "entry" {
            if draft.is_some() {
                return Err(syntax(line, indent + 1, "entry inside an open entry (missing 'end')"));
            }
            let (theta_txt, host_txt) = rest
                .split_once(" host ")
                .ok_or_else(|| syntax(line, rest_col, "expected 'entry theta(a,b,c) host K(...)'"))?;
            let theta: ThetaGraph = theta_txt
                .trim()
                .parse()
                .map_err(|e: crate::theta::ThetaError| syntax(line, rest_col, e.to_string()))?;
            let host_col = rest_col + theta_txt.len() + 6;
            let (sizes, residue_mod) = parse_host(host_txt.trim(), line, host_col)?;
            draft = Some(Draft {
                line,
                theta,
                sizes,
                residue_mod,
                source: String::new(),
                parts: Vec::new(),
                wheels: Vec::new(),
                fixed: Vec::new(),
                has_action: false,
                developed: None,
                blocks: Vec::new(),
            });
            continue;
        }
        let d = draft
            .as_mut()
            .ok_or_else(|| syntax(line, indent + 1, format!("{key:?} outside an entry")))?;
        match key {
            "source:" => d.source = rest.trim().to_string(),
            "part:" => d.parts.push(parse_points(rest, line, rest_col)?),
            "act:" => {
                d.wheels.extend(parse_wheels(rest, line, rest_col)?);
                d.has_action = true;
            }
            "fix:" => {
                d.fixed.extend(parse_points(rest, line, rest_col)?);
                d.has_action = true;
            }
            "developed:" => {
                d.developed = Some(
                    rest.trim()
                        .parse()
                        .map_err(|_| syntax(line, rest_col, format!("bad developed count {rest:?}")))?,
                )
            }
            "block:" => {
                let pts = parse_points(rest, line, rest_col)?;
                d.blocks.push((line, pts));
            }
            "end" => entries.push(draft.take().expect("checked above").finish()?),
            other => return Err(syntax(line, indent + 1, format!("unknown keyword {other:?}"))),
        }
    }
    if let Some(d) = draft {
        return Err(syntax(d.line, 1, "entry is never closed with 'end'"));
    }
    Ok(entries)
}

pub const HEADER: &str = "# theta-graph base-block catalogue\n";

/// Renders entries in the catalogue format.
pub fn serialize(entries: &[CatalogueEntry]) -> String {
    let mut out = String::from(HEADER);
    for e in entries {
        let d = &e.decomposition;
        out.push('\n');
        let _ = writeln!(out, "entry {} host {}", d.theta, d.host.label());
        if !e.source.is_empty() {
            let _ = writeln!(out, "source: {}", e.source);
        }
        if let Some(parts) = d.host.parts() {
            for p in parts {
                let _ = writeln!(out, "part: {}", join(p));
            }
        }
        let segs: Vec<String> = d
            .action
            .segments()
            .iter()
            .map(|w| format!("({}..{} +{})", w.start, w.start + w.length - 1, w.step))
            .collect();
        let _ = writeln!(out, "act: {}", segs.join(","));
        if !d.action.fixed_points().is_empty() {
            let _ = writeln!(out, "fix: {}", join(d.action.fixed_points()));
        }
        let _ = writeln!(out, "developed: {}", d.developed_count);
        for b in &d.base_blocks {
            let _ = writeln!(out, "block: {}", join(b.vertices()));
        }
        out.push_str("end\n");
    }
    out
}

fn join(points: &[Point]) -> String {
    points.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ")
}

/// An indexed collection of entries keyed by theta and host shape.
#[derive(Clone, Debug, Default)]
pub struct Catalogue {
    entries: Vec<CatalogueEntry>,
    index: HashMap<(ThetaGraph, HostShape), usize>,
}

impl Catalogue {
    pub fn new(entries: Vec<CatalogueEntry>) -> Self {
        let mut c = Catalogue::default();
        c.extend(entries);
        c
    }

    /// Adds entries; an existing entry for the same theta and host shape wins.
    pub fn extend(&mut self, entries: impl IntoIterator<Item = CatalogueEntry>) {
        for e in entries {
            let key = (e.decomposition.theta, e.decomposition.host.shape());
            if self.index.contains_key(&key) {
                continue;
            }
            self.index.insert(key, self.entries.len());
            self.entries.push(e);
        }
    }

    pub fn entries(&self) -> &[CatalogueEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, theta: &ThetaGraph, host: &HostShape) -> Result<&CatalogueEntry, CatalogueError> {
        self.index
            .get(&(*theta, host.clone()))
            .map(|&i| &self.entries[i])
            .ok_or_else(|| CatalogueError::NotFound {
                theta: *theta,
                host: host.clone(),
            })
    }

    pub fn contains(&self, theta: &ThetaGraph, host: &HostShape) -> bool {
        self.index.contains_key(&(*theta, host.clone()))
    }

    /// Parses `text` and rejects it unless every entry verifies.
    pub fn parse_checked(text: &str) -> Result<Vec<CatalogueEntry>, CatalogueError> {
        let entries = parse_catalogue(text)?;
        for e in &entries {
            let cert = verify_decomposition(&e.decomposition);
            if !cert.accepted() {
                return Err(CatalogueError::Unverified {
                    theta: e.decomposition.theta,
                    host: e.decomposition.host.label(),
                    violations: cert.violation_total,
                });
            }
        }
        Ok(entries)
    }

    /// Loads every `*.cat` file in `dir` (checked). A missing directory is empty.
    pub fn load_dir(dir: &Path) -> Result<Vec<CatalogueEntry>, CatalogueError> {
        let mut paths: Vec<_> = match std::fs::read_dir(dir) {
            Ok(rd) => rd
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "cat"))
                .collect(),
            Err(_) => return Ok(Vec::new()),
        };
        paths.sort();
        let mut out = Vec::new();
        for p in paths {
            let text = std::fs::read_to_string(&p).map_err(|e| CatalogueError::Io {
                path: p.display().to_string(),
                msg: e.to_string(),
            })?;
            out.extend(Self::parse_checked(&text)?);
        }
        Ok(out)
    }

    /// The tabulated decompositions shipped with the crate.
    pub fn builtin() -> &'static Catalogue {
        static BUILTIN: OnceLock<Catalogue> = OnceLock::new();
        BUILTIN.get_or_init(|| {
            let mut c = Catalogue::default();
            for (name, text) in BUILTIN_FILES {
                c.extend(parse_catalogue(text).unwrap_or_else(|e| panic!("embedded {name}: {e}")));
            }
            c
        })
    }

    /// Designs found by search and shipped with the crate.
    pub fn shipped_derived() -> &'static Catalogue {
        static DERIVED: OnceLock<Catalogue> = OnceLock::new();
        DERIVED.get_or_init(|| {
            let mut c = Catalogue::default();
            for (name, text) in DERIVED_FILES {
                c.extend(parse_catalogue(text).unwrap_or_else(|e| panic!("embedded {name}: {e}")));
            }
            c
        })
    }

    /// Tabulated plus shipped derived entries.
    pub fn standard() -> Catalogue {
        let mut c = Catalogue::builtin().clone();
        c.extend(Catalogue::shipped_derived().entries().iter().cloned());
        c
    }
}

/// Embedded tabulated catalogue files, by file name.
pub const BUILTIN_FILES: &[(&str, &str)] = &[
    ("e10_k5_5_5_5.cat", include_str!("../data/catalogue/e10_k5_5_5_5.cat")),
    ("e10_k5_5_5_5_5.cat", include_str!("../data/catalogue/e10_k5_5_5_5_5.cat")),
    ("e10_k5_5_5_5_15.cat", include_str!("../data/catalogue/e10_k5_5_5_5_15.cat")),
    ("e10_k5_5_5_5_20.cat", include_str!("../data/catalogue/e10_k5_5_5_5_20.cat")),
    ("e10_k5_10.cat", include_str!("../data/catalogue/e10_k5_10.cat")),
    ("e10_k10_10_10.cat", include_str!("../data/catalogue/e10_k10_10_10.cat")),
    ("e10_k16.cat", include_str!("../data/catalogue/e10_k16.cat")),
    ("e10_k20.cat", include_str!("../data/catalogue/e10_k20.cat")),
    ("e10_k20_20_20_25.cat", include_str!("../data/catalogue/e10_k20_20_20_25.cat")),
    ("e10_k25.cat", include_str!("../data/catalogue/e10_k25.cat")),
    ("e10_k36.cat", include_str!("../data/catalogue/e10_k36.cat")),
    ("e10_k40.cat", include_str!("../data/catalogue/e10_k40.cat")),
    ("e10_k41.cat", include_str!("../data/catalogue/e10_k41.cat")),
    ("e10_k45.cat", include_str!("../data/catalogue/e10_k45.cat")),
    ("e10_k56.cat", include_str!("../data/catalogue/e10_k56.cat")),
    ("e10_k65.cat", include_str!("../data/catalogue/e10_k65.cat")),
    ("e11_k11.cat", include_str!("../data/catalogue/e11_k11.cat")),
    ("e11_k11_11.cat", include_str!("../data/catalogue/e11_k11_11.cat")),
    ("e11_k11_11_11.cat", include_str!("../data/catalogue/e11_k11_11_11.cat")),
    ("e11_k11_11_11_11.cat", include_str!("../data/catalogue/e11_k11_11_11_11.cat")),
    ("e11_k11_11_11_11_11.cat", include_str!("../data/catalogue/e11_k11_11_11_11_11.cat")),
    ("e11_k12.cat", include_str!("../data/catalogue/e11_k12.cat")),
    ("e11_k22.cat", include_str!("../data/catalogue/e11_k22.cat")),
    ("e12_k8_8_8.cat", include_str!("../data/catalogue/e12_k8_8_8.cat")),
    ("e12_k8_8_8_8.cat", include_str!("../data/catalogue/e12_k8_8_8_8.cat")),
    ("e12_k8_8_8_24.cat", include_str!("../data/catalogue/e12_k8_8_8_24.cat")),
    ("e12_k8_12.cat", include_str!("../data/catalogue/e12_k8_12.cat")),
    ("e12_k16.cat", include_str!("../data/catalogue/e12_k16.cat")),
    ("e12_k24.cat", include_str!("../data/catalogue/e12_k24.cat")),
    ("e12_k33.cat", include_str!("../data/catalogue/e12_k33.cat")),
    ("e12_k40.cat", include_str!("../data/catalogue/e12_k40.cat")),
    ("e12_k49.cat", include_str!("../data/catalogue/e12_k49.cat")),
    ("e12_k57.cat", include_str!("../data/catalogue/e12_k57.cat")),
    ("e12_k81.cat", include_str!("../data/catalogue/e12_k81.cat")),
    ("e13_k13.cat", include_str!("../data/catalogue/e13_k13.cat")),
    ("e13_k13_13.cat", include_str!("../data/catalogue/e13_k13_13.cat")),
    ("e13_k13_13_13.cat", include_str!("../data/catalogue/e13_k13_13_13.cat")),
    ("e13_k13_13_13_13.cat", include_str!("../data/catalogue/e13_k13_13_13_13.cat")),
    ("e13_k13_13_13_13_13.cat", include_str!("../data/catalogue/e13_k13_13_13_13_13.cat")),
    ("e13_k14.cat", include_str!("../data/catalogue/e13_k14.cat")),
    ("e13_k26.cat", include_str!("../data/catalogue/e13_k26.cat")),
    ("e14_k7_7_7_7.cat", include_str!("../data/catalogue/e14_k7_7_7_7.cat")),
    ("e14_k7_7_7_7_7.cat", include_str!("../data/catalogue/e14_k7_7_7_7_7.cat")),
    ("e14_k7_7_7_7_21.cat", include_str!("../data/catalogue/e14_k7_7_7_7_21.cat")),
    ("e14_k7_7_7_7_28.cat", include_str!("../data/catalogue/e14_k7_7_7_7_28.cat")),
    ("e14_k14_7.cat", include_str!("../data/catalogue/e14_k14_7.cat")),
    ("e14_k14_14_14.cat", include_str!("../data/catalogue/e14_k14_14_14.cat")),
    ("e14_k21.cat", include_str!("../data/catalogue/e14_k21.cat")),
    ("e14_k28.cat", include_str!("../data/catalogue/e14_k28.cat")),
    ("e14_k28_28_28_35.cat", include_str!("../data/catalogue/e14_k28_28_28_35.cat")),
    ("e14_k36.cat", include_str!("../data/catalogue/e14_k36.cat")),
    ("e14_k49.cat", include_str!("../data/catalogue/e14_k49.cat")),
    ("e14_k56.cat", include_str!("../data/catalogue/e14_k56.cat")),
    ("e14_k57.cat", include_str!("../data/catalogue/e14_k57.cat")),
    ("e14_k64.cat", include_str!("../data/catalogue/e14_k64.cat")),
    ("e14_k77.cat", include_str!("../data/catalogue/e14_k77.cat")),
    ("e14_k92.cat", include_str!("../data/catalogue/e14_k92.cat")),
    ("e15_k5_5_5.cat", include_str!("../data/catalogue/e15_k5_5_5.cat")),
    ("e15_k5_5_5_5.cat", include_str!("../data/catalogue/e15_k5_5_5_5.cat")),
    ("e15_k15.cat", include_str!("../data/catalogue/e15_k15.cat")),
    ("e15_k15_15.cat", include_str!("../data/catalogue/e15_k15_15.cat")),
    ("e15_k16.cat", include_str!("../data/catalogue/e15_k16.cat")),
    ("e15_k20_15.cat", include_str!("../data/catalogue/e15_k20_15.cat")),
    ("e15_k21.cat", include_str!("../data/catalogue/e15_k21.cat")),
    ("e15_k25.cat", include_str!("../data/catalogue/e15_k25.cat")),
    ("e15_k25_15.cat", include_str!("../data/catalogue/e15_k25_15.cat")),
    ("e15_k30.cat", include_str!("../data/catalogue/e15_k30.cat")),
    ("e15_k36.cat", include_str!("../data/catalogue/e15_k36.cat")),
    ("e15_k40.cat", include_str!("../data/catalogue/e15_k40.cat")),
    ("e15_k51.cat", include_str!("../data/catalogue/e15_k51.cat")),
    ("e15_k55.cat", include_str!("../data/catalogue/e15_k55.cat")),
    ("e15_k66.cat", include_str!("../data/catalogue/e15_k66.cat")),
    ("e15_k70.cat", include_str!("../data/catalogue/e15_k70.cat")),
];

/// Embedded derived catalogue files.
pub const DERIVED_FILES: &[(&str, &str)] = &[
    ("order_2e_plus_1.cat", include_str!("../data/derived/order_2e_plus_1.cat")),
];
