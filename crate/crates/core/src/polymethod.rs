//! Polygonal link methods and the tracing of characteristic loops.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tcell::{DartId, DirectedEdge, IVec2, Sign, TCell, VertexId};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VertexRule {
    Crossed,
    Branched,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeRule {
    SingleLine,
    /// Two strands twisted `m` times.
    DoubleLine(u32),
}

/// The pair (vertex rule, edge rule). `(Branched, SingleLine)` cannot be
/// constructed through [`PolygonalMethod::new`] or parsing.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolygonalMethod {
    vertex: VertexRule,
    edge: EdgeRule,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MethodError {
    #[error("invalid method `{0}` (expected cr:s, cr:<m> or br:<m>)")]
    Syntax(String),
    #[error("branched vertices have no single line edge rule")]
    BranchedSingleLine,
    #[error("method {method} needs degree 4 at every vertex, but vertex `{vertex}` has degree {degree}")]
    Inapplicable { method: PolygonalMethod, vertex: String, degree: usize },
    #[error("edge sequence is not a closed walk: {0}")]
    NotALoop(String),
}

impl PolygonalMethod {
    pub fn new(vertex: VertexRule, edge: EdgeRule) -> Result<PolygonalMethod, MethodError> {
        if vertex == VertexRule::Branched && edge == EdgeRule::SingleLine {
            return Err(MethodError::BranchedSingleLine);
        }
        Ok(PolygonalMethod { vertex, edge })
    }

    pub fn crossed(m: u32) -> PolygonalMethod {
        PolygonalMethod { vertex: VertexRule::Crossed, edge: EdgeRule::DoubleLine(m) }
    }

    pub fn crossed_single() -> PolygonalMethod {
        PolygonalMethod { vertex: VertexRule::Crossed, edge: EdgeRule::SingleLine }
    }

    pub fn branched(m: u32) -> PolygonalMethod {
        PolygonalMethod { vertex: VertexRule::Branched, edge: EdgeRule::DoubleLine(m) }
    }

    pub fn vertex_rule(self) -> VertexRule {
        self.vertex
    }

    pub fn edge_rule(self) -> EdgeRule {
        self.edge
    }

    /// Twist count, `None` for a single line.
    pub fn twists(self) -> Option<u32> {
        match self.edge {
            EdgeRule::SingleLine => None,
            EdgeRule::DoubleLine(m) => Some(m),
        }
    }

    pub fn is_odd(self) -> bool {
        matches!(self.edge, EdgeRule::DoubleLine(m) if m % 2 == 1)
    }

    /// Rotation offset taken at a vertex in the "plus" phase.
    pub fn step(self) -> i64 {
        match self.vertex {
            VertexRule::Crossed => 2,
            VertexRule::Branched => 1,
        }
    }

    /// Number of parity phases in the state space.
    pub fn phases(self) -> usize {
        if self.is_odd() {
            2
        } else {
            1
        }
    }

    pub fn check_applicable(self, cell: &TCell) -> Result<(), MethodError> {
        if self.edge != EdgeRule::SingleLine {
            return Ok(());
        }
        match cell.vertex_ids().find(|&v| cell.degree(v) != 4) {
            None => Ok(()),
            Some(v) => Err(MethodError::Inapplicable {
                method: self,
                vertex: cell.vertex_name(v).to_string(),
                degree: cell.degree(v),
            }),
        }
    }

    /// Every method used by the sweeps: cr:s, then cr:m and br:m for m in `twists`.
    pub fn sweep(twists: std::ops::RangeInclusive<u32>) -> Vec<PolygonalMethod> {
        let mut out = vec![PolygonalMethod::crossed_single()];
        out.extend(twists.clone().map(PolygonalMethod::crossed));
        out.extend(twists.map(PolygonalMethod::branched));
        out
    }
}

impl fmt::Display for PolygonalMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = match self.vertex {
            VertexRule::Crossed => "cr",
            VertexRule::Branched => "br",
        };
        match self.edge {
            EdgeRule::SingleLine => write!(f, "{v}:s"),
            EdgeRule::DoubleLine(m) => write!(f, "{v}:{m}"),
        }
    }
}

impl FromStr for PolygonalMethod {
    type Err = MethodError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let syntax = || MethodError::Syntax(s.to_string());
        let (v, e) = s.split_once(':').ok_or_else(syntax)?;
        let vertex = match v {
            "cr" => VertexRule::Crossed,
            "br" => VertexRule::Branched,
            _ => return Err(syntax()),
        };
        let edge = if e == "s" {
            EdgeRule::SingleLine
        } else if !e.is_empty() && e.bytes().all(|b| b.is_ascii_digit()) {
            EdgeRule::DoubleLine(e.parse().map_err(|_| syntax())?)
        } else {
            return Err(syntax());
        };
        PolygonalMethod::new(vertex, edge)
    }
}

impl Serialize for PolygonalMethod {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PolygonalMethod {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Position of a strand: the directed edge it runs along and, for odd twist
/// counts, which phase of the alternating offset applies at the next vertex
/// (0 takes the plus offset).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StrandState {
    pub position: DirectedEdge,
    pub parity: u8,
}

impl StrandState {
    pub fn new(position: DirectedEdge) -> StrandState {
        StrandState { position, parity: 0 }
    }

    /// Dense index in `0..phases * darts`.
    pub fn index(self) -> usize {
        self.position.dart.0 * 2 + self.parity as usize
    }
}

pub fn successor(cell: &TCell, method: PolygonalMethod, state: StrandState) -> Result<StrandState, MethodError> {
    if method.edge_rule() == EdgeRule::SingleLine {
        let v = cell.head(state.position.dart);
        if cell.degree(v) != 4 {
            return Err(MethodError::Inapplicable {
                method,
                vertex: cell.vertex_name(v).to_string(),
                degree: cell.degree(v),
            });
        }
    }
    Ok(step_unchecked(cell, method, state))
}

fn step_unchecked(cell: &TCell, method: PolygonalMethod, state: StrandState) -> StrandState {
    let k = if state.parity == 0 { method.step() } else { -method.step() };
    let parity = if method.is_odd() { 1 - state.parity } else { 0 };
    StrandState { position: cell.edge_offset(state.position, k), parity }
}

/// All states of the successor map, in index order.
pub fn states(cell: &TCell, method: PolygonalMethod) -> Vec<StrandState> {
    let phases = method.phases() as u8;
    cell.dart_ids()
        .flat_map(|d| (0..phases).map(move |p| StrandState { position: cell.directed(d), parity: p }))
        .collect()
}

/// Cycle decomposition of the successor map, each cycle starting at its
/// least state.
pub fn trace_cycles(cell: &TCell, method: PolygonalMethod) -> Result<Vec<Vec<StrandState>>, MethodError> {
    method.check_applicable(cell)?;
    let mut seen = vec![false; 2 * cell.dart_count()];
    let mut cycles = Vec::new();
    for start in states(cell, method) {
        if seen[start.index()] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut s = start;
        while !seen[s.index()] {
            seen[s.index()] = true;
            cycle.push(s);
            s = step_unchecked(cell, method, s);
        }
        debug_assert_eq!(s, start, "successor is not a bijection");
        cycles.push(cycle);
    }
    Ok(cycles)
}

/// A closed strand of the motif, as the cyclic sequence of oriented edges it
/// follows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharacteristicLoop {
    pub edges: Vec<DirectedEdge>,
    /// Phase at each edge; all zero unless the twist count is odd.
    pub parities: Vec<u8>,
    pub homology: IVec2,
    pub method: PolygonalMethod,
    /// Number of traced state cycles in this reversal class.
    pub raw_cycles: usize,
}

impl CharacteristicLoop {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn darts(&self) -> Vec<DartId> {
        self.edges.iter().map(|e| e.dart).collect()
    }

    /// Vertex reached after the `i`-th edge.
    pub fn junction(&self, cell: &TCell, i: usize) -> VertexId {
        cell.head(self.edges[i].dart)
    }

    pub fn is_essential(&self) -> bool {
        !self.homology.is_zero()
    }

    pub fn word_string(&self, cell: &TCell) -> String {
        self.edges.iter().map(|e| cell.dart_label(e.dart)).collect::<Vec<_>>().join(".")
    }
}

/// Sum of signed translation vectors along a closed walk.
pub fn loop_homology(cell: &TCell, edges: &[DirectedEdge]) -> Result<IVec2, MethodError> {
    if edges.is_empty() {
        return Err(MethodError::NotALoop("empty sequence".into()));
    }
    for (i, e) in edges.iter().enumerate() {
        let next = edges[(i + 1) % edges.len()];
        if e.sign != cell.sign(e.dart) {
            return Err(MethodError::NotALoop(format!("letter {i} has the wrong sign")));
        }
        if cell.head(e.dart) != cell.tail(next.dart) {
            return Err(MethodError::NotALoop(format!(
                "{} does not end where {} starts",
                cell.dart_label(e.dart),
                cell.dart_label(next.dart)
            )));
        }
    }
    Ok(edges.iter().fold(IVec2::ZERO, |acc, e| acc + cell.translation(e.dart)))
}

type LetterKey = (String, Sign);

fn least_rotation<T: Ord + Clone>(seq: &[T]) -> Vec<T> {
    (0..seq.len())
        .map(|r| seq[r..].iter().chain(&seq[..r]).cloned().collect::<Vec<T>>())
        .min()
        .unwrap_or_default()
}

/// Key identifying a dart cycle up to rotation and reversal.
fn class_key(cell: &TCell, darts: &[DartId]) -> Vec<LetterKey> {
    let key = |d: &DartId| (cell.edge_label(cell.edge_of(*d)).to_string(), cell.sign(*d));
    let forward: Vec<LetterKey> = darts.iter().map(key).collect();
    let backward: Vec<LetterKey> = darts.iter().rev().map(|d| key(&cell.opposite(*d))).collect();
    least_rotation(&forward).min(least_rotation(&backward))
}

/// Characteristic loops of `method` on `cell`, one per class of traced cycles
/// under rotation and reversal, in canonical order.
pub fn trace_loops(cell: &TCell, method: PolygonalMethod) -> Result<Vec<CharacteristicLoop>, MethodError> {
    let cycles = trace_cycles(cell, method)?;
    let mut classes: Vec<(Vec<LetterKey>, Vec<StrandState>, usize)> = Vec::new();
    let mut index: HashMap<Vec<LetterKey>, usize> = HashMap::new();
    for cycle in cycles {
        let darts: Vec<DartId> = cycle.iter().map(|s| s.position.dart).collect();
        let key = class_key(cell, &darts);
        let rep = canonical_rotation(cell, &cycle);
        match index.get(&key) {
            Some(&i) => {
                classes[i].2 += 1;
                if state_key(cell, &rep) < state_key(cell, &classes[i].1) {
                    classes[i].1 = rep;
                }
            }
            None => {
                index.insert(key.clone(), classes.len());
                classes.push((key, rep, 1));
            }
        }
    }
    let mut loops: Vec<CharacteristicLoop> = classes
        .into_iter()
        .map(|(_, rep, raw)| {
            let edges: Vec<DirectedEdge> = rep.iter().map(|s| s.position).collect();
            let homology = edges.iter().fold(IVec2::ZERO, |acc, e| acc + cell.translation(e.dart));
            CharacteristicLoop {
                parities: rep.iter().map(|s| s.parity).collect(),
                edges,
                homology,
                method,
                raw_cycles: raw,
            }
        })
        .collect();
    loops.sort_by_key(|l| {
        let states: Vec<StrandState> = l
            .edges
            .iter()
            .zip(&l.parities)
            .map(|(e, p)| StrandState { position: *e, parity: *p })
            .collect();
        state_key(cell, &states)
    });
    Ok(loops)
}

/// Index of the loop in `loops` whose class contains the dart cycle `darts`.
pub fn loop_index_of(cell: &TCell, loops: &[CharacteristicLoop], darts: &[DartId]) -> Option<usize> {
    let key = class_key(cell, darts);
    loops.iter().position(|l| class_key(cell, &l.darts()) == key)
}

fn state_key(cell: &TCell, states: &[StrandState]) -> Vec<(String, Sign, u8)> {
    states
        .iter()
        .map(|s| (cell.edge_label(cell.edge_of(s.position.dart)).to_string(), s.position.sign, s.parity))
        .collect()
}

fn canonical_rotation(cell: &TCell, cycle: &[StrandState]) -> Vec<StrandState> {
    let keyed = state_key(cell, cycle);
    let best = (0..cycle.len())
        .min_by_key(|&r| keyed[r..].iter().chain(&keyed[..r]).cloned().collect::<Vec<_>>())
        .unwrap_or(0);
    cycle[best..].iter().chain(&cycle[..best]).copied().collect()
}
