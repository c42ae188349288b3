//! Generating cells of doubly periodic tilings, stored as quotient graphs on the
//! flat torus.
//!
//! A [`TCell`] is a combinatorial map: every undirected edge is split into two
//! darts, every vertex carries the counterclockwise cyclic order of the darts
//! leaving it, and every edge records the integer vector describing how its
//! canonical direction crosses the sides of the fundamental domain. No
//! coordinates are stored here; geometry lives in [`crate::diagram`].

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId(pub usize);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId(pub usize);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DartId(pub usize);

/// Integer vector in the translation lattice.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IVec2(pub i64, pub i64);

impl IVec2 {
    pub const ZERO: IVec2 = IVec2(0, 0);

    pub fn is_zero(self) -> bool {
        self == IVec2::ZERO
    }

    /// The 2x2 determinant `self.0 * other.1 - self.1 * other.0`.
    pub fn cross(self, other: IVec2) -> i64 {
        self.0 * other.1 - self.1 * other.0
    }

    pub fn parallel_to(self, other: IVec2) -> bool {
        self.cross(other) == 0
    }

    /// Apply the integer matrix `m` (row major) to this vector.
    pub fn transform(self, m: [[i64; 2]; 2]) -> IVec2 {
        IVec2(m[0][0] * self.0 + m[0][1] * self.1, m[1][0] * self.0 + m[1][1] * self.1)
    }

    /// Some `k` with `self == k * period`, if one exists. A zero period only
    /// divides the zero vector.
    pub fn multiple_of(self, period: IVec2) -> Option<i64> {
        if period.is_zero() {
            return self.is_zero().then_some(0);
        }
        if self.cross(period) != 0 {
            return None;
        }
        let k = if period.0 != 0 { self.0 / period.0 } else { self.1 / period.1 };
        (period * k == self).then_some(k)
    }
}

impl Add for IVec2 {
    type Output = IVec2;
    fn add(self, o: IVec2) -> IVec2 {
        IVec2(self.0 + o.0, self.1 + o.1)
    }
}

impl AddAssign for IVec2 {
    fn add_assign(&mut self, o: IVec2) {
        self.0 += o.0;
        self.1 += o.1;
    }
}

impl Sub for IVec2 {
    type Output = IVec2;
    fn sub(self, o: IVec2) -> IVec2 {
        IVec2(self.0 - o.0, self.1 - o.1)
    }
}

impl Neg for IVec2 {
    type Output = IVec2;
    fn neg(self) -> IVec2 {
        IVec2(-self.0, -self.1)
    }
}

impl Mul<i64> for IVec2 {
    type Output = IVec2;
    fn mul(self, k: i64) -> IVec2 {
        IVec2(self.0 * k, self.1 * k)
    }
}

impl fmt::Display for IVec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.0, self.1)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flipped(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// An edge traversed in one of its two directions.
///
/// `sign` is [`Sign::Plus`] iff `dart` is the canonical dart of its edge.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DirectedEdge {
    pub dart: DartId,
    pub sign: Sign,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dart {
    /// Vertex the dart leaves.
    pub vertex: VertexId,
    pub opposite: DartId,
    pub edge: EdgeId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub label: String,
    pub canonical: DartId,
    /// Boundary crossings of the canonical direction.
    pub translation: IVec2,
}

/// One violated cell invariant. [`TCell::validate`] reports at most one entry
/// per kind.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    DartInvolution { dart: DartId },
    RotationMembership { dart: DartId },
    DegreeTooLow { vertex: VertexId, degree: usize },
    Disconnected,
    Euler { chi: i64 },
    FaceTranslation { face: usize, sum: IVec2 },
    LatticeSpan { index: i64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DartInvolution { .. } => f.write_str("dart involution broken"),
            Violation::RotationMembership { .. } => {
                f.write_str("dart not listed exactly once in its vertex rotation")
            }
            Violation::DegreeTooLow { .. } => f.write_str("degree < 3"),
            Violation::Disconnected => f.write_str("disconnected graph"),
            Violation::Euler { .. } => f.write_str("Euler characteristic ≠ 0"),
            Violation::FaceTranslation { .. } => f.write_str("face with nonzero translation sum"),
            Violation::LatticeSpan { .. } => f.write_str("translations do not generate the lattice"),
        }
    }
}

impl Violation {
    /// Longer message including the offending item.
    pub fn detail(&self, cell: &TCell) -> String {
        match self {
            Violation::DartInvolution { dart } | Violation::RotationMembership { dart } => {
                format!("{self} (dart #{})", dart.0)
            }
            Violation::DegreeTooLow { vertex, degree } => {
                format!("{self}: vertex {} has degree {degree}", cell.vertex_name(*vertex))
            }
            Violation::Disconnected => self.to_string(),
            Violation::Euler { chi } => format!("{self}: V - E + F = {chi}"),
            Violation::FaceTranslation { face, sum } => format!("{self}: face {face} sums to {sum}"),
            Violation::LatticeSpan { index } => format!("{self}: cycle lattice has index {index}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TCellError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unknown vertex `{name}` at line {line}, column {column}")]
    UnknownVertex { line: usize, column: usize, name: String },
    #[error("unknown dart `{dart}` at line {line}, column {column}")]
    UnknownDart { line: usize, column: usize, dart: String },
    #[error("degree < 3: vertex `{vertex}` has degree {degree}")]
    DegreeTooLow { vertex: String, degree: usize },
    #[error("disconnected graph")]
    Disconnected,
    #[error("not a torus embedding: {0}")]
    NotTorus(String),
    #[error("invalid cell: {0}")]
    Invalid(String),
    #[error("basis change must have determinant ±1, got {0}")]
    NotUnimodular(i64),
}

/// The builtin tilings.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Builtin {
    Hexagonal,
    Kagome,
    Square,
    Triangular,
}

impl Builtin {
    pub const ALL: [Builtin; 4] = [Builtin::Hexagonal, Builtin::Kagome, Builtin::Square, Builtin::Triangular];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Hexagonal => "hexagonal",
            Builtin::Kagome => "kagome",
            Builtin::Square => "square",
            Builtin::Triangular => "triangular",
        }
    }

    fn source(self) -> &'static str {
        match self {
            // e2 runs B -> A so that the face reads e1+ e3- e2- e1- e3+ e2+.
            Builtin::Hexagonal => {
                "tcell v1\n\
                 vertex A\nvertex B\n\
                 edge e1 A B 0 0\nedge e2 B A 1 0\nedge e3 A B 0 -1\n\
                 rotation A e1+ e2- e3+\nrotation B e1- e2+ e3-\n"
            }
            Builtin::Kagome => {
                "tcell v1\n\
                 vertex u0\nvertex u1\nvertex u2\n\
                 edge e1 u0 u1 0 0\nedge e2 u0 u1 -1 0\nedge e3 u0 u2 0 0\n\
                 edge e4 u0 u2 0 -1\nedge e5 u1 u2 0 0\nedge e6 u1 u2 1 -1\n\
                 rotation u0 e1+ e3+ e2+ e4+\nrotation u1 e1- e6+ e2- e5+\n\
                 rotation u2 e3- e5- e4- e6-\n"
            }
            Builtin::Square => {
                "tcell v1\nvertex O\nedge h O O 1 0\nedge v O O 0 1\nrotation O h+ v+ h- v-\n"
            }
            Builtin::Triangular => {
                "tcell v1\nvertex O\n\
                 edge e1 O O 1 0\nedge e2 O O 0 1\nedge e3 O O -1 1\n\
                 rotation O e1+ e2+ e3+ e1- e2- e3-\n"
            }
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Builtin {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| format!("unknown tiling `{s}` (expected one of hexagonal, kagome, square, triangular)"))
    }
}

/// Quotient graph of a doubly periodic tiling on the flat torus.
#[derive(Clone, Debug)]
pub struct TCell {
    name: String,
    vertices: Vec<String>,
    edges: Vec<Edge>,
    darts: Vec<Dart>,
    rotation: Vec<Vec<DartId>>,
    position: Vec<usize>,
}

impl PartialEq for TCell {
    /// Structural equality up to the order in which vertices and edges are
    /// stored (the canonical emitted text is compared). Names are ignored.
    fn eq(&self, other: &TCell) -> bool {
        self.emit() == other.emit()
    }
}

pub fn builtin_tcell(which: Builtin) -> TCell {
    let mut cell = TCell::parse(which.source()).expect("builtin cells are valid");
    cell.name = which.name().to_string();
    cell
}

impl TCell {
    /// Assemble a cell from raw parts without checking any invariant. Use
    /// [`TCell::validate`] on the result, or [`TCellBuilder`] for checked
    /// construction.
    pub fn from_parts(
        name: impl Into<String>,
        vertices: Vec<String>,
        edges: Vec<Edge>,
        darts: Vec<Dart>,
        rotation: Vec<Vec<DartId>>,
    ) -> TCell {
        let mut position = vec![usize::MAX; darts.len()];
        for darts_at in &rotation {
            for (i, d) in darts_at.iter().enumerate() {
                if d.0 < position.len() && position[d.0] == usize::MAX {
                    position[d.0] = i;
                }
            }
        }
        TCell { name: name.into(), vertices, edges, darts, rotation, position }
    }

    /// Validate and convert the first violation into an error.
    pub fn checked(self) -> Result<TCell, TCellError> {
        let violations = self.validate();
        match violations.first() {
            None => Ok(self),
            Some(Violation::DegreeTooLow { vertex, degree }) => Err(TCellError::DegreeTooLow {
                vertex: self.vertex_name(*vertex).to_string(),
                degree: *degree,
            }),
            Some(Violation::Disconnected) => Err(TCellError::Disconnected),
            Some(v @ (Violation::Euler { .. } | Violation::FaceTranslation { .. } | Violation::LatticeSpan { .. })) => {
                Err(TCellError::NotTorus(v.detail(&self)))
            }
            Some(v) => Err(TCellError::Invalid(v.detail(&self))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> TCell {
        self.name = name.into();
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn dart_count(&self) -> usize {
        self.darts.len()
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertices.len()).map(VertexId)
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.edges.len()).map(EdgeId)
    }

    pub fn dart_ids(&self) -> impl Iterator<Item = DartId> + '_ {
        (0..self.darts.len()).map(DartId)
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertices[v.0]
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.0]
    }

    pub fn edge_label(&self, e: EdgeId) -> &str {
        &self.edges[e.0].label
    }

    pub fn dart(&self, d: DartId) -> &Dart {
        &self.darts[d.0]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.rotation[v.0].len()
    }

    /// Darts leaving `v` in counterclockwise order.
    pub fn rotation(&self, v: VertexId) -> &[DartId] {
        &self.rotation[v.0]
    }

    /// Index of `d` within the rotation of the vertex it leaves.
    pub fn position(&self, d: DartId) -> usize {
        self.position[d.0]
    }

    pub fn opposite(&self, d: DartId) -> DartId {
        self.darts[d.0].opposite
    }

    pub fn tail(&self, d: DartId) -> VertexId {
        self.darts[d.0].vertex
    }

    pub fn head(&self, d: DartId) -> VertexId {
        self.tail(self.opposite(d))
    }

    pub fn edge_of(&self, d: DartId) -> EdgeId {
        self.darts[d.0].edge
    }

    pub fn sign(&self, d: DartId) -> Sign {
        if self.edges[self.edge_of(d).0].canonical == d {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn directed(&self, d: DartId) -> DirectedEdge {
        DirectedEdge { dart: d, sign: self.sign(d) }
    }

    pub fn reversed(&self, de: DirectedEdge) -> DirectedEdge {
        self.directed(self.opposite(de.dart))
    }

    /// Translation vector of a dart: the canonical vector, negated for the
    /// reverse direction.
    pub fn translation(&self, d: DartId) -> IVec2 {
        let t = self.edges[self.edge_of(d).0].translation;
        match self.sign(d) {
            Sign::Plus => t,
            Sign::Minus => -t,
        }
    }

    pub fn dart_label(&self, d: DartId) -> String {
        format!("{}{}", self.edge_label(self.edge_of(d)), self.sign(d).as_char())
    }

    pub fn find_edge(&self, label: &str) -> Option<EdgeId> {
        self.edges.iter().position(|e| e.label == label).map(EdgeId)
    }

    pub fn dart_for(&self, e: EdgeId, sign: Sign) -> DartId {
        let c = self.edges[e.0].canonical;
        match sign {
            Sign::Plus => c,
            Sign::Minus => self.opposite(c),
        }
    }

    /// Look up a dart written as `<label>+` or `<label>-`.
    pub fn find_dart(&self, token: &str) -> Option<DartId> {
        let (label, sign) = split_dart_token(token)?;
        self.find_edge(label).map(|e| self.dart_for(e, sign))
    }

    /// Outgoing directed edge at cyclic position `k` counterclockwise from the
    /// reversal of `incoming`, at the vertex `incoming` points to.
    pub fn edge_offset(&self, incoming: DirectedEdge, k: i64) -> DirectedEdge {
        let back = self.opposite(incoming.dart);
        let v = self.tail(back);
        let n = self.degree(v) as i64;
        let i = (self.position(back) as i64 + k).rem_euclid(n) as usize;
        self.directed(self.rotation[v.0][i])
    }

    /// Dart following `d` counterclockwise around its tail vertex.
    pub fn rotation_next(&self, d: DartId) -> DartId {
        let v = self.tail(d);
        let darts = &self.rotation[v.0];
        darts[(self.position(d) + 1) % darts.len()]
    }

    /// Face boundaries, each as the cyclic list of darts along it. The face
    /// permutation sends `d` to the dart after `opposite(d)` in the rotation at
    /// the head of `d`.
    pub fn faces(&self) -> Vec<Vec<DartId>> {
        let mut seen = vec![false; self.darts.len()];
        let mut faces = Vec::new();
        for start in self.dart_ids() {
            if seen[start.0] {
                continue;
            }
            let mut face = Vec::new();
            let mut d = start;
            while !seen[d.0] {
                seen[d.0] = true;
                face.push(d);
                d = self.rotation_next(self.opposite(d));
            }
            faces.push(face);
        }
        faces
    }

    pub fn face_count(&self) -> usize {
        self.faces().len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.face_count() as i64
    }

    /// Every violated invariant, one entry per kind. Empty iff the cell is a
    /// valid torus quotient.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();

        if let Some(d) = self.dart_ids().find(|&d| {
            let o = self.darts[d.0].opposite;
            o.0 >= self.darts.len()
                || o == d
                || self.darts[o.0].opposite != d
                || self.darts[o.0].edge != self.darts[d.0].edge
        }) {
            out.push(Violation::DartInvolution { dart: d });
        }

        let mut count = vec![0usize; self.darts.len()];
        let mut misplaced = None;
        for (v, darts_at) in self.rotation.iter().enumerate() {
            for d in darts_at {
                if d.0 >= count.len() {
                    misplaced = Some(*d);
                    continue;
                }
                count[d.0] += 1;
                if self.darts[d.0].vertex != VertexId(v) {
                    misplaced = Some(*d);
                }
            }
        }
        let bad_membership = misplaced.or_else(|| count.iter().position(|&c| c != 1).map(DartId));
        if self.rotation.len() != self.vertices.len() {
            out.push(Violation::RotationMembership { dart: bad_membership.unwrap_or(DartId(0)) });
        } else if let Some(d) = bad_membership {
            out.push(Violation::RotationMembership { dart: d });
        }

        if !out.is_empty() {
            // Face tracing needs a well-formed map.
            return out;
        }

        if let Some(v) = self.vertex_ids().find(|&v| self.degree(v) < 3) {
            out.push(Violation::DegreeTooLow { vertex: v, degree: self.degree(v) });
        }

        if !self.is_connected() {
            out.push(Violation::Disconnected);
        }

        let chi = self.euler_characteristic();
        if chi != 0 {
            out.push(Violation::Euler { chi });
        }

        if let Some((face, sum)) = self
            .faces()
            .iter()
            .map(|f| f.iter().fold(IVec2::ZERO, |acc, &d| acc + self.translation(d)))
            .enumerate()
            .find(|(_, s)| !s.is_zero())
        {
            out.push(Violation::FaceTranslation { face, sum });
        }

        if self.is_connected() {
            let index = self.cycle_lattice_index();
            if index != 1 {
                out.push(Violation::LatticeSpan { index });
            }
        }
        out
    }

    fn is_connected(&self) -> bool {
        if self.vertices.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.vertices.len()];
        let mut queue = VecDeque::from([VertexId(0)]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &d in &self.rotation[v.0] {
                let w = self.head(d);
                if !seen[w.0] {
                    seen[w.0] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Position of each vertex in the universal cover relative to vertex 0,
    /// along a BFS spanning tree. Returns the potentials and the tree-edge mask.
    pub fn tree_potentials(&self) -> (Vec<IVec2>, Vec<bool>) {
        let mut pot = vec![IVec2::ZERO; self.vertices.len()];
        let mut seen = vec![false; self.vertices.len()];
        let mut tree = vec![false; self.edges.len()];
        if self.vertices.is_empty() {
            return (pot, tree);
        }
        let mut queue = VecDeque::from([VertexId(0)]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &d in &self.rotation[v.0] {
                let w = self.head(d);
                if !seen[w.0] {
                    seen[w.0] = true;
                    tree[self.edge_of(d).0] = true;
                    pot[w.0] = pot[v.0] + self.translation(d);
                    queue.push_back(w);
                }
            }
        }
        (pot, tree)
    }

    /// Index of the sublattice of Z² spanned by the homology classes of the
    /// graph's cycles (0 if they do not span a rank-2 lattice).
    fn cycle_lattice_index(&self) -> i64 {
        let (pot, tree) = self.tree_potentials();
        let gens: Vec<IVec2> = self
            .edge_ids()
            .filter(|e| !tree[e.0])
            .map(|e| {
                let c = self.edges[e.0].canonical;
                pot[self.tail(c).0] + self.edges[e.0].translation - pot[self.head(c).0]
            })
            .collect();
        let mut g = 0i64;
        for (i, a) in gens.iter().enumerate() {
            for b in &gens[i + 1..] {
                g = gcd(g, a.cross(*b).abs());
            }
        }
        g
    }

    /// Canonical TCELL text: vertices, edges and rotation lines sorted by name,
    /// each rotation starting at its least dart.
    pub fn emit(&self) -> String {
        let mut out = String::from("tcell v1\n");
        let mut vs: Vec<VertexId> = self.vertex_ids().collect();
        vs.sort_by(|a, b| self.vertex_name(*a).cmp(self.vertex_name(*b)));
        for &v in &vs {
            out.push_str(&format!("vertex {}\n", self.vertex_name(v)));
        }
        let mut es: Vec<EdgeId> = self.edge_ids().collect();
        es.sort_by(|a, b| self.edge_label(*a).cmp(self.edge_label(*b)));
        for &e in &es {
            let edge = &self.edges[e.0];
            let c = edge.canonical;
            out.push_str(&format!(
                "edge {} {} {} {} {}\n",
                edge.label,
                self.vertex_name(self.tail(c)),
                self.vertex_name(self.head(c)),
                edge.translation.0,
                edge.translation.1
            ));
        }
        for &v in &vs {
            let darts = &self.rotation[v.0];
            let key = |d: &DartId| (self.edge_label(self.edge_of(*d)).to_string(), self.sign(*d));
            let start = (0..darts.len()).min_by_key(|&i| key(&darts[i])).unwrap_or(0);
            out.push_str(&format!("rotation {}", self.vertex_name(v)));
            for i in 0..darts.len() {
                out.push(' ');
                out.push_str(&self.dart_label(darts[(start + i) % darts.len()]));
            }
            out.push('\n');
        }
        out
    }

    /// Parse and validate TCELL text.
    pub fn parse(text: &str) -> Result<TCell, TCellError> {
        let mut builder: Option<TCellBuilder> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = raw.split('#').next().unwrap_or("");
            let tokens = tokenize(content);
            let Some(&(col, keyword)) = tokens.first() else { continue };
            let syntax = |column: usize, message: String| TCellError::Syntax { line, column, message };
            let Some(b) = builder.as_mut() else {
                if keyword == "tcell" && tokens.len() == 2 && tokens[1].1 == "v1" {
                    builder = Some(TCellBuilder::new("tcell"));
                    continue;
                }
                return Err(syntax(col, "expected header `tcell v1`".into()));
            };
            match keyword {
                "vertex" => {
                    if tokens.len() != 2 {
                        return Err(syntax(col, "expected `vertex <id>`".into()));
                    }
                    let (c, name) = tokens[1];
                    if b.vertex_index.contains_key(name) {
                        return Err(syntax(c, format!("duplicate vertex `{name}`")));
                    }
                    b.vertex(name);
                }
                "edge" => {
                    if tokens.len() != 6 {
                        return Err(syntax(col, "expected `edge <label> <vid> <vid> <a> <b>`".into()));
                    }
                    let (lc, label) = tokens[1];
                    if label.ends_with('+') || label.ends_with('-') || b.edge_index.contains_key(label) {
                        return Err(syntax(lc, format!("invalid or duplicate edge label `{label}`")));
                    }
                    let mut ends = [VertexId(0); 2];
                    for (slot, &(c, name)) in ends.iter_mut().zip(&tokens[2..4]) {
                        *slot = *b.vertex_index.get(name).ok_or_else(|| TCellError::UnknownVertex {
                            line,
                            column: c,
                            name: name.to_string(),
                        })?;
                    }
                    let mut t = [0i64; 2];
                    for (slot, &(c, num)) in t.iter_mut().zip(&tokens[4..6]) {
                        *slot = num.parse().map_err(|_| syntax(c, format!("expected an integer, found `{num}`")))?;
                    }
                    b.edge_ids(label, ends[0], ends[1], IVec2(t[0], t[1]));
                }
                "rotation" => {
                    if tokens.len() < 2 {
                        return Err(syntax(col, "expected `rotation <vid> <darts...>`".into()));
                    }
                    let (vc, vname) = tokens[1];
                    let v = *b.vertex_index.get(vname).ok_or_else(|| TCellError::UnknownVertex {
                        line,
                        column: vc,
                        name: vname.to_string(),
                    })?;
                    if b.rotation_set[v.0] {
                        return Err(syntax(vc, format!("second rotation line for `{vname}`")));
                    }
                    let mut darts = Vec::with_capacity(tokens.len() - 2);
                    for &(c, tok) in &tokens[2..] {
                        let d = split_dart_token(tok)
                            .and_then(|(label, sign)| b.edge_index.get(label).map(|&e| b.dart_for(e, sign)))
                            .ok_or_else(|| TCellError::UnknownDart { line, column: c, dart: tok.to_string() })?;
                        darts.push(d);
                    }
                    b.rotation_ids(v, darts);
                }
                other => return Err(syntax(col, format!("unknown keyword `{other}`"))),
            }
        }
        builder
            .ok_or(TCellError::Syntax { line: 1, column: 1, message: "missing header `tcell v1`".into() })?
            .build()
    }

    fn map_darts(&self, rotation: Vec<Vec<DartId>>, edges: Vec<Edge>, darts: Vec<Dart>) -> TCell {
        TCell::from_parts(self.name.clone(), self.vertices.clone(), edges, darts, rotation)
    }

    /// Same cell with edge labels replaced (`labels[i]` names edge `i`).
    pub fn relabeled(&self, labels: &[String]) -> TCell {
        let edges = self
            .edges
            .iter()
            .zip(labels)
            .map(|(e, l)| Edge { label: l.clone(), ..e.clone() })
            .collect();
        self.map_darts(self.rotation.clone(), edges, self.darts.clone())
    }

    /// Same cell with the canonical direction of `e` flipped.
    pub fn with_edge_reversed(&self, e: EdgeId) -> TCell {
        let mut edges = self.edges.clone();
        let c = edges[e.0].canonical;
        edges[e.0].canonical = self.opposite(c);
        edges[e.0].translation = -edges[e.0].translation;
        self.map_darts(self.rotation.clone(), edges, self.darts.clone())
    }

    /// Same cell with the stored rotation list of `v` started `shift` places
    /// later. The cyclic order is unchanged.
    pub fn with_rotation_shifted(&self, v: VertexId, shift: usize) -> TCell {
        let mut rotation = self.rotation.clone();
        let n = rotation[v.0].len();
        if n > 0 {
            rotation[v.0].rotate_left(shift % n);
        }
        self.map_darts(rotation, self.edges.clone(), self.darts.clone())
    }

    /// Mirror image: every rotation reversed and the first lattice coordinate
    /// negated, so the result is again a geometric torus embedding.
    pub fn mirrored(&self) -> TCell {
        let rotation = self
            .rotation
            .iter()
            .map(|r| r.iter().rev().copied().collect())
            .collect();
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { translation: IVec2(-e.translation.0, e.translation.1), ..e.clone() })
            .collect();
        self.map_darts(rotation, edges, self.darts.clone())
    }

    /// Change of lattice basis: every translation vector multiplied by `m`.
    /// Orientation-reversing maps also reverse the rotations.
    pub fn transformed(&self, m: [[i64; 2]; 2]) -> Result<TCell, TCellError> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det.abs() != 1 {
            return Err(TCellError::NotUnimodular(det));
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { translation: e.translation.transform(m), ..e.clone() })
            .collect();
        let rotation = if det == 1 {
            self.rotation.clone()
        } else {
            self.rotation.iter().map(|r| r.iter().rev().copied().collect()).collect()
        };
        Ok(self.map_darts(rotation, edges, self.darts.clone()))
    }

    /// The `nx` by `ny` supercell: a generating cell of the same tiling for the
    /// sublattice spanned by `(nx, 0)` and `(0, ny)`, expressed in the new basis.
    pub fn cover(&self, nx: usize, ny: usize) -> TCell {
        assert!(nx >= 1 && ny >= 1, "cover dimensions must be positive");
        let (nxi, nyi) = (nx as i64, ny as i64);
        let copy = |i: i64, j: i64| (i.rem_euclid(nxi) + nxi * j.rem_euclid(nyi)) as usize;
        let cells = nx * ny;
        let vertex_of = |v: VertexId, c: usize| VertexId(v.0 * cells + c);
        let mut b = TCellBuilder::new(format!("{}[{nx}x{ny}]", self.name));
        for v in self.vertex_ids() {
            for c in 0..cells {
                let (i, j) = (c % nx, c / nx);
                b.vertex(&format!("{}_{i}_{j}", self.vertex_name(v)));
            }
        }
        // darts of copy c of edge e: canonical leaves tail copy c
        let mut dart_of = HashMap::new();
        for e in self.edge_ids() {
            let edge = &self.edges[e.0];
            let c0 = edge.canonical;
            for c in 0..cells {
                let (i, j) = ((c % nx) as i64, (c / nx) as i64);
                let (hi, hj) = (i + edge.translation.0, j + edge.translation.1);
                let head_copy = copy(hi, hj);
                let t = IVec2(hi.div_euclid(nxi), hj.div_euclid(nyi));
                let id = b.edge_ids(
                    &format!("{}_{i}_{j}", edge.label),
                    vertex_of(self.tail(c0), c),
                    vertex_of(self.head(c0), head_copy),
                    t,
                );
                dart_of.insert((c0, c), b.dart_for(id, Sign::Plus));
                dart_of.insert((self.opposite(c0), head_copy), b.dart_for(id, Sign::Minus));
            }
        }
        for v in self.vertex_ids() {
            for c in 0..cells {
                let darts = self.rotation[v.0].iter().map(|d| dart_of[&(*d, c)]).collect();
                b.rotation_ids(vertex_of(v, c), darts);
            }
        }
        b.build().expect("covers of valid cells are valid")
    }
}

impl TCell {
    /// Edges separating two different faces whose removal keeps every degree
    /// at least 3. Removing such an edge merges the two faces and leaves a
    /// valid cell.
    pub fn removable_edges(&self) -> Vec<EdgeId> {
        let mut face_of = vec![0usize; self.darts.len()];
        for (i, f) in self.faces().iter().enumerate() {
            for d in f {
                face_of[d.0] = i;
            }
        }
        self.edge_ids()
            .filter(|e| {
                let c = self.edges[e.0].canonical;
                let o = self.opposite(c);
                let (t, h) = (self.tail(c), self.head(c));
                face_of[c.0] != face_of[o.0]
                    && if t == h { self.degree(t) >= 5 } else { self.degree(t) >= 4 && self.degree(h) >= 4 }
            })
            .collect()
    }

    /// Same cell without edge `e`. The result is not validated.
    pub fn with_edge_removed(&self, e: EdgeId) -> TCell {
        let mut b = TCellBuilder::new(self.name.clone());
        for v in self.vertex_ids() {
            b.vertex(self.vertex_name(v));
        }
        let mut map = HashMap::new();
        for f in self.edge_ids().filter(|f| *f != e) {
            let edge = &self.edges[f.0];
            let c = edge.canonical;
            let id = b.edge_ids(&edge.label, self.tail(c), self.head(c), edge.translation);
            map.insert(c, b.dart_for(id, Sign::Plus));
            map.insert(self.opposite(c), b.dart_for(id, Sign::Minus));
        }
        for v in self.vertex_ids() {
            let darts = self.rotation[v.0].iter().filter_map(|d| map.get(d).copied()).collect();
            b.rotation_ids(v, darts);
        }
        b.build_unchecked()
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn split_dart_token(token: &str) -> Option<(&str, Sign)> {
    let sign = match token.chars().last()? {
        '+' => Sign::Plus,
        '-' => Sign::Minus,
        _ => return None,
    };
    let label = &token[..token.len() - 1];
    (!label.is_empty()).then_some((label, sign))
}

/// Whitespace-separated tokens with their 1-based columns.
fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((line[..s].chars().count() + 1, &line[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((line[..s].chars().count() + 1, &line[s..]));
    }
    out
}

/// Incremental, checked construction of a [`TCell`].
#[derive(Clone, Debug)]
pub struct TCellBuilder {
    name: String,
    vertices: Vec<String>,
    vertex_index: HashMap<String, VertexId>,
    edges: Vec<Edge>,
    edge_index: HashMap<String, EdgeId>,
    darts: Vec<Dart>,
    rotation: Vec<Vec<DartId>>,
    rotation_set: Vec<bool>,
}

impl TCellBuilder {
    pub fn new(name: impl Into<String>) -> TCellBuilder {
        TCellBuilder {
            name: name.into(),
            vertices: Vec::new(),
            vertex_index: HashMap::new(),
            edges: Vec::new(),
            edge_index: HashMap::new(),
            darts: Vec::new(),
            rotation: Vec::new(),
            rotation_set: Vec::new(),
        }
    }

    pub fn vertex(&mut self, name: &str) -> VertexId {
        let id = VertexId(self.vertices.len());
        self.vertices.push(name.to_string());
        self.vertex_index.insert(name.to_string(), id);
        self.rotation.push(Vec::new());
        self.rotation_set.push(false);
        id
    }

    fn edge_ids(&mut self, label: &str, tail: VertexId, head: VertexId, t: IVec2) -> EdgeId {
        let id = EdgeId(self.edges.len());
        let plus = DartId(self.darts.len());
        let minus = DartId(self.darts.len() + 1);
        self.darts.push(Dart { vertex: tail, opposite: minus, edge: id });
        self.darts.push(Dart { vertex: head, opposite: plus, edge: id });
        self.edges.push(Edge { label: label.to_string(), canonical: plus, translation: t });
        self.edge_index.insert(label.to_string(), id);
        id
    }

    /// Add an edge between named vertices. Panics on unknown names.
    pub fn edge(&mut self, label: &str, tail: &str, head: &str, t: (i64, i64)) -> EdgeId {
        let (tv, hv) = (self.vertex_index[tail], self.vertex_index[head]);
        self.edge_ids(label, tv, hv, IVec2(t.0, t.1))
    }

    fn dart_for(&self, e: EdgeId, sign: Sign) -> DartId {
        let c = self.edges[e.0].canonical;
        match sign {
            Sign::Plus => c,
            Sign::Minus => self.darts[c.0].opposite,
        }
    }

    fn rotation_ids(&mut self, v: VertexId, darts: Vec<DartId>) {
        self.rotation[v.0] = darts;
        self.rotation_set[v.0] = true;
    }

    /// Set the counterclockwise rotation at a named vertex from dart tokens
    /// such as `"e1+"`. Panics on unknown names.
    pub fn rotation(&mut self, vertex: &str, darts: &[&str]) -> &mut TCellBuilder {
        let v = self.vertex_index[vertex];
        let ids = darts
            .iter()
            .map(|tok| {
                let (label, sign) = split_dart_token(tok).expect("dart token");
                self.dart_for(self.edge_index[label], sign)
            })
            .collect();
        self.rotation_ids(v, ids);
        self
    }

    /// Build without validation.
    pub fn build_unchecked(self) -> TCell {
        TCell::from_parts(self.name, self.vertices, self.edges, self.darts, self.rotation)
    }

    pub fn build(self) -> Result<TCell, TCellError> {
        self.build_unchecked().checked()
    }
}

/// Summary row used by `list`.
pub fn summary_line(cell: &TCell) -> String {
    let degrees: BTreeMap<usize, usize> = cell.vertex_ids().fold(BTreeMap::new(), |mut m, v| {
        *m.entry(cell.degree(v)).or_default() += 1;
        m
    });
    let degrees = degrees.keys().map(|d| d.to_string()).collect::<Vec<_>>().join(",");
    format!(
        "{} V={} E={} F={} degrees={}",
        cell.name(),
        cell.vertex_count(),
        cell.edge_count(),
        cell.face_count(),
        degrees
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn de(cell: &TCell, tok: &str) -> DirectedEdge {
        cell.directed(cell.find_dart(tok).unwrap())
    }

    #[test]
    fn builtin_counts() {
        let expect = [
            (Builtin::Hexagonal, 2, 3, 1, 3),
            (Builtin::Square, 1, 2, 1, 4),
            (Builtin::Triangular, 1, 3, 2, 6),
            (Builtin::Kagome, 3, 6, 3, 4),
        ];
        for (b, v, e, f, deg) in expect {
            let cell = builtin_tcell(b);
            assert_eq!((cell.vertex_count(), cell.edge_count(), cell.face_count()), (v, e, f), "{b}");
            assert!(cell.vertex_ids().all(|x| cell.degree(x) == deg), "{b}");
            assert!(cell.validate().is_empty(), "{b}: {:?}", cell.validate());
        }
    }

    #[test]
    fn triangular_faces_by_hand() {
        // independent trace: sigma(d) = next(opposite(d)) written out on the
        // six darts of the single vertex
        let cell = builtin_tcell(Builtin::Triangular);
        let mut faces: Vec<Vec<String>> = cell
            .faces()
            .iter()
            .map(|f| f.iter().map(|d| cell.dart_label(*d)).collect())
            .collect();
        faces.sort();
        assert_eq!(faces, vec![vec!["e1+", "e2-", "e3+"], vec!["e1-", "e2+", "e3-"]]);
    }

    #[test]
    fn edge_offset_examples() {
        let sq = builtin_tcell(Builtin::Square);
        let h = de(&sq, "h+");
        assert_eq!(sq.edge_offset(h, 2), h);
        assert_eq!(sq.edge_offset(h, 0), de(&sq, "h-"));

        let hex = builtin_tcell(Builtin::Hexagonal);
        assert_eq!(hex.edge_offset(de(&hex, "e1+"), 2), de(&hex, "e3-"));
    }

    #[test]
    fn edge_offset_inverts() {
        for b in Builtin::ALL {
            let cell = builtin_tcell(b);
            for d in cell.dart_ids() {
                let inc = cell.directed(d);
                let n = cell.degree(cell.head(d)) as i64;
                let mut outs: Vec<_> = (0..n).map(|k| cell.edge_offset(inc, k)).collect();
                for k in -7..7 {
                    let out = cell.edge_offset(inc, k);
                    let back = cell.edge_offset(cell.reversed(out), -k);
                    assert_eq!(back, cell.reversed(inc));
                }
                outs.sort();
                outs.dedup();
                assert_eq!(outs.len() as i64, n);
            }
        }
    }

    #[test]
    fn round_trip_hexagonal() {
        let hex = builtin_tcell(Builtin::Hexagonal);
        let text = hex.emit();
        assert_eq!(TCell::parse(&text).unwrap(), hex);
        assert_eq!(TCell::parse(&text).unwrap().emit(), text);
    }

    #[test]
    fn parse_errors_are_distinct() {
        let degree2 = "tcell v1\nvertex A\nvertex B\nedge a A B 0 0\nedge b B A 1 0\nrotation A a+ b-\nrotation B a- b+\n";
        assert!(matches!(TCell::parse(degree2), Err(TCellError::DegreeTooLow { degree: 2, .. })));

        let unknown = "tcell v1\nvertex O\nedge h O O 1 0\nedge v O O 0 1\nrotation O h+ v+ h- w-\n";
        assert_eq!(
            TCell::parse(unknown),
            Err(TCellError::UnknownDart { line: 5, column: 21, dart: "w-".into() })
        );

        let header = "vertex O\n";
        assert!(matches!(TCell::parse(header), Err(TCellError::Syntax { line: 1, column: 1, .. })));

        let disconnected = "tcell v1\nvertex O\nvertex P\n\
            edge h O O 1 0\nedge v O O 0 1\nedge g P P 1 0\nedge w P P 0 1\n\
            rotation O h+ v+ h- v-\nrotation P g+ w+ g- w-\n";
        assert_eq!(TCell::parse(disconnected), Err(TCellError::Disconnected));
    }

    #[test]
    fn swapped_darts_break_the_torus() {
        // Swapping v+ and h- at the square vertex: the face trace gives
        // h+ -> next(h-) = v+ ... three faces, so V - E + F = 2.
        let text = "tcell v1\nvertex O\nedge h O O 1 0\nedge v O O 0 1\nrotation O h+ h- v+ v-\n";
        let mut b = TCellBuilder::new("bad");
        b.vertex("O");
        b.edge("h", "O", "O", (1, 0));
        b.edge("v", "O", "O", (0, 1));
        b.rotation("O", &["h+", "h-", "v+", "v-"]);
        let cell = b.build_unchecked();
        assert_eq!(cell.face_count(), 3);
        assert!(matches!(TCell::parse(text), Err(TCellError::NotTorus(_))));
        let msgs: Vec<String> = cell.validate().iter().map(|v| v.to_string()).collect();
        assert!(msgs.contains(&"Euler characteristic ≠ 0".to_string()), "{msgs:?}");
    }

    #[test]
    fn broken_involution() {
        let sq = builtin_tcell(Builtin::Square);
        let mut darts: Vec<Dart> = sq.dart_ids().map(|d| sq.dart(d).clone()).collect();
        darts[0].opposite = DartId(2);
        let edges = sq.edge_ids().map(|e| sq.edge(e).clone()).collect();
        let rotation = sq.vertex_ids().map(|v| sq.rotation(v).to_vec()).collect();
        let broken = TCell::from_parts("broken", vec!["O".into()], edges, darts, rotation);
        let msgs: Vec<String> = broken.validate().iter().map(|v| v.to_string()).collect();
        assert_eq!(msgs, vec!["dart involution broken"]);
    }

    #[test]
    fn tetrahedron_is_a_sphere() {
        // K4 drawn in the plane: outer triangle a,b,c with d in the middle.
        let mut b = TCellBuilder::new("tetra");
        for v in ["a", "b", "c", "d"] {
            b.vertex(v);
        }
        b.edge("ab", "a", "b", (0, 0));
        b.edge("bc", "b", "c", (0, 0));
        b.edge("ca", "c", "a", (0, 0));
        b.edge("ad", "a", "d", (0, 0));
        b.edge("bd", "b", "d", (0, 0));
        b.edge("cd", "c", "d", (0, 0));
        // a=(0,0), b=(2,0), c=(1,2), d=(1,0.7); counterclockwise by angle
        b.rotation("a", &["ab+", "ad+", "ca-"]);
        b.rotation("b", &["bc+", "bd+", "ab-"]);
        b.rotation("c", &["ca+", "cd+", "bc-"]);
        b.rotation("d", &["ad-", "bd-", "cd-"]);
        let cell = b.build_unchecked();
        assert_eq!(cell.euler_characteristic(), 2);
        let msgs: Vec<String> = cell.validate().iter().map(|v| v.to_string()).collect();
        assert!(msgs.contains(&"Euler characteristic ≠ 0".to_string()), "{msgs:?}");
    }

    #[test]
    fn cover_is_valid_and_scales_counts() {
        for b in Builtin::ALL {
            let cell = builtin_tcell(b);
            let big = cell.cover(2, 3);
            assert!(big.validate().is_empty(), "{b}");
            assert_eq!(big.vertex_count(), 6 * cell.vertex_count());
            assert_eq!(big.edge_count(), 6 * cell.edge_count());
            assert_eq!(big.face_count(), 6 * cell.face_count());
        }
    }

    #[test]
    fn multiple_of() {
        assert_eq!(IVec2(4, 2).multiple_of(IVec2(2, 1)), Some(2));
        assert_eq!(IVec2(3, 1).multiple_of(IVec2(2, 1)), None);
        assert_eq!(IVec2(0, -3).multiple_of(IVec2(0, 1)), Some(-3));
        assert_eq!(IVec2(0, 0).multiple_of(IVec2(0, 0)), Some(0));
        assert_eq!(IVec2(1, 0).multiple_of(IVec2(0, 0)), None);
    }
}
