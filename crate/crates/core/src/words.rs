//! Edge words over the free group on a cell's edges.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::polymethod::{CharacteristicLoop, EdgeRule};
use crate::tcell::{DartId, IVec2, Sign, TCell, VertexId};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub label: String,
    pub sign: Sign,
}

impl Letter {
    pub fn inverse(&self) -> Letter {
        Letter { label: self.label.clone(), sign: self.sign.flipped() }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.label, self.sign.as_char())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeWord {
    pub letters: Vec<Letter>,
    pub cyclic: bool,
}

impl EdgeWord {
    /// Parse `e1+.e3-`. Returns `None` on malformed letters.
    pub fn parse(text: &str, cyclic: bool) -> Option<EdgeWord> {
        let letters = text
            .split('.')
            .map(|tok| {
                let (label, sign) = match tok.strip_suffix('+') {
                    Some(l) => (l, Sign::Plus),
                    None => (tok.strip_suffix('-')?, Sign::Minus),
                };
                (!label.is_empty()).then(|| Letter { label: label.to_string(), sign })
            })
            .collect::<Option<Vec<_>>>()?;
        Some(EdgeWord { letters, cyclic })
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Letters in reverse order, each inverted.
    pub fn inverse(&self) -> EdgeWord {
        EdgeWord { letters: self.letters.iter().rev().map(Letter::inverse).collect(), cyclic: self.cyclic }
    }

    pub fn rotated(&self, r: usize) -> EdgeWord {
        let mut letters = self.letters.clone();
        let n = letters.len();
        if n > 0 {
            letters.rotate_left(r % n);
        }
        EdgeWord { letters, cyclic: self.cyclic }
    }

    /// Free reduction, across the seam as well when the word is cyclic.
    pub fn reduced(&self) -> EdgeWord {
        let mut stack: Vec<Letter> = Vec::new();
        for l in &self.letters {
            if stack.last().is_some_and(|top| *top == l.inverse()) {
                stack.pop();
            } else {
                stack.push(l.clone());
            }
        }
        if self.cyclic {
            let mut lo = 0;
            while stack.len() - lo >= 2 && stack[lo] == stack[stack.len() - 1].inverse() {
                lo += 1;
                stack.pop();
            }
            stack.drain(..lo);
        }
        EdgeWord { letters: stack, cyclic: self.cyclic }
    }

    pub fn homology(&self, cell: &TCell) -> Result<IVec2, WordError> {
        Ok(resolve(cell, self)?.iter().fold(IVec2::ZERO, |acc, d| acc + cell.translation(*d)))
    }
}

impl fmt::Display for EdgeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.letters.iter().map(Letter::to_string).collect();
        f.write_str(&parts.join("."))
    }
}

pub fn word_of(cell: &TCell, lp: &CharacteristicLoop) -> EdgeWord {
    let letters = lp
        .edges
        .iter()
        .map(|e| Letter { label: cell.edge_label(cell.edge_of(e.dart)).to_string(), sign: e.sign })
        .collect();
    EdgeWord { letters, cyclic: true }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("letters {0} and {1} are not adjacent")]
    NotAdjacent(String, String),
    #[error("empty word")]
    Empty,
    #[error("vertex `{0}` is not visited twice by the loop")]
    NotRepeated(String),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum WordVerdict {
    Simple,
    Trivial,
    ProductOfSimple,
    Knotted,
}

impl fmt::Display for WordVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    /// Two passes through a vertex.
    Vertex,
    /// The two strands of a twisted edge.
    Twist,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SplitPoint {
    pub kind: SplitKind,
    /// Vertex name, or edge label for a twist.
    pub at: String,
    /// Vertex degree, or twist count for a twist.
    pub degree: usize,
    /// Positions (after which letter) of the two visits, in the word being split.
    pub visits: (usize, usize),
    pub left: String,
    pub right: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WordClass {
    pub verdict: WordVerdict,
    /// Knotted: the split whose divided curve is null. ProductOfSimple: every
    /// split made while decomposing. Empty otherwise.
    pub witnesses: Vec<SplitPoint>,
}

fn resolve(cell: &TCell, word: &EdgeWord) -> Result<Vec<DartId>, WordError> {
    word.letters
        .iter()
        .map(|l| {
            cell.find_edge(&l.label)
                .map(|e| cell.dart_for(e, l.sign))
                .ok_or_else(|| WordError::UnknownEdge(l.label.clone()))
        })
        .collect()
}

fn check_closed(cell: &TCell, darts: &[DartId]) -> Result<(), WordError> {
    if darts.is_empty() {
        return Err(WordError::Empty);
    }
    for (i, &d) in darts.iter().enumerate() {
        let next = darts[(i + 1) % darts.len()];
        if cell.head(d) != cell.tail(next) {
            return Err(WordError::NotAdjacent(cell.dart_label(d), cell.dart_label(next)));
        }
    }
    Ok(())
}

fn sum(cell: &TCell, darts: &[DartId]) -> IVec2 {
    darts.iter().fold(IVec2::ZERO, |acc, d| acc + cell.translation(*d))
}

fn label(cell: &TCell, darts: &[DartId]) -> String {
    darts.iter().map(|d| cell.dart_label(*d)).collect::<Vec<_>>().join(".")
}

fn is_simple(cell: &TCell, darts: &[DartId]) -> bool {
    let mut edges: Vec<_> = darts.iter().map(|d| cell.edge_of(*d)).collect();
    let mut heads: Vec<VertexId> = darts.iter().map(|d| cell.head(*d)).collect();
    edges.sort();
    heads.sort();
    let n = darts.len();
    edges.dedup();
    heads.dedup();
    edges.len() == n && heads.len() == n
}

/// The two arcs of a cyclic dart sequence cut after positions `i < j`.
fn split(darts: &[DartId], i: usize, j: usize) -> (Vec<DartId>, Vec<DartId>) {
    let left = darts[i + 1..=j].to_vec();
    let right = darts[j + 1..].iter().chain(&darts[..=i]).copied().collect();
    (left, right)
}

/// Pairs of positions after which the walk is at the same vertex.
fn repeated_visits(cell: &TCell, darts: &[DartId]) -> Vec<(VertexId, usize, usize)> {
    let mut out = Vec::new();
    for i in 0..darts.len() {
        for j in i + 1..darts.len() {
            let v = cell.head(darts[i]);
            if v == cell.head(darts[j]) {
                out.push((v, i, j));
            }
        }
    }
    out
}

fn split_point(cell: &TCell, darts: &[DartId], v: VertexId, i: usize, j: usize) -> SplitPoint {
    let (l, r) = split(darts, i, j);
    SplitPoint {
        kind: SplitKind::Vertex,
        at: cell.vertex_name(v).to_string(),
        degree: cell.degree(v),
        visits: (i, j),
        left: label(cell, &l),
        right: label(cell, &r),
    }
}

/// Some rotation of the word reads `g` followed by `g` with every sign flipped.
fn is_sign_flipped_square(word: &EdgeWord) -> bool {
    let n = word.len();
    if n == 0 || n % 2 == 1 {
        return false;
    }
    (0..n / 2).any(|r| {
        let w = word.rotated(r);
        let (g, h) = w.letters.split_at(n / 2);
        g.iter().zip(h).all(|(a, b)| *b == a.inverse())
    })
}

pub fn classify_word(cell: &TCell, word: &EdgeWord) -> Result<WordClass, WordError> {
    let darts = resolve(cell, word)?;
    check_closed(cell, &darts)?;
    let class = |verdict, witnesses| Ok(WordClass { verdict, witnesses });

    if is_simple(cell, &darts) {
        return class(WordVerdict::Simple, vec![]);
    }
    for (v, i, j) in repeated_visits(cell, &darts) {
        let (l, r) = split(&darts, i, j);
        if cell.degree(v) == 4 && (sum(cell, &l).is_zero() || sum(cell, &r).is_zero()) {
            return class(WordVerdict::Knotted, vec![split_point(cell, &darts, v, i, j)]);
        }
    }
    if word.reduced().is_empty() || is_sign_flipped_square(word) {
        return class(WordVerdict::Trivial, vec![]);
    }
    let mut points = Vec::new();
    match decompose(cell, &darts, &mut points) {
        Ok(()) => class(WordVerdict::ProductOfSimple, points),
        Err(witness) => class(WordVerdict::Knotted, vec![witness]),
    }
}

/// Split at the first repeated vertex until every factor is simple. A null
/// divided curve anywhere aborts with that split as witness.
fn decompose(cell: &TCell, darts: &[DartId], points: &mut Vec<SplitPoint>) -> Result<(), SplitPoint> {
    if is_simple(cell, darts) {
        return Ok(());
    }
    let Some(&(v, i, j)) = repeated_visits(cell, darts).first() else {
        // an immediate backtrack e+ e- with distinct endpoints
        return Err(SplitPoint {
            kind: SplitKind::Vertex,
            at: cell.vertex_name(cell.head(darts[0])).to_string(),
            degree: cell.degree(cell.head(darts[0])),
            visits: (0, 0),
            left: label(cell, darts),
            right: String::new(),
        });
    };
    let (l, r) = split(darts, i, j);
    let point = split_point(cell, darts, v, i, j);
    if sum(cell, &l).is_zero() || sum(cell, &r).is_zero() {
        return Err(point);
    }
    points.push(point);
    decompose(cell, &l, points)?;
    decompose(cell, &r, points)
}

/// Where the strand running along the pass after letter `i` meets the
/// vertex disk boundary. Each dart position `p` owns two boundary points,
/// `2p` (clockwise side) and `2p + 1`.
fn pass_ends(cell: &TCell, lp: &CharacteristicLoop, i: usize) -> (usize, usize) {
    let d = lp.edges[i].dart;
    let next = lp.edges[(i + 1) % lp.len()].dart;
    let a = cell.position(cell.opposite(d));
    let b = cell.position(next);
    match (lp.method.edge_rule(), lp.parities[i]) {
        (EdgeRule::SingleLine, _) => (2 * a, 2 * b),
        (_, 0) => (2 * a + 1, 2 * b),
        _ => (2 * a, 2 * b + 1),
    }
}

fn chords_cross(p: (usize, usize), q: (usize, usize)) -> bool {
    let (lo, hi) = (p.0.min(p.1), p.0.max(p.1));
    let inside = |x: usize| lo < x && x < hi;
    [p.0, p.1].iter().all(|x| *x != q.0 && *x != q.1) && inside(q.0) != inside(q.1)
}

/// Which of the two strands of its edge a letter runs on.
fn strand_of(cell: &TCell, lp: &CharacteristicLoop, i: usize) -> u8 {
    let canonical = cell.sign(lp.edges[i].dart) == Sign::Plus;
    let p = lp.parities[i];
    match (canonical, lp.method.is_odd()) {
        (true, _) | (false, true) => p,
        (false, false) => 1 - p,
    }
}

/// Points where the strand following `lp` crosses itself on the torus:
/// crossing connections inside a vertex disk, and twist crossings when both
/// strands of an edge belong to the loop.
pub fn crossing_points(cell: &TCell, lp: &CharacteristicLoop) -> Vec<SplitPoint> {
    let darts = lp.darts();
    let n = darts.len();
    let mut out = Vec::new();
    for (v, i, j) in repeated_visits(cell, &darts) {
        if chords_cross(pass_ends(cell, lp, i), pass_ends(cell, lp, j)) {
            out.push(split_point(cell, &darts, v, i, j));
        }
    }
    let twists = lp.method.twists().unwrap_or(0) as usize;
    if twists == 0 {
        return out;
    }
    for i in 0..n {
        for j in i + 1..n {
            let e = cell.edge_of(darts[i]);
            if e != cell.edge_of(darts[j]) || strand_of(cell, lp, i) == strand_of(cell, lp, j) {
                continue;
            }
            let (left, right): (Vec<DartId>, Vec<DartId>) = if darts[i] == darts[j] {
                split(&darts, i, j)
            } else {
                (darts[i + 1..j].to_vec(), darts[j + 1..].iter().chain(&darts[..i]).copied().collect())
            };
            out.push(SplitPoint {
                kind: SplitKind::Twist,
                at: cell.edge_label(e).to_string(),
                degree: twists,
                visits: (i, j),
                left: label(cell, &left),
                right: label(cell, &right),
            });
        }
    }
    out
}

fn null_part(cell: &TCell, p: &SplitPoint) -> bool {
    let h = |w: &str| match w {
        "" => Some(IVec2::ZERO),
        _ => EdgeWord::parse(w, false).and_then(|w| w.homology(cell).ok()),
    };
    h(&p.left) == Some(IVec2::ZERO) || h(&p.right) == Some(IVec2::ZERO)
}

/// Word class of a traced loop, testing knottedness only at the points where
/// its strand actually crosses itself (see [`crossing_points`]).
pub fn classify_loop(cell: &TCell, lp: &CharacteristicLoop) -> WordClass {
    let darts = lp.darts();
    if is_simple(cell, &darts) {
        return WordClass { verdict: WordVerdict::Simple, witnesses: vec![] };
    }
    let points = crossing_points(cell, lp);
    if let Some(p) = points.iter().find(|p| null_part(cell, p)) {
        return WordClass { verdict: WordVerdict::Knotted, witnesses: vec![p.clone()] };
    }
    let word = word_of(cell, lp);
    if word.reduced().is_empty() || is_sign_flipped_square(&word) {
        return WordClass { verdict: WordVerdict::Trivial, witnesses: vec![] };
    }
    WordClass { verdict: WordVerdict::ProductOfSimple, witnesses: points }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DividedCurvePair {
    pub point: VertexId,
    pub visits: (usize, usize),
    pub left: Vec<DartId>,
    pub left_homology: IVec2,
    pub right: Vec<DartId>,
    pub right_homology: IVec2,
}

/// One pair of divided curves per unordered pair of visits to `point`.
pub fn divided_curves(
    cell: &TCell,
    lp: &CharacteristicLoop,
    point: VertexId,
) -> Result<Vec<DividedCurvePair>, WordError> {
    let darts = lp.darts();
    let pairs: Vec<DividedCurvePair> = repeated_visits(cell, &darts)
        .into_iter()
        .filter(|(v, _, _)| *v == point)
        .map(|(v, i, j)| {
            let (left, right) = split(&darts, i, j);
            DividedCurvePair {
                point: v,
                visits: (i, j),
                left_homology: sum(cell, &left),
                right_homology: sum(cell, &right),
                left,
                right,
            }
        })
        .collect();
    if pairs.is_empty() {
        return Err(WordError::NotRepeated(cell.vertex_name(point).to_string()));
    }
    Ok(pairs)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SelfIntersection {
    pub vertex: String,
    pub visits: (usize, usize),
    /// Some divided curve is null, so the crossing persists in the cover.
    pub lifts: bool,
    /// The strand crosses itself here, rather than touching.
    pub crossing: bool,
    /// Odd twist count, boundary-crossing loop, and both visits arrive along
    /// the same dart: the torus picture alone does not settle this point.
    pub odd_twist_caveat: bool,
}

pub fn self_intersection_vertices(cell: &TCell, lp: &CharacteristicLoop) -> Vec<SelfIntersection> {
    let darts = lp.darts();
    let crosses_boundary = darts.iter().any(|d| !cell.translation(*d).is_zero());
    repeated_visits(cell, &darts)
        .into_iter()
        .map(|(v, i, j)| {
            let (l, r) = split(&darts, i, j);
            SelfIntersection {
                vertex: cell.vertex_name(v).to_string(),
                visits: (i, j),
                lifts: sum(cell, &l).is_zero() || sum(cell, &r).is_zero(),
                crossing: chords_cross(pass_ends(cell, lp, i), pass_ends(cell, lp, j)),
                odd_twist_caveat: lp.method.is_odd() && crosses_boundary && darts[i] == darts[j],
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polymethod::{trace_loops, PolygonalMethod};
    use crate::tcell::{builtin_tcell, Builtin};

    fn w(s: &str) -> EdgeWord {
        EdgeWord::parse(s, true).unwrap()
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(w("e1+.e3-").to_string(), "e1+.e3-");
        assert!(EdgeWord::parse("e1+.e3", true).is_none());
        assert!(EdgeWord::parse("+", true).is_none());
    }

    #[test]
    fn cyclic_reduction() {
        assert!(w("a+.b+.b-.a-").reduced().is_empty());
        assert_eq!(w("a-.b+.c+.a+").reduced().to_string(), "b+.c+");
        let open = EdgeWord::parse("a-.b+.a+", false).unwrap();
        assert_eq!(open.reduced().len(), 3);
    }

    #[test]
    fn hexagonal_words() {
        let hex = builtin_tcell(Builtin::Hexagonal);
        let cr2 = classify_word(&hex, &w("e1+.e3-.e2-.e1-.e3+.e2+")).unwrap();
        assert_eq!(cr2.verdict, WordVerdict::Trivial);
        assert_eq!(classify_word(&hex, &w("e1+.e2+")).unwrap().verdict, WordVerdict::Simple);
        assert_eq!(classify_word(&hex, &w("e1+.e3-")).unwrap().verdict, WordVerdict::Simple);
        assert_eq!(
            classify_word(&hex, &w("e1+.e1+")),
            Err(WordError::NotAdjacent("e1+".into(), "e1+".into()))
        );
        assert_eq!(classify_word(&hex, &w("x+")), Err(WordError::UnknownEdge("x".into())));
    }

    #[test]
    fn square_figure_eight() {
        // h+ then v+, both returning to O: the halves are h+ and v+
        let sq = builtin_tcell(Builtin::Square);
        let eight = w("h+.v+");
        let c = classify_word(&sq, &eight).unwrap();
        assert_eq!(c.verdict, WordVerdict::ProductOfSimple);
        assert_eq!(c.witnesses[0].left, "v+");
        assert_eq!(c.witnesses[0].right, "h+");

        // h+ v+ v- h-: null halves at the degree-4 vertex
        let knot = w("h+.v+.v-.h-");
        let c = classify_word(&sq, &knot).unwrap();
        assert_eq!(c.verdict, WordVerdict::Knotted);

        // splitting h+.h-.v+ leaves the null divided curve h+.h-
        let k2 = classify_word(&sq, &w("h+.h-.v+")).unwrap();
        assert_eq!(k2.verdict, WordVerdict::Knotted);
    }

    #[test]
    fn single_letter_loop_is_simple() {
        let sq = builtin_tcell(Builtin::Square);
        assert_eq!(classify_word(&sq, &w("h-")).unwrap().verdict, WordVerdict::Simple);
    }

    #[test]
    fn divided_curve_sums() {
        let sq = builtin_tcell(Builtin::Square);
        let lp = &trace_loops(&sq, PolygonalMethod::crossed(1)).unwrap()[0];
        assert_eq!(lp.word_string(&sq), "h+.h+");
        let pairs = divided_curves(&sq, lp, VertexId(0)).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].left_homology + pairs[0].right_homology, lp.homology);
        let si = self_intersection_vertices(&sq, lp);
        assert_eq!(si.len(), 1);
        assert!(!si[0].lifts);
        assert!(si[0].odd_twist_caveat);

        let hex = builtin_tcell(Builtin::Hexagonal);
        let lp = &trace_loops(&hex, PolygonalMethod::branched(3)).unwrap()[0];
        assert!(divided_curves(&hex, lp, VertexId(0)).is_err());
        assert!(self_intersection_vertices(&hex, lp).is_empty());
    }
}
