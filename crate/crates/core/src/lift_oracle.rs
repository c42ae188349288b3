//! Brute-force check of a motif in the universal cover.
//!
//! Each strand of the motif is followed piece by piece in the lifted plane,
//! keeping track of which translate of the cell it is in. Components that
//! return to their start in the same translate are closed rings; the rest are
//! infinite threads with a period vector. Crossings are then tested directly
//! for whether both strands belong to the same lifted component.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::classify::Verdict;
use crate::polymethod::{EdgeRule, MethodError, PolygonalMethod, VertexRule};
use crate::tcell::{DartId, EdgeId, IVec2, TCell, VertexId};

pub const DEFAULT_PATCH: usize = 6;
pub const MAX_PATCH: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error(transparent)]
    Method(#[from] MethodError),
    #[error("patch {n}x{n} too small: a component spans {needed} cells")]
    PatchTooSmall { n: usize, needed: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleComponent {
    pub closed_within_patch: bool,
    /// Translation after one period (zero for closed components).
    pub displacement: IVec2,
    pub self_intersects: bool,
    /// Strand pieces per period.
    pub pieces: usize,
    /// Cells spanned by one period, per axis.
    pub span: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LiftReport {
    pub cell: String,
    pub method: PolygonalMethod,
    pub patch: usize,
    pub components: Vec<OracleComponent>,
    pub verdict: Verdict,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
enum Side {
    Right,
    Left,
}

/// A strand travelling along `dart`, about to reach its head on `side`
/// (relative to the direction of travel).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
struct Walker {
    dart: DartId,
    side: Side,
}

/// One of the (at most two) strands drawn along an edge.
type Piece = (EdgeId, u8);
/// A connection drawn inside a vertex disk.
type Chord = (VertexId, usize);

struct Rules {
    step: usize,
    single: bool,
    odd: bool,
    twists: u32,
    crossed: bool,
}

impl Rules {
    fn of(method: PolygonalMethod) -> Rules {
        let (single, twists) = match method.edge_rule() {
            EdgeRule::SingleLine => (true, 0),
            EdgeRule::DoubleLine(m) => (false, m),
        };
        Rules {
            step: if method.vertex_rule() == VertexRule::Crossed { 2 } else { 1 },
            single,
            odd: twists % 2 == 1,
            twists,
            crossed: method.vertex_rule() == VertexRule::Crossed,
        }
    }
}

fn is_canonical(cell: &TCell, d: DartId) -> bool {
    cell.edge(cell.edge_of(d)).canonical == d
}

fn piece_of(cell: &TCell, rules: &Rules, w: Walker) -> Piece {
    let e = cell.edge_of(w.dart);
    if rules.single {
        return (e, 0);
    }
    let idx = match (is_canonical(cell, w.dart), w.side, rules.odd) {
        (true, Side::Right, _) => 0,
        (true, Side::Left, _) => 1,
        (false, Side::Right, false) => 1,
        (false, Side::Left, false) => 0,
        (false, Side::Right, true) => 0,
        (false, Side::Left, true) => 1,
    };
    (e, idx)
}

/// Cross the vertex at the head of `w`, then run along the next edge.
/// Returns the chord used and the next walker.
fn advance(cell: &TCell, rules: &Rules, w: Walker) -> (Chord, Walker) {
    let back = cell.opposite(w.dart);
    let v = cell.tail(back);
    let around = cell.rotation(v);
    let n = around.len();
    let i = around.iter().position(|&d| d == back).expect("dart in rotation");
    let (j, chord) = match w.side {
        Side::Right => ((i + rules.step) % n, i),
        Side::Left => ((i + n - rules.step % n) % n, (i + n - rules.step % n) % n),
    };
    let chord = if rules.single { i % 2 } else { chord };
    let side = match (w.side, rules.odd) {
        (s, false) => s,
        (Side::Right, true) => Side::Left,
        (Side::Left, true) => Side::Right,
    };
    ((v, chord), Walker { dart: around[j], side })
}

struct Orbit {
    pieces: HashMap<Piece, IVec2>,
    chords: HashMap<Chord, IVec2>,
    displacement: IVec2,
    span: (usize, usize),
}

fn orbit(cell: &TCell, rules: &Rules, start: Walker) -> Orbit {
    let mut pieces = HashMap::new();
    let mut chords = HashMap::new();
    // offset of the translate holding the head of the current dart
    let mut at = cell.translation(start.dart);
    let start_frame = if is_canonical(cell, start.dart) { IVec2::ZERO } else { at };
    pieces.insert(piece_of(cell, rules, start), start_frame);
    let (mut lo, mut hi) = (IVec2::ZERO.min(at), IVec2::ZERO.max(at));
    let mut w = start;
    loop {
        let (chord, next) = advance(cell, rules, w);
        let prev = chords.insert(chord, at);
        debug_assert!(prev.is_none(), "chord visited twice in one period");
        let t = cell.translation(next.dart);
        let frame = if is_canonical(cell, next.dart) { at } else { at + t };
        at += t;
        lo = IVec2(lo.0.min(at.0), lo.1.min(at.1));
        hi = IVec2(hi.0.max(at.0), hi.1.max(at.1));
        w = next;
        if w == start {
            break;
        }
        pieces.insert(piece_of(cell, rules, w), frame);
    }
    let displacement = at - cell.translation(start.dart);
    let span = ((hi.0 - lo.0 + 1) as usize, (hi.1 - lo.1 + 1) as usize);
    Orbit { pieces, chords, displacement, span }
}

fn same_lift(a: IVec2, b: IVec2, period: IVec2) -> bool {
    (a - b).multiple_of(period).is_some()
}

/// Endpoints of a vertex chord on the disk boundary, as positions in
/// `0..2n` (left of dart i at 2i, right of dart i at 2i + 1).
fn chord_ends(rules: &Rules, n: usize, c: usize) -> (usize, usize) {
    if rules.single {
        (2 * c, 2 * (c + 2))
    } else {
        (2 * c + 1, (2 * (c + rules.step)) % (2 * n))
    }
}

fn interleave(a: (usize, usize), b: (usize, usize)) -> bool {
    let inside = |x: usize| {
        let (lo, hi) = if a.0 < a.1 { (a.0, a.1) } else { (a.1, a.0) };
        lo < x && x < hi
    };
    inside(b.0) != inside(b.1)
}

fn self_intersects(cell: &TCell, rules: &Rules, o: &Orbit) -> bool {
    let d = o.displacement;
    if rules.twists > 0 {
        for e in cell.edge_ids() {
            if let (Some(a), Some(b)) = (o.pieces.get(&(e, 0)), o.pieces.get(&(e, 1))) {
                if same_lift(*a, *b, d) {
                    return true;
                }
            }
        }
    }
    if rules.crossed {
        for v in cell.vertex_ids() {
            let n = cell.degree(v);
            let count = if rules.single { 2 } else { n };
            for a in 0..count {
                for b in a + 1..count {
                    let (Some(fa), Some(fb)) = (o.chords.get(&(v, a)), o.chords.get(&(v, b))) else { continue };
                    if interleave(chord_ends(rules, n, a), chord_ends(rules, n, b)) && same_lift(*fa, *fb, d) {
                        return true;
                    }
                }
            }
        }
    }
    false
}

pub fn lift_trace(cell: &TCell, method: PolygonalMethod, n: usize) -> Result<LiftReport, OracleError> {
    method.check_applicable(cell)?;
    let rules = Rules::of(method);
    let sides: &[Side] = if rules.single { &[Side::Right] } else { &[Side::Right, Side::Left] };
    let mut owned: HashMap<Piece, usize> = HashMap::new();
    let mut components = Vec::new();
    for d in cell.dart_ids() {
        for &side in sides {
            let start = Walker { dart: d, side };
            if owned.contains_key(&piece_of(cell, &rules, start)) {
                continue;
            }
            let o = orbit(cell, &rules, start);
            let needed = o.span.0.max(o.span.1);
            if needed > n {
                return Err(OracleError::PatchTooSmall { n, needed });
            }
            for p in o.pieces.keys() {
                owned.insert(*p, components.len());
            }
            components.push(OracleComponent {
                closed_within_patch: o.displacement.is_zero(),
                displacement: o.displacement,
                self_intersects: self_intersects(cell, &rules, &o),
                pieces: o.pieces.len(),
                span: o.span,
            });
        }
    }
    Ok(LiftReport {
        cell: cell.name().to_string(),
        method,
        patch: n,
        verdict: empirical_verdict(&components),
        components,
    })
}

/// [`lift_trace`] starting at the default patch and doubling on failure.
pub fn lift_trace_auto(cell: &TCell, method: PolygonalMethod) -> Result<LiftReport, OracleError> {
    let mut n = DEFAULT_PATCH;
    loop {
        match lift_trace(cell, method, n) {
            Err(OracleError::PatchTooSmall { .. }) if n * 2 <= MAX_PATCH => n *= 2,
            other => return other,
        }
    }
}

fn empirical_verdict(components: &[OracleComponent]) -> Verdict {
    if components.iter().any(|c| c.self_intersects) {
        return Verdict::Invalid;
    }
    let open: Vec<IVec2> = components.iter().filter(|c| !c.closed_within_patch).map(|c| c.displacement).collect();
    if open.is_empty() {
        Verdict::Polycatenane
    } else if open.len() < components.len() {
        Verdict::Mixed
    } else if open.iter().any(|a| open.iter().any(|b| a.cross(*b) != 0)) {
        Verdict::Weave
    } else {
        Verdict::ParallelEssential
    }
}

impl LiftReport {
    pub fn closed_count(&self) -> usize {
        self.components.iter().filter(|c| c.closed_within_patch).count()
    }

    pub fn open_count(&self) -> usize {
        self.components.len() - self.closed_count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tcell::{builtin_tcell, Builtin};

    fn run(b: Builtin, m: &str) -> LiftReport {
        lift_trace(&builtin_tcell(b), m.parse().unwrap(), DEFAULT_PATCH).unwrap()
    }

    #[test]
    fn hexagonal_rings_and_threads() {
        let r = run(Builtin::Hexagonal, "cr:2");
        assert!(r.components.iter().all(|c| c.closed_within_patch));
        assert_eq!(r.verdict, Verdict::Polycatenane);

        let r = run(Builtin::Hexagonal, "br:3");
        assert_eq!(r.open_count(), r.components.len());
        assert_eq!(r.verdict, Verdict::Weave);
    }

    #[test]
    fn square_plain_weave() {
        let r = run(Builtin::Square, "cr:s");
        let mut d: Vec<IVec2> = r.components.iter().map(|c| c.displacement).collect();
        d.sort();
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|v| v.0.abs() + v.1.abs() == 1));
        assert!(!d[0].parallel_to(d[1]));
        assert_eq!(r.verdict, Verdict::Weave);
    }

    #[test]
    fn pieces_are_partitioned() {
        for b in Builtin::ALL {
            let cell = builtin_tcell(b);
            for m in PolygonalMethod::sweep(0..=4) {
                let Ok(r) = lift_trace(&cell, m, DEFAULT_PATCH) else { continue };
                let per_edge = if m.edge_rule() == EdgeRule::SingleLine { 1 } else { 2 };
                let total: usize = r.components.iter().map(|c| c.pieces).sum();
                assert_eq!(total, per_edge * cell.edge_count(), "{b} {m}");
            }
        }
    }

    #[test]
    fn tiny_patch_is_reported() {
        let cell = builtin_tcell(Builtin::Hexagonal).cover(3, 1);
        let err = lift_trace(&cell, "br:1".parse().unwrap(), 1);
        assert!(matches!(err, Err(OracleError::PatchTooSmall { n: 1, .. })), "{err:?}");
    }
}
