//! Motif geometry: a drawing of the cell on the unit torus, the strands that a
//! polygonal link method lays over it, and their crossings.

mod svg;

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::polymethod::{loop_index_of, trace_loops, EdgeRule, MethodError, PolygonalMethod, VertexRule};
use crate::tcell::{DartId, EdgeId, IVec2, Sign, TCell, VertexId};

pub use svg::{emit_patch_svg, emit_svg, SvgStyle};

pub type Point = [f64; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagramError {
    #[error(transparent)]
    Method(#[from] MethodError),
    #[error("layout failed: {0}")]
    Layout(String),
    #[error("no alternating over/under assignment exists for component {component}")]
    ParityObstruction { component: usize },
}

/// Vertex positions in lattice coordinates. Edge `e` is drawn as the
/// segment from `position[tail]` to `position[head] + translation(e)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Layout {
    pub position: Vec<Point>,
    /// Radius of the disk replacing each vertex.
    pub disk: f64,
    /// Angular half-spread of the strand pair at a vertex.
    pub spread: f64,
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

fn scale(a: Point, k: f64) -> Point {
    [a[0] * k, a[1] * k]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

fn shift(p: Point, t: IVec2) -> Point {
    [p[0] + t.0 as f64, p[1] + t.1 as f64]
}

fn cross2(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Parameter along `p0 -> p1` where it properly crosses `q0 -> q1`.
fn segment_hit(p0: Point, p1: Point, q0: Point, q1: Point) -> Option<f64> {
    let r = sub(p1, p0);
    let s = sub(q1, q0);
    let den = cross2(r, s);
    if den.abs() < 1e-12 {
        return None;
    }
    let qp = sub(q0, p0);
    let t = cross2(qp, s) / den;
    let u = cross2(qp, r) / den;
    let eps = 1e-9;
    (t > eps && t < 1.0 - eps && u > eps && u < 1.0 - eps).then_some(t)
}

/// Lifted vector of a dart.
fn dart_vector(cell: &TCell, pos: &[Point], d: DartId) -> Point {
    shift(sub(pos[cell.head(d).0], pos[cell.tail(d).0]), cell.translation(d))
}

/// Harmonic (barycentric) placement of the vertices: every vertex sits at the
/// mean of its lifted neighbours. Fails if the drawing does not fit in one
/// cell, disagrees with the rotation system, or has crossing edges.
pub fn layout(cell: &TCell) -> Result<Layout, DiagramError> {
    let n = cell.vertex_count();
    let mut lap = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DMatrix::<f64>::zeros(n, 2);
    for d in cell.dart_ids() {
        let (u, w) = (cell.tail(d).0, cell.head(d).0);
        let t = cell.translation(d);
        lap[(u, u)] += 1.0;
        lap[(u, w)] -= 1.0;
        rhs[(u, 0)] += t.0 as f64;
        rhs[(u, 1)] += t.1 as f64;
    }
    for j in 0..n {
        lap[(0, j)] = if j == 0 { 1.0 } else { 0.0 };
    }
    rhs[(0, 0)] = 0.0;
    rhs[(0, 1)] = 0.0;
    let sol = lap
        .lu()
        .solve(&rhs)
        .ok_or_else(|| DiagramError::Layout("singular barycentric system".into()))?;
    let mut pos: Vec<Point> = (0..n).map(|v| [sol[(v, 0)], sol[(v, 1)]]).collect();

    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &pos {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    if hi[0] - lo[0] >= 1.0 - 1e-9 || hi[1] - lo[1] >= 1.0 - 1e-9 {
        return Err(DiagramError::Layout(format!(
            "vertices spread over {:.3} x {:.3} cells",
            hi[0] - lo[0],
            hi[1] - lo[1]
        )));
    }
    let mid = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    for p in &mut pos {
        *p = [p[0] - mid[0] + 0.5, p[1] - mid[1] + 0.5];
    }

    let mut min_gap = f64::INFINITY;
    for v in cell.vertex_ids() {
        let darts = cell.rotation(v);
        let angles: Vec<f64> = darts
            .iter()
            .map(|d| {
                let a = dart_vector(cell, &pos, *d);
                a[1].atan2(a[0])
            })
            .collect();
        if darts.iter().any(|d| norm(dart_vector(cell, &pos, *d)) < 1e-9) {
            return Err(DiagramError::Layout(format!("edge of zero length at vertex {}", cell.vertex_name(v))));
        }
        let mut total = 0.0;
        for i in 0..angles.len() {
            let gap = (angles[(i + 1) % angles.len()] - angles[i]).rem_euclid(2.0 * PI);
            total += gap;
            min_gap = min_gap.min(gap);
        }
        if (total - 2.0 * PI).abs() > 1e-6 || min_gap < 1e-9 {
            return Err(DiagramError::Layout(format!(
                "drawing at vertex {} does not follow its rotation",
                cell.vertex_name(v)
            )));
        }
    }

    let segs: Vec<(EdgeId, Point, Point)> = cell
        .edge_ids()
        .map(|e| {
            let c = cell.edge(e).canonical;
            let a = pos[cell.tail(c).0];
            (e, a, add(a, dart_vector(cell, &pos, c)))
        })
        .collect();
    for (i, (e, a0, a1)) in segs.iter().enumerate() {
        for (f, b0, b1) in &segs[i..] {
            let span = |p: Point, q: Point, k: usize| (p[k].min(q[k]), p[k].max(q[k]));
            let mut shifts = Vec::new();
            let (ax, ay) = (span(*a0, *a1, 0), span(*a0, *a1, 1));
            let (bx, by) = (span(*b0, *b1, 0), span(*b0, *b1, 1));
            for sx in (ax.0 - bx.1).floor() as i64..=(ax.1 - bx.0).ceil() as i64 {
                for sy in (ay.0 - by.1).floor() as i64..=(ay.1 - by.0).ceil() as i64 {
                    shifts.push(IVec2(sx, sy));
                }
            }
            for s in shifts {
                if e == f && s.is_zero() {
                    continue;
                }
                if segment_hit(*a0, *a1, shift(*b0, s), shift(*b1, s)).is_some() {
                    return Err(DiagramError::Layout(format!(
                        "edges {} and {} cross",
                        cell.edge_label(*e),
                        cell.edge_label(*f)
                    )));
                }
            }
        }
    }

    let min_len = segs.iter().map(|(_, a, b)| norm(sub(*b, *a))).fold(f64::INFINITY, f64::min);
    Ok(Layout {
        position: pos,
        disk: (0.25 * min_len).min(0.12),
        spread: (min_gap / 4.0).min(PI / 8.0),
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CrossingSite {
    /// Crossing `index` of the twist region on an edge.
    Twist { edge: usize, index: u32 },
    /// Two connections inside a vertex disk.
    Vertex { vertex: usize, chords: (usize, usize) },
}

/// One pass of a strand through a crossing.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Passage {
    pub crossing: usize,
    /// Arc length from the start of the strand's polyline.
    pub arc: f64,
    pub over: bool,
}

/// A component of the motif: one period of its lift, as a polyline.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Strand {
    pub points: Vec<Point>,
    /// The point after the last one is `points[0]` shifted by this vector.
    pub closing: IVec2,
    pub passages: Vec<Passage>,
    pub length: f64,
}

impl Strand {
    /// Points of one full period, ending at the shifted start point.
    pub fn period_points(&self) -> Vec<Point> {
        let mut pts = self.points.clone();
        pts.push(shift(self.points[0], self.closing));
        pts
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Crossing {
    pub site: CrossingSite,
    /// Position on the unit torus.
    pub position: Point,
    /// (strand, passage index) of the upper pass.
    pub over: (usize, usize),
    pub under: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwistRegion {
    pub edge: String,
    pub center: Point,
    pub twists: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MotifDiagram {
    pub cell: String,
    pub method: PolygonalMethod,
    pub layout: Layout,
    pub strands: Vec<Strand>,
    pub crossings: Vec<Crossing>,
    pub twist_regions: Vec<TwistRegion>,
    /// Characteristic loop index of each strand.
    pub component_map: Vec<usize>,
    /// Crossings whose local convention was flipped to make the diagram
    /// alternating.
    pub repaired: usize,
    /// Components along which over and under could not be made to alternate
    /// (only non-empty when obstructions are allowed).
    pub obstructed: Vec<usize>,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct DiagramOptions {
    /// Keep the local conventions on components that cannot alternate
    /// instead of failing.
    pub allow_obstruction: bool,
}

/// Side of the strand relative to its direction of travel, when it reaches
/// the head of its dart.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Side {
    Right,
    Left,
}

struct Geometry<'a> {
    cell: &'a TCell,
    method: PolygonalMethod,
    layout: &'a Layout,
}

impl Geometry<'_> {
    fn twists(&self) -> u32 {
        self.method.twists().unwrap_or(0)
    }

    fn single(&self) -> bool {
        self.method.edge_rule() == EdgeRule::SingleLine
    }

    /// Which of the edge's strands a state runs on.
    fn strand_index(&self, d: DartId, side: Side) -> u8 {
        if self.single() {
            return 0;
        }
        let canonical = self.cell.sign(d) == Sign::Plus;
        match (canonical, side, self.method.is_odd()) {
            (true, Side::Right, _) | (false, Side::Right, true) | (false, Side::Left, false) => 0,
            _ => 1,
        }
    }

    /// Strand `j` of edge `e` in its canonical direction, starting from the
    /// unshifted tail position, with the segment index of each twist crossing.
    fn piece(&self, e: EdgeId, j: u8) -> (Vec<Point>, Vec<(u32, usize)>) {
        let c = self.cell.edge(e).canonical;
        let start = self.layout.position[self.cell.tail(c).0];
        let v = dart_vector(self.cell, &self.layout.position, c);
        let len = norm(v);
        let dir = scale(v, 1.0 / len);
        let right = [dir[1], -dir[0]];
        let r = self.layout.disk;
        let at = |along: f64, lateral: f64| add(add(start, scale(dir, along)), scale(right, lateral));
        if self.single() {
            return (vec![at(r, 0.0), at(len - r, 0.0)], vec![]);
        }
        let (cd, w) = (r * self.layout.spread.cos(), r * self.layout.spread.sin());
        let m = self.twists();
        let sgn = if j == 0 { 1.0 } else { -1.0 };
        let lat = |s: f64| sgn * w * (PI * m as f64 * (1.0 - s)).cos();
        if m == 0 {
            return (vec![at(cd, lat(0.0)), at(len - cd, lat(1.0))], vec![]);
        }
        let a = r + 0.2 * (len - 2.0 * r);
        let b = len - a;
        let mut pts = vec![at(cd, lat(0.0)), at(a, lat(0.0))];
        let samples = 4 * m as usize;
        for q in 0..samples {
            let s = (q as f64 + 0.5) / samples as f64;
            pts.push(at(a + s * (b - a), lat(s)));
        }
        pts.push(at(b, lat(1.0)));
        pts.push(at(len - cd, lat(1.0)));
        // crossing k sits at s = 1 - (k + 1/2)/m, between samples 4(m-k)-3 and 4(m-k)-2
        let hits = (0..m).map(|k| (k, 1 + 4 * (m - k) as usize - 2)).collect();
        (pts, hits)
    }

    /// Boundary-point index of a chord end: dart position `p`, clockwise
    /// side at `2p`, counterclockwise side at `2p + 1`.
    fn chord(&self, v: VertexId, arrive: usize, side: Side) -> usize {
        let n = self.cell.degree(v);
        let k = self.method.step() as usize;
        if self.single() {
            return arrive % 2;
        }
        match side {
            Side::Right => arrive,
            Side::Left => (arrive + n - k % n) % n,
        }
    }

    /// Cross the vertex at the head of `d`: the connection used and the
    /// next state.
    fn advance(&self, d: DartId, side: Side) -> (VertexId, usize, (DartId, Side)) {
        let back = self.cell.opposite(d);
        let v = self.cell.tail(back);
        let around = self.cell.rotation(v);
        let n = around.len();
        let k = self.method.step() as usize % n;
        let i = self.cell.position(back);
        let j = match side {
            Side::Right => (i + k) % n,
            Side::Left => (i + n - k) % n,
        };
        let next = match (side, self.method.is_odd()) {
            (s, false) => s,
            (Side::Right, true) => Side::Left,
            (Side::Left, true) => Side::Right,
        };
        (v, self.chord(v, i, side), (around[j], next))
    }

    fn chord_ends(&self, v: VertexId, c: usize) -> (usize, usize) {
        let n = self.cell.degree(v);
        if self.single() {
            (2 * c, 2 * (c + 2))
        } else {
            let k = self.method.step() as usize;
            (2 * c + 1, (2 * (c + k)) % (2 * n))
        }
    }

    fn chords_cross(&self, v: VertexId, a: usize, b: usize) -> bool {
        if self.method.vertex_rule() == VertexRule::Branched {
            return false;
        }
        let (p, q) = (self.chord_ends(v, a), self.chord_ends(v, b));
        let (lo, hi) = (p.0.min(p.1), p.0.max(p.1));
        let inside = |x: usize| lo < x && x < hi;
        inside(q.0) != inside(q.1)
    }

    /// Upper strand at a vertex crossing under the local convention: each
    /// connection passes over the next one counterclockwise; for the single
    /// line the connection through odd positions is on top.
    fn vertex_over(&self, v: VertexId, mine: usize, other: usize) -> bool {
        if self.single() {
            return mine == 1;
        }
        let n = self.cell.degree(v);
        (mine + 1) % n == other
    }
}

struct RawPassage {
    site: CrossingSite,
    segment: usize,
    t: f64,
    convention: bool,
}

/// Build the diagram, failing on a parity obstruction.
pub fn build_diagram(cell: &TCell, method: PolygonalMethod) -> Result<MotifDiagram, DiagramError> {
    build_diagram_with(cell, method, DiagramOptions::default())
}

pub fn build_diagram_with(
    cell: &TCell,
    method: PolygonalMethod,
    options: DiagramOptions,
) -> Result<MotifDiagram, DiagramError> {
    let loops = trace_loops(cell, method)?;
    let lay = layout(cell)?;
    let g = Geometry { cell, method, layout: &lay };
    let sides: &[Side] = if g.single() { &[Side::Right] } else { &[Side::Right, Side::Left] };

    let mut owned: HashSet<(EdgeId, u8)> = HashSet::new();
    let mut strands = Vec::new();
    let mut raw: Vec<Vec<RawPassage>> = Vec::new();
    let mut component_map = Vec::new();
    for d0 in cell.dart_ids() {
        for &side0 in sides {
            let start = (d0, side0);
            if owned.contains(&(cell.edge_of(d0), g.strand_index(d0, side0))) {
                continue;
            }
            let mut points: Vec<Point> = Vec::new();
            let mut passages = Vec::new();
            let mut chords = Vec::new();
            let mut darts = Vec::new();
            let mut at = IVec2::ZERO;
            let mut w = start;
            loop {
                let (d, side) = w;
                darts.push(d);
                let e = cell.edge_of(d);
                let j = g.strand_index(d, side);
                owned.insert((e, j));
                let (mut pts, mut hits) = g.piece(e, j);
                let canonical = cell.sign(d) == Sign::Plus;
                let offset = if canonical { at } else { at + cell.translation(d) };
                for p in &mut pts {
                    *p = shift(*p, offset);
                }
                if !canonical {
                    let nseg = pts.len() - 1;
                    pts.reverse();
                    for h in &mut hits {
                        h.1 = nseg - 1 - h.1;
                    }
                    hits.reverse();
                }
                let first = points.len();
                for (tw, seg) in hits {
                    passages.push(RawPassage {
                        site: CrossingSite::Twist { edge: e.0, index: tw },
                        segment: first + seg,
                        t: 0.5,
                        convention: (j == 0) == (tw % 2 == 0),
                    });
                }
                points.extend(pts);
                at += cell.translation(d);
                let (v, chord, next) = g.advance(d, side);
                chords.push((points.len() - 1, v, chord));
                w = next;
                if w == start {
                    break;
                }
            }
            component_map.push(loop_index_of(cell, &loops, &darts).expect("component belongs to a traced loop"));
            strands.push((Strand { length: 0.0, points, closing: at, passages: vec![] }, chords));
            raw.push(passages);
        }
    }

    // chords: a chord is the segment leaving the point recorded in last_chord_site
    let mut chord_segments: BTreeMap<(usize, usize), (usize, usize, Point, Point)> = BTreeMap::new();
    for (si, (strand, chords)) in strands.iter().enumerate() {
        let pts = strand.period_points();
        for &(seg, v, c) in chords {
            chord_segments.insert((v.0, c), (si, seg, pts[seg], pts[seg + 1]));
        }
    }
    for v in cell.vertex_ids() {
        let count = if g.single() { 2 } else { cell.degree(v) };
        for a in 0..count {
            for b in a + 1..count {
                if !g.chords_cross(v, a, b) {
                    continue;
                }
                let (Some(ca), Some(cb)) = (chord_segments.get(&(v.0, a)), chord_segments.get(&(v.0, b))) else {
                    continue;
                };
                // bring chord b into chord a's frame
                let off = [(ca.2[0] - cb.2[0]).round(), (ca.2[1] - cb.2[1]).round()];
                let cb0 = add(cb.2, off);
                let cb1 = add(cb.3, off);
                let (ta, tb) = line_params(ca.2, ca.3, cb0, cb1)
                    .ok_or_else(|| DiagramError::Layout(format!("parallel chords at {}", cell.vertex_name(v))))?;
                let site = CrossingSite::Vertex { vertex: v.0, chords: (a, b) };
                raw[ca.0].push(RawPassage { site, segment: ca.1, t: ta, convention: g.vertex_over(v, a, b) });
                raw[cb.0].push(RawPassage { site, segment: cb.1, t: tb, convention: g.vertex_over(v, b, a) });
            }
        }
    }

    let mut strands: Vec<Strand> = strands.into_iter().map(|(s, _)| s).collect();
    let mut sites: BTreeMap<CrossingSite, Vec<(usize, usize)>> = BTreeMap::new();
    let mut conventions: Vec<Vec<(CrossingSite, bool)>> = Vec::new();
    for (si, (strand, passages)) in strands.iter_mut().zip(raw.iter_mut()).enumerate() {
        let pts = strand.period_points();
        let mut cum = vec![0.0];
        for w in pts.windows(2) {
            cum.push(cum.last().unwrap() + norm(sub(w[1], w[0])));
        }
        strand.length = *cum.last().unwrap();
        passages.sort_by(|a, b| (a.segment, a.t).partial_cmp(&(b.segment, b.t)).unwrap());
        let mut conv = Vec::new();
        for (pi, p) in passages.iter().enumerate() {
            let seg_len = cum[p.segment + 1] - cum[p.segment];
            strand.passages.push(Passage { crossing: 0, arc: cum[p.segment] + p.t * seg_len, over: p.convention });
            sites.entry(p.site).or_default().push((si, pi));
            conv.push((p.site, p.convention));
        }
        conventions.push(conv);
    }
    let site_ids: BTreeMap<CrossingSite, usize> = sites.keys().enumerate().map(|(i, s)| (*s, i)).collect();
    for (si, strand) in strands.iter_mut().enumerate() {
        for (pi, p) in strand.passages.iter_mut().enumerate() {
            p.crossing = site_ids[&conventions[si][pi].0];
        }
    }

    let (flips, obstructed) = solve_alternation(&strands, site_ids.len());
    if let Some(&component) = obstructed.first() {
        if !options.allow_obstruction {
            return Err(DiagramError::ParityObstruction { component });
        }
    }
    for strand in &mut strands {
        for p in &mut strand.passages {
            p.over ^= flips[p.crossing];
        }
    }
    let repaired = flips.iter().filter(|f| **f).count();

    let mut crossings = Vec::new();
    for (site, passes) in &sites {
        debug_assert_eq!(passes.len(), 2, "{site:?}");
        let (a, b) = (passes[0], passes[1]);
        let pa = &strands[a.0].passages[a.1];
        let position = point_at(&strands[a.0], pa.arc);
        let (over, under) = if pa.over { (a, b) } else { (b, a) };
        crossings.push(Crossing {
            site: *site,
            position: [position[0].rem_euclid(1.0), position[1].rem_euclid(1.0)],
            over,
            under,
        });
    }

    let twist_regions = if g.single() {
        Vec::new()
    } else {
        cell.edge_ids()
            .map(|e| {
                let c = cell.edge(e).canonical;
                let a = lay.position[cell.tail(c).0];
                let mid = add(a, scale(dart_vector(cell, &lay.position, c), 0.5));
                TwistRegion {
                    edge: cell.edge_label(e).to_string(),
                    center: [mid[0].rem_euclid(1.0), mid[1].rem_euclid(1.0)],
                    twists: g.twists(),
                }
            })
            .collect()
    };

    Ok(MotifDiagram {
        cell: cell.name().to_string(),
        method,
        layout: lay,
        strands,
        crossings,
        twist_regions,
        component_map,
        repaired,
        obstructed,
    })
}

/// Parameters along both segments of the intersection of their lines.
fn line_params(p0: Point, p1: Point, q0: Point, q1: Point) -> Option<(f64, f64)> {
    let r = sub(p1, p0);
    let s = sub(q1, q0);
    let den = cross2(r, s);
    if den.abs() < 1e-12 {
        return None;
    }
    let qp = sub(q0, p0);
    Some((cross2(qp, s) / den, cross2(qp, r) / den))
}

/// Point at arc length `arc` along a strand's period polyline.
pub fn point_at(strand: &Strand, arc: f64) -> Point {
    let pts = strand.period_points();
    let mut left = arc.rem_euclid(strand.length.max(1e-12));
    for w in pts.windows(2) {
        let len = norm(sub(w[1], w[0]));
        if left <= len {
            return add(w[0], scale(sub(w[1], w[0]), if len > 0.0 { left / len } else { 0.0 }));
        }
        left -= len;
    }
    *pts.last().unwrap()
}

/// XOR flips per crossing making every strand alternate, choosing in each
/// group of linked crossings the solution with fewer flips. Returns the flips
/// and the strands on which no solution exists.
fn solve_alternation(strands: &[Strand], crossings: usize) -> (Vec<bool>, Vec<usize>) {
    // constraint x_a ^ x_b = c for consecutive passages
    let mut adj: Vec<Vec<(usize, bool, usize)>> = vec![Vec::new(); crossings];
    for (si, s) in strands.iter().enumerate() {
        let n = s.passages.len();
        for i in 0..n {
            let (p, q) = (&s.passages[i], &s.passages[(i + 1) % n]);
            let c = !(p.over ^ q.over);
            adj[p.crossing].push((q.crossing, c, si));
            adj[q.crossing].push((p.crossing, c, si));
        }
    }
    let mut value: Vec<Option<bool>> = vec![None; crossings];
    let mut flips = vec![false; crossings];
    let mut obstructed = Vec::new();
    for root in 0..crossings {
        if value[root].is_some() {
            continue;
        }
        let mut group = vec![root];
        value[root] = Some(false);
        let mut stack = vec![root];
        let mut bad = None;
        while let Some(x) = stack.pop() {
            let vx = value[x].unwrap();
            for &(y, c, si) in &adj[x] {
                match value[y] {
                    None => {
                        value[y] = Some(vx ^ c);
                        group.push(y);
                        stack.push(y);
                    }
                    Some(vy) if vy != vx ^ c => {
                        bad.get_or_insert(si);
                    }
                    Some(_) => {}
                }
            }
        }
        if let Some(si) = bad {
            if !obstructed.contains(&si) {
                obstructed.push(si);
            }
            continue;
        }
        let ones = group.iter().filter(|x| value[**x] == Some(true)).count();
        let invert = 2 * ones > group.len();
        for x in group {
            flips[x] = value[x].unwrap() ^ invert;
        }
    }
    obstructed.sort_unstable();
    (flips, obstructed)
}

impl MotifDiagram {
    pub fn twist_crossings(&self) -> usize {
        self.crossings.iter().filter(|c| matches!(c.site, CrossingSite::Twist { .. })).count()
    }

    pub fn vertex_crossings(&self) -> usize {
        self.crossings.len() - self.twist_crossings()
    }

    /// Whether over and under alternate along every strand.
    pub fn is_alternating(&self) -> bool {
        self.strands.iter().all(|s| {
            let n = s.passages.len();
            (0..n).all(|i| s.passages[i].over != s.passages[(i + 1) % n].over)
        })
    }

    /// Planar patch of `nx` by `ny` translated copies.
    pub fn unfold(&self, nx: usize, ny: usize) -> Patch {
        assert!(nx >= 1 && ny >= 1, "patch dimensions must be positive");
        let inside = |c: IVec2| c.0 >= 0 && c.1 >= 0 && c.0 < nx as i64 && c.1 < ny as i64;
        let mut strands = Vec::new();
        for (si, s) in self.strands.iter().enumerate() {
            for j in 0..ny as i64 {
                for i in 0..nx as i64 {
                    let cell = IVec2(i, j);
                    if !s.closing.is_zero() && inside(cell - s.closing) {
                        continue;
                    }
                    let mut points = Vec::new();
                    let mut passages = Vec::new();
                    let mut at = cell;
                    let mut copies = 0;
                    while inside(at) {
                        let offset = s.length * copies as f64;
                        passages.extend(s.passages.iter().map(|p| Passage { arc: p.arc + offset, ..p.clone() }));
                        points.extend(s.points.iter().map(|p| shift(*p, at)));
                        copies += 1;
                        if s.closing.is_zero() {
                            break;
                        }
                        at += s.closing;
                    }
                    let closed = s.closing.is_zero();
                    if !closed {
                        points.push(shift(s.points[0], at));
                    }
                    strands.push(PatchStrand { component: si, closed, points, passages });
                }
            }
        }
        let mut crossings = Vec::new();
        for j in 0..ny as i64 {
            for i in 0..nx as i64 {
                for c in &self.crossings {
                    crossings.push(PatchCrossing {
                        position: shift(c.position, IVec2(i, j)),
                        twist: matches!(c.site, CrossingSite::Twist { .. }),
                    });
                }
            }
        }
        Patch { nx, ny, strands, crossings }
    }

    /// `{strands, crossings, component_map}` for downstream tools.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "strands": self.strands,
            "crossings": self.crossings,
            "component_map": self.component_map,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatchStrand {
    pub component: usize,
    pub closed: bool,
    pub points: Vec<Point>,
    pub passages: Vec<Passage>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatchCrossing {
    pub position: Point,
    pub twist: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Patch {
    pub nx: usize,
    pub ny: usize,
    pub strands: Vec<PatchStrand>,
    pub crossings: Vec<PatchCrossing>,
}

impl Patch {
    pub fn closed_count(&self) -> usize {
        self.strands.iter().filter(|s| s.closed).count()
    }

    pub fn open_count(&self) -> usize {
        self.strands.len() - self.closed_count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tcell::{builtin_tcell, Builtin};

    #[test]
    fn square_layout_is_centered() {
        let lay = layout(&builtin_tcell(Builtin::Square)).unwrap();
        assert_eq!(lay.position, vec![[0.5, 0.5]]);
    }

    #[test]
    fn hexagonal_layout() {
        let lay = layout(&builtin_tcell(Builtin::Hexagonal)).unwrap();
        let [a, b] = [lay.position[0], lay.position[1]];
        assert!((b[0] - a[0] - 1.0 / 3.0).abs() < 1e-9 && (b[1] - a[1] - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn kagome_faces() {
        let cell = builtin_tcell(Builtin::Kagome);
        layout(&cell).unwrap();
        let mut sizes: Vec<usize> = cell.faces().iter().map(Vec::len).collect();
        sizes.sort();
        assert_eq!(sizes, vec![3, 3, 6]);
    }

    #[test]
    fn crossing_counts() {
        for b in Builtin::ALL {
            let cell = builtin_tcell(b);
            for m in PolygonalMethod::sweep(0..=3) {
                let d = match build_diagram_with(&cell, m, DiagramOptions { allow_obstruction: true }) {
                    Ok(d) => d,
                    Err(DiagramError::Method(_)) => continue,
                    Err(e) => panic!("{b} {m}: {e}"),
                };
                let twists = m.twists().unwrap_or(0) as usize;
                assert_eq!(d.twist_crossings(), twists * cell.edge_count(), "{b} {m}");
                let vertex = match (m.vertex_rule(), m.edge_rule()) {
                    (VertexRule::Branched, _) => 0,
                    (_, EdgeRule::SingleLine) => cell.vertex_count(),
                    _ => 2 * cell.edge_count(),
                };
                assert_eq!(d.vertex_crossings(), vertex, "{b} {m}");
            }
        }
    }

    #[test]
    fn square_plain_weave_needs_a_cover() {
        let sq = builtin_tcell(Builtin::Square);
        assert!(matches!(
            build_diagram(&sq, PolygonalMethod::crossed_single()),
            Err(DiagramError::ParityObstruction { .. })
        ));
        let d = build_diagram(&sq.cover(2, 2), PolygonalMethod::crossed_single()).unwrap();
        assert!(d.is_alternating());
        assert_eq!(d.crossings.len(), 4);
    }

    #[test]
    fn unfold_counts() {
        let hex = builtin_tcell(Builtin::Hexagonal);
        let d = build_diagram(&hex, PolygonalMethod::crossed(2)).unwrap();
        let p = d.unfold(3, 3);
        assert_eq!((p.closed_count(), p.open_count()), (9, 0));

        let sq = builtin_tcell(Builtin::Square);
        let d = build_diagram_with(&sq, PolygonalMethod::crossed_single(), DiagramOptions { allow_obstruction: true })
            .unwrap();
        let p = d.unfold(3, 3);
        assert_eq!((p.closed_count(), p.open_count()), (0, 6));
    }

    #[test]
    fn unfold_one_is_identity() {
        let hex = builtin_tcell(Builtin::Hexagonal);
        for m in ["cr:2", "br:3"] {
            let d = build_diagram(&hex, m.parse().unwrap()).unwrap();
            let p = d.unfold(1, 1);
            assert_eq!(p.strands.len(), d.strands.len());
            for (ps, s) in p.strands.iter().zip(&d.strands) {
                let expect = if ps.closed { s.points.clone() } else { s.period_points() };
                assert_eq!(ps.points, expect);
                assert_eq!(ps.passages, s.passages);
            }
        }
    }
}
