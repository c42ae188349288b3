//! Motif verdicts from loop homology and word classes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::par;
use crate::polymethod::{trace_loops, CharacteristicLoop, EdgeRule, MethodError, PolygonalMethod, VertexRule};
use crate::tcell::{IVec2, TCell};
use crate::words::{classify_loop, word_of, WordClass, WordVerdict};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verdict {
    Weave,
    Polycatenane,
    Mixed,
    ParallelEssential,
    Invalid,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Verdict {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Weave" => Ok(Verdict::Weave),
            "Polycatenane" => Ok(Verdict::Polycatenane),
            "Mixed" => Ok(Verdict::Mixed),
            "ParallelEssential" => Ok(Verdict::ParallelEssential),
            "Invalid" => Ok(Verdict::Invalid),
            _ => Err(format!("unknown verdict `{s}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LoopEvidence {
    pub word: String,
    pub homology: IVec2,
    pub word_class: WordVerdict,
    pub essential: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<crate::words::SplitPoint>,
    pub raw_cycles: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParallelClass {
    /// Primitive direction, first nonzero coordinate positive.
    pub direction: IVec2,
    /// Indices into the loop list.
    pub loops: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MotifClassification {
    pub cell: String,
    pub method: PolygonalMethod,
    pub verdict: Verdict,
    pub loops: Vec<LoopEvidence>,
    pub parallel_classes: Vec<ParallelClass>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invalid_reason: Option<String>,
    pub shortcut_used: bool,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Primitive vector on the line through `h`, normalized up to sign.
pub fn primitive_direction(h: IVec2) -> IVec2 {
    let g = gcd(h.0, h.1);
    if g == 0 {
        return IVec2::ZERO;
    }
    let p = IVec2(h.0 / g, h.1 / g);
    if p.0 < 0 || (p.0 == 0 && p.1 < 0) {
        -p
    } else {
        p
    }
}

/// Group the essential homology vectors by direction; null vectors are
/// skipped. Classes appear in order of first member.
pub fn parallel_classes(homologies: &[IVec2]) -> Vec<ParallelClass> {
    let mut classes: Vec<ParallelClass> = Vec::new();
    for (i, h) in homologies.iter().enumerate() {
        if h.is_zero() {
            continue;
        }
        match classes.iter_mut().find(|c| c.direction.parallel_to(*h)) {
            Some(c) => c.loops.push(i),
            None => classes.push(ParallelClass { direction: primitive_direction(*h), loops: vec![i] }),
        }
    }
    classes
}

/// Verdicts known without tracing: branched even twists on any cell and
/// crossed even twists on cubic cells.
pub fn structural_shortcuts(cell: &TCell, method: PolygonalMethod) -> Option<Verdict> {
    let EdgeRule::DoubleLine(m) = method.edge_rule() else { return None };
    if m % 2 == 1 {
        return None;
    }
    match method.vertex_rule() {
        VertexRule::Branched => Some(Verdict::Polycatenane),
        VertexRule::Crossed if cell.vertex_ids().all(|v| cell.degree(v) == 3) => Some(Verdict::Polycatenane),
        VertexRule::Crossed => None,
    }
}

/// Combine per-loop data into a verdict.
pub fn verdict_of(evidence: &[LoopEvidence], classes: &[ParallelClass]) -> (Verdict, Option<String>) {
    if let Some(i) = evidence.iter().position(|e| e.word_class == WordVerdict::Knotted) {
        let why = match evidence[i].witnesses.first() {
            Some(w) => format!(
                "loop {} ({}) is knotted at {} {} ({}): divided curves {} | {}",
                i,
                evidence[i].word,
                match w.kind {
                    crate::words::SplitKind::Vertex => "vertex",
                    crate::words::SplitKind::Twist => "twisted edge",
                },
                w.at,
                match w.kind {
                    crate::words::SplitKind::Vertex => format!("degree {}", w.degree),
                    crate::words::SplitKind::Twist => format!("{} twists", w.degree),
                },
                w.left,
                w.right
            ),
            None => format!("loop {} ({}) is knotted", i, evidence[i].word),
        };
        return (Verdict::Invalid, Some(why));
    }
    let essential = evidence.iter().filter(|e| e.essential).count();
    let verdict = if essential == 0 {
        Verdict::Polycatenane
    } else if essential < evidence.len() {
        Verdict::Mixed
    } else if classes.len() >= 2 {
        Verdict::Weave
    } else {
        Verdict::ParallelEssential
    };
    (verdict, None)
}

pub fn loop_evidence(cell: &TCell, lp: &CharacteristicLoop) -> LoopEvidence {
    let WordClass { verdict, witnesses } = classify_loop(cell, lp);
    LoopEvidence {
        word: word_of(cell, lp).to_string(),
        homology: lp.homology,
        word_class: verdict,
        essential: lp.is_essential(),
        witnesses: if verdict == WordVerdict::Knotted { witnesses } else { Vec::new() },
        raw_cycles: lp.raw_cycles,
    }
}

pub fn classify_motif(cell: &TCell, method: PolygonalMethod) -> Result<MotifClassification, MethodError> {
    let loops = trace_loops(cell, method)?;
    let evidence = par::map(&loops, |lp| loop_evidence(cell, lp));
    let homologies: Vec<IVec2> = loops.iter().map(|l| l.homology).collect();
    let classes = parallel_classes(&homologies);
    let (verdict, invalid_reason) = verdict_of(&evidence, &classes);
    let shortcut = structural_shortcuts(cell, method);
    if let Some(s) = shortcut {
        if s != verdict {
            log::warn!("{} {}: shortcut says {s}, classifier says {verdict}", cell.name(), method);
        }
    }
    Ok(MotifClassification {
        cell: cell.name().to_string(),
        method,
        verdict,
        loops: evidence,
        parallel_classes: classes,
        invalid_reason,
        shortcut_used: shortcut.is_some(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tcell::{builtin_tcell, Builtin};

    fn verdict(b: Builtin, m: &str) -> Verdict {
        classify_motif(&builtin_tcell(b), m.parse().unwrap()).unwrap().verdict
    }

    #[test]
    fn parallel_grouping() {
        let cls = parallel_classes(&[IVec2(1, 0), IVec2(2, 0), IVec2(0, 1), IVec2(0, 0), IVec2(-3, 0)]);
        assert_eq!(cls.len(), 2);
        assert_eq!(cls[0].loops, vec![0, 1, 4]);
        assert_eq!(cls[1].loops, vec![2]);
        assert_eq!(primitive_direction(IVec2(-4, 6)), IVec2(2, -3));
    }

    #[test]
    fn single_direction_is_not_a_weave() {
        let ev = LoopEvidence {
            word: "h+".into(),
            homology: IVec2(1, 0),
            word_class: WordVerdict::Simple,
            essential: true,
            witnesses: vec![],
            raw_cycles: 1,
        };
        let classes = parallel_classes(&[ev.homology]);
        assert_eq!(verdict_of(&[ev], &classes).0, Verdict::ParallelEssential);
    }

    #[test]
    fn hexagonal() {
        assert_eq!(verdict(Builtin::Hexagonal, "cr:2"), Verdict::Polycatenane);
        assert_eq!(verdict(Builtin::Hexagonal, "br:3"), Verdict::Weave);
        for b in Builtin::ALL {
            assert_eq!(verdict(b, "br:0"), Verdict::Polycatenane, "{b}");
        }
    }

    #[test]
    fn shortcuts() {
        let kag = builtin_tcell(Builtin::Kagome);
        assert_eq!(structural_shortcuts(&kag, "br:2".parse().unwrap()), Some(Verdict::Polycatenane));
        let hex = builtin_tcell(Builtin::Hexagonal);
        assert_eq!(structural_shortcuts(&hex, "cr:4".parse().unwrap()), Some(Verdict::Polycatenane));
        let sq = builtin_tcell(Builtin::Square);
        assert_eq!(structural_shortcuts(&sq, "cr:2".parse().unwrap()), None);
        assert_eq!(structural_shortcuts(&sq, "br:3".parse().unwrap()), None);
    }

    #[test]
    fn square_crossed_even_runs_straight() {
        let r = classify_motif(&builtin_tcell(Builtin::Square), "cr:2".parse().unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::Weave);
        assert!(!r.shortcut_used);
    }
}
