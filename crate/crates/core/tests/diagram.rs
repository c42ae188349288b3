mod common;

use polylink::classify::{classify_motif, Verdict};
use polylink::diagram::{build_diagram, build_diagram_with, emit_patch_svg, emit_svg, DiagramError, DiagramOptions, SvgStyle};
use polylink::polymethod::{trace_loops, PolygonalMethod};
use polylink::tcell::{builtin_tcell, Builtin, IVec2};
use proptest::prelude::*;

fn relaxed() -> DiagramOptions {
    DiagramOptions { allow_obstruction: true }
}

#[test]
fn hexagonal_crossed_even_unfolds_to_rings() {
    let d = build_diagram(&builtin_tcell(Builtin::Hexagonal), PolygonalMethod::crossed(2)).unwrap();
    let p = d.unfold(3, 3);
    assert_eq!(p.closed_count(), 9);
    assert_eq!(p.open_count(), 0);
}

#[test]
fn square_plain_weave_unfolds_to_threads() {
    let sq = builtin_tcell(Builtin::Square);
    let d = build_diagram_with(&sq, PolygonalMethod::crossed_single(), relaxed()).unwrap();
    assert_eq!(d.crossings.len(), 1);
    let mut dirs: Vec<IVec2> = d.strands.iter().map(|s| s.closing).collect();
    dirs.sort();
    assert_eq!(dirs, vec![IVec2(0, 1), IVec2(1, 0)]);
    let p = d.unfold(3, 3);
    assert_eq!(p.open_count(), 6);
    assert_eq!(p.strands.iter().filter(|s| s.component == 0).count(), 3);
}

#[test]
fn plain_weave_obstruction_names_a_component() {
    let sq = builtin_tcell(Builtin::Square);
    let err = build_diagram(&sq, PolygonalMethod::crossed_single()).unwrap_err();
    assert!(matches!(err, DiagramError::ParityObstruction { component: 0 | 1 }));
    assert!(err.to_string().contains("component"));
}

#[test]
fn branched_even_is_linked_rings() {
    let d = build_diagram(&builtin_tcell(Builtin::Hexagonal), PolygonalMethod::branched(2)).unwrap();
    assert_eq!(d.crossings.len(), 6);
    assert!(d.is_alternating());
    assert!(d.strands.iter().all(|s| s.closing == IVec2::ZERO));
}

#[test]
fn untwisted_branched_has_no_gaps() {
    for b in Builtin::ALL {
        let d = build_diagram(&builtin_tcell(b), PolygonalMethod::branched(0)).unwrap();
        assert!(d.crossings.is_empty());
        assert!(d.strands.iter().all(|s| s.passages.is_empty()));
        let svg = emit_svg(&d, &SvgStyle { markers: true, ..SvgStyle::default() });
        assert!(!svg.contains("<circle"));
    }
}

#[test]
fn twist_regions_hold_the_twists() {
    let d = build_diagram(&builtin_tcell(Builtin::Hexagonal), PolygonalMethod::branched(3)).unwrap();
    assert_eq!(d.twist_regions.len(), 3);
    assert!(d.twist_regions.iter().all(|t| t.twists == 3));
    let style = SvgStyle { markers: true, ..SvgStyle::default() };
    assert_eq!(emit_svg(&d, &style).matches(r#"class="twist""#).count(), 9);
}

#[test]
fn component_map_points_at_loops() {
    for (cell, m) in common::builtin_pairs(3) {
        let Ok(d) = build_diagram_with(&cell, m, relaxed()) else { continue };
        let loops = trace_loops(&cell, m).unwrap();
        assert_eq!(d.component_map.len(), d.strands.len());
        for (s, &l) in d.strands.iter().zip(&d.component_map) {
            assert!(s.closing.parallel_to(loops[l].homology) || s.closing.is_zero());
            assert_eq!(s.closing.is_zero(), loops[l].homology.is_zero(), "{} {m}", cell.name());
        }
    }
}

#[test]
fn patch_svg_is_stable() {
    let cell = builtin_tcell(Builtin::Kagome);
    let style = SvgStyle { scale: 120.0, ..SvgStyle::default() };
    let a = emit_patch_svg(&build_diagram(&cell, PolygonalMethod::crossed(1)).unwrap().unfold(2, 3), &style);
    let b = emit_patch_svg(&build_diagram(&cell, PolygonalMethod::crossed(1)).unwrap().unfold(2, 3), &style);
    assert_eq!(a, b);
    assert!(!a.contains("-0.000"));
    assert!(a.starts_with("<svg"));
}

#[test]
fn json_dump_has_the_three_keys() {
    let d = build_diagram(&builtin_tcell(Builtin::Triangular), PolygonalMethod::crossed(1)).unwrap();
    let v = d.to_json();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["component_map", "crossings", "strands"]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_cells_draw_consistently(cell in common::random_cell(), m in common::any_method()) {
        prop_assume!(m.check_applicable(&cell).is_ok());
        let d = match build_diagram_with(&cell, m, relaxed()) {
            Ok(d) => d,
            Err(DiagramError::Layout(_)) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let twists = m.twists().unwrap_or(0) as usize;
        prop_assert_eq!(d.twist_crossings(), twists * cell.edge_count());
        prop_assert_eq!(d.obstructed.is_empty(), d.is_alternating());
        let closed = d.strands.iter().filter(|s| s.closing.is_zero()).count();
        let v = classify_motif(&cell, m).unwrap().verdict;
        if v == Verdict::Polycatenane {
            prop_assert_eq!(closed, d.strands.len());
        }
        if v == Verdict::Weave {
            prop_assert_eq!(closed, 0);
        }
    }
}
