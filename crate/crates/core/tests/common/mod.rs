#![allow(dead_code)]

use polylink::polymethod::PolygonalMethod;
use polylink::tcell::{builtin_tcell, Builtin, EdgeId, TCell, VertexId};
use proptest::prelude::*;

pub const GENERATORS: [[[i64; 2]; 2]; 4] = [[[1, 1], [0, 1]], [[1, 0], [1, 1]], [[0, -1], [1, 0]], [[1, 0], [0, -1]]];

#[derive(Clone, Debug)]
pub enum Move {
    Relabel(u64),
    Shift(usize, usize),
    Basis(Vec<usize>),
    Mirror,
    Reverse(usize),
}

pub fn apply(cell: &TCell, mv: &Move) -> TCell {
    match mv {
        Move::Relabel(seed) => {
            let mut labels: Vec<String> = (0..cell.edge_count()).map(|i| format!("x{i}")).collect();
            let n = labels.len();
            let mut s = *seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                labels.swap(i, (s >> 33) as usize % (i + 1));
            }
            cell.relabeled(&labels)
        }
        Move::Shift(v, k) => {
            let v = VertexId(v % cell.vertex_count());
            cell.with_rotation_shifted(v, *k)
        }
        Move::Basis(gens) => {
            let mut m = [[1, 0], [0, 1]];
            for g in gens {
                let a = GENERATORS[g % GENERATORS.len()];
                m = [
                    [a[0][0] * m[0][0] + a[0][1] * m[1][0], a[0][0] * m[0][1] + a[0][1] * m[1][1]],
                    [a[1][0] * m[0][0] + a[1][1] * m[1][0], a[1][0] * m[0][1] + a[1][1] * m[1][1]],
                ];
            }
            cell.transformed(m).expect("unimodular")
        }
        Move::Mirror => cell.mirrored(),
        Move::Reverse(e) => cell.with_edge_reversed(EdgeId(e % cell.edge_count())),
    }
}

pub fn any_move() -> impl Strategy<Value = Move> {
    prop_oneof![
        any::<u64>().prop_map(Move::Relabel),
        (0..8usize, 0..8usize).prop_map(|(v, k)| Move::Shift(v, k)),
        prop::collection::vec(0..4usize, 1..4).prop_map(Move::Basis),
        Just(Move::Mirror),
        (0..16usize).prop_map(Move::Reverse),
    ]
}

pub fn any_builtin() -> impl Strategy<Value = Builtin> {
    prop::sample::select(Builtin::ALL.to_vec())
}

pub fn any_method() -> impl Strategy<Value = PolygonalMethod> {
    prop::sample::select(PolygonalMethod::sweep(0..=4))
}

/// Covers of the triangular, square and kagome cells with some edges
/// deleted, so vertex degrees and face sizes vary.
pub fn random_cell() -> impl Strategy<Value = TCell> {
    (
        prop::sample::select(vec![Builtin::Triangular, Builtin::Square, Builtin::Kagome]),
        1..=3usize,
        1..=3usize,
        prop::collection::vec(any::<prop::sample::Index>(), 0..6),
    )
        .prop_map(|(b, nx, ny, picks)| {
            let mut cell = builtin_tcell(b).cover(nx, ny);
            for p in picks {
                let r = cell.removable_edges();
                if r.is_empty() {
                    break;
                }
                cell = cell.with_edge_removed(r[p.index(r.len())]);
            }
            cell
        })
}

/// Every builtin and every method that applies to it.
pub fn builtin_pairs(max_twists: u32) -> Vec<(TCell, PolygonalMethod)> {
    Builtin::ALL
        .iter()
        .flat_map(|b| {
            let cell = builtin_tcell(*b);
            PolygonalMethod::sweep(0..=max_twists)
                .into_iter()
                .filter(move |m| m.check_applicable(&builtin_tcell(*b)).is_ok())
                .map(move |m| (cell.clone(), m))
        })
        .collect()
}
