//! Batch classification over builtin cells, their covers and a range of
//! methods.

use serde::Serialize;

use crate::classify::{classify_motif, Verdict};
use crate::lift_oracle::lift_trace_auto;
use crate::par;
use crate::polymethod::PolygonalMethod;
use crate::tcell::{builtin_tcell, Builtin, TCell};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SweepRow {
    pub cell: String,
    pub method: PolygonalMethod,
    pub verdict: Verdict,
    pub oracle: Verdict,
}

/// Every builtin cell and its `k`x`k` covers for `k` up to `max_cover`.
pub fn sweep_cells(max_cover: usize) -> Vec<TCell> {
    let mut cells = Vec::new();
    for b in Builtin::ALL {
        let base = builtin_tcell(b);
        for k in 1..=max_cover.max(1) {
            cells.push(if k == 1 { base.clone() } else { base.cover(k, k) });
        }
    }
    cells
}

fn jobs(cells: &[TCell], max_twists: u32) -> Vec<(&TCell, PolygonalMethod)> {
    cells
        .iter()
        .flat_map(|c| {
            PolygonalMethod::sweep(0..=max_twists)
                .into_iter()
                .filter(move |m| m.check_applicable(c).is_ok())
                .map(move |m| (c, m))
        })
        .collect()
}

fn row(cell: &TCell, method: PolygonalMethod) -> SweepRow {
    let verdict = classify_motif(cell, method).expect("applicable").verdict;
    let oracle = lift_trace_auto(cell, method).map(|r| r.verdict).unwrap_or(Verdict::Invalid);
    SweepRow { cell: cell.name().to_string(), method, verdict, oracle }
}

pub fn run_sequential(cells: &[TCell], max_twists: u32) -> Vec<SweepRow> {
    par::map_seq(&jobs(cells, max_twists), |(c, m)| row(c, *m))
}

/// Same rows as [`run_sequential`], in the same order, computed on the
/// thread pool when the `parallel` feature is on.
pub fn run_parallel(cells: &[TCell], max_twists: u32) -> Vec<SweepRow> {
    par::map(&jobs(cells, max_twists), |(c, m)| row(c, *m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_matches_sequential() {
        let cells = sweep_cells(2);
        let a = run_sequential(&cells, 2);
        assert_eq!(a, run_parallel(&cells, 2));
        assert!(a.iter().all(|r| r.verdict == r.oracle));
    }
}
