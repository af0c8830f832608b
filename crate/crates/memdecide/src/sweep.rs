//! Parallel evaluation of sweep grids.

use memdecide_core::{AccuracyPoint, SweepBase, SweepGrid};
use rayon::prelude::*;

/// Evaluate every cell of `grid` on a rayon pool of at most `threads`
/// workers (all cores when `None`). Results come back in grid order and
/// are bit-identical to the sequential `memdecide_core::sweep`.
pub fn parallel_sweep(
    grid: &SweepGrid,
    base: &SweepBase,
    threads: Option<usize>,
) -> anyhow::Result<Vec<AccuracyPoint>> {
    grid.validate()?;
    let cells = grid.cells();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()?;
    let points = pool.install(|| {
        cells
            .par_iter()
            .map(|c| grid.evaluate_cell(base, c))
            .collect::<memdecide_core::Result<Vec<_>>>()
    })?;
    Ok(points)
}
