//! Pattern synthesis: every row of a binary target is an independent
//! bipartite regulation problem; rows run in parallel.

use bireg_core::turing::{simulate_row, TuringParams};
use bireg_core::{EngineError, Pixel};
use rayon::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum TuringError {
    #[error("target has no rows")]
    Empty,
    #[error("row {row} has {found} pixels, expected {expected}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("row {row}: {source}")]
    Row { row: usize, source: EngineError },
}

/// Final outputs `y_i(t_final)`, one vector per target row. The first failing
/// row (by index) is reported.
pub fn run_turing(target: &[Vec<Pixel>], params: &TuringParams) -> Result<Vec<Vec<f64>>, TuringError> {
    let width = target.first().ok_or(TuringError::Empty)?.len();
    for (row, pixels) in target.iter().enumerate() {
        if pixels.len() != width || pixels.is_empty() {
            return Err(TuringError::Ragged { row, expected: width, found: pixels.len() });
        }
    }
    let results: Vec<Result<Vec<f64>, EngineError>> = target.par_iter().map(|row| simulate_row(row, params)).collect();
    results.into_iter().enumerate().map(|(row, r)| r.map_err(|source| TuringError::Row { row, source })).collect()
}

/// Fraction of pixels whose output sign matches the target: dark below
/// zero, white above.
pub fn sign_match_rate(target: &[Vec<Pixel>], output: &[Vec<f64>]) -> f64 {
    let mut hits = 0usize;
    let mut total = 0usize;
    for (t_row, y_row) in target.iter().zip(output) {
        for (p, y) in t_row.iter().zip(y_row) {
            total += 1;
            let ok = match p {
                Pixel::Dark => *y < 0.0,
                Pixel::White => *y > 0.0,
            };
            hits += ok as usize;
        }
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Wavy diagonal zebra stripes, `period` pixels per colour band.
pub fn stripe_target(width: usize, height: usize, period: usize) -> Vec<Vec<Pixel>> {
    let period = period.max(1);
    (0..height)
        .map(|y| {
            // triangle-wave wobble with amplitude `period`
            let phase = y % (4 * period);
            let wobble = if phase < 2 * period { phase } else { 4 * period - phase };
            (0..width)
                .map(|x| if ((x + y / 2 + wobble) / period).is_multiple_of(2) { Pixel::Dark } else { Pixel::White })
                .collect()
        })
        .collect()
}
