//! Deterministic low-discrepancy sampling (Halton sequence).

use alloc::vec::Vec;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in the given base.
fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let base = u64::from(base);
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    out
}

/// `n` Halton points scaled into the axis-aligned box `bounds` (one `(lo, hi)`
/// pair per dimension). Point `k` uses Halton index `k + 1`, so the box corner
/// `lo` is never emitted.
///
/// Panics if the box has more dimensions than the built-in prime table.
pub fn halton_box(bounds: &[(f64, f64)], n: usize) -> Vec<Vec<f64>> {
    assert!(bounds.len() <= PRIMES.len(), "halton_box supports at most 16 dimensions");
    (0..n)
        .map(|k| {
            bounds
                .iter()
                .zip(PRIMES.iter())
                .map(|(&(lo, hi), &p)| lo + (hi - lo) * radical_inverse(k as u64 + 1, p))
                .collect()
        })
        .collect()
}
