//! Toeplitz products `y_p = Σ_n t(p − n) x_n` over integer index windows.
//!
//! Small problems use the direct double loop; larger ones embed the
//! product in a linear convolution evaluated with FFTs.

use std::ops::RangeInclusive;

use num_complex::Complex64;
use rustfft::FftPlanner;

const DIRECT_LIMIT: usize = 64 * 64;

/// Applies the Toeplitz matrix with symbol `t` mapping a vector indexed by
/// `cols.start()..` (length `x.len()`) to rows `rows`.
pub fn apply(
    symbol: impl Fn(i64) -> Complex64,
    rows: RangeInclusive<i64>,
    cols_start: i64,
    x: &[Complex64],
) -> Vec<Complex64> {
    let nrows = (rows.end() - rows.start() + 1).max(0) as usize;
    if nrows == 0 || x.is_empty() {
        return vec![Complex64::new(0.0, 0.0); nrows];
    }
    if nrows * x.len() <= DIRECT_LIMIT {
        apply_direct(symbol, rows, cols_start, x)
    } else {
        apply_fft(symbol, rows, cols_start, x)
    }
}

pub fn apply_direct(
    symbol: impl Fn(i64) -> Complex64,
    rows: RangeInclusive<i64>,
    cols_start: i64,
    x: &[Complex64],
) -> Vec<Complex64> {
    rows.map(|p| {
        x.iter()
            .enumerate()
            .map(|(j, &v)| symbol(p - (cols_start + j as i64)) * v)
            .sum()
    })
    .collect()
}

pub fn apply_fft(
    symbol: impl Fn(i64) -> Complex64,
    rows: RangeInclusive<i64>,
    cols_start: i64,
    x: &[Complex64],
) -> Vec<Complex64> {
    let (p_lo, p_hi) = (*rows.start(), *rows.end());
    let n_hi = cols_start + x.len() as i64 - 1;
    // Symbol window d ∈ [d_lo, d_hi]; y_p = Σ_j s[p − cols_start − j − d_lo] x_j
    let d_lo = p_lo - n_hi;
    let d_hi = p_hi - cols_start;
    let ns = (d_hi - d_lo + 1) as usize;
    let size = (ns + x.len() - 1).next_power_of_two();

    let mut a = vec![Complex64::new(0.0, 0.0); size];
    for (k, slot) in a.iter_mut().enumerate().take(ns) {
        *slot = symbol(d_lo + k as i64);
    }
    let mut b = vec![Complex64::new(0.0, 0.0); size];
    b[..x.len()].copy_from_slice(x);

    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    fwd.process(&mut a);
    fwd.process(&mut b);
    a.iter_mut().zip(&b).for_each(|(u, v)| *u *= v);
    inv.process(&mut a);
    let scale = 1.0 / size as f64;
    // conv[k] = Σ_j s[k − j] x_j with symbol offset d = d_lo + k − j, so
    // p − cols_start − j = d_lo + k − j  ⇒  k = p − cols_start − d_lo.
    (p_lo..=p_hi)
        .map(|p| a[(p - cols_start - d_lo) as usize] * scale)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn fft_matches_direct(
            x in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..40),
            lo in -30i64..5,
            len in 1i64..50,
            start in -20i64..20,
        ) {
            let x: Vec<_> = x.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
            let sym = |d: i64| Complex64::new(1.0, 0.3 * d as f64).inv();
            let rows = lo..=lo + len - 1;
            let u = apply_direct(sym, rows.clone(), start, &x);
            let v = apply_fft(sym, rows, start, &x);
            for (a, b) in u.iter().zip(&v) {
                prop_assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_symbol() {
        let x: Vec<_> = (0..5).map(|k| Complex64::new(k as f64, 0.0)).collect();
        let delta = |d: i64| Complex64::new(if d == 0 { 1.0 } else { 0.0 }, 0.0);
        let y = apply_fft(delta, -2..=2, -2, &x);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}
