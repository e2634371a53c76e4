//! Row-signal conditioning: de-trending and chip slicing.

use crate::chips::Chip;
use crate::rll::RllScheme;
use crate::scalar::{Sample, Scalar};

/// Odd moving-average window: two preamble lengths worth of rows.
pub fn detrend_window(rows_per_chip: f64, scheme: RllScheme) -> usize {
    let w = (rows_per_chip * 2.0 * scheme.preamble().len() as f64)
        .round()
        .max(1.0) as usize;
    w | 1
}

/// Subtract a centred moving average. Windows are truncated at the edges.
pub fn detrend<T: Sample>(row_luma: &[T], window: usize) -> Vec<T> {
    let n = row_luma.len();
    let half = window / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(T::zero());
    let mut acc = T::zero();
    for &v in row_luma {
        acc = acc + v;
        prefix.push(acc);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            let mean = (prefix[hi] - prefix[lo]) / T::from_usize(hi - lo).expect("row count fits");
            row_luma[i] - mean
        })
        .collect()
}

/// Slice with chip boundaries at `phase + k·rows_per_chip` (in rows). A row
/// belongs to the chip containing its centre; only whole chips are returned.
pub fn binarize_with_phase<T: Sample>(signal: &[T], rows_per_chip: f64, phase: f64) -> Vec<Chip> {
    chip_sums(signal, rows_per_chip, phase)
        .into_iter()
        .map(|s| (s > T::zero()) as Chip)
        .collect()
}

/// Slice with the first chip starting at row 0.
pub fn binarize<T: Sample>(signal: &[T], rows_per_chip: f64) -> Vec<Chip> {
    binarize_with_phase(signal, rows_per_chip, 0.0)
}

/// Chip phase maximizing the total chip energy `Σ|chip sum|`.
pub fn best_phase<T: Sample>(signal: &[T], rows_per_chip: f64) -> f64 {
    let steps = ((rows_per_chip * 2.0).ceil() as usize).max(1);
    let mut best = (0.0, f64::NEG_INFINITY);
    for j in 0..steps {
        let phase = rows_per_chip * j as f64 / steps as f64;
        let sums = chip_sums(signal, rows_per_chip, phase);
        if sums.is_empty() {
            continue;
        }
        // normalize so phases yielding one chip fewer are not penalized
        let score = sums.iter().map(|s| Scalar::to_f64(*s).abs()).sum::<f64>() / sums.len() as f64;
        if score > best.1 {
            best = (phase, score);
        }
    }
    best.0
}

/// Slice at the best chip phase.
pub fn binarize_aligned<T: Sample>(signal: &[T], rows_per_chip: f64) -> Vec<Chip> {
    binarize_with_phase(signal, rows_per_chip, best_phase(signal, rows_per_chip))
}

fn chip_sums<T: Sample>(signal: &[T], rows_per_chip: f64, phase: f64) -> Vec<T> {
    let n = signal.len() as f64;
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let lo = phase + k as f64 * rows_per_chip;
        let hi = lo + rows_per_chip;
        if hi > n + 1e-9 {
            break;
        }
        // rows whose centre r + 0.5 lies in [lo, hi)
        let first = (lo - 0.5).ceil().max(0.0) as usize;
        let last = ((hi - 0.5).ceil().max(0.0) as usize).min(signal.len());
        let mut s = T::zero();
        for &v in &signal[first.min(last)..last] {
            s = s + v;
        }
        out.push(s);
        k += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows_from_chips(chips: &[Chip], rpc: usize) -> Vec<f64> {
        chips
            .iter()
            .flat_map(|&c| std::iter::repeat_n(c as f64, rpc))
            .collect()
    }

    #[test]
    fn constant_detrends_to_zero() {
        let out = detrend(&[0.7f64; 50], 9);
        assert!(out.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn alternating_keeps_sign() {
        let rows: Vec<f64> = (0..40).map(|i| (i % 2) as f64).collect();
        let out = detrend(&rows, 7);
        for (r, o) in rows.iter().zip(&out) {
            assert_eq!(*r > 0.5, *o > 0.0);
        }
    }

    #[test]
    fn window_is_odd() {
        assert_eq!(detrend_window(4.0, RllScheme::Manchester), 49);
        assert_eq!(detrend_window(16.0, RllScheme::Manchester), 193);
        assert_eq!(detrend_window(1.0, RllScheme::EightB10B) % 2, 1);
    }

    #[test]
    fn ramp_is_removed() {
        let chips = crate::rll::encode_rll(
            &[1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1, 0, 0, 0, 1, 0],
            RllScheme::Manchester,
        )
        .unwrap();
        let mut frame = RllScheme::Manchester.preamble().to_vec();
        frame.extend(&chips);
        let rows = rows_from_chips(&frame, 4);
        let ramped: Vec<f64> = rows
            .iter()
            .enumerate()
            .map(|(i, v)| 0.3 * v + 0.2 + 0.004 * i as f64)
            .collect();
        let w = detrend_window(4.0, RllScheme::Manchester);
        assert_eq!(binarize(&detrend(&ramped, w), 4.0), frame);
    }

    #[test]
    fn trivial_binarize() {
        assert_eq!(binarize(&[0.1f32; 12], 3.0), vec![1; 4]);
        assert_eq!(binarize(&[0.2, -0.1, 0.3, -0.4], 1.0), vec![1, 0, 1, 0]);
        assert_eq!(binarize(&[1.0f64; 10], 4.0).len(), 2);
    }

    #[test]
    fn phase_search_finds_offset() {
        let chips: Vec<Chip> = vec![0, 1, 1, 1, 0, 0, 1, 0, 0, 1, 1, 0, 1, 0];
        let mut rows = vec![-0.5f64; 3];
        rows.extend(rows_from_chips(&chips, 8).iter().map(|v| v - 0.5));
        let out = binarize_aligned(&rows, 8.0);
        let pos = crate::rll::find_pattern(&out, &chips);
        assert_eq!(pos.len(), 1, "{out:?}");
    }
}
