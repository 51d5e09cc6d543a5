//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the library's numerical code; the oracles only
//! share the label types.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::HashMap;

use gaze_dynamics::GazeZone;
use rand::Rng;

/// The nine zones in canonical order, written out independently.
pub const ZONES: [GazeZone; 9] = [
    GazeZone::Front,
    GazeZone::Right,
    GazeZone::Left,
    GazeZone::CenterStack,
    GazeZone::Rearview,
    GazeZone::Speedometer,
    GazeZone::LeftShoulder,
    GazeZone::RightWindshield,
    GazeZone::EyesClosed,
];

/// All ten labels, zones first.
pub const LABELS: [GazeZone; 10] = [
    GazeZone::Front,
    GazeZone::Right,
    GazeZone::Left,
    GazeZone::CenterStack,
    GazeZone::Rearview,
    GazeZone::Speedometer,
    GazeZone::LeftShoulder,
    GazeZone::RightWindshield,
    GazeZone::EyesClosed,
    GazeZone::Unknown,
];

pub fn zone_slot(z: GazeZone) -> Option<usize> {
    ZONES.iter().position(|&x| x == z)
}

/// Labels drawn uniformly over the nine zones and `Unknown`.
pub fn uniform_window<R: Rng>(rng: &mut R, n: usize) -> Vec<GazeZone> {
    (0..n).map(|_| LABELS[rng.random_range(0..LABELS.len())]).collect()
}

/// A noise-free window built from runs, each strictly longer than `w` frames.
pub fn long_run_window<R: Rng>(rng: &mut R, w: usize, runs: usize, max_extra: usize) -> Vec<GazeZone> {
    let mut out = Vec::new();
    let mut prev: Option<GazeZone> = None;
    for _ in 0..runs {
        let z = loop {
            let z = LABELS[rng.random_range(0..LABELS.len())];
            if Some(z) != prev {
                break z;
            }
        };
        let len = w + 1 + rng.random_range(0..=max_extra);
        out.extend(std::iter::repeat_n(z, len));
        prev = Some(z);
    }
    out
}

/// Per-label histogram divided by N.
pub fn histogram_oracle(window: &[GazeZone]) -> [f64; 9] {
    let mut hist: HashMap<GazeZone, usize> = HashMap::new();
    for &z in window {
        *hist.entry(z).or_default() += 1;
    }
    let n = window.len() as f64;
    let mut out = [0.0; 9];
    for (slot, z) in ZONES.iter().enumerate() {
        out[slot] = *hist.get(z).unwrap_or(&0) as f64 / n;
    }
    out
}

/// Maximal runs as (label, length).
pub fn run_lengths(window: &[GazeZone]) -> Vec<(GazeZone, usize)> {
    let mut runs: Vec<(GazeZone, usize)> = Vec::new();
    for &z in window {
        match runs.last_mut() {
            Some((label, len)) if *label == z => *len += 1,
            _ => runs.push((z, 1)),
        }
    }
    runs
}

/// Runs after the first, counted per zone.
pub fn rle_transition_counts(window: &[GazeZone]) -> [usize; 9] {
    let mut counts = [0usize; 9];
    for (z, _) in run_lengths(window).into_iter().skip(1) {
        if let Some(slot) = zone_slot(z) {
            counts[slot] += 1;
        }
    }
    counts
}

pub fn rle_frequency_oracle(window: &[GazeZone], fps: u32) -> [f64; 9] {
    let seconds = window.len() as f64 / fps as f64;
    rle_transition_counts(window).map(|c| c as f64 / seconds)
}

/// Result of replaying the debounce state machine.
#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub counts: [usize; 9],
    /// Inclusive, 0-based segments per zone.
    pub segments: [Vec<(usize, usize)>; 9],
    pub unknown_segments: Vec<(usize, usize)>,
}

/// Literal 1-indexed replay: `last = g_1`; for `i = W+1..=N`, confirm `g_i`
/// when it differs from `last` and more than `W/2` of `g_{i-1}..g_{i-W}`
/// equal it. Segments are derived afterwards from the confirmation list.
pub fn replay_oracle(window: &[GazeZone], w: usize) -> Replay {
    let n = window.len();
    let g = |i: usize| window[i - 1];
    let mut last = g(1);
    let mut confirmations: Vec<(usize, GazeZone)> = Vec::new();
    for i in (w + 1)..=n {
        if g(i) == last {
            continue;
        }
        let mut votes = 0;
        for k in 1..=w {
            if g(i - k) == g(i) {
                votes += 1;
            }
        }
        if votes as f64 > w as f64 / 2.0 {
            confirmations.push((i, g(i)));
            last = g(i);
        }
    }

    let mut counts = [0usize; 9];
    let mut segments: [Vec<(usize, usize)>; 9] = Default::default();
    let mut unknown_segments = Vec::new();
    for (k, &(start, z)) in confirmations.iter().enumerate() {
        let end = confirmations.get(k + 1).map(|&(next, _)| next - 1).unwrap_or(n);
        // Convert to 0-based.
        let seg = (start - 1, end - 1);
        match zone_slot(z) {
            Some(slot) => {
                counts[slot] += 1;
                segments[slot].push(seg);
            }
            None => unknown_segments.push(seg),
        }
    }
    Replay {
        counts,
        segments,
        unknown_segments,
    }
}

pub fn mean_oracle(samples: &[Vec<f64>]) -> Vec<f64> {
    let d = samples[0].len();
    let mut mean = vec![0.0; d];
    for s in samples {
        for j in 0..d {
            mean[j] += s[j];
        }
    }
    mean.iter().map(|m| m / samples.len() as f64).collect()
}

/// Two-pass sample covariance with the `n - 1` denominator.
pub fn covariance_oracle(samples: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = samples[0].len();
    let mean = mean_oracle(samples);
    let mut cov = vec![vec![0.0; d]; d];
    for s in samples {
        for a in 0..d {
            for b in 0..d {
                cov[a][b] += (s[a] - mean[a]) * (s[b] - mean[b]);
            }
        }
    }
    let denom = (samples.len() - 1) as f64;
    for row in cov.iter_mut() {
        for v in row.iter_mut() {
            *v /= denom;
        }
    }
    cov
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        m.swap(col, pivot);
        for row in (col + 1)..n {
            let factor = m[row][col] / m[col][col];
            for k in col..=n {
                m[row][k] -= factor * m[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = m[row][n];
        for k in (row + 1)..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    x
}

/// `(h - mu)^T A^{-1} (h - mu)` through the elimination oracle.
pub fn mahalanobis_oracle(h: &[f64], mu: &[f64], a: &[Vec<f64>]) -> f64 {
    let diff: Vec<f64> = h.iter().zip(mu).map(|(x, m)| x - m).collect();
    let x = gauss_solve(a, &diff);
    diff.iter().zip(&x).map(|(d, x)| d * x).sum()
}

/// `B B^T + shift * I` with B uniform on [-1, 1].
pub fn random_spd<R: Rng>(rng: &mut R, d: usize, shift: f64) -> Vec<Vec<f64>> {
    let b: Vec<Vec<f64>> = (0..d)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut a = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            a[i][j] = (0..d).map(|k| b[i][k] * b[j][k]).sum();
        }
        a[i][i] += shift;
    }
    a
}

pub fn random_vec<R: Rng>(rng: &mut R, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-scale..scale)).collect()
}

/// Average ranks, ties sharing their mean rank.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = ra.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Centered moving average, truncated at the ends.
pub fn moving_average(values: &[f64], half_width: usize) -> Vec<f64> {
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half_width);
            let hi = (i + half_width + 1).min(values.len());
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}
