//! Small numerical-statistics toolkit shared by the exact-enumeration and
//! Monte-Carlo layers: deterministic summation, streaming log-sum-exp,
//! batch-means autocorrelation, jackknife errors, and importance-sampling
//! effective sample sizes.
//!
//! Everything here is deliberately order-deterministic: parallel callers
//! produce per-chunk partials in index order and combine them with the pairwise
//! reducers below, so results are bit-identical regardless of thread count.

/// Sums a slice by pairwise (tree) reduction.
///
/// The bracketing depends only on the slice length, never on timing, so the
/// result is deterministic; the O(log n) error growth is also much better than
/// left-to-right accumulation for the 1e6+ term sums used by the enumerators.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Sample mean of a slice (0 for an empty slice).
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        pairwise_sum(xs) / xs.len() as f64
    }
}

/// Sample mean and its standard error `sd / sqrt(n)` (unbiased variance).
///
/// Slices with fewer than two elements get a standard error of 0; callers that
/// need to flag such estimates as unreliable do so themselves.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let m = mean(xs);
    if n == 1 {
        return (m, 0.0);
    }
    let devsq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let var = pairwise_sum(&devsq) / (n - 1) as f64;
    (m, (var / n as f64).sqrt())
}

/// Unbiased sample variance (0 for slices shorter than 2).
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let devsq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&devsq) / (n - 1) as f64
}

/// Median (average of the two central order statistics for even lengths).
///
/// # Panics
/// Panics on an empty slice.
pub fn median(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty(), "median of empty slice");
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("median: NaN in data"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Streaming log-sum-exp accumulator: maintains `log Σ exp(w_i)` without
/// materializing the terms, stable for arbitrarily large magnitude `w_i`.
///
/// Partial accumulators combine associatively via [`LogSumExp::merge`]; to stay
/// deterministic under parallelism, merge partials in a fixed (tree) order.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    /// Σ exp(w_i − max) over terms seen so far.
    scaled_sum: f64,
    count: u64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    /// Empty accumulator (`value()` = −∞).
    pub fn new() -> Self {
        LogSumExp { max: f64::NEG_INFINITY, scaled_sum: 0.0, count: 0 }
    }

    /// Adds one term with log-weight `w`.
    pub fn add(&mut self, w: f64) {
        debug_assert!(!w.is_nan(), "log-weight must not be NaN");
        self.count += 1;
        if w == f64::NEG_INFINITY {
            return; // exp(-inf) contributes nothing
        }
        if w <= self.max {
            self.scaled_sum += (w - self.max).exp();
        } else {
            self.scaled_sum = self.scaled_sum * (self.max - w).exp() + 1.0;
            self.max = w;
        }
    }

    /// Merges another accumulator into this one.
    pub fn merge(&mut self, other: &LogSumExp) {
        self.count += other.count;
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if other.max <= self.max {
            self.scaled_sum += other.scaled_sum * (other.max - self.max).exp();
        } else {
            self.scaled_sum = self.scaled_sum * (self.max - other.max).exp() + other.scaled_sum;
            self.max = other.max;
        }
    }

    /// `log Σ exp(w_i)`; −∞ when no (finite) term has been added.
    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled_sum.ln()
        }
    }

    /// Number of terms added (−∞ terms included).
    pub fn count(&self) -> u64 {
        self.count
    }
}

/// Merges per-chunk accumulators in a fixed pairwise-tree order. The bracketing
/// depends only on the number of chunks, so results do not depend on which
/// thread produced which partial.
pub fn merge_log_sum_exp(parts: &[LogSumExp]) -> LogSumExp {
    match parts.len() {
        0 => LogSumExp::new(),
        1 => parts[0],
        n => {
            let mid = n / 2;
            let mut left = merge_log_sum_exp(&parts[..mid]);
            let right = merge_log_sum_exp(&parts[mid..]);
            left.merge(&right);
            left
        }
    }
}

/// Means of consecutive length-`batch_len` batches (trailing remainder
/// dropped). Used for batch-means error bars on correlated Markov-chain series.
pub fn batch_means(series: &[f64], batch_len: usize) -> Vec<f64> {
    assert!(batch_len > 0, "batch length must be positive");
    series.chunks_exact(batch_len).map(mean).collect()
}

/// Batch-means standard error for the mean of a correlated series:
/// `sd(batch means) / sqrt(#batches)`. Returns 0 when fewer than two complete
/// batches exist.
pub fn batch_means_se(series: &[f64], batch_len: usize) -> f64 {
    let bm = batch_means(series, batch_len);
    if bm.len() < 2 {
        return 0.0;
    }
    (variance(&bm) / bm.len() as f64).sqrt()
}

/// Batch-means estimate of the integrated autocorrelation time:
/// `batch_len * Var(batch means) / Var(series)`.
///
/// For i.i.d. data this converges to 1, and for a chain with autocorrelation it
/// approximates `1 + 2 Σ_k ρ_k` once `batch_len` exceeds the correlation time.
/// Returns `None` when the series variance vanishes or too few batches exist.
pub fn integrated_autocorrelation(series: &[f64], batch_len: usize) -> Option<f64> {
    let v = variance(series);
    if v <= 0.0 {
        return None;
    }
    let bm = batch_means(series, batch_len);
    if bm.len() < 2 {
        return None;
    }
    Some(batch_len as f64 * variance(&bm) / v)
}

/// Jackknife standard error from leave-one-out estimates:
/// `SE² = (n−1)/n · Σ (θ_(i) − θ̄_(·))²`.
///
/// Returns 0 for fewer than two leave-one-out values.
pub fn jackknife_se(leave_one_out: &[f64]) -> f64 {
    let n = leave_one_out.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(leave_one_out);
    let devsq: Vec<f64> = leave_one_out.iter().map(|x| (x - m) * (x - m)).collect();
    ((n - 1) as f64 / n as f64 * pairwise_sum(&devsq)).sqrt()
}

/// Effective sample size of a set of nonnegative importance weights:
/// `(Σ w)² / Σ w²`. Equals `n` for constant weights and degrades toward 1 as
/// the weights concentrate. Returns 0 for empty or all-zero weights.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s: f64 = pairwise_sum(weights);
    let sq: Vec<f64> = weights.iter().map(|w| w * w).collect();
    let s2: f64 = pairwise_sum(&sq);
    if s2 <= 0.0 {
        0.0
    } else {
        s * s / s2
    }
}
