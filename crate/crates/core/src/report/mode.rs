use super::hpd::MIN_SAMPLES;
use crate::error::{Error, Result};

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Midpoint of the fullest Freedman–Diaconis histogram bin; ties go to the
/// smallest midpoint. With a zero interquartile range the most frequent value
/// is returned instead.
pub fn marginal_mode(samples: &[f64]) -> Result<f64> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::Usage(format!(
            "mode needs at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("mode samples must be finite".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(mode_sorted(&s))
}

pub(crate) fn mode_sorted(s: &[f64]) -> f64 {
    let n = s.len();
    let iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
    let (min, max) = (s[0], s[n - 1]);
    if !(iqr > 0.0) || !(max > min) {
        return most_frequent(s);
    }
    let width = 2.0 * iqr / (n as f64).cbrt();
    let n_bins = (((max - min) / width).ceil() as usize).max(1);
    let mut counts = vec![0usize; n_bins];
    for &x in s {
        let k = (((x - min) / width) as usize).min(n_bins - 1);
        counts[k] += 1;
    }
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    min + (best as f64 + 0.5) * width
}

fn most_frequent(sorted: &[f64]) -> f64 {
    let mut best = sorted[0];
    let mut best_run = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        if j - i > best_run {
            best_run = j - i;
            best = sorted[i];
        }
        i = j;
    }
    best
}
