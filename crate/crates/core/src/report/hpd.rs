use crate::error::{Error, Result};

/// Fewest samples any marginal summary accepts.
pub const MIN_SAMPLES: usize = 20;

/// Number of sorted samples a `mass` interval must contain, `⌈mass · n⌉`.
pub fn hpd_count(n: usize, mass: f64) -> usize {
    // Guard against 0.95 * 100 landing a hair above 95.
    (((mass * n as f64) - 1e-9).ceil() as usize).clamp(1, n)
}

/// Shortest interval holding `⌈mass · n⌉` sorted samples; ties go to the
/// smallest lower end.
pub fn hpd_interval(samples: &[f64], mass: f64) -> Result<(f64, f64)> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::Usage(format!(
            "HPD needs at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if !(mass > 0.0 && mass <= 1.0) {
        return Err(Error::Usage(format!("HPD mass must lie in (0, 1], got {mass}")));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::Domain("HPD samples contain NaN".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(hpd_sorted(&s, mass))
}

pub(crate) fn hpd_sorted(sorted: &[f64], mass: f64) -> (f64, f64) {
    let n = sorted.len();
    let k = hpd_count(n, mass);
    let mut best = 0;
    let mut best_width = f64::INFINITY;
    for i in 0..=n - k {
        let w = sorted[i + k - 1] - sorted[i];
        if w < best_width {
            best_width = w;
            best = i;
        }
    }
    (sorted[best], sorted[best + k - 1])
}
