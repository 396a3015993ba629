//! Ring buffer of upstream span tension used to evaluate the transport
//! delay between the two print nips.

use std::collections::VecDeque;

/// Time-stamped tension samples covering at least one transport delay.
///
/// Samples are pushed once per integration step with strictly increasing
/// time stamps. Queries interpolate linearly between samples; times before
/// the first sample belong to the undisturbed pre-history and read 0.
#[derive(Debug, Clone)]
pub struct TensionHistory {
    span: f64,
    keep_margin: f64,
    samples: VecDeque<(f64, f64)>,
}

impl TensionHistory {
    /// Buffer that retains `span_seconds` of history sampled roughly every
    /// `expected_dt` seconds.
    pub fn new(span_seconds: f64, expected_dt: f64) -> Self {
        assert!(span_seconds > 0.0 && expected_dt > 0.0);
        let capacity = (span_seconds / expected_dt).ceil() as usize + 8;
        Self {
            span: span_seconds,
            keep_margin: 4.0 * expected_dt,
            samples: VecDeque::with_capacity(capacity),
        }
    }

    /// Appends one sample and evicts samples older than the retained span.
    pub fn push(&mut self, time: f64, value: f64) {
        if let Some((last, _)) = self.samples.back() {
            debug_assert!(time > *last, "history time stamps must increase");
        }
        self.samples.push_back((time, value));
        let horizon = time - self.span - self.keep_margin;
        while let Some((t, _)) = self.samples.front() {
            if *t < horizon && self.samples.len() > 2 {
                self.samples.pop_front();
            } else {
                break;
            }
        }
    }

    /// Linearly interpolated tension at `time`; 0 before recorded history,
    /// clamped to the newest sample at or beyond it.
    pub fn sample(&self, time: f64) -> f64 {
        let (first, _) = match self.samples.front() {
            None => return 0.0,
            Some(s) => *s,
        };
        if time < first {
            return 0.0;
        }
        let (last, last_v) = *self.samples.back().expect("non-empty");
        if time >= last {
            return last_v;
        }
        let idx = self.samples.partition_point(|(t, _)| *t <= time);
        let (t0, v0) = self.samples[idx - 1];
        let (t1, v1) = self.samples[idx];
        let w = (time - t0) / (t1 - t0);
        v0 + w * (v1 - v0)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pre_history_reads_zero() {
        let mut h = TensionHistory::new(1.0, 0.1);
        assert_eq!(h.sample(-0.5), 0.0);
        h.push(0.0, 3.0);
        h.push(0.1, 4.0);
        assert_eq!(h.sample(-1e-9), 0.0);
        assert_eq!(h.sample(0.0), 3.0);
    }

    #[test]
    fn recovers_stored_samples_exactly() {
        let mut h = TensionHistory::new(1.0, 0.1);
        for k in 0..12 {
            h.push(k as f64 * 0.1, (k * k) as f64);
        }
        assert_eq!(h.sample(0.5), 25.0);
        assert_eq!(h.sample(1.1), 121.0);
    }

    #[test]
    fn interpolates_between_samples() {
        let mut h = TensionHistory::new(1.0, 0.25);
        h.push(0.0, 2.0);
        h.push(0.25, 6.0);
        approx::assert_relative_eq!(h.sample(0.125), 4.0);
        approx::assert_relative_eq!(h.sample(0.0625), 3.0);
    }

    #[test]
    fn clamps_at_the_newest_sample() {
        let mut h = TensionHistory::new(1.0, 0.1);
        h.push(0.0, 1.0);
        h.push(0.1, 2.0);
        assert_eq!(h.sample(0.1), 2.0);
        assert_eq!(h.sample(0.15), 2.0);
    }

    #[test]
    fn evicts_only_beyond_the_retained_span() {
        let dt = 0.01;
        let mut h = TensionHistory::new(0.5, dt);
        let steps = 200;
        for k in 0..=steps {
            h.push(k as f64 * dt, k as f64);
        }
        // newest time is 2.0; everything back to 2.0 - 0.5 must still resolve
        let t = 2.0 - 0.5;
        approx::assert_relative_eq!(h.sample(t), t / dt, max_relative = 1e-9);
        assert!(h.len() < 70);
    }

    #[test]
    fn shifted_sinusoid_lookup_matches_the_true_signal() {
        // interpolation error stays O((ω·dt)²) of the amplitude
        let dt = 1e-3;
        let omega = 3.0;
        let delay = 0.4003; // deliberately off the sample grid
        let mut h = TensionHistory::new(0.5, dt);
        let mut worst: f64 = 0.0;
        for k in 0..2000 {
            let t = k as f64 * dt;
            h.push(t, (omega * t).sin());
            if t > delay {
                let q = t - delay + 0.37 * dt; // between stored samples
                worst = worst.max((h.sample(q) - (omega * q).sin()).abs());
            }
        }
        assert!(worst < 2e-6, "interpolation error {worst}");
    }
}
