//! Small filter primitives shared by the modem, tag receiver and
//! backscatter chains.

/// First-order low-pass (bilinear transform of `wc / (s + wc)`), applied in
/// the forward direction. State starts at the first input sample so a
/// constant input passes through unchanged.
pub fn lowpass_first_order(x: &[f64], cutoff_hz: f64, sample_rate: f64) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let wc = (std::f64::consts::PI * cutoff_hz / sample_rate).tan();
    let b0 = wc / (1.0 + wc);
    let a1 = (wc - 1.0) / (1.0 + wc);
    let mut out = Vec::with_capacity(x.len());
    let mut px = x[0];
    let mut py = x[0];
    for &v in x {
        let y = b0 * (v + px) - a1 * py;
        px = v;
        py = y;
        out.push(y);
    }
    out
}

/// Repeated application of [`lowpass_first_order`].
pub fn lowpass_cascade(x: &[f64], cutoff_hz: f64, sample_rate: f64, order: usize) -> Vec<f64> {
    let mut y = x.to_vec();
    for _ in 0..order.max(1) {
        y = lowpass_first_order(&y, cutoff_hz, sample_rate);
    }
    y
}

/// Band-pass via two cascaded constant-peak-gain biquad sections centered on
/// `center_hz`. Per-stage Q is widened by sqrt(2) so the cascade's -3 dB
/// width is approximately `bandwidth_hz`.
pub fn bandpass_biquad(x: &[f64], center_hz: f64, bandwidth_hz: f64, sample_rate: f64) -> Vec<f64> {
    let w0 = 2.0 * std::f64::consts::PI * center_hz / sample_rate;
    let q = center_hz / bandwidth_hz * std::f64::consts::SQRT_2;
    let alpha = w0.sin() / (2.0 * q);
    let a0 = 1.0 + alpha;
    let b = [alpha / a0, 0.0, -alpha / a0];
    let a = [1.0, -2.0 * w0.cos() / a0, (1.0 - alpha) / a0];
    let mut y = x.to_vec();
    for _ in 0..2 {
        let mut x1 = 0.0;
        let mut x2 = 0.0;
        let mut y1 = 0.0;
        let mut y2 = 0.0;
        for v in y.iter_mut() {
            let o = b[0] * *v + b[1] * x1 + b[2] * x2 - a[1] * y1 - a[2] * y2;
            x2 = x1;
            x1 = *v;
            y2 = y1;
            y1 = o;
            *v = o;
        }
    }
    y
}

/// Sliding-window maximum (monotonic deque, O(n)).
pub fn sliding_max(x: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut out = Vec::with_capacity(x.len());
    let mut dq: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    for (i, &v) in x.iter().enumerate() {
        while dq.back().is_some_and(|&j| x[j] <= v) {
            dq.pop_back();
        }
        dq.push_back(i);
        while *dq.front().unwrap() + w <= i {
            dq.pop_front();
        }
        out.push(x[*dq.front().unwrap()]);
    }
    out
}

/// One constant-level stretch of a two-level signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub high: bool,
    pub start: usize,
    pub len: usize,
}

/// Run-length encode a boolean signal.
pub fn runs(levels: &[bool]) -> Vec<Run> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=levels.len() {
        if i == levels.len() || levels[i] != levels[start] {
            out.push(Run {
                high: levels[start],
                start,
                len: i - start,
            });
            start = i;
        }
    }
    out
}

/// Absorb runs shorter than `min_len` into their predecessor, coalescing
/// equal neighbours, until stable. The first run is never dropped.
pub fn deglitch(run_list: Vec<Run>, min_len: usize) -> Vec<Run> {
    let mut rl = run_list;
    loop {
        let mut merged = false;
        let mut out: Vec<Run> = Vec::with_capacity(rl.len());
        for r in rl {
            match out.last_mut() {
                Some(prev) if r.len < min_len => {
                    prev.len += r.len;
                    merged = true;
                }
                Some(prev) if prev.high == r.high => {
                    prev.len += r.len;
                }
                _ => out.push(r),
            }
        }
        rl = out;
        if !merged {
            return rl;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowpass_dc_gain_unity() {
        let y = lowpass_first_order(&[2.5; 400], 1e3, 1e6);
        assert!((y[399] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn lowpass_attenuates_high_freq() {
        let fs = 1e6;
        let x: Vec<f64> = (0..4000)
            .map(|i| (2.0 * std::f64::consts::PI * 2e5 * i as f64 / fs).sin())
            .collect();
        let y = lowpass_first_order(&x, 1e3, fs);
        let rms_out: f64 = (y[2000..].iter().map(|v| v * v).sum::<f64>() / 2000.0).sqrt();
        // 200x the cutoff for a 6 dB/oct section: about -46 dB.
        assert!(rms_out < 0.01, "rms {rms_out}");
    }

    #[test]
    fn bandpass_passes_center_rejects_far() {
        let fs = 40e6;
        let tone = |f: f64| -> f64 {
            let x: Vec<f64> = (0..40000)
                .map(|i| (2.0 * std::f64::consts::PI * f * i as f64 / fs).sin())
                .collect();
            let y = bandpass_biquad(&x, 8e6, 2e6, fs);
            (y[20000..].iter().map(|v| v * v).sum::<f64>() / 20000.0).sqrt()
        };
        let at_center = tone(8e6);
        let far = tone(1e6);
        assert!((at_center - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.05);
        assert!(far < 0.02 * at_center, "far {far} center {at_center}");
    }

    #[test]
    fn sliding_max_basic() {
        let x = [1.0, 3.0, 2.0, 0.5, 0.4, 6.0, 1.0];
        assert_eq!(
            sliding_max(&x, 3),
            vec![1.0, 3.0, 3.0, 3.0, 2.0, 6.0, 6.0]
        );
    }

    #[test]
    fn runs_and_deglitch() {
        let levels = [
            false, true, true, true, false, true, true, true, true, false, false,
        ];
        let rl = runs(&levels);
        assert_eq!(rl.len(), 5);
        let cleaned = deglitch(rl, 2);
        // single-sample low at index 4 absorbed into the surrounding high
        assert_eq!(cleaned.len(), 3);
        assert_eq!(cleaned[1], Run { high: true, start: 1, len: 8 });
    }
}
