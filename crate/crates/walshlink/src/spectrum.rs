//! Small periodogram utilities for inspecting real captures.
//!
//! Hann-windowed Welch averaging over contiguous segments. These are
//! deliberately plain DFT-based estimates, independent of both the polyphase
//! resampler and the Walsh machinery, so tests can use them as oracles.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

#[derive(Debug, Clone)]
pub struct Periodogram {
    /// Power per bin, one-sided (bins 0..=segment/2).
    pub power: Vec<f64>,
    /// Bin spacing in Hz.
    pub bin_hz: f64,
}

/// Welch periodogram of a real signal with Hann-windowed segments.
pub fn periodogram(samples: &[f64], sample_rate: f64, segment: usize) -> Periodogram {
    assert!(segment.is_power_of_two() && segment >= 8);
    assert!(samples.len() >= segment, "capture shorter than one segment");
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(segment);
    let window: Vec<f64> = (0..segment)
        .map(|n| {
            let c = (2.0 * std::f64::consts::PI * n as f64 / segment as f64).cos();
            0.5 * (1.0 - c)
        })
        .collect();

    let half = segment / 2;
    let mut power = vec![0.0; half + 1];
    let mut segments = 0usize;
    let mut buf = vec![Complex64::new(0.0, 0.0); segment];
    for chunk in samples.chunks_exact(segment) {
        for (b, (&x, &w)) in buf.iter_mut().zip(chunk.iter().zip(&window)) {
            *b = Complex64::new(x * w, 0.0);
        }
        fft.process(&mut buf);
        for (i, p) in power.iter_mut().enumerate() {
            *p += buf[i].norm_sqr();
        }
        segments += 1;
    }
    let scale = 1.0 / segments as f64;
    for p in &mut power {
        *p *= scale;
    }
    Periodogram {
        power,
        bin_hz: sample_rate / segment as f64,
    }
}

impl Periodogram {
    /// Fraction of total power inside [lo_hz, hi_hz].
    pub fn band_power_fraction(&self, lo_hz: f64, hi_hz: f64) -> f64 {
        let total: f64 = self.power.iter().sum();
        let in_band: f64 = self
            .power
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let f = *i as f64 * self.bin_hz;
                f >= lo_hz && f <= hi_hz
            })
            .map(|(_, p)| p)
            .sum();
        in_band / total
    }

    /// Frequency of the strongest bin in Hz.
    pub fn peak_frequency(&self) -> f64 {
        let (idx, _) = self
            .power
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        idx as f64 * self.bin_hz
    }
}
