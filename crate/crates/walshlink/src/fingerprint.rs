//! Walsh-domain fingerprinting of interferer captures.
//!
//! Long real captures are segmented into transform-length blocks, projected
//! into the Walsh domain, and reduced to a per-branch interference mask plus
//! a concentration score. The score (`mad_from_peak`) is the mean absolute
//! deviation of the peak-normalized per-branch amplitude profile from its
//! peak: 0 for a perfectly uniform profile, (N−1)/N when a single branch
//! carries everything. Higher means more concentrated.

use crate::error::{Error, Result};
use crate::ofdm::{
    generate_baseband, mix_to_passband, InterfererPlacement, OfdmConfig, RealCapture,
};
use crate::resample::PolyphaseResampler;
use crate::walsh::{fast_transform, WalshBasis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Per-branch statistic reduced over blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskStatistic {
    /// Root-mean-square coefficient amplitude (power-faithful; default).
    RmsAmplitude,
    /// Mean absolute coefficient, for sensitivity cross-checks.
    MeanAbsolute,
}

impl MaskStatistic {
    pub fn as_str(self) -> &'static str {
        match self {
            MaskStatistic::RmsAmplitude => "rms",
            MaskStatistic::MeanAbsolute => "mean-abs",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rms" => Ok(MaskStatistic::RmsAmplitude),
            "mean-abs" => Ok(MaskStatistic::MeanAbsolute),
            other => Err(Error::InvalidArgument(format!(
                "unknown mask statistic '{other}'"
            ))),
        }
    }
}

/// How capture segmentation aligns to block boundaries.
///
/// The interferer is asynchronous to the receiver's block clock, so the
/// default draws one random starting offset; `Aligned` starts at sample zero
/// for deterministic regression runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockOffsetPolicy {
    Aligned,
    RandomOffset { seed: u64 },
}

/// Provenance recorded alongside extracted mask weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskMeta {
    pub center_frequency: f64,
    pub bandwidth: f64,
    pub seed: u64,
}

/// Per-branch amplitude weights describing how interferer power lands in the
/// Walsh domain, normalized to unit RMS over branches.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceMask {
    pub weights: Vec<f64>,
    pub center_frequency: f64,
    pub bandwidth: f64,
    pub blocks_averaged: usize,
    pub statistic: MaskStatistic,
    pub seed: u64,
}

impl InterferenceMask {
    pub fn branches(&self) -> usize {
        self.weights.len()
    }

    /// A flat mask: every branch weight 1 (already RMS-normalized).
    pub fn uniform(branches: usize) -> Self {
        InterferenceMask {
            weights: vec![1.0; branches],
            center_frequency: 0.0,
            bandwidth: 0.0,
            blocks_averaged: usize::MAX,
            statistic: MaskStatistic::RmsAmplitude,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(
                "mask weights must be finite and nonnegative".into(),
            ));
        }
        let rms = rms(&self.weights);
        if (rms - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "mask weights must have unit RMS, got {rms}"
            )));
        }
        Ok(())
    }
}

/// Concentration summary of a capture's Walsh projection.
#[derive(Debug, Clone)]
pub struct ConcentrationReport {
    /// Mean squared coefficient per branch.
    pub per_branch_power: Vec<f64>,
    /// Max |coefficient| per branch.
    pub per_branch_peak: Vec<f64>,
    pub mad_from_peak: f64,
    pub peak_branch_index: usize,
}

/// Minimum averaged blocks for a mask that will drive training/evaluation.
pub const MIN_TRAINING_BLOCKS: usize = 1000;

const PAR_CHUNK_BLOCKS: usize = 4096;

/// Extracts the per-branch interference mask from a capture.
pub fn extract_mask(
    capture: &RealCapture,
    basis: &WalshBasis,
    policy: BlockOffsetPolicy,
    statistic: MaskStatistic,
    meta: MaskMeta,
) -> Result<InterferenceMask> {
    let n = basis.order();
    let offset = match policy {
        BlockOffsetPolicy::Aligned => 0,
        BlockOffsetPolicy::RandomOffset { seed } => {
            ChaCha8Rng::seed_from_u64(seed).gen_range(0..n)
        }
    };
    let accum = accumulate_blocks(&capture.samples[offset..], basis)?;
    let blocks = accum.blocks;
    let mut weights: Vec<f64> = match statistic {
        MaskStatistic::RmsAmplitude => accum
            .power_sum
            .iter()
            .map(|s| (s / blocks as f64).sqrt())
            .collect(),
        MaskStatistic::MeanAbsolute => accum
            .abs_sum
            .iter()
            .map(|s| s / blocks as f64)
            .collect(),
    };
    let scale = rms(&weights);
    if scale == 0.0 {
        return Err(Error::DegenerateInput("all-zero capture".into()));
    }
    for w in &mut weights {
        *w /= scale;
    }
    Ok(InterferenceMask {
        weights,
        center_frequency: meta.center_frequency,
        bandwidth: meta.bandwidth,
        blocks_averaged: blocks,
        statistic,
        seed: meta.seed,
    })
}

/// Computes the per-branch power/peak profile and the concentration score.
/// Deterministic for a given capture (aligned segmentation).
pub fn concentration_report(capture: &RealCapture, basis: &WalshBasis) -> Result<ConcentrationReport> {
    let accum = accumulate_blocks(&capture.samples, basis)?;
    let per_branch_power: Vec<f64> = accum
        .power_sum
        .iter()
        .map(|s| s / accum.blocks as f64)
        .collect();
    Ok(build_report(per_branch_power, accum.peak))
}

fn build_report(per_branch_power: Vec<f64>, per_branch_peak: Vec<f64>) -> ConcentrationReport {
    let n = per_branch_power.len();
    let amplitude: Vec<f64> = per_branch_power.iter().map(|p| p.sqrt()).collect();
    let (peak_branch_index, peak_amp) = amplitude
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, a)| (i, *a))
        .unwrap();
    let mad_from_peak = if peak_amp == 0.0 {
        0.0
    } else {
        amplitude.iter().map(|a| 1.0 - a / peak_amp).sum::<f64>() / n as f64
    };
    ConcentrationReport {
        per_branch_power,
        per_branch_peak,
        mad_from_peak,
        peak_branch_index,
    }
}

struct BlockAccumulator {
    power_sum: Vec<f64>,
    abs_sum: Vec<f64>,
    peak: Vec<f64>,
    blocks: usize,
}

/// Transforms non-overlapping blocks and reduces power/abs/peak per branch.
///
/// Blocks are processed in fixed-size chunks and the per-chunk partials are
/// folded in chunk order, so results do not depend on the worker count.
fn accumulate_blocks(samples: &[f64], basis: &WalshBasis) -> Result<BlockAccumulator> {
    let n = basis.order();
    let blocks = samples.len() / n;
    if blocks == 0 {
        return Err(Error::InsufficientData(format!(
            "capture holds {} samples, need at least one {}-sample block",
            samples.len(),
            n
        )));
    }
    let ordering = basis.ordering();
    let chunk_count = blocks.div_ceil(PAR_CHUNK_BLOCKS);
    let partials: Vec<BlockAccumulator> = (0..chunk_count)
        .into_par_iter()
        .map(|c| {
            let start = c * PAR_CHUNK_BLOCKS;
            let end = ((c + 1) * PAR_CHUNK_BLOCKS).min(blocks);
            let mut power = KahanVec::new(n);
            let mut abs = KahanVec::new(n);
            let mut peak = vec![0.0; n];
            for b in start..end {
                let block = &samples[b * n..(b + 1) * n];
                let coeffs = fast_transform(block, ordering).expect("power-of-two block");
                for (i, &x) in coeffs.iter().enumerate() {
                    power.add(i, x * x);
                    abs.add(i, x.abs());
                    if x.abs() > peak[i] {
                        peak[i] = x.abs();
                    }
                }
            }
            BlockAccumulator {
                power_sum: power.into_values(),
                abs_sum: abs.into_values(),
                peak,
                blocks: end - start,
            }
        })
        .collect();

    let mut total = BlockAccumulator {
        power_sum: vec![0.0; n],
        abs_sum: vec![0.0; n],
        peak: vec![0.0; n],
        blocks: 0,
    };
    for p in partials {
        for i in 0..n {
            total.power_sum[i] += p.power_sum[i];
            total.abs_sum[i] += p.abs_sum[i];
            total.peak[i] = total.peak[i].max(p.peak[i]);
        }
        total.blocks += p.blocks;
    }
    Ok(total)
}

/// Kahan-compensated per-branch accumulator.
struct KahanVec {
    sum: Vec<f64>,
    carry: Vec<f64>,
}

impl KahanVec {
    fn new(n: usize) -> Self {
        KahanVec {
            sum: vec![0.0; n],
            carry: vec![0.0; n],
        }
    }

    #[inline]
    fn add(&mut self, i: usize, value: f64) {
        let y = value - self.carry[i];
        let t = self.sum[i] + y;
        self.carry[i] = (t - self.sum[i]) - y;
        self.sum[i] = t;
    }

    fn into_values(self) -> Vec<f64> {
        self.sum
    }
}

/// Projects the same waveform at several center frequencies and reports the
/// concentration at each. The baseband draw (and therefore the payload) is
/// identical across frequencies; only the carrier changes.
pub fn sweep_frequencies(
    cfg: &OfdmConfig,
    frequencies: &[f64],
    basis: &WalshBasis,
    seed: u64,
    system_sample_rate: f64,
) -> Result<Vec<ConcentrationReport>> {
    if frequencies.is_empty() {
        return Ok(Vec::new());
    }
    for &fc in frequencies {
        InterfererPlacement::new(fc, system_sample_rate, 1.0).validate(cfg.occupied_bandwidth())?;
    }
    let baseband = generate_baseband(cfg, seed)?;
    let resampler = PolyphaseResampler::for_rates(cfg.native_sample_rate, system_sample_rate)?;
    let at_system_rate = resampler.resample_complex(&baseband);
    frequencies
        .iter()
        .map(|&fc| {
            let placement = InterfererPlacement::new(fc, system_sample_rate, 1.0);
            let capture = mix_to_passband(&at_system_rate, &placement);
            concentration_report(&capture, basis)
        })
        .collect()
}

fn rms(values: &[f64]) -> f64 {
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walsh::BasisOrdering;
    use rand_distr::{Distribution, StandardNormal};

    fn basis32() -> WalshBasis {
        WalshBasis::new(32, BasisOrdering::Sequency).unwrap()
    }

    fn meta() -> MaskMeta {
        MaskMeta {
            center_frequency: 0.0,
            bandwidth: 0.0,
            seed: 0,
        }
    }

    #[test]
    fn alternating_tone_masks_single_branch() {
        let samples: Vec<f64> = (0..32 * 2000)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let capture = RealCapture {
            samples,
            sample_rate: 5e9,
        };
        let mask = extract_mask(
            &capture,
            &basis32(),
            BlockOffsetPolicy::Aligned,
            MaskStatistic::RmsAmplitude,
            meta(),
        )
        .unwrap();
        mask.validate().unwrap();
        assert!((mask.weights[31] - 32.0_f64.sqrt()).abs() < 1e-9);
        for &w in &mask.weights[..31] {
            assert!(w.abs() < 1e-9);
        }
    }

    #[test]
    fn white_noise_mask_is_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let blocks = 100_000;
        let samples: Vec<f64> = (0..32 * blocks)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let capture = RealCapture {
            samples,
            sample_rate: 5e9,
        };
        let mask = extract_mask(
            &capture,
            &basis32(),
            BlockOffsetPolicy::Aligned,
            MaskStatistic::RmsAmplitude,
            meta(),
        )
        .unwrap();
        for &w in &mask.weights {
            assert!((w - 1.0).abs() < 0.02, "weight {w}");
        }
    }

    #[test]
    fn concentration_extremes() {
        // Single-branch concentration.
        let samples: Vec<f64> = (0..32 * 64)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let capture = RealCapture {
            samples,
            sample_rate: 5e9,
        };
        let report = concentration_report(&capture, &basis32()).unwrap();
        assert_eq!(report.peak_branch_index, 31);
        assert!((report.mad_from_peak - 31.0 / 32.0).abs() < 1e-12);

        // Perfectly uniform profile.
        let report = build_report(vec![2.5; 32], vec![2.0; 32]);
        assert!(report.mad_from_peak.abs() < 1e-15);
    }

    #[test]
    fn too_short_capture_rejected() {
        let capture = RealCapture {
            samples: vec![0.0; 16],
            sample_rate: 5e9,
        };
        assert!(matches!(
            concentration_report(&capture, &basis32()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn empty_frequency_sweep_is_empty() {
        let reports = sweep_frequencies(&OfdmConfig::default(), &[], &basis32(), 1, 5e9).unwrap();
        assert!(reports.is_empty());
    }

    #[test]
    fn mask_is_rms_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let samples: Vec<f64> = (0..32 * 2048)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                g * 0.3 + 0.1
            })
            .collect();
        let capture = RealCapture {
            samples,
            sample_rate: 5e9,
        };
        for statistic in [MaskStatistic::RmsAmplitude, MaskStatistic::MeanAbsolute] {
            let mask = extract_mask(
                &capture,
                &basis32(),
                BlockOffsetPolicy::Aligned,
                statistic,
                meta(),
            )
            .unwrap();
            assert!((rms(&mask.weights) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn random_offset_policy_is_seeded_and_in_range() {
        let samples: Vec<f64> = (0..32 * 1024).map(|i| (i as f64 * 0.01).sin()).collect();
        let capture = RealCapture {
            samples,
            sample_rate: 5e9,
        };
        let a = extract_mask(
            &capture,
            &basis32(),
            BlockOffsetPolicy::RandomOffset { seed: 5 },
            MaskStatistic::RmsAmplitude,
            meta(),
        )
        .unwrap();
        let b = extract_mask(
            &capture,
            &basis32(),
            BlockOffsetPolicy::RandomOffset { seed: 5 },
            MaskStatistic::RmsAmplitude,
            meta(),
        )
        .unwrap();
        assert_eq!(a.weights, b.weights);
    }
}
