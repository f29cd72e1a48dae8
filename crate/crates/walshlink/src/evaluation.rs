//! Monte-Carlo BLER measurement and the frequency/ICI sweep harnesses.
//!
//! Per-block randomness is derived from (run seed, scenario id, block index)
//! through a counter-based construction, so results are bit-identical no
//! matter how many workers share the block range. Blocks are evaluated in
//! fixed rounds of fixed-size chunks; the stopping rule is checked between
//! rounds, which keeps the set of evaluated blocks — and therefore every
//! reported count — independent of scheduling.

use crate::autoencoder::{AutoencoderModel, Codebook};
use crate::channel::{interference_scale, noise_variance, ChannelConfig, IciReference};
use crate::error::{Error, Result};
use crate::fingerprint::InterferenceMask;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::sync::Arc;

/// Monte-Carlo stopping rule: stop once `min_errors` block errors are
/// collected or `max_blocks` blocks are spent, whichever comes first.
#[derive(Debug, Clone, Copy)]
pub struct StoppingRule {
    pub min_errors: u64,
    pub max_blocks: u64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        StoppingRule {
            min_errors: 100,
            max_blocks: 100_000_000,
        }
    }
}

/// One measured point of a BLER curve.
#[derive(Debug, Clone, Copy)]
pub struct BlerPoint {
    pub ebn0_db: f64,
    pub bler: f64,
    pub block_errors: u64,
    pub blocks: u64,
    pub ci95_halfwidth: f64,
    /// True when no errors were observed; `bler` then holds the one-sided
    /// 95% upper bound instead of an estimate.
    pub censored: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioLabel {
    Baseline,
    IciUnaware,
    IciAware,
}

impl ScenarioLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioLabel::Baseline => "baseline",
            ScenarioLabel::IciUnaware => "ici-unaware-model",
            ScenarioLabel::IciAware => "ici-aware-model",
        }
    }
}

/// A model/mask/level combination to evaluate.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub label: ScenarioLabel,
    pub model: Arc<AutoencoderModel>,
    pub mask: Option<InterferenceMask>,
    pub ici_db: f64,
    pub ici_reference: IciReference,
    pub ebn0_grid: Vec<f64>,
}

impl Scenario {
    /// Checks that the label is consistent with the model's training history
    /// and the mask's presence.
    pub fn validate(&self) -> Result<()> {
        let trained_clean = self.model.training_meta.scenario == "awgn"
            || self.model.training_meta.scenario == "untrained";
        match self.label {
            ScenarioLabel::Baseline => {
                if self.mask.is_some() || self.ici_db != 0.0 {
                    return Err(Error::Config(
                        "baseline scenario must not carry interference".into(),
                    ));
                }
            }
            ScenarioLabel::IciUnaware => {
                if self.mask.is_none() || self.ici_db == 0.0 {
                    return Err(Error::Config(
                        "ici-unaware scenario needs a mask and a nonzero level".into(),
                    ));
                }
                if !trained_clean {
                    return Err(Error::Config(format!(
                        "ici-unaware scenario requires a clean-trained model, got '{}'",
                        self.model.training_meta.scenario
                    )));
                }
            }
            ScenarioLabel::IciAware => {
                if self.mask.is_none() || self.ici_db == 0.0 {
                    return Err(Error::Config(
                        "ici-aware scenario needs a mask and a nonzero level".into(),
                    ));
                }
                if trained_clean {
                    return Err(Error::Config(
                        "ici-aware scenario requires an interference-trained model".into(),
                    ));
                }
            }
        }
        if let Some(mask) = &self.mask {
            if mask.branches() != self.model.topology.channel_uses {
                return Err(Error::dim(
                    self.model.topology.channel_uses,
                    mask.branches(),
                    "scenario mask branches",
                ));
            }
        }
        Ok(())
    }

    fn channel(&self, ebn0_db: f64) -> ChannelConfig {
        ChannelConfig {
            ebn0_db,
            ici_db: self.ici_db,
            ici_reference: self.ici_reference,
            mask: self.mask.clone(),
            code_rate: self.model.topology.code_rate(),
        }
    }
}

/// Counter-based per-block RNG: a ChaCha stream keyed by run seed, scenario
/// id hash and block index.
pub fn block_rng(seed: u64, scenario_id: &str, block: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&fnv1a(scenario_id.as_bytes()).to_le_bytes());
    key[16..24].copy_from_slice(&splitmix(block ^ 0x9e3779b97f4a7c15).to_le_bytes());
    key[24..32].copy_from_slice(&splitmix(seed.wrapping_add(block)).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

const CHUNK_BLOCKS: u64 = 16_384;
/// Chunks evaluated between stopping-rule checks; fixed so the evaluated
/// block set never depends on the worker count.
const CHUNKS_PER_ROUND: u64 = 8;

/// Measures the block error rate of a scenario at one Eb/N0 point.
pub fn measure_bler(
    scenario: &Scenario,
    ebn0_db: f64,
    seed: u64,
    stopping: StoppingRule,
) -> Result<BlerPoint> {
    scenario.validate()?;
    let channel = scenario.channel(ebn0_db);
    channel.validate()?;
    let codebook = Codebook::from_model(&scenario.model)?;
    let m = scenario.model.topology.message_count;
    let n = scenario.model.topology.channel_uses;
    let sigma = noise_variance(&channel).sqrt();
    let alpha = interference_scale(&channel);
    let mask_weights: Option<&[f64]> = if channel.interference_enabled() {
        Some(&channel.mask.as_ref().expect("validated").weights)
    } else {
        None
    };

    let eval_chunk = |chunk_index: u64| -> u64 {
        let start = chunk_index * CHUNK_BLOCKS;
        let mut errors = 0u64;
        let mut received = vec![0.0; n];
        for local in 0..CHUNK_BLOCKS {
            let block = start + local;
            let mut rng = block_rng(seed, &scenario.id, block);
            let message = rng.gen_range(0..m);
            let codeword = codebook.codeword(message);
            match mask_weights {
                Some(weights) => {
                    for t in 0..n {
                        let z: f64 = rng.sample(StandardNormal);
                        let eta: f64 = rng.sample(StandardNormal);
                        received[t] = codeword[t] + sigma * z + alpha * weights[t] * eta;
                    }
                }
                None => {
                    for t in 0..n {
                        let z: f64 = rng.sample(StandardNormal);
                        received[t] = codeword[t] + sigma * z;
                    }
                }
            }
            let estimate =
                crate::autoencoder::infer(&scenario.model, &received).expect("length checked");
            if estimate != message {
                errors += 1;
            }
        }
        errors
    };

    let mut total_errors = 0u64;
    let mut total_blocks = 0u64;
    let mut round = 0u64;
    let max_rounds = (stopping.max_blocks / (CHUNK_BLOCKS * CHUNKS_PER_ROUND)).max(1);
    while round < max_rounds {
        let chunk_lo = round * CHUNKS_PER_ROUND;
        let round_errors: u64 = (chunk_lo..chunk_lo + CHUNKS_PER_ROUND)
            .into_par_iter()
            .map(eval_chunk)
            .sum();
        total_errors += round_errors;
        total_blocks += CHUNK_BLOCKS * CHUNKS_PER_ROUND;
        round += 1;
        if total_errors >= stopping.min_errors {
            break;
        }
    }

    Ok(finish_point(ebn0_db, total_errors, total_blocks))
}

/// Builds a finished point with its confidence interval.
fn finish_point(ebn0_db: f64, block_errors: u64, blocks: u64) -> BlerPoint {
    if block_errors == 0 {
        // One-sided exact 95% upper bound for zero observed errors.
        let upper = 1.0 - 0.05_f64.powf(1.0 / blocks as f64);
        return BlerPoint {
            ebn0_db,
            bler: upper,
            block_errors,
            blocks,
            ci95_halfwidth: upper,
            censored: true,
        };
    }
    let bler = block_errors as f64 / blocks as f64;
    let ci95_halfwidth = binomial_ci95_halfwidth(block_errors, blocks);
    BlerPoint {
        ebn0_db,
        bler,
        block_errors,
        blocks,
        ci95_halfwidth,
        censored: false,
    }
}

/// 95% confidence halfwidth for a binomial proportion: normal approximation
/// above 30 successes, exact Clopper-Pearson below.
pub fn binomial_ci95_halfwidth(errors: u64, trials: u64) -> f64 {
    let n = trials as f64;
    let p = errors as f64 / n;
    if errors > 30 {
        1.959963984540054 * (p * (1.0 - p) / n).sqrt()
    } else {
        let (lo, hi) = clopper_pearson(errors, trials, 0.05);
        (hi - lo) / 2.0
    }
}

/// Exact two-sided Clopper-Pearson interval via the beta quantile.
pub fn clopper_pearson(errors: u64, trials: u64, alpha: f64) -> (f64, f64) {
    let k = errors as f64;
    let n = trials as f64;
    let lo = if errors == 0 {
        0.0
    } else {
        beta_inverse_cdf(alpha / 2.0, k, n - k + 1.0)
    };
    let hi = if errors == trials {
        1.0
    } else {
        beta_inverse_cdf(1.0 - alpha / 2.0, k + 1.0, n - k)
    };
    (lo, hi)
}

/// Beta(a, b) quantile by bisection on the regularized incomplete beta.
fn beta_inverse_cdf(q: f64, a: f64, b: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if regularized_incomplete_beta(mid, a, b) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Regularized incomplete beta I_x(a, b) via the continued fraction
/// (Lentz's method).
fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        (ln_front.exp() / a) * beta_cf(x, a, b)
    } else {
        1.0 - (((b * (1.0 - x).ln() + a * x.ln() - ln_beta(a, b)).exp()) / b)
            * beta_cf(1.0 - x, b, a)
    }
}

fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const TINY: f64 = 1e-300;
    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let mf = m as f64;
        let numerator = mf * (b - mf) * x / ((a + 2.0 * mf - 1.0) * (a + 2.0 * mf));
        d = 1.0 + numerator * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + numerator / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let numerator = -(a + mf) * (a + b + mf) * x / ((a + 2.0 * mf) * (a + 2.0 * mf + 1.0));
        d = 1.0 + numerator * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + numerator / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-14 {
            break;
        }
    }
    h
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Lanczos approximation.
fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = G[0];
    for (i, &g) in G.iter().enumerate().skip(1) {
        acc += g / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// BLER at every point of the scenario's Eb/N0 grid.
pub fn bler_curve(scenario: &Scenario, seed: u64, stopping: StoppingRule) -> Result<Vec<BlerPoint>> {
    scenario
        .ebn0_grid
        .clone()
        .iter()
        .map(|&ebn0| measure_bler(scenario, ebn0, seed, stopping))
        .collect()
}

/// Least-squares fit of BLER against frequency offset from the nearest
/// sampling-rate sub-multiple.
#[derive(Debug, Clone, Copy)]
pub struct GradientFit {
    /// Average |d BLER / d f| in 1/MHz across the fitted Eb/N0 rows.
    pub avg_abs_gradient_per_mhz: f64,
    /// Average coefficient of determination of those fits.
    pub avg_r2: f64,
}

/// Per-frequency BLER table for interference-aware models at a fixed ICI
/// level, with the BLER-vs-offset gradient fitted over the grid.
pub fn frequency_sweep(
    scenarios: &[(f64, Scenario)],
    seed: u64,
    stopping: StoppingRule,
    system_sample_rate: f64,
) -> Result<(Vec<(f64, Vec<BlerPoint>)>, Option<GradientFit>)> {
    let mut table = Vec::with_capacity(scenarios.len());
    for (fc, scenario) in scenarios {
        table.push((*fc, bler_curve(scenario, seed, stopping)?));
    }
    let fit = fit_bler_gradient(&table, system_sample_rate);
    Ok((table, fit))
}

/// Distance in Hz to the nearest f_s/2^k sub-multiple.
pub fn offset_from_submultiple(fc: f64, system_sample_rate: f64) -> f64 {
    let mut best = f64::INFINITY;
    for k in 1..=8 {
        let sub = system_sample_rate / (1u64 << k) as f64;
        best = best.min((fc - sub).abs());
    }
    best
}

fn fit_bler_gradient(
    table: &[(f64, Vec<BlerPoint>)],
    system_sample_rate: f64,
) -> Option<GradientFit> {
    if table.len() < 2 {
        return None;
    }
    // One independent fit per Eb/N0 row.
    let rows = table[0].1.len();
    let mut gradients = Vec::new();
    let mut r2s = Vec::new();
    for row in 0..rows {
        let points: Vec<(f64, f64)> = table
            .iter()
            .filter(|(_, curve)| row < curve.len())
            .map(|(fc, curve)| {
                (
                    offset_from_submultiple(*fc, system_sample_rate) / 1e6,
                    curve[row].bler,
                )
            })
            .collect();
        if points.len() < 2 {
            continue;
        }
        let n = points.len() as f64;
        let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
        let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
        let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
        if sxx == 0.0 {
            continue;
        }
        let slope = sxy / sxx;
        let syy: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
        let r2 = if syy == 0.0 { 1.0 } else { slope * sxy / syy };
        gradients.push(slope.abs());
        r2s.push(r2);
    }
    if gradients.is_empty() {
        return None;
    }
    Some(GradientFit {
        avg_abs_gradient_per_mhz: gradients.iter().sum::<f64>() / gradients.len() as f64,
        avg_r2: r2s.iter().sum::<f64>() / r2s.len() as f64,
    })
}

/// Maximum ICI level (on a tested grid) meeting a target BLER at one
/// frequency.
#[derive(Debug, Clone, Copy)]
pub struct RejectionPoint {
    pub center_frequency: f64,
    /// Largest tested level meeting the target, if any.
    pub max_ici_db: Option<f64>,
    pub target_bler: f64,
    pub ebn0_db: f64,
}

/// Largest grid level whose interference-aware model still meets the target
/// BLER, per frequency. `provider` trains or loads the aware model and mask
/// for a (frequency, level) pair. Levels are binary-searched, which assumes
/// BLER grows with the level — the monotonicity the grid sweep exploits.
pub fn ici_rejection_sweep<F>(
    frequencies: &[f64],
    ici_grid_db: &[f64],
    target_bler: f64,
    ebn0_db: f64,
    seed: u64,
    stopping: StoppingRule,
    mut provider: F,
) -> Result<Vec<RejectionPoint>>
where
    F: FnMut(f64, f64) -> Result<(Arc<AutoencoderModel>, InterferenceMask, IciReference)>,
{
    let mut out = Vec::with_capacity(frequencies.len());
    for &fc in frequencies {
        let meets = |level: f64, provider: &mut F| -> Result<bool> {
            let (model, mask, ici_reference) = provider(fc, level)?;
            let scenario = Scenario {
                id: format!("reject-fc{fc}-ici{level}"),
                label: ScenarioLabel::IciAware,
                model,
                mask: Some(mask),
                ici_db: level,
                ici_reference,
                ebn0_grid: vec![ebn0_db],
            };
            let point = measure_bler(&scenario, ebn0_db, seed, stopping)?;
            // CI-aware comparison: the whole interval must sit below target.
            let upper = if point.censored {
                point.bler
            } else {
                point.bler + point.ci95_halfwidth
            };
            Ok(upper < target_bler)
        };

        // Largest passing index via bisection over the sorted grid.
        let mut lo = 0usize;
        let mut hi = ici_grid_db.len();
        // Fast path: top of the grid passing is common near sub-multiples.
        if meets(*ici_grid_db.last().unwrap(), &mut provider)? {
            out.push(RejectionPoint {
                center_frequency: fc,
                max_ici_db: Some(*ici_grid_db.last().unwrap()),
                target_bler,
                ebn0_db,
            });
            continue;
        }
        hi -= 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if meets(ici_grid_db[mid], &mut provider)? {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let max_ici_db = if lo == 0 { None } else { Some(ici_grid_db[lo - 1]) };
        out.push(RejectionPoint {
            center_frequency: fc,
            max_ici_db,
            target_bler,
            ebn0_db,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoencoder::Topology;

    fn guessing_scenario() -> Scenario {
        // Identity embedding on the encoder side keeps the codebook
        // non-degenerate; the all-zero decoder still guesses blindly.
        let mut model = AutoencoderModel::zeros(Topology::default());
        for j in 0..16 {
            model.enc_w1[j * 16 + j] = 1.0;
            model.enc_w2[j * 32 + j] = 1.0;
        }
        Scenario {
            id: "guessing".into(),
            label: ScenarioLabel::Baseline,
            model: Arc::new(model),
            mask: None,
            ici_db: 0.0,
            ici_reference: IciReference::Total,
            ebn0_grid: vec![8.0],
        }
    }

    /// Two-message antipodal link with a matched decoder; its block error
    /// probability is exactly Q(1/sigma).
    fn antipodal_scenario() -> Scenario {
        let topology = Topology::new(1, 1).unwrap();
        let mut model = AutoencoderModel::zeros(topology);
        model.enc_w1[0] = 1.0; // identity embedding
        model.enc_w1[3] = 1.0;
        model.enc_w2[0] = 1.0; // message 0 -> +1
        model.enc_w2[1] = -1.0; // message 1 -> -1
        model.dec_w1[0] = 50.0;
        model.dec_w1[1] = -50.0;
        model.dec_w2[0] = 1.0;
        model.dec_w2[3] = 1.0;
        Scenario {
            id: "antipodal".into(),
            label: ScenarioLabel::Baseline,
            model: Arc::new(model),
            mask: None,
            ici_db: 0.0,
            ici_reference: IciReference::Total,
            ebn0_grid: vec![0.0],
        }
    }

    fn erfc(x: f64) -> f64 {
        // Abramowitz & Stegun 7.1.26, |error| < 1.5e-7.
        let sign = if x < 0.0 { -1.0 } else { 1.0 };
        let x = x.abs();
        let t = 1.0 / (1.0 + 0.3275911 * x);
        let y = t
            * (0.254829592
                + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))))
            * (-x * x).exp();
        if sign < 0.0 {
            2.0 - y
        } else {
            y
        }
    }

    fn q_function(x: f64) -> f64 {
        0.5 * erfc(x / 2.0_f64.sqrt())
    }

    #[test]
    fn untrained_decoder_guesses() {
        let scenario = guessing_scenario();
        let point = measure_bler(&scenario, 8.0, 1, StoppingRule::default()).unwrap();
        let expected = 15.0 / 16.0;
        assert!(
            (point.bler - expected).abs() < 0.005,
            "bler {} vs {expected}",
            point.bler
        );
        assert!(point.block_errors >= 100);
    }

    #[test]
    fn estimator_matches_analytic_error_probability() {
        let scenario = antipodal_scenario();
        let stopping = StoppingRule {
            min_errors: 5_000,
            max_blocks: 1_000_000,
        };
        let point = measure_bler(&scenario, 0.0, 7, stopping).unwrap();
        // R = 1: N0 = 1/(2*10^0) = 0.5.
        let sigma = 0.5_f64.sqrt();
        let truth = q_function(1.0 / sigma);
        let three_sigma = 3.0 * (truth * (1.0 - truth) / point.blocks as f64).sqrt();
        assert!(
            (point.bler - truth).abs() < three_sigma,
            "measured {} vs analytic {truth} (3 sigma {three_sigma})",
            point.bler
        );
    }

    #[test]
    fn measurement_is_reproducible() {
        let scenario = antipodal_scenario();
        let stopping = StoppingRule {
            min_errors: 100,
            max_blocks: 200_000,
        };
        let a = measure_bler(&scenario, 0.0, 9, stopping).unwrap();
        let b = measure_bler(&scenario, 0.0, 9, stopping).unwrap();
        assert_eq!(a.block_errors, b.block_errors);
        assert_eq!(a.blocks, b.blocks);
        assert_eq!(a.bler, b.bler);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let scenario = antipodal_scenario();
        let stopping = StoppingRule {
            min_errors: 100,
            max_blocks: 200_000,
        };
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| measure_bler(&scenario, 0.0, 5, stopping).unwrap());
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| measure_bler(&scenario, 0.0, 5, stopping).unwrap());
        assert_eq!(single.block_errors, multi.block_errors);
        assert_eq!(single.blocks, multi.blocks);
    }

    #[test]
    fn censored_point_reports_upper_bound() {
        // A noiseless antipodal link never errs.
        let scenario = antipodal_scenario();
        let stopping = StoppingRule {
            min_errors: 100,
            max_blocks: 150_000,
        };
        let point = measure_bler(&scenario, 60.0, 3, stopping).unwrap();
        assert!(point.censored);
        assert_eq!(point.block_errors, 0);
        let expected = 1.0 - 0.05_f64.powf(1.0 / point.blocks as f64);
        assert!((point.bler - expected).abs() < 1e-12);
    }

    #[test]
    fn block_rng_streams_are_distinct_and_stable() {
        let mut a = block_rng(1, "s", 0);
        let mut a2 = block_rng(1, "s", 0);
        let mut b = block_rng(1, "s", 1);
        let mut c = block_rng(1, "t", 0);
        let xa: u64 = a.gen();
        assert_eq!(xa, a2.gen::<u64>());
        assert_ne!(xa, b.gen::<u64>());
        assert_ne!(xa, c.gen::<u64>());
    }

    #[test]
    fn clopper_pearson_matches_reference_values() {
        // k=3, n=10 two-sided 95%: (0.06674, 0.65245).
        let (lo, hi) = clopper_pearson(3, 10, 0.05);
        assert!((lo - 0.06674).abs() < 5e-4, "lo {lo}");
        assert!((hi - 0.65245).abs() < 5e-4, "hi {hi}");
        let (lo, hi) = clopper_pearson(0, 100, 0.05);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.0362).abs() < 5e-4, "hi {hi}");
    }

    #[test]
    fn ci_covers_true_probability() {
        // 100 repeated interval estimates of a p = 1e-3 Bernoulli; at least
        // 93 must cover the truth.
        use rand::Rng as _;
        let p = 1e-3;
        let n = 200_000u64;
        let mut covered = 0;
        for rep in 0..100u64 {
            let mut rng = block_rng(424242, "ci-validity", rep);
            let mut k = 0u64;
            for _ in 0..n {
                if rng.gen::<f64>() < p {
                    k += 1;
                }
            }
            let hat = k as f64 / n as f64;
            let hw = binomial_ci95_halfwidth(k, n);
            if (hat - p).abs() <= hw {
                covered += 1;
            }
        }
        assert!(covered >= 93, "coverage {covered}/100");
    }

    #[test]
    fn offsets_from_submultiples() {
        assert!((offset_from_submultiple(2.475e9, 5e9) - 25e6).abs() < 1.0);
        assert!((offset_from_submultiple(1.25e9, 5e9) - 0.0).abs() < 1.0);
        assert!((offset_from_submultiple(1.35e9, 5e9) - 100e6).abs() < 1.0);
        assert!((offset_from_submultiple(2.075e9, 5e9) - 425e6).abs() < 1.0);
    }

    #[test]
    fn gradient_fit_recovers_synthetic_slope() {
        let mk_point = |bler: f64| BlerPoint {
            ebn0_db: 8.0,
            bler,
            block_errors: 100,
            blocks: 1000,
            ci95_halfwidth: 0.0,
            censored: false,
        };
        // BLER = 1e-4 + 2e-7 per MHz of offset.
        let table: Vec<(f64, Vec<BlerPoint>)> = [2.5e9, 2.4e9, 2.3e9, 2.2e9]
            .iter()
            .map(|&fc| {
                let offset_mhz = offset_from_submultiple(fc, 5e9) / 1e6;
                (fc, vec![mk_point(1e-4 + 2e-7 * offset_mhz)])
            })
            .collect();
        let fit = fit_bler_gradient(&table, 5e9).unwrap();
        assert!((fit.avg_abs_gradient_per_mhz - 2e-7).abs() < 1e-12);
        assert!((fit.avg_r2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn scenario_label_consistency_is_enforced() {
        let mut scenario = guessing_scenario();
        scenario.label = ScenarioLabel::IciAware;
        assert!(scenario.validate().is_err());
        let mut scenario = guessing_scenario();
        scenario.ici_db = 6.0;
        assert!(scenario.validate().is_err());
    }
}
