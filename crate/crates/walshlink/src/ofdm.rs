//! CP-OFDM interferer waveform generation and placement at the system rate.
//!
//! The default configuration is the 5G FR2-style downlink of the coexistence
//! scenario: 1024 subcarriers at a 61.44 MHz native rate, 792 of them active
//! around a nulled DC, 64-QAM mapping, 256-sample cyclic prefix (the unique
//! CP making a 20.83 µs symbol at that rate). Captures are produced as real
//! passband sample streams at the ultrawideband system rate.

use crate::error::{Error, Result};
use crate::resample::PolyphaseResampler;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Interfering OFDM waveform parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmConfig {
    pub fft_size: usize,
    pub active_subcarriers: usize,
    pub qam_order: usize,
    /// Native (Nyquist) sample rate in Hz.
    pub native_sample_rate: f64,
    pub cp_samples: usize,
    pub num_symbols: usize,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        OfdmConfig {
            fft_size: 1024,
            active_subcarriers: 792,
            qam_order: 64,
            native_sample_rate: 61.44e6,
            cp_samples: 256,
            num_symbols: 8,
        }
    }
}

impl OfdmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fft_size == 0 || !self.fft_size.is_power_of_two() {
            return Err(Error::Config(format!(
                "ofdm.fft_size must be a power of two, got {}",
                self.fft_size
            )));
        }
        if self.active_subcarriers >= self.fft_size {
            return Err(Error::Config(format!(
                "ofdm.active_subcarriers ({}) must be below fft_size ({})",
                self.active_subcarriers, self.fft_size
            )));
        }
        if self.active_subcarriers % 2 != 0 {
            return Err(Error::Config(
                "ofdm.active_subcarriers must be even (band is centered on a nulled DC)".into(),
            ));
        }
        let order = self.qam_order;
        if order < 4 || !order.is_power_of_two() || order.trailing_zeros() % 2 != 0 {
            return Err(Error::Config(format!(
                "ofdm.qam_order must be an even power of two (square constellation), got {order}"
            )));
        }
        if !(self.native_sample_rate.is_finite() && self.native_sample_rate > 0.0) {
            return Err(Error::Config("ofdm.native_sample_rate must be positive".into()));
        }
        if self.num_symbols == 0 {
            return Err(Error::Config("ofdm.num_symbols must be at least 1".into()));
        }
        Ok(())
    }

    /// Samples per symbol including the cyclic prefix.
    pub fn symbol_samples(&self) -> usize {
        self.fft_size + self.cp_samples
    }

    /// Symbol duration in seconds, CP included.
    pub fn symbol_duration(&self) -> f64 {
        self.symbol_samples() as f64 / self.native_sample_rate
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.native_sample_rate / self.fft_size as f64
    }

    /// Bandwidth actually occupied by the active subcarriers, in Hz.
    pub fn occupied_bandwidth(&self) -> f64 {
        self.active_subcarriers as f64 * self.subcarrier_spacing()
    }
}

/// Where the interferer sits inside the ultrawideband channel.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfererPlacement {
    /// Baseband center frequency in Hz.
    pub center_frequency: f64,
    /// System (ultrawideband) sample rate in Hz.
    pub system_sample_rate: f64,
    /// Linear amplitude factor applied to the passband capture.
    pub power_scale: f64,
}

impl InterfererPlacement {
    pub fn new(center_frequency: f64, system_sample_rate: f64, power_scale: f64) -> Self {
        InterfererPlacement {
            center_frequency,
            system_sample_rate,
            power_scale,
        }
    }

    /// Checks Nyquist containment of the occupied band and scale validity.
    pub fn validate(&self, occupied_bandwidth: f64) -> Result<()> {
        if !(self.power_scale >= 0.0 && self.power_scale.is_finite()) {
            return Err(Error::Config(format!(
                "placement.power_scale must be finite and nonnegative, got {}",
                self.power_scale
            )));
        }
        let nyquist = self.system_sample_rate / 2.0;
        if self.center_frequency < 0.0
            || self.center_frequency + occupied_bandwidth / 2.0 > nyquist
        {
            return Err(Error::Config(format!(
                "placement: center {} Hz with occupied bandwidth {} Hz exceeds the [0, {}] Hz Nyquist band",
                self.center_frequency, occupied_bandwidth, nyquist
            )));
        }
        Ok(())
    }
}

/// A real-valued sample stream at the system rate.
#[derive(Debug, Clone)]
pub struct RealCapture {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
}

/// Gray-maps a bit vector onto a square QAM constellation with unit average
/// symbol energy.
///
/// Labeling: the first half of each symbol's bits selects the I level, the
/// second half the Q level, each through a per-axis reflected Gray code with
/// the all-zeros label on the most positive level.
pub fn qam_map(bits: &[u8], order: usize) -> Result<Vec<Complex64>> {
    if order < 4 || !order.is_power_of_two() || order.trailing_zeros() % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "qam order must be an even power of two, got {order}"
        )));
    }
    let bits_per_symbol = order.trailing_zeros() as usize;
    if bits.len() % bits_per_symbol != 0 {
        return Err(Error::InvalidArgument(format!(
            "bit count {} not divisible by {} bits per symbol",
            bits.len(),
            bits_per_symbol
        )));
    }
    let bits_per_axis = bits_per_symbol / 2;
    let levels = 1usize << bits_per_axis;
    // Average energy of the unnormalized ±1, ±3, ... grid is 2(L²−1)/3.
    let scale = (3.0 / (2.0 * (levels * levels - 1) as f64)).sqrt();
    let axis_level = |axis_bits: &[u8]| -> f64 {
        let gray = axis_bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        let index = gray_to_binary(gray);
        (levels as f64 - 1.0) - 2.0 * index as f64
    };
    Ok(bits
        .chunks(bits_per_symbol)
        .map(|chunk| {
            let i = axis_level(&chunk[..bits_per_axis]);
            let q = axis_level(&chunk[bits_per_axis..]);
            Complex64::new(i * scale, q * scale)
        })
        .collect())
}

fn gray_to_binary(mut gray: usize) -> usize {
    let mut binary = 0usize;
    while gray != 0 {
        binary ^= gray;
        gray >>= 1;
    }
    binary
}

/// Generates the complex baseband CP-OFDM stream at the native rate.
///
/// Per symbol: uniform random constellation points on the centered active
/// subcarriers (DC nulled), unitary inverse DFT, cyclic prefix prepended.
/// Bit-identical output for a fixed seed.
pub fn generate_baseband(cfg: &OfdmConfig, seed: u64) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.fft_size;
    let half = cfg.active_subcarriers / 2;
    let constellation = full_constellation(cfg.qam_order)?;

    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(n);
    let idft_scale = 1.0 / (n as f64).sqrt();

    let mut out = Vec::with_capacity(cfg.num_symbols * cfg.symbol_samples());
    let mut grid = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..cfg.num_symbols {
        for slot in grid.iter_mut() {
            *slot = Complex64::new(0.0, 0.0);
        }
        for offset in 1..=half {
            grid[offset] = constellation[rng.gen_range(0..constellation.len())];
            grid[n - offset] = constellation[rng.gen_range(0..constellation.len())];
        }
        ifft.process(&mut grid);
        for v in grid.iter_mut() {
            *v *= idft_scale;
        }
        out.extend_from_slice(&grid[n - cfg.cp_samples..]);
        out.extend_from_slice(&grid);
    }
    Ok(out)
}

fn full_constellation(order: usize) -> Result<Vec<Complex64>> {
    let bits_per_symbol = order.trailing_zeros() as usize;
    let mut bits = Vec::with_capacity(order * bits_per_symbol);
    for symbol in 0..order {
        for b in (0..bits_per_symbol).rev() {
            bits.push(((symbol >> b) & 1) as u8);
        }
    }
    qam_map(&bits, order)
}

/// Resamples a native-rate baseband to the system rate and mixes it up to
/// the placement's center frequency as a real passband capture.
pub fn upconvert_to_system_rate(
    baseband: &[Complex64],
    cfg: &OfdmConfig,
    placement: &InterfererPlacement,
) -> Result<RealCapture> {
    placement.validate(cfg.occupied_bandwidth())?;
    let resampler = PolyphaseResampler::for_rates(cfg.native_sample_rate, placement.system_sample_rate)?;
    let at_system_rate = resampler.resample_complex(baseband);
    Ok(mix_to_passband(&at_system_rate, placement))
}

/// Mixes an already-resampled complex baseband onto a real carrier.
///
/// The √2 factor keeps passband power equal to the complex baseband power.
pub fn mix_to_passband(at_system_rate: &[Complex64], placement: &InterfererPlacement) -> RealCapture {
    let ratio = placement.center_frequency / placement.system_sample_rate;
    let gain = std::f64::consts::SQRT_2 * placement.power_scale;
    let samples = at_system_rate
        .iter()
        .enumerate()
        .map(|(m, z)| {
            let phase = 2.0 * std::f64::consts::PI * (m as f64 * ratio).fract();
            gain * (z.re * phase.cos() - z.im * phase.sin())
        })
        .collect();
    RealCapture {
        samples,
        sample_rate: placement.system_sample_rate,
    }
}
