//! Synthetic per-polarization baseband streams: AWGN plus amplitude-boosted
//! sinusoidal discovery elements.
//!
//! A transmitted channel is modelled as `R(t) = R0(t) + A_R(t) R+(t)`. The
//! wideband component `R0` is an optional extra Gaussian term (zero by
//! default). Each burst contributes two sinusoidal elements `R+` whose
//! amplitude is `A` times a calibrated unit amplitude; an element with
//! `A = 1` is not boosted and belongs to the wideband background, so it adds
//! nothing to the stream.
//!
//! Sample generation is counter based: every block is seeded from
//! `(seed, channel, block index)`, so any worker may produce any block and
//! the stream is identical regardless of how many workers are used.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex32;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{frame_len, Error, Result};

const NOISE_DOMAIN: u64 = 0x6177_676e;
const BACKGROUND_DOMAIN: u64 = 0x6267_6e64;

/// Receiver channel layout of one synthetic capture.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPlan {
    /// Complex samples per second.
    pub sample_rate: f64,
    /// RF frequency of baseband 0 Hz.
    pub center_rf: f64,
    /// One distinct polarization label per channel, e.g. `["R", "L"]`.
    pub labels: Vec<String>,
    /// Stream length in seconds.
    pub duration: f64,
    pub seed: u64,
    /// MJD of the first sample.
    pub start_mjd: f64,
}

impl ChannelPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::invalid("sample_rate must be positive"));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::invalid("duration must be positive"));
        }
        if self.labels.is_empty() {
            return Err(Error::invalid("at least one channel is required"));
        }
        for (i, label) in self.labels.iter().enumerate() {
            if label.is_empty() {
                return Err(Error::invalid("channel labels must be non-empty"));
            }
            if self.labels[..i].contains(label) {
                return Err(Error::invalid(format!("duplicate channel label {label:?}")));
            }
        }
        if frame_len(self.sample_rate) == 0 {
            return Err(Error::invalid("sample_rate too low for a 0.27 s frame"));
        }
        Ok(())
    }

    pub fn n_samples(&self) -> u64 {
        (self.duration * self.sample_rate).round() as u64
    }

    /// Samples per block; blocks are one FFT frame long.
    pub fn block_len(&self) -> usize {
        frame_len(self.sample_rate)
    }

    pub fn n_blocks(&self) -> u64 {
        self.n_samples().div_ceil(self.block_len() as u64)
    }

    pub fn channel_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Which polarization channel carries each of the two burst elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BurstCase {
    RL,
    LR,
    RR,
    LL,
}

impl BurstCase {
    /// Channel labels of (first element, second element).
    pub fn labels(self) -> (&'static str, &'static str) {
        match self {
            BurstCase::RL => ("R", "L"),
            BurstCase::LR => ("L", "R"),
            BurstCase::RR => ("R", "R"),
            BurstCase::LL => ("L", "L"),
        }
    }
}

impl fmt::Display for BurstCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.labels();
        write!(f, "{a}{b}")
    }
}

impl FromStr for BurstCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "RL" => Ok(BurstCase::RL),
            "LR" => Ok(BurstCase::LR),
            "RR" => Ok(BurstCase::RR),
            "LL" => Ok(BurstCase::LL),
            other => Err(Error::invalid(format!("unknown burst case {other:?}"))),
        }
    }
}

/// One Δt Δf burst: element 1 on `[t_a, t_a + duration]`, element 2 on
/// `[t_a + delta_t, t_a + delta_t + duration]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurstSpec {
    /// Burst start, seconds from stream start.
    pub t_a: f64,
    /// Interarrival time of the two elements, seconds.
    pub delta_t: f64,
    /// Element duration (matched filter integration time), seconds.
    pub duration: f64,
    /// Baseband frequency of element 1, Hz.
    pub f1: f64,
    /// Baseband frequency of element 2, Hz.
    pub f2: f64,
    pub a1: f64,
    pub a2: f64,
    pub case: BurstCase,
}

impl BurstSpec {
    pub fn delta_f(&self) -> f64 {
        self.f2 - self.f1
    }

    fn validate(&self) -> Result<()> {
        if !(self.a1 >= 1.0 && self.a2 >= 1.0) {
            return Err(Error::invalid("burst amplitude factors must be >= 1"));
        }
        if !(self.duration > 0.0) {
            return Err(Error::invalid("burst duration must be positive"));
        }
        if !(self.delta_t >= 0.0) {
            return Err(Error::invalid("burst delta_t must be >= 0"));
        }
        if !(self.t_a >= 0.0) {
            return Err(Error::invalid("burst start must be >= 0"));
        }
        Ok(())
    }
}

/// Noise level, bursts and optional wideband background of a capture.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalModel {
    /// Per-quadrature standard deviation of the receiver noise.
    pub noise_sigma: f64,
    pub bursts: Vec<BurstSpec>,
    /// Per-quadrature standard deviation of the wideband `R0`/`L0` term.
    pub background: f64,
}

impl SignalModel {
    pub fn noise_only(noise_sigma: f64) -> Self {
        SignalModel {
            noise_sigma,
            bursts: Vec::new(),
            background: 0.0,
        }
    }
}

/// A contiguous run of complex baseband samples from one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBlock {
    pub channel: usize,
    pub index: u64,
    /// Index of the first sample within the channel stream.
    pub start_sample: u64,
    pub samples: Vec<Complex32>,
}

/// Amplitude of a sinusoid whose on-bin power equals the expected noise
/// power of one FFT bin, for complex noise of per-quadrature `sigma`.
pub fn unit_amplitude(sigma: f64, frame_len: usize) -> f64 {
    sigma * (2.0 / frame_len as f64).sqrt()
}

fn block_rng(seed: u64, domain: u64, channel: usize, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    key[16..24].copy_from_slice(&(channel as u64).to_le_bytes());
    key[24..].copy_from_slice(&index.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn add_gaussian(samples: &mut [Complex32], rng: &mut ChaCha8Rng, sigma: f64) {
    for s in samples.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        s.re += (sigma * re) as f32;
        s.im += (sigma * im) as f32;
    }
}

/// Deterministic complex AWGN source.
#[derive(Debug, Clone)]
pub struct AwgnSource {
    plan: ChannelPlan,
    sigma: f64,
}

/// Builds an AWGN source with per-quadrature standard deviation `sigma`.
pub fn generate_awgn(plan: &ChannelPlan, sigma: f64) -> Result<AwgnSource> {
    plan.validate()?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("noise sigma must be positive"));
    }
    Ok(AwgnSource {
        plan: plan.clone(),
        sigma,
    })
}

impl AwgnSource {
    pub fn plan(&self) -> &ChannelPlan {
        &self.plan
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Block `index` of `channel`; blocks past the end of the stream are empty.
    pub fn block(&self, channel: usize, index: u64) -> SampleBlock {
        let block_len = self.plan.block_len() as u64;
        let start = index * block_len;
        let len = self.plan.n_samples().saturating_sub(start).min(block_len) as usize;
        let mut samples = vec![Complex32::new(0.0, 0.0); len];
        let mut rng = block_rng(self.plan.seed, NOISE_DOMAIN, channel, index);
        add_gaussian(&mut samples, &mut rng, self.sigma);
        SampleBlock {
            channel,
            index,
            start_sample: start,
            samples,
        }
    }

    pub fn stream(&self, channel: usize) -> impl Iterator<Item = SampleBlock> + '_ {
        (0..self.plan.n_blocks()).map(move |i| self.block(channel, i))
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Element {
    channel: usize,
    start: u64,
    len: u64,
    /// Cycles per sample.
    cycles: f64,
    amplitude: f64,
}

/// Adds burst elements and the optional wideband background to blocks.
#[derive(Debug, Clone)]
pub struct BurstInjector {
    seed: u64,
    background: f64,
    elements: Vec<Element>,
}

impl BurstInjector {
    pub fn new(plan: &ChannelPlan, model: &SignalModel) -> Result<Self> {
        plan.validate()?;
        if !(model.noise_sigma > 0.0) {
            return Err(Error::invalid("noise sigma must be positive"));
        }
        if !(model.background >= 0.0) {
            return Err(Error::invalid("background amplitude must be >= 0"));
        }
        let unit = unit_amplitude(model.noise_sigma, plan.block_len());
        let nyquist = plan.sample_rate / 2.0;
        let n_samples = plan.n_samples();
        let mut elements = Vec::new();
        for (i, burst) in model.bursts.iter().enumerate() {
            burst.validate()?;
            let (label1, label2) = burst.case.labels();
            let parts = [
                (label1, burst.t_a, burst.f1, burst.a1),
                (label2, burst.t_a + burst.delta_t, burst.f2, burst.a2),
            ];
            for (label, t0, freq, amp) in parts {
                if !(freq.abs() < nyquist) {
                    return Err(Error::invalid(format!(
                        "burst {i}: frequency {freq} Hz outside +/-{nyquist} Hz"
                    )));
                }
                let start = (t0 * plan.sample_rate).round() as u64;
                let len = (burst.duration * plan.sample_rate).round() as u64;
                if start + len > n_samples {
                    return Err(Error::invalid(format!(
                        "burst {i}: element at {t0} s extends past the stream end"
                    )));
                }
                let channel = plan.channel_index(label).ok_or_else(|| {
                    Error::invalid(format!(
                        "burst {i}: case {} needs channel label {label:?}",
                        burst.case
                    ))
                })?;
                if amp > 1.0 {
                    elements.push(Element {
                        channel,
                        start,
                        len,
                        cycles: freq / plan.sample_rate,
                        amplitude: amp * unit,
                    });
                }
            }
        }
        Ok(BurstInjector {
            seed: plan.seed,
            background: model.background,
            elements,
        })
    }

    pub fn apply(&self, block: &mut SampleBlock) {
        if self.background > 0.0 {
            let mut rng = block_rng(self.seed, BACKGROUND_DOMAIN, block.channel, block.index);
            add_gaussian(&mut block.samples, &mut rng, self.background);
        }
        let block_start = block.start_sample;
        let block_end = block_start + block.samples.len() as u64;
        for el in self.elements.iter().filter(|e| e.channel == block.channel) {
            let lo = el.start.max(block_start);
            let hi = (el.start + el.len).min(block_end);
            for n in lo..hi {
                let phase = 2.0 * PI * (el.cycles * n as f64).fract();
                let s = &mut block.samples[(n - block_start) as usize];
                s.re += (el.amplitude * phase.cos()) as f32;
                s.im += (el.amplitude * phase.sin()) as f32;
            }
        }
    }
}

/// Applies `model`'s bursts to a sequence of blocks.
pub fn inject_bursts(
    plan: &ChannelPlan,
    model: &SignalModel,
    blocks: impl IntoIterator<Item = SampleBlock>,
) -> Result<Vec<SampleBlock>> {
    let injector = BurstInjector::new(plan, model)?;
    Ok(blocks
        .into_iter()
        .map(|mut b| {
            injector.apply(&mut b);
            b
        })
        .collect())
}

/// Noise plus bursts for every channel of a plan.
#[derive(Debug, Clone)]
pub struct Synthesizer {
    awgn: AwgnSource,
    injector: BurstInjector,
}

impl Synthesizer {
    pub fn new(plan: &ChannelPlan, model: &SignalModel) -> Result<Self> {
        Ok(Synthesizer {
            awgn: generate_awgn(plan, model.noise_sigma)?,
            injector: BurstInjector::new(plan, model)?,
        })
    }

    pub fn plan(&self) -> &ChannelPlan {
        self.awgn.plan()
    }

    pub fn block(&self, channel: usize, index: u64) -> SampleBlock {
        let mut block = self.awgn.block(channel, index);
        self.injector.apply(&mut block);
        block
    }

    /// Blocks `range` of `channel`, generated by up to `workers` threads and
    /// returned in index order.
    pub fn blocks(&self, channel: usize, range: std::ops::Range<u64>, workers: usize) -> Vec<SampleBlock> {
        let indices: Vec<u64> = range.collect();
        let workers = workers.max(1).min(indices.len().max(1));
        if workers == 1 {
            return indices.iter().map(|&i| self.block(channel, i)).collect();
        }
        let chunk = indices.len().div_ceil(workers);
        std::thread::scope(|scope| {
            let handles: Vec<_> = indices
                .chunks(chunk)
                .map(|part| scope.spawn(move || part.iter().map(|&i| self.block(channel, i)).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("synth worker panicked"))
                .collect()
        })
    }
}
