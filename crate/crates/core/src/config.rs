//! Run configuration: TOML in, resolved TOML embedded in every output.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channelizer::{DetectorParams, DutyCycle};
use crate::pairs::PairParams;
use crate::rfi::ExcisionParams;
use crate::sky::SiteGeometry;
use crate::synth::{BurstSpec, ChannelPlan, SignalModel};
use crate::{Error, Result, SEGMENT_BINS};

/// Line prefix of the embedded configuration in output files.
pub const EMBED_PREFIX: &str = "#% ";

/// Environment variable naming the directory searched for relative
/// `--config` paths.
pub const CONFIG_DIR_ENV: &str = "DTDF_CONFIG_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    pub start_mjd: f64,
    /// Site of the capture processed by `synth` and `detect`.
    pub site: String,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 1,
            start_mjd: 59000.0,
            site: "GB".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReceiverSection {
    pub sample_rate: f64,
    pub center_rf: f64,
    pub channels: Vec<String>,
    /// Capture length, seconds.
    pub duration: f64,
    /// Per-quadrature noise standard deviation before quantization.
    pub noise_sigma: f64,
    /// Quantizer gain; defaults to placing 8 sigma at full scale.
    pub iq_gain: Option<f64>,
    /// Largest tolerated fraction of clipped quadrature values.
    pub clip_limit: f64,
    /// Per-quadrature sigma of the wideband background term.
    pub background: f64,
}

impl Default for ReceiverSection {
    fn default() -> Self {
        ReceiverSection {
            sample_rate: 1e6,
            center_rf: 1425e6,
            channels: vec!["R".into(), "L".into()],
            duration: 60.0,
            noise_sigma: 1.0,
            iq_gain: None,
            clip_limit: 1e-4,
            background: 0.0,
        }
    }
}

impl ReceiverSection {
    pub fn gain(&self) -> f64 {
        self.iq_gain.unwrap_or(127.0 / (8.0 * self.noise_sigma))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSection {
    pub bursts: Vec<BurstSpec>,
    /// Channels that receive only the noise source.
    pub noise_only_channels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectSection {
    pub snr_single_db: f64,
    pub snr_comp_db: f64,
    pub duty_cycle: f64,
    pub noise_frames: usize,
    pub queue_depth: usize,
    /// Apply the stateless harmonic and static band predicates while detecting.
    pub inline_excision: bool,
}

impl Default for DetectSection {
    fn default() -> Self {
        DetectSection {
            snr_single_db: 11.0,
            snr_comp_db: 11.8,
            duty_cycle: 1.0,
            noise_frames: 4,
            queue_depth: 8,
            inline_excision: false,
        }
    }
}

impl DetectSection {
    pub fn params(&self) -> DetectorParams {
        DetectorParams {
            snr_single_db: self.snr_single_db,
            snr_comp_db: self.snr_comp_db,
            segment_bins: SEGMENT_BINS,
            noise_frames: self.noise_frames,
        }
    }

    pub fn duty(&self) -> Result<DutyCycle> {
        DutyCycle::from_fraction(self.duty_cycle)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodACase {
    pub alpha: f64,
    pub n: u64,
    pub n_df: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainInput {
    pub label: String,
    pub likelihood: f64,
    pub p_data: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzeSection {
    pub method_a: Vec<MethodACase>,
    pub ra_center: f64,
    pub ra_width: f64,
    pub ra_count: usize,
    /// RA span over which uniform pairs are expected, hours.
    pub ra_obs: f64,
    pub prior: f64,
    pub chain: Vec<ChainInput>,
}

impl Default for AnalyzeSection {
    fn default() -> Self {
        AnalyzeSection {
            method_a: Vec::new(),
            ra_center: 5.25,
            ra_width: 0.3,
            ra_count: 5,
            ra_obs: 4.0,
            prior: 1.0,
            chain: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSection {
    pub df50_bandwidth: f64,
    pub df50_frames: usize,
    pub df50_events_per_frame: f64,
    pub df50_tolerance: f64,
    /// Frames of synthetic receiver noise for the threshold-rate check.
    pub rate_frames: u64,
    /// Exponential-power draws for the rate oracle.
    pub oracle_bin_frames: u64,
    pub rate_sigmas: f64,
}

impl Default for McSection {
    fn default() -> Self {
        McSection {
            df50_bandwidth: 62.5e6,
            df50_frames: 1000,
            df50_events_per_frame: 100.0,
            df50_tolerance: 0.03,
            rate_frames: 100,
            oracle_bin_frames: 100_000_000,
            rate_sigmas: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub run: RunSection,
    pub receiver: ReceiverSection,
    /// Sites in addition to (or replacing) the built-in GB, HA and DU.
    pub sites: Vec<SiteGeometry>,
    pub synth: SynthSection,
    pub detect: DetectSection,
    pub excision: ExcisionParams,
    pub pairs: PairParams,
    pub analyze: AnalyzeSection,
    pub mc: McSection,
}

impl RunConfig {
    /// Parses TOML; errors carry the source name and line.
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start.min(text.len())].lines().count().max(1));
            match line {
                Some(l) => Error::Config(format!("{origin}:{l}: {}", e.message())),
                None => Error::Config(format!("{origin}: {}", e.message())),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a TOML file, or the configuration embedded in a dtdf output.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let origin = path.display().to_string();
        match extract_embedded(&text) {
            Some(embedded) => RunConfig::from_toml(&embedded, &origin),
            None => RunConfig::from_toml(&text, &origin),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Error::Config(m);
        if self.receiver.channels.is_empty() {
            return Err(cfg("receiver.channels is empty".into()));
        }
        if !(self.receiver.noise_sigma > 0.0) {
            return Err(cfg("receiver.noise_sigma must be positive".into()));
        }
        if !(self.receiver.gain() > 0.0) {
            return Err(cfg("receiver.iq_gain must be positive".into()));
        }
        for c in &self.synth.noise_only_channels {
            if !self.receiver.channels.contains(c) {
                return Err(cfg(format!("synth.noise_only_channels: unknown channel {c:?}")));
            }
        }
        self.detect.duty().map_err(|e| cfg(format!("detect.duty_cycle: {e}")))?;
        if self.detect.queue_depth == 0 {
            return Err(cfg("detect.queue_depth must be at least 1".into()));
        }
        self.excision.validate().map_err(|e| cfg(format!("excision: {e}")))?;
        self.pairs.validate().map_err(|e| cfg(format!("pairs: {e}")))?;
        self.site(&self.run.site)?;
        self.site(&self.pairs.reference)?;
        Ok(())
    }

    /// Canonical TOML of the resolved configuration.
    pub fn resolved(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// First 16 hex digits of the SHA-256 of the resolved TOML.
    pub fn hash(&self) -> String {
        config_hash(&self.resolved())
    }

    pub fn site(&self, id: &str) -> Result<SiteGeometry> {
        if let Some(s) = self.sites.iter().find(|s| s.site_id == id) {
            return Ok(s.clone());
        }
        match id {
            "GB" => Ok(SiteGeometry::green_bank()),
            "HA" => Ok(SiteGeometry::haswell()),
            "DU" => Ok(SiteGeometry::dunbarton()),
            other => Err(Error::Config(format!("unknown site {other:?}"))),
        }
    }

    pub fn channel_plan(&self) -> ChannelPlan {
        ChannelPlan {
            sample_rate: self.receiver.sample_rate,
            center_rf: self.receiver.center_rf,
            labels: self.receiver.channels.clone(),
            duration: self.receiver.duration,
            seed: self.run.seed,
            start_mjd: self.run.start_mjd,
        }
    }

    pub fn signal_model(&self) -> SignalModel {
        SignalModel {
            noise_sigma: self.receiver.noise_sigma,
            bursts: self.synth.bursts.clone(),
            background: self.receiver.background,
        }
    }
}

pub fn config_hash(resolved: &str) -> String {
    let digest = Sha256::digest(resolved.as_bytes());
    hex::encode(digest)[..16].to_string()
}

/// Prefixes every line with [`EMBED_PREFIX`].
pub fn embed(resolved: &str) -> String {
    resolved.lines().map(|l| format!("{EMBED_PREFIX}{l}\n")).collect()
}

/// The embedded configuration of an output file, if any.
pub fn extract_embedded(text: &str) -> Option<String> {
    let mut out = String::new();
    let mut found = false;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix(EMBED_PREFIX) {
            out.push_str(rest);
            out.push('\n');
            found = true;
        }
    }
    found.then_some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = RunConfig::default();
        let again = RunConfig::from_toml(&cfg.resolved(), "mem").unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
        assert_eq!(cfg.hash().len(), 16);
    }

    #[test]
    fn embedded_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.run.seed = 99;
        let text = format!("# header\n{}a,b\n1,2\n", embed(&cfg.resolved()));
        let back = RunConfig::from_toml(&extract_embedded(&text).unwrap(), "mem").unwrap();
        assert_eq!(back, cfg);
        assert!(extract_embedded("a,b\n").is_none());
    }

    #[test]
    fn malformed_reports_line() {
        let err = RunConfig::from_toml("[run]\nseed = 1\nstart_mjd = \"x\"\n", "bad.toml").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bad.toml:3"), "{msg}");
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(RunConfig::from_toml("[detect]\nthreshold = 3\n", "x").is_err());
    }

    #[test]
    fn bad_duty_cycle_rejected() {
        assert!(RunConfig::from_toml("[detect]\nduty_cycle = 0.4\n", "x").is_err());
    }

    #[test]
    fn default_gain_puts_eight_sigma_at_full_scale() {
        let r = ReceiverSection::default();
        assert!((r.gain() * 8.0 * r.noise_sigma - 127.0).abs() < 1e-12);
    }

    #[test]
    fn custom_site() {
        let cfg = RunConfig::from_toml(
            "[run]\nsite = \"XX\"\n[[sites]]\nsite_id = \"XX\"\nlatitude = 10.0\nlongitude = 20.0\n",
            "x",
        )
        .unwrap();
        assert_eq!(cfg.site("XX").unwrap().latitude, 10.0);
        assert!(cfg.site("YY").is_err());
    }
}
