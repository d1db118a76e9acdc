//! Spectral events and the event file format.
//!
//! An event file is plain text:
//!
//! ```text
//! # dtdf-events v1 key=value key=value ...
//! #% <embedded run configuration, one line each>
//! site_id,polarization,mjd,rf_freq_hz,snr_single_db,snr_comp_db,bin_index,ra_hours
//! GB,R,59000.0000312,1425200000.0000,18.213,18.402,189000,5.250123
//! ```
//!
//! Numbers are written at fixed precision (MJD 7 dp, frequency 4 dp, SNRs
//! 3 dp, RA 6 dp). Events are created already rounded to that precision, so
//! reading a written file yields identical values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::config::EMBED_PREFIX;
use crate::{Error, Result};

pub const EVENT_FORMAT: &str = "dtdf-events";
pub const EVENT_VERSION: u32 = 1;
pub const EVENT_COLUMNS: &str = "site_id,polarization,mjd,rf_freq_hz,snr_single_db,snr_comp_db,bin_index,ra_hours";

/// Event files roll over at UTC-aligned four-hour boundaries.
pub const WINDOWS_PER_DAY: f64 = 6.0;

/// One SNR threshold crossing.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEvent {
    pub site_id: String,
    pub polarization: String,
    /// Frame start, MJD.
    pub mjd: f64,
    pub rf_freq: f64,
    /// Single-frame SNR, dB.
    pub snr_single: f64,
    /// Three-frame composite SNR, dB.
    pub snr_comp: f64,
    /// Bin index within the frequency-ordered spectrum.
    pub bin_index: usize,
    pub ra_hours: f64,
}

/// `x` rounded to `dp` decimals exactly as the file writer prints it.
pub fn round_dp(x: f64, dp: usize) -> f64 {
    format!("{x:.dp$}").parse().expect("formatted float parses")
}

impl SpectralEvent {
    /// Builds an event with every field rounded to file precision.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        site_id: &str,
        polarization: &str,
        mjd: f64,
        rf_freq: f64,
        snr_single: f64,
        snr_comp: f64,
        bin_index: usize,
        ra_hours: f64,
    ) -> Self {
        SpectralEvent {
            site_id: site_id.to_string(),
            polarization: polarization.to_string(),
            mjd: round_dp(mjd, 7),
            rf_freq: round_dp(rf_freq, 4),
            snr_single: round_dp(snr_single, 3),
            snr_comp: round_dp(snr_comp, 3),
            bin_index,
            ra_hours: round_dp(ra_hours, 6),
        }
    }

    /// MJD in units of 1e-7 day, the identity used for "same MJD".
    pub fn mjd_key(&self) -> i64 {
        (self.mjd * 1e7).round() as i64
    }

    fn to_line(&self) -> String {
        format!(
            "{},{},{:.7},{:.4},{:.3},{:.3},{},{:.6}",
            self.site_id,
            self.polarization,
            self.mjd,
            self.rf_freq,
            self.snr_single,
            self.snr_comp,
            self.bin_index,
            self.ra_hours
        )
    }

    fn parse_line(line: &str) -> std::result::Result<Self, String> {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 8 {
            return Err(format!("expected 8 columns, found {}", cols.len()));
        }
        let num = |i: usize| -> std::result::Result<f64, String> {
            cols[i].trim().parse().map_err(|_| format!("column {} is not a number: {:?}", i + 1, cols[i]))
        };
        Ok(SpectralEvent {
            site_id: cols[0].to_string(),
            polarization: cols[1].to_string(),
            mjd: num(2)?,
            rf_freq: num(3)?,
            snr_single: num(4)?,
            snr_comp: num(5)?,
            bin_index: cols[6].trim().parse().map_err(|_| format!("bad bin index {:?}", cols[6]))?,
            ra_hours: num(7)?,
        })
    }
}

/// Receiver and run parameters recorded in an event file header.
#[derive(Debug, Clone, PartialEq)]
pub struct EventFileHeader {
    pub site_id: String,
    pub polarization: String,
    pub sample_rate: f64,
    pub center_rf: f64,
    pub fft_len: usize,
    pub duty_cycle: f64,
    pub snr_single_db: f64,
    pub snr_comp_db: f64,
    pub window_start_mjd: f64,
    pub window_end_mjd: f64,
    /// Frames processed (after duty cycling) inside the window.
    pub frames: u64,
    pub config_hash: String,
    /// Stage-specific `key=value` pairs, written after the standard keys.
    pub extra: Vec<(String, String)>,
}

impl EventFileHeader {
    pub fn bin_width(&self) -> f64 {
        self.sample_rate / self.fft_len as f64
    }

    /// RF frequency of frequency-ordered bin `bin`.
    pub fn bin_freq(&self, bin: usize) -> f64 {
        let half = (self.fft_len / 2) as f64;
        self.center_rf + (bin as f64 - half) * self.bin_width()
    }

    pub fn band(&self) -> (f64, f64) {
        (self.bin_freq(0), self.bin_freq(self.fft_len))
    }

    pub fn extra(&self, key: &str) -> Option<&str> {
        self.extra.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn to_line(&self) -> String {
        let mut s = format!(
            "# {EVENT_FORMAT} v{EVENT_VERSION} site={} pol={} sample_rate={} center_rf={} fft_len={} duty_cycle={} \
             snr_single_db={} snr_comp_db={} window_start_mjd={:.7} window_end_mjd={:.7} frames={} config_hash={}",
            self.site_id,
            self.polarization,
            self.sample_rate,
            self.center_rf,
            self.fft_len,
            self.duty_cycle,
            self.snr_single_db,
            self.snr_comp_db,
            self.window_start_mjd,
            self.window_end_mjd,
            self.frames,
            self.config_hash
        );
        for (k, v) in &self.extra {
            let _ = write!(s, " {k}={v}");
        }
        s
    }

    fn parse_line(line: &str) -> std::result::Result<Self, String> {
        let mut words = line.trim_start_matches('#').split_whitespace();
        if words.next() != Some(EVENT_FORMAT) {
            return Err("not a dtdf event file".into());
        }
        let version = words.next().unwrap_or("");
        if version != format!("v{EVENT_VERSION}") {
            return Err(format!("unsupported event format version {version:?}"));
        }
        let mut kv: Vec<(String, String)> = Vec::new();
        for w in words {
            let (k, v) = w.split_once('=').ok_or_else(|| format!("malformed header field {w:?}"))?;
            kv.push((k.to_string(), v.to_string()));
        }
        const STANDARD: [&str; 12] = [
            "site",
            "pol",
            "sample_rate",
            "center_rf",
            "fft_len",
            "duty_cycle",
            "snr_single_db",
            "snr_comp_db",
            "window_start_mjd",
            "window_end_mjd",
            "frames",
            "config_hash",
        ];
        let get = |key: &str| -> std::result::Result<&str, String> {
            kv.iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| format!("header is missing {key}"))
        };
        let num = |key: &str| -> std::result::Result<f64, String> {
            get(key)?.parse().map_err(|_| format!("header field {key} is not a number"))
        };
        Ok(EventFileHeader {
            site_id: get("site")?.to_string(),
            polarization: get("pol")?.to_string(),
            sample_rate: num("sample_rate")?,
            center_rf: num("center_rf")?,
            fft_len: get("fft_len")?.parse().map_err(|_| "bad fft_len".to_string())?,
            duty_cycle: num("duty_cycle")?,
            snr_single_db: num("snr_single_db")?,
            snr_comp_db: num("snr_comp_db")?,
            window_start_mjd: num("window_start_mjd")?,
            window_end_mjd: num("window_end_mjd")?,
            frames: get("frames")?.parse().map_err(|_| "bad frames".to_string())?,
            config_hash: get("config_hash")?.to_string(),
            extra: kv.iter().filter(|(k, _)| !STANDARD.contains(&k.as_str())).cloned().collect(),
        })
    }
}

/// Index of the four-hour window containing `mjd`.
pub fn window_index(mjd: f64) -> i64 {
    (mjd * WINDOWS_PER_DAY + 1e-9).floor() as i64
}

pub fn window_bounds(index: i64) -> (f64, f64) {
    (
        round_dp(index as f64 / WINDOWS_PER_DAY, 7),
        round_dp((index + 1) as f64 / WINDOWS_PER_DAY, 7),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventFile {
    pub header: EventFileHeader,
    /// Embedded run configuration (TOML), if any.
    pub config: Option<String>,
    pub events: Vec<SpectralEvent>,
}

impl EventFile {
    pub fn to_text(&self) -> String {
        let mut out = self.header.to_line();
        out.push('\n');
        if let Some(cfg) = &self.config {
            for line in cfg.lines() {
                out.push_str(EMBED_PREFIX);
                out.push_str(line);
                out.push('\n');
            }
        }
        out.push_str(EVENT_COLUMNS);
        out.push('\n');
        for e in &self.events {
            out.push_str(&e.to_line());
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, first) = lines.next().ok_or_else(|| Error::format(path, 1, "empty event file"))?;
        let header = EventFileHeader::parse_line(first).map_err(|m| Error::format(path, 1, m))?;
        let mut config = String::new();
        let mut has_config = false;
        let mut events = Vec::new();
        let mut seen_columns = false;
        for (i, line) in lines {
            if let Some(rest) = line.strip_prefix(EMBED_PREFIX) {
                config.push_str(rest);
                config.push('\n');
                has_config = true;
            } else if line.starts_with('#') || line.trim().is_empty() {
                continue;
            } else if !seen_columns {
                if line != EVENT_COLUMNS {
                    return Err(Error::format(path, i + 1, "unexpected column header"));
                }
                seen_columns = true;
            } else {
                events.push(SpectralEvent::parse_line(line).map_err(|m| Error::format(path, i + 1, m))?);
            }
        }
        Ok(EventFile {
            header,
            config: has_config.then_some(config),
            events,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn header() -> EventFileHeader {
        EventFileHeader {
            site_id: "GB".into(),
            polarization: "R".into(),
            sample_rate: 1e6,
            center_rf: 1425e6,
            fft_len: 270_000,
            duty_cycle: 1.0,
            snr_single_db: 11.0,
            snr_comp_db: 11.8,
            window_start_mjd: 59000.0,
            window_end_mjd: window_bounds(354_000).1,
            frames: 222,
            config_hash: "0123abcd".into(),
            extra: vec![("stage".into(), "detect".into())],
        }
    }

    #[test]
    fn header_only_file() {
        let f = EventFile {
            header: header(),
            config: Some("[run]\nseed = 1\n".into()),
            events: vec![],
        };
        let back = EventFile::parse(&f.to_text(), Path::new("x")).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.header.extra("stage"), Some("detect"));
    }

    #[test]
    fn bin_frequencies() {
        let h = header();
        assert!((h.bin_width() - 3.703_703_7).abs() < 1e-6);
        assert_eq!(h.bin_freq(135_000), 1425e6);
        assert_eq!(h.bin_freq(0), 1424.5e6);
    }

    #[test]
    fn windows_align_to_four_hours() {
        assert_eq!(window_index(59000.0), 59000 * 6);
        assert_eq!(window_index(59000.1666), 59000 * 6);
        assert_eq!(window_index(59000.5), 59000 * 6 + 3);
        let (a, b) = window_bounds(window_index(59000.3));
        assert!(a <= 59000.3 && 59000.3 < b);
    }

    #[test]
    fn malformed_line_reports_position() {
        let mut text = EventFile { header: header(), config: None, events: vec![] }.to_text();
        text.push_str("GB,R,oops\n");
        match EventFile::parse(&text, Path::new("f.csv")) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn events_survive_text_round_trip(
            mjd in 58000.0f64..60000.0,
            f in 1.39e9f64..1.46e9,
            s1 in 11.0f64..40.0,
            s2 in 11.8f64..40.0,
            bin in 0usize..17_000_000,
            ra in 0.0f64..24.0,
        ) {
            let e = SpectralEvent::new("HA", "L", mjd, f, s1, s2, bin, ra);
            let file = EventFile { header: header(), config: None, events: vec![e.clone()] };
            let back = EventFile::parse(&file.to_text(), Path::new("p")).unwrap();
            prop_assert_eq!(&back.events[0], &e);
        }
    }
}
