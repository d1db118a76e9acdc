//! Machine RFI excision: persistent, dynamic (IIR), harmonic and static-band
//! processes, with audit records.
//!
//! Harmonic and static-band excision are per-event predicates. Persistent
//! and dynamic masks are computed from the events that survive those two
//! predicates, never from each other's output, so the kept set does not
//! depend on the order the processes are applied in. Raw event files are
//! never modified; excision writes new files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::events::{EventFile, EventFileHeader, SpectralEvent};
use crate::report::Table;
use crate::stats::{awgn_event_probability, expected_event_snr_comp_db};
use crate::{Error, Result, SEGMENT_BINS};

/// Excised fraction of the band above which a warning is issued.
pub const EXCISED_WARN_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessId {
    Static,
    Harmonic,
    Persistent,
    Dynamic,
}

impl ProcessId {
    /// Canonical order, also the audit attribution precedence.
    pub const ALL: [ProcessId; 4] = [ProcessId::Static, ProcessId::Harmonic, ProcessId::Persistent, ProcessId::Dynamic];

    pub fn as_str(self) -> &'static str {
        match self {
            ProcessId::Static => "static",
            ProcessId::Harmonic => "harmonic",
            ProcessId::Persistent => "persistent",
            ProcessId::Dynamic => "dynamic",
        }
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProcessId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProcessId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown excision process {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExcisionParams {
    /// Inclusive `[low, high]` RF bands in Hz.
    pub static_bands: Vec<[f64; 2]>,
    pub persistent_factor: f64,
    /// Poisson margin in standard deviations for the persistent trigger.
    pub persistent_sigma: f64,
    /// Smallest count that can trigger, for windows expecting well under
    /// one AWGN event per segment.
    pub persistent_min_count: f64,
    pub iir_alpha: f64,
    /// Fixed IIR threshold; when absent it is the expected AWGN event
    /// composite SNR plus `iir_margin_db`.
    pub iir_threshold_db: Option<f64>,
    pub iir_margin_db: f64,
    pub harmonic_base_hz: f64,
    pub harmonic_halfwidth_hz: f64,
    /// Order processes are applied in; any order gives the same result.
    pub order: Vec<ProcessId>,
}

impl Default for ExcisionParams {
    fn default() -> Self {
        ExcisionParams {
            static_bands: Vec::new(),
            persistent_factor: 10.0,
            persistent_sigma: 5.0,
            persistent_min_count: 8.0,
            iir_alpha: 0.1,
            iir_threshold_db: None,
            iir_margin_db: 6.0,
            harmonic_base_hz: 500e3,
            harmonic_halfwidth_hz: 25e3,
            order: ProcessId::ALL.to_vec(),
        }
    }
}

impl ExcisionParams {
    /// Band set of the Twenty-six Foot telescope.
    pub fn twenty_six_foot_bands() -> Vec<[f64; 2]> {
        vec![[0.0, 1400.8e6], [1424.0e6, 1426.0e6], [1447.0e6, 1e12]]
    }

    pub fn validate(&self) -> Result<()> {
        for b in &self.static_bands {
            if !(b[0] < b[1]) {
                return Err(Error::invalid(format!("static band {b:?} must have low < high")));
            }
        }
        if !(self.iir_alpha > 0.0 && self.iir_alpha <= 1.0) {
            return Err(Error::invalid("iir_alpha must be in (0, 1]"));
        }
        if !(self.harmonic_base_hz > 0.0 && self.harmonic_halfwidth_hz >= 0.0) {
            return Err(Error::invalid("harmonic base must be positive and halfwidth >= 0"));
        }
        if !(self.persistent_factor >= 1.0 && self.persistent_sigma >= 0.0) {
            return Err(Error::invalid("persistent_factor must be >= 1 and persistent_sigma >= 0"));
        }
        Ok(())
    }

    pub fn iir_threshold_for(&self, header: &EventFileHeader) -> f64 {
        self.iir_threshold_db.unwrap_or_else(|| {
            expected_event_snr_comp_db(header.snr_single_db, header.snr_comp_db, 3) + self.iir_margin_db
        })
    }

    /// Header fields recording the excision parameters.
    pub fn header_fields(&self, header: &EventFileHeader) -> Vec<(String, String)> {
        let bands: Vec<String> = self.static_bands.iter().map(|b| format!("{}:{}", b[0], b[1])).collect();
        vec![
            ("stage".into(), "excise".into()),
            ("static_bands".into(), if bands.is_empty() { "none".into() } else { bands.join(";") }),
            ("persistent_factor".into(), self.persistent_factor.to_string()),
            ("persistent_sigma".into(), self.persistent_sigma.to_string()),
            ("persistent_min_count".into(), self.persistent_min_count.to_string()),
            ("iir_alpha".into(), self.iir_alpha.to_string()),
            ("iir_threshold_db".into(), format!("{:.4}", self.iir_threshold_for(header))),
            ("harmonic_base_hz".into(), self.harmonic_base_hz.to_string()),
            ("harmonic_halfwidth_hz".into(), self.harmonic_halfwidth_hz.to_string()),
        ]
    }
}

/// Distance from `rf` to the nearest harmonic of `base`.
pub fn harmonic_distance(rf: f64, base: f64) -> f64 {
    (rf - base * (rf / base).round()).abs()
}

/// Drop iff within `halfwidth` (inclusive) of a harmonic of `base`.
pub fn harmonic_excision(rf: f64, base: f64, halfwidth: f64) -> bool {
    harmonic_distance(rf, base) <= halfwidth
}

/// Drop iff inside any inclusive band.
pub fn static_band_excision(rf: f64, bands: &[[f64; 2]]) -> bool {
    bands.iter().any(|b| b[0] <= rf && rf <= b[1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskSegment {
    pub f_low: f64,
    pub f_high: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub process: ProcessId,
    pub reason: String,
}

impl MaskSegment {
    pub fn covers(&self, rf: f64, mjd: f64) -> bool {
        self.f_low <= rf && rf < self.f_high && self.t_start <= mjd && mjd <= self.t_end
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExcisionMask {
    pub segments: Vec<MaskSegment>,
}

/// Per-segment count record of the persistent process.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistentRecord {
    pub segment: usize,
    pub f_low: f64,
    pub f_high: f64,
    pub count: u64,
    pub expected: f64,
    pub limit: f64,
    pub masked: bool,
}

fn segment_edges(header: &EventFileHeader, seg: usize) -> (f64, f64) {
    let lo = seg * SEGMENT_BINS;
    let hi = ((seg + 1) * SEGMENT_BINS).min(header.fft_len);
    (header.bin_freq(lo), header.bin_freq(hi))
}

fn segment_len(header: &EventFileHeader, seg: usize) -> usize {
    ((seg + 1) * SEGMENT_BINS).min(header.fft_len) - seg * SEGMENT_BINS
}

/// Trigger count for a segment expecting `expected` AWGN events.
pub fn persistent_limit(expected: f64, params: &ExcisionParams) -> f64 {
    (params.persistent_factor * expected)
        .max(expected + params.persistent_sigma * expected.sqrt())
        .max(params.persistent_min_count)
}

/// Segments with anomalous event counts over the file's window.
pub fn persistent_excision(
    header: &EventFileHeader,
    events: &[&SpectralEvent],
    params: &ExcisionParams,
) -> (ExcisionMask, Vec<PersistentRecord>) {
    let p = awgn_event_probability(header.snr_single_db, header.snr_comp_db, 3);
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for e in events {
        *counts.entry(e.bin_index / SEGMENT_BINS).or_default() += 1;
    }
    let mut mask = ExcisionMask::default();
    let mut records = Vec::new();
    for (seg, count) in counts {
        let expected = segment_len(header, seg) as f64 * header.frames as f64 * p;
        let limit = persistent_limit(expected, params);
        let masked = count as f64 > limit;
        let (f_low, f_high) = segment_edges(header, seg);
        if masked {
            mask.segments.push(MaskSegment {
                f_low,
                f_high,
                t_start: header.window_start_mjd,
                t_end: header.window_end_mjd,
                process: ProcessId::Persistent,
                reason: format!("count {count} > limit {limit:.3}"),
            });
        }
        records.push(PersistentRecord {
            segment: seg,
            f_low,
            f_high,
            count,
            expected,
            limit,
            masked,
        });
    }
    (mask, records)
}

/// Filtered-SNR state, one value per segment.
#[derive(Debug, Clone, PartialEq)]
pub struct IirState {
    pub alpha: f64,
    pub threshold_db: f64,
    pub outputs: BTreeMap<usize, f64>,
}

impl IirState {
    pub fn new(alpha: f64, threshold_db: f64) -> Self {
        IirState {
            alpha,
            threshold_db,
            outputs: BTreeMap::new(),
        }
    }

    /// Applies one event and returns the new output.
    pub fn update(&mut self, segment: usize, snr_db: f64) -> f64 {
        let y = self.outputs.entry(segment).or_insert(0.0);
        *y = (1.0 - self.alpha) * *y + self.alpha * snr_db;
        *y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IirRecord {
    pub segment: usize,
    pub f_low: f64,
    pub f_high: f64,
    pub mjd: f64,
    pub rf_freq: f64,
    pub value: f64,
    pub action: &'static str,
}

/// Runs the IIR filters over `events` (time ordered). Returns the mask, the
/// trace of every update, and which of the events fall under the mask.
pub fn iir_dynamic_excision(
    header: &EventFileHeader,
    events: &[&SpectralEvent],
    state: &mut IirState,
) -> (ExcisionMask, Vec<IirRecord>, Vec<bool>) {
    let mut trace = Vec::with_capacity(events.len());
    let mut dropped = vec![false; events.len()];
    let mut open: BTreeMap<usize, f64> = BTreeMap::new();
    let mut mask = ExcisionMask::default();
    for (i, e) in events.iter().enumerate() {
        let seg = e.bin_index / SEGMENT_BINS;
        let y = state.update(seg, e.snr_comp);
        let (f_low, f_high) = segment_edges(header, seg);
        let above = y > state.threshold_db;
        let action = match (open.contains_key(&seg), above) {
            (false, true) => {
                open.insert(seg, e.mjd);
                "mask_on"
            }
            (true, true) => "masked",
            (true, false) => {
                let start = open.remove(&seg).unwrap();
                mask.segments.push(MaskSegment {
                    f_low,
                    f_high,
                    t_start: start,
                    t_end: e.mjd,
                    process: ProcessId::Dynamic,
                    reason: format!("iir above {:.3} dB", state.threshold_db),
                });
                "mask_off"
            }
            (false, false) => "update",
        };
        dropped[i] = above;
        trace.push(IirRecord {
            segment: seg,
            f_low,
            f_high,
            mjd: e.mjd,
            rf_freq: e.rf_freq,
            value: y,
            action,
        });
    }
    for (seg, start) in open {
        let (f_low, f_high) = segment_edges(header, seg);
        mask.segments.push(MaskSegment {
            f_low,
            f_high,
            t_start: start,
            t_end: header.window_end_mjd,
            process: ProcessId::Dynamic,
            reason: format!("iir above {:.3} dB at window end", state.threshold_db),
        });
    }
    (mask, trace, dropped)
}

/// One dropped event.
#[derive(Debug, Clone, PartialEq)]
pub struct DropRecord {
    pub process: ProcessId,
    pub f_low: f64,
    pub f_high: f64,
    pub mjd: f64,
    pub rf_freq: f64,
    pub value: f64,
    pub event_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcisionResult {
    pub kept: Vec<SpectralEvent>,
    pub drops: Vec<DropRecord>,
    pub mask: ExcisionMask,
    pub iir_trace: Vec<IirRecord>,
    pub persistent: Vec<PersistentRecord>,
    pub excised_fraction: f64,
    pub iir_threshold_db: f64,
}

struct Decisions {
    /// Per raw event, the verdict of each process, with its audit value.
    verdicts: Vec<[Option<(f64, f64, f64)>; 4]>,
}

fn slot(p: ProcessId) -> usize {
    ProcessId::ALL.iter().position(|&q| q == p).unwrap()
}

/// Applies the four processes to `file` in `params.order`.
pub fn excise(file: &EventFile, params: &ExcisionParams) -> Result<ExcisionResult> {
    params.validate()?;
    let mut order_seen = BTreeSet::new();
    for p in &params.order {
        if !order_seen.insert(*p) {
            return Err(Error::invalid(format!("excision process {p} listed twice")));
        }
    }
    let header = &file.header;
    let events = &file.events;
    let mut sorted: Vec<usize> = (0..events.len()).collect();
    sorted.sort_by(|&a, &b| {
        events[a]
            .mjd_key()
            .cmp(&events[b].mjd_key())
            .then(events[a].bin_index.cmp(&events[b].bin_index))
            .then(a.cmp(&b))
    });

    let mut decisions = Decisions {
        verdicts: vec![[None; 4]; events.len()],
    };
    for (i, e) in events.iter().enumerate() {
        if static_band_excision(e.rf_freq, &params.static_bands) {
            let band = params
                .static_bands
                .iter()
                .find(|b| b[0] <= e.rf_freq && e.rf_freq <= b[1])
                .unwrap();
            decisions.verdicts[i][slot(ProcessId::Static)] = Some((band[0], band[1], e.rf_freq));
        }
        if harmonic_excision(e.rf_freq, params.harmonic_base_hz, params.harmonic_halfwidth_hz) {
            let h = params.harmonic_base_hz * (e.rf_freq / params.harmonic_base_hz).round();
            decisions.verdicts[i][slot(ProcessId::Harmonic)] = Some((
                h - params.harmonic_halfwidth_hz,
                h + params.harmonic_halfwidth_hz,
                harmonic_distance(e.rf_freq, params.harmonic_base_hz),
            ));
        }
    }

    // Masks from the events that survive the stateless predicates.
    let base: Vec<usize> = sorted
        .iter()
        .copied()
        .filter(|&i| {
            [ProcessId::Static, ProcessId::Harmonic]
                .iter()
                .all(|&p| !params.order.contains(&p) || decisions.verdicts[i][slot(p)].is_none())
        })
        .collect();
    let base_events: Vec<&SpectralEvent> = base.iter().map(|&i| &events[i]).collect();

    let (persistent_mask, persistent) = persistent_excision(header, &base_events, params);
    let masked_segments: BTreeMap<usize, u64> = persistent
        .iter()
        .filter(|r| r.masked)
        .map(|r| (r.segment, r.count))
        .collect();
    for &i in &base {
        let seg = events[i].bin_index / SEGMENT_BINS;
        if let Some(&count) = masked_segments.get(&seg) {
            let (lo, hi) = segment_edges(header, seg);
            decisions.verdicts[i][slot(ProcessId::Persistent)] = Some((lo, hi, count as f64));
        }
    }

    let iir_threshold_db = params.iir_threshold_for(header);
    let mut state = IirState::new(params.iir_alpha, iir_threshold_db);
    let (dynamic_mask, iir_trace, dyn_dropped) = iir_dynamic_excision(header, &base_events, &mut state);
    for ((&i, &d), rec) in base.iter().zip(&dyn_dropped).zip(&iir_trace) {
        if d {
            decisions.verdicts[i][slot(ProcessId::Dynamic)] = Some((rec.f_low, rec.f_high, rec.value));
        }
    }

    // Sequential application in the configured order.
    let mut kept: Vec<usize> = (0..events.len()).collect();
    for p in &params.order {
        let s = slot(*p);
        kept.retain(|&i| decisions.verdicts[i][s].is_none());
    }

    let mut drops = Vec::new();
    for &i in &sorted {
        let attributed = ProcessId::ALL
            .iter()
            .filter(|p| params.order.contains(p))
            .find_map(|&p| decisions.verdicts[i][slot(p)].map(|v| (p, v)));
        if let Some((process, (f_low, f_high, value))) = attributed {
            let e = &events[i];
            drops.push(DropRecord {
                process,
                f_low,
                f_high,
                mjd: e.mjd,
                rf_freq: e.rf_freq,
                value,
                event_index: i,
            });
        }
    }

    let mut mask = ExcisionMask::default();
    let (band_lo, band_hi) = header.band();
    if params.order.contains(&ProcessId::Static) {
        for b in &params.static_bands {
            let lo = b[0].max(band_lo);
            let hi = b[1].min(band_hi);
            if lo < hi {
                mask.segments.push(MaskSegment {
                    f_low: lo,
                    f_high: hi,
                    t_start: header.window_start_mjd,
                    t_end: header.window_end_mjd,
                    process: ProcessId::Static,
                    reason: "static band".into(),
                });
            }
        }
    }
    if params.order.contains(&ProcessId::Harmonic) {
        let base_hz = params.harmonic_base_hz;
        let hw = params.harmonic_halfwidth_hz;
        let mut h = ((band_lo - hw) / base_hz).ceil() * base_hz;
        while h - hw <= band_hi {
            let lo = (h - hw).max(band_lo);
            let hi = (h + hw).min(band_hi);
            if lo < hi {
                mask.segments.push(MaskSegment {
                    f_low: lo,
                    f_high: hi,
                    t_start: header.window_start_mjd,
                    t_end: header.window_end_mjd,
                    process: ProcessId::Harmonic,
                    reason: format!("harmonic {h}"),
                });
            }
            h += base_hz;
        }
    }
    if params.order.contains(&ProcessId::Persistent) {
        mask.segments.extend(persistent_mask.segments);
    }
    if params.order.contains(&ProcessId::Dynamic) {
        mask.segments.extend(dynamic_mask.segments);
    }
    let excised_fraction = excised_fraction(&mask, header);
    if excised_fraction > EXCISED_WARN_FRACTION {
        log::warn!(
            "{:.1}% of the band excised for {} {}; df50-based likelihoods assume small excisions",
            100.0 * excised_fraction,
            header.site_id,
            header.polarization
        );
    }

    Ok(ExcisionResult {
        kept: kept.into_iter().map(|i| events[i].clone()).collect(),
        drops,
        mask,
        iir_trace,
        persistent,
        excised_fraction,
        iir_threshold_db,
    })
}

/// Fraction of the band-time plane covered by `mask`. Whole-window masks
/// count by width; dynamic masks are weighted by their duration.
pub fn excised_fraction(mask: &ExcisionMask, header: &EventFileHeader) -> f64 {
    let (band_lo, band_hi) = header.band();
    let width = band_hi - band_lo;
    if width <= 0.0 {
        return 0.0;
    }
    let mut full: Vec<(f64, f64)> = mask
        .segments
        .iter()
        .filter(|s| s.process != ProcessId::Dynamic)
        .map(|s| (s.f_low.max(band_lo), s.f_high.min(band_hi)))
        .filter(|(a, b)| a < b)
        .collect();
    full.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut covered = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (a, b) in full.iter().copied() {
        match cur {
            Some((ca, cb)) if a <= cb => cur = Some((ca, cb.max(b))),
            Some((ca, cb)) => {
                covered += cb - ca;
                cur = Some((a, b));
            }
            None => cur = Some((a, b)),
        }
    }
    if let Some((ca, cb)) = cur {
        covered += cb - ca;
    }
    let duration = header.window_end_mjd - header.window_start_mjd;
    if duration > 0.0 {
        for s in mask.segments.iter().filter(|s| s.process == ProcessId::Dynamic) {
            let inside_full = full.iter().any(|(a, b)| *a <= s.f_low && s.f_high <= *b);
            if !inside_full {
                let t = ((s.t_end - s.t_start) / duration).clamp(0.0, 1.0);
                covered += (s.f_high - s.f_low) * t;
            }
        }
    }
    (covered / width).min(1.0)
}

/// Filtered event file carrying the excision parameters in its header.
pub fn excised_file(file: &EventFile, result: &ExcisionResult, params: &ExcisionParams, config: Option<&str>, config_hash: &str) -> EventFile {
    let mut header = file.header.clone();
    header.extra = params.header_fields(&file.header);
    header.config_hash = config_hash.to_string();
    EventFile {
        header,
        config: config.map(str::to_string),
        events: result.kept.clone(),
    }
}

pub const AUDIT_COLUMNS: [&str; 7] = ["process_id", "f_low_hz", "f_high_hz", "mjd", "rf_freq_hz", "value", "action"];

pub fn audit_table(result: &ExcisionResult, config: Option<&str>, config_hash: &str) -> Table {
    let mut t = Table::new(&AUDIT_COLUMNS)
        .comment(format!("dtdf-audit v1 config_hash={config_hash}"))
        .with_config(config);
    for d in &result.drops {
        t.push(vec![
            d.process.to_string(),
            format!("{:.4}", d.f_low),
            format!("{:.4}", d.f_high),
            format!("{:.7}", d.mjd),
            format!("{:.4}", d.rf_freq),
            format!("{:.6}", d.value),
            "drop".into(),
        ]);
    }
    t
}

pub fn iir_table(result: &ExcisionResult, params: &ExcisionParams, config: Option<&str>, config_hash: &str) -> Table {
    let mut t = Table::new(&AUDIT_COLUMNS)
        .comment(format!(
            "dtdf-iir v1 alpha={} threshold_db={:.4} config_hash={config_hash}",
            params.iir_alpha, result.iir_threshold_db
        ))
        .with_config(config);
    for r in &result.iir_trace {
        t.push(vec![
            ProcessId::Dynamic.to_string(),
            format!("{:.4}", r.f_low),
            format!("{:.4}", r.f_high),
            format!("{:.7}", r.mjd),
            format!("{:.4}", r.rf_freq),
            format!("{:.6}", r.value),
            r.action.into(),
        ]);
    }
    t
}

pub fn persistent_table(result: &ExcisionResult, config: Option<&str>, config_hash: &str) -> Table {
    let mut t = Table::new(&["segment", "f_low_hz", "f_high_hz", "count", "expected", "limit", "masked"])
        .comment(format!("dtdf-persistent v1 config_hash={config_hash}"))
        .with_config(config);
    for r in &result.persistent {
        t.push(vec![
            r.segment.to_string(),
            format!("{:.4}", r.f_low),
            format!("{:.4}", r.f_high),
            r.count.to_string(),
            format!("{:.6}", r.expected),
            format!("{:.6}", r.limit),
            r.masked.to_string(),
        ]);
    }
    t
}

pub fn mask_table(result: &ExcisionResult, config: Option<&str>, config_hash: &str) -> Table {
    let mut t = Table::new(&["process_id", "f_low_hz", "f_high_hz", "t_start_mjd", "t_end_mjd", "reason"])
        .comment(format!(
            "dtdf-mask v1 excised_fraction={:.6} config_hash={config_hash}",
            result.excised_fraction
        ))
        .with_config(config);
    for s in &result.mask.segments {
        t.push(vec![
            s.process.to_string(),
            format!("{:.4}", s.f_low),
            format!("{:.4}", s.f_high),
            format!("{:.7}", s.t_start),
            format!("{:.7}", s.t_end),
            s.reason.replace(',', ";"),
        ]);
    }
    t
}

/// Decides whether an event is clean of RFI.
pub trait EventScreen {
    fn passes(&self, event: &SpectralEvent) -> bool;
}

/// Stateless predicates plus any loaded masks.
#[derive(Debug, Clone, PartialEq)]
pub struct RfiScreen {
    pub params: ExcisionParams,
    pub masks: Vec<MaskSegment>,
}

impl RfiScreen {
    pub fn new(params: ExcisionParams) -> Self {
        RfiScreen { params, masks: Vec::new() }
    }
}

impl EventScreen for RfiScreen {
    fn passes(&self, e: &SpectralEvent) -> bool {
        !harmonic_excision(e.rf_freq, self.params.harmonic_base_hz, self.params.harmonic_halfwidth_hz)
            && !static_band_excision(e.rf_freq, &self.params.static_bands)
            && !self.masks.iter().any(|m| m.covers(e.rf_freq, e.mjd))
    }
}
