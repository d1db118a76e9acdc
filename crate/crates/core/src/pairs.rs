//! Δt Δf pulse pairs between two event streams, Δt = 0 anchors, and the
//! associated pairs found at an anchor's MJD.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::events::{EventFileHeader, SpectralEvent};
use crate::report::{data_rows, Table};
use crate::rfi::EventScreen;
use crate::sky::{doppler_compensate, mjd_to_ra, SiteGeometry};
use crate::stats::{method_a, p0_df_awgn, RankedPair, DEFAULT_DF50_HZ};
use crate::{Error, Result, SECONDS_PER_DAY};

/// Slack on frequency window edges for values parsed at 4 dp.
pub const FREQ_EPS_HZ: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PairParams {
    pub dt_max_s: f64,
    pub df_max_hz: f64,
    pub df_anchor_max_hz: f64,
    /// Largest p0 (exclusive) for an associated pair.
    pub association_gate: f64,
    pub df50_hz: f64,
    /// Site whose frame of reference compensated frequencies use.
    pub reference: String,
}

impl Default for PairParams {
    fn default() -> Self {
        PairParams {
            dt_max_s: 3.0,
            df_max_hz: 400.0,
            df_anchor_max_hz: 15.5,
            association_gate: 0.03,
            df50_hz: DEFAULT_DF50_HZ,
            reference: "GB".into(),
        }
    }
}

impl PairParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_max_s >= 0.0 && self.df_max_hz >= 0.0 && self.df_anchor_max_hz >= 0.0) {
            return Err(Error::invalid("pair windows must be nonnegative"));
        }
        if !(self.association_gate > 0.0 && self.association_gate <= 1.0) {
            return Err(Error::invalid("association_gate must be in (0, 1]"));
        }
        if !(self.df50_hz > 0.0) {
            return Err(Error::invalid("df50_hz must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulsePair {
    pub a: SpectralEvent,
    pub b: SpectralEvent,
    /// Doppler-compensated frequencies, Hz.
    pub freq_a: f64,
    pub freq_b: f64,
    /// `t_b - t_a` in whole frames.
    pub dt_frames: i64,
    pub delta_t: f64,
    /// `freq_a - freq_b`, Hz.
    pub delta_f: f64,
    pub snr_max: f64,
    pub ra_hours: f64,
    pub mjd: f64,
}

impl PulsePair {
    fn new(
        a: &SpectralEvent,
        b: &SpectralEvent,
        freq_a: f64,
        freq_b: f64,
        frame_seconds: f64,
        reference: &SiteGeometry,
    ) -> Self {
        let dt_frames = ((b.mjd - a.mjd) * SECONDS_PER_DAY / frame_seconds).round() as i64;
        PulsePair {
            a: a.clone(),
            b: b.clone(),
            freq_a,
            freq_b,
            dt_frames,
            delta_t: dt_frames as f64 * frame_seconds,
            delta_f: freq_a - freq_b,
            snr_max: a.snr_comp.max(b.snr_comp),
            ra_hours: mjd_to_ra(a.mjd, reference),
            mjd: a.mjd,
        }
    }

    pub fn ranked(&self) -> RankedPair {
        RankedPair {
            snr_max: self.snr_max,
            mjd: self.mjd,
            ra_hours: self.ra_hours,
        }
    }

    fn same_events(&self, other: &PulsePair) -> bool {
        (self.a == other.a && self.b == other.b) || (self.a == other.b && self.b == other.a)
    }
}

/// Events of one receiver channel with the geometry of its site.
#[derive(Debug, Clone, Copy)]
pub struct Stream<'a> {
    pub events: &'a [SpectralEvent],
    pub site: &'a SiteGeometry,
}

/// Rejects streams that cannot be compared bin for bin.
pub fn check_compatible(a: &EventFileHeader, b: &EventFileHeader) -> Result<()> {
    if (a.bin_width() - b.bin_width()).abs() > 1e-9 * a.bin_width() {
        return Err(Error::Incompatible(format!(
            "bin widths differ: {} Hz vs {} Hz",
            a.bin_width(),
            b.bin_width()
        )));
    }
    Ok(())
}

/// Frame duration of a stream, seconds.
pub fn frame_seconds(header: &EventFileHeader) -> f64 {
    header.fft_len as f64 / header.sample_rate
}

fn compensated(events: &[SpectralEvent], site: &SiteGeometry, reference: &SiteGeometry) -> Vec<f64> {
    events
        .iter()
        .map(|e| doppler_compensate(e.rf_freq, e.mjd, site, reference))
        .collect()
}

fn sort_pairs(pairs: &mut [PulsePair]) {
    pairs.sort_by(|x, y| {
        y.snr_max
            .total_cmp(&x.snr_max)
            .then(x.mjd.total_cmp(&y.mjd))
            .then(x.freq_a.total_cmp(&y.freq_a))
            .then(x.freq_b.total_cmp(&y.freq_b))
            .then(x.dt_frames.cmp(&y.dt_frames))
    });
}

/// All cross-stream pairs within the time and frequency windows, sorted by
/// decreasing `snr_max`.
pub fn find_pairs(
    a: Stream<'_>,
    b: Stream<'_>,
    reference: &SiteGeometry,
    frame_seconds: f64,
    params: &PairParams,
) -> Vec<PulsePair> {
    let fa = compensated(a.events, a.site, reference);
    let fb = compensated(b.events, b.site, reference);
    let mut order: Vec<usize> = (0..b.events.len()).collect();
    order.sort_by(|&i, &j| fb[i].total_cmp(&fb[j]));
    let sorted_f: Vec<f64> = order.iter().map(|&i| fb[i]).collect();
    let df_max = params.df_max_hz + FREQ_EPS_HZ;
    let dt_frames_max = (params.dt_max_s / frame_seconds + 1e-9).floor() as i64;
    let mut out = Vec::new();
    for (ia, ea) in a.events.iter().enumerate() {
        let lo = sorted_f.partition_point(|&f| f < fa[ia] - df_max);
        let hi = sorted_f.partition_point(|&f| f <= fa[ia] + df_max);
        for &ib in &order[lo..hi] {
            let pair = PulsePair::new(ea, &b.events[ib], fa[ia], fb[ib], frame_seconds, reference);
            if pair.dt_frames.abs() <= dt_frames_max && pair.delta_f.abs() <= df_max {
                out.push(pair);
            }
        }
    }
    sort_pairs(&mut out);
    out
}

/// `delta_t = 0` pairs with `|delta_f| <= df_anchor_max`, by decreasing SNR
/// and then earlier MJD.
pub fn find_anchors(pairs: &[PulsePair], df_anchor_max: f64) -> Vec<PulsePair> {
    let mut out: Vec<PulsePair> = pairs
        .iter()
        .filter(|p| p.dt_frames == 0 && p.delta_f.abs() <= df_anchor_max + FREQ_EPS_HZ)
        .cloned()
        .collect();
    out.sort_by(|x, y| y.snr_max.total_cmp(&x.snr_max).then(x.mjd.total_cmp(&y.mjd)));
    out
}

/// Every pair of events, within or across streams, sharing the anchor's
/// MJD, other than the anchor itself. No frequency window applies.
pub fn association_candidates(
    streams: &[Stream<'_>],
    reference: &SiteGeometry,
    anchor: &PulsePair,
    frame_seconds: f64,
) -> Vec<PulsePair> {
    let key = anchor.a.mjd_key();
    let mut at: Vec<(&SpectralEvent, f64)> = Vec::new();
    for s in streams {
        for e in s.events.iter().filter(|e| e.mjd_key() == key) {
            at.push((e, doppler_compensate(e.rf_freq, e.mjd, s.site, reference)));
        }
    }
    let mut out = Vec::new();
    for i in 0..at.len() {
        for j in i + 1..at.len() {
            let p = PulsePair::new(at[i].0, at[j].0, at[i].1, at[j].1, frame_seconds, reference);
            if !p.same_events(anchor) {
                out.push(p);
            }
        }
    }
    sort_pairs(&mut out);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociationSet {
    pub anchor: PulsePair,
    pub members: Vec<PulsePair>,
    pub n_trials: u64,
    /// `p0` of the largest member `|delta_f|`.
    pub alpha_h: Option<f64>,
    /// Cumulative binomial likelihood of at least this many members.
    pub likelihood: Option<f64>,
}

impl AssociationSet {
    pub fn n_df(&self) -> u64 {
        self.members.len() as u64
    }
}

pub fn find_associated(
    candidates: &[PulsePair],
    anchor: &PulsePair,
    df50: f64,
    gate: f64,
    screen: &dyn EventScreen,
) -> Result<AssociationSet> {
    let key = anchor.a.mjd_key();
    let pool: Vec<&PulsePair> = candidates
        .iter()
        .filter(|p| p.dt_frames == 0 && p.a.mjd_key() == key && !p.same_events(anchor))
        .collect();
    let members: Vec<PulsePair> = pool
        .iter()
        .filter(|p| p0_df_awgn(p.delta_f, df50) < gate && screen.passes(&p.a) && screen.passes(&p.b))
        .map(|p| (*p).clone())
        .collect();
    if members.is_empty() {
        return Ok(AssociationSet {
            anchor: anchor.clone(),
            members,
            n_trials: 0,
            alpha_h: None,
            likelihood: None,
        });
    }
    let min_snr = members.iter().map(|p| p.snr_max).fold(f64::INFINITY, f64::min);
    let n_trials = pool.iter().filter(|p| p.snr_max >= min_snr).count() as u64;
    let df_max = members.iter().map(|p| p.delta_f.abs()).fold(0.0, f64::max);
    let alpha_h = p0_df_awgn(df_max, df50);
    let likelihood = if alpha_h > 0.0 {
        Some(method_a(alpha_h, n_trials, members.len() as u64)?)
    } else {
        None
    };
    Ok(AssociationSet {
        anchor: anchor.clone(),
        members,
        n_trials,
        alpha_h: Some(alpha_h),
        likelihood,
    })
}

pub const PAIR_COLUMNS: [&str; 7] = [
    "ra_hours",
    "mjd_a",
    "mjd_b",
    "snr_max_db",
    "freq_a_mhz",
    "freq_b_mhz",
    "delta_f_hz",
];

/// Fixed-point text without a negative zero.
fn fixed(x: f64, dp: usize) -> String {
    let s = format!("{x:.dp$}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

fn pair_row(p: &PulsePair) -> Vec<String> {
    vec![
        format!("{:.6}", p.ra_hours),
        format!("{:.7}", p.a.mjd),
        format!("{:.7}", p.b.mjd),
        format!("{:.3}", p.snr_max),
        format!("{:.7}", p.freq_a / 1e6),
        format!("{:.7}", p.freq_b / 1e6),
        fixed(p.delta_f, 1),
    ]
}

pub fn pair_table(pairs: &[PulsePair], title: &str, config: Option<&str>, config_hash: &str) -> Table {
    let mut t = Table::new(&PAIR_COLUMNS)
        .comment(format!("dtdf-pairs v1 {title} rows={} config_hash={config_hash}", pairs.len()))
        .with_config(config);
    for p in pairs {
        t.push(pair_row(p));
    }
    t
}

pub fn association_table(sets: &[AssociationSet], config: Option<&str>, config_hash: &str) -> Table {
    let mut t = Table::new(&[
        "anchor_ra_hours",
        "anchor_mjd",
        "anchor_delta_f_hz",
        "anchor_snr_max_db",
        "n_df",
        "n_trials",
        "alpha_h",
        "likelihood",
        "member_delta_f_hz",
    ])
    .comment(format!("dtdf-associations v1 anchors={} config_hash={config_hash}", sets.len()))
    .with_config(config);
    for s in sets {
        let members: Vec<String> = s.members.iter().map(|m| format!("{:.1}", m.delta_f.abs())).collect();
        t.push(vec![
            format!("{:.6}", s.anchor.ra_hours),
            format!("{:.7}", s.anchor.mjd),
            fixed(s.anchor.delta_f, 1),
            format!("{:.3}", s.anchor.snr_max),
            s.n_df().to_string(),
            s.n_trials.to_string(),
            s.alpha_h.map_or("".into(), |a| format!("{a:.6e}")),
            s.likelihood.map_or("".into(), |l| format!("{l:.6e}")),
            members.join(";"),
        ]);
    }
    t
}

/// Reads the ranking fields of a pair report.
pub fn read_pair_report(path: &Path) -> Result<Vec<RankedPair>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (line, cols) in data_rows(&text) {
        if cols.len() != PAIR_COLUMNS.len() {
            return Err(Error::format(path, line, format!("expected {} columns", PAIR_COLUMNS.len())));
        }
        let num = |i: usize| -> Result<f64> {
            cols[i]
                .trim()
                .parse()
                .map_err(|_| Error::format(path, line, format!("column {} is not a number", PAIR_COLUMNS[i])))
        };
        out.push(RankedPair {
            ra_hours: num(0)?,
            mjd: num(1)?,
            snr_max: num(3)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rfi::{ExcisionParams, RfiScreen};
    use crate::sky::doppler_uncompensate;

    const FRAME: f64 = 0.27;

    fn ev(site: &str, mjd: f64, f: f64, snr: f64) -> SpectralEvent {
        SpectralEvent::new(site, "R", mjd, f, snr, snr, 0, 0.0)
    }

    #[test]
    fn no_negative_zero() {
        assert_eq!(fixed(-0.04, 1), "0.0");
        assert_eq!(fixed(-0.06, 1), "-0.1");
        assert_eq!(fixed(1.23456, 2), "1.23");
    }

    #[test]
    fn same_frame_pair() {
        let gb = SiteGeometry::green_bank();
        let a = vec![ev("GB", 59000.0, 1420e6, 13.0)];
        let b = vec![ev("GB", 59000.0, 1420e6 - 100.0, 12.0)];
        let pairs = find_pairs(
            Stream { events: &a, site: &gb },
            Stream { events: &b, site: &gb },
            &gb,
            FRAME,
            &PairParams::default(),
        );
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].delta_t, 0.0);
        assert!((pairs[0].delta_f - 100.0).abs() < 1e-6);
        assert_eq!(pairs[0].snr_max, 13.0);
    }

    #[test]
    fn four_seconds_apart_no_pair() {
        let gb = SiteGeometry::green_bank();
        let a = vec![ev("GB", 59000.0, 1420e6, 13.0)];
        let b = vec![ev("GB", 59000.0 + 4.05 / 86400.0, 1420e6, 12.0)];
        let s = |e| Stream { events: e, site: &gb };
        assert!(find_pairs(s(&a), s(&b), &gb, FRAME, &PairParams::default()).is_empty());
        let c = vec![ev("GB", 59000.0 + 2.97 / 86400.0, 1420e6, 12.0)];
        let p = find_pairs(s(&a), s(&c), &gb, FRAME, &PairParams::default());
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].dt_frames, 11);
    }

    #[test]
    fn published_first_row() {
        let gb = SiteGeometry::green_bank();
        let ha = SiteGeometry::haswell();
        let mjd = 58345.5380613;
        let f = 1440.9286091e6;
        let a = vec![ev("GB", mjd, f, 13.293)];
        let b = vec![ev("HA", mjd, doppler_uncompensate(f, mjd, &ha, &gb), 12.9)];
        let pairs = find_pairs(
            Stream { events: &a, site: &gb },
            Stream { events: &b, site: &ha },
            &gb,
            FRAME,
            &PairParams::default(),
        );
        assert_eq!(pairs.len(), 1);
        let p = &pairs[0];
        assert_eq!(p.dt_frames, 0);
        assert!(p.delta_f.abs() < 0.05);
        assert_eq!(p.snr_max, 13.293);
        assert!((p.ra_hours - 5.183775).abs() < 0.01);
    }

    #[test]
    fn two_members_pass_the_gate() {
        let gb = SiteGeometry::green_bank();
        let ha = SiteGeometry::haswell();
        let mjd = 58346.5382031;
        let f0 = 1447.3290284e6;
        let gb_events = vec![ev("GB", mjd, f0, 12.495), ev("GB", mjd, 1430.2e6, 12.2), ev("GB", mjd, 1437.1e6, 12.1)];
        let ha_events = vec![
            ev("HA", mjd, doppler_uncompensate(f0 - 0.7, mjd, &ha, &gb), 12.3),
            ev("HA", mjd, doppler_uncompensate(1430.2e6 - 5501.7, mjd, &ha, &gb), 12.0),
            ev("HA", mjd, doppler_uncompensate(1437.1e6 + 5215.7, mjd, &ha, &gb), 11.9),
        ];
        let streams = [Stream { events: &gb_events, site: &gb }, Stream { events: &ha_events, site: &ha }];
        let pairs = find_pairs(streams[0], streams[1], &gb, FRAME, &PairParams::default());
        let anchors = find_anchors(&pairs, 15.5);
        assert_eq!(anchors.len(), 1);
        let cands = association_candidates(&streams, &gb, &anchors[0], FRAME);
        assert_eq!(cands.len(), 14);
        let screen = RfiScreen::new(ExcisionParams::default());
        let set = find_associated(&cands, &anchors[0], DEFAULT_DF50_HZ, 0.03, &screen).unwrap();
        let mut dfs: Vec<f64> = set.members.iter().map(|m| (m.delta_f.abs() * 10.0).round() / 10.0).collect();
        dfs.sort_by(f64::total_cmp);
        assert_eq!(dfs, vec![5215.7, 5501.7]);
        assert!(set.n_trials >= set.n_df());
        assert!((set.alpha_h.unwrap() - 0.004486).abs() < 1e-6);
    }

    #[test]
    fn lone_anchor_has_no_members() {
        let gb = SiteGeometry::green_bank();
        let a = vec![ev("GB", 59000.0, 1420e6, 13.0)];
        let b = vec![ev("GB", 59000.0, 1420e6, 12.0)];
        let streams = [Stream { events: &a, site: &gb }, Stream { events: &b, site: &gb }];
        let pairs = find_pairs(streams[0], streams[1], &gb, FRAME, &PairParams::default());
        let anchor = &find_anchors(&pairs, 15.5)[0];
        let cands = association_candidates(&streams, &gb, anchor, FRAME);
        assert!(cands.is_empty());
        let set = find_associated(&cands, anchor, DEFAULT_DF50_HZ, 0.03, &RfiScreen::new(ExcisionParams::default())).unwrap();
        assert!(set.members.is_empty());
        assert_eq!(set.n_trials, 0);
    }
}
