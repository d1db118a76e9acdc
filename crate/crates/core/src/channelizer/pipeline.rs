//! Ingest -> FFT -> measure pipeline over bounded queues.
//!
//! One ingest thread reads frames and drops those the duty cycle skips, a
//! pool of FFT workers turns frames into spectra, and the calling thread
//! restores frame order before the detector sees them. Output does not
//! depend on the number of workers.

use std::collections::BTreeMap;
use std::io::Read;

use crossbeam_channel::bounded;
use num_complex::Complex32;

use super::{frame_mjd, DutyCycle, Detection, Detector, DetectorParams, FrameSpectrum, Spectrometer};
use crate::events::{round_dp, window_bounds, window_index, EventFile, EventFileHeader, SpectralEvent};
use crate::iq::IqReader;
use crate::sky::{mjd_to_ra, SiteGeometry};
use crate::synth::Synthesizer;
use crate::{frame_len, Error, Result};

/// A sequential source of whole frames.
pub trait FrameSource: Send {
    fn frame_len(&self) -> usize;

    /// Fills `buf` with the next frame. Returns `false` at end of stream; a
    /// partial trailing frame is discarded.
    fn next_frame(&mut self, buf: &mut Vec<Complex32>) -> Result<bool>;
}

pub struct IqFrameSource<R: Read + Send> {
    reader: IqReader<R>,
    frame_len: usize,
}

impl<R: Read + Send> IqFrameSource<R> {
    pub fn new(reader: IqReader<R>) -> Result<Self> {
        let n = frame_len(reader.header().sample_rate);
        if n == 0 {
            return Err(Error::Incompatible("IQ sample rate too low for a frame".into()));
        }
        Ok(IqFrameSource { reader, frame_len: n })
    }
}

impl<R: Read + Send> FrameSource for IqFrameSource<R> {
    fn frame_len(&self) -> usize {
        self.frame_len
    }

    fn next_frame(&mut self, buf: &mut Vec<Complex32>) -> Result<bool> {
        let got = self.reader.read_into(self.frame_len, buf)?;
        if got == self.frame_len {
            Ok(true)
        } else {
            if got > 0 {
                log::info!("discarding partial trailing frame of {got} samples");
            }
            Ok(false)
        }
    }
}

/// Frames straight from a synthesizer channel.
pub struct SynthFrameSource<'a> {
    synth: &'a Synthesizer,
    channel: usize,
    next: u64,
}

impl<'a> SynthFrameSource<'a> {
    pub fn new(synth: &'a Synthesizer, channel: usize) -> Self {
        SynthFrameSource { synth, channel, next: 0 }
    }
}

impl FrameSource for SynthFrameSource<'_> {
    fn frame_len(&self) -> usize {
        self.synth.plan().block_len()
    }

    fn next_frame(&mut self, buf: &mut Vec<Complex32>) -> Result<bool> {
        if self.next >= self.synth.plan().n_blocks() {
            return Ok(false);
        }
        let block = self.synth.block(self.channel, self.next);
        self.next += 1;
        if block.samples.len() < self.frame_len() {
            log::info!("discarding partial trailing frame of {} samples", block.samples.len());
            return Ok(false);
        }
        *buf = block.samples;
        Ok(true)
    }
}

/// Receiver parameters of the stream being channelized.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamInfo {
    pub sample_rate: f64,
    pub center_rf: f64,
    pub start_mjd: f64,
    pub polarization: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRun {
    pub info: StreamInfo,
    pub frame_len: usize,
    pub duty: DutyCycle,
    pub params: DetectorParams,
    pub detections: Vec<Detection>,
    /// MJD of every processed frame.
    pub frame_mjds: Vec<f64>,
}

/// Channelizes and detects a whole stream with `workers` FFT threads and
/// queues of `queue_depth` frames.
pub fn run_detection<S: FrameSource>(
    mut source: S,
    info: StreamInfo,
    duty: DutyCycle,
    params: DetectorParams,
    workers: usize,
    queue_depth: usize,
) -> Result<DetectionRun> {
    let n = source.frame_len();
    let workers = workers.max(1);
    let depth = queue_depth.max(1);
    let (frame_tx, frame_rx) = bounded::<(usize, u64, Vec<Complex32>)>(depth);
    let (spec_tx, spec_rx) = bounded::<Result<(usize, FrameSpectrum)>>(depth);
    let mut detector = Detector::new(params, n)?;
    let mut detections = Vec::new();
    let mut frame_mjds = Vec::new();
    let info_ref = &info;

    let ingest_result = std::thread::scope(|scope| -> Result<()> {
        let ingest = scope.spawn(move || -> Result<()> {
            let mut k = 0u64;
            let mut seq = 0usize;
            let mut scratch = Vec::new();
            loop {
                let mut buf = if duty.processes(k) { Vec::with_capacity(n) } else { std::mem::take(&mut scratch) };
                if !source.next_frame(&mut buf)? {
                    break;
                }
                if duty.processes(k) {
                    if frame_tx.send((seq, k, buf)).is_err() {
                        break;
                    }
                    seq += 1;
                } else {
                    scratch = buf;
                }
                k += 1;
            }
            Ok(())
        });

        for _ in 0..workers {
            let rx = frame_rx.clone();
            let tx = spec_tx.clone();
            scope.spawn(move || {
                let mut spec = Spectrometer::new(n);
                for (seq, k, samples) in rx.iter() {
                    let item = spec.power(&samples).map(|bin_powers| {
                        (
                            seq,
                            FrameSpectrum {
                                frame_index: k,
                                mjd_start: frame_mjd(info_ref.start_mjd, k, n, info_ref.sample_rate),
                                bin_powers,
                            },
                        )
                    });
                    if tx.send(item).is_err() {
                        break;
                    }
                }
            });
        }
        drop(frame_rx);
        drop(spec_tx);

        let mut pending = BTreeMap::new();
        let mut next = 0usize;
        let mut failure = None;
        for item in spec_rx.iter() {
            match item {
                Ok((seq, spectrum)) => {
                    pending.insert(seq, spectrum);
                    while let Some(s) = pending.remove(&next) {
                        frame_mjds.push(s.mjd_start);
                        if let Err(e) = detector.push(s, &mut detections) {
                            failure.get_or_insert(e);
                        }
                        next += 1;
                    }
                }
                Err(e) => {
                    failure.get_or_insert(e);
                }
            }
            if failure.is_some() {
                break;
            }
        }
        drop(spec_rx);
        let ingest = ingest.join().expect("ingest thread panicked");
        if let Some(e) = failure {
            return Err(e);
        }
        ingest
    });
    ingest_result?;
    detector.finish(&mut detections);
    Ok(DetectionRun {
        info,
        frame_len: n,
        duty,
        params,
        detections,
        frame_mjds,
    })
}

/// Site-annotated events of a run.
pub fn annotate(run: &DetectionRun, site: &SiteGeometry) -> Vec<SpectralEvent> {
    let n = run.frame_len;
    let fs = run.info.sample_rate;
    run.detections
        .iter()
        .map(|d| {
            let rf = run.info.center_rf + super::bin_baseband_freq(d.bin, n, fs);
            let mjd = round_dp(d.mjd, 7);
            SpectralEvent::new(
                &site.site_id,
                &run.info.polarization,
                mjd,
                rf,
                d.snr_single_db,
                d.snr_comp_db,
                d.bin,
                mjd_to_ra(mjd, site),
            )
        })
        .collect()
}

/// Splits a run into four-hour event files. A run without processed frames
/// yields one header-only file for the window of its start time.
pub fn event_files(
    run: &DetectionRun,
    site: &SiteGeometry,
    config: Option<&str>,
    config_hash: &str,
) -> Vec<EventFile> {
    let events = annotate(run, site);
    let mut windows: BTreeMap<i64, (u64, Vec<SpectralEvent>)> = BTreeMap::new();
    for &m in &run.frame_mjds {
        windows.entry(window_index(m)).or_default().0 += 1;
    }
    if windows.is_empty() {
        windows.insert(window_index(run.info.start_mjd), (0, Vec::new()));
    }
    for e in events {
        windows.entry(window_index(e.mjd)).or_default().1.push(e);
    }
    windows
        .into_iter()
        .map(|(w, (frames, events))| {
            let (start, end) = window_bounds(w);
            EventFile {
                header: EventFileHeader {
                    site_id: site.site_id.clone(),
                    polarization: run.info.polarization.clone(),
                    sample_rate: run.info.sample_rate,
                    center_rf: run.info.center_rf,
                    fft_len: run.frame_len,
                    duty_cycle: run.duty.fraction(),
                    snr_single_db: run.params.snr_single_db,
                    snr_comp_db: run.params.snr_comp_db,
                    window_start_mjd: start,
                    window_end_mjd: end,
                    frames,
                    config_hash: config_hash.to_string(),
                    extra: vec![("stage".into(), "detect".into())],
                },
                config: config.map(str::to_string),
                events,
            }
        })
        .collect()
}
