//! Synthesis through detection, in memory and through IQ files.

use std::io::Cursor;

use dtdf::channelizer::{
    event_files, freq_to_bin, run_detection, DetectorParams, DutyCycle, IqFrameSource, StreamInfo, SynthFrameSource,
};
use dtdf::iq::{IqHeader, IqReader, IqWriter};
use dtdf::sky::SiteGeometry;
use dtdf::synth::{BurstCase, BurstSpec, ChannelPlan, SignalModel, Synthesizer};

fn plan(duration: f64, seed: u64) -> ChannelPlan {
    ChannelPlan {
        sample_rate: 1e6,
        center_rf: 1425e6,
        labels: vec!["R".into(), "L".into()],
        duration,
        seed,
        start_mjd: 59000.0,
    }
}

fn info(label: &str) -> StreamInfo {
    StreamInfo {
        sample_rate: 1e6,
        center_rf: 1425e6,
        start_mjd: 59000.0,
        polarization: label.into(),
    }
}

fn burst(amplitude: f64) -> SignalModel {
    SignalModel {
        noise_sigma: 1.0,
        bursts: vec![BurstSpec {
            t_a: 2.7,
            delta_t: 0.0,
            duration: 0.27,
            f1: 200e3,
            f2: 200e3,
            a1: amplitude,
            a2: amplitude,
            case: BurstCase::RL,
        }],
        background: 0.0,
    }
}

#[test]
fn injected_burst_detected_in_both_channels() {
    let p = plan(5.4, 3);
    let synth = Synthesizer::new(&p, &burst(8.0)).unwrap();
    let bin = freq_to_bin(200e3, 270_000, 1e6);
    for (ch, label) in ["R", "L"].iter().enumerate() {
        let run = run_detection(
            SynthFrameSource::new(&synth, ch),
            info(label),
            DutyCycle::FULL,
            DetectorParams::default(),
            2,
            4,
        )
        .unwrap();
        let hit: Vec<_> = run.detections.iter().filter(|d| d.bin == bin).collect();
        assert_eq!(hit.len(), 1, "{label}");
        assert_eq!(hit[0].frame_index, 10);
        // Expected (S+N)/N = A^2 + 1 = 65, 18.1 dB.
        assert!((hit[0].snr_single_db - 18.1).abs() < 1.5, "{}", hit[0].snr_single_db);
    }
}

#[test]
fn worker_count_does_not_change_detections() {
    let p = plan(4.0, 9);
    let synth = Synthesizer::new(&p, &burst(6.0)).unwrap();
    let run = |w| {
        run_detection(SynthFrameSource::new(&synth, 0), info("R"), DutyCycle::FULL, DetectorParams::default(), w, 2)
            .unwrap()
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
fn duty_cycle_sets_frame_cadence() {
    let p = plan(8.1, 1);
    let synth = Synthesizer::new(&p, &SignalModel::noise_only(1.0)).unwrap();
    let duty = DutyCycle::from_fraction(0.33).unwrap();
    let run = run_detection(SynthFrameSource::new(&synth, 0), info("R"), duty, DetectorParams::default(), 1, 2).unwrap();
    assert_eq!(run.frame_mjds.len(), 10);
    let step = 3.0 * 0.27 / 86400.0;
    for w in run.frame_mjds.windows(2) {
        assert!((w[1] - w[0] - step).abs() < 1e-9);
    }
    assert!(run.detections.iter().all(|d| d.frame_index % 3 == 0));
}

#[test]
fn iq_file_round_trip_keeps_the_burst() {
    let p = plan(3.24, 5);
    let synth = Synthesizer::new(&p, &burst(8.0)).unwrap();
    let header = IqHeader {
        sample_rate: 1e6,
        center_rf: 1425e6,
        start_mjd: 59000.0,
        gain: 127.0 / 8.0,
        label: "R".into(),
    };
    let mut w = IqWriter::new(Vec::new(), &header, 1e-4).unwrap();
    for b in synth.blocks(0, 0..p.n_blocks(), 2) {
        w.write_samples(&b.samples).unwrap();
    }
    let (bytes, report) = w.finish().unwrap();
    assert!(report.clip_fraction() < 1e-4);
    let reader = IqReader::new(Cursor::new(bytes)).unwrap();
    let run = run_detection(
        IqFrameSource::new(reader).unwrap(),
        info("R"),
        DutyCycle::FULL,
        DetectorParams::default(),
        2,
        2,
    )
    .unwrap();
    let bin = freq_to_bin(200e3, 270_000, 1e6);
    assert!(run.detections.iter().any(|d| d.bin == bin && d.frame_index == 10));
    let files = event_files(&run, &SiteGeometry::green_bank(), None, "h");
    assert_eq!(files.len(), 1);
    let e = files[0].events.iter().find(|e| e.bin_index == bin).unwrap();
    assert!((e.rf_freq - 1425.2e6).abs() < 1e-3);
    assert!((e.mjd - (59000.0 + 2.7 / 86400.0)).abs() < 1e-7);
}

#[test]
fn header_only_capture_gives_header_only_file() {
    let header = IqHeader {
        sample_rate: 1e6,
        center_rf: 1425e6,
        start_mjd: 59000.5,
        gain: 16.0,
        label: "L".into(),
    };
    let (bytes, _) = IqWriter::new(Vec::new(), &header, 1e-4).unwrap().finish().unwrap();
    let reader = IqReader::new(Cursor::new(bytes)).unwrap();
    let run = run_detection(
        IqFrameSource::new(reader).unwrap(),
        info("L"),
        DutyCycle::FULL,
        DetectorParams::default(),
        1,
        1,
    )
    .unwrap();
    let files = event_files(&run, &SiteGeometry::green_bank(), None, "h");
    assert_eq!(files.len(), 1);
    assert!(files[0].events.is_empty());
    assert_eq!(files[0].header.frames, 0);
}
