use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use dtdf::channelizer::{
    event_files, run_detection, DetectionRun, DutyCycle, IqFrameSource, StreamInfo, SynthFrameSource,
};
use dtdf::config::RunConfig;
use dtdf::events::EventFile;
use dtdf::iq::{IqHeader, IqReader, IqWriter};
use dtdf::pairs::{
    association_candidates, association_table, check_compatible, find_anchors, find_associated, find_pairs,
    frame_seconds, pair_table, read_pair_report, AssociationSet, Stream,
};
use dtdf::report::{data_rows, Table};
use dtdf::rfi::{
    audit_table, excise, excised_file, harmonic_excision, iir_table, mask_table, persistent_table,
    static_band_excision, RfiScreen,
};
use dtdf::stats::{
    calib::uniform_poisson_frames, calibrate_df50, exponential_rate_oracle, method_a, method_b, rank_pairs,
    ra_probability, rice_rayleigh_ratio, round_sig, Model, PosteriorChain, RaMode, RaWindow, RankedPair,
    RateEstimate,
};
use dtdf::synth::{ChannelPlan, SignalModel, Synthesizer};
use dtdf::SEGMENT_BINS;

use crate::{Cli, Command, ValidationFailed};

/// Resolved configuration text and hash shared by all outputs of a run.
struct Ctx<'a> {
    cli: &'a Cli,
    cfg: &'a RunConfig,
    resolved: String,
    hash: String,
    workers: usize,
}

impl Ctx<'_> {
    fn out(&self, name: &str) -> PathBuf {
        self.cli.out.join(name)
    }

    fn embedded(&self) -> Option<&str> {
        Some(&self.resolved)
    }

    fn write_table(&self, table: &Table, name: &str) -> Result<()> {
        let path = self.out(name);
        table.write(&path).with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {}", path.display());
        Ok(())
    }
}

pub fn run(cli: &Cli, cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let ctx = Ctx {
        cli,
        cfg,
        resolved: cfg.resolved(),
        hash: cfg.hash(),
        workers,
    };
    match &cli.command {
        Command::Synth => synth(&ctx),
        Command::Detect { inputs } => inputs.iter().try_for_each(|p| detect(&ctx, p)),
        Command::Excise { inputs } => inputs.iter().try_for_each(|p| excise_file(&ctx, p)),
        Command::Pairs { a, b } => pairs(&ctx, a, b),
        Command::Analyze { inputs } => analyze(&ctx, inputs),
        Command::McVerify => mc_verify(&ctx),
    }
}

/// File name without the `.csv` extension and the stage suffix.
fn stem(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let name = name.strip_suffix(".csv").unwrap_or(&name);
    for suffix in [".events", ".excised"] {
        if let Some(s) = name.strip_suffix(suffix) {
            return s.to_string();
        }
    }
    name.to_string()
}

fn synth(ctx: &Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let plan = cfg.channel_plan();
    let signal = Synthesizer::new(&plan, &cfg.signal_model())?;
    let noise = Synthesizer::new(
        &plan,
        &SignalModel {
            bursts: Vec::new(),
            ..cfg.signal_model()
        },
    )?;
    let chunk = (ctx.workers * 2) as u64;
    for (ch, label) in plan.labels.iter().enumerate() {
        let source = if cfg.synth.noise_only_channels.contains(label) { &noise } else { &signal };
        let name = format!("{}_{label}.iq", cfg.run.site);
        let path = ctx.out(&name);
        let header = IqHeader {
            sample_rate: plan.sample_rate,
            center_rf: plan.center_rf,
            start_mjd: plan.start_mjd,
            gain: cfg.receiver.gain(),
            label: label.clone(),
        };
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut writer = IqWriter::new(BufWriter::new(file), &header, cfg.receiver.clip_limit)?;
        let mut start = 0;
        while start < plan.n_blocks() {
            let end = (start + chunk).min(plan.n_blocks());
            for block in source.blocks(ch, start..end, ctx.workers) {
                writer.write_samples(&block.samples)?;
            }
            start = end;
        }
        let (_, report) = writer.finish()?;
        let sidecar = format!(
            "# dtdf-iq v1 file={name} label={label} samples={} clipped={} clip_fraction={:.6e} config_hash={}\n{}",
            report.samples,
            report.clipped,
            report.clip_fraction(),
            ctx.hash,
            ctx.resolved
        );
        fs::write(ctx.out(&format!("{name}.toml")), sidecar)?;
        log::info!("wrote {} ({} samples)", path.display(), report.samples);
    }
    Ok(())
}

fn detect(ctx: &Ctx, input: &Path) -> Result<()> {
    let cfg = ctx.cfg;
    let file = File::open(input).with_context(|| format!("opening {}", input.display()))?;
    let reader = IqReader::new(BufReader::new(file)).with_context(|| format!("reading {}", input.display()))?;
    let h = reader.header().clone();
    let info = StreamInfo {
        sample_rate: h.sample_rate,
        center_rf: h.center_rf,
        start_mjd: h.start_mjd,
        polarization: h.label.clone(),
    };
    let run = run_detection(
        IqFrameSource::new(reader)?,
        info,
        cfg.detect.duty()?,
        cfg.detect.params(),
        ctx.workers,
        cfg.detect.queue_depth,
    )
    .with_context(|| format!("detecting {}", input.display()))?;
    let site = cfg.site(&cfg.run.site)?;
    for mut f in event_files(&run, &site, ctx.embedded(), &ctx.hash) {
        if cfg.detect.inline_excision {
            let ex = &cfg.excision;
            f.events.retain(|e| {
                !static_band_excision(e.rf_freq, &ex.static_bands)
                    && !harmonic_excision(e.rf_freq, ex.harmonic_base_hz, ex.harmonic_halfwidth_hz)
            });
            f.header.extra.push(("inline_excision".into(), "static,harmonic".into()));
        }
        let name = format!("{}_{}_{:.4}", f.header.site_id, f.header.polarization, f.header.window_start_mjd);
        let path = ctx.out(&format!("{name}.events.csv"));
        f.write(&path)?;
        log::info!("wrote {} ({} events)", path.display(), f.events.len());
        if ctx.cli.emit_figures {
            ctx.write_table(&frame_series(ctx, &run, &f), &format!("{name}.frames.csv"))?;
        }
    }
    Ok(())
}

/// Events per processed frame within an event file's window.
fn frame_series(ctx: &Ctx, run: &DetectionRun, f: &EventFile) -> Table {
    let mut t = Table::new(&["mjd", "events"])
        .comment(format!("dtdf-frames v1 config_hash={}", ctx.hash))
        .with_config(ctx.embedded());
    let in_window = |m: f64| m >= f.header.window_start_mjd && m < f.header.window_end_mjd;
    for &m in run.frame_mjds.iter().filter(|&&m| in_window(m)) {
        let key = (m * 1e7).round() as i64;
        let n = f.events.iter().filter(|e| e.mjd_key() == key).count();
        t.push(vec![format!("{m:.7}"), n.to_string()]);
    }
    t
}

fn excise_file(ctx: &Ctx, input: &Path) -> Result<()> {
    let params = &ctx.cfg.excision;
    let file = EventFile::read(input)?;
    let result = excise(&file, params)?;
    let name = stem(input);
    let out = excised_file(&file, &result, params, ctx.embedded(), &ctx.hash);
    out.write(&ctx.out(&format!("{name}.excised.csv")))?;
    ctx.write_table(&audit_table(&result, ctx.embedded(), &ctx.hash), &format!("{name}.audit.csv"))?;
    ctx.write_table(&iir_table(&result, params, ctx.embedded(), &ctx.hash), &format!("{name}.iir.csv"))?;
    ctx.write_table(&persistent_table(&result, ctx.embedded(), &ctx.hash), &format!("{name}.persistent.csv"))?;
    ctx.write_table(&mask_table(&result, ctx.embedded(), &ctx.hash), &format!("{name}.masks.csv"))?;
    log::info!(
        "{}: kept {} of {} events",
        input.display(),
        result.kept.len(),
        file.events.len()
    );
    Ok(())
}

fn pairs(ctx: &Ctx, a: &Path, b: &Path) -> Result<()> {
    let cfg = ctx.cfg;
    let fa = EventFile::read(a)?;
    let fb = EventFile::read(b)?;
    check_compatible(&fa.header, &fb.header)?;
    let site_a = cfg.site(&fa.header.site_id)?;
    let site_b = cfg.site(&fb.header.site_id)?;
    let reference = cfg.site(&cfg.pairs.reference)?;
    let frame_s = frame_seconds(&fa.header);
    let streams = [
        Stream {
            events: &fa.events,
            site: &site_a,
        },
        Stream {
            events: &fb.events,
            site: &site_b,
        },
    ];
    let found = find_pairs(streams[0], streams[1], &reference, frame_s, &cfg.pairs);
    let anchors = find_anchors(&found, cfg.pairs.df_anchor_max_hz);
    let screen = RfiScreen::new(cfg.excision.clone());
    let sets = anchors
        .iter()
        .map(|anchor| {
            let cands = association_candidates(&streams, &reference, anchor, frame_s);
            find_associated(&cands, anchor, cfg.pairs.df50_hz, cfg.pairs.association_gate, &screen)
        })
        .collect::<dtdf::Result<Vec<AssociationSet>>>()?;
    let name = format!("{}__{}", stem(a), stem(b));
    ctx.write_table(&pair_table(&found, "kind=pairs", ctx.embedded(), &ctx.hash), &format!("{name}.pairs.csv"))?;
    ctx.write_table(
        &pair_table(&anchors, "kind=anchors", ctx.embedded(), &ctx.hash),
        &format!("{name}.anchors.csv"),
    )?;
    ctx.write_table(&association_table(&sets, ctx.embedded(), &ctx.hash), &format!("{name}.associations.csv"))?;
    if ctx.cli.emit_figures {
        let mut t = Table::new(&["delta_t_s", "delta_f_hz", "snr_max_db"])
            .comment(format!("dtdf-dtdf-scatter v1 config_hash={}", ctx.hash))
            .with_config(ctx.embedded());
        for p in &found {
            t.push(vec![
                format!("{:.2}", p.delta_t),
                format!("{:.1}", p.delta_f),
                format!("{:.3}", p.snr_max),
            ]);
        }
        ctx.write_table(&t, &format!("{name}.scatter.csv"))?;
    }
    log::info!("{} pairs, {} anchors", found.len(), anchors.len());
    Ok(())
}

/// `(alpha_h, n_trials, n_df)` rows of an association report.
fn read_associations(path: &Path, text: &str) -> Result<Vec<(f64, u64, u64)>> {
    let mut out = Vec::new();
    for (line, cols) in data_rows(text) {
        if cols.len() != 9 {
            return Err(dtdf::Error::Format {
                path: path.into(),
                line,
                msg: "expected 9 columns".into(),
            }
            .into());
        }
        if cols[6].is_empty() {
            continue;
        }
        let bad = |what: &str| dtdf::Error::Format {
            path: path.into(),
            line,
            msg: format!("bad {what}"),
        };
        out.push((
            cols[6].parse().map_err(|_| bad("alpha_h"))?,
            cols[5].parse().map_err(|_| bad("n_trials"))?,
            cols[4].parse().map_err(|_| bad("n_df"))?,
        ));
    }
    Ok(out)
}

fn analyze(ctx: &Ctx, inputs: &[PathBuf]) -> Result<()> {
    let a = &ctx.cfg.analyze;
    let mut likelihoods = Table::new(&["source", "alpha_h", "n_trials", "n_df", "likelihood"])
        .comment(format!("dtdf-likelihood v1 method=A config_hash={}", ctx.hash))
        .with_config(ctx.embedded());
    for case in &a.method_a {
        let l = method_a(case.alpha, case.n, case.n_df)?;
        likelihoods.push(vec![
            "config".into(),
            format!("{}", case.alpha),
            case.n.to_string(),
            case.n_df.to_string(),
            format!("{l:.6e}"),
        ]);
    }
    let mut ranked: Vec<RankedPair> = Vec::new();
    for input in inputs {
        let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
        let source = input.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if text.starts_with("# dtdf-associations") {
            for (alpha, n, n_df) in read_associations(input, &text)? {
                let l = method_a(alpha, n, n_df)?;
                likelihoods.push(vec![
                    source.clone(),
                    format!("{alpha:.6e}"),
                    n.to_string(),
                    n_df.to_string(),
                    format!("{l:.6e}"),
                ]);
            }
        } else if text.starts_with("# dtdf-pairs") {
            ranked.extend(read_pair_report(input)?);
        } else {
            return Err(dtdf::Error::Format {
                path: input.clone(),
                line: 1,
                msg: "not a pair or association report".into(),
            }
            .into());
        }
    }
    ctx.write_table(&likelihoods, "analysis.likelihood.csv")?;

    if !ranked.is_empty() {
        rank_pairs(&mut ranked);
        let mode = RaMode::Theoretical { ra_obs: a.ra_obs };
        let windows = RaWindow::tiled(a.ra_center, a.ra_width, a.ra_count)
            .into_iter()
            .map(|w| Ok((w, ra_probability(&w, &mode)?)))
            .collect::<dtdf::Result<Vec<_>>>()?;
        let curves = method_b(&ranked, &windows);
        let mut summary = Table::new(&[
            "ra_low_h",
            "ra_high_h",
            "probability",
            "pairs_in_window",
            "min_rank",
            "min_likelihood",
            "discontinuities",
        ])
        .comment(format!("dtdf-likelihood v1 method=B pairs={} config_hash={}", ranked.len(), ctx.hash))
        .with_config(ctx.embedded());
        let mut series = Table::new(&["ra_low_h", "rank", "count", "likelihood"])
            .comment(format!("dtdf-method-b-curves v1 config_hash={}", ctx.hash))
            .with_config(ctx.embedded());
        for c in &curves {
            let (t, l) = c.min().map_or((String::new(), String::new()), |(t, l)| (t.to_string(), format!("{l:.6e}")));
            let disc: Vec<String> = c.discontinuities.iter().map(|t| t.to_string()).collect();
            summary.push(vec![
                format!("{:.3}", c.window.low),
                format!("{:.3}", c.window.high),
                format!("{:.6}", c.probability),
                c.counts.last().copied().unwrap_or(0).to_string(),
                t,
                l,
                disc.join(";"),
            ]);
            for (i, l) in c.likelihood.iter().enumerate() {
                series.push(vec![
                    format!("{:.3}", c.window.low),
                    (i + 1).to_string(),
                    c.counts[i].to_string(),
                    format!("{l:.6e}"),
                ]);
            }
        }
        ctx.write_table(&summary, "analysis.method_b.csv")?;
        if ctx.cli.emit_figures {
            ctx.write_table(&series, "analysis.method_b_curves.csv")?;
        }
    }

    if !a.chain.is_empty() {
        let mut chain = PosteriorChain::new(Model::Awgn, a.prior)?;
        for step in &a.chain {
            chain.update(&step.label, step.likelihood, step.p_data)?;
        }
        let mut t = Table::new(&["label", "likelihood", "p_data", "prior", "posterior", "posterior_2sf"])
            .comment(format!("dtdf-posterior v1 model=awgn config_hash={}", ctx.hash))
            .with_config(ctx.embedded());
        for s in &chain.steps {
            t.push(vec![
                s.label.clone(),
                format!("{}", s.likelihood),
                format!("{}", s.p_data),
                format!("{:.6e}", s.prior),
                format!("{:.6e}", s.posterior),
                format!("{:.1e}", round_sig(s.posterior, 2)),
            ]);
        }
        ctx.write_table(&t, "analysis.posterior.csv")?;
    }
    Ok(())
}

/// Detected events per bin-frame for noise-only synthetic frames.
pub fn pipeline_rate(cfg: &RunConfig, frames: u64, workers: usize) -> dtdf::Result<RateEstimate> {
    let n = dtdf::frame_len(cfg.receiver.sample_rate);
    let plan = ChannelPlan {
        sample_rate: cfg.receiver.sample_rate,
        center_rf: cfg.receiver.center_rf,
        labels: vec!["R".into()],
        duration: (frames * n as u64) as f64 / cfg.receiver.sample_rate,
        seed: cfg.run.seed,
        start_mjd: cfg.run.start_mjd,
    };
    let synth = Synthesizer::new(&plan, &SignalModel::noise_only(cfg.receiver.noise_sigma))?;
    let info = StreamInfo {
        sample_rate: plan.sample_rate,
        center_rf: plan.center_rf,
        start_mjd: plan.start_mjd,
        polarization: "R".into(),
    };
    let run = run_detection(
        SynthFrameSource::new(&synth, 0),
        info,
        DutyCycle::FULL,
        cfg.detect.params(),
        workers,
        cfg.detect.queue_depth,
    )?;
    Ok(RateEstimate {
        events: run.detections.len() as u64,
        bin_frames: run.frame_mjds.len() as u64 * n as u64,
    })
}

fn mc_verify(ctx: &Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let mc = &cfg.mc;
    let seed = cfg.run.seed;
    let mut t = Table::new(&["check", "value", "reference", "tolerance", "pass"])
        .comment(format!("dtdf-mc-verify v1 config_hash={}", ctx.hash))
        .with_config(ctx.embedded());
    let mut failed = Vec::new();
    let mut row = |t: &mut Table, name: &str, value: f64, reference: f64, tol: String, pass: bool| {
        if !pass {
            failed.push(name.to_string());
        }
        t.push(vec![
            name.into(),
            format!("{value:.6e}"),
            format!("{reference:.6e}"),
            tol,
            pass.to_string(),
        ]);
    };

    let lambda = mc.df50_events_per_frame / mc.df50_bandwidth;
    let frames = uniform_poisson_frames(lambda, mc.df50_bandwidth, mc.df50_frames, seed);
    let c = calibrate_df50(&frames, mc.df50_bandwidth)?;
    row(
        &mut t,
        "df50_empirical_vs_analytic",
        c.empirical,
        c.analytic,
        format!("{}", mc.df50_tolerance),
        (c.agreement() - 1.0).abs() <= mc.df50_tolerance,
    );

    let observed = pipeline_rate(cfg, mc.rate_frames, ctx.workers)?;
    let segments = mc.oracle_bin_frames.div_ceil(mc.rate_frames.max(1) * SEGMENT_BINS as u64);
    let oracle = exponential_rate_oracle(
        cfg.detect.snr_single_db,
        cfg.detect.snr_comp_db,
        cfg.detect.noise_frames,
        mc.rate_frames as usize,
        segments,
        seed ^ 0x5eed,
    );
    let z = observed.z_score(&oracle);
    row(
        &mut t,
        "awgn_threshold_rate",
        observed.rate(),
        oracle.rate(),
        format!("{} sigma (z = {z:.2})", mc.rate_sigmas),
        z.abs() <= mc.rate_sigmas,
    );

    let low = rice_rayleigh_ratio(5.0, 1.0, 1.0);
    row(&mut t, "rice_ratio_r5_s1", low, 17.0, "[16, 17]".into(), (16.0..=17.0).contains(&low));
    let high = rice_rayleigh_ratio(5.0, 4.0, 1.0);
    row(
        &mut t,
        "rice_ratio_r5_s4",
        high,
        14_612.0,
        "0.5%".into(),
        (high / 14_612.0 - 1.0).abs() <= 0.005,
    );

    ctx.write_table(&t, "mc_verify.csv")?;
    if ctx.cli.emit_figures {
        let mut gaps = Table::new(&["frame", "events"])
            .comment(format!("dtdf-df50-frames v1 config_hash={}", ctx.hash))
            .with_config(ctx.embedded());
        for (i, f) in frames.iter().enumerate() {
            gaps.push(vec![i.to_string(), f.len().to_string()]);
        }
        ctx.write_table(&gaps, "mc_verify.df50_frames.csv")?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(ValidationFailed(failed.join(", ")).into())
    }
}
