//! `occ`: encode payloads, simulate the camera channel, decode, and run the
//! analysis studies.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use occ_core::analysis::{
    der_study, fusion_gain_experiment, sweep_frequency, sweep_report, write_sweep_csv, FusionStudy,
    DEFAULT_FREQUENCIES,
};
use occ_core::camera::{covered_rows, read_frames_csv, sample_frames, write_frames_csv};
use occ_core::chips::{bytes_to_bits, pack_msb_first};
use occ_core::config::PRESETS;
use occ_core::link::{payloads_from_bits, random_payloads, transmit};
use occ_core::rll::find_pattern;
use occ_core::rx::{receive, LinkReport};
use occ_core::{ChipStream, Exact, ExperimentConfig, FrameStructure, RllScheme};

#[derive(Parser)]
#[command(
    name = "occ",
    version,
    about = "Asynchronous LED-to-camera link simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Preset name or path to a JSON config.
    #[arg(long)]
    config: Option<String>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for independent trials.
    #[arg(long)]
    parallel: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Encode payloads into a packed chip stream plus a manifest.
    Encode {
        #[command(flatten)]
        common: Common,
        /// Raw payload bytes, read most significant bit first. Random payloads when absent.
        #[arg(long)]
        payload: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Capture a chip stream with the configured camera.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        chips: PathBuf,
        /// Seconds of signal to capture; the whole stream by default.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode a frames CSV into a link report and recovered payloads.
    Decode {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        frames: PathBuf,
        /// Report path (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Recovered payload bits, packed most significant bit first.
        #[arg(long)]
        payloads_out: Option<PathBuf>,
        /// Encode manifest; trims recovered bits to the original payload length.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Bit-rate limit against optical clock frequency.
    Sweep {
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
        /// Text report with the measured-vs-computed comparison.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value = "v1")]
        version: FrameStructure,
        #[arg(long, default_value_t = 20)]
        fps_min: i64,
    },
    /// Detection error rate: formula against Monte Carlo.
    Der {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "der.csv")]
        out: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        /// Packets per trial.
        #[arg(long, default_value_t = 500)]
        packets: usize,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6,8")]
        floors: Vec<f64>,
    },
    /// Recovery against distance with and without fusion.
    Fusion {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        parallel: Option<usize>,
        #[arg(long, default_value = "fusion.csv")]
        out: PathBuf,
        /// Packets per distance point.
        #[arg(long)]
        packets: Option<usize>,
        /// Maximum-distance summary (JSON).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Print a resolved config as JSON.
    Config {
        /// Preset name or config path.
        name: String,
    },
}

fn load_config(source: Option<&str>, seed: Option<u64>) -> Result<ExperimentConfig> {
    let source = source.context("--config is required (a preset name or a JSON file)")?;
    let mut cfg = match ExperimentConfig::preset(source) {
        Some(c) => c,
        None => {
            let text = fs::read_to_string(source).with_context(|| {
                format!(
                    "{source:?} is neither a preset ({}) nor a readable file",
                    PRESETS.join(", ")
                )
            })?;
            ExperimentConfig::from_json(&text)
                .with_context(|| format!("parsing config {source}"))?
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().context("invalid config")?;
    Ok(cfg)
}

fn out_path(flag: Option<PathBuf>, config: Option<&PathBuf>, default: &str) -> PathBuf {
    flag.or_else(|| config.cloned())
        .unwrap_or_else(|| PathBuf::from(default))
}

fn manifest_path(chips: &Path) -> PathBuf {
    let mut s = chips.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(k) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()?
            .install(f)),
        None => Ok(f()),
    }
}

fn encode(common: Common, payload: Option<PathBuf>, out: Option<PathBuf>) -> Result<()> {
    let cfg = load_config(common.config.as_deref(), common.seed)?;
    let bits_per_payload = cfg.link.payload_bits;
    let (payloads, total_bits) = match &payload {
        Some(path) => {
            let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            if bytes.is_empty() {
                bail!("payload file {} is empty", path.display());
            }
            let bits = bytes_to_bits(&bytes);
            (payloads_from_bits(&bits, bits_per_payload), bits.len())
        }
        None => {
            let distinct =
                bits_per_payload >= 64 || (cfg.packets as u128) <= (1u128 << bits_per_payload);
            let p = random_payloads(cfg.packets, bits_per_payload, distinct, cfg.seed)?;
            (p, cfg.packets * bits_per_payload)
        }
    };
    let (plan, stream) = transmit(&cfg.link, &cfg.camera(), &payloads)?;
    let out = out_path(out, cfg.output.chips.as_ref(), "chips.bin");
    let mut w = create(&out)?;
    stream.write_packed(&mut w)?;
    w.flush()?;
    let sf_count = find_pattern(stream.chips(), cfg.link.scheme.preamble()).len();
    let manifest = json!({
        "config": cfg,
        "plan": plan,
        "packets": payloads.len(),
        "payload_bits_total": total_bits,
        "chips": stream.len(),
        "sf_count": sf_count,
        "duration_s": stream.duration_s(),
    });
    fs::write(
        manifest_path(&out),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    println!(
        "encoded {} packets ({} x {} chips, N = {}) into {}",
        payloads.len(),
        plan.slot_chips(),
        plan.subpacket_chips,
        plan.repetitions,
        out.display()
    );
    Ok(())
}

fn simulate(
    common: Common,
    chips: PathBuf,
    duration: Option<f64>,
    out: Option<PathBuf>,
) -> Result<()> {
    let cfg = load_config(common.config.as_deref(), common.seed)?;
    let stream = ChipStream::read_packed(BufReader::new(
        File::open(&chips).with_context(|| format!("opening {}", chips.display()))?,
    ))
    .with_context(|| format!("reading chip stream {}", chips.display()))?;
    let duration = duration.unwrap_or_else(|| stream.duration_s());
    let frames = sample_frames::<f64>(&stream, &cfg.camera(), &cfg.geometry, duration)?;
    let out = out_path(out, cfg.output.frames.as_ref(), "frames.csv");
    let mut w = create(&out)?;
    write_frames_csv(&frames, &mut w)?;
    w.flush()?;
    println!(
        "captured {} frames over {duration:.3} s into {}",
        frames.len(),
        out.display()
    );
    Ok(())
}

fn decode(
    common: Common,
    frames: PathBuf,
    out: Option<PathBuf>,
    payloads_out: Option<PathBuf>,
    manifest: Option<PathBuf>,
) -> Result<()> {
    let cfg = load_config(common.config.as_deref(), common.seed)?;
    let camera = cfg.camera();
    let rx_cfg = cfg.receiver();
    let rows_per_subpacket =
        camera.rows_per_chip(cfg.link.optical_clock_hz) * cfg.link.subpacket_chips() as f64;
    let file = File::open(&frames).with_context(|| format!("opening {}", frames.display()))?;
    let samples = read_frames_csv(BufReader::new(file), |rows| {
        covered_rows(&cfg.geometry, rows_per_subpacket, rows)
    })
    .with_context(|| format!("parsing {}", frames.display()))?;
    let reception = receive(&samples, &rx_cfg)?;
    let report = LinkReport::new(&reception, &rx_cfg);
    let out = out_path(out, cfg.output.report.as_ref(), "report.json");
    fs::write(&out, serde_json::to_string_pretty(&report)? + "\n")?;
    let mut bits = reception.payload_bits();
    if let Some(m) = manifest {
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&m)?)
            .with_context(|| format!("parsing {}", m.display()))?;
        let total = v["payload_bits_total"]
            .as_u64()
            .context("manifest lacks payload_bits_total")? as usize;
        bits.truncate(total);
    }
    bits.truncate(bits.len() / 8 * 8);
    if let Some(p) = payloads_out.or(cfg.output.payloads.clone()) {
        fs::write(&p, pack_msb_first(&bits))?;
    }
    println!(
        "{} frames, {} payloads recovered ({} fused), {} unrecovered groups, {} gaps ({} payloads missed)",
        report.frames,
        report.recovered,
        report.fused,
        report.unrecovered_groups,
        report.gaps.len(),
        report.missed_detected
    );
    Ok(())
}

fn sweep(
    out: PathBuf,
    report: Option<PathBuf>,
    version: FrameStructure,
    fps_min: i64,
) -> Result<()> {
    let f: Vec<u64> = DEFAULT_FREQUENCIES.map(|k| k * 100).collect();
    let rows = sweep_frequency(
        &RllScheme::ALL,
        &f,
        version,
        Exact::from_integer(fps_min),
        Exact::from_integer(1),
    );
    let mut w = create(&out)?;
    write_sweep_csv(&rows, &mut w)?;
    w.flush()?;
    let text = sweep_report(&rows);
    match report {
        Some(p) => fs::write(p, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn der(
    common: Common,
    out: PathBuf,
    trials: Option<usize>,
    packets: usize,
    floors: Vec<f64>,
) -> Result<()> {
    let mut cfg = load_config(
        Some(common.config.as_deref().unwrap_or("table5_v2")),
        common.seed,
    )?;
    if let Some(t) = trials {
        cfg.trials = t;
    }
    let rows = with_threads(common.parallel, || {
        der_study(&cfg.link, &floors, packets, cfg.trials, cfg.seed)
    })??;
    let mut w = csv::Writer::from_writer(create(&out)?);
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    for r in &rows {
        println!(
            "floor {:>5.2} fps: formula {:.3e}, empirical {:.3e} [{:.3e}, {:.3e}]",
            r.fps_floor, r.der_formula, r.der_empirical, r.ci_low, r.ci_high
        );
    }
    Ok(())
}

fn fusion(
    seed: Option<u64>,
    parallel: Option<usize>,
    out: PathBuf,
    packets: Option<usize>,
    summary: Option<PathBuf>,
) -> Result<()> {
    let mut study = FusionStudy::default();
    if let Some(s) = seed {
        study.seed = s;
    }
    if let Some(p) = packets {
        study.packets = p;
    }
    let result = with_threads(parallel, || fusion_gain_experiment(&study))??;
    let mut w = csv::Writer::from_writer(create(&out)?);
    for r in &result.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    if let Some(p) = summary {
        fs::write(p, serde_json::to_string_pretty(&result)? + "\n")?;
    }
    for m in &result.max_distance {
        println!(
            "ds {:>4} chips, fusion {:<5}: max distance {:.3} d0 ({:.3} reference units)",
            m.ds_length, m.fusion, m.distance_ratio, m.distance
        );
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Encode {
            common,
            payload,
            out,
        } => encode(common, payload, out),
        Command::Simulate {
            common,
            chips,
            duration,
            out,
        } => simulate(common, chips, duration, out),
        Command::Decode {
            common,
            frames,
            out,
            payloads_out,
            manifest,
        } => decode(common, frames, out, payloads_out, manifest),
        Command::Sweep {
            out,
            report,
            version,
            fps_min,
        } => sweep(out, report, version, fps_min),
        Command::Der {
            common,
            out,
            trials,
            packets,
            floors,
        } => der(common, out, trials, packets, floors),
        Command::Fusion {
            seed,
            parallel,
            out,
            packets,
            summary,
        } => fusion(seed, parallel, out, packets, summary),
        Command::Config { name } => {
            println!("{}", load_config(Some(&name), None)?.to_json());
            Ok(())
        }
    }
}
