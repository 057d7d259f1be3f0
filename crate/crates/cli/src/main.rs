//! Command-line front end: every experiment the simulator supports, emitting
//! CSV curves and waveform dumps that external plotting tools can consume.
//!
//! Exit codes: 0 success, 2 configuration/validation error, 3 assertion or
//! recovery failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gen2phy::analysis::{
    ebn0_for_ser, preamble_detect_prob, run_ber_sweep, run_preamble_sweep, theoretical_ser,
};
use gen2phy::backscatter::{self, BackscatterConfig};
use gen2phy::channel::noise_sigma;
use gen2phy::modem::{modulate, ModulationConfig, Scheme};
use gen2phy::params::LinkParams;
use gen2phy::pie::{self, PreambleSpec};
use gen2phy::tag_rx::demodulate_downlink;
use gen2phy::uplink::fm0_encode;
use gen2phy::{PhyError, Waveform};

const EXIT_CONFIG: u8 = 2;
const EXIT_RECOVERY: u8 = 3;

#[derive(Parser)]
#[command(name = "gen2phy", about = "EPC Gen-2 RFID physical layer simulator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a link parameter file and report the derived quantities.
    Params(ParamsArgs),
    /// Run the downlink timing-synchronization scenario and dump every
    /// demodulator tap.
    DownlinkRoundtrip(DownlinkArgs),
    /// Monte-Carlo uplink BER sweep (FM0 or Miller sub-carrier).
    BerSweep(BerArgs),
    /// Monte-Carlo uplink preamble-detection sweep.
    PreambleSweep(PreambleArgs),
    /// Backscatter loopback: CW, tag ASK reflection, mixer + low-pass.
    BackscatterDemo(BackscatterArgs),
}

#[derive(Args)]
struct ParamsArgs {
    /// Link parameter file (key=value: tari_s, rtcal_s, trcal_s, dr, m,
    /// data1_len_s).
    #[arg(long)]
    config: PathBuf,
    /// Override config keys, e.g. --set trcal_s=2e-4.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct DownlinkArgs {
    /// Optional link parameter file; defaults to the reference downlink
    /// timing (Tari 6.25 us, Data-1 1.5 Tari, RTcal 2.5 Tari, TRcal 2 RTcal).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "dsb-ask")]
    modulation: String,
    /// Payload bits as a 0/1 string.
    #[arg(long, default_value = "100110")]
    bits: String,
    /// Eb/N0 in dB (frame energy per payload bit); omit for noiseless.
    #[arg(long)]
    ebn0: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Use the full 910 MHz carrier instead of the ratio-scaled 8 MHz one.
    #[arg(long)]
    full_rf: bool,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct BerArgs {
    /// Line code: fm0 or miller.
    #[arg(long, default_value = "fm0")]
    code: String,
    /// Miller sub-carrier cycles per symbol (2, 4 or 8).
    #[arg(long, default_value_t = 2)]
    m: u8,
    /// Eb/N0 points: start:step:stop or a comma list.
    #[arg(long, default_value = "0:2:12")]
    ebn0: String,
    #[arg(long, default_value_t = 100_000)]
    bits: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Fail (exit 3) unless every measured point is within 3 binomial sigma
    /// of the closed-form rate.
    #[arg(long)]
    self_check: bool,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct PreambleArgs {
    /// Symbols per preamble.
    #[arg(long, default_value_t = 6)]
    n: u32,
    #[arg(long, default_value = "0:1:14")]
    ebn0: String,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Replace the measured per-symbol error rate in the theoretical column
    /// with a fixed value.
    #[arg(long)]
    pe_override: Option<f64>,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct BackscatterArgs {
    /// Payload bits as a 0/1 string.
    #[arg(long, default_value = "11001001")]
    bits: String,
    /// Use the full 896 MHz CW instead of the ratio-scaled 1 MHz one.
    #[arg(long)]
    full_rf: bool,
    /// Tag ASK depth (1.0 = on-off keying).
    #[arg(long, default_value_t = 1.0)]
    ask_depth: f64,
    /// Local-oscillator phase offset at the mixer, degrees.
    #[arg(long, default_value_t = 0.0)]
    lo_phase: f64,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Params(a) => cmd_params(a),
        Command::DownlinkRoundtrip(a) => cmd_downlink(a),
        Command::BerSweep(a) => cmd_ber(a),
        Command::PreambleSweep(a) => cmd_preamble(a),
        Command::BackscatterDemo(a) => cmd_backscatter(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(CmdError::Recovery(msg)) => {
            eprintln!("failure: {msg}");
            ExitCode::from(EXIT_RECOVERY)
        }
    }
}

enum CmdError {
    Config(String),
    Recovery(String),
}

impl From<PhyError> for CmdError {
    fn from(e: PhyError) -> Self {
        match e {
            PhyError::Framing(_) | PhyError::SyncLoss(_) | PhyError::Protocol(_) => {
                CmdError::Recovery(e.to_string())
            }
            other => CmdError::Config(other.to_string()),
        }
    }
}

type CmdResult = Result<(), CmdError>;

fn config_err<T>(msg: impl Into<String>) -> Result<T, CmdError> {
    Err(CmdError::Config(msg.into()))
}

fn parse_bits(s: &str) -> Result<Vec<bool>, CmdError> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => config_err(format!("bit string may only contain 0/1, found {other:?}")),
        })
        .collect()
}

/// Parse "start:step:stop" or "a,b,c" into Eb/N0 points.
fn parse_ebn0(s: &str) -> Result<Vec<f64>, CmdError> {
    let bad = |_| CmdError::Config(format!("cannot parse Eb/N0 spec {s:?}"));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return config_err(format!("range spec {s:?} must be start:step:stop"));
        }
        let start: f64 = parts[0].parse().map_err(bad)?;
        let step: f64 = parts[1].parse().map_err(bad)?;
        let stop: f64 = parts[2].parse().map_err(bad)?;
        if step <= 0.0 || stop < start {
            return config_err("range spec needs step > 0 and stop >= start");
        }
        let mut points = Vec::new();
        let mut v = start;
        while v <= stop + 1e-9 {
            points.push(v);
            v += step;
        }
        Ok(points)
    } else {
        s.split(',').map(|p| p.trim().parse().map_err(bad)).collect()
    }
}

fn load_params(path: &Path, overrides: &[String]) -> Result<LinkParams, CmdError> {
    let mut text = std::fs::read_to_string(path)
        .map_err(|e| CmdError::Config(format!("cannot read {}: {e}", path.display())))?;
    for kv in overrides {
        if !kv.contains('=') {
            return config_err(format!("override {kv:?} is not key=value"));
        }
        text.push('\n');
        text.push_str(kv);
    }
    Ok(LinkParams::from_config_string(&text)?)
}

fn ensure_dir(dir: &Path) -> Result<(), CmdError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CmdError::Config(format!("cannot create {}: {e}", dir.display())))
}

fn save(wave: &Waveform, dir: &Path, name: &str) -> Result<(), CmdError> {
    let path = dir.join(name);
    wave.save(&path)
        .map_err(|e| CmdError::Config(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_params(args: ParamsArgs) -> CmdResult {
    let params = load_params(&args.config, &args.overrides)?;
    if let Err(violations) = params.validate() {
        let names: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return config_err(format!("invalid parameters: {}", names.join("; ")));
    }
    println!("parameters valid");
    println!("  tari          {:.6} us", params.tari * 1e6);
    println!("  rtcal         {:.6} us", params.rtcal * 1e6);
    println!("  trcal         {:.6} us", params.trcal * 1e6);
    println!("  dr            {}", params.dr);
    println!("  m             {}", params.m);
    println!("  data1         {:.6} us", params.data1_len * 1e6);
    println!(
        "  link freq     {:.6} kbps",
        params.link_frequency()? / 1e3
    );
    println!("  pivot         {:.6} us", params.pivot()? * 1e6);
    println!(
        "  min query gap {:.6} us",
        pie::min_query_gap(&params)? * 1e6
    );
    Ok(())
}

fn cmd_downlink(args: DownlinkArgs) -> CmdResult {
    let params = match &args.config {
        Some(path) => load_params(path, &[])?,
        None => LinkParams::table3_downlink(),
    };
    let scheme: Scheme = args.modulation.parse()?;
    let config = if args.full_rf {
        ModulationConfig::table3_full_rf(scheme)
    } else {
        ModulationConfig::scaled(scheme)
    };
    let bits = parse_bits(&args.bits)?;
    if bits.is_empty() {
        return config_err("payload must contain at least one bit");
    }
    ensure_dir(&args.output_dir)?;

    let spec = PreambleSpec::preamble(&params);
    let frame = pie::build_frame(&spec, &bits, &params, config.sample_rate)?;
    let mut rf = modulate(&frame, &config)?;
    if let Some(ebn0) = args.ebn0 {
        let eb = rf.energy() / bits.len() as f64;
        let sigma = noise_sigma(eb, ebn0, config.sample_rate);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(args.seed);
        rf.samples = gen2phy::channel::add_awgn_rng(&rf.samples, sigma, &mut rng);
        println!("added AWGN at Eb/N0 = {ebn0} dB (seed {})", args.seed);
    }
    let out = demodulate_downlink(&rf, &params, &config)
        .map_err(|e| CmdError::Recovery(e.to_string()))?;
    save(&out.envelope, &args.output_dir, "envelope.txt")?;
    save(&out.trigger, &args.output_dir, "trigger.txt")?;
    save(&out.clock.to_waveform(), &args.output_dir, "clock.txt")?;
    save(&out.clock.diff_waveform(), &args.output_dir, "diff_clock.txt")?;
    println!(
        "pivot {:.4} us ({})",
        out.pivot * 1e6,
        if out.header.is_frame_sync() {
            "from configuration"
        } else {
            "learned from RTcal field"
        }
    );
    if out.bits == bits {
        println!("recovered {} bits exactly", bits.len());
        Ok(())
    } else {
        let positions: Vec<String> = out
            .bits
            .iter()
            .zip(&bits)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, _)| i.to_string())
            .collect();
        Err(CmdError::Recovery(format!(
            "bit mismatch at positions [{}] (got {} bits, sent {})",
            positions.join(", "),
            out.bits.len(),
            bits.len()
        )))
    }
}

fn cmd_ber(args: BerArgs) -> CmdResult {
    let m = match args.code.to_ascii_lowercase().as_str() {
        "fm0" => 1,
        "miller" => {
            if !matches!(args.m, 2 | 4 | 8) {
                return config_err("miller m must be 2, 4 or 8");
            }
            args.m
        }
        other => return config_err(format!("unknown code {other:?} (fm0 or miller)")),
    };
    let points = parse_ebn0(&args.ebn0)?;
    if args.bits < 10_000 {
        return config_err("ber sweep needs at least 10000 bits per point");
    }
    ensure_dir(&args.output_dir)?;
    let curve = run_ber_sweep(m, &points, args.bits, args.seed)?;
    let path = args.output_dir.join("ber.csv");
    std::fs::write(&path, curve.to_csv())
        .map_err(|e| CmdError::Config(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {} ({} points)", path.display(), curve.points.len());
    println!(
        "closed-form Eb/N0 for SER 1e-3: {:.2} dB; SER at 13 dB: {:.3e}",
        ebn0_for_ser(1e-3),
        theoretical_ser(13.0)
    );
    if args.self_check && !curve.within_sigma_of_theory(3.0) {
        return Err(CmdError::Recovery(
            "measured BER deviates from the closed-form rate by more than 3 sigma".into(),
        ));
    }
    Ok(())
}

fn cmd_preamble(args: PreambleArgs) -> CmdResult {
    if args.n == 0 {
        return config_err("n must be at least 1");
    }
    if let Some(pe) = args.pe_override {
        if !(0.0..=1.0).contains(&pe) {
            return config_err("pe override must lie in [0, 1]");
        }
    }
    let points = parse_ebn0(&args.ebn0)?;
    if args.trials < 1_000 {
        return config_err("preamble sweep needs at least 1000 trials per point");
    }
    ensure_dir(&args.output_dir)?;
    let mut curve = run_preamble_sweep(args.n, &points, args.trials, args.seed)?;
    if let Some(pe) = args.pe_override {
        for p in &mut curve.points {
            p.theoretical = preamble_detect_prob(pe, args.n);
        }
    }
    let path = args.output_dir.join("preamble.csv");
    std::fs::write(&path, curve.to_csv())
        .map_err(|e| CmdError::Config(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {} ({} points)", path.display(), curve.points.len());
    if let Some(last) = curve.points.last() {
        println!(
            "detection at {} dB: {:.4} (theoretical {:.4})",
            last.ebn0_db, last.measured, last.theoretical
        );
    }
    Ok(())
}

fn cmd_backscatter(args: BackscatterArgs) -> CmdResult {
    let mut config = if args.full_rf {
        BackscatterConfig::full_rf()
    } else {
        BackscatterConfig::scaled()
    };
    config.ask_depth = args.ask_depth;
    config.lo_phase = args.lo_phase.to_radians();
    config.validate()?;
    let bits = parse_bits(&args.bits)?;
    if bits.is_empty() {
        return config_err("payload must contain at least one bit");
    }
    ensure_dir(&args.output_dir)?;
    let stream = fm0_encode(&bits, 1.0, 1.0 / config.uplink_rate);
    let res = backscatter::loopback(&bits, &stream, &config)
        .map_err(|e| CmdError::Recovery(e.to_string()))?;
    save(&res.encoded_baseband, &args.output_dir, "encoded_baseband.txt")?;
    save(&res.backscattered, &args.output_dir, "backscattered_rf.txt")?;
    save(&res.mixer_output, &args.output_dir, "mixer_output.txt")?;
    // A quadrature local oscillator collapses the mixer output toward zero;
    // whatever the decoder then reads is residue, not signal.
    let mean =
        res.mixer_output.samples.iter().sum::<f64>() / res.mixer_output.len().max(1) as f64;
    let ac_rms = (res.mixer_output.power() - mean * mean).max(0.0).sqrt();
    if ac_rms < 0.02 * config.ask_depth {
        return Err(CmdError::Recovery(format!(
            "mixer output collapsed (ac rms {ac_rms:.2e}); local oscillator near quadrature"
        )));
    }
    if res.decoded == bits {
        println!(
            "loopback recovered {} bits exactly (cw {:.3} MHz, {:.1} kbps)",
            bits.len(),
            config.cw_freq / 1e6,
            config.uplink_rate / 1e3
        );
        Ok(())
    } else {
        Err(CmdError::Recovery(format!(
            "loopback mismatch: sent {:?}, decoded {:?} (lo phase {} deg)",
            bits, res.decoded, args.lo_phase
        )))
    }
}
