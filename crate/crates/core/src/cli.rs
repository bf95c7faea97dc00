// SPDX-License-Identifier: Apache-2.0

//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 unreadable or malformed input,
//! 3 semantically invalid design, 4 arena capacity, 5 internal consistency
//! failure (including an oracle mismatch under `--oracle`).

use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::Parser;

use crate::netlist::{CellLibrary, LevelizedNetlist, Netlist, NetlistError};
use crate::oracle;
use crate::report::{self, Timings, WaveCollector};
use crate::scheduler::{self, RunConfig, ScheduleError, DEFAULT_MEM_CAP};
use crate::sdf::{AnnotatedDelays, Corner, DelayMode, SdfError};
use crate::units::{parse_bytes, parse_time};
use crate::waveform::{self, vcd, StimulusSet, WaveformError};
use crate::Tick;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_SEMANTIC: i32 = 3;
pub const EXIT_CAPACITY: i32 = 4;
pub const EXIT_INTERNAL: i32 = 5;

/// Delay-annotated gate-level re-simulation producing SAIF activity.
#[derive(Debug, Parser)]
#[command(name = "glsim", version)]
pub struct CliConfig {
    /// Netlist JSON.
    #[arg(long, env = "GLSIM_NETLIST")]
    pub netlist: PathBuf,
    /// Cell library JSON.
    #[arg(long, env = "GLSIM_LIB")]
    pub lib: PathBuf,
    /// SDF annotation; without it every delay is zero.
    #[arg(long, env = "GLSIM_SDF")]
    pub sdf: Option<PathBuf>,
    /// Input stimuli VCD covering every primary/pseudo-primary input.
    #[arg(long, env = "GLSIM_VCD")]
    pub vcd: PathBuf,
    /// SAIF output path.
    #[arg(long, env = "GLSIM_SAIF")]
    pub saif: Option<PathBuf>,
    /// Fixed window length (e.g. `10ns`; bare numbers are fs).
    #[arg(long, env = "GLSIM_WINDOW_PERIOD", value_parser = parse_time)]
    pub window_period: Option<Tick>,
    /// Start of the first full window.
    #[arg(long, env = "GLSIM_WINDOW_OFFSET", value_parser = parse_time, default_value = "0")]
    pub window_offset: Tick,
    /// File of ascending window boundaries.
    #[arg(long, env = "GLSIM_WINDOWS_FILE", conflicts_with = "window_period")]
    pub windows_file: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, env = "GLSIM_THREADS", default_value_t = 0)]
    pub threads: usize,
    /// Windows per task.
    #[arg(long, env = "GLSIM_CYCLE_PARALLELISM", default_value_t = 32,
          value_parser = clap::value_parser!(u32).range(1..))]
    pub cycle_parallelism: u32,
    /// Arena cap in bytes (K/M/G suffixes), or `none`.
    #[arg(long, env = "GLSIM_MEM_CAP", value_parser = parse_cap)]
    pub mem_cap: Option<Cap>,
    #[arg(long, env = "GLSIM_CORNER", default_value = "typ", value_parser = parse_from_str::<Corner>)]
    pub corner: Corner,
    /// `full` conditional tables or `avg` per-arc means.
    #[arg(long, env = "GLSIM_DELAY_MODE", default_value = "full", value_parser = parse_from_str::<DelayMode>)]
    pub delay_mode: DelayMode,
    #[arg(long, env = "GLSIM_PATHPULSE_PCT", default_value_t = 100,
          value_parser = clap::value_parser!(u32).range(0..=100))]
    pub pathpulse_pct: u32,
    /// Cross-check every window against the reference simulator.
    #[arg(long, env = "GLSIM_ORACLE")]
    pub oracle: bool,
    /// VCD output of the nets in --dump-nets.
    #[arg(long, env = "GLSIM_DUMP_VCD")]
    pub dump_vcd: Option<PathBuf>,
    /// Comma-separated nets to dump (default: primary outputs).
    #[arg(long, env = "GLSIM_DUMP_NETS", value_delimiter = ',')]
    pub dump_nets: Vec<String>,
    /// JSON run report path.
    #[arg(long, env = "GLSIM_REPORT")]
    pub report: Option<PathBuf>,
    /// Leave IG out of the SAIF.
    #[arg(long, env = "GLSIM_NO_IG")]
    pub no_ig: bool,
    #[arg(long, hide = true)]
    pub force_oracle: bool,
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cap(pub Option<u64>);

fn parse_cap(s: &str) -> Result<Cap, String> {
    if s.eq_ignore_ascii_case("none") {
        Ok(Cap(None))
    } else {
        parse_bytes(s).map(|b| Cap(Some(b)))
    }
}

fn parse_from_str<T: std::str::FromStr>(s: &str) -> Result<T, String>
where
    T::Err: Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn fail(code: i32, message: impl Display) -> Failure {
    Failure {
        code,
        message: message.to_string(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn write(path: &Path, data: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, data).map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn netlist_code(e: &NetlistError) -> i32 {
    match e {
        NetlistError::Json(_) => EXIT_PARSE,
        _ => EXIT_SEMANTIC,
    }
}

fn sdf_code(e: &SdfError) -> i32 {
    match e {
        SdfError::Syntax { .. } | SdfError::NegativeDelay { .. } => EXIT_PARSE,
        _ => EXIT_SEMANTIC,
    }
}

fn waveform_code(e: &WaveformError) -> i32 {
    match e {
        WaveformError::MissingInput(_) | WaveformError::VectorInput { .. } => EXIT_SEMANTIC,
        WaveformError::UnknownNet(_) => EXIT_USAGE,
        _ => EXIT_PARSE,
    }
}

fn schedule_code(e: &ScheduleError) -> i32 {
    match e {
        ScheduleError::CapacityExceeded { .. } | ScheduleError::WindowTooLarge { .. } => EXIT_CAPACITY,
        ScheduleError::Config(_) => EXIT_USAGE,
        _ => EXIT_INTERNAL,
    }
}

fn boundaries(cfg: &CliConfig, duration: Tick) -> Result<Vec<Tick>, Failure> {
    if let Some(path) = &cfg.windows_file {
        let text = read(path)?;
        let b = text
            .split_whitespace()
            .map(parse_time)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))?;
        return Ok(b);
    }
    match cfg.window_period {
        Some(0) => Err(fail(EXIT_USAGE, "--window-period must be positive")),
        Some(p) => Ok(waveform::periodic_boundaries(duration, p, cfg.window_offset)),
        None => Ok(vec![0, duration.max(1)]),
    }
}

fn ms(d: Duration) -> String {
    format!("{:.3} ms", d.as_secs_f64() * 1e3)
}

/// Runs the tool on parsed arguments.
pub fn execute(cfg: &CliConfig) -> Result<String, Failure> {
    let started = Instant::now();

    let lib = CellLibrary::parse(&read(&cfg.lib)?)
        .map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", cfg.lib.display())))?;
    let netlist = Netlist::parse(&read(&cfg.netlist)?, Arc::new(lib))
        .map_err(|e| fail(netlist_code(&e), format!("{}: {e}", cfg.netlist.display())))?;
    let levelized = LevelizedNetlist::new(netlist)
        .map_err(|e| fail(netlist_code(&e), format!("{}: {e}", cfg.netlist.display())))?;
    let n = levelized.netlist();
    let delays = match &cfg.sdf {
        Some(path) => AnnotatedDelays::parse(&read(path)?, n, cfg.corner)
            .map_err(|e| fail(sdf_code(&e), format!("{}: {e}", path.display())))?,
        None => AnnotatedDelays::zero(n),
    }
    .with_mode(cfg.delay_mode);
    let stim = vcd::parse_vcd(&read(&cfg.vcd)?, n)
        .map_err(|e| fail(waveform_code(&e), format!("{}: {e}", cfg.vcd.display())))?;
    let bounds = boundaries(cfg, stim.duration)?;
    let stimuli = StimulusSet::new(&stim.inputs, bounds)
        .map_err(|e| fail(EXIT_USAGE, format!("windows: {e}")))?;
    let parse_time = started.elapsed();

    let run_cfg = RunConfig {
        workers: cfg.threads,
        cycle_parallelism: cfg.cycle_parallelism as usize,
        mem_cap: cfg.mem_cap.map_or(Some(DEFAULT_MEM_CAP), |c| c.0),
        corner: cfg.corner,
        delay_mode: cfg.delay_mode,
        pathpulse_pct: cfg.pathpulse_pct,
        inject_fault: cfg.inject_fault,
    };

    let reference = if cfg.oracle {
        oracle::check_size(n, cfg.force_oracle).map_err(|m| fail(EXIT_USAGE, m))?;
        Some(oracle::oracle_run(&levelized, &delays, &stimuli, cfg.pathpulse_pct))
    } else {
        None
    };
    let mut divergence = None;
    let mut collector = match &cfg.dump_vcd {
        Some(_) => {
            let names = if cfg.dump_nets.is_empty() {
                n.outputs.iter().map(|&o| n.net(o).name.clone()).collect()
            } else {
                cfg.dump_nets.clone()
            };
            Some(WaveCollector::new(n, &names).map_err(|m| fail(EXIT_USAGE, m))?)
        }
        None => None,
    };

    let mut on_segment = |arena: &crate::WaveformArena| -> Result<(), String> {
        if let Some(reference) = &reference {
            if let Some(d) = oracle::compare(&levelized, &stimuli, arena, reference) {
                let msg = format!("oracle mismatch: {d}");
                divergence = Some(d);
                return Err(msg);
            }
        }
        if let Some(c) = &mut collector {
            c.absorb(&levelized, &stimuli, arena);
        }
        Ok(())
    };
    let (stats, diag) = scheduler::segment_run(&levelized, &stimuli, &delays, &run_cfg, &mut on_segment)
        .map_err(|e| fail(schedule_code(&e), e))?;
    debug_assert!(divergence.is_none());

    let t_report = Instant::now();
    let with_ig = !cfg.no_ig;
    if let Some(path) = &cfg.saif {
        write(path, report::write_saif(&stats, n, &n.name, with_ig).as_bytes())?;
    }
    if let (Some(path), Some(c)) = (&cfg.dump_vcd, &collector) {
        let mut buf = Vec::new();
        c.write_vcd(&mut buf, *stimuli.boundaries().last().unwrap())
            .map_err(|e| fail(EXIT_PARSE, e))?;
        write(path, &buf)?;
    }
    let mut timings = Timings {
        parse: parse_time,
        pass1: diag.pass1,
        alloc: diag.alloc,
        pass2: diag.pass2,
        report: t_report.elapsed(),
    };
    if let Some(path) = &cfg.report {
        timings.report = t_report.elapsed();
        write(path, report::json_report(&stats, &diag, &timings).as_bytes())?;
    }

    let total = started.elapsed();
    let mut s = String::new();
    s += &format!(
        "design {}: {} gates, {} nets, {} levels, {} windows, {} segment(s)\n",
        n.name,
        n.num_gates(),
        n.num_nets(),
        levelized.depth(),
        stimuli.num_windows(),
        diag.segments
    );
    s += &format!(
        "activity: {} toggles, {} filtered pulses, {} interconnect-filtered, {} discarded at window ends, factor {:.6}\n",
        stats.total_tc(),
        stats.total_ig(),
        diag.wire_filtered,
        diag.discarded,
        stats.activity_factor()
    );
    if reference.is_some() {
        s += "oracle: all nets match\n";
    }
    s += &format!(
        "kernel time: {} (pass 1 {}, pass 2 {})\n",
        ms(diag.kernel_time()),
        ms(diag.pass1),
        ms(diag.pass2)
    );
    s += &format!(
        "application time: {} (parse {}, alloc {}, report {})\n",
        ms(total),
        ms(parse_time),
        ms(diag.alloc),
        ms(timings.report)
    );
    Ok(s)
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with_args(args: impl IntoIterator<Item = OsString>) -> i32 {
    let cfg = match CliConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cfg) {
        Ok(summary) => {
            print!("{summary}");
            EXIT_OK
        }
        Err(f) => {
            eprintln!("glsim: {}", f.message);
            f.code
        }
    }
}
