// SPDX-License-Identifier: Apache-2.0

//! Level-ordered parallel execution of the kernel.
//!
//! Tasks are (gate, window batch) pairs. All tasks of a level run
//! concurrently; a level starts only after the previous one has been
//! counted, allocated and stored. Every task writes a disjoint slice of the
//! arena and reads only lower levels, so results do not depend on the worker
//! count or on task order.

use std::ops::Range;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use smallvec::SmallVec;

use crate::netlist::{Driver, GateId, LevelizedNetlist};
use crate::report::{compute_stats, ActivityStats};
use crate::sdf::{AnnotatedDelays, Corner, DelayMode};
use crate::simcore::{simulate_gate_window, GateParams, GateWindowResult, KernelError, Mode};
use crate::waveform::{ArenaReader, RegionStats, StimulusSet, WaveRef, WaveformArena};
use crate::Tick;

/// Default share of the memory budget given to the waveform arena.
pub const DEFAULT_MEM_CAP: u64 = 24 << 30;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    /// Worker threads; 0 picks one per available core.
    pub workers: usize,
    /// Windows simulated by one task.
    pub cycle_parallelism: usize,
    /// Arena size limit in bytes; `None` is unlimited.
    pub mem_cap: Option<u64>,
    pub corner: Corner,
    pub delay_mode: DelayMode,
    /// Inertial rejection threshold as a percentage of the arc delay.
    pub pathpulse_pct: u32,
    #[doc(hidden)]
    pub inject_fault: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            workers: 0,
            cycle_parallelism: 32,
            mem_cap: Some(DEFAULT_MEM_CAP),
            corner: Corner::Typ,
            delay_mode: DelayMode::Full,
            pathpulse_pct: 100,
            inject_fault: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ScheduleError> {
        if self.cycle_parallelism == 0 {
            return Err(ScheduleError::Config("cycle parallelism must be at least 1".into()));
        }
        if self.pathpulse_pct > 100 {
            return Err(ScheduleError::Config(format!(
                "pathpulse percent {} is outside [0, 100]",
                self.pathpulse_pct
            )));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScheduleError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("windows {}..{} need {needed} arena bytes, cap is {cap}", windows.start, windows.end)]
    CapacityExceeded {
        windows: Range<usize>,
        needed: u64,
        cap: u64,
    },
    #[error("window {window} alone needs more than the {cap}-byte arena cap (at least {needed} bytes); raise --mem-cap or use shorter windows")]
    WindowTooLarge { window: usize, needed: u64, cap: u64 },
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error("thread pool: {0}")]
    Pool(String),
    #[error("{0}")]
    Aborted(String),
}

/// Hooks called from inside the schedule, for instrumentation and tests.
pub trait RunObserver: Sync {
    /// A task of `level` (1-based) is about to run in `pass` (1 or 2).
    fn task_started(&self, _level: usize, _pass: u8, _gate: GateId) {}
    /// Both passes of `level` finished and its waveforms are readable.
    fn level_completed(&self, _level: usize) {}
}

struct NoObserver;
impl RunObserver for NoObserver {}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LevelDiagnostics {
    pub gates: usize,
    pub tasks: usize,
    pub transitions: u64,
}

#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub levels: Vec<LevelDiagnostics>,
    pub pass1: Duration,
    pub alloc: Duration,
    pub pass2: Duration,
    pub discarded: u64,
    pub filtered: u64,
    pub wire_filtered: u64,
    /// Segments that completed.
    pub segments: usize,
    /// Runs abandoned because the arena cap was hit.
    pub retries: usize,
    pub peak_arena_bytes: u64,
}

impl Diagnostics {
    /// Time spent inside kernel tasks (both passes).
    pub fn kernel_time(&self) -> Duration {
        self.pass1 + self.pass2
    }

    fn absorb(&mut self, other: &Diagnostics) {
        if self.levels.len() < other.levels.len() {
            self.levels.resize(other.levels.len(), LevelDiagnostics::default());
        }
        for (a, b) in self.levels.iter_mut().zip(&other.levels) {
            a.gates = a.gates.max(b.gates);
            a.tasks += b.tasks;
            a.transitions += b.transitions;
        }
        self.pass1 += other.pass1;
        self.alloc += other.alloc;
        self.pass2 += other.pass2;
        self.discarded += other.discarded;
        self.filtered += other.filtered;
        self.wire_filtered += other.wire_filtered;
        self.segments += other.segments;
        self.retries += other.retries;
        self.peak_arena_bytes = self.peak_arena_bytes.max(other.peak_arena_bytes);
    }
}

pub struct RunOutput {
    pub arena: WaveformArena,
    pub diagnostics: Diagnostics,
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool, ScheduleError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ScheduleError::Pool(e.to_string()))
}

/// Simulates all windows in one arena.
pub fn run(
    levelized: &LevelizedNetlist,
    stimuli: &StimulusSet,
    delays: &AnnotatedDelays,
    cfg: &RunConfig,
) -> Result<RunOutput, ScheduleError> {
    run_observed(levelized, stimuli, delays, cfg, 0..stimuli.num_windows(), &NoObserver)
}

/// Simulates the windows in `windows` with hooks.
pub fn run_observed(
    levelized: &LevelizedNetlist,
    stimuli: &StimulusSet,
    delays: &AnnotatedDelays,
    cfg: &RunConfig,
    windows: Range<usize>,
    observer: &dyn RunObserver,
) -> Result<RunOutput, ScheduleError> {
    cfg.validate()?;
    let pool = build_pool(cfg.workers)?;
    pool.install(|| run_range(levelized, stimuli, delays, cfg, windows, observer))
}

struct Ctx<'a> {
    levelized: &'a LevelizedNetlist,
    stimuli: &'a StimulusSet,
    delays: &'a AnnotatedDelays,
    cfg: &'a RunConfig,
    first: usize,
    observer: &'a dyn RunObserver,
}

impl Ctx<'_> {
    fn params(&self, gate: GateId) -> GateParams<'_> {
        GateParams {
            gate,
            cell: self.levelized.netlist().cell_of(gate),
            delays: self.delays,
            pathpulse_pct: self.cfg.pathpulse_pct,
            skew_rise: self.cfg.inject_fault,
        }
    }

    /// Window `w` (arena-relative) of every input of `gate`.
    fn pins<'r>(
        &'r self,
        reader: &ArenaReader<'r>,
        gate: GateId,
        w: usize,
    ) -> SmallVec<[WaveRef<'r>; 4]> {
        let n = self.levelized.netlist();
        n.gate(gate)
            .inputs
            .iter()
            .map(|&net| match n.net(net).driver {
                Driver::Input(i) => self.stimuli.input(self.first + w, i as usize),
                Driver::Gate(d) => reader.wave(self.levelized.rank(d), w),
            })
            .collect()
    }

    fn simulate(
        &self,
        reader: &ArenaReader<'_>,
        gate: GateId,
        w: usize,
        mode: Mode<'_>,
    ) -> GateWindowResult {
        let pins = self.pins(reader, gate, w);
        let window = self.stimuli.window(self.first + w);
        simulate_gate_window(&self.params(gate), &pins, window, mode)
    }
}

fn run_range(
    levelized: &LevelizedNetlist,
    stimuli: &StimulusSet,
    delays: &AnnotatedDelays,
    cfg: &RunConfig,
    windows: Range<usize>,
    observer: &dyn RunObserver,
) -> Result<RunOutput, ScheduleError> {
    let nw = windows.len();
    let cp = cfg.cycle_parallelism;
    let ctx = Ctx {
        levelized,
        stimuli,
        delays,
        cfg,
        first: windows.start,
        observer,
    };
    let mut arena = WaveformArena::new(nw, windows.start, cfg.mem_cap);
    let mut diag = Diagnostics::default();

    for (li, gates) in levelized.levels().iter().enumerate() {
        let level = li + 1;
        let batches = nw.div_ceil(cp);

        // Pass 1: count.
        let t0 = Instant::now();
        let mut results = vec![GateWindowResult::default(); gates.len() * nw];
        {
            let reader = arena.reader();
            let ctx = &ctx;
            results
                .par_chunks_mut(nw.max(1))
                .zip(gates.par_iter())
                .flat_map(|(per_gate, &gate)| {
                    per_gate
                        .par_chunks_mut(cp)
                        .enumerate()
                        .map(move |(b, out)| (gate, b * cp, out))
                })
                .for_each(|(gate, w0, out)| {
                    ctx.observer.task_started(level, 1, gate);
                    for (i, r) in out.iter_mut().enumerate() {
                        *r = ctx.simulate(&reader, gate, w0 + i, Mode::Count);
                    }
                });
        }
        diag.pass1 += t0.elapsed();

        // Allocate.
        let t1 = Instant::now();
        let counts: Vec<u32> = results.iter().map(|r| r.toggles).collect();
        let stats: Vec<RegionStats> = results
            .iter()
            .map(|r| RegionStats {
                initial: r.initial,
                filtered: r.filtered,
                discarded: r.discarded,
            })
            .collect();
        let regions = arena.reserve_level(&counts, &stats).map_err(|e| {
            ScheduleError::CapacityExceeded {
                windows: windows.clone(),
                needed: e.needed,
                cap: e.cap,
            }
        })?;
        let mut bounds = Vec::with_capacity(gates.len() * batches + 1);
        for g in 0..gates.len() {
            for b in 0..batches {
                bounds.push(g * nw + b * cp);
            }
        }
        bounds.push(gates.len() * nw);
        diag.alloc += t1.elapsed();

        // Pass 2: store.
        let t2 = Instant::now();
        {
            let (reader, chunks) = arena.split_level(regions, &bounds);
            let ctx = &ctx;
            let counts = &counts;
            let results = &results;
            chunks
                .into_par_iter()
                .enumerate()
                .try_for_each(|(task, mut buf)| -> Result<(), KernelError> {
                    let gi = task / batches.max(1);
                    let gate = gates[gi];
                    ctx.observer.task_started(level, 2, gate);
                    let lo = bounds[task];
                    for region in lo..bounds[task + 1] {
                        let w = region - gi * nw;
                        let cap = counts[region] as usize;
                        let (head, tail) = std::mem::take(&mut buf).split_at_mut(cap);
                        buf = tail;
                        let r = ctx.simulate(&reader, gate, w, Mode::Store(head));
                        let name = || ctx.levelized.netlist().gate(gate).name.clone();
                        if r.overflow {
                            return Err(KernelError::StoreOverflow {
                                gate: name(),
                                window: ctx.first + w,
                                capacity: cap,
                            });
                        }
                        if r != results[region] {
                            return Err(KernelError::TwoPassMismatch {
                                gate: name(),
                                window: ctx.first + w,
                                pass1: cap,
                                pass2: r.toggles as usize,
                            });
                        }
                    }
                    Ok(())
                })?;
        }
        diag.pass2 += t2.elapsed();
        observer.level_completed(level);

        diag.levels.push(LevelDiagnostics {
            gates: gates.len(),
            tasks: gates.len() * batches,
            transitions: counts.iter().map(|&c| u64::from(c)).sum(),
        });
        diag.wire_filtered += results.iter().map(|r| u64::from(r.wire_filtered)).sum::<u64>();
    }

    diag.discarded = arena.discarded();
    diag.filtered = arena.total_filtered();
    diag.segments = 1;
    diag.peak_arena_bytes = arena.bytes();
    Ok(RunOutput {
        arena,
        diagnostics: diag,
    })
}

/// Simulates all windows in as few contiguous segments as the arena cap
/// allows, calling `on_segment` with each completed arena, and returns the
/// summed activity.
///
/// A window range whose arena overflows is halved and retried.
pub fn segment_run(
    levelized: &LevelizedNetlist,
    stimuli: &StimulusSet,
    delays: &AnnotatedDelays,
    cfg: &RunConfig,
    on_segment: &mut dyn FnMut(&WaveformArena) -> Result<(), String>,
) -> Result<(ActivityStats, Diagnostics), ScheduleError> {
    cfg.validate()?;
    let pool = build_pool(cfg.workers)?;
    let mut stats = ActivityStats::empty(levelized.netlist().num_nets());
    let mut diag = Diagnostics::default();
    let mut todo = vec![0..stimuli.num_windows()];
    while let Some(range) = todo.pop() {
        let attempt = pool.install(|| {
            run_range(levelized, stimuli, delays, cfg, range.clone(), &NoObserver)
        });
        match attempt {
            Ok(out) => {
                on_segment(&out.arena).map_err(ScheduleError::Aborted)?;
                stats.merge(&compute_stats(levelized, stimuli, &out.arena));
                diag.absorb(&out.diagnostics);
            }
            Err(ScheduleError::CapacityExceeded { windows, needed, cap }) => {
                if windows.len() <= 1 {
                    return Err(ScheduleError::WindowTooLarge {
                        window: windows.start,
                        needed,
                        cap,
                    });
                }
                diag.retries += 1;
                let mid = windows.start + windows.len().div_ceil(2);
                todo.push(mid..windows.end);
                todo.push(windows.start..mid);
            }
            Err(e) => return Err(e),
        }
    }
    Ok((stats, diag))
}

/// Whole-run waveform of `net` rebuilt from a run's arena.
pub fn net_waveform(
    levelized: &LevelizedNetlist,
    stimuli: &StimulusSet,
    arena: &WaveformArena,
    net: crate::netlist::NetId,
) -> crate::waveform::Waveform {
    let first = arena.first_window();
    crate::waveform::concat_windows((first..first + arena.windows()).map(|w| {
        (
            stimuli.window(w).start,
            crate::waveform::net_wave(levelized, stimuli, arena, net, w),
        )
    }))
}

/// Sum of window lengths covered by an arena.
pub fn arena_span(stimuli: &StimulusSet, arena: &WaveformArena) -> Tick {
    let first = arena.first_window();
    stimuli.span(first..first + arena.windows())
}
