// SPDX-License-Identifier: Apache-2.0

//! Switching activity aggregation and SAIF / VCD / JSON output.

use std::fmt::Write as _;
use std::io;
use std::time::Duration;

use rayon::prelude::*;
use serde::Serialize;

use crate::netlist::{Driver, LevelizedNetlist, NetId, Netlist};
use crate::scheduler::Diagnostics;
use crate::waveform::{concat_windows, net_wave, vcd, StimulusSet, Waveform, WaveformArena};
use crate::Tick;

/// Activity of one net.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NetActivity {
    pub t0: Tick,
    pub t1: Tick,
    pub tc: u64,
    /// Output pulses removed by inertial filtering.
    pub ig: u64,
}

/// Per-net activity in netlist net order, plus the covered duration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityStats {
    pub duration: Tick,
    pub windows: usize,
    pub nets: Vec<NetActivity>,
}

impl ActivityStats {
    pub fn empty(nets: usize) -> Self {
        ActivityStats {
            duration: 0,
            windows: 0,
            nets: vec![NetActivity::default(); nets],
        }
    }

    /// Adds another run's activity (a different window range of the same
    /// design).
    pub fn merge(&mut self, other: &ActivityStats) {
        assert_eq!(self.nets.len(), other.nets.len(), "same design");
        self.duration += other.duration;
        self.windows += other.windows;
        for (a, b) in self.nets.iter_mut().zip(&other.nets) {
            a.t0 += b.t0;
            a.t1 += b.t1;
            a.tc += b.tc;
            a.ig += b.ig;
        }
    }

    pub fn total_tc(&self) -> u64 {
        self.nets.iter().map(|n| n.tc).sum()
    }

    pub fn total_ig(&self) -> u64 {
        self.nets.iter().map(|n| n.ig).sum()
    }

    /// Toggles per net per window.
    pub fn activity_factor(&self) -> f64 {
        let denom = self.nets.len() as f64 * self.windows as f64;
        if denom == 0.0 {
            0.0
        } else {
            self.total_tc() as f64 / denom
        }
    }
}

/// Ticks spent high by `times` on `[start, end)` starting from `initial`.
fn high_time(initial: bool, times: &[Tick], start: Tick, end: Tick) -> Tick {
    let mut at = start;
    let mut v = initial;
    let mut high = 0;
    for &t in times {
        if v {
            high += t - at;
        }
        at = t;
        v = !v;
    }
    if v {
        high += end - at;
    }
    high
}

/// Per-net activity over the windows held by `arena`.
pub fn compute_stats(
    levelized: &LevelizedNetlist,
    stimuli: &StimulusSet,
    arena: &WaveformArena,
) -> ActivityStats {
    let netlist = levelized.netlist();
    let first = arena.first_window();
    let range = first..first + arena.windows();
    let nets = (0..netlist.num_nets())
        .into_par_iter()
        .map(|n| {
            let net = NetId(n as u32);
            let mut a = NetActivity::default();
            for w in range.clone() {
                let win = stimuli.window(w);
                let wave = net_wave(levelized, stimuli, arena, net, w);
                let high = high_time(wave.initial, wave.times, win.start, win.end);
                a.t1 += high;
                a.t0 += win.end - win.start - high;
                a.tc += wave.times.len() as u64;
            }
            if let Driver::Gate(g) = netlist.net(net).driver {
                a.ig = arena.filtered(levelized.rank(g));
            }
            a
        })
        .collect();
    ActivityStats {
        duration: stimuli.span(range.clone()),
        windows: range.len(),
        nets,
    }
}

/// Backslash-escapes characters that delimit SAIF tokens.
pub fn saif_escape(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars() {
        if matches!(c, '[' | ']' | '(' | ')' | '\\' | ' ') {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

/// Flat SAIF text: one line, nets in netlist order.
pub fn write_saif(stats: &ActivityStats, netlist: &Netlist, design: &str, with_ig: bool) -> String {
    let design = saif_escape(design);
    let mut s = String::new();
    write!(
        s,
        "(SAIFILE (SAIFVERSION \"2.0\") (DIRECTION \"backward\") (DESIGN \"{design}\") \
         (TIMESCALE 1 fs) (DURATION {}) (INSTANCE {design} (NET",
        stats.duration
    )
    .unwrap();
    for (net, a) in netlist.nets.iter().zip(&stats.nets) {
        write!(
            s,
            " ({} (T0 {}) (T1 {}) (TX 0) (TC {})",
            saif_escape(&net.name),
            a.t0,
            a.t1,
            a.tc
        )
        .unwrap();
        if with_ig {
            write!(s, " (IG {})", a.ig).unwrap();
        }
        s.push(')');
    }
    s.push_str(")))\n");
    s
}

/// Accumulates whole-run waveforms of selected nets across segments.
#[derive(Debug, Clone)]
pub struct WaveCollector {
    nets: Vec<NetId>,
    names: Vec<String>,
    waves: Vec<Option<Waveform>>,
}

impl WaveCollector {
    /// Resolves `names` against `netlist`; unknown names are an error.
    pub fn new(netlist: &Netlist, names: &[String]) -> Result<Self, String> {
        let nets = names
            .iter()
            .map(|n| netlist.net_id(n).ok_or_else(|| format!("unknown net {n}")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(WaveCollector {
            nets,
            names: names.to_vec(),
            waves: vec![None; names.len()],
        })
    }

    /// Appends the windows held by `arena`; segments must arrive in order.
    pub fn absorb(&mut self, levelized: &LevelizedNetlist, stimuli: &StimulusSet, arena: &WaveformArena) {
        let first = arena.first_window();
        for (net, slot) in self.nets.iter().zip(&mut self.waves) {
            let seg = concat_windows(
                (first..first + arena.windows())
                    .map(|w| (stimuli.window(w).start, net_wave(levelized, stimuli, arena, *net, w))),
            );
            *slot = Some(match slot.take() {
                None => seg,
                Some(prev) => concat_windows([
                    (0, prev.as_ref()),
                    (stimuli.window(first).start, seg.as_ref()),
                ]),
            });
        }
    }

    pub fn waveforms(&self) -> impl Iterator<Item = (&str, &Waveform)> {
        self.names
            .iter()
            .zip(&self.waves)
            .filter_map(|(n, w)| w.as_ref().map(|w| (n.as_str(), w)))
    }

    pub fn write_vcd<W: io::Write>(&self, out: W, end: Tick) -> io::Result<()> {
        let signals: Vec<_> = self.waveforms().map(|(n, w)| (n, w.as_ref())).collect();
        vcd::write_vcd_waveforms(out, &signals, end)
    }
}

/// Wall-clock phases of one invocation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Timings {
    pub parse: Duration,
    pub pass1: Duration,
    pub alloc: Duration,
    pub pass2: Duration,
    pub report: Duration,
}

#[derive(Serialize)]
struct TimingsDoc {
    parse: f64,
    pass1: f64,
    alloc: f64,
    pass2: f64,
    report: f64,
}

#[derive(Serialize)]
struct LevelDoc {
    level: usize,
    gates: usize,
    tasks: usize,
    transitions: u64,
}

#[derive(Serialize)]
struct ReportDoc {
    duration: Tick,
    nets: usize,
    windows: usize,
    activity_factor: f64,
    total_tc: u64,
    total_filtered: u64,
    discarded_events: u64,
    interconnect_filtered: u64,
    segments: usize,
    levels: Vec<LevelDoc>,
    timings: TimingsDoc,
}

/// Machine-readable run summary. Everything outside `timings` is
/// deterministic.
pub fn json_report(stats: &ActivityStats, diag: &Diagnostics, timings: &Timings) -> String {
    let doc = ReportDoc {
        duration: stats.duration,
        nets: stats.nets.len(),
        windows: stats.windows,
        activity_factor: stats.activity_factor(),
        total_tc: stats.total_tc(),
        total_filtered: stats.total_ig(),
        discarded_events: diag.discarded,
        interconnect_filtered: diag.wire_filtered,
        segments: diag.segments,
        levels: diag
            .levels
            .iter()
            .enumerate()
            .map(|(i, l)| LevelDoc {
                level: i + 1,
                gates: l.gates,
                tasks: l.tasks,
                transitions: l.transitions,
            })
            .collect(),
        timings: TimingsDoc {
            parse: timings.parse.as_secs_f64(),
            pass1: timings.pass1.as_secs_f64(),
            alloc: timings.alloc.as_secs_f64(),
            pass2: timings.pass2.as_secs_f64(),
            report: timings.report.as_secs_f64(),
        },
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}
