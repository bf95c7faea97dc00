// SPDX-License-Identifier: Apache-2.0

//! Toggle-array waveforms, cycle windows and the output waveform arena.
//!
//! A waveform is an initial value plus strictly increasing timestamps, each of
//! which flips the value. Stimuli are cut into windows `[b_j, b_{j+1})` that
//! are simulated independently.

mod arena;
pub mod vcd;

use std::ops::Range;

use crate::netlist::{Driver, LevelizedNetlist, NetId};
use crate::Tick;

pub use arena::{
    allocate_arena, ArenaLayout, ArenaReader, CapacityExceeded, RegionStats, WaveformArena,
};

#[derive(Debug, thiserror::Error)]
pub enum WaveformError {
    #[error("VCD line {line}: {msg}")]
    VcdSyntax { line: u64, msg: String },
    #[error("VCD has no scalar variable for input {0}")]
    MissingInput(String),
    #[error("VCD variable {name} bound to input has width {width}, expected 1")]
    VectorInput { name: String, width: u32 },
    #[error("VCD line {line}: time #{time} goes backwards (previous #{previous})")]
    NonMonotonicTime { line: u64, time: u64, previous: u64 },
    #[error("window boundaries must be strictly ascending (got {0} after {1})")]
    Boundaries(Tick, Tick),
    #[error("need at least one window")]
    NoWindows,
    #[error("unknown net {0}")]
    UnknownNet(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Waveform {
    pub initial: bool,
    pub times: Vec<Tick>,
}

/// Borrowed view of a waveform, as handed to the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WaveRef<'a> {
    pub initial: bool,
    pub times: &'a [Tick],
}

impl Waveform {
    pub fn new(initial: bool, times: Vec<Tick>) -> Self {
        debug_assert!(times.windows(2).all(|w| w[0] < w[1]));
        Waveform { initial, times }
    }

    pub fn constant(value: bool) -> Self {
        Waveform {
            initial: value,
            times: Vec::new(),
        }
    }

    pub fn as_ref(&self) -> WaveRef<'_> {
        WaveRef {
            initial: self.initial,
            times: &self.times,
        }
    }

    pub fn value_at(&self, t: Tick) -> bool {
        self.as_ref().value_at(t)
    }

    pub fn final_value(&self) -> bool {
        self.initial ^ (self.times.len() % 2 == 1)
    }

    /// Builds a waveform from a sequence of value samples, dropping
    /// same-value repeats.
    pub fn from_changes(initial: bool, changes: impl IntoIterator<Item = (Tick, bool)>) -> Self {
        let mut value = initial;
        let mut times = Vec::new();
        for (t, v) in changes {
            if v != value {
                if times.last() == Some(&t) {
                    times.pop();
                } else {
                    times.push(t);
                }
                value = v;
            }
        }
        Waveform { initial, times }
    }
}

impl WaveRef<'_> {
    /// Value at `t`; a transition at `t` has already taken effect.
    pub fn value_at(&self, t: Tick) -> bool {
        let n = self.times.partition_point(|&x| x <= t);
        self.initial ^ (n % 2 == 1)
    }

    pub fn to_owned(&self) -> Waveform {
        Waveform {
            initial: self.initial,
            times: self.times.to_vec(),
        }
    }
}

fn check_boundaries(boundaries: &[Tick]) -> Result<(), WaveformError> {
    if boundaries.len() < 2 {
        return Err(WaveformError::NoWindows);
    }
    for w in boundaries.windows(2) {
        if w[1] <= w[0] {
            return Err(WaveformError::Boundaries(w[1], w[0]));
        }
    }
    Ok(())
}

/// Cuts `w` into the windows `[b_j, b_{j+1})`. A transition exactly at `b_j`
/// belongs to window `j`, whose initial value is the value just before it.
/// Transitions at or after the last boundary are dropped.
pub fn slice_windows(w: &Waveform, boundaries: &[Tick]) -> Result<Vec<Waveform>, WaveformError> {
    check_boundaries(boundaries)?;
    let mut out = Vec::with_capacity(boundaries.len() - 1);
    for pair in boundaries.windows(2) {
        let lo = w.times.partition_point(|&t| t < pair[0]);
        let hi = w.times.partition_point(|&t| t < pair[1]);
        out.push(Waveform {
            initial: w.initial ^ (lo % 2 == 1),
            times: w.times[lo..hi].to_vec(),
        });
    }
    Ok(out)
}

/// Window boundaries for a fixed period starting at `offset`, covering
/// `[0, duration]`. A leading partial window `[0, offset)` is kept.
pub fn periodic_boundaries(duration: Tick, period: Tick, offset: Tick) -> Vec<Tick> {
    assert!(period > 0, "window period must be positive");
    let mut b = vec![0];
    let mut t = offset;
    while t < duration {
        if t > 0 {
            b.push(t);
        }
        t += period;
    }
    if *b.last().unwrap() < duration || b.len() == 1 {
        b.push(duration.max(1));
    }
    b
}

/// Per-window stimulus for every primary/pseudo-primary input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StimulusSet {
    boundaries: Vec<Tick>,
    /// `windows[j][i]` is input `i` (in netlist input order) in window `j`.
    windows: Vec<Vec<Waveform>>,
}

impl StimulusSet {
    /// Slices whole-run input waveforms (netlist input order) into windows.
    pub fn new(inputs: &[Waveform], boundaries: Vec<Tick>) -> Result<Self, WaveformError> {
        check_boundaries(&boundaries)?;
        let nw = boundaries.len() - 1;
        let mut windows = vec![Vec::with_capacity(inputs.len()); nw];
        for w in inputs {
            for (j, slice) in slice_windows(w, &boundaries)?.into_iter().enumerate() {
                windows[j].push(slice);
            }
        }
        Ok(StimulusSet {
            boundaries,
            windows,
        })
    }

    /// Takes already-sliced per-window inputs.
    pub fn from_windows(
        boundaries: Vec<Tick>,
        windows: Vec<Vec<Waveform>>,
    ) -> Result<Self, WaveformError> {
        check_boundaries(&boundaries)?;
        assert_eq!(windows.len(), boundaries.len() - 1, "one entry per window");
        for (j, per_input) in windows.iter().enumerate() {
            let (lo, hi) = (boundaries[j], boundaries[j + 1]);
            for w in per_input {
                assert!(
                    w.times.windows(2).all(|p| p[0] < p[1])
                        && w.times.iter().all(|&t| lo <= t && t < hi),
                    "window {j} stimulus outside [{lo}, {hi}) or not increasing"
                );
            }
        }
        Ok(StimulusSet {
            boundaries,
            windows,
        })
    }

    pub fn boundaries(&self) -> &[Tick] {
        &self.boundaries
    }

    pub fn num_windows(&self) -> usize {
        self.windows.len()
    }

    pub fn window(&self, j: usize) -> Window {
        Window {
            start: self.boundaries[j],
            end: self.boundaries[j + 1],
        }
    }

    pub fn input(&self, window: usize, input: usize) -> WaveRef<'_> {
        self.windows[window][input].as_ref()
    }

    pub fn inputs(&self, window: usize) -> &[Waveform] {
        &self.windows[window]
    }

    /// Total length of the windows in `range`.
    pub fn span(&self, range: Range<usize>) -> Tick {
        self.boundaries[range.end] - self.boundaries[range.start]
    }

    /// Whole-run waveform of input `i` rebuilt from its window slices.
    pub fn concatenated(&self, input: usize) -> Waveform {
        concat_windows(
            self.windows
                .iter()
                .enumerate()
                .map(|(j, w)| (self.boundaries[j], w[input].as_ref())),
        )
    }
}

/// Half-open simulation window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub start: Tick,
    pub end: Tick,
}

/// Joins consecutive window waveforms into one, inserting a transition at a
/// window start whenever its initial value differs from the previous
/// window's final value.
pub fn concat_windows<'a>(windows: impl IntoIterator<Item = (Tick, WaveRef<'a>)>) -> Waveform {
    let mut iter = windows.into_iter();
    let Some((_, first)) = iter.next() else {
        return Waveform::default();
    };
    let mut out = first.to_owned();
    let mut value = out.final_value();
    for (start, w) in iter {
        if w.initial != value {
            out.times.push(start);
        }
        out.times.extend_from_slice(w.times);
        value = w.initial ^ (w.times.len() % 2 == 1);
    }
    out
}

/// Waveform of `net` in absolute window `window` of a run whose arena covers
/// the windows starting at `arena.first_window()`.
pub fn net_wave<'a>(
    levelized: &LevelizedNetlist,
    stimuli: &'a StimulusSet,
    arena: &'a WaveformArena,
    net: NetId,
    window: usize,
) -> WaveRef<'a> {
    match levelized.netlist().net(net).driver {
        Driver::Input(i) => stimuli.input(window, i as usize),
        Driver::Gate(g) => arena.wave(levelized.rank(g), window - arena.first_window()),
    }
}


#[cfg(test)]
mod props {
    use crate::testgen::{boundaries, sorted_times};
    use crate::waveform::{concat_windows, slice_windows, Waveform};
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(crate::testgen::proptest_config(256))]

        #[test]
        fn slices_reassemble(initial in any::<bool>(), times in sorted_times(40, 200), b in boundaries(200)) {
            let w = Waveform::new(initial, times);
            let parts = slice_windows(&w, &b).unwrap();
            for (j, part) in parts.iter().enumerate() {
                prop_assert_eq!(part.initial, w.value_at(b[j]) ^ part.times.first().is_some_and(|&t| t == b[j]));
                prop_assert!(part.times.iter().all(|&t| b[j] <= t && t < b[j + 1]));
            }
            let whole = concat_windows(b.iter().copied().zip(parts.iter().map(Waveform::as_ref)));
            for t in 0..200 {
                prop_assert_eq!(whole.value_at(t), w.value_at(t));
            }
        }
    }
}
