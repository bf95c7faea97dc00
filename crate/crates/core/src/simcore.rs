// SPDX-License-Identifier: Apache-2.0

//! Per-(gate, window) inertial-delay kernel.
//!
//! A gate's inputs are scanned pin by pin for the next earliest delayed
//! transition. Pulses narrower than a wire's interconnect delay are dropped
//! while scanning. All pins arriving at the same instant are consumed
//! together before one LUT evaluation, and output edges pass through an
//! inertial filter that can retract the previous edge.
//!
//! The kernel runs in two modes with identical control flow: counting only,
//! or storing into a region sized by a previous counting run.

use smallvec::SmallVec;

use crate::netlist::{CellDef, GateId};
use crate::sdf::{AnnotatedDelays, Edge};
use crate::waveform::{WaveRef, Window};
use crate::Tick;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KernelError {
    #[error("gate {gate} window {window}: storing pass produced more than the {capacity} counted transitions")]
    StoreOverflow {
        gate: String,
        window: usize,
        capacity: usize,
    },
    #[error("gate {gate} window {window}: counting pass found {pass1} transitions, storing pass {pass2}")]
    TwoPassMismatch {
        gate: String,
        window: usize,
        pass1: usize,
        pass2: usize,
    },
}

/// Delayed view of one input pin.
#[derive(Debug, Clone)]
pub struct PinCursor<'a> {
    times: &'a [Tick],
    pos: usize,
    d_ic: Tick,
    /// Value at the gate pin after the transitions consumed so far.
    pub value: bool,
    /// Source pulse pairs dropped by the interconnect filter.
    pub filtered: u32,
}

impl<'a> PinCursor<'a> {
    pub fn new(wave: WaveRef<'a>, d_ic: Tick) -> Self {
        PinCursor {
            times: wave.times,
            pos: 0,
            d_ic,
            value: wave.initial,
            filtered: 0,
        }
    }

    /// Arrival time of the next surviving transition. Source toggles closer
    /// together than the interconnect delay cancel pairwise.
    #[inline]
    pub fn peek(&mut self) -> Option<Tick> {
        loop {
            let t = *self.times.get(self.pos)?;
            match self.times.get(self.pos + 1) {
                Some(&u) if u - t < self.d_ic => {
                    self.pos += 2;
                    self.filtered += 1;
                }
                _ => return Some(t + self.d_ic),
            }
        }
    }

    /// Consumes the transition returned by the last [`peek`](Self::peek).
    #[inline]
    pub fn consume(&mut self) {
        debug_assert!(self.pos < self.times.len());
        self.pos += 1;
        self.value = !self.value;
    }
}

/// Earliest arrival over all pins, or `None` once every pin is exhausted.
#[inline]
pub fn next_event_time(cursors: &mut [PinCursor<'_>]) -> Option<Tick> {
    cursors.iter_mut().filter_map(|c| c.peek()).min()
}

/// Consumes every pin arriving at `t`. Returns the packed post-event input
/// vector and the mask of switching pins.
#[inline]
pub fn resolve_msi(cursors: &mut [PinCursor<'_>], t: Tick) -> (u32, u32) {
    let mut state = 0;
    let mut switching = 0;
    for (i, c) in cursors.iter_mut().enumerate() {
        if c.peek() == Some(t) {
            c.consume();
            switching |= 1 << i;
        }
        state |= u32::from(c.value) << i;
    }
    (state, switching)
}

/// Packed input vector from the pins' current values.
pub fn pin_state(cursors: &[PinCursor<'_>]) -> u32 {
    cursors
        .iter()
        .enumerate()
        .fold(0, |s, (i, c)| s | (u32::from(c.value) << i))
}

/// Where committed output edges go.
#[derive(Debug)]
pub enum Mode<'a> {
    Count,
    Store(&'a mut [Tick]),
}

/// Output side of one (gate, window) simulation.
///
/// Emitted edges stay pending until simulation time passes them; only a
/// pending edge can be retracted. Committed edges inside the window are
/// counted (and stored), those at or past the window end are discarded.
#[derive(Debug)]
pub struct GateSimState<'a> {
    /// Current logical output value, including pending edges.
    pub y: bool,
    pending: SmallVec<[Tick; 4]>,
    head: usize,
    /// Delay of the last emitted edge.
    pub d_last: Tick,
    /// Committed in-window edges.
    pub tc: u32,
    /// Retracted in-window edges.
    pub filtered: u32,
    /// Committed edges at or past the window end.
    pub discarded: u32,
    window_end: Tick,
    pathpulse_pct: u32,
    mode: Mode<'a>,
    overflow: bool,
}

impl<'a> GateSimState<'a> {
    pub fn new(y: bool, window_end: Tick, pathpulse_pct: u32, mode: Mode<'a>) -> Self {
        debug_assert!(pathpulse_pct <= 100);
        GateSimState {
            y,
            pending: SmallVec::new(),
            head: 0,
            d_last: 0,
            tc: 0,
            filtered: 0,
            discarded: 0,
            window_end,
            pathpulse_pct,
            mode,
            overflow: false,
        }
    }

    /// Most recent live (pending) edge.
    pub fn t_last(&self) -> Option<Tick> {
        if self.head < self.pending.len() {
            self.pending.last().copied()
        } else {
            None
        }
    }

    /// Applies one evaluated event to the output.
    #[inline]
    pub fn emit_output(&mut self, new_y: bool, t_event: Tick, delay: Tick) {
        if new_y == self.y {
            return;
        }
        let t_out = t_event + delay;
        let threshold = delay * Tick::from(self.pathpulse_pct) / 100;
        if let Some(t_last) = self.t_last() {
            if t_out <= t_last || t_out - t_last < threshold {
                self.pending.pop();
                if t_last < self.window_end {
                    self.filtered += 1;
                }
                self.y = new_y;
                return;
            }
        }
        self.pending.push(t_out);
        self.d_last = delay;
        self.y = new_y;
    }

    /// Commits pending edges strictly before `t`.
    #[inline]
    pub fn commit_before(&mut self, t: Tick) {
        while self.head < self.pending.len() && self.pending[self.head] < t {
            let e = self.pending[self.head];
            self.head += 1;
            self.commit(e);
        }
        if self.head == self.pending.len() {
            self.pending.clear();
            self.head = 0;
        }
    }

    fn commit(&mut self, t: Tick) {
        if t >= self.window_end {
            self.discarded += 1;
            return;
        }
        if let Mode::Store(buf) = &mut self.mode {
            match buf.get_mut(self.tc as usize) {
                Some(slot) => *slot = t,
                None => {
                    self.overflow = true;
                    return;
                }
            }
        }
        self.tc += 1;
    }

    /// Commits everything still pending.
    pub fn flush(&mut self) {
        for i in self.head..self.pending.len() {
            let e = self.pending[i];
            self.commit(e);
        }
        self.pending.clear();
        self.head = 0;
    }

    pub fn overflowed(&self) -> bool {
        self.overflow
    }
}

/// Static inputs of one gate's simulation.
#[derive(Debug, Clone, Copy)]
pub struct GateParams<'a> {
    pub gate: GateId,
    pub cell: &'a CellDef,
    pub delays: &'a AnnotatedDelays,
    pub pathpulse_pct: u32,
    /// Test hook: lengthens every rising output delay by 1 fs.
    pub skew_rise: bool,
}

/// Outcome of one (gate, window) simulation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GateWindowResult {
    /// Output value at the window start.
    pub initial: bool,
    /// Stored output transitions.
    pub toggles: u32,
    /// Output pulses removed by the inertial filter.
    pub filtered: u32,
    /// Output edges that fell at or past the window end.
    pub discarded: u32,
    /// Input pulses removed by interconnect filtering.
    pub wire_filtered: u32,
    /// Set when a storing run wrote past its region.
    pub overflow: bool,
}

/// Simulates one gate over one window. `pins` are the window waveforms of
/// the gate's input nets, in cell pin order.
pub fn simulate_gate_window(
    p: &GateParams<'_>,
    pins: &[WaveRef<'_>],
    window: Window,
    mode: Mode<'_>,
) -> GateWindowResult {
    let mut cursors: SmallVec<[PinCursor<'_>; 4]> = pins
        .iter()
        .enumerate()
        .map(|(i, w)| PinCursor::new(*w, p.delays.interconnect(p.gate, i)))
        .collect();
    let initial = p.cell.eval_index(pin_state(&cursors));
    let mut st = GateSimState::new(initial, window.end, p.pathpulse_pct, mode);

    while let Some(t) = next_event_time(&mut cursors) {
        if t >= window.end {
            break;
        }
        st.commit_before(t);
        let (state, switching) = resolve_msi(&mut cursors, t);
        let new_y = p.cell.eval_index(state);
        if new_y != st.y {
            let mut delay = p.delays.lookup_delay(p.gate, switching, state, Edge::to(new_y));
            if p.skew_rise && new_y {
                delay += 1;
            }
            st.emit_output(new_y, t, delay);
        }
    }
    st.flush();

    GateWindowResult {
        initial,
        toggles: st.tc,
        filtered: st.filtered,
        discarded: st.discarded,
        wire_filtered: cursors.iter().map(|c| c.filtered).sum(),
        overflow: st.overflow,
    }
}
