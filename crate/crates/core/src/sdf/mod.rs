// SPDX-License-Identifier: Apache-2.0

//! SDF delay annotation compiled into per-arc conditional tables.
//!
//! Every gate input pin owns one table with `2^(k-1)` rows, one per
//! combination of the other pins' values, and a (rise, fall) pair in each row.
//! Rise and fall refer to the output edge. Interconnect delays are stored per
//! gate input pin.

mod cond;
mod parse;

use std::fmt;
use std::str::FromStr;

use crate::netlist::{GateId, Netlist};
use crate::Tick;

pub use cond::{CondExpr, Literal};

#[derive(Debug, thiserror::Error)]
pub enum SdfError {
    #[error("SDF syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("SDF {line}:{col}: unknown instance {name}")]
    UnknownInstance { line: usize, col: usize, name: String },
    #[error("SDF {line}:{col}: instance {instance} has no pin {pin}")]
    UnknownPin {
        line: usize,
        col: usize,
        instance: String,
        pin: String,
    },
    #[error("SDF {line}:{col}: INTERCONNECT {from} -> {to} does not match a netlist connection")]
    BadConnection {
        line: usize,
        col: usize,
        from: String,
        to: String,
    },
    #[error("SDF {line}:{col}: COND on arc {pin} of {instance} references the switching pin itself")]
    CondOnSwitchingPin {
        line: usize,
        col: usize,
        instance: String,
        pin: String,
    },
    #[error("SDF {line}:{col}: negative delay {value}")]
    NegativeDelay { line: usize, col: usize, value: String },
}

/// Which field of a `min:typ:max` triple to use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Corner {
    Min,
    #[default]
    Typ,
    Max,
}

impl FromStr for Corner {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "min" => Ok(Corner::Min),
            "typ" => Ok(Corner::Typ),
            "max" => Ok(Corner::Max),
            _ => Err(format!("unknown corner '{s}', expected min, typ or max")),
        }
    }
}

impl fmt::Display for Corner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Corner::Min => "min",
            Corner::Typ => "typ",
            Corner::Max => "max",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum DelayMode {
    /// One row per side-input condition.
    #[default]
    Full,
    /// Every row of an arc holds the arc's mean rise/fall delay.
    Averaged,
}

impl FromStr for DelayMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(DelayMode::Full),
            "avg" | "averaged" => Ok(DelayMode::Averaged),
            _ => Err(format!("unknown delay mode '{s}', expected full or avg")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Rise,
    Fall,
}

impl Edge {
    pub fn to(value: bool) -> Edge {
        if value {
            Edge::Rise
        } else {
            Edge::Fall
        }
    }
}

/// Row index of a side-input condition: the other `k-1` pins in ascending
/// order, first one in the least-significant bit.
pub fn condition_index(switching_pin: usize, side_values: &[bool]) -> usize {
    let _ = switching_pin;
    side_values
        .iter()
        .enumerate()
        .fold(0, |acc, (j, &b)| acc | (usize::from(b) << j))
}

/// [`condition_index`] computed from a packed full input vector.
#[inline]
pub fn condition_row(switching_pin: usize, state: u32) -> usize {
    let low = state & ((1u32 << switching_pin) - 1);
    let high = (state >> (switching_pin + 1)) << switching_pin;
    (low | high) as usize
}

/// One arc's rows as `[rise, fall]` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArcDelayTable<'a> {
    pub rows: &'a [[Tick; 2]],
}

impl ArcDelayTable<'_> {
    pub fn get(&self, row: usize, edge: Edge) -> Tick {
        self.rows[row][edge as usize]
    }
}

/// Delay annotation for every gate of a netlist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedDelays {
    /// First row of each gate's first arc; arcs of a gate are contiguous.
    gate_rows: Vec<usize>,
    rows: Vec<[Tick; 2]>,
    /// First pin slot of each gate in `interconnect`.
    gate_pins: Vec<usize>,
    interconnect: Vec<Tick>,
    arity: Vec<u8>,
    timescale_fs: u64,
    mode: DelayMode,
}

impl AnnotatedDelays {
    /// All delays zero.
    pub fn zero(netlist: &Netlist) -> Self {
        let mut gate_rows = Vec::with_capacity(netlist.num_gates() + 1);
        let mut gate_pins = Vec::with_capacity(netlist.num_gates() + 1);
        let mut arity = Vec::with_capacity(netlist.num_gates());
        let (mut r, mut p) = (0usize, 0usize);
        for g in netlist.gate_ids() {
            let k = netlist.cell_of(g).num_inputs();
            gate_rows.push(r);
            gate_pins.push(p);
            arity.push(k as u8);
            r += k << (k - 1);
            p += k;
        }
        gate_rows.push(r);
        gate_pins.push(p);
        AnnotatedDelays {
            gate_rows,
            rows: vec![[0, 0]; r],
            gate_pins,
            interconnect: vec![0; p],
            arity,
            timescale_fs: 1_000_000,
            mode: DelayMode::Full,
        }
    }

    /// Parses an SDF document against `netlist`. Empty text yields
    /// [`zero`](Self::zero) delays.
    pub fn parse(text: &str, netlist: &Netlist, corner: Corner) -> Result<Self, SdfError> {
        parse::parse_sdf(text, netlist, corner)
    }

    pub fn mode(&self) -> DelayMode {
        self.mode
    }

    /// Femtoseconds per SDF time unit of the source document.
    pub fn timescale_fs(&self) -> u64 {
        self.timescale_fs
    }

    pub fn num_gates(&self) -> usize {
        self.arity.len()
    }

    pub fn arity(&self, gate: GateId) -> usize {
        self.arity[gate.index()] as usize
    }

    fn arc_range(&self, gate: GateId, pin: usize) -> std::ops::Range<usize> {
        let k = self.arity(gate);
        debug_assert!(pin < k);
        let n = 1usize << (k - 1);
        let start = self.gate_rows[gate.index()] + pin * n;
        start..start + n
    }

    pub fn arc(&self, gate: GateId, pin: usize) -> ArcDelayTable<'_> {
        ArcDelayTable {
            rows: &self.rows[self.arc_range(gate, pin)],
        }
    }

    pub(crate) fn arc_mut(&mut self, gate: GateId, pin: usize) -> &mut [[Tick; 2]] {
        let r = self.arc_range(gate, pin);
        &mut self.rows[r]
    }

    /// Interconnect delay from the driving net into `pin` of `gate`.
    #[inline]
    pub fn interconnect(&self, gate: GateId, pin: usize) -> Tick {
        self.interconnect[self.gate_pins[gate.index()] + pin]
    }

    pub(crate) fn set_interconnect(&mut self, gate: GateId, pin: usize, delay: Tick) {
        let slot = self.gate_pins[gate.index()] + pin;
        self.interconnect[slot] = delay;
    }

    /// Gate delay for an output edge caused by the pins in `switching`
    /// (bit mask), looked up with side values taken from the post-transition
    /// input vector `state`. Simultaneous switches take the largest arc delay.
    #[inline]
    pub fn lookup_delay(&self, gate: GateId, switching: u32, state: u32, edge: Edge) -> Tick {
        debug_assert!(switching != 0);
        let k = self.arity(gate);
        let base = self.gate_rows[gate.index()];
        let n = 1usize << (k - 1);
        let mut rest = switching;
        let mut delay = 0;
        while rest != 0 {
            let p = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let row = base + p * n + condition_row(p, state);
            delay = delay.max(self.rows[row][edge as usize]);
        }
        delay
    }

    /// Replaces every arc's rows by their mean (rounded to nearest, ties up).
    pub fn average_tables(mut self) -> Self {
        for g in 0..self.arity.len() {
            let gate = GateId(g as u32);
            for p in 0..self.arity(gate) {
                let rows = self.arc_mut(gate, p);
                let n = rows.len() as u128;
                let mut mean = [0; 2];
                for (e, m) in mean.iter_mut().enumerate() {
                    let sum: u128 = rows.iter().map(|r| r[e] as u128).sum();
                    *m = ((2 * sum + n) / (2 * n)) as Tick;
                }
                rows.fill(mean);
            }
        }
        self.mode = DelayMode::Averaged;
        self
    }

    pub fn with_mode(self, mode: DelayMode) -> Self {
        match mode {
            DelayMode::Full => self,
            DelayMode::Averaged if self.mode == DelayMode::Averaged => self,
            DelayMode::Averaged => self.average_tables(),
        }
    }

    /// Smallest gate-arc delay over all gates, rows and edges.
    pub fn min_arc_delay(&self) -> Option<Tick> {
        self.rows.iter().flat_map(|r| r.iter().copied()).min()
    }

    pub fn max_delay(&self) -> Tick {
        let arcs = self.rows.iter().flat_map(|r| r.iter().copied()).max();
        arcs.unwrap_or(0)
            .max(self.interconnect.iter().copied().max().unwrap_or(0))
    }
}


#[cfg(test)]
mod props {
    use crate::sdf::{condition_index, condition_row, AnnotatedDelays, Corner, DelayMode, Edge};
    use crate::testgen::{random_instance, small, GenParams};
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(crate::testgen::proptest_config(128))]

        #[test]
        fn condition_index_is_a_bijection(k in 1usize..=8, pin_seed in any::<usize>()) {
            let pin = pin_seed % k;
            let rows = 1usize << (k - 1);
            let mut seen = vec![false; rows];
            for side in 0..rows {
                let values: Vec<bool> = (0..k - 1).map(|j| side >> j & 1 == 1).collect();
                let idx = condition_index(pin, &values);
                prop_assert!(idx < rows);
                prop_assert!(!seen[idx]);
                seen[idx] = true;
            }
            for state in 0..1u32 << k {
                let side: Vec<bool> = (0..k).filter(|&q| q != pin).map(|q| state >> q & 1 == 1).collect();
                prop_assert_eq!(condition_row(pin, state), condition_index(pin, &side));
            }
        }

        #[test]
        fn averaged_delays_ignore_side_values(seed in any::<u64>()) {
            let inst = random_instance(seed, &small());
            let avg = inst.delays.clone().with_mode(DelayMode::Averaged);
            for g in inst.netlist().gate_ids() {
                let k = avg.arity(g);
                for pin in 0..k {
                    for edge in [Edge::Rise, Edge::Fall] {
                        let first = avg.lookup_delay(g, 1 << pin, 0, edge);
                        for state in 1..1u32 << k {
                            prop_assert_eq!(avg.lookup_delay(g, 1 << pin, state, edge), first);
                        }
                    }
                }
            }
        }

        #[test]
        fn ns_and_ps_timescales_differ_by_1000(delays in prop::collection::vec((0u64..100_000, 0u64..100_000), 3)) {
            let inst = random_instance(1, &GenParams { annotate: false, ..small() });
            let n = inst.netlist();
            let g = n.gate_ids().find(|&g| n.cell_of(g).num_inputs() == 1);
            prop_assume!(g.is_some());
            let g = g.unwrap();
            let text = |ts: &str| {
                let (r, f) = delays[0];
                let (lo, hi) = delays[1];
                format!(
                    "(DELAYFILE (TIMESCALE {ts}) (CELL (CELLTYPE \"{}\") (INSTANCE {}) \
                     (DELAY (ABSOLUTE (IOPATH A Y ({lo}:{r}:{}) ({f}))))))",
                    n.library().cell(n.gate(g).cell).name,
                    n.gate(g).name,
                    hi.max(r),
                )
            };
            let ns = AnnotatedDelays::parse(&text("1ns"), n, Corner::Typ).unwrap();
            let ps = AnnotatedDelays::parse(&text("1ps"), n, Corner::Typ).unwrap();
            for edge in [Edge::Rise, Edge::Fall] {
                let a = ns.lookup_delay(g, 1, 0, edge);
                let b = ps.lookup_delay(g, 1, 0, edge);
                prop_assert_eq!(a, 1000 * b);
            }
            prop_assert_eq!(ns.lookup_delay(g, 1, 0, Edge::Rise), delays[0].0 * 1_000_000);
        }
    }
}
