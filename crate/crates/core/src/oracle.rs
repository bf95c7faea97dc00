// SPDX-License-Identifier: Apache-2.0

//! Reference simulator built around one global event queue.
//!
//! It shares the netlist, LUTs and delay tables with the kernel but nothing
//! of its control flow: events from all gates are interleaved in time order,
//! wires and gates hold explicit pending events that get cancelled, and
//! levels are only used to order zero-delay events within one instant.
//! Used to cross-check the kernel, not for speed.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use crate::netlist::{Driver, GateId, LevelizedNetlist, NetId, Netlist};
use crate::sdf::{AnnotatedDelays, Edge};
use crate::waveform::{StimulusSet, Waveform, WaveformArena, Window};
use crate::waveform::net_wave;
use crate::Tick;

/// Designs larger than this are refused unless forced.
pub const MAX_ORACLE_GATES: usize = 10_000;

pub fn check_size(netlist: &Netlist, force: bool) -> Result<(), String> {
    if netlist.num_gates() > MAX_ORACLE_GATES && !force {
        return Err(format!(
            "oracle refuses {} gates (limit {MAX_ORACLE_GATES}); pass --force-oracle to override",
            netlist.num_gates()
        ));
    }
    Ok(())
}

/// Value of every net for constant inputs (netlist input order).
pub fn zero_delay_eval(levelized: &LevelizedNetlist, inputs: &[bool]) -> Vec<bool> {
    let n = levelized.netlist();
    let mut v = vec![false; n.num_nets()];
    for (&net, &b) in n.inputs.iter().zip(inputs) {
        v[net.index()] = b;
    }
    for &g in levelized.order() {
        let gate = n.gate(g);
        let idx = gate
            .inputs
            .iter()
            .enumerate()
            .fold(0u32, |s, (i, net)| s | (u32::from(v[net.index()]) << i));
        v[gate.output.index()] = n.cell_of(g).eval_index(idx);
    }
    v
}

/// Longest path depth of every gate, PIs at 0, by memoized DFS.
fn depths(n: &Netlist) -> Vec<u32> {
    let mut depth = vec![u32::MAX; n.num_gates()];
    for root in n.gate_ids() {
        let mut stack = vec![(root, false)];
        while let Some((g, expanded)) = stack.pop() {
            if depth[g.index()] != u32::MAX {
                continue;
            }
            let fanin = n.gate(g).inputs.iter().filter_map(|&net| match n.net(net).driver {
                Driver::Gate(d) => Some(d),
                Driver::Input(_) => None,
            });
            if expanded {
                depth[g.index()] = 1 + fanin.map(|d| depth[d.index()]).max().unwrap_or(0);
            } else {
                stack.push((g, true));
                stack.extend(fanin.filter(|d| depth[d.index()] == u32::MAX).map(|d| (d, false)));
            }
        }
    }
    depth
}

/// Heap key: time first; at one instant, lower levels settle first, and a
/// gate evaluates (phase 0) before its own output edges land (phase 1).
type Key = (Tick, u32, u8, u32, u64);

#[derive(Debug, Clone, Copy)]
enum Event {
    /// A delayed transition reaches `pin` of `gate`.
    Arrival { gate: GateId, pin: usize },
    /// An output edge of `net` takes effect.
    Mature { net: NetId },
}

#[derive(Debug, Clone, Copy)]
struct OutEdge {
    time: Tick,
    event: u64,
    matured: bool,
}

/// Per-net window waveforms from one oracle run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleWindow {
    pub nets: Vec<Waveform>,
    /// In-window inertial retractions per gate.
    pub filtered: Vec<u64>,
}

struct Sim<'a> {
    n: &'a Netlist,
    pct: u32,
    depth: Vec<u32>,
    heap: BinaryHeap<Reverse<(Key, usize)>>,
    events: Vec<Event>,
    cancelled: HashSet<u64>,
    seq: u64,
}

impl Sim<'_> {
    fn schedule(&mut self, time: Tick, ev: Event) -> u64 {
        let key = match ev {
            Event::Arrival { gate, .. } => (time, self.depth[gate.index()], 0, gate.0, self.seq),
            Event::Mature { net } => {
                let level = match self.n.net(net).driver {
                    Driver::Input(_) => 0,
                    Driver::Gate(g) => self.depth[g.index()],
                };
                (time, level, 1, net.0, self.seq)
            }
        };
        let id = self.seq;
        self.seq += 1;
        self.heap.push(Reverse((key, self.events.len())));
        self.events.push(ev);
        id
    }
}

/// Simulates one window. `inputs` are the window's input waveforms in
/// netlist input order.
pub fn oracle_simulate(
    levelized: &LevelizedNetlist,
    delays: &AnnotatedDelays,
    inputs: &[Waveform],
    window: Window,
    pathpulse_pct: u32,
) -> OracleWindow {
    let n = levelized.netlist();
    let init: Vec<bool> = inputs.iter().map(|w| w.initial).collect();
    let values = zero_delay_eval(levelized, &init);

    let mut sim = Sim {
        n,
        pct: pathpulse_pct,
        depth: depths(n),
        heap: BinaryHeap::new(),
        events: Vec::new(),
        cancelled: HashSet::new(),
        seq: 0,
    };

    // Matured timestamps per net.
    let mut net_times: Vec<Vec<Tick>> = vec![Vec::new(); n.num_nets()];
    // Gate state.
    let mut pin_value: Vec<Vec<bool>> = n
        .gates
        .iter()
        .map(|g| g.inputs.iter().map(|net| values[net.index()]).collect())
        .collect();
    let mut y: Vec<bool> = n.gates.iter().map(|g| values[g.output.index()]).collect();
    let mut edges: Vec<Vec<OutEdge>> = vec![Vec::new(); n.num_gates()];
    let mut filtered = vec![0u64; n.num_gates()];
    // Last uncancelled arrival per (gate, pin): source time and event id.
    let mut wire: Vec<Vec<Option<(Tick, u64)>>> =
        n.gates.iter().map(|g| vec![None; g.inputs.len()]).collect();

    for (i, w) in inputs.iter().enumerate() {
        for &t in &w.times {
            sim.schedule(t, Event::Mature { net: n.inputs[i] });
        }
    }

    while let Some(Reverse((key, idx))) = sim.heap.pop() {
        let id = key.4;
        if sim.cancelled.contains(&id) {
            continue;
        }
        let now = key.0;
        match sim.events[idx] {
            Event::Mature { net } => {
                if let Driver::Gate(g) = n.net(net).driver {
                    let e = edges[g.index()]
                        .iter_mut()
                        .rev()
                        .find(|e| e.event == id)
                        .expect("maturing edge is recorded");
                    e.matured = true;
                }
                net_times[net.index()].push(now);
                for &(sink, pin) in &n.net(net).sinks {
                    let pin = pin as usize;
                    let d_ic = delays.interconnect(sink, pin);
                    let slot = &mut wire[sink.index()][pin];
                    match *slot {
                        Some((src, ev)) if now - src < d_ic => {
                            sim.cancelled.insert(ev);
                            *slot = None;
                        }
                        _ => {
                            let ev = sim.schedule(now + d_ic, Event::Arrival { gate: sink, pin });
                            *slot = Some((now, ev));
                        }
                    }
                }
            }
            Event::Arrival { gate, pin } => {
                // Gather every live arrival at this gate and instant.
                let mut switching = 1u32 << pin;
                while let Some(Reverse((k2, i2))) = sim.heap.peek().copied() {
                    if (k2.0, k2.1, k2.2, k2.3) != (key.0, key.1, key.2, key.3) {
                        break;
                    }
                    sim.heap.pop();
                    if sim.cancelled.contains(&k2.4) {
                        continue;
                    }
                    match sim.events[i2] {
                        Event::Arrival { pin: p2, .. } => switching |= 1 << p2,
                        Event::Mature { .. } => unreachable!("phase 0 holds arrivals only"),
                    }
                }
                let g = gate.index();
                let mut state = 0u32;
                for (p, v) in pin_value[g].iter_mut().enumerate() {
                    if switching >> p & 1 == 1 {
                        *v = !*v;
                    }
                    state |= u32::from(*v) << p;
                }
                let new_y = n.cell_of(gate).eval_index(state);
                if new_y == y[g] {
                    continue;
                }
                let delay = delays.lookup_delay(gate, switching, state, Edge::to(new_y));
                let t_out = now + delay;
                let threshold = delay * Tick::from(sim.pct) / 100;
                let retract = edges[g]
                    .last()
                    .is_some_and(|e| t_out <= e.time || t_out - e.time < threshold);
                y[g] = new_y;
                if retract {
                    let e = edges[g].pop().unwrap();
                    assert!(!e.matured, "gate {} retracts an edge already in effect", n.gate(gate).name);
                    sim.cancelled.insert(e.event);
                    if e.time < window.end {
                        filtered[g] += 1;
                    }
                } else {
                    let out = n.gate(gate).output;
                    let ev = sim.schedule(t_out, Event::Mature { net: out });
                    edges[g].push(OutEdge {
                        time: t_out,
                        event: ev,
                        matured: false,
                    });
                }
            }
        }
    }

    let nets = net_times
        .into_iter()
        .zip(values)
        .map(|(mut times, initial)| {
            times.retain(|&t| t < window.end);
            Waveform::new(initial, times)
        })
        .collect();
    OracleWindow { nets, filtered }
}

/// Runs the oracle on every window of `stimuli`.
pub fn oracle_run(
    levelized: &LevelizedNetlist,
    delays: &AnnotatedDelays,
    stimuli: &StimulusSet,
    pathpulse_pct: u32,
) -> Vec<OracleWindow> {
    (0..stimuli.num_windows())
        .map(|w| {
            oracle_simulate(
                levelized,
                delays,
                stimuli.inputs(w),
                stimuli.window(w),
                pathpulse_pct,
            )
        })
        .collect()
}

/// First point where the kernel and the oracle disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub net: String,
    /// Driving gate, if the net is a gate output.
    pub gate: Option<String>,
    pub window: usize,
    pub time: Tick,
    pub kernel: Waveform,
    pub oracle: Waveform,
}

impl std::fmt::Display for Divergence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "net {} (gate {}) window {} diverges at {} fs: kernel {:?} vs oracle {:?}",
            self.net,
            self.gate.as_deref().unwrap_or("-"),
            self.window,
            self.time,
            self.kernel,
            self.oracle
        )
    }
}

fn first_difference(a: &Waveform, b: &Waveform, start: Tick) -> Option<Tick> {
    if a.initial != b.initial {
        return Some(start);
    }
    let common = a.times.iter().zip(&b.times).position(|(x, y)| x != y);
    match common {
        Some(i) => Some(a.times[i].min(b.times[i])),
        None if a.times.len() != b.times.len() => {
            let k = a.times.len().min(b.times.len());
            a.times.get(k).or(b.times.get(k)).copied()
        }
        None => None,
    }
}

/// Compares the arena of a run against oracle windows (indexed by
/// absolute window). Returns the earliest divergence, preferring lower
/// windows, then earlier times, then shallower gates.
pub fn compare(
    levelized: &LevelizedNetlist,
    stimuli: &StimulusSet,
    arena: &WaveformArena,
    oracle: &[OracleWindow],
) -> Option<Divergence> {
    let n = levelized.netlist();
    let first = arena.first_window();
    for w in first..first + arena.windows() {
        let start = stimuli.window(w).start;
        let mut best: Option<(Tick, u32, NetId)> = None;
        for &g in levelized.order() {
            let net = n.gate(g).output;
            let kernel = net_wave(levelized, stimuli, arena, net, w).to_owned();
            if let Some(t) = first_difference(&kernel, &oracle[w].nets[net.index()], start) {
                let cand = (t, levelized.level(g), net);
                if best.is_none_or(|b| (cand.0, cand.1) < (b.0, b.1)) {
                    best = Some(cand);
                }
            }
        }
        if let Some((time, _, net)) = best {
            let gate = match n.net(net).driver {
                Driver::Gate(g) => Some(n.gate(g).name.clone()),
                Driver::Input(_) => None,
            };
            return Some(Divergence {
                net: n.net(net).name.clone(),
                gate,
                window: w,
                time,
                kernel: net_wave(levelized, stimuli, arena, net, w).to_owned(),
                oracle: oracle[w].nets[net.index()].clone(),
            });
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::netlist::{CellDef, CellLibrary};

    fn lib() -> Arc<CellLibrary> {
        Arc::new(
            CellLibrary::from_cells(vec![
                CellDef::new("INV", vec!["A".into()], "Y", "10").unwrap(),
                CellDef::new("AND2", vec!["A".into(), "B".into()], "Y", "0001").unwrap(),
            ])
            .unwrap(),
        )
    }

    fn chain() -> LevelizedNetlist {
        let json = r#"{"name": "c", "inputs": ["a"], "outputs": ["n3"], "gates": [
            {"name": "u1", "cell": "INV", "pins": {"A": "a", "Y": "n1"}},
            {"name": "u2", "cell": "INV", "pins": {"A": "n1", "Y": "n2"}},
            {"name": "u3", "cell": "INV", "pins": {"A": "n2", "Y": "n3"}}]}"#;
        LevelizedNetlist::new(Netlist::parse(json, lib()).unwrap()).unwrap()
    }

    #[test]
    fn inverter_chain_adds_delays() {
        let l = chain();
        let mut d = AnnotatedDelays::zero(l.netlist());
        for g in 0..3 {
            d.arc_mut(GateId(g), 0).fill([1000, 1000]);
        }
        let input = Waveform::new(false, vec![0]);
        let r = oracle_simulate(&l, &d, &[input], Window { start: 0, end: 10_000 }, 100);
        let n = l.netlist();
        let wave = |name| &r.nets[n.net_id(name).unwrap().index()];
        assert_eq!(*wave("n1"), Waveform::new(true, vec![1000]));
        assert_eq!(*wave("n2"), Waveform::new(false, vec![2000]));
        assert_eq!(*wave("n3"), Waveform::new(true, vec![3000]));
    }

    #[test]
    fn narrow_pulse_cancelled() {
        let l = chain();
        let mut d = AnnotatedDelays::zero(l.netlist());
        d.arc_mut(GateId(0), 0).fill([5000, 5000]);
        let input = Waveform::new(false, vec![100, 103]);
        let r = oracle_simulate(&l, &d, &[input], Window { start: 0, end: 100_000 }, 100);
        let n1 = l.netlist().net_id("n1").unwrap();
        assert_eq!(r.nets[n1.index()], Waveform::constant(true));
        assert_eq!(r.filtered[0], 1);
    }

    #[test]
    fn zero_delay_values() {
        let json = r#"{"name": "z", "inputs": ["a", "b"], "outputs": ["y"], "gates": [
            {"name": "g", "cell": "AND2", "pins": {"A": "a", "B": "b", "Y": "y"}},
            {"name": "i", "cell": "INV", "pins": {"A": "a", "Y": "ny"}}]}"#;
        let l = LevelizedNetlist::new(Netlist::parse(json, lib()).unwrap()).unwrap();
        let n = l.netlist();
        let v = zero_delay_eval(&l, &[true, true]);
        assert!(v[n.net_id("y").unwrap().index()]);
        let v = zero_delay_eval(&l, &[false, false]);
        assert!(v[n.net_id("ny").unwrap().index()]);
        let again = zero_delay_eval(&l, &[v[0], v[1]]);
        assert_eq!(again, v);
    }

    #[test]
    fn difference_localization() {
        let a = Waveform::new(false, vec![1, 5, 9]);
        assert_eq!(first_difference(&a, &a, 0), None);
        assert_eq!(first_difference(&a, &Waveform::new(false, vec![1, 6]), 0), Some(5));
        assert_eq!(first_difference(&a, &Waveform::new(false, vec![1, 5]), 0), Some(9));
        assert_eq!(first_difference(&a, &Waveform::new(true, vec![]), 7), Some(7));
    }
}
