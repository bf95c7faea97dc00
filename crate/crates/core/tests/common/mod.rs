// SPDX-License-Identifier: Apache-2.0

//! Random design generator shared by the unit property tests and the
//! acceptance suite. Every instance is produced as library JSON, netlist
//! JSON and SDF text and then read back through the public parsers.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::sync::Arc;

use glsim::netlist::{CellLibrary, LevelizedNetlist, Netlist};
use glsim::sdf::{AnnotatedDelays, Corner};
use glsim::waveform::{vcd, StimulusSet, Waveform};
use glsim::Tick;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use proptest::prelude::*;
use serde_json::json;

const PINS: [&str; 4] = ["A", "B", "C", "D"];

pub fn proptest_config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

/// Strictly increasing times in `[0, horizon)`.
pub fn sorted_times(max_len: usize, horizon: Tick) -> impl Strategy<Value = Vec<Tick>> {
    prop::collection::btree_set(0..horizon, 0..=max_len).prop_map(|s| s.into_iter().collect())
}

/// `0`, up to five interior cuts, and `horizon`.
pub fn boundaries(horizon: Tick) -> impl Strategy<Value = Vec<Tick>> {
    prop::collection::btree_set(1..horizon, 0..6).prop_map(move |s| {
        let mut b = vec![0];
        b.extend(s);
        b.push(horizon);
        b
    })
}

/// Any truth table over `k` inputs.
pub fn truth(k: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(any::<bool>(), 1 << k)
        .prop_map(|v| v.into_iter().map(|b| if b { '1' } else { '0' }).collect())
}

/// Instances small enough for many property cases.
pub fn small() -> GenParams {
    GenParams {
        max_gates: 120,
        ..GenParams::default()
    }
}

#[derive(Debug, Clone)]
pub struct GenParams {
    pub min_gates: usize,
    pub max_gates: usize,
    pub max_levels: usize,
    pub max_inputs_per_cell: usize,
    pub max_transitions: usize,
    pub max_windows: usize,
    pub max_delay: Tick,
    pub max_interconnect: Tick,
    /// Emit any SDF at all.
    pub annotate: bool,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            min_gates: 10,
            max_gates: 500,
            max_levels: 8,
            max_inputs_per_cell: 4,
            max_transitions: 64,
            max_windows: 8,
            max_delay: 10_000,
            max_interconnect: 3_000,
            annotate: true,
        }
    }
}

pub struct Instance {
    pub seed: u64,
    pub lib_json: String,
    pub netlist_json: String,
    pub sdf: String,
    /// Whole-run input waveforms in netlist input order.
    pub inputs: Vec<Waveform>,
    pub boundaries: Vec<Tick>,
    pub levelized: LevelizedNetlist,
    pub delays: AnnotatedDelays,
    pub stimuli: StimulusSet,
}

impl Instance {
    pub fn netlist(&self) -> &Netlist {
        self.levelized.netlist()
    }

    pub fn duration(&self) -> Tick {
        *self.boundaries.last().unwrap()
    }

    /// Stimulus VCD at 1 fs resolution.
    pub fn vcd(&self) -> String {
        let n = self.netlist();
        let names: Vec<&str> = n.inputs.iter().map(|&i| n.net(i).name.as_str()).collect();
        let signals: Vec<_> = names
            .iter()
            .zip(&self.inputs)
            .map(|(name, w)| (*name, w.as_ref()))
            .collect();
        let mut buf = Vec::new();
        vcd::write_vcd_waveforms(&mut buf, &signals, self.duration()).unwrap();
        String::from_utf8(buf).unwrap()
    }
}

fn random_truth(rng: &mut StdRng, k: usize) -> String {
    loop {
        let t: String = (0..1usize << k)
            .map(|_| if rng.gen_bool(0.5) { '1' } else { '0' })
            .collect();
        if t.contains('0') && t.contains('1') {
            return t;
        }
    }
}

fn fmt_delay(v: Tick, ps: bool) -> String {
    if ps {
        format!("{}.{:03}", v / 1000, v % 1000)
    } else {
        v.to_string()
    }
}

/// Random rvalue, sometimes as a `min:typ:max` triple around `v`.
fn rvalue(rng: &mut StdRng, v: Tick, ps: bool) -> String {
    if rng.gen_bool(0.2) {
        let lo = v / 2;
        let hi = v + v / 2;
        format!("({}:{}:{})", fmt_delay(lo, ps), fmt_delay(v, ps), fmt_delay(hi, ps))
    } else {
        format!("({})", fmt_delay(v, ps))
    }
}

fn delay_value(rng: &mut StdRng, max: Tick) -> Tick {
    if rng.gen_bool(0.1) {
        0
    } else {
        rng.gen_range(0..=max)
    }
}

struct GateSpec {
    name: String,
    cell: usize,
    inputs: Vec<String>,
    output: String,
}

fn build(
    seed: u64,
    rng: &mut StdRng,
    cells: Vec<(String, usize, String)>,
    pis: Vec<String>,
    gates: Vec<GateSpec>,
    outputs: Vec<String>,
    p: &GenParams,
    inputs: Vec<Waveform>,
    boundaries: Vec<Tick>,
) -> Instance {
    let lib_json = json!({
        "cells": cells.iter().map(|(name, k, truth)| json!({
            "name": name,
            "inputs": PINS[..*k].to_vec(),
            "output": "Y",
            "truth": truth,
        })).collect::<Vec<_>>()
    })
    .to_string();
    let netlist_json = json!({
        "name": format!("rand{seed}"),
        "inputs": pis,
        "outputs": outputs,
        "gates": gates.iter().map(|g| {
            let mut pins = serde_json::Map::new();
            for (i, net) in g.inputs.iter().enumerate() {
                pins.insert(PINS[i].to_string(), json!(net));
            }
            pins.insert("Y".into(), json!(g.output));
            json!({"name": g.name, "cell": cells[g.cell].0, "pins": pins})
        }).collect::<Vec<_>>()
    })
    .to_string();

    let sdf = if p.annotate {
        random_sdf(rng, &cells, &gates, p)
    } else {
        String::new()
    };

    let lib = Arc::new(CellLibrary::parse(&lib_json).expect("generated library parses"));
    let netlist = Netlist::parse(&netlist_json, lib).expect("generated netlist parses");
    let levelized = LevelizedNetlist::new(netlist).expect("generated netlist is acyclic");
    let delays = AnnotatedDelays::parse(&sdf, levelized.netlist(), Corner::Typ)
        .unwrap_or_else(|e| panic!("generated SDF parses: {e}\n{sdf}"));
    let stimuli = StimulusSet::new(&inputs, boundaries.clone()).unwrap();
    Instance {
        seed,
        lib_json,
        netlist_json,
        sdf,
        inputs,
        boundaries,
        levelized,
        delays,
        stimuli,
    }
}

fn random_sdf(
    rng: &mut StdRng,
    cells: &[(String, usize, String)],
    gates: &[GateSpec],
    p: &GenParams,
) -> String {
    let ps = rng.gen_bool(0.5);
    let mut s = String::new();
    writeln!(
        s,
        "(DELAYFILE (SDFVERSION \"3.0\") (DESIGN \"rand\") (TIMESCALE {}) (DIVIDER /)",
        if ps { "1ps" } else { "1fs" }
    )
    .unwrap();
    let driver: std::collections::HashMap<&str, &str> =
        gates.iter().map(|g| (g.output.as_str(), g.name.as_str())).collect();
    let mut wires = Vec::new();
    for g in gates {
        let k = cells[g.cell].1;
        writeln!(s, "  (CELL (CELLTYPE \"{}\") (INSTANCE {})", cells[g.cell].0, g.name).unwrap();
        s.push_str("    (DELAY (ABSOLUTE\n");
        for pin in 0..k {
            let (r, f) = (delay_value(rng, p.max_delay), delay_value(rng, p.max_delay));
            let (r, f) = (rvalue(rng, r, ps), rvalue(rng, f, ps));
            writeln!(s, "      (IOPATH {} Y {r} {f})", PINS[pin]).unwrap();
            if k >= 2 {
                for _ in 0..rng.gen_range(0..=2) {
                    let side: Vec<usize> = (0..k).filter(|&q| q != pin).collect();
                    let chosen: Vec<usize> =
                        side.iter().copied().filter(|_| rng.gen_bool(0.7)).collect();
                    if chosen.is_empty() {
                        continue;
                    }
                    let cond: Vec<String> = chosen
                        .iter()
                        .map(|&q| match rng.gen_range(0..3) {
                            0 => PINS[q].to_string(),
                            1 => format!("!{}", PINS[q]),
                            _ => format!("{}==1'b{}", PINS[q], rng.gen_range(0..2)),
                        })
                        .collect();
                    let (r, f) = (delay_value(rng, p.max_delay), delay_value(rng, p.max_delay));
                    writeln!(
                        s,
                        "      (COND {} (IOPATH {} Y {} {}))",
                        cond.join(" && "),
                        PINS[pin],
                        rvalue(rng, r, ps),
                        rvalue(rng, f, ps)
                    )
                    .unwrap();
                }
            }
            if p.max_interconnect > 0 && rng.gen_bool(0.3) {
                let src = &g.inputs[pin];
                let src = match driver.get(src.as_str()) {
                    Some(d) => format!("{d}/Y"),
                    None => src.clone(),
                };
                let d = rng.gen_range(0..=p.max_interconnect);
                wires.push(format!(
                    "      (INTERCONNECT {src} {}/{} ({}) ({}))",
                    g.name,
                    PINS[pin],
                    fmt_delay(d, ps),
                    fmt_delay(rng.gen_range(0..=d), ps)
                ));
            }
        }
        s.push_str("    ))\n  )\n");
    }
    if !wires.is_empty() {
        s.push_str("  (CELL (CELLTYPE \"rand\") (INSTANCE)\n    (DELAY (ABSOLUTE\n");
        for w in wires {
            s.push_str(&w);
            s.push('\n');
        }
        s.push_str("    ))\n  )\n");
    }
    s.push_str(")\n");
    s
}

fn random_stimuli(
    rng: &mut StdRng,
    inputs: usize,
    duration: Tick,
    max_transitions: usize,
    windows: usize,
) -> (Vec<Waveform>, Vec<Tick>) {
    let waves = (0..inputs)
        .map(|_| {
            let n = rng.gen_range(0..=max_transitions);
            let mut t: Vec<Tick> = (0..n).map(|_| rng.gen_range(1..duration)).collect();
            t.sort_unstable();
            t.dedup();
            Waveform::new(rng.gen_bool(0.5), t)
        })
        .collect();
    let mut b: Vec<Tick> = (0..windows - 1).map(|_| rng.gen_range(1..duration)).collect();
    b.push(0);
    b.push(duration);
    b.sort_unstable();
    b.dedup();
    (waves, b)
}

/// A random levelized design with random conditional delays and stimuli.
pub fn random_instance(seed: u64, p: &GenParams) -> Instance {
    let mut rng = StdRng::seed_from_u64(seed);
    let n_cells = rng.gen_range(4..=12);
    let cells: Vec<(String, usize, String)> = (0..n_cells)
        .map(|i| {
            let k = rng.gen_range(1..=p.max_inputs_per_cell);
            (format!("C{i}_{k}"), k, random_truth(&mut rng, k))
        })
        .collect();
    let n_pis = rng.gen_range(2..=12);
    let pis: Vec<String> = (0..n_pis).map(|i| format!("in{i}")).collect();

    let n_gates = rng.gen_range(p.min_gates..=p.max_gates);
    let levels = rng.gen_range(1..=p.max_levels.min(n_gates));
    let mut level_of: Vec<usize> = (0..n_gates)
        .map(|g| if g < levels { g + 1 } else { rng.gen_range(1..=levels) })
        .collect();
    level_of.sort_unstable();
    let mut by_level: Vec<Vec<usize>> = vec![Vec::new(); levels + 1];
    for (g, &l) in level_of.iter().enumerate() {
        by_level[l].push(g);
    }

    let mut gates: Vec<GateSpec> = Vec::with_capacity(n_gates);
    let mut below: Vec<String> = pis.clone();
    for l in 1..=levels {
        let mut next = Vec::new();
        for &g in &by_level[l] {
            let cell = rng.gen_range(0..cells.len());
            let k = cells[cell].1;
            let inputs = (0..k)
                .map(|pin| {
                    if pin == 0 && l > 1 {
                        let d = *by_level[l - 1].choose(&mut rng).unwrap();
                        format!("n{d}")
                    } else {
                        below.choose(&mut rng).unwrap().clone()
                    }
                })
                .collect();
            gates.push(GateSpec {
                name: format!("u{g}"),
                cell,
                inputs,
                output: format!("n{g}"),
            });
            next.push(format!("n{g}"));
        }
        below.extend(next);
    }
    let used: std::collections::HashSet<&String> = gates.iter().flat_map(|g| &g.inputs).collect();
    let outputs: Vec<String> = gates
        .iter()
        .filter(|g| !used.contains(&g.output) || rng.gen_bool(0.05))
        .map(|g| g.output.clone())
        .collect();
    gates.shuffle(&mut rng);

    let duration = rng.gen_range(10_000..=300_000);
    let windows = rng.gen_range(1..=p.max_windows);
    let (inputs, boundaries) = random_stimuli(&mut rng, n_pis, duration, p.max_transitions, windows);
    build(seed, &mut rng, cells, pis, gates, outputs, p, inputs, boundaries)
}

/// A wide design of `levels` equally sized levels. Each gate reads the
/// previous level only; every input toggles a few times per window.
pub fn balanced_design(seed: u64, levels: usize, width: usize, windows: usize) -> Instance {
    let mut rng = StdRng::seed_from_u64(seed);
    let cells: Vec<(String, usize, String)> = vec![
        ("INV".into(), 1, "10".into()),
        ("NAND2".into(), 2, "1110".into()),
        ("NOR2".into(), 2, "1000".into()),
        ("XOR2".into(), 2, "0110".into()),
        ("AOI21".into(), 3, "11101010".into()),
        ("MAJ3".into(), 3, "00010111".into()),
    ];
    let pis: Vec<String> = (0..width).map(|i| format!("in{i}")).collect();
    let mut gates = Vec::with_capacity(levels * width);
    let mut prev = pis.clone();
    for l in 0..levels {
        let mut cur = Vec::with_capacity(width);
        for i in 0..width {
            let g = l * width + i;
            let cell = if i % 8 == 0 { 0 } else { rng.gen_range(1..cells.len()) };
            let k = cells[cell].1;
            let inputs = (0..k).map(|_| prev.choose(&mut rng).unwrap().clone()).collect();
            gates.push(GateSpec {
                name: format!("u{g}"),
                cell,
                inputs,
                output: format!("n{g}"),
            });
            cur.push(format!("n{g}"));
        }
        prev = cur;
    }
    let outputs = prev.clone();

    let period: Tick = 100_000;
    let boundaries: Vec<Tick> = (0..=windows as Tick).map(|j| j * period).collect();
    let inputs = (0..width)
        .map(|_| {
            let mut t = Vec::new();
            for j in 0..windows as Tick {
                for _ in 0..rng.gen_range(0..=2) {
                    t.push(j * period + rng.gen_range(1..period / 4));
                }
            }
            t.sort_unstable();
            t.dedup();
            Waveform::new(rng.gen_bool(0.5), t)
        })
        .collect();
    let p = GenParams {
        max_delay: 2_000,
        max_interconnect: 500,
        ..GenParams::default()
    };
    build(seed, &mut rng, cells, pis, gates, outputs, &p, inputs, boundaries)
}
