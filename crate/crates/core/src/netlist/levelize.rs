// SPDX-License-Identifier: Apache-2.0

use std::collections::VecDeque;

use super::{Driver, GateId, Netlist, NetlistError};

/// A netlist with every gate assigned its longest-path depth from the
/// primary/pseudo-primary inputs.
///
/// A gate fed only by inputs sits at level 1; otherwise its level is one more
/// than the deepest gate driving it.
#[derive(Debug, Clone)]
pub struct LevelizedNetlist {
    netlist: Netlist,
    level: Vec<u32>,
    /// `levels[i]` holds the gates of level `i + 1`, ascending gate index.
    levels: Vec<Vec<GateId>>,
    order: Vec<GateId>,
    rank: Vec<u32>,
}

impl LevelizedNetlist {
    pub fn new(netlist: Netlist) -> Result<Self, NetlistError> {
        let n = netlist.num_gates();
        let mut pending = vec![0u32; n];
        for (g, gate) in netlist.gates.iter().enumerate() {
            pending[g] = gate
                .inputs
                .iter()
                .filter(|&&net| matches!(netlist.net(net).driver, Driver::Gate(_)))
                .count() as u32;
        }

        let mut level = vec![0u32; n];
        let mut ready: VecDeque<usize> = (0..n).filter(|&g| pending[g] == 0).collect();
        for &g in &ready {
            level[g] = 1;
        }
        let mut done = 0usize;
        while let Some(g) = ready.pop_front() {
            done += 1;
            let out = netlist.gates[g].output;
            for &(sink, _) in &netlist.net(out).sinks {
                let s = sink.index();
                level[s] = level[s].max(level[g] + 1);
                pending[s] -= 1;
                if pending[s] == 0 {
                    ready.push_back(s);
                }
            }
        }
        if done != n {
            return Err(NetlistError::Cycle(find_cycle_member(&netlist, &pending)));
        }

        let depth = level.iter().copied().max().unwrap_or(0) as usize;
        let mut levels = vec![Vec::new(); depth];
        for (g, &l) in level.iter().enumerate() {
            levels[l as usize - 1].push(GateId(g as u32));
        }
        let order: Vec<GateId> = levels.iter().flatten().copied().collect();
        let mut rank = vec![0u32; n];
        for (r, g) in order.iter().enumerate() {
            rank[g.index()] = r as u32;
        }
        Ok(LevelizedNetlist {
            netlist,
            level,
            levels,
            order,
            rank,
        })
    }

    pub fn netlist(&self) -> &Netlist {
        &self.netlist
    }

    pub fn into_netlist(self) -> Netlist {
        self.netlist
    }

    pub fn level(&self, gate: GateId) -> u32 {
        self.level[gate.index()]
    }

    /// Number of levels; gates occupy levels `1..=depth()`.
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Gates of level `level` (1-based) in ascending index order.
    pub fn gates_at(&self, level: usize) -> &[GateId] {
        &self.levels[level - 1]
    }

    pub fn levels(&self) -> &[Vec<GateId>] {
        &self.levels
    }

    /// All gates in (level, index) order.
    pub fn order(&self) -> &[GateId] {
        &self.order
    }

    /// Position of `gate` in [`order`](Self::order).
    pub fn rank(&self, gate: GateId) -> usize {
        self.rank[gate.index()] as usize
    }
}

// Every unresolved gate has an unresolved fanin gate, so walking fanins from
// any of them must revisit a gate; that one lies on a cycle.
fn find_cycle_member(netlist: &Netlist, pending: &[u32]) -> String {
    let start = pending.iter().position(|&p| p > 0).expect("some gate unresolved");
    let mut seen = vec![false; pending.len()];
    let mut g = start;
    loop {
        if seen[g] {
            return netlist.gates[g].name.clone();
        }
        seen[g] = true;
        g = netlist.gates[g]
            .inputs
            .iter()
            .find_map(|&net| match netlist.net(net).driver {
                Driver::Gate(d) if pending[d.index()] > 0 => Some(d.index()),
                _ => None,
            })
            .expect("unresolved gate has an unresolved fanin");
    }
}


#[cfg(test)]
mod props {
    use crate::netlist::Driver;
    use crate::testgen::{random_instance, small};
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(crate::testgen::proptest_config(128))]

        #[test]
        fn levels_are_longest_path_depths(seed in any::<u64>()) {
            let inst = random_instance(seed, &small());
            let lv = &inst.levelized;
            let n = lv.netlist();
            for g in n.gate_ids() {
                let fanin: Vec<u32> = n.gate(g).inputs.iter().filter_map(|&net| match n.net(net).driver {
                    Driver::Gate(d) => Some(lv.level(d)),
                    Driver::Input(_) => None,
                }).collect();
                for &l in &fanin {
                    prop_assert!(l < lv.level(g));
                }
                prop_assert_eq!(lv.level(g), 1 + fanin.iter().copied().max().unwrap_or(0));
            }
            let bucketed: usize = lv.levels().iter().map(Vec::len).sum();
            prop_assert_eq!(bucketed, n.num_gates());
            for (i, bucket) in lv.levels().iter().enumerate() {
                prop_assert!(bucket.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(bucket.iter().all(|&g| lv.level(g) as usize == i + 1));
            }
        }
    }
}
