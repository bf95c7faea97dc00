// SPDX-License-Identifier: Apache-2.0

//! Cell library, flat combinational netlist and logic levelization.
//!
//! Sequential elements are not modelled: their outputs appear as
//! pseudo-primary inputs whose waveforms come from the testbench.

mod levelize;
mod library;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use levelize::LevelizedNetlist;
pub use library::{CellDef, CellLibrary, LibraryError, MAX_CELL_INPUTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GateId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NetId(pub u32);

impl GateId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl NetId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, thiserror::Error)]
pub enum NetlistError {
    #[error("netlist JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("gate {gate}: unknown cell {cell}")]
    UnknownCell { gate: String, cell: String },
    #[error("gate {gate}: cell {cell} has no pin {pin}")]
    UnknownPin {
        gate: String,
        cell: String,
        pin: String,
    },
    #[error("gate {gate}: pin {pin} is not connected")]
    UnboundPin { gate: String, pin: String },
    #[error("duplicate gate name {0}")]
    DuplicateGate(String),
    #[error("net {0} has more than one driver")]
    MultipleDrivers(String),
    #[error("net {net} is used by {user} but has no driver")]
    Undriven { net: String, user: String },
    #[error("combinational cycle through gate {0}")]
    Cycle(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    /// Position in [`Netlist::inputs`].
    Input(u32),
    Gate(GateId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Net {
    pub name: String,
    pub driver: Driver,
    /// Gate input pins reading this net, as (gate, pin position).
    pub sinks: Vec<(GateId, u8)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateInst {
    pub name: String,
    pub cell: usize,
    /// Input nets in cell pin order.
    pub inputs: Vec<NetId>,
    pub output: NetId,
}

/// A flat netlist in which every net has exactly one driver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Netlist {
    pub name: String,
    pub inputs: Vec<NetId>,
    pub outputs: Vec<NetId>,
    pub gates: Vec<GateInst>,
    pub nets: Vec<Net>,
    library: Arc<CellLibrary>,
    net_by_name: HashMap<String, NetId>,
    gate_by_name: HashMap<String, GateId>,
}

#[derive(Serialize, Deserialize)]
struct NetlistDoc {
    name: String,
    inputs: Vec<String>,
    outputs: Vec<String>,
    gates: Vec<GateDoc>,
}

#[derive(Serialize, Deserialize)]
struct GateDoc {
    name: String,
    cell: String,
    pins: BTreeMap<String, String>,
}

impl Netlist {
    /// Parses the netlist JSON document against `library`.
    pub fn parse(text: &str, library: Arc<CellLibrary>) -> Result<Self, NetlistError> {
        let doc: NetlistDoc = serde_json::from_str(text)?;
        Self::build(doc, library)
    }

    fn build(doc: NetlistDoc, library: Arc<CellLibrary>) -> Result<Self, NetlistError> {
        let mut nets: Vec<Net> = Vec::new();
        let mut net_by_name: HashMap<String, NetId> = HashMap::new();
        let mut add_net = |name: &str, driver: Driver, nets: &mut Vec<Net>| {
            if net_by_name.contains_key(name) {
                return Err(NetlistError::MultipleDrivers(name.to_string()));
            }
            let id = NetId(nets.len() as u32);
            nets.push(Net {
                name: name.to_string(),
                driver,
                sinks: Vec::new(),
            });
            net_by_name.insert(name.to_string(), id);
            Ok(id)
        };

        let mut inputs = Vec::with_capacity(doc.inputs.len());
        for (i, name) in doc.inputs.iter().enumerate() {
            inputs.push(add_net(name, Driver::Input(i as u32), &mut nets)?);
        }

        let mut gate_by_name = HashMap::with_capacity(doc.gates.len());
        let mut outputs_of = Vec::with_capacity(doc.gates.len());
        for (g, gate) in doc.gates.iter().enumerate() {
            if gate_by_name
                .insert(gate.name.clone(), GateId(g as u32))
                .is_some()
            {
                return Err(NetlistError::DuplicateGate(gate.name.clone()));
            }
            let cell = library
                .get(&gate.cell)
                .ok_or_else(|| NetlistError::UnknownCell {
                    gate: gate.name.clone(),
                    cell: gate.cell.clone(),
                })?;
            for pin in gate.pins.keys() {
                if *pin != cell.output && cell.pin_index(pin).is_none() {
                    return Err(NetlistError::UnknownPin {
                        gate: gate.name.clone(),
                        cell: cell.name.clone(),
                        pin: pin.clone(),
                    });
                }
            }
            let out = gate
                .pins
                .get(&cell.output)
                .ok_or_else(|| NetlistError::UnboundPin {
                    gate: gate.name.clone(),
                    pin: cell.output.clone(),
                })?;
            outputs_of.push(add_net(out, Driver::Gate(GateId(g as u32)), &mut nets)?);
        }

        let mut gates = Vec::with_capacity(doc.gates.len());
        for (g, gate) in doc.gates.iter().enumerate() {
            let cell_id = library.id(&gate.cell).expect("checked above");
            let cell = library.cell(cell_id);
            let mut ins = Vec::with_capacity(cell.num_inputs());
            for (p, pin) in cell.inputs.iter().enumerate() {
                let net_name = gate.pins.get(pin).ok_or_else(|| NetlistError::UnboundPin {
                    gate: gate.name.clone(),
                    pin: pin.clone(),
                })?;
                let net = *net_by_name
                    .get(net_name)
                    .ok_or_else(|| NetlistError::Undriven {
                        net: net_name.clone(),
                        user: gate.name.clone(),
                    })?;
                nets[net.index()].sinks.push((GateId(g as u32), p as u8));
                ins.push(net);
            }
            gates.push(GateInst {
                name: gate.name.clone(),
                cell: cell_id,
                inputs: ins,
                output: outputs_of[g],
            });
        }

        let outputs = doc
            .outputs
            .iter()
            .map(|name| {
                net_by_name
                    .get(name)
                    .copied()
                    .ok_or_else(|| NetlistError::Undriven {
                        net: name.clone(),
                        user: "primary outputs".to_string(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;

        Ok(Netlist {
            name: doc.name,
            inputs,
            outputs,
            gates,
            nets,
            library,
            net_by_name,
            gate_by_name,
        })
    }

    /// Serializes back into the netlist JSON schema.
    pub fn to_json(&self) -> String {
        let name_of = |n: NetId| self.nets[n.index()].name.clone();
        let doc = NetlistDoc {
            name: self.name.clone(),
            inputs: self.inputs.iter().map(|&n| name_of(n)).collect(),
            outputs: self.outputs.iter().map(|&n| name_of(n)).collect(),
            gates: self
                .gates
                .iter()
                .map(|g| {
                    let cell = self.library.cell(g.cell);
                    let mut pins: BTreeMap<String, String> = cell
                        .inputs
                        .iter()
                        .zip(&g.inputs)
                        .map(|(p, &n)| (p.clone(), name_of(n)))
                        .collect();
                    pins.insert(cell.output.clone(), name_of(g.output));
                    GateDoc {
                        name: g.name.clone(),
                        cell: cell.name.clone(),
                        pins,
                    }
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("netlist serializes")
    }

    pub fn library(&self) -> &CellLibrary {
        &self.library
    }

    pub fn library_arc(&self) -> &Arc<CellLibrary> {
        &self.library
    }

    pub fn cell_of(&self, gate: GateId) -> &CellDef {
        self.library.cell(self.gates[gate.index()].cell)
    }

    pub fn gate(&self, gate: GateId) -> &GateInst {
        &self.gates[gate.index()]
    }

    pub fn net(&self, net: NetId) -> &Net {
        &self.nets[net.index()]
    }

    pub fn net_id(&self, name: &str) -> Option<NetId> {
        self.net_by_name.get(name).copied()
    }

    pub fn gate_id(&self, name: &str) -> Option<GateId> {
        self.gate_by_name.get(name).copied()
    }

    pub fn num_gates(&self) -> usize {
        self.gates.len()
    }

    pub fn num_nets(&self) -> usize {
        self.nets.len()
    }

    pub fn gate_ids(&self) -> impl Iterator<Item = GateId> {
        (0..self.gates.len() as u32).map(GateId)
    }
}


#[cfg(test)]
mod props {
    use crate::netlist::{CellLibrary, Netlist};
    use crate::testgen::{random_instance, small};
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(crate::testgen::proptest_config(64))]

        #[test]
        fn netlist_json_round_trips(seed in any::<u64>()) {
            let inst = random_instance(seed, &small());
            let n = inst.netlist();
            let again = Netlist::parse(&n.to_json(), n.library_arc().clone()).unwrap();
            prop_assert_eq!(&again, n);
            let lib = CellLibrary::parse(&n.library().to_json()).unwrap();
            prop_assert_eq!(&lib, n.library());
        }
    }
}
