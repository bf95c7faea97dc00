// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Upper bound on cell inputs; keeps every truth table within 65536 bits.
pub const MAX_CELL_INPUTS: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum LibraryError {
    #[error("library JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cell {cell}: truth table has {got} entries, expected {expected} for {inputs} inputs")]
    TruthLength {
        cell: String,
        inputs: usize,
        expected: usize,
        got: usize,
    },
    #[error("cell {cell}: truth table character {ch:?} is not 0 or 1")]
    TruthChar { cell: String, ch: char },
    #[error("duplicate cell name {0}")]
    DuplicateCell(String),
    #[error("cell {cell}: pin {pin} declared more than once")]
    DuplicatePin { cell: String, pin: String },
    #[error("cell {cell}: {inputs} inputs, supported range is 1..={MAX_CELL_INPUTS}")]
    InputCount { cell: String, inputs: usize },
}

/// A single-output boolean cell described by its truth table.
///
/// Entry `i` of the table is the output for the input vector whose bit `p`
/// is the value of input pin `p` (pin 0 is the least-significant bit).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellDef {
    pub name: String,
    pub inputs: Vec<String>,
    pub output: String,
    truth: Vec<u64>,
}

impl CellDef {
    pub fn new(
        name: impl Into<String>,
        inputs: Vec<String>,
        output: impl Into<String>,
        truth: &str,
    ) -> Result<Self, LibraryError> {
        let name = name.into();
        let output = output.into();
        let k = inputs.len();
        if k == 0 || k > MAX_CELL_INPUTS {
            return Err(LibraryError::InputCount {
                cell: name,
                inputs: k,
            });
        }
        for (i, pin) in inputs.iter().enumerate() {
            if inputs[..i].contains(pin) || *pin == output {
                return Err(LibraryError::DuplicatePin {
                    cell: name,
                    pin: pin.clone(),
                });
            }
        }
        let expected = 1usize << k;
        let got = truth.chars().count();
        if got != expected {
            return Err(LibraryError::TruthLength {
                cell: name,
                inputs: k,
                expected,
                got,
            });
        }
        let mut bits = vec![0u64; expected.div_ceil(64)];
        for (i, ch) in truth.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => bits[i >> 6] |= 1 << (i & 63),
                _ => return Err(LibraryError::TruthChar { cell: name, ch }),
            }
        }
        Ok(CellDef {
            name,
            inputs,
            output,
            truth: bits,
        })
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn pin_index(&self, pin: &str) -> Option<usize> {
        self.inputs.iter().position(|p| p == pin)
    }

    /// Output for the packed input vector `index` (bit `p` = pin `p`).
    #[inline]
    pub fn eval_index(&self, index: u32) -> bool {
        let i = index as usize;
        debug_assert!(i < 1 << self.inputs.len());
        (self.truth[i >> 6] >> (i & 63)) & 1 == 1
    }

    /// Evaluates the truth table for one value per input pin, in pin order.
    pub fn eval(&self, inputs: &[bool]) -> bool {
        assert_eq!(inputs.len(), self.inputs.len(), "input vector width");
        let index = inputs
            .iter()
            .enumerate()
            .fold(0u32, |acc, (p, &b)| acc | (u32::from(b) << p));
        self.eval_index(index)
    }

    /// The truth table as a `0`/`1` string, entry 0 first.
    pub fn truth_string(&self) -> String {
        (0..1u32 << self.inputs.len())
            .map(|i| if self.eval_index(i) { '1' } else { '0' })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct LibraryDoc {
    cells: Vec<CellDoc>,
}

#[derive(Serialize, Deserialize)]
struct CellDoc {
    name: String,
    inputs: Vec<String>,
    output: String,
    truth: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CellLibrary {
    cells: Vec<CellDef>,
    by_name: HashMap<String, usize>,
}

impl CellLibrary {
    pub fn from_cells(cells: Vec<CellDef>) -> Result<Self, LibraryError> {
        let mut by_name = HashMap::with_capacity(cells.len());
        for (i, cell) in cells.iter().enumerate() {
            if by_name.insert(cell.name.clone(), i).is_some() {
                return Err(LibraryError::DuplicateCell(cell.name.clone()));
            }
        }
        Ok(CellLibrary { cells, by_name })
    }

    /// Parses `{"cells":[{"name","inputs","output","truth"}...]}`.
    pub fn parse(text: &str) -> Result<Self, LibraryError> {
        let doc: LibraryDoc = serde_json::from_str(text)?;
        let cells = doc
            .cells
            .into_iter()
            .map(|c| CellDef::new(c.name, c.inputs, c.output, &c.truth))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_cells(cells)
    }

    pub fn to_json(&self) -> String {
        let doc = LibraryDoc {
            cells: self
                .cells
                .iter()
                .map(|c| CellDoc {
                    name: c.name.clone(),
                    inputs: c.inputs.clone(),
                    output: c.output.clone(),
                    truth: c.truth_string(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("library serializes")
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Option<&CellDef> {
        self.id(name).map(|i| &self.cells[i])
    }

    pub fn cell(&self, id: usize) -> &CellDef {
        &self.cells[id]
    }

    pub fn cells(&self) -> &[CellDef] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn and2_and_inverter_tables() {
        let lib = CellLibrary::parse(
            r#"{"cells":[{"name":"AND2","inputs":["A","B"],"output":"Y","truth":"0001"},
                         {"name":"INV","inputs":["A"],"output":"Y","truth":"10"}]}"#,
        )
        .unwrap();
        let and2 = lib.get("AND2").unwrap();
        assert!(and2.eval_index(3));
        assert!(and2.eval(&[true, true]));
        assert!(!and2.eval(&[true, false]));
        let inv = lib.get("INV").unwrap();
        assert!(inv.eval_index(0));
        assert!(!inv.eval_index(1));
    }

    #[test]
    fn truth_index_arithmetic() {
        let t = "01101001";
        let mux = CellDef::new("X3", vec!["A".into(), "B".into(), "S".into()], "Y", t).unwrap();
        // (A,B,S) = (0,1,1) -> index 0 + 2 + 4
        assert_eq!(mux.eval(&[false, true, true]), t.as_bytes()[6] == b'1');
    }

    #[test]
    fn rejects_bad_tables() {
        let e = CellLibrary::parse(
            r#"{"cells":[{"name":"AND2","inputs":["A","B"],"output":"Y","truth":"001"}]}"#,
        )
        .unwrap_err();
        assert!(matches!(e, LibraryError::TruthLength { expected: 4, got: 3, .. }));
        let e = CellLibrary::parse(
            r#"{"cells":[{"name":"I","inputs":["A"],"output":"Y","truth":"1x"}]}"#,
        )
        .unwrap_err();
        assert!(matches!(e, LibraryError::TruthChar { ch: 'x', .. }));
        let e = CellLibrary::parse(
            r#"{"cells":[{"name":"I","inputs":["A"],"output":"Y","truth":"10"},
                         {"name":"I","inputs":["A"],"output":"Y","truth":"10"}]}"#,
        )
        .unwrap_err();
        assert!(matches!(e, LibraryError::DuplicateCell(_)));
        let e = CellLibrary::parse(
            r#"{"cells":[{"name":"B","inputs":["A","A"],"output":"Y","truth":"0110"}]}"#,
        )
        .unwrap_err();
        assert!(matches!(e, LibraryError::DuplicatePin { .. }));
        assert!(matches!(
            CellLibrary::parse("{\"cells\":[").unwrap_err(),
            LibraryError::Json(_)
        ));
    }

    #[test]
    fn exhaustive_evaluation_reproduces_truth_string() {
        let t = "1011000111010010";
        let c = CellDef::new("C4", vec!["A".into(), "B".into(), "C".into(), "D".into()], "Y", t)
            .unwrap();
        assert_eq!(c.truth_string(), t);
        for i in 0..16u32 {
            let v: Vec<bool> = (0..4).map(|p| i >> p & 1 == 1).collect();
            assert_eq!(c.eval(&v), t.as_bytes()[i as usize] == b'1');
        }
    }
}
