// SPDX-License-Identifier: Apache-2.0

//! Reader for the supported SDF subset: DELAYFILE header with TIMESCALE and
//! DIVIDER, CELL/INSTANCE blocks, DELAY ABSOLUTE with IOPATH, COND-qualified
//! IOPATH and INTERCONNECT. Timing checks and other constructs are skipped
//! with a warning.

use log::warn;

use super::{AnnotatedDelays, CondExpr, Corner, SdfError};
use crate::netlist::{Driver, GateId, NetId, Netlist};
use crate::units::{scale_decimal, unit_fs};
use crate::Tick;

#[derive(Debug)]
enum Kind {
    Atom(String),
    Str(String),
    List(Vec<Node>),
}

#[derive(Debug)]
struct Node {
    kind: Kind,
    line: usize,
    col: usize,
}

impl Node {
    fn syntax(&self, msg: impl Into<String>) -> SdfError {
        SdfError::Syntax {
            line: self.line,
            col: self.col,
            msg: msg.into(),
        }
    }

    fn atom(&self) -> Option<&str> {
        match &self.kind {
            Kind::Atom(s) => Some(s),
            _ => None,
        }
    }

    fn list(&self) -> Option<&[Node]> {
        match &self.kind {
            Kind::List(v) => Some(v),
            _ => None,
        }
    }

    /// Keyword of a list whose first element is an atom, upper-cased.
    fn keyword(&self) -> Option<String> {
        self.list()?.first()?.atom().map(|s| s.to_ascii_uppercase())
    }

    fn to_text(&self, out: &mut String) {
        match &self.kind {
            Kind::Atom(s) => out.push_str(s),
            Kind::Str(s) => {
                out.push('"');
                out.push_str(s);
                out.push('"');
            }
            Kind::List(items) => {
                out.push('(');
                for (i, n) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    n.to_text(out);
                }
                out.push(')');
            }
        }
    }
}

struct Reader<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader {
            src: text.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn err(&self, msg: impl Into<String>) -> SdfError {
        SdfError::Syntax {
            line: self.line,
            col: self.col,
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn advance(&mut self) {
        if self.src[self.pos] == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        self.pos += 1;
    }

    fn skip_trivia(&mut self) -> Result<(), SdfError> {
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_whitespace() => self.advance(),
                Some(b'/') if self.src.get(self.pos + 1) == Some(&b'/') => {
                    while self.peek().is_some_and(|c| c != b'\n') {
                        self.advance();
                    }
                }
                Some(b'/') if self.src.get(self.pos + 1) == Some(&b'*') => {
                    let (line, col) = (self.line, self.col);
                    self.advance();
                    self.advance();
                    loop {
                        match self.peek() {
                            None => {
                                return Err(SdfError::Syntax {
                                    line,
                                    col,
                                    msg: "unterminated comment".into(),
                                })
                            }
                            Some(b'*') if self.src.get(self.pos + 1) == Some(&b'/') => {
                                self.advance();
                                self.advance();
                                break;
                            }
                            Some(_) => self.advance(),
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn node(&mut self) -> Result<Option<Node>, SdfError> {
        self.skip_trivia()?;
        let (line, col) = (self.line, self.col);
        let Some(c) = self.peek() else {
            return Ok(None);
        };
        let kind = match c {
            b'(' => {
                self.advance();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia()?;
                    match self.peek() {
                        None => {
                            return Err(SdfError::Syntax {
                                line,
                                col,
                                msg: "unbalanced '('".into(),
                            })
                        }
                        Some(b')') => {
                            self.advance();
                            break;
                        }
                        Some(_) => items.push(self.node()?.expect("input remains")),
                    }
                }
                Kind::List(items)
            }
            b')' => return Err(self.err("unexpected ')'")),
            b'"' => {
                self.advance();
                let start = self.pos;
                loop {
                    match self.peek() {
                        None => return Err(self.err("unterminated string")),
                        Some(b'"') => break,
                        Some(b'\\') => {
                            self.advance();
                            if self.peek().is_some() {
                                self.advance();
                            }
                        }
                        Some(_) => self.advance(),
                    }
                }
                let s = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
                self.advance();
                Kind::Str(s)
            }
            _ => {
                let start = self.pos;
                while let Some(c) = self.peek() {
                    if c.is_ascii_whitespace() || matches!(c, b'(' | b')' | b'"') {
                        break;
                    }
                    self.advance();
                }
                Kind::Atom(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
            }
        };
        Ok(Some(Node { kind, line, col }))
    }
}

struct Ctx<'a> {
    netlist: &'a Netlist,
    corner: Corner,
    timescale_fs: u64,
    divider: char,
    delays: AnnotatedDelays,
}

pub(super) fn parse_sdf(
    text: &str,
    netlist: &Netlist,
    corner: Corner,
) -> Result<AnnotatedDelays, SdfError> {
    let mut delays = AnnotatedDelays::zero(netlist);
    let mut reader = Reader::new(text);
    let Some(root) = reader.node()? else {
        return Ok(delays);
    };
    if let Some(extra) = reader.node()? {
        return Err(extra.syntax("content after DELAYFILE"));
    }
    if root.keyword().as_deref() != Some("DELAYFILE") {
        return Err(root.syntax("expected (DELAYFILE ...)"));
    }
    let items = &root.list().expect("keyword implies list")[1..];

    let mut timescale_fs = 1_000_000;
    let mut divider = '.';
    for item in items {
        match item.keyword().as_deref() {
            Some("TIMESCALE") => timescale_fs = parse_timescale(item)?,
            Some("DIVIDER") => {
                let args = &item.list().unwrap()[1..];
                divider = match args.first().and_then(Node::atom) {
                    Some(".") => '.',
                    Some("/") => '/',
                    _ => return Err(item.syntax("DIVIDER must be '.' or '/'")),
                };
            }
            _ => {}
        }
    }
    delays.timescale_fs = timescale_fs;

    let mut ctx = Ctx {
        netlist,
        corner,
        timescale_fs,
        divider,
        delays,
    };
    for item in items {
        match item.keyword().as_deref() {
            Some("CELL") => ctx.cell(item)?,
            Some(
                "TIMESCALE" | "DIVIDER" | "SDFVERSION" | "DESIGN" | "DATE" | "VENDOR" | "PROGRAM"
                | "VERSION" | "VOLTAGE" | "PROCESS" | "TEMPERATURE",
            ) => {}
            Some(other) => warn!("SDF {}:{}: skipping {other}", item.line, item.col),
            None => return Err(item.syntax("expected a header entry or CELL")),
        }
    }
    Ok(ctx.delays)
}

fn parse_timescale(item: &Node) -> Result<Tick, SdfError> {
    let mut text = String::new();
    for n in &item.list().unwrap()[1..] {
        match n.atom() {
            Some(a) => text.push_str(a),
            None => return Err(n.syntax("malformed TIMESCALE")),
        }
    }
    let split = text
        .find(|c: char| c.is_ascii_alphabetic())
        .ok_or_else(|| item.syntax("TIMESCALE without a unit"))?;
    let (num, unit) = text.split_at(split);
    let unit = unit_fs(unit).ok_or_else(|| item.syntax(format!("unknown time unit {unit}")))?;
    let num = if num.is_empty() { "1" } else { num };
    match scale_decimal(num, unit) {
        Some(fs) if fs > 0 && scale_decimal(num, unit * 1000) == Some(fs * 1000) => Ok(fs),
        _ => Err(item.syntax(format!("TIMESCALE {text} is not a whole number of femtoseconds"))),
    }
}

impl Ctx<'_> {
    fn cell(&mut self, cell: &Node) -> Result<(), SdfError> {
        let items = &cell.list().unwrap()[1..];
        let mut instance: Option<GateId> = None;
        let mut seen_instance = false;
        for item in items {
            match item.keyword().as_deref() {
                Some("CELLTYPE") => {}
                Some("INSTANCE") => {
                    seen_instance = true;
                    let args = &item.list().unwrap()[1..];
                    match args.first() {
                        None => instance = None,
                        Some(n) => {
                            let name = n.atom().ok_or_else(|| n.syntax("malformed INSTANCE"))?;
                            if name == "*" {
                                warn!("SDF {}:{}: wildcard INSTANCE skipped", n.line, n.col);
                                return Ok(());
                            }
                            instance = Some(self.netlist.gate_id(name).ok_or_else(|| {
                                SdfError::UnknownInstance {
                                    line: n.line,
                                    col: n.col,
                                    name: name.to_string(),
                                }
                            })?);
                        }
                    }
                }
                Some("DELAY") => {
                    if !seen_instance {
                        return Err(item.syntax("DELAY before INSTANCE"));
                    }
                    for spec in &item.list().unwrap()[1..] {
                        match spec.keyword().as_deref() {
                            Some("ABSOLUTE") => {
                                for entry in &spec.list().unwrap()[1..] {
                                    self.delay_entry(instance, entry)?;
                                }
                            }
                            Some(other) => {
                                warn!("SDF {}:{}: skipping DELAY {other}", spec.line, spec.col)
                            }
                            None => return Err(spec.syntax("malformed DELAY")),
                        }
                    }
                }
                Some(other) => warn!("SDF {}:{}: skipping {other}", item.line, item.col),
                None => return Err(item.syntax("malformed CELL entry")),
            }
        }
        Ok(())
    }

    fn delay_entry(&mut self, instance: Option<GateId>, entry: &Node) -> Result<(), SdfError> {
        match entry.keyword().as_deref() {
            Some("IOPATH") => self.iopath(instance, entry, None),
            Some("COND") => {
                let items = &entry.list().unwrap()[1..];
                let (last, expr_nodes) = items
                    .split_last()
                    .ok_or_else(|| entry.syntax("empty COND"))?;
                if last.keyword().as_deref() != Some("IOPATH") {
                    return Err(last.syntax("COND must wrap an IOPATH"));
                }
                let expr_nodes = match expr_nodes.first() {
                    Some(Node {
                        kind: Kind::Str(_), ..
                    }) => &expr_nodes[1..],
                    _ => expr_nodes,
                };
                let mut text = String::new();
                for n in expr_nodes {
                    if !text.is_empty() {
                        text.push(' ');
                    }
                    n.to_text(&mut text);
                }
                let cond = CondExpr::parse(&text).map_err(|m| entry.syntax(m))?;
                self.iopath(instance, last, Some(&cond))
            }
            Some("INTERCONNECT") => self.interconnect(entry),
            Some(other) => {
                warn!("SDF {}:{}: skipping {other}", entry.line, entry.col);
                Ok(())
            }
            None => Err(entry.syntax("malformed delay entry")),
        }
    }

    fn iopath(
        &mut self,
        instance: Option<GateId>,
        entry: &Node,
        cond: Option<&CondExpr>,
    ) -> Result<(), SdfError> {
        let items = &entry.list().unwrap()[1..];
        if items.len() < 2 {
            return Err(entry.syntax("IOPATH needs input and output ports"));
        }
        let Some(gate) = instance else {
            return Err(SdfError::UnknownInstance {
                line: entry.line,
                col: entry.col,
                name: String::new(),
            });
        };
        let Some(input) = items[0].atom() else {
            warn!(
                "SDF {}:{}: edge-qualified IOPATH skipped",
                items[0].line, items[0].col
            );
            return Ok(());
        };
        let output = items[1]
            .atom()
            .ok_or_else(|| items[1].syntax("malformed IOPATH output port"))?;
        let cell = self.netlist.cell_of(gate);
        let gate_name = &self.netlist.gate(gate).name;
        let unknown = |n: &Node, pin: &str| SdfError::UnknownPin {
            line: n.line,
            col: n.col,
            instance: gate_name.clone(),
            pin: pin.to_string(),
        };
        let pin = cell.pin_index(input).ok_or_else(|| unknown(&items[0], input))?;
        if output != cell.output {
            return Err(unknown(&items[1], output));
        }
        let (rise, fall) = self.rise_fall(&items[2..])?;

        // (side bit, required value) per literal
        let mut required = Vec::new();
        if let Some(cond) = cond {
            for lit in &cond.literals {
                let q = cell.pin_index(&lit.pin).ok_or_else(|| unknown(entry, &lit.pin))?;
                if q == pin {
                    return Err(SdfError::CondOnSwitchingPin {
                        line: entry.line,
                        col: entry.col,
                        instance: gate_name.clone(),
                        pin: input.to_string(),
                    });
                }
                let bit = if q < pin { q } else { q - 1 };
                required.push((bit, lit.value));
            }
        }
        for (row, slot) in self.delays.arc_mut(gate, pin).iter_mut().enumerate() {
            if required.iter().all(|&(bit, v)| (row >> bit & 1 == 1) == v) {
                if let Some(r) = rise {
                    slot[0] = r;
                }
                if let Some(f) = fall {
                    slot[1] = f;
                }
            }
        }
        Ok(())
    }

    fn interconnect(&mut self, entry: &Node) -> Result<(), SdfError> {
        let items = &entry.list().unwrap()[1..];
        if items.len() < 2 {
            return Err(entry.syntax("INTERCONNECT needs two ports"));
        }
        let from = items[0]
            .atom()
            .ok_or_else(|| items[0].syntax("malformed port"))?;
        let to = items[1]
            .atom()
            .ok_or_else(|| items[1].syntax("malformed port"))?;
        let bad = || SdfError::BadConnection {
            line: entry.line,
            col: entry.col,
            from: from.to_string(),
            to: to.to_string(),
        };

        let (sink_inst, sink_pin) = to.rsplit_once(self.divider).ok_or_else(bad)?;
        let sink = self.netlist.gate_id(sink_inst).ok_or(SdfError::UnknownInstance {
            line: items[1].line,
            col: items[1].col,
            name: sink_inst.to_string(),
        })?;
        let pin = self
            .netlist
            .cell_of(sink)
            .pin_index(sink_pin)
            .ok_or_else(|| SdfError::UnknownPin {
                line: items[1].line,
                col: items[1].col,
                instance: sink_inst.to_string(),
                pin: sink_pin.to_string(),
            })?;

        let source: NetId = match from.rsplit_once(self.divider) {
            Some((inst, port)) if self.netlist.gate_id(inst).is_some() => {
                let g = self.netlist.gate_id(inst).unwrap();
                if self.netlist.cell_of(g).output != port {
                    return Err(SdfError::UnknownPin {
                        line: items[0].line,
                        col: items[0].col,
                        instance: inst.to_string(),
                        pin: port.to_string(),
                    });
                }
                self.netlist.gate(g).output
            }
            _ => {
                let net = self.netlist.net_id(from).ok_or_else(bad)?;
                if !matches!(self.netlist.net(net).driver, Driver::Input(_)) {
                    return Err(bad());
                }
                net
            }
        };
        if self.netlist.gate(sink).inputs[pin] != source {
            return Err(bad());
        }
        let (rise, fall) = self.rise_fall(&items[2..])?;
        let delay = match (rise, fall) {
            (Some(r), Some(f)) => r.max(f),
            (Some(d), None) | (None, Some(d)) => d,
            (None, None) => return Ok(()),
        };
        self.delays.set_interconnect(sink, pin, delay);
        Ok(())
    }

    /// Output-rise and output-fall delays from a list of rvalues.
    fn rise_fall(&self, values: &[Node]) -> Result<(Option<Tick>, Option<Tick>), SdfError> {
        let parsed = values
            .iter()
            .map(|v| self.rvalue(v))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(match parsed.len() {
            0 => (None, None),
            1 => (parsed[0], parsed[0]),
            _ => (parsed[0], parsed[1]),
        })
    }

    /// One `( v )` or `( min:typ:max )` value converted to femtoseconds.
    fn rvalue(&self, node: &Node) -> Result<Option<Tick>, SdfError> {
        let items = node
            .list()
            .ok_or_else(|| node.syntax("expected a parenthesized delay value"))?;
        let mut text = String::new();
        for n in items {
            text.push_str(n.atom().ok_or_else(|| n.syntax("malformed delay value"))?);
        }
        let fields: Vec<&str> = text.split(':').collect();
        let pick = match fields.len() {
            1 => fields[0],
            3 => {
                let preferred = match self.corner {
                    Corner::Min => 0,
                    Corner::Typ => 1,
                    Corner::Max => 2,
                };
                [preferred, 1, 0, 2]
                    .into_iter()
                    .map(|i| fields[i])
                    .find(|f| !f.is_empty())
                    .unwrap_or("")
            }
            _ => return Err(node.syntax(format!("malformed delay triple {text:?}"))),
        };
        if pick.is_empty() {
            return Ok(None);
        }
        if pick.starts_with('-') {
            return Err(SdfError::NegativeDelay {
                line: node.line,
                col: node.col,
                value: pick.to_string(),
            });
        }
        scale_decimal(pick, self.timescale_fs)
            .map(Some)
            .ok_or_else(|| node.syntax(format!("malformed number {pick:?}")))
    }
}
