// SPDX-License-Identifier: Apache-2.0

//! Scalar-only VCD reading and writing.

use std::collections::HashMap;
use std::io::{self, Write};

use vcd::{Command, IdCode, ScopeItem, TimescaleUnit, Value};

use super::{WaveRef, Waveform, WaveformError};
use crate::netlist::{Driver, Netlist};
use crate::Tick;

/// Whole-run input waveforms in netlist input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VcdStimulus {
    pub inputs: Vec<Waveform>,
    /// Time of the last `#` mark, in femtoseconds.
    pub duration: Tick,
}

/// Reads the waveform of every primary/pseudo-primary input of `netlist`.
pub fn parse_vcd(text: &str, netlist: &Netlist) -> Result<VcdStimulus, WaveformError> {
    let names: Vec<&str> = netlist
        .inputs
        .iter()
        .map(|&n| {
            debug_assert!(matches!(netlist.net(n).driver, Driver::Input(_)));
            netlist.net(n).name.as_str()
        })
        .collect();
    let (inputs, duration) = parse_vcd_signals(text, &names)?;
    Ok(VcdStimulus { inputs, duration })
}

fn syntax(line: u64, e: impl ToString) -> WaveformError {
    WaveformError::VcdSyntax {
        line,
        msg: e.to_string(),
    }
}

fn io_error(e: io::Error, line: u64) -> WaveformError {
    match e.get_ref().and_then(|i| i.downcast_ref::<vcd::ParseError>()) {
        Some(p) => syntax(p.line(), p.kind()),
        None => syntax(line, e),
    }
}

fn timescale_fs(ts: Option<(u32, TimescaleUnit)>) -> Result<u64, String> {
    let Some((n, unit)) = ts else {
        return Ok(1_000_000);
    };
    let per_unit = TimescaleUnit::FS.divisor() / unit.divisor();
    u64::from(n)
        .checked_mul(per_unit)
        .ok_or_else(|| format!("timescale {n} {unit} is too large"))
}

fn collect_vars<'a>(items: &'a [ScopeItem], out: &mut HashMap<String, &'a vcd::Var>) {
    for item in items {
        match item {
            ScopeItem::Var(v) => {
                let name = match &v.index {
                    Some(idx) => format!("{}{}", v.reference, idx),
                    None => v.reference.clone(),
                };
                out.entry(name).or_insert(v);
            }
            ScopeItem::Scope(s) => collect_vars(&s.items, out),
            _ => {}
        }
    }
}

/// Reads the named scalar signals. Variables are matched by their reference
/// name (plus bit index, if declared), searching scopes depth-first; the
/// first declaration of a name wins.
pub fn parse_vcd_signals(
    text: &str,
    names: &[&str],
) -> Result<(Vec<Waveform>, Tick), WaveformError> {
    let mut parser = vcd::Parser::new(text.as_bytes());
    let header = parser
        .parse_header()
        .map_err(|e| io_error(e, parser.line()))?;
    let scale = timescale_fs(header.timescale).map_err(|m| syntax(1, m))?;

    let mut vars = HashMap::new();
    collect_vars(&header.items, &mut vars);
    let mut by_code: HashMap<IdCode, Vec<usize>> = HashMap::new();
    for (i, name) in names.iter().enumerate() {
        let v = vars
            .get(*name)
            .ok_or_else(|| WaveformError::MissingInput(name.to_string()))?;
        if v.size != 1 {
            return Err(WaveformError::VectorInput {
                name: name.to_string(),
                width: v.size,
            });
        }
        by_code.entry(v.code).or_default().push(i);
    }

    let mut initial = vec![false; names.len()];
    let mut value = vec![false; names.len()];
    let mut times: Vec<Vec<Tick>> = vec![Vec::new(); names.len()];
    let mut now: Tick = 0;
    let mut raw_now: u64 = 0;

    while let Some(cmd) = parser.next() {
        let cmd = cmd.map_err(|e| io_error(e, parser.line()))?;
        match cmd {
            Command::Timestamp(t) => {
                if t < raw_now {
                    return Err(WaveformError::NonMonotonicTime {
                        line: parser.line(),
                        time: t,
                        previous: raw_now,
                    });
                }
                raw_now = t;
                now = t
                    .checked_mul(scale)
                    .ok_or_else(|| syntax(parser.line(), format!("time #{t} overflows")))?;
            }
            Command::ChangeScalar(code, v) => {
                let Some(sigs) = by_code.get(&code) else {
                    continue;
                };
                let bit = v == Value::V1;
                for &i in sigs {
                    if now == 0 {
                        initial[i] = bit;
                        value[i] = bit;
                    } else if bit != value[i] {
                        // Several changes at one instant: the last one wins.
                        if times[i].last() == Some(&now) {
                            times[i].pop();
                        } else {
                            times[i].push(now);
                        }
                        value[i] = bit;
                    }
                }
            }
            Command::ChangeVector(code, _) if by_code.contains_key(&code) => {
                return Err(syntax(parser.line(), "vector change on a scalar input"));
            }
            _ => {}
        }
    }

    let waves = initial
        .into_iter()
        .zip(times)
        .map(|(init, t)| Waveform::new(init, t))
        .collect();
    Ok((waves, now))
}

/// Writes `signals` as 1 fs scalar wires under one `top` scope, ending with
/// a `#end` mark so the duration survives a round trip.
pub fn write_vcd_waveforms<W: Write>(
    out: W,
    signals: &[(&str, WaveRef<'_>)],
    end: Tick,
) -> io::Result<()> {
    let mut w = vcd::Writer::new(out);
    w.timescale(1, TimescaleUnit::FS)?;
    w.add_module("top")?;
    let ids = signals
        .iter()
        .map(|(name, _)| w.add_wire(1, name))
        .collect::<io::Result<Vec<_>>>()?;
    w.upscope()?;
    w.enddefinitions()?;

    let bit = |b: bool| if b { Value::V1 } else { Value::V0 };
    w.timestamp(0)?;
    for (id, (_, wave)) in ids.iter().zip(signals) {
        w.change_scalar(*id, bit(wave.initial))?;
    }
    let mut changes: Vec<(Tick, usize)> = Vec::new();
    for (i, (_, wave)) in signals.iter().enumerate() {
        changes.extend(wave.times.iter().map(|&t| (t, i)));
    }
    changes.sort_unstable();
    let mut value: Vec<bool> = signals.iter().map(|(_, w)| w.initial).collect();
    let mut last = 0;
    for (t, i) in changes {
        if t != last {
            w.timestamp(t)?;
            last = t;
        }
        value[i] = !value[i];
        w.change_scalar(ids[i], bit(value[i]))?;
    }
    if end > last {
        w.timestamp(end)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(timescale: &str, body: &str) -> String {
        format!(
            "$timescale {timescale} $end\n$scope module tb $end\n$var wire 1 ! a $end\n\
             $upscope $end\n$enddefinitions $end\n{body}\n"
        )
    }

    fn read_a(text: &str) -> Result<(Vec<Waveform>, Tick), WaveformError> {
        parse_vcd_signals(text, &["a"])
    }

    #[test]
    fn examples() {
        let (w, d) = read_a(&doc("1ps", "#0 0! #10 1! #25 0!")).unwrap();
        assert_eq!(w[0], Waveform::new(false, vec![10_000, 25_000]));
        assert_eq!(d, 25_000);
        let (w, _) = read_a(&doc("1ps", "#0 x! #5 1!")).unwrap();
        assert_eq!(w[0], Waveform::new(false, vec![5_000]));
        let (w, _) = read_a(&doc("1ps", "#0 1! #7 1!")).unwrap();
        assert_eq!(w[0], Waveform::constant(true));
    }

    #[test]
    fn timescales() {
        let (w, _) = read_a(&doc("10 ns", "#0 0! #3 1!")).unwrap();
        assert_eq!(w[0].times, vec![30_000_000]);
        let (w, _) = read_a(&doc("100fs", "#0 0! #3 1!")).unwrap();
        assert_eq!(w[0].times, vec![300]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_vcd_signals(&doc("1ps", "#0 0!"), &["b"]),
            Err(WaveformError::MissingInput(n)) if n == "b"
        ));
        let vec_doc = "$scope module t $end\n$var wire 4 ! a $end\n$upscope $end\n\
                       $enddefinitions $end\n#0 b0000 !\n";
        assert!(matches!(
            read_a(vec_doc),
            Err(WaveformError::VectorInput { width: 4, .. })
        ));
        assert!(matches!(
            read_a(&doc("1ps", "#0 0!\n#10 1!\n#5 0!")),
            Err(WaveformError::NonMonotonicTime {
                line: 8,
                time: 5,
                previous: 10
            })
        ));
        assert!(matches!(
            read_a(&doc("1ps", "#0 0! ?junk")),
            Err(WaveformError::VcdSyntax { .. })
        ));
    }

    #[test]
    fn deterministic() {
        let d = doc("1ns", "#0 0! #1 1! #2 0! #2 1! #9 0!");
        assert_eq!(read_a(&d).unwrap(), read_a(&d).unwrap());
        assert_eq!(read_a(&d).unwrap().0[0].times, vec![1_000_000, 9_000_000]);
    }

    #[test]
    fn round_trip() {
        let a = Waveform::new(true, vec![5, 17, 40]);
        let b = Waveform::new(false, vec![]);
        let c = Waveform::new(false, vec![17, 90]);
        let mut buf = Vec::new();
        write_vcd_waveforms(
            &mut buf,
            &[("a", a.as_ref()), ("b[3]", b.as_ref()), ("c", c.as_ref())],
            100,
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let (w, d) = parse_vcd_signals(&text, &["a", "b[3]", "c"]).unwrap();
        assert_eq!(w, vec![a, b, c]);
        assert_eq!(d, 100);
    }

    #[test]
    fn empty_selection_is_header_only() {
        let mut buf = Vec::new();
        write_vcd_waveforms(&mut buf, &[], 0).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("$enddefinitions"));
        assert!(!text.contains("$var"));
        assert_eq!(parse_vcd_signals(&text, &[]).unwrap(), (vec![], 0));
    }
}
