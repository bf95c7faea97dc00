// SPDX-License-Identifier: Apache-2.0

//! COND expressions: conjunctions of pin literals such as `A && !B`,
//! `(C == 1'b1) && D` or `E==0`.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Literal {
    pub pin: String,
    pub value: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CondExpr {
    pub literals: Vec<Literal>,
}

impl CondExpr {
    pub fn parse(text: &str) -> Result<Self, String> {
        let tokens = tokenize(text)?;
        let mut p = Parser { tokens, pos: 0 };
        let literals = p.conjunction()?;
        if p.pos != p.tokens.len() {
            return Err(format!("unexpected {:?} in condition", p.tokens[p.pos]));
        }
        Ok(CondExpr { literals })
    }

    /// Evaluates the conjunction with `value_of(pin)` supplying pin values.
    pub fn holds(&self, mut value_of: impl FnMut(&str) -> bool) -> bool {
        self.literals.iter().all(|l| value_of(&l.pin) == l.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Const(bool),
    Not,
    Eq,
    Ne,
    And,
    Open,
    Close,
}

fn tokenize(text: &str) -> Result<Vec<Tok>, String> {
    let b = text.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i];
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'(' => {
                out.push(Tok::Open);
                i += 1;
            }
            b')' => {
                out.push(Tok::Close);
                i += 1;
            }
            b'!' | b'~' if b.get(i + 1) == Some(&b'=') => {
                out.push(Tok::Ne);
                i += 2;
            }
            b'!' | b'~' => {
                out.push(Tok::Not);
                i += 1;
            }
            b'=' if b.get(i + 1) == Some(&b'=') => {
                out.push(Tok::Eq);
                i += 2;
            }
            b'&' => {
                out.push(Tok::And);
                i += if b.get(i + 1) == Some(&b'&') { 2 } else { 1 };
            }
            b'|' | b'^' => return Err("only conjunctions are supported in COND".into()),
            b'0'..=b'9' | b'\'' => {
                let start = i;
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'\'') {
                    i += 1;
                }
                out.push(Tok::Const(parse_const(&text[start..i])?));
            }
            _ if c.is_ascii_alphabetic() || c == b'_' || c == b'\\' => {
                let start = i;
                while i < b.len()
                    && (b[i].is_ascii_alphanumeric() || matches!(b[i], b'_' | b'[' | b']' | b'\\'))
                {
                    i += 1;
                }
                out.push(Tok::Ident(text[start..i].to_string()));
            }
            _ => return Err(format!("unexpected character {:?} in condition", c as char)),
        }
    }
    Ok(out)
}

fn parse_const(s: &str) -> Result<bool, String> {
    let digits = match s.find('\'') {
        Some(i) => {
            let rest = &s[i + 1..];
            rest.strip_prefix(['b', 'B', 'h', 'H', 'd', 'D', 'o', 'O']).unwrap_or(rest)
        }
        None => s,
    };
    match digits {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(format!("unsupported constant {s:?} in condition")),
    }
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn conjunction(&mut self) -> Result<Vec<Literal>, String> {
        let mut lits = self.term()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            lits.extend(self.term()?);
        }
        Ok(lits)
    }

    fn term(&mut self) -> Result<Vec<Literal>, String> {
        let mut negate = false;
        while self.peek() == Some(&Tok::Not) {
            self.pos += 1;
            negate = !negate;
        }
        let mut lits = match self.bump() {
            Some(Tok::Ident(pin)) => vec![Literal { pin, value: true }],
            Some(Tok::Open) => {
                let inner = self.conjunction()?;
                if self.bump() != Some(Tok::Close) {
                    return Err("unbalanced parenthesis in condition".into());
                }
                inner
            }
            Some(t) => return Err(format!("unexpected {t:?} in condition")),
            None => return Err("condition ends early".into()),
        };
        if let Some(op @ (Tok::Eq | Tok::Ne)) = self.peek().cloned() {
            self.pos += 1;
            let c = match self.bump() {
                Some(Tok::Const(c)) => c,
                _ => return Err("expected 0 or 1 after comparison".into()),
            };
            if lits.len() != 1 {
                return Err("comparison applies to a single pin".into());
            }
            lits[0].value = lits[0].value == (c == (op == Tok::Eq));
        }
        if negate {
            if lits.len() != 1 {
                return Err("negated groups are not supported in COND".into());
            }
            lits[0].value = !lits[0].value;
        }
        Ok(lits)
    }
}
