//! Import of SNDlib native network files.
//!
//! Only the `NODES`, `LINKS` and `DEMANDS` sections are read; any other
//! parenthesized section is skipped. Each node becomes a switch with one
//! host (ingress and egress) of the same id. A link's bandwidth is its
//! pre-installed capacity when positive, else its largest module capacity.
//! Each demand becomes a flow whose rate is the demand value.

use std::collections::BTreeMap;

use sdn_energy::{Edge, Flow, HostId, Switch, Topology};

use crate::format::Instance;

/// Power and table figures SNDlib files do not carry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImportDefaults {
    pub switch_watts: f64,
    pub link_watts: f64,
    pub rule_capacity: u32,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct SndlibError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
struct Tok {
    text: String,
    line: usize,
    column: usize,
}

fn tokenize(text: &str) -> Vec<Tok> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim_start().starts_with('?') {
            continue;
        }
        let content = raw.split('#').next().unwrap_or("");
        let mut word = String::new();
        let mut start = 0;
        for (col, ch) in content.chars().enumerate() {
            if ch.is_whitespace() || ch == '(' || ch == ')' {
                if !word.is_empty() {
                    out.push(Tok {
                        text: std::mem::take(&mut word),
                        line: i + 1,
                        column: start + 1,
                    });
                }
                if !ch.is_whitespace() {
                    out.push(Tok {
                        text: ch.to_string(),
                        line: i + 1,
                        column: col + 1,
                    });
                }
            } else {
                if word.is_empty() {
                    start = col;
                }
                word.push(ch);
            }
        }
        if !word.is_empty() {
            out.push(Tok {
                text: word,
                line: i + 1,
                column: start + 1,
            });
        }
    }
    out
}

struct Stream {
    toks: Vec<Tok>,
    at: usize,
    last: (usize, usize),
}

impl Stream {
    fn err_at(tok: &Tok, message: impl Into<String>) -> SndlibError {
        SndlibError {
            line: tok.line,
            column: tok.column,
            message: message.into(),
        }
    }

    fn next(&mut self, what: &str) -> Result<Tok, SndlibError> {
        match self.toks.get(self.at) {
            Some(t) => {
                self.at += 1;
                Ok(t.clone())
            }
            None => Err(SndlibError {
                line: self.last.0,
                column: self.last.1,
                message: format!("expected {what}, found end of file"),
            }),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at)
    }

    fn expect(&mut self, text: &str) -> Result<(), SndlibError> {
        let t = self.next(&format!("`{text}`"))?;
        if t.text != text {
            return Err(Self::err_at(&t, format!("expected `{text}`, found `{}`", t.text)));
        }
        Ok(())
    }

    fn number(&mut self, what: &str) -> Result<f64, SndlibError> {
        let t = self.next(what)?;
        match t.text.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(Self::err_at(&t, format!("expected {what}, found `{}`", t.text))),
        }
    }

    /// Consumes tokens through the `)` matching an already consumed `(`.
    fn skip_group(&mut self) -> Result<(), SndlibError> {
        let mut depth = 1;
        while depth > 0 {
            let t = self.next("`)`")?;
            match t.text.as_str() {
                "(" => depth += 1,
                ")" => depth -= 1,
                _ => {}
            }
        }
        Ok(())
    }
}

pub fn import_sndlib(text: &str, defaults: ImportDefaults) -> Result<Instance, SndlibError> {
    let toks = tokenize(text);
    let last = toks.last().map_or((1, 1), |t| (t.line, t.column + t.text.len()));
    let mut s = Stream { toks, at: 0, last };

    let mut nodes: BTreeMap<String, usize> = BTreeMap::new();
    let mut t = Topology::default();
    let mut flows = Vec::new();
    let mut seen = (false, false, false);

    while let Some(head) = s.peek().cloned() {
        s.at += 1;
        s.expect("(")?;
        match head.text.as_str() {
            "NODES" => {
                seen.0 = true;
                while s.peek().is_some_and(|t| t.text != ")") {
                    let name = s.next("node name")?;
                    s.expect("(")?;
                    s.skip_group()?;
                    let id = t.switches.len();
                    if nodes.insert(name.text.clone(), id).is_some() {
                        return Err(Stream::err_at(&name, format!("duplicate node `{}`", name.text)));
                    }
                    t.switches
                        .push(Switch::new(id, defaults.switch_watts, defaults.rule_capacity));
                    t.ingress_hosts.insert(id as HostId, id);
                    t.egress_hosts.insert(id as HostId, id);
                }
            }
            "LINKS" => {
                seen.1 = true;
                while s.peek().is_some_and(|t| t.text != ")") {
                    let name = s.next("link name")?;
                    let (a, b) = endpoints(&mut s, &nodes)?;
                    let pre = s.number("pre-installed capacity")?;
                    for what in ["pre-installed capacity cost", "routing cost", "setup cost"] {
                        s.number(what)?;
                    }
                    s.expect("(")?;
                    let mut modules: f64 = 0.0;
                    while s.peek().is_some_and(|t| t.text != ")") {
                        modules = modules.max(s.number("module capacity")?);
                        s.number("module cost")?;
                    }
                    s.expect(")")?;
                    let bandwidth = if pre > 0.0 { pre } else { modules };
                    if bandwidth <= 0.0 {
                        return Err(Stream::err_at(&name, format!("link `{}` has no capacity", name.text)));
                    }
                    if t.edge_between(a, b).is_some() {
                        return Err(Stream::err_at(
                            &name,
                            format!("link `{}` is parallel to an earlier link", name.text),
                        ));
                    }
                    if a == b {
                        return Err(Stream::err_at(&name, format!("link `{}` is a self-loop", name.text)));
                    }
                    t.edges.push(Edge::new(a, b, bandwidth, defaults.link_watts));
                }
            }
            "DEMANDS" => {
                seen.2 = true;
                while s.peek().is_some_and(|t| t.text != ")") {
                    let name = s.next("demand name")?;
                    let (a, b) = endpoints(&mut s, &nodes)?;
                    s.number("routing unit")?;
                    let rate = s.number("demand value")?;
                    s.next("max path length")?;
                    if rate <= 0.0 {
                        return Err(Stream::err_at(&name, format!("demand `{}` is not positive", name.text)));
                    }
                    if a == b {
                        return Err(Stream::err_at(
                            &name,
                            format!("demand `{}` joins a node to itself", name.text),
                        ));
                    }
                    flows.push(Flow::new(flows.len(), a, b, rate));
                }
            }
            _ => {
                s.skip_group()?;
                continue;
            }
        }
        s.expect(")")?;
    }
    for (ok, section) in [(seen.0, "NODES"), (seen.1, "LINKS"), (seen.2, "DEMANDS")] {
        if !ok {
            return Err(SndlibError {
                line: last.0,
                column: last.1,
                message: format!("file has no {section} section"),
            });
        }
    }
    Ok(Instance {
        topology: t,
        flows,
        placement: None,
    })
}

fn endpoints(s: &mut Stream, nodes: &BTreeMap<String, usize>) -> Result<(usize, usize), SndlibError> {
    s.expect("(")?;
    let mut ends = [0; 2];
    for end in &mut ends {
        let t = s.next("node name")?;
        *end = *nodes
            .get(&t.text)
            .ok_or_else(|| Stream::err_at(&t, format!("unknown node `{}`", t.text)))?;
    }
    s.expect(")")?;
    Ok((ends[0], ends[1]))
}
