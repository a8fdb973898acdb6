//! Native line-oriented instance format.
//!
//! See `docs/FORMAT.md` for the grammar. [`write_instance`] produces the
//! canonical form; [`parse_instance`] accepts comments, blank lines and any
//! run of spaces or tabs between tokens.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use sdn_energy::placement::PlacementInstance;
use sdn_energy::{Edge, FatTreeRole, Flow, HostId, Layer, Switch, Topology};
use sha2::{Digest, Sha256};

pub const MAGIC: &str = "sdn-energy-instance";
pub const VERSION: u32 = 1;

/// Topology, flows and an optional VM placement problem.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Instance {
    pub topology: Topology,
    pub flows: Vec<Flow>,
    pub placement: Option<PlacementInstance>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("expected header `{MAGIC} <version>`")]
    MissingHeader,
    #[error("unsupported format version {0} (this build reads version {VERSION})")]
    UnsupportedVersion(String),
    #[error("file ends before the {0} section")]
    MissingSection(&'static str),
    #[error("file ends inside the {0} section")]
    TruncatedSection(&'static str),
    #[error("expected {expected}, found `{found}`")]
    Unexpected { expected: String, found: String },
    #[error("expected {0}, found end of line")]
    MissingToken(String),
    #[error("invalid number `{0}`")]
    BadNumber(String),
    #[error("non-finite value `{0}`")]
    NonFinite(String),
    #[error("{kind} id {found} out of sequence, expected {expected}")]
    OutOfSequence {
        kind: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("host {0} listed twice for the same direction")]
    DuplicateHost(HostId),
    #[error("trailing token `{0}`")]
    Trailing(String),
}

#[derive(Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    column: usize,
}

struct Line<'a> {
    number: usize,
    tokens: Vec<Token<'a>>,
    /// Column just past the last character, for end-of-line errors.
    end: usize,
}

impl<'a> Line<'a> {
    fn err(&self, column: usize, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.number,
            column,
            kind,
        }
    }

    fn token(&self, i: usize, what: &str) -> Result<Token<'a>, ParseError> {
        self.tokens
            .get(i)
            .copied()
            .ok_or_else(|| self.err(self.end, ParseErrorKind::MissingToken(what.to_string())))
    }

    fn keyword(&self, i: usize, word: &str) -> Result<(), ParseError> {
        let t = self.token(i, &format!("`{word}`"))?;
        if t.text != word {
            return Err(self.err(
                t.column,
                ParseErrorKind::Unexpected {
                    expected: format!("`{word}`"),
                    found: t.text.to_string(),
                },
            ));
        }
        Ok(())
    }

    fn int<T: std::str::FromStr>(&self, i: usize, what: &str) -> Result<T, ParseError> {
        let t = self.token(i, what)?;
        t.text
            .parse()
            .map_err(|_| self.err(t.column, ParseErrorKind::BadNumber(t.text.to_string())))
    }

    fn real(&self, i: usize, what: &str) -> Result<f64, ParseError> {
        let t = self.token(i, what)?;
        let x: f64 = t
            .text
            .parse()
            .map_err(|_| self.err(t.column, ParseErrorKind::BadNumber(t.text.to_string())))?;
        if !x.is_finite() {
            return Err(self.err(t.column, ParseErrorKind::NonFinite(t.text.to_string())));
        }
        Ok(x)
    }

    fn done(&self, n: usize) -> Result<(), ParseError> {
        match self.tokens.get(n) {
            Some(t) => Err(self.err(t.column, ParseErrorKind::Trailing(t.text.to_string()))),
            None => Ok(()),
        }
    }
}

struct Cursor<'a> {
    lines: Vec<Line<'a>>,
    at: usize,
    last_line: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        let mut lines = Vec::new();
        let mut last_line = 0;
        for (i, raw) in text.lines().enumerate() {
            last_line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            let mut tokens = Vec::new();
            let mut start = None;
            for (col, ch) in content.char_indices() {
                match (ch.is_whitespace(), start) {
                    (true, Some(s)) => {
                        tokens.push(Token {
                            text: &content[s..col],
                            column: content[..s].chars().count() + 1,
                        });
                        start = None;
                    }
                    (false, None) => start = Some(col),
                    _ => {}
                }
            }
            if let Some(s) = start {
                tokens.push(Token {
                    text: &content[s..],
                    column: content[..s].chars().count() + 1,
                });
            }
            if !tokens.is_empty() {
                lines.push(Line {
                    number: i + 1,
                    tokens,
                    end: raw.chars().count() + 1,
                });
            }
        }
        Cursor {
            lines,
            at: 0,
            last_line,
        }
    }

    fn peek(&self) -> Option<&Line<'a>> {
        self.lines.get(self.at)
    }

    fn eof(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.last_line + 1,
            column: 1,
            kind,
        }
    }

    /// Next line, which must open `section`.
    fn section(&mut self, section: &'static str) -> Result<&Line<'a>, ParseError> {
        let Some(line) = self.lines.get(self.at) else {
            return Err(self.eof(ParseErrorKind::MissingSection(section)));
        };
        line.keyword(0, section)?;
        self.at += 1;
        Ok(&self.lines[self.at - 1])
    }

    /// Next body line of `section`.
    fn body(&mut self, section: &'static str) -> Result<&Line<'a>, ParseError> {
        let Some(line) = self.lines.get(self.at) else {
            return Err(self.eof(ParseErrorKind::TruncatedSection(section)));
        };
        if SECTIONS.contains(&line.tokens[0].text) {
            return Err(line.err(line.tokens[0].column, ParseErrorKind::TruncatedSection(section)));
        }
        self.at += 1;
        Ok(&self.lines[self.at - 1])
    }
}

const SECTIONS: [&str; 9] = [
    "SWITCHES",
    "EDGES",
    "HOSTS",
    "FLOWS",
    "PLACEMENT",
    "RESOURCES",
    "TRAFFIC",
    "HOPS",
    "END",
];

fn parse_layer(line: &Line, i: usize) -> Result<Layer, ParseError> {
    let t = line.token(i, "layer")?;
    match t.text {
        "core" => Ok(Layer::Core),
        "aggregation" => Ok(Layer::Aggregation),
        "edge" => Ok(Layer::Edge),
        other => Err(line.err(
            t.column,
            ParseErrorKind::Unexpected {
                expected: "`core`, `aggregation` or `edge`".into(),
                found: other.into(),
            },
        )),
    }
}

fn sequence(line: &Line, kind: &'static str, expected: usize) -> Result<(), ParseError> {
    let found: usize = line.int(0, &format!("{kind} id"))?;
    if found != expected {
        return Err(line.err(
            line.tokens[0].column,
            ParseErrorKind::OutOfSequence { kind, expected, found },
        ));
    }
    Ok(())
}

pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let mut c = Cursor::new(text);
    let header = c.peek().ok_or(ParseError {
        line: 1,
        column: 1,
        kind: ParseErrorKind::MissingHeader,
    })?;
    if header.tokens[0].text != MAGIC {
        return Err(header.err(header.tokens[0].column, ParseErrorKind::MissingHeader));
    }
    let version = header.token(1, "format version")?;
    if version.text != VERSION.to_string() {
        return Err(header.err(
            version.column,
            ParseErrorKind::UnsupportedVersion(version.text.to_string()),
        ));
    }
    header.done(2)?;
    c.at += 1;

    let mut t = Topology::default();
    let head = c.section("SWITCHES")?;
    let n: usize = head.int(1, "switch count")?;
    if head.tokens.len() > 2 {
        head.keyword(2, "fat-tree")?;
        t.fat_tree_k = Some(head.int(3, "fat-tree arity")?);
        head.done(4)?;
    } else {
        head.done(2)?;
    }
    for id in 0..n {
        let line = c.body("SWITCHES")?;
        sequence(line, "switch", id)?;
        let mut s = Switch::new(id, line.real(1, "switch power")?, line.int(2, "rule capacity")?);
        if line.tokens.len() > 3 {
            let layer = parse_layer(line, 3)?;
            let pod_tok = line.token(4, "pod or `-`")?;
            let pod = if pod_tok.text == "-" {
                None
            } else {
                Some(line.int(4, "pod")?)
            };
            s.role = Some(FatTreeRole {
                layer,
                pod,
                index: line.int(5, "index")?,
            });
            line.done(6)?;
        } else {
            line.done(3)?;
        }
        t.switches.push(s);
    }

    let head = c.section("EDGES")?;
    let m: usize = head.int(1, "edge count")?;
    head.done(2)?;
    for _ in 0..m {
        let line = c.body("EDGES")?;
        t.edges.push(Edge::new(
            line.int(0, "endpoint")?,
            line.int(1, "endpoint")?,
            line.real(2, "bandwidth")?,
            line.real(3, "link power")?,
        ));
        line.done(4)?;
    }

    let head = c.section("HOSTS")?;
    let h: usize = head.int(1, "host line count")?;
    head.done(2)?;
    for _ in 0..h {
        let line = c.body("HOSTS")?;
        let host: HostId = line.int(0, "host id")?;
        let dir = line.token(1, "`ingress`, `egress` or `both`")?;
        let switch = line.int(2, "switch")?;
        line.done(3)?;
        let (ingress, egress) = match dir.text {
            "ingress" => (true, false),
            "egress" => (false, true),
            "both" => (true, true),
            other => {
                return Err(line.err(
                    dir.column,
                    ParseErrorKind::Unexpected {
                        expected: "`ingress`, `egress` or `both`".into(),
                        found: other.into(),
                    },
                ))
            }
        };
        let dup = (ingress && t.ingress_hosts.insert(host, switch).is_some())
            | (egress && t.egress_hosts.insert(host, switch).is_some());
        if dup {
            return Err(line.err(1, ParseErrorKind::DuplicateHost(host)));
        }
    }

    let head = c.section("FLOWS")?;
    let f: usize = head.int(1, "flow count")?;
    head.done(2)?;
    let mut flows = Vec::with_capacity(f);
    for _ in 0..f {
        let line = c.body("FLOWS")?;
        flows.push(Flow::new(
            line.int(0, "flow id")?,
            line.int(1, "source")?,
            line.int(2, "destination")?,
            line.real(3, "rate")?,
        ));
        line.done(4)?;
    }

    let placement = match c.peek() {
        Some(line) if line.tokens[0].text == "PLACEMENT" => Some(parse_placement(&mut c)?),
        _ => None,
    };
    let end = c.section("END")?;
    end.done(1)?;
    if let Some(line) = c.peek() {
        return Err(line.err(
            line.tokens[0].column,
            ParseErrorKind::Trailing(line.tokens[0].text.to_string()),
        ));
    }
    Ok(Instance {
        topology: t,
        flows,
        placement,
    })
}

fn parse_placement(c: &mut Cursor) -> Result<PlacementInstance, ParseError> {
    let head = c.section("PLACEMENT")?;
    let r: usize = head.int(1, "resource count")?;
    let p: usize = head.int(2, "PM count")?;
    let v: usize = head.int(3, "VM count")?;
    head.done(4)?;
    let names = c.section("RESOURCES")?;
    let resource_names: Vec<String> = (0..r)
        .map(|i| names.token(i + 1, "resource name").map(|t| t.text.to_string()))
        .collect::<Result<_, _>>()?;
    names.done(r + 1)?;
    let row = |c: &mut Cursor, section: &'static str, what: &str| -> Result<Vec<f64>, ParseError> {
        let line = c.body(section)?;
        line.keyword(0, section)?;
        let out = (0..r).map(|i| line.real(i + 1, what)).collect::<Result<_, _>>()?;
        line.done(r + 1)?;
        Ok(out)
    };
    let mut pm_resources = Vec::with_capacity(p);
    for _ in 0..p {
        pm_resources.push(row(c, "PM", "capacity")?);
    }
    let mut vm_demands = Vec::with_capacity(v);
    for _ in 0..v {
        vm_demands.push(row(c, "VM", "demand")?);
    }
    let head = c.section("TRAFFIC")?;
    let q: usize = head.int(1, "traffic entry count")?;
    head.done(2)?;
    let mut vm_traffic = vec![vec![0.0; v]; v];
    for _ in 0..q {
        let line = c.body("TRAFFIC")?;
        let a: usize = line.int(0, "VM")?;
        let b: usize = line.int(1, "VM")?;
        for (i, x) in [(0, a), (1, b)] {
            if x >= v {
                return Err(line.err(
                    line.tokens[i].column,
                    ParseErrorKind::Unexpected {
                        expected: format!("VM index below {v}"),
                        found: x.to_string(),
                    },
                ));
            }
        }
        vm_traffic[a][b] = line.real(2, "traffic rate")?;
        line.done(3)?;
    }
    let head = c.section("HOPS")?;
    head.done(1)?;
    let mut pm_hops = Vec::with_capacity(p);
    for _ in 0..p {
        let line = c.body("HOPS")?;
        pm_hops.push(
            (0..p)
                .map(|i| line.int(i, "hop count"))
                .collect::<Result<Vec<u32>, _>>()?,
        );
        line.done(p)?;
    }
    Ok(PlacementInstance {
        pm_resources,
        vm_demands,
        resource_names,
        vm_traffic,
        pm_hops,
    })
}

/// Canonical serialization: single spaces, `\n` line ends, reals in
/// shortest round-trip decimal form, hosts by id.
pub fn write_instance(inst: &Instance) -> String {
    let t = &inst.topology;
    let mut out = String::new();
    let w = &mut out;
    writeln!(w, "{MAGIC} {VERSION}").unwrap();
    match t.fat_tree_k {
        Some(k) => writeln!(w, "SWITCHES {} fat-tree {k}", t.switches.len()).unwrap(),
        None => writeln!(w, "SWITCHES {}", t.switches.len()).unwrap(),
    }
    for s in &t.switches {
        write!(w, "{} {} {}", s.id, s.power, s.rule_capacity).unwrap();
        if let Some(r) = s.role {
            let pod = r.pod.map_or("-".to_string(), |p| p.to_string());
            write!(w, " {} {pod} {}", r.layer.name(), r.index).unwrap();
        }
        w.push('\n');
    }
    writeln!(w, "EDGES {}", t.edges.len()).unwrap();
    for e in &t.edges {
        writeln!(w, "{} {} {} {}", e.a, e.b, e.bandwidth, e.power).unwrap();
    }
    let mut host_lines = Vec::new();
    let ids: BTreeSet<HostId> = t.ingress_hosts.keys().chain(t.egress_hosts.keys()).copied().collect();
    for h in ids {
        match (t.ingress_hosts.get(&h), t.egress_hosts.get(&h)) {
            (Some(a), Some(b)) if a == b => host_lines.push(format!("{h} both {a}")),
            (a, b) => {
                if let Some(a) = a {
                    host_lines.push(format!("{h} ingress {a}"));
                }
                if let Some(b) = b {
                    host_lines.push(format!("{h} egress {b}"));
                }
            }
        }
    }
    writeln!(w, "HOSTS {}", host_lines.len()).unwrap();
    for l in host_lines {
        writeln!(w, "{l}").unwrap();
    }
    writeln!(w, "FLOWS {}", inst.flows.len()).unwrap();
    for f in &inst.flows {
        writeln!(w, "{} {} {} {}", f.id, f.source, f.destination, f.rate).unwrap();
    }
    if let Some(p) = &inst.placement {
        write_placement(w, p);
    }
    w.push_str("END\n");
    out
}

fn write_placement(w: &mut String, p: &PlacementInstance) {
    let join = |xs: &[f64]| xs.iter().map(|x| format!(" {x}")).collect::<String>();
    writeln!(
        w,
        "PLACEMENT {} {} {}",
        p.resource_names.len(),
        p.pm_resources.len(),
        p.vm_demands.len()
    )
    .unwrap();
    writeln!(
        w,
        "RESOURCES{}",
        p.resource_names.iter().map(|n| format!(" {n}")).collect::<String>()
    )
    .unwrap();
    for row in &p.pm_resources {
        writeln!(w, "PM{}", join(row)).unwrap();
    }
    for row in &p.vm_demands {
        writeln!(w, "VM{}", join(row)).unwrap();
    }
    let entries: Vec<(usize, usize, f64)> = p
        .vm_traffic
        .iter()
        .enumerate()
        .flat_map(|(a, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &q)| q != 0.0)
                .map(move |(b, &q)| (a, b, q))
        })
        .collect();
    writeln!(w, "TRAFFIC {}", entries.len()).unwrap();
    for (a, b, q) in entries {
        writeln!(w, "{a} {b} {q}").unwrap();
    }
    w.push_str("HOPS\n");
    for row in &p.pm_hops {
        let cells: Vec<String> = row.iter().map(u32::to_string).collect();
        writeln!(w, "{}", cells.join(" ")).unwrap();
    }
}

/// `sha256:` followed by the hex digest of the canonical serialization.
pub fn digest(inst: &Instance) -> String {
    let hash = Sha256::digest(write_instance(inst).as_bytes());
    let mut out = String::from("sha256:");
    for b in hash {
        write!(out, "{b:02x}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = "\
sdn-energy-instance 1
SWITCHES 3
0 1 4
1 1 4
2 1 4
EDGES 3
0 1 10 1
1 2 10 1
0 2 10 1
HOSTS 0
FLOWS 1
0 0 1 1
END
";

    #[test]
    fn canonical_text_round_trips_byte_for_byte() {
        let inst = parse_instance(TRIANGLE).unwrap();
        assert_eq!(inst.topology.switches.len(), 3);
        assert_eq!(inst.flows, vec![Flow::new(0, 0, 1, 1.0)]);
        assert_eq!(write_instance(&inst), TRIANGLE);
    }

    #[test]
    fn comments_and_spacing_are_ignored() {
        let messy = TRIANGLE
            .replace("EDGES 3\n", "# links\nEDGES   3\n\n")
            .replace("0 0 1 1", "0\t0 1 1.0 # flow");
        let inst = parse_instance(&messy).unwrap();
        assert_eq!(write_instance(&inst), TRIANGLE);
    }

    #[test]
    fn placement_section_round_trips() {
        let mut inst = parse_instance(TRIANGLE).unwrap();
        inst.placement = Some(PlacementInstance {
            pm_resources: vec![vec![1.0, 2.0], vec![2.0, 1.5]],
            vm_demands: vec![vec![0.25, 0.1], vec![0.5, 0.3], vec![1.0, 0.05]],
            resource_names: vec!["cpu".into(), "memory".into()],
            vm_traffic: vec![vec![0.0, 3.0, 0.0], vec![0.0, 0.0, 0.0], vec![7.5, 0.0, 0.0]],
            pm_hops: vec![vec![0, 2], vec![2, 0]],
        });
        let text = write_instance(&inst);
        let back = parse_instance(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(write_instance(&back), text);
    }

    #[test]
    fn hosts_collapse_to_both_only_when_switches_agree() {
        let mut inst = parse_instance(TRIANGLE).unwrap();
        inst.topology.ingress_hosts.insert(0, 0);
        inst.topology.egress_hosts.insert(0, 0);
        inst.topology.ingress_hosts.insert(1, 1);
        inst.topology.egress_hosts.insert(1, 2);
        let text = write_instance(&inst);
        assert!(text.contains("HOSTS 3\n0 both 0\n1 ingress 1\n1 egress 2\n"));
        assert_eq!(parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn truncated_file_names_missing_section() {
        let cut = &TRIANGLE[..TRIANGLE.find("FLOWS").unwrap()];
        let err = parse_instance(cut).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::MissingSection("FLOWS"));
        assert!(err.to_string().contains("FLOWS"));

        let mid = &TRIANGLE[..TRIANGLE.find("1 2 10 1").unwrap()];
        assert_eq!(
            parse_instance(mid).unwrap_err().kind,
            ParseErrorKind::TruncatedSection("EDGES")
        );

        let short = TRIANGLE.replace("0 2 10 1\n", "");
        let err = parse_instance(&short).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::TruncatedSection("EDGES"));
        assert_eq!(err.line, 9);

        let no_end = TRIANGLE.replace("END\n", "");
        assert_eq!(
            parse_instance(&no_end).unwrap_err().kind,
            ParseErrorKind::MissingSection("END")
        );
    }

    #[test]
    fn unknown_version_is_rejected() {
        let err = parse_instance(&TRIANGLE.replace("instance 1", "instance 7")).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnsupportedVersion("7".into()));
        assert_eq!((err.line, err.column), (1, 21));
    }

    #[test]
    fn errors_carry_line_and_column() {
        let err = parse_instance(&TRIANGLE.replace("1 2 10 1", "1 2 ten 1")).unwrap_err();
        assert_eq!((err.line, err.column), (8, 5));
        assert_eq!(err.kind, ParseErrorKind::BadNumber("ten".into()));

        let err = parse_instance(&TRIANGLE.replace("2 1 4\n", "3 1 4\n")).unwrap_err();
        assert_eq!(err.line, 5);
        assert!(matches!(
            err.kind,
            ParseErrorKind::OutOfSequence {
                expected: 2,
                found: 3,
                ..
            }
        ));

        let err = parse_instance(&TRIANGLE.replace("0 0 1 1\n", "0 0 1\n")).unwrap_err();
        assert_eq!((err.line, err.column), (12, 6));

        let err = parse_instance(&TRIANGLE.replace("0 2 10 1", "0 2 inf 1")).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::NonFinite("inf".into()));
    }

    #[test]
    fn empty_and_foreign_files_lack_header() {
        assert_eq!(parse_instance("").unwrap_err().kind, ParseErrorKind::MissingHeader);
        assert_eq!(
            parse_instance("NODES (\n").unwrap_err().kind,
            ParseErrorKind::MissingHeader
        );
    }

    #[test]
    fn digest_ignores_formatting() {
        let a = parse_instance(TRIANGLE).unwrap();
        let b = parse_instance(&TRIANGLE.replace("0 0 1 1", "0 0 1 1.000")).unwrap();
        assert_eq!(digest(&a), digest(&b));
        assert!(digest(&a).starts_with("sha256:"));
        assert_eq!(digest(&a).len(), 7 + 64);
        let c = parse_instance(&TRIANGLE.replace("0 0 1 1", "0 0 1 2")).unwrap();
        assert_ne!(digest(&a), digest(&c));
    }
}
