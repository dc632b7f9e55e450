//! The textual circuit language: parsing into terms and printing terms back.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::circuit::Term;
use crate::error::{Error, Result};
use crate::interp::{Lattice, Value};
use crate::netlist::{Cell, CellKind, Netlist, Wire};

pub const CIRCUIT_HEADER: &str = "# circsem circuit v1";

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Sym(&'static str),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    for (ln, line) in src.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c.is_whitespace() {
                i += 1;
            } else if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
                break;
            } else if c.is_alphanumeric() || c == '_' || c == '⊥' || c == '⊤' {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                    i += 1;
                }
                if i == start {
                    i += 1;
                }
                out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), line: ln + 1, col });
            } else if c == '-' && chars.get(i + 1) == Some(&'>') {
                out.push(Token { tok: Tok::Sym("->"), line: ln + 1, col });
                i += 2;
            } else {
                let sym = match c {
                    '(' => "(",
                    ')' => ")",
                    '{' => "{",
                    '}' => "}",
                    ',' => ",",
                    ';' => ";",
                    '=' => "=",
                    _ => {
                        return Err(Error::Parse { line: ln + 1, col, msg: format!("unexpected character `{c}`") })
                    }
                };
                out.push(Token { tok: Tok::Sym(sym), line: ln + 1, col });
                i += 1;
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct CircuitDef {
    pub name: String,
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
    pub netlist: Netlist,
}

impl CircuitDef {
    pub fn term(&self) -> Term {
        self.netlist.to_term()
    }
}

#[derive(Clone, Debug)]
pub struct RuleDef {
    pub name: String,
    pub lhs: CircuitDef,
    pub rhs: CircuitDef,
}

#[derive(Clone, Debug, Default)]
pub struct Source {
    pub circuits: Vec<CircuitDef>,
    pub rules: Vec<RuleDef>,
}

impl Source {
    /// The named circuit, or the last one in the file.
    pub fn circuit(&self, name: Option<&str>) -> Result<&CircuitDef> {
        match name {
            Some(n) => self
                .circuits
                .iter()
                .find(|c| c.name == n)
                .ok_or_else(|| Error::Invalid(format!("no circuit named `{n}`"))),
            None => self.circuits.last().ok_or_else(|| Error::Invalid("no circuit in source".into())),
        }
    }

    pub fn term(&self, name: Option<&str>) -> Result<Term> {
        Ok(self.circuit(name)?.term())
    }
}

pub fn parse(src: &str, lattice: &Lattice) -> Result<Source> {
    let toks = lex(src)?;
    let mut p = Parser { toks, at: 0, lattice, source: Source::default() };
    while !p.done() {
        let kw = p.ident()?;
        match kw.as_str() {
            "circuit" => {
                let c = p.circuit()?;
                if p.source.circuits.iter().any(|d| d.name == c.name) {
                    return Err(p.err_prev(format!("circuit `{}` defined twice", c.name)));
                }
                p.source.circuits.push(c);
            }
            "rule" => {
                let r = p.rule()?;
                p.source.rules.push(r);
            }
            other => return Err(p.err_prev(format!("expected `circuit` or `rule`, found `{other}`"))),
        }
    }
    Ok(p.source)
}

/// Parses a single circuit and returns its term.
pub fn parse_term(src: &str, lattice: &Lattice) -> Result<Term> {
    parse(src, lattice)?.term(None)
}

struct Parser<'a> {
    toks: Vec<Token>,
    at: usize,
    lattice: &'a Lattice,
    source: Source,
}

struct Scope {
    parent: Vec<Wire>,
    cells: Vec<Cell>,
    names: HashMap<String, Wire>,
    feedback: HashMap<String, (bool, usize, usize)>,
}

impl Scope {
    fn wire(&mut self) -> Wire {
        self.parent.push(self.parent.len());
        self.parent.len() - 1
    }

    fn find(&mut self, mut w: Wire) -> Wire {
        while self.parent[w] != w {
            self.parent[w] = self.parent[self.parent[w]];
            w = self.parent[w];
        }
        w
    }

    fn union(&mut self, a: Wire, b: Wire) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.parent[a.max(b)] = a.min(b);
        }
    }

    fn cell(&mut self, kind: CellKind, ins: Vec<Wire>, n_out: usize) -> Vec<Wire> {
        let outs: Vec<Wire> = (0..n_out).map(|_| self.wire()).collect();
        self.cells.push(Cell { kind, ins, outs: outs.clone() });
        outs
    }

    fn finish(mut self, inputs: &[Wire], outputs: &[Wire]) -> Netlist {
        let n = self.parent.len();
        let mut id = vec![usize::MAX; n];
        let mut next = 0;
        let mut canon = |s: &mut Scope, w: Wire| {
            let r = s.find(w);
            if id[r] == usize::MAX {
                id[r] = next;
                next += 1;
            }
            id[r]
        };
        let inputs = inputs.iter().map(|&w| canon(&mut self, w)).collect();
        let mut cells = std::mem::take(&mut self.cells);
        for c in &mut cells {
            for w in c.ins.iter_mut().chain(c.outs.iter_mut()) {
                *w = canon(&mut self, *w);
            }
        }
        let outputs = outputs.iter().map(|&w| canon(&mut self, w)).collect();
        Netlist { wires: next, inputs, outputs, cells }
    }
}

enum Expr {
    Wire(String, usize, usize),
    Value(Value),
    Wave(Value),
    Uncertain(Vec<Value>, bool),
    Call(String, Vec<Expr>, usize, usize),
}

impl<'a> Parser<'a> {
    fn done(&self) -> bool {
        self.at >= self.toks.len()
    }

    fn pos(&self) -> (usize, usize) {
        self.toks
            .get(self.at)
            .or(self.toks.last())
            .map_or((1, 1), |t| (t.line, t.col))
    }

    fn err(&self, msg: String) -> Error {
        let (line, col) = self.pos();
        Error::Parse { line, col, msg }
    }

    fn err_prev(&self, msg: String) -> Error {
        let t = &self.toks[self.at.saturating_sub(1)];
        Error::Parse { line: t.line, col: t.col, msg }
    }

    fn peek_sym(&self, s: &str) -> bool {
        matches!(self.toks.get(self.at), Some(Token { tok: Tok::Sym(x), .. }) if *x == s)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.peek_sym(s) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<()> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{s}`")))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.toks.get(self.at) {
            Some(Token { tok: Tok::Ident(s), .. }) => {
                self.at += 1;
                Ok(s.clone())
            }
            _ => Err(self.err("expected an identifier".into())),
        }
    }

    fn ident_list(&mut self) -> Result<Vec<String>> {
        self.expect("(")?;
        let mut v = Vec::new();
        if !self.eat(")") {
            loop {
                v.push(self.ident()?);
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        Ok(v)
    }

    fn value(&mut self) -> Result<Value> {
        let s = self.ident()?;
        self.lattice.parse_value(&s).ok_or_else(|| self.err_prev(format!("`{s}` is not a value")))
    }

    fn header(&mut self) -> Result<(String, Vec<String>, Vec<String>)> {
        let name = self.ident()?;
        let ins = self.ident_list()?;
        self.expect("->")?;
        let outs = self.ident_list()?;
        Ok((name, ins, outs))
    }

    fn circuit(&mut self) -> Result<CircuitDef> {
        let (name, ins, outs) = self.header()?;
        self.body(name, ins, outs)
    }

    fn rule(&mut self) -> Result<RuleDef> {
        let (name, ins, outs) = self.header()?;
        let kw = self.ident()?;
        if kw != "lhs" {
            return Err(self.err_prev("expected `lhs`".into()));
        }
        let lhs = self.body(format!("{name}_lhs"), ins.clone(), outs.clone())?;
        let kw = self.ident()?;
        if kw != "rhs" {
            return Err(self.err_prev("expected `rhs`".into()));
        }
        let rhs = self.body(format!("{name}_rhs"), ins, outs)?;
        Ok(RuleDef { name, lhs, rhs })
    }

    fn check_name(&self, s: &str) -> Result<()> {
        if self.lattice.parse_value(s).is_some()
            || matches!(s, "feedback" | "delay" | "join" | "wave" | "held" | "reg")
        {
            return Err(self.err_prev(format!("`{s}` is reserved and cannot name a wire")));
        }
        Ok(())
    }

    fn body(&mut self, name: String, ins: Vec<String>, outs: Vec<String>) -> Result<CircuitDef> {
        let mut sc = Scope { parent: Vec::new(), cells: Vec::new(), names: HashMap::new(), feedback: HashMap::new() };
        let mut inputs = Vec::new();
        for i in &ins {
            self.check_name(i)?;
            let w = sc.wire();
            if sc.names.insert(i.clone(), w).is_some() {
                return Err(self.err_prev(format!("input `{i}` declared twice")));
            }
            inputs.push(w);
        }
        self.expect("{")?;
        while !self.eat("}") {
            if self.done() {
                return Err(self.err("unexpected end of input, expected `}`".into()));
            }
            if matches!(self.toks.get(self.at), Some(Token { tok: Tok::Ident(s), .. }) if s == "feedback") {
                self.at += 1;
                loop {
                    let (line, col) = self.pos();
                    let f = self.ident()?;
                    self.check_name(&f)?;
                    if sc.names.contains_key(&f) {
                        return Err(self.err_prev(format!("wire `{f}` already defined")));
                    }
                    let w = sc.wire();
                    sc.names.insert(f.clone(), w);
                    sc.feedback.insert(f, (false, line, col));
                    if self.eat(";") {
                        break;
                    }
                    self.expect(",")?;
                }
                continue;
            }
            let targets = if self.eat("(") {
                self.at -= 1;
                self.ident_list()?
            } else {
                vec![self.ident()?]
            };
            let target_pos = self.toks[self.at - 1].clone();
            self.expect("=")?;
            let e = self.expr()?;
            self.expect(";")?;
            let ws = self.elaborate(&mut sc, &e, targets.len())?;
            for (t, w) in targets.iter().zip(ws) {
                self.check_name(t)?;
                match sc.feedback.get_mut(t) {
                    Some(entry) => {
                        if entry.0 {
                            return Err(Error::Parse {
                                line: target_pos.line,
                                col: target_pos.col,
                                msg: format!("feedback wire `{t}` bound twice"),
                            });
                        }
                        entry.0 = true;
                        let fw = sc.names[t];
                        sc.union(fw, w);
                    }
                    None => {
                        if sc.names.insert(t.clone(), w).is_some() {
                            return Err(Error::Parse {
                                line: target_pos.line,
                                col: target_pos.col,
                                msg: format!("wire `{t}` already defined"),
                            });
                        }
                    }
                }
            }
        }
        if let Some((f, (_, line, col))) = sc.feedback.iter().filter(|(_, e)| !e.0).min_by_key(|(_, e)| (e.1, e.2)) {
            return Err(Error::Parse { line: *line, col: *col, msg: format!("feedback wire `{f}` is never bound") });
        }
        let mut outputs = Vec::new();
        for o in &outs {
            let w = *sc
                .names
                .get(o)
                .ok_or_else(|| self.err_prev(format!("output `{o}` of `{name}` is never defined")))?;
            outputs.push(w);
        }
        let netlist = sc.finish(&inputs, &outputs);
        Ok(CircuitDef { name, input_names: ins, output_names: outs, netlist })
    }

    fn expr(&mut self) -> Result<Expr> {
        if self.eat("{") {
            return Ok(Expr::Uncertain(self.value_list()?, false));
        }
        let (line, col) = self.pos();
        let id = self.ident()?;
        match id.as_str() {
            "held" => {
                self.expect("{")?;
                return Ok(Expr::Uncertain(self.value_list()?, true));
            }
            "wave" => {
                self.expect("(")?;
                let v = self.value()?;
                self.expect(")")?;
                return Ok(Expr::Wave(v));
            }
            _ => {}
        }
        if self.eat("(") {
            let mut args = Vec::new();
            if !self.eat(")") {
                loop {
                    args.push(self.expr()?);
                    if self.eat(")") {
                        break;
                    }
                    self.expect(",")?;
                }
            }
            return Ok(Expr::Call(id, args, line, col));
        }
        if let Some(v) = self.lattice.parse_value(&id) {
            return Ok(Expr::Value(v));
        }
        Ok(Expr::Wire(id, line, col))
    }

    fn value_list(&mut self) -> Result<Vec<Value>> {
        let mut v = vec![self.value()?];
        while self.eat(",") {
            v.push(self.value()?);
        }
        self.expect("}")?;
        Ok(v)
    }

    fn elaborate(&self, sc: &mut Scope, e: &Expr, want: usize) -> Result<Vec<Wire>> {
        let single = |n: usize, line: usize, col: usize| {
            if n == want {
                Ok(())
            } else {
                Err(Error::Parse { line, col, msg: format!("expression yields {n} wires but {want} are expected") })
            }
        };
        let (line, col) = match e {
            Expr::Wire(_, l, c) | Expr::Call(_, _, l, c) => (*l, *c),
            _ => self.toks[self.at - 1].line_col(),
        };
        match e {
            Expr::Wire(name, l, c) => {
                single(1, *l, *c)?;
                sc.names
                    .get(name)
                    .map(|&w| vec![w])
                    .ok_or_else(|| Error::Parse { line: *l, col: *c, msg: format!("undefined wire `{name}`") })
            }
            Expr::Value(v) => {
                single(1, line, col)?;
                Ok(if *v == self.lattice.bottom() { vec![sc.wire()] } else { sc.cell(CellKind::Value(*v), vec![], 1) })
            }
            Expr::Wave(v) => {
                single(1, line, col)?;
                Ok(sc.cell(CellKind::Waveform(*v), vec![], 1))
            }
            Expr::Uncertain(alts, held) => {
                single(1, line, col)?;
                Ok(sc.cell(CellKind::Uncertain { alts: alts.clone(), held: *held }, vec![], 1))
            }
            Expr::Call(f, args, l, c) => {
                let mut ins = Vec::new();
                for a in args {
                    ins.extend(self.elaborate(sc, a, 1)?);
                }
                let arity = |n: usize| {
                    if ins.len() == n {
                        Ok(())
                    } else {
                        Err(Error::Parse {
                            line: *l,
                            col: *c,
                            msg: format!("`{f}` takes {n} arguments, got {}", ins.len()),
                        })
                    }
                };
                match f.as_str() {
                    "delay" => {
                        arity(1)?;
                        single(1, *l, *c)?;
                        Ok(sc.cell(CellKind::Delay, ins, 1))
                    }
                    "join" => {
                        arity(2)?;
                        single(1, *l, *c)?;
                        Ok(sc.cell(CellKind::Join, ins, 1))
                    }
                    "reg" => {
                        if args.len() != 2 || !matches!(args[0], Expr::Value(_)) {
                            return Err(Error::Parse { line: *l, col: *c, msg: "reg takes a value and a wire".into() });
                        }
                        single(1, *l, *c)?;
                        let d = sc.cell(CellKind::Delay, vec![ins[1]], 1)[0];
                        Ok(sc.cell(CellKind::Join, vec![d, ins[0]], 1))
                    }
                    _ => match self.source.circuits.iter().find(|d| d.name == *f) {
                        Some(def) => {
                            arity(def.input_names.len())?;
                            single(def.output_names.len(), *l, *c)?;
                            Ok(inline(sc, &def.netlist, &ins))
                        }
                        None => Ok(sc.cell(CellKind::Prim(f.clone()), ins, want)),
                    },
                }
            }
        }
    }
}

impl Token {
    fn line_col(&self) -> (usize, usize) {
        (self.line, self.col)
    }
}

fn inline(sc: &mut Scope, net: &Netlist, args: &[Wire]) -> Vec<Wire> {
    let mut map: Vec<Option<Wire>> = vec![None; net.wires];
    for (&i, &a) in net.inputs.iter().zip(args) {
        match map[i] {
            Some(prev) => sc.union(prev, a),
            None => map[i] = Some(a),
        }
    }
    let mut get = |sc: &mut Scope, w: Wire| *map[w].get_or_insert_with(|| sc.wire());
    for c in &net.cells {
        let ins = c.ins.iter().map(|&w| get(sc, w)).collect();
        let outs = c.outs.iter().map(|&w| get(sc, w)).collect();
        sc.cells.push(Cell { kind: c.kind.clone(), ins, outs });
    }
    net.outputs.iter().map(|&w| get(sc, w)).collect()
}

/// Prints a term as a circuit definition that parses back to an equivalent term.
pub fn print(t: &Term, name: &str, lattice: &Lattice) -> String {
    print_netlist(&Netlist::from_term(t), name, None, None, lattice)
}

pub fn print_named(
    t: &Term,
    name: &str,
    input_names: &[String],
    output_names: &[String],
    lattice: &Lattice,
) -> String {
    print_netlist(&Netlist::from_term(t), name, Some(input_names), Some(output_names), lattice)
}

pub fn print_netlist(
    net: &Netlist,
    name: &str,
    input_names: Option<&[String]>,
    output_names: Option<&[String]>,
    lattice: &Lattice,
) -> String {
    let mut s = format!("{CIRCUIT_HEADER}\n");
    s.push_str(&print_body(net, "circuit", name, input_names, output_names, lattice));
    s
}

fn print_body(
    net: &Netlist,
    keyword: &str,
    name: &str,
    input_names: Option<&[String]>,
    output_names: Option<&[String]>,
    lattice: &Lattice,
) -> String {
    let in_names: Vec<String> = match input_names {
        Some(n) => n.to_vec(),
        None => (0..net.inputs.len()).map(|i| format!("i{i}")).collect(),
    };
    let out_names: Vec<String> = match output_names {
        Some(n) => n.to_vec(),
        None => (0..net.outputs.len()).map(|i| format!("o{i}")).collect(),
    };
    let mut wname: Vec<Option<String>> = vec![None; net.wires];
    let mut body = String::new();
    let mut first_input: HashMap<Wire, usize> = HashMap::new();
    for (k, &w) in net.inputs.iter().enumerate() {
        match first_input.get(&w) {
            Some(_) => {}
            None => {
                first_input.insert(w, k);
                wname[w] = Some(in_names[k].clone());
            }
        }
    }
    let drivers = net.drivers().expect("well-formed netlist");
    let mut defined: Vec<bool> = vec![false; net.wires];
    for &w in &net.inputs {
        defined[w] = true;
    }
    let mut counter = 0;
    let mut fresh = |wname: &mut Vec<Option<String>>, w: Wire| -> String {
        if wname[w].is_none() {
            let mut n = format!("w{counter}");
            counter += 1;
            while in_names.contains(&n) || out_names.contains(&n) {
                n = format!("w{counter}");
                counter += 1;
            }
            wname[w] = Some(n);
        }
        wname[w].clone().unwrap()
    };
    let mut lines = Vec::new();
    for w in 0..net.wires {
        if drivers[w].is_none() && !defined[w] {
            let n = fresh(&mut wname, w);
            lines.push(format!("  {n} = {};", lattice.name(lattice.bottom())));
            defined[w] = true;
        }
    }
    let mut feedback = Vec::new();
    let mut done = vec![false; net.cells.len()];
    let mut remaining = net.cells.len();
    while remaining > 0 {
        let ready = (0..net.cells.len()).find(|&c| !done[c] && net.cells[c].ins.iter().all(|&w| defined[w]));
        let c = match ready {
            Some(c) => c,
            None => {
                let c = (0..net.cells.len())
                    .filter(|&c| !done[c])
                    .min_by_key(|&c| (!Netlist::is_stateful(&net.cells[c].kind), c))
                    .unwrap();
                for &w in &net.cells[c].ins {
                    if !defined[w] {
                        let n = fresh(&mut wname, w);
                        feedback.push(n);
                        defined[w] = true;
                    }
                }
                c
            }
        };
        done[c] = true;
        remaining -= 1;
        let cell = &net.cells[c];
        let args: Vec<String> = cell.ins.iter().map(|&w| fresh(&mut wname, w)).collect();
        let outs: Vec<String> = cell.outs.iter().map(|&w| fresh(&mut wname, w)).collect();
        for &w in &cell.outs {
            defined[w] = true;
        }
        let rhs = match &cell.kind {
            CellKind::Prim(p) => format!("{p}({})", args.join(", ")),
            CellKind::Join => format!("join({})", args.join(", ")),
            CellKind::Delay => format!("delay({})", args[0]),
            CellKind::Value(v) => lattice.name(*v).to_string(),
            CellKind::Waveform(v) => format!("wave({})", lattice.name(*v)),
            CellKind::Uncertain { alts, held } => format!(
                "{}{{{}}}",
                if *held { "held" } else { "" },
                alts.iter().map(|&v| lattice.name(v)).collect::<Vec<_>>().join(", ")
            ),
        };
        let lhs = if outs.len() == 1 { outs[0].clone() } else { format!("({})", outs.join(", ")) };
        lines.push(format!("  {lhs} = {rhs};"));
    }
    for (k, &w) in net.outputs.iter().enumerate() {
        let n = fresh(&mut wname, w);
        if n != out_names[k] {
            lines.push(format!("  {} = {n};", out_names[k]));
        }
    }
    let _ = writeln!(body, "{keyword} {name}({}) -> ({}) {{", in_names.join(", "), out_names.join(", "));
    if !feedback.is_empty() {
        let _ = writeln!(body, "  feedback {};", feedback.join(", "));
    }
    for l in lines {
        body.push_str(&l);
        body.push('\n');
    }
    body.push_str("}\n");
    body
}
