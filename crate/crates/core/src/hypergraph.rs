//! Labelled hypergraphs with ordered input and output interfaces (cospans), the
//! translation from terms, degree disciplines, cospan algebra, isomorphism and extraction.

use std::fmt::Write as _;

use crate::circuit::{Node, Term};
use crate::error::{Error, Result};

pub type Vertex = usize;

/// A hyperedge; `label` is a single generator term whose arity matches the tentacles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub label: Term,
    pub sources: Vec<Vertex>,
    pub targets: Vec<Vertex>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Hypergraph {
    pub vertices: usize,
    pub edges: Vec<Edge>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cospan {
    pub graph: Hypergraph,
    pub inputs: Vec<Vertex>,
    pub outputs: Vec<Vertex>,
}

/// Tentacle counts: `ins` edges target the vertex, `outs` edges read it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Degree {
    pub ins: usize,
    pub outs: usize,
}

/// How the structural generators are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Translation {
    /// Fork and Elim become shared vertices; Join and Intro stay edges.
    #[default]
    Comonoid,
    /// Fork, Elim, Join and Intro all become shared vertices.
    Frobenius,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Discipline {
    Monogamous,
    MonogamousAcyclic,
    PartialMonogamous,
    PartialLeftMonogamous,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtractMode {
    Traced,
    TracedComonoid,
}

pub(crate) struct UnionFind(Vec<usize>);

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    pub(crate) fn push(&mut self) -> usize {
        self.0.push(self.0.len());
        self.0.len() - 1
    }

    pub(crate) fn len(&self) -> usize {
        self.0.len()
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    /// The smaller id stays the representative.
    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            self.0[hi] = lo;
        }
    }

    /// Dense renumbering of the classes, in order of their representatives.
    pub(crate) fn classes(&mut self) -> (usize, Vec<usize>) {
        let n = self.0.len();
        let mut id = vec![usize::MAX; n];
        let mut next = 0;
        for (v, slot) in id.iter_mut().enumerate() {
            if self.find(v) == v {
                *slot = next;
                next += 1;
            }
        }
        let map = (0..n).map(|v| id[self.find(v)]).collect();
        (next, map)
    }
}

impl Hypergraph {
    pub fn add_vertex(&mut self) -> Vertex {
        self.vertices += 1;
        self.vertices - 1
    }

    pub fn add_edge(&mut self, label: Term, sources: Vec<Vertex>, targets: Vec<Vertex>) -> usize {
        debug_assert_eq!((label.ins(), label.outs()), (sources.len(), targets.len()));
        self.edges.push(Edge { label, sources, targets });
        self.edges.len() - 1
    }

    pub fn degrees(&self) -> Vec<Degree> {
        let mut d = vec![Degree { ins: 0, outs: 0 }; self.vertices];
        for e in &self.edges {
            for &s in &e.sources {
                d[s].outs += 1;
            }
            for &t in &e.targets {
                d[t].ins += 1;
            }
        }
        d
    }

    pub fn degree(&self, v: Vertex) -> Degree {
        let mut d = Degree { ins: 0, outs: 0 };
        for e in &self.edges {
            d.outs += e.sources.iter().filter(|&&s| s == v).count();
            d.ins += e.targets.iter().filter(|&&t| t == v).count();
        }
        d
    }

    fn renamed(&self, map: &[usize], vertices: usize) -> Hypergraph {
        Hypergraph {
            vertices,
            edges: self
                .edges
                .iter()
                .map(|e| Edge {
                    label: e.label.clone(),
                    sources: e.sources.iter().map(|&v| map[v]).collect(),
                    targets: e.targets.iter().map(|&v| map[v]).collect(),
                })
                .collect(),
        }
    }

    /// Vertices reachable in one step: `v -> w` when some edge reads `v` and writes `w`.
    fn successors(&self) -> Vec<Vec<Vertex>> {
        let mut s = vec![Vec::new(); self.vertices];
        for e in &self.edges {
            for &a in &e.sources {
                s[a].extend(e.targets.iter().copied());
            }
        }
        s
    }

    pub fn is_acyclic(&self) -> bool {
        let succ = self.successors();
        let mut indeg = vec![0usize; self.vertices];
        for ws in &succ {
            for &w in ws {
                indeg[w] += 1;
            }
        }
        let mut queue: Vec<Vertex> = (0..self.vertices).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop() {
            seen += 1;
            for &w in &succ[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push(w);
                }
            }
        }
        seen == self.vertices
    }
}

impl Cospan {
    pub fn ins(&self) -> usize {
        self.inputs.len()
    }

    pub fn outs(&self) -> usize {
        self.outputs.len()
    }

    pub fn identity(n: usize) -> Cospan {
        Cospan { graph: Hypergraph { vertices: n, edges: vec![] }, inputs: (0..n).collect(), outputs: (0..n).collect() }
    }

    pub fn symmetry(m: usize, n: usize) -> Cospan {
        let mut c = Cospan::identity(m + n);
        c.outputs = (m..m + n).chain(0..m).collect();
        c
    }

    /// One edge with fresh, distinct endpoints exposed in order.
    pub fn generator(label: Term) -> Cospan {
        let (m, n) = (label.ins(), label.outs());
        let mut g = Hypergraph { vertices: m + n, edges: vec![] };
        g.add_edge(label, (0..m).collect(), (m..m + n).collect());
        Cospan { graph: g, inputs: (0..m).collect(), outputs: (m..m + n).collect() }
    }

    fn quotient(graph: &Hypergraph, inputs: &[Vertex], outputs: &[Vertex], uf: &mut UnionFind) -> Cospan {
        let (n, map) = uf.classes();
        Cospan {
            graph: graph.renamed(&map, n),
            inputs: inputs.iter().map(|&v| map[v]).collect(),
            outputs: outputs.iter().map(|&v| map[v]).collect(),
        }
    }

    /// Disjoint union with `other`'s vertices shifted past ours; returns the shift.
    fn disjoint(&self, other: &Cospan) -> (Hypergraph, usize) {
        let k = self.graph.vertices;
        let shift: Vec<usize> = (0..other.graph.vertices).map(|v| v + k).collect();
        let mut g = self.graph.clone();
        g.vertices += other.graph.vertices;
        g.edges.extend(other.graph.renamed(&shift, 0).edges);
        (g, k)
    }

    /// Pushout along the shared boundary: our outputs glued to `other`'s inputs.
    pub fn compose(&self, other: &Cospan) -> Result<Cospan> {
        if self.outs() != other.ins() {
            return Err(Error::Arity { left: self.outs(), right: other.ins() });
        }
        let (g, k) = self.disjoint(other);
        let mut uf = UnionFind::new(g.vertices);
        for (&a, &b) in self.outputs.iter().zip(&other.inputs) {
            uf.union(a, b + k);
        }
        let outputs: Vec<Vertex> = other.outputs.iter().map(|&v| v + k).collect();
        Ok(Cospan::quotient(&g, &self.inputs, &outputs, &mut uf))
    }

    pub fn tensor(&self, other: &Cospan) -> Cospan {
        let (g, k) = self.disjoint(other);
        let inputs = self.inputs.iter().copied().chain(other.inputs.iter().map(|&v| v + k)).collect();
        let outputs = self.outputs.iter().copied().chain(other.outputs.iter().map(|&v| v + k)).collect();
        Cospan { graph: g, inputs, outputs }
    }

    /// Canonical trace: the first `x` inputs are merged with the first `x` outputs.
    pub fn trace(&self, x: usize) -> Result<Cospan> {
        if x > self.ins() || x > self.outs() {
            return Err(Error::TraceWidth { x, ins: self.ins(), outs: self.outs() });
        }
        let mut uf = UnionFind::new(self.graph.vertices);
        for k in 0..x {
            uf.union(self.inputs[k], self.outputs[k]);
        }
        Ok(Cospan::quotient(&self.graph, &self.inputs[x..], &self.outputs[x..], &mut uf))
    }

    pub fn degree(&self, v: Vertex) -> Degree {
        self.graph.degree(v)
    }
}

struct Builder {
    uf: UnionFind,
    edges: Vec<Edge>,
    mode: Translation,
}

impl Builder {
    fn fresh(&mut self) -> Vertex {
        self.uf.push()
    }

    fn edge(&mut self, label: Term, sources: Vec<Vertex>) -> Vec<Vertex> {
        let targets: Vec<Vertex> = (0..label.outs()).map(|_| self.fresh()).collect();
        self.edges.push(Edge { label, sources, targets: targets.clone() });
        targets
    }

    fn go(&mut self, t: &Term, ins: &[Vertex]) -> Vec<Vertex> {
        let frob = self.mode == Translation::Frobenius;
        match t.node() {
            Node::Primitive { .. } => self.edge(t.clone(), ins.to_vec()),
            Node::Id(_) => ins.to_vec(),
            Node::Symmetry(m, _) => ins[*m..].iter().chain(&ins[..*m]).copied().collect(),
            Node::Fork => vec![ins[0], ins[0]],
            Node::Elim => vec![],
            Node::Join if frob => {
                self.uf.union(ins[0], ins[1]);
                vec![ins[0]]
            }
            Node::Intro if frob => vec![self.fresh()],
            Node::Join | Node::Intro => self.edge(t.clone(), ins.to_vec()),
            Node::Delay(_) => ins.iter().flat_map(|&v| self.edge(Term::delay(1), vec![v])).collect(),
            Node::ValueWord(w) => w.iter().flat_map(|&v| self.edge(Term::values(vec![v]), vec![])).collect(),
            Node::Waveform(w) => w.iter().flat_map(|&v| self.edge(Term::waveform(vec![v]), vec![])).collect(),
            Node::Uncertain { alts, held } => (0..t.outs())
                .flat_map(|k| {
                    let col = alts.iter().map(|a| vec![a[k]]).collect();
                    self.edge(Term::uncertain(col, *held).expect("non-empty"), vec![])
                })
                .collect(),
            Node::Seq(cs) => cs.iter().fold(ins.to_vec(), |cur, c| self.go(c, &cur)),
            Node::Par(cs) => {
                let mut out = Vec::new();
                let mut at = 0;
                for c in cs {
                    out.extend(self.go(c, &ins[at..at + c.ins()]));
                    at += c.ins();
                }
                out
            }
            Node::Trace(x, body) => {
                let mut bin: Vec<Vertex> = (0..*x).map(|_| self.fresh()).collect();
                bin.extend_from_slice(ins);
                let outs = self.go(body, &bin);
                for k in 0..*x {
                    self.uf.union(bin[k], outs[k]);
                }
                outs[*x..].to_vec()
            }
        }
    }
}

pub fn term_to_cospan(t: &Term) -> Cospan {
    term_to_cospan_with(t, Translation::Comonoid)
}

pub fn term_to_cospan_with(t: &Term, mode: Translation) -> Cospan {
    let mut b = Builder { uf: UnionFind::new(t.ins()), edges: Vec::new(), mode };
    let inputs: Vec<Vertex> = (0..t.ins()).collect();
    let outputs = b.go(t, &inputs);
    let g = Hypergraph { vertices: b.uf.len(), edges: std::mem::take(&mut b.edges) };
    Cospan::quotient(&g, &inputs, &outputs, &mut b.uf)
}

pub fn compose_cospans(a: &Cospan, b: &Cospan) -> Result<Cospan> {
    a.compose(b)
}

pub fn tensor_cospans(a: &Cospan, b: &Cospan) -> Cospan {
    a.tensor(b)
}

pub fn trace_cospan(x: usize, c: &Cospan) -> Result<Cospan> {
    c.trace(x)
}

pub fn degree(g: &Hypergraph, v: Vertex) -> Degree {
    g.degree(v)
}

fn duplicates(list: &[Vertex]) -> Vec<Vertex> {
    let mut seen = std::collections::BTreeSet::new();
    let mut dup = std::collections::BTreeSet::new();
    for &v in list {
        if !seen.insert(v) {
            dup.insert(v);
        }
    }
    dup.into_iter().collect()
}

/// Every way `c` breaks the discipline; empty when it conforms.
pub fn violations(c: &Cospan, d: Discipline) -> Vec<String> {
    let mut out = Vec::new();
    for v in duplicates(&c.inputs) {
        out.push(format!("input map not injective at vertex {v}"));
    }
    if d != Discipline::PartialLeftMonogamous {
        for v in duplicates(&c.outputs) {
            out.push(format!("output map not injective at vertex {v}"));
        }
    }
    let n = c.graph.vertices;
    let mut is_in = vec![false; n];
    let mut is_out = vec![false; n];
    c.inputs.iter().for_each(|&v| is_in[v] = true);
    c.outputs.iter().for_each(|&v| is_out[v] = true);
    for (v, deg) in c.graph.degrees().into_iter().enumerate() {
        let (i, o) = (deg.ins, deg.outs);
        let ok = match d {
            Discipline::PartialLeftMonogamous => i == 0 || (i == 1 && !is_in[v]),
            _ => match (is_in[v], is_out[v]) {
                (true, true) => (i, o) == (0, 0),
                (true, false) => (i, o) == (0, 1),
                (false, true) => (i, o) == (1, 0),
                (false, false) => match d {
                    Discipline::PartialMonogamous => (i, o) == (0, 0) || (i, o) == (1, 1),
                    _ => (i, o) == (1, 1),
                },
            },
        };
        if !ok {
            let role = match (is_in[v], is_out[v]) {
                (true, true) => "input and output",
                (true, false) => "input",
                (false, true) => "output",
                (false, false) => "inner",
            };
            out.push(format!("{role} vertex {v} has degree ({i}, {o})"));
        }
    }
    if d == Discipline::MonogamousAcyclic && !c.graph.is_acyclic() {
        out.push("graph has a cycle".into());
    }
    out
}

pub fn check_partial_monogamous(c: &Cospan) -> bool {
    violations(c, Discipline::PartialMonogamous).is_empty()
}

pub fn check_partial_left_monogamous(c: &Cospan) -> bool {
    violations(c, Discipline::PartialLeftMonogamous).is_empty()
}

pub fn check_monogamous_acyclic(c: &Cospan) -> bool {
    violations(c, Discipline::MonogamousAcyclic).is_empty()
}

pub fn check_monogamous(c: &Cospan) -> bool {
    violations(c, Discipline::Monogamous).is_empty()
}

/// Vertex and edge bijections witnessing an isomorphism.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Iso {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<usize>,
}

pub const ISO_BUDGET: usize = 1_000_000;

struct IsoSearch<'a> {
    a: &'a Cospan,
    b: &'a Cospan,
    vmap: Vec<Option<Vertex>>,
    vback: Vec<Option<Vertex>>,
    emap: Vec<Option<usize>>,
    eused: Vec<bool>,
    budget: usize,
}

impl IsoSearch<'_> {
    fn bind(&mut self, x: Vertex, y: Vertex, log: &mut Vec<Vertex>) -> bool {
        match (self.vmap[x], self.vback[y]) {
            (Some(m), _) => m == y,
            (None, Some(_)) => false,
            (None, None) => {
                self.vmap[x] = Some(y);
                self.vback[y] = Some(x);
                log.push(x);
                true
            }
        }
    }

    fn unbind(&mut self, log: &[Vertex]) {
        for &x in log {
            let y = self.vmap[x].take().unwrap();
            self.vback[y] = None;
        }
    }

    fn next_edge(&self) -> Option<usize> {
        let mut first = None;
        for (k, e) in self.a.graph.edges.iter().enumerate() {
            if self.emap[k].is_some() {
                continue;
            }
            if e.sources.iter().chain(&e.targets).any(|&v| self.vmap[v].is_some()) {
                return Some(k);
            }
            first.get_or_insert(k);
        }
        first
    }

    fn search(&mut self) -> Result<bool> {
        if self.budget == 0 {
            return Err(Error::Budget("cospan isomorphism search".into()));
        }
        self.budget -= 1;
        let Some(k) = self.next_edge() else { return Ok(true) };
        let ea = &self.a.graph.edges[k];
        for (j, eb) in self.b.graph.edges.iter().enumerate() {
            if self.eused[j] || eb.label != ea.label {
                continue;
            }
            let mut log = Vec::new();
            let ok = ea
                .sources
                .iter()
                .zip(&eb.sources)
                .chain(ea.targets.iter().zip(&eb.targets))
                .all(|(&x, &y)| self.bind(x, y, &mut log));
            if ok {
                self.emap[k] = Some(j);
                self.eused[j] = true;
                if self.search()? {
                    return Ok(true);
                }
                self.emap[k] = None;
                self.eused[j] = false;
            }
            self.unbind(&log);
        }
        Ok(false)
    }
}

fn label_profile(c: &Cospan) -> Vec<String> {
    let mut v: Vec<String> = c.graph.edges.iter().map(|e| format!("{:?}", e.label)).collect();
    v.sort();
    v
}

/// An interface-preserving isomorphism, if one exists.
pub fn cospan_iso(a: &Cospan, b: &Cospan) -> Result<Option<Iso>> {
    cospan_iso_with_budget(a, b, ISO_BUDGET)
}

pub fn cospan_iso_with_budget(a: &Cospan, b: &Cospan, budget: usize) -> Result<Option<Iso>> {
    if a.graph.vertices != b.graph.vertices
        || a.graph.edges.len() != b.graph.edges.len()
        || a.ins() != b.ins()
        || a.outs() != b.outs()
    {
        return Ok(None);
    }
    let mut da = a.graph.degrees();
    let mut db = b.graph.degrees();
    da.sort();
    db.sort();
    if da != db || label_profile(a) != label_profile(b) {
        return Ok(None);
    }
    let mut s = IsoSearch {
        a,
        b,
        vmap: vec![None; a.graph.vertices],
        vback: vec![None; b.graph.vertices],
        emap: vec![None; a.graph.edges.len()],
        eused: vec![false; b.graph.edges.len()],
        budget,
    };
    let mut log = Vec::new();
    let pairs = a.inputs.iter().zip(&b.inputs).chain(a.outputs.iter().zip(&b.outputs));
    for (&x, &y) in pairs {
        if !s.bind(x, y, &mut log) {
            return Ok(None);
        }
    }
    if !s.search()? {
        return Ok(None);
    }
    // Whatever is left is isolated on both sides.
    let mut free = (0..b.graph.vertices).filter(|&y| s.vback[y].is_none());
    let vertices = s.vmap.iter().map(|m| m.unwrap_or_else(|| free.next().expect("equal counts"))).collect();
    Ok(Some(Iso { vertices, edges: s.emap.into_iter().map(|e| e.expect("all edges mapped")).collect() }))
}

/// Isomorphism test with the default budget; budget exhaustion counts as "not shown isomorphic".
pub fn is_iso(a: &Cospan, b: &Cospan) -> bool {
    matches!(cospan_iso(a, b), Ok(Some(_)))
}

/// A term whose cospan is isomorphic to `c`: edges stacked in insertion order, their
/// targets traced back round to a wiring stage that feeds every tentacle.
pub fn extract_term(c: &Cospan, mode: ExtractMode) -> Result<Term> {
    let d = match mode {
        ExtractMode::Traced => Discipline::PartialMonogamous,
        ExtractMode::TracedComonoid => Discipline::PartialLeftMonogamous,
    };
    let bad = violations(c, d);
    if !bad.is_empty() {
        return Err(Error::Cospan(bad.join("; ")));
    }
    let g = &c.graph;
    let x: usize = g.edges.iter().map(|e| e.targets.len()).sum();
    let m = c.ins();
    let mut producer: Vec<Option<usize>> = vec![None; g.vertices];
    let mut at = 0;
    for e in &g.edges {
        for &t in &e.targets {
            producer[t] = Some(at);
            at += 1;
        }
    }
    for (p, &v) in c.inputs.iter().enumerate() {
        producer[v] = Some(x + p);
    }
    let mut consumed = vec![false; g.vertices];
    g.edges.iter().flat_map(|e| &e.sources).chain(&c.outputs).for_each(|&v| consumed[v] = true);
    let mut phantoms = 0;
    let mut loops = 0;
    for v in 0..g.vertices {
        if producer[v].is_none() {
            if consumed[v] {
                // Only reachable in comonoid mode: a traced fork feeds the readers.
                producer[v] = Some(x + m + phantoms);
                phantoms += 1;
            } else {
                loops += 1;
            }
        }
    }
    let src: Vec<usize> = g
        .edges
        .iter()
        .flat_map(|e| &e.sources)
        .chain(&c.outputs)
        .map(|&v| producer[v].expect("every read vertex has a producer"))
        .collect();
    let traced_fork = Term::trace(1, Term::fork()).expect("fork is 1 -> 2");
    let mut sources = vec![Term::id(x + m)];
    sources.extend((0..phantoms).map(|_| traced_fork.clone()));
    let mut stack: Vec<Term> = g.edges.iter().map(|e| e.label.clone()).collect();
    stack.push(Term::id(c.outs()));
    let body = Term::seq(vec![Term::par(sources), Term::wiring(x + m + phantoms, &src), Term::par(stack)])?;
    let core = Term::trace(x, body)?;
    let closed_loop = Term::trace(1, Term::id(1)).expect("identity loop");
    let mut parts: Vec<Term> = (0..loops).map(|_| closed_loop.clone()).collect();
    parts.push(core);
    Ok(Term::par(parts))
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering: vertices as points, edges as boxes with ordered ports, interface
/// positions as numbered plain nodes (outputs numbered after inputs).
pub fn to_dot(c: &Cospan, name: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "digraph \"{}\" {{", dot_escape(name));
    let _ = writeln!(s, "  rankdir=LR;");
    let _ = writeln!(s, "  node [shape=point];");
    for v in 0..c.graph.vertices {
        let _ = writeln!(s, "  v{v};");
    }
    for (k, e) in c.graph.edges.iter().enumerate() {
        let ins: Vec<String> = (0..e.sources.len()).map(|p| format!("<i{p}>")).collect();
        let outs: Vec<String> = (0..e.targets.len()).map(|p| format!("<o{p}>")).collect();
        let label = format!("{:?}", e.label).replace(['{', '}', '<', '>', '|'], " ");
        let _ = writeln!(
            s,
            "  e{k} [shape=record, label=\"{{{}}}|{}|{{{}}}\"];",
            ins.join("|"),
            dot_escape(&label),
            outs.join("|")
        );
        for (p, &v) in e.sources.iter().enumerate() {
            let _ = writeln!(s, "  v{v} -> e{k}:i{p};");
        }
        for (p, &v) in e.targets.iter().enumerate() {
            let _ = writeln!(s, "  e{k}:o{p} -> v{v};");
        }
    }
    for (p, &v) in c.inputs.iter().enumerate() {
        let _ = writeln!(s, "  in{p} [shape=plaintext, label=\"{p}\"];");
        let _ = writeln!(s, "  in{p} -> v{v} [style=dashed];");
    }
    for (p, &v) in c.outputs.iter().enumerate() {
        let q = c.inputs.len() + p;
        let _ = writeln!(s, "  out{p} [shape=plaintext, label=\"{q}\"];");
        let _ = writeln!(s, "  v{v} -> out{p} [style=dashed];");
    }
    s.push_str("}\n");
    s
}
