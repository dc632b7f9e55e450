//! Double-pushout rewriting of cospans: rules, matchings, pushout complements, boundary
//! filtering and rule application, plus the bundled rule bank.

use std::fmt;
use std::str::FromStr;

use crate::circuit::{interleave, Term};
use crate::error::{Error, Result};
use crate::hypergraph::{self, Cospan, Discipline, Edge, ExtractMode, Hypergraph, UnionFind, Vertex};
use crate::interp::{Interpretation, Value};
use crate::lang;
use crate::mealy;
use crate::opsem;

/// Default cap on candidate complements (and on matchings) per call.
pub const DEFAULT_BUDGET: usize = 10_000;

/// A rule `l -> r` with both sides folded: each side's graph carries one boundary list,
/// inputs followed by outputs.
#[derive(Clone, Debug)]
pub struct Rule {
    pub name: String,
    pub lhs: Term,
    pub rhs: Term,
    pub left: Hypergraph,
    pub left_boundary: Vec<Vertex>,
    pub right: Hypergraph,
    pub right_boundary: Vec<Vertex>,
    pub ins: usize,
    pub outs: usize,
    /// Only keep complements where every piece of a split vertex still has a reader or
    /// producer in the context; stops absorbed-fork rules from rewriting forever.
    pub spread: bool,
}

impl Rule {
    pub fn boundary(&self) -> usize {
        self.ins + self.outs
    }
}

fn fold(c: Cospan) -> (Hypergraph, Vec<Vertex>) {
    let mut b = c.inputs;
    b.extend(c.outputs);
    (c.graph, b)
}

pub fn make_rule(l: &Term, r: &Term) -> Result<Rule> {
    make_named_rule("rule", l, r)
}

pub fn make_named_rule(name: &str, l: &Term, r: &Term) -> Result<Rule> {
    if (l.ins(), l.outs()) != (r.ins(), r.outs()) {
        return Err(Error::Invalid(format!(
            "rule `{name}`: sides have types {} -> {} and {} -> {}",
            l.ins(),
            l.outs(),
            r.ins(),
            r.outs()
        )));
    }
    let (left, left_boundary) = fold(hypergraph::term_to_cospan(l));
    let (right, right_boundary) = fold(hypergraph::term_to_cospan(r));
    Ok(Rule {
        name: name.to_string(),
        lhs: l.clone(),
        rhs: r.clone(),
        left,
        left_boundary,
        right,
        right_boundary,
        ins: l.ins(),
        outs: l.outs(),
        spread: false,
    })
}

/// A label-preserving homomorphism from the rule's left graph into the host.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<usize>,
}

pub fn find_matchings(rule: &Rule, host: &Cospan) -> Result<Vec<Matching>> {
    find_matchings_with_budget(rule, host, DEFAULT_BUDGET)
}

struct Matcher<'a> {
    left: &'a Hypergraph,
    host: &'a Hypergraph,
    vmap: Vec<Option<Vertex>>,
    emap: Vec<usize>,
    out: Vec<Matching>,
    budget: usize,
}

impl Matcher<'_> {
    fn full(&mut self) -> Result<()> {
        let free: Vec<Vertex> = (0..self.vmap.len()).filter(|&v| self.vmap[v].is_none()).collect();
        let n = self.host.vertices;
        if !free.is_empty() && n == 0 {
            return Ok(());
        }
        let mut pick = vec![0usize; free.len()];
        loop {
            if self.out.len() >= self.budget {
                return Err(Error::Budget(format!("more than {} matchings", self.budget)));
            }
            let mut vertices: Vec<Vertex> = self.vmap.iter().map(|v| v.unwrap_or(0)).collect();
            for (k, &v) in free.iter().enumerate() {
                vertices[v] = pick[k];
            }
            self.out.push(Matching { vertices, edges: self.emap.clone() });
            // Odometer over host vertices for the unconstrained left vertices.
            let mut k = free.len();
            loop {
                if k == 0 {
                    return Ok(());
                }
                k -= 1;
                pick[k] += 1;
                if pick[k] < n {
                    break;
                }
                pick[k] = 0;
            }
        }
    }

    fn go(&mut self, k: usize) -> Result<()> {
        if k == self.left.edges.len() {
            return self.full();
        }
        let el = &self.left.edges[k];
        for (j, eh) in self.host.edges.iter().enumerate() {
            if eh.label != el.label {
                continue;
            }
            let mut log = Vec::new();
            let ok = el.sources.iter().zip(&eh.sources).chain(el.targets.iter().zip(&eh.targets)).all(|(&x, &y)| {
                match self.vmap[x] {
                    Some(z) => z == y,
                    None => {
                        self.vmap[x] = Some(y);
                        log.push(x);
                        true
                    }
                }
            });
            if ok {
                self.emap.push(j);
                self.go(k + 1)?;
                self.emap.pop();
            }
            for x in log {
                self.vmap[x] = None;
            }
        }
        Ok(())
    }
}

/// Every homomorphism, in order of the left graph's edges and then the host's candidates.
pub fn find_matchings_with_budget(rule: &Rule, host: &Cospan, budget: usize) -> Result<Vec<Matching>> {
    let mut m = Matcher {
        left: &rule.left,
        host: &host.graph,
        vmap: vec![None; rule.left.vertices],
        emap: Vec::new(),
        out: Vec::new(),
        budget,
    };
    m.go(0)?;
    Ok(m.out)
}

/// A context `C` with its boundary `i + j -> C`, the host's outer interface `m + n -> C`
/// and the map `C -> G`.
#[derive(Clone, Debug)]
pub struct Complement {
    pub graph: Hypergraph,
    pub boundary: Vec<Vertex>,
    pub outer: Vec<Vertex>,
    pub host_ins: usize,
    pub vertex_map: Vec<Vertex>,
    pub edge_map: Vec<usize>,
    /// The matching it complements is injective on vertices.
    pub mono: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Elem {
    Bound(usize),
    Tentacle(usize, bool, usize),
    Outer(usize),
}

fn outer_of(host: &Cospan) -> Vec<Vertex> {
    host.inputs.iter().chain(&host.outputs).copied().collect()
}

/// Why a matching has no pushout complement, if it has none.
pub fn gluing_failure(rule: &Rule, m: &Matching, host: &Cospan) -> Option<String> {
    let l = &rule.left;
    let mut in_boundary = vec![false; l.vertices];
    rule.left_boundary.iter().for_each(|&v| in_boundary[v] = true);
    for a in 0..m.edges.len() {
        for b in a + 1..m.edges.len() {
            if m.edges[a] == m.edges[b] {
                return Some(format!("no-identification: left edges {a} and {b} share host edge {}", m.edges[a]));
            }
        }
    }
    for v in 0..l.vertices {
        for w in v + 1..l.vertices {
            if m.vertices[v] == m.vertices[w] && !(in_boundary[v] && in_boundary[w]) {
                return Some(format!(
                    "no-identification: left vertices {v} and {w} share host vertex {}",
                    m.vertices[v]
                ));
            }
        }
    }
    let mut deleted = vec![false; host.graph.vertices];
    (0..l.vertices).filter(|&v| !in_boundary[v]).for_each(|v| deleted[m.vertices[v]] = true);
    let mut matched = vec![false; host.graph.edges.len()];
    m.edges.iter().for_each(|&e| matched[e] = true);
    for (k, e) in host.graph.edges.iter().enumerate() {
        if !matched[k] {
            if let Some(&v) = e.sources.iter().chain(&e.targets).find(|&&v| deleted[v]) {
                return Some(format!("no-dangling: host edge {k} touches deleted vertex {v}"));
            }
        }
    }
    if let Some(&v) = outer_of(host).iter().find(|&&v| deleted[v]) {
        return Some(format!("no-dangling: the interface touches deleted vertex {v}"));
    }
    None
}

/// Set partitions of `0..n` as block-index strings, in lexicographic order.
fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(k: usize, n: usize, cur: &mut Vec<usize>, blocks: usize, out: &mut Vec<Vec<usize>>) {
        if k == n {
            out.push(cur.clone());
            return;
        }
        for b in 0..=blocks {
            cur.push(b);
            go(k + 1, n, cur, blocks.max(b + 1), out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, &mut Vec::new(), 0, &mut out);
    out
}

/// Quotients of one fibre in which every block holds a boundary element: a partition of
/// the boundary elements, then a block choice for each remaining element.
fn fibre_quotients(fibre: &[Elem], spread: bool) -> Vec<Vec<usize>> {
    let bounds: Vec<usize> = (0..fibre.len()).filter(|&k| matches!(fibre[k], Elem::Bound(_))).collect();
    let others: Vec<usize> = (0..fibre.len()).filter(|&k| !matches!(fibre[k], Elem::Bound(_))).collect();
    let mut out = Vec::new();
    for p in partitions(bounds.len()) {
        let blocks = p.iter().max().map_or(0, |b| b + 1);
        let mut pick = vec![0usize; others.len()];
        loop {
            let mut assign = vec![0usize; fibre.len()];
            for (k, &e) in bounds.iter().enumerate() {
                assign[e] = p[k];
            }
            for (k, &e) in others.iter().enumerate() {
                assign[e] = pick[k];
            }
            if !spread || (0..blocks).all(|b| others.iter().any(|&e| assign[e] == b)) {
                out.push(assign);
            }
            let mut k = others.len();
            let done = loop {
                if k == 0 {
                    break true;
                }
                k -= 1;
                pick[k] += 1;
                if pick[k] < blocks {
                    break false;
                }
                pick[k] = 0;
            };
            if done || blocks == 0 {
                break;
            }
        }
    }
    out
}

pub fn pushout_complements(rule: &Rule, m: &Matching, host: &Cospan) -> Result<Vec<Complement>> {
    pushout_complements_with_budget(rule, m, host, DEFAULT_BUDGET)
}

/// All pushout complements of the matching, each re-verified by recomputing the pushout.
pub fn pushout_complements_with_budget(
    rule: &Rule,
    m: &Matching,
    host: &Cospan,
    budget: usize,
) -> Result<Vec<Complement>> {
    if gluing_failure(rule, m, host).is_some() {
        return Ok(Vec::new());
    }
    let g = &host.graph;
    let outer = outer_of(host);
    let mut image = vec![false; g.vertices];
    (0..rule.left.vertices).for_each(|v| image[m.vertices[v]] = true);
    let mut matched = vec![false; g.edges.len()];
    m.edges.iter().for_each(|&e| matched[e] = true);

    let mut fibres: Vec<(Vertex, Vec<Elem>)> = Vec::new();
    let mut fibre_of = vec![usize::MAX; g.vertices];
    for (k, &a) in rule.left_boundary.iter().enumerate() {
        let v = m.vertices[a];
        if fibre_of[v] == usize::MAX {
            fibre_of[v] = fibres.len();
            fibres.push((v, Vec::new()));
        }
        fibres[fibre_of[v]].1.push(Elem::Bound(k));
    }
    fibres.sort_by_key(|f| f.0);
    for (k, f) in fibres.iter().enumerate() {
        fibre_of[f.0] = k;
    }
    for (k, e) in g.edges.iter().enumerate() {
        if matched[k] {
            continue;
        }
        for (p, &v) in e.sources.iter().enumerate() {
            if fibre_of[v] != usize::MAX {
                fibres[fibre_of[v]].1.push(Elem::Tentacle(k, false, p));
            }
        }
        for (p, &v) in e.targets.iter().enumerate() {
            if fibre_of[v] != usize::MAX {
                fibres[fibre_of[v]].1.push(Elem::Tentacle(k, true, p));
            }
        }
    }
    for (p, &v) in outer.iter().enumerate() {
        if fibre_of[v] != usize::MAX {
            fibres[fibre_of[v]].1.push(Elem::Outer(p));
        }
    }
    let choices: Vec<Vec<Vec<usize>>> = fibres.iter().map(|(_, f)| fibre_quotients(f, rule.spread)).collect();
    let total = choices.iter().try_fold(1usize, |acc, c| acc.checked_mul(c.len()));
    match total {
        Some(t) if t <= budget => {}
        _ => return Err(Error::Budget(format!("more than {budget} candidate complements"))),
    }

    let kept: Vec<Vertex> = (0..g.vertices).filter(|&v| !image[v]).collect();
    let mono = injective(&m.vertices);
    let mut out = Vec::new();
    let mut pick = vec![0usize; fibres.len()];
    if choices.iter().any(|c| c.is_empty()) {
        return Ok(out);
    }
    loop {
        let mut c = build_complement(host, &outer, &matched, &kept, &fibres, &choices, &pick, rule.boundary());
        c.mono = mono;
        if verify_pushout(rule, m, host, &c) {
            out.push(c);
        }
        let mut k = pick.len();
        let done = loop {
            if k == 0 {
                break true;
            }
            k -= 1;
            pick[k] += 1;
            if pick[k] < choices[k].len() {
                break false;
            }
            pick[k] = 0;
        };
        if done {
            return Ok(out);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn build_complement(
    host: &Cospan,
    outer: &[Vertex],
    matched: &[bool],
    kept: &[Vertex],
    fibres: &[(Vertex, Vec<Elem>)],
    choices: &[Vec<Vec<usize>>],
    pick: &[usize],
    boundary_len: usize,
) -> Complement {
    let g = &host.graph;
    let mut id = vec![usize::MAX; g.vertices];
    let mut vertex_map = Vec::new();
    for &v in kept {
        id[v] = vertex_map.len();
        vertex_map.push(v);
    }
    let mut boundary = vec![0; boundary_len];
    let mut outer_c: Vec<Vertex> = outer.iter().map(|&v| id[v]).collect();
    let mut tentacle = std::collections::HashMap::new();
    for (f, (v, elems)) in fibres.iter().enumerate() {
        let assign = &choices[f][pick[f]];
        let base = vertex_map.len();
        let blocks = assign.iter().max().map_or(0, |b| b + 1);
        vertex_map.extend(std::iter::repeat_n(*v, blocks));
        for (e, &b) in elems.iter().zip(assign) {
            match *e {
                Elem::Bound(k) => boundary[k] = base + b,
                Elem::Outer(p) => outer_c[p] = base + b,
                Elem::Tentacle(k, t, p) => {
                    tentacle.insert((k, t, p), base + b);
                }
            }
        }
    }
    let mut graph = Hypergraph { vertices: vertex_map.len(), edges: Vec::new() };
    let mut edge_map = Vec::new();
    for (k, e) in g.edges.iter().enumerate() {
        if matched[k] {
            continue;
        }
        let at = |t: bool, p: usize, v: Vertex| tentacle.get(&(k, t, p)).copied().unwrap_or(id[v]);
        graph.edges.push(Edge {
            label: e.label.clone(),
            sources: e.sources.iter().enumerate().map(|(p, &v)| at(false, p, v)).collect(),
            targets: e.targets.iter().enumerate().map(|(p, &v)| at(true, p, v)).collect(),
        });
        edge_map.push(k);
    }
    Complement { graph, boundary, outer: outer_c, host_ins: host.inputs.len(), vertex_map, edge_map, mono: true }
}

/// Recomputes the pushout of `L <- i + j -> C` and checks the induced map onto the host is
/// an isomorphism that respects the interface.
fn verify_pushout(rule: &Rule, m: &Matching, host: &Cospan, c: &Complement) -> bool {
    let g = &host.graph;
    let nl = rule.left.vertices;
    let mut uf = UnionFind::new(nl + c.graph.vertices);
    for (&a, &b) in rule.left_boundary.iter().zip(&c.boundary) {
        uf.union(a, nl + b);
    }
    let (classes, cls) = uf.classes();
    if classes != g.vertices {
        return false;
    }
    let to_host = |x: usize| if x < nl { m.vertices[x] } else { c.vertex_map[x - nl] };
    let mut image = vec![usize::MAX; classes];
    for x in 0..nl + c.graph.vertices {
        let h = to_host(x);
        if image[cls[x]] == usize::MAX {
            image[cls[x]] = h;
        } else if image[cls[x]] != h {
            return false;
        }
    }
    let mut seen = vec![false; g.vertices];
    for &h in &image {
        if h == usize::MAX || std::mem::replace(&mut seen[h], true) {
            return false;
        }
    }
    let mut hit = vec![false; g.edges.len()];
    let edges = rule.left.edges.iter().zip(&m.edges).map(|(e, &k)| (e, k, 0));
    let edges = edges.chain(c.graph.edges.iter().zip(&c.edge_map).map(|(e, &k)| (e, k, nl)));
    for (e, k, shift) in edges {
        if std::mem::replace(&mut hit[k], true) {
            return false;
        }
        let h = &g.edges[k];
        let same = |ours: &[Vertex], theirs: &[Vertex]| {
            ours.len() == theirs.len() && ours.iter().zip(theirs).all(|(&v, &w)| image[cls[v + shift]] == w)
        };
        if h.label != e.label || !same(&e.sources, &h.sources) || !same(&e.targets, &h.targets) {
            return false;
        }
    }
    hit.iter().all(|&b| b) && c.outer.iter().zip(outer_of(host)).all(|(&v, w)| image[cls[nl + v]] == w)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    Smc,
    #[default]
    Traced,
    TracedComonoid,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "smc" => Ok(Mode::Smc),
            "traced" => Ok(Mode::Traced),
            "traced-comonoid" | "traced_comonoid" => Ok(Mode::TracedComonoid),
            _ => Err(Error::Invalid(format!("unknown mode `{s}` (expected smc, traced or traced-comonoid)"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Smc => "smc",
            Mode::Traced => "traced",
            Mode::TracedComonoid => "traced-comonoid",
        })
    }
}

/// The complement turned sideways: `j + m -> C <- n + i`.
pub fn rotated(c: &Complement, rule_ins: usize) -> Cospan {
    let (c1, c2) = c.boundary.split_at(rule_ins);
    let (d1, d2) = c.outer.split_at(c.host_ins);
    Cospan {
        graph: c.graph.clone(),
        inputs: c2.iter().chain(d1).copied().collect(),
        outputs: d2.iter().chain(c1).copied().collect(),
    }
}

fn injective(list: &[Vertex]) -> bool {
    let mut seen = std::collections::HashSet::new();
    list.iter().all(|v| seen.insert(*v))
}

pub fn is_boundary_complement(c: &Complement, rule_ins: usize, mode: Mode) -> bool {
    let (c1, c2) = c.boundary.split_at(rule_ins);
    let r = rotated(c, rule_ins);
    match mode {
        Mode::Smc => c.mono && injective(c1) && injective(c2) && hypergraph::violations(&r, Discipline::Monogamous).is_empty(),
        Mode::Traced => injective(c1) && injective(c2) && hypergraph::check_partial_monogamous(&r),
        Mode::TracedComonoid => injective(c2) && hypergraph::check_partial_left_monogamous(&r),
    }
}

pub fn filter_boundary(complements: Vec<Complement>, rule: &Rule, mode: Mode) -> Vec<Complement> {
    complements.into_iter().filter(|c| is_boundary_complement(c, rule.ins, mode)).collect()
}

/// Glues the right-hand side into the context and unfolds the outer interface.
pub fn rewrite(rule: &Rule, c: &Complement) -> Cospan {
    let nc = c.graph.vertices;
    let mut g = c.graph.clone();
    g.vertices += rule.right.vertices;
    for e in &rule.right.edges {
        g.edges.push(Edge {
            label: e.label.clone(),
            sources: e.sources.iter().map(|&v| v + nc).collect(),
            targets: e.targets.iter().map(|&v| v + nc).collect(),
        });
    }
    let mut uf = UnionFind::new(g.vertices);
    for (&a, &b) in c.boundary.iter().zip(&rule.right_boundary) {
        uf.union(a, b + nc);
    }
    let (n, map) = uf.classes();
    let edges = g
        .edges
        .into_iter()
        .map(|e| Edge {
            label: e.label,
            sources: e.sources.iter().map(|&v| map[v]).collect(),
            targets: e.targets.iter().map(|&v| map[v]).collect(),
        })
        .collect();
    let outer: Vec<Vertex> = c.outer.iter().map(|&v| map[v]).collect();
    let (ins, outs) = outer.split_at(c.host_ins);
    Cospan { graph: Hypergraph { vertices: n, edges }, inputs: ins.to_vec(), outputs: outs.to_vec() }
}

/// Every rewrite of `host` by `rule` in `mode`, one per surviving complement.
pub fn rewrite_all(rule: &Rule, host: &Cospan, mode: Mode) -> Result<Vec<Cospan>> {
    let mut out = Vec::new();
    for m in find_matchings(rule, host)? {
        for c in filter_boundary(pushout_complements(rule, &m, host)?, rule, mode) {
            out.push(rewrite(rule, &c));
        }
    }
    Ok(out)
}

/// The first rewrite any rule allows, trying rules in order.
pub fn rewrite_once(rules: &[Rule], host: &Cospan, mode: Mode) -> Result<Option<(usize, Cospan)>> {
    for (k, rule) in rules.iter().enumerate() {
        for m in find_matchings(rule, host)? {
            let cs = filter_boundary(pushout_complements(rule, &m, host)?, rule, mode);
            if let Some(c) = cs.first() {
                return Ok(Some((k, rewrite(rule, c))));
            }
        }
    }
    Ok(None)
}

/// Applies `rewrite_once` until nothing matches; returns the result and the rule trace.
pub fn normalize(rules: &[Rule], host: &Cospan, mode: Mode, budget: usize) -> Result<(Cospan, Vec<String>)> {
    let mut cur = host.clone();
    let mut trace = Vec::new();
    while let Some((k, next)) = rewrite_once(rules, &cur, mode)? {
        if trace.len() >= budget {
            return Err(Error::Budget(format!("rewriting did not terminate within {budget} steps")));
        }
        trace.push(rules[k].name.clone());
        cur = next;
    }
    Ok((cur, trace))
}

/// Keeps the first of each isomorphism class.
pub fn dedup_iso(graphs: Vec<Cospan>) -> Vec<Cospan> {
    let mut out: Vec<Cospan> = Vec::new();
    for g in graphs {
        if !out.iter().any(|h| hypergraph::is_iso(h, &g)) {
            out.push(g);
        }
    }
    out
}

/// Both sides denote bisimilar machines.
pub fn verify_rule_sound(l: &Term, r: &Term, i: &Interpretation) -> Result<bool> {
    let m1 = mealy::circuit_to_mealy(l, i)?;
    let m2 = mealy::circuit_to_mealy(r, i)?;
    mealy::bisimilar(&m1, &m2)
}

/// A constant generator on one wire; bottom is the unit of join.
pub fn constant(v: Value, i: &Interpretation) -> Term {
    if v == i.lattice().bottom() {
        Term::intro()
    } else {
        Term::values(vec![v])
    }
}

fn constants(vs: &[Value], i: &Interpretation) -> Term {
    Term::par(vs.iter().map(|&v| constant(v, i)).collect())
}

fn seq2(a: Term, b: Term) -> Term {
    Term::seq(vec![a, b]).expect("rule bank widths")
}

/// Gate-on-constants rules for every primitive and join, plus `intro ; delay -> intro`.
pub fn value_rules(i: &Interpretation) -> Vec<Rule> {
    let l = i.lattice();
    let mut out = Vec::new();
    for p in i.primitives() {
        for w in l.words(p.sig.arity) {
            let lhs = seq2(constants(&w, i), Term::prim(p.sig.name.clone(), p.sig.arity, p.sig.coarity));
            let rhs = constants(&p.apply(l, &w), i);
            let name = format!("{}({})", p.sig.name, w.iter().map(|&v| l.name(v)).collect::<Vec<_>>().join(","));
            out.push(make_named_rule(&name, &lhs, &rhs).expect("same type"));
        }
    }
    for w in l.words(2) {
        let rhs = constant(l.join(w[0], w[1]), i);
        let name = format!("join({},{})", l.name(w[0]), l.name(w[1]));
        out.push(make_named_rule(&name, &seq2(constants(&w, i), Term::join()), &rhs).expect("same type"));
    }
    out.push(make_named_rule("delay(bot)", &seq2(Term::intro(), Term::delay(1)), &Term::intro()).expect("same type"));
    out
}

/// Rules that need the comonoid: copying and discarding constants, discarding gates and
/// delays, and copying gates.
pub fn comonoid_rules(i: &Interpretation) -> Vec<Rule> {
    let l = i.lattice();
    let mut out = Vec::new();
    for v in l.values() {
        let c = constant(v, i);
        let mut r = make_named_rule(
            &format!("fork({})", l.name(v)),
            &seq2(c.clone(), Term::fork()),
            &Term::par(vec![c.clone(), c.clone()]),
        )
        .expect("same type");
        r.spread = true;
        out.push(r);
        out.push(make_named_rule(&format!("elim({})", l.name(v)), &seq2(c, Term::elim()), &Term::id(0)).expect("same type"));
    }
    for p in i.primitives() {
        let (n, k) = (p.sig.arity, p.sig.coarity);
        let g = Term::prim(p.sig.name.clone(), n, k);
        let lhs = seq2(g.clone(), Term::par(vec![Term::elim(); k]));
        out.push(make_named_rule(&format!("discard({})", p.sig.name), &lhs, &Term::par(vec![Term::elim(); n])).expect("same type"));
        if k == 1 {
            let copy = Term::seq(vec![
                Term::par(vec![Term::fork(); n]),
                Term::permutation(&(0..2 * n).map(|j| if j < n { 2 * j } else { 2 * (j - n) + 1 }).collect::<Vec<_>>()),
                Term::par(vec![g.clone(), g.clone()]),
            ])
            .expect("rule bank widths");
            let mut r = make_named_rule(&format!("copy({})", p.sig.name), &seq2(g, Term::fork()), &copy).expect("same type");
            r.spread = true;
            out.push(r);
        }
    }
    out.push(make_named_rule("discard(delay)", &seq2(Term::delay(1), Term::elim()), &Term::elim()).expect("same type"));
    out
}

pub fn rule_bank(i: &Interpretation) -> Vec<Rule> {
    let mut r = value_rules(i);
    r.extend(comonoid_rules(i));
    r
}

/// The streaming rule for a combinational `f: m -> n` and an input word: the value and the
/// delayed remainder joined in front of `f` become a `now` copy and a delayed `later` copy.
pub fn streaming_rule(f: &Term, word: &[Value], i: &Interpretation) -> Result<Rule> {
    let (m, n) = (f.ins(), f.outs());
    if word.len() != m {
        return Err(Error::Width { expected: m, got: word.len() });
    }
    let lhs = Term::seq(vec![
        Term::par(word.iter().map(|&v| seq2(Term::par(vec![constant(v, i), Term::delay(1)]), Term::join())).collect()),
        f.clone(),
    ])?;
    let rhs = Term::seq(vec![
        Term::par(vec![seq2(constants(word, i), f.clone()), seq2(Term::delay(m), f.clone())]),
        interleave(n),
        Term::par(vec![Term::join(); n]),
    ])?;
    make_named_rule(&format!("stream({})", i.lattice().word_name(word)), &lhs, &rhs)
}

/// Rebuilds the cospan after moving every delay and value into one register (Mealy form
/// before feedback elimination).
pub fn mealy_transform(c: &Cospan) -> Result<Cospan> {
    let t = hypergraph::extract_term(c, ExtractMode::TracedComonoid)?;
    let form = opsem::mealy_rule(&opsem::global_trace_delay_form(&t));
    Ok(hypergraph::term_to_cospan(&form.to_term()))
}

/// Rebuilds the cospan in Mealy form with the instantaneous feedback unrolled.
pub fn instant_feedback_transform(c: &Cospan, i: &Interpretation) -> Result<Cospan> {
    let t = hypergraph::extract_term(c, ExtractMode::TracedComonoid)?;
    Ok(hypergraph::term_to_cospan(&opsem::to_mealy_form(&t, i).to_term()))
}

/// Rules declared in a circuit source file.
pub fn parse_rules(src: &str, i: &Interpretation) -> Result<Vec<Rule>> {
    let s = lang::parse(src, i.lattice())?;
    s.rules.iter().map(|r| make_named_rule(&r.name, &r.lhs.term(), &r.rhs.term())).collect()
}
