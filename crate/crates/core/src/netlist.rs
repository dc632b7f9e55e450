//! Flat wire-and-cell view of a term, used for evaluation and for printing.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use crate::circuit::{Node, Term};
use crate::error::{Error, Result};
use crate::interp::{Interpretation, Lattice, Primitive, Value};

pub type Wire = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CellKind {
    Prim(String),
    Join,
    Delay,
    /// Holds its letter for one tick, then bottom.
    Value(Value),
    Waveform(Value),
    Uncertain { alts: Vec<Value>, held: bool },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub kind: CellKind,
    pub ins: Vec<Wire>,
    pub outs: Vec<Wire>,
}

/// Wires without a driver carry bottom.
#[derive(Clone, Debug, Default)]
pub struct Netlist {
    pub wires: usize,
    pub inputs: Vec<Wire>,
    pub outputs: Vec<Wire>,
    pub cells: Vec<Cell>,
}

struct Flattener {
    parent: Vec<usize>,
    cells: Vec<Cell>,
    /// When set, traces are recorded as (placeholder, source) cuts instead of merged.
    cuts: Option<Vec<(Wire, Wire)>>,
}

impl Flattener {
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
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            self.parent[hi] = lo;
        }
    }

    fn cell(&mut self, kind: CellKind, ins: Vec<Wire>, n_out: usize) -> Vec<Wire> {
        let outs: Vec<Wire> = (0..n_out).map(|_| self.wire()).collect();
        self.cells.push(Cell { kind, ins, outs: outs.clone() });
        outs
    }

    fn go(&mut self, t: &Term, ins: &[Wire]) -> Vec<Wire> {
        debug_assert_eq!(ins.len(), t.ins());
        match t.node() {
            Node::Primitive { name, outs, .. } => self.cell(CellKind::Prim(name.clone()), ins.to_vec(), *outs),
            Node::Id(_) => ins.to_vec(),
            Node::Symmetry(m, _) => ins[*m..].iter().chain(&ins[..*m]).copied().collect(),
            Node::Fork => vec![ins[0], ins[0]],
            Node::Join => self.cell(CellKind::Join, ins.to_vec(), 1),
            Node::Intro => vec![self.wire()],
            Node::Elim => Vec::new(),
            Node::ValueWord(w) => w
                .iter()
                .map(|&v| if v.0 == 0 { self.wire() } else { self.cell(CellKind::Value(v), vec![], 1)[0] })
                .collect(),
            Node::Delay(_) => ins.iter().map(|&i| self.cell(CellKind::Delay, vec![i], 1)[0]).collect(),
            Node::Waveform(w) => w.iter().map(|&v| self.cell(CellKind::Waveform(v), vec![], 1)[0]).collect(),
            Node::Uncertain { alts, held } => (0..t.outs())
                .map(|k| {
                    let letters = alts.iter().map(|a| a[k]).collect();
                    self.cell(CellKind::Uncertain { alts: letters, held: *held }, vec![], 1)[0]
                })
                .collect(),
            Node::Seq(cs) => {
                let mut cur = ins.to_vec();
                for c in cs {
                    cur = self.go(c, &cur);
                }
                cur
            }
            Node::Par(cs) => {
                let mut out = Vec::with_capacity(t.outs());
                let mut at = 0;
                for c in cs {
                    out.extend(self.go(c, &ins[at..at + c.ins()]));
                    at += c.ins();
                }
                out
            }
            Node::Trace(x, body) => {
                let mut bin: Vec<Wire> = (0..*x).map(|_| self.wire()).collect();
                let placeholders = bin.clone();
                bin.extend_from_slice(ins);
                let outs = self.go(body, &bin);
                for (p, &o) in placeholders.iter().zip(&outs) {
                    match &mut self.cuts {
                        Some(cuts) => cuts.push((*p, o)),
                        None => self.union(*p, o),
                    }
                }
                outs[*x..].to_vec()
            }
        }
    }
}

impl Netlist {
    pub fn from_term(t: &Term) -> Netlist {
        Netlist::flatten(t, false).0
    }

    /// Flattens without closing traces; returns the (placeholder, source) pair of every traced wire.
    pub fn from_term_cut(t: &Term) -> (Netlist, Vec<(Wire, Wire)>) {
        Netlist::flatten(t, true)
    }

    fn flatten(t: &Term, cut: bool) -> (Netlist, Vec<(Wire, Wire)>) {
        let mut f = Flattener { parent: Vec::new(), cells: Vec::new(), cuts: cut.then(Vec::new) };
        let inputs: Vec<Wire> = (0..t.ins()).map(|_| f.wire()).collect();
        let outputs = f.go(t, &inputs);
        let n = f.parent.len();
        let mut id = vec![usize::MAX; n];
        let mut next = 0;
        let mut canon = |f: &mut Flattener, w: Wire| {
            let r = f.find(w);
            if id[r] == usize::MAX {
                id[r] = next;
                next += 1;
            }
            id[r]
        };
        let inputs: Vec<Wire> = inputs.iter().map(|&w| canon(&mut f, w)).collect();
        let mut cells = std::mem::take(&mut f.cells);
        for c in &mut cells {
            for w in c.ins.iter_mut().chain(c.outs.iter_mut()) {
                *w = canon(&mut f, *w);
            }
        }
        let outputs = outputs.iter().map(|&w| canon(&mut f, w)).collect();
        let cuts: Vec<(Wire, Wire)> = f.cuts.take().unwrap_or_default();
        let cuts = cuts.into_iter().map(|(p, o)| (canon(&mut f, p), canon(&mut f, o))).collect();
        let net = Netlist { wires: next, inputs, outputs, cells };
        debug_assert!(net.drivers().is_ok());
        (net, cuts)
    }

    /// For each wire, the cell driving it, if any.
    pub fn drivers(&self) -> Result<Vec<Option<usize>>> {
        let mut d = vec![None; self.wires];
        for (i, c) in self.cells.iter().enumerate() {
            for &o in &c.outs {
                if d[o].is_some() || self.inputs.contains(&o) {
                    return Err(Error::Invalid(format!("wire {o} has several drivers")));
                }
                d[o] = Some(i);
            }
        }
        Ok(d)
    }

    pub fn is_stateful(kind: &CellKind) -> bool {
        matches!(kind, CellKind::Delay | CellKind::Value(_) | CellKind::Uncertain { held: false, .. })
    }

    /// Elaborates back into a term: layered cells, feedback through one outer trace.
    pub fn to_term(&self) -> Term {
        let (x, body) = self.to_open_term();
        Term::trace(x, body).expect("trace width fits")
    }

    /// Trace-free body `(x + ins) -> (x + outs)` whose first `x` wires close the feedback.
    pub fn to_open_term(&self) -> (usize, Term) {
        #[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
        enum Key {
            W(Wire),
            Fb(Wire),
        }
        let drivers = self.drivers().expect("well-formed netlist");
        let mut available = vec![false; self.wires];
        for &i in &self.inputs {
            available[i] = true;
        }
        let mut intros = Vec::new();
        let mut used = vec![false; self.wires];
        for c in &self.cells {
            for &w in &c.ins {
                used[w] = true;
            }
        }
        for &w in &self.outputs {
            used[w] = true;
        }
        for w in 0..self.wires {
            if drivers[w].is_none() && !available[w] && used[w] {
                available[w] = true;
                intros.push(w);
            }
        }
        let mut feedback: Vec<Wire> = Vec::new();
        let mut is_fb = vec![false; self.wires];
        let mut done = vec![false; self.cells.len()];
        let mut layers: Vec<Vec<usize>> = Vec::new();
        let mut remaining = self.cells.len();
        while remaining > 0 {
            let mut layer: Vec<usize> = (0..self.cells.len())
                .filter(|&c| !done[c] && self.cells[c].ins.iter().all(|&w| available[w] || is_fb[w]))
                .collect();
            if layer.is_empty() {
                let forced = (0..self.cells.len())
                    .filter(|&c| !done[c])
                    .min_by_key(|&c| (!Netlist::is_stateful(&self.cells[c].kind), c))
                    .unwrap();
                for &w in &self.cells[forced].ins {
                    if !available[w] && !is_fb[w] {
                        is_fb[w] = true;
                        feedback.push(w);
                    }
                }
                layer.push(forced);
            }
            for &c in &layer {
                done[c] = true;
                for &w in &self.cells[c].outs {
                    available[w] = true;
                }
            }
            remaining -= layer.len();
            layers.push(layer);
        }
        let read = |w: Wire| if is_fb[w] { Key::Fb(w) } else { Key::W(w) };
        let final_demand: Vec<Key> = feedback
            .iter()
            .map(|&w| Key::W(w))
            .chain(self.outputs.iter().map(|&w| read(w)))
            .collect();
        let mut last_use: HashMap<Key, usize> = HashMap::new();
        for (l, layer) in layers.iter().enumerate() {
            for &c in layer {
                for &w in &self.cells[c].ins {
                    last_use.insert(read(w), l);
                }
            }
        }
        for &k in &final_demand {
            last_use.insert(k, layers.len());
        }
        let mut bundle: Vec<Key> = feedback
            .iter()
            .map(|&w| Key::Fb(w))
            .chain(self.inputs.iter().map(|&w| Key::W(w)))
            .chain(intros.iter().map(|&w| Key::W(w)))
            .collect();
        let mut stages = vec![Term::par(
            std::iter::once(Term::id(feedback.len() + self.inputs.len()))
                .chain(intros.iter().map(|_| Term::intro()))
                .collect(),
        )];
        let route = |bundle: &[Key], demand: &[Key]| {
            let pos: HashMap<Key, usize> = bundle.iter().enumerate().map(|(i, &k)| (k, i)).collect();
            let src: Vec<usize> = demand.iter().map(|k| pos[k]).collect();
            Term::wiring(bundle.len(), &src)
        };
        for (l, layer) in layers.iter().enumerate() {
            let mut demand: Vec<Key> = Vec::new();
            let mut terms = Vec::new();
            let mut produced = Vec::new();
            for &c in layer {
                let cell = &self.cells[c];
                demand.extend(cell.ins.iter().map(|&w| read(w)));
                terms.push(cell_term(cell));
                produced.extend(cell.outs.iter().map(|&w| Key::W(w)));
            }
            let mut seen = std::collections::HashSet::new();
            let pass: Vec<Key> = bundle
                .iter()
                .copied()
                .filter(|k| last_use.get(k).is_some_and(|&u| u > l) && seen.insert(*k))
                .collect();
            demand.extend(pass.iter().copied());
            stages.push(route(&bundle, &demand));
            terms.push(Term::id(pass.len()));
            stages.push(Term::par(terms));
            bundle = produced.into_iter().chain(pass).collect();
        }
        stages.push(route(&bundle, &final_demand));
        (feedback.len(), Term::seq_unchecked(stages))
    }
}

fn cell_term(c: &Cell) -> Term {
    match &c.kind {
        CellKind::Prim(name) => Term::prim(name.clone(), c.ins.len(), c.outs.len()),
        CellKind::Join => Term::join(),
        CellKind::Delay => Term::delay(1),
        CellKind::Value(v) => Term::values(vec![*v]),
        CellKind::Waveform(v) => Term::waveform(vec![*v]),
        CellKind::Uncertain { alts, held } => {
            Term::uncertain(alts.iter().map(|&v| vec![v]).collect(), *held).expect("non-empty")
        }
    }
}

#[derive(Clone, Debug)]
enum Op {
    Prim(usize),
    Join,
    Const(Value),
}

/// A netlist bound to an interpretation, ready to step.
#[derive(Debug)]
pub struct Compiled {
    lattice: Arc<Lattice>,
    prims: Vec<Primitive>,
    inputs: Vec<Wire>,
    outputs: Vec<Wire>,
    wires: usize,
    /// Combinational cells in a topological order of their acyclic part.
    comb: Vec<(Op, Vec<Wire>, Vec<Wire>)>,
    consumers: Vec<Vec<u32>>,
    /// State-holding cells: (output wire, input wire if a delay, initial letter).
    regs: Vec<(Wire, Option<Wire>, Value)>,
}

impl Compiled {
    /// Binds primitives by name; uncertain generators are resolved in the given world.
    pub fn new(net: &Netlist, interp: &Interpretation, world: Option<usize>) -> Result<Compiled> {
        let bot = interp.lattice().bottom();
        let mut prims: Vec<Primitive> = Vec::new();
        let mut prim_ix: HashMap<String, usize> = HashMap::new();
        let mut comb = Vec::new();
        let mut regs = Vec::new();
        for c in &net.cells {
            match &c.kind {
                CellKind::Prim(name) => {
                    let p = interp.primitive(name).ok_or_else(|| Error::UnknownPrimitive(name.clone()))?;
                    if (p.sig.arity, p.sig.coarity) != (c.ins.len(), c.outs.len()) {
                        return Err(Error::PrimitiveArity {
                            name: name.clone(),
                            expected_in: p.sig.arity,
                            expected_out: p.sig.coarity,
                            got_in: c.ins.len(),
                            got_out: c.outs.len(),
                        });
                    }
                    let ix = *prim_ix.entry(name.clone()).or_insert_with(|| {
                        prims.push(p.clone());
                        prims.len() - 1
                    });
                    comb.push((Op::Prim(ix), c.ins.clone(), c.outs.clone()));
                }
                CellKind::Join => comb.push((Op::Join, c.ins.clone(), c.outs.clone())),
                CellKind::Waveform(v) => comb.push((Op::Const(*v), vec![], c.outs.clone())),
                CellKind::Delay => regs.push((c.outs[0], Some(c.ins[0]), bot)),
                CellKind::Value(v) => regs.push((c.outs[0], None, *v)),
                CellKind::Uncertain { alts, held } => {
                    let w = world.ok_or_else(|| {
                        Error::Invalid("uncertain values need a chosen alternative to evaluate".into())
                    })?;
                    let v = alts.get(w).copied().unwrap_or(bot);
                    if *held {
                        comb.push((Op::Const(v), vec![], c.outs.clone()));
                    } else {
                        regs.push((c.outs[0], None, v));
                    }
                }
            }
        }
        let mut producer = vec![usize::MAX; net.wires];
        for (i, (_, _, outs)) in comb.iter().enumerate() {
            for &o in outs {
                producer[o] = i;
            }
        }
        let mut indeg = vec![0usize; comb.len()];
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); comb.len()];
        for (i, (_, ins, _)) in comb.iter().enumerate() {
            for &w in ins {
                if producer[w] != usize::MAX {
                    indeg[i] += 1;
                    succ[producer[w]].push(i);
                }
            }
        }
        let mut order = Vec::with_capacity(comb.len());
        let mut placed = vec![false; comb.len()];
        let mut queue: VecDeque<usize> = (0..comb.len()).filter(|&i| indeg[i] == 0).collect();
        let mut next_unplaced = 0;
        while order.len() < comb.len() {
            if let Some(i) = queue.pop_front() {
                if placed[i] {
                    continue;
                }
                placed[i] = true;
                order.push(i);
                for &s in &succ[i] {
                    indeg[s] = indeg[s].saturating_sub(1);
                    if indeg[s] == 0 && !placed[s] {
                        queue.push_back(s);
                    }
                }
            } else {
                while placed[next_unplaced] {
                    next_unplaced += 1;
                }
                indeg[next_unplaced] = 0;
                queue.push_back(next_unplaced);
            }
        }
        let comb: Vec<_> = order.into_iter().map(|i| comb[i].clone()).collect();
        let mut consumers = vec![Vec::new(); net.wires];
        for (i, (_, ins, _)) in comb.iter().enumerate() {
            for &w in ins {
                consumers[w].push(i as u32);
            }
        }
        Ok(Compiled {
            lattice: interp.lattice_arc(),
            prims,
            inputs: net.inputs.clone(),
            outputs: net.outputs.clone(),
            wires: net.wires,
            comb,
            consumers,
            regs,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn lattice_arc(&self) -> Arc<Lattice> {
        self.lattice.clone()
    }

    pub fn ins(&self) -> usize {
        self.inputs.len()
    }

    pub fn outs(&self) -> usize {
        self.outputs.len()
    }

    pub fn state_len(&self) -> usize {
        self.regs.len()
    }

    pub fn initial(&self) -> Vec<Value> {
        self.regs.iter().map(|r| r.2).collect()
    }

    /// Least solution of every wire for one tick.
    pub fn settle(&self, state: &[Value], inputs: &[Value]) -> Vec<Value> {
        let l = &*self.lattice;
        let mut val = vec![l.bottom(); self.wires];
        for (&w, &v) in self.inputs.iter().zip(inputs) {
            val[w] = v;
        }
        for (r, &v) in self.regs.iter().zip(state) {
            val[r.0] = v;
        }
        let mut queued = vec![true; self.comb.len()];
        let mut queue: VecDeque<usize> = (0..self.comb.len()).collect();
        let mut buf_in = Vec::new();
        let mut buf_out = Vec::new();
        while let Some(i) = queue.pop_front() {
            queued[i] = false;
            let (op, ins, outs) = &self.comb[i];
            buf_in.clear();
            buf_in.extend(ins.iter().map(|&w| val[w]));
            buf_out.clear();
            match op {
                Op::Prim(p) => {
                    buf_out.resize(outs.len(), l.bottom());
                    self.prims[*p].apply_into(l, &buf_in, &mut buf_out);
                }
                Op::Join => buf_out.push(l.join(buf_in[0], buf_in[1])),
                Op::Const(v) => buf_out.push(*v),
            }
            for (&w, &v) in outs.iter().zip(&buf_out) {
                if val[w] != v {
                    debug_assert!(l.leq(val[w], v), "non-monotone propagation");
                    val[w] = v;
                    for &c in &self.consumers[w] {
                        if !queued[c as usize] {
                            queued[c as usize] = true;
                            queue.push_back(c as usize);
                        }
                    }
                }
            }
        }
        val
    }

    pub fn step(&self, state: &[Value], inputs: &[Value]) -> (Vec<Value>, Vec<Value>) {
        let val = self.settle(state, inputs);
        let bot = self.lattice.bottom();
        let next = self.regs.iter().map(|r| r.1.map_or(bot, |w| val[w])).collect();
        let out = self.outputs.iter().map(|&w| val[w]).collect();
        (next, out)
    }
}
