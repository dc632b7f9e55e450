//! Partial evaluation by rewriting on the flat netlist view.
//!
//! Forks, eliminators and bottom generators are implicit in a netlist (a wire read twice, a
//! wire never read, a wire never driven), so the structural tidying rules reduce to removing
//! cells that no output depends on and dropping cells whose result is bottom.

use crate::circuit::Term;
use crate::error::{Error, Result};
use crate::interp::{Interpretation, Value};
use crate::mealy::MealyMachine;
use crate::netlist::{Cell, CellKind, Compiled, Netlist, Wire};

pub const DEFAULT_BUDGET: usize = 10_000;

const BOT: Value = Value(0);

/// What a bound input is fixed to, for every tick.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Binding {
    Constant(Value),
    /// One of these letters, the same one on every tick.
    Uncertain(Vec<Value>),
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub term: Term,
    pub netlist: Netlist,
    pub steps: usize,
    /// The step budget ran out before a fixpoint was reached.
    pub exhausted: bool,
    pub worlds: usize,
    /// Cells fed by an uncertain value that no rule can consume.
    pub blocked: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Family {
    Tidy,
    Waveform,
    Shortcut,
    Uncertain,
}

const ALL: [Family; 4] = [Family::Tidy, Family::Waveform, Family::Shortcut, Family::Uncertain];

/// Letters known on a wire in every world.
#[derive(Clone, Debug)]
struct Known {
    alts: Vec<Value>,
    uncertain: bool,
}

struct Rewriter<'a> {
    net: Netlist,
    interp: Option<&'a Interpretation>,
    worlds: usize,
}

fn world_count(net: &Netlist) -> usize {
    net.cells
        .iter()
        .filter_map(|c| match &c.kind {
            CellKind::Uncertain { alts, .. } => Some(alts.len()),
            _ => None,
        })
        .max()
        .unwrap_or(1)
}

impl<'a> Rewriter<'a> {
    fn new(net: Netlist, interp: Option<&'a Interpretation>) -> Self {
        let worlds = world_count(&net);
        Rewriter { net, interp, worlds }
    }

    fn drivers(&self) -> Vec<Option<usize>> {
        self.net.drivers().expect("single drivers")
    }

    fn is_input(&self, w: Wire) -> bool {
        self.net.inputs.contains(&w)
    }

    fn undriven(&self, d: &[Option<usize>], w: Wire) -> bool {
        d[w].is_none() && !self.is_input(w)
    }

    fn pad(&self, alts: &[Value]) -> Vec<Value> {
        (0..self.worlds).map(|k| alts.get(k).copied().unwrap_or(BOT)).collect()
    }

    /// The letter a wire holds on every tick, per world.
    fn held(&self, d: &[Option<usize>], w: Wire) -> Option<Known> {
        if self.is_input(w) {
            return None;
        }
        match d[w].map(|c| &self.net.cells[c].kind) {
            None => Some(Known { alts: vec![BOT; self.worlds], uncertain: false }),
            Some(CellKind::Waveform(v)) => Some(Known { alts: vec![*v; self.worlds], uncertain: false }),
            Some(CellKind::Uncertain { alts, held: true }) => Some(Known { alts: self.pad(alts), uncertain: true }),
            _ => None,
        }
    }

    /// The letter a wire carries on the first tick, per world, when it is bottom afterwards.
    fn instant(&self, d: &[Option<usize>], w: Wire) -> Option<Known> {
        if self.is_input(w) {
            return None;
        }
        match d[w].map(|c| &self.net.cells[c].kind) {
            None => Some(Known { alts: vec![BOT; self.worlds], uncertain: false }),
            Some(CellKind::Value(v)) => Some(Known { alts: vec![*v; self.worlds], uncertain: false }),
            Some(CellKind::Uncertain { alts, held: false }) => Some(Known { alts: self.pad(alts), uncertain: true }),
            _ => None,
        }
    }

    /// Applies a combinational cell to one letter per input.
    fn apply(&self, c: &Cell, ins: &[Value]) -> Option<Vec<Value>> {
        let i = self.interp?;
        match &c.kind {
            CellKind::Join => Some(vec![i.lattice().join(ins[0], ins[1])]),
            CellKind::Prim(name) => {
                let p = i.primitive(name)?;
                (p.sig.arity == c.ins.len() && p.sig.coarity == c.outs.len()).then(|| p.apply(i.lattice(), ins))
            }
            _ => None,
        }
    }

    fn strict(&self, c: &Cell) -> bool {
        self.apply(c, &vec![BOT; c.ins.len()]).is_some_and(|o| o.iter().all(|&v| v == BOT))
    }

    /// Per-output, per-world images of a cell whose inputs are all known.
    fn images(&self, c: &Cell, known: &[Known]) -> Option<Vec<Vec<Value>>> {
        let mut outs = vec![Vec::with_capacity(self.worlds); c.outs.len()];
        for k in 0..self.worlds {
            let ins: Vec<Value> = known.iter().map(|x| x.alts[k]).collect();
            for (o, v) in outs.iter_mut().zip(self.apply(c, &ins)?) {
                o.push(v);
            }
        }
        Some(outs)
    }

    fn generator(alts: Vec<Value>, held: bool) -> Option<CellKind> {
        let v = alts[0];
        if alts.iter().all(|&a| a == v) {
            match (v == BOT, held) {
                (true, _) => None,
                (false, true) => Some(CellKind::Waveform(v)),
                (false, false) => Some(CellKind::Value(v)),
            }
        } else {
            Some(CellKind::Uncertain { alts, held })
        }
    }

    /// Replaces cell `c` by one generator per output; `None` leaves the output undriven.
    fn replace(&mut self, c: usize, gens: Vec<Option<CellKind>>) {
        let outs = self.net.cells[c].outs.clone();
        let new: Vec<Cell> = gens
            .into_iter()
            .zip(outs)
            .filter_map(|(g, o)| g.map(|kind| Cell { kind, ins: vec![], outs: vec![o] }))
            .collect();
        self.net.cells.splice(c..c + 1, new);
    }

    /// Removes single-output cell `c` and lets its readers read `to` instead.
    fn alias(&mut self, c: usize, to: Wire) {
        let from = self.net.cells.remove(c).outs[0];
        if from == to {
            return;
        }
        for cell in &mut self.net.cells {
            for w in cell.ins.iter_mut() {
                if *w == from {
                    *w = to;
                }
            }
        }
        for w in self.net.outputs.iter_mut() {
            if *w == from {
                *w = to;
            }
        }
    }

    fn step(&mut self, f: Family) -> bool {
        match f {
            Family::Tidy => self.tidy_step(),
            Family::Waveform => self.waveform_step(),
            Family::Shortcut => self.shortcut_step(),
            Family::Uncertain => self.uncertain_step(),
        }
    }

    fn tidy_step(&mut self) -> bool {
        let d = self.drivers();
        let mut live = vec![false; self.net.wires];
        let mut stack: Vec<Wire> = self.net.outputs.clone();
        while let Some(w) = stack.pop() {
            if std::mem::replace(&mut live[w], true) {
                continue;
            }
            if let Some(c) = d[w] {
                stack.extend(self.net.cells[c].ins.iter().copied().filter(|&i| !live[i]));
            }
        }
        let before = self.net.cells.len();
        self.net.cells.retain(|c| c.outs.iter().any(|&o| live[o]));
        if self.net.cells.len() < before {
            return true;
        }
        let mut act = None;
        for (k, c) in self.net.cells.iter().enumerate() {
            match &c.kind {
                CellKind::Waveform(v) | CellKind::Value(v) if *v == BOT => act = Some((k, None)),
                CellKind::Delay if self.undriven(&d, c.ins[0]) || c.ins[0] == c.outs[0] => act = Some((k, None)),
                CellKind::Join => {
                    let (a, b, o) = (c.ins[0], c.ins[1], c.outs[0]);
                    if a == b || b == o || self.undriven(&d, b) {
                        act = Some((k, Some(a)));
                    } else if a == o || self.undriven(&d, a) {
                        act = Some((k, Some(b)));
                    }
                }
                _ => {}
            }
            if act.is_some() {
                break;
            }
        }
        match act {
            Some((k, None)) => {
                self.net.cells.remove(k);
                true
            }
            Some((k, Some(to))) => {
                self.alias(k, to);
                true
            }
            None => false,
        }
    }

    fn waveform_step(&mut self) -> bool {
        let d = self.drivers();
        for k in 0..self.net.cells.len() {
            let c = &self.net.cells[k];
            if !matches!(c.kind, CellKind::Prim(_) | CellKind::Join) {
                continue;
            }
            for held in [true, false] {
                if !held && !self.strict(c) {
                    continue;
                }
                let known: Option<Vec<Known>> = c
                    .ins
                    .iter()
                    .map(|&w| if held { self.held(&d, w) } else { self.instant(&d, w) })
                    .collect();
                let Some(known) = known.filter(|ks| ks.iter().all(|x| !x.uncertain)) else { continue };
                if !held && c.ins.iter().all(|&w| self.undriven(&d, w)) {
                    // Already covered by the held form.
                    continue;
                }
                let Some(images) = self.images(c, &known) else { continue };
                let gens = images.into_iter().map(|alts| Self::generator(alts, held)).collect();
                self.replace(k, gens);
                return true;
            }
        }
        false
    }

    /// A held letter on one input that fixes the output, or makes the gate an identity.
    fn shortcut_step(&mut self) -> bool {
        let Some(i) = self.interp else { return false };
        let l = i.lattice();
        let d = self.drivers();
        for k in 0..self.net.cells.len() {
            let c = &self.net.cells[k];
            if !matches!(c.kind, CellKind::Prim(_) | CellKind::Join) || c.outs.len() != 1 {
                continue;
            }
            let n = c.ins.len();
            let Some(rest) = l.word_count(n.saturating_sub(1)).filter(|&r| r <= 4096) else { continue };
            for j in 0..n {
                let Some(Known { alts, uncertain: false }) = self.held(&d, c.ins[j]) else { continue };
                let v = alts[0];
                let mut constant: Option<Value> = None;
                let mut is_const = true;
                let mut is_id = n == 2;
                for r in 0..rest {
                    let mut ins = l.word_at(r, n - 1);
                    ins.insert(j, v);
                    let Some(out) = self.apply(c, &ins) else {
                        is_const = false;
                        is_id = false;
                        break;
                    };
                    let out = out[0];
                    is_const &= *constant.get_or_insert(out) == out;
                    is_id &= n == 2 && out == ins[1 - j];
                }
                if is_const {
                    let gen = Self::generator(vec![constant.unwrap_or(BOT)], true);
                    self.replace(k, vec![gen]);
                    return true;
                }
                if is_id {
                    let to = c.ins[1 - j];
                    self.alias(k, to);
                    return true;
                }
            }
        }
        false
    }

    fn uncertain_step(&mut self) -> bool {
        let d = self.drivers();
        for k in 0..self.net.cells.len() {
            let c = &self.net.cells[k];
            if let CellKind::Uncertain { alts, held } = &c.kind {
                let padded = self.pad(alts);
                if padded.iter().all(|&a| a == padded[0]) {
                    let gen = Self::generator(padded, *held);
                    self.replace(k, vec![gen]);
                    return true;
                }
                continue;
            }
            if !matches!(c.kind, CellKind::Prim(_) | CellKind::Join) {
                continue;
            }
            for held in [true, false] {
                if !held && !self.strict(c) {
                    continue;
                }
                let known: Option<Vec<Known>> = c
                    .ins
                    .iter()
                    .map(|&w| if held { self.held(&d, w) } else { self.instant(&d, w) })
                    .collect();
                let Some(known) = known.filter(|ks| ks.iter().any(|x| x.uncertain)) else { continue };
                let Some(images) = self.images(c, &known) else { continue };
                let gens = images.into_iter().map(|alts| Self::generator(alts, held)).collect();
                self.replace(k, gens);
                return true;
            }
        }
        false
    }

    fn run(&mut self, families: &[Family], budget: usize) -> (usize, bool) {
        let mut steps = 0;
        loop {
            let mut progress = false;
            for &f in families {
                while self.step(f) {
                    steps += 1;
                    progress = true;
                    if steps >= budget {
                        return (steps, true);
                    }
                }
            }
            if !progress {
                return (steps, false);
            }
        }
    }

    fn blocked(&self) -> Vec<String> {
        let d = self.drivers();
        let mut out = Vec::new();
        for c in &self.net.cells {
            let fed = c.ins.iter().any(|&w| {
                matches!(d[w].map(|x| &self.net.cells[x].kind), Some(CellKind::Uncertain { .. }))
            });
            if fed {
                let what = match &c.kind {
                    CellKind::Prim(n) => n.clone(),
                    CellKind::Join => "join".into(),
                    CellKind::Delay => "delay".into(),
                    _ => continue,
                };
                out.push(format!("uncertain value into {what}"));
            }
        }
        out
    }
}

fn rewrite(t: &Term, i: Option<&Interpretation>, families: &[Family]) -> Term {
    let mut r = Rewriter::new(Netlist::from_term(t), i);
    r.run(families, usize::MAX);
    r.net.to_term().simplify()
}

/// Removes everything no output depends on and every cell whose output is bottom.
pub fn tidy(t: &Term) -> Term {
    rewrite(t, None, &[Family::Tidy])
}

/// Tidies a netlist in place and returns the number of rewrites applied.
pub fn tidy_netlist(net: &mut Netlist) -> usize {
    let mut r = Rewriter::new(std::mem::take(net), None);
    let (steps, _) = r.run(&[Family::Tidy], usize::MAX);
    *net = r.net;
    steps
}

/// Pushes constant waveforms and one-tick values through gates and joins.
pub fn propagate_waveforms(t: &Term, i: &Interpretation) -> Term {
    rewrite(t, Some(i), &[Family::Tidy, Family::Waveform])
}

/// Gates with a held input that fixes the output or passes the other input through.
pub fn apply_shortcuts(t: &Term, i: &Interpretation) -> Term {
    rewrite(t, Some(i), &[Family::Tidy, Family::Shortcut])
}

/// Pushes uncertain values through gates world by world, collapsing them when the worlds agree.
pub fn propagate_uncertain(t: &Term, i: &Interpretation) -> Term {
    rewrite(t, Some(i), &[Family::Tidy, Family::Uncertain])
}

/// Precomposes the bound inputs with generators; unbound inputs stay open.
pub fn bind(t: &Term, bindings: &[Option<Binding>]) -> Result<Term> {
    if bindings.len() != t.ins() {
        return Err(Error::Width { expected: t.ins(), got: bindings.len() });
    }
    let gens = bindings
        .iter()
        .map(|b| match b {
            None => Ok(Term::id(1)),
            Some(Binding::Constant(v)) if *v == BOT => Ok(Term::intro()),
            Some(Binding::Constant(v)) => Ok(Term::waveform(vec![*v])),
            Some(Binding::Uncertain(alts)) => match alts.as_slice() {
                [] => Err(Error::Invalid("uncertain binding with no alternatives".into())),
                [v] => Ok(Term::waveform(vec![*v])),
                _ => Term::uncertain(alts.iter().map(|&v| vec![v]).collect(), true),
            },
        })
        .collect::<Result<Vec<_>>>()?;
    Term::seq(vec![Term::par(gens), t.clone()])
}

pub fn partial_evaluate(t: &Term, bindings: &[Option<Binding>], i: &Interpretation) -> Result<Outcome> {
    partial_evaluate_with_budget(t, bindings, i, DEFAULT_BUDGET)
}

pub fn partial_evaluate_with_budget(
    t: &Term,
    bindings: &[Option<Binding>],
    i: &Interpretation,
    budget: usize,
) -> Result<Outcome> {
    let bound = bind(t, bindings)?;
    let mut r = Rewriter::new(Netlist::from_term(&bound), Some(i));
    let (steps, exhausted) = r.run(&ALL, budget);
    let blocked = r.blocked();
    let term = r.net.to_term().simplify();
    Ok(Outcome { term, worlds: r.worlds, netlist: r.net, steps, exhausted, blocked })
}

/// Number of worlds selected by the uncertain generators of a term.
pub fn worlds(t: &Term) -> usize {
    world_count(&Netlist::from_term(t))
}

/// The machine of a term with every uncertain generator resolved to world `w`.
pub fn world_machine(t: &Term, i: &Interpretation, w: usize) -> Result<MealyMachine> {
    Ok(MealyMachine::from_compiled(Compiled::new(&Netlist::from_term(t), i, Some(w))?))
}

/// First-tick outputs with some inputs unknown and primitives outside the interpretation
/// treated as arbitrary monotone boxes; an output is reported only when it is determined.
pub fn instant_outputs(t: &Term, i: &Interpretation, inputs: &[Option<Value>]) -> Result<Vec<Option<Value>>> {
    if inputs.len() != t.ins() {
        return Err(Error::Width { expected: t.ins(), got: inputs.len() });
    }
    let net = Netlist::from_term(t);
    let l = i.lattice();
    let top = l.values().fold(BOT, |a, v| l.join(a, v));
    let bound = |extreme: Value| -> Vec<Value> {
        let mut wires = vec![BOT; net.wires];
        for (&w, v) in net.inputs.iter().zip(inputs) {
            wires[w] = v.unwrap_or(extreme);
        }
        loop {
            let mut changed = false;
            for c in &net.cells {
                let ins: Vec<Value> = c.ins.iter().map(|&w| wires[w]).collect();
                let outs: Vec<Value> = match &c.kind {
                    CellKind::Prim(name) => match i.primitive(name) {
                        Some(p) if p.sig.arity == ins.len() && p.sig.coarity == c.outs.len() => p.apply(l, &ins),
                        _ => vec![extreme; c.outs.len()],
                    },
                    CellKind::Join => vec![l.join(ins[0], ins[1])],
                    CellKind::Delay => vec![BOT],
                    CellKind::Value(v) | CellKind::Waveform(v) => vec![*v],
                    CellKind::Uncertain { alts, .. } => {
                        let padded = (0..world_count(&net)).map(|k| alts.get(k).copied().unwrap_or(BOT));
                        let mut it = padded.clone();
                        let first = it.next().unwrap_or(BOT);
                        vec![if it.all(|a| a == first) { first } else { extreme }]
                    }
                };
                for (&o, v) in c.outs.iter().zip(outs) {
                    let j = l.join(wires[o], v);
                    if j != wires[o] {
                        wires[o] = j;
                        changed = true;
                    }
                }
            }
            if !changed {
                return net.outputs.iter().map(|&w| wires[w]).collect();
            }
        }
    };
    let (lo, hi) = (bound(BOT), bound(top));
    Ok(lo.into_iter().zip(hi).map(|(a, b)| (a == b).then_some(a)).collect())
}
