//! Operational semantics: Mealy form, instant feedback, productive evaluation.

use crate::circuit::{Node, Term};
use crate::error::{Error, Result};
use crate::interp::{Interpretation, Value};
use crate::mealy::{self, Waveform};
use crate::netlist::{CellKind, Compiled, Netlist, Wire};

/// `Trace(x + y, (Id(x) * Delay(y) * ValueWord(values) * Id(m)) ; core)`.
#[derive(Clone, Debug)]
pub struct TraceDelayForm {
    pub feedback: usize,
    pub delays: usize,
    pub values: Vec<Value>,
    /// Combinational, `(x + y + z + m) -> (x + y + n)`.
    pub core: Term,
}

impl TraceDelayForm {
    pub fn trace_width(&self) -> usize {
        self.feedback + self.delays
    }

    pub fn to_term(&self) -> Term {
        let (x, y) = (self.feedback, self.delays);
        let m = self.core.ins() - x - y - self.values.len();
        let bank = Term::par(vec![
            Term::id(x),
            Term::delay(y),
            Term::values(self.values.clone()),
            Term::id(m),
        ]);
        Term::trace(x + y, Term::seq_unchecked(vec![bank, self.core.clone()])).expect("widths")
    }
}

/// `Trace(x + k, (Id(x) * Register(state) * Id(m)) ; core)`.
#[derive(Clone, Debug)]
pub struct PreMealy {
    pub feedback: usize,
    pub state: Vec<Value>,
    /// Combinational, `(x + k + m) -> (x + k + n)`.
    pub core: Term,
}

impl PreMealy {
    pub fn trace_width(&self) -> usize {
        self.feedback + self.state.len()
    }

    pub fn to_term(&self) -> Term {
        let (x, k) = (self.feedback, self.state.len());
        let m = self.core.ins() - x - k;
        let bank = Term::par(vec![Term::id(x), Term::register(self.state.clone()), Term::id(m)]);
        Term::trace(x + k, Term::seq_unchecked(vec![bank, self.core.clone()])).expect("widths")
    }
}

/// A register word feeding a trace-free combinational core `(k + m) -> (k + n)`.
#[derive(Clone, Debug)]
pub struct MealyForm {
    pub state: Vec<Value>,
    pub core: Term,
}

impl MealyForm {
    pub fn ins(&self) -> usize {
        self.core.ins() - self.state.len()
    }

    pub fn outs(&self) -> usize {
        self.core.outs() - self.state.len()
    }

    pub fn to_term(&self) -> Term {
        let k = self.state.len();
        let bank = Term::par(vec![Term::register(self.state.clone()), Term::id(self.ins())]);
        Term::trace(k, Term::seq_unchecked(vec![bank, self.core.clone()])).expect("widths")
    }
}

/// Pulls every trace, delay and value out of the term into one outer structure.
pub fn global_trace_delay_form(t: &Term) -> TraceDelayForm {
    let (net, cuts) = Netlist::from_term_cut(t);
    let mut delay_in: Vec<Wire> = Vec::new();
    let mut delay_out: Vec<Wire> = Vec::new();
    let mut value_out: Vec<Wire> = Vec::new();
    let mut values = Vec::new();
    let mut cells = Vec::new();
    for c in net.cells {
        match c.kind {
            CellKind::Delay => {
                delay_in.push(c.ins[0]);
                delay_out.push(c.outs[0]);
            }
            CellKind::Value(v) => {
                value_out.push(c.outs[0]);
                values.push(v);
            }
            _ => cells.push(c),
        }
    }
    let inputs: Vec<Wire> = cuts
        .iter()
        .map(|c| c.0)
        .chain(delay_out.iter().copied())
        .chain(value_out.iter().copied())
        .chain(net.inputs.iter().copied())
        .collect();
    let outputs: Vec<Wire> = cuts
        .iter()
        .map(|c| c.1)
        .chain(delay_in.iter().copied())
        .chain(net.outputs.iter().copied())
        .collect();
    let core_net = Netlist { wires: net.wires, inputs, outputs, cells };
    let (x, core) = core_net.to_open_term();
    debug_assert_eq!(x, 0, "cutting every trace leaves an acyclic core");
    TraceDelayForm { feedback: cuts.len(), delays: delay_in.len(), values, core }
}

/// Fuses delays and values into one register word.
pub fn mealy_rule(g: &TraceDelayForm) -> PreMealy {
    let (x, y, z) = (g.feedback, g.delays, g.values.len());
    let n = g.core.outs() - x - y;
    let mut state = vec![Value(0); y];
    state.extend_from_slice(&g.values);
    let core = Term::seq_unchecked(vec![
        g.core.clone(),
        Term::par(vec![Term::id(x + y), Term::par(vec![Term::intro(); z]), Term::id(n)]),
    ]);
    PreMealy { feedback: x, state, core }
}

/// Replaces the instantaneous feedback by `x * height + 1` unrolled copies of the core.
pub fn instant_feedback(p: &PreMealy, i: &Interpretation) -> MealyForm {
    let x = p.feedback;
    if x == 0 {
        return MealyForm { state: p.state.clone(), core: p.core.clone() };
    }
    let rest_in = p.core.ins() - x;
    let rest_out = p.core.outs() - x;
    let copies = x * i.lattice().height() + 1;
    // Bundle layout between copies: x feedback wires, then every shared input.
    let split = Term::wiring(rest_in, &(0..rest_in).chain(0..rest_in).collect::<Vec<_>>());
    let mut stages = vec![Term::par(vec![Term::par(vec![Term::intro(); x]), Term::id(rest_in)])];
    for c in 0..copies {
        let last = c + 1 == copies;
        if last {
            stages.push(p.core.clone());
            stages.push(Term::par(vec![Term::par(vec![Term::elim(); x]), Term::id(rest_out)]));
        } else {
            stages.push(Term::par(vec![Term::id(x), split.clone()]));
            stages.push(Term::par(vec![p.core.clone(), Term::id(rest_in)]));
            stages.push(Term::par(vec![
                Term::id(x),
                Term::par(vec![Term::elim(); rest_out]),
                Term::id(rest_in),
            ]));
        }
    }
    MealyForm { state: p.state.clone(), core: Term::seq_unchecked(stages) }
}

pub fn to_mealy_form(t: &Term, i: &Interpretation) -> MealyForm {
    instant_feedback(&mealy_rule(&global_trace_delay_form(t)), i)
}

/// Evaluates a Mealy form cycle by cycle with a core compiled once.
pub struct Stepper {
    core: Compiled,
    pub form: MealyForm,
}

impl Stepper {
    pub fn new(form: MealyForm, i: &Interpretation) -> Result<Stepper> {
        let core = Compiled::new(&Netlist::from_term(&form.core), i, None)?;
        if core.state_len() != 0 {
            return Err(Error::Invalid("Mealy-form core must be combinational".into()));
        }
        Ok(Stepper { core, form })
    }

    pub fn state(&self) -> &[Value] {
        &self.form.state
    }

    pub fn step(&mut self, a: &[Value]) -> Result<Vec<Value>> {
        if a.len() != self.form.ins() {
            return Err(Error::Width { expected: self.form.ins(), got: a.len() });
        }
        let k = self.form.state.len();
        let mut input = self.form.state.clone();
        input.extend_from_slice(a);
        let (_, out) = self.core.step(&[], &input);
        self.form.state = out[..k].to_vec();
        Ok(out[k..].to_vec())
    }
}

/// One cycle: the evaluated core splits into the next state and the outputs.
pub fn productivity_step(mf: &MealyForm, a: &[Value], i: &Interpretation) -> Result<(Vec<Value>, MealyForm)> {
    let mut s = Stepper::new(mf.clone(), i)?;
    let out = s.step(a)?;
    Ok((out, s.form))
}

pub fn run_waveform(t: &Term, w: &Waveform, i: &Interpretation) -> Result<Waveform> {
    if w.width != t.ins() {
        return Err(Error::Width { expected: t.ins(), got: w.width });
    }
    let mut s = Stepper::new(to_mealy_form(t, i), i)?;
    let values = w.values.iter().map(|a| s.step(a)).collect::<Result<Vec<_>>>()?;
    Ok(Waveform { width: t.outs(), values })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObsMode {
    Exhaustive { budget: usize },
    Oracle,
}

pub const DEFAULT_WAVEFORM_BUDGET: usize = 1_000_000;

impl ObsMode {
    pub fn exhaustive() -> ObsMode {
        ObsMode::Exhaustive { budget: DEFAULT_WAVEFORM_BUDGET }
    }
}

/// A distinguishing input waveform, or `None` when the circuits are equivalent.
pub fn obs_witness(t1: &Term, t2: &Term, mode: ObsMode, i: &Interpretation) -> Result<Option<Waveform>> {
    if (t1.ins(), t1.outs()) != (t2.ins(), t2.outs()) {
        return Err(Error::Width { expected: t1.ins() + t1.outs(), got: t2.ins() + t2.outs() });
    }
    match mode {
        ObsMode::Oracle => {
            mealy::bisim_witness(&mealy::circuit_to_mealy(t1, i)?, &mealy::circuit_to_mealy(t2, i)?)
        }
        ObsMode::Exhaustive { budget } => {
            let f1 = to_mealy_form(t1, i);
            let f2 = to_mealy_form(t2, i);
            let c = f1.state.len().max(f2.state.len());
            let l = i.lattice();
            let budget_err = || Error::Budget(format!("exhaustive comparison needs more than {budget} waveforms"));
            let states = l.word_count(c).ok_or_else(budget_err)?;
            let len = states.checked_add(1).ok_or_else(budget_err)?;
            let per_tick = l.word_count(t1.ins()).ok_or_else(budget_err)?;
            let total = per_tick.checked_pow(len as u32).ok_or_else(budget_err)?;
            if total > budget {
                return Err(budget_err());
            }
            let s1 = Stepper::new(f1, i)?;
            let s2 = Stepper::new(f2, i)?;
            let inputs: Vec<Vec<Value>> = l.words(t1.ins()).collect();
            let mut trail = Vec::new();
            let found = dfs(&s1.core, &s2.core, &s1.form.state, &s2.form.state, &inputs, len, &mut trail);
            Ok(found.then(|| Waveform { width: t1.ins(), values: trail }))
        }
    }
}

fn dfs(
    c1: &Compiled,
    c2: &Compiled,
    st1: &[Value],
    st2: &[Value],
    inputs: &[Vec<Value>],
    depth: usize,
    trail: &mut Vec<Vec<Value>>,
) -> bool {
    if depth == 0 {
        return false;
    }
    let (k1, k2) = (st1.len(), st2.len());
    for a in inputs {
        let in1: Vec<Value> = st1.iter().chain(a).copied().collect();
        let in2: Vec<Value> = st2.iter().chain(a).copied().collect();
        let (_, o1) = c1.step(&[], &in1);
        let (_, o2) = c2.step(&[], &in2);
        trail.push(a.clone());
        if o1[k1..] != o2[k2..] || dfs(c1, c2, &o1[..k1], &o2[..k2], inputs, depth - 1, trail) {
            return true;
        }
        trail.pop();
    }
    false
}

pub fn obs_equiv(t1: &Term, t2: &Term, mode: ObsMode, i: &Interpretation) -> Result<bool> {
    Ok(obs_witness(t1, t2, mode, i)?.is_none())
}

/// A position of a value-rule redex: the child path to a node, then the position inside it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Redex {
    pub path: Vec<usize>,
    pub at: usize,
}

fn as_word(t: &Term) -> Option<&[Value]> {
    match t.node() {
        Node::ValueWord(w) => Some(w),
        Node::Id(0) => Some(&[]),
        _ => None,
    }
}

fn apply_values(word: &[Value], g: &Term, i: &Interpretation) -> Option<Term> {
    let l = i.lattice();
    let out = match g.node() {
        Node::Primitive { name, .. } => i.apply(name, word).ok()?,
        Node::Fork => vec![word[0], word[0]],
        Node::Join => vec![l.join(word[0], word[1])],
        Node::Elim => vec![],
        Node::Id(_) => word.to_vec(),
        Node::Symmetry(m, _) => word[*m..].iter().chain(&word[..*m]).copied().collect(),
        Node::Par(cs) => {
            let mut at = 0;
            let parts = cs
                .iter()
                .map(|c| {
                    let w = Term::values(word[at..at + c.ins()].to_vec());
                    at += c.ins();
                    Term::seq_unchecked(vec![w, c.clone()])
                })
                .collect();
            return Some(Term::par(parts));
        }
        _ => return None,
    };
    Some(Term::values(out))
}

fn node_redexes(t: &Term, i: &Interpretation) -> Vec<usize> {
    match t.node() {
        Node::Intro => vec![0],
        Node::Seq(cs) => (0..cs.len().saturating_sub(1))
            .filter(|&k| {
                matches!(cs[k].node(), Node::Id(_))
                    || matches!(cs[k + 1].node(), Node::Id(_))
                    || as_word(&cs[k]).is_some_and(|w| apply_values(w, &cs[k + 1], i).is_some())
            })
            .collect(),
        Node::Par(cs) => (0..cs.len().saturating_sub(1))
            .filter(|&k| as_word(&cs[k]).is_some() && as_word(&cs[k + 1]).is_some())
            .collect(),
        _ => Vec::new(),
    }
}

fn reduce_node(t: &Term, at: usize, i: &Interpretation) -> Term {
    match t.node() {
        Node::Intro => Term::values(vec![i.lattice().bottom()]),
        Node::Seq(cs) => {
            let replaced = if matches!(cs[at].node(), Node::Id(_)) {
                cs[at + 1].clone()
            } else if matches!(cs[at + 1].node(), Node::Id(_)) {
                cs[at].clone()
            } else {
                apply_values(as_word(&cs[at]).unwrap(), &cs[at + 1], i).unwrap()
            };
            let mut v: Vec<Term> = cs[..at].to_vec();
            v.push(replaced);
            v.extend_from_slice(&cs[at + 2..]);
            Term::seq_unchecked(v)
        }
        Node::Par(cs) => {
            let mut w = as_word(&cs[at]).unwrap().to_vec();
            w.extend_from_slice(as_word(&cs[at + 1]).unwrap());
            let mut v: Vec<Term> = cs[..at].to_vec();
            v.push(Term::values(w));
            v.extend_from_slice(&cs[at + 2..]);
            Term::par(v)
        }
        _ => t.clone(),
    }
}

/// Every value-rule redex, children before their parents, left to right.
pub fn value_redexes(t: &Term, i: &Interpretation) -> Vec<Redex> {
    let mut out = Vec::new();
    collect_redexes(t, i, &mut Vec::new(), &mut out);
    out
}

fn collect_redexes(t: &Term, i: &Interpretation, path: &mut Vec<usize>, out: &mut Vec<Redex>) {
    for (k, c) in t.children().into_iter().enumerate() {
        path.push(k);
        collect_redexes(c, i, path, out);
        path.pop();
    }
    for at in node_redexes(t, i) {
        out.push(Redex { path: path.clone(), at });
    }
}

pub fn apply_value_rule(t: &Term, r: &Redex, i: &Interpretation) -> Term {
    fn go(t: &Term, path: &[usize], at: usize, i: &Interpretation) -> Term {
        match path.split_first() {
            None => reduce_node(t, at, i),
            Some((&k, rest)) => {
                let mut cs: Vec<Term> = t.children().into_iter().cloned().collect();
                cs[k] = go(&cs[k], rest, at, i);
                t.with_children(cs)
            }
        }
    }
    go(t, &r.path, r.at, i)
}

/// One leftmost-innermost value-rule step.
pub fn value_rule_step(t: &Term, i: &Interpretation) -> Option<Term> {
    fn go(t: &Term, i: &Interpretation) -> Option<Term> {
        let cs = t.children();
        for (k, c) in cs.iter().enumerate() {
            if let Some(r) = go(c, i) {
                let mut new: Vec<Term> = cs.iter().map(|&c| c.clone()).collect();
                new[k] = r;
                return Some(t.with_children(new));
            }
        }
        node_redexes(t, i).first().map(|&at| reduce_node(t, at, i))
    }
    go(t, i)
}

/// Applies value rules until none applies.
pub fn value_normal_form(t: &Term, i: &Interpretation) -> Term {
    let mut cur = t.clone();
    while let Some(next) = value_rule_step(&cur, i) {
        cur = next;
    }
    cur
}
