//! Synthesis of Belnap circuits from monotone tables and Mealy machines.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::OnceLock;

use crate::circuit::Term;
use crate::error::{Error, Result};
use crate::interp::belnap_values::{BOT, F, T, TOP};
use crate::interp::{belnap_and, belnap_not, belnap_or, Lattice, Value};
use crate::mealy::{self, MealyMachine};

/// Order encoding of a finite poset of states into Belnap words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Encoding {
    /// States in the chosen total order `s_0, s_1, ...`.
    pub order: Vec<usize>,
    /// `code[s][i]` is top iff `order[i] <= s`, bottom otherwise.
    pub code: Vec<Vec<Value>>,
}

pub fn encoding(n: usize, leq: impl Fn(usize, usize) -> bool, order: &[usize]) -> Result<Encoding> {
    let mut seen = vec![false; n];
    for &s in order {
        if s >= n || std::mem::replace(&mut seen[s], true) {
            return Err(Error::Invalid("state order must list every state once".into()));
        }
    }
    if order.len() != n {
        return Err(Error::Invalid("state order must list every state once".into()));
    }
    let code = (0..n).map(|s| order.iter().map(|&si| if leq(si, s) { TOP } else { BOT }).collect()).collect();
    Ok(Encoding { order: order.to_vec(), code })
}

/// The reachable part of `m` and its states sorted by shortlex-least access word.
///
/// Words compare letter by letter under `value_order`, which lists every value once.
pub fn chosen_state_order(m: &MealyMachine, value_order: &[Value]) -> Result<(MealyMachine, Vec<u32>)> {
    let l = m.lattice();
    let mut sorted = value_order.to_vec();
    sorted.sort();
    if sorted != l.values().collect::<Vec<_>>() {
        return Err(Error::Invalid("value order must list every value once".into()));
    }
    let r = mealy::reachable(m)?;
    let t = r.as_table().unwrap();
    let rank: HashMap<Value, usize> = value_order.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let mut inputs: Vec<Vec<Value>> = l.words(m.ins()).collect();
    inputs.sort_by_key(|w| w.iter().map(|v| rank[v]).collect::<Vec<_>>());
    let mut found = vec![false; t.state_names.len()];
    let mut order = vec![t.initial];
    found[t.initial as usize] = true;
    let mut queue = VecDeque::from([t.initial]);
    while let Some(s) = queue.pop_front() {
        for a in &inputs {
            let (n, _) = r.step(&[s], a)?;
            if !std::mem::replace(&mut found[n[0] as usize], true) {
                order.push(n[0]);
                queue.push_back(n[0]);
            }
        }
    }
    Ok((r, order))
}

/// A finite poset given by its size and order relation, with a linear extension.
pub struct Poset<'a> {
    pub size: usize,
    pub leq: &'a dyn Fn(usize, usize) -> bool,
    /// Every element after everything below it.
    pub linear: &'a [usize],
}

/// Extends a monotone partial map to the least monotone total map agreeing with it.
pub fn monotone_completion<C: Clone + PartialEq>(
    partial: &[Option<C>],
    b: &Poset,
    bottom: C,
    join: impl Fn(&C, &C) -> C,
    leq_c: impl Fn(&C, &C) -> bool,
) -> Result<Vec<C>> {
    if partial.len() != b.size {
        return Err(Error::Width { expected: b.size, got: partial.len() });
    }
    let mut out: Vec<Option<C>> = partial.to_vec();
    for &v in b.linear {
        if out[v].is_some() {
            continue;
        }
        let mut acc = bottom.clone();
        for (u, ou) in out.iter().enumerate() {
            if u != v && (b.leq)(u, v) {
                let c = ou.as_ref().ok_or_else(|| Error::Invalid("linear order is not a linear extension".into()))?;
                acc = join(&acc, c);
            }
        }
        out[v] = Some(acc);
    }
    let out: Vec<C> = out.into_iter().map(|c| c.expect("every element visited")).collect();
    for u in 0..b.size {
        for v in 0..b.size {
            if (b.leq)(u, v) && !leq_c(&out[u], &out[v]) {
                return Err(Error::NotMonotone("completion is not monotone; the partial map is inconsistent".into()));
            }
        }
    }
    Ok(out)
}

/// A total function `V^ins -> V^outs` over the Belnap values, rows in word index order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruthTable {
    pub ins: usize,
    pub outs: usize,
    pub rows: Vec<Value>,
}

impl TruthTable {
    pub fn from_fn(ins: usize, outs: usize, f: impl Fn(&[Value]) -> Vec<Value>) -> TruthTable {
        let l = Lattice::belnap();
        let rows = l.words(ins).flat_map(|w| f(&w)).collect();
        TruthTable { ins, outs, rows }
    }

    pub fn new(ins: usize, outs: usize, rows: Vec<Value>) -> Result<TruthTable> {
        if rows.len() != 4usize.pow(ins as u32) * outs || rows.iter().any(|v| v.0 > 3) {
            return Err(Error::Invalid("truth table has the wrong size".into()));
        }
        Ok(TruthTable { ins, outs, rows })
    }

    pub fn row_count(&self) -> usize {
        4usize.pow(self.ins as u32)
    }

    pub fn row(&self, r: usize) -> &[Value] {
        &self.rows[r * self.outs..(r + 1) * self.outs]
    }

    pub fn get(&self, input: &[Value]) -> &[Value] {
        self.row(row_index(input))
    }

    pub fn column(&self, j: usize) -> TruthTable {
        let rows = (0..self.row_count()).map(|r| self.row(r)[j]).collect();
        TruthTable { ins: self.ins, outs: 1, rows }
    }

    pub fn check_monotone(&self) -> Result<()> {
        let l = Lattice::belnap();
        for r in 0..self.row_count() {
            let w = word_at(r, self.ins);
            for k in 0..self.ins {
                for &c in l.covers(w[k]) {
                    let mut up = w.clone();
                    up[k] = c;
                    if !l.leq_word(self.row(r), self.get(&up)) {
                        return Err(Error::NotMonotone(format!(
                            "row {} is not below row {}",
                            l.word_name(&w),
                            l.word_name(&up)
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn row_index(w: &[Value]) -> usize {
    w.iter().fold(0, |acc, v| acc * 4 + v.index())
}

fn word_at(mut r: usize, width: usize) -> Vec<Value> {
    let mut w = vec![BOT; width];
    for k in (0..width).rev() {
        w[k] = Value((r % 4) as u8);
        r /= 4;
    }
    w
}

fn lower_covers(v: Value) -> &'static [Value] {
    match v {
        F | T => &[BOT],
        TOP => &[F, T],
        _ => &[],
    }
}

fn level(v: Value) -> usize {
    match v {
        BOT => 0,
        TOP => 2,
        _ => 1,
    }
}

// With bot, f, t, top numbered 0..3 the Belnap join is bitwise or.
fn join_word(a: &[Value], b: &[Value]) -> Vec<Value> {
    a.iter().zip(b).map(|(x, y)| Value(x.0 | y.0)).collect()
}

/// The completed table of `(code(s), x) -> (code(next), output)` over all of `V^(k+m)`.
pub fn mealy_encoding(m: &MealyMachine, enc: &Encoding) -> Result<TruthTable> {
    if m.lattice().size() != 4 || m.lattice().names() != Lattice::belnap().names() {
        return Err(Error::Invalid("synthesis needs the Belnap values".into()));
    }
    let t = m.as_table().ok_or_else(|| Error::Invalid("encode the reachable table machine".into()))?;
    let n_states = t.state_names.len();
    if enc.code.len() != n_states {
        return Err(Error::Invalid(format!("encoding covers {} states, machine has {n_states}", enc.code.len())));
    }
    let (k, ins, outs) = (n_states, m.ins(), m.outs());
    let width = k + ins;
    let total = 4usize
        .checked_pow(width as u32)
        .filter(|&n| n <= mealy::DEFAULT_BUDGET)
        .ok_or_else(|| Error::Budget(format!("a table over {width} wires is too large")))?;
    let mut partial: Vec<Option<Vec<Value>>> = vec![None; total];
    for s in 0..n_states {
        for x in Lattice::belnap().words(ins) {
            let (next, out) = m.step(&[s as u32], &x)?;
            let mut key = enc.code[s].clone();
            key.extend_from_slice(&x);
            let mut val = enc.code[next[0] as usize].clone();
            val.extend(out);
            partial[row_index(&key)] = Some(val);
        }
    }
    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by_key(|&r| word_at(r, width).iter().map(|&v| level(v)).sum::<usize>());
    let mut done: Vec<Option<Vec<Value>>> = partial;
    for &r in &order {
        if done[r].is_some() {
            continue;
        }
        let w = word_at(r, width);
        let mut acc = vec![BOT; k + outs];
        for p in 0..width {
            for &c in lower_covers(w[p]) {
                let mut down = w.clone();
                down[p] = c;
                acc = join_word(&acc, done[row_index(&down)].as_ref().expect("lower rows come first"));
            }
        }
        done[r] = Some(acc);
    }
    let table = TruthTable { ins: width, outs: k + outs, rows: done.into_iter().flatten().flatten().collect() };
    table.check_monotone()?;
    Ok(table)
}

/// Small gate expressions in one variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Var,
    Bot,
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, v: Value) -> Value {
        match self {
            Expr::Var => v,
            Expr::Bot => BOT,
            Expr::Not(a) => belnap_not(a.eval(v)),
            Expr::And(a, b) => belnap_and(a.eval(v), b.eval(v)),
            Expr::Or(a, b) => belnap_or(a.eval(v), b.eval(v)),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Expr::Var | Expr::Bot => 1,
            Expr::Not(a) => 1 + a.size(),
            Expr::And(a, b) | Expr::Or(a, b) => 1 + a.size() + b.size(),
        }
    }

    fn uses_var(&self) -> bool {
        match self {
            Expr::Var => true,
            Expr::Bot => false,
            Expr::Not(a) => a.uses_var(),
            Expr::And(a, b) | Expr::Or(a, b) => a.uses_var() || b.uses_var(),
        }
    }

    /// The expression as a `1 -> 1` circuit.
    pub fn to_term(&self) -> Term {
        if !self.uses_var() {
            return Term::seq_unchecked(vec![Term::elim(), self.closed_term()]);
        }
        match self {
            Expr::Var => Term::id(1),
            Expr::Bot => unreachable!(),
            Expr::Not(a) => Term::seq_unchecked(vec![a.to_term(), Term::prim("NOT", 1, 1)]),
            Expr::And(a, b) | Expr::Or(a, b) => {
                let gate = if matches!(self, Expr::And(..)) { "AND" } else { "OR" };
                let args = match (a.uses_var(), b.uses_var()) {
                    (true, true) => Term::seq_unchecked(vec![Term::fork(), Term::par(vec![a.to_term(), b.to_term()])]),
                    (true, false) => Term::par(vec![a.to_term(), b.closed_term()]),
                    _ => Term::par(vec![a.closed_term(), b.to_term()]),
                };
                Term::seq_unchecked(vec![args, Term::prim(gate, 2, 1)])
            }
        }
    }

    fn closed_term(&self) -> Term {
        match self {
            Expr::Var => unreachable!(),
            Expr::Bot => Term::intro(),
            Expr::Not(a) => Term::seq_unchecked(vec![a.closed_term(), Term::prim("NOT", 1, 1)]),
            Expr::And(a, b) | Expr::Or(a, b) => {
                let gate = if matches!(self, Expr::And(..)) { "AND" } else { "OR" };
                Term::seq_unchecked(vec![Term::par(vec![a.closed_term(), b.closed_term()]), Term::prim(gate, 2, 1)])
            }
        }
    }

    pub fn show(&self) -> String {
        match self {
            Expr::Var => "v".into(),
            Expr::Bot => "bot".into(),
            Expr::Not(a) => format!("NOT({})", a.show()),
            Expr::And(a, b) => format!("AND({}, {})", a.show(), b.show()),
            Expr::Or(a, b) => format!("OR({}, {})", a.show(), b.show()),
        }
    }
}

/// The four translator tables, columns `psi_0^0, psi_0^1, psi_1^0, psi_1^1`, rows bot, f, t, top.
pub const PSI_TABLES: [[Value; 4]; 4] = [[BOT, F, BOT, F], [BOT, BOT, F, F], [BOT, T, BOT, T], [BOT, BOT, T, T]];

/// Smallest expression of depth at most `depth` for every reachable table, by breadth-first search.
pub fn expressions_up_to(depth: usize) -> BTreeMap<[Value; 4], Expr> {
    let table = |e: &Expr| [BOT, F, T, TOP].map(|v| e.eval(v));
    let mut known: BTreeMap<[Value; 4], Expr> = BTreeMap::new();
    for e in [Expr::Var, Expr::Bot] {
        known.entry(table(&e)).or_insert(e);
    }
    for _ in 0..depth {
        let prev: Vec<Expr> = known.values().cloned().collect();
        let mut cands = Vec::new();
        for a in &prev {
            cands.push(Expr::Not(Box::new(a.clone())));
            for b in &prev {
                cands.push(Expr::And(Box::new(a.clone()), Box::new(b.clone())));
                cands.push(Expr::Or(Box::new(a.clone()), Box::new(b.clone())));
            }
        }
        for e in cands {
            let key = table(&e);
            match known.get(&key) {
                Some(old) if old.size() <= e.size() => {}
                _ => {
                    known.insert(key, e);
                }
            }
        }
    }
    known
}

/// Expressions realising the translator tables, found by search over depth-3 expressions.
pub fn psi_expressions() -> &'static [Expr; 4] {
    static PSI: OnceLock<[Expr; 4]> = OnceLock::new();
    PSI.get_or_init(|| {
        let known = expressions_up_to(3);
        PSI_TABLES.map(|t| known.get(&t).cloned().expect("every translator is expressible"))
    })
}

fn is_falsy(v: Value) -> bool {
    v == F || v == TOP
}

fn is_truthy(v: Value) -> bool {
    v == T || v == TOP
}

/// A constant wire: a register holding `v` whose output is fed back into itself.
pub fn constant(v: Value) -> Term {
    let body = Term::seq_unchecked(vec![Term::register(vec![v]), Term::fork()]);
    Term::trace(1, body).expect("register loop")
}

fn gate_tree(n: usize, gate: &str) -> Term {
    if n == 1 {
        return Term::id(1);
    }
    let h = n / 2;
    Term::seq_unchecked(vec![Term::par(vec![gate_tree(h, gate), gate_tree(n - h, gate)]), Term::prim(gate, 2, 1)])
}

struct Dnf {
    width: usize,
    conj: &'static str,
    disj: &'static str,
    unit: Value,
}

impl Dnf {
    fn clause(&self, lits: &[usize]) -> Term {
        if lits.is_empty() {
            return Term::seq_unchecked(vec![Term::par(vec![Term::elim(); self.width]), constant(self.unit)]);
        }
        Term::seq_unchecked(vec![Term::wiring(self.width, lits), gate_tree(lits.len(), self.conj)])
    }

    fn build(&self, clauses: &[Vec<usize>]) -> Term {
        match clauses.len() {
            0 => Term::seq_unchecked(vec![Term::par(vec![Term::elim(); self.width]), Term::intro()]),
            1 => self.clause(&clauses[0]),
            n => {
                let w = self.width;
                let split: Vec<usize> = (0..w).chain(0..w).collect();
                let (a, b) = clauses.split_at(n / 2);
                Term::seq_unchecked(vec![
                    Term::wiring(w, &split),
                    Term::par(vec![self.build(a), self.build(b)]),
                    Term::prim(self.disj, 2, 1),
                ])
            }
        }
    }
}

/// A circuit of gates, joins, bottoms and constant loops computing a monotone single-output table.
pub fn belnap_express(f: &TruthTable) -> Result<Term> {
    if f.outs != 1 {
        return Err(Error::Invalid("belnap_express takes a single-output table".into()));
    }
    f.check_monotone()?;
    let m = f.ins;
    let w = 2 * m;
    let psi = psi_expressions();
    // Each input fans out to its four translators; the falsy bundle takes bits (2j, 2j+1) from
    // psi_0^0 and psi_0^1, the truthy bundle the same bits from psi_1^0 and psi_1^1.
    let translate = Term::par((0..m).map(|_| {
        Term::seq_unchecked(vec![Term::copies(4), Term::par(psi.iter().map(Expr::to_term).collect())])
    }).collect());
    let route: Vec<usize> =
        (0..m).flat_map(|j| [4 * j, 4 * j + 1]).chain((0..m).flat_map(|j| [4 * j + 2, 4 * j + 3])).collect();
    let mut falsy = Vec::new();
    let mut truthy = Vec::new();
    for r in 0..f.row_count() {
        let v = word_at(r, m);
        let lits: Vec<usize> = (0..m)
            .flat_map(|j| [(2 * j, is_falsy(v[j])), (2 * j + 1, is_truthy(v[j]))])
            .filter(|&(_, on)| on)
            .map(|(b, _)| b)
            .collect();
        let out = f.row(r)[0];
        if is_falsy(out) {
            falsy.push(lits.clone());
        }
        if is_truthy(out) {
            truthy.push(lits);
        }
    }
    let f0 = Dnf { width: w, conj: "OR", disj: "AND", unit: F }.build(&falsy);
    let f1 = Dnf { width: w, conj: "AND", disj: "OR", unit: T }.build(&truthy);
    Ok(Term::seq_unchecked(vec![
        translate,
        Term::permutation(&route),
        Term::par(vec![f0, f1]),
        Term::join(),
    ]))
}

/// One [`belnap_express`] circuit per output behind a shared fork of the inputs.
pub fn normalised_circuit(f: &TruthTable) -> Result<Term> {
    f.check_monotone()?;
    let m = f.ins;
    let outs = (0..f.outs).map(|j| belnap_express(&f.column(j))).collect::<Result<Vec<_>>>()?;
    let fan: Vec<usize> = (0..f.outs).flat_map(|_| 0..m).collect();
    Ok(Term::seq_unchecked(vec![Term::wiring(m, &fan), Term::par(outs)]))
}

/// A registered normalised core whose state wires are traced back, bisimilar to `m`.
pub fn mealy_to_circuit(m: &MealyMachine, value_order: &[Value]) -> Result<Term> {
    let (r, order) = chosen_state_order(m, value_order)?;
    let t = r.as_table().unwrap();
    let n = t.state_names.len();
    let order: Vec<usize> = order.iter().map(|&s| s as usize).collect();
    let enc = encoding(n, |a, b| r.state_leq(&[a as u32], &[b as u32]), &order)?;
    let table = mealy_encoding(&r, &enc)?;
    let core = normalised_circuit(&table)?;
    let init = enc.code[t.initial as usize].clone();
    let body = Term::seq_unchecked(vec![Term::par(vec![Term::register(init), Term::id(m.ins())]), core]);
    Term::trace(n, body)
}

/// The default value order `bot < f < t < top`.
pub fn default_value_order() -> Vec<Value> {
    vec![BOT, F, T, TOP]
}

