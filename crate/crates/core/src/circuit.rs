//! Circuit terms: generators, composition, tensor and trace.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interp::Value;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Term(Arc<Inner>);

#[derive(PartialEq, Eq, Hash)]
struct Inner {
    node: Node,
    ins: usize,
    outs: usize,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Node {
    Primitive { name: String, ins: usize, outs: usize },
    Id(usize),
    /// Swaps a block of `m` wires past a block of `n` wires.
    Symmetry(usize, usize),
    Fork,
    Join,
    Intro,
    Elim,
    /// Instantaneous values: each letter now, bottom afterwards.
    ValueWord(Vec<Value>),
    Delay(usize),
    Seq(Vec<Term>),
    Par(Vec<Term>),
    /// Feeds the first `x` outputs of the body back into its first `x` inputs.
    Trace(usize, Term),
    /// A constant value held on every tick.
    Waveform(Vec<Value>),
    /// One of several words, chosen by a hidden world index shared by all uncertain
    /// generators; `held` repeats the word forever, otherwise it is instantaneous.
    Uncertain { alts: Vec<Vec<Value>>, held: bool },
}

impl Term {
    fn mk(node: Node, ins: usize, outs: usize) -> Term {
        Term(Arc::new(Inner { node, ins, outs }))
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    pub fn ins(&self) -> usize {
        self.0.ins
    }

    pub fn outs(&self) -> usize {
        self.0.outs
    }

    pub fn ptr_eq(&self, other: &Term) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn prim(name: impl Into<String>, ins: usize, outs: usize) -> Term {
        Term::mk(Node::Primitive { name: name.into(), ins, outs }, ins, outs)
    }

    pub fn id(n: usize) -> Term {
        Term::mk(Node::Id(n), n, n)
    }

    pub fn symmetry(m: usize, n: usize) -> Term {
        Term::mk(Node::Symmetry(m, n), m + n, m + n)
    }

    pub fn swap() -> Term {
        Term::symmetry(1, 1)
    }

    pub fn fork() -> Term {
        Term::mk(Node::Fork, 1, 2)
    }

    pub fn join() -> Term {
        Term::mk(Node::Join, 2, 1)
    }

    pub fn intro() -> Term {
        Term::mk(Node::Intro, 0, 1)
    }

    pub fn elim() -> Term {
        Term::mk(Node::Elim, 1, 0)
    }

    /// Instantaneous value word; the empty word is `Id(0)`.
    pub fn values(word: Vec<Value>) -> Term {
        if word.is_empty() {
            return Term::id(0);
        }
        let n = word.len();
        Term::mk(Node::ValueWord(word), 0, n)
    }

    pub fn delay(n: usize) -> Term {
        Term::mk(Node::Delay(n), n, n)
    }

    pub fn waveform(word: Vec<Value>) -> Term {
        let n = word.len();
        Term::mk(Node::Waveform(word), 0, n)
    }

    pub fn uncertain(alts: Vec<Vec<Value>>, held: bool) -> Result<Term> {
        let n = alts.first().map_or(0, |w| w.len());
        if alts.is_empty() || alts.iter().any(|w| w.len() != n) {
            return Err(Error::Invalid("uncertain alternatives must be non-empty and equally wide".into()));
        }
        Ok(Term::mk(Node::Uncertain { alts, held }, 0, n))
    }

    /// `ValueWord(word)` joined onto `Delay(m)`: outputs the word, then the delayed input.
    pub fn register(word: Vec<Value>) -> Term {
        let m = word.len();
        if m == 0 {
            return Term::id(0);
        }
        Term::seq_unchecked(vec![
            Term::par(vec![Term::delay(m), Term::values(word)]),
            interleave(m),
            Term::par(vec![Term::join(); m]),
        ])
    }

    pub fn seq(parts: Vec<Term>) -> Result<Term> {
        for w in parts.windows(2) {
            if w[0].outs() != w[1].ins() {
                return Err(Error::Arity { left: w[0].outs(), right: w[1].ins() });
            }
        }
        Ok(Term::seq_unchecked(parts))
    }

    pub(crate) fn seq_unchecked(parts: Vec<Term>) -> Term {
        let mut flat = Vec::with_capacity(parts.len());
        for p in parts {
            match p.node() {
                Node::Seq(cs) => flat.extend(cs.iter().cloned()),
                _ => flat.push(p),
            }
        }
        match flat.len() {
            0 => Term::id(0),
            1 => flat.pop().unwrap(),
            _ => {
                debug_assert!(flat.windows(2).all(|w| w[0].outs() == w[1].ins()));
                let (i, o) = (flat[0].ins(), flat[flat.len() - 1].outs());
                Term::mk(Node::Seq(flat), i, o)
            }
        }
    }

    pub fn par(parts: Vec<Term>) -> Term {
        let mut flat = Vec::with_capacity(parts.len());
        for p in parts {
            match p.node() {
                Node::Par(cs) => flat.extend(cs.iter().cloned()),
                Node::Id(0) => {}
                _ => flat.push(p),
            }
        }
        match flat.len() {
            0 => Term::id(0),
            1 => flat.pop().unwrap(),
            _ => {
                let i = flat.iter().map(Term::ins).sum();
                let o = flat.iter().map(Term::outs).sum();
                Term::mk(Node::Par(flat), i, o)
            }
        }
    }

    pub fn trace(x: usize, body: Term) -> Result<Term> {
        if x > body.ins() || x > body.outs() {
            return Err(Error::TraceWidth { x, ins: body.ins(), outs: body.outs() });
        }
        if x == 0 {
            return Ok(body);
        }
        let (i, o) = (body.ins() - x, body.outs() - x);
        Ok(Term::mk(Node::Trace(x, body), i, o))
    }

    pub fn children(&self) -> Vec<&Term> {
        match self.node() {
            Node::Seq(cs) | Node::Par(cs) => cs.iter().collect(),
            Node::Trace(_, b) => vec![b],
            _ => Vec::new(),
        }
    }

    /// Rebuilds this node with new children of the same arities.
    pub fn with_children(&self, children: Vec<Term>) -> Term {
        match self.node() {
            Node::Seq(_) => Term::seq_unchecked(children),
            Node::Par(_) => Term::par(children),
            Node::Trace(x, _) => {
                Term::trace(*x, children.into_iter().next().unwrap()).expect("same arity")
            }
            _ => self.clone(),
        }
    }

    /// Drops structural units: identity stages, empty blocks, trivial symmetries and traces.
    pub fn simplify(&self) -> Term {
        match self.node() {
            Node::Symmetry(m, n) if *m == 0 || *n == 0 => Term::id(m + n),
            Node::Seq(cs) => {
                let parts: Vec<Term> = cs
                    .iter()
                    .map(Term::simplify)
                    .filter(|c| !matches!(c.node(), Node::Id(_)))
                    .collect();
                if parts.is_empty() {
                    Term::id(self.ins())
                } else {
                    Term::seq_unchecked(parts)
                }
            }
            Node::Par(cs) => {
                let mut parts: Vec<Term> = Vec::new();
                let flat = cs.iter().map(Term::simplify).flat_map(|c| match c.node() {
                    Node::Par(inner) => inner.clone(),
                    _ => vec![c],
                });
                for c in flat {
                    let merged = match (parts.last().map(|p| p.node()), c.node()) {
                        (Some(Node::Id(a)), Node::Id(b)) => Some(Term::id(a + b)),
                        _ => None,
                    };
                    match merged {
                        Some(m) => *parts.last_mut().unwrap() = m,
                        None => parts.push(c),
                    }
                }
                Term::par(parts)
            }
            Node::Trace(x, b) => Term::trace(*x, b.simplify()).expect("same arity"),
            _ => self.clone(),
        }
    }

    pub fn is_generator(&self) -> bool {
        !matches!(self.node(), Node::Seq(_) | Node::Par(_) | Node::Trace(..))
    }

    /// Number of nodes in the tree, counting shared subterms once per occurrence.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// Output `j` carries input `src[j]`; built from block symmetries, one per output wire.
    pub fn permutation(src: &[usize]) -> Term {
        let n = src.len();
        debug_assert!({
            let mut s = src.to_vec();
            s.sort_unstable();
            s.iter().enumerate().all(|(i, &v)| i == v)
        });
        let mut current: Vec<usize> = (0..n).collect();
        let mut pos: Vec<usize> = (0..n).collect();
        let mut stages = Vec::new();
        for (j, &want) in src.iter().enumerate() {
            let q = pos[want];
            if q == j {
                continue;
            }
            stages.push(Term::par(vec![
                Term::id(j),
                Term::symmetry(q - j, 1),
                Term::id(n - q - 1),
            ]));
            let w = current.remove(q);
            current.insert(j, w);
            for (k, &c) in current.iter().enumerate().take(q + 1).skip(j) {
                pos[c] = k;
            }
        }
        if stages.is_empty() {
            Term::id(n)
        } else {
            Term::seq_unchecked(stages)
        }
    }

    /// `k` copies of one wire by left-nested forks; zero copies eliminates it.
    pub fn copies(k: usize) -> Term {
        match k {
            0 => Term::elim(),
            1 => Term::id(1),
            _ => {
                let mut t = Term::fork();
                for i in 2..k {
                    t = Term::seq_unchecked(vec![t, Term::par(vec![Term::fork(), Term::id(i - 1)])]);
                }
                t
            }
        }
    }

    /// Routes wires: output `j` carries input `src[j]`, forking or eliminating as needed.
    pub fn wiring(ins: usize, src: &[usize]) -> Term {
        let mut uses = vec![Vec::new(); ins];
        for (j, &s) in src.iter().enumerate() {
            uses[s].push(j);
        }
        let copies = Term::par(uses.iter().map(|u| Term::copies(u.len())).collect());
        let order: Vec<usize> = uses.iter().flatten().copied().collect();
        let mut perm = vec![0; src.len()];
        for (k, &j) in order.iter().enumerate() {
            perm[j] = k;
        }
        let p = Term::permutation(&perm);
        if ins == 0 && src.is_empty() {
            return Term::id(0);
        }
        Term::seq_unchecked(vec![copies, p])
    }

    pub fn substitute(&self, name: &str, replacement: &Term) -> Result<Term> {
        if let Node::Primitive { name: n, ins, outs } = self.node() {
            if n == name {
                if (*ins, *outs) != (replacement.ins(), replacement.outs()) {
                    return Err(Error::PrimitiveArity {
                        name: name.into(),
                        expected_in: *ins,
                        expected_out: *outs,
                        got_in: replacement.ins(),
                        got_out: replacement.outs(),
                    });
                }
                return Ok(replacement.clone());
            }
        }
        let cs = self.children();
        if cs.is_empty() {
            return Ok(self.clone());
        }
        let new = cs.iter().map(|c| c.substitute(name, replacement)).collect::<Result<Vec<_>>>()?;
        if new.iter().zip(&cs).all(|(a, b)| a.ptr_eq(b)) {
            return Ok(self.clone());
        }
        Ok(self.with_children(new))
    }

    pub fn stats(&self) -> Stats {
        let mut s = Stats { is_combinational: true, ..Stats::default() };
        self.collect_stats(&mut s);
        s
    }

    fn collect_stats(&self, s: &mut Stats) {
        match self.node() {
            Node::Primitive { .. } => s.gate_count += 1,
            Node::Delay(n) => {
                s.delay_count += n;
                s.is_combinational = false;
            }
            Node::ValueWord(w) => {
                s.value_count += w.len();
                if w.iter().any(|v| v.0 != 0) {
                    s.is_combinational = false;
                }
            }
            Node::Waveform(_) | Node::Uncertain { .. } => s.is_combinational = false,
            Node::Trace(..) => s.is_combinational = false,
            _ => {}
        }
        for c in self.children() {
            c.collect_stats(s);
        }
    }

    pub fn contains_trace(&self) -> bool {
        matches!(self.node(), Node::Trace(..)) || self.children().iter().any(|c| c.contains_trace())
    }

    /// Recomputes the arity from the leaves, checking every structural invariant.
    pub fn check_arity(&self) -> Result<(usize, usize)> {
        let (i, o) = match self.node() {
            Node::Seq(cs) => {
                let mut prev: Option<(usize, usize)> = None;
                for c in cs {
                    let (ci, co) = c.check_arity()?;
                    if let Some((_, po)) = prev {
                        if po != ci {
                            return Err(Error::Arity { left: po, right: ci });
                        }
                    }
                    prev = Some((prev.map_or(ci, |p| p.0), co));
                }
                prev.unwrap_or((0, 0))
            }
            Node::Par(cs) => {
                let mut acc = (0, 0);
                for c in cs {
                    let (ci, co) = c.check_arity()?;
                    acc = (acc.0 + ci, acc.1 + co);
                }
                acc
            }
            Node::Trace(x, b) => {
                let (bi, bo) = b.check_arity()?;
                if *x > bi || *x > bo {
                    return Err(Error::TraceWidth { x: *x, ins: bi, outs: bo });
                }
                (bi - x, bo - x)
            }
            Node::Primitive { ins, outs, .. } => (*ins, *outs),
            Node::Id(n) | Node::Delay(n) => (*n, *n),
            Node::Symmetry(m, n) => (m + n, m + n),
            Node::Fork => (1, 2),
            Node::Join => (2, 1),
            Node::Intro => (0, 1),
            Node::Elim => (1, 0),
            Node::ValueWord(w) | Node::Waveform(w) => (0, w.len()),
            Node::Uncertain { alts, .. } => (0, alts[0].len()),
        };
        if (i, o) != (self.ins(), self.outs()) {
            return Err(Error::Invalid(format!(
                "cached arity {}->{} differs from computed {i}->{o}",
                self.ins(),
                self.outs()
            )));
        }
        Ok((i, o))
    }
}

/// Permutation taking `a0..a(m-1), b0..b(m-1)` to `a0, b0, a1, b1, ...`.
pub fn interleave(m: usize) -> Term {
    let src: Vec<usize> = (0..2 * m).map(|j| if j % 2 == 0 { j / 2 } else { m + j / 2 }).collect();
    Term::permutation(&src)
}

pub fn compose(f: &Term, g: &Term) -> Result<Term> {
    Term::seq(vec![f.clone(), g.clone()])
}

pub fn tensor(f: &Term, g: &Term) -> Term {
    Term::par(vec![f.clone(), g.clone()])
}

pub fn trace(x: usize, f: &Term) -> Result<Term> {
    Term::trace(x, f.clone())
}

pub fn substitute(t: &Term, name: &str, replacement: &Term) -> Result<Term> {
    t.substitute(name, replacement)
}

pub fn stats(t: &Term) -> Stats {
    t.stats()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub delay_count: usize,
    pub value_count: usize,
    pub is_combinational: bool,
    pub gate_count: usize,
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Primitive { name, .. } => write!(f, "{name}"),
            Node::Id(n) => write!(f, "id{n}"),
            Node::Symmetry(m, n) => write!(f, "sym({m},{n})"),
            Node::Fork => write!(f, "fork"),
            Node::Join => write!(f, "join"),
            Node::Intro => write!(f, "intro"),
            Node::Elim => write!(f, "elim"),
            Node::ValueWord(w) => write!(f, "val{:?}", w.iter().map(|v| v.0).collect::<Vec<_>>()),
            Node::Delay(n) => write!(f, "delay{n}"),
            Node::Waveform(w) => write!(f, "wave{:?}", w.iter().map(|v| v.0).collect::<Vec<_>>()),
            Node::Uncertain { alts, held } => write!(
                f,
                "{}{:?}",
                if *held { "held" } else { "unc" },
                alts.iter().map(|w| w.iter().map(|v| v.0).collect::<Vec<_>>()).collect::<Vec<_>>()
            ),
            Node::Seq(cs) => {
                write!(f, "(")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ; ")?;
                    }
                    write!(f, "{c:?}")?;
                }
                write!(f, ")")
            }
            Node::Par(cs) => {
                write!(f, "[")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " * ")?;
                    }
                    write!(f, "{c:?}")?;
                }
                write!(f, "]")
            }
            Node::Trace(x, b) => write!(f, "tr{x}{{{b:?}}}"),
        }
    }
}
