//! Value lattices, signatures and interpretations of primitives.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Value(pub u8);

impl Value {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// The Belnap values in their fixed index order.
pub mod belnap_values {
    use super::Value;
    pub const BOT: Value = Value(0);
    pub const F: Value = Value(1);
    pub const T: Value = Value(2);
    pub const TOP: Value = Value(3);
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    names: Vec<String>,
    leq: Vec<bool>,
    join: Vec<Value>,
    bottom: Value,
    height: usize,
    linear: Vec<Value>,
    covers: Vec<Vec<Value>>,
}

impl Lattice {
    /// Builds a lattice from a full order table `leq[a][b]`, validating every lattice law.
    pub fn new(names: Vec<String>, leq: Vec<Vec<bool>>) -> Result<Lattice> {
        let n = names.len();
        if n == 0 {
            return Err(Error::Lattice("empty value set".into()));
        }
        if n > u8::MAX as usize {
            return Err(Error::Lattice("too many values".into()));
        }
        if leq.len() != n || leq.iter().any(|r| r.len() != n) {
            return Err(Error::Lattice("order table has the wrong shape".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for name in &names {
            if !seen.insert(name) {
                return Err(Error::Lattice(format!("duplicate value name `{name}`")));
            }
        }
        for a in 0..n {
            if !leq[a][a] {
                return Err(Error::Lattice(format!("not reflexive at `{}`", names[a])));
            }
            for b in 0..n {
                if a != b && leq[a][b] && leq[b][a] {
                    return Err(Error::Lattice(format!(
                        "not antisymmetric: `{}` and `{}`",
                        names[a], names[b]
                    )));
                }
                for c in 0..n {
                    if leq[a][b] && leq[b][c] && !leq[a][c] {
                        return Err(Error::Lattice(format!(
                            "not transitive: `{}` <= `{}` <= `{}`",
                            names[a], names[b], names[c]
                        )));
                    }
                }
            }
        }
        let bottom = (0..n)
            .find(|&b| (0..n).all(|v| leq[b][v]))
            .ok_or_else(|| Error::Lattice("no least element".into()))?;
        let mut join = vec![Value(0); n * n];
        for a in 0..n {
            for b in 0..n {
                let ubs: Vec<usize> = (0..n).filter(|&u| leq[a][u] && leq[b][u]).collect();
                let lub = ubs
                    .iter()
                    .copied()
                    .find(|&u| ubs.iter().all(|&w| leq[u][w]))
                    .ok_or_else(|| {
                        Error::Lattice(format!("`{}` and `{}` have no join", names[a], names[b]))
                    })?;
                join[a * n + b] = Value(lub as u8);
            }
        }
        let flat: Vec<bool> = leq.into_iter().flatten().collect();
        let below = |v: usize| (0..n).filter(|&u| flat[u * n + v]).count();
        let mut linear: Vec<Value> = (0..n).map(|v| Value(v as u8)).collect();
        linear.sort_by_key(|v| (below(v.index()), v.0));
        let mut height = vec![0usize; n];
        for &v in &linear {
            for &u in &linear {
                if u != v && flat[u.index() * n + v.index()] {
                    height[v.index()] = height[v.index()].max(height[u.index()] + 1);
                }
            }
        }
        let covers = (0..n)
            .map(|a| {
                (0..n)
                    .filter(|&b| {
                        a != b
                            && flat[a * n + b]
                            && !(0..n).any(|c| {
                                c != a && c != b && flat[a * n + c] && flat[c * n + b]
                            })
                    })
                    .map(|b| Value(b as u8))
                    .collect()
            })
            .collect();
        Ok(Lattice {
            names,
            leq: flat,
            join,
            bottom: Value(bottom as u8),
            height: height.into_iter().max().unwrap_or(0),
            linear,
            covers,
        })
    }

    /// Builds a lattice from generating pairs `a <= b`, closing reflexively and transitively.
    pub fn from_pairs(names: Vec<String>, pairs: &[(usize, usize)]) -> Result<Lattice> {
        let n = names.len();
        let mut leq = vec![vec![false; n]; n];
        for (i, row) in leq.iter_mut().enumerate() {
            row[i] = true;
        }
        for &(a, b) in pairs {
            if a >= n || b >= n {
                return Err(Error::Lattice(format!("order pair ({a}, {b}) out of range")));
            }
            leq[a][b] = true;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if leq[i][k] && leq[k][j] {
                        leq[i][j] = true;
                    }
                }
            }
        }
        Lattice::new(names, leq)
    }

    /// A chain `names[0] <= names[1] <= ...`.
    pub fn chain(names: &[&str]) -> Lattice {
        let pairs: Vec<(usize, usize)> = (1..names.len()).map(|i| (i - 1, i)).collect();
        Lattice::from_pairs(names.iter().map(|s| s.to_string()).collect(), &pairs)
            .expect("a chain is a lattice")
    }

    pub fn belnap() -> Lattice {
        Lattice::from_pairs(
            ["bot", "f", "t", "top"].iter().map(|s| s.to_string()).collect(),
            &[(0, 1), (0, 2), (1, 3), (2, 3)],
        )
        .expect("belnap lattice")
    }

    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn bottom(&self) -> Value {
        self.bottom
    }

    pub fn values(&self) -> impl Iterator<Item = Value> {
        (0..self.size() as u8).map(Value)
    }

    pub fn leq(&self, a: Value, b: Value) -> bool {
        self.leq[a.index() * self.size() + b.index()]
    }

    pub fn join(&self, a: Value, b: Value) -> Value {
        self.join[a.index() * self.size() + b.index()]
    }

    /// Strict-step length of the longest chain.
    pub fn height(&self) -> usize {
        self.height
    }

    /// Values sorted so that every value comes after everything below it.
    pub fn linear_extension(&self) -> &[Value] {
        &self.linear
    }

    /// Immediate successors of `v`.
    pub fn covers(&self, v: Value) -> &[Value] {
        &self.covers[v.index()]
    }

    pub fn name(&self, v: Value) -> &str {
        &self.names[v.index()]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn parse_value(&self, s: &str) -> Option<Value> {
        let s = s.trim();
        self.names.iter().position(|n| n == s).map(|i| Value(i as u8)).or(
            match s {
                "⊥" => self.names.iter().position(|n| n == "bot"),
                "⊤" => self.names.iter().position(|n| n == "top"),
                _ => None,
            }
            .map(|i| Value(i as u8)),
        )
    }

    pub fn leq_word(&self, a: &[Value], b: &[Value]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(&x, &y)| self.leq(x, y))
    }

    pub fn join_word(&self, a: &[Value], b: &[Value]) -> Vec<Value> {
        a.iter().zip(b).map(|(&x, &y)| self.join(x, y)).collect()
    }

    pub fn word_name(&self, w: &[Value]) -> String {
        w.iter().map(|&v| self.name(v)).collect::<Vec<_>>().join(",")
    }

    /// Number of words of the given width, or `None` on overflow.
    pub fn word_count(&self, width: usize) -> Option<usize> {
        self.size().checked_pow(width as u32)
    }

    /// Index of a word with the first letter most significant.
    pub fn word_index(&self, w: &[Value]) -> usize {
        w.iter().fold(0, |acc, v| acc * self.size() + v.index())
    }

    pub fn word_at(&self, mut index: usize, width: usize) -> Vec<Value> {
        let n = self.size();
        let mut w = vec![Value(0); width];
        for slot in w.iter_mut().rev() {
            *slot = Value((index % n) as u8);
            index /= n;
        }
        w
    }

    /// All words of the given width in index order.
    pub fn words(&self, width: usize) -> impl Iterator<Item = Vec<Value>> + '_ {
        let count = self.word_count(width).unwrap_or(usize::MAX);
        (0..count).map(move |i| self.word_at(i, width))
    }
}

pub fn join(l: &Lattice, v: Value, w: Value) -> Value {
    l.join(v, w)
}

pub fn lattice_height(l: &Lattice) -> usize {
    l.height()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimSig {
    pub name: String,
    pub arity: usize,
    pub coarity: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub primitives: Vec<PrimSig>,
}

impl Signature {
    pub fn get(&self, name: &str) -> Option<&PrimSig> {
        self.primitives.iter().find(|p| p.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Primitive {
    pub sig: PrimSig,
    /// Output words, `coarity` letters per input row, rows in word index order.
    pub table: Vec<Value>,
}

impl Primitive {
    pub fn apply_into(&self, l: &Lattice, ins: &[Value], out: &mut [Value]) {
        let row = l.word_index(ins);
        let c = self.sig.coarity;
        out.copy_from_slice(&self.table[row * c..row * c + c]);
    }

    pub fn apply(&self, l: &Lattice, ins: &[Value]) -> Vec<Value> {
        let mut out = vec![Value(0); self.sig.coarity];
        self.apply_into(l, ins, &mut out);
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NotBottomPreserving { primitive: String, output: Vec<Value> },
    NotMonotone { primitive: String, lower: Vec<Value>, upper: Vec<Value> },
}

impl Violation {
    pub fn describe(&self, l: &Lattice) -> String {
        match self {
            Violation::NotBottomPreserving { primitive, output } => {
                format!("{primitive} maps bottom to ({})", l.word_name(output))
            }
            Violation::NotMonotone { primitive, lower, upper } => format!(
                "{primitive} is not monotone at ({}) <= ({})",
                l.word_name(lower),
                l.word_name(upper)
            ),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Interpretation {
    lattice: Arc<Lattice>,
    prims: Vec<Primitive>,
    by_name: HashMap<String, usize>,
}

impl Interpretation {
    /// Assembles an interpretation without checking monotonicity; see [`check_interpretation`].
    pub fn new(lattice: Lattice, prims: Vec<Primitive>) -> Result<Interpretation> {
        let mut by_name = HashMap::new();
        for (i, p) in prims.iter().enumerate() {
            let rows = lattice
                .word_count(p.sig.arity)
                .ok_or_else(|| Error::Interpretation(format!("{} has too many inputs", p.sig.name)))?;
            if p.table.len() != rows * p.sig.coarity {
                return Err(Error::Interpretation(format!(
                    "{} needs {} table entries, got {}",
                    p.sig.name,
                    rows * p.sig.coarity,
                    p.table.len()
                )));
            }
            if p.table.iter().any(|v| v.index() >= lattice.size()) {
                return Err(Error::Interpretation(format!("{} uses an unknown value", p.sig.name)));
            }
            if by_name.insert(p.sig.name.clone(), i).is_some() {
                return Err(Error::Interpretation(format!("duplicate primitive {}", p.sig.name)));
            }
        }
        Ok(Interpretation { lattice: Arc::new(lattice), prims, by_name })
    }

    /// Like [`Interpretation::new`] but rejects primitives that break the semantic invariants.
    pub fn checked(lattice: Lattice, prims: Vec<Primitive>) -> Result<Interpretation> {
        let i = Interpretation::new(lattice, prims)?;
        if let Some(v) = check_interpretation(&i).first() {
            return Err(Error::Interpretation(v.describe(i.lattice())));
        }
        Ok(i)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn lattice_arc(&self) -> Arc<Lattice> {
        self.lattice.clone()
    }

    pub fn signature(&self) -> Signature {
        Signature { primitives: self.prims.iter().map(|p| p.sig.clone()).collect() }
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.prims
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn primitive(&self, name: &str) -> Option<&Primitive> {
        self.index_of(name).map(|i| &self.prims[i])
    }

    pub fn apply(&self, name: &str, ins: &[Value]) -> Result<Vec<Value>> {
        let p = self.primitive(name).ok_or_else(|| Error::UnknownPrimitive(name.into()))?;
        if ins.len() != p.sig.arity {
            return Err(Error::Width { expected: p.sig.arity, got: ins.len() });
        }
        Ok(p.apply(&self.lattice, ins))
    }
}

fn table_from_fn(l: &Lattice, arity: usize, f: impl Fn(&[Value]) -> Vec<Value>) -> Vec<Value> {
    l.words(arity).flat_map(|w| f(&w)).collect()
}

pub fn belnap_and(a: Value, b: Value) -> Value {
    use belnap_values::*;
    const TABLE: [[Value; 4]; 4] = [[BOT, F, BOT, F], [F, F, F, F], [BOT, F, T, TOP], [F, F, TOP, TOP]];
    TABLE[a.index()][b.index()]
}

pub fn belnap_or(a: Value, b: Value) -> Value {
    use belnap_values::*;
    const TABLE: [[Value; 4]; 4] = [[BOT, BOT, T, T], [BOT, F, T, TOP], [T, T, T, T], [T, TOP, T, TOP]];
    TABLE[a.index()][b.index()]
}

pub fn belnap_not(a: Value) -> Value {
    use belnap_values::*;
    [BOT, T, F, TOP][a.index()]
}

/// The Belnap interpretation with primitives `AND`, `OR` and `NOT`.
pub fn belnap() -> Interpretation {
    let l = Lattice::belnap();
    let sig = |name: &str, arity| PrimSig { name: name.into(), arity, coarity: 1 };
    let prims = vec![
        Primitive { sig: sig("AND", 2), table: table_from_fn(&l, 2, |w| vec![belnap_and(w[0], w[1])]) },
        Primitive { sig: sig("OR", 2), table: table_from_fn(&l, 2, |w| vec![belnap_or(w[0], w[1])]) },
        Primitive { sig: sig("NOT", 1), table: table_from_fn(&l, 1, |w| vec![belnap_not(w[0])]) },
    ];
    Interpretation::new(l, prims).expect("belnap interpretation")
}

/// Reports every primitive that fails to be bottom-preserving or monotone.
pub fn check_interpretation(i: &Interpretation) -> Vec<Violation> {
    let l = i.lattice();
    let mut out = Vec::new();
    for p in i.primitives() {
        let bot_in = vec![l.bottom(); p.sig.arity];
        let bot_out = p.apply(l, &bot_in);
        if bot_out.iter().any(|&v| v != l.bottom()) {
            out.push(Violation::NotBottomPreserving { primitive: p.sig.name.clone(), output: bot_out });
        }
        'rows: for w in l.words(p.sig.arity) {
            let fw = p.apply(l, &w);
            for k in 0..w.len() {
                for &c in l.covers(w[k]) {
                    let mut u = w.clone();
                    u[k] = c;
                    if !l.leq_word(&fw, &p.apply(l, &u)) {
                        out.push(Violation::NotMonotone {
                            primitive: p.sig.name.clone(),
                            lower: w.clone(),
                            upper: u,
                        });
                        break 'rows;
                    }
                }
            }
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct InterpFile {
    format: String,
    values: Vec<String>,
    #[serde(default)]
    leq: Vec<(String, String)>,
    primitives: Vec<PrimFile>,
}

#[derive(Serialize, Deserialize)]
struct PrimFile {
    name: String,
    arity: usize,
    #[serde(default = "one")]
    coarity: usize,
    table: Vec<String>,
}

fn one() -> usize {
    1
}

pub const INTERP_FORMAT: &str = "circsem-interp/1";

impl Interpretation {
    pub fn from_json(text: &str) -> Result<Interpretation> {
        let file: InterpFile = serde_json::from_str(text)?;
        if file.format != INTERP_FORMAT {
            return Err(Error::Interpretation(format!("unsupported format `{}`", file.format)));
        }
        let index = |s: &str| {
            file.values
                .iter()
                .position(|v| v == s)
                .ok_or_else(|| Error::Interpretation(format!("unknown value `{s}`")))
        };
        let pairs = file
            .leq
            .iter()
            .map(|(a, b)| Ok((index(a)?, index(b)?)))
            .collect::<Result<Vec<_>>>()?;
        let lattice = Lattice::from_pairs(file.values.clone(), &pairs)?;
        let prims = file
            .primitives
            .iter()
            .map(|p| {
                Ok(Primitive {
                    sig: PrimSig { name: p.name.clone(), arity: p.arity, coarity: p.coarity },
                    table: p
                        .table
                        .iter()
                        .map(|s| index(s).map(|i| Value(i as u8)))
                        .collect::<Result<_>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Interpretation::checked(lattice, prims)
    }

    pub fn to_json(&self) -> String {
        let l = self.lattice();
        let mut leq = Vec::new();
        for a in l.values() {
            for &b in l.covers(a) {
                leq.push((l.name(a).to_string(), l.name(b).to_string()));
            }
        }
        let file = InterpFile {
            format: INTERP_FORMAT.into(),
            values: l.names().to_vec(),
            leq,
            primitives: self
                .prims
                .iter()
                .map(|p| PrimFile {
                    name: p.sig.name.clone(),
                    arity: p.sig.arity,
                    coarity: p.sig.coarity,
                    table: p.table.iter().map(|&v| l.name(v).to_string()).collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("serializable")
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::belnap_values::*;
    use super::*;

    #[test]
    fn belnap_laws() {
        let i = belnap();
        let l = i.lattice();
        assert!(check_interpretation(&i).is_empty());
        assert_eq!(l.join(T, F), TOP);
        assert_eq!(l.height(), 2);
        assert_eq!(i.apply("AND", &[BOT, T]).unwrap(), vec![BOT]);
        assert_eq!(i.apply("NOT", &[TOP]).unwrap(), vec![TOP]);
        for a in l.values() {
            for b in l.values() {
                assert_eq!(l.leq(a, b), l.join(a, b) == b);
            }
        }
    }

    #[test]
    fn small_heights() {
        assert_eq!(Lattice::chain(&["bot"]).height(), 0);
        assert_eq!(Lattice::chain(&["bot", "top"]).height(), 1);
    }

    #[test]
    fn rejects_non_lattices() {
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        assert!(Lattice::from_pairs(names.clone(), &[(0, 1), (0, 2)]).is_err());
        assert!(Lattice::from_pairs(names, &[(0, 1), (1, 0)]).is_err());
    }

    #[test]
    fn violations() {
        let l = Lattice::belnap();
        let g = |table: Vec<Value>| {
            let p = Primitive { sig: PrimSig { name: "g".into(), arity: 1, coarity: 1 }, table };
            check_interpretation(&Interpretation::new(l.clone(), vec![p]).unwrap())
        };
        assert_eq!(g(vec![T, T, T, T]).len(), 1);
        assert!(g(vec![BOT, F, F, F]).is_empty());
        assert_eq!(
            g(vec![BOT, BOT, F, BOT]),
            vec![Violation::NotMonotone { primitive: "g".into(), lower: vec![T], upper: vec![TOP] }]
        );
    }

    #[test]
    fn json_round_trip() {
        let i = belnap();
        let back = Interpretation::from_json(&i.to_json()).unwrap();
        assert_eq!(back.lattice(), i.lattice());
        assert_eq!(back.primitives(), i.primitives());
    }
}
