// Term-level traced rewriting, computed without pushouts: a host `G: m -> n` decomposes as
// `Tr_i((l * id_m) ; c)` for a rule side `l: i -> j` and a traced context `c: j + m -> i + n`.
// Contexts are enumerated directly as partial monogamous cospans built from the host's
// remaining edges, then the rewrite is `Tr_i((r * id_m) ; c)`.

use circsem::hypergraph::{self, Cospan, Edge, Hypergraph};
use circsem::Term;

fn is_loop(c: &Cospan, v: usize) -> bool {
    !c.inputs.contains(&v) && !c.outputs.contains(&v) && c.graph.degree(v).ins + c.graph.degree(v).outs == 0
}

fn loops(c: &Cospan) -> usize {
    (0..c.graph.vertices).filter(|&v| is_loop(c, v)).count()
}

fn plug(side: &Term, c: &Cospan, m: usize) -> Cospan {
    let s = hypergraph::term_to_cospan(side).tensor(&Cospan::identity(m));
    s.compose(c).unwrap().trace(side.ins()).unwrap()
}

fn with_loops(mut c: Cospan, k: usize) -> Cospan {
    c.graph.vertices += k;
    c
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum End {
    Edge(usize, usize),
    Outer(usize),
}

/// Every `r`-rewrite of `host` reachable through a traced decomposition along `l`.
pub fn traced_rewrites(l: &Term, r: &Term, host: &Cospan) -> Vec<Cospan> {
    let lg = hypergraph::term_to_cospan(l);
    let (i, j) = (l.ins(), l.outs());
    let (m, n) = (host.inputs.len(), host.outputs.len());
    let g = &host.graph;
    let mut out = Vec::new();
    let ne = g.edges.len();
    // Injective, label-preserving edge embeddings.
    let mut emb: Vec<Vec<usize>> = vec![vec![]];
    for el in &lg.graph.edges {
        let mut next = Vec::new();
        for p in &emb {
            for k in 0..ne {
                if !p.contains(&k) && g.edges[k].label == el.label {
                    let mut q = p.clone();
                    q.push(k);
                    next.push(q);
                }
            }
        }
        emb = next;
    }
    for e in emb {
        let mut vmap: Vec<Option<usize>> = vec![None; lg.graph.vertices];
        let mut ok = true;
        for (el, &k) in lg.graph.edges.iter().zip(&e) {
            let eh = &g.edges[k];
            for (&x, &y) in el.sources.iter().zip(&eh.sources).chain(el.targets.iter().zip(&eh.targets)) {
                match vmap[x] {
                    Some(z) if z != y => ok = false,
                    _ => vmap[x] = Some(y),
                }
            }
        }
        if !ok {
            continue;
        }
        let free: Vec<usize> = (0..lg.graph.vertices).filter(|&v| vmap[v].is_none()).collect();
        let total = g.vertices.pow(free.len() as u32);
        for mut code in 0..total {
            let mut vm: Vec<usize> = vmap.iter().map(|v| v.unwrap_or(0)).collect();
            for &f in &free {
                vm[f] = code % g.vertices;
                code /= g.vertices;
            }
            contexts(l, r, host, &lg, &e, &vm, i, j, m, n, &mut out);
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn contexts(
    l: &Term,
    r: &Term,
    host: &Cospan,
    lg: &Cospan,
    emb: &[usize],
    vm: &[usize],
    i: usize,
    j: usize,
    m: usize,
    n: usize,
    out: &mut Vec<Cospan>,
) {
    let g = &host.graph;
    let ctx: Vec<usize> = (0..g.edges.len()).filter(|k| !emb.contains(k)).collect();
    // Context ports: producers are context edge targets, then c-inputs (j then m);
    // consumers are context edge sources, then c-outputs (i then n).
    let mut producers: Vec<Vec<End>> = vec![vec![]; g.vertices];
    let mut consumers: Vec<Vec<End>> = vec![vec![]; g.vertices];
    for (ci, &k) in ctx.iter().enumerate() {
        for (p, &v) in g.edges[k].targets.iter().enumerate() {
            producers[v].push(End::Edge(ci, p));
        }
        for (p, &v) in g.edges[k].sources.iter().enumerate() {
            consumers[v].push(End::Edge(ci, p));
        }
    }
    for k in 0..j {
        producers[vm[lg.outputs[k]]].push(End::Outer(k));
    }
    for (p, &v) in host.inputs.iter().enumerate() {
        producers[v].push(End::Outer(j + p));
    }
    for k in 0..i {
        consumers[vm[lg.inputs[k]]].push(End::Outer(k));
    }
    for (p, &v) in host.outputs.iter().enumerate() {
        consumers[v].push(End::Outer(i + p));
    }
    if (0..g.vertices).any(|v| producers[v].len() != consumers[v].len()) {
        return;
    }
    let perms: Vec<Vec<Vec<usize>>> = (0..g.vertices).map(|v| permutations(producers[v].len())).collect();
    let mut pick = vec![0usize; g.vertices];
    loop {
        // One context vertex per (producer, consumer) pair.
        let mut c = Cospan {
            graph: Hypergraph { vertices: 0, edges: vec![] },
            inputs: vec![0; j + m],
            outputs: vec![0; i + n],
        };
        let mut src: Vec<Vec<usize>> = ctx.iter().map(|&k| vec![0; g.edges[k].sources.len()]).collect();
        let mut tgt: Vec<Vec<usize>> = ctx.iter().map(|&k| vec![0; g.edges[k].targets.len()]).collect();
        for v in 0..g.vertices {
            let perm = &perms[v][pick[v]];
            for (a, &b) in perm.iter().enumerate() {
                let w = c.graph.vertices;
                c.graph.vertices += 1;
                match producers[v][a] {
                    End::Edge(ci, p) => tgt[ci][p] = w,
                    End::Outer(k) => c.inputs[k] = w,
                }
                match consumers[v][b] {
                    End::Edge(ci, p) => src[ci][p] = w,
                    End::Outer(k) => c.outputs[k] = w,
                }
            }
        }
        for (ci, &k) in ctx.iter().enumerate() {
            c.graph.edges.push(Edge {
                label: g.edges[k].label.clone(),
                sources: std::mem::take(&mut src[ci]),
                targets: std::mem::take(&mut tgt[ci]),
            });
        }
        let composite = plug(l, &c, m);
        let (have, want) = (loops(&composite), loops(host));
        if have <= want {
            let extra = want - have;
            if hypergraph::is_iso(&with_loops(composite, extra), host) {
                out.push(with_loops(plug(r, &c, m), extra));
            }
        }
        let mut k = g.vertices;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            pick[k] += 1;
            if pick[k] < perms[k].len() {
                break;
            }
            pick[k] = 0;
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for at in 0..=p.len() {
            let mut q = p.clone();
            q.insert(at, n - 1);
            out.push(q);
        }
    }
    out
}

/// Same members up to isomorphism, ignoring multiplicity.
pub fn same_up_to_iso(a: &[Cospan], b: &[Cospan]) -> bool {
    a.iter().all(|x| b.iter().any(|y| hypergraph::is_iso(x, y))) && b.iter().all(|y| a.iter().any(|x| hypergraph::is_iso(x, y)))
}
