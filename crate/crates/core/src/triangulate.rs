//! Chordal triangulations of a model's 1-skeleton.
//!
//! Two strategies are provided: greedy min-fill elimination, and an exact
//! dynamic program over vertex subsets that is only attempted for small `K`.
//! [`chordal_triangulation`] runs both when the model is small enough and
//! keeps the narrower cover.

use crate::complex::{is_decomposable, ModelError, SimplicialComplex, VarSet};
use serde::Serialize;

/// Largest vertex count for which the exact search is run.
pub const EXACT_LIMIT: usize = 12;

/// A decomposable complex containing a model, given by its maximal cliques.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChordalCover {
    pub cliques: Vec<VarSet>,
    /// 0-based vertex elimination order that produced the cliques.
    pub elimination_order: Vec<usize>,
    pub width: usize,
}

impl ChordalCover {
    pub fn as_complex(&self, k: usize) -> SimplicialComplex {
        SimplicialComplex::new(k, self.cliques.iter().copied()).expect("cliques cover every vertex")
    }

    /// Every facet of `model` lies inside some clique.
    pub fn covers(&self, model: &SimplicialComplex) -> bool {
        model.facets().iter().all(|f| self.cliques.iter().any(|c| f.is_subset(*c)))
    }

    pub fn check_covers(&self, model: &SimplicialComplex) -> Result<(), ModelError> {
        match model.facets().iter().find(|f| !self.cliques.iter().any(|c| f.is_subset(*c))) {
            Some(f) => Err(ModelError::NotCovered(f.to_string())),
            None => Ok(()),
        }
    }

    pub fn is_decomposable(&self, k: usize) -> bool {
        is_decomposable(&self.as_complex(k))
    }

    pub fn report(&self) -> CoverReport {
        CoverReport {
            cliques: self.cliques.iter().map(|c| c.to_vertices()).collect(),
            width: self.width,
            elimination_order: self.elimination_order.iter().map(|v| v + 1).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverReport {
    pub cliques: Vec<Vec<usize>>,
    pub width: usize,
    pub elimination_order: Vec<usize>,
}

pub trait Triangulator: Send + Sync {
    fn name(&self) -> &'static str;
    /// Returns `None` when the strategy declines the input (e.g. too large).
    fn triangulate(&self, model: &SimplicialComplex) -> Option<ChordalCover>;
}

/// Min-fill elimination; ties go to smaller degree, then lower vertex index.
pub struct MinFill;

/// Exact tree width by dynamic programming over eliminated-vertex subsets.
pub struct ExactSearch {
    pub max_vertices: usize,
}

impl Default for ExactSearch {
    fn default() -> Self {
        ExactSearch { max_vertices: EXACT_LIMIT }
    }
}

impl Triangulator for MinFill {
    fn name(&self) -> &'static str {
        "min-fill"
    }

    fn triangulate(&self, model: &SimplicialComplex) -> Option<ChordalCover> {
        let mut adj = model.skeleton();
        let k = model.k();
        let mut remaining = VarSet::full(k);
        let mut order = Vec::with_capacity(k);
        while !remaining.is_empty() {
            let v = remaining
                .iter()
                .min_by_key(|&v| {
                    let nb = adj[v].intersection(remaining);
                    (fill_count(&adj, nb), nb.len(), v)
                })
                .expect("nonempty");
            eliminate(&mut adj, remaining, v);
            remaining = remaining.difference(VarSet::singleton(v));
            order.push(v);
        }
        Some(cover_from_order(model, &order))
    }
}

impl Triangulator for ExactSearch {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn triangulate(&self, model: &SimplicialComplex) -> Option<ChordalCover> {
        let k = model.k();
        if k > self.max_vertices {
            return None;
        }
        let adj = model.skeleton();
        let full = (1usize << k) - 1;
        // best[s] = minimal width needed to eliminate exactly the set s first.
        let mut best = vec![usize::MAX; full + 1];
        let mut choice = vec![usize::MAX; full + 1];
        best[0] = 0;
        for s in 1..=full {
            for v in VarSet(s as u64).iter() {
                let rest = s & !(1 << v);
                let q = reach_outside(&adj, VarSet(rest as u64), v).len();
                let w = best[rest].max(q);
                if w < best[s] {
                    best[s] = w;
                    choice[s] = v;
                }
            }
        }
        let mut order = Vec::with_capacity(k);
        let mut s = full;
        while s != 0 {
            let v = choice[s];
            order.push(v);
            s &= !(1 << v);
        }
        order.reverse();
        Some(cover_from_order(model, &order))
    }
}

/// Vertices outside `inner ∪ {v}` reachable from `v` through `inner`.
fn reach_outside(adj: &[VarSet], inner: VarSet, v: usize) -> VarSet {
    let mut seen = VarSet::singleton(v);
    let mut frontier = vec![v];
    let mut out = VarSet::EMPTY;
    while let Some(u) = frontier.pop() {
        for w in adj[u].iter() {
            if seen.contains(w) {
                continue;
            }
            seen.insert(w);
            if inner.contains(w) {
                frontier.push(w);
            } else {
                out.insert(w);
            }
        }
    }
    out
}

fn fill_count(adj: &[VarSet], nb: VarSet) -> usize {
    let mut missing = 0;
    for u in nb.iter() {
        missing += nb.difference(adj[u]).difference(VarSet::singleton(u)).len();
    }
    missing / 2
}

fn eliminate(adj: &mut [VarSet], remaining: VarSet, v: usize) {
    let nb = adj[v].intersection(remaining);
    for u in nb.iter() {
        adj[u] = adj[u].union(nb.difference(VarSet::singleton(u)));
    }
}

/// Eliminates in `order`, returning the maximal cliques of the filled graph.
fn cover_from_order(model: &SimplicialComplex, order: &[usize]) -> ChordalCover {
    let mut adj = model.skeleton();
    let mut remaining = VarSet::full(model.k());
    let mut cliques: Vec<VarSet> = Vec::new();
    for &v in order {
        let clique = adj[v].intersection(remaining).union(VarSet::singleton(v));
        eliminate(&mut adj, remaining, v);
        remaining = remaining.difference(VarSet::singleton(v));
        cliques.push(clique);
    }
    let mut maximal: Vec<VarSet> = cliques
        .iter()
        .copied()
        .filter(|c| !cliques.iter().any(|d| d != c && c.is_subset(*d)))
        .collect();
    maximal.sort_by(|a, b| a.lex_cmp(*b));
    maximal.dedup();
    let width = maximal.iter().map(|c| c.len()).max().unwrap_or(1) - 1;
    ChordalCover { cliques: maximal, elimination_order: order.to_vec(), width }
}

/// Min-fill cover, replaced by the exact optimum when `K` is small and the
/// exact search finds a strictly narrower one.
pub fn chordal_triangulation(model: &SimplicialComplex) -> ChordalCover {
    let greedy = MinFill.triangulate(model).expect("min-fill accepts every model");
    match ExactSearch::default().triangulate(model) {
        Some(exact) if exact.width < greedy.width => exact,
        _ => greedy,
    }
}

pub fn triangulator_by_name(name: &str) -> Option<Box<dyn Triangulator>> {
    match name {
        "min-fill" => Some(Box::new(MinFill)),
        "exact" => Some(Box::new(ExactSearch::default())),
        _ => None,
    }
}
