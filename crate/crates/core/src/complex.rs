//! Simplicial complexes describing hierarchical models.
//!
//! Vertices are stored 0-based as bits of a [`VarSet`]; everything that faces
//! a user (model strings, JSON) is 1-based.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Maximum number of variables a model may have.
pub const MAX_VARS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("empty model string")]
    Empty,
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("vertex {vertex} out of range 1..={k}")]
    VertexOutOfRange { vertex: usize, k: usize },
    #[error("vertex {0} is not covered by any facet")]
    Uncovered(usize),
    #[error("model has no facets")]
    NoFacets,
    #[error("empty facet")]
    EmptyFacet,
    #[error("cover does not contain facet {0}")]
    NotCovered(String),
}

/// A set of variables, bit `j` standing for variable `j + 1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct VarSet(pub u64);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);

    pub fn singleton(v: usize) -> Self {
        VarSet(1 << v)
    }

    pub fn full(k: usize) -> Self {
        if k == 64 {
            VarSet(u64::MAX)
        } else {
            VarSet((1u64 << k) - 1)
        }
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, v: usize) -> bool {
        self.0 >> v & 1 == 1
    }

    pub fn insert(&mut self, v: usize) {
        self.0 |= 1 << v;
    }

    pub fn is_subset(self, other: VarSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: VarSet) -> VarSet {
        VarSet(self.0 | other.0)
    }

    pub fn intersection(self, other: VarSet) -> VarSet {
        VarSet(self.0 & other.0)
    }

    pub fn difference(self, other: VarSet) -> VarSet {
        VarSet(self.0 & !other.0)
    }

    /// 0-based members in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let v = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(v)
            }
        })
    }

    /// 1-based members, the external representation.
    pub fn to_vertices(self) -> Vec<usize> {
        self.iter().map(|v| v + 1).collect()
    }

    pub fn from_vertices(vs: &[usize]) -> Self {
        let mut s = VarSet::EMPTY;
        for &v in vs {
            s.insert(v - 1);
        }
        s
    }

    /// All subsets of this set, including the empty set and itself.
    pub fn subsets(self) -> impl Iterator<Item = VarSet> {
        let full = self.0;
        let mut sub = 0u64;
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let out = VarSet(sub);
            if sub == full {
                done = true;
            } else {
                sub = (sub.wrapping_sub(full)) & full;
            }
            Some(out)
        })
    }

    /// Lexicographic comparison of the sorted member lists.
    pub fn lex_cmp(self, other: VarSet) -> Ordering {
        self.iter().cmp(other.iter())
    }

    /// Canonical face order: by size, then lexicographic.
    pub fn face_cmp(self, other: VarSet) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.lex_cmp(other))
    }
}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.to_vertices())
    }
}

fn write_group(f: &mut fmt::Formatter<'_>, set: VarSet, wide: bool) -> fmt::Result {
    let vs = set.to_vertices();
    let body: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
    if wide {
        write!(f, "[{}]", body.join(","))
    } else {
        write!(f, "[{}]", body.concat())
    }
}

impl fmt::Display for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wide = self.iter().any(|v| v >= 9);
        write_group(f, *self, wide)
    }
}

/// A hierarchical model: `k` variables and the inclusion-maximal interaction sets.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SimplicialComplex {
    k: usize,
    facets: Vec<VarSet>,
}

impl SimplicialComplex {
    /// Canonicalizes `groups`: drops non-maximal sets and duplicates, sorts
    /// lexicographically, and checks every vertex is covered.
    pub fn new(k: usize, groups: impl IntoIterator<Item = VarSet>) -> Result<Self, ModelError> {
        if k == 0 || k > MAX_VARS {
            return Err(ModelError::VertexOutOfRange { vertex: k, k: MAX_VARS });
        }
        let mut all: Vec<VarSet> = Vec::new();
        for g in groups {
            if g.is_empty() {
                return Err(ModelError::EmptyFacet);
            }
            if let Some(v) = g.iter().find(|&v| v >= k) {
                return Err(ModelError::VertexOutOfRange { vertex: v + 1, k });
            }
            all.push(g);
        }
        if all.is_empty() {
            return Err(ModelError::NoFacets);
        }
        let facets = maximal_sets(&all);
        let covered = facets.iter().fold(VarSet::EMPTY, |acc, f| acc.union(*f));
        if let Some(v) = VarSet::full(k).difference(covered).iter().next() {
            return Err(ModelError::Uncovered(v + 1));
        }
        Ok(SimplicialComplex { k, facets })
    }

    /// Builds a complex on the vertices its facets use, keeping `k` as given
    /// even when some vertices are uncovered. Used for sub-complexes.
    fn from_parts(k: usize, groups: &[VarSet]) -> Self {
        SimplicialComplex { k, facets: maximal_sets(groups) }
    }

    pub fn simplex(k: usize) -> Self {
        SimplicialComplex { k, facets: vec![VarSet::full(k)] }
    }

    /// The `k`-cycle `[12][23]...[(k-1)k][1k]`.
    pub fn cycle(k: usize) -> Self {
        assert!(k >= 3);
        let groups: Vec<VarSet> = (0..k)
            .map(|i| VarSet::singleton(i).union(VarSet::singleton((i + 1) % k)))
            .collect();
        SimplicialComplex::new(k, groups).expect("cycle is valid")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn facets(&self) -> &[VarSet] {
        &self.facets
    }

    pub fn vertex_set(&self) -> VarSet {
        self.facets.iter().fold(VarSet::EMPTY, |acc, f| acc.union(*f))
    }

    pub fn contains_face(&self, face: VarSet) -> bool {
        self.facets.iter().any(|f| face.is_subset(*f))
    }

    /// Every face including the empty one, ordered by size then lexicographically.
    pub fn faces(&self) -> Vec<VarSet> {
        let mut set = BTreeSet::new();
        for f in &self.facets {
            for s in f.subsets() {
                set.insert(s.0);
            }
        }
        let mut out: Vec<VarSet> = set.into_iter().map(VarSet).collect();
        out.sort_by(|a, b| a.face_cmp(*b));
        out
    }

    pub fn max_facet_size(&self) -> usize {
        self.facets.iter().map(|f| f.len()).max().unwrap_or(0)
    }

    /// Edges of the 1-skeleton as adjacency bitmasks, one per vertex.
    pub fn skeleton(&self) -> Vec<VarSet> {
        let mut adj = vec![VarSet::EMPTY; self.k];
        for f in &self.facets {
            for v in f.iter() {
                adj[v] = adj[v].union(f.difference(VarSet::singleton(v)));
            }
        }
        adj
    }

    pub fn to_json(&self) -> ComplexJson {
        ComplexJson {
            k: self.k,
            facets: self.facets.iter().map(|f| f.to_vertices()).collect(),
        }
    }

    pub fn from_json(json: &ComplexJson) -> Result<Self, ModelError> {
        let mut groups = Vec::new();
        for facet in &json.facets {
            if let Some(&v) = facet.iter().find(|&&v| v == 0 || v > json.k) {
                return Err(ModelError::VertexOutOfRange { vertex: v, k: json.k });
            }
            groups.push(VarSet::from_vertices(facet));
        }
        SimplicialComplex::new(json.k, groups)
    }
}

fn maximal_sets(groups: &[VarSet]) -> Vec<VarSet> {
    let mut uniq: Vec<VarSet> = groups.to_vec();
    uniq.sort_by_key(|a| a.0);
    uniq.dedup();
    let mut out: Vec<VarSet> = uniq
        .iter()
        .copied()
        .filter(|g| !uniq.iter().any(|h| h != g && g.is_subset(*h)))
        .collect();
    out.sort_by(|a, b| a.lex_cmp(*b));
    out
}

impl fmt::Display for SimplicialComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wide = self.k > 9;
        for facet in &self.facets {
            write_group(f, *facet, wide)?;
        }
        Ok(())
    }
}

impl fmt::Debug for SimplicialComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// JSON form `{"k": K, "facets": [[...], ...]}` with 1-based vertices.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ComplexJson {
    pub k: usize,
    pub facets: Vec<Vec<usize>>,
}

impl Serialize for SimplicialComplex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SimplicialComplex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let json = ComplexJson::deserialize(d)?;
        SimplicialComplex::from_json(&json).map_err(serde::de::Error::custom)
    }
}

/// Parses a model string such as `[12][13][23]` or `[1,12][12,13]`.
///
/// Inside a group without commas each digit is one vertex; with commas the
/// entries are decimal integers. `K` is the largest vertex mentioned.
pub fn parse_complex(text: &str) -> Result<SimplicialComplex, ModelError> {
    parse_groups(text, None)
}

/// Like [`parse_complex`] with a declared number of variables.
pub fn parse_complex_with_k(text: &str, k: usize) -> Result<SimplicialComplex, ModelError> {
    parse_groups(text, Some(k))
}

fn parse_groups(text: &str, declared: Option<usize>) -> Result<SimplicialComplex, ModelError> {
    if text.trim().is_empty() {
        return Err(ModelError::Empty);
    }
    let err = |pos: usize, msg: &str| ModelError::Parse { pos, msg: msg.to_string() };
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '[' => {
                let start = pos;
                let mut j = i + 1;
                let mut body = String::new();
                loop {
                    match chars.get(j) {
                        None => return Err(err(start, "unbalanced '['")),
                        Some(&(_, ']')) => break,
                        Some(&(p, '[')) => return Err(err(p, "nested '['")),
                        Some(&(_, ch)) => body.push(ch),
                    }
                    j += 1;
                }
                let vertices = parse_body(&body, start + 1)?;
                groups.push((start, vertices));
                i = j + 1;
            }
            ']' => return Err(err(pos, "unbalanced ']'")),
            _ => return Err(err(pos, "expected '['")),
        }
    }
    if groups.is_empty() {
        return Err(ModelError::Empty);
    }
    let max_v = groups.iter().flat_map(|(_, g)| g.iter().copied()).max().unwrap_or(0);
    let k = declared.unwrap_or(max_v);
    let mut sets = Vec::new();
    for (pos, g) in &groups {
        if g.is_empty() {
            return Err(err(*pos, "empty group"));
        }
        let mut set = VarSet::EMPTY;
        for &v in g {
            if v == 0 || v > k || v > MAX_VARS {
                return Err(ModelError::VertexOutOfRange { vertex: v, k });
            }
            set.insert(v - 1);
        }
        sets.push(set);
    }
    SimplicialComplex::new(k, sets)
}

fn parse_body(body: &str, offset: usize) -> Result<Vec<usize>, ModelError> {
    let err = |pos: usize, msg: &str| ModelError::Parse { pos, msg: msg.to_string() };
    if body.contains(',') {
        let mut out = Vec::new();
        let mut pos = offset;
        for part in body.split(',') {
            let t = part.trim();
            let v: usize = t.parse().map_err(|_| err(pos, "expected an integer vertex"))?;
            out.push(v);
            pos += part.len() + 1;
        }
        Ok(out)
    } else {
        body.char_indices()
            .filter(|(_, c)| !c.is_whitespace())
            .map(|(p, c)| {
                c.to_digit(10).map(|d| d as usize).ok_or_else(|| err(offset + p, "expected a digit"))
            })
            .collect()
    }
}

/// A split of a reducible complex into two pieces glued along a face.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub left: SimplicialComplex,
    pub separator: VarSet,
    pub right: SimplicialComplex,
}

impl Decomposition {
    /// Checks the three reducibility conditions against `whole`.
    pub fn is_valid_for(&self, whole: &SimplicialComplex) -> bool {
        let mut union: Vec<VarSet> = self.left.facets.clone();
        union.extend_from_slice(&self.right.facets);
        let same = maximal_sets(&union) == whole.facets;
        let meet = self.left.vertex_set().intersection(self.right.vertex_set()) == self.separator;
        same && meet && self.left.contains_face(self.separator) && self.right.contains_face(self.separator)
    }
}

/// Finds a decomposition `(left, S, right)`, trying separators from smallest
/// to largest (lexicographic among equal sizes).
pub fn find_decomposition(model: &SimplicialComplex) -> Option<Decomposition> {
    candidate_decompositions(model).into_iter().next()
}

fn candidate_separators(model: &SimplicialComplex) -> Vec<VarSet> {
    let fs = &model.facets;
    let mut seps: Vec<VarSet> = Vec::new();
    for i in 0..fs.len() {
        for j in i + 1..fs.len() {
            let s = fs[i].intersection(fs[j]);
            if !seps.contains(&s) {
                seps.push(s);
            }
        }
    }
    seps.sort_by(|a, b| a.face_cmp(*b));
    seps
}

fn split_at(model: &SimplicialComplex, sep: VarSet) -> Option<Decomposition> {
    let fs = &model.facets;
    let n = fs.len();
    // Union-find over facets linked by a shared vertex outside the separator.
    let mut comp: Vec<usize> = (0..n).collect();
    fn find(c: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while c[r] != r {
            r = c[r];
        }
        c[x] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if !fs[i].intersection(fs[j]).difference(sep).is_empty() {
                let (a, b) = (find(&mut comp, i), find(&mut comp, j));
                comp[a] = b;
            }
        }
    }
    let root0 = find(&mut comp, 0);
    let (left, right): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| find(&mut comp, i) == root0);
    if right.is_empty() {
        return None;
    }
    let lf: Vec<VarSet> = left.iter().map(|&i| fs[i]).collect();
    let rf: Vec<VarSet> = right.iter().map(|&i| fs[i]).collect();
    let d = Decomposition {
        left: SimplicialComplex::from_parts(model.k, &lf),
        separator: sep,
        right: SimplicialComplex::from_parts(model.k, &rf),
    };
    d.is_valid_for(model).then_some(d)
}

fn candidate_decompositions(model: &SimplicialComplex) -> Vec<Decomposition> {
    if model.facets.len() < 2 {
        return Vec::new();
    }
    candidate_separators(model)
        .into_iter()
        .filter_map(|s| split_at(model, s))
        .collect()
}

/// True iff `model` is a simplex or splits into decomposable pieces.
pub fn is_decomposable(model: &SimplicialComplex) -> bool {
    let mut memo = HashMap::new();
    decomposable_rec(model, &mut memo)
}

fn decomposable_rec(model: &SimplicialComplex, memo: &mut HashMap<Vec<u64>, bool>) -> bool {
    if model.facets.len() == 1 {
        return true;
    }
    let key: Vec<u64> = model.facets.iter().map(|f| f.0).collect();
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let result = candidate_decompositions(model)
        .iter()
        .any(|d| decomposable_rec(&d.left, memo) && decomposable_rec(&d.right, memo));
    memo.insert(key, result);
    result
}
