//! Facet orbits under independent relabelling of the levels of each variable.

use std::collections::HashMap;

use crate::table::LevelSpec;

use super::{bits, pattern_key, ConeDescription, RaySet, ZeroStarPattern};

/// The product of the symmetric groups on the levels of each variable, as
/// permutations of the cells.
#[derive(Debug, Clone)]
pub struct SymmetryGroup {
    spec: LevelSpec,
    elements: Vec<Vec<u16>>,
}

impl SymmetryGroup {
    pub fn new(spec: &LevelSpec) -> Self {
        let per_var: Vec<Vec<Vec<usize>>> = spec.levels().iter().map(|&d| permutations(d)).collect();
        let n = spec.cell_count();
        let coords: Vec<Vec<usize>> = (0..n).map(|c| spec.coords(c)).collect();
        let mut elements = Vec::new();
        let mut choice = vec![0usize; per_var.len()];
        loop {
            let perm: Vec<u16> = coords
                .iter()
                .map(|x| {
                    let mut idx = 0;
                    for (j, &xj) in x.iter().enumerate() {
                        idx = idx * spec.levels()[j] + per_var[j][choice[j]][xj];
                    }
                    idx as u16
                })
                .collect();
            elements.push(perm);
            let mut j = per_var.len();
            loop {
                if j == 0 {
                    return SymmetryGroup { spec: spec.clone(), elements };
                }
                j -= 1;
                choice[j] += 1;
                if choice[j] < per_var[j].len() {
                    break;
                }
                choice[j] = 0;
            }
        }
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn apply(&self, element: usize, set: RaySet) -> RaySet {
        let perm = &self.elements[element];
        bits(set).fold(0, |acc, c| acc | 1u128 << perm[c])
    }

    /// All distinct images of `set`.
    pub fn orbit(&self, set: RaySet) -> Vec<RaySet> {
        let mut out: Vec<RaySet> = (0..self.order()).map(|g| self.apply(g, set)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Lexicographically smallest pattern in the orbit of `set`.
    pub fn canonical(&self, set: RaySet) -> RaySet {
        let n = self.spec.cell_count();
        (0..self.order())
            .map(|g| self.apply(g, set))
            .min_by_key(|&s| pattern_key(s, n))
            .unwrap_or(set)
    }
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..d).collect();
    heap(d, &mut cur, &mut out);
    out.sort();
    out
}

fn heap(k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(cur.clone());
        return;
    }
    for i in 0..k {
        heap(k - 1, cur, out);
        if k.is_multiple_of(2) {
            cur.swap(i, k - 1);
        } else {
            cur.swap(0, k - 1);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FacetOrbit {
    /// Canonical (lexicographically smallest) pattern of the orbit.
    pub representative: ZeroStarPattern,
    pub size: usize,
    /// Indices into the facet list.
    pub members: Vec<usize>,
}

/// Groups the facets into orbits, ordered by canonical pattern.
pub fn orbit_classify(cone: &ConeDescription) -> Vec<FacetOrbit> {
    let spec = cone.cone.spec();
    let group = SymmetryGroup::new(spec);
    let n = spec.cell_count();
    let index: HashMap<RaySet, usize> = cone.facets.iter().enumerate().map(|(i, f)| (f.incidence, i)).collect();
    let mut assigned = vec![false; cone.facets.len()];
    let mut orbits = Vec::new();
    for (i, f) in cone.facets.iter().enumerate() {
        if assigned[i] {
            continue;
        }
        let images = group.orbit(f.incidence);
        let mut members: Vec<usize> = images.iter().filter_map(|s| index.get(s).copied()).collect();
        members.sort_unstable();
        for &m in &members {
            assigned[m] = true;
        }
        let canon = images.iter().copied().min_by_key(|&s| pattern_key(s, n)).unwrap_or(f.incidence);
        orbits.push(FacetOrbit {
            representative: ZeroStarPattern::new(spec.levels().to_vec(), canon),
            size: images.len(),
            members,
        });
    }
    orbits.sort_by_key(|o| pattern_key(o.representative.stars, n));
    orbits
}
