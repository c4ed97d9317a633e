//! Collapsing maps between level specifications and the provenance of facets
//! under them.

use std::collections::HashMap;

use serde::Serialize;

use crate::table::{ContingencyTable, LevelSpec};

use super::{bits, pattern_key, ConeDescription, ConeError, FacetOrbit, MarginalCone, RaySet, ZeroStarPattern};

/// Per-variable surjections merging levels: `maps[j][level] = new level`,
/// both 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CollapsingMap {
    source: LevelSpec,
    target: LevelSpec,
    maps: Vec<Vec<usize>>,
}

impl CollapsingMap {
    pub fn new(source: &LevelSpec, target: &LevelSpec, maps: Vec<Vec<usize>>) -> Result<Self, ConeError> {
        if source.k() != target.k() || maps.len() != source.k() {
            return Err(ConeError::BadMap("number of variables differs".into()));
        }
        for (j, m) in maps.iter().enumerate() {
            let (d, e) = (source.levels()[j], target.levels()[j]);
            if m.len() != d {
                return Err(ConeError::BadMap(format!("variable {} needs {d} entries, got {}", j + 1, m.len())));
            }
            let mut hit = vec![false; e];
            for &x in m {
                if x >= e {
                    return Err(ConeError::BadMap(format!("variable {} maps to level {} of {e}", j + 1, x + 1)));
                }
                hit[x] = true;
            }
            if let Some(miss) = hit.iter().position(|h| !h) {
                return Err(ConeError::BadMap(format!("variable {}: level {} has no preimage", j + 1, miss + 1)));
            }
        }
        Ok(CollapsingMap { source: source.clone(), target: target.clone(), maps })
    }

    pub fn identity(spec: &LevelSpec) -> Self {
        let maps = spec.levels().iter().map(|&d| (0..d).collect()).collect();
        CollapsingMap { source: spec.clone(), target: spec.clone(), maps }
    }

    pub fn source(&self) -> &LevelSpec {
        &self.source
    }

    pub fn target(&self) -> &LevelSpec {
        &self.target
    }

    pub fn maps(&self) -> &[Vec<usize>] {
        &self.maps
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &CollapsingMap) -> Result<CollapsingMap, ConeError> {
        if next.source != self.target {
            return Err(ConeError::BadMap("maps do not compose".into()));
        }
        let maps = self.maps.iter().zip(&next.maps).map(|(f, g)| f.iter().map(|&x| g[x]).collect()).collect();
        Ok(CollapsingMap { source: self.source.clone(), target: next.target.clone(), maps })
    }

    /// Image of every source cell.
    pub fn cell_map(&self) -> Vec<usize> {
        (0..self.source.cell_count())
            .map(|c| {
                self.source.coords(c).iter().enumerate().fold(0, |acc, (j, &x)| {
                    acc * self.target.levels()[j] + self.maps[j][x]
                })
            })
            .collect()
    }

    /// Source cells whose image lies in `set`.
    pub fn pull_back(&self, set: RaySet) -> RaySet {
        self.cell_map()
            .iter()
            .enumerate()
            .fold(0, |acc, (c, &t)| if set >> t & 1 == 1 { acc | 1u128 << c } else { acc })
    }

    /// Image of `set` if it is a union of whole fibres.
    pub fn push_forward(&self, set: RaySet) -> Option<RaySet> {
        let cm = self.cell_map();
        let mut inside: RaySet = 0;
        let mut outside: RaySet = 0;
        for (c, &t) in cm.iter().enumerate() {
            if set >> c & 1 == 1 {
                inside |= 1u128 << t;
            } else {
                outside |= 1u128 << t;
            }
        }
        (inside & outside == 0).then_some(inside)
    }
}

/// Sums the counts over merged levels.
pub fn collapse_table(table: &ContingencyTable, map: &CollapsingMap) -> Result<ContingencyTable, ConeError> {
    if table.spec() != map.source() {
        return Err(ConeError::BadMap(format!("map is for {} tables, got {}", map.source(), table.spec())));
    }
    Ok(table.collapse(map.target(), map.maps())?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftedFace {
    pub incidence: RaySet,
    pub is_facet: bool,
}

/// Pulls a facet of the collapsed cone back along `map`. The result is a face
/// of `source`; it is a facet when its rays have rank `dim - 1`.
pub fn lift_facet(source: &MarginalCone, target_incidence: RaySet, map: &CollapsingMap) -> LiftedFace {
    let incidence = map.pull_back(target_incidence);
    let is_facet = source.incidence_rank(incidence) + 1 == source.dim();
    LiftedFace { incidence, is_facet }
}

/// The facet normal (row-basis coordinates) when `pattern` is the 0/* pattern
/// of a facet of `cone`.
pub fn is_facet_pattern(cone: &MarginalCone, pattern: &ZeroStarPattern) -> Option<Vec<i64>> {
    if pattern.levels != cone.spec().levels() {
        return None;
    }
    cone.facet_through(pattern.stars)
}

/// All maps `[n] -> [blocks]` that are surjective and list blocks in order of
/// first appearance (restricted growth strings).
pub fn set_partitions(n: usize, blocks: usize) -> Vec<Vec<usize>> {
    fn rec(pos: usize, used: usize, n: usize, blocks: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos == n {
            if used == blocks {
                out.push(cur.clone());
            }
            return;
        }
        if blocks - used > n - pos {
            return;
        }
        for b in 0..=used.min(blocks - 1) {
            cur.push(b);
            rec(pos + 1, used.max(b + 1), n, blocks, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if blocks == 0 || blocks > n {
        return out;
    }
    rec(0, 0, n, blocks, &mut Vec::with_capacity(n), &mut out);
    out
}

/// Every collapsing map from `source` onto `target`, up to relabelling the
/// target levels.
pub fn collapsing_maps(source: &LevelSpec, target: &LevelSpec) -> Vec<CollapsingMap> {
    if source.k() != target.k() {
        return Vec::new();
    }
    let choices: Vec<Vec<Vec<usize>>> =
        source.levels().iter().zip(target.levels()).map(|(&d, &e)| set_partitions(d, e)).collect();
    if choices.iter().any(|c| c.is_empty()) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; choices.len()];
    loop {
        let maps = idx.iter().zip(&choices).map(|(&i, c)| c[i].clone()).collect();
        out.push(CollapsingMap { source: source.clone(), target: target.clone(), maps });
        let mut j = choices.len();
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < choices[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }
}

/// Level specs `e != d` with `min(2, d_j) <= e_j <= d_j`, ordered by cell
/// count and then lexicographically.
pub fn smaller_specs(spec: &LevelSpec) -> Vec<LevelSpec> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    for &d in spec.levels() {
        let lo = d.min(2);
        out = out.into_iter().flat_map(|p| (lo..=d).map(move |e| [p.clone(), vec![e]].concat())).collect();
    }
    out.retain(|e| e.as_slice() != spec.levels());
    out.sort_by_key(|e| (e.iter().product::<usize>(), e.clone()));
    out.into_iter().filter_map(|e| LevelSpec::new(e).ok()).collect()
}

/// Facet tests on smaller cones of the same model, cached.
pub struct CollapseSearch {
    model: crate::complex::SimplicialComplex,
    cones: HashMap<Vec<usize>, MarginalCone>,
    facet_cache: HashMap<(Vec<usize>, RaySet), bool>,
}

impl CollapseSearch {
    pub fn new(model: &crate::complex::SimplicialComplex) -> Self {
        CollapseSearch { model: model.clone(), cones: HashMap::new(), facet_cache: HashMap::new() }
    }

    fn is_target_facet(&mut self, target: &LevelSpec, set: RaySet) -> Result<bool, ConeError> {
        let key = (target.levels().to_vec(), set);
        if let Some(&v) = self.facet_cache.get(&key) {
            return Ok(v);
        }
        if !self.cones.contains_key(target.levels()) {
            let cone = MarginalCone::new(target, &self.model)?;
            self.cones.insert(target.levels().to_vec(), cone);
        }
        let v = self.cones[target.levels()].facet_through(set).is_some();
        self.facet_cache.insert(key, v);
        Ok(v)
    }

    /// A map collapsing the facet with incidence `set` of `spec` tables onto a
    /// facet of `target` tables, if one exists.
    pub fn collapse_to(
        &mut self,
        spec: &LevelSpec,
        set: RaySet,
        target: &LevelSpec,
    ) -> Result<Option<CollapsingMap>, ConeError> {
        for map in collapsing_maps(spec, target) {
            if let Some(image) = map.push_forward(set) {
                if self.is_target_facet(target, image)? {
                    return Ok(Some(map));
                }
            }
        }
        Ok(None)
    }

    /// All strictly smaller specs the facet collapses to, each with a map.
    pub fn targets(&mut self, spec: &LevelSpec, set: RaySet) -> Result<Vec<CollapsingMap>, ConeError> {
        let mut out = Vec::new();
        for target in smaller_specs(spec) {
            if let Some(m) = self.collapse_to(spec, set, &target)? {
                out.push(m);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CollapseProvenance {
    /// One margin cell is zero. `face` and `cell` are 1-based.
    MarginFacet { face: Vec<usize>, cell: Vec<usize> },
    CollapsedFrom { levels: Vec<usize>, map: Vec<Vec<usize>> },
    NonCollapsible,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitProvenance {
    pub representative: String,
    pub size: usize,
    pub provenance: CollapseProvenance,
    /// Every strictly smaller spec this orbit collapses to.
    pub targets: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CollapsibilityReport {
    pub spec: Vec<usize>,
    pub orbits: Vec<OrbitProvenance>,
    /// Smallest spec such that every orbit collapses to it or to a spec
    /// below it; the spec itself when some orbit does not collapse.
    pub minimal_collapsing: Vec<usize>,
    pub non_collapsible: usize,
}

/// The margin cell whose vanishing defines the facet, if the zeros of the
/// pattern form exactly one fibre of a model facet.
pub fn margin_facet(cone: &MarginalCone, set: RaySet) -> Option<(Vec<usize>, Vec<usize>)> {
    let spec = cone.spec();
    let n = spec.cell_count();
    let zeros = super::full_set(n) & !set;
    let first = bits(zeros).next()?;
    let at = spec.coords(first);
    for &face in cone.model().facets() {
        let fibre = (0..n).fold(0u128, |acc, c| {
            let x = spec.coords(c);
            if face.iter().all(|j| x[j] == at[j]) {
                acc | 1u128 << c
            } else {
                acc
            }
        });
        if fibre == zeros {
            return Some((face.to_vertices(), face.iter().map(|j| at[j] + 1).collect()));
        }
    }
    None
}

/// Classifies each orbit by where its facets come from.
pub fn collapsibility_report(
    cone: &ConeDescription,
    orbits: &[FacetOrbit],
) -> Result<CollapsibilityReport, ConeError> {
    let spec = cone.cone.spec();
    let mut search = CollapseSearch::new(cone.cone.model());
    let mut out = Vec::with_capacity(orbits.len());
    for o in orbits {
        let set = o.representative.stars;
        let maps = search.targets(spec, set)?;
        let provenance = if let Some((face, cell)) = margin_facet(&cone.cone, set) {
            CollapseProvenance::MarginFacet { face, cell }
        } else if let Some(m) = maps.first() {
            CollapseProvenance::CollapsedFrom { levels: m.target().levels().to_vec(), map: m.maps().to_vec() }
        } else {
            CollapseProvenance::NonCollapsible
        };
        out.push(OrbitProvenance {
            representative: o.representative.to_string(),
            size: o.size,
            provenance,
            targets: maps.iter().map(|m| m.target().levels().to_vec()).collect(),
        });
    }
    let below = |t: &[usize], e: &[usize]| t.iter().zip(e).all(|(a, b)| a <= b);
    let minimal = smaller_specs(spec)
        .into_iter()
        .map(|s| s.levels().to_vec())
        .find(|e| out.iter().all(|o| o.targets.iter().any(|t| below(t, e))))
        .unwrap_or_else(|| spec.levels().to_vec());
    let non_collapsible = out.iter().filter(|o| o.targets.is_empty()).count();
    Ok(CollapsibilityReport { spec: spec.levels().to_vec(), orbits: out, minimal_collapsing: minimal, non_collapsible })
}

/// Whether every orbit collapses onto the table whose levels are capped at the
/// second largest level (for three-way tables `p <= q <= r`, the `p x q x q`
/// table).
#[derive(Debug, Clone, Serialize)]
pub struct SquareReferenceCheck {
    pub reference: Vec<usize>,
    /// Representatives of orbits that do not collapse onto the reference.
    pub counterexamples: Vec<String>,
}

pub fn square_reference_check(report: &CollapsibilityReport) -> Option<SquareReferenceCheck> {
    let mut sorted = report.spec.clone();
    sorted.sort_unstable();
    if sorted.len() < 2 {
        return None;
    }
    let cap = sorted[sorted.len() - 2];
    let reference: Vec<usize> = report.spec.iter().map(|&d| d.min(cap)).collect();
    let counterexamples = if reference == report.spec {
        Vec::new()
    } else {
        report
            .orbits
            .iter()
            .filter(|o| !o.targets.iter().any(|t| t.iter().zip(&reference).all(|(a, b)| a <= b)))
            .map(|o| o.representative.clone())
            .collect()
    };
    Some(SquareReferenceCheck { reference, counterexamples })
}

/// Orders incidence sets like their patterns.
pub fn sort_patterns(sets: &mut [RaySet], cells: usize) {
    sets.sort_by_key(|&s| pattern_key(s, cells));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{orbit_classify, Budget};

    fn spec(v: &[usize]) -> LevelSpec {
        LevelSpec::new(v.to_vec()).unwrap()
    }

    #[test]
    fn partitions_count_as_stirling_numbers() {
        assert_eq!(set_partitions(4, 2).len(), 7);
        assert_eq!(set_partitions(4, 3).len(), 6);
        assert_eq!(set_partitions(5, 2).len(), 15);
        assert_eq!(set_partitions(3, 3).len(), 1);
        assert!(set_partitions(2, 3).is_empty());
    }

    #[test]
    fn rejects_non_surjective_maps() {
        let e = CollapsingMap::new(&spec(&[2, 3]), &spec(&[2, 2]), vec![vec![0, 1], vec![0, 0, 0]]);
        assert!(matches!(e, Err(ConeError::BadMap(_))));
        let e = CollapsingMap::new(&spec(&[2, 3]), &spec(&[2, 2]), vec![vec![0, 1], vec![0, 2, 1]]);
        assert!(matches!(e, Err(ConeError::BadMap(_))));
    }

    #[test]
    fn collapse_sums_slices() {
        let s = spec(&[2, 2, 3]);
        let t = ContingencyTable::new(s.clone(), (1..=12).collect()).unwrap();
        let m = CollapsingMap::new(&s, &spec(&[2, 2, 2]), vec![vec![0, 1], vec![0, 1], vec![0, 1, 1]]).unwrap();
        let c = collapse_table(&t, &m).unwrap();
        assert_eq!(c.counts(), &[1, 5, 4, 11, 7, 17, 10, 23]);
        let id = CollapsingMap::identity(&s);
        assert_eq!(collapse_table(&t, &id).unwrap(), t);
    }

    #[test]
    fn antipodal_facet_lifts_everywhere() {
        let small = spec(&[2, 2, 2]);
        let antipodal = ZeroStarPattern::parse(vec![2, 2, 2], "0******0").unwrap();
        for lv in [[2, 3, 3], [3, 3, 3], [2, 2, 4]] {
            let big = spec(&lv);
            let cone = MarginalCone::new(&big, &crate::complex::SimplicialComplex::cycle(3)).unwrap();
            let maps = collapsing_maps(&big, &small);
            let expected: usize = lv.iter().map(|&d| (1usize << (d - 1)) - 1).product();
            assert_eq!(maps.len(), expected);
            for m in &maps {
                let lifted = lift_facet(&cone, antipodal.stars, m);
                assert!(lifted.is_facet);
                assert_eq!(m.push_forward(lifted.incidence), Some(antipodal.stars));
            }
        }
    }

    #[test]
    fn lifting_is_functorial() {
        let a = spec(&[3, 4, 2]);
        let b = spec(&[2, 3, 2]);
        let c = spec(&[2, 2, 2]);
        let f = CollapsingMap::new(&a, &b, vec![vec![0, 1, 1], vec![0, 1, 2, 0], vec![0, 1]]).unwrap();
        let g = CollapsingMap::new(&b, &c, vec![vec![1, 0], vec![0, 1, 1], vec![1, 0]]).unwrap();
        let gf = f.then(&g).unwrap();
        for set in [0b0110_1001u128, 0b1111_1110, 0b1000_0001] {
            assert_eq!(gf.pull_back(set), f.pull_back(g.pull_back(set)));
        }
    }

    #[test]
    fn small_report() {
        let model = crate::complex::SimplicialComplex::cycle(3);
        let cone = MarginalCone::new(&spec(&[2, 2, 3]), &model).unwrap().enumerate(&Budget::default()).unwrap();
        let orbits = orbit_classify(&cone);
        let report = collapsibility_report(&cone, &orbits).unwrap();
        assert_eq!(report.minimal_collapsing, vec![2, 2, 2]);
        assert_eq!(report.non_collapsible, 0);
        let base = MarginalCone::new(&spec(&[2, 2, 2]), &model).unwrap().enumerate(&Budget::default()).unwrap();
        let r = collapsibility_report(&base, &orbit_classify(&base)).unwrap();
        assert_eq!(r.minimal_collapsing, vec![2, 2, 2]);
        assert!(r.orbits.iter().any(|o| matches!(o.provenance, CollapseProvenance::MarginFacet { .. })));
        let sq = square_reference_check(&report).unwrap();
        assert_eq!(sq.reference, vec![2, 2, 2]);
        assert!(sq.counterexamples.is_empty());
    }
}
