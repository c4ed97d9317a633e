//! Marginal cones: facet enumeration, 0/* patterns, symmetry orbits and
//! collapsing maps.

pub mod collapse;
pub mod dd;
pub mod orbit;

use std::fmt;

use serde::Serialize;

use crate::complex::SimplicialComplex;
use crate::design::DesignMatrix;
use crate::linalg;
use crate::rational::Rat;
use crate::table::{ContingencyTable, FaceMode, LevelSpec, TableError};

pub use collapse::{
    collapsibility_report, is_facet_pattern, lift_facet, set_partitions, square_reference_check, CollapseProvenance,
    CollapsibilityReport, CollapsingMap, LiftedFace, SquareReferenceCheck,
};
pub use dd::RaySet;
pub use orbit::{orbit_classify, FacetOrbit, SymmetryGroup};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConeError {
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("integer overflow in facet normals")]
    Overflow,
    #[error("generators span dimension {rank}, expected {dim}")]
    NotFullDimensional { rank: usize, dim: usize },
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("invalid collapsing map: {0}")]
    BadMap(String),
    #[error("pattern has {got} cells, expected {want}")]
    PatternLength { want: usize, got: usize },
}

/// Size limits for facet enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Budget {
    pub max_rays: usize,
    pub max_ambient_dim: usize,
    /// Limit on the rank of the design matrix; `None` disables it.
    pub max_cone_dim: Option<usize>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_rays: 100, max_ambient_dim: 50, max_cone_dim: Some(30) }
    }
}

impl Budget {
    /// Limits for extended runs: only the bitset width applies.
    pub fn long() -> Self {
        Budget { max_rays: dd::MAX_GENERATORS, max_ambient_dim: usize::MAX, max_cone_dim: None }
    }

    pub fn unlimited() -> Self {
        Self::long()
    }

    pub fn check(&self, cone: &MarginalCone) -> Result<(), ConeError> {
        if cone.ray_count() > self.max_rays {
            return Err(ConeError::Budget(format!("{} rays exceed the limit of {}", cone.ray_count(), self.max_rays)));
        }
        if cone.ambient_dim() > self.max_ambient_dim {
            return Err(ConeError::Budget(format!(
                "ambient dimension {} exceeds the limit of {}",
                cone.ambient_dim(),
                self.max_ambient_dim
            )));
        }
        if let Some(cap) = self.max_cone_dim {
            if cone.dim() > cap {
                return Err(ConeError::Budget(format!(
                    "cone dimension {} exceeds the limit of {cap}; use the long mode",
                    cone.dim()
                )));
            }
        }
        Ok(())
    }
}

/// The cone spanned by the columns of a design matrix, before any facet
/// enumeration. Rays are stored in the coordinates of a row basis, where the
/// cone is full-dimensional.
#[derive(Debug, Clone)]
pub struct MarginalCone {
    spec: LevelSpec,
    model: SimplicialComplex,
    design: DesignMatrix,
    row_basis: Vec<usize>,
    rays: Vec<Vec<i64>>,
}

impl MarginalCone {
    pub fn new(spec: &LevelSpec, model: &SimplicialComplex) -> Result<Self, ConeError> {
        let design = DesignMatrix::build(spec, model, FaceMode::FacetsOnly)?;
        let row_basis = design.row_basis();
        let mut rays = vec![vec![0i64; row_basis.len()]; design.col_count];
        for (k, &r) in row_basis.iter().enumerate() {
            for &c in &design.rows[r] {
                rays[c][k] = 1;
            }
        }
        Ok(MarginalCone { spec: spec.clone(), model: model.clone(), design, row_basis, rays })
    }

    /// The no-three-way-interaction model on a three-way table.
    pub fn three_way(levels: &[usize]) -> Result<Self, ConeError> {
        let spec = LevelSpec::new(levels.to_vec())?;
        let model = SimplicialComplex::cycle(3);
        Self::new(&spec, &model)
    }

    pub fn spec(&self) -> &LevelSpec {
        &self.spec
    }

    pub fn model(&self) -> &SimplicialComplex {
        &self.model
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    pub fn ambient_dim(&self) -> usize {
        self.design.row_count()
    }

    pub fn dim(&self) -> usize {
        self.row_basis.len()
    }

    pub fn ray_count(&self) -> usize {
        self.rays.len()
    }

    pub fn row_basis(&self) -> &[usize] {
        &self.row_basis
    }

    /// Ray of a cell in row-basis coordinates.
    pub fn reduced_ray(&self, cell: usize) -> &[i64] {
        &self.rays[cell]
    }

    /// Ray of a cell in ambient coordinates (a column of the design matrix).
    pub fn ray(&self, cell: usize) -> Vec<i64> {
        let mut v = vec![0; self.ambient_dim()];
        for &r in self.design.column(cell) {
            v[r] = 1;
        }
        v
    }

    /// Basis of the vectors orthogonal to the linear span of the cone.
    pub fn hull_equations(&self) -> Vec<Vec<Rat>> {
        let rows = self.design.dense_rat_rows();
        let transpose: Vec<Vec<Rat>> =
            (0..self.design.col_count).map(|c| rows.iter().map(|r| r[c].clone()).collect()).collect();
        linalg::nullspace(&transpose, self.ambient_dim())
    }

    /// Lifts a normal in row-basis coordinates to ambient coordinates.
    pub fn ambient_normal(&self, reduced: &[i64]) -> Vec<i64> {
        let mut v = vec![0; self.ambient_dim()];
        for (k, &r) in self.row_basis.iter().enumerate() {
            v[r] = reduced[k];
        }
        v
    }

    /// Rank of the rays in `set`.
    pub fn incidence_rank(&self, set: RaySet) -> usize {
        let rows: Vec<Vec<Rat>> = bits(set)
            .map(|c| self.rays[c].iter().map(|&x| Rat::from_int(x)).collect())
            .collect();
        linalg::rank(&rows)
    }

    /// Normal of the facet whose tight rays are exactly `set`, if there is one.
    pub fn facet_through(&self, set: RaySet) -> Option<Vec<i64>> {
        if self.ray_count() > dd::MAX_GENERATORS || set == self.all_rays() {
            return None;
        }
        let rows: Vec<Vec<Rat>> = bits(set)
            .map(|c| self.rays[c].iter().map(|&x| Rat::from_int(x)).collect())
            .collect();
        let null = if rows.is_empty() {
            if self.dim() != 1 {
                return None;
            }
            vec![vec![Rat::one()]]
        } else {
            linalg::nullspace(&rows, self.dim())
        };
        if null.len() != 1 {
            return None;
        }
        let mut normal: Vec<i64> = linalg::primitive_integer(&null[0])
            .iter()
            .map(num_traits::ToPrimitive::to_i64)
            .collect::<Option<_>>()?;
        let mut sign = 0i128;
        for c in 0..self.ray_count() {
            let s = dot(&normal, &self.rays[c]);
            let tight = set >> c & 1 == 1;
            if tight != (s == 0) {
                return None;
            }
            if s != 0 {
                if sign == 0 {
                    sign = s.signum();
                } else if sign != s.signum() {
                    return None;
                }
            }
        }
        if sign > 0 {
            normal.iter_mut().for_each(|x| *x = -*x);
        }
        Some(normal)
    }

    pub fn all_rays(&self) -> RaySet {
        full_set(self.ray_count())
    }

    /// Enumerates all facets by double description.
    pub fn enumerate(&self, budget: &Budget) -> Result<ConeDescription, ConeError> {
        budget.check(self)?;
        let (raw, _) = dd::facets(&self.rays, self.dim())?;
        let mut facets: Vec<Facet> =
            raw.into_iter().map(|f| Facet { normal: f.normal, incidence: f.incidence }).collect();
        let n = self.ray_count();
        facets.sort_by_key(|f| pattern_key(f.incidence, n));
        Ok(ConeDescription { cone: self.clone(), facets })
    }
}

/// A facet normal `f` (row-basis coordinates) with `f · a <= 0` on every ray.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Facet {
    pub normal: Vec<i64>,
    pub incidence: RaySet,
}

/// A marginal cone with its complete facet list.
#[derive(Debug, Clone)]
pub struct ConeDescription {
    pub cone: MarginalCone,
    pub facets: Vec<Facet>,
}

impl ConeDescription {
    pub fn dim(&self) -> usize {
        self.cone.dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.cone.ambient_dim()
    }

    pub fn facet_count(&self) -> usize {
        self.facets.len()
    }

    pub fn pattern_of(&self, facet: &Facet) -> ZeroStarPattern {
        ZeroStarPattern::new(self.cone.spec.levels().to_vec(), facet.incidence)
    }

    /// Number of rays that are extreme: a ray is extreme when the facets
    /// through it meet in no other ray.
    pub fn extreme_ray_count(&self) -> usize {
        let all = self.cone.all_rays();
        (0..self.cone.ray_count())
            .filter(|&c| {
                let common = self
                    .facets
                    .iter()
                    .filter(|f| f.incidence >> c & 1 == 1)
                    .fold(all, |acc, f| acc & f.incidence);
                common == 1u128 << c
            })
            .count()
    }

    /// Checks every facet: valid on all rays, tight exactly on its incidence
    /// set, whose rank is `dim - 1`, and not vanishing on the whole cone.
    pub fn verify(&self) -> Result<(), String> {
        let d = self.dim();
        for (i, f) in self.facets.iter().enumerate() {
            let mut strict = false;
            for c in 0..self.cone.ray_count() {
                let s = dot(&f.normal, &self.cone.rays[c]);
                if s > 0 {
                    return Err(format!("facet {i} violated by ray {c}"));
                }
                if (s == 0) != (f.incidence >> c & 1 == 1) {
                    return Err(format!("facet {i} has a wrong incidence at ray {c}"));
                }
                strict |= s < 0;
            }
            if !strict {
                return Err(format!("facet {i} vanishes on the cone"));
            }
            if self.cone.incidence_rank(f.incidence) + 1 != d {
                return Err(format!("facet {i} is not of codimension one"));
            }
        }
        let mut seen = std::collections::HashSet::new();
        if !self.facets.iter().all(|f| seen.insert(f.incidence)) {
            return Err("duplicate facets".into());
        }
        Ok(())
    }

    /// Recovers the rays from the facets by a second double description run
    /// on the polar cone. Returns the primitive rays found, in row-basis
    /// coordinates and sorted.
    pub fn dual_rays(&self) -> Result<Vec<Vec<i64>>, ConeError> {
        let normals: Vec<Vec<i64>> = self.facets.iter().map(|f| f.normal.clone()).collect();
        let (polar, _) = dd::facets(&normals, self.dim())?;
        let mut rays: Vec<Vec<i64>> = polar.into_iter().map(|f| f.normal).collect();
        rays.sort();
        Ok(rays)
    }

    /// `true` when the margins `t` (ambient coordinates, facets-only rows)
    /// lie in the relative interior: no facet is tight at `t`.
    pub fn interior_margins(&self, t: &[u64]) -> bool {
        let reduced: Vec<i64> = self.cone.row_basis.iter().map(|&r| t[r] as i64).collect();
        self.facets.iter().all(|f| dot(&f.normal, &reduced) < 0)
    }

    /// Decides MLE existence for a table on this cone's levels and model.
    pub fn oracle_exists(&self, counts: &[u64]) -> bool {
        let t = self.cone.design.apply_counts(counts);
        self.interior_margins(&t)
    }

    pub fn to_json(&self, orbits: Option<&[FacetOrbit]>) -> FacetsJson {
        FacetsJson {
            spec: self.cone.spec.levels().to_vec(),
            dim: self.dim(),
            ambient_dim: self.ambient_dim(),
            rays: self.cone.ray_count(),
            facets: self
                .facets
                .iter()
                .map(|f| FacetJson {
                    normal: self.cone.ambient_normal(&f.normal).iter().map(|x| x.to_string()).collect(),
                    pattern: self.pattern_of(f).to_string(),
                })
                .collect(),
            orbits: orbits
                .map(|os| {
                    os.iter()
                        .map(|o| OrbitJson { representative: o.representative.to_string(), size: o.size })
                        .collect()
                })
                .unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FacetsJson {
    pub spec: Vec<usize>,
    pub dim: usize,
    pub ambient_dim: usize,
    pub rays: usize,
    pub facets: Vec<FacetJson>,
    pub orbits: Vec<OrbitJson>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FacetJson {
    pub normal: Vec<String>,
    pub pattern: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitJson {
    pub representative: String,
    pub size: usize,
}

/// Enumerates the facets of the marginal cone of `model` on tables with
/// levels `spec`.
pub fn enumerate_facets(
    spec: &LevelSpec,
    model: &SimplicialComplex,
    budget: &Budget,
) -> Result<ConeDescription, ConeError> {
    MarginalCone::new(spec, model)?.enumerate(budget)
}

/// Decides existence by the facet description of the marginal cone.
pub fn boundary_oracle(
    table: &ContingencyTable,
    model: &SimplicialComplex,
    budget: &Budget,
) -> Result<bool, ConeError> {
    table.check_model(model)?;
    let cone = enumerate_facets(table.spec(), model, budget)?;
    Ok(cone.oracle_exists(table.counts()))
}

/// Incidence of a facet over the cells: `*` where the ray is tight, `0`
/// where the inequality is strict. Displayed flattened in row-major order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ZeroStarPattern {
    pub levels: Vec<usize>,
    pub stars: RaySet,
}

impl ZeroStarPattern {
    pub fn new(levels: Vec<usize>, stars: RaySet) -> Self {
        ZeroStarPattern { levels, stars }
    }

    pub fn cell_count(&self) -> usize {
        self.levels.iter().product()
    }

    pub fn is_star(&self, cell: usize) -> bool {
        self.stars >> cell & 1 == 1
    }

    pub fn zeros(&self) -> Vec<usize> {
        (0..self.cell_count()).filter(|&c| !self.is_star(c)).collect()
    }

    pub fn star_count(&self) -> usize {
        self.stars.count_ones() as usize
    }

    /// Parses a flat string of `0` and `*`; whitespace and `|` are ignored.
    pub fn parse(levels: Vec<usize>, text: &str) -> Result<Self, ConeError> {
        let want: usize = levels.iter().product();
        let mut stars: RaySet = 0;
        let mut n = 0;
        for ch in text.chars() {
            match ch {
                '*' | '0' => {
                    if n >= dd::MAX_GENERATORS {
                        return Err(ConeError::PatternLength { want, got: n + 1 });
                    }
                    if ch == '*' {
                        stars |= 1u128 << n;
                    }
                    n += 1;
                }
                c if c.is_whitespace() || c == '|' => {}
                c => return Err(ConeError::BadMap(format!("unexpected character {c:?} in pattern"))),
            }
        }
        if n != want {
            return Err(ConeError::PatternLength { want, got: n });
        }
        Ok(ZeroStarPattern { levels, stars })
    }
}

impl fmt::Display for ZeroStarPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in 0..self.cell_count() {
            f.write_str(if self.is_star(c) { "*" } else { "0" })?;
        }
        Ok(())
    }
}

/// Order key on incidence sets matching the lexicographic order of their
/// patterns with `0 < *`.
pub fn pattern_key(set: RaySet, cells: usize) -> u128 {
    if cells == 0 {
        0
    } else {
        set.reverse_bits() >> (128 - cells)
    }
}

/// ½(2^p−2)(2^q−2)(2^r−2) + pq + qr + pr: a lower bound on the number of
/// facets for three-way tables under the no-three-way-interaction model.
pub fn facet_count_lower_bound(p: u32, q: u32, r: u32) -> u128 {
    let t = |x: u32| (1u128 << x) - 2;
    let (p1, q1, r1) = (p as u128, q as u128, r as u128);
    t(p) * t(q) * t(r) / 2 + p1 * q1 + q1 * r1 + p1 * r1
}

/// Exact facet count for `2 x q x r` tables.
pub fn facet_count_2qr(q: u32, r: u32) -> u128 {
    let t = |x: u32| (1u128 << x) - 2;
    let (q1, r1) = (q as u128, r as u128);
    t(q) * t(r) + 2 * (q1 + r1) + q1 * r1
}

pub(crate) fn dot(a: &[i64], b: &[i64]) -> i128 {
    a.iter().zip(b).map(|(&x, &y)| x as i128 * y as i128).sum()
}

pub(crate) fn bits(set: RaySet) -> impl Iterator<Item = usize> {
    let mut s = set;
    std::iter::from_fn(move || {
        if s == 0 {
            None
        } else {
            let i = s.trailing_zeros() as usize;
            s &= s - 1;
            Some(i)
        }
    })
}

pub(crate) fn full_set(n: usize) -> RaySet {
    if n >= 128 {
        u128::MAX
    } else {
        (1u128 << n) - 1
    }
}
