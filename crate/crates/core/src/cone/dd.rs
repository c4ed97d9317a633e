//! Double description: facets of a full-dimensional pointed cone given by its
//! generators.
//!
//! Generators are inserted one at a time. The current facet list is the set of
//! extreme rays of the polar of the cone spanned by the generators inserted so
//! far; inserting a generator keeps the facets it satisfies and combines each
//! adjacent (violated, satisfied) pair into a new facet through it. Adjacency
//! is tested combinatorially on incidence bitsets.

use crate::linalg;
use crate::rational::Rat;

use super::ConeError;

/// Incidence set over at most 128 generators.
pub type RaySet = u128;

pub const MAX_GENERATORS: usize = 128;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DdFacet {
    /// Primitive integer normal with `normal · g <= 0` for every generator.
    pub normal: Vec<i64>,
    /// Generators on which the inequality is tight.
    pub incidence: RaySet,
}

#[derive(Debug, Clone, Default)]
pub struct DdStats {
    pub max_intermediate: usize,
    pub candidate_pairs: u64,
    pub adjacent_pairs: u64,
}

/// Computes all facets of `cone(generators)`, which must span `R^dim`.
/// Generators are processed in the given order; the initial simplex uses the
/// first linearly independent ones.
pub fn facets(generators: &[Vec<i64>], dim: usize) -> Result<(Vec<DdFacet>, DdStats), ConeError> {
    let n = generators.len();
    if n > MAX_GENERATORS {
        return Err(ConeError::Budget(format!("{n} generators exceed the limit of {MAX_GENERATORS}")));
    }
    if dim == 0 {
        return Ok((Vec::new(), DdStats::default()));
    }
    let as_rat: Vec<Vec<Rat>> = generators
        .iter()
        .map(|g| g.iter().map(|&x| Rat::from_int(x)).collect())
        .collect();
    let initial = linalg::independent_rows(&as_rat);
    if initial.len() != dim {
        return Err(ConeError::NotFullDimensional { rank: initial.len(), dim });
    }

    // Rows of -B^{-1}, B having the initial generators as columns.
    let mut aug: Vec<Vec<Rat>> = (0..dim)
        .map(|i| {
            let mut row: Vec<Rat> = initial.iter().map(|&g| as_rat[g][i].clone()).collect();
            row.extend((0..dim).map(|j| if i == j { Rat::one() } else { Rat::zero() }));
            row
        })
        .collect();
    linalg::rref(&mut aug);
    let mut current: Vec<DdFacet> = Vec::with_capacity(dim);
    let all_initial: RaySet = initial.iter().fold(0, |acc, &g| acc | (1u128 << g));
    for (k, &g) in initial.iter().enumerate() {
        let inv_row: Vec<Rat> = aug[k][dim..].iter().map(|x| -x).collect();
        let normal = to_i64(&linalg::primitive_integer(&inv_row))?;
        current.push(DdFacet { normal, incidence: all_initial & !(1u128 << g) });
    }

    let mut stats = DdStats { max_intermediate: current.len(), ..DdStats::default() };
    let mut processed: RaySet = all_initial;
    let need = dim.saturating_sub(2) as u32;
    for (idx, g) in generators.iter().enumerate() {
        if processed >> idx & 1 == 1 {
            continue;
        }
        let bit = 1u128 << idx;
        let mut pos: Vec<(DdFacet, i128)> = Vec::new();
        let mut keep: Vec<DdFacet> = Vec::with_capacity(current.len());
        let mut neg: Vec<(usize, i128)> = Vec::new();
        for mut f in current.drain(..) {
            let s = dot(&f.normal, g);
            if s > 0 {
                pos.push((f, s));
            } else {
                if s == 0 {
                    f.incidence |= bit;
                } else {
                    neg.push((keep.len(), s));
                }
                keep.push(f);
            }
        }
        if pos.is_empty() {
            current = keep;
            processed |= bit;
            continue;
        }
        // Incidences of every generator present before this step, for the
        // adjacency test. Tight-on-`g` bits are masked out.
        let others: Vec<RaySet> = keep
            .iter()
            .map(|f| f.incidence & !bit)
            .chain(pos.iter().map(|(f, _)| f.incidence))
            .collect();
        let pos_offset = keep.len();
        let mut created: Vec<DdFacet> = Vec::new();
        for (pi, (fp, sp)) in pos.iter().enumerate() {
            for &(ni, sn) in &neg {
                let fneg = &keep[ni];
                let common = fp.incidence & fneg.incidence;
                if common.count_ones() < need {
                    continue;
                }
                stats.candidate_pairs += 1;
                let blocked = others.iter().enumerate().any(|(oi, &z)| {
                    oi != ni && oi != pos_offset + pi && common & z == common
                });
                if blocked {
                    continue;
                }
                stats.adjacent_pairs += 1;
                let normal = combine(&fp.normal, *sp, &fneg.normal, sn)?;
                created.push(DdFacet { normal, incidence: common | bit });
            }
        }
        keep.extend(created);
        current = keep;
        processed |= bit;
        stats.max_intermediate = stats.max_intermediate.max(current.len());
    }
    Ok((current, stats))
}

fn dot(a: &[i64], b: &[i64]) -> i128 {
    a.iter().zip(b).map(|(&x, &y)| x as i128 * y as i128).sum()
}

/// `sp * fneg - sn * fpos`, scaled to a primitive vector. Vanishes on the new
/// generator since `fpos·g = sp > 0` and `fneg·g = sn < 0`.
fn combine(fpos: &[i64], sp: i128, fneg: &[i64], sn: i128) -> Result<Vec<i64>, ConeError> {
    let mut out: Vec<i128> = Vec::with_capacity(fpos.len());
    for (&a, &b) in fpos.iter().zip(fneg) {
        let v = sp
            .checked_mul(b as i128)
            .and_then(|x| sn.checked_mul(a as i128).and_then(|y| x.checked_sub(y)))
            .ok_or(ConeError::Overflow)?;
        out.push(v);
    }
    let g = out.iter().fold(0i128, |acc, &x| linalg::gcd_i128(acc, x));
    out.into_iter()
        .map(|x| i64::try_from(if g > 1 { x / g } else { x }).map_err(|_| ConeError::Overflow))
        .collect()
}

fn to_i64(v: &[num_bigint::BigInt]) -> Result<Vec<i64>, ConeError> {
    use num_traits::ToPrimitive;
    v.iter().map(|x| x.to_i64().ok_or(ConeError::Overflow)).collect()
}
