//! Exact dense linear algebra over the integers and rationals.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;

use crate::rational::Rat;

/// Rank of an integer matrix by fraction-free (Bareiss) elimination.
pub fn bareiss_rank(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<BigInt>> = rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let nrows = m.len();
    let ncols = m.first().map_or(0, |r| r.len());
    let mut prev = BigInt::from(1);
    let mut rank = 0;
    for col in 0..ncols {
        if rank == nrows {
            break;
        }
        let Some(p) = (rank..nrows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let pivot = m[rank][col].clone();
        for r in rank + 1..nrows {
            let factor = m[r][col].clone();
            for c in col + 1..ncols {
                let v = &pivot * &m[r][c] - &factor * &m[rank][c];
                // Exact by Sylvester's identity.
                m[r][c] = v / &prev;
            }
            m[r][col] = BigInt::zero();
        }
        prev = pivot;
        rank += 1;
    }
    rank
}

/// Reduced row echelon form; returns the pivot column of each nonzero row.
pub fn rref(m: &mut Vec<Vec<Rat>>) -> Vec<usize> {
    let nrows = m.len();
    let ncols = m.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        if r == nrows {
            break;
        }
        let Some(p) = (r..nrows).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][col].recip();
        for v in m[r].iter_mut() {
            if !v.is_zero() {
                *v = &*v * &inv;
            }
        }
        let pivot_row = m[r].clone();
        let nz: Vec<usize> = (0..ncols).filter(|&c| !pivot_row[c].is_zero()).collect();
        for (i, row) in m.iter_mut().enumerate() {
            if i == r || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for &c in &nz {
                row[c].sub_mul(&f, &pivot_row[c]);
            }
        }
        pivots.push(col);
        r += 1;
    }
    m.truncate(r);
    pivots
}

pub fn rank(m: &[Vec<Rat>]) -> usize {
    let mut work = m.to_vec();
    rref(&mut work).len()
}

/// Basis of `{x : M x = 0}`.
pub fn nullspace(m: &[Vec<Rat>], ncols: usize) -> Vec<Vec<Rat>> {
    let mut work = m.to_vec();
    let pivots = rref(&mut work);
    let mut is_pivot = vec![false; ncols];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let mut basis = Vec::new();
    for free in (0..ncols).filter(|&c| !is_pivot[c]) {
        let mut v = vec![Rat::zero(); ncols];
        v[free] = Rat::one();
        for (row, &p) in work.iter().zip(&pivots) {
            v[p] = -&row[free];
        }
        basis.push(v);
    }
    basis
}

/// Indices of a maximal linearly independent subset of rows, chosen greedily
/// in order.
pub fn independent_rows(m: &[Vec<Rat>]) -> Vec<usize> {
    let ncols = m.first().map_or(0, |r| r.len());
    // Echelon basis kept as (pivot column, normalized row).
    let mut basis: Vec<(usize, Vec<Rat>)> = Vec::new();
    let mut chosen = Vec::new();
    for (i, row) in m.iter().enumerate() {
        let mut v = row.clone();
        for (p, b) in &basis {
            if v[*p].is_zero() {
                continue;
            }
            let f = v[*p].clone();
            for c in 0..ncols {
                if !b[c].is_zero() {
                    v[c].sub_mul(&f, &b[c]);
                }
            }
        }
        if let Some(p) = (0..ncols).find(|&c| !v[c].is_zero()) {
            let inv = v[p].recip();
            for x in v.iter_mut() {
                if !x.is_zero() {
                    *x = &*x * &inv;
                }
            }
            basis.push((p, v));
            chosen.push(i);
        }
    }
    chosen
}

/// Scales a rational vector to a primitive integer vector with the same direction.
pub fn primitive_integer(v: &[Rat]) -> Vec<BigInt> {
    let mut lcm = BigInt::from(1);
    for x in v {
        lcm = lcm.lcm(&x.denom());
    }
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = g.gcd(x);
    }
    if g.is_zero() {
        return ints;
    }
    ints.into_iter().map(|x| x / &g).collect()
}

pub fn gcd_i128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}


#[cfg(test)]
mod tests {
    use super::*;

    fn rat_rows(rows: &[&[i64]]) -> Vec<Vec<Rat>> {
        rows.iter().map(|r| r.iter().map(|&x| Rat::from_int(x)).collect()).collect()
    }

    #[test]
    fn ranks_agree() {
        let rows: Vec<Vec<i64>> = vec![vec![1, 2, 3], vec![2, 4, 6], vec![1, 0, 1], vec![0, 2, 2]];
        assert_eq!(bareiss_rank(&rows), 2);
        let r: Vec<&[i64]> = rows.iter().map(|r| r.as_slice()).collect();
        assert_eq!(rank(&rat_rows(&r)), 2);
        assert_eq!(bareiss_rank(&[vec![0, 0], vec![0, 0]]), 0);
        assert_eq!(bareiss_rank(&[vec![2, 1], vec![1, 1]]), 2);
    }

    #[test]
    fn nullspace_is_annihilated() {
        let m = rat_rows(&[&[1, 1, 0, 0], &[0, 0, 1, 1], &[1, 0, 1, 0]]);
        let ns = nullspace(&m, 4);
        assert_eq!(ns.len(), 1);
        for v in &ns {
            for row in &m {
                assert!(crate::rational::dot(row, v).is_zero());
            }
        }
    }

    #[test]
    fn independent_row_selection() {
        let m = rat_rows(&[&[1, 1], &[2, 2], &[0, 1], &[1, 2]]);
        assert_eq!(independent_rows(&m), vec![0, 2]);
    }

    #[test]
    fn primitive_scaling() {
        let v = vec![Rat::new(1, 2), Rat::new(-3, 4), Rat::zero()];
        let p = primitive_integer(&v);
        assert_eq!(p, vec![BigInt::from(2), BigInt::from(-3), BigInt::from(0)]);
    }
}
