//! Deciding whether the margins of a table lie in the relative interior of the
//! marginal cone, with witnesses, certificates and the facial set.

use serde::Serialize;

use crate::complex::SimplicialComplex;
use crate::design::DesignMatrix;
use crate::lp::{LpOutcome, LpSolution, RationalLp, Relation};
use crate::rational::{dot, Rat};
use crate::table::{ContingencyTable, FaceMode, TableError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExistenceError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Model(#[from] crate::complex::ModelError),
    #[error(transparent)]
    Cone(#[from] crate::cone::ConeError),
    #[error("solver failure: {0}")]
    Solver(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExistenceVerdict {
    pub exists: bool,
    /// Optimal value of `max ε` with `x >= ε` and `ε <= 1`.
    pub epsilon_star: Rat,
    /// A table with the observed margins and every cell at least
    /// `epsilon_star`, when the estimate exists.
    pub witness: Option<Vec<Rat>>,
    /// A functional `c` on the margins (design-matrix rows) with
    /// `c·a_i <= c·t` for all cells, strict exactly on the facial set.
    pub certificate: Option<Vec<Rat>>,
    /// 0-based cells that vanish in every table with the observed margins.
    pub facial_set: Vec<usize>,
}

/// `{"exists", "epsilon", "facial_set", "witness", "certificate"}` with
/// rationals as `"p/q"` strings and cells as 1-based labels.
#[derive(Debug, Clone, Serialize)]
pub struct VerdictJson {
    pub exists: bool,
    pub epsilon: String,
    pub facial_set: Vec<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Vec<String>>,
}

impl ExistenceVerdict {
    pub fn to_json(&self, table: &ContingencyTable) -> VerdictJson {
        let strs = |v: &Vec<Rat>| v.iter().map(|x| x.to_string()).collect();
        VerdictJson {
            exists: self.exists,
            epsilon: self.epsilon_star.to_string(),
            facial_set: self.facial_set.iter().map(|&c| table.spec().cell_label(c)).collect(),
            witness: self.witness.as_ref().map(strs),
            certificate: self.certificate.as_ref().map(strs),
        }
    }
}

struct Setup {
    design: DesignMatrix,
    basis: Vec<usize>,
    margins: Vec<Rat>,
}

fn setup(table: &ContingencyTable, model: &SimplicialComplex) -> Result<Setup, ExistenceError> {
    table.check_model(model)?;
    let design = DesignMatrix::build(table.spec(), model, FaceMode::FacetsOnly)?;
    let basis = design.row_basis();
    let margins = design.apply_counts(table.counts()).into_iter().map(Rat::from).collect();
    Ok(Setup { design, basis, margins })
}

/// `A_S x = t_S` over the row basis `S`, with `x` as variables `0..cells`.
fn margin_constraints(lp: &mut RationalLp, s: &Setup, extra: impl Fn(usize) -> Option<(usize, Rat)>) {
    for &r in &s.basis {
        let mut coeffs: Vec<(usize, Rat)> = s.design.rows[r].iter().map(|&c| (c, Rat::one())).collect();
        if let Some(term) = extra(r) {
            coeffs.push(term);
        }
        lp.add_constraint(coeffs, Relation::Eq, s.margins[r].clone());
    }
}

fn optimal(outcome: LpOutcome, what: &str) -> Result<LpSolution, ExistenceError> {
    match outcome {
        LpOutcome::Optimal(s) => Ok(s),
        LpOutcome::Infeasible => Err(ExistenceError::Solver(format!("{what}: reported infeasible"))),
        LpOutcome::Unbounded => Err(ExistenceError::Solver(format!("{what}: reported unbounded"))),
    }
}

/// Decides existence by `max ε` subject to `A x = t`, `x >= ε`, `ε <= 1`.
/// Boundary verdicts carry the facial set and a verified certificate.
pub fn mle_exists(table: &ContingencyTable, model: &SimplicialComplex) -> Result<ExistenceVerdict, ExistenceError> {
    let s = setup(table, model)?;
    let n = s.design.col_count;
    // x = ε·1 + y with y >= 0.
    let eps = n;
    let mut lp = RationalLp::new(n + 1);
    margin_constraints(&mut lp, &s, |r| Some((eps, Rat::from(s.design.rows[r].len() as u64))));
    lp.set_free(eps);
    lp.set_upper(eps, Rat::one());
    lp.set_objective(eps, Rat::one());
    let sol = optimal(lp.solve(), "interiority program")?;
    let epsilon_star = sol.value.clone();
    if epsilon_star.is_positive() {
        let witness: Vec<Rat> = sol.x[..n].iter().map(|y| y + &epsilon_star).collect();
        if s.design.apply(&witness) != s.margins {
            return Err(ExistenceError::Solver("witness does not reproduce the margins".into()));
        }
        return Ok(ExistenceVerdict {
            exists: true,
            epsilon_star,
            witness: Some(witness),
            certificate: None,
            facial_set: Vec::new(),
        });
    }
    let facial = facial_cells(&s, table)?;
    let certificate = certificate(&s, &facial)?;
    Ok(ExistenceVerdict { exists: false, epsilon_star, witness: None, certificate: Some(certificate), facial_set: facial })
}

/// Cells that are zero in every nonnegative table with the observed margins.
pub fn facial_set(table: &ContingencyTable, model: &SimplicialComplex) -> Result<Vec<usize>, ExistenceError> {
    let s = setup(table, model)?;
    facial_cells(&s, table)
}

/// One program `max x_i` (with `x_i <= 1`) per zero cell not already shown to
/// be positive somewhere; every positive coordinate of an optimum rules its
/// cell out.
fn facial_cells(s: &Setup, table: &ContingencyTable) -> Result<Vec<usize>, ExistenceError> {
    let n = s.design.col_count;
    let mut free: Vec<bool> = table.counts().iter().map(|&c| c > 0).collect();
    let mut base = RationalLp::new(n);
    margin_constraints(&mut base, s, |_| None);
    let mut facial = Vec::new();
    for i in 0..n {
        if free[i] {
            continue;
        }
        let mut lp = base.clone();
        lp.set_objective(i, Rat::one());
        lp.set_upper(i, Rat::one());
        let sol = optimal(lp.solve(), "facial-set program")?;
        if sol.value.is_positive() {
            for (j, x) in sol.x.iter().enumerate() {
                if x.is_positive() {
                    free[j] = true;
                }
            }
        } else {
            facial.push(i);
        }
    }
    Ok(facial)
}

/// Dual of `max Σ_{i∈F} x_i` subject to `A x = t`, `x >= 0`, whose optimum is
/// zero when `F` is the facial set. Negating the optimal dual gives `c` with
/// `c·a_i <= -1` on `F`, `c·a_i = 0` elsewhere and `c·t = 0`.
fn certificate(s: &Setup, facial: &[usize]) -> Result<Vec<Rat>, ExistenceError> {
    let n = s.design.col_count;
    let mut lp = RationalLp::new(n);
    margin_constraints(&mut lp, s, |_| None);
    for &i in facial {
        lp.set_objective(i, Rat::one());
    }
    let sol = optimal(lp.solve(), "certificate program")?;
    let mut c = vec![Rat::zero(); s.design.row_count()];
    for (k, &r) in s.basis.iter().enumerate() {
        c[r] = -&sol.duals[k];
    }
    if !certificate_holds(&s.design, &s.margins, &c, facial) {
        return Err(ExistenceError::Solver("certificate check failed".into()));
    }
    Ok(c)
}

/// Exact check that `c·a_i <= c·t` for every cell, with strict inequality
/// exactly on `facial` and at least one strict inequality.
pub fn certificate_holds(design: &DesignMatrix, margins: &[Rat], c: &[Rat], facial: &[usize]) -> bool {
    let ct = dot(c, margins);
    let values = design.transpose_apply(c);
    let mut strict = 0;
    for (i, v) in values.iter().enumerate() {
        match v.cmp(&ct) {
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Less => {
                if facial.binary_search(&i).is_err() {
                    return false;
                }
                strict += 1;
            }
            std::cmp::Ordering::Equal => {
                if facial.binary_search(&i).is_ok() {
                    return false;
                }
            }
        }
    }
    strict > 0 && strict == facial.len()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelWitness {
    pub exists: bool,
    pub epsilon: Rat,
    /// `z` in the kernel of the design matrix with `n + z >= epsilon`.
    pub z: Vec<Rat>,
}

/// Decides existence by `max ε` over `z = Bλ` (B a kernel basis) with
/// `n + z >= ε` and `ε <= 1`.
pub fn exists_kernel_witness(table: &ContingencyTable, model: &SimplicialComplex) -> Result<KernelWitness, ExistenceError> {
    table.check_model(model)?;
    let design = DesignMatrix::build(table.spec(), model, FaceMode::FacetsOnly)?;
    let kernel = design.kernel_basis();
    let n = design.col_count;
    let m = kernel.len();
    let eps = m;
    let mut lp = RationalLp::new(m + 1);
    for (i, &count) in table.counts().iter().enumerate() {
        let mut coeffs: Vec<(usize, Rat)> =
            (0..m).filter(|&k| !kernel[k][i].is_zero()).map(|k| (k, -&kernel[k][i])).collect();
        coeffs.push((eps, Rat::one()));
        lp.add_constraint(coeffs, Relation::Le, Rat::from(count));
    }
    for k in 0..=m {
        lp.set_free(k);
    }
    lp.set_upper(eps, Rat::one());
    lp.set_objective(eps, Rat::one());
    let sol = optimal(lp.solve(), "kernel program")?;
    let mut z = vec![Rat::zero(); n];
    for (k, b) in kernel.iter().enumerate() {
        if sol.x[k].is_zero() {
            continue;
        }
        for (zi, bi) in z.iter_mut().zip(b) {
            zi.add_mul(&sol.x[k], bi);
        }
    }
    Ok(KernelWitness { exists: sol.value.is_positive(), epsilon: sol.value, z })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::parse_complex;
    use crate::table::LevelSpec;

    fn table(levels: &[usize], counts: Vec<u64>) -> ContingencyTable {
        ContingencyTable::new(LevelSpec::new(levels.to_vec()).unwrap(), counts).unwrap()
    }

    fn no3() -> SimplicialComplex {
        parse_complex("[12][13][23]").unwrap()
    }

    #[test]
    fn positive_table_exists() {
        let t = table(&[2, 2, 2], vec![1; 8]);
        let v = mle_exists(&t, &no3()).unwrap();
        assert!(v.exists);
        assert!(v.epsilon_star.is_positive());
        assert!(v.facial_set.is_empty());
        assert!(v.witness.unwrap().iter().all(|x| x >= &v.epsilon_star));
        let k = exists_kernel_witness(&t, &no3()).unwrap();
        assert!(k.exists);
        assert_eq!(k.epsilon, Rat::one());
    }

    #[test]
    fn antipodal_zeros_do_not_exist() {
        let t = table(&[2, 2, 2], vec![0, 1, 1, 1, 1, 1, 1, 0]);
        let v = mle_exists(&t, &no3()).unwrap();
        assert!(!v.exists);
        assert_eq!(v.facial_set, vec![0, 7]);
        assert!(v.epsilon_star.is_zero());
        let j = v.to_json(&t);
        assert_eq!(j.facial_set, vec![vec![1, 1, 1], vec![2, 2, 2]]);
        assert_eq!(j.epsilon, "0");
        assert!(!exists_kernel_witness(&t, &no3()).unwrap().exists);
    }

    #[test]
    fn zero_slice_is_facial() {
        let mut counts = vec![3; 18];
        for (i, c) in counts.iter_mut().enumerate() {
            if i % 3 == 0 {
                *c = 0;
            }
        }
        let t = table(&[2, 3, 3], counts);
        let f = facial_set(&t, &no3()).unwrap();
        assert_eq!(f, (0..18).filter(|i| i % 3 == 0).collect::<Vec<_>>());
    }

    #[test]
    fn empty_table_is_all_facial() {
        let t = table(&[2, 2], vec![0; 4]);
        let v = mle_exists(&t, &parse_complex("[1][2]").unwrap()).unwrap();
        assert!(!v.exists);
        assert_eq!(v.facial_set, vec![0, 1, 2, 3]);
    }

    #[test]
    fn sampling_zero_without_nonexistence() {
        // One zero cell in a 2x2 independence table leaves the margins interior.
        let t = table(&[2, 2], vec![0, 2, 3, 4]);
        let m = parse_complex("[1][2]").unwrap();
        let v = mle_exists(&t, &m).unwrap();
        assert!(v.exists);
        let w = v.witness.unwrap();
        assert!(w.iter().all(|x| x.is_positive()));
        assert!(exists_kernel_witness(&t, &m).unwrap().exists);
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let t = table(&[2, 2], vec![1; 4]);
        assert!(matches!(mle_exists(&t, &no3()), Err(ExistenceError::Table(_))));
    }
}
