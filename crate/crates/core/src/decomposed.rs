//! The existence test assembled from the cliques of a chordal cover.
//!
//! Each clique `C` is treated as a saturated model on its own variables. Its
//! block of variables `c` has one coordinate per (face of `C`, face cell), and
//! its inequalities read `N·(c·a_j) - c·t_C <= 0` for every cell `j` of the
//! clique margin, where `t_C` collects all face margins of the clique and `N`
//! is the table total. Blocks are tied together by requiring, for every face
//! of the cover that is not a face of the model, that the coordinates of that
//! face summed over the cliques containing it vanish. The estimate exists
//! exactly when the resulting polyhedron is a linear space.

use std::fmt::Write as _;

use crate::complex::{SimplicialComplex, VarSet};
use crate::design::DesignMatrix;
use crate::lp::{LpOutcome, RationalLp, Relation};
use crate::relint::ExistenceError;
use crate::rational::Rat;
use crate::table::{ContingencyTable, FaceMode, LevelSpec};
use crate::triangulate::{chordal_triangulation, ChordalCover, Triangulator};

/// A sparse row `Σ coeff·c_var`.
pub type SparseRow = Vec<(usize, Rat)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueBlock {
    pub clique: VarSet,
    /// First variable of the block in the full system.
    pub offset: usize,
    /// `(face, first variable)` for every face of the clique, empty face first.
    pub faces: Vec<(VarSet, usize)>,
    pub size: usize,
    /// Inequalities `row·c <= 0`, in the block's own variable numbering.
    pub inequalities: Vec<SparseRow>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedSystem {
    pub num_vars: usize,
    pub blocks: Vec<CliqueBlock>,
    /// All inequalities `row·c <= 0` in global numbering.
    pub inequalities: Vec<SparseRow>,
    /// Equations `row·c = 0`.
    pub equations: Vec<SparseRow>,
    /// Faces of the cover outside the model, one vector equation each.
    pub equation_faces: Vec<VarSet>,
}

/// The block of a single clique, with variables numbered from zero.
pub fn clique_cone_constraints(table: &ContingencyTable, clique: VarSet) -> Result<CliqueBlock, ExistenceError> {
    let spec = table.spec();
    let vertices: Vec<usize> = clique.iter().collect();
    let local_spec = LevelSpec::new(vertices.iter().map(|&v| spec.levels()[v]).collect())?;
    let local = SimplicialComplex::simplex(vertices.len());
    let design = DesignMatrix::build(&local_spec, &local, FaceMode::AllFaces)?;
    let margin = table.margin(clique)?;
    let total = Rat::from(table.total()?);
    let t: Vec<Rat> = design.apply_counts(&margin.counts).into_iter().map(Rat::from).collect();

    let to_global = |face: VarSet| VarSet::from_vertices(&face.iter().map(|i| vertices[i] + 1).collect::<Vec<_>>());
    let mut faces = Vec::new();
    for (r, (face, fi)) in design.row_index.iter().enumerate() {
        if *fi == 0 {
            faces.push((to_global(*face), r));
        }
    }
    let inequalities = (0..design.col_count)
        .map(|j| {
            let mut coeff: Vec<Rat> = t.iter().map(|x| -x).collect();
            for &r in design.column(j) {
                coeff[r] += &total;
            }
            coeff.into_iter().enumerate().filter(|(_, c)| !c.is_zero()).collect()
        })
        .collect();
    Ok(CliqueBlock { clique, offset: 0, faces, size: design.row_count(), inequalities })
}

pub fn build_reduced_system(
    table: &ContingencyTable,
    model: &SimplicialComplex,
    cover: &ChordalCover,
) -> Result<ReducedSystem, ExistenceError> {
    table.check_model(model)?;
    cover.check_covers(model)?;
    let spec = table.spec();
    let mut blocks = Vec::with_capacity(cover.cliques.len());
    let mut inequalities = Vec::new();
    let mut offset = 0;
    for &clique in &cover.cliques {
        let mut b = clique_cone_constraints(table, clique)?;
        b.offset = offset;
        for (_, start) in b.faces.iter_mut() {
            *start += offset;
        }
        inequalities.extend(b.inequalities.iter().map(|row| row.iter().map(|(j, c)| (j + offset, c.clone())).collect()));
        offset += b.size;
        blocks.push(b);
    }

    let cover_complex = SimplicialComplex::new(spec.k(), cover.cliques.iter().copied())?;
    let mut equations = Vec::new();
    let mut equation_faces = Vec::new();
    for face in cover_complex.faces() {
        if model.contains_face(face) {
            continue;
        }
        let cells = spec.face_cells(face);
        let starts: Vec<usize> = blocks
            .iter()
            .filter_map(|b| b.faces.iter().find(|(f, _)| *f == face).map(|(_, s)| *s))
            .collect();
        for fi in 0..cells {
            equations.push(starts.iter().map(|s| (s + fi, Rat::one())).collect());
        }
        equation_faces.push(face);
    }
    Ok(ReducedSystem { num_vars: offset, blocks, inequalities, equations, equation_faces })
}

impl ReducedSystem {
    fn base_lp(&self) -> RationalLp {
        let mut lp = RationalLp::new(self.num_vars);
        for j in 0..self.num_vars {
            lp.set_free(j);
        }
        for row in &self.inequalities {
            lp.add_constraint(row.clone(), Relation::Le, Rat::zero());
        }
        for row in &self.equations {
            lp.add_constraint(row.clone(), Relation::Eq, Rat::zero());
        }
        lp
    }

    /// Program `max -row_r·c` subject to the system and `-row_r·c <= 1`.
    pub fn slack_lp(&self, r: usize) -> RationalLp {
        let mut lp = self.base_lp();
        let neg: SparseRow = self.inequalities[r].iter().map(|(j, c)| (*j, -c)).collect();
        lp.add_constraint(neg.clone(), Relation::Le, Rat::one());
        for (j, c) in neg {
            lp.set_objective(j, c);
        }
        lp
    }

    /// The whole test as one program: maximise the sum of all slacks, each
    /// capped at 1. The optimum is 0 exactly for a linear space.
    pub fn to_lp_text(&self) -> String {
        let m = self.inequalities.len();
        let mut lp = RationalLp::new(self.num_vars + m);
        for j in 0..self.num_vars {
            lp.set_free(j);
        }
        for (r, row) in self.inequalities.iter().enumerate() {
            let s = self.num_vars + r;
            let mut coeffs = row.clone();
            coeffs.push((s, Rat::one()));
            lp.add_constraint(coeffs, Relation::Eq, Rat::zero());
            lp.set_upper(s, Rat::one());
            lp.set_objective(s, Rat::one());
        }
        for row in &self.equations {
            lp.add_constraint(row.clone(), Relation::Eq, Rat::zero());
        }
        let mut out = String::new();
        let _ = writeln!(
            out,
            "\\ reduced system: {} variables, {} inequalities, {} equations",
            self.num_vars,
            m,
            self.equations.len()
        );
        out.push_str(&lp.to_lp_text());
        out
    }
}

/// `true` when every inequality of the system is tight on the whole
/// polyhedron. Stops at the first inequality with positive slack.
pub fn is_linear_space(sys: &ReducedSystem) -> Result<bool, ExistenceError> {
    Ok(first_loose_row(sys)?.is_none())
}

/// An inequality with positive slack somewhere on the polyhedron, if any.
///
/// A zero optimum for row `r` comes with dual multipliers `y >= 0` writing
/// `-row_r` as `Σ y_k row_k` plus equations, so every row with `y_k > 0` is
/// tight on the whole polyhedron as well and needs no program of its own.
pub fn first_loose_row(sys: &ReducedSystem) -> Result<Option<usize>, ExistenceError> {
    let m = sys.inequalities.len();
    let mut tight = vec![false; m];
    for r in 0..m {
        if sys.inequalities[r].is_empty() || tight[r] {
            continue;
        }
        match sys.slack_lp(r).solve() {
            LpOutcome::Optimal(sol) => {
                if sol.value.is_positive() {
                    return Ok(Some(r));
                }
                // Any other row loose at this optimum would already show the
                // polyhedron is not a linear space.
                for (k, row) in sys.inequalities.iter().enumerate() {
                    let v = row.iter().fold(Rat::zero(), |mut acc, (j, c)| {
                        acc.add_mul(c, &sol.x[*j]);
                        acc
                    });
                    if v.is_negative() {
                        return Ok(Some(k));
                    }
                }
                tight[r] = true;
                for (k, y) in sol.duals[..m].iter().enumerate() {
                    if y.is_positive() {
                        tight[k] = true;
                    }
                }
            }
            LpOutcome::Infeasible => return Err(ExistenceError::Solver("slack program infeasible".into())),
            LpOutcome::Unbounded => return Err(ExistenceError::Solver("slack program unbounded".into())),
        }
    }
    Ok(None)
}

/// Decides existence through the cover found by [`chordal_triangulation`].
pub fn mle_exists_decomposed(table: &ContingencyTable, model: &SimplicialComplex) -> Result<bool, ExistenceError> {
    table.check_model(model)?;
    mle_exists_with_cover(table, model, &chordal_triangulation(model))
}

pub fn mle_exists_with(
    table: &ContingencyTable,
    model: &SimplicialComplex,
    triangulator: &dyn Triangulator,
) -> Result<bool, ExistenceError> {
    table.check_model(model)?;
    let cover = triangulator
        .triangulate(model)
        .ok_or_else(|| ExistenceError::Solver(format!("triangulator {} declined the model", triangulator.name())))?;
    mle_exists_with_cover(table, model, &cover)
}

pub fn mle_exists_with_cover(
    table: &ContingencyTable,
    model: &SimplicialComplex,
    cover: &ChordalCover,
) -> Result<bool, ExistenceError> {
    // An empty table has no interior margins.
    if table.total()? == 0 {
        return Ok(false);
    }
    let sys = build_reduced_system(table, model, cover)?;
    is_linear_space(&sys)
}
