//! The 0/1 design matrix of a hierarchical model.

use std::fmt::Write as _;

use crate::complex::{SimplicialComplex, VarSet};
use crate::linalg;
use crate::rational::Rat;
use crate::table::{FaceMode, LevelSpec, TableError};

/// Rows are indexed by (face, face-cell) pairs in canonical face order, each
/// stored as the sorted list of columns (cells) where it is 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignMatrix {
    pub row_index: Vec<(VarSet, usize)>,
    pub col_count: usize,
    pub rows: Vec<Vec<usize>>,
    pub face_mode: FaceMode,
    /// `col_rows[i]` lists the rows with a 1 in column `i`, ascending.
    col_rows: Vec<Vec<usize>>,
}

impl DesignMatrix {
    pub fn build(spec: &LevelSpec, model: &SimplicialComplex, mode: FaceMode) -> Result<Self, TableError> {
        if model.k() != spec.k() {
            return Err(TableError::DimensionMismatch { model: model.k(), table: spec.k() });
        }
        let n = spec.cell_count();
        let mut row_index = Vec::new();
        let mut rows = Vec::new();
        let mut col_rows = vec![Vec::new(); n];
        for face in mode.faces(model) {
            let map = spec.face_map(face);
            let base = rows.len();
            let block = spec.face_cells(face);
            for fi in 0..block {
                row_index.push((face, fi));
                rows.push(Vec::new());
            }
            for (cell, &fi) in map.iter().enumerate() {
                rows[base + fi].push(cell);
                col_rows[cell].push(base + fi);
            }
        }
        Ok(DesignMatrix { row_index, col_count: n, rows, face_mode: mode, col_rows })
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    /// Rows having a 1 in column `cell`.
    pub fn column(&self, cell: usize) -> &[usize] {
        &self.col_rows[cell]
    }

    /// `A x` for a vector over the cells.
    pub fn apply(&self, x: &[Rat]) -> Vec<Rat> {
        self.rows
            .iter()
            .map(|r| {
                let mut acc = Rat::zero();
                for &c in r {
                    acc += &x[c];
                }
                acc
            })
            .collect()
    }

    pub fn apply_counts(&self, x: &[u64]) -> Vec<u64> {
        self.rows.iter().map(|r| r.iter().map(|&c| x[c]).sum()).collect()
    }

    /// `c^T A`, i.e. the value of a row functional on every column.
    pub fn transpose_apply(&self, c: &[Rat]) -> Vec<Rat> {
        (0..self.col_count)
            .map(|i| {
                let mut acc = Rat::zero();
                for &r in &self.col_rows[i] {
                    acc += &c[r];
                }
                acc
            })
            .collect()
    }

    pub fn dense_rows(&self) -> Vec<Vec<i64>> {
        self.rows
            .iter()
            .map(|r| {
                let mut v = vec![0i64; self.col_count];
                for &c in r {
                    v[c] = 1;
                }
                v
            })
            .collect()
    }

    pub fn dense_rat_rows(&self) -> Vec<Vec<Rat>> {
        self.rows
            .iter()
            .map(|r| {
                let mut v = vec![Rat::zero(); self.col_count];
                for &c in r {
                    v[c] = Rat::one();
                }
                v
            })
            .collect()
    }

    /// Exact rank and kernel dimension.
    pub fn rank_and_kernel_dim(&self) -> (usize, usize) {
        let rank = linalg::bareiss_rank(&self.dense_rows());
        (rank, self.col_count - rank)
    }

    /// Indices of a basis of the row space, chosen greedily in row order.
    pub fn row_basis(&self) -> Vec<usize> {
        linalg::independent_rows(&self.dense_rat_rows())
    }

    /// Basis of `ker A` as vectors over the cells.
    pub fn kernel_basis(&self) -> Vec<Vec<Rat>> {
        linalg::nullspace(&self.dense_rat_rows(), self.col_count)
    }

    /// Text export: `rows cols nnz` header, then one `r c` pair per entry.
    pub fn to_sparse_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.row_count(), self.col_count, self.nnz());
        for (r, cols) in self.rows.iter().enumerate() {
            for c in cols {
                let _ = writeln!(s, "{r} {c}");
            }
        }
        s
    }
}
