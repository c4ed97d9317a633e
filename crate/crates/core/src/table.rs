//! Contingency tables, cell indexing and margins.
//!
//! Cells are linearized row-major with the last variable fastest. Internally
//! indices are 0-based; [`LevelSpec::linear_index`] takes the 1-based cell
//! labels used in reports.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::complex::{SimplicialComplex, VarSet};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TableError {
    #[error("levels must be positive, got {0:?}")]
    BadLevels(Vec<usize>),
    #[error("table has {got} cells, levels {levels:?} need {want}")]
    LengthMismatch { levels: Vec<usize>, want: usize, got: usize },
    #[error("cell coordinate {coord} of variable {var} outside 1..={level}")]
    OutOfRange { var: usize, coord: usize, level: usize },
    #[error("model has {model} variables but the table has {table}")]
    DimensionMismatch { model: usize, table: usize },
    #[error("cell count overflows")]
    Overflow,
    #[error("invalid variable index {0}")]
    BadVariable(usize),
    #[error("line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error("invalid table JSON: {0}")]
    Json(String),
}

/// Numbers of levels `(d_1, ..., d_K)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct LevelSpec {
    levels: Vec<usize>,
    cells: usize,
}

impl TryFrom<Vec<usize>> for LevelSpec {
    type Error = TableError;
    fn try_from(v: Vec<usize>) -> Result<Self, TableError> {
        LevelSpec::new(v)
    }
}

impl From<LevelSpec> for Vec<usize> {
    fn from(s: LevelSpec) -> Vec<usize> {
        s.levels
    }
}

impl LevelSpec {
    pub fn new(levels: Vec<usize>) -> Result<Self, TableError> {
        if levels.is_empty() || levels.contains(&0) || levels.len() > crate::complex::MAX_VARS {
            return Err(TableError::BadLevels(levels));
        }
        let cells = levels
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or(TableError::Overflow)?;
        Ok(LevelSpec { levels, cells })
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn k(&self) -> usize {
        self.levels.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells
    }

    /// Number of cells of the margin over `face`.
    pub fn face_cells(&self, face: VarSet) -> usize {
        face.iter().map(|j| self.levels[j]).product()
    }

    /// Row-major rank of a 1-based cell label.
    pub fn linear_index(&self, cell: &[usize]) -> Result<usize, TableError> {
        if cell.len() != self.k() {
            return Err(TableError::DimensionMismatch { model: cell.len(), table: self.k() });
        }
        let mut idx = 0;
        for (var, (&c, &d)) in cell.iter().zip(&self.levels).enumerate() {
            if c == 0 || c > d {
                return Err(TableError::OutOfRange { var: var + 1, coord: c, level: d });
            }
            idx = idx * d + (c - 1);
        }
        Ok(idx)
    }

    /// 0-based coordinates of a linear index.
    pub fn coords(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.k()];
        for j in (0..self.k()).rev() {
            out[j] = idx % self.levels[j];
            idx /= self.levels[j];
        }
        out
    }

    /// 1-based cell label of a linear index.
    pub fn cell_label(&self, idx: usize) -> Vec<usize> {
        self.coords(idx).into_iter().map(|c| c + 1).collect()
    }

    /// For each cell, the index of its restriction to `face` within the
    /// row-major order of the face's own cells.
    pub fn face_map(&self, face: VarSet) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.cells);
        let mut coords = vec![0usize; self.k()];
        for _ in 0..self.cells {
            let mut fi = 0;
            for j in face.iter() {
                fi = fi * self.levels[j] + coords[j];
            }
            out.push(fi);
            for j in (0..self.k()).rev() {
                coords[j] += 1;
                if coords[j] < self.levels[j] {
                    break;
                }
                coords[j] = 0;
            }
        }
        out
    }

    pub fn restrict(&self, face: VarSet) -> LevelSpec {
        LevelSpec::new(face.iter().map(|j| self.levels[j]).collect()).unwrap_or(LevelSpec {
            levels: Vec::new(),
            cells: 1,
        })
    }
}

impl fmt::Display for LevelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.levels.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", parts.join("x"))
    }
}

/// Which rows of the design matrix (or blocks of the margin vector) to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FaceMode {
    #[default]
    FacetsOnly,
    AllFaces,
}

impl FaceMode {
    pub fn faces(self, model: &SimplicialComplex) -> Vec<VarSet> {
        match self {
            FaceMode::FacetsOnly => model.facets().to_vec(),
            FaceMode::AllFaces => model.faces(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    spec: LevelSpec,
    counts: Vec<u64>,
}

/// A table restricted to a subset of its variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarginTable {
    pub vars: VarSet,
    pub counts: Vec<u64>,
}

impl ContingencyTable {
    pub fn new(spec: LevelSpec, counts: Vec<u64>) -> Result<Self, TableError> {
        if counts.len() != spec.cell_count() {
            return Err(TableError::LengthMismatch {
                levels: spec.levels.clone(),
                want: spec.cell_count(),
                got: counts.len(),
            });
        }
        Ok(ContingencyTable { spec, counts })
    }

    pub fn filled(spec: LevelSpec, value: u64) -> Self {
        let counts = vec![value; spec.cell_count()];
        ContingencyTable { spec, counts }
    }

    pub fn spec(&self) -> &LevelSpec {
        &self.spec
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, cell: &[usize]) -> Result<u64, TableError> {
        Ok(self.counts[self.spec.linear_index(cell)?])
    }

    pub fn total(&self) -> Result<u64, TableError> {
        self.counts.iter().try_fold(0u64, |a, &c| a.checked_add(c)).ok_or(TableError::Overflow)
    }

    pub fn check_model(&self, model: &SimplicialComplex) -> Result<(), TableError> {
        if model.k() != self.spec.k() {
            return Err(TableError::DimensionMismatch { model: model.k(), table: self.spec.k() });
        }
        Ok(())
    }

    /// Sums the table over the variables outside `face`.
    pub fn margin(&self, face: VarSet) -> Result<MarginTable, TableError> {
        if let Some(v) = face.iter().find(|&v| v >= self.spec.k()) {
            return Err(TableError::BadVariable(v + 1));
        }
        let map = self.spec.face_map(face);
        let mut counts = vec![0u64; self.spec.face_cells(face)];
        for (&fi, &c) in map.iter().zip(&self.counts) {
            counts[fi] = counts[fi].checked_add(c).ok_or(TableError::Overflow)?;
        }
        Ok(MarginTable { vars: face, counts })
    }

    /// One margin block per face (or facet), in design-matrix row order.
    pub fn margins_vector(
        &self,
        model: &SimplicialComplex,
        mode: FaceMode,
    ) -> Result<MarginVector, TableError> {
        self.check_model(model)?;
        let blocks = mode
            .faces(model)
            .into_iter()
            .map(|f| self.margin(f).map(|m| (f, m.counts)))
            .collect::<Result<_, _>>()?;
        Ok(MarginVector { blocks })
    }

    pub fn to_json(&self) -> TableJson {
        TableJson { levels: self.spec.levels.clone(), counts: self.counts.clone() }
    }

    pub fn from_json_str(text: &str) -> Result<Self, TableError> {
        let json: TableJson = serde_json::from_str(text).map_err(|e| TableError::Json(e.to_string()))?;
        ContingencyTable::new(LevelSpec::new(json.levels)?, json.counts)
    }

    /// Reads `i1,...,iK,count` lines. Levels are inferred from the largest
    /// coordinate of each variable unless given. Unlisted cells are 0.
    pub fn from_csv(text: &str, levels: Option<LevelSpec>) -> Result<Self, TableError> {
        let mut rows: Vec<(usize, Vec<usize>, u64)> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: Result<Vec<u64>, _> = fields.iter().map(|f| f.parse::<u64>()).collect();
            let Ok(values) = parsed else {
                if rows.is_empty() && n == 0 {
                    continue; // header
                }
                return Err(TableError::Csv { line: line_no, msg: "non-integer field".into() });
            };
            if values.len() < 2 {
                return Err(TableError::Csv { line: line_no, msg: "need coordinates and a count".into() });
            }
            let (coords, count) = values.split_at(values.len() - 1);
            rows.push((line_no, coords.iter().map(|&c| c as usize).collect(), count[0]));
        }
        let k = match (&levels, rows.first()) {
            (Some(s), _) => s.k(),
            (None, Some(r)) => r.1.len(),
            (None, None) => return Err(TableError::Csv { line: 0, msg: "no cells".into() }),
        };
        let spec = match levels {
            Some(s) => s,
            None => {
                let mut maxes = vec![1usize; k];
                for (line, coords, _) in &rows {
                    if coords.len() != k {
                        return Err(TableError::Csv { line: *line, msg: "inconsistent arity".into() });
                    }
                    for (m, &c) in maxes.iter_mut().zip(coords) {
                        *m = (*m).max(c);
                    }
                }
                LevelSpec::new(maxes)?
            }
        };
        let mut counts = vec![0u64; spec.cell_count()];
        let mut seen = vec![false; spec.cell_count()];
        for (line, coords, count) in rows {
            let idx = spec
                .linear_index(&coords)
                .map_err(|e| TableError::Csv { line, msg: e.to_string() })?;
            if seen[idx] {
                return Err(TableError::Csv { line, msg: "duplicate cell".into() });
            }
            seen[idx] = true;
            counts[idx] = count;
        }
        ContingencyTable::new(spec, counts)
    }

    /// Merges levels according to `maps[j][level] = new level` (0-based).
    pub fn collapse(&self, target: &LevelSpec, maps: &[Vec<usize>]) -> Result<ContingencyTable, TableError> {
        let mut counts = vec![0u64; target.cell_count()];
        for (idx, &c) in self.counts.iter().enumerate() {
            let coords = self.spec.coords(idx);
            let mut t = 0;
            for (j, &x) in coords.iter().enumerate() {
                t = t * target.levels[j] + maps[j][x];
            }
            counts[t] = counts[t].checked_add(c).ok_or(TableError::Overflow)?;
        }
        ContingencyTable::new(target.clone(), counts)
    }
}

/// `{"levels": [d1, ..., dK], "counts": [...]}` in row-major order.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct TableJson {
    pub levels: Vec<usize>,
    pub counts: Vec<u64>,
}

/// The sufficient statistics: one block of margins per face.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarginVector {
    pub blocks: Vec<(VarSet, Vec<u64>)>,
}

impl MarginVector {
    pub fn flat(&self) -> Vec<u64> {
        self.blocks.iter().flat_map(|(_, b)| b.iter().copied()).collect()
    }

    pub fn block(&self, face: VarSet) -> Option<&[u64]> {
        self.blocks.iter().find(|(f, _)| *f == face).map(|(_, b)| b.as_slice())
    }
}
