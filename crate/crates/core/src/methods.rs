//! Interchangeable existence deciders, selectable by name.

use crate::complex::SimplicialComplex;
use crate::cone::{boundary_oracle, Budget};
use crate::decomposed;
use crate::rational::Rat;
use crate::relint::{exists_kernel_witness, mle_exists, ExistenceError, ExistenceVerdict};
use crate::table::ContingencyTable;
use crate::triangulate::{triangulator_by_name, Triangulator};

/// Outcome of one method. Only the direct method fills `verdict`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodVerdict {
    pub method: &'static str,
    pub exists: bool,
    pub epsilon: Option<Rat>,
    pub verdict: Option<ExistenceVerdict>,
}

pub trait ExistenceMethod: Send + Sync {
    fn name(&self) -> &'static str;
    fn decide(&self, table: &ContingencyTable, model: &SimplicialComplex) -> Result<MethodVerdict, ExistenceError>;
}

/// Interiority program on the margins.
pub struct Direct;

/// Positive point of `n + ker A`.
pub struct Kernel;

/// Reduced system over a chordal cover.
pub struct Decomposed {
    pub triangulator: Option<Box<dyn Triangulator>>,
}

/// Facet list of the marginal cone.
pub struct Oracle {
    pub budget: Budget,
}

impl ExistenceMethod for Direct {
    fn name(&self) -> &'static str {
        "direct"
    }

    fn decide(&self, table: &ContingencyTable, model: &SimplicialComplex) -> Result<MethodVerdict, ExistenceError> {
        let v = mle_exists(table, model)?;
        Ok(MethodVerdict { method: self.name(), exists: v.exists, epsilon: Some(v.epsilon_star.clone()), verdict: Some(v) })
    }
}

impl ExistenceMethod for Kernel {
    fn name(&self) -> &'static str {
        "kernel"
    }

    fn decide(&self, table: &ContingencyTable, model: &SimplicialComplex) -> Result<MethodVerdict, ExistenceError> {
        let w = exists_kernel_witness(table, model)?;
        Ok(MethodVerdict { method: self.name(), exists: w.exists, epsilon: Some(w.epsilon), verdict: None })
    }
}

impl ExistenceMethod for Decomposed {
    fn name(&self) -> &'static str {
        "decomposed"
    }

    fn decide(&self, table: &ContingencyTable, model: &SimplicialComplex) -> Result<MethodVerdict, ExistenceError> {
        let exists = match &self.triangulator {
            Some(t) => decomposed::mle_exists_with(table, model, t.as_ref())?,
            None => decomposed::mle_exists_decomposed(table, model)?,
        };
        Ok(MethodVerdict { method: self.name(), exists, epsilon: None, verdict: None })
    }
}

impl ExistenceMethod for Oracle {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn decide(&self, table: &ContingencyTable, model: &SimplicialComplex) -> Result<MethodVerdict, ExistenceError> {
        let exists = boundary_oracle(table, model, &self.budget)?;
        Ok(MethodVerdict { method: self.name(), exists, epsilon: None, verdict: None })
    }
}

pub const METHOD_NAMES: [&str; 4] = ["direct", "kernel", "decomposed", "oracle"];

/// Settings shared by the constructors in [`method_by_name`].
#[derive(Debug, Clone)]
#[derive(Default)]
pub struct MethodConfig {
    pub budget: Budget,
    /// Triangulator name for the decomposed method; `None` picks the
    /// narrower of the available ones.
    pub triangulator: Option<String>,
}


pub fn method_by_name(name: &str, config: &MethodConfig) -> Option<Box<dyn ExistenceMethod>> {
    match name {
        "direct" => Some(Box::new(Direct)),
        "kernel" => Some(Box::new(Kernel)),
        "decomposed" => {
            let triangulator = match &config.triangulator {
                Some(t) => Some(triangulator_by_name(t)?),
                None => None,
            };
            Some(Box::new(Decomposed { triangulator }))
        }
        "oracle" => Some(Box::new(Oracle { budget: config.budget })),
        _ => None,
    }
}

/// Every registered method.
pub fn all_methods(config: &MethodConfig) -> Vec<Box<dyn ExistenceMethod>> {
    METHOD_NAMES.iter().filter_map(|n| method_by_name(n, config)).collect()
}
