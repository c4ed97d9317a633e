//! Exact polyhedral tests for existence of maximum likelihood estimates in
//! hierarchical log-linear models.

pub mod complex;
pub mod cone;
pub mod decomposed;
pub mod design;
pub mod linalg;
pub mod lp;
pub mod methods;
pub mod rational;
pub mod relint;
pub mod table;
pub mod triangulate;
