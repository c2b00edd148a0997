//! Exact construction and verification of twisted matrix factorizations of
//! normal elements in graded PBW algebras over k = Q(i)(t).

pub mod catalog;
pub mod cover;
pub mod gradedmod;
pub mod linalg;
pub mod ncalgebra;
pub mod report;
pub mod scalars;
pub mod tmf;
