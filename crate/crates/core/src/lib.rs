//! Free rank filtrations of graded modules over F_p polynomial rings, their
//! Duflot complexes, and a stable Koszul oracle for local cohomology.

pub mod filtration;
pub mod generate;
pub mod graded;
pub mod io;
pub mod kbundle;
pub mod koszul;
pub mod matrix;
pub mod pgroups;
pub mod poset;
pub mod report;

pub use graded::{BoundedFactor, Extent, GradedAlgebra, GradedError, GradedModule, GradedVS, ModuleMap, PWAlgebra, SubspaceV};
pub use matrix::Matrix;
pub use report::{Report, Violation};
