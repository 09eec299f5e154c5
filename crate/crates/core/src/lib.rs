// Tensor loops index several arrays at once; `!(x > y)` also rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod field_equations;
pub mod forms;
pub mod lagrangians;
pub mod lattice;
pub mod lemma;
pub mod params;
pub mod plane_waves;
pub mod report;
pub mod snapshot;
pub mod sources;
pub mod spinor;
pub mod suites;
pub mod torsion;
pub mod variational;
