//! hp finite element space on triangles: quadrature, hierarchical basis,
//! global dof numbering, assembly and field evaluation.

mod assembly;
mod basis;
mod field;
mod quadrature;
mod space;

pub(crate) use assembly::{affine, element_matrices, facet_dofs};
pub use assembly::{assemble_fem, assemble_rhs, assemble_subdomain, assemble_rhs_subdomain, SesquilinearAssembly, SubdomainBlock};
pub use basis::{interval_basis, ElementTables, ReferenceElement, MAX_ORDER};
pub use field::{eval_field, interpolate, l2_norm, l2_norm_and_error, Reference};
pub use quadrature::{gauss_legendre, interval_rule, triangle_rule, IntervalRule, TriangleRule, MAX_DEGREE};
pub use space::{BoundaryFacet, DofEntity, EdgeTrace, HpSpace, SubdomainDofs, TraceSegment};
