//! Rectangular multi-cell domains, their decompositions, conforming
//! triangulations and the interface sets of edges and vertices.

mod decomposition;
mod interface;
mod io;
mod mesh;
mod template;

pub use decomposition::{build_decomposition, DomainDecomposition, Rect};
pub use interface::{EdgeKind, InterfaceEdge, InterfaceGraph, InterfaceVertex};
pub use io::{load_mesh, read_mesh, save_mesh, write_mesh};
pub use mesh::{BoundarySegment, Mesh, MeshEdges, Triangle};
pub use template::{mesh_domain, mesh_domain_with_layout, PoreSpec, UnitCellSpec};

/// Boundary markers of the sides of the rectangular domain.
pub mod marker {
    pub const BOTTOM: u32 = 0;
    pub const RIGHT: u32 = 1;
    pub const TOP: u32 = 2;
    pub const LEFT: u32 = 3;
}

/// Refines every triangle into four by joining its edge midpoints.
pub fn refine_uniform(mesh: &Mesh) -> crate::Result<(Mesh, InterfaceGraph)> {
    let fine = mesh.refine_uniform();
    let graph = InterfaceGraph::extract(&fine)?;
    Ok((fine, graph))
}
