use acms_core::geometry::*;
use acms_core::Error;
use proptest::prelude::*;
use std::collections::BTreeSet;
use std::f64::consts::PI;

fn unit_square(cells: usize, per: usize) -> DomainDecomposition {
    let d = build_decomposition(cells, cells, per).unwrap();
    d.with_geometry([0.0, 0.0], 1.0 / cells as f64).unwrap()
}

fn unit_cell_spec(side: f64) -> UnitCellSpec {
    UnitCellSpec {
        side_length: side,
        ..UnitCellSpec::default()
    }
}

#[test]
fn single_square_half_mesh_has_eight_triangles() {
    let d = DomainDecomposition::new(1, 1, 1, [0.0, 0.0], 1.0).unwrap();
    let (mesh, graph) = mesh_domain(&d, &UnitCellSpec::default(), 0.5).unwrap();
    assert_eq!(mesh.num_triangles(), 8);
    assert_eq!(mesh.num_nodes(), 9);
    assert!((mesh.h - 0.5 * 2f64.sqrt()).abs() < 1e-15);
    assert!((mesh.total_area() - 1.0).abs() < 1e-14);
    assert_eq!(graph.edges.len(), 4);
    assert_eq!(graph.vertices.len(), 4);
    for e in &graph.edges {
        assert_eq!(e.nodes.len(), 3);
        assert_eq!(e.subdomains.len(), 1);
    }
}

#[test]
fn owner_matches_centroid() {
    let d = DomainDecomposition::new(2, 2, 1, [0.0, 0.0], 1.0).unwrap();
    let (mesh, _) = mesh_domain(&d, &UnitCellSpec::default(), 0.25).unwrap();
    for t in 0..mesh.num_triangles() {
        let c = mesh.centroid(t);
        let ix = c[0].floor() as usize;
        let iy = c[1].floor() as usize;
        assert_eq!(mesh.triangles[t].subdomain, iy * 2 + ix);
    }
}

#[test]
fn pore_polygon_vertices_lie_on_circle() {
    let d = build_decomposition(1, 1, 1).unwrap();
    let (mesh, _) = mesh_domain(&d, &UnitCellSpec::with_pore(0.25, 16), 0.1).unwrap();
    for m in 0..16 {
        let t = 2.0 * PI * m as f64 / 16.0;
        let want = [0.25 * t.cos(), 0.25 * t.sin()];
        let node = mesh
            .nodes
            .iter()
            .find(|p| (p[0] - want[0]).abs() < 1e-14 && (p[1] - want[1]).abs() < 1e-14)
            .expect("polygon vertex present");
        assert!((node[0].hypot(node[1]) - 0.25).abs() < 1e-14);
    }
    // Pore triangles tile exactly the polygon.
    let pore_area: f64 = (0..mesh.num_triangles())
        .filter(|&t| mesh.triangles[t].material == 1)
        .map(|t| mesh.signed_area(t))
        .sum();
    let polygon = 0.5 * 16.0 * 0.25f64.powi(2) * (2.0 * PI / 16.0).sin();
    assert!((pore_area - polygon).abs() < 1e-13);
    assert!((mesh.total_area() - 1.0).abs() < 1e-13);
}

#[test]
fn pore_cells_conform_to_plain_cells() {
    let d = build_decomposition(4, 4, 2).unwrap();
    let (mesh, graph) =
        mesh_domain_with_layout(&d, &UnitCellSpec::with_pore(0.3, 16), 0.1, |_, cy| cy != 1).unwrap();
    mesh.validate().unwrap();
    assert_eq!(graph.edges.len(), d.num_edges());
    assert!((mesh.total_area() - 16.0).abs() < 1e-12);
}

#[test]
fn refinement_quadruples_and_halves() {
    let d = DomainDecomposition::new(1, 1, 1, [0.0, 0.0], 1.0).unwrap();
    let (mesh, _) = mesh_domain(&d, &UnitCellSpec::default(), 0.5).unwrap();
    let (fine, graph) = refine_uniform(&mesh).unwrap();
    assert_eq!(fine.num_triangles(), 32);
    assert!((fine.h - 0.5 * mesh.h).abs() <= 1e-15 * mesh.h);
    fine.validate().unwrap();
    assert_eq!(graph.edges[0].nodes.len(), 5);
}

#[test]
fn refined_children_preserve_area() {
    let d = build_decomposition(2, 2, 1).unwrap();
    let (mesh, _) = mesh_domain(&d, &UnitCellSpec::with_pore(0.25, 16), 0.2).unwrap();
    let fine = mesh.refine_uniform();
    for t in 0..mesh.num_triangles() {
        let parent = mesh.signed_area(t);
        let children: f64 = (4 * t..4 * t + 4).map(|c| fine.signed_area(c)).sum();
        assert!((children - parent).abs() <= 1e-13 * parent);
        for c in 4 * t..4 * t + 4 {
            assert_eq!(fine.triangles[c].material, mesh.triangles[t].material);
        }
    }
}

fn brute_force_edge_count(mesh: &Mesh) -> usize {
    let mut set = BTreeSet::new();
    for t in &mesh.triangles {
        for k in 0..3 {
            let (a, b) = (t.nodes[k], t.nodes[(k + 1) % 3]);
            set.insert((a.min(b), a.max(b)));
        }
    }
    set.len()
}

#[test]
fn twice_refined_node_count() {
    let d = build_decomposition(2, 1, 1).unwrap();
    let (m0, _) = mesh_domain(&d, &UnitCellSpec::with_pore(0.2, 8), 0.25).unwrap();
    let m1 = m0.refine_uniform();
    let m2 = m1.refine_uniform();
    let expected = m0.num_nodes() + brute_force_edge_count(&m0) + brute_force_edge_count(&m1);
    assert_eq!(m2.num_nodes(), expected);
    let unique: BTreeSet<(u64, u64)> = m2.nodes.iter().map(|p| (p[0].to_bits(), p[1].to_bits())).collect();
    assert_eq!(unique.len(), m2.num_nodes());
}

#[test]
fn save_load_round_trip() {
    let d = build_decomposition(2, 2, 1).unwrap();
    let (mesh, graph) = mesh_domain(&d, &UnitCellSpec::with_pore(0.25, 16), 0.2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.mesh");
    save_mesh(&mesh, &path).unwrap();
    let (back, g2) = load_mesh(&path).unwrap();
    assert_eq!(back.nodes, mesh.nodes);
    assert_eq!(back.triangles, mesh.triangles);
    assert_eq!(back.boundary, mesh.boundary);
    assert_eq!(back.decomp, mesh.decomp);
    assert_eq!(g2.edges.len(), graph.edges.len());
}

const TWO_TRIANGLES: &str = "acmsmesh 1
nodes 4
0 0
1 0
1 1
0 1
triangles 2
0 1 2 0 0
0 2 3 0 0
bsegments 4
0 1 0
1 2 1
2 3 2
3 0 3
decomp 1 1 1
";

#[test]
fn hand_written_file() {
    let (mesh, graph) = read_mesh(TWO_TRIANGLES.as_bytes()).unwrap();
    assert!((mesh.h - 2f64.sqrt()).abs() < 1e-14);
    assert_eq!(graph.vertices.len(), 4);
}

#[test]
fn straddling_triangle_rejected() {
    let text = "acmsmesh 1
nodes 6
0 0
1 0
2 0
0 1
1 1
2 1
triangles 4
0 1 4 0 0
0 4 3 0 0
1 2 5 0 0
1 5 4 0 0
bsegments 6
0 1 0
1 2 0
2 5 1
5 4 2
4 3 2
3 0 3
decomp 2 1 1
";
    // Triangles 2 and 3 are tagged with subdomain 0 but lie in subdomain 1.
    let err = read_mesh(text.as_bytes()).unwrap_err();
    match err {
        Error::MeshInvariant { entity, index, msg } => {
            assert_eq!(entity, "triangle");
            assert_eq!(index, 2);
            assert!(msg.contains("containment"));
        }
        e => panic!("unexpected error {e}"),
    }
}

#[test]
fn hanging_node_rejected() {
    let text = "acmsmesh 1
nodes 5
0 0
1 0
1 1
0 1
0.5 0.5
triangles 3
0 1 2 0 0
0 4 3 0 0
4 2 3 0 0
bsegments 4
0 1 0
1 2 1
2 3 2
3 0 3
decomp 1 1 1
";
    assert!(matches!(
        read_mesh(text.as_bytes()),
        Err(Error::MeshInvariant { entity: "edge", .. })
    ));
}

#[test]
fn parse_error_reports_line() {
    let bad = TWO_TRIANGLES.replace("1 1\n0 1", "1 x\n0 1");
    match read_mesh(bad.as_bytes()) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
        r => panic!("unexpected {r:?}"),
    }
}

#[test]
fn degenerate_pore_rejected_by_config() {
    let d = build_decomposition(1, 1, 1).unwrap();
    assert!(matches!(
        mesh_domain(&d, &UnitCellSpec::with_pore(0.5, 16), 0.1),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        mesh_domain(&d, &UnitCellSpec::with_pore(0.2, 7), 0.1),
        Err(Error::Config(_))
    ));
}

#[test]
fn scaled_cells_work() {
    let d = unit_square(2, 1);
    let (mesh, graph) = mesh_domain(&d, &unit_cell_spec(0.5), 0.25).unwrap();
    assert!((mesh.total_area() - 1.0).abs() < 1e-14);
    assert_eq!(graph.edges.len(), 12);
}

fn check_interface(mesh: &Mesh, graph: &InterfaceGraph) {
    for e in &graph.edges {
        let a = graph.vertices[e.vertices[0]].coords;
        let b = graph.vertices[e.vertices[1]].coords;
        let len = e.length;
        let mut prev = -1.0;
        for &v in &e.nodes {
            let p = mesh.nodes[v];
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let cross = ((p[0] - a[0]) * dy - (p[1] - a[1]) * dx).abs() / len;
            assert!(cross <= 1e-12 * len);
            let s = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len;
            assert!(s > prev);
            prev = s;
        }
        assert!(e.subdomains.len() == 1 || e.subdomains.len() == 2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decomposition_counts(jx in 1usize..6, jy in 1usize..6, c in 1usize..4) {
        let d = build_decomposition(jx * c, jy * c, c).unwrap();
        prop_assert_eq!(d.num_subdomains(), jx * jy);
        prop_assert_eq!(d.num_edges(), jx * (jy + 1) + jy * (jx + 1));
        prop_assert_eq!(d.num_vertices(), (jx + 1) * (jy + 1));
    }

    #[test]
    fn interface_nodes_on_edges(jx in 1usize..4, jy in 1usize..4, c in 1usize..3, pore in proptest::bool::ANY) {
        let d = build_decomposition(jx * c, jy * c, c).unwrap();
        let cell = if pore { UnitCellSpec::with_pore(0.25, 16) } else { UnitCellSpec::default() };
        let (mesh, graph) = mesh_domain(&d, &cell, 0.25).unwrap();
        prop_assert_eq!(graph.edges.len(), d.num_edges());
        prop_assert_eq!(graph.vertices.len(), d.num_vertices());
        let boundary_edges = graph.edges.iter().filter(|e| e.subdomains.len() == 1).count();
        prop_assert_eq!(boundary_edges, 2 * (d.jx + d.jy));
        check_interface(&mesh, &graph);
    }

    #[test]
    fn cells_are_translates(h in prop::sample::select(vec![0.5, 0.25, 0.2, 0.1]), pore in proptest::bool::ANY) {
        let d = build_decomposition(3, 2, 1).unwrap();
        let cell = if pore { UnitCellSpec::with_pore(0.25, 16) } else { UnitCellSpec::default() };
        let (mesh, _) = mesh_domain(&d, &cell, h).unwrap();
        let owned = mesh.subdomain_triangles();
        let (a, b) = (&owned[0], &owned[4]);
        prop_assert_eq!(a.len(), b.len());
        let off = [1.0, 1.0];
        for (&ta, &tb) in a.iter().zip(b) {
            let (va, vb) = (mesh.vertices(ta), mesh.vertices(tb));
            for k in 0..3 {
                prop_assert!((va[k][0] + off[0] - vb[k][0]).abs() <= 1e-13);
                prop_assert!((va[k][1] + off[1] - vb[k][1]).abs() <= 1e-13);
            }
        }
    }
}
