use acms_core::acms_basis::*;
use acms_core::acms_system::*;
use acms_core::femcore::*;
use acms_core::geometry::*;
use acms_core::linalg::{dense_solve, DenseMatrix};
use acms_core::problem::{BoundarySource, HelmholtzProblem};
use acms_core::reference::*;
use acms_core::{Complex64, Error};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

fn space_from(mesh: Mesh, graph: InterfaceGraph, p: usize) -> HpSpace {
    HpSpace::new(Arc::new(mesh), Arc::new(graph), p).unwrap()
}

/// Unit square split into `s × s` subdomains.
fn unit_square(s: usize, h: f64, p: usize) -> HpSpace {
    let d = DomainDecomposition::new(s, s, 1, [0.0, 0.0], 1.0 / s as f64).unwrap();
    let cell = UnitCellSpec {
        side_length: 1.0 / s as f64,
        ..UnitCellSpec::default()
    };
    let (m, g) = mesh_domain(&d, &cell, h).unwrap();
    space_from(m, g, p)
}

/// Crystal of `n × n` unit cells, `per × per` cells per subdomain.
fn crystal(n: usize, per: usize, h: f64, p: usize, pore: bool) -> HpSpace {
    let d = build_decomposition(n, n, per).unwrap();
    let cell = if pore {
        UnitCellSpec::with_pore(0.25, 16)
    } else {
        UnitCellSpec::default()
    };
    let (m, g) = mesh_domain(&d, &cell, h).unwrap();
    space_from(m, g, p)
}

/// `[-1, 1]²` split into four unit subdomains.
fn square2(h: f64, p: usize) -> HpSpace {
    let d = DomainDecomposition::new(2, 2, 1, [-1.0, -1.0], 1.0).unwrap();
    let (m, g) = mesh_domain(&d, &UnitCellSpec::default(), h).unwrap();
    space_from(m, g, p)
}

fn plane_wave(omega: f64) -> HelmholtzProblem {
    HelmholtzProblem::homogeneous(1.0, 1.0, omega, 1.0, BoundarySource::PlaneWaveTrace { direction: [0.6, 0.8] }).unwrap()
}

fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn rel_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

#[test]
fn unit_edge_eigenvalues_approach_continuum() {
    let key = EdgeKey {
        p: 4,
        spacings: vec![1.0 / 32.0; 32],
    };
    let modes = solve_canonical_modes(&key, 8, 0).unwrap();
    for (i, &l) in modes.eigenvalues.iter().enumerate() {
        let exact = ((i + 1) as f64 * PI).powi(2);
        assert!((l / exact - 1.0).abs() < 1e-6, "mode {i}: {l} vs {exact}");
    }
}

#[test]
fn p1_edge_eigenvalue() {
    let key = EdgeKey {
        p: 1,
        spacings: vec![0.25; 4],
    };
    let modes = solve_canonical_modes(&key, 1, 0).unwrap();
    // Smallest root of the 3×3 tridiagonal P1 pencil: 48 (2 − √2) / (4 + √2).
    let s2 = 2f64.sqrt();
    let exact = 96.0 * (2.0 - s2) / (4.0 + s2);
    assert!((modes.eigenvalues[0] - exact).abs() < 1e-12);
    assert!((modes.eigenvalues[0] - 10.3866).abs() < 1e-4);
}

#[test]
fn edge_mode_invariants_on_pore_crystal() {
    let s = crystal(2, 1, 0.2, 3, true);
    for e in 0..s.graph().edges.len() {
        let set = compute_edge_modes(&s, e, 6).unwrap();
        assert!(set.eigenvalues[0] > 0.0);
        assert!(set.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let (_, m) = edge_trace_matrices(&s, e).unwrap();
        let n = m.rows();
        for i in 0..6 {
            for j in 0..6 {
                let mut g = 0.0;
                for a in 1..n - 1 {
                    for b in 1..n - 1 {
                        g += set.modes[(a - 1, i)] * m[(a, b)] * set.modes[(b - 1, j)];
                    }
                }
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-10, "edge {e} gram ({i},{j}) = {g}");
            }
        }
    }
}

#[test]
fn too_many_modes_asks_for_enrichment() {
    let s = unit_square(1, 0.5, 2);
    // Two segments of order 2: five trace dofs, three interior.
    assert!(compute_edge_modes(&s, 0, 3).is_ok());
    let err = compute_edge_modes(&s, 0, 4).unwrap_err();
    assert!(matches!(err, Error::EnrichSpace { available: 3, requested: 4, .. }));
    assert!(err.to_string().contains("enrich"));
}

#[test]
fn mode_prefixes_coincide() {
    let s = crystal(2, 1, 0.2, 3, true);
    let few = compute_edge_modes(&s, 1, 3).unwrap();
    let many = compute_edge_modes(&s, 1, 7).unwrap();
    for i in 0..3 {
        assert!((few.eigenvalues[i] - many.eigenvalues[i]).abs() <= 1e-12 * many.eigenvalues[i]);
        for r in 0..few.modes.rows() {
            assert!((few.modes[(r, i)] - many.modes[(r, i)]).abs() < 1e-12);
        }
    }
}

#[test]
fn uniform_crystal_has_one_edge_key() {
    let s = crystal(16, 1, 0.25, 2, true);
    assert_eq!(s.graph().edges.len(), 544);
    let first = edge_reuse_key(&s, 0);
    assert!((0..544).all(|e| edge_reuse_key(&s, e).matches(&first)));
    let cache = EdgeModeCache::new();
    for e in 0..544 {
        cache.get(&s, e, 4).unwrap();
    }
    assert_eq!(cache.solves(), 1);
}

#[test]
fn keys_separate_lengths_and_refinements() {
    let one = crystal(2, 1, 0.25, 2, false);
    let two = crystal(2, 2, 0.25, 2, false);
    assert!(!edge_reuse_key(&one, 0).matches(&edge_reuse_key(&two, 0)));
    assert!((edge_reuse_key(&two, 0).length() - 2.0).abs() < 1e-13);
    let (m, g) = refine_uniform(one.mesh()).unwrap();
    let fine = space_from(m, g, 2);
    assert!(!edge_reuse_key(&one, 0).matches(&edge_reuse_key(&fine, 0)));
}

#[test]
fn vertex_trace_is_linear_hat() {
    let s = unit_square(1, 0.5, 1);
    let q = s.graph().vertex_index(0, 0);
    let vt = compute_vertex_trace(&s, q);
    assert_eq!(vt.traces.len(), 2);
    for (e, tr) in &vt.traces {
        assert_eq!(tr.len(), 3, "edge {e}");
        assert!((tr[1] - 0.5).abs() < 1e-15);
        let ends = [tr[0], tr[2]];
        assert!(ends.contains(&1.0) && ends.contains(&0.0));
    }
}

#[test]
fn cross_vertex_touches_four_edges() {
    let s = unit_square(2, 0.25, 2);
    let q = s.graph().vertex_index(1, 1);
    let vt = compute_vertex_trace(&s, q);
    assert_eq!(vt.traces.len(), 4);
    assert!(vt.traces.iter().all(|(_, t)| t.iter().any(|&v| v != 0.0)));
}

#[test]
fn linear_vertex_trace_is_discrete_harmonic() {
    let s = crystal(2, 1, 0.2, 4, true);
    for q in 0..s.graph().vertices.len() {
        for (e, tr) in compute_vertex_trace(&s, q).traces {
            let (k, _) = edge_trace_matrices(&s, e).unwrap();
            let n = tr.len();
            for r in 1..n - 1 {
                let res: f64 = (0..n).map(|c| k[(r, c)] * tr[c]).sum();
                assert!(res.abs() < 1e-12, "vertex {q} edge {e} row {r}: {res}");
            }
            let first = s.graph().edges[e].vertices[0] == q;
            let oracle = edge_harmonic_trace(&s, e, if first { [1.0, 0.0] } else { [0.0, 1.0] }).unwrap();
            for (a, b) in tr.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

fn boundary_trace(space: &HpSpace, j: usize, global: &[Complex64]) -> DenseMatrix<f64> {
    let sd = space.subdomain(j);
    DenseMatrix::from_fn(sd.boundary.len(), 1, |r, _| global[sd.dofs[sd.boundary[r]]].re)
}

#[test]
fn extension_reproduces_linears_without_wavenumber() {
    let s = crystal(2, 1, 0.2, 3, true);
    let prob = plane_wave(1e-9);
    let asm = assemble_fem(&s, &prob).unwrap();
    let lin = interpolate(&s, |x| Complex64::new(x[0] - 0.3 * x[1], 0.0)).unwrap();
    for j in 0..4 {
        let ext = build_extension(&s, &asm, j).unwrap();
        let u = ext.extend(&boundary_trace(&s, j, &lin)).unwrap();
        let sd = s.subdomain(j);
        for (l, &d) in sd.dofs.iter().enumerate() {
            assert!((u[(l, 0)] - lin[d].re).abs() < 1e-12, "subdomain {j} dof {d}");
        }
    }
}

#[test]
fn zero_trace_extends_by_zero() {
    let s = crystal(2, 1, 0.2, 3, true);
    let asm = assemble_fem(&s, &plane_wave(1.0)).unwrap();
    let ext = build_extension(&s, &asm, 2).unwrap();
    let u = ext.extend_trace(&vec![Complex64::new(0.0, 0.0); ext.num_boundary()]).unwrap();
    assert!(u.iter().all(|v| *v == Complex64::new(0.0, 0.0)));
}

#[test]
fn extension_matches_dense_block_solve() {
    let s = crystal(2, 1, 0.2, 3, true);
    let asm = assemble_fem(&s, &plane_wave(1.0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for j in 0..4 {
        let ext = build_extension(&s, &asm, j).unwrap();
        let sd = s.subdomain(j);
        let k = asm.blocks[j].helmholtz().to_dense();
        let nb = sd.boundary.len();
        let tau: Vec<f64> = (0..nb).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let kii = DenseMatrix::from_fn(sd.interior.len(), sd.interior.len(), |a, b| k[(sd.interior[a], sd.interior[b])]);
        let rhs = DenseMatrix::from_fn(sd.interior.len(), 1, |a, _| {
            -(0..nb).map(|b| k[(sd.interior[a], sd.boundary[b])] * tau[b]).sum::<f64>()
        });
        let want = dense_solve(&kii, &rhs).unwrap();
        let got = ext.extend(&DenseMatrix::from_fn(nb, 1, |r, _| tau[r])).unwrap();
        let scale = want.max_abs();
        for (a, &l) in sd.interior.iter().enumerate() {
            assert!((got[(l, 0)] - want[(a, 0)]).abs() <= 1e-10 * scale);
        }
        for (b, &l) in sd.boundary.iter().enumerate() {
            assert_eq!(got[(l, 0)], tau[b]);
        }
    }
}

#[test]
fn extension_rejects_wrong_trace_length() {
    let s = unit_square(1, 0.5, 2);
    let asm = assemble_fem(&s, &plane_wave(1.0)).unwrap();
    let ext = build_extension(&s, &asm, 0).unwrap();
    let err = ext.extend_trace(&[Complex64::new(1.0, 0.0)]).unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch { .. }));
}

#[test]
fn extensions_of_crystal_coefficients_are_regular() {
    let s = crystal(2, 1, 0.2, 3, true);
    let d = |core: f64, pore: f64| [(0u32, core), (1u32, pore)].into_iter().collect();
    for kappa in [0.5, 1.0, 2.0, 4.0] {
        let prob = HelmholtzProblem::new(
            d(1.0, 1.0 / 12.1),
            d(1.0, 1.0),
            kappa,
            (0..4).map(|m| (m, -1.0)).collect(),
            BoundarySource::Gaussian { kappa, marker: marker::LEFT },
        )
        .unwrap();
        let asm = assemble_fem(&s, &prob).unwrap();
        assert!(build_extensions(&s, &asm).is_ok(), "kappa {kappa}");
    }
}

#[test]
fn factor_once_apply_many_is_cheaper() {
    let s = unit_square(1, 0.05, 4);
    let asm = assemble_fem(&s, &plane_wave(1.0)).unwrap();
    let nb = s.subdomain(0).boundary.len();
    let trace = DenseMatrix::from_fn(nb, 1, |r, _| (r as f64).sin());
    let t0 = Instant::now();
    let ext = build_extension(&s, &asm, 0).unwrap();
    for _ in 0..64 {
        ext.extend(&trace).unwrap();
    }
    let reuse = t0.elapsed();
    let t1 = Instant::now();
    for _ in 0..64 {
        build_extension(&s, &asm, 0).unwrap().extend(&trace).unwrap();
    }
    let fresh = t1.elapsed();
    assert!(reuse.as_secs_f64() < 0.25 * fresh.as_secs_f64(), "{reuse:?} vs {fresh:?}");
}

#[test]
fn numbering_dimensions() {
    let s = square2(0.5, 2);
    let map = number_dofs(s.graph(), 2);
    assert_eq!(map.ndofs, 33);
    let s1 = unit_square(1, 0.5, 2);
    assert_eq!(number_dofs(s1.graph(), 1).ndofs, 8);
}

#[test]
fn numbering_sweeps_rows() {
    let s = square2(0.5, 3);
    let g = s.graph();
    let map = number_dofs(g, 1);
    // Bottom row: v(0,0) h(0,0) v(1,0) h(1,0) v(2,0), then the vertical edges.
    assert_eq!(map.vertex(g.vertex_index(0, 0)), 0);
    assert_eq!(map.edge_mode(g.horizontal_edge(0, 0), 0), 1);
    assert_eq!(map.vertex(g.vertex_index(1, 0)), 2);
    assert_eq!(map.edge_mode(g.horizontal_edge(1, 0), 0), 3);
    assert_eq!(map.vertex(g.vertex_index(2, 0)), 4);
    assert_eq!(map.edge_mode(g.vertical_edge(0, 0), 0), 5);
    assert_eq!(map.edge_mode(g.vertical_edge(2, 0), 0), 7);
    assert_eq!(map.vertex(g.vertex_index(0, 1)), 8);
}

#[test]
fn six_by_six_bandwidth() {
    let s = crystal(6, 1, 0.1, 4, false);
    let prob = HelmholtzProblem::homogeneous(1.0, 1.0, 1.0, 1.0, BoundarySource::Constant { re: 1.0, im: 0.0 }).unwrap();
    let asm = assemble_fem(&s, &prob).unwrap();
    let sol = solve_acms_problem(&s, &asm, &prob, 32, &EdgeModeCache::new()).unwrap();
    let map = number_dofs(s.graph(), 32);
    assert!(sol.bandwidth <= map.bandwidth_bound);
    // Row-sweep numbering: a subdomain spans its own row block and the next row's
    // vertices and horizontal edges, which lands within 20% of 3·6·(I_E + 1) = 384.
    let ratio = sol.bandwidth as f64 / 384.0;
    assert!((0.8..=1.2).contains(&ratio), "bandwidth {}", sol.bandwidth);
    assert!(sol.residual < 1e-10);
}

fn small_session(p: usize, h: f64, ie: usize, omega: f64) -> (HpSpace, HelmholtzProblem) {
    let _ = ie;
    (unit_square(2, h, p), plane_wave(omega))
}

#[test]
fn basis_columns_and_zero_extension() {
    let (s, prob) = small_session(3, 0.25, 3, 2.0);
    let asm = assemble_fem(&s, &prob).unwrap();
    let basis = build_basis(&s, &asm, 3, &EdgeModeCache::new()).unwrap();
    for b in &basis {
        assert_eq!(b.num_columns(), 4 + 4 * 3);
        let sd = s.subdomain(b.subdomain);
        let g = s.graph();
        // Edge-mode columns vanish on the other three edges.
        for (k, &e) in b.edges.iter().enumerate() {
            let col = 4 + k * 3;
            for &other in b.edges.iter().filter(|&&o| o != e) {
                for &d in &s.edge_trace(other).dofs {
                    let l = sd.local_index(d).unwrap();
                    assert_eq!(b.data[(l, col)], 0.0);
                }
            }
        }
        // Vertex columns vanish at the other vertices.
        for (k, &q) in b.vertices.iter().enumerate() {
            for &r in &b.vertices {
                let l = sd.local_index(g.vertices[r].node).unwrap();
                assert_eq!(b.data[(l, k)], if r == q { 1.0 } else { 0.0 });
            }
        }
    }
}

#[test]
fn partition_of_unity_on_interface() {
    let (s, prob) = small_session(3, 0.25, 2, 1.0);
    let asm = assemble_fem(&s, &prob).unwrap();
    let basis = build_basis(&s, &asm, 2, &EdgeModeCache::new()).unwrap();
    for b in &basis {
        let sd = s.subdomain(b.subdomain);
        for &l in &sd.boundary {
            let d = sd.dofs[l];
            if matches!(s.dof_entity(d), DofEntity::Vertex(_)) {
                let sum: f64 = (0..4).map(|k| b.data[(l, k)]).sum();
                assert!((sum - 1.0).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn acms_matrix_is_complex_symmetric() {
    let s = crystal(2, 1, 0.2, 3, true);
    let prob = plane_wave(1.0);
    let asm = assemble_fem(&s, &prob).unwrap();
    let basis = build_basis(&s, &asm, 4, &EdgeModeCache::new()).unwrap();
    let loads = subdomain_loads(&s, &prob).unwrap();
    let blocks = local_blocks(&s, &asm, &basis, &loads).unwrap();
    let sys = assemble_acms(&number_dofs(s.graph(), 4), &basis, &blocks).unwrap();
    let a = sys.matrix.to_dense();
    let mut defect: f64 = 0.0;
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            defect = defect.max((a[(i, j)] - a[(j, i)]).norm());
        }
    }
    assert!(defect <= 1e-13 * a.max_abs());
}

#[test]
fn boundary_rows_give_full_product() {
    let s = crystal(2, 1, 0.2, 3, true);
    let prob = plane_wave(1.3);
    let asm = assemble_fem(&s, &prob).unwrap();
    let basis = build_basis(&s, &asm, 5, &EdgeModeCache::new()).unwrap();
    let loads = subdomain_loads(&s, &prob).unwrap();
    for b in &basis {
        let fast = local_block(&s, &asm, b, &loads[b.subdomain]).unwrap();
        let full = local_block_full(&asm, b, &loads[b.subdomain]).unwrap();
        let scale = full.matrix.max_abs();
        for i in 0..fast.matrix.rows() {
            for j in 0..fast.matrix.cols() {
                assert!((fast.matrix[(i, j)] - full.matrix[(i, j)]).norm() <= 1e-11 * scale);
            }
            assert_eq!(fast.load[i], full.load[i]);
        }
    }
}

#[test]
fn zero_data_gives_zero_solution() {
    let s = square2(0.5, 2);
    let prob = HelmholtzProblem::homogeneous(1.0, 1.0, 1.0, 1.0, BoundarySource::Zero).unwrap();
    let asm = assemble_fem(&s, &prob).unwrap();
    let sol = solve_acms_problem(&s, &asm, &prob, 2, &EdgeModeCache::new()).unwrap();
    assert!(sol.coeffs.iter().all(|v| v.norm() == 0.0));
    let fem = solve_fem_direct(&s, &prob).unwrap();
    assert!(fem.coeffs.iter().all(|v| v.norm() == 0.0));
    let single = unit_square(1, 0.5, 2);
    let o = oracle_acms_dense(&single, &prob, 1).unwrap();
    assert!(o.coeffs.iter().all(|v| v.norm() == 0.0));
    assert!(o.rhs.iter().all(|v| v.norm() == 0.0));
}

#[test]
fn production_matches_dense_oracle() {
    let s = square2(0.5, 2);
    let prob = plane_wave(1.0);
    let asm = assemble_fem(&s, &prob).unwrap();
    let oracle = oracle_acms_dense(&s, &prob, 2).unwrap();
    let basis = build_basis(&s, &asm, 2, &EdgeModeCache::new()).unwrap();
    let loads = subdomain_loads(&s, &prob).unwrap();
    let blocks = local_blocks(&s, &asm, &basis, &loads).unwrap();
    let sys = assemble_acms(&oracle.dofmap, &basis, &blocks).unwrap();
    let a = sys.matrix.to_dense();
    let scale = oracle.matrix.max_abs();
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            assert!((a[(i, j)] - oracle.matrix[(i, j)]).norm() <= 1e-10 * scale, "({i},{j})");
        }
        assert!((sys.rhs[i] - oracle.rhs[i]).norm() <= 1e-10 * scale);
    }
    let (u, res) = sys.solve().unwrap();
    assert!(res < 1e-10);
    assert!(rel_diff(&u, &oracle.coeffs) < 1e-9);
    let field = reconstruct(&s, &basis, &oracle.dofmap, &u).unwrap();
    assert!(rel_diff(&field, &oracle.field) < 1e-9);
}

#[test]
fn full_modes_reproduce_fem() {
    let s = unit_square(2, 0.25, 3);
    let prob = plane_wave(4.0);
    let asm = assemble_fem(&s, &prob).unwrap();
    let ie = max_modes(&s);
    let sol = solve_acms_problem(&s, &asm, &prob, ie, &EdgeModeCache::new()).unwrap();
    let fem = solve_fem_direct(&s, &prob).unwrap();
    let (_, _, rel) = l2_norm_and_error(&s, &sol.field, Reference::Field(&s, &fem.coeffs)).unwrap();
    assert!(rel < 1e-9, "rel {rel}");
    let oracle = oracle_acms_dense(&s, &prob, ie).unwrap();
    let (_, _, rel) = l2_norm_and_error(&s, &oracle.field, Reference::Field(&s, &fem.coeffs)).unwrap();
    assert!(rel < 1e-9, "oracle rel {rel}");
}

#[test]
fn reconstruction_of_single_mode_is_its_column() {
    let s = unit_square(2, 0.25, 3);
    let prob = plane_wave(2.0);
    let asm = assemble_fem(&s, &prob).unwrap();
    let basis = build_basis(&s, &asm, 2, &EdgeModeCache::new()).unwrap();
    let map = number_dofs(s.graph(), 2);
    let e = s.graph().vertical_edge(1, 0);
    let mut u = vec![Complex64::new(0.0, 0.0); map.ndofs];
    u[map.edge_mode(e, 1)] = Complex64::new(1.0, 0.0);
    let field = reconstruct(&s, &basis, &map, &u).unwrap();
    for b in &basis {
        let sd = s.subdomain(b.subdomain);
        let col = b.edges.iter().position(|&x| x == e).map(|k| 4 + k * 2 + 1);
        for (l, &d) in sd.dofs.iter().enumerate() {
            let want = col.map_or(0.0, |c| b.data[(l, c)]);
            assert_eq!(field[d].re, want);
        }
    }
}

#[test]
fn reconstruction_is_continuous_across_interior_edge() {
    let s = crystal(2, 1, 0.2, 3, true);
    let prob = plane_wave(1.5);
    let asm = assemble_fem(&s, &prob).unwrap();
    let sol = solve_acms_problem(&s, &asm, &prob, 4, &EdgeModeCache::new()).unwrap();
    // Sample just left and right of x = 0 and compare the limits.
    let eps = 1e-11;
    let left: Vec<[f64; 2]> = (1..=9).map(|k| [-eps, k as f64 / 5.0 - 1.0]).collect();
    let right: Vec<[f64; 2]> = (1..=9).map(|k| [eps, k as f64 / 5.0 - 1.0]).collect();
    let a = eval_field(&s, &sol.field, &left).unwrap();
    let b = eval_field(&s, &sol.field, &right).unwrap();
    let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for (x, y) in a.iter().zip(&b) {
        // Allowance for the 2ε offset with |∇u| ≲ 2κ max|u|.
        assert!((x - y).norm() <= 1e-11 + 2.0 * eps * 3.0 * scale, "{x} vs {y}");
    }
}

#[test]
fn session_subsets_match_fresh_solves() {
    let s = unit_square(2, 0.25, 3);
    let prob = plane_wave(3.0);
    let asm = assemble_fem(&s, &prob).unwrap();
    let cache = EdgeModeCache::new();
    let session = AcmsSession::new(&s, &asm, &prob, 5, &cache).unwrap();
    for ie in [1, 3, 5] {
        let a = session.solve(ie).unwrap();
        let b = solve_acms_problem(&s, &asm, &prob, ie, &cache).unwrap();
        assert_eq!(a.n_a, b.n_a);
        assert!(rel_diff(&a.coeffs, &b.coeffs) < 1e-12);
    }
    assert!(session.solve(6).is_err());
}

#[test]
fn direct_solver_reproduces_plane_wave() {
    let s = unit_square(1, 0.05, 4);
    let prob = plane_wave(4.0);
    let fem = solve_fem_direct(&s, &prob).unwrap();
    assert!(fem.residual < 1e-10);
    let exact = |x: [f64; 2]| prob.exact_solution(x, 0).unwrap();
    let (_, _, rel) = l2_norm_and_error(&s, &fem.coeffs, Reference::Function(&exact)).unwrap();
    assert!(rel < 1e-7, "rel {rel}");
}

#[test]
fn direct_solver_converges_at_order_three() {
    let prob = plane_wave(4.0);
    let exact = |x: [f64; 2]| prob.exact_solution(x, 0).unwrap();
    let err = |h: f64| {
        let s = unit_square(1, h, 2);
        let fem = solve_fem_direct(&s, &prob).unwrap();
        l2_norm_and_error(&s, &fem.coeffs, Reference::Function(&exact)).unwrap().1
    };
    let ratio = err(0.1) / err(0.05);
    assert!(ratio >= 6.0, "ratio {ratio}");
}

#[test]
fn direct_solver_respects_cap() {
    let s = unit_square(1, 0.25, 3);
    let err = solve_fem_direct_capped(&s, &plane_wave(1.0), 10).unwrap_err();
    assert!(matches!(err, Error::CapExceeded { .. }));
    assert!(err.to_string().contains("ACMS"));
}

#[test]
fn oracle_respects_caps() {
    let s = crystal(8, 1, 0.1, 4, false);
    let err = oracle_acms_dense(&s, &plane_wave(1.0), 1).unwrap_err();
    assert!(matches!(err, Error::CapExceeded { .. }));
}

#[test]
fn substructured_solver_matches_direct() {
    let s = crystal(4, 1, 0.25, 3, true);
    let d = |core: f64, pore: f64| [(0u32, core), (1u32, pore)].into_iter().collect();
    let prob = HelmholtzProblem::new(
        d(1.0, 1.0 / 12.1),
        d(1.0, 1.0),
        1.0,
        (0..4).map(|m| (m, -1.0)).collect(),
        BoundarySource::Gaussian { kappa: 1.0, marker: marker::LEFT },
    )
    .unwrap();
    let direct = solve_fem_direct(&s, &prob).unwrap();
    let sub = solve_fem_substructured(&s, &prob).unwrap();
    assert!(sub.residual < 1e-10, "residual {}", sub.residual);
    assert!(rel_diff(&sub.coeffs, &direct.coeffs) < 1e-10);
}

#[test]
fn substructured_solver_on_rectangular_grid() {
    let d = DomainDecomposition::new(3, 2, 1, [0.0, 0.0], 1.0).unwrap();
    let (m, g) = mesh_domain(&d, &UnitCellSpec::default(), 0.25).unwrap();
    let s = space_from(m, g, 2);
    let prob = plane_wave(2.0);
    let direct = solve_fem_direct(&s, &prob).unwrap();
    let sub = solve_fem_substructured(&s, &prob).unwrap();
    assert!(rel_diff(&sub.coeffs, &direct.coeffs) < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn extension_is_linear(seed in 0u64..1000, alpha_re in -2.0f64..2.0, alpha_im in -2.0f64..2.0) {
        let s = unit_square(2, 0.25, 3);
        let asm = assemble_fem(&s, &plane_wave(1.0)).unwrap();
        let ext = build_extension(&s, &asm, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t1 = random_complex(&mut rng, ext.num_boundary());
        let t2 = random_complex(&mut rng, ext.num_boundary());
        let alpha = Complex64::new(alpha_re, alpha_im);
        let comb: Vec<Complex64> = t1.iter().zip(&t2).map(|(a, b)| alpha * a + b).collect();
        let lhs = ext.extend_trace(&comb).unwrap();
        let e1 = ext.extend_trace(&t1).unwrap();
        let e2 = ext.extend_trace(&t2).unwrap();
        for ((l, a), b) in lhs.iter().zip(&e1).zip(&e2) {
            prop_assert!((l - (alpha * a + b)).norm() < 1e-12 * (1.0 + l.norm()));
        }
    }

    #[test]
    fn reconstruction_is_linear(seed in 0u64..1000) {
        let s = square2(0.5, 2);
        let asm = assemble_fem(&s, &plane_wave(1.0)).unwrap();
        let basis = build_basis(&s, &asm, 2, &EdgeModeCache::new()).unwrap();
        let map = number_dofs(s.graph(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_complex(&mut rng, map.ndofs);
        let v = random_complex(&mut rng, map.ndofs);
        let w: Vec<Complex64> = u.iter().zip(&v).map(|(a, b)| a * 2.0 - b).collect();
        let (fu, fv, fw) = (
            reconstruct(&s, &basis, &map, &u).unwrap(),
            reconstruct(&s, &basis, &map, &v).unwrap(),
            reconstruct(&s, &basis, &map, &w).unwrap(),
        );
        for ((a, b), c) in fu.iter().zip(&fv).zip(&fw) {
            prop_assert!((a * 2.0 - b - c).norm() < 1e-12);
        }
    }
}
