use acms_core::femcore::{eval_field, interpolate, HpSpace};
use acms_core::geometry::*;
use acms_core::postprocess::*;
use acms_core::{Complex64, Error};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn crystal(n: usize, h: f64, p: usize) -> HpSpace {
    let d = build_decomposition(n, n, 1).unwrap();
    let (m, g) = mesh_domain(&d, &UnitCellSpec::with_pore(0.25, 16), h).unwrap();
    HpSpace::new(Arc::new(m), Arc::new(g), p).unwrap()
}

fn random_field(space: &HpSpace, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..space.ndofs())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

#[test]
fn energy_of_constant_on_side_of_length_six() {
    let s = crystal(6, 0.25, 3);
    let one = interpolate(&s, |_| Complex64::new(1.0, 0.0)).unwrap();
    let e = line_energy(&s, &one, [-3.0, -3.0], [-3.0, 3.0]).unwrap();
    assert!((e - 6.0).abs() < 1e-12, "{e}");
}

#[test]
fn energy_of_unit_modulus_wave() {
    let s = crystal(2, 0.2, 4);
    let kappa = 3.0;
    let u = interpolate(&s, |x| Complex64::new(0.0, -kappa * x[0]).exp()).unwrap();
    for x0 in [-1.0, 1.0] {
        let e = line_energy(&s, &u, [x0, -1.0], [x0, 1.0]).unwrap();
        assert!((e - 2.0).abs() < 1e-10, "{e}");
    }
    let top = line_energy(&s, &interpolate(&s, |_| Complex64::new(0.0, 1.0)).unwrap(), [-1.0, 1.0], [1.0, 1.0]).unwrap();
    assert!((top - 2.0).abs() < 1e-12);
}

#[test]
fn energy_matches_dense_sampling() {
    let s = crystal(2, 0.25, 3);
    let u = random_field(&s, 3);
    let e = line_energy(&s, &u, [1.0, -1.0], [1.0, 1.0]).unwrap();
    let n = 10_000;
    let pts: Vec<[f64; 2]> = (0..=n).map(|k| [1.0, -1.0 + 2.0 * k as f64 / n as f64]).collect();
    let vals = eval_field(&s, &u, &pts).unwrap();
    let dy = 2.0 / n as f64;
    let trap: f64 = vals
        .windows(2)
        .map(|w| 0.5 * dy * (w[0].norm_sqr() + w[1].norm_sqr()))
        .sum();
    assert!(((e - trap) / e).abs() < 1e-6, "{e} vs {trap}");
}

#[test]
fn energy_needs_boundary_segment() {
    let s = crystal(2, 0.25, 2);
    let u = random_field(&s, 1);
    assert!(matches!(line_energy(&s, &u, [0.0, -1.0], [0.0, 1.0]), Err(Error::Config(_))));
    assert!(line_energy(&s, &u, [-1.0, -1.0], [-1.0, 0.9]).is_err());
    assert!(line_energy(&s, &u[1..], [-1.0, -1.0], [-1.0, 1.0]).is_err());
}

#[test]
fn partial_side_segment() {
    let s = crystal(2, 0.25, 2);
    let one = interpolate(&s, |_| Complex64::new(1.0, 0.0)).unwrap();
    let e = line_energy(&s, &one, [-1.0, -0.5], [-1.0, 0.5]).unwrap();
    assert!((e - 1.0).abs() < 1e-12);
}

#[test]
fn slope_of_exact_power() {
    let xs: Vec<f64> = (1..=6).map(|k| (1 << k) as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
    assert!((fit_loglog_slope(&xs, &ys).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn slope_with_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let xs: Vec<f64> = (1..=7).map(|k| (1 << k) as f64).collect();
    for _ in 0..10 {
        let ys: Vec<f64> = xs.iter().map(|x| 0.3 * x.powf(1.5) * (1.0 + rng.gen_range(-0.05..0.05))).collect();
        let s = fit_loglog_slope(&xs, &ys).unwrap();
        assert!((s - 1.5).abs() < 0.15, "{s}");
    }
}

#[test]
fn slope_rejects_bad_input() {
    assert!(fit_loglog_slope(&[1.0, 2.0], &[1.0, 4.0]).is_err());
    assert!(fit_loglog_slope(&[1.0, 2.0, 3.0], &[1.0, 0.0, 4.0]).is_err());
    assert!(fit_loglog_slope(&[1.0, 3.0, 2.0], &[1.0, 2.0, 4.0]).is_err());
    assert!(fit_loglog_slope(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
}

#[test]
fn onset_detection() {
    assert_eq!(onset_index(&[0.5]), None);
    assert_eq!(onset_index(&[]), None);
    assert_eq!(onset_index(&[1.0, 0.5, 0.1]), Some(0));
    assert_eq!(onset_index(&[1.0, 1.2, 0.9, 0.3, 0.1]), Some(1));
    assert_eq!(onset_index(&[1.0, 0.5, 0.6]), None);
    assert_eq!(onset_index(&[1.0, 0.5, 0.5]), None);
    assert_eq!(onset_index(&[1.0, 0.5, 0.7, 0.2]), Some(2));
}

#[test]
fn zero_field_raster() {
    let s = crystal(2, 0.25, 2);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.csv");
    export_field(&s, &vec![Complex64::new(0.0, 0.0); s.ndofs()], &path, ExportFormat::CsvGrid { n: 16 }).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,re,im,abs"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 256);
    for r in rows {
        let v: Vec<f64> = r.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(&v[2..], &[0.0, 0.0, 0.0]);
    }
}

#[test]
fn linear_field_raster() {
    for p in 1..=3 {
        let s = crystal(2, 0.25, p);
        let u = interpolate(&s, |x| Complex64::new(x[0], 0.0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.csv");
        export_field(&s, &u, &path, ExportFormat::CsvGrid { n: 33 }).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        for r in text.lines().skip(1) {
            let v: Vec<f64> = r.split(',').map(|x| x.parse().unwrap()).collect();
            assert!((v[2] - v[0]).abs() < 1e-12 && v[3].abs() < 1e-12);
        }
    }
}

#[test]
fn vtk_round_trip() {
    let s = crystal(2, 0.25, 3);
    let u = random_field(&s, 5);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.vtk");
    export_field(&s, &u, &path, ExportFormat::VtkLegacy).unwrap();
    let back = read_vtk(&path).unwrap();
    let n = s.mesh().num_nodes();
    assert_eq!(back.points.len(), n);
    for k in 0..n {
        assert_eq!(back.u_re[k], u[k].re);
        assert_eq!(back.u_im[k], u[k].im);
        assert_eq!([back.points[k][0], back.points[k][1]], s.mesh().nodes[k]);
    }
}

#[test]
fn sweep_csv_round_trip_and_determinism() {
    let recs = vec![
        SweepRecord {
            kappa: Some(16.0),
            p: Some(5),
            h: Some(0.025),
            ie: Some(32),
            j: Some(4),
            n_a: Some(9 + 12 * 32),
            n_f: Some(12345),
            err_rel: Some(1.0 / 3.0),
            t_bas: Some(0.1),
            t_ass: Some(0.2),
            t_sol: Some(0.3),
            t_tot: Some(0.6),
            ..SweepRecord::default()
        },
        SweepRecord {
            kappa: Some(1.26),
            e_in: Some(2.5e-3),
            e_out: Some(std::f64::consts::PI),
            ..SweepRecord::default()
        },
    ];
    let mut a = Vec::new();
    write_sweep_csv(&recs, &mut a).unwrap();
    let mut b = Vec::new();
    write_sweep_csv(&recs, &mut b).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a.clone()).unwrap();
    assert!(text.starts_with("kappa,p,h,IE,J,NA,NF,err_rel,E_in,E_out,t_bas,t_ass,t_sol,t_tot\n"));
    assert!(text.lines().nth(2).unwrap().starts_with("1.2600000000000000e0,,,"));
    assert_eq!(read_sweep_csv(a.as_slice()).unwrap(), recs);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn energy_is_quadratic(seed in 0u64..1000, re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let s = crystal(2, 0.25, 2);
        let u = random_field(&s, seed);
        let alpha = Complex64::new(re, im);
        let scaled: Vec<Complex64> = u.iter().map(|v| alpha * v).collect();
        let e = line_energy(&s, &u, [1.0, -1.0], [1.0, 1.0]).unwrap();
        let es = line_energy(&s, &scaled, [1.0, -1.0], [1.0, 1.0]).unwrap();
        prop_assert!((es - alpha.norm_sqr() * e).abs() <= 1e-12 * es.max(1.0));
    }
}
