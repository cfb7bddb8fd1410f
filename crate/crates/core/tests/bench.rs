use qrpca::bench::{make_synthetic, run_bench, write_csv, BenchSpec, AGREEMENT_TOL};
use qrpca::quaternion::qsvd_gram;

fn small() -> BenchSpec {
    BenchSpec {
        rows: 300,
        cols_list: vec![5, 10, 20],
        iters: 4,
        ..BenchSpec::default()
    }
}

#[test]
fn synthetic_matrix_is_pure_rank_one_and_seeded() {
    let spec = small();
    let c = make_synthetic(&spec, 10);
    assert_eq!(c.dim(), (300, 10));
    assert!(c.is_pure());
    assert_eq!(c.im_i(), c.im_j());
    assert!(c.im_i().iter().all(|v| (0.0..1.0).contains(v)));
    let s = qsvd_gram(&c, None);
    assert!(s.sigma[1] <= 1e-10 * s.sigma[0]);
    assert_eq!(make_synthetic(&spec, 10), c);
    let other = BenchSpec { seed: 1, ..small() };
    assert_ne!(make_synthetic(&other, 10), c);
}

#[test]
fn values_are_deterministic_and_gated() {
    let a = run_bench(&small()).unwrap();
    let b = run_bench(&small()).unwrap();
    assert_eq!(a.len(), 3);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.cols, y.cols);
        assert_eq!(x.max_rel_diff, y.max_rel_diff);
        assert!(x.max_rel_diff <= AGREEMENT_TOL);
        assert!(x.qsvd_s > 0.0 && x.fwr1_s > 0.0);
    }
}

#[test]
fn csv_has_one_row_per_size() {
    let rows = run_bench(&small()).unwrap();
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "cols,qsvd_s,fwr1_s");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("5,"));
}

#[test]
fn invalid_specs_are_rejected() {
    for spec in [
        BenchSpec {
            rows: 10,
            cols_list: vec![20],
            ..small()
        },
        BenchSpec {
            cols_list: vec![],
            ..small()
        },
        BenchSpec {
            cols_list: vec![0, 5],
            ..small()
        },
        BenchSpec {
            iters: 0,
            ..small()
        },
        BenchSpec {
            rho: 1.0,
            ..small()
        },
    ] {
        assert!(spec.validate().is_err(), "{spec:?}");
        assert!(run_bench(&spec).is_err());
    }
}
