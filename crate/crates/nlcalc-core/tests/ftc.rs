use nlcalc_core::ftc::{
    classical_bump_error, classical_rep, ftc_bump_roundtrip, ftc_roundtrip_report, gradient_near_support,
    nl_ftc_reconstruct, Bump,
};
use nlcalc_core::spectral::inverse_kernel;
use nlcalc_core::{loglog_slope, CutoffProfile, GridField, GridSpec, NlOperator, OperatorConfig, Params, SingularRule};

fn config(s: f64, b0: f64) -> OperatorConfig {
    let params = Params::new(1, s, 0.25, 2.0).unwrap();
    OperatorConfig::new(&params, &CutoffProfile::new(1.0, b0, 0.25).unwrap(), SingularRule::MomentMatched).unwrap()
}

fn sup(f: &GridField) -> f64 {
    f.values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[test]
fn classical_representation() {
    let grid = GridSpec::new(1, &[-0.5], 2.0, 1024).unwrap();
    assert_eq!(sup(&classical_rep(&GridField::zeros(grid, 1)).unwrap()), 0.0);
    let err = classical_bump_error(1, Bump::Gauss, 1024).unwrap();
    assert!(err <= 1e-2, "classical error {err}");

    let a = GridField::from_fn(grid, |x| Bump::Gauss.eval(x, &[0.5], 0.3));
    let b = GridField::from_fn(grid, |x| Bump::Poly.eval(x, &[0.4], 0.2));
    let combo = GridField { values: a.values.iter().zip(&b.values).map(|(x, y)| 2.0 * x - 3.0 * y).collect(), ..a.clone() };
    let (ra, rb, rc) = (classical_rep(&a).unwrap(), classical_rep(&b).unwrap(), classical_rep(&combo).unwrap());
    let scale = sup(&rc);
    for i in 0..grid.len() {
        assert!((rc.values[i] - (2.0 * ra.values[i] - 3.0 * rb.values[i])).abs() <= 1e-12 * scale);
    }
}

#[test]
fn two_dimensional_classical_representation() {
    let err = classical_bump_error(2, Bump::Gauss, 128).unwrap();
    assert!(err <= 5e-2, "classical error {err}");
}

#[test]
fn nonlocal_round_trip() {
    let cfg = config(0.5, 0.5);
    let report = ftc_bump_roundtrip(&cfg, Bump::Gauss, 2048, 4).unwrap();
    assert!(report.rel_l2_error <= 2e-2, "round trip {}", report.rel_l2_error);
    assert!(report.rel_linf_error.is_finite());
    for b0 in [0.3, 0.7] {
        let r = ftc_bump_roundtrip(&config(0.5, b0), Bump::Gauss, 2048, 4).unwrap();
        assert!(r.rel_l2_error <= 2e-2, "b0 = {b0}: {}", r.rel_l2_error);
    }
}

#[test]
fn round_trip_refines() {
    let cfg = config(0.5, 0.5);
    let cells = [256usize, 512, 1024, 2048];
    let errs: Vec<f64> = cells.iter().map(|c| ftc_bump_roundtrip(&cfg, Bump::Gauss, *c, 4).unwrap().rel_l2_error).collect();
    for w in errs.windows(2) {
        assert!(w[1] < w[0], "{errs:?}");
    }
    let hs: Vec<f64> = cells.iter().map(|c| 2.0 / *c as f64).collect();
    assert!(loglog_slope(&hs, &errs) >= 0.5, "{errs:?}");
}

#[test]
fn classical_and_nonlocal_errors_are_comparable() {
    let classical = classical_bump_error(1, Bump::Gauss, 2048).unwrap();
    let nonlocal = ftc_bump_roundtrip(&config(0.5, 0.5), Bump::Gauss, 2048, 4).unwrap().rel_l2_error;
    let ratio = classical.max(nonlocal) / classical.min(nonlocal);
    assert!(ratio <= 10.0, "classical {classical}, nonlocal {nonlocal}");
}

#[test]
fn reconstruction_is_linear_and_shift_equivariant() {
    let cfg = config(0.5, 0.5);
    let grid = GridSpec::new(1, &[-0.5], 2.0, 512).unwrap().padded(4).unwrap();
    let v = inverse_kernel(&cfg.table, grid.cells, grid.h).unwrap();
    let zero = nl_ftc_reconstruct(&GridField::zeros(grid, 1), &v).unwrap();
    assert_eq!(sup(&zero), 0.0);

    let op = NlOperator::new(&cfg, &grid).unwrap();
    let u = GridField::from_fn(grid, |x| Bump::Gauss.eval(x, &[0.5], 0.3));
    let g = gradient_near_support(&u, &op, 0.25).unwrap();
    let base = nl_ftc_reconstruct(&g, &v).unwrap();
    let moved = nl_ftc_reconstruct(&g.shifted(12), &v).unwrap();
    let expected = base.shifted(12);
    let scale = sup(&base);
    for i in 0..grid.len() {
        let x = grid.coord(i)[0];
        if (-1.0..=2.0).contains(&x) {
            assert!((moved.values[i] - expected.values[i]).abs() <= 1e-10 * scale);
        }
    }
    let doubled = nl_ftc_reconstruct(&g.scaled(-2.5), &v).unwrap();
    for i in 0..grid.len() {
        assert!((doubled.values[i] + 2.5 * base.values[i]).abs() <= 1e-12 * scale);
    }

    let a = ftc_roundtrip_report(&u, &cfg, &v).unwrap();
    let b = ftc_roundtrip_report(&u.scaled(7.0), &cfg, &v).unwrap();
    assert!((a.rel_l2_error - b.rel_l2_error).abs() <= 1e-10 * a.rel_l2_error);
    assert!((a.rel_linf_error - b.rel_linf_error).abs() <= 1e-10 * a.rel_linf_error);
}
