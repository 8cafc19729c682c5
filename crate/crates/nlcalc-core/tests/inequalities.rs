use nlcalc_core::inequalities::{
    hardy_ratio, holder_kernel_bound, holder_lhs, morrey_ratio, poincare_ratio, poincare_sobolev_ratio, translation_exponent,
    translation_norms, trudinger_check, Family, TestEnsemble,
};
use nlcalc_core::{make_masks, CutoffProfile, DomainMasks, Error, GridField, GridSpec, NlOperator, OperatorConfig, Params, Shape, SingularRule};

struct Setup {
    grid: GridSpec,
    masks: DomainMasks,
    op: NlOperator,
}

fn setup(n: usize, s: f64, cells: usize) -> Setup {
    let grid = GridSpec::new(n, &vec![-0.5; n], 2.0, cells).unwrap();
    let masks = make_masks(&grid, &Shape::unit_box(), 0.25).unwrap();
    let params = Params::new(n, s, 0.25, 2.0).unwrap();
    let cfg = OperatorConfig::new(&params, &CutoffProfile::standard(0.25).unwrap(), SingularRule::MomentMatched).unwrap();
    let op = NlOperator::new(&cfg, &grid).unwrap();
    Setup { grid, masks, op }
}

fn ensemble(st: &Setup, members: usize, seed: u64, family: Family) -> TestEnsemble {
    TestEnsemble::generate(&st.grid, &Shape::unit_box(), 0.25, members, seed, family).unwrap()
}

fn assert_invariant(a: f64, b: f64) {
    assert!(a.is_finite() && a > 0.0);
    assert!((b / a - 1.0).abs() <= 1e-10, "{a} vs {b}");
}

#[test]
fn ensembles_vanish_outside_inner_set() {
    for n in [1, 2] {
        let st = setup(n, 0.5, if n == 1 { 256 } else { 64 });
        for family in [Family::Bumps, Family::RandomTrigBumps] {
            let e = ensemble(&st, 10, 3, family);
            assert_eq!(e.len(), 10);
            for u in &e.functions {
                for i in 0..st.grid.len() {
                    if !st.masks.inner[i] {
                        assert_eq!(u.values[i], 0.0);
                    }
                }
                assert!(u.values.iter().any(|v| *v != 0.0));
            }
            let again = ensemble(&st, 10, 3, family);
            assert_eq!(e.functions, again.functions);
        }
    }
}

#[test]
fn poincare_and_sobolev_are_scale_invariant() {
    let st = setup(2, 0.5, 64);
    let e = ensemble(&st, 12, 5, Family::Bumps);
    let big = e.scaled(-1e3);
    let a = poincare_ratio(&e, 2.0, &st.op, &st.masks).unwrap().max_ratio;
    assert_invariant(a, poincare_ratio(&big, 2.0, &st.op, &st.masks).unwrap().max_ratio);
    // Critical exponent np/(n - sp) = 2.4 at n = 2, s = 0.5, p = 1.5.
    let a = poincare_sobolev_ratio(&e, 1.5, 2.4, &st.op, &st.masks).unwrap();
    let b = poincare_sobolev_ratio(&big, 1.5, 2.4, &st.op, &st.masks).unwrap();
    for (x, y) in a.ratios.iter().zip(&b.ratios) {
        assert_invariant(*x, *y);
    }
    assert_eq!(a.ratios.len(), 12);
    assert!(poincare_sobolev_ratio(&e, 1.5, 2.5, &st.op, &st.masks).is_err());
    assert!(poincare_sobolev_ratio(&e, 4.0, 2.0, &st.op, &st.masks).is_err());
    assert!(poincare_ratio(&e, 1.0, &st.op, &st.masks).is_err());
}

#[test]
fn zero_member_is_rejected() {
    let st = setup(1, 0.5, 256);
    let mut e = ensemble(&st, 3, 1, Family::Bumps);
    e.functions[1] = GridField::zeros(st.grid, 1);
    assert!(matches!(poincare_ratio(&e, 2.0, &st.op, &st.masks), Err(Error::ZeroGradient { member: 1 })));
}

#[test]
fn morrey_ratios() {
    let st = setup(1, 0.75, 256);
    let e = ensemble(&st, 50, 8, Family::Bumps);
    let a = morrey_ratio(&e, 2.0, &st.op, &st.masks, 4).unwrap();
    let b = morrey_ratio(&e.scaled(0.01), 2.0, &st.op, &st.masks, 4).unwrap();
    assert_invariant(a.holder.max_ratio, b.holder.max_ratio);
    assert_invariant(a.sup.max_ratio, b.sup.max_ratio);
    assert!(a.holder.ratios.iter().all(|r| r.is_finite() && *r >= 0.0));
    assert!(morrey_ratio(&e, 1.2, &st.op, &st.masks, 4).is_err());
}

#[test]
fn hardy_ratios() {
    let st = setup(2, 0.5, 64);
    let e = ensemble(&st, 20, 9, Family::Bumps);
    let a = hardy_ratio(&e, 1.5, &st.op, &st.masks, &[0.5, 0.5]).unwrap();
    let b = hardy_ratio(&e.scaled(3.0), 1.5, &st.op, &st.masks, &[0.5, 0.5]).unwrap();
    assert_invariant(a.max_ratio, b.max_ratio);
    // The origin may sit on a node; the averaged weight keeps every ratio finite.
    let c = hardy_ratio(&e, 1.5, &st.op, &st.masks, &st.grid.coord(st.grid.linear([32, 32]))).unwrap();
    assert!(c.ratios.iter().all(|r| r.is_finite() && *r > 0.0));
    assert!(hardy_ratio(&e, 4.0, &st.op, &st.masks, &[0.5, 0.5]).is_err());
}

#[test]
fn trudinger_functional() {
    let st = setup(1, 0.5, 256);
    let e = ensemble(&st, 20, 2, Family::Bumps);
    let grid_c1 = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 1e6];
    let r = trudinger_check(&e, 2.0, &st.op, &st.masks, &grid_c1, 10.0).unwrap();
    for w in r.values.windows(2) {
        assert!(w[1] <= w[0]);
    }
    // exp(t) → 1 as the normalised amplitude vanishes.
    assert!((r.values[6] - 1.0).abs() <= 1e-6);
    let c1 = r.chosen_c1.unwrap();
    let k = grid_c1.iter().position(|v| *v == c1).unwrap();
    assert!(r.values[k] <= 10.0 && (k == 0 || r.values[k - 1] > 10.0));
    let tiny = trudinger_check(&e.scaled(1e-9), 2.0, &st.op, &st.masks, &grid_c1, 10.0).unwrap();
    assert_eq!(tiny.chosen_c1, r.chosen_c1);
    assert!(trudinger_check(&e, 3.0, &st.op, &st.masks, &grid_c1, 10.0).is_err());
}

#[test]
fn translation_estimates() {
    let st = setup(1, 0.5, 512);
    let e = ensemble(&st, 5, 6, Family::Bumps);
    let u = &e.functions[0];
    assert_eq!(translation_norms(u, 2.0, &st.masks.omega, &[0]), vec![0.0]);
    assert!(translation_exponent(u, 2.0, &st.masks.omega, &[0, 1]).is_err());
    let shifts: Vec<usize> = (2..=20).step_by(2).collect();
    for p in [1.0, 2.0] {
        for u in &e.functions {
            let slope = translation_exponent(u, p, &st.masks.omega, &shifts).unwrap();
            assert!((0.5 - 0.15..=1.05).contains(&slope), "p = {p}: slope {slope}");
        }
    }
}

#[test]
fn holder_scaling_and_continuity() {
    for n in [1, 2] {
        for s in [0.3, 0.6] {
            let a = holder_lhs(n, s, 0.02).unwrap();
            let b = holder_lhs(n, s, 0.2).unwrap();
            assert!((b / a / 10f64.powf(s) - 1.0).abs() <= 2e-2, "n = {n}, s = {s}");
        }
        let small: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|h| holder_lhs(n, 0.5, *h).unwrap()).collect();
        assert!(small[2] < small[1] && small[1] < small[0] && small[2] < 0.1 * small[0]);
    }
    let report = holder_kernel_bound(1, &[0.1, 0.5, 0.9], &[0.01, 0.1]).unwrap();
    assert!(report.sup_normalized.is_finite() && report.rows.len() == 6);
    assert!(holder_kernel_bound(1, &[1.0], &[0.1]).is_err());
    assert!(holder_lhs(3, 0.5, 0.1).is_err());
}
