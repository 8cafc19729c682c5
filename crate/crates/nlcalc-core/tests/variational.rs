use std::sync::Arc;

use approx::assert_relative_eq;

use nlcalc_core::ftc::Bump;
use nlcalc_core::grid::lp_norm;
use nlcalc_core::variational::{
    el_strong_residual, energy_eval, energy_first_variation, energy_gradient, minimize, EnergySpec, MinimizeConfig,
};
use nlcalc_core::{make_masks, CutoffProfile, DomainMasks, Error, GridField, GridSpec, NlOperator, OperatorConfig, Params, Shape, SingularRule};

struct Setup {
    grid: GridSpec,
    masks: DomainMasks,
    op: NlOperator,
}

fn setup(n: usize, cells: usize) -> Setup {
    let grid = GridSpec::new(n, &vec![-0.5; n], 2.0, cells).unwrap();
    let masks = make_masks(&grid, &Shape::unit_box(), 0.25).unwrap();
    let params = Params::new(n, 0.5, 0.25, 2.0).unwrap();
    let cfg = OperatorConfig::new(&params, &CutoffProfile::standard(0.25).unwrap(), SingularRule::MomentMatched).unwrap();
    let op = NlOperator::new(&cfg, &grid).unwrap();
    Setup { grid, masks, op }
}

fn inner_bump(st: &Setup, c: f64, r: f64) -> GridField {
    GridField::from_fn(st.grid, |x| Bump::Poly.eval(&x[..1], &[c], r)).masked(&st.masks.inner)
}

#[test]
fn energy_specs_are_consistent() {
    EnergySpec::quadratic_with_source(None).check_consistency(2, 1).unwrap();
    EnergySpec::p_laplace(4.0, None).check_consistency(1, 2).unwrap();
    let mut wrong = EnergySpec::quadratic_with_source(None);
    wrong.dz_w = Arc::new(|_, _, z| [2.0 * z[0], 0.0]);
    assert!(wrong.check_consistency(1, 3).is_err());
    let mut concave = EnergySpec::quadratic_with_source(None);
    concave.w = Arc::new(|_, _, z| -0.5 * z[0] * z[0]);
    concave.dz_w = Arc::new(|_, _, z| [-z[0], 0.0]);
    assert!(concave.check_consistency(1, 4).is_err());
    concave.convex = false;
    concave.check_consistency(1, 4).unwrap();
}

#[test]
fn quadratic_energy_values() {
    let st = setup(1, 128);
    let spec = EnergySpec::quadratic_with_source(None);
    let constant = GridField::from_fn(st.grid, |_| 2.0);
    assert_eq!(energy_eval(&spec, &constant, &st.op, &st.masks).unwrap(), 0.0);
    let u = inner_bump(&st, 0.5, 0.2);
    let g = st.op.gradient(&u, &st.masks.omega).unwrap();
    let half_sq = 0.5 * lp_norm(&g, &st.masks.omega, 2.0).powi(2);
    assert_relative_eq!(energy_eval(&spec, &u, &st.op, &st.masks).unwrap(), half_sq, max_relative = 1e-13);
}

#[test]
fn quadratic_energy_matches_assembled_form() {
    let st = setup(1, 64);
    let source = GridField::from_fn(st.grid, |x| Bump::Poly.eval(&x[..1], &[0.5], 0.3));
    let spec = EnergySpec::quadratic_with_source(Some(source.clone()));
    let homogeneous = EnergySpec::quadratic_with_source(None);
    let free: Vec<usize> = (0..st.grid.len()).filter(|i| st.masks.inner[*i]).collect();
    let zero = GridField::zeros(st.grid, 1);
    let columns: Vec<Vec<f64>> = free
        .iter()
        .map(|&j| {
            let mut e = zero.clone();
            e.values[j] = 1.0;
            let g = energy_gradient(&homogeneous, &e, &st.op, &st.masks).unwrap();
            free.iter().map(|&i| g.values[i]).collect()
        })
        .collect();
    for (a, ca) in columns.iter().enumerate() {
        for (b, cb) in columns.iter().enumerate() {
            assert!((ca[b] - cb[a]).abs() <= 1e-12 * ca[a].abs());
        }
    }
    let u = inner_bump(&st, 0.45, 0.15);
    let x: Vec<f64> = free.iter().map(|&i| u.values[i]).collect();
    let mut form = 0.0;
    for (a, ca) in columns.iter().enumerate() {
        for (b, v) in ca.iter().enumerate() {
            form += 0.5 * x[a] * v * x[b];
        }
    }
    let h = st.grid.cell_volume();
    form -= free.iter().zip(&x).map(|(&i, v)| h * source.values[i] * v).sum::<f64>();
    assert_relative_eq!(energy_eval(&spec, &u, &st.op, &st.masks).unwrap(), form, max_relative = 1e-8);
}

#[test]
fn first_variation() {
    let st = setup(1, 128);
    let source = GridField::from_fn(st.grid, |x| (3.0 * x[0]).cos());
    for spec in [EnergySpec::quadratic_with_source(Some(source)), EnergySpec::p_laplace(4.0, None)] {
        let u = GridField::from_fn(st.grid, |x| x[0].sin() + 0.3);
        let phi = inner_bump(&st, 0.5, 0.2);
        let psi = inner_bump(&st, 0.4, 0.1);
        let zero = GridField::zeros(st.grid, 1);
        assert_eq!(energy_first_variation(&spec, &u, &zero, &st.op, &st.masks).unwrap(), 0.0);
        let t = 1e-5;
        let plus = GridField { values: u.values.iter().zip(&phi.values).map(|(a, b)| a + t * b).collect(), ..u.clone() };
        let minus = GridField { values: u.values.iter().zip(&phi.values).map(|(a, b)| a - t * b).collect(), ..u.clone() };
        let fd = (energy_eval(&spec, &plus, &st.op, &st.masks).unwrap() - energy_eval(&spec, &minus, &st.op, &st.masks).unwrap())
            / (2.0 * t);
        let weak = energy_first_variation(&spec, &u, &phi, &st.op, &st.masks).unwrap();
        assert!((fd - weak).abs() <= 1e-6, "{fd} vs {weak}");
        let combo = GridField { values: phi.values.iter().zip(&psi.values).map(|(a, b)| 2.0 * a - b).collect(), ..phi.clone() };
        let lhs = energy_first_variation(&spec, &u, &combo, &st.op, &st.masks).unwrap();
        let rhs = 2.0 * weak - energy_first_variation(&spec, &u, &psi, &st.op, &st.masks).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        let outside = GridField::from_fn(st.grid, |_| 1.0);
        assert!(energy_first_variation(&spec, &u, &outside, &st.op, &st.masks).is_err());
    }
}

#[test]
fn adjoint_consistency() {
    for n in [1, 2] {
        let st = setup(n, if n == 1 { 64 } else { 32 });
        let len = st.grid.len();
        let u = GridField::from_fn(st.grid, |x| (2.0 * x[0]).sin() + x[n - 1] * x[0]);
        let mut phi = GridField::zeros(st.grid, n);
        for i in (0..len).filter(|i| st.masks.inner[*i]) {
            let x = st.grid.coord(i);
            for a in 0..n {
                phi.values[a * len + i] = (x[0] + a as f64).cos();
            }
        }
        let g = st.op.gradient(&u, &st.masks.omega).unwrap();
        let div = st.op.divergence(&phi, &st.masks.omega).unwrap();
        let lhs: f64 = (0..n * len).map(|k| g.values[k] * phi.values[k]).sum();
        let rhs: f64 = (0..len).filter(|i| st.masks.omega[*i]).map(|i| u.values[i] * div.values[i]).sum();
        assert!((lhs + rhs).abs() <= 1e-8 * lhs.abs(), "{lhs} {rhs}");
    }
}

#[test]
fn homogeneous_problem_has_zero_minimiser() {
    let st = setup(1, 64);
    let spec = EnergySpec::quadratic_with_source(None);
    let zero = GridField::zeros(st.grid, 1);
    assert_eq!(el_strong_residual(&zero, &spec, &st.op, &st.masks).unwrap(), 0.0);
    let mut cfg = MinimizeConfig::new(zero.clone());
    let start = inner_bump(&st, 0.5, 0.2);
    cfg.initial = Some(start.clone());
    let r = minimize(&spec, &cfg, &st.masks, &st.op).unwrap();
    assert!(r.converged);
    assert!(r.energy_trace.windows(2).all(|w| w[1] <= w[0]));
    let size = lp_norm(&r.u, &st.masks.omega_delta, 2.0);
    assert!(size <= 1e-6 * lp_norm(&start, &st.masks.omega_delta, 2.0), "{size}");
    let direct = minimize(&spec, &MinimizeConfig::new(zero), &st.masks, &st.op).unwrap();
    assert_eq!(direct.iterations, 0);
    assert!(direct.u.values.iter().all(|v| *v == 0.0));
}

#[test]
fn p_laplace_converges_with_linear_datum() {
    let st = setup(1, 64);
    let datum = GridField::from_fn(st.grid, |x| 0.5 + x[0]);
    let mut cfg = MinimizeConfig::new(datum);
    cfg.momentum = 0.5;
    let spec = EnergySpec::p_laplace(4.0, None);
    let r = minimize(&spec, &cfg, &st.masks, &st.op).unwrap();
    assert!(r.converged && r.first_order_residual <= cfg.tol);
    assert!(r.energy_trace.windows(2).all(|w| w[1] <= w[0]));
    for i in (0..st.grid.len()).filter(|i| !st.masks.inner[*i] && st.masks.omega_delta[*i]) {
        assert_eq!(r.u.values[i], 0.5 + st.grid.coord(i)[0]);
    }
}

#[test]
fn config_validation() {
    let st = setup(1, 64);
    let spec = EnergySpec::quadratic_with_source(None);
    let mut cfg = MinimizeConfig::new(GridField::zeros(st.grid, 1));
    cfg.tol = 0.0;
    assert!(minimize(&spec, &cfg, &st.masks, &st.op).is_err());
    let mut cfg = MinimizeConfig::new(GridField::zeros(st.grid, 1));
    cfg.momentum = 1.0;
    assert!(cfg.validate(&st.masks).is_err());
    let mut bad = GridField::zeros(st.grid, 1);
    bad.values[40] = f64::NAN;
    assert!(matches!(MinimizeConfig::new(bad).validate(&st.masks), Err(Error::NonFinite(_))));
    let other = GridSpec::new(1, &[-0.5], 2.0, 128).unwrap();
    assert!(matches!(minimize(&spec, &MinimizeConfig::new(GridField::zeros(other, 1)), &st.masks, &st.op), Err(Error::GridMismatch)));
}
