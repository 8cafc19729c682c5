use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nlcalc_core::ftc::Bump;
use nlcalc_core::grid::lp_norm;
use nlcalc_core::kernels::{cns_const, sphere_area};
use nlcalc_core::operators::{ibp_residual, ibp_terms, nl_divergence, nl_gradient, nl_gradient_conv, Stencil};
use nlcalc_core::quad;
use nlcalc_core::{make_masks, CutoffProfile, Error, GridField, GridSpec, NlOperator, OperatorConfig, Params, Shape, SingularRule};

fn config(n: usize, s: f64, rule: SingularRule) -> OperatorConfig {
    let params = Params::new(n, s, 0.25, 2.0).unwrap();
    OperatorConfig::new(&params, &CutoffProfile::standard(0.25).unwrap(), rule).unwrap()
}

fn sup(f: &GridField) -> f64 {
    f.values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[test]
fn constants_are_annihilated() {
    for n in [1, 2] {
        let grid = GridSpec::new(n, &vec![-0.5; n], 2.0, if n == 1 { 256 } else { 64 }).unwrap();
        let masks = make_masks(&grid, &Shape::unit_box(), 0.25).unwrap();
        for rule in [SingularRule::MomentMatched, SingularRule::BallAverage, SingularRule::Skip] {
            let cfg = config(n, 0.5, rule);
            let g = nl_gradient(&GridField::from_fn(grid, |_| 3.7), &cfg, &masks).unwrap();
            assert_eq!(sup(&g), 0.0);
        }
    }
}

#[test]
fn even_function_has_zero_gradient_at_centre() {
    let grid = GridSpec::new(1, &[-0.5], 2.0, 256).unwrap();
    let masks = make_masks(&grid, &Shape::unit_box(), 0.25).unwrap();
    let centre = 128;
    let x0 = grid.coord(centre)[0];
    let u = GridField::from_fn(grid, |x| ((x[0] - x0) * 3.0).cos() + (x[0] - x0).powi(2));
    let g = nl_gradient(&u, &config(1, 0.4, SingularRule::MomentMatched), &masks).unwrap();
    assert!(g.values[centre].abs() <= 1e-13);
}

#[test]
fn linear_function_gives_kappa() {
    let cfg = config(2, 0.5, SingularRule::MomentMatched);
    let p = cfg.params();
    let c = cns_const(p);
    let cut = &cfg.table.cutoff;
    // κ = (c/n) σ_{n-1} ∫_0^δ w(r) r^{-s} dr by an independent radial quadrature.
    let b = cut.plateau();
    let kappa = c / 2.0
        * sphere_area(2)
        * (quad::integrate_left_singular(|r| cut.eval(r) * r.powf(-p.s), 0.0, b, -p.s, 1e-15, 1e-13).value
            + quad::integrate(|r| cut.eval(r) * r.powf(-p.s), b, p.delta, 1e-15, 1e-13).value);
    let grid = GridSpec::new(2, &[-0.5, -0.5], 2.0, 128).unwrap();
    let masks = make_masks(&grid, &Shape::unit_box(), 0.25).unwrap();
    let u = GridField::from_fn(grid, |x| x[0]);
    let g = nl_gradient(&u, &cfg, &masks).unwrap();
    let len = grid.len();
    for i in (0..len).filter(|i| masks.omega[*i]) {
        assert!((g.values[i] - kappa).abs() <= 1e-3 * kappa);
        assert!(g.values[len + i].abs() <= 1e-12);
    }
    {
        let rule = SingularRule::BallAverage;
        let g = nl_gradient(&u, &config(2, 0.5, rule), &masks).unwrap();
        let i = (0..len).find(|i| masks.inner[*i]).unwrap();
        assert!((g.values[i] - kappa).abs() <= 5e-2 * kappa);
    }
}

/// `div φ(x) = c ∫_0^δ (φ(x+z) - φ(x-z)) w(z) z^{-1-s} dz` in one dimension.
fn divergence_oracle(cfg: &OperatorConfig, phi: &dyn Fn(f64) -> f64, x: f64) -> f64 {
    let p = cfg.params();
    let cut = &cfg.table.cutoff;
    let f = |z: f64| (phi(x + z) - phi(x - z)) * cut.eval(z) * z.powf(-1.0 - p.s);
    let b = cut.plateau();
    let pieces = quad::integrate_left_singular(f, 0.0, b, -p.s, 1e-14, 1e-12).value
        + quad::integrate(f, b, p.delta, 1e-14, 1e-12).value;
    cns_const(p) * pieces
}

#[test]
fn divergence_matches_quadrature_oracle() {
    let cfg = config(1, 0.5, SingularRule::MomentMatched);
    let grid = GridSpec::new(1, &[-0.5], 2.0, 8192).unwrap();
    let masks = make_masks(&grid, &Shape::unit_box(), 0.25).unwrap();
    let phi = |x: f64| Bump::Gauss.eval(&[x], &[0.5], 0.4);
    let field = GridField::from_fn(grid, |x| phi(x[0]));
    let div = nl_divergence(&field, &cfg, &masks).unwrap();
    let scale = sup(&div);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let i = loop {
            let i = rng.gen_range(0..grid.len());
            if masks.omega_delta[i] {
                break i;
            }
        };
        let oracle = divergence_oracle(&cfg, &phi, grid.coord(i)[0]);
        assert!((div.values[i] - oracle).abs() <= 1e-3 * scale, "node {i}: {} vs {oracle}", div.values[i]);
    }
}

#[test]
fn divergence_of_zero_and_constant() {
    let cfg = config(2, 0.5, SingularRule::MomentMatched);
    let grid = GridSpec::new(2, &[-0.5, -0.5], 2.0, 64).unwrap();
    let masks = make_masks(&grid, &Shape::unit_box(), 0.25).unwrap();
    let zero = GridField::zeros(grid, 2);
    assert_eq!(sup(&nl_divergence(&zero, &cfg, &masks).unwrap()), 0.0);
    let len = grid.len();
    let mut c = GridField::zeros(grid, 2);
    for i in (0..len).filter(|i| masks.omega[*i]) {
        c.values[i] = 1.5;
        c.values[len + i] = -0.5;
    }
    let div = nl_divergence(&c, &cfg, &masks).unwrap();
    let op = NlOperator::new(&cfg, &grid).unwrap();
    for i in 0..len {
        let x = grid.coord(i);
        let depth = x[0].min(1.0 - x[0]).min(x[1]).min(1.0 - x[1]);
        if depth > 0.25 + op.stencil.h {
            assert!(div.values[i].abs() <= 1e-12);
        }
    }
}

#[test]
fn stencil_overflow_is_reported() {
    let cfg = config(1, 0.5, SingularRule::MomentMatched);
    let grid = GridSpec::new(1, &[-0.2], 1.4, 128).unwrap();
    let masks = make_masks(&grid, &Shape::unit_box(), 0.25).unwrap();
    let u = GridField::from_fn(grid, |x| x[0]);
    assert!(matches!(nl_gradient(&u, &cfg, &masks), Err(Error::StencilOverflow { .. })));
}

#[test]
fn gradient_linearity_and_support() {
    let cfg = config(1, 0.6, SingularRule::MomentMatched);
    let grid = GridSpec::new(1, &[-0.5], 2.0, 512).unwrap();
    let op = NlOperator::new(&cfg, &grid).unwrap();
    let all = vec![true; grid.len()];
    let mut interior = all.clone();
    for (i, m) in interior.iter_mut().enumerate() {
        *m = grid.cells_to_boundary(i) >= op.stencil.radius_cells;
    }
    let u = GridField::from_fn(grid, |x| Bump::Poly.eval(x, &[0.5], 0.2));
    let v = GridField::from_fn(grid, |x| (4.0 * x[0]).sin());
    let (a, b) = (2.5, -0.75);
    let w = GridField { values: u.values.iter().zip(&v.values).map(|(x, y)| a * x + b * y).collect(), ..u.clone() };
    let gu = op.gradient(&u, &interior).unwrap();
    let gv = op.gradient(&v, &interior).unwrap();
    let gw = op.gradient(&w, &interior).unwrap();
    let scale = sup(&gw);
    for i in 0..grid.len() {
        assert!((gw.values[i] - (a * gu.values[i] + b * gv.values[i])).abs() <= 1e-13 * scale);
        let x = grid.coord(i)[0];
        if (x - 0.5).abs() > 0.2 + 0.25 + grid.h {
            assert_eq!(gu.values[i], 0.0);
        }
    }
}

#[test]
fn lipschitz_bound_holds() {
    for n in [1, 2] {
        let cfg = config(n, 0.5, SingularRule::MomentMatched);
        let grid = GridSpec::new(n, &vec![-0.5; n], 2.0, if n == 1 { 512 } else { 64 }).unwrap();
        let masks = make_masks(&grid, &Shape::unit_box(), 0.25).unwrap();
        let op = NlOperator::new(&cfg, &grid).unwrap();
        // Lip(u) = 2 for u = sin(2x₁).
        let u = GridField::from_fn(grid, |x| (2.0 * x[0]).sin());
        let g = op.gradient(&u, &masks.omega).unwrap();
        let len = grid.len();
        let worst = (0..len).map(|i| g.magnitude(i)).fold(0.0, f64::max);
        assert!(worst <= 2.0 * op.stencil.lipschitz_bound());
        assert!(worst > 0.0 && len > 0);
    }
    let s = Stencil::build(&config(1, 0.5, SingularRule::Skip), 0.01);
    assert_eq!(s.singular_weight, 0.0);
}

#[test]
fn conv_form_zero_and_translation() {
    let table = config(1, 0.5, SingularRule::MomentMatched).table;
    let grid = GridSpec::new(1, &[-0.5], 2.0, 512).unwrap();
    let z = nl_gradient_conv(&GridField::zeros(grid, 1), &table).unwrap();
    assert_eq!(sup(&z), 0.0);
    let u = GridField::from_fn(grid, |x| Bump::Gauss.eval(x, &[0.5], 0.2));
    let a = nl_gradient_conv(&u, &table).unwrap().shifted(16);
    let b = nl_gradient_conv(&u.shifted(16), &table).unwrap();
    let scale = sup(&a);
    // The spectral derivative rings at roundoff-like level over the whole box, so nodes the
    // shift pads with zeros are left out.
    for i in 0..grid.len() {
        let x = grid.coord(i)[0];
        if (0.0..=1.2).contains(&x) {
            assert!((a.values[i] - b.values[i]).abs() <= 1e-12 * scale);
        }
    }
    let edge = GridField::from_fn(grid, |x| Bump::Gauss.eval(x, &[-0.4], 0.2));
    assert!(matches!(nl_gradient_conv(&edge, &table), Err(Error::SupportOverflow)));
}

#[test]
fn conv_form_agrees_with_direct_quadrature() {
    let cfg = config(1, 0.5, SingularRule::MomentMatched);
    let grid = GridSpec::new(1, &[-0.5], 2.0, 512).unwrap();
    let masks = make_masks(&grid, &Shape::unit_box(), 0.25).unwrap();
    let u = GridField::from_fn(grid, |x| Bump::Gauss.eval(x, &[0.5], 0.3));
    let direct = nl_gradient(&u, &cfg, &masks).unwrap();
    let conv = nl_gradient_conv(&u, &cfg.table).unwrap();
    let diff = GridField { values: direct.values.iter().zip(&conv.values).map(|(a, b)| a - b).collect(), ..u.clone() };
    let rel = lp_norm(&diff, &masks.omega, 2.0) / lp_norm(&direct, &masks.omega, 2.0);
    assert!(rel <= 1e-2, "relative distance {rel}");
}

#[test]
fn ibp_trivial_cases_and_duality() {
    let cfg = config(1, 0.5, SingularRule::MomentMatched);
    let grid = GridSpec::new(1, &[-0.5], 2.0, 256).unwrap();
    let masks = make_masks(&grid, &Shape::unit_box(), 0.25).unwrap();
    let op = NlOperator::new(&cfg, &grid).unwrap();
    let u = GridField::from_fn(grid, |x| x[0].cos() + x[0] * x[0]);
    let phi = GridField::from_fn(grid, |x| (3.0 * x[0]).sin() + 0.5).masked(&masks.omega);
    assert_eq!(ibp_residual(&GridField::zeros(grid, 1), &phi, &op, &masks).unwrap(), 0.0);
    assert_eq!(ibp_residual(&u, &GridField::zeros(grid, 1), &op, &masks).unwrap(), 0.0);
    let t = ibp_terms(&u, &phi, &op, &masks).unwrap();
    assert!(t.residual() <= 1e-13 * t.gradient_term.abs().max(1.0));

    // Test fields supported in the inner set have no collar interaction at all.
    let inner = GridField::from_fn(grid, |x| Bump::Gauss.eval(x, &[0.5], 0.24)).masked(&masks.inner);
    let t = ibp_terms(&u, &inner, &op, &masks).unwrap();
    assert_eq!(t.collar_term, 0.0);
    assert_relative_eq!(t.gradient_term, -t.divergence_term, max_relative = 1e-12);

    let outside = GridField::from_fn(grid, |_| 1.0);
    assert!(ibp_terms(&u, &outside, &op, &masks).is_err());
}
