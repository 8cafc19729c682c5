use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use nlcalc_core::ftc::{ftc_bump_roundtrip, Bump};
use nlcalc_core::inequalities::{
    hardy_ratio, morrey_ratio, poincare_ratio, poincare_sobolev_ratio, translation_exponent, trudinger_check, Family,
    TestEnsemble,
};
use nlcalc_core::io::read_nlf;
use nlcalc_core::operators::{ibp_refinement, nl_gradient};
use nlcalc_core::spectral::{
    check_positive, conv_identity_residual, qhat, qhat_min, qhat_tail_ratio, usable_frequency, v_kernel, vhat,
};
use nlcalc_core::variational::{minimize, EnergySpec, MinimizeConfig};
use nlcalc_core::{
    make_masks, CutoffProfile, GridField, GridSpec, NlOperator, OperatorConfig, Params, RadialKernelTable, Shape,
    SingularRule,
};

use crate::args::{BumpKind, Command, EnergyKind, FamilyKind, IneqKind, KernelOpts};
use crate::error::CliError;
use crate::report::{num, save_field, Stamp, Table};

/// Lower corner and side of the box `[-0.5, 1.5]ⁿ` holding every field; the domain is the unit cube.
const LO: f64 = -0.5;
const SIDE: f64 = 2.0;

fn base_grid(n: usize, cells: usize) -> Result<GridSpec, CliError> {
    Ok(GridSpec::new(n, &vec![LO; n], SIDE, cells)?)
}

fn operator_config(n: usize, k: &KernelOpts, p: f64) -> Result<OperatorConfig, CliError> {
    let params = Params::new(n, k.s, k.delta, p)?;
    let cutoff = CutoffProfile::new(k.a0, k.b0, k.delta)?;
    Ok(OperatorConfig::new(&params, &cutoff, SingularRule::MomentMatched)?)
}

fn stamp_kernel(stamp: &mut Stamp, n: usize, k: &KernelOpts) {
    stamp.set("n", n).set("s", k.s).set("delta", k.delta).set("a0", k.a0).set("b0", k.b0);
}

fn read_field(path: &Path) -> Result<nlcalc_core::io::NlfData, CliError> {
    let f = File::open(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    Ok(read_nlf(BufReader::new(f))?)
}

fn field_on(path: &Path, grid: GridSpec) -> Result<GridField, CliError> {
    let field = read_field(path)?.into_field(grid)?;
    if field.components != 1 {
        return Err(CliError::Validation(format!("{} must hold a scalar field", path.display())));
    }
    Ok(field)
}

pub fn run(cmd: Command, verbose: bool) -> Result<(), CliError> {
    match cmd {
        Command::Kernel { n, kernel, samples, out } => {
            if samples == 0 {
                return Err(CliError::Validation("samples must be positive".into()));
            }
            let params = Params::new(n, kernel.s, kernel.delta, 2.0)?;
            let cutoff = CutoffProfile::new(kernel.a0, kernel.b0, kernel.delta)?;
            let table = RadialKernelTable::new(&params, &cutoff)?;
            let mut t = Table::new(&["r", "wbar", "qbar", "Qbar"]);
            for k in 1..=samples {
                let r = kernel.delta * k as f64 / samples as f64;
                t.row(vec![num(r), num(cutoff.eval(r)), num(table.qbar(r)), num(table.q_radial(r))]);
            }
            let mut stamp = Stamp::new("kernel");
            stamp_kernel(&mut stamp, n, &kernel);
            stamp.set("samples", samples).set("mass", table.mass());
            t.save(&stamp, out.as_deref())
        }

        Command::Grad { kernel, input, out, format } => {
            let data = read_field(&input)?;
            let (n, cells) = (data.n, data.cells);
            let grid = base_grid(n, cells)?;
            let u = data.into_field(grid)?;
            let cfg = operator_config(n, &kernel, 2.0)?;
            let masks = make_masks(&grid, &Shape::unit_box(), kernel.delta)?;
            let g = nl_gradient(&u, &cfg, &masks)?;
            let mut stamp = Stamp::new("grad");
            stamp_kernel(&mut stamp, n, &kernel);
            stamp.set("N", cells).set("input", input.display());
            save_field(&g, &stamp, &out, format)
        }

        Command::IbpCheck { kernel, refine, factor, out } => {
            if refine.is_empty() || factor < 2 {
                return Err(CliError::Validation("need at least one grid and a refinement factor of at least 2".into()));
            }
            let cfg = operator_config(1, &kernel, 2.0)?;
            let u = |x: &[f64]| (2.0 * x[0]).cos() + x[0] * x[0];
            let phi = |x: &[f64]| vec![(3.0 * x[0]).sin() + 0.5];
            let rows = ibp_refinement(u, phi, &cfg, &Shape::unit_box(), &[LO], SIDE, &refine, factor)?;
            let mut t = Table::new(&["N", "h", "gradient_term", "divergence_term", "collar_term", "collar_reference", "residual"]);
            for r in &rows {
                t.row(vec![
                    r.cells.to_string(),
                    num(r.h),
                    num(r.terms.gradient_term),
                    num(r.terms.divergence_term),
                    num(r.terms.collar_term),
                    num(r.collar_reference),
                    num(r.residual),
                ]);
            }
            let mut stamp = Stamp::new("ibp-check");
            stamp_kernel(&mut stamp, 1, &kernel);
            let list: Vec<String> = refine.iter().map(|c| c.to_string()).collect();
            stamp.set("refine", list.join(";")).set("factor", factor);
            stamp.set("u", "cos(2x)+x^2").set("phi", "sin(3x)+0.5");
            t.save(&stamp, out.as_deref())
        }

        Command::Vkernel { n, kernel, cells, pad, out, format, report, inject_negative_qhat } => {
            if pad < 2 {
                return Err(CliError::Validation("pad must be at least 2".into()));
            }
            let cfg = operator_config(n, &kernel, 2.0)?;
            let h = 2.0 / cells as f64;
            let grid = GridSpec::origin_centered(n, cells * pad, h)?;
            let mut q = qhat(&cfg.table, &grid)?;
            if inject_negative_qhat {
                // Test hook: corrupt one mode so that the positivity check must fail.
                let k = q.modes.len() / 3;
                q.modes[k].re = -q.modes[k].re.abs() - 1.0;
            }
            check_positive(&q)?;
            let (_, qmin) = qhat_min(&q);
            let params = *cfg.params();
            let tail = qhat_tail_ratio(&q, &params, &[usable_frequency(&grid)])?[0];
            let vh = vhat(&q, &params)?;
            let v = v_kernel(&vh, &q, &params, kernel.a0)?;
            let side = grid.side();
            let w_sup = v.remainder_sup((0.25 * side).min(1.0));
            let slope = v.decay_slope(8.0 * h, 0.25 * kernel.delta);
            let conv = conv_identity_residual(&v, &cfg.table, 0.5 * kernel.delta, 2.0 * kernel.delta)?;
            let mut stamp = Stamp::new("vkernel");
            stamp_kernel(&mut stamp, n, &kernel);
            stamp.set("N", cells).set("pad", pad).set("h", h).set("side", side);
            let mut t = Table::new(&["qhat_min", "tail_ratio", "decay_slope", "w_sup", "conv_residual"]);
            t.row(vec![num(qmin), num(tail), num(slope), num(w_sup), num(conv)]);
            if verbose {
                eprintln!("vkernel: min Q̂ {qmin:e}, tail ratio {tail:.4}, decay slope {slope:.3}");
            }
            if let Some(p) = out {
                save_field(&v.v, &stamp, &p, format)?;
            }
            t.save(&stamp, report.as_deref())
        }

        Command::FtcCheck { n, kernel, cells, pad, bump, out } => {
            let cfg = operator_config(n, &kernel, 2.0)?;
            let shape = match bump {
                BumpKind::Gauss => Bump::Gauss,
                BumpKind::Poly => Bump::Poly,
            };
            let mut t = Table::new(&["N", "rel_l2", "rel_linf"]);
            for c in [cells, 2 * cells] {
                let r = ftc_bump_roundtrip(&cfg, shape, c, pad)?;
                if verbose {
                    eprintln!("ftc-check: N = {c}, relative L2 error {:.3e}", r.rel_l2_error);
                }
                t.row(vec![c.to_string(), num(r.rel_l2_error), num(r.rel_linf_error)]);
            }
            let mut stamp = Stamp::new("ftc-check");
            stamp_kernel(&mut stamp, n, &kernel);
            stamp.set("N", cells).set("pad", pad).set("bump", format!("{bump:?}").to_lowercase());
            let path = out.unwrap_or_else(|| "report.csv".into());
            t.save(&stamp, Some(&path))
        }

        Command::Ineq { kind, n, kernel, p, q, cells, members, seed, family, out } => {
            run_ineq(kind, n, &kernel, p, q, cells, members, seed, family, out.as_deref(), verbose)
        }

        Command::Minimize {
            n,
            kernel,
            energy,
            p,
            cells,
            source,
            datum,
            tol,
            max_iters,
            momentum,
            out,
            format,
            trace,
        } => {
            let grid = base_grid(n, cells)?;
            let pexp = match energy {
                EnergyKind::Quadratic => 2.0,
                EnergyKind::Plaplace => p.unwrap_or(4.0),
            };
            if pexp.is_nan() || pexp <= 1.0 {
                return Err(CliError::Validation(format!("growth exponent must exceed 1, got {pexp}")));
            }
            let cfg = operator_config(n, &kernel, pexp)?;
            let masks = make_masks(&grid, &Shape::unit_box(), kernel.delta)?;
            let op = NlOperator::new(&cfg, &grid)?;
            let f = source.as_deref().map(|s| field_on(s, grid)).transpose()?;
            let spec = match energy {
                EnergyKind::Quadratic => EnergySpec::quadratic_with_source(f),
                EnergyKind::Plaplace => EnergySpec::p_laplace(pexp, f),
            };
            let g = match &datum {
                Some(d) => field_on(d, grid)?,
                None => GridField::zeros(grid, 1),
            };
            let mut mc = MinimizeConfig::new(g);
            mc.tol = tol;
            mc.max_iters = max_iters;
            mc.momentum = momentum;
            mc.validate(&masks)?;
            let r = minimize(&spec, &mc, &masks, &op)?;
            let mut stamp = Stamp::new("minimize");
            stamp_kernel(&mut stamp, n, &kernel);
            stamp
                .set("energy", format!("{energy:?}").to_lowercase())
                .set("p", pexp)
                .set("N", cells)
                .set("source", source.as_ref().map_or("none".to_string(), |s| s.display().to_string()))
                .set("datum", datum.as_ref().map_or("zero".to_string(), |s| s.display().to_string()))
                .set("tol", num(tol))
                .set("max_iters", max_iters)
                .set("momentum", momentum);
            let mut result = stamp.clone();
            result
                .set("converged", r.converged)
                .set("iterations", r.iterations)
                .set("first_order_residual", r.first_order_residual)
                .set("strong_residual", r.strong_residual);
            if verbose {
                eprintln!("minimize: {} iterations, converged = {}", r.iterations, r.converged);
            }
            if let Some(path) = out {
                save_field(&r.u, &stamp, &path, format)?;
            }
            let mut t = Table::new(&["iter", "energy"]);
            for (k, e) in r.energy_trace.iter().enumerate() {
                t.row(vec![k.to_string(), num(*e)]);
            }
            t.save(&result, trace.as_deref())
        }
    }
}

/// Default exponent for the inequalities that need `sp < n`: midway between 1 and `n/s`, at most 2.
fn subcritical_p(n: usize, s: f64) -> f64 {
    (0.5 * (1.0 + n as f64 / s)).min(2.0)
}

#[allow(clippy::too_many_arguments)]
fn run_ineq(
    kind: IneqKind,
    n: usize,
    kernel: &KernelOpts,
    p: Option<f64>,
    q: Option<f64>,
    cells: Option<usize>,
    members: usize,
    seed: u64,
    family: FamilyKind,
    out: Option<&Path>,
    verbose: bool,
) -> Result<(), CliError> {
    if members == 0 {
        return Err(CliError::Validation("members must be positive".into()));
    }
    // Validate before the order enters the default exponent.
    Params::new(n, kernel.s, kernel.delta, 2.0)?;
    let p = p.unwrap_or(match kind {
        IneqKind::Trudinger => n as f64 / kernel.s,
        IneqKind::Morrey => 2.0 * n as f64 / kernel.s,
        IneqKind::Sobolev | IneqKind::Hardy => subcritical_p(n, kernel.s),
        IneqKind::Poincare | IneqKind::Translation => 2.0,
    });
    let cells = cells.unwrap_or(if n == 1 { 256 } else { 64 });
    let grid = base_grid(n, cells)?;
    let cfg = operator_config(n, kernel, p)?;
    let masks = make_masks(&grid, &Shape::unit_box(), kernel.delta)?;
    let op = NlOperator::new(&cfg, &grid)?;
    let fam = match family {
        FamilyKind::Bumps => Family::Bumps,
        FamilyKind::Trig => Family::RandomTrigBumps,
    };
    let ens = TestEnsemble::generate(&grid, &Shape::unit_box(), kernel.delta, members, seed, fam)?;

    let mut stamp = Stamp::new("ineq");
    stamp.set("inequality", format!("{kind:?}").to_lowercase());
    stamp_kernel(&mut stamp, n, kernel);
    stamp
        .set("p", p)
        .set("N", cells)
        .set("members", members)
        .set("seed", seed)
        .set("family", format!("{family:?}").to_lowercase());

    let ratio_table = |ratios: &[f64]| {
        let mut t = Table::new(&["member", "ratio"]);
        for (k, r) in ratios.iter().enumerate() {
            t.row(vec![k.to_string(), num(*r)]);
        }
        t
    };
    let (table, summary) = match kind {
        IneqKind::Poincare => {
            let r = poincare_ratio(&ens, p, &op, &masks)?;
            (ratio_table(&r.ratios), r.max_ratio)
        }
        IneqKind::Sobolev => {
            let q = q.unwrap_or(p);
            stamp.set("q", q);
            let r = poincare_sobolev_ratio(&ens, p, q, &op, &masks)?;
            (ratio_table(&r.ratios), r.max_ratio)
        }
        IneqKind::Hardy => {
            let origin = vec![0.5; n];
            stamp.set("origin", "centre");
            let r = hardy_ratio(&ens, p, &op, &masks, &origin)?;
            (ratio_table(&r.ratios), r.max_ratio)
        }
        IneqKind::Morrey => {
            let r = morrey_ratio(&ens, p, &op, &masks, seed)?;
            let mut t = Table::new(&["member", "holder", "sup"]);
            for (k, (a, b)) in r.holder.ratios.iter().zip(&r.sup.ratios).enumerate() {
                t.row(vec![k.to_string(), num(*a), num(*b)]);
            }
            (t, r.holder.max_ratio)
        }
        IneqKind::Trudinger => {
            let c1_grid = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
            let cap = 10.0;
            stamp.set("c2_cap", cap);
            let r = trudinger_check(&ens, p, &op, &masks, &c1_grid, cap)?;
            stamp.set("chosen_c1", r.chosen_c1.map_or("none".to_string(), num));
            let mut t = Table::new(&["c1", "value"]);
            for (c, v) in r.c1_grid.iter().zip(&r.values) {
                t.row(vec![num(*c), num(*v)]);
            }
            (t, r.chosen_c1.unwrap_or(f64::NAN))
        }
        IneqKind::Translation => {
            let shifts: Vec<usize> = (1..=10).collect();
            stamp.set("shifts", "1..10");
            let mut t = Table::new(&["member", "exponent"]);
            let mut worst = f64::INFINITY;
            for (k, u) in ens.functions.iter().enumerate() {
                let e = translation_exponent(u, p, &masks.omega, &shifts)?;
                worst = worst.min(e);
                t.row(vec![k.to_string(), num(e)]);
            }
            (t, worst)
        }
    };
    if verbose {
        eprintln!("ineq {kind:?}: summary {summary}");
    }
    table.save(&stamp, out)
}
