//! Representation formulas: the classical identity `φ = ∇φ ∗ x/(σ_{n-1}|x|ⁿ)` and the
//! nonlocal reconstruction `u = D u ∗ V`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{lp_norm, GridField, GridSpec};
use crate::kernels::{sphere_area, Params};
use crate::operators::{NlOperator, OperatorConfig};
use crate::spectral::{check_padding, fft_nd, inverse_complex, spectral_gradient, transform_real, InverseKernelField};

/// Errors of a reconstruction, measured on the support of the reference function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionReport {
    pub rel_l2_error: f64,
    pub rel_linf_error: f64,
    pub grid: GridSpec,
    pub params: Params,
}

/// Reconstructs `φ` from its gradient by linear discrete convolution with `x/(σ_{n-1}|x|ⁿ)`.
///
/// The gradient is spectral; the kernel is sampled at the lattice differences with the
/// singular cell set to its cell average, which vanishes by oddness.
pub fn classical_rep(phi: &GridField) -> Result<GridField> {
    check_padding(phi)?;
    let grid = phi.grid;
    let n = grid.n;
    let grad = spectral_gradient(phi, 2)?;
    // Linear convolution through a transform of twice the size.
    let nc = grid.cells;
    let big = GridSpec::new(n, &vec![0.0; n], 2.0 * grid.side(), 2 * nc)?;
    let blen = big.len();
    let sigma = sphere_area(n);
    let mut acc = vec![Complex64::new(0.0, 0.0); blen];
    for a in 0..n {
        let mut kernel = vec![Complex64::new(0.0, 0.0); blen];
        for (k, slot) in kernel.iter_mut().enumerate() {
            let m = big.multi(k);
            let mut z = [0.0; 2];
            for b in 0..n {
                let signed = if m[b] < nc { m[b] as f64 } else { m[b] as f64 - 2.0 * nc as f64 };
                z[b] = signed * grid.h;
            }
            let r = (z[0] * z[0] + z[1] * z[1]).sqrt();
            if r > 0.0 {
                *slot = Complex64::new(z[a] / (sigma * r.powi(n as i32)), 0.0);
            }
        }
        let mut field = vec![Complex64::new(0.0, 0.0); blen];
        let comp = grad.component(a);
        for i in 0..grid.len() {
            let m = grid.multi(i);
            field[big.linear(m)] = Complex64::new(comp[i], 0.0);
        }
        fft_nd(&mut kernel, &big, false);
        fft_nd(&mut field, &big, false);
        for k in 0..blen {
            acc[k] += kernel[k] * field[k];
        }
    }
    fft_nd(&mut acc, &big, true);
    let scale = grid.cell_volume() / blen as f64;
    let values = (0..grid.len()).map(|i| acc[big.linear(grid.multi(i))].re * scale).collect();
    GridField::scalar(grid, values)
}

/// Reconstructs `u = g ∗ V` spectrally from its nonlocal gradient `g`.
///
/// The product `ĝ V̂` determines every mode except `ξ = 0`. That mode equals `∫ u`, which
/// is recovered from the first moment of `g` through `∫ y · g(y) dy = -n Q̂(0) ∫ u`.
pub fn nl_ftc_reconstruct(g: &GridField, v: &InverseKernelField) -> Result<GridField> {
    let grid = g.grid;
    let n = grid.n;
    if !grid.same_lattice(&v.vhat.grid) || g.components != n {
        return Err(Error::GridMismatch);
    }
    check_padding(g)?;
    let len = grid.len();
    let mut uhat = vec![Complex64::new(0.0, 0.0); len];
    let mut moment = 0.0;
    for a in 0..n {
        let gh = transform_real(g.component(a), &grid);
        let vh = v.vhat.component(a);
        uhat.par_iter_mut().zip(gh.par_iter()).zip(vh.par_iter()).for_each(|((u, x), y)| *u += x * y);
        for i in 0..len {
            moment += grid.coord(i)[a] * g.values[a * len + i];
        }
    }
    moment *= grid.cell_volume();
    uhat[0] = Complex64::new(-moment / (n as f64 * v.qhat0), 0.0);
    let values = inverse_complex(&uhat, &grid).iter().map(|z| z.re).collect();
    GridField::scalar(grid, values)
}

fn support_mask(u: &GridField) -> Vec<bool> {
    let peak = u.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    u.values.iter().map(|v| v.abs() > 1e-12 * peak).collect()
}

/// Nonlocal gradient of `u` on every node within one horizon of its support.
pub fn gradient_near_support(u: &GridField, op: &NlOperator, delta: f64) -> Result<GridField> {
    let grid = u.grid;
    let supp = support_mask(u);
    let reach = (delta / grid.h).ceil() as usize + 1;
    let mut lo = [usize::MAX; 2];
    let mut hi = [0usize; 2];
    for (i, s) in supp.iter().enumerate() {
        if *s {
            let m = grid.multi(i);
            for a in 0..grid.n {
                lo[a] = lo[a].min(m[a]);
                hi[a] = hi[a].max(m[a]);
            }
        }
    }
    let mask: Vec<bool> = (0..grid.len())
        .map(|i| {
            let m = grid.multi(i);
            (0..grid.n).all(|a| m[a] + reach >= lo[a] && m[a] <= hi[a] + reach)
        })
        .collect();
    op.gradient(u, &mask)
}

/// Round trip `u → D u → g ∗ V`, with errors measured on the support of `u`.
pub fn ftc_roundtrip_report(u: &GridField, cfg: &OperatorConfig, v: &InverseKernelField) -> Result<ReconstructionReport> {
    let op = NlOperator::new(cfg, &u.grid)?;
    let g = gradient_near_support(u, &op, cfg.params().delta)?;
    let rec = nl_ftc_reconstruct(&g, v)?;
    let supp = support_mask(u);
    let diff = GridField { values: rec.values.iter().zip(&u.values).map(|(a, b)| a - b).collect(), ..u.clone() };
    Ok(ReconstructionReport {
        rel_l2_error: lp_norm(&diff, &supp, 2.0) / lp_norm(u, &supp, 2.0),
        rel_linf_error: lp_norm(&diff, &supp, f64::INFINITY) / lp_norm(u, &supp, f64::INFINITY),
        grid: u.grid,
        params: *cfg.params(),
    })
}

/// Test functions for reconstruction checks, centred at `c` with radius `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bump {
    /// `exp(-1/(1 - t²))` for `t = |x - c|/r < 1`.
    Gauss,
    /// `(1 - t²)⁴`, a piecewise polynomial with three continuous derivatives.
    Poly,
}

impl Bump {
    pub fn eval(&self, x: &[f64], c: &[f64], r: f64) -> f64 {
        let t2 = x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (r * r);
        if t2 >= 1.0 {
            return 0.0;
        }
        match self {
            Bump::Gauss => (-1.0 / (1.0 - t2)).exp(),
            Bump::Poly => (1.0 - t2).powi(4),
        }
    }
}

/// Runs the round trip for a bump of radius `0.3` centred in the unit cube.
///
/// The base grid covers `[-0.5, 1.5]ⁿ` with `cells` cells per axis; the transform grid
/// is the same-centre box padded by `pad`.
pub fn ftc_bump_roundtrip(cfg: &OperatorConfig, bump: Bump, cells: usize, pad: usize) -> Result<ReconstructionReport> {
    let n = cfg.params().n;
    let base = GridSpec::new(n, &vec![-0.5; n], 2.0, cells)?;
    let grid = base.padded(pad)?;
    let centre = vec![0.5; n];
    let u = GridField::from_fn(grid, |x| bump.eval(x, &centre, 0.3));
    let v = crate::spectral::inverse_kernel(&cfg.table, grid.cells, grid.h)?;
    ftc_roundtrip_report(&u, cfg, &v)
}

/// Classical reconstruction error for the same bump on the base grid of [`ftc_bump_roundtrip`].
pub fn classical_bump_error(n: usize, bump: Bump, cells: usize) -> Result<f64> {
    let grid = GridSpec::new(n, &vec![-0.5; n], 2.0, cells)?;
    let centre = vec![0.5; n];
    let u = GridField::from_fn(grid, |x| bump.eval(x, &centre, 0.3));
    let rec = classical_rep(&u)?;
    let supp = support_mask(&u);
    let diff = GridField { values: rec.values.iter().zip(&u.values).map(|(a, b)| a - b).collect(), ..u.clone() };
    Ok(lp_norm(&diff, &supp, 2.0) / lp_norm(&u, &supp, 2.0))
}
