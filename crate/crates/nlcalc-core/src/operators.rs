//! Grid evaluation of the nonlocal gradient and divergence.
//!
//! Both operators share one odd vector stencil `K_k = c_{n,s} hⁿ w̄(|z|) z / |z|^{n+1+s}`
//! at `z = k h ≠ 0`:
//!
//! ```text
//! (D u)_i   = Σ_k K_k (u_i - u_{i-k})
//! (div φ)_i = Σ_k K_k · (φ_i - φ_{i-k})
//! ```
//!
//! so that `Σ D u · φ = -Σ u div φ` holds exactly on the whole lattice. The contribution
//! of the cell around the singularity is added as a central difference on the nearest
//! neighbours, with a weight chosen by the [`SingularRule`].

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{make_masks, DomainMasks, GridField, GridSpec, Shape};
use crate::kernels::{ball_volume, cns_const, sphere_area, CutoffProfile, Params, RadialKernelTable};
use crate::quad;
use crate::spectral::spectral_gradient;

/// Treatment of the cell that contains the singularity `y = x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularRule {
    /// Weight that makes the stencil exact on linear functions.
    MomentMatched,
    /// Exact radial integral of the first-order expansion over the ball of cell volume.
    BallAverage,
    /// The singular cell is dropped.
    Skip,
}

/// Kernel and quadrature choices for the grid operators.
#[derive(Debug, Clone)]
pub struct OperatorConfig {
    pub table: RadialKernelTable,
    pub rule: SingularRule,
}

impl OperatorConfig {
    pub fn new(params: &Params, cutoff: &CutoffProfile, rule: SingularRule) -> Result<Self> {
        Ok(OperatorConfig { table: RadialKernelTable::new(params, cutoff)?, rule })
    }

    pub fn params(&self) -> &Params {
        &self.table.params
    }
}

/// Odd stencil of the nonlocal gradient on a lattice of spacing `h`.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub h: f64,
    pub radius_cells: usize,
    pub offsets: Vec<[i64; 2]>,
    pub weights: Vec<[f64; 2]>,
    /// Weight of the central difference that represents the singular cell.
    pub singular_weight: f64,
}

impl Stencil {
    pub fn build(cfg: &OperatorConfig, h: f64) -> Self {
        let p = cfg.params();
        let n = p.n;
        let cut = &cfg.table.cutoff;
        let d = cut.delta;
        let c = cns_const(p);
        let hn = h.powi(n as i32);
        let rc = (d / h).ceil() as i64;
        let jr = if n == 2 { rc } else { 0 };
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        let mut moment = 0.0;
        for i in -rc..=rc {
            for j in -jr..=jr {
                if i == 0 && j == 0 {
                    continue;
                }
                let z = [i as f64 * h, j as f64 * h];
                let r = (z[0] * z[0] + z[1] * z[1]).sqrt();
                let wr = cut.eval(r);
                if wr == 0.0 {
                    continue;
                }
                let f = c * hn * wr * r.powf(-(n as f64 + 1.0 + p.s));
                offsets.push([i, j]);
                weights.push([f * z[0], f * z[1]]);
                moment += f * z[0] * z[0];
            }
        }
        let alpha = match cfg.rule {
            SingularRule::MomentMatched => cfg.table.linear_response() - moment,
            SingularRule::BallAverage => {
                let radius = (hn / ball_volume(n)).powf(1.0 / n as f64);
                let b = cut.plateau().min(radius);
                let mut integral = cut.a0 * b.powf(1.0 - p.s) / (1.0 - p.s);
                if radius > b {
                    integral += quad::integrate(|t| cut.eval(t) * t.powf(-p.s), b, radius, 1e-15, 1e-13).value;
                }
                c / n as f64 * sphere_area(n) * integral
            }
            SingularRule::Skip => 0.0,
        };
        for a in 0..n {
            for sign in [-1i64, 1] {
                let mut o = [0i64; 2];
                o[a] = sign;
                let k = offsets.iter().position(|v| *v == o).expect("nearest neighbours lie inside the horizon");
                weights[k][a] += sign as f64 * alpha / (2.0 * h);
            }
        }
        let radius_cells = offsets.iter().map(|o| o[0].abs().max(o[1].abs())).max().unwrap_or(0) as usize;
        Stencil { h, radius_cells, offsets, weights, singular_weight: alpha }
    }

    /// Discrete Lipschitz bound `Σ_k |K_k| |k h|`, so that `|D u| ≤ bound · Lip(u)`.
    pub fn lipschitz_bound(&self) -> f64 {
        self.offsets
            .iter()
            .zip(&self.weights)
            .map(|(o, w)| {
                let r = self.h * ((o[0] * o[0] + o[1] * o[1]) as f64).sqrt();
                (w[0] * w[0] + w[1] * w[1]).sqrt() * r
            })
            .sum()
    }
}

/// Matrix-free nonlocal gradient and divergence bound to one grid.
#[derive(Debug, Clone)]
pub struct NlOperator {
    pub grid: GridSpec,
    pub params: Params,
    pub stencil: Stencil,
    linear: Vec<i64>,
}

impl NlOperator {
    pub fn new(cfg: &OperatorConfig, grid: &GridSpec) -> Result<Self> {
        if grid.n != cfg.params().n {
            return Err(Error::GridMismatch);
        }
        let stencil = Stencil::build(cfg, grid.h);
        let nc = grid.cells as i64;
        let linear = stencil
            .offsets
            .iter()
            .map(|o| if grid.n == 1 { o[0] } else { o[0] * nc + o[1] })
            .collect();
        Ok(NlOperator { grid: *grid, params: *cfg.params(), stencil, linear })
    }

    fn check_fit(&self, mask: &[bool]) -> Result<()> {
        for (i, m) in mask.iter().enumerate() {
            if *m && self.grid.cells_to_boundary(i) < self.stencil.radius_cells {
                return Err(Error::StencilOverflow { node: i, radius: self.stencil.radius_cells });
            }
        }
        Ok(())
    }

    /// Nonlocal gradient of `u` at the nodes of `mask`; zero elsewhere.
    pub fn gradient(&self, u: &GridField, mask: &[bool]) -> Result<GridField> {
        if u.grid != self.grid || u.components != 1 {
            return Err(Error::GridMismatch);
        }
        self.check_fit(mask)?;
        let n = self.grid.n;
        let len = self.grid.len();
        let vals: Vec<[f64; 2]> = (0..len)
            .into_par_iter()
            .map(|i| {
                if !mask[i] {
                    return [0.0; 2];
                }
                let ui = u.values[i];
                let mut acc = [0.0; 2];
                for (w, off) in self.stencil.weights.iter().zip(&self.linear) {
                    let du = ui - u.values[(i as i64 - off) as usize];
                    acc[0] += w[0] * du;
                    acc[1] += w[1] * du;
                }
                acc
            })
            .collect();
        let mut out = GridField::zeros(self.grid, n);
        for a in 0..n {
            for (i, v) in vals.iter().enumerate() {
                out.values[a * len + i] = v[a];
            }
        }
        Ok(out)
    }

    /// Nonlocal divergence of the vector field `phi` at the nodes of `mask`; zero elsewhere.
    pub fn divergence(&self, phi: &GridField, mask: &[bool]) -> Result<GridField> {
        if phi.grid != self.grid || phi.components != self.grid.n {
            return Err(Error::GridMismatch);
        }
        self.check_fit(mask)?;
        let n = self.grid.n;
        let len = self.grid.len();
        let vals: Vec<f64> = (0..len)
            .into_par_iter()
            .map(|i| {
                if !mask[i] {
                    return 0.0;
                }
                let mut acc = 0.0;
                for (w, off) in self.stencil.weights.iter().zip(&self.linear) {
                    let j = (i as i64 - off) as usize;
                    for a in 0..n {
                        acc += w[a] * (phi.values[a * len + i] - phi.values[a * len + j]);
                    }
                }
                acc
            })
            .collect();
        GridField::scalar(self.grid, vals)
    }
}

/// Nonlocal gradient on `Ω`.
pub fn nl_gradient(u: &GridField, cfg: &OperatorConfig, masks: &DomainMasks) -> Result<GridField> {
    NlOperator::new(cfg, &u.grid)?.gradient(u, &masks.omega)
}

/// Nonlocal divergence on `Ω_δ` of a vector field supported in `Ω`.
pub fn nl_divergence(phi: &GridField, cfg: &OperatorConfig, masks: &DomainMasks) -> Result<GridField> {
    NlOperator::new(cfg, &phi.grid)?.divergence(phi, &masks.omega_delta)
}

/// Evaluates `Q ∗ ∇u` with a spectral gradient and direct convolution with the lattice kernel.
pub fn nl_gradient_conv(u: &GridField, table: &RadialKernelTable) -> Result<GridField> {
    let grid = u.grid;
    let n = grid.n;
    let d = table.params.delta;
    let peak = u.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..grid.len() {
        if u.values[i].abs() > 1e-14 * peak && (grid.cells_to_boundary(i) as f64 + 0.5) * grid.h < d {
            return Err(Error::SupportOverflow);
        }
    }
    let du = spectral_gradient(u, 2)?;
    let lat = table.lattice(grid.h);
    let hn = grid.cell_volume();
    let len = grid.len();
    let vals: Vec<[f64; 2]> = (0..len)
        .into_par_iter()
        .map(|i| {
            let mut acc = [0.0; 2];
            for (o, q) in lat.offsets.iter().zip(&lat.values) {
                if let Some(j) = grid.offset(i, [-o[0], -o[1]]) {
                    for (a, slot) in acc.iter_mut().enumerate().take(n) {
                        *slot += q * du.values[a * len + j];
                    }
                }
            }
            [acc[0] * hn, acc[1] * hn]
        })
        .collect();
    let mut out = GridField::zeros(grid, n);
    for a in 0..n {
        for (i, v) in vals.iter().enumerate() {
            out.values[a * len + i] = v[a];
        }
    }
    Ok(out)
}

/// The three integrals of the integration-by-parts identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbpTerms {
    /// `∫_Ω D u · φ`.
    pub gradient_term: f64,
    /// `∫_Ω u div φ`.
    pub divergence_term: f64,
    /// Collar interaction `∫_{Ω_δ \ Ω} u(y) ∫_Ω φ(x) · K(x - y) dx dy`.
    pub collar_term: f64,
}

impl IbpTerms {
    pub fn residual(&self) -> f64 {
        (self.gradient_term + self.divergence_term + self.collar_term).abs()
    }
}

fn dot_masked(a: &GridField, b: &GridField, mask: &[bool]) -> f64 {
    let len = a.grid.len();
    let mut acc = 0.0;
    for c in 0..a.components {
        let bc = if b.components == 1 { 0 } else { c };
        for i in 0..len {
            if mask[i] {
                acc += a.values[c * len + i] * b.values[bc * len + i];
            }
        }
    }
    acc * a.grid.cell_volume()
}

/// Evaluates the three integrals on the grid of `op`.
pub fn ibp_terms(u: &GridField, phi: &GridField, op: &NlOperator, masks: &DomainMasks) -> Result<IbpTerms> {
    let outside = phi
        .values
        .iter()
        .enumerate()
        .any(|(k, v)| *v != 0.0 && !masks.omega[k % phi.grid.len()]);
    if outside {
        return Err(Error::Domain("test field must vanish outside Ω".into()));
    }
    let g = op.gradient(u, &masks.omega)?;
    let div = op.divergence(phi, &masks.omega_delta)?;
    Ok(IbpTerms {
        gradient_term: dot_masked(&g, phi, &masks.omega),
        divergence_term: dot_masked(u, &div, &masks.omega),
        collar_term: dot_masked(u, &div, &masks.collar),
    })
}

/// Absolute value of the three-term sum evaluated on one grid.
pub fn ibp_residual(u: &GridField, phi: &GridField, op: &NlOperator, masks: &DomainMasks) -> Result<f64> {
    Ok(ibp_terms(u, phi, op, masks)?.residual())
}

/// One row of an integration-by-parts refinement study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbpRow {
    pub cells: usize,
    pub h: f64,
    pub terms: IbpTerms,
    /// Collar integral recomputed on a grid refined by the study's factor.
    pub collar_reference: f64,
    pub residual: f64,
}

/// Refinement study of the integration-by-parts identity.
///
/// On each grid the two volume integrals are evaluated at spacing `h`, while the
/// collar integral is evaluated independently at spacing `h / refine`. The residual
/// therefore measures the quadrature error of the identity rather than the exact
/// discrete cancellation that holds when all three terms share one stencil.
#[allow(clippy::too_many_arguments)]
pub fn ibp_refinement<U, P>(
    u: U,
    phi: P,
    cfg: &OperatorConfig,
    shape: &Shape,
    lo: &[f64],
    side: f64,
    cells: &[usize],
    refine: usize,
) -> Result<Vec<IbpRow>>
where
    U: Fn(&[f64]) -> f64 + Sync,
    P: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let d = cfg.params().delta;
    let sample_phi = |grid: &GridSpec, masks: &DomainMasks| -> GridField {
        let len = grid.len();
        let mut f = GridField::zeros(*grid, grid.n);
        for i in 0..len {
            if masks.omega[i] {
                let v = phi(&grid.coord(i)[..grid.n]);
                for a in 0..grid.n {
                    f.values[a * len + i] = v[a];
                }
            }
        }
        f
    };
    let mut rows = Vec::with_capacity(cells.len());
    for &nc in cells {
        let grid = GridSpec::new(cfg.params().n, lo, side, nc)?;
        let masks = make_masks(&grid, shape, d)?;
        let op = NlOperator::new(cfg, &grid)?;
        let uf = GridField::from_fn(grid, &u);
        let pf = sample_phi(&grid, &masks);
        let terms = ibp_terms(&uf, &pf, &op, &masks)?;

        let fine = GridSpec::new(grid.n, lo, side, nc * refine)?;
        let fmasks = make_masks(&fine, shape, d)?;
        let fop = NlOperator::new(cfg, &fine)?;
        let ufine = GridField::from_fn(fine, &u);
        let pfine = sample_phi(&fine, &fmasks);
        let fdiv = fop.divergence(&pfine, &fmasks.collar)?;
        let collar_reference = dot_masked(&ufine, &fdiv, &fmasks.collar);
        let residual = (terms.gradient_term + terms.divergence_term + collar_reference).abs();
        rows.push(IbpRow { cells: nc, h: grid.h, terms, collar_reference, residual });
    }
    Ok(rows)
}
