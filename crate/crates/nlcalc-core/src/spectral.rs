//! Continuum-scaled discrete Fourier transforms, the symbol `Q̂`, and the inverse kernel `V`.
//!
//! The transform convention is `f̂(ξ) = ∫ f(x) e^{-2πi x·ξ} dx`, approximated by
//! `hⁿ Σ_j f(x_j) e^{-2πi x_j·ξ}` on the grid frequencies `ξ = k / L`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec};
use crate::kernels::{cns_neg_const, smooth_step, sphere_area, CutoffProfile, Params, RadialKernelTable};
use crate::quad;

/// Discrete Fourier coefficients scaled to approximate the continuum transform.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: GridSpec,
    pub components: usize,
    /// Component-major modes in FFT order.
    pub modes: Vec<Complex64>,
}

impl SpectralField {
    pub fn component(&self, c: usize) -> &[Complex64] {
        let len = self.grid.len();
        &self.modes[c * len..(c + 1) * len]
    }

    /// Frequency magnitude `|ξ|` of a mode.
    pub fn radius(&self, idx: usize) -> f64 {
        let xi = self.grid.xi(idx);
        (xi[0] * xi[0] + xi[1] * xi[1]).sqrt()
    }
}

/// In-place unnormalised n-dimensional FFT on a cube grid.
pub(crate) fn fft_nd(data: &mut [Complex64], grid: &GridSpec, inverse: bool) {
    let nc = grid.cells;
    let mut planner = FftPlanner::<f64>::new();
    let plan = if inverse { planner.plan_fft_inverse(nc) } else { planner.plan_fft_forward(nc) };
    if grid.n == 1 {
        plan.process(data);
        return;
    }
    data.par_chunks_mut(nc).for_each(|row| plan.process(row));
    let mut t = vec![Complex64::new(0.0, 0.0); data.len()];
    for i in 0..nc {
        for j in 0..nc {
            t[j * nc + i] = data[i * nc + j];
        }
    }
    t.par_chunks_mut(nc).for_each(|row| plan.process(row));
    for i in 0..nc {
        for j in 0..nc {
            data[i * nc + j] = t[j * nc + i];
        }
    }
}

fn phase(grid: &GridSpec, idx: usize, sign: f64) -> Complex64 {
    let xi = grid.xi(idx);
    let mut arg = 0.0;
    for a in 0..grid.n {
        arg += (grid.lo[a] + 0.5 * grid.h) * xi[a];
    }
    Complex64::from_polar(1.0, sign * 2.0 * PI * arg)
}

/// Forward transform of real samples without the support check.
pub(crate) fn transform_real(values: &[f64], grid: &GridSpec) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    fft_nd(&mut data, grid, false);
    let hn = grid.cell_volume();
    data.par_iter_mut().enumerate().for_each(|(k, z)| *z *= phase(grid, k, -1.0) * hn);
    data
}

/// Inverse transform of one component of continuum-scaled modes.
pub(crate) fn inverse_complex(modes: &[Complex64], grid: &GridSpec) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = modes.iter().enumerate().map(|(k, z)| z * phase(grid, k, 1.0)).collect();
    fft_nd(&mut data, grid, true);
    let scale = 1.0 / (grid.len() as f64 * grid.cell_volume());
    data.iter_mut().for_each(|z| *z *= scale);
    data
}

/// Checks that the support of every component lies in the central half of the box.
pub fn check_padding(field: &GridField) -> Result<()> {
    let grid = field.grid;
    let peak = field.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Ok(());
    }
    let q = grid.cells / 4;
    let len = grid.len();
    for c in 0..field.components {
        for i in 0..len {
            if field.values[c * len + i].abs() > 1e-14 * peak && grid.cells_to_boundary(i) < q {
                return Err(Error::PaddingTooSmall);
            }
        }
    }
    Ok(())
}

/// Continuum-scaled forward transform of a field whose support sits in the central half of the box.
pub fn ft_forward(field: &GridField) -> Result<SpectralField> {
    check_padding(field)?;
    let len = field.grid.len();
    let mut modes = Vec::with_capacity(len * field.components);
    for c in 0..field.components {
        modes.extend(transform_real(field.component(c), &field.grid));
    }
    Ok(SpectralField { grid: field.grid, components: field.components, modes })
}

/// Inverse transform; returns the real part.
pub fn ft_inverse(spec: &SpectralField) -> GridField {
    let mut values = Vec::with_capacity(spec.modes.len());
    for c in 0..spec.components {
        values.extend(inverse_complex(spec.component(c), &spec.grid).iter().map(|z| z.re));
    }
    GridField { grid: spec.grid, components: spec.components, values }
}

/// Spectral gradient of a scalar field, evaluated on a grid padded by `pad`.
pub fn spectral_gradient(u: &GridField, pad: usize) -> Result<GridField> {
    let base = u.grid;
    let big = base.padded(pad)?;
    let shift = (big.cells - base.cells) / 2;
    let mut values = vec![0.0; big.len()];
    for i in 0..base.len() {
        let m = base.multi(i);
        let j = big.linear([m[0] + shift, if base.n == 2 { m[1] + shift } else { 0 }]);
        values[j] = u.values[i];
    }
    let modes = transform_real(&values, &big);
    let mut out = GridField::zeros(base, base.n);
    for a in 0..base.n {
        let d: Vec<Complex64> = modes
            .iter()
            .enumerate()
            .map(|(k, z)| z * Complex64::new(0.0, 2.0 * PI * big.xi(k)[a]))
            .collect();
        let back = inverse_complex(&d, &big);
        let comp = out.component_mut(a);
        for (i, slot) in comp.iter_mut().enumerate() {
            let m = base.multi(i);
            let j = big.linear([m[0] + shift, if base.n == 2 { m[1] + shift } else { 0 }]);
            *slot = back[j].re;
        }
    }
    Ok(out)
}

/// Samples `Q` on the origin-centred lattice with the spacing and size of `grid`.
pub fn q_field(table: &RadialKernelTable, grid: &GridSpec) -> Result<GridField> {
    let g = GridSpec::origin_centered(grid.n, grid.cells, grid.h)?;
    if 2.0 * table.params.delta > 0.5 * g.side() {
        return Err(Error::PaddingTooSmall);
    }
    let lat = table.lattice(g.h);
    let c = (g.cells / 2) as i64;
    let mut f = GridField::zeros(g, 1);
    for (o, v) in lat.offsets.iter().zip(&lat.values) {
        let m = [(c + o[0]) as usize, if g.n == 2 { (c + o[1]) as usize } else { 0 }];
        f.values[g.linear(m)] = *v;
    }
    Ok(f)
}

/// Transform `Q̂` of the lattice-sampled kernel on the origin-centred version of `grid`.
pub fn qhat(table: &RadialKernelTable, grid: &GridSpec) -> Result<SpectralField> {
    ft_forward(&q_field(table, grid)?)
}

/// Returns the smallest real part over all modes, with its index.
pub fn qhat_min(qhat: &SpectralField) -> (usize, f64) {
    qhat.modes
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, z)| if z.re < acc.1 { (i, z.re) } else { acc })
}

/// Fails with [`Error::NonpositiveQhat`] unless every mode is strictly positive.
pub fn check_positive(qhat: &SpectralField) -> Result<()> {
    let (index, value) = qhat_min(qhat);
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::NonpositiveQhat { index, value })
    }
}

/// Highest frequency used for asymptotic comparisons: half the Nyquist frequency.
pub fn usable_frequency(grid: &GridSpec) -> f64 {
    0.25 / grid.h
}

/// Shell averages of `Q̂(ξ) |2πξ|^{1-s}` at the requested radii.
///
/// A shell collects the modes with `||ξ| - r| ≤ 1/(2L)`.
pub fn qhat_tail_ratio(qhat: &SpectralField, params: &Params, radii: &[f64]) -> Result<Vec<f64>> {
    let nyquist = 0.5 / qhat.grid.h;
    let dr = 0.5 / qhat.grid.side();
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        if r > nyquist {
            return Err(Error::NyquistExceeded { radius: r, limit: nyquist });
        }
        if r <= 0.0 {
            return Err(Error::Domain("tail ratio needs a positive radius".into()));
        }
        let (sum, count) = (0..qhat.grid.len())
            .filter(|k| (qhat.radius(*k) - r).abs() <= dr)
            .fold((0.0, 0usize), |(s, c), k| (s + qhat.modes[k].re, c + 1));
        if count == 0 {
            return Err(Error::Domain(format!("no modes in the shell of radius {r}")));
        }
        out.push(sum / count as f64 * (2.0 * PI * r).powf(1.0 - params.s));
    }
    Ok(out)
}

/// Vector symbol `V̂(ξ) = -iξ / (2π|ξ|² Q̂(ξ))`, zero at `ξ = 0`.
pub fn vhat(qhat: &SpectralField, params: &Params) -> Result<SpectralField> {
    for (k, z) in qhat.modes.iter().enumerate() {
        if !(z.re > 0.0) {
            return Err(Error::NonpositiveQhat { index: k, value: z.re });
        }
    }
    let g = qhat.grid;
    let n = params.n;
    if g.n != n {
        return Err(Error::GridMismatch);
    }
    let len = g.len();
    let mut modes = vec![Complex64::new(0.0, 0.0); len * n];
    for k in 1..len {
        let xi = g.xi(k);
        let r2 = xi[0] * xi[0] + xi[1] * xi[1];
        if r2 == 0.0 {
            continue;
        }
        for a in 0..n {
            modes[a * len + k] = Complex64::new(0.0, -xi[a] / (2.0 * PI * r2 * qhat.modes[k].re));
        }
    }
    Ok(SpectralField { grid: g, components: n, modes })
}

/// The inverse kernel `V` together with its remainder `W = V - (c_{n,-s}/a0) x/|x|^{n+1-s}`.
#[derive(Debug, Clone)]
pub struct InverseKernelField {
    pub v: GridField,
    pub remainder: GridField,
    pub vhat: SpectralField,
    /// `Q̂(0)`, the `L¹` mass of `Q`.
    pub qhat0: f64,
    pub params: Params,
    pub a0: f64,
}

/// Inverts `V̂` on the origin-centred grid.
///
/// The periodic inverse misses the mean gradient of the whole-space kernel; the
/// term `x / (n Lⁿ Q̂(0))` restores it. The remainder is obtained by subtracting
/// the transform `-i ξ/|ξ| |2πξ|^{-s} / a0` of the comparison kernel mode by mode.
pub fn v_kernel(vhat: &SpectralField, qhat: &SpectralField, params: &Params, a0: f64) -> Result<InverseKernelField> {
    let g = vhat.grid;
    if !g.same_lattice(&qhat.grid) || vhat.components != params.n {
        return Err(Error::GridMismatch);
    }
    let n = params.n;
    let len = g.len();
    let qhat0 = qhat.modes[0].re;
    let slope = 1.0 / (n as f64 * g.side().powi(n as i32) * qhat0);
    let mut v = ft_inverse(vhat);
    let mut zhat = vhat.clone();
    for k in 1..len {
        let xi = g.xi(k);
        let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        let c = (2.0 * PI * r).powf(-params.s) / (a0 * r);
        for a in 0..n {
            zhat.modes[a * len + k] -= Complex64::new(0.0, -xi[a] * c);
        }
    }
    let mut w = ft_inverse(&zhat);
    for a in 0..n {
        for i in 0..len {
            let x = g.coord(i)[a];
            v.values[a * len + i] += slope * x;
            w.values[a * len + i] += slope * x;
        }
    }
    Ok(InverseKernelField { v, remainder: w, vhat: vhat.clone(), qhat0, params: *params, a0 })
}

/// Builds `Q̂`, checks positivity, and constructs `V` on an origin-centred grid of the given size.
pub fn inverse_kernel(table: &RadialKernelTable, cells: usize, h: f64) -> Result<InverseKernelField> {
    let grid = GridSpec::origin_centered(table.params.n, cells, h)?;
    let q = qhat(table, &grid)?;
    check_positive(&q)?;
    let vh = vhat(&q, &table.params)?;
    v_kernel(&vh, &q, &table.params, table.cutoff.a0)
}

impl InverseKernelField {
    /// Comparison kernel `(c_{n,-s}/a0) x/|x|^{n+1-s}` at a node, zero at the origin.
    pub fn comparison(&self, x: &[f64]) -> Vec<f64> {
        let n = self.params.n;
        let r = x[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 {
            return vec![0.0; n];
        }
        let c = cns_neg_const(&self.params) / self.a0 * r.powf(-(n as f64 + 1.0 - self.params.s));
        x[..n].iter().map(|v| c * v).collect()
    }

    /// Supremum of `|W|` over nodes with `0 < |x| ≤ radius`.
    pub fn remainder_sup(&self, radius: f64) -> f64 {
        let g = self.v.grid;
        (0..g.len())
            .filter(|i| {
                let r = node_radius(&g, *i);
                r > 0.0 && r <= radius
            })
            .map(|i| self.remainder.magnitude(i))
            .fold(0.0, f64::max)
    }

    /// Least-squares slope of `log|V|` against `log|x|` on the positive first axis, `r_lo ≤ |x| ≤ r_hi`.
    pub fn decay_slope(&self, r_lo: f64, r_hi: f64) -> f64 {
        let g = self.v.grid;
        let c = g.cells / 2;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for k in 1..c {
            let idx = g.linear([c + k, c]);
            let r = g.coord(idx)[0];
            if r < r_lo || r > r_hi {
                continue;
            }
            let m = self.v.magnitude(idx);
            if m > 0.0 {
                xs.push(r);
                ys.push(m);
            }
        }
        crate::loglog_slope(&xs, &ys)
    }
}

fn node_radius(g: &GridSpec, i: usize) -> f64 {
    let x = g.coord(i);
    (x[0] * x[0] + x[1] * x[1]).sqrt()
}

/// Maximum relative deviation of the lattice convolution `V ∗ Q` from `y / (σ_{n-1} |y|ⁿ)` on an annulus.
pub fn conv_identity_residual(field: &InverseKernelField, table: &RadialKernelTable, r0: f64, r1: f64) -> Result<f64> {
    let g = field.v.grid;
    let n = g.n;
    if r0 < g.h || r1 + table.params.delta >= 0.5 * g.side() - g.h {
        return Err(Error::PaddingTooSmall);
    }
    let lat = table.lattice(g.h);
    let hn = g.cell_volume();
    let sigma = sphere_area(n);
    let len = g.len();
    let targets: Vec<usize> = (0..len)
        .filter(|i| {
            let r = node_radius(&g, *i);
            r >= r0 && r <= r1
        })
        .collect();
    let worst = targets
        .par_iter()
        .map(|&i| {
            let mut acc = [0.0; 2];
            for (o, q) in lat.offsets.iter().zip(&lat.values) {
                let j = g.offset(i, [-o[0], -o[1]]).expect("annulus checked against the box");
                for (a, slot) in acc.iter_mut().enumerate().take(n) {
                    *slot += q * field.v.values[a * len + j];
                }
            }
            let x = g.coord(i);
            let r = node_radius(&g, i);
            let scale = 1.0 / (sigma * r.powi(n as i32));
            let mut num = 0.0;
            for a in 0..n {
                num += (hn * acc[a] - scale * x[a]).powi(2);
            }
            num.sqrt() / (scale * r)
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// Which identity of the vector Riesz family a Fourier oracle checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RieszMode {
    /// `((n-α-1)/γ(1+α)) x/|x|^{n-α+1}` against `-i ξ/|ξ| |2πξ|^{-α}`, for `n ≥ 2`, `0 < α < n-1`.
    VectorRieszN,
    /// `c_{1,-s} x/|x|^{2-s}` against `-i ξ/|ξ| |2πξ|^{-s}` in one dimension.
    VectorRiesz1,
    /// `x / (σ_{n-1} |x|ⁿ)` against `-i ξ/|ξ| / |2πξ|`.
    InverseLength,
}

/// Outcome of a Fourier oracle check.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub mode: RieszMode,
    pub n: usize,
    pub order: f64,
    pub band: (f64, f64),
    pub modes_checked: usize,
    pub max_rel_error: f64,
}

/// Compares the discrete transform of a truncated vector Riesz kernel with its analytic transform.
///
/// The kernel is multiplied by a smooth radial cut-off equal to one on `|x| ≤ R/2` and
/// zero for `|x| ≥ R = L/4`. The comparison band is `16/R ≤ |ξ| ≤ ν/8` with `ν` the
/// Nyquist frequency.
pub fn fourier_oracle_riesz(n: usize, order: f64, mode: RieszMode, cells: usize, side: f64) -> Result<OracleReport> {
    let (coef, expo, decay) = match mode {
        RieszMode::VectorRieszN => {
            if n < 2 || !(order > 0.0 && order < n as f64 - 1.0) {
                return Err(Error::Domain(format!("needs n ≥ 2 and 0 < α < n - 1, got n = {n}, α = {order}")));
            }
            let g = crate::kernels::gamma_const(n, 1.0 + order)?;
            ((n as f64 - order - 1.0) / g, n as f64 - order + 1.0, order)
        }
        RieszMode::VectorRiesz1 => {
            if n != 1 || !(order > 0.0 && order < 1.0) {
                return Err(Error::Domain(format!("needs n = 1 and 0 < s < 1, got n = {n}, s = {order}")));
            }
            let p = Params { n: 1, s: order, delta: 1.0, p: 2.0 };
            (cns_neg_const(&p), 2.0 - order, order)
        }
        RieszMode::InverseLength => {
            if n != 1 && n != 2 {
                return Err(Error::Domain(format!("dimension must be 1 or 2, got {n}")));
            }
            (1.0 / sphere_area(n), n as f64, 1.0)
        }
    };
    let lo = vec![-0.5 * side; n];
    let grid = GridSpec::new(n, &lo, side, cells)?;
    let big_r = 0.25 * side;
    let len = grid.len();
    let mut f = GridField::zeros(grid, n);
    for i in 0..len {
        let x = grid.coord(i);
        let r = node_radius(&grid, i);
        let chi = 1.0 - smooth_step((r / big_r - 0.5) / 0.5);
        if chi == 0.0 {
            continue;
        }
        for a in 0..n {
            f.values[a * len + i] = coef * x[a] / r.powf(expo) * chi;
        }
    }
    let spec = ft_forward(&f)?;
    let band = (16.0 / big_r, 0.0625 / grid.h);
    let mut worst = 0.0f64;
    let mut count = 0;
    for k in 0..len {
        let r = spec.radius(k);
        if r < band.0 || r > band.1 {
            continue;
        }
        let xi = grid.xi(k);
        let t = (2.0 * PI * r).powf(-decay) / r;
        let mut err = 0.0;
        for a in 0..n {
            let target = Complex64::new(0.0, -xi[a] * t);
            err += (spec.modes[a * len + k] - target).norm_sqr();
        }
        worst = worst.max(err.sqrt() / (t * r));
        count += 1;
    }
    Ok(OracleReport { mode, n, order, band, modes_checked: count, max_rel_error: worst })
}

/// Sine moment `∫ x_1 |x|^{-(n+s+1)} w̄(|x|) sin(2π r x_1) dx` by radial (and angular) quadrature.
pub fn sine_moment(cutoff: &CutoffProfile, params: &Params, r: f64) -> f64 {
    let s = params.s;
    let b = cutoff.plateau();
    let d = cutoff.delta;
    let radial = |rho: f64| -> f64 {
        if params.n == 1 {
            2.0 * cutoff.eval(rho) * rho.powf(-1.0 - s) * (2.0 * PI * r * rho).sin()
        } else {
            let ang = quad::integrate(
                |t: f64| t.cos() * (2.0 * PI * r * rho * t.cos()).sin(),
                0.0,
                2.0 * PI,
                1e-15,
                1e-12,
            );
            cutoff.eval(rho) * rho.powf(-1.0 - s) * ang.value
        }
    };
    let inner = quad::integrate_left_singular(radial, 0.0, b, -s, 1e-14, 1e-11);
    let outer = quad::integrate(radial, b, d, 1e-14, 1e-11);
    inner.value + outer.value
}

/// Relative deviation between `F(f ∗ g)` and `F(f) F(g)` for scalar fields on an origin-centred grid.
///
/// The convolution is evaluated directly as `hⁿ Σ_j f_j g_{i-j}`.
pub fn convolution_theorem_residual(f: &GridField, g: &GridField) -> Result<f64> {
    let grid = f.grid;
    if grid != g.grid || f.components != 1 || g.components != 1 {
        return Err(Error::GridMismatch);
    }
    let centre = GridSpec::origin_centered(grid.n, grid.cells, grid.h)?;
    if (centre.lo[0] - grid.lo[0]).abs() > 1e-12 * grid.h {
        return Err(Error::GridMismatch);
    }
    let len = grid.len();
    let c = (grid.cells / 2) as i64;
    let hn = grid.cell_volume();
    let conv: Vec<f64> = (0..len)
        .into_par_iter()
        .map(|i| {
            let mi = grid.multi(i);
            let mut acc = 0.0;
            for j in 0..len {
                if f.values[j] == 0.0 {
                    continue;
                }
                let mj = grid.multi(j);
                let off = [mi[0] as i64 - mj[0] as i64, mi[1] as i64 - mj[1] as i64];
                let a = off[0] + c;
                let b = if grid.n == 2 { off[1] + c } else { 0 };
                let cc = grid.cells as i64;
                if a < 0 || a >= cc || b < 0 || b >= cc {
                    continue;
                }
                acc += f.values[j] * g.values[grid.linear([a as usize, b as usize])];
            }
            acc * hn
        })
        .collect();
    let fc = GridField::scalar(grid, conv)?;
    let lhs = ft_forward(&fc)?;
    let ff = ft_forward(f)?;
    let gg = ft_forward(g)?;
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for k in 0..len {
        let prod = ff.modes[k] * gg.modes[k];
        worst = worst.max((lhs.modes[k] - prod).norm());
        scale = scale.max(prod.norm());
    }
    Ok(worst / scale)
}
