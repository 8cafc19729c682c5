//! Kernels and constants of the truncated fractional gradient.
//!
//! A [`CutoffProfile`] describes the radial cut-off `w̄(r)`, equal to `a0` on the
//! plateau `[0, b0 δ]` and decaying smoothly to zero at the horizon `δ`. The
//! [`RadialKernelTable`] tabulates the profile `q̄(t)` of the kernel `Q` for which
//! the nonlocal gradient is the convolution `Q ∗ ∇u`.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quad;

/// Problem parameters shared by every module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    /// Spatial dimension, 1 or 2.
    pub n: usize,
    /// Fractional order in `(0, 1)`.
    pub s: f64,
    /// Horizon length.
    pub delta: f64,
    /// Integrability exponent `p ≥ 1`.
    pub p: f64,
}

impl Params {
    pub fn new(n: usize, s: f64, delta: f64, p: f64) -> Result<Self> {
        let params = Params { n, s, delta, p };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n != 1 && self.n != 2 {
            return Err(Error::InvalidParams(format!("dimension must be 1 or 2, got {}", self.n)));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::InvalidParams(format!("order s must lie in (0, 1), got {}", self.s)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParams(format!("horizon must be positive, got {}", self.delta)));
        }
        if !(self.p >= 1.0) {
            return Err(Error::InvalidParams(format!("exponent p must be at least 1, got {}", self.p)));
        }
        Ok(())
    }

    /// Hölder conjugate `p' = p / (p - 1)`; infinite for `p = 1`.
    pub fn p_conjugate(&self) -> f64 {
        if self.p == 1.0 {
            f64::INFINITY
        } else {
            self.p / (self.p - 1.0)
        }
    }

    /// Fractional Sobolev exponent `np / (n - sp)` when `sp < n`.
    pub fn sobolev_exponent(&self) -> Option<f64> {
        let n = self.n as f64;
        let sp = self.s * self.p;
        (sp < n).then(|| n * self.p / (n - sp))
    }

    /// Exponent `n - 1 + s` of the kernel singularities.
    pub fn kernel_exponent(&self) -> f64 {
        self.n as f64 - 1.0 + self.s
    }
}

/// Surface area `σ_{n-1}` of the unit sphere in dimension `n` (2 for n = 1, 2π for n = 2).
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0)
}

/// Volume of the unit ball in dimension `n`.
pub fn ball_volume(n: usize) -> f64 {
    sphere_area(n) / n as f64
}

fn gamma_formula(n: usize, s: f64) -> f64 {
    let n = n as f64;
    PI.powf(n / 2.0) * 2f64.powf(s) * gamma(s / 2.0) / gamma((n - s) / 2.0)
}

/// Riesz normalisation constant `γ(s) = π^{n/2} 2^s Γ(s/2) / Γ((n-s)/2)` for `0 < s < n`.
pub fn gamma_const(n: usize, s: f64) -> Result<f64> {
    if n == 0 || !(s > 0.0 && s < n as f64) {
        return Err(Error::Domain(format!("gamma constant needs 0 < s < n, got n = {n}, s = {s}")));
    }
    Ok(gamma_formula(n, s))
}

/// Constant `c_{n,s} = (n - 1 + s) / γ(1 - s)` of the nonlocal gradient.
pub fn cns_const(params: &Params) -> f64 {
    params.kernel_exponent() / gamma_formula(params.n, 1.0 - params.s)
}

/// Constant `c_{n,-s} = (n - 1 - s) / γ(1 + s)` of the fractional integration kernel.
///
/// For `n = 1` the value `γ(1 + s)` is taken from the same closed formula, where
/// it is negative, so that the constant itself stays positive.
pub fn cns_neg_const(params: &Params) -> f64 {
    (params.n as f64 - 1.0 - params.s) / gamma_formula(params.n, 1.0 + params.s)
}

/// Smooth monotone step: 0 for `t ≤ 0`, 1 for `t ≥ 1`, with all derivatives vanishing at both ends.
pub fn smooth_step(t: f64) -> f64 {
    fn sfun(t: f64) -> f64 {
        if t > 0.0 {
            (-1.0 / t).exp()
        } else {
            0.0
        }
    }
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = sfun(t);
    let b = sfun(1.0 - t);
    a / (a + b)
}

/// Radial cut-off `w̄(r)`: plateau of height `a0` on `[0, b0 δ]`, smooth decay to zero at `δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffProfile {
    pub a0: f64,
    pub b0: f64,
    pub delta: f64,
}

impl CutoffProfile {
    pub fn new(a0: f64, b0: f64, delta: f64) -> Result<Self> {
        if !(a0 > 0.0 && a0.is_finite()) {
            return Err(Error::InvalidParams(format!("plateau height must be positive, got {a0}")));
        }
        if !(b0 > 0.0 && b0 < 1.0) {
            return Err(Error::InvalidParams(format!("plateau fraction must lie in (0, 1), got {b0}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParams(format!("horizon must be positive, got {delta}")));
        }
        Ok(CutoffProfile { a0, b0, delta })
    }

    /// Default profile `a0 = 1`, `b0 = 1/2` with the given horizon.
    pub fn standard(delta: f64) -> Result<Self> {
        Self::new(1.0, 0.5, delta)
    }

    /// Rescales `a0` so that `∫ ρ = 1` for the given order and dimension.
    pub fn normalized(self, params: &Params) -> Self {
        let unit = CutoffProfile { a0: 1.0, ..self };
        let mass = rho_mass(&unit, params);
        CutoffProfile { a0: 1.0 / mass, ..self }
    }

    /// Radius of the plateau, `b0 δ`.
    pub fn plateau(&self) -> f64 {
        self.b0 * self.delta
    }

    pub fn eval(&self, r: f64) -> f64 {
        let b = self.plateau();
        if r <= b {
            self.a0
        } else if r >= self.delta {
            0.0
        } else {
            let t = (r - b) / (self.delta - b);
            self.a0 * smooth_step(1.0 - t)
        }
    }
}

/// Evaluates the cut-off at radius `r`.
pub fn cutoff_eval(cutoff: &CutoffProfile, r: f64) -> f64 {
    cutoff.eval(r)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Radial profile of `ρ(x) = w̄(|x|) / (γ(1-s) |x|^{n-1+s})`.
pub fn rho_radial(cutoff: &CutoffProfile, params: &Params, r: f64) -> f64 {
    let g1 = gamma_formula(params.n, 1.0 - params.s);
    cutoff.eval(r) / (g1 * r.powf(params.kernel_exponent()))
}

/// Evaluates `ρ` at a nonzero point.
pub fn rho_eval(cutoff: &CutoffProfile, params: &Params, x: &[f64]) -> Result<f64> {
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::Singular);
    }
    Ok(rho_radial(cutoff, params, r))
}

/// Total mass `∫ ρ` over the whole space.
pub fn rho_mass(cutoff: &CutoffProfile, params: &Params) -> f64 {
    let s = params.s;
    let b = cutoff.plateau();
    let g1 = gamma_formula(params.n, 1.0 - s);
    let inner = cutoff.a0 * b.powf(1.0 - s) / (1.0 - s);
    let outer = quad::integrate(|r| cutoff.eval(r) * r.powf(-s), b, cutoff.delta, 1e-14, 1e-13).value;
    sphere_area(params.n) * (inner + outer) / g1
}

/// Riesz potential `I_s(x) = 1 / (γ(s) |x|^{n-s})`.
pub fn riesz_eval(n: usize, s: f64, x: &[f64]) -> Result<f64> {
    let g = gamma_const(n, s)?;
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::Singular);
    }
    Ok(1.0 / (g * r.powf(n as f64 - s)))
}

/// Default number of table intervals on the transition `[b0 δ, δ]`.
pub const DEFAULT_SAMPLES: usize = 2048;

/// Tabulated radial profile `q̄(t)` with its closed-form inner segment.
#[derive(Debug, Clone)]
pub struct RadialKernelTable {
    pub params: Params,
    pub cutoff: CutoffProfile,
    /// Strictly increasing radii covering `[b0 δ, δ]`.
    pub radii: Vec<f64>,
    /// Values of `q̄` at `radii`.
    pub values: Vec<f64>,
    /// Derivatives of `q̄` at `radii`.
    pub slopes: Vec<f64>,
    /// Coefficient of the inner segment `q̄(t) = a0 + z0 t^{n-1+s}`.
    pub z0: f64,
    gamma1: f64,
}

/// Lattice samples of `Q` on a grid of spacing `h`, with offsets in cells.
#[derive(Debug, Clone)]
pub struct LatticeKernel {
    pub h: f64,
    pub radius_cells: usize,
    pub offsets: Vec<[i64; 2]>,
    pub values: Vec<f64>,
}

impl RadialKernelTable {
    pub fn new(params: &Params, cutoff: &CutoffProfile) -> Result<Self> {
        Self::with_samples(params, cutoff, DEFAULT_SAMPLES)
    }

    pub fn with_samples(params: &Params, cutoff: &CutoffProfile, samples: usize) -> Result<Self> {
        params.validate()?;
        if (params.delta - cutoff.delta).abs() > 1e-15 * params.delta {
            return Err(Error::InvalidParams(format!(
                "cut-off horizon {} differs from parameter horizon {}",
                cutoff.delta, params.delta
            )));
        }
        if samples < 8 {
            return Err(Error::InvalidParams("kernel table needs at least 8 samples".into()));
        }
        let m = params.kernel_exponent();
        let q = params.n as f64 + params.s;
        let b = cutoff.plateau();
        let d = cutoff.delta;
        let radii: Vec<f64> = (0..=samples).map(|j| b + (d - b) * j as f64 / samples as f64).collect();
        // Tail integrals ∫_t^δ w̄ r^{-(n+s)} dr accumulated panel by panel from the horizon inwards.
        let mut tail = vec![0.0; samples + 1];
        for j in (0..samples).rev() {
            let panel = quad::integrate(|r| cutoff.eval(r) * r.powf(-q), radii[j], radii[j + 1], 1e-16, 1e-14);
            tail[j] = tail[j + 1] + panel.value;
        }
        let values: Vec<f64> = radii.iter().zip(&tail).map(|(t, i)| m * t.powf(m) * i).collect();
        let slopes: Vec<f64> = radii
            .iter()
            .zip(&values)
            .map(|(t, v)| m / t * (v - cutoff.eval(*t)))
            .collect();
        let mut table = RadialKernelTable {
            params: *params,
            cutoff: *cutoff,
            radii,
            values,
            slopes,
            z0: 0.0,
            gamma1: gamma_formula(params.n, 1.0 - params.s),
        };
        table.z0 = (table.qbar_quadrature(b) - cutoff.a0) / b.powf(m);
        Ok(table)
    }

    /// `γ(1 - s)`.
    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    /// Evaluates `q̄(t)` by adaptive quadrature of its defining integral.
    ///
    /// This branch never uses the closed inner formula; the plateau part of the
    /// integral is integrated numerically in the variable `log r`.
    pub fn qbar_quadrature(&self, t: f64) -> f64 {
        let m = self.params.kernel_exponent();
        let q = self.params.n as f64 + self.params.s;
        let b = self.cutoff.plateau();
        let d = self.cutoff.delta;
        if t >= d {
            return 0.0;
        }
        if t <= 0.0 {
            return self.cutoff.a0;
        }
        let lo = t.max(b);
        let mut i = quad::integrate(|r| self.cutoff.eval(r) * r.powf(-q), lo, d, 1e-15, 1e-14).value;
        if t < b {
            // ∫_t^b a0 r^{-q} dr with r = t e^u.
            let top = (b / t).ln();
            let a0 = self.cutoff.a0;
            let inner = quad::integrate(|u| a0 * t.powf(1.0 - q) * (u * (1.0 - q)).exp(), 0.0, top, 1e-15, 1e-14);
            i += inner.value;
        }
        m * t.powf(m) * i
    }

    /// Evaluates `q̄(t)`: closed form on the plateau, cubic Hermite interpolation of the table beyond.
    pub fn qbar(&self, t: f64) -> f64 {
        let b = self.cutoff.plateau();
        let d = self.cutoff.delta;
        if t <= b {
            return self.cutoff.a0 + self.z0 * t.max(0.0).powf(self.params.kernel_exponent());
        }
        if t >= d {
            return 0.0;
        }
        let n = self.radii.len() - 1;
        let step = (d - b) / n as f64;
        let j = (((t - b) / step) as usize).min(n - 1);
        let (x0, x1) = (self.radii[j], self.radii[j + 1]);
        let hh = x1 - x0;
        let u = (t - x0) / hh;
        let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
        let h10 = u * (1.0 - u) * (1.0 - u);
        let h01 = u * u * (3.0 - 2.0 * u);
        let h11 = u * u * (u - 1.0);
        // q̄ is nonnegative; the interpolant can dip below zero by rounding where q̄ ≈ 0 near δ.
        let v = h00 * self.values[j] + h10 * hh * self.slopes[j] + h01 * self.values[j + 1] + h11 * hh * self.slopes[j + 1];
        v.max(0.0)
    }

    /// Radial profile `Q̄(r) = q̄(r) / (γ(1-s) r^{n-1+s})` for `r > 0`.
    pub fn q_radial(&self, r: f64) -> f64 {
        if r >= self.cutoff.delta {
            return 0.0;
        }
        self.qbar(r) / (self.gamma1 * r.powf(self.params.kernel_exponent()))
    }

    /// Radial profile of `ρ`.
    pub fn rho_radial(&self, r: f64) -> f64 {
        self.cutoff.eval(r) / (self.gamma1 * r.powf(self.params.kernel_exponent()))
    }

    /// Analytic gradient `∇Q(x) = -(n-1+s) ρ(x) x / |x|²`.
    pub fn grad_q(&self, x: &[f64]) -> Result<Vec<f64>> {
        let r = norm(x);
        if r == 0.0 {
            return Err(Error::Singular);
        }
        let f = -self.params.kernel_exponent() * self.rho_radial(r) / (r * r);
        Ok(x.iter().map(|v| f * v).collect())
    }

    /// `L¹` norm of `Q`, with the plateau part in closed form.
    pub fn mass(&self) -> f64 {
        let s = self.params.s;
        let n = self.params.n as f64;
        let b = self.cutoff.plateau();
        let inner = self.cutoff.a0 * b.powf(1.0 - s) / (1.0 - s) + self.z0 * b.powf(n) / n;
        let outer = quad::integrate(|r| self.qbar_quadrature(r) * r.powf(-s), b, self.cutoff.delta, 1e-14, 1e-12);
        sphere_area(self.params.n) * (inner + outer.value) / self.gamma1
    }

    /// Slope `κ = (c_{n,s} / n) ∫ w̄(|z|) |z|^{1-n-s} dz` of the nonlocal gradient of a linear function.
    pub fn linear_response(&self) -> f64 {
        let s = self.params.s;
        let b = self.cutoff.plateau();
        let inner = self.cutoff.a0 * b.powf(1.0 - s) / (1.0 - s);
        let outer = quad::integrate(|r| self.cutoff.eval(r) * r.powf(-s), b, self.cutoff.delta, 1e-15, 1e-13);
        cns_const(&self.params) / self.params.n as f64 * sphere_area(self.params.n) * (inner + outer.value)
    }

    /// Samples `Q` on the lattice `h ℤⁿ`.
    ///
    /// Nonzero nodes carry point values. The origin carries the value that makes the
    /// lattice sum `hⁿ Σ Q_k` equal to the exact `L¹` mass.
    pub fn lattice(&self, h: f64) -> LatticeKernel {
        let n = self.params.n;
        let d = self.cutoff.delta;
        let rc = (d / h).ceil() as i64;
        let mut offsets = Vec::new();
        let mut values = Vec::new();
        let jr = if n == 2 { rc } else { 0 };
        for i in -rc..=rc {
            for j in -jr..=jr {
                let r = h * ((i * i + j * j) as f64).sqrt();
                if r >= d {
                    continue;
                }
                offsets.push([i, j]);
                values.push(if r == 0.0 { 0.0 } else { self.q_radial(r) });
            }
        }
        let hn = h.powi(n as i32);
        let sum: f64 = values.iter().sum::<f64>() * hn;
        let origin = offsets.iter().position(|o| *o == [0, 0]).expect("origin is in the lattice");
        values[origin] = (self.mass() - sum) / hn;
        LatticeKernel { h, radius_cells: rc as usize, offsets, values }
    }
}

/// Evaluates `q̄(t)` from a table.
pub fn qbar_eval(table: &RadialKernelTable, t: f64) -> f64 {
    table.qbar(t)
}

/// Evaluates `Q(x)` at a nonzero point.
pub fn q_eval(table: &RadialKernelTable, x: &[f64]) -> Result<f64> {
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::Singular);
    }
    Ok(table.q_radial(r))
}
