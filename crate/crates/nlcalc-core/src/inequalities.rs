//! Empirical estimators for Poincaré, Sobolev, Morrey, Trudinger and Hardy type inequalities
//! of the nonlocal gradient, and for the translation estimates that drive compactness.
//!
//! The inequalities assert the existence of constants without giving their values, so the
//! reports here only record ratios. Callers check finiteness, scale invariance and
//! stability of the maxima under re-seeding.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{lp_norm, DomainMasks, GridField, GridSpec, Shape};
use crate::kernels::{ball_volume, smooth_step};
use crate::operators::NlOperator;
use crate::quad;

/// Random families of test functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Sums of one to five Gaussian bumps with random centres, widths and signs.
    Bumps,
    /// Random trigonometric polynomials of low degree.
    RandomTrigBumps,
}

/// Test functions vanishing outside the inner domain `Ω_{-δ}`.
#[derive(Debug, Clone)]
pub struct TestEnsemble {
    pub functions: Vec<GridField>,
    pub seed: u64,
    pub family: Family,
}

impl TestEnsemble {
    /// Draws `members` functions, each multiplied by a smooth plateau of `Ω_{-δ}`.
    ///
    /// The plateau is `smooth_step((d(x) - δ)/η)` with `d` the signed distance to `∂Ω`,
    /// so every member vanishes identically where `d ≤ δ`.
    pub fn generate(grid: &GridSpec, shape: &Shape, delta: f64, members: usize, seed: u64, family: Family) -> Result<Self> {
        let n = grid.n;
        let len = grid.len();
        let sd: Vec<f64> = (0..len).map(|i| shape.signed_distance(&grid.coord(i), n)).collect();
        let depth = sd.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - delta;
        if depth <= 0.0 {
            return Err(Error::EmptyInterior);
        }
        let eta = 0.4 * depth;
        let plateau: Vec<f64> = sd.iter().map(|d| smooth_step((d - delta) / eta)).collect();
        let (lo, hi) = shape.bounds(-delta);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut functions = Vec::with_capacity(members);
        for _ in 0..members {
            let mut values = vec![0.0; len];
            match family {
                Family::Bumps => {
                    let k = rng.gen_range(1..=5);
                    for _ in 0..k {
                        let mut c = [0.0; 2];
                        for a in 0..n {
                            c[a] = rng.gen_range(lo[a]..hi[a]);
                        }
                        let width = rng.gen_range(0.2..0.6) * depth;
                        let amp = rng.gen_range(0.5..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                        for (i, v) in values.iter_mut().enumerate() {
                            let x = grid.coord(i);
                            let r2: f64 = (0..n).map(|a| (x[a] - c[a]).powi(2)).sum();
                            *v += amp * (-r2 / (2.0 * width * width)).exp();
                        }
                    }
                }
                Family::RandomTrigBumps => {
                    let k = rng.gen_range(1..=4);
                    for _ in 0..k {
                        let mut freq = [0.0; 2];
                        for f in freq.iter_mut().take(n) {
                            *f = rng.gen_range(-4.0..4.0);
                        }
                        let phase = rng.gen_range(0.0..2.0 * PI);
                        let amp = rng.gen_range(0.2..1.0);
                        for (i, v) in values.iter_mut().enumerate() {
                            let x = grid.coord(i);
                            let arg: f64 = (0..n).map(|a| 2.0 * PI * freq[a] * x[a]).sum();
                            *v += amp * (arg + phase).cos();
                        }
                    }
                }
            }
            for (v, p) in values.iter_mut().zip(&plateau) {
                *v *= p;
            }
            functions.push(GridField::scalar(*grid, values)?);
        }
        Ok(TestEnsemble { functions, seed, family })
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Same functions multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        TestEnsemble { functions: self.functions.iter().map(|f| f.scaled(alpha)).collect(), ..self.clone() }
    }
}

/// Ratios of an inequality over an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub max_ratio: f64,
    pub ratios: Vec<f64>,
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub delta: f64,
}

impl RatioReport {
    fn new(ratios: Vec<f64>, p: f64, q: f64, s: f64, delta: f64) -> Self {
        let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
        RatioReport { max_ratio, ratios, p, q, s, delta }
    }
}

fn order(op: &NlOperator) -> f64 {
    op.params.s
}

fn gradient_norms(ens: &TestEnsemble, op: &NlOperator, masks: &DomainMasks, p: f64) -> Result<Vec<f64>> {
    let norms: Vec<Result<f64>> = ens
        .functions
        .par_iter()
        .enumerate()
        .map(|(k, u)| {
            let g = op.gradient(u, &masks.omega)?;
            let v = lp_norm(&g, &masks.omega, p);
            if v < 1e-14 {
                Err(Error::ZeroGradient { member: k })
            } else {
                Ok(v)
            }
        })
        .collect();
    norms.into_iter().collect()
}

/// Ratios `‖u‖_{L^q(Ω)} / ‖D u‖_{L^p(Ω)}` for `1 < p`, `sp < n` and `1 ≤ q ≤ np/(n - sp)`.
pub fn poincare_sobolev_ratio(ens: &TestEnsemble, p: f64, q: f64, op: &NlOperator, masks: &DomainMasks) -> Result<RatioReport> {
    let n = op.grid.n as f64;
    let s = order(op);
    if !(p > 1.0) || s * p >= n {
        return Err(Error::Domain(format!("needs p > 1 and sp < n, got p = {p}, s = {s}")));
    }
    let crit = n * p / (n - s * p);
    if !(q >= 1.0 && q <= crit * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!("q must lie in [1, {crit}], got {q}")));
    }
    let den = gradient_norms(ens, op, masks, p)?;
    let ratios = ens.functions.iter().zip(&den).map(|(u, d)| lp_norm(u, &masks.omega, q) / d).collect();
    Ok(RatioReport::new(ratios, p, q, s, op.params.delta))
}

/// Ratios `‖u‖_{Lᵖ(Ω)} / ‖D u‖_{Lᵖ(Ω)}` for `p > 1`.
pub fn poincare_ratio(ens: &TestEnsemble, p: f64, op: &NlOperator, masks: &DomainMasks) -> Result<RatioReport> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("needs p > 1, got {p}")));
    }
    let s = order(op);
    let den = gradient_norms(ens, op, masks, p)?;
    let ratios = ens.functions.iter().zip(&den).map(|(u, d)| lp_norm(u, &masks.omega, p) / d).collect();
    Ok(RatioReport::new(ratios, p, p, s, op.params.delta))
}

/// Hölder and supremum ratios of the Morrey type inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct MorreyReport {
    /// `|u(x) - u(y)| / (|x - y|^{s - n/p} ‖D u‖_p)` maximised over sampled pairs.
    pub holder: RatioReport,
    /// `‖u‖_∞ / ‖D u‖_p`.
    pub sup: RatioReport,
}

/// Morrey ratios for `sp > n`, using 200 random node pairs per member plus the maximiser of `|u|`
/// against every other node.
pub fn morrey_ratio(ens: &TestEnsemble, p: f64, op: &NlOperator, masks: &DomainMasks, seed: u64) -> Result<MorreyReport> {
    let grid = op.grid;
    let n = grid.n as f64;
    let s = order(op);
    if s * p <= n {
        return Err(Error::Domain(format!("needs sp > n, got s = {s}, p = {p}")));
    }
    let expo = s - n / p;
    let den = gradient_norms(ens, op, masks, p)?;
    let nodes: Vec<usize> = (0..grid.len()).filter(|i| masks.omega[*i]).collect();
    let dist = |i: usize, j: usize| -> f64 {
        let a = grid.coord(i);
        let b = grid.coord(j);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    };
    let mut holder = Vec::with_capacity(ens.len());
    let mut sup = Vec::with_capacity(ens.len());
    for (k, (u, d)) in ens.functions.iter().zip(&den).enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let mut best = 0.0f64;
        for _ in 0..200 {
            let i = nodes[rng.gen_range(0..nodes.len())];
            let j = nodes[rng.gen_range(0..nodes.len())];
            if i == j {
                continue;
            }
            best = best.max((u.values[i] - u.values[j]).abs() / dist(i, j).powf(expo));
        }
        let imax = *nodes
            .iter()
            .max_by(|a, b| u.values[**a].abs().total_cmp(&u.values[**b].abs()))
            .expect("Ω has nodes");
        for &j in &nodes {
            if j != imax {
                best = best.max((u.values[imax] - u.values[j]).abs() / dist(imax, j).powf(expo));
            }
        }
        holder.push(best / d);
        sup.push(u.values[imax].abs() / d);
    }
    let delta = op.params.delta;
    Ok(MorreyReport {
        holder: RatioReport::new(holder, p, expo, s, delta),
        sup: RatioReport::new(sup, p, f64::INFINITY, s, delta),
    })
}

/// Exponential integrability functional of the Trudinger type inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct TrudingerReport {
    pub c1_grid: Vec<f64>,
    /// Maximum over members of `|Ω|^{-1} ∫_Ω exp((|u| / (c1 ‖D u‖_p))^{p'})` for each `c1`.
    pub values: Vec<f64>,
    /// Smallest `c1` on the grid whose value does not exceed the cap.
    pub chosen_c1: Option<f64>,
}

/// Evaluates the Trudinger functional in the critical case `sp = n`.
pub fn trudinger_check(
    ens: &TestEnsemble,
    p: f64,
    op: &NlOperator,
    masks: &DomainMasks,
    c1_grid: &[f64],
    c2_cap: f64,
) -> Result<TrudingerReport> {
    let n = op.grid.n as f64;
    let s = order(op);
    if (s * p - n).abs() > 1e-9 || !(p > 1.0) {
        return Err(Error::Domain(format!("needs sp = n with p > 1, got s = {s}, p = {p}")));
    }
    let pc = p / (p - 1.0);
    let den = gradient_norms(ens, op, masks, p)?;
    let hn = op.grid.cell_volume();
    let vol = DomainMasks::count(&masks.omega) as f64 * hn;
    let mut values = Vec::with_capacity(c1_grid.len());
    for &c1 in c1_grid {
        let mut worst = 0.0f64;
        for (u, d) in ens.functions.iter().zip(&den) {
            let mut acc = 0.0;
            for (i, v) in u.values.iter().enumerate() {
                if masks.omega[i] {
                    acc += (v.abs() / (c1 * d)).powf(pc).exp();
                }
            }
            worst = worst.max(acc * hn / vol);
        }
        values.push(worst);
    }
    let mut order_idx: Vec<usize> = (0..c1_grid.len()).collect();
    order_idx.sort_by(|a, b| c1_grid[*a].total_cmp(&c1_grid[*b]));
    let chosen_c1 = order_idx.into_iter().find(|k| values[*k] <= c2_cap).map(|k| c1_grid[k]);
    Ok(TrudingerReport { c1_grid: c1_grid.to_vec(), values, chosen_c1 })
}

/// Hardy ratios `(∫_Ω |u|ᵖ/|x - x₀|^{sp})^{1/p} / ‖D u‖_{Lᵖ(Ω)}` for `p > 1`, `sp < n`.
///
/// A node closer than half a cell to `x₀` uses the average of the weight over the ball of cell volume.
pub fn hardy_ratio(ens: &TestEnsemble, p: f64, op: &NlOperator, masks: &DomainMasks, origin: &[f64]) -> Result<RatioReport> {
    let grid = op.grid;
    let n = grid.n;
    let s = order(op);
    if !(p > 1.0) || s * p >= n as f64 {
        return Err(Error::Domain(format!("needs p > 1 and sp < n, got p = {p}, s = {s}")));
    }
    let sp = s * p;
    let hn = grid.cell_volume();
    let radius = (hn / ball_volume(n)).powf(1.0 / n as f64);
    let weight: Vec<f64> = (0..grid.len())
        .map(|i| {
            let x = grid.coord(i);
            let r = (0..n).map(|a| (x[a] - origin[a]).powi(2)).sum::<f64>().sqrt();
            if r < 0.5 * grid.h {
                n as f64 / (n as f64 - sp) * radius.powf(-sp)
            } else {
                r.powf(-sp)
            }
        })
        .collect();
    let den = gradient_norms(ens, op, masks, p)?;
    let ratios = ens
        .functions
        .iter()
        .zip(&den)
        .map(|(u, d)| {
            let acc: f64 = (0..grid.len())
                .filter(|i| masks.omega[*i])
                .map(|i| u.values[i].abs().powf(p) * weight[i])
                .sum();
            (acc * hn).powf(1.0 / p) / d
        })
        .collect();
    Ok(RatioReport::new(ratios, p, p, s, op.params.delta))
}

/// Translation differences `‖u(· + k h e₁) - u‖_{Lᵖ(Ω)}` for each shift `k` in cells.
pub fn translation_norms(u: &GridField, p: f64, mask: &[bool], shifts: &[usize]) -> Vec<f64> {
    shifts
        .iter()
        .map(|&k| {
            let t = u.shifted(-(k as i64));
            let d = GridField { values: t.values.iter().zip(&u.values).map(|(a, b)| a - b).collect(), ..u.clone() };
            lp_norm(&d, mask, p)
        })
        .collect()
}

/// Least-squares exponent of `‖u(· + h) - u‖_{Lᵖ(Ω)}` against `|h|` over the given shifts (in cells).
pub fn translation_exponent(u: &GridField, p: f64, mask: &[bool], shifts: &[usize]) -> Result<f64> {
    if shifts.contains(&0) {
        return Err(Error::Domain("shifts must be positive".into()));
    }
    let norms = translation_norms(u, p, mask, shifts);
    let hs: Vec<f64> = shifts.iter().map(|k| *k as f64 * u.grid.h).collect();
    Ok(crate::loglog_slope(&hs, &norms))
}

/// One evaluation of the Hölder estimate for the vector kernel `z/|z|^{n+1-s}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderRow {
    pub s: f64,
    pub h: f64,
    /// `∫ |z/|z|^{n+1-s} - (z-h)/|z-h|^{n+1-s}| dz`.
    pub lhs: f64,
    /// `lhs · s(1-s) / |h|^s`.
    pub normalized: f64,
}

/// Evaluations of the Hölder estimate with fitted exponents in `|h|`.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderReport {
    pub n: usize,
    pub rows: Vec<HolderRow>,
    /// Fitted exponent of `lhs` in `|h|` for each order.
    pub exponents: Vec<(f64, f64)>,
    pub sup_normalized: f64,
}

const HOLDER_RADIUS: f64 = 20.0;

/// Left side of the Hölder estimate for a shift `h e₁`, integrated over `B(0, R)` with the
/// leading-order tail `∫_{|z|>R} |∇F(z) h|` added in closed form.
pub fn holder_lhs(n: usize, s: f64, h: f64) -> Result<f64> {
    let big = HOLDER_RADIUS;
    let tol = 1e-12;
    match n {
        1 => {
            let f = |z: f64| z.signum() * z.abs().powf(s - 1.0);
            let g = |z: f64| (f(z) - f(z - h)).abs();
            // Reflection symmetry z ↦ h - z maps the integrand to itself.
            let near = quad::integrate_left_singular(g, 0.0, 0.5 * h, s - 1.0, 1e-15, tol).value;
            let left = quad::integrate_left_singular(|t| g(-t), 0.0, big, s - 1.0, 1e-15, tol).value;
            let tail = h * big.powf(s - 1.0);
            Ok(2.0 * (near + left + tail))
        }
        2 => {
            let e = 3.0 - s;
            let g = |rho: f64, th: f64| -> f64 {
                let z = [rho * th.cos(), rho * th.sin()];
                let r1 = rho;
                let w = [z[0] - h, z[1]];
                let r2 = (w[0] * w[0] + w[1] * w[1]).sqrt();
                let a = [z[0] / r1.powf(e) - w[0] / r2.powf(e), z[1] / r1.powf(e) - w[1] / r2.powf(e)];
                (a[0] * a[0] + a[1] * a[1]).sqrt()
            };
            let radial = |rho: f64| -> f64 {
                let thc = if rho <= 0.5 * h { 0.0 } else { (0.5 * h / rho).acos() };
                rho * quad::integrate(|th| g(rho, th), thc, PI, 1e-15, 1e-11).value
            };
            let inner = quad::integrate_left_singular(radial, 0.0, 0.5 * h, s - 1.0, 1e-15, tol).value;
            let mid = quad::integrate_pieces(radial, &[0.5 * h, h, 4.0 * h, big], 1e-15, tol).value;
            let ang = quad::integrate(
                |th| (1.0 + (3.0 - s) * (1.0 - s) * th.cos().powi(2)).sqrt(),
                0.0,
                2.0 * PI,
                1e-15,
                1e-13,
            )
            .value;
            let tail = h * ang * big.powf(s - 1.0) / (1.0 - s);
            // Two half-planes and two mirror-symmetric angular halves.
            Ok(4.0 * (inner + mid) + tail)
        }
        _ => Err(Error::Domain(format!("dimension must be 1 or 2, got {n}"))),
    }
}

/// Evaluates the Hölder estimate on a grid of orders and shifts.
pub fn holder_kernel_bound(n: usize, s_list: &[f64], h_list: &[f64]) -> Result<HolderReport> {
    let mut rows = Vec::new();
    let mut exponents = Vec::new();
    for &s in s_list {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!("order must lie in (0, 1), got {s}")));
        }
        let vals: Vec<f64> = h_list.iter().map(|&h| holder_lhs(n, s, h)).collect::<Result<_>>()?;
        for (&h, &lhs) in h_list.iter().zip(&vals) {
            rows.push(HolderRow { s, h, lhs, normalized: lhs * s * (1.0 - s) / h.powf(s) });
        }
        exponents.push((s, crate::loglog_slope(h_list, &vals)));
    }
    let sup_normalized = rows.iter().map(|r| r.normalized).fold(0.0, f64::max);
    Ok(HolderReport { n, rows, exponents, sup_normalized })
}
