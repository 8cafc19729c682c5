//! Uniform tensor grids, analytic domains and their collar masks, grid fields and norms.
//!
//! Nodes sit at cell centres `x_i = lo + (i + ½) h` and are stored row-major with axis 0
//! varying slowest. Grids are cubes with the same number of cells on every axis.

use crate::error::{Error, Result};

/// Uniform grid on an axis-aligned cube.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub lo: [f64; 2],
    pub cells: usize,
    pub h: f64,
}

impl GridSpec {
    /// Grid on the cube `lo + [0, side]ⁿ` with `cells` cells per axis.
    pub fn new(n: usize, lo: &[f64], side: f64, cells: usize) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(Error::InvalidParams(format!("dimension must be 1 or 2, got {n}")));
        }
        if lo.len() != n {
            return Err(Error::InvalidParams("corner has the wrong dimension".into()));
        }
        if !cells.is_power_of_two() || cells < 2 {
            return Err(Error::InvalidParams(format!("cells per axis must be a power of two, got {cells}")));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::InvalidParams(format!("box side must be positive, got {side}")));
        }
        let mut l = [0.0; 2];
        l[..n].copy_from_slice(lo);
        Ok(GridSpec { n, lo: l, cells, h: side / cells as f64 })
    }

    /// Grid with spacing `h` whose node `cells/2` (per axis) sits at the origin.
    pub fn origin_centered(n: usize, cells: usize, h: f64) -> Result<Self> {
        let c = -(cells as f64 / 2.0 + 0.5) * h;
        Self::new(n, &vec![c; n], h * cells as f64, cells)
    }

    pub fn side(&self) -> f64 {
        self.h * self.cells as f64
    }

    pub fn hi(&self) -> [f64; 2] {
        let mut out = self.lo;
        for v in out.iter_mut().take(self.n) {
            *v += self.side();
        }
        out
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.cells.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume `hⁿ`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.n as i32)
    }

    /// Per-axis indices of a linear node index.
    pub fn multi(&self, idx: usize) -> [usize; 2] {
        if self.n == 1 {
            [idx, 0]
        } else {
            [idx / self.cells, idx % self.cells]
        }
    }

    /// Linear index of per-axis indices.
    pub fn linear(&self, m: [usize; 2]) -> usize {
        if self.n == 1 {
            m[0]
        } else {
            m[0] * self.cells + m[1]
        }
    }

    /// Linear index of the node offset from `idx` by `off` cells, if it is on the grid.
    pub fn offset(&self, idx: usize, off: [i64; 2]) -> Option<usize> {
        let m = self.multi(idx);
        let c = self.cells as i64;
        let a = m[0] as i64 + off[0];
        if a < 0 || a >= c {
            return None;
        }
        if self.n == 1 {
            return Some(a as usize);
        }
        let b = m[1] as i64 + off[1];
        if b < 0 || b >= c {
            return None;
        }
        Some((a * c + b) as usize)
    }

    /// Coordinates of a node.
    pub fn coord(&self, idx: usize) -> [f64; 2] {
        let m = self.multi(idx);
        let mut x = [0.0; 2];
        for a in 0..self.n {
            x[a] = self.lo[a] + (m[a] as f64 + 0.5) * self.h;
        }
        x
    }

    /// Node-wise distance in cells to the nearest face of the box (minimum over axes).
    pub fn cells_to_boundary(&self, idx: usize) -> usize {
        let m = self.multi(idx);
        (0..self.n).map(|a| m[a].min(self.cells - 1 - m[a])).min().unwrap_or(0)
    }

    /// Same-centre grid with `pad` times the side and cell count.
    pub fn padded(&self, pad: usize) -> Result<Self> {
        let side = self.side() * pad as f64;
        let mut lo = [0.0; 2];
        for a in 0..self.n {
            lo[a] = self.lo[a] - 0.5 * (side - self.side());
        }
        Self::new(self.n, &lo[..self.n], side, self.cells * pad)
    }

    /// Frequencies of the discrete transform along one axis, in FFT order.
    pub fn frequency(&self, k: usize) -> f64 {
        let nn = self.cells as i64;
        let kk = k as i64;
        let signed = if kk < nn / 2 { kk } else { kk - nn };
        signed as f64 / self.side()
    }

    /// Frequency vector of a linear mode index.
    pub fn xi(&self, idx: usize) -> [f64; 2] {
        let m = self.multi(idx);
        let mut out = [0.0; 2];
        for a in 0..self.n {
            out[a] = self.frequency(m[a]);
        }
        out
    }

    pub fn same_lattice(&self, other: &GridSpec) -> bool {
        self.n == other.n && self.cells == other.cells && (self.h - other.h).abs() <= 1e-12 * self.h
    }
}

/// Analytic description of the domain `Ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Box { lo: [f64; 2], hi: [f64; 2] },
    Ball { center: [f64; 2], radius: f64 },
}

impl Shape {
    /// The unit cube `(0, 1)ⁿ`.
    pub fn unit_box() -> Self {
        Shape::Box { lo: [0.0; 2], hi: [1.0; 2] }
    }

    /// Signed distance to the boundary, positive inside.
    pub fn signed_distance(&self, x: &[f64], n: usize) -> f64 {
        match *self {
            Shape::Ball { center, radius } => {
                let r = (0..n).map(|a| (x[a] - center[a]).powi(2)).sum::<f64>().sqrt();
                radius - r
            }
            Shape::Box { lo, hi } => {
                let mut inside = f64::INFINITY;
                let mut outside = 0.0;
                for a in 0..n {
                    let d = (x[a] - lo[a]).min(hi[a] - x[a]);
                    inside = inside.min(d);
                    if d < 0.0 {
                        outside += d * d;
                    }
                }
                if inside >= 0.0 {
                    inside
                } else {
                    -outside.sqrt()
                }
            }
        }
    }

    /// Bounding box of `Ω + B(0, r)`.
    pub fn bounds(&self, r: f64) -> ([f64; 2], [f64; 2]) {
        match *self {
            Shape::Box { lo, hi } => ([lo[0] - r, lo[1] - r], [hi[0] + r, hi[1] + r]),
            Shape::Ball { center, radius } => {
                let e = radius + r;
                ([center[0] - e, center[1] - e], [center[0] + e, center[1] + e])
            }
        }
    }
}

/// Node masks for `Ω`, `Ω_δ = Ω + B(0, δ)`, the collar `Ω_δ \ Ω` and the inner set `Ω_{-δ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainMasks {
    pub omega: Vec<bool>,
    pub omega_delta: Vec<bool>,
    pub collar: Vec<bool>,
    pub inner: Vec<bool>,
}

impl DomainMasks {
    /// Number of nodes in a mask.
    pub fn count(mask: &[bool]) -> usize {
        mask.iter().filter(|b| **b).count()
    }

    /// Nodes outside `Ω_{-δ}` within `Ω_δ`, where the boundary datum is prescribed.
    pub fn fixed(&self) -> Vec<bool> {
        self.omega_delta.iter().zip(&self.inner).map(|(a, b)| *a && !*b).collect()
    }
}

/// Classifies every node of `grid` by signed distance to `shape`.
pub fn make_masks(grid: &GridSpec, shape: &Shape, delta: f64) -> Result<DomainMasks> {
    let len = grid.len();
    let mut m = DomainMasks {
        omega: vec![false; len],
        omega_delta: vec![false; len],
        collar: vec![false; len],
        inner: vec![false; len],
    };
    for i in 0..len {
        let sd = shape.signed_distance(&grid.coord(i), grid.n);
        m.omega[i] = sd > 0.0;
        m.omega_delta[i] = sd > -delta;
        m.collar[i] = m.omega_delta[i] && !m.omega[i];
        m.inner[i] = sd > delta;
    }
    if !m.inner.iter().any(|b| *b) {
        return Err(Error::EmptyInterior);
    }
    Ok(m)
}

/// Scalar or vector samples on a grid, stored component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: GridSpec,
    pub components: usize,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: GridSpec, components: usize) -> Self {
        GridField { grid, components, values: vec![0.0; grid.len() * components] }
    }

    pub fn scalar(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(GridField { grid, components: 1, values })
    }

    /// Vector field from per-component arrays.
    pub fn vector(grid: GridSpec, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != grid.n || comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::GridMismatch);
        }
        Ok(GridField { grid, components: grid.n, values: comps.concat() })
    }

    /// Samples a scalar function at every node.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: GridSpec, f: F) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.coord(i)[..grid.n])).collect();
        GridField { grid, components: 1, values }
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let len = self.grid.len();
        &self.values[c * len..(c + 1) * len]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let len = self.grid.len();
        &mut self.values[c * len..(c + 1) * len]
    }

    /// Euclidean magnitude at a node.
    pub fn magnitude(&self, idx: usize) -> f64 {
        let len = self.grid.len();
        if self.components == 1 {
            return self.values[idx].abs();
        }
        (0..self.components).map(|c| self.values[c * len + idx].powi(2)).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, a: f64) -> Self {
        GridField { values: self.values.iter().map(|v| a * v).collect(), ..self.clone() }
    }

    /// Whole-cell shift along axis 0 (`out_i = in_{i-k}`), padding with zeros.
    pub fn shifted(&self, k: i64) -> Self {
        let mut out = GridField::zeros(self.grid, self.components);
        let len = self.grid.len();
        for c in 0..self.components {
            for i in 0..len {
                if let Some(j) = self.grid.offset(i, [-k, 0]) {
                    out.values[c * len + i] = self.values[c * len + j];
                }
            }
        }
        out
    }

    /// Restricts the field to a mask, setting every other node to zero.
    pub fn masked(&self, mask: &[bool]) -> Self {
        let len = self.grid.len();
        let mut out = self.clone();
        for c in 0..self.components {
            for i in 0..len {
                if !mask[i] {
                    out.values[c * len + i] = 0.0;
                }
            }
        }
        out
    }
}

/// Masked `Lᵖ` norm `(hⁿ Σ |v|ᵖ)^{1/p}`; the maximum over the mask for `p = ∞`.
pub fn lp_norm(field: &GridField, mask: &[bool], p: f64) -> f64 {
    let len = field.grid.len();
    if p.is_infinite() {
        return (0..len).filter(|i| mask[*i]).map(|i| field.magnitude(i)).fold(0.0, f64::max);
    }
    let sum: f64 = (0..len).filter(|i| mask[*i]).map(|i| field.magnitude(i).powf(p)).sum();
    (field.grid.cell_volume() * sum).powf(1.0 / p)
}

/// Two-piece norm `(‖u‖ᵖ_{Lᵖ(Ω_δ)} + ‖g‖ᵖ_{Lᵖ(Ω)})^{1/p}` of a function and its nonlocal gradient.
pub fn hspd_norm(u: &GridField, gradient: &GridField, masks: &DomainMasks, p: f64) -> f64 {
    let a = lp_norm(u, &masks.omega_delta, p);
    let b = lp_norm(gradient, &masks.omega, p);
    if p.is_infinite() {
        return a.max(b);
    }
    (a.powf(p) + b.powf(p)).powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let g = GridSpec::new(2, &[0.0, 0.0], 1.0, 8).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.linear(g.multi(i)), i);
        }
        assert_eq!(g.offset(0, [-1, 0]), None);
        assert_eq!(g.offset(0, [1, 2]), Some(10));
    }

    #[test]
    fn origin_centered_has_node_at_zero() {
        let g = GridSpec::origin_centered(1, 16, 0.1).unwrap();
        assert!(g.coord(8)[0].abs() < 1e-14);
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(GridSpec::new(1, &[0.0], 1.0, 12).is_err());
    }
}
