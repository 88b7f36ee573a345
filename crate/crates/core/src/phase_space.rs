//! Velocity lattice, sphere quadrature, distribution fields and their moments.
//!
//! Both species live on the same cubic lattice `[-V_max, V_max]^3` with `N`
//! cell-centred nodes per axis. `N` is even so the origin is never a node and
//! the node set is symmetric under `v -> -v`, which makes odd moments of even
//! fields vanish exactly under the midpoint rule.

use crate::error::{invalid, Error, Result};
use std::f64::consts::PI;

/// Uniform Cartesian velocity lattice with midpoint quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    v_max: f64,
    n: usize,
    dv: f64,
    axis: Vec<f64>,
}

impl VelocityGrid {
    /// Builds the lattice; `n` must be even and at least 4.
    pub fn new(v_max: f64, n: usize) -> Result<Self> {
        if !(v_max > 0.0) || !v_max.is_finite() {
            return Err(invalid(format!("v_max must be positive, got {v_max}")));
        }
        if n < 4 || n % 2 != 0 {
            return Err(invalid(format!("points per axis must be even and >= 4, got {n}")));
        }
        let dv = 2.0 * v_max / n as f64;
        let axis = (0..n).map(|i| -v_max + (i as f64 + 0.5) * dv).collect();
        Ok(Self { v_max, n, dv, axis })
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dv(&self) -> f64 {
        self.dv
    }

    /// Quadrature weight of every node (`dv^3`).
    pub fn weight(&self) -> f64 {
        self.dv * self.dv * self.dv
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    #[inline]
    pub fn node(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.coords(idx);
        [self.axis[i], self.axis[j], self.axis[k]]
    }

    /// All node velocities in storage order.
    pub fn nodes(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// Index of the node mirrored through the origin.
    #[inline]
    pub fn mirror(&self, idx: usize) -> usize {
        let [i, j, k] = self.coords(idx);
        let m = self.n - 1;
        self.index(m - i, m - j, m - k)
    }

    pub(crate) fn check(&self, f: &DistField) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::GridMismatch { expected: self.len(), found: f.len() });
        }
        Ok(())
    }
}

/// Product rule on the unit sphere: Gauss-Legendre in `cos(theta)` times a
/// uniform azimuthal rule with twice as many points.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereRule {
    pub directions: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    order: usize,
}

impl SphereRule {
    pub fn new(order: usize) -> Result<Self> {
        if order < 2 {
            return Err(invalid(format!("sphere rule order must be >= 2, got {order}")));
        }
        let (x, w) = gauss_legendre(order);
        let n_phi = 2 * order;
        let dphi = 2.0 * PI / n_phi as f64;
        let mut directions = Vec::with_capacity(order * n_phi);
        let mut weights = Vec::with_capacity(order * n_phi);
        for (xi, wi) in x.iter().zip(&w) {
            let s = (1.0 - xi * xi).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = (j as f64 + 0.5) * dphi;
                directions.push([s * phi.cos(), s * phi.sin(), *xi]);
                weights.push(wi * dphi);
            }
        }
        Ok(Self { directions, weights, order })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Sum of weights; `4*pi` up to round-off.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Integrates `g(Omega)` over the sphere.
    pub fn integrate(&self, g: impl Fn([f64; 3]) -> f64) -> f64 {
        self.directions.iter().zip(&self.weights).map(|(d, w)| w * g(*d)).sum()
    }

    /// One representative per antipodal pair with doubled weight.
    ///
    /// Every collision map used here depends on `Omega` only through
    /// `(a . Omega) Omega`, which is even in `Omega`, so the half rule gives
    /// the same sums at half the cost.
    pub fn antipodal_half(&self) -> Vec<([f64; 3], f64)> {
        let n_phi = 2 * self.order;
        let mut out = Vec::with_capacity(self.len() / 2);
        for i in 0..self.order {
            let partner = self.order - 1 - i;
            for j in 0..n_phi {
                if i < partner || (i == partner && j < self.order) {
                    let idx = i * n_phi + j;
                    out.push((self.directions[idx], 2.0 * self.weights[idx]));
                }
            }
        }
        out
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton on P_n).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Nodal values of one distribution (or one split component of it).
#[derive(Debug, Clone, PartialEq)]
pub struct DistField {
    pub values: Vec<f64>,
}

impl DistField {
    pub fn zeros(grid: &VelocityGrid) -> Self {
        Self { values: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: &VelocityGrid, f: impl Fn([f64; 3]) -> f64) -> Self {
        Self { values: (0..grid.len()).map(|i| f(grid.node(i))).collect() }
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `a*self + b*other`.
    pub fn lin_comb(&self, a: f64, other: &DistField, b: f64) -> DistField {
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        DistField { values }
    }

    pub fn add(&self, other: &DistField) -> DistField {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &DistField) -> DistField {
        self.lin_comb(1.0, other, -1.0)
    }

    pub fn scale(&self, a: f64) -> DistField {
        DistField { values: self.values.iter().map(|x| a * x).collect() }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &DistField) {
        for (x, y) in self.values.iter_mut().zip(&other.values) {
            *x += a * y;
        }
    }

    /// Number of nodes below `-tol`.
    pub fn count_below(&self, tol: f64) -> usize {
        self.values.iter().filter(|v| **v < -tol).count()
    }
}

/// Raw moments `(P0, P1, P2) = (int f, int v f, int |v|^2/2 f)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentVector {
    pub p0: f64,
    pub p1: [f64; 3],
    pub p2: f64,
}

/// Density, bulk velocity and temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hydro {
    pub n: f64,
    pub u: [f64; 3],
    pub t: f64,
}

impl MomentVector {
    pub fn from_hydro(h: &Hydro) -> Self {
        let u2 = dot(h.u, h.u);
        Self {
            p0: h.n,
            p1: [h.n * h.u[0], h.n * h.u[1], h.n * h.u[2]],
            p2: 0.5 * h.n * u2 + 1.5 * h.n * h.t,
        }
    }

    /// Inverts `P2 = P0 |u|^2 / 2 + 3 P0 T / 2`.
    pub fn hydro(&self) -> Result<Hydro> {
        if !(self.p0 > 0.0) {
            return Err(Error::DegenerateDensity(self.p0));
        }
        let u = [self.p1[0] / self.p0, self.p1[1] / self.p0, self.p1[2] / self.p0];
        let t = (2.0 * self.p2 / self.p0 - dot(u, u)) / 3.0;
        Ok(Hydro { n: self.p0, u, t })
    }
}

/// Temperature implied by a moment vector.
pub fn temperature_from_moments(m: &MomentVector) -> Result<f64> {
    m.hydro().map(|h| h.t)
}

#[inline]
pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Midpoint approximation of `int f(v) weight(v) dv`.
pub fn integrate(grid: &VelocityGrid, f: &DistField, weight: impl Fn([f64; 3]) -> f64) -> f64 {
    let s: f64 = f.values.iter().enumerate().map(|(i, x)| x * weight(grid.node(i))).sum();
    s * grid.weight()
}

/// Raw moments of a field.
pub fn moments(grid: &VelocityGrid, f: &DistField) -> MomentVector {
    let mut acc = [0.0; 5];
    for (i, x) in f.values.iter().enumerate() {
        let v = grid.node(i);
        acc[0] += x;
        acc[1] += x * v[0];
        acc[2] += x * v[1];
        acc[3] += x * v[2];
        acc[4] += 0.5 * x * dot(v, v);
    }
    let w = grid.weight();
    MomentVector { p0: acc[0] * w, p1: [acc[1] * w, acc[2] * w, acc[3] * w], p2: acc[4] * w }
}

/// Raw moments together with `(n, u, T)`.
pub fn compute_moments(grid: &VelocityGrid, f: &DistField) -> Result<(MomentVector, Hydro)> {
    let m = moments(grid, f);
    let h = m.hydro()?;
    Ok((m, h))
}

/// Samples `n (2 pi T)^{-3/2} exp(-|v-u|^2 / (2T))` at the nodes.
pub fn maxwellian(grid: &VelocityGrid, n: f64, u: [f64; 3], t: f64) -> Result<DistField> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid(format!("temperature must be positive, got {t}")));
    }
    if !(n >= 0.0) || !n.is_finite() {
        return Err(invalid(format!("density must be non-negative, got {n}")));
    }
    let c = n / (2.0 * PI * t).powf(1.5);
    Ok(DistField::from_fn(grid, |v| {
        let d = [v[0] - u[0], v[1] - u[1], v[2] - u[2]];
        c * (-dot(d, d) / (2.0 * t)).exp()
    }))
}

/// Maxwellian carrying the hydrodynamic fields of a moment vector.
pub fn maxwellian_from_moments(grid: &VelocityGrid, m: &MomentVector) -> Result<DistField> {
    let h = m.hydro()?;
    maxwellian(grid, h.n, h.u, h.t)
}

/// Trilinear interpolation of a single point; zero outside the cube.
pub fn interpolate(grid: &VelocityGrid, f: &DistField, p: [f64; 3]) -> f64 {
    Interpolator::new(grid, f).eval(p)
}

/// Trilinear interpolator over a zero-padded copy of a field.
///
/// Nodes sit at cell centres, so the half cell between the outermost node
/// and the cube face is interpolated against a ghost layer of zeros. Points
/// outside the cube return exactly zero.
pub struct Interpolator {
    pub(crate) data: Vec<f64>,
    pub(crate) m: usize,
    inv_dv: f64,
    v_max: f64,
    offset: f64,
}

impl Interpolator {
    pub fn new(grid: &VelocityGrid, f: &DistField) -> Self {
        let n = grid.n();
        let m = n + 2;
        let mut data = vec![0.0; m * m * m];
        for i in 0..n {
            for j in 0..n {
                let src = grid.index(i, j, 0);
                let dst = ((i + 1) * m + j + 1) * m + 1;
                data[dst..dst + n].copy_from_slice(&f.values[src..src + n]);
            }
        }
        let inv_dv = 1.0 / grid.dv();
        Self { data, m, inv_dv, v_max: grid.v_max(), offset: grid.v_max() * inv_dv + 0.5 }
    }

    #[inline]
    pub fn eval(&self, p: [f64; 3]) -> f64 {
        let vm = self.v_max;
        if p[0].abs() > vm || p[1].abs() > vm || p[2].abs() > vm {
            return 0.0;
        }
        // padded coordinate: node i sits at i + 1; non-negative here, so the
        // truncating cast is a floor (libm floor is a call on baseline x86_64)
        let x = p[0] * self.inv_dv + self.offset;
        let y = p[1] * self.inv_dv + self.offset;
        let z = p[2] * self.inv_dv + self.offset;
        let top = self.m - 2;
        let (i, j, k) = ((x as usize).min(top), (y as usize).min(top), (z as usize).min(top));
        let (tx, ty, tz) = (x - i as f64, y - j as f64, z - k as f64);
        let m = self.m;
        let b = (i * m + j) * m + k;
        let d = &self.data;
        let c00 = d[b] + tz * (d[b + 1] - d[b]);
        let c01 = d[b + m] + tz * (d[b + m + 1] - d[b + m]);
        let b1 = b + m * m;
        let c10 = d[b1] + tz * (d[b1 + 1] - d[b1]);
        let c11 = d[b1 + m] + tz * (d[b1 + m + 1] - d[b1 + m]);
        let c0 = c00 + ty * (c01 - c00);
        let c1 = c10 + ty * (c11 - c10);
        c0 + tx * (c1 - c0)
    }
}

/// Second-order central difference along `axis`, one-sided at the faces.
pub fn central_diff(grid: &VelocityGrid, f: &[f64], axis: usize) -> Vec<f64> {
    let n = grid.n();
    let stride = [n * n, n, 1][axis];
    let inv = 1.0 / grid.dv();
    let mut out = vec![0.0; f.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let c = grid.coords(idx)[axis];
        *o = if c == 0 {
            (f[idx + stride] - f[idx]) * inv
        } else if c == n - 1 {
            (f[idx] - f[idx - stride]) * inv
        } else {
            0.5 * (f[idx + stride] - f[idx - stride]) * inv
        };
    }
    out
}

/// Exact transpose of [`central_diff`], accumulated into `out`.
pub fn central_diff_transpose_add(grid: &VelocityGrid, h: &[f64], axis: usize, out: &mut [f64]) {
    let n = grid.n();
    let stride = [n * n, n, 1][axis];
    let inv = 1.0 / grid.dv();
    for (idx, hv) in h.iter().enumerate() {
        if *hv == 0.0 {
            continue;
        }
        let c = grid.coords(idx)[axis];
        if c == 0 {
            out[idx + stride] += hv * inv;
            out[idx] -= hv * inv;
        } else if c == n - 1 {
            out[idx] += hv * inv;
            out[idx - stride] -= hv * inv;
        } else {
            out[idx + stride] += 0.5 * hv * inv;
            out[idx - stride] -= 0.5 * hv * inv;
        }
    }
}

/// Nodal gradient by [`central_diff`] along all three axes.
pub fn gradient(grid: &VelocityGrid, f: &[f64]) -> [Vec<f64>; 3] {
    [central_diff(grid, f, 0), central_diff(grid, f, 1), central_diff(grid, f, 2)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spacing_and_size() {
        let g = VelocityGrid::new(8.0, 16).unwrap();
        assert_eq!(g.dv(), 1.0);
        assert_eq!(g.len(), 4096);
        let g = VelocityGrid::new(6.0, 4).unwrap();
        assert_eq!(g.len(), 64);
        assert!(g.nodes().iter().all(|v| v.iter().all(|c| c.abs() > 0.0)));
        assert!(VelocityGrid::new(8.0, 5).is_err());
        assert!(VelocityGrid::new(-1.0, 8).is_err());
    }

    #[test]
    fn mirror_is_negation() {
        let g = VelocityGrid::new(3.0, 6).unwrap();
        for i in 0..g.len() {
            let a = g.node(i);
            let b = g.node(g.mirror(i));
            for d in 0..3 {
                assert!((a[d] + b[d]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sphere_rule_weights() {
        let s = SphereRule::new(4).unwrap();
        assert_eq!(s.len(), 32);
        assert!((s.total_weight() - 4.0 * PI).abs() < 1e-12);
        for order in 2..7 {
            let s = SphereRule::new(order).unwrap();
            let a = [0.48, -0.6, 0.64];
            let v = s.integrate(|o| dot(a, o).powi(2));
            assert!((v - 4.0 * PI / 3.0).abs() < 1e-10, "order {order}: {v}");
            let half: f64 = s.antipodal_half().iter().map(|(_, w)| w).sum();
            assert!((half - 4.0 * PI).abs() < 1e-12);
            assert_eq!(s.antipodal_half().len() * 2, s.len());
        }
        assert!(SphereRule::new(1).is_err());
    }

    #[test]
    fn sphere_rule_is_antipodal() {
        let s = SphereRule::new(3).unwrap();
        for d in &s.directions {
            let found = s.directions.iter().any(|e| (0..3).all(|k| (d[k] + e[k]).abs() < 1e-12));
            assert!(found);
        }
    }

    #[test]
    fn maxwellian_moments() {
        let g = VelocityGrid::new(8.0, 32).unwrap();
        let m = maxwellian(&g, 1.0, [0.0; 3], 1.0).unwrap();
        assert!((integrate(&g, &m, |_| 1.0) - 1.0).abs() < 1e-6);
        assert!(integrate(&g, &m, |v| v[0]).abs() < 1e-12);
        assert!((integrate(&g, &m, |v| dot(v, v)) - 3.0).abs() < 1e-4);

        let m = maxwellian(&g, 2.0, [1.0, 0.0, 0.0], 0.5).unwrap();
        let (_, h) = compute_moments(&g, &m).unwrap();
        assert!((h.n - 2.0).abs() < 1e-5);
        assert!((h.u[0] - 1.0).abs() < 1e-5 && h.u[1].abs() < 1e-12);
        assert!((h.t - 0.5).abs() < 1e-4);
    }

    #[test]
    fn maxwellian_peak_and_errors() {
        let g = VelocityGrid::new(8.0, 16).unwrap();
        let m = maxwellian(&g, 1.0, [0.0; 3], 1.0).unwrap();
        let peak = (2.0 * PI).powf(-1.5) * (-3.0 * 0.25f64 / 2.0).exp();
        assert!((m.norm_inf() - peak).abs() < 1e-15);
        assert_eq!(maxwellian(&g, 0.0, [1.0; 3], 1.0).unwrap().norm_inf(), 0.0);
        assert!(maxwellian(&g, 1.0, [0.0; 3], 0.0).is_err());
        assert!(maxwellian(&g, -1.0, [0.0; 3], 1.0).is_err());
    }

    #[test]
    fn hydro_from_raw_moments() {
        let m = MomentVector { p0: 2.0, p1: [2.0, 0.0, 0.0], p2: 4.0 };
        let h = m.hydro().unwrap();
        assert_eq!(h.u, [1.0, 0.0, 0.0]);
        assert!((h.t - 1.0).abs() < 1e-15);
        let g = VelocityGrid::new(4.0, 4).unwrap();
        assert!(matches!(compute_moments(&g, &DistField::zeros(&g)), Err(Error::DegenerateDensity(_))));
    }

    #[test]
    fn interpolation_conventions() {
        let g = VelocityGrid::new(2.0, 8).unwrap();
        let f = DistField::from_fn(&g, |v| 1.0 + 2.0 * v[0] - v[1] + 0.5 * v[2]);
        for i in [0, 17, 300, g.len() - 1] {
            assert_eq!(interpolate(&g, &f, g.node(i)), f.values[i]);
        }
        let p = [0.31, -0.77, 1.1];
        let exact = 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[2];
        assert!((interpolate(&g, &f, p) - exact).abs() < 1e-12);
        assert_eq!(interpolate(&g, &f, [2.01, 0.0, 0.0]), 0.0);
        // half cell next to the face blends toward the zero ghost layer
        let edge = interpolate(&g, &f, [0.0, 0.0, 2.0]);
        let last = interpolate(&g, &f, [0.0, 0.0, 1.875]);
        assert!(edge.abs() < last.abs());
    }

    #[test]
    fn central_diff_transpose_is_adjoint() {
        let g = VelocityGrid::new(2.0, 6).unwrap();
        let a: Vec<f64> = (0..g.len()).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let b: Vec<f64> = (0..g.len()).map(|i| ((i * 13) % 7) as f64 - 3.0).collect();
        for axis in 0..3 {
            let da = central_diff(&g, &a, axis);
            let mut dtb = vec![0.0; g.len()];
            central_diff_transpose_add(&g, &b, axis, &mut dtb);
            let l: f64 = da.iter().zip(&b).map(|(x, y)| x * y).sum();
            let r: f64 = a.iter().zip(&dtb).map(|(x, y)| x * y).sum();
            assert!((l - r).abs() < 1e-10 * l.abs().max(1.0));
        }
    }
}
