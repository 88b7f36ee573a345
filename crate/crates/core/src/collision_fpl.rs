//! Fokker-Planck-Landau operators in conservative flux form.
//!
//! Fluxes live on interior cell faces. On the faces normal to axis `d` the
//! face gradient `G_d` uses a compact difference for the normal component and
//! the average of the two adjacent nodal central differences for the
//! tangential ones. A divergence is `-(1/3) sum_d G_d^T` applied to a face
//! flux, i.e. the average of three discrete weak forms. Since `G_d 1 = 0`,
//! every operator conserves mass to round-off, and a flux `A G_d f` with
//! positive semidefinite `A` gives a symmetric negative semidefinite map.
//! Boundary faces carry no flux.

use crate::collision_boltzmann::drift_apply;
use crate::error::{invalid, Result};
use crate::phase_space::{central_diff, central_diff_transpose_add, dot, gradient, DistField, VelocityGrid};
use rayon::prelude::*;

/// Landau kernel `K(w) = |w|^(gamma+2) (I - w w^T / |w|^2) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FplKernel {
    pub gamma: f64,
    /// Regularisation of `|w|` (and of `|v|^2` in the heavy drift).
    pub delta: f64,
}

impl FplKernel {
    /// Coulomb interaction, `gamma = -3`.
    pub fn coulomb(v_max: f64) -> Self {
        Self { gamma: -3.0, delta: 1e-6 * v_max }
    }

    pub fn validate(&self) -> Result<()> {
        if !(-3.0..=1.0).contains(&self.gamma) {
            return Err(invalid(format!("FPL gamma must lie in [-3, 1], got {}", self.gamma)));
        }
        if self.gamma + 2.0 < 0.0 && !(self.delta > 0.0) {
            return Err(invalid("delta must be positive when gamma + 2 < 0"));
        }
        Ok(())
    }

    fn singular(&self) -> bool {
        self.gamma + 2.0 < 0.0
    }

    /// Scalar part `B(|w|) = |w|^(gamma+2) / 2`.
    pub fn b(&self, w: [f64; 3]) -> f64 {
        let r2 = self.r2(w);
        if r2 == 0.0 {
            return 0.0;
        }
        0.5 * r2.powf(0.5 * (self.gamma + 2.0))
    }

    fn r2(&self, w: [f64; 3]) -> f64 {
        let r2 = dot(w, w);
        if self.singular() {
            r2 + self.delta * self.delta
        } else {
            r2
        }
    }

    /// Packed symmetric matrix `[xx, yy, zz, xy, xz, yz]`.
    #[inline]
    pub fn matrix(&self, w: [f64; 3]) -> [f64; 6] {
        let r2 = self.r2(w);
        if r2 == 0.0 {
            return [0.0; 6];
        }
        let s = if self.gamma == 0.0 { 0.5 * r2 } else { 0.5 * r2.powf(0.5 * (self.gamma + 2.0)) };
        let c = s / r2;
        [
            s - c * w[0] * w[0],
            s - c * w[1] * w[1],
            s - c * w[2] * w[2],
            -c * w[0] * w[1],
            -c * w[0] * w[2],
            -c * w[1] * w[2],
        ]
    }
}

#[inline]
pub(crate) fn sym_mul(a: &[f64; 6], x: [f64; 3]) -> [f64; 3] {
    [
        a[0] * x[0] + a[3] * x[1] + a[4] * x[2],
        a[3] * x[0] + a[1] * x[1] + a[5] * x[2],
        a[4] * x[0] + a[5] * x[1] + a[2] * x[2],
    ]
}

fn stride(grid: &VelocityGrid, axis: usize) -> usize {
    let n = grid.n();
    [n * n, n, 1][axis]
}

/// Lower-node indices of the interior faces normal to `axis`.
pub(crate) fn faces(grid: &VelocityGrid, axis: usize) -> Vec<usize> {
    (0..grid.len()).filter(|&a| grid.coords(a)[axis] + 1 < grid.n()).collect()
}

fn face_velocity(grid: &VelocityGrid, a: usize, axis: usize) -> [f64; 3] {
    let mut v = grid.node(a);
    v[axis] += 0.5 * grid.dv();
    v
}

/// Face gradients `G_axis f` on the faces listed by [`faces`].
pub(crate) fn face_gradient(grid: &VelocityGrid, f: &[f64], axis: usize, cd: &[Vec<f64>; 3]) -> Vec<[f64; 3]> {
    let s = stride(grid, axis);
    let inv = 1.0 / grid.dv();
    faces(grid, axis)
        .into_iter()
        .map(|a| {
            let mut g = [0.0; 3];
            for (e, ge) in g.iter_mut().enumerate() {
                *ge = if e == axis { (f[a + s] - f[a]) * inv } else { 0.5 * (cd[e][a] + cd[e][a + s]) };
            }
            g
        })
        .collect()
}

/// `out += G_axis^T flux`.
pub(crate) fn face_transpose_add(grid: &VelocityGrid, flux: &[[f64; 3]], axis: usize, out: &mut [f64]) {
    let s = stride(grid, axis);
    let inv = 1.0 / grid.dv();
    let mut tang = [vec![0.0; grid.len()], vec![0.0; grid.len()], vec![0.0; grid.len()]];
    for (fl, a) in flux.iter().zip(faces(grid, axis)) {
        out[a] -= fl[axis] * inv;
        out[a + s] += fl[axis] * inv;
        for e in (0..3).filter(|&e| e != axis) {
            tang[e][a] += 0.5 * fl[e];
            tang[e][a + s] += 0.5 * fl[e];
        }
    }
    for e in (0..3).filter(|&e| e != axis) {
        central_diff_transpose_add(grid, &tang[e], e, out);
    }
}

fn face_average(grid: &VelocityGrid, f: &[f64], axis: usize) -> Vec<f64> {
    let s = stride(grid, axis);
    faces(grid, axis).into_iter().map(|a| 0.5 * (f[a] + f[a + s])).collect()
}

/// `-(1/3) sum_d G_d^T flux_d`, the discrete divergence.
fn divergence(grid: &VelocityGrid, flux: &[Vec<[f64; 3]>; 3]) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    for (axis, fl) in flux.iter().enumerate() {
        face_transpose_add(grid, fl, axis, &mut out);
    }
    out.iter_mut().for_each(|x| *x *= -1.0 / 3.0);
    out
}

/// Linear diffusion `f -> -(1/3) sum_d G_d^T (A G_d f)` with face matrices.
#[derive(Debug, Clone)]
pub struct FaceDiffusion {
    grid: VelocityGrid,
    a: [Vec<[f64; 6]>; 3],
}

impl FaceDiffusion {
    /// The limit operator `div(K(v) grad f)`.
    pub fn limit(grid: &VelocityGrid, k: &FplKernel) -> Self {
        let a = std::array::from_fn(|axis| {
            faces(grid, axis).into_iter().map(|f| k.matrix(face_velocity(grid, f, axis))).collect()
        });
        Self { grid: grid.clone(), a }
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let cd = gradient(&self.grid, f);
        let flux: [Vec<[f64; 3]>; 3] = std::array::from_fn(|axis| {
            face_gradient(&self.grid, f, axis, &cd)
                .iter()
                .zip(&self.a[axis])
                .map(|(g, a)| sym_mul(a, *g))
                .collect()
        });
        divergence(&self.grid, &flux)
    }

    /// Largest spectral radius of the face matrices.
    pub fn max_spectral_radius(&self) -> f64 {
        self.a.iter().flatten().map(crate::penalty::sym3_spectral_radius).fold(0.0, f64::max)
    }
}

/// Per-face sums `A = sum w K(x_face - y) g(y)` and `c = sum w K(x_face - y) grad g(y)`
/// over source nodes `y` scaled by `scale`; `x_face` scaled by `face_scale`.
fn face_moments(
    grid: &VelocityGrid,
    k: &FplKernel,
    g: &DistField,
    axis: usize,
    face_scale: f64,
    source_scale: f64,
) -> Vec<([f64; 6], [f64; 3])> {
    let nodes = grid.nodes();
    let gg = gradient(grid, &g.values);
    let w = grid.weight();
    // sources where both value and gradient vanish contribute nothing
    let active: Vec<usize> = (0..grid.len())
        .filter(|&b| g.values[b] != 0.0 || gg[0][b] != 0.0 || gg[1][b] != 0.0 || gg[2][b] != 0.0)
        .collect();
    faces(grid, axis)
        .into_par_iter()
        .map(|fa| {
            let x = face_velocity(grid, fa, axis);
            let mut am = [0.0; 6];
            let mut c = [0.0; 3];
            for &b in &active {
                let y = nodes[b];
                let rel = [
                    face_scale * x[0] - source_scale * y[0],
                    face_scale * x[1] - source_scale * y[1],
                    face_scale * x[2] - source_scale * y[2],
                ];
                let km = k.matrix(rel);
                let gv = g.values[b];
                for (acc, kv) in am.iter_mut().zip(&km) {
                    *acc += kv * gv;
                }
                let kg = sym_mul(&km, [gg[0][b], gg[1][b], gg[2][b]]);
                for e in 0..3 {
                    c[e] += kg[e];
                }
            }
            (am.map(|x| x * w), c.map(|x| x * w))
        })
        .collect()
}

/// Symmetric bilinear intra-species operator for a list of products.
fn intra_products(grid: &VelocityGrid, k: &FplKernel, fields: &[&DistField], pairs: &[(usize, usize)]) -> Vec<DistField> {
    let cds: Vec<[Vec<f64>; 3]> = fields.iter().map(|f| gradient(grid, &f.values)).collect();
    let mut fluxes: Vec<[Vec<[f64; 3]>; 3]> = pairs.iter().map(|_| [vec![], vec![], vec![]]).collect();
    for axis in 0..3 {
        let mom: Vec<_> = fields.iter().map(|f| face_moments(grid, k, f, axis, 1.0, 1.0)).collect();
        let fg: Vec<_> = fields.iter().zip(&cds).map(|(f, cd)| face_gradient(grid, &f.values, axis, cd)).collect();
        let avg: Vec<_> = fields.iter().map(|f| face_average(grid, &f.values, axis)).collect();
        for (pi, &(r, t)) in pairs.iter().enumerate() {
            fluxes[pi][axis] = (0..fg[0].len())
                .map(|i| {
                    let (ar, cr) = &mom[r][i];
                    let (at, ct) = &mom[t][i];
                    let x = sym_mul(at, fg[r][i]);
                    let y = sym_mul(ar, fg[t][i]);
                    let mut out = [0.0; 3];
                    for e in 0..3 {
                        out[e] = 0.5 * (x[e] + y[e]) - 0.5 * (ct[e] * avg[r][i] + cr[e] * avg[t][i]);
                    }
                    out
                })
                .collect();
        }
    }
    fluxes.iter().map(|fl| DistField { values: divergence(grid, fl) }).collect()
}

/// Intra-species Landau operator `Q(f, f)`.
pub fn q_intra_fpl(grid: &VelocityGrid, f: &DistField, k: &FplKernel) -> Result<DistField> {
    grid.check(f)?;
    Ok(intra_products(grid, k, &[f], &[(0, 0)]).remove(0))
}

/// Symmetric bilinear form `Q(f, g)`.
pub fn q_intra_fpl_bilinear(grid: &VelocityGrid, f: &DistField, g: &DistField, k: &FplKernel) -> Result<DistField> {
    grid.check(f)?;
    grid.check(g)?;
    Ok(intra_products(grid, k, &[f, g], &[(0, 1)]).remove(0))
}

/// `Q(f, f)`, `Q(f, g)` and `Q(g, g)` sharing the face sums.
pub fn q_intra_fpl_triple(grid: &VelocityGrid, f: &DistField, g: &DistField, k: &FplKernel) -> Result<[DistField; 3]> {
    grid.check(f)?;
    grid.check(g)?;
    let mut v = intra_products(grid, k, &[f, g], &[(0, 0), (0, 1), (1, 1)]);
    let gg = v.pop().unwrap_or_else(|| DistField::zeros(grid));
    let fg = v.pop().unwrap_or_else(|| DistField::zeros(grid));
    let ff = v.pop().unwrap_or_else(|| DistField::zeros(grid));
    Ok([ff, fg, gg])
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    Ok(())
}

/// Light-heavy operator `div_L int K(vL - eps vH) (grad fL fH - eps grad fH fL) dvH`.
pub fn q_inter_lh_eps_fpl(grid: &VelocityGrid, fl: &DistField, fh: &DistField, eps: f64, k: &FplKernel) -> Result<DistField> {
    grid.check(fl)?;
    grid.check(fh)?;
    check_eps(eps)?;
    let cd = gradient(grid, &fl.values);
    let flux: [Vec<[f64; 3]>; 3] = std::array::from_fn(|axis| {
        let mom = face_moments(grid, k, fh, axis, 1.0, eps);
        let g = face_gradient(grid, &fl.values, axis, &cd);
        let avg = face_average(grid, &fl.values, axis);
        mom.iter()
            .zip(g.iter().zip(&avg))
            .map(|((a, c), (gi, fa))| {
                let x = sym_mul(a, *gi);
                [x[0] - eps * c[0] * fa, x[1] - eps * c[1] * fa, x[2] - eps * c[2] * fa]
            })
            .collect()
    });
    Ok(DistField { values: divergence(grid, &flux) })
}

/// Heavy-light operator `-div_H int K(vL - eps vH) (grad fL fH - eps grad fH fL) dvL`.
pub fn q_inter_hl_eps_fpl(grid: &VelocityGrid, fh: &DistField, fl: &DistField, eps: f64, k: &FplKernel) -> Result<DistField> {
    grid.check(fl)?;
    grid.check(fh)?;
    check_eps(eps)?;
    let cd = gradient(grid, &fh.values);
    let flux: [Vec<[f64; 3]>; 3] = std::array::from_fn(|axis| {
        // K is even, so K(eps x - y) = K(y - eps x)
        let mom = face_moments(grid, k, fl, axis, eps, 1.0);
        let g = face_gradient(grid, &fh.values, axis, &cd);
        let avg = face_average(grid, &fh.values, axis);
        mom.iter()
            .zip(g.iter().zip(&avg))
            .map(|((a, c), (gi, fa))| {
                let x = sym_mul(a, *gi);
                // sign flip: the heavy operator is minus the divergence
                [-(c[0] * fa - eps * x[0]), -(c[1] * fa - eps * x[1]), -(c[2] * fa - eps * x[2])]
            })
            .collect()
    });
    Ok(DistField { values: divergence(grid, &flux) })
}

/// `nH * div(K(v) grad fL)`.
pub fn q0_lh_fpl(grid: &VelocityGrid, fl: &DistField, nh: f64, k: &FplKernel) -> Result<DistField> {
    grid.check(fl)?;
    if !(nh >= 0.0) {
        return Err(invalid(format!("heavy density must be non-negative, got {nh}")));
    }
    if nh == 0.0 {
        return Ok(DistField::zeros(grid));
    }
    let values = FaceDiffusion::limit(grid, k).apply(&fl.values).into_iter().map(|x| nh * x).collect();
    Ok(DistField { values })
}

/// Drift `d = int B(v) / |v|^2 v fL dv` with regularised `|v|^2`.
pub fn drift_vector_fpl(grid: &VelocityGrid, fl: &DistField, k: &FplKernel) -> Result<[f64; 3]> {
    grid.check(fl)?;
    let delta2 = k.delta * k.delta;
    let mut d = [0.0; 3];
    for (a, x) in fl.values.iter().enumerate() {
        let v = grid.node(a);
        let c = k.b(v) / (dot(v, v) + delta2) * x;
        for i in 0..3 {
            d[i] += c * v[i];
        }
    }
    Ok(d.map(|x| x * grid.weight()))
}

/// `-2 grad(fH) . d` with central differences.
pub fn q0_hl_fpl(grid: &VelocityGrid, fh: &DistField, fl: &DistField, k: &FplKernel) -> Result<DistField> {
    grid.check(fh)?;
    let d = drift_vector_fpl(grid, fl, k)?;
    Ok(drift_apply(grid, fh, d))
}

/// Nodal diffusion matrices `D(g)(v) = int K(v - v*) g(v*) dv*`.
pub fn diffusion_matrices(grid: &VelocityGrid, g: &DistField, k: &FplKernel) -> Result<Vec<[f64; 6]>> {
    grid.check(g)?;
    let nodes = grid.nodes();
    let w = grid.weight();
    Ok((0..grid.len())
        .into_par_iter()
        .map(|a| {
            let mut m = [0.0; 6];
            for (b, y) in nodes.iter().enumerate() {
                if g.values[b] == 0.0 {
                    continue;
                }
                let x = nodes[a];
                let km = k.matrix([x[0] - y[0], x[1] - y[1], x[2] - y[2]]);
                for (acc, kv) in m.iter_mut().zip(&km) {
                    *acc += kv * g.values[b];
                }
            }
            m.map(|x| x * w)
        })
        .collect())
}

/// Nodal central difference re-exported for callers assembling fluxes.
pub fn nodal_derivative(grid: &VelocityGrid, f: &DistField, axis: usize) -> Vec<f64> {
    central_diff(grid, &f.values, axis)
}
