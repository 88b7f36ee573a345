//! Boltzmann collision operators: intra-species, mass-ratio dependent
//! inter-species, and their limits as the mass ratio vanishes.
//!
//! Angular integrals use the reflection parametrisation: for relative
//! velocity `w` and direction `Omega`, the scattered direction is
//! `w - 2 (w . Omega) Omega`. The kernel is `B = b0 |w|^gamma / 2` per unit
//! solid angle of `Omega`. With this convention the limit operator `q0`, the
//! energy-exchange rate `lambda(T)` and the finite-`eps` operators all
//! describe one collision law, so `Q_eps -> Q_0` on the lattice.
//!
//! Post-collision values come from trilinear interpolation. Every map used
//! here depends on `Omega` only through `(a . Omega) Omega`, so the sphere
//! sums run over one direction per antipodal pair with doubled weight.

use crate::error::{invalid, Result};
use crate::phase_space::{dot, DistField, Interpolator, SphereRule, VelocityGrid};
use rayon::prelude::*;

/// Kernel `B(w) = b0 * |w|^gamma / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoltzKernel {
    pub gamma: f64,
    pub b0: f64,
    /// Regularisation of `|w|` used when `gamma < 0`.
    pub delta: f64,
}

impl BoltzKernel {
    /// Maxwell molecules with unit angular factor.
    pub fn maxwell(v_max: f64) -> Self {
        Self { gamma: 0.0, b0: 1.0, delta: 1e-6 * v_max }
    }

    pub fn validate(&self) -> Result<()> {
        if !(-2.0..=1.0).contains(&self.gamma) {
            return Err(invalid(format!("Boltzmann gamma must lie in [-2, 1], got {}", self.gamma)));
        }
        if !(self.b0 > 0.0 && self.b0.is_finite()) {
            return Err(invalid(format!("b0 must be positive, got {}", self.b0)));
        }
        if self.gamma < 0.0 && !(self.delta > 0.0) {
            return Err(invalid("delta must be positive for gamma < 0"));
        }
        Ok(())
    }

    /// Kernel value for a relative speed `r`.
    #[inline]
    pub fn b(&self, r: f64) -> f64 {
        if self.gamma == 0.0 {
            0.5 * self.b0
        } else if self.gamma < 0.0 {
            0.5 * self.b0 * (r * r + self.delta * self.delta).powf(0.5 * self.gamma)
        } else {
            0.5 * self.b0 * r.powf(self.gamma)
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    Ok(())
}

/// Symmetric bilinear intra-species operator `Q(f, g)`.
pub fn q_intra(
    grid: &VelocityGrid,
    sphere: &SphereRule,
    f: &DistField,
    g: &DistField,
    k: &BoltzKernel,
) -> Result<DistField> {
    grid.check(f)?;
    grid.check(g)?;
    if f == g {
        return Ok(intra_products(grid, sphere, k, &[f], &[(0, 0)]).remove(0));
    }
    Ok(intra_products(grid, sphere, k, &[f, g], &[(0, 1)]).remove(0))
}

/// Quadratic intra-species operator `Q(f, f)`.
pub fn q_intra_quad(grid: &VelocityGrid, sphere: &SphereRule, f: &DistField, k: &BoltzKernel) -> Result<DistField> {
    grid.check(f)?;
    Ok(intra_products(grid, sphere, k, &[f], &[(0, 0)]).remove(0))
}

/// `Q(f, f)`, `Q(f, g)` and `Q(g, g)` from one sweep.
pub fn q_intra_triple(
    grid: &VelocityGrid,
    sphere: &SphereRule,
    f: &DistField,
    g: &DistField,
    k: &BoltzKernel,
) -> Result<[DistField; 3]> {
    grid.check(f)?;
    grid.check(g)?;
    let mut out = intra_products(grid, sphere, k, &[f, g], &[(0, 0), (0, 1), (1, 1)]);
    let gg = out.pop().unwrap_or_else(|| DistField::zeros(grid));
    let fg = out.pop().unwrap_or_else(|| DistField::zeros(grid));
    let ff = out.pop().unwrap_or_else(|| DistField::zeros(grid));
    Ok([ff, fg, gg])
}

/// Polarisation: `(op(f+g) - op(f-g)) / 4`.
pub fn bilinear<F>(op: F, f: &DistField, g: &DistField) -> Result<DistField>
where
    F: Fn(&DistField) -> Result<DistField>,
{
    let plus = op(&f.add(g))?;
    let minus = op(&f.sub(g))?;
    Ok(plus.lin_comb(0.25, &minus, -0.25))
}

/// Integer range of `i` with `lo <= i + shift <= hi`, using real bounds.
#[inline]
fn range_for(lo: f64, hi: f64) -> (i64, i64) {
    (lo.ceil() as i64, hi.floor() as i64)
}

/// Gain minus loss for symmetric products of up to two fields.
///
/// For a lattice difference `w = v - v*` the offset `(w . Omega) Omega` is
/// shared by every pair with that difference, so the trilinear stencil is
/// fixed and the inner loop streams over a box of nodes. Pairs `(v, v*)` and
/// `(v*, v)` carry the same symmetric product, so only half of the
/// differences are visited and each contribution is credited to both ends.
fn intra_products(
    grid: &VelocityGrid,
    sphere: &SphereRule,
    k: &BoltzKernel,
    fields: &[&DistField],
    pairs: &[(usize, usize)],
) -> Vec<DistField> {
    debug_assert!(fields.len() <= 2);
    let n = grid.n();
    let ni = n as i64;
    let dv = grid.dv();
    let pads: Vec<Vec<f64>> = fields.iter().map(|f| Interpolator::new(grid, f).data).collect();
    let m = n + 2;
    let corners = [0, 1, m, m + 1, m * m, m * m + 1, m * m + m, m * m + m + 1];
    let half = sphere.antipodal_half();
    let len = grid.len();
    let np = pairs.len();

    let partials: Vec<Vec<f64>> = half
        .par_iter()
        .map(|(o, wo)| {
            let mut gain = vec![0.0; np * len];
            let mut vp = [0.0f64; 2];
            let mut vq = [0.0f64; 2];
            for dx in 0..ni {
                let dy_lo = if dx == 0 { 0 } else { 1 - ni };
                for dy in dy_lo..ni {
                    let dz_lo = if dx == 0 && dy == 0 { 0 } else { 1 - ni };
                    for dz in dz_lo..ni {
                        let w = [dx as f64, dy as f64, dz as f64];
                        let coef = wo * k.b(dot(w, w).sqrt() * dv);
                        let c = dot(w, *o);
                        let s = [c * o[0], c * o[1], c * o[2]];
                        let d = [dx, dy, dz];
                        let mut lo = [0i64; 3];
                        let mut hi = [0i64; 3];
                        let mut fp = [0i64; 3];
                        let mut fq = [0i64; 3];
                        let mut tp = [0.0; 3];
                        let mut tq = [0.0; 3];
                        let mut empty = false;
                        for ax in 0..3 {
                            let (plo, phi) = range_for(s[ax] - 0.5, n as f64 - 0.5 + s[ax]);
                            let (qlo, qhi) = range_for(d[ax] as f64 - s[ax] - 0.5, (d[ax] + ni) as f64 - 0.5 - s[ax]);
                            lo[ax] = plo.max(qlo).max(d[ax].max(0));
                            hi[ax] = phi.min(qhi).min((ni - 1).min(ni - 1 + d[ax]));
                            if lo[ax] > hi[ax] {
                                empty = true;
                                break;
                            }
                            let xp = -s[ax];
                            fp[ax] = xp.floor() as i64;
                            tp[ax] = xp - fp[ax] as f64;
                            fq[ax] = s[ax].floor() as i64;
                            tq[ax] = s[ax] - fq[ax] as f64;
                        }
                        if empty {
                            continue;
                        }
                        let wp = corner_weights(tp);
                        let wq = corner_weights(tq);
                        let shift_b = ((dx * ni + dy) * ni + dz) as isize;
                        for i in lo[0]..=hi[0] {
                            for j in lo[1]..=hi[1] {
                                let row_a = ((i * ni + j) * ni) as usize;
                                let bp_row = (((i + 1 + fp[0]) as usize) * m + (j + 1 + fp[1]) as usize) * m;
                                let bq_row = (((i - dx + 1 + fq[0]) as usize) * m + (j - dy + 1 + fq[1]) as usize) * m;
                                for kk in lo[2]..=hi[2] {
                                    let a = row_a + kk as usize;
                                    let bp = bp_row + (kk + 1 + fp[2]) as usize;
                                    let bq = bq_row + (kk - dz + 1 + fq[2]) as usize;
                                    for (fi, pad) in pads.iter().enumerate() {
                                        let mut sp = 0.0;
                                        let mut sq = 0.0;
                                        for cn in 0..8 {
                                            sp += wp[cn] * pad[bp + corners[cn]];
                                            sq += wq[cn] * pad[bq + corners[cn]];
                                        }
                                        vp[fi] = sp;
                                        vq[fi] = sq;
                                    }
                                    let b = (a as isize - shift_b) as usize;
                                    for (pi, &(r, t)) in pairs.iter().enumerate() {
                                        let prod = if r == t {
                                            vp[r] * vq[r]
                                        } else {
                                            0.5 * (vp[r] * vq[t] + vp[t] * vq[r])
                                        };
                                        let base = pi * len;
                                        gain[base + a] += coef * prod;
                                        if a != b {
                                            gain[base + b] += coef * prod;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
            gain
        })
        .collect();

    let mut gain = vec![0.0; np * len];
    for part in &partials {
        for (g, p) in gain.iter_mut().zip(part) {
            *g += p;
        }
    }
    let total = sphere.total_weight();
    let convs: Vec<Vec<f64>> = fields.iter().map(|f| kernel_convolution(grid, f, k)).collect();
    let w = grid.weight();
    pairs
        .iter()
        .enumerate()
        .map(|(pi, &(r, t))| {
            let (fr, ft) = (&fields[r].values, &fields[t].values);
            let values = (0..len)
                .map(|a| {
                    let loss = 0.5 * (fr[a] * convs[t][a] + ft[a] * convs[r][a]);
                    w * (gain[pi * len + a] - total * loss)
                })
                .collect();
            DistField { values }
        })
        .collect()
}

#[inline]
fn corner_weights(t: [f64; 3]) -> [f64; 8] {
    let (x0, x1) = (1.0 - t[0], t[0]);
    let (y0, y1) = (1.0 - t[1], t[1]);
    let (z0, z1) = (1.0 - t[2], t[2]);
    [
        x0 * y0 * z0,
        x0 * y0 * z1,
        x0 * y1 * z0,
        x0 * y1 * z1,
        x1 * y0 * z0,
        x1 * y0 * z1,
        x1 * y1 * z0,
        x1 * y1 * z1,
    ]
}

/// `sum_{v*} B(|v - v*|) g(v*)` at every node (no weights).
fn kernel_convolution(grid: &VelocityGrid, g: &DistField, k: &BoltzKernel) -> Vec<f64> {
    if k.gamma == 0.0 {
        let s: f64 = g.values.iter().sum();
        return vec![k.b(0.0) * s; grid.len()];
    }
    let nodes = grid.nodes();
    (0..grid.len())
        .into_par_iter()
        .map(|a| {
            let v = nodes[a];
            nodes
                .iter()
                .zip(&g.values)
                .map(|(vs, gv)| {
                    let r = [v[0] - vs[0], v[1] - vs[1], v[2] - vs[2]];
                    k.b(dot(r, r).sqrt()) * gv
                })
                .sum()
        })
        .collect()
}

/// Loss rate `int int B(v - v*, Omega) g(v*) dOmega dv*` at every node.
pub fn loss_rate(grid: &VelocityGrid, sphere: &SphereRule, g: &DistField, k: &BoltzKernel) -> Result<DistField> {
    grid.check(g)?;
    let c = sphere.total_weight() * grid.weight();
    let values = kernel_convolution(grid, g, k).into_iter().map(|x| c * x).collect();
    Ok(DistField { values })
}

/// Both inter-species operators for one pair of arguments from a single
/// sweep over `(v_L, v_H, Omega)`: returns `(Q_LH(fL, fH), Q_HL(fH, fL))`.
///
/// With `w = v_L - eps v_H` the post-collision velocities are
/// `v_L' = v_L - 2 (w.Omega) Omega / (1 + eps^2)` and, in the heavy scaled
/// variable, `v_H' = v_H + 2 eps (w.Omega) Omega / (1 + eps^2)`. Each triple
/// contributes the same product to the light operator at `v_L` and the heavy
/// operator at `v_H`. The heavy operator carries an extra `1/eps` so that it
/// tends to [`q0_hl`] and `int Q_LH |v|^2 + eps int Q_HL |v|^2 = 0`.
pub fn q_inter_pair(
    grid: &VelocityGrid,
    sphere: &SphereRule,
    fl: &DistField,
    fh: &DistField,
    eps: f64,
    k: &BoltzKernel,
) -> Result<(DistField, DistField)> {
    grid.check(fl)?;
    grid.check(fh)?;
    check_eps(eps)?;
    let n = grid.n();
    let len = grid.len();
    let half = sphere.antipodal_half();
    let nodes = grid.nodes();
    let li = Interpolator::new(grid, fl);
    let hi = Interpolator::new(grid, fh);
    let (cl, ch) = (2.0 / (1.0 + eps * eps), 2.0 * eps / (1.0 + eps * eps));
    let total = sphere.total_weight();

    // one chunk per i-plane of light velocities; heavy partials summed in order
    let chunks: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|plane| {
            let mut lh = vec![0.0; n * n];
            let mut hl = vec![0.0; len];
            for (off, lh_a) in lh.iter_mut().enumerate() {
                let a = plane * n * n + off;
                let vl = nodes[a];
                let fa = fl.values[a];
                for (b, vh) in nodes.iter().enumerate() {
                    let rel = [vl[0] - eps * vh[0], vl[1] - eps * vh[1], vl[2] - eps * vh[2]];
                    let bw = k.b(dot(rel, rel).sqrt());
                    let mut gain = 0.0;
                    for (o, wo) in &half {
                        let c = dot(rel, *o);
                        let pl = [vl[0] - cl * c * o[0], vl[1] - cl * c * o[1], vl[2] - cl * c * o[2]];
                        let ph = [vh[0] + ch * c * o[0], vh[1] + ch * c * o[1], vh[2] + ch * c * o[2]];
                        let x = li.eval(pl);
                        if x != 0.0 {
                            gain += wo * x * hi.eval(ph);
                        }
                    }
                    let net = bw * (gain - total * fa * fh.values[b]);
                    *lh_a += net;
                    hl[b] += net;
                }
            }
            (lh, hl)
        })
        .collect();

    let w = grid.weight();
    let mut lh = Vec::with_capacity(len);
    let mut hl = vec![0.0; len];
    for (l, h) in &chunks {
        lh.extend(l.iter().map(|x| w * x));
        for (acc, x) in hl.iter_mut().zip(h) {
            *acc += x;
        }
    }
    let wh = w / eps;
    hl.iter_mut().for_each(|x| *x *= wh);
    Ok((DistField { values: lh }, DistField { values: hl }))
}

/// Light-heavy operator at finite mass ratio, evaluated at light velocities.
pub fn q_inter_lh_eps(
    grid: &VelocityGrid,
    sphere: &SphereRule,
    fl: &DistField,
    fh: &DistField,
    eps: f64,
    k: &BoltzKernel,
) -> Result<DistField> {
    Ok(q_inter_pair(grid, sphere, fl, fh, eps, k)?.0)
}

/// Heavy-light operator at finite mass ratio, evaluated at heavy velocities.
pub fn q_inter_hl_eps(
    grid: &VelocityGrid,
    sphere: &SphereRule,
    fh: &DistField,
    fl: &DistField,
    eps: f64,
    k: &BoltzKernel,
) -> Result<DistField> {
    Ok(q_inter_pair(grid, sphere, fl, fh, eps, k)?.1)
}

/// `nH * q0(fL)` with `q0(f)(v) = int B(v, Omega) (f(v - 2(v.Omega)Omega) - f(v)) dOmega`.
pub fn q0_lh(grid: &VelocityGrid, sphere: &SphereRule, fl: &DistField, nh: f64, k: &BoltzKernel) -> Result<DistField> {
    grid.check(fl)?;
    if !(nh >= 0.0) {
        return Err(invalid(format!("heavy density must be non-negative, got {nh}")));
    }
    if nh == 0.0 {
        return Ok(DistField::zeros(grid));
    }
    let half = sphere.antipodal_half();
    let total = sphere.total_weight();
    let li = Interpolator::new(grid, fl);
    let values = (0..grid.len())
        .into_par_iter()
        .map(|a| {
            let v = grid.node(a);
            let bw = k.b(dot(v, v).sqrt());
            let mut gain = 0.0;
            for (o, wo) in &half {
                let c = 2.0 * dot(v, *o);
                gain += wo * li.eval([v[0] - c * o[0], v[1] - c * o[1], v[2] - c * o[2]]);
            }
            nh * bw * (gain - total * fl.values[a])
        })
        .collect();
    Ok(DistField { values })
}

/// Drift vector `d = int int B(v, Omega) (v.Omega)^2 / |v|^2 v fL dOmega dv`.
pub fn drift_vector(grid: &VelocityGrid, sphere: &SphereRule, fl: &DistField, k: &BoltzKernel) -> Result<[f64; 3]> {
    grid.check(fl)?;
    let delta2 = k.delta * k.delta;
    let mut d = [0.0; 3];
    for (a, x) in fl.values.iter().enumerate() {
        let v = grid.node(a);
        let r2 = dot(v, v);
        let ang = sphere.integrate(|o| dot(v, o).powi(2));
        let c = k.b(r2.sqrt()) * ang / (r2 + delta2) * x;
        for i in 0..3 {
            d[i] += c * v[i];
        }
    }
    let w = grid.weight();
    Ok([d[0] * w, d[1] * w, d[2] * w])
}

/// `-2 grad(fH) . d` with central differences.
pub fn q0_hl(grid: &VelocityGrid, sphere: &SphereRule, fh: &DistField, fl: &DistField, k: &BoltzKernel) -> Result<DistField> {
    grid.check(fh)?;
    let d = drift_vector(grid, sphere, fl, k)?;
    Ok(drift_apply(grid, fh, d))
}

/// `-2 grad(fH) . d` for a precomputed drift vector.
pub fn drift_apply(grid: &VelocityGrid, fh: &DistField, d: [f64; 3]) -> DistField {
    let mut out = vec![0.0; grid.len()];
    for (axis, da) in d.iter().enumerate() {
        if *da == 0.0 {
            continue;
        }
        let g = crate::phase_space::central_diff(grid, &fh.values, axis);
        for (o, gv) in out.iter_mut().zip(g) {
            *o -= 2.0 * da * gv;
        }
    }
    DistField { values: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::{integrate, maxwellian, moments};
    use std::f64::consts::PI;

    fn setup(n: usize) -> (VelocityGrid, SphereRule, BoltzKernel) {
        let g = VelocityGrid::new(6.0, n).unwrap();
        (g.clone(), SphereRule::new(4).unwrap(), BoltzKernel::maxwell(g.v_max()))
    }

    fn bump(g: &VelocityGrid) -> DistField {
        DistField::from_fn(g, |v| {
            let a = [v[0] - 0.7, v[1] + 0.3, v[2]];
            (-dot(a, a) / 1.2).exp() * (1.0 + 0.2 * v[0])
        })
    }

    /// Direct evaluation with one interpolation per post-collision point.
    fn intra_direct(g: &VelocityGrid, s: &SphereRule, f: &DistField, k: &BoltzKernel) -> DistField {
        let it = Interpolator::new(g, f);
        let nodes = g.nodes();
        let values = (0..g.len())
            .map(|a| {
                let v = nodes[a];
                let mut sum = 0.0;
                for (b, vs) in nodes.iter().enumerate() {
                    let w = [v[0] - vs[0], v[1] - vs[1], v[2] - vs[2]];
                    let bw = k.b(dot(w, w).sqrt());
                    let gain = s.integrate(|o| {
                        let c = dot(w, o);
                        let p = [v[0] - c * o[0], v[1] - c * o[1], v[2] - c * o[2]];
                        let q = [vs[0] + c * o[0], vs[1] + c * o[1], vs[2] + c * o[2]];
                        it.eval(p) * it.eval(q)
                    });
                    sum += bw * (gain - s.total_weight() * f.values[a] * f.values[b]);
                }
                sum * g.weight()
            })
            .collect();
        DistField { values }
    }

    #[test]
    fn streamed_sweep_matches_direct_quadrature() {
        let (g, s, _) = setup(6);
        for k in [BoltzKernel::maxwell(6.0), BoltzKernel { gamma: 1.0, b0: 0.7, delta: 0.0 }] {
            let f = bump(&g);
            let a = q_intra_quad(&g, &s, &f, &k).unwrap();
            let b = intra_direct(&g, &s, &f, &k);
            assert!(a.sub(&b).norm_inf() <= 1e-12 * b.norm_inf(), "{}", a.sub(&b).norm_inf());
        }
    }

    #[test]
    fn zero_argument_gives_zero() {
        let (g, s, k) = setup(4);
        let f = bump(&g);
        let z = DistField::zeros(&g);
        assert_eq!(q_intra(&g, &s, &z, &f, &k).unwrap().norm_inf(), 0.0);
        assert_eq!(q_inter_lh_eps(&g, &s, &f, &z, 0.5, &k).unwrap().norm_inf(), 0.0);
        assert_eq!(q_inter_hl_eps(&g, &s, &f, &z, 0.5, &k).unwrap().norm_inf(), 0.0);
        assert_eq!(q0_lh(&g, &s, &f, 0.0, &k).unwrap().norm_inf(), 0.0);
        assert!(q_inter_lh_eps(&g, &s, &f, &f, 0.0, &k).is_err());
    }

    #[test]
    fn intra_is_bilinear_and_symmetric() {
        let (g, s, k) = setup(4);
        let f = bump(&g);
        let h = maxwellian(&g, 1.0, [0.2, 0.0, -0.1], 0.8).unwrap();
        let a = q_intra(&g, &s, &f.scale(3.0), &h, &k).unwrap();
        let b = q_intra(&g, &s, &f, &h, &k).unwrap().scale(3.0);
        assert!(a.sub(&b).norm_inf() <= 1e-12 * b.norm_inf());
        let c = q_intra(&g, &s, &h, &f, &k).unwrap();
        assert!(c.sub(&b.scale(1.0 / 3.0)).norm_inf() <= 1e-13 * c.norm_inf());
    }

    #[test]
    fn triple_matches_separate_sweeps() {
        let (g, s, k) = setup(4);
        let f = bump(&g);
        let h = maxwellian(&g, 0.5, [0.2, 0.0, -0.1], 0.8).unwrap();
        let [ff, fh, hh] = q_intra_triple(&g, &s, &f, &h, &k).unwrap();
        for (x, y) in [
            (ff, q_intra_quad(&g, &s, &f, &k).unwrap()),
            (fh, q_intra(&g, &s, &f, &h, &k).unwrap()),
            (hh, q_intra_quad(&g, &s, &h, &k).unwrap()),
        ] {
            assert!(x.sub(&y).norm_inf() <= 1e-14 * y.norm_inf().max(1e-300));
        }
    }

    #[test]
    fn polarisation_matches_quadratic() {
        let (g, s, k) = setup(4);
        let f = bump(&g);
        let op = |x: &DistField| q_intra_quad(&g, &s, x, &k);
        let p = bilinear(op, &f, &f).unwrap();
        let q = op(&f).unwrap();
        assert!(p.sub(&q).norm_inf() <= 1e-12 * q.norm_inf());
        assert!(bilinear(op, &f, &DistField::zeros(&g)).unwrap().norm_inf() <= 1e-15 * q.norm_inf());
    }

    #[test]
    fn intra_mass_residual_shrinks_with_n() {
        let k = BoltzKernel::maxwell(6.0);
        let s = SphereRule::new(4).unwrap();
        let res: Vec<f64> = [6, 10]
            .iter()
            .map(|&n| {
                let g = VelocityGrid::new(6.0, n).unwrap();
                let f = bump(&g);
                integrate(&g, &q_intra_quad(&g, &s, &f, &k).unwrap(), |_| 1.0).abs()
            })
            .collect();
        assert!(res[1] < 0.5 * res[0], "{res:?}");
    }

    #[test]
    fn q0_isotropic_residual_shrinks_and_energy_is_small() {
        let s = SphereRule::new(4).unwrap();
        let k = BoltzKernel::maxwell(6.0);
        let mut prev = f64::INFINITY;
        for n in [8, 16] {
            let g = VelocityGrid::new(6.0, n).unwrap();
            let f = maxwellian(&g, 1.0, [0.0; 3], 1.0).unwrap();
            let r = q0_lh(&g, &s, &f, 1.0, &k).unwrap().norm_inf() / f.norm_inf();
            assert!(r < prev);
            prev = r;
        }
        // interpolation bias in the energy moment decays under refinement
        let e: Vec<f64> = [8, 16]
            .iter()
            .map(|&n| {
                let g = VelocityGrid::new(6.0, n).unwrap();
                let shifted = maxwellian(&g, 1.0, [0.3, 0.0, 0.0], 1.0).unwrap();
                let q = q0_lh(&g, &s, &shifted, 1.0, &k).unwrap();
                integrate(&g, &q, |v| dot(v, v)).abs() / (2.0 * PI * integrate(&g, &shifted, |v| dot(v, v)))
            })
            .collect();
        assert!(e[1] < 0.5 * e[0] && e[1] < 0.15, "{e:?}");
    }

    #[test]
    fn drift_of_even_field_is_round_off() {
        let (g, s, k) = setup(8);
        let f = maxwellian(&g, 1.0, [0.0; 3], 1.3).unwrap();
        let d = drift_vector(&g, &s, &f, &k).unwrap();
        assert!(d.iter().all(|x| x.abs() < 1e-14));
        let c = DistField::from_fn(&g, |_| 2.0);
        let shifted = maxwellian(&g, 1.0, [0.4, 0.0, 0.0], 1.0).unwrap();
        assert!(q0_hl(&g, &s, &c, &shifted, &k).unwrap().norm_inf() < 1e-13);
    }

    #[test]
    fn drift_closed_form_for_maxwell_molecules() {
        // d = B (4 pi / 3) int v f dv for gamma = 0
        let (g, s, k) = setup(8);
        let f = maxwellian(&g, 1.0, [0.4, 0.0, 0.0], 1.0).unwrap();
        let d = drift_vector(&g, &s, &f, &k).unwrap();
        let p = moments(&g, &f).p1;
        let expect = 0.5 * 4.0 * PI / 3.0 * p[0];
        assert!((d[0] - expect).abs() < 1e-6 * expect);
    }

    #[test]
    fn inter_tends_to_limit_at_first_order() {
        // a drifting heavy species makes the O(eps) term visible
        let (g, s, k) = setup(6);
        let fl = bump(&g);
        let fh = maxwellian(&g, 1.0, [0.5, 0.0, 0.0], 1.0).unwrap();
        let nh = integrate(&g, &fh, |_| 1.0);
        let q0 = q0_lh(&g, &s, &fl, nh, &k).unwrap();
        let e1 = q_inter_lh_eps(&g, &s, &fl, &fh, 2e-3, &k).unwrap().sub(&q0).norm_inf();
        let e2 = q_inter_lh_eps(&g, &s, &fl, &fh, 1e-3, &k).unwrap().sub(&q0).norm_inf();
        assert!(e1 < 1e-2 * q0.norm_inf());
        assert!((e1 / e2 - 2.0).abs() < 0.2, "ratio {}", e1 / e2);
    }

    #[test]
    fn pair_sweep_balances_mass_between_species() {
        // every net contribution is credited to both sides
        let (g, s, k) = setup(4);
        let fl = bump(&g);
        let fh = maxwellian(&g, 1.0, [0.1, 0.0, 0.0], 0.7).unwrap();
        let eps = 0.5;
        let (lh, hl) = q_inter_pair(&g, &s, &fl, &fh, eps, &k).unwrap();
        let ml = integrate(&g, &lh, |_| 1.0);
        let mh = integrate(&g, &hl, |_| 1.0);
        assert!((ml - eps * mh).abs() < 1e-13 * (ml.abs() + 1e-3));
    }

    #[test]
    fn loss_rate_maxwell_closed_form() {
        let (g, s, k) = setup(4);
        let f = maxwellian(&g, 2.0, [0.0; 3], 1.0).unwrap();
        let r = loss_rate(&g, &s, &f, &k).unwrap();
        let n = integrate(&g, &f, |_| 1.0);
        assert!((r.values[5] - 2.0 * PI * n).abs() < 1e-12);
    }
}
