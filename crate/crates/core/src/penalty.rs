//! Stiffness removal: BGK relaxation penalty, constant-rate linear penalty,
//! and the linear Fokker-Planck penalty solved by conjugate gradients on its
//! symmetrised form.

use crate::collision_boltzmann::loss_rate;
use crate::collision_fpl::diffusion_matrices;
use crate::error::{invalid, Error, Result};
use crate::operators::KernelSpec;
use crate::phase_space::{dot, DistField, SphereRule, VelocityGrid};

/// Tunables shared by every penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConfig {
    /// Rate returned by [`bgk_beta`] when no ratio is available.
    pub beta_default: f64,
    /// Nodes with `|f - M| < beta_floor * max(M)` are ignored by [`bgk_beta`].
    pub beta_floor: f64,
    /// Fokker-Planck safety factor, must exceed 1/2.
    pub beta0: f64,
    /// Multiplier applied to strict lower bounds for `mu`.
    pub mu_margin: f64,
    /// Caps the BGK rate at `mu_margin` times the Boltzmann loss rate, so
    /// near-degenerate nodes of the ratio rule cannot freeze the update.
    pub beta_cap: bool,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self { beta_default: 1.0, beta_floor: 1e-12, beta0: 1.0, mu_margin: 1.1, beta_cap: true, cg_tol: 1e-10, cg_max_iter: 5000 }
    }
}

impl PenaltyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_default > 0.0) {
            return Err(invalid("beta_default must be positive"));
        }
        if !(self.beta_floor >= 0.0) {
            return Err(invalid("beta_floor must be non-negative"));
        }
        if !(self.beta0 > 0.5) {
            return Err(invalid(format!("beta0 must exceed 1/2, got {}", self.beta0)));
        }
        if !(self.mu_margin >= 1.0) {
            return Err(invalid("mu_margin must be at least 1"));
        }
        if !(self.cg_tol > 0.0) || self.cg_max_iter == 0 {
            return Err(invalid("CG tolerance and iteration cap must be positive"));
        }
        Ok(())
    }
}

fn max_ratio(num: &DistField, den: &DistField, floor: f64) -> Option<f64> {
    num.values
        .iter()
        .zip(&den.values)
        .filter(|(_, d)| d.abs() >= floor && **d != 0.0)
        .map(|(q, d)| (q / d).abs())
        .filter(|r| r.is_finite())
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))))
}

/// Relaxation rate `max |Q f / (f - M)|`.
///
/// Falls back to `max |(Q f - Q f_prev) / (f - f_prev)|` when every node is
/// degenerate and a previous state is supplied, then to `cfg.beta_default`.
pub fn bgk_beta(
    f: &DistField,
    m: &DistField,
    qf: &DistField,
    history: Option<(&DistField, &DistField)>,
    cfg: &PenaltyConfig,
) -> f64 {
    let floor = cfg.beta_floor * m.norm_inf();
    let pos = |r: Option<f64>| r.filter(|x| *x > 0.0);
    if let Some(b) = pos(max_ratio(qf, &f.sub(m), floor)) {
        return b;
    }
    if let Some((f_prev, q_prev)) = history {
        if let Some(b) = pos(max_ratio(&qf.sub(q_prev), &f.sub(f_prev), floor)) {
            return b;
        }
    }
    cfg.beta_default
}

/// Solves `f - c (M - f) = rhs` pointwise.
pub fn bgk_implicit_update(rhs: &DistField, m_next: &DistField, c: f64) -> Result<DistField> {
    if !(c >= 0.0) {
        return Err(invalid(format!("penalty coefficient must be non-negative, got {c}")));
    }
    if rhs.len() != m_next.len() {
        return Err(Error::GridMismatch { expected: rhs.len(), found: m_next.len() });
    }
    let values = rhs.values.iter().zip(&m_next.values).map(|(r, m)| (r + c * m) / (1.0 + c)).collect();
    Ok(DistField { values })
}

/// Which bound [`linear_mu`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearMuMode {
    /// `max_v int B(v, Omega) dOmega`, the loss rate of the Boltzmann limit operator.
    BoltzmannQ0,
    /// `max_v int int B g* dOmega dv*`, the loss part of the intra operator.
    BoltzmannLoss,
    /// `max_v rho(D(g)) / 2`.
    Fpl,
}

impl std::str::FromStr for LinearMuMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boltzmann-q0" => Ok(Self::BoltzmannQ0),
            "boltzmann-loss" => Ok(Self::BoltzmannLoss),
            "fpl" => Ok(Self::Fpl),
            other => Err(invalid(format!("unknown linear penalty mode `{other}`"))),
        }
    }
}

/// Strict lower bound for the linear-penalty rate (no safety margin).
///
/// `g` is required by the loss and FPL modes.
pub fn linear_mu(
    kernel: &KernelSpec,
    grid: &VelocityGrid,
    sphere: &SphereRule,
    mode: LinearMuMode,
    g: Option<&DistField>,
) -> Result<f64> {
    let need = || g.ok_or_else(|| invalid("this penalty mode needs the penalised field"));
    match (mode, kernel) {
        (LinearMuMode::BoltzmannQ0, KernelSpec::Boltzmann(k)) => {
            let total = sphere.total_weight();
            Ok((0..grid.len()).map(|a| k.b(dot(grid.node(a), grid.node(a)).sqrt()) * total).fold(0.0, f64::max))
        }
        (LinearMuMode::BoltzmannLoss, KernelSpec::Boltzmann(k)) => {
            Ok(loss_rate(grid, sphere, need()?, k)?.values.iter().fold(0.0, |a, x| a.max(x.abs())))
        }
        (LinearMuMode::Fpl, KernelSpec::Fpl(k)) => {
            let d = diffusion_matrices(grid, need()?, k)?;
            Ok(0.5 * d.iter().map(sym3_spectral_radius).fold(0.0, f64::max))
        }
        (mode, _) => Err(invalid(format!("penalty mode {mode:?} does not match the collision model"))),
    }
}

/// Eigenvalues of a packed symmetric 3x3 matrix `[xx, yy, zz, xy, xz, yz]`,
/// in ascending order (trigonometric closed form).
pub fn sym3_eigenvalues(a: &[f64; 6]) -> [f64; 3] {
    let p1 = a[3] * a[3] + a[4] * a[4] + a[5] * a[5];
    if p1 == 0.0 {
        let mut d = [a[0], a[1], a[2]];
        d.sort_by(f64::total_cmp);
        return d;
    }
    let q = (a[0] + a[1] + a[2]) / 3.0;
    let p2 = (a[0] - q).powi(2) + (a[1] - q).powi(2) + (a[2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = [(a[0] - q) / p, (a[1] - q) / p, (a[2] - q) / p, a[3] / p, a[4] / p, a[5] / p];
    let det = b[0] * (b[1] * b[2] - b[5] * b[5]) - b[3] * (b[3] * b[2] - b[5] * b[4]) + b[4] * (b[3] * b[5] - b[1] * b[4]);
    let r = (det / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let mid = 3.0 * q - hi - lo;
    [lo, mid, hi]
}

pub fn sym3_spectral_radius(a: &[f64; 6]) -> f64 {
    let e = sym3_eigenvalues(a);
    e[0].abs().max(e[2].abs())
}

fn sqrt_maxwellian(m: &DistField) -> Result<Vec<f64>> {
    if let Some(bad) = m.values.iter().find(|x| !(**x > 0.0)) {
        return Err(invalid(format!("penalty Maxwellian must be positive everywhere, found {bad}")));
    }
    Ok(m.values.iter().map(|x| x.sqrt()).collect())
}

/// Symmetrised operator `P~ h`, the sum over axes of the one-dimensional
/// stencil `(h_{j+1} - (s_{j+1} + s_{j-1}) / s_j h_j + h_{j-1}) / dv^2` with
/// `s = sqrt(M)`; neighbours outside the grid are dropped (zero flux).
pub fn fp_symmetric_apply(grid: &VelocityGrid, h: &[f64], s: &[f64]) -> Vec<f64> {
    let n = grid.n();
    let inv = 1.0 / (grid.dv() * grid.dv());
    let mut out = vec![0.0; h.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let c = grid.coords(idx);
        let mut acc = 0.0;
        for (axis, stride) in [n * n, n, 1].into_iter().enumerate() {
            if c[axis] + 1 < n {
                acc += h[idx + stride] - s[idx + stride] / s[idx] * h[idx];
            }
            if c[axis] > 0 {
                acc += h[idx - stride] - s[idx - stride] / s[idx] * h[idx];
            }
        }
        *o = acc * inv;
    }
    out
}

/// `P_FP f = sqrt(M) P~ (f / sqrt(M))`.
pub fn fp_penalty_apply(grid: &VelocityGrid, f: &DistField, m: &DistField) -> Result<DistField> {
    grid.check(f)?;
    grid.check(m)?;
    let s = sqrt_maxwellian(m)?;
    let h: Vec<f64> = f.values.iter().zip(&s).map(|(x, y)| x / y).collect();
    let p = fp_symmetric_apply(grid, &h, &s);
    Ok(DistField { values: p.iter().zip(&s).map(|(x, y)| x * y).collect() })
}

/// Solves `(I - c P_FP) f = rhs` via CG on `(I - c P~) h = rhs / sqrt(M)`.
pub fn fp_implicit_solve(
    grid: &VelocityGrid,
    rhs: &DistField,
    m_next: &DistField,
    c: f64,
    cfg: &PenaltyConfig,
) -> Result<DistField> {
    grid.check(rhs)?;
    grid.check(m_next)?;
    if !(c >= 0.0) {
        return Err(invalid(format!("penalty coefficient must be non-negative, got {c}")));
    }
    if c == 0.0 {
        return Ok(rhs.clone());
    }
    let s = sqrt_maxwellian(m_next)?;
    let b: Vec<f64> = rhs.values.iter().zip(&s).map(|(x, y)| x / y).collect();
    let op = |h: &[f64]| {
        let p = fp_symmetric_apply(grid, h, &s);
        h.iter().zip(p).map(|(x, y)| x - c * y).collect::<Vec<f64>>()
    };
    let (h, _) = cg_solve(op, &b, None, cfg.cg_tol, cfg.cg_max_iter)?;
    Ok(DistField { values: h.iter().zip(&s).map(|(x, y)| x * y).collect() })
}

/// Conjugate gradients for a symmetric positive definite operator.
///
/// Stops when `|r| <= tol |b|`; returns the solution and iteration count.
pub fn cg_solve<F>(apply: F, b: &[f64], x0: Option<&[f64]>, tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let bn = norm(b);
    let mut x = x0.map_or_else(|| vec![0.0; b.len()], |x| x.to_vec());
    if bn == 0.0 {
        return Ok((vec![0.0; b.len()], 0));
    }
    let ax = apply(&x);
    let mut r: Vec<f64> = b.iter().zip(ax).map(|(bi, ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    for it in 0..max_iter {
        if rr.sqrt() <= tol * bn {
            return Ok((x, it));
        }
        let ap = apply(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::NoConvergence { iterations: it, residual: rr.sqrt() / bn });
        }
        let alpha = rr / pap;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..p.len() {
            p[i] = r[i] + beta * p[i];
        }
    }
    if rr.sqrt() <= tol * bn {
        return Ok((x, max_iter));
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: rr.sqrt() / bn })
}
