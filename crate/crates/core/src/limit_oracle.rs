//! Reference solutions: the macroscopic temperature-relaxation system and an
//! un-split explicit kinetic integrator.

use crate::error::{invalid, Error, Result};
use crate::operators::{Collision, KernelSpec, Species};
use crate::phase_space::{dot, maxwellian, DistField, SphereRule, VelocityGrid};

/// Temperature-exchange rate `lambda(T)` evaluated by quadrature on a fixed grid.
#[derive(Debug, Clone)]
pub struct RelaxationRate {
    grid: VelocityGrid,
    sphere: SphereRule,
    kernel: KernelSpec,
}

impl RelaxationRate {
    pub fn new(grid: VelocityGrid, sphere: SphereRule, kernel: KernelSpec) -> Result<Self> {
        kernel.validate()?;
        Ok(Self { grid, sphere, kernel })
    }

    /// Boltzmann: `(2/3) int int B (v.Omega)^2 M_T dOmega dv`;
    /// Landau: `(2/3) int B(v) M_T dv`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid(format!("temperature must be positive, got {t}")));
        }
        let m = maxwellian(&self.grid, 1.0, [0.0; 3], t)?;
        let mut acc = 0.0;
        for (a, mv) in m.values.iter().enumerate() {
            let v = self.grid.node(a);
            let w = match &self.kernel {
                KernelSpec::Boltzmann(k) => k.b(dot(v, v).sqrt()) * self.sphere.integrate(|o| dot(v, o).powi(2)),
                KernelSpec::Fpl(k) => k.b(v),
            };
            acc += w * mv;
        }
        Ok(2.0 / 3.0 * acc * self.grid.weight())
    }
}

/// Convenience wrapper around [`RelaxationRate::eval`].
pub fn lambda_of_t(t: f64, grid: &VelocityGrid, sphere: &SphereRule, kernel: &KernelSpec) -> Result<f64> {
    RelaxationRate::new(grid.clone(), sphere.clone(), *kernel)?.eval(t)
}

/// Macroscopic state of the relaxation system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroState {
    pub n_l: f64,
    pub t_l: f64,
    pub n_h: f64,
    pub u_h: [f64; 3],
    pub t_h: f64,
    pub time: f64,
}

impl MacroState {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x > 0.0 && x.is_finite();
        if !(ok(self.n_l) && ok(self.n_h) && ok(self.t_l) && ok(self.t_h)) {
            return Err(invalid("densities and temperatures must be positive"));
        }
        Ok(())
    }

    /// `(3/2)(n_L T_L + n_H T_H)`.
    pub fn thermal_energy(&self) -> f64 {
        1.5 * (self.n_l * self.t_l + self.n_h * self.t_h)
    }
}

const RELAX_TOL: f64 = 1e-12;
const RELAX_MAX_ITER: usize = 200;

/// One backward-Euler step of
/// `d/dt (3 n_L T_L / 2) = -3 lambda(T_L) / T_L n_L n_H (T_L - T_H)` and its
/// mirror for the heavy species, with `lambda(T_L)` taken at the new time.
///
/// For a given coefficient the linear system is solved exactly in terms of the
/// conserved energy and the new temperature gap, so energy is conserved at every
/// iterate; the nonlinearity in `T_L` is resolved by damped fixed-point iteration.
pub fn relax_step_implicit(m: &MacroState, dt: f64, rate: &RelaxationRate) -> Result<MacroState> {
    m.validate()?;
    if !(dt >= 0.0) {
        return Err(invalid(format!("time step must be non-negative, got {dt}")));
    }
    let ntot = m.n_l + m.n_h;
    let e = m.n_l * m.t_l + m.n_h * m.t_h;
    let gap0 = m.t_l - m.t_h;
    let solve = |tl: f64| -> Result<(f64, f64)> {
        let kappa = 2.0 * dt * rate.eval(tl)? / tl;
        let gap = gap0 / (1.0 + kappa * ntot);
        Ok(((e + m.n_h * gap) / ntot, (e - m.n_l * gap) / ntot))
    };
    let mut tl = m.t_l;
    let mut out = (m.t_l, m.t_h);
    let mut converged = gap0 == 0.0 || dt == 0.0;
    let mut damping = 1.0;
    let mut last_change = f64::INFINITY;
    for _ in 0..RELAX_MAX_ITER {
        if converged {
            break;
        }
        out = solve(tl)?;
        let change = out.0 - tl;
        if change.abs() <= RELAX_TOL * tl.abs().max(1.0) {
            converged = true;
            break;
        }
        if change.abs() > last_change {
            damping *= 0.5;
        }
        last_change = change.abs();
        tl += damping * change;
        if !(tl > 0.0) {
            return Err(Error::NonFinite("implicit relaxation iterate".into()));
        }
    }
    if !converged {
        return Err(Error::NoConvergence { iterations: RELAX_MAX_ITER, residual: (solve(tl)?.0 - tl).abs() });
    }
    let (t_l, t_h) = if gap0 == 0.0 || dt == 0.0 { (m.t_l, m.t_h) } else { out };
    Ok(MacroState { t_l, t_h, time: m.time + dt, ..*m })
}

/// One output sample `(t, T_L, T_H)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxSample {
    pub t: f64,
    pub t_l: f64,
    pub t_h: f64,
}

/// Repeated implicit steps up to `t_end`; the last step is shortened to land on it.
pub fn solve_relaxation(m0: &MacroState, dt: f64, t_end: f64, rate: &RelaxationRate) -> Result<Vec<RelaxSample>> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(invalid("need dt > 0 and t_end >= 0"));
    }
    let mut m = *m0;
    let mut out = vec![RelaxSample { t: m.time, t_l: m.t_l, t_h: m.t_h }];
    let stop = m0.time + t_end;
    while m.time < stop - 1e-12 * dt {
        let h = dt.min(stop - m.time);
        m = relax_step_implicit(&m, h, rate)?;
        out.push(RelaxSample { t: m.time, t_l: m.t_l, t_h: m.t_h });
    }
    Ok(out)
}

/// Default stability constant for [`reference_rk4_step`].
pub const RK4_STABILITY: f64 = 0.1;

fn rk4_rhs(c: &Collision, fl: &DistField, fh: &DistField, eps: f64) -> Result<(DistField, DistField)> {
    let qll = c.intra(Species::Light, fl)?;
    let qhh = c.intra(Species::Heavy, fh)?;
    let (lh, hl) = c.inter_pair(fl, fh, eps)?;
    Ok((qll.add(&lh).scale(1.0 / (eps * eps)), qhh.add(&hl).scale(1.0 / eps)))
}

/// Classical RK4 for the un-split, un-penalised homogeneous system
/// `dfL/dt = (Q_LL + Q_LH) / eps^2`, `dfH/dt = (Q_HH + Q_HL) / eps`.
///
/// Rejects `dt > stability * eps^2`.
pub fn reference_rk4_step(
    fl: &DistField,
    fh: &DistField,
    eps: f64,
    dt: f64,
    c: &Collision,
    stability: f64,
) -> Result<(DistField, DistField)> {
    if !(eps > 0.0) || !(dt >= 0.0) {
        return Err(invalid("need eps > 0 and dt >= 0"));
    }
    let limit = stability * eps * eps;
    if dt > limit {
        return Err(Error::StabilityViolation { dt, limit });
    }
    let (k1l, k1h) = rk4_rhs(c, fl, fh, eps)?;
    let (k2l, k2h) = rk4_rhs(c, &fl.lin_comb(1.0, &k1l, 0.5 * dt), &fh.lin_comb(1.0, &k1h, 0.5 * dt), eps)?;
    let (k3l, k3h) = rk4_rhs(c, &fl.lin_comb(1.0, &k2l, 0.5 * dt), &fh.lin_comb(1.0, &k2h, 0.5 * dt), eps)?;
    let (k4l, k4h) = rk4_rhs(c, &fl.lin_comb(1.0, &k3l, dt), &fh.lin_comb(1.0, &k3h, dt), eps)?;
    let combine = |f: &DistField, k: [&DistField; 4]| {
        let mut out = f.clone();
        for (kk, w) in k.iter().zip([1.0, 2.0, 2.0, 1.0]) {
            out.axpy(dt * w / 6.0, kk);
        }
        out
    };
    Ok((combine(fl, [&k1l, &k2l, &k3l, &k4l]), combine(fh, [&k1h, &k2h, &k3h, &k4h])))
}
