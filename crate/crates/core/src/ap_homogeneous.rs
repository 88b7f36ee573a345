//! Space-homogeneous asymptotic-preserving integrator for the split state
//! `f = f0 + eps f1` of each species.
//!
//! One step runs four stages in a fixed order:
//! (a) light moments, Maxwellian and `fL0`;
//! (b) heavy moments, Maxwellian and `fH0`;
//! (c) `fL1`;
//! (d) `fH1`, which reads the new `fL1`.

use crate::error::{invalid, Error, Result};
use crate::operators::{Collision, KernelSpec, Model, Species};
use crate::penalty::{
    bgk_beta, bgk_implicit_update, cg_solve, fp_implicit_solve, fp_penalty_apply, linear_mu, sym3_spectral_radius,
    LinearMuMode, PenaltyConfig,
};
use crate::phase_space::{
    compute_moments, dot, integrate, maxwellian, maxwellian_from_moments, moments, DistField, Hydro, MomentVector,
};
use crate::collision_fpl::diffusion_matrices;

/// Power of `eps` dividing the heavy moment increments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeavyMomentScaling {
    /// `dt / eps`, obtained by integrating the heavy field update.
    Eps,
    /// `dt / eps^2`, the literal printed prefactor.
    EpsSquared,
}

/// Everything a step needs besides the state.
#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub dt: f64,
    pub collision: Collision,
    pub penalty: PenaltyConfig,
    pub heavy_scaling: HeavyMomentScaling,
    /// Replaces the computed linear-penalty rate for the intra terms when set.
    pub mu_override: Option<f64>,
    /// Threshold below which an `f0` value counts as negative.
    pub tol_neg: f64,
    /// Damp the explicit light limit term by `1 / (1 + k Lambda)`, where
    /// `Lambda` is its momentum relaxation rate.
    pub damp_light_drift: bool,
}

impl SchemeConfig {
    pub fn new(dt: f64, collision: Collision) -> Self {
        Self {
            dt,
            collision,
            penalty: PenaltyConfig::default(),
            heavy_scaling: HeavyMomentScaling::Eps,
            mu_override: None,
            tol_neg: 1e-12,
            damp_light_drift: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt >= 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("dt must be non-negative, got {}", self.dt)));
        }
        if let Some(mu) = self.mu_override {
            if !(mu >= 0.0) {
                return Err(invalid("mu override must be non-negative"));
            }
        }
        self.penalty.validate()
    }
}

/// Per-step quantities kept for output and tests.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepDiagnostics {
    pub beta_l: f64,
    pub beta_h: f64,
    pub mu_l: f64,
    pub mu_h: f64,
    pub mu_q0: f64,
    pub neg_nodes_l0: usize,
    pub neg_nodes_h0: usize,
}

/// Previous `f0` and its intra operator, for the fallback relaxation rate.
#[derive(Debug, Clone, PartialEq)]
struct History {
    f: DistField,
    q: DistField,
}

/// Split fields, tracked moments of the `f0` parts, `eps` and time.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitState {
    pub fl0: DistField,
    pub fl1: DistField,
    pub fh0: DistField,
    pub fh1: DistField,
    pub mom_l0: MomentVector,
    pub mom_h0: MomentVector,
    pub eps: f64,
    pub t: f64,
    pub diagnostics: StepDiagnostics,
    hist_l: Option<History>,
    hist_h: Option<History>,
}

impl SplitState {
    /// Assembles a state, taking the tracked moments from the `f0` fields.
    pub fn new(
        grid: &crate::phase_space::VelocityGrid,
        fl0: DistField,
        fl1: DistField,
        fh0: DistField,
        fh1: DistField,
        eps: f64,
    ) -> Result<Self> {
        for f in [&fl0, &fl1, &fh0, &fh1] {
            grid.check(f)?;
        }
        check_eps(eps)?;
        let mom_l0 = compute_moments(grid, &fl0)?.0;
        let mom_h0 = compute_moments(grid, &fh0)?.0;
        Ok(Self::raw(fl0, fl1, fh0, fh1, mom_l0, mom_h0, eps))
    }

    fn raw(
        fl0: DistField,
        fl1: DistField,
        fh0: DistField,
        fh1: DistField,
        mom_l0: MomentVector,
        mom_h0: MomentVector,
        eps: f64,
    ) -> Self {
        Self {
            fl0,
            fl1,
            fh0,
            fh1,
            mom_l0,
            mom_h0,
            eps,
            t: 0.0,
            diagnostics: StepDiagnostics::default(),
            hist_l: None,
            hist_h: None,
        }
    }

    /// Maxwellian `f0` parts with tracked moments taken from the exact
    /// hydrodynamic values. With `well_prepared` the light correction is
    /// `fL1 = M_L0 (u_H . v) / T_L`, otherwise both corrections start at zero.
    pub fn from_hydro(
        grid: &crate::phase_space::VelocityGrid,
        light: Hydro,
        heavy: Hydro,
        eps: f64,
        well_prepared: bool,
    ) -> Result<Self> {
        check_eps(eps)?;
        let fl0 = maxwellian(grid, light.n, light.u, light.t)?;
        let fh0 = maxwellian(grid, heavy.n, heavy.u, heavy.t)?;
        let fl1 = if well_prepared {
            DistField { values: (0..grid.len()).map(|a| fl0.values[a] * dot(heavy.u, grid.node(a)) / light.t).collect() }
        } else {
            DistField::zeros(grid)
        };
        Ok(Self::raw(
            fl0,
            fl1,
            fh0,
            DistField::zeros(grid),
            MomentVector::from_hydro(&light),
            MomentVector::from_hydro(&heavy),
            eps,
        ))
    }

    pub fn light_hydro(&self) -> Result<Hydro> {
        self.mom_l0.hydro()
    }

    pub fn heavy_hydro(&self) -> Result<Hydro> {
        self.mom_h0.hydro()
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(invalid(format!("eps must lie in (0, 1], got {eps}")));
    }
    Ok(())
}

fn moment_integrals(c: &Collision, q: &DistField) -> ([f64; 3], f64) {
    let m = moments(&c.grid, q);
    (m.p1, m.p2)
}

/// Momentum relaxation rate of the light limit operator around the isotropic
/// Maxwellian with the tracked density and temperature.
pub fn light_drift_rate(state: &SplitState, cfg: &SchemeConfig) -> Result<f64> {
    let c = &cfg.collision;
    let h = state.mom_l0.hydro()?;
    let m = maxwellian(&c.grid, h.n, [0.0; 3], h.t.max(f64::MIN_POSITIVE))?;
    let g = DistField { values: (0..c.grid.len()).map(|a| m.values[a] * c.grid.node(a)[0]).collect() };
    let q = c.q0_lh(&g, state.mom_h0.p0)?;
    let num = integrate(&c.grid, &q, |v| v[0]);
    let den = integrate(&c.grid, &g, |v| v[0]);
    Ok(if den > 0.0 { (-num / den).max(0.0) } else { 0.0 })
}

/// Factor multiplying the explicit light limit term: `1` for the literal
/// scheme, `1 / (1 + k Lambda)` when damped.
fn light_drift_factor(state: &SplitState, cfg: &SchemeConfig) -> Result<f64> {
    if !cfg.damp_light_drift {
        return Ok(1.0);
    }
    let k = cfg.dt / (state.eps * state.eps);
    Ok(1.0 / (1.0 + k * light_drift_rate(state, cfg)?))
}

/// Stage (a) moments: only the light momentum moves.
pub fn update_moments_l0(state: &SplitState, cfg: &SchemeConfig) -> Result<MomentVector> {
    let k = cfg.dt / (state.eps * state.eps) * light_drift_factor(state, cfg)?;
    let q0 = cfg.collision.q0_lh(&state.fl0, state.mom_h0.p0)?;
    let (p1, _) = moment_integrals(&cfg.collision, &q0);
    let mut m = state.mom_l0;
    for i in 0..3 {
        m.p1[i] += k * p1[i];
    }
    Ok(m)
}

fn heavy_rate(state: &SplitState, cfg: &SchemeConfig) -> f64 {
    match cfg.heavy_scaling {
        HeavyMomentScaling::Eps => cfg.dt / state.eps,
        HeavyMomentScaling::EpsSquared => cfg.dt / (state.eps * state.eps),
    }
}

/// Stage (b) moments: heavy momentum and energy move with the drift operator.
pub fn update_moments_h0(state: &SplitState, cfg: &SchemeConfig) -> Result<MomentVector> {
    let q0 = cfg.collision.q0_hl(&state.fh0, &state.fl0)?;
    let (p1, p2) = moment_integrals(&cfg.collision, &q0);
    let k = heavy_rate(state, cfg);
    let mut m = state.mom_h0;
    for i in 0..3 {
        m.p1[i] += k * p1[i];
    }
    m.p2 += k * p2;
    Ok(m)
}

fn maxwellian_of(c: &Collision, m: &MomentVector) -> Result<DistField> {
    let h = m.hydro()?;
    if !(h.t > 0.0) {
        return Err(Error::NonFinite(format!("temperature {} from tracked moments", h.t)));
    }
    maxwellian_from_moments(&c.grid, m)
}

/// Penalised update of one `f0` component.
///
/// `k` is `dt / eps^p`, `q` the intra operator at `f`, `q0` the explicit
/// inter-species limit term.
#[allow(clippy::too_many_arguments)]
fn penalised_f0(
    cfg: &SchemeConfig,
    species: Species,
    f: &DistField,
    q: &DistField,
    q0: &DistField,
    m_now: &DistField,
    m_next: &DistField,
    k: f64,
    hist: Option<&History>,
) -> Result<(DistField, f64)> {
    let c = &cfg.collision;
    match c.model() {
        Model::Boltzmann => {
            let mut beta = bgk_beta(f, m_now, q, hist.map(|h| (&h.f, &h.q)), &cfg.penalty);
            if cfg.penalty.beta_cap {
                let kernel = match species {
                    Species::Light => &c.kernels.ll,
                    Species::Heavy => &c.kernels.hh,
                };
                let cap = cfg.penalty.mu_margin * linear_mu(kernel, &c.grid, &c.sphere, LinearMuMode::BoltzmannLoss, Some(f))?;
                if cap > 0.0 {
                    beta = beta.min(cap);
                }
            }
            let mut rhs = f.clone();
            for i in 0..rhs.len() {
                rhs.values[i] += k * (q.values[i] - beta * (m_now.values[i] - f.values[i]) + q0.values[i]);
            }
            Ok((bgk_implicit_update(&rhs, m_next, beta * k)?, beta))
        }
        Model::Fpl => {
            let kernel = match species {
                Species::Light => &c.kernels.ll,
                Species::Heavy => &c.kernels.hh,
            };
            let KernelSpec::Fpl(kf) = kernel else {
                return Err(invalid("Landau model requires Landau kernels"));
            };
            // twice the half-kernel diffusion matrix
            let rho = diffusion_matrices(&c.grid, f, kf)?.iter().map(sym3_spectral_radius).fold(0.0, f64::max);
            let beta = cfg.penalty.beta0 * 2.0 * rho;
            let p = fp_penalty_apply(&c.grid, f, m_now)?;
            let mut rhs = f.clone();
            for i in 0..rhs.len() {
                rhs.values[i] += k * (q.values[i] - beta * p.values[i] + q0.values[i]);
            }
            Ok((fp_implicit_solve(&c.grid, &rhs, m_next, beta * k, &cfg.penalty)?, beta))
        }
    }
}

/// Output of stages (a) and (b).
#[derive(Debug, Clone)]
pub struct F0Update {
    pub fl0: DistField,
    pub fh0: DistField,
    pub mom_l0: MomentVector,
    pub mom_h0: MomentVector,
    pub beta_l: f64,
    pub beta_h: f64,
}

/// Intra-species sweeps at time `n`: `[Q(f0,f0), Q(f0,f1), Q(f1,f1)]` per species.
pub struct IntraTerms {
    pub light: [DistField; 3],
    pub heavy: [DistField; 3],
}

pub fn intra_terms(state: &SplitState, cfg: &SchemeConfig) -> Result<IntraTerms> {
    let c = &cfg.collision;
    Ok(IntraTerms {
        light: c.intra_triple(Species::Light, &state.fl0, &state.fl1)?,
        heavy: c.intra_triple(Species::Heavy, &state.fh0, &state.fh1)?,
    })
}

/// Stages (a) and (b).
pub fn step_f0(state: &SplitState, cfg: &SchemeConfig, intra: &IntraTerms) -> Result<F0Update> {
    cfg.validate()?;
    let c = &cfg.collision;
    let eps = state.eps;
    let mom_l0 = update_moments_l0(state, cfg)?;
    let q0l = c.q0_lh(&state.fl0, state.mom_h0.p0)?.scale(light_drift_factor(state, cfg)?);
    let ml_now = maxwellian_of(c, &state.mom_l0)?;
    let ml_next = maxwellian_of(c, &mom_l0)?;
    let (fl0, beta_l) = penalised_f0(
        cfg,
        Species::Light,
        &state.fl0,
        &intra.light[0],
        &q0l,
        &ml_now,
        &ml_next,
        cfg.dt / (eps * eps),
        state.hist_l.as_ref(),
    )?;

    let mom_h0 = update_moments_h0(state, cfg)?;
    let q0h = c.q0_hl(&state.fh0, &state.fl0)?;
    let mh_now = maxwellian_of(c, &state.mom_h0)?;
    let mh_next = maxwellian_of(c, &mom_h0)?;
    let (fh0, beta_h) = penalised_f0(
        cfg,
        Species::Heavy,
        &state.fh0,
        &intra.heavy[0],
        &q0h,
        &mh_now,
        &mh_next,
        cfg.dt / eps,
        state.hist_h.as_ref(),
    )?;
    Ok(F0Update { fl0, fh0, mom_l0, mom_h0, beta_l, beta_h })
}

/// Linear-penalty rate for `Q(f0 +- f1)`, with margin.
fn intra_mu(cfg: &SchemeConfig, species: Species, f0: &DistField, f1: &DistField) -> Result<f64> {
    if let Some(mu) = cfg.mu_override {
        return Ok(mu);
    }
    let c = &cfg.collision;
    let (kernel, mode) = match (species, c.model()) {
        (Species::Light, Model::Boltzmann) => (&c.kernels.ll, LinearMuMode::BoltzmannLoss),
        (Species::Heavy, Model::Boltzmann) => (&c.kernels.hh, LinearMuMode::BoltzmannLoss),
        (Species::Light, Model::Fpl) => (&c.kernels.ll, LinearMuMode::Fpl),
        (Species::Heavy, Model::Fpl) => (&c.kernels.hh, LinearMuMode::Fpl),
    };
    let plus = f0.add(f1);
    let minus = f0.sub(f1);
    let a = linear_mu(kernel, &c.grid, &c.sphere, mode, Some(&plus))?;
    let b = linear_mu(kernel, &c.grid, &c.sphere, mode, Some(&minus))?;
    Ok(cfg.penalty.mu_margin * a.max(b))
}

/// Output of stages (c) and (d).
#[derive(Debug, Clone)]
pub struct F1Update {
    pub fl1: DistField,
    pub fh1: DistField,
    pub mu_l: f64,
    pub mu_h: f64,
    pub mu_q0: f64,
}

/// Stages (c) and (d) given the new `f0` fields.
///
/// `extra` adds sources inside the light and heavy brackets (used by the
/// spatially inhomogeneous scheme).
pub fn step_f1(
    state: &SplitState,
    cfg: &SchemeConfig,
    intra: &IntraTerms,
    fl0_next: &DistField,
    fh0_next: &DistField,
    extra: Option<(&DistField, &DistField)>,
) -> Result<F1Update> {
    let c = &cfg.collision;
    let eps = state.eps;
    let nh = state.mom_h0.p0;
    let (fl0, fl1, fh0, fh1) = (&state.fl0, &state.fl1, &state.fh0, &state.fh1);

    // light bracket
    let (lh_new, hl_new) = c.inter_pair(fl0_next, fh0_next, eps)?;
    let q0lh_new = c.q0_lh(fl0_next, nh)?;
    let q0hl_new = c.q0_hl(fh0_next, fl0_next)?;
    let (lh_0_1, hl_1_0) = c.inter_pair(fl0, fh1, eps)?;
    let (lh_1_1, hl_1_1) = c.inter_pair(fl1, fh1, eps)?;
    // in conservative mode every cross term comes from a corrected pair, so
    // its energy is balanced against a partner evaluated at the same data
    let lh_1_0 = if c.conservative { c.inter_pair(fl1, fh0, eps)?.0 } else { c.inter_lh(fl1, fh0, eps)? };
    let q0_f1 = c.q0_lh(fl1, nh)?;

    let [_, ql01, ql11] = &intra.light;
    let mu_l = intra_mu(cfg, Species::Light, fl0, fl1)?;
    let k = cfg.dt / (eps * eps);
    let len = fl1.len();
    let mut a = vec![0.0; len];
    for i in 0..len {
        a[i] = (lh_new.values[i] - q0lh_new.values[i]) / eps
            + 2.0 * ql01.values[i]
            + eps * ql11.values[i]
            + lh_0_1.values[i]
            + (lh_1_0.values[i] - q0_f1.values[i])
            + eps * lh_1_1.values[i]
            + mu_l * fl1.values[i];
    }
    if let Some((el, _)) = extra {
        for (x, e) in a.iter_mut().zip(&el.values) {
            *x += e;
        }
    }
    let (fl1_next, mu_q0) = match c.model() {
        Model::Boltzmann => {
            let mu_q0 = match &c.kernels.lh {
                KernelSpec::Boltzmann(_) => {
                    cfg.penalty.mu_margin * linear_mu(&c.kernels.lh, &c.grid, &c.sphere, LinearMuMode::BoltzmannQ0, None)?
                }
                KernelSpec::Fpl(_) => unreachable!("validated kernel set"),
            };
            let denom = 1.0 + k * mu_l + k * nh * mu_q0;
            let values = (0..len)
                .map(|i| (fl1.values[i] + k * (a[i] + nh * (q0_f1.values[i] + mu_q0 * fl1.values[i]))) / denom)
                .collect();
            (DistField { values }, mu_q0)
        }
        Model::Fpl => {
            let diff = c.q0_lh_diffusion().ok_or_else(|| invalid("Landau model requires Landau kernels"))?;
            let b: Vec<f64> = (0..len).map(|i| fl1.values[i] + k * a[i]).collect();
            let shift = 1.0 + k * mu_l;
            let op = |x: &[f64]| {
                let lx = diff.apply(x);
                x.iter().zip(lx).map(|(xi, li)| shift * xi - k * nh * li).collect::<Vec<f64>>()
            };
            let (x, _) = cg_solve(op, &b, Some(&fl1.values), cfg.penalty.cg_tol, cfg.penalty.cg_max_iter)?;
            (DistField { values: x }, 0.0)
        }
    };

    // heavy bracket, reads the new light correction
    let hl_0_1new = if c.conservative { c.inter_pair(&fl1_next, fh0_next, eps)?.1 } else { c.inter_hl(fh0_next, &fl1_next, eps)? };
    let [_, qh01, qh11] = &intra.heavy;
    let mu_h = intra_mu(cfg, Species::Heavy, fh0, fh1)?;
    let kh = cfg.dt / eps;
    let mut b = vec![0.0; len];
    for i in 0..len {
        b[i] = (hl_new.values[i] - q0hl_new.values[i]) / eps
            + 2.0 * qh01.values[i]
            + eps * qh11.values[i]
            + hl_0_1new.values[i]
            + hl_1_0.values[i]
            + eps * hl_1_1.values[i];
    }
    if let Some((_, eh)) = extra {
        for (x, e) in b.iter_mut().zip(&eh.values) {
            *x += e;
        }
    }
    let fh1_next = DistField {
        values: (0..len).map(|i| (fh1.values[i] + kh * (b[i] + mu_h * fh1.values[i])) / (1.0 + kh * mu_h)).collect(),
    };
    Ok(F1Update { fl1: fl1_next, fh1: fh1_next, mu_l, mu_h, mu_q0 })
}

/// Assembles the next state from the stage outputs.
pub fn finish_step(state: &SplitState, cfg: &SchemeConfig, intra: IntraTerms, f0: F0Update, f1: F1Update) -> Result<SplitState> {
    for (name, f) in [("fL0", &f0.fl0), ("fH0", &f0.fh0), ("fL1", &f1.fl1), ("fH1", &f1.fh1)] {
        if !f.is_finite() {
            return Err(Error::NonFinite(name.into()));
        }
    }
    let diagnostics = StepDiagnostics {
        beta_l: f0.beta_l,
        beta_h: f0.beta_h,
        mu_l: f1.mu_l,
        mu_h: f1.mu_h,
        mu_q0: f1.mu_q0,
        neg_nodes_l0: f0.fl0.count_below(cfg.tol_neg),
        neg_nodes_h0: f0.fh0.count_below(cfg.tol_neg),
    };
    let [ql, ..] = intra.light;
    let [qh, ..] = intra.heavy;
    Ok(SplitState {
        fl0: f0.fl0,
        fl1: f1.fl1,
        fh0: f0.fh0,
        fh1: f1.fh1,
        mom_l0: f0.mom_l0,
        mom_h0: f0.mom_h0,
        eps: state.eps,
        t: state.t + cfg.dt,
        diagnostics,
        hist_l: Some(History { f: state.fl0.clone(), q: ql }),
        hist_h: Some(History { f: state.fh0.clone(), q: qh }),
    })
}

/// Full step with optional extra `f1` sources.
pub fn ap_step_with_sources(
    state: &SplitState,
    cfg: &SchemeConfig,
    extra: Option<(&DistField, &DistField)>,
) -> Result<SplitState> {
    check_eps(state.eps)?;
    cfg.validate()?;
    if cfg.dt == 0.0 {
        return Ok(state.clone());
    }
    let intra = intra_terms(state, cfg)?;
    let f0 = step_f0(state, cfg, &intra)?;
    let f1 = step_f1(state, cfg, &intra, &f0.fl0, &f0.fh0, extra)?;
    finish_step(state, cfg, intra, f0, f1)
}

/// One step of stages (a) to (d).
pub fn ap_step(state: &SplitState, cfg: &SchemeConfig) -> Result<SplitState> {
    ap_step_with_sources(state, cfg, None)
}

/// `(f0 + eps f1)` for each species.
pub fn reconstruct(state: &SplitState) -> (DistField, DistField) {
    (state.fl0.lin_comb(1.0, &state.fl1, state.eps), state.fh0.lin_comb(1.0, &state.fh1, state.eps))
}

/// Largest relative gap between tracked and recomputed `f0` moments.
pub fn moment_drift(state: &SplitState, cfg: &SchemeConfig) -> f64 {
    let g = &cfg.collision.grid;
    let gap = |tracked: &MomentVector, f: &DistField| {
        let m = moments(g, f);
        let scale = tracked.p0.abs().max(tracked.p2.abs()).max(1e-300);
        let d = [m.p0 - tracked.p0, m.p1[0] - tracked.p1[0], m.p1[1] - tracked.p1[1], m.p1[2] - tracked.p1[2], m.p2 - tracked.p2];
        d.iter().fold(0.0f64, |a, x| a.max(x.abs())) / scale
    };
    gap(&state.mom_l0, &state.fl0).max(gap(&state.mom_h0, &state.fh0))
}

/// Total energy `P2(fL) + P2(fH)` of the reconstructed fields.
pub fn total_energy(state: &SplitState, cfg: &SchemeConfig) -> f64 {
    let g = &cfg.collision.grid;
    let (fl, fh) = reconstruct(state);
    integrate(g, &fl, |v| 0.5 * dot(v, v)) + integrate(g, &fh, |v| 0.5 * dot(v, v))
}
