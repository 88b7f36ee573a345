//! Slab extension of the split scheme: one spatial dimension (along `x`),
//! three velocity dimensions, constant external accelerations.
//!
//! A full step is an implicit collision step, which runs the homogeneous
//! stages in every cell with transport-correction sources in the `f1`
//! brackets, followed by an explicit upwind transport step.

use rayon::prelude::*;

use crate::ap_homogeneous::{check_eps, finish_step, intra_terms, step_f0, step_f1, F0Update, IntraTerms, SchemeConfig, SplitState};
use crate::error::{invalid, Error, Result};
use crate::phase_space::{central_diff, moments, DistField, Hydro, MomentVector, VelocityGrid};

/// Uniform 1D mesh of `nx` cells of width `dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialMesh {
    pub nx: usize,
    pub dx: f64,
    pub periodic: bool,
}

impl SpatialMesh {
    pub fn new(nx: usize, dx: f64, periodic: bool) -> Result<Self> {
        let m = Self { nx, dx, periodic };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 {
            return Err(invalid(format!("mesh needs at least 2 cells, got {}", self.nx)));
        }
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(invalid(format!("cell width must be positive, got {}", self.dx)));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.nx as f64 * self.dx
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    fn left(&self, i: usize) -> Option<usize> {
        match (i, self.periodic) {
            (0, true) => Some(self.nx - 1),
            (0, false) => None,
            _ => Some(i - 1),
        }
    }

    fn right(&self, i: usize) -> Option<usize> {
        match (i + 1 == self.nx, self.periodic) {
            (true, true) => Some(0),
            (true, false) => None,
            _ => Some(i + 1),
        }
    }
}

/// Per-cell split states plus the species accelerations.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldArray {
    pub mesh: SpatialMesh,
    pub cells: Vec<SplitState>,
    pub force_l: [f64; 3],
    pub force_h: [f64; 3],
}

impl FieldArray {
    pub fn new(grid: &VelocityGrid, mesh: SpatialMesh, cells: Vec<SplitState>, force_l: [f64; 3], force_h: [f64; 3]) -> Result<Self> {
        let fa = Self { mesh, cells, force_l, force_h };
        fa.validate(grid)?;
        Ok(fa)
    }

    /// Cell-wise Maxwellian data from a profile `x -> (light, heavy)`.
    pub fn from_profile(
        grid: &VelocityGrid,
        mesh: SpatialMesh,
        eps: f64,
        well_prepared: bool,
        profile: impl Fn(f64) -> (Hydro, Hydro),
    ) -> Result<Self> {
        mesh.validate()?;
        let cells = (0..mesh.nx)
            .map(|i| {
                let (l, h) = profile(mesh.center(i));
                SplitState::from_hydro(grid, l, h, eps, well_prepared)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, mesh, cells, [0.0; 3], [0.0; 3])
    }

    pub fn validate(&self, grid: &VelocityGrid) -> Result<()> {
        self.mesh.validate()?;
        if self.cells.len() != self.mesh.nx {
            return Err(invalid(format!("expected {} cells, found {}", self.mesh.nx, self.cells.len())));
        }
        let eps = self.eps();
        check_eps(eps)?;
        for c in &self.cells {
            if c.eps != eps {
                return Err(invalid("all cells must share the same eps"));
            }
            for f in [&c.fl0, &c.fl1, &c.fh0, &c.fh1] {
                grid.check(f)?;
            }
        }
        if !self.force_l.iter().chain(&self.force_h).all(|x| x.is_finite()) {
            return Err(invalid("forces must be finite"));
        }
        Ok(())
    }

    pub fn eps(&self) -> f64 {
        self.cells[0].eps
    }

    pub fn time(&self) -> f64 {
        self.cells[0].t
    }

    /// `sum_i int f0 dv dx` per species, from the fields.
    pub fn field_mass(&self, grid: &VelocityGrid) -> (f64, f64) {
        let dx = self.mesh.dx;
        self.cells.iter().fold((0.0, 0.0), |(a, b), c| {
            (a + moments(grid, &c.fl0).p0 * dx, b + moments(grid, &c.fh0).p0 * dx)
        })
    }

    /// `sum_i P0 dx` per species, from the tracked moments.
    pub fn tracked_mass(&self) -> (f64, f64) {
        let dx = self.mesh.dx;
        self.cells.iter().fold((0.0, 0.0), |(a, b), c| (a + c.mom_l0.p0 * dx, b + c.mom_h0.p0 * dx))
    }

    /// Cell average of the tracked moment vectors.
    pub fn mean_moments(&self) -> (MomentVector, MomentVector) {
        let n = self.cells.len() as f64;
        let mut acc = [[0.0; 5]; 2];
        for c in &self.cells {
            for (a, m) in acc.iter_mut().zip([&c.mom_l0, &c.mom_h0]) {
                a[0] += m.p0;
                a[1] += m.p1[0];
                a[2] += m.p1[1];
                a[3] += m.p1[2];
                a[4] += m.p2;
            }
        }
        let mv = |a: [f64; 5]| MomentVector { p0: a[0] / n, p1: [a[1] / n, a[2] / n, a[3] / n], p2: a[4] / n };
        (mv(acc[0]), mv(acc[1]))
    }
}

/// Weights `(min(1, 1/eps^2), min(1, 1/eps))`.
pub fn psi_factors(eps: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    Ok(((1.0 / (eps * eps)).min(1.0), (1.0 / eps).min(1.0)))
}

/// Step parameters for the slab scheme.
#[derive(Debug, Clone)]
pub struct InhomConfig {
    pub scheme: SchemeConfig,
    /// Courant number for the explicit transport step.
    pub cfl: f64,
}

impl InhomConfig {
    pub fn new(scheme: SchemeConfig) -> Self {
        Self { scheme, cfl: 0.9 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(invalid(format!("CFL number must lie in (0, 1], got {}", self.cfl)));
        }
        self.scheme.validate()
    }
}

/// Largest stable transport step: `cfl dx / v_max`, further limited by
/// `cfl dv / |F_d|` for every nonzero force component.
pub fn transport_dt_limit(grid: &VelocityGrid, fields: &FieldArray, cfl: f64) -> f64 {
    let mut limit = cfl * fields.mesh.dx / grid.v_max();
    for f in fields.force_l.iter().chain(&fields.force_h) {
        if *f != 0.0 {
            limit = limit.min(cfl * grid.dv() / f.abs());
        }
    }
    limit
}

fn field_of(cells: &[SplitState], pick: fn(&SplitState) -> &DistField) -> Vec<&DistField> {
    cells.iter().map(pick).collect()
}

/// `v_x d/dx g + F . grad_v g` at cell `i`, central in `x`, central in `v`.
fn central_transport(grid: &VelocityGrid, mesh: &SpatialMesh, g: &[&DistField], i: usize, force: [f64; 3]) -> DistField {
    let (l, r) = (mesh.left(i), mesh.right(i));
    let gi = &g[i].values;
    let (lo, hi, width) = match (l, r) {
        (Some(a), Some(b)) => (&g[a].values, &g[b].values, 2.0 * mesh.dx),
        (None, Some(b)) => (gi, &g[b].values, mesh.dx),
        (Some(a), None) => (&g[a].values, gi, mesh.dx),
        (None, None) => unreachable!("mesh has at least two cells"),
    };
    let mut out: Vec<f64> = (0..grid.len()).map(|a| grid.node(a)[0] * (hi[a] - lo[a]) / width).collect();
    for (d, fd) in force.iter().enumerate() {
        if *fd != 0.0 {
            for (o, x) in out.iter_mut().zip(central_diff(grid, gi, d)) {
                *o += fd * x;
            }
        }
    }
    DistField { values: out }
}

/// `v_x d/dx g + F . grad_v g` at cell `i`, first-order upwind in both
/// variables with zero inflow where no neighbour exists.
fn upwind_transport(grid: &VelocityGrid, mesh: &SpatialMesh, g: &[&DistField], i: usize, force: [f64; 3]) -> DistField {
    let n = grid.n();
    let gi = &g[i].values;
    let l = mesh.left(i).map(|a| &g[a].values);
    let r = mesh.right(i).map(|a| &g[a].values);
    let inv_dx = 1.0 / mesh.dx;
    let inv_dv = 1.0 / grid.dv();
    let mut out = vec![0.0; grid.len()];
    for (a, o) in out.iter_mut().enumerate() {
        let vx = grid.node(a)[0];
        *o = if vx > 0.0 {
            vx * (gi[a] - l.map_or(0.0, |x| x[a])) * inv_dx
        } else {
            vx * (r.map_or(0.0, |x| x[a]) - gi[a]) * inv_dx
        };
        let c = grid.coords(a);
        for (d, fd) in force.iter().enumerate() {
            if *fd == 0.0 {
                continue;
            }
            let stride = [n * n, n, 1][d];
            *o += if *fd > 0.0 {
                let prev = if c[d] > 0 { gi[a - stride] } else { 0.0 };
                fd * (gi[a] - prev) * inv_dv
            } else {
                let next = if c[d] + 1 < n { gi[a + stride] } else { 0.0 };
                fd * (next - gi[a]) * inv_dv
            };
        }
    }
    DistField { values: out }
}

/// Step 1: the homogeneous stages in every cell, with the sources
/// `-(1 - eps^2 psi1) T_L(fL0*)` and `-(1 - eps psi2) T_H(fH0*)` added to the
/// light and heavy `f1` brackets. `T` is central transport of the new `f0`.
pub fn collision_step(fields: &FieldArray, cfg: &InhomConfig) -> Result<FieldArray> {
    cfg.validate()?;
    let sc = &cfg.scheme;
    let grid = &sc.collision.grid;
    fields.validate(grid)?;
    if sc.dt == 0.0 {
        return Ok(fields.clone());
    }
    let eps = fields.eps();
    let (psi1, psi2) = psi_factors(eps)?;
    let (cl, ch) = (1.0 - eps * eps * psi1, 1.0 - eps * psi2);

    let stage0: Vec<(IntraTerms, F0Update)> = fields
        .cells
        .par_iter()
        .map(|s| {
            let intra = intra_terms(s, sc)?;
            let f0 = step_f0(s, sc, &intra)?;
            Ok((intra, f0))
        })
        .collect::<Result<_>>()?;

    let fl0: Vec<&DistField> = stage0.iter().map(|(_, f)| &f.fl0).collect();
    let fh0: Vec<&DistField> = stage0.iter().map(|(_, f)| &f.fh0).collect();
    let extras: Vec<(DistField, DistField)> = (0..fields.mesh.nx)
        .map(|i| {
            let el = central_transport(grid, &fields.mesh, &fl0, i, fields.force_l).scale(-cl);
            let eh = central_transport(grid, &fields.mesh, &fh0, i, fields.force_h).scale(-ch);
            (el, eh)
        })
        .collect();

    let cells = stage0
        .into_par_iter()
        .zip(extras)
        .zip(&fields.cells)
        .map(|(((intra, f0), (el, eh)), s)| {
            let f1 = step_f1(s, sc, &intra, &f0.fl0, &f0.fh0, Some((&el, &eh)))?;
            finish_step(s, sc, intra, f0, f1)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FieldArray { cells, ..fields.clone() })
}

fn check_cfl(grid: &VelocityGrid, fields: &FieldArray, dt: f64, cfl: f64) -> Result<()> {
    let limit = transport_dt_limit(grid, fields, cfl);
    if dt > limit {
        return Err(Error::CflViolation { dt, limit });
    }
    Ok(())
}

/// Step 2: explicit skew-coupled transport. The `f0` fields are advected by
/// the `f1` fields and vice versa; tracked moments are left alone.
pub fn transport_step(grid: &VelocityGrid, fields: &FieldArray, dt: f64, cfl: f64) -> Result<FieldArray> {
    fields.validate(grid)?;
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(invalid(format!("dt must be non-negative, got {dt}")));
    }
    check_cfl(grid, fields, dt, cfl)?;
    if dt == 0.0 {
        return Ok(fields.clone());
    }
    let eps = fields.eps();
    let (psi1, psi2) = psi_factors(eps)?;
    let mesh = &fields.mesh;
    let fl0 = field_of(&fields.cells, |s| &s.fl0);
    let fl1 = field_of(&fields.cells, |s| &s.fl1);
    let fh0 = field_of(&fields.cells, |s| &s.fh0);
    let fh1 = field_of(&fields.cells, |s| &s.fh1);
    let cells = (0..mesh.nx)
        .into_par_iter()
        .map(|i| {
            let (fl, fh) = (fields.force_l, fields.force_h);
            let mut s = fields.cells[i].clone();
            s.fl0.axpy(-dt, &upwind_transport(grid, mesh, &fl1, i, fl));
            s.fl1.axpy(-dt * psi1, &upwind_transport(grid, mesh, &fl0, i, fl));
            s.fh0.axpy(-dt * eps, &upwind_transport(grid, mesh, &fh1, i, fh));
            s.fh1.axpy(-dt * psi2, &upwind_transport(grid, mesh, &fh0, i, fh));
            s
        })
        .collect();
    Ok(FieldArray { cells, ..fields.clone() })
}

fn sub_scaled(m: &MomentVector, a: f64, d: &MomentVector) -> MomentVector {
    MomentVector {
        p0: m.p0 - a * d.p0,
        p1: [m.p1[0] - a * d.p1[0], m.p1[1] - a * d.p1[1], m.p1[2] - a * d.p1[2]],
        p2: m.p2 - a * d.p2,
    }
}

/// Collision step, transport step, then the transport part of the tracked
/// moment updates, which integrates the upwind transport of the pre-step
/// `f1` fields.
pub fn full_step(fields: &FieldArray, cfg: &InhomConfig) -> Result<FieldArray> {
    cfg.validate()?;
    let grid = &cfg.scheme.collision.grid;
    let dt = cfg.scheme.dt;
    fields.validate(grid)?;
    check_cfl(grid, fields, dt, cfg.cfl)?;
    let eps = fields.eps();
    let mesh = &fields.mesh;
    let fl1 = field_of(&fields.cells, |s| &s.fl1);
    let fh1 = field_of(&fields.cells, |s| &s.fh1);
    let flux: Vec<(MomentVector, MomentVector)> = (0..mesh.nx)
        .into_par_iter()
        .map(|i| {
            (
                moments(grid, &upwind_transport(grid, mesh, &fl1, i, fields.force_l)),
                moments(grid, &upwind_transport(grid, mesh, &fh1, i, fields.force_h)),
            )
        })
        .collect();
    let collided = collision_step(fields, cfg)?;
    let mut out = transport_step(grid, &collided, dt, cfg.cfl)?;
    for (s, (dl, dh)) in out.cells.iter_mut().zip(&flux) {
        s.mom_l0 = sub_scaled(&s.mom_l0, dt, dl);
        s.mom_h0 = sub_scaled(&s.mom_h0, dt * eps, dh);
    }
    Ok(out)
}
