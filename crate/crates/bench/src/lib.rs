//! Shared fixtures for the criterion benches in `benches/`.

use mixkin::phase_space::maxwellian;
use mixkin::{Collision, DistField, KernelSet, KernelSpec, Model, Result, SphereRule, VelocityGrid};

/// Uniform-kernel operator bundle on an `n^3` grid over `[-6, 6]^3`.
pub fn collision(model: Model, n: usize, sphere_order: usize) -> Result<Collision> {
    let k = KernelSpec::new(model, 0.0, 1.0, 0.0)?;
    Collision::new(VelocityGrid::new(6.0, n)?, SphereRule::new(sphere_order)?, KernelSet::uniform(k))
}

/// A non-equilibrium light field and a drifting heavy Maxwellian.
pub fn fields(grid: &VelocityGrid) -> Result<(DistField, DistField)> {
    let fl = maxwellian(grid, 1.0, [0.4, 0.0, 0.0], 0.8)?.add(&maxwellian(grid, 0.5, [-0.5, 0.2, 0.0], 1.2)?);
    let fh = maxwellian(grid, 1.0, [0.1, 0.0, 0.0], 2.0)?;
    Ok((fl, fh))
}
