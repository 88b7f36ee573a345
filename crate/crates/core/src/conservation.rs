//! Optional post-hoc correction that restores prescribed collision-invariant
//! integrals by a least-squares projection.

use nalgebra::{Matrix5, Vector5};

use crate::error::{Error, Result};
use crate::phase_space::{dot, DistField, VelocityGrid};

fn invariants(v: [f64; 3]) -> [f64; 5] {
    [1.0, v[0], v[1], v[2], 0.5 * dot(v, v)]
}

/// Discrete integrals of `q` against `(1, v, |v|^2/2)`.
pub fn invariant_integrals(grid: &VelocityGrid, q: &DistField) -> [f64; 5] {
    let mut out = [0.0; 5];
    for (a, x) in q.values.iter().enumerate() {
        for (o, p) in out.iter_mut().zip(invariants(grid.node(a))) {
            *o += p * x;
        }
    }
    out.map(|x| x * grid.weight())
}

/// Smallest change to `q` (in the unweighted l2 sense) whose invariant
/// integrals equal `target`.
pub fn project(grid: &VelocityGrid, q: &DistField, target: [f64; 5]) -> Result<DistField> {
    grid.check(q)?;
    let w = grid.weight();
    let mut gram = Matrix5::zeros();
    for a in 0..grid.len() {
        let p = Vector5::from(invariants(grid.node(a))) * w;
        gram += p * p.transpose();
    }
    let cur = invariant_integrals(grid, q);
    let rhs = Vector5::from(target) - Vector5::from(cur);
    let lambda = gram.lu().solve(&rhs).ok_or_else(|| Error::NonFinite("conservation gram matrix".into()))?;
    let values = q
        .values
        .iter()
        .enumerate()
        .map(|(a, x)| x + w * Vector5::from(invariants(grid.node(a))).dot(&lambda))
        .collect();
    Ok(DistField { values })
}

/// Projects an intra-species operator onto zero invariant integrals.
pub fn project_intra(grid: &VelocityGrid, q: &DistField) -> Result<DistField> {
    project(grid, q, [0.0; 5])
}

/// Projects a light/heavy operator pair so that both conserve mass, momenta
/// cancel and `int Q_LH |v|^2 + eps int Q_HL |v|^2 = 0`, splitting the
/// discrepancy evenly between the two members.
pub fn project_pair(grid: &VelocityGrid, lh: &DistField, hl: &DistField, eps: f64) -> Result<(DistField, DistField)> {
    let a = invariant_integrals(grid, lh);
    let b = invariant_integrals(grid, hl);
    let mut ta = [0.0; 5];
    let mut tb = [0.0; 5];
    for i in 1..4 {
        ta[i] = 0.5 * (a[i] - b[i]);
        tb[i] = -ta[i];
    }
    ta[4] = 0.5 * (a[4] - eps * b[4]);
    tb[4] = -ta[4] / eps;
    Ok((project(grid, lh, ta)?, project(grid, hl, tb)?))
}
