//! Fast invariant checks on small grids.

use mixkin::ap_homogeneous::ap_step;
use mixkin::ap_inhomogeneous::{full_step, psi_factors, FieldArray, InhomConfig, SpatialMesh};
use mixkin::collision_boltzmann::bilinear;
use mixkin::conservation::invariant_integrals;
use mixkin::limit_oracle::{relax_step_implicit, MacroState, RelaxationRate};
use mixkin::operators::Species;
use mixkin::penalty::fp_symmetric_apply;
use mixkin::phase_space::maxwellian;
use mixkin::{Collision, DistField, Hydro, KernelSet, KernelSpec, Model, Result, SchemeConfig, SphereRule, SplitState, VelocityGrid};

pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn collision(n: usize) -> Result<Collision> {
    let k = KernelSpec::new(Model::Boltzmann, 0.0, 1.0, 0.0)?;
    Collision::new(VelocityGrid::new(6.0, n)?, SphereRule::new(2)?, KernelSet::uniform(k))
}

fn bumpy(g: &VelocityGrid) -> Result<DistField> {
    Ok(maxwellian(g, 1.0, [0.3, 0.0, 0.0], 0.9)?.add(&maxwellian(g, 0.4, [-0.5, 0.2, 0.0], 1.3)?))
}

fn check(name: &'static str, value: f64, bound: f64) -> Check {
    Check { name, pass: value <= bound, detail: format!("{value:.3e} <= {bound:.1e}") }
}

fn psi() -> Result<Check> {
    let ok = psi_factors(2.0)? == (0.25, 0.5) && psi_factors(0.1)? == (1.0, 1.0);
    Ok(Check { name: "psi factors", pass: ok, detail: "exact values at eps = 2 and 0.1".into() })
}

fn polarization() -> Result<Check> {
    let c = collision(6)?;
    let f = bumpy(&c.grid)?;
    let q = c.intra(Species::Light, &f)?;
    let b = bilinear(|x| c.intra(Species::Light, x), &f, &f)?;
    Ok(check("polarization identity", b.sub(&q).norm_inf() / q.norm_inf(), 1e-12))
}

fn conservative_pair() -> Result<Check> {
    let mut c = collision(6)?;
    c.conservative = true;
    let fl = bumpy(&c.grid)?;
    let fh = maxwellian(&c.grid, 1.0, [0.1, 0.0, 0.0], 1.5)?;
    let eps = 0.3;
    let (lh, hl) = c.inter_pair(&fl, &fh, eps)?;
    let (a, b) = (invariant_integrals(&c.grid, &lh), invariant_integrals(&c.grid, &hl));
    let worst = [a[0], b[0], a[1] + b[1], a[4] + eps * b[4]].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(check("corrected pair invariants", worst, 1e-12))
}

fn fp_symmetry() -> Result<Check> {
    let g = VelocityGrid::new(6.0, 6)?;
    let m = maxwellian(&g, 1.0, [0.0; 3], 1.0)?;
    let s: Vec<f64> = m.values.iter().map(|x| x.sqrt()).collect();
    let x: Vec<f64> = (0..g.len()).map(|i| ((i * 7 % 11) as f64).sin()).collect();
    let y: Vec<f64> = (0..g.len()).map(|i| ((i * 3 % 5) as f64).cos()).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let (ax, ay) = (fp_symmetric_apply(&g, &x, &s), fp_symmetric_apply(&g, &y, &s));
    let asym = (dot(&y, &ax) - dot(&x, &ay)).abs() / dot(&x, &ax).abs().max(1.0);
    let nsd = dot(&x, &ax) <= 0.0 && dot(&y, &ay) <= 0.0;
    Ok(Check { name: "penalty operator symmetric NSD", pass: asym <= 1e-12 && nsd, detail: format!("asymmetry {asym:.3e}") })
}

fn oracle_energy() -> Result<Check> {
    let c = collision(8)?;
    let rate = RelaxationRate::new(c.grid.clone(), c.sphere.clone(), c.kernels.lh)?;
    let m = MacroState { n_l: 1.0, t_l: 1.0, n_h: 0.7, u_h: [0.1, 0.0, 0.0], t_h: 2.0, time: 0.0 };
    let next = relax_step_implicit(&m, 0.1, &rate)?;
    let drift = (next.thermal_energy() - m.thermal_energy()).abs() / m.thermal_energy();
    let mut out = check("oracle energy", drift, 1e-12);
    out.pass &= next.t_l > m.t_l && next.t_h < m.t_h;
    Ok(out)
}

fn split_state(g: &VelocityGrid, eps: f64) -> Result<SplitState> {
    SplitState::from_hydro(g, Hydro { n: 1.0, u: [0.0; 3], t: 1.0 }, Hydro { n: 1.0, u: [0.1, 0.0, 0.0], t: 2.0 }, eps, true)
}

fn frozen_densities() -> Result<Check> {
    let cfg = SchemeConfig::new(0.01, collision(4)?);
    let mut s = split_state(&cfg.collision.grid, 0.01)?;
    for _ in 0..3 {
        s = ap_step(&s, &cfg)?;
    }
    let gap = (s.mom_l0.p0 - 1.0).abs().max((s.mom_h0.p0 - 1.0).abs());
    Ok(check("tracked densities frozen", gap, 1e-15))
}

fn slab_reduction() -> Result<Check> {
    let cfg = InhomConfig::new(SchemeConfig::new(0.005, collision(4)?));
    let g = cfg.scheme.collision.grid.clone();
    let s = split_state(&g, 0.2)?;
    let fa = FieldArray::new(&g, SpatialMesh::new(3, 0.5, true)?, vec![s.clone(); 3], [0.0; 3], [0.0; 3])?;
    let out = full_step(&fa, &cfg)?;
    let h = ap_step(&s, &cfg.scheme)?;
    let same = out.cells.iter().all(|c| *c == h);
    Ok(Check { name: "slab reduces to homogeneous", pass: same, detail: "uniform data, one step".into() })
}

pub fn run() -> Vec<Check> {
    let tests: [(&'static str, fn() -> Result<Check>); 7] = [
        ("psi factors", psi),
        ("polarization identity", polarization),
        ("corrected pair invariants", conservative_pair),
        ("penalty operator symmetric NSD", fp_symmetry),
        ("oracle energy", oracle_energy),
        ("tracked densities frozen", frozen_densities),
        ("slab reduces to homogeneous", slab_reduction),
    ];
    tests
        .into_iter()
        .map(|(name, f)| f().unwrap_or_else(|e| Check { name, pass: false, detail: format!("error: {e}") }))
        .collect()
}
