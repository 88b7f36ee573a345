//! Model-agnostic dispatch over the Boltzmann and Landau operator families.

use crate::collision_boltzmann::{self as cb, BoltzKernel};
use crate::collision_fpl::{self as cf, FaceDiffusion, FplKernel};
use crate::conservation::{invariant_integrals, project, project_intra, project_pair};
use crate::error::{invalid, Result};
use crate::phase_space::{DistField, SphereRule, VelocityGrid};

/// Collision model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Boltzmann,
    Fpl,
}

impl std::str::FromStr for Model {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boltzmann" => Ok(Self::Boltzmann),
            "fpl" => Ok(Self::Fpl),
            other => Err(invalid(format!("unknown collision model `{other}`"))),
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Boltzmann => "boltzmann",
            Self::Fpl => "fpl",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Boltzmann(BoltzKernel),
    Fpl(FplKernel),
}

impl KernelSpec {
    /// Builds a kernel; `b0` is ignored by the Landau model.
    pub fn new(model: Model, gamma: f64, b0: f64, delta: f64) -> Result<Self> {
        let k = match model {
            Model::Boltzmann => Self::Boltzmann(BoltzKernel { gamma, b0, delta }),
            Model::Fpl => Self::Fpl(FplKernel { gamma, delta }),
        };
        k.validate()?;
        Ok(k)
    }

    pub fn model(&self) -> Model {
        match self {
            Self::Boltzmann(_) => Model::Boltzmann,
            Self::Fpl(_) => Model::Fpl,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Boltzmann(k) => k.validate(),
            Self::Fpl(k) => k.validate(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    Light,
    Heavy,
}

/// Kernels for the four collision pairings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSet {
    pub ll: KernelSpec,
    pub hh: KernelSpec,
    pub lh: KernelSpec,
    pub hl: KernelSpec,
}

impl KernelSet {
    pub fn uniform(k: KernelSpec) -> Self {
        Self { ll: k, hh: k, lh: k, hl: k }
    }

    pub fn model(&self) -> Model {
        self.ll.model()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.model();
        for k in [&self.ll, &self.hh, &self.lh, &self.hl] {
            k.validate()?;
            if k.model() != m {
                return Err(invalid("all four kernels must use the same collision model"));
            }
        }
        Ok(())
    }
}

/// Grid, angular rule and kernels bundled for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Collision {
    pub grid: VelocityGrid,
    pub sphere: SphereRule,
    pub kernels: KernelSet,
    /// Apply the least-squares invariant correction after every evaluation.
    pub conservative: bool,
}

fn boltz(k: &KernelSpec) -> Option<&BoltzKernel> {
    match k {
        KernelSpec::Boltzmann(b) => Some(b),
        KernelSpec::Fpl(_) => None,
    }
}

fn fpl(k: &KernelSpec) -> Option<&FplKernel> {
    match k {
        KernelSpec::Fpl(b) => Some(b),
        KernelSpec::Boltzmann(_) => None,
    }
}

impl Collision {
    pub fn new(grid: VelocityGrid, sphere: SphereRule, kernels: KernelSet) -> Result<Self> {
        kernels.validate()?;
        Ok(Self { grid, sphere, kernels, conservative: false })
    }

    pub fn model(&self) -> Model {
        self.kernels.model()
    }

    fn intra_kernel(&self, s: Species) -> &KernelSpec {
        match s {
            Species::Light => &self.kernels.ll,
            Species::Heavy => &self.kernels.hh,
        }
    }

    fn fix_intra(&self, q: DistField) -> Result<DistField> {
        if self.conservative {
            project_intra(&self.grid, &q)
        } else {
            Ok(q)
        }
    }

    pub fn intra(&self, s: Species, f: &DistField) -> Result<DistField> {
        let q = match self.intra_kernel(s) {
            KernelSpec::Boltzmann(k) => cb::q_intra_quad(&self.grid, &self.sphere, f, k)?,
            KernelSpec::Fpl(k) => cf::q_intra_fpl(&self.grid, f, k)?,
        };
        self.fix_intra(q)
    }

    /// `[Q(f, f), Q(f, g), Q(g, g)]` in one sweep.
    pub fn intra_triple(&self, s: Species, f: &DistField, g: &DistField) -> Result<[DistField; 3]> {
        let t = match self.intra_kernel(s) {
            KernelSpec::Boltzmann(k) => cb::q_intra_triple(&self.grid, &self.sphere, f, g, k)?,
            KernelSpec::Fpl(k) => cf::q_intra_fpl_triple(&self.grid, f, g, k)?,
        };
        if !self.conservative {
            return Ok(t);
        }
        let [a, b, c] = t;
        Ok([self.fix_intra(a)?, self.fix_intra(b)?, self.fix_intra(c)?])
    }

    /// `(Q_LH(fl, fh), Q_HL(fh, fl))` at mass ratio `eps`.
    pub fn inter_pair(&self, fl: &DistField, fh: &DistField, eps: f64) -> Result<(DistField, DistField)> {
        let (lh, hl) = match (&self.kernels.lh, &self.kernels.hl) {
            (KernelSpec::Boltzmann(a), KernelSpec::Boltzmann(b)) if a == b => {
                cb::q_inter_pair(&self.grid, &self.sphere, fl, fh, eps, a)?
            }
            _ => (self.raw_lh(fl, fh, eps)?, self.raw_hl(fh, fl, eps)?),
        };
        if self.conservative {
            project_pair(&self.grid, &lh, &hl, eps)
        } else {
            Ok((lh, hl))
        }
    }

    fn raw_lh(&self, fl: &DistField, fh: &DistField, eps: f64) -> Result<DistField> {
        match &self.kernels.lh {
            KernelSpec::Boltzmann(k) => cb::q_inter_lh_eps(&self.grid, &self.sphere, fl, fh, eps, k),
            KernelSpec::Fpl(k) => cf::q_inter_lh_eps_fpl(&self.grid, fl, fh, eps, k),
        }
    }

    fn raw_hl(&self, fh: &DistField, fl: &DistField, eps: f64) -> Result<DistField> {
        match &self.kernels.hl {
            KernelSpec::Boltzmann(k) => cb::q_inter_hl_eps(&self.grid, &self.sphere, fh, fl, eps, k),
            KernelSpec::Fpl(k) => cf::q_inter_hl_eps_fpl(&self.grid, fh, fl, eps, k),
        }
    }

    fn fix_mass(&self, q: DistField) -> Result<DistField> {
        if !self.conservative {
            return Ok(q);
        }
        let mut t = invariant_integrals(&self.grid, &q);
        t[0] = 0.0;
        project(&self.grid, &q, t)
    }

    pub fn inter_lh(&self, fl: &DistField, fh: &DistField, eps: f64) -> Result<DistField> {
        self.fix_mass(self.raw_lh(fl, fh, eps)?)
    }

    pub fn inter_hl(&self, fh: &DistField, fl: &DistField, eps: f64) -> Result<DistField> {
        self.fix_mass(self.raw_hl(fh, fl, eps)?)
    }

    /// Light limit operator; conserves light mass and energy when corrected.
    pub fn q0_lh(&self, fl: &DistField, nh: f64) -> Result<DistField> {
        let q = match &self.kernels.lh {
            KernelSpec::Boltzmann(k) => cb::q0_lh(&self.grid, &self.sphere, fl, nh, k)?,
            KernelSpec::Fpl(k) => cf::q0_lh_fpl(&self.grid, fl, nh, k)?,
        };
        if !self.conservative {
            return Ok(q);
        }
        let mut t = invariant_integrals(&self.grid, &q);
        t[0] = 0.0;
        t[4] = 0.0;
        project(&self.grid, &q, t)
    }

    pub fn q0_hl(&self, fh: &DistField, fl: &DistField) -> Result<DistField> {
        let q = match &self.kernels.hl {
            KernelSpec::Boltzmann(k) => cb::q0_hl(&self.grid, &self.sphere, fh, fl, k)?,
            KernelSpec::Fpl(k) => cf::q0_hl_fpl(&self.grid, fh, fl, k)?,
        };
        self.fix_mass(q)
    }

    /// Linear limit operator `fl -> q0_LH(fl, 1)` for the Landau model.
    pub fn q0_lh_diffusion(&self) -> Option<FaceDiffusion> {
        fpl(&self.kernels.lh).map(|k| FaceDiffusion::limit(&self.grid, k))
    }

    pub fn boltzmann_lh(&self) -> Option<&BoltzKernel> {
        boltz(&self.kernels.lh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::maxwellian;

    #[test]
    fn mixed_models_rejected() {
        let b = KernelSpec::new(Model::Boltzmann, 0.0, 1.0, 0.0).unwrap();
        let f = KernelSpec::new(Model::Fpl, 0.0, 1.0, 0.0).unwrap();
        let set = KernelSet { ll: b, hh: b, lh: f, hl: b };
        assert!(set.validate().is_err());
        assert!("landau".parse::<Model>().is_err());
        assert_eq!("fpl".parse::<Model>().unwrap(), Model::Fpl);
    }

    #[test]
    fn conservative_mode_zeroes_intra_invariants() {
        let g = VelocityGrid::new(5.0, 6).unwrap();
        let k = KernelSpec::new(Model::Boltzmann, 0.0, 1.0, 0.0).unwrap();
        let mut c = Collision::new(g.clone(), SphereRule::new(3).unwrap(), KernelSet::uniform(k)).unwrap();
        c.conservative = true;
        let f = maxwellian(&g, 1.0, [0.4, 0.0, 0.0], 0.8).unwrap().add(&maxwellian(&g, 0.5, [-0.5, 0.2, 0.0], 1.2).unwrap());
        let q = c.intra(Species::Light, &f).unwrap();
        for x in invariant_integrals(&g, &q) {
            assert!(x.abs() < 1e-12);
        }
        let fh = maxwellian(&g, 1.0, [0.1, 0.0, 0.0], 1.5).unwrap();
        let (lh, hl) = c.inter_pair(&f, &fh, 0.5).unwrap();
        let a = invariant_integrals(&g, &lh);
        let b = invariant_integrals(&g, &hl);
        assert!(a[0].abs() < 1e-12 && b[0].abs() < 1e-12);
        assert!((a[1] + b[1]).abs() < 1e-12);
        assert!((a[4] + 0.5 * b[4]).abs() < 1e-12);
    }
}
