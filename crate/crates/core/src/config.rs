//! Scenario configuration in a flat sectioned `key = value` format.
//!
//! ```text
//! # comment
//! [run]
//! mode = homogeneous
//! eps = 0.01
//! dt = 0.01
//! t_end = 1.0
//! [grid]
//! n = 8
//! ```
//!
//! Blank lines and everything after `#` are ignored. Every key belongs to a
//! section, may appear once, and must be known. The accepted keys and their
//! defaults are listed in the repository README.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::ap_homogeneous::{HeavyMomentScaling, SchemeConfig};
use crate::ap_inhomogeneous::{InhomConfig, SpatialMesh};
use crate::error::{invalid, Error, Result};
use crate::operators::{Collision, KernelSet, KernelSpec, Model};
use crate::penalty::PenaltyConfig;
use crate::phase_space::{Hydro, SphereRule, VelocityGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Homogeneous,
    Inhomogeneous,
    Oracle,
}

impl FromStr for RunMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "homogeneous" => Ok(Self::Homogeneous),
            "inhomogeneous" => Ok(Self::Inhomogeneous),
            "oracle" => Ok(Self::Oracle),
            other => Err(invalid(format!("unknown mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for RunMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Homogeneous => "homogeneous",
            Self::Inhomogeneous => "inhomogeneous",
            Self::Oracle => "oracle",
        })
    }
}

/// Initial data and acceleration of one species.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeciesInit {
    pub n: f64,
    pub u: [f64; 3],
    pub t: f64,
    /// Relative amplitude of the seeded velocity noise (homogeneous) or of
    /// the sinusoidal density profile (inhomogeneous).
    pub perturbation: f64,
    pub force: [f64; 3],
}

impl SpeciesInit {
    pub fn hydro(&self) -> Hydro {
        Hydro { n: self.n, u: self.u, t: self.t }
    }
}

impl Default for SpeciesInit {
    fn default() -> Self {
        Self { n: 1.0, u: [0.0; 3], t: 1.0, perturbation: 0.0, force: [0.0; 3] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub mode: RunMode,
    pub eps: f64,
    pub dt: f64,
    pub t_end: f64,
    pub output: PathBuf,
    /// Write a CSV row every `every` steps (the last step is always written).
    pub every: usize,
    pub snapshot: Option<PathBuf>,
    pub seed: u64,
    pub well_prepared: bool,

    pub n: usize,
    pub v_max: f64,
    pub sphere_order: usize,

    pub nx: usize,
    pub dx: f64,
    pub periodic: bool,
    pub per_cell: bool,

    pub model: Model,
    pub gamma: f64,
    pub b0: f64,
    pub delta: f64,
    pub conservative: bool,

    pub penalty: PenaltyConfig,
    pub mu_override: Option<f64>,
    pub heavy_scaling: HeavyMomentScaling,
    pub damp_light_drift: bool,
    pub cfl: f64,

    pub light: SpeciesInit,
    pub heavy: SpeciesInit,
}

impl ScenarioConfig {
    /// Defaults for everything except the three required run parameters.
    pub fn with_defaults(eps: f64, dt: f64, t_end: f64) -> Self {
        Self {
            mode: RunMode::Homogeneous,
            eps,
            dt,
            t_end,
            output: PathBuf::from("mixkin.csv"),
            every: 1,
            snapshot: None,
            seed: 0,
            well_prepared: false,
            n: 8,
            v_max: 6.0,
            sphere_order: 3,
            nx: 8,
            dx: 0.125,
            periodic: true,
            per_cell: false,
            model: Model::Boltzmann,
            gamma: 0.0,
            b0: 1.0,
            delta: 0.0,
            conservative: false,
            penalty: PenaltyConfig::default(),
            mu_override: None,
            heavy_scaling: HeavyMomentScaling::Eps,
            damp_light_drift: true,
            cfl: 0.9,
            light: SpeciesInit::default(),
            heavy: SpeciesInit::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(invalid(format!("eps must be > 0 and <= 1, got {}", self.eps)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(invalid(format!("t_end must be > 0, got {}", self.t_end)));
        }
        if self.every == 0 {
            return Err(invalid("every must be >= 1"));
        }
        for (name, s) in [("light", &self.light), ("heavy", &self.heavy)] {
            if !(s.n > 0.0 && s.n.is_finite()) {
                return Err(invalid(format!("{name}.n must be > 0")));
            }
            if !(s.t > 0.0 && s.t.is_finite()) {
                return Err(invalid(format!("{name}.t must be > 0")));
            }
            if !(s.perturbation >= 0.0 && s.perturbation < 1.0) {
                return Err(invalid(format!("{name}.perturbation must lie in [0, 1)")));
            }
            if !s.u.iter().chain(&s.force).all(|x| x.is_finite()) {
                return Err(invalid(format!("{name} velocity and force must be finite")));
            }
        }
        if self.mode == RunMode::Oracle {
            return self.kernel().map(|_| ());
        }
        self.collision()?;
        self.scheme()?.validate()?;
        if self.mode == RunMode::Inhomogeneous {
            self.mesh()?;
            self.inhom()?.validate()?;
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }

    pub fn grid(&self) -> Result<VelocityGrid> {
        VelocityGrid::new(self.v_max, self.n)
    }

    pub fn kernel(&self) -> Result<KernelSpec> {
        KernelSpec::new(self.model, self.gamma, self.b0, self.delta)
    }

    pub fn collision(&self) -> Result<Collision> {
        let mut c = Collision::new(self.grid()?, SphereRule::new(self.sphere_order)?, KernelSet::uniform(self.kernel()?))?;
        c.conservative = self.conservative;
        Ok(c)
    }

    pub fn scheme(&self) -> Result<SchemeConfig> {
        let mut s = SchemeConfig::new(self.dt, self.collision()?);
        s.penalty = self.penalty;
        s.mu_override = self.mu_override;
        s.heavy_scaling = self.heavy_scaling;
        s.damp_light_drift = self.damp_light_drift;
        Ok(s)
    }

    pub fn mesh(&self) -> Result<SpatialMesh> {
        SpatialMesh::new(self.nx, self.dx, self.periodic)
    }

    pub fn inhom(&self) -> Result<InhomConfig> {
        let mut c = InhomConfig::new(self.scheme()?);
        c.cfl = self.cfl;
        Ok(c)
    }

    /// Canonical text form; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let vec3 = |v: [f64; 3]| (v[0], v[1], v[2]);
        let _ = writeln!(s, "[run]\nmode = {}\neps = {:?}\ndt = {:?}\nt_end = {:?}", self.mode, self.eps, self.dt, self.t_end);
        let _ = writeln!(s, "output = {}\nevery = {}\nseed = {}", self.output.display(), self.every, self.seed);
        if let Some(p) = &self.snapshot {
            let _ = writeln!(s, "snapshot = {}", p.display());
        }
        let _ = writeln!(s, "[grid]\nn = {}\nv_max = {:?}\nsphere_order = {}", self.n, self.v_max, self.sphere_order);
        let _ = writeln!(
            s,
            "[mesh]\nnx = {}\ndx = {:?}\nperiodic = {}\nper_cell = {}",
            self.nx, self.dx, self.periodic, self.per_cell
        );
        let _ = writeln!(
            s,
            "[model]\nkind = {}\ngamma = {:?}\nb0 = {:?}\ndelta = {:?}\nconservative = {}",
            self.model, self.gamma, self.b0, self.delta, self.conservative
        );
        let p = &self.penalty;
        let _ = writeln!(
            s,
            "[penalty]\nbeta_default = {:?}\nbeta_floor = {:?}\nbeta0 = {:?}\nmu_margin = {:?}\nbeta_cap = {}\ncg_tol = {:?}\ncg_max_iter = {}",
            p.beta_default, p.beta_floor, p.beta0, p.mu_margin, p.beta_cap, p.cg_tol, p.cg_max_iter
        );
        if let Some(mu) = self.mu_override {
            let _ = writeln!(s, "mu = {mu:?}");
        }
        let scaling = match self.heavy_scaling {
            HeavyMomentScaling::Eps => "eps",
            HeavyMomentScaling::EpsSquared => "eps2",
        };
        let _ = writeln!(s, "heavy_scaling = {scaling}\ndamp_light_drift = {}\ncfl = {:?}", self.damp_light_drift, self.cfl);
        for (name, sp) in [("light", &self.light), ("heavy", &self.heavy)] {
            let (ux, uy, uz) = vec3(sp.u);
            let (fx, fy, fz) = vec3(sp.force);
            let _ = writeln!(
                s,
                "[{name}]\nn = {:?}\nux = {ux:?}\nuy = {uy:?}\nuz = {uz:?}\nt = {:?}\nperturbation = {:?}\nforce_x = {fx:?}\nforce_y = {fy:?}\nforce_z = {fz:?}",
                sp.n, sp.t, sp.perturbation
            );
            if name == "light" {
                let _ = writeln!(s, "well_prepared = {}", self.well_prepared);
            }
        }
        s
    }
}

const SECTIONS: [&str; 7] = ["run", "grid", "mesh", "model", "penalty", "light", "heavy"];

struct Entries {
    map: BTreeMap<(String, String), (String, usize)>,
}

impl Entries {
    fn take<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<T>> {
        match self.map.remove(&(section.to_string(), key.to_string())) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Parse { line, msg: format!("cannot parse `{v}` for {section}.{key}") }),
        }
    }

    fn set<T: FromStr>(&mut self, section: &str, key: &str, slot: &mut T) -> Result<()> {
        if let Some(v) = self.take(section, key)? {
            *slot = v;
        }
        Ok(())
    }

    fn required<T: FromStr>(&mut self, section: &str, key: &str) -> Result<T> {
        self.take(section, key)?.ok_or_else(|| invalid(format!("missing required key {section}.{key}")))
    }
}

fn tokenize(text: &str) -> Result<Entries> {
    let mut map = BTreeMap::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::Parse { line, msg: format!("malformed section header `{body}`") })?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(Error::Parse { line, msg: format!("unknown section `{name}`") });
            }
            section = Some(name.to_string());
            continue;
        }
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| Error::Parse { line, msg: format!("expected `key = value`, found `{body}`") })?;
        let (k, v) = (k.trim(), v.trim());
        let sec = section.clone().ok_or_else(|| Error::Parse { line, msg: format!("key `{k}` appears before any section") })?;
        if k.is_empty() || v.is_empty() {
            return Err(Error::Parse { line, msg: format!("empty key or value in `{body}`") });
        }
        if map.insert((sec.clone(), k.to_string()), (v.to_string(), line)).is_some() {
            return Err(Error::Parse { line, msg: format!("duplicate key `{k}` in [{sec}]") });
        }
    }
    Ok(Entries { map })
}

fn species(e: &mut Entries, name: &str, s: &mut SpeciesInit) -> Result<()> {
    e.set(name, "n", &mut s.n)?;
    e.set(name, "ux", &mut s.u[0])?;
    e.set(name, "uy", &mut s.u[1])?;
    e.set(name, "uz", &mut s.u[2])?;
    e.set(name, "t", &mut s.t)?;
    e.set(name, "perturbation", &mut s.perturbation)?;
    e.set(name, "force_x", &mut s.force[0])?;
    e.set(name, "force_y", &mut s.force[1])?;
    e.set(name, "force_z", &mut s.force[2])
}

/// Parses and validates a scenario.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut e = tokenize(text)?;
    let mut c = ScenarioConfig::with_defaults(e.required("run", "eps")?, e.required("run", "dt")?, e.required("run", "t_end")?);
    e.set("run", "mode", &mut c.mode)?;
    e.set("run", "output", &mut c.output)?;
    e.set("run", "every", &mut c.every)?;
    e.set("run", "seed", &mut c.seed)?;
    c.snapshot = e.take("run", "snapshot")?;

    e.set("grid", "n", &mut c.n)?;
    e.set("grid", "v_max", &mut c.v_max)?;
    e.set("grid", "sphere_order", &mut c.sphere_order)?;

    e.set("mesh", "nx", &mut c.nx)?;
    e.set("mesh", "dx", &mut c.dx)?;
    e.set("mesh", "periodic", &mut c.periodic)?;
    e.set("mesh", "per_cell", &mut c.per_cell)?;

    e.set("model", "kind", &mut c.model)?;
    e.set("model", "gamma", &mut c.gamma)?;
    e.set("model", "b0", &mut c.b0)?;
    e.set("model", "delta", &mut c.delta)?;
    e.set("model", "conservative", &mut c.conservative)?;

    let p = &mut c.penalty;
    e.set("penalty", "beta_default", &mut p.beta_default)?;
    e.set("penalty", "beta_floor", &mut p.beta_floor)?;
    e.set("penalty", "beta0", &mut p.beta0)?;
    e.set("penalty", "mu_margin", &mut p.mu_margin)?;
    e.set("penalty", "beta_cap", &mut p.beta_cap)?;
    e.set("penalty", "cg_tol", &mut p.cg_tol)?;
    e.set("penalty", "cg_max_iter", &mut p.cg_max_iter)?;
    c.mu_override = e.take("penalty", "mu")?;
    if let Some(s) = e.take::<String>("penalty", "heavy_scaling")? {
        c.heavy_scaling = match s.as_str() {
            "eps" => HeavyMomentScaling::Eps,
            "eps2" => HeavyMomentScaling::EpsSquared,
            other => return Err(invalid(format!("penalty.heavy_scaling must be `eps` or `eps2`, got `{other}`"))),
        };
    }
    e.set("penalty", "damp_light_drift", &mut c.damp_light_drift)?;
    e.set("penalty", "cfl", &mut c.cfl)?;

    species(&mut e, "light", &mut c.light)?;
    species(&mut e, "heavy", &mut c.heavy)?;
    e.set("light", "well_prepared", &mut c.well_prepared)?;

    if let Some(((sec, key), (_, line))) = e.map.into_iter().next() {
        return Err(Error::Parse { line, msg: format!("unknown key `{key}` in [{sec}]") });
    }
    c.validate()?;
    Ok(c)
}
