//! Runs a configured scenario and writes its outputs.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ap_homogeneous::{ap_step, SplitState};
use crate::ap_inhomogeneous::{full_step, FieldArray};
use crate::config::{RunMode, ScenarioConfig};
use crate::error::Result;
use crate::limit_oracle::{relax_step_implicit, MacroState, RelaxationRate};
use crate::output::{Row, SeriesWriter, Snapshot};
use crate::phase_space::{DistField, Hydro, SphereRule, VelocityGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub rows: usize,
    pub last: Row,
}

/// Homogeneous initial state; nonzero perturbations multiply each `f0` by
/// `1 + a r(v)` with `r` uniform in `[-1, 1]` drawn from the configured seed.
pub fn initial_state(cfg: &ScenarioConfig, grid: &VelocityGrid) -> Result<SplitState> {
    let s = SplitState::from_hydro(grid, cfg.light.hydro(), cfg.heavy.hydro(), cfg.eps, cfg.well_prepared)?;
    if cfg.light.perturbation == 0.0 && cfg.heavy.perturbation == 0.0 {
        return Ok(s);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut noisy = |f: &DistField, a: f64| DistField {
        values: f.values.iter().map(|x| x * (1.0 + a * rng.gen_range(-1.0..=1.0))).collect(),
    };
    let fl0 = noisy(&s.fl0, cfg.light.perturbation);
    let fh0 = noisy(&s.fh0, cfg.heavy.perturbation);
    SplitState::new(grid, fl0, s.fl1, fh0, s.fh1, cfg.eps)
}

/// Slab initial data with density profiles `n (1 + a sin(2 pi x / L))`.
pub fn initial_fields(cfg: &ScenarioConfig, grid: &VelocityGrid) -> Result<FieldArray> {
    let mesh = cfg.mesh()?;
    let len = mesh.length();
    let wave = |sp: &crate::config::SpeciesInit, x: f64| Hydro {
        n: sp.n * (1.0 + sp.perturbation * (2.0 * std::f64::consts::PI * x / len).sin()),
        u: sp.u,
        t: sp.t,
    };
    let mut fa = FieldArray::from_profile(grid, mesh, cfg.eps, cfg.well_prepared, |x| (wave(&cfg.light, x), wave(&cfg.heavy, x)))?;
    fa.force_l = cfg.light.force;
    fa.force_h = cfg.heavy.force;
    Ok(fa)
}

pub fn oracle_state(cfg: &ScenarioConfig) -> MacroState {
    MacroState { n_l: cfg.light.n, t_l: cfg.light.t, n_h: cfg.heavy.n, u_h: cfg.heavy.u, t_h: cfg.heavy.t, time: 0.0 }
}

fn cell_path(base: &Path, i: usize) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("mixkin");
    base.with_file_name(format!("{stem}_cell{i}.csv"))
}

/// Writers for the main series and, optionally, one file per cell.
struct Sinks {
    main: SeriesWriter,
    cells: Vec<SeriesWriter>,
}

impl Sinks {
    fn truncate(self, reason: &str) -> Result<()> {
        for w in self.cells {
            w.truncate(reason)?;
        }
        self.main.truncate(reason)
    }

    fn finish(self) -> Result<()> {
        for w in self.cells {
            w.finish()?;
        }
        self.main.finish()
    }
}

/// Executes the scenario. On a solver failure the rows written so far are
/// kept, the truncation marker is appended and the error is returned.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let text = cfg.to_text();
    let grid = cfg.grid()?;
    let steps = cfg.steps();
    let mut sinks = Sinks { main: SeriesWriter::create(&cfg.output, &text)?, cells: Vec::new() };
    if cfg.mode == RunMode::Inhomogeneous && cfg.per_cell {
        for i in 0..cfg.nx {
            sinks.cells.push(SeriesWriter::create(&cell_path(&cfg.output, i), &text)?);
        }
    }
    let mut rows = 0;
    let mut last = None;
    let outcome = drive(cfg, &grid, steps, &mut sinks, &mut |_| rows += 1, &mut last);
    match outcome {
        Ok(()) => {
            sinks.finish()?;
            Ok(RunSummary { steps, rows, last: last.expect("initial row is always written") })
        }
        Err(e) => {
            sinks.truncate(&e.to_string())?;
            Err(e)
        }
    }
}

fn drive(
    cfg: &ScenarioConfig,
    grid: &VelocityGrid,
    steps: usize,
    sinks: &mut Sinks,
    count: &mut dyn FnMut(&Row),
    last: &mut Option<Row>,
) -> Result<()> {
    let due = |k: usize| k % cfg.every == 0 || k == steps;
    let mut emit = |sinks: &mut Sinks, row: Row| -> Result<()> {
        sinks.main.write_row(&row)?;
        count(&row);
        *last = Some(row);
        Ok(())
    };
    match cfg.mode {
        RunMode::Oracle => {
            let rate = RelaxationRate::new(grid.clone(), SphereRule::new(cfg.sphere_order)?, cfg.kernel()?)?;
            let mut m = oracle_state(cfg);
            emit(sinks, Row::from_oracle(&m))?;
            for k in 1..=steps {
                m = relax_step_implicit(&m, cfg.dt, &rate)?;
                if due(k) {
                    emit(sinks, Row::from_oracle(&m))?;
                }
            }
        }
        RunMode::Homogeneous => {
            let scheme = cfg.scheme()?;
            let mut s = initial_state(cfg, grid)?;
            emit(sinks, Row::from_state(grid, &s)?)?;
            for k in 1..=steps {
                s = ap_step(&s, &scheme)?;
                if due(k) {
                    emit(sinks, Row::from_state(grid, &s)?)?;
                }
            }
            if let Some(p) = &cfg.snapshot {
                Snapshot::from_cells(grid, std::slice::from_ref(&s), 0.0).write(p)?;
            }
        }
        RunMode::Inhomogeneous => {
            let ic = cfg.inhom()?;
            let mut fa = initial_fields(cfg, grid)?;
            let write_cells = |sinks: &mut Sinks, fa: &FieldArray| -> Result<()> {
                for (w, c) in sinks.cells.iter_mut().zip(&fa.cells) {
                    w.write_row(&Row::from_state(grid, c)?)?;
                }
                Ok(())
            };
            emit(sinks, Row::from_fields(grid, &fa)?)?;
            write_cells(sinks, &fa)?;
            for k in 1..=steps {
                fa = full_step(&fa, &ic)?;
                if due(k) {
                    emit(sinks, Row::from_fields(grid, &fa)?)?;
                    write_cells(sinks, &fa)?;
                }
            }
            if let Some(p) = &cfg.snapshot {
                Snapshot::from_cells(grid, &fa.cells, fa.mesh.dx).write(p)?;
            }
        }
    }
    Ok(())
}
