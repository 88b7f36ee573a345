//! Time-series CSV files and binary field snapshots.
//!
//! A series file starts with `#` comment lines holding the resolved
//! configuration, followed by the header row and one row per output time.
//! A run that fails part way appends a `# TRUNCATED: <reason>` line.
//!
//! Snapshot layout, all little endian:
//! `b"MXKSNAP1"`, then `u64` cell count, points per velocity axis and field
//! count, then `f64` `v_max`, cell width, `eps` and time, then every value as
//! `f64` in row-major order `[cell][field][i][j][k]` with fields
//! `fL0, fL1, fH0, fH1`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::ap_homogeneous::{reconstruct, SplitState};
use crate::ap_inhomogeneous::FieldArray;
use crate::error::{Error, Result};
use crate::limit_oracle::MacroState;
use crate::phase_space::{dot, moments, Hydro, VelocityGrid};

pub const CSV_HEADER: [&str; 16] = [
    "t", "n_L", "ux_L", "uy_L", "uz_L", "T_L", "n_H", "ux_H", "uy_H", "uz_H", "T_H", "mass_L", "mass_H", "energy_total",
    "neg_nodes_L0", "neg_nodes_H0",
];

pub const TRUNCATION_MARKER: &str = "# TRUNCATED:";
pub const SNAPSHOT_MAGIC: &[u8; 8] = b"MXKSNAP1";

/// One output sample. Hydrodynamic columns come from the tracked `f0`
/// moments; masses and energy integrate the reconstructed `f0 + eps f1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub t: f64,
    pub light: Hydro,
    pub heavy: Hydro,
    pub mass_l: f64,
    pub mass_h: f64,
    pub energy: f64,
    pub neg_l: usize,
    pub neg_h: usize,
}

impl Row {
    pub fn from_state(grid: &VelocityGrid, s: &SplitState) -> Result<Self> {
        let (fl, fh) = reconstruct(s);
        let (ml, mh) = (moments(grid, &fl), moments(grid, &fh));
        Ok(Self {
            t: s.t,
            light: s.light_hydro()?,
            heavy: s.heavy_hydro()?,
            mass_l: ml.p0,
            mass_h: mh.p0,
            energy: ml.p2 + mh.p2,
            neg_l: s.diagnostics.neg_nodes_l0,
            neg_h: s.diagnostics.neg_nodes_h0,
        })
    }

    /// Cell-averaged hydrodynamics, masses and energy integrated over `x`.
    pub fn from_fields(grid: &VelocityGrid, fa: &FieldArray) -> Result<Self> {
        let (ml, mh) = fa.mean_moments();
        let mut row = Self {
            t: fa.time(),
            light: ml.hydro()?,
            heavy: mh.hydro()?,
            mass_l: 0.0,
            mass_h: 0.0,
            energy: 0.0,
            neg_l: 0,
            neg_h: 0,
        };
        for c in &fa.cells {
            let r = Self::from_state(grid, c)?;
            row.mass_l += r.mass_l * fa.mesh.dx;
            row.mass_h += r.mass_h * fa.mesh.dx;
            row.energy += r.energy * fa.mesh.dx;
            row.neg_l += r.neg_l;
            row.neg_h += r.neg_h;
        }
        Ok(row)
    }

    pub fn from_oracle(m: &MacroState) -> Self {
        let kin = 0.5 * m.n_h * dot(m.u_h, m.u_h);
        Self {
            t: m.time,
            light: Hydro { n: m.n_l, u: [0.0; 3], t: m.t_l },
            heavy: Hydro { n: m.n_h, u: m.u_h, t: m.t_h },
            mass_l: m.n_l,
            mass_h: m.n_h,
            energy: m.thermal_energy() + kin,
            neg_l: 0,
            neg_h: 0,
        }
    }

    pub fn fields(&self) -> [String; 16] {
        let (l, h) = (&self.light, &self.heavy);
        [
            self.t, l.n, l.u[0], l.u[1], l.u[2], l.t, h.n, h.u[0], h.u[1], h.u[2], h.t, self.mass_l, self.mass_h, self.energy,
        ]
        .map(|x| x.to_string())
        .into_iter()
        .chain([self.neg_l.to_string(), self.neg_h.to_string()])
        .collect::<Vec<_>>()
        .try_into()
        .expect("sixteen columns")
    }
}

/// Streaming writer for a series file.
pub struct SeriesWriter {
    w: csv::Writer<BufWriter<File>>,
}

impl SeriesWriter {
    pub fn create(path: &Path, config_text: &str) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        for line in config_text.lines() {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        Ok(Self { w })
    }

    pub fn write_row(&mut self, row: &Row) -> Result<()> {
        self.w.write_record(row.fields())?;
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        let mut out = self.w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        out.flush()?;
        Ok(())
    }

    /// Flushes what was written and appends the truncation marker.
    pub fn truncate(self, reason: &str) -> Result<()> {
        let mut out = self.w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        writeln!(out, "{TRUNCATION_MARKER} {}", reason.replace('\n', " "))?;
        out.flush()?;
        Ok(())
    }
}

/// A parsed series file.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub truncated: bool,
}

impl Series {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

pub fn parse_series(text: &str) -> Result<Series> {
    let truncated = text.lines().any(|l| l.starts_with(TRUNCATION_MARKER));
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse { line: i + 2, msg: format!("bad number in series: {e}") })?;
        rows.push(row);
    }
    Ok(Series { header, rows, truncated })
}

pub fn read_series(path: &Path) -> Result<Series> {
    parse_series(&std::fs::read_to_string(path)?)
}

/// Contents of a snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub nx: usize,
    pub n: usize,
    pub n_fields: usize,
    pub v_max: f64,
    pub dx: f64,
    pub eps: f64,
    pub t: f64,
    pub data: Vec<f64>,
}

impl Snapshot {
    /// Packs cell states; `dx` is zero for a single homogeneous cell.
    pub fn from_cells(grid: &VelocityGrid, cells: &[SplitState], dx: f64) -> Self {
        let mut data = Vec::with_capacity(cells.len() * 4 * grid.len());
        for c in cells {
            for f in [&c.fl0, &c.fl1, &c.fh0, &c.fh1] {
                data.extend_from_slice(&f.values);
            }
        }
        Self {
            nx: cells.len(),
            n: grid.n(),
            n_fields: 4,
            v_max: grid.v_max(),
            dx,
            eps: cells.first().map_or(0.0, |c| c.eps),
            t: cells.first().map_or(0.0, |c| c.t),
            data,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(SNAPSHOT_MAGIC)?;
        for d in [self.nx, self.n, self.n_fields] {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for x in [self.v_max, self.dx, self.eps, self.t].iter().chain(&self.data) {
            w.write_all(&x.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(Error::Io("not a snapshot file".into()));
        }
        let mut word = [0u8; 8];
        let mut next_u = |r: &mut BufReader<File>| -> Result<usize> {
            r.read_exact(&mut word)?;
            usize::try_from(u64::from_le_bytes(word)).map_err(|e| Error::Io(e.to_string()))
        };
        let (nx, n, n_fields) = (next_u(&mut r)?, next_u(&mut r)?, next_u(&mut r)?);
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        let expect = 4 + nx * n_fields * n * n * n;
        if rest.len() != 8 * expect {
            return Err(Error::Io(format!("snapshot holds {} bytes of data, expected {}", rest.len(), 8 * expect)));
        }
        let vals: Vec<f64> = rest.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        Ok(Self { nx, n, n_fields, v_max: vals[0], dx: vals[1], eps: vals[2], t: vals[3], data: vals[4..].to_vec() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::DistField;

    fn state(grid: &VelocityGrid) -> SplitState {
        SplitState::from_hydro(
            grid,
            Hydro { n: 1.0, u: [0.0; 3], t: 1.0 },
            Hydro { n: 0.5, u: [0.1, 0.0, 0.0], t: 2.0 },
            0.1,
            true,
        )
        .unwrap()
    }

    #[test]
    fn series_round_trip_with_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let g = VelocityGrid::new(6.0, 4).unwrap();
        let row = Row::from_state(&g, &state(&g)).unwrap();
        let mut w = SeriesWriter::create(&path, "[run]\neps = 0.1").unwrap();
        w.write_row(&row).unwrap();
        w.truncate("solver failed").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# [run]\n# eps = 0.1\nt,n_L,"));
        let s = parse_series(&text).unwrap();
        assert!(s.truncated);
        assert_eq!(s.header, CSV_HEADER);
        assert_eq!(s.rows.len(), 1);
        assert_eq!(s.column("T_H").unwrap(), vec![2.0]);
        assert_eq!(s.column("n_H").unwrap(), vec![0.5]);
    }

    #[test]
    fn snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.bin");
        let g = VelocityGrid::new(5.0, 4).unwrap();
        let mut s = state(&g);
        s.fh1 = DistField::from_fn(&g, |v| v[2]);
        let snap = Snapshot::from_cells(&g, &[s.clone(), s], 0.5);
        snap.write(&path).unwrap();
        let back = Snapshot::read(&path).unwrap();
        assert_eq!(back, snap);
        assert_eq!(back.data.len(), 2 * 4 * 64);
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..8], SNAPSHOT_MAGIC);
        assert_eq!(bytes.len(), 8 + 24 + 32 + 8 * 512);
    }
}
