//! Snapshots, checkpoints and tabular output.
//!
//! A snapshot is a plain-text header followed by three blocks:
//!
//! ```text
//! tdgl-snapshot 1
//! format text            # or binary
//! nx 76
//! ny 96
//! nsx 5
//! nex 72
//! hx 0.5
//! hy 0.5
//! kappa 4
//! sigma 1
//! t 12.5
//! step 125
//! seed 1                 # checkpoints only
//! phase 0                # checkpoints only
//! end
//! ```
//!
//! The blocks hold rows `j = 1..=ny` of `psi` (columns `nsx-1..=nex+1`, real
//! and imaginary parts interleaved), `A_x` (columns `0..=nx`) and `A_y`
//! (columns `0..=nx+1`). In text files every row is one line of
//! space-separated numbers printed in shortest round-trip form; in binary
//! files the same sequence follows `end\n` as little-endian `f64`. Either
//! way a state survives a write/read cycle bit for bit.
//!
//! The diagnostics CSV has the columns
//! `t,step,energy,vortex_count,mean_bond_length,mean_bond_angle,max_position_drift`
//! with empty cells where a value is undefined. Vortex files have `x,y,winding`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array::Field2;
use crate::config::DataFormat;
use crate::diagnostics::{DiagnosticsRecord, Vortex, VortexSet};
use crate::fields::{ax_layout, ay_layout, psi_layout, Params, State, C64};
use crate::grid::{GridError, GridSpec};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("malformed snapshot header: {0}")]
    Header(String),
    #[error("snapshot data ended early or has the wrong length")]
    Truncated,
    #[error("bad number {0:?} in snapshot data")]
    Number(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("snapshot does not match the configured grid or physics: {0}")]
    Mismatch(String),
}

const MAGIC: &str = "tdgl-snapshot 1";

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub format: DataFormat,
    pub grid: GridSpec,
    pub kappa: f64,
    pub sigma: f64,
    pub t: f64,
    pub step: u64,
    /// Present in checkpoints.
    pub seed: Option<u64>,
    pub phase: Option<u64>,
}

/// State fields as stored, before ghost refresh.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub psi: Field2<C64>,
    pub ax: Field2<f64>,
    pub ay: Field2<f64>,
}

impl Snapshot {
    /// Rebuilds a synced state. Fails if the grid or `kappa` differ from
    /// the run's.
    pub fn into_state(self, p: &Params, g: &GridSpec) -> Result<State, IoError> {
        if self.header.grid != *g {
            return Err(IoError::Mismatch("grid".into()));
        }
        if self.header.kappa != p.kappa || self.header.sigma != p.sigma {
            return Err(IoError::Mismatch("kappa or sigma".into()));
        }
        let mut s = State::zeros(g);
        s.psi = self.psi;
        s.ax = self.ax;
        s.ay = self.ay;
        s.t = self.header.t;
        s.step = self.header.step;
        s.sync(p, g);
        Ok(s)
    }
}

fn header_text(h: &SnapshotHeader) -> String {
    let g = &h.grid;
    let mut out = format!("{MAGIC}\nformat {}\n", if h.format == DataFormat::Binary { "binary" } else { "text" });
    for (k, v) in [
        ("nx", g.n_x.to_string()),
        ("ny", g.n_y.to_string()),
        ("nsx", g.n_sx.to_string()),
        ("nex", g.n_ex.to_string()),
        ("hx", g.h_x.to_string()),
        ("hy", g.h_y.to_string()),
        ("kappa", h.kappa.to_string()),
        ("sigma", h.sigma.to_string()),
        ("t", h.t.to_string()),
        ("step", h.step.to_string()),
    ] {
        out.push_str(&format!("{k} {v}\n"));
    }
    if let Some(seed) = h.seed {
        out.push_str(&format!("seed {seed}\n"));
    }
    if let Some(phase) = h.phase {
        out.push_str(&format!("phase {phase}\n"));
    }
    out.push_str("end\n");
    out
}

fn rows<'a, T: Copy>(f: &'a Field2<T>, g: &GridSpec) -> impl Iterator<Item = T> + 'a {
    let ny = g.n_y;
    (1..=ny).flat_map(move |j| f.row(j).iter().copied())
}

fn values(s: &State, g: &GridSpec) -> Vec<f64> {
    let mut v = Vec::new();
    v.extend(rows(&s.psi, g).flat_map(|z| [z.re, z.im]));
    v.extend(rows(&s.ax, g));
    v.extend(rows(&s.ay, g));
    v
}

fn write_snapshot_impl(path: &Path, s: &State, p: &Params, g: &GridSpec, format: DataFormat, ckpt: Option<(u64, u64)>) -> Result<(), IoError> {
    let header = SnapshotHeader {
        format,
        grid: g.clone(),
        kappa: p.kappa,
        sigma: p.sigma,
        t: s.t,
        step: s.step,
        seed: ckpt.map(|c| c.0),
        phase: ckpt.map(|c| c.1),
    };
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(header_text(&header).as_bytes())?;
    match format {
        DataFormat::Binary => {
            for x in values(s, g) {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        DataFormat::Text => {
            let widths = [2 * s.psi.n_cols(), s.ax.n_cols(), s.ay.n_cols()];
            let all = values(s, g);
            let mut it = all.iter();
            for width in widths {
                for _ in 0..g.n_y {
                    let line: Vec<String> = it.by_ref().take(width).map(|x| x.to_string()).collect();
                    writeln!(w, "{}", line.join(" "))?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_snapshot(path: &Path, s: &State, p: &Params, g: &GridSpec, format: DataFormat) -> Result<(), IoError> {
    write_snapshot_impl(path, s, p, g, format, None)
}

/// Snapshot plus the generator seed and the multirate phase counter.
pub fn write_checkpoint(path: &Path, s: &State, p: &Params, g: &GridSpec, format: DataFormat, seed: u64, phase: u64) -> Result<(), IoError> {
    write_snapshot_impl(path, s, p, g, format, Some((seed, phase)))
}

fn parse_header(r: &mut impl BufRead) -> Result<SnapshotHeader, IoError> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.trim_end() != MAGIC {
        return Err(IoError::Header(format!("expected {MAGIC:?}")));
    }
    let mut kv = BTreeMap::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(IoError::Header("missing end".into()));
        }
        let l = line.trim_end();
        if l == "end" {
            break;
        }
        let (k, v) = l.split_once(' ').ok_or_else(|| IoError::Header(l.to_owned()))?;
        kv.insert(k.to_owned(), v.to_owned());
    }
    fn get<T: std::str::FromStr>(kv: &BTreeMap<String, String>, k: &str) -> Result<T, IoError> {
        kv.get(k)
            .ok_or_else(|| IoError::Header(format!("missing {k}")))?
            .parse()
            .map_err(|_| IoError::Header(format!("bad {k}")))
    }
    let format = match kv.get("format").map(String::as_str) {
        Some("text") => DataFormat::Text,
        Some("binary") => DataFormat::Binary,
        _ => return Err(IoError::Header("format must be text or binary".into())),
    };
    let grid = GridSpec::new(get(&kv, "nx")?, get(&kv, "ny")?, get(&kv, "nsx")?, get(&kv, "nex")?, get(&kv, "hx")?, get(&kv, "hy")?)?;
    Ok(SnapshotHeader {
        format,
        grid,
        kappa: get(&kv, "kappa")?,
        sigma: get(&kv, "sigma")?,
        t: get(&kv, "t")?,
        step: get(&kv, "step")?,
        seed: kv.contains_key("seed").then(|| get(&kv, "seed")).transpose()?,
        phase: kv.contains_key("phase").then(|| get(&kv, "phase")).transpose()?,
    })
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, IoError> {
    let mut r = BufReader::new(File::open(path)?);
    let header = parse_header(&mut r)?;
    let g = &header.grid;
    let mut psi = psi_layout(g, C64::new(0.0, 0.0));
    let mut ax = ax_layout(g, 0.0);
    let mut ay = ay_layout(g, 0.0);
    let n = g.n_y * (2 * psi.n_cols() + ax.n_cols() + ay.n_cols());
    let data: Vec<f64> = match header.format {
        DataFormat::Binary => {
            let mut bytes = Vec::new();
            r.read_to_end(&mut bytes)?;
            if bytes.len() != 8 * n {
                return Err(IoError::Truncated);
            }
            bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect()
        }
        DataFormat::Text => {
            let mut text = String::new();
            r.read_to_string(&mut text)?;
            let v = text
                .split_ascii_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| IoError::Number(t.to_owned())))
                .collect::<Result<Vec<_>, _>>()?;
            if v.len() != n {
                return Err(IoError::Truncated);
            }
            v
        }
    };
    let mut it = data.into_iter();
    for j in 1..=g.n_y {
        for z in psi.row_mut(j) {
            *z = C64::new(it.next().ok_or(IoError::Truncated)?, it.next().ok_or(IoError::Truncated)?);
        }
    }
    for f in [&mut ax, &mut ay] {
        for j in 1..=g.n_y {
            for x in f.row_mut(j) {
                *x = it.next().ok_or(IoError::Truncated)?;
            }
        }
    }
    Ok(Snapshot { header, psi, ax, ay })
}

/// Appends diagnostics rows, writing the header only for a new file.
pub struct DiagnosticsWriter {
    w: csv::Writer<File>,
}

impl DiagnosticsWriter {
    pub fn create(path: &Path) -> Result<Self, IoError> {
        Ok(Self { w: csv::WriterBuilder::new().has_headers(true).from_path(path)? })
    }

    /// Keeps the rows with `step <= last_step` and continues after them.
    pub fn resume(path: &Path, last_step: u64) -> Result<Self, IoError> {
        let kept: Vec<DiagnosticsRecord> = if path.exists() {
            read_diagnostics(path)?.into_iter().filter(|r| r.step <= last_step).collect()
        } else {
            Vec::new()
        };
        let mut w = Self::create(path)?;
        for r in &kept {
            w.append(r)?;
        }
        Ok(w)
    }

    pub fn append(&mut self, r: &DiagnosticsRecord) -> Result<(), IoError> {
        self.w.serialize(r)?;
        self.w.flush()?;
        Ok(())
    }
}

pub fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticsRecord>, IoError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<_>, _>>()?)
}

#[derive(Debug, Serialize, Deserialize)]
struct VortexRow {
    x: f64,
    y: f64,
    winding: i32,
}

pub fn write_vortices(path: &Path, v: &VortexSet) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path)?;
    for p in &v.vortices {
        w.serialize(VortexRow { x: p.x, y: p.y, winding: p.winding })?;
    }
    w.flush()?;
    Ok(())
}

/// Vortices read back from CSV are marked as refined.
pub fn read_vortices(path: &Path) -> Result<VortexSet, IoError> {
    let mut r = csv::Reader::from_path(path)?;
    let vortices = r
        .deserialize::<VortexRow>()
        .map(|row| row.map(|v| Vortex { x: v.x, y: v.y, winding: v.winding, refined: true }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VortexSet { vortices })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}
