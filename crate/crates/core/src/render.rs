//! Grayscale rasters of snapshot fields in binary PGM (`P5`) form.
//!
//! Order-parameter quantities cover the superconducting vertices, one pixel
//! each; the induced field covers the cells `0..=n_x`. The top image row is
//! the largest `y`. Values map linearly onto `0..=255` between the field's
//! minimum and maximum; the phase always uses `[-pi, pi]`. A constant field
//! renders as mid-gray. A sidecar text file records the scale.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::diagnostics::detect_vortices;
use crate::fields::{link_variables, magnetic_field, State};
use crate::io::{read_snapshot, IoError, Snapshot};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("unknown quantity {0:?}; expected modulus, phase or field")]
    UnknownQuantity(String),
    #[error(transparent)]
    Io(#[from] IoError),
}

impl From<std::io::Error> for RenderError {
    fn from(e: std::io::Error) -> Self {
        RenderError::Io(IoError::Io(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// `|psi|`
    Modulus,
    /// `arg psi`
    Phase,
    /// Induced field `B`
    Field,
}

impl FromStr for Quantity {
    type Err = RenderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "modulus" | "abs" | "|psi|" => Ok(Quantity::Modulus),
            "phase" | "arg" => Ok(Quantity::Phase),
            "field" | "b" => Ok(Quantity::Field),
            _ => Err(RenderError::UnknownQuantity(s.to_owned())),
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Quantity::Modulus => "modulus",
            Quantity::Phase => "phase",
            Quantity::Field => "field",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub quantity: Quantity,
    pub width: usize,
    pub height: usize,
    /// Row-major, top row first.
    pub pixels: Vec<u8>,
    /// Data range.
    pub min: f64,
    pub max: f64,
    /// Values mapped to 0 and 255.
    pub scale: (f64, f64),
}

impl Raster {
    pub fn pixel(&self, col: usize, row: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    pub fn write_pgm(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(f, "P5\n{} {}\n255\n", self.width, self.height)?;
        f.write_all(&self.pixels)?;
        f.flush()
    }

    pub fn sidecar_text(&self) -> String {
        format!(
            "quantity {}\nmin {}\nmax {}\nscale_low {}\nscale_high {}\nwidth {}\nheight {}\n",
            self.quantity, self.min, self.max, self.scale.0, self.scale.1, self.width, self.height
        )
    }
}

/// State as stored in the snapshot: links from the header's `kappa` and
/// periodic rows refreshed. The boundary columns of `A_y` are kept as
/// written since the applied field is not part of the header.
pub fn snapshot_state(snap: &Snapshot) -> State {
    let g = &snap.header.grid;
    let mut s = State::zeros(g);
    s.psi = snap.psi.clone();
    s.ax = snap.ax.clone();
    s.ay = snap.ay.clone();
    s.ax.refresh_periodic_rows();
    s.ay.refresh_periodic_rows();
    s.links = link_variables(&s.ax, &s.ay, snap.header.kappa, g);
    s.sync_psi(g);
    s.t = snap.header.t;
    s.step = snap.header.step;
    s
}

fn to_gray(v: f64, lo: f64, hi: f64) -> u8 {
    if hi - lo <= 0.0 || !(hi - lo).is_finite() {
        return 128;
    }
    ((v - lo) / (hi - lo) * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Rasterizes `q`. With `overlay`, every detected vortex is marked white
/// at its pixel and the four neighbours.
pub fn rasterize(snap: &Snapshot, q: Quantity, overlay: bool) -> Raster {
    let g = &snap.header.grid;
    let s = snapshot_state(snap);
    let (first_col, values) = match q {
        Quantity::Modulus | Quantity::Phase => {
            let f = |z: crate::fields::C64| if q == Quantity::Modulus { z.norm() } else { z.arg() };
            let v: Vec<Vec<f64>> = (1..=g.n_y).map(|j| (g.n_sx..=g.n_ex).map(|i| f(s.psi.get(i, j))).collect()).collect();
            (g.n_sx, v)
        }
        Quantity::Field => {
            let b = magnetic_field(&s, g);
            (0, (1..=g.n_y).map(|j| (0..=g.n_x).map(|i| b.get(i, j)).collect()).collect())
        }
    };
    let height = values.len();
    let width = values[0].len();
    let (min, max) = values
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let scale = if q == Quantity::Phase { (-PI, PI) } else { (min, max) };
    let mut pixels = Vec::with_capacity(width * height);
    for row in values.iter().rev() {
        pixels.extend(row.iter().map(|&v| to_gray(v, scale.0, scale.1)));
    }
    let mut r = Raster { quantity: q, width, height, pixels, min, max, scale };
    if overlay {
        // cell-centred quantities are offset by half a cell
        let x0 = g.x(first_col) + if q == Quantity::Field { 0.5 * g.h_x } else { 0.0 };
        for v in &detect_vortices(&s, &s.links, g).vortices {
            let col = ((v.x - x0) / g.h_x).round();
            let j = ((v.y - g.y(1)) / g.h_y).round().rem_euclid(g.n_y as f64) as usize;
            if col < 0.0 || col as usize >= width {
                continue;
            }
            let (col, row) = (col as usize, height - 1 - j);
            mark(&mut r, col, row);
        }
    }
    r
}

fn mark(r: &mut Raster, col: usize, row: usize) {
    let (w, h) = (r.width as isize, r.height as isize);
    for (dc, dr) in [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)] {
        let (c, rr) = (col as isize + dc, row as isize + dr);
        if (0..w).contains(&c) && (0..h).contains(&rr) {
            r.pixels[(rr * w + c) as usize] = 255;
        }
    }
}

/// Path of the scale sidecar written next to `image`.
pub fn sidecar_path(image: &Path) -> PathBuf {
    image.with_extension("txt")
}

/// Reads `snapshot`, writes the PGM to `image` and the scale to
/// [`sidecar_path`].
pub fn render(snapshot: &Path, q: Quantity, image: &Path, overlay: bool) -> Result<Raster, RenderError> {
    let snap = read_snapshot(snapshot)?;
    let r = rasterize(&snap, q, overlay);
    r.write_pgm(image)?;
    std::fs::write(sidecar_path(image), r.sidecar_text())?;
    Ok(r)
}
