//! Staggered computational grid.
//!
//! Index conventions, used verbatim in storage:
//!
//! * `i` runs over x. Vertex `i` sits at `x_i = x_0 + i h_x`. Column `i = 0`
//!   carries the left outer surface (at `x_0 + h_x/2`), column `i = n_x` the
//!   right one (at `x_{n_x} + h_x/2`).
//! * `j` runs over y. One period is `j = 1..=n_y`; rows `0` and `n_y + 1` are
//!   ghost rows aliasing `n_y` and `1`.
//! * The superconductor occupies vertex columns `n_sx..=n_ex`. Its interfaces
//!   with the blanket lie on the x-edges `n_sx - 1` and `n_ex`.
//!
//! Placement of the staggered unknowns:
//!
//! | quantity | location                       | stored columns         |
//! |----------|--------------------------------|------------------------|
//! | `psi`    | vertex `(x_i, y_j)`            | `n_sx - 1 ..= n_ex + 1`|
//! | `A_x`    | x-edge `(x_i + h_x/2, y_j)`    | `0 ..= n_x`            |
//! | `A_y`    | y-edge `(x_i, y_j + h_y/2)`    | `0 ..= n_x + 1`        |
//! | `B`      | cell `(x_i + h_x/2, y_j + h_y/2)` | `0 ..= n_x`         |
//!
//! `psi` columns `n_sx - 1` and `n_ex + 1` are interface ghosts. `A_y`
//! columns `0` and `n_x + 1` are boundary ghosts fixed by the applied field.
//! `A_x` columns `0` and `n_x` lie on the outer surfaces and are not evolved.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("mesh width must be positive, got {0}")]
    NonPositiveWidth(f64),
    #[error("{what} extent {extent} is not a multiple of the mesh width {h}")]
    InconsistentExtent { what: &'static str, extent: f64, h: f64 },
    #[error("blanket must be at least one cell thick, got {0} cells")]
    BlanketTooThin(usize),
    #[error("superconductor must span at least one column")]
    EmptyCore,
    #[error("y period must contain at least 3 rows, got {0}")]
    PeriodTooShort(usize),
    #[error("index ({i}, {j}) outside the ghost-extended grid")]
    OutOfBounds { i: usize, j: usize },
}

/// Grid section of the run configuration. All lengths in units of the
/// coherence length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub domain_x_xi: f64,
    pub domain_y_xi: f64,
    pub blanket_xi: f64,
    pub h_xi: f64,
}

impl GridConfig {
    /// 132 x 192 system, 2 blanket, h = 1/2.
    pub fn benchmark() -> Self {
        Self {
            domain_x_xi: 132.0,
            domain_y_xi: 192.0,
            blanket_xi: 2.0,
            h_xi: 0.5,
        }
    }

    /// Scaled-down benchmark: 34 x 48 system, 2 blanket, h = 1/2.
    pub fn desk() -> Self {
        Self {
            domain_x_xi: 34.0,
            domain_y_xi: 48.0,
            blanket_xi: 2.0,
            h_xi: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Superconductor,
    Blanket,
    Ghost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_x: usize,
    pub n_y: usize,
    pub h_x: f64,
    pub h_y: f64,
    pub n_sx: usize,
    pub n_ex: usize,
    pub x_0: f64,
    pub y_0: f64,
}

fn cell_count(what: &'static str, extent: f64, h: f64) -> Result<usize, GridError> {
    let n = (extent / h).round();
    if n < 0.0 || (n * h - extent).abs() > 1e-12 * extent.abs().max(h) {
        return Err(GridError::InconsistentExtent { what, extent, h });
    }
    Ok(n as usize)
}

/// Builds the grid from extents. Coordinates are shifted so that the left
/// outer surface is at `x = 0` and `y_1 = h_y`.
pub fn build_grid(config: &GridConfig) -> Result<GridSpec, GridError> {
    let h = config.h_xi;
    if !(h > 0.0) || !h.is_finite() {
        return Err(GridError::NonPositiveWidth(h));
    }
    let n_x = cell_count("domain x", config.domain_x_xi, h)?;
    let n_y = cell_count("domain y", config.domain_y_xi, h)?;
    let n_b = cell_count("blanket", config.blanket_xi, h)?;
    GridSpec::new(n_x, n_y, n_b + 1, n_x.saturating_sub(n_b), h, h)
}

impl GridSpec {
    /// Direct construction from index data, validated.
    pub fn new(
        n_x: usize,
        n_y: usize,
        n_sx: usize,
        n_ex: usize,
        h_x: f64,
        h_y: f64,
    ) -> Result<Self, GridError> {
        for h in [h_x, h_y] {
            if !(h > 0.0) || !h.is_finite() {
                return Err(GridError::NonPositiveWidth(h));
            }
        }
        if n_sx < 2 {
            return Err(GridError::BlanketTooThin(n_sx.saturating_sub(1)));
        }
        if n_ex < n_sx {
            return Err(GridError::EmptyCore);
        }
        if n_ex + 1 > n_x {
            return Err(GridError::BlanketTooThin(n_x.saturating_sub(n_ex)));
        }
        if n_y < 3 {
            return Err(GridError::PeriodTooShort(n_y));
        }
        Ok(Self {
            n_x,
            n_y,
            h_x,
            h_y,
            n_sx,
            n_ex,
            x_0: -0.5 * h_x,
            y_0: 0.0,
        })
    }

    /// Number of superconducting vertex columns.
    pub fn n_core(&self) -> usize {
        self.n_ex - self.n_sx + 1
    }

    /// Rows including the two periodic ghosts.
    pub fn n_rows(&self) -> usize {
        self.n_y + 2
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_0 + i as f64 * self.h_x
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_0 + j as f64 * self.h_y
    }

    pub fn period_y(&self) -> f64 {
        self.n_y as f64 * self.h_y
    }

    pub fn left_outer_surface(&self) -> f64 {
        self.x(0) + 0.5 * self.h_x
    }

    pub fn left_interface(&self) -> f64 {
        self.x(self.n_sx - 1) + 0.5 * self.h_x
    }

    pub fn right_interface(&self) -> f64 {
        self.x(self.n_ex) + 0.5 * self.h_x
    }

    pub fn right_outer_surface(&self) -> f64 {
        self.x(self.n_x) + 0.5 * self.h_x
    }

    pub fn superconductor_area(&self) -> f64 {
        (self.n_core() * self.n_y) as f64 * self.h_x * self.h_y
    }

    /// Region of the vector-potential site `(i, j)`.
    pub fn classify(&self, i: usize, j: usize) -> Result<Region, GridError> {
        if i > self.n_x + 1 || j > self.n_y + 1 {
            return Err(GridError::OutOfBounds { i, j });
        }
        if j == 0 || j == self.n_y + 1 || i == 0 || i == self.n_x + 1 {
            return Ok(Region::Ghost);
        }
        if (self.n_sx..=self.n_ex).contains(&i) {
            Ok(Region::Superconductor)
        } else {
            Ok(Region::Blanket)
        }
    }

    /// Maps any row index (including ghosts) onto the period `1..=n_y`.
    pub fn wrap_row(&self, j: usize) -> usize {
        if j == 0 {
            self.n_y
        } else if j == self.n_y + 1 {
            1
        } else {
            j
        }
    }

    /// Minimal-image difference of two y coordinates.
    pub fn periodic_dy(&self, dy: f64) -> f64 {
        let ly = self.period_y();
        dy - ly * (dy / ly).round()
    }
}
