//! Writes a snapshot of a vortex state and renders `|psi|`, the phase and
//! `B` as PGM images.
//!
//! `cargo run --release --example render_fields -- <out-dir>`

use std::path::PathBuf;

use tdgl::config::{DataFormat, RunConfig};
use tdgl::driver::{NoHooks, Simulation};
use tdgl::grid::GridConfig;
use tdgl::integrators::AlgorithmId;
use tdgl::io::write_snapshot;
use tdgl::render::{render, sidecar_path, Quantity};

fn main() {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("tdgl_render"));
    std::fs::create_dir_all(&out).unwrap();

    let mut c = RunConfig::desk(AlgorithmId::FullyImplicit, 0.5);
    c.grid = GridConfig { domain_x_xi: 16.0, domain_y_xi: 16.0, blanket_xi: 1.0, h_xi: 0.5 };
    c.physics.kappa = 2.0;
    c.physics.h_left = 1.0;
    c.physics.h_right = 1.0;
    c.physics.seed_amplitude = 0.01;
    c.integrator.max_steps = 1500;
    let mut sim = Simulation::new(c).unwrap();
    sim.run(&mut NoHooks).unwrap();

    let snap = out.join("state.snap");
    write_snapshot(&snap, &sim.state, &sim.params, &sim.grid, DataFormat::Binary).unwrap();
    for q in [Quantity::Modulus, Quantity::Phase, Quantity::Field] {
        let img = out.join(format!("{q}.pgm"));
        let r = render(&snap, q, &img, q == Quantity::Modulus).unwrap();
        println!("{} ({}x{}), range [{:.4}, {:.4}], scale in {}", img.display(), r.width, r.height, r.min, r.max, sidecar_path(&img).display());
    }
}
