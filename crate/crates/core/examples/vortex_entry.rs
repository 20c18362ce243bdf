//! Vortices entering a small film above the penetration field, with the
//! Delaunay bond statistics of the resulting lattice.

use tdgl::config::RunConfig;
use tdgl::diagnostics::{bond_statistics, detect_vortices};
use tdgl::driver::{NoHooks, Simulation};
use tdgl::grid::GridConfig;
use tdgl::integrators::AlgorithmId;

fn main() {
    let mut c = RunConfig::desk(AlgorithmId::FullyImplicit, 0.5);
    c.grid = GridConfig { domain_x_xi: 16.0, domain_y_xi: 16.0, blanket_xi: 1.0, h_xi: 0.5 };
    c.physics.kappa = 2.0;
    c.physics.h_left = 1.0;
    c.physics.h_right = 1.0;
    c.physics.seed_amplitude = 0.01;
    c.integrator.max_steps = 2000;
    c.diagnostics.sample_every = 100;

    let mut sim = Simulation::new(c).unwrap();
    let summary = sim.run(&mut NoHooks).unwrap();
    for r in &sim.records {
        println!("t {:>7.1}  E {:>10.4}  vortices {}", r.t, r.energy, r.vortex_count);
    }
    println!("status {:?} after {} steps", summary.status, summary.steps);

    let v = detect_vortices(&sim.state, &sim.state.links, &sim.grid);
    for x in &v.vortices {
        println!("  ({:7.3}, {:7.3}) winding {:+}", x.x, x.y, x.winding);
    }
    if let Some(b) = bond_statistics(&v, &sim.grid) {
        println!("{} bonds, mean length {:.3}, mean angle {:.1} deg", b.bonds, b.mean_length, b.mean_angle.to_degrees());
    }
}
