//! Updating the vector potential every `m` steps with Algorithm IV: the
//! cost per step falls while the trajectory stays close.

use tdgl::config::RunConfig;
use tdgl::driver::{NoHooks, Simulation};
use tdgl::grid::GridConfig;
use tdgl::integrators::AlgorithmId;

fn main() {
    for m in [1, 2, 5, 10] {
        let mut c = RunConfig::desk(AlgorithmId::FullyImplicit, 0.5);
        c.grid = GridConfig { domain_x_xi: 16.0, domain_y_xi: 16.0, blanket_xi: 1.0, h_xi: 0.5 };
        c.physics.kappa = 2.0;
        c.physics.h_left = 1.0;
        c.physics.h_right = 1.0;
        c.physics.seed_amplitude = 0.01;
        c.integrator.m = m;
        c.integrator.max_steps = 1000;
        c.diagnostics.sample_every = 1000;
        let mut sim = Simulation::new(c).unwrap();
        let s = sim.run(&mut NoHooks).unwrap();
        println!(
            "m {m:>2}: C {:.3e} s/step, psi factorizations {}, vortices {}, E {:.6}",
            s.seconds_per_step,
            sim.stepper.psi_factorizations(),
            s.vortex_count,
            s.energy
        );
    }
}
