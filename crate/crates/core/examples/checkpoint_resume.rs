//! Interrupting a run and resuming it from its checkpoint reproduces the
//! uninterrupted run bit for bit.

use tdgl::config::{DataFormat, RunConfig};
use tdgl::driver::{files, resume, run};
use tdgl::grid::GridConfig;
use tdgl::integrators::AlgorithmId;

fn main() {
    let dir = std::env::temp_dir().join("tdgl_checkpoint_example");
    let _ = std::fs::remove_dir_all(&dir);

    let mut c = RunConfig::desk(AlgorithmId::Implicit, 0.2);
    c.grid = GridConfig { domain_x_xi: 12.0, domain_y_xi: 8.0, blanket_xi: 1.0, h_xi: 0.5 };
    c.physics.h_left = 1.0;
    c.physics.h_right = 1.0;
    c.physics.seed_amplitude = 0.05;
    c.integrator.m = 3;
    c.integrator.max_steps = 300;
    c.diagnostics.sample_every = 25;
    c.io.checkpoint_every = 100;
    c.io.format = DataFormat::Binary;

    let mut whole = c.clone();
    whole.io.out_dir = dir.join("whole");
    run(whole).unwrap();

    let mut part = c.clone();
    part.io.out_dir = dir.join("split");
    part.integrator.max_steps = 200;
    run(part.clone()).unwrap();
    part.integrator.max_steps = 300;
    let ckpt = part.io.out_dir.join(files::CHECKPOINT);
    resume(part, &ckpt).unwrap();

    for f in [files::DIAGNOSTICS, files::FINAL] {
        let a = std::fs::read(dir.join("whole").join(f)).unwrap();
        let b = std::fs::read(dir.join("split").join(f)).unwrap();
        println!("{f}: {}", if a == b { "identical" } else { "DIFFERENT" });
    }
}
