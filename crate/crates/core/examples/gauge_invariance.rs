//! Observables are unchanged by a gauge transformation, and one step of
//! each algorithm commutes with it.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdgl::diagnostics::energy;
use tdgl::fields::{gauge_transform, magnetic_field, vertex_layout, Params, State};
use tdgl::grid::GridSpec;
use tdgl::integrators::{AlgorithmId, Stepper};

fn main() {
    let g = GridSpec::new(14, 10, 3, 12, 0.5, 0.5).unwrap();
    let p = Params::uniform(&g, 2.0, 1.0, 0.6, 0.05);
    let s = State::meissner_seeded(&g, &p, 5, 0.3);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut chi = vertex_layout(&g, 0.0);
    for v in chi.as_mut_slice() {
        *v = rng.random_range(-3.0..3.0);
    }
    chi.refresh_periodic_rows();
    let t = gauge_transform(&s, &chi, &p, &g);
    println!("energy   {:.15} vs {:.15}", energy(&s, &p, &g), energy(&t, &p, &g));
    println!("B[4,4]   {:.15} vs {:.15}", magnetic_field(&s, &g).get(4, 4), magnetic_field(&t, &g).get(4, 4));

    for alg in AlgorithmId::ALL {
        let (mut a, mut b) = (s.clone(), t.clone());
        Stepper::new(alg).step(&mut a, &p, &g).unwrap();
        Stepper::new(alg).step(&mut b, &p, &g).unwrap();
        let back = gauge_transform(&a, &chi, &p, &g);
        let mut d = 0.0f64;
        for j in 1..=g.n_y {
            for i in g.n_sx..=g.n_ex {
                d = d.max((back.psi.get(i, j) - b.psi.get(i, j)).norm());
            }
        }
        println!("{alg:<4} one-step equivariance defect {d:.2e}");
    }
}
