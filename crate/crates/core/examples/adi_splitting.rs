//! The factored implicit solve differs from the unfactored one by a
//! splitting term of order `dt^2`.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdgl::fields::{ax_layout, ay_layout, link_variables, psi_layout, C64};
use tdgl::grid::GridSpec;
use tdgl::integrators::adi_solve_psi;
use tdgl::oracles::unfactored_psi_solve;

fn main() {
    let g = GridSpec::new(16, 16, 2, 14, 4.0, 4.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ax = ax_layout(&g, 0.0);
    let mut ay = ay_layout(&g, 0.0);
    for v in ax.as_mut_slice().iter_mut().chain(ay.as_mut_slice()) {
        *v = rng.random_range(-2.0..2.0);
    }
    ax.refresh_periodic_rows();
    ay.refresh_periodic_rows();
    let links = link_variables(&ax, &ay, 1.0, &g);
    let mut rhs = psi_layout(&g, C64::new(0.0, 0.0));
    for j in 1..=g.n_y {
        for i in g.n_sx..=g.n_ex {
            rhs.set(i, j, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        }
    }

    let mut prev: Option<f64> = None;
    for dt in [0.4, 0.2, 0.1, 0.05, 0.025] {
        let a = adi_solve_psi(&rhs, &links, dt, &g).unwrap();
        let b = unfactored_psi_solve(&rhs, &links, dt, &g).unwrap();
        let mut err = 0.0f64;
        for j in 1..=g.n_y {
            for i in g.n_sx..=g.n_ex {
                err = err.max((a.get(i, j) - b.get(i, j)).norm());
            }
        }
        match prev {
            Some(e) => println!("dt {dt:<6} error {err:.3e}  ratio {:.3}", e / err),
            None => println!("dt {dt:<6} error {err:.3e}"),
        }
        prev = Some(err);
    }
}
