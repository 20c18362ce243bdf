//! A uniform condensate with no field relaxes along the exact logistic flow
//! of `|psi|^2`. Algorithm IV reproduces it to rounding; the others carry a
//! first-order time error.

use tdgl::diagnostics::reduced_ode_oracle;
use tdgl::fields::{Params, State, C64};
use tdgl::grid::GridSpec;
use tdgl::integrators::{AlgorithmId, Stepper};

fn main() {
    let g = GridSpec::new(10, 8, 2, 8, 0.5, 0.5).unwrap();
    let psi0 = 0.5;
    let steps = 100;
    println!("{:<4} {:>6} {:>14}", "alg", "dt", "error");
    for alg in AlgorithmId::ALL {
        for dt in [0.02, 0.01] {
            let p = Params::uniform(&g, 4.0, 1.0, 0.0, dt);
            let mut s = State::uniform(&g, &p, C64::new(psi0, 0.0));
            let mut stepper = Stepper::new(alg);
            for _ in 0..steps {
                stepper.step(&mut s, &p, &g).unwrap();
            }
            let (x, _) = reduced_ode_oracle(psi0 * psi0, 0.0, 1.0, 0.0, steps as f64 * dt);
            let err = (s.psi.get(4, 3).norm() - x.sqrt()).abs();
            println!("{:<4} {:>6} {:>14.3e}", alg, dt, err);
        }
    }
}
