//! Bisects the largest stable time step of each algorithm on a small
//! system. Short probes make this a rough, fast version of the full scan.

use tdgl::config::RunConfig;
use tdgl::driver::stability_scan;
use tdgl::grid::GridConfig;
use tdgl::integrators::AlgorithmId;

fn main() {
    let mut c = RunConfig::desk(AlgorithmId::Explicit, 0.01);
    c.grid = GridConfig { domain_x_xi: 10.0, domain_y_xi: 8.0, blanket_xi: 1.0, h_xi: 0.5 };
    let steps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    for row in stability_scan(&c, &AlgorithmId::ALL, 1e-3, 100.0, steps) {
        match (row.limit, row.unbounded, &row.error) {
            (_, _, Some(e)) => println!("{:<4} error: {e}", row.algorithm),
            (Some(dt), true, _) => println!("{:<4} stable up to the bound {dt}", row.algorithm),
            (Some(dt), false, _) => println!("{:<4} max dt {dt}", row.algorithm),
            (None, _, _) => unreachable!(),
        }
    }
}
