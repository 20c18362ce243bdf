//! Loads a TOML configuration and runs it, writing every artifact.
//!
//! `cargo run --release --example desk_config -- configs/desk.toml 2000`

use std::path::PathBuf;

use tdgl::config::RunConfig;
use tdgl::driver::run;

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args.next().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("configs/desk.toml"));
    let mut c = RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    if let Some(n) = args.next() {
        c.integrator.max_steps = n.parse().expect("step count");
    }
    c.io.out_dir = std::env::temp_dir().join("tdgl_desk");
    let s = run(c).unwrap();
    println!("{}", serde_json::to_string_pretty(&s).unwrap());
}
