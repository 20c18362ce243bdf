//! The oracle suite behind `tdgl verify`.

use tdgl::verify::{run_checks, VerifyOptions};

fn main() {
    let report = run_checks(&VerifyOptions::default());
    print!("{report}");
    if !report.all_passed() {
        std::process::exit(1);
    }
}
