//! Batch SMT solver: reads one SMT-LIB v2 `QF_BV` script from standard
//! input, prints `sat`/`unsat`/`unknown` and any `get-value` answer.

use std::io::Read;

fn main() {
    let mut text = String::new();
    if let Err(e) = std::io::stdin().read_to_string(&mut text) {
        eprintln!("error: cannot read script: {e}");
        std::process::exit(2);
    }
    match smtbv::run_script(&text) {
        Ok(out) => print!("{out}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
