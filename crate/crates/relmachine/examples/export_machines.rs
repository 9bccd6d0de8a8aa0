//! Regenerates the machine definition files shipped under `machines/`.
//!
//! Usage: `cargo run -p relmachine --example export_machines -- <dir>`

use relmachine::corpus;
use relmachine::machine::file::MachineFile;

fn main() {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "machines".into());
    std::fs::create_dir_all(&dir).expect("create output dir");
    let entries = [
        ("unary_increment", corpus::unary_increment()),
        ("oscillator", corpus::oscillator()),
        ("equality_checker", corpus::equality_checker()),
        ("first_cell_one", corpus::first_cell_one()),
        ("fair_coin", corpus::fair_coin(2)),
        ("scrap_walker", corpus::scrap_walker()),
        (
            "parity_query",
            corpus::query_driver("parity", 4, Some(relmachine::Interval::new(0, 1))),
        ),
    ];
    for (name, spec) in entries {
        let path = format!("{dir}/{name}.json");
        let file = MachineFile::from_spec(&spec, Some(name));
        std::fs::write(&path, file.to_json_pretty() + "\n").expect("write machine file");
        println!("wrote {path}");
    }
}
