//! Which update becomes the representative one as the length threshold grows.

use ticket_triage::builder::update_frequency_report;
use ticket_triage::corpus::default_registry;
use ticket_triage::synthgen::{SynthConfig, generate};

fn main() {
    let corpus = generate(&SynthConfig { ticket_count: 2000, seed: 1, ..Default::default() }, &default_registry()).unwrap();
    let report = update_frequency_report(&corpus, &[10, 20, 50, 100, 200]);
    print!("{}", report.to_csv());
    for row in &report.rows {
        println!("n={:<3} eligible tickets: {}", row.n, row.eligible);
    }
}
