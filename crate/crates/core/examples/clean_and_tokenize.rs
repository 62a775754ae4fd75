//! Cleans a raw ticket update and shows what bag models see.

use ticket_triage::preprocess::{clean, is_short, tokenize_for_bag};

fn main() {
    let raw = "Hi team,<br>Node <b>BN4123</b> keeps hitting a PCIe/FPGA error.\n\
               ```\nGet-NodeHealth -Id 7\n```\nSee https://aka.ms/icm/1234 for details.";
    let cleaned = clean(raw);
    println!("cleaned: {}", cleaned.text);
    println!("removed: {}", serde_json::to_string(&cleaned).unwrap());
    println!("tokens:  {:?}", tokenize_for_bag(&cleaned).tokens);
    for n in [10, 50, 100] {
        println!("short at n={n}: {}", is_short(&cleaned, n));
    }
}
