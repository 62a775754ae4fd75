//! Generates a small synthetic corpus and prints one ticket.

use ticket_triage::corpus::default_registry;
use ticket_triage::synthgen::{SignalPlacement, SynthConfig, generate, label_keywords};

fn main() {
    let labels = default_registry();
    let cfg = SynthConfig {
        ticket_count: 50,
        signal_placement: SignalPlacement::SplitTitleDescription,
        noise_token_rate: 0.1,
        seed: 11,
        ..Default::default()
    };
    let tickets = generate(&cfg, &labels).unwrap();
    let t = &tickets[0];
    let gold = t.gold_label.unwrap();
    println!("{} [{}] keywords {:?}", t.ticket_id, labels.name(gold).unwrap(), label_keywords(gold));
    println!("title: {}", t.title);
    for u in &t.updates {
        println!("  T{} {} {}: {}", u.index, u.timestamp, u.author.as_str(), u.description);
    }
    let machine = tickets.iter().filter(|t| t.updates[0].author.as_str() == "machine").count();
    println!("{machine}/{} tickets are machine-written", tickets.len());
}
