//! Builds the human, machine and mixture datasets and writes one split to disk.

use ticket_triage::builder::{DatasetKind, SelectionConfig, build_dataset, overlapping_ids, write_split};
use ticket_triage::corpus::default_registry;
use ticket_triage::features::TemplateId;
use ticket_triage::synthgen::{SynthConfig, generate};

fn main() {
    let labels = default_registry();
    let corpus = generate(&SynthConfig { ticket_count: 1000, seed: 3, ..Default::default() }, &labels).unwrap();
    for kind in [DatasetKind::DHuman, DatasetKind::DMachine, DatasetKind::DMixture] {
        let cfg = SelectionConfig { dataset_kind: kind, template: TemplateId::TitleDesc, seed: 3, ..Default::default() };
        let split = build_dataset(&corpus, &cfg, &labels).unwrap();
        println!(
            "{kind:?}: train {} val {} test {} (dropped short {}, other author {}), overlaps {}",
            split.train.len(),
            split.val.len(),
            split.test.len(),
            split.summary.dropped_short,
            split.summary.dropped_author,
            overlapping_ids(&split).len()
        );
        if kind == DatasetKind::DMixture {
            let dir = std::env::temp_dir().join("triage-split-example");
            write_split(&dir, &split, &labels).unwrap();
            println!("wrote {}", dir.display());
            println!("first example: {}", split.train[0].input_text);
        }
    }
}
