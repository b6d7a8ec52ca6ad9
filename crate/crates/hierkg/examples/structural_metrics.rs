//! Assemble a small graph by hand and inspect its connectivity: weakly
//! connected components, the giant-component fraction, and the per-stage
//! snapshot report.
//!
//! ```bash
//! cargo run -p hierkg --example structural_metrics
//! ```

use hierkg::graph::{
    assemble, giant_component_fraction, structural_report, weakly_connected_components,
};
use hierkg::model::{Entity, Provenance, Relation, Triple};

fn triple(head: &str, relation: &str, tail: &str, provenance: Provenance) -> Triple {
    Triple::new(
        Entity::new(head).unwrap(),
        Relation::new(relation).unwrap(),
        Entity::new(tail).unwrap(),
        provenance,
    )
    .unwrap()
}

fn main() -> hierkg::Result<()> {
    // Two islands from initial extraction; splitting a compound mention
    // bridges them, abstraction hangs a shared parent concept above both.
    let compound = "exam stress and sleep loss";
    let triples = vec![
        triple("exam stress", "reduces", "test scores", Provenance::initial("p1", "results", (0, 0))?),
        triple("sleep loss", "worsens", "mood", Provenance::initial("p1", "results", (1, 1))?),
        triple(compound, "affects", "attendance", Provenance::initial("p1", "results", (2, 2))?),
        triple(compound, "has_component", "exam stress", Provenance::split()),
        triple(compound, "has_component", "sleep loss", Provenance::split()),
        triple("exam stress", "is_a", "stress", Provenance::abstracted()),
    ];

    let assembled = assemble(&triples);
    let graph = &assembled.graph;
    println!("{} nodes, {} edges", graph.node_count(), graph.edge_count());

    println!("\ncomponents (descending size):");
    for component in weakly_connected_components(graph) {
        let members: Vec<&str> = component.iter().map(String::as_str).collect();
        println!("  [{}] {}", members.len(), members.join(", "));
    }
    println!(
        "giant-component fraction: {:.3}",
        giant_component_fraction(graph)?
    );

    println!("\n{}", structural_report(graph)?.to_table());
    Ok(())
}
