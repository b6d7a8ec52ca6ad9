//! Serialize one graph three ways: canonical records, Cypher statements,
//! and GraphML.
//!
//! ```bash
//! cargo run -p hierkg --example export_formats
//! ```

use hierkg::export::{graphml_document, to_cypher, to_records};
use hierkg::graph::assemble;
use hierkg::model::{Entity, PropertyValue, Provenance, Relation, Triple};

fn main() -> hierkg::Result<()> {
    let mut head = Entity::new("multivariable linear regressions")?;
    head.properties.insert(
        "adjustments".to_string(),
        PropertyValue::Many(vec!["maternal education".into(), "maternal mental health".into()]),
    );
    head.properties
        .insert("type".to_string(), PropertyValue::One("statistical method".into()));
    let triples = vec![
        Triple::new(
            head,
            Relation::new("were used to analyze")?,
            Entity::new("relationship between tv exposure and iq score")?,
            Provenance::initial("g0229", "discussion", (10, 12))?,
        )?,
        Triple::new(
            Entity::new("relationship between tv exposure and iq score")?,
            Relation::new("has_component")?,
            Entity::new("tv exposure")?,
            Provenance::split(),
        )?,
    ];
    let graph = assemble(&triples).graph;

    let dir = tempfile::tempdir().expect("temp dir");

    let records_path = dir.path().join("graph.records.jsonl");
    let count = to_records(&graph, &records_path)?;
    println!("records ({count}):");
    print!("{}", std::fs::read_to_string(&records_path).unwrap());

    let cypher_path = dir.path().join("graph.cypher");
    let statements = to_cypher(&graph, &cypher_path)?;
    println!("\ncypher ({statements} statements):");
    print!("{}", std::fs::read_to_string(&cypher_path).unwrap());

    println!("\ngraphml:");
    print!("{}", graphml_document(&graph));
    Ok(())
}
