//! Property tests for the invariants that hold over arbitrary inputs:
//! normalization idempotence, property-merge algebra, record round-trips,
//! lossless batching, and component-partition sanity.

use std::collections::BTreeSet;

use proptest::prelude::*;

use hierkg::graph::{assemble, giant_component_fraction, weakly_connected_components};
use hierkg::ingest::{make_batches, Document, Section};
use hierkg::model::{
    merge_properties, normalize, Entity, PropertyMap, PropertyValue, Provenance, Relation, Stage,
    Triple,
};
use hierkg::records::{read_records, write_records};

fn word() -> impl Strategy<Value = String> {
    "[a-z]{1,8}"
}

fn phrase() -> impl Strategy<Value = String> {
    prop::collection::vec(word(), 1..4).prop_map(|words| words.join(" "))
}

fn property_value() -> impl Strategy<Value = PropertyValue> {
    prop_oneof![
        word().prop_map(PropertyValue::One),
        prop::collection::vec(word(), 1..4).prop_map(PropertyValue::Many),
    ]
}

fn property_map() -> impl Strategy<Value = PropertyMap> {
    prop::collection::btree_map(word(), property_value(), 0..4)
        .prop_map(|map| map.into_iter().collect())
}

fn provenance() -> impl Strategy<Value = Provenance> {
    prop_oneof![
        (word(), word(), 0usize..50, 0usize..3).prop_map(|(paper, section, start, span)| {
            Provenance::initial(paper, section, (start, start + span)).unwrap()
        }),
        Just(Provenance::split()),
        Just(Provenance::abstracted()),
    ]
}

fn triple() -> impl Strategy<Value = Triple> {
    (phrase(), property_map(), word(), phrase(), property_map(), provenance()).prop_map(
        |(head, head_props, relation, tail, tail_props, provenance)| {
            Triple::new(
                Entity::with_properties(head, head_props).unwrap(),
                Relation::new(relation).unwrap(),
                Entity::with_properties(tail, tail_props).unwrap(),
                provenance,
            )
            .unwrap()
        },
    )
}

fn value_set(value: &PropertyValue) -> BTreeSet<String> {
    value.values().into_iter().map(str::to_string).collect()
}

proptest! {
    #[test]
    fn normalize_is_idempotent(text in ".{0,60}") {
        let once = normalize(&text);
        prop_assert_eq!(normalize(&once), once);
    }

    #[test]
    fn normalize_output_shape(text in ".{0,60}") {
        let out = normalize(&text);
        prop_assert!(!out.starts_with(' ') && !out.ends_with(' '));
        prop_assert!(!out.contains("  "));
        prop_assert!(!out.ends_with(['.', ',', ';', ':']));
        prop_assert!(!out.chars().any(|c| c.is_ascii_uppercase()));
    }

    #[test]
    fn merge_is_commutative_up_to_value_order(a in property_map(), b in property_map()) {
        let ab = merge_properties(&a, &b);
        let ba = merge_properties(&b, &a);
        let keys_ab: BTreeSet<&String> = ab.keys().collect();
        let keys_ba: BTreeSet<&String> = ba.keys().collect();
        prop_assert_eq!(keys_ab, keys_ba);
        for (key, value) in &ab {
            prop_assert_eq!(value_set(value), value_set(&ba[key]), "key {}", key);
        }
    }

    #[test]
    fn merge_is_associative_on_key_sets(
        a in property_map(),
        b in property_map(),
        c in property_map(),
    ) {
        let left = merge_properties(&merge_properties(&a, &b), &c);
        let right = merge_properties(&a, &merge_properties(&b, &c));
        let keys_left: BTreeSet<&String> = left.keys().collect();
        let keys_right: BTreeSet<&String> = right.keys().collect();
        prop_assert_eq!(keys_left, keys_right);
        for (key, value) in &left {
            prop_assert_eq!(value_set(value), value_set(&right[key]), "key {}", key);
        }
    }

    #[test]
    fn merge_never_drops_values(a in property_map(), b in property_map()) {
        let merged = merge_properties(&a, &b);
        for source in [&a, &b] {
            for (key, value) in source {
                let merged_values = value_set(&merged[key]);
                for v in value.values() {
                    prop_assert!(merged_values.contains(v));
                }
            }
        }
    }

    #[test]
    fn records_round_trip(triples in prop::collection::vec(triple(), 0..8)) {
        let mut buffer = Vec::new();
        let written = write_records(&mut buffer, &triples).unwrap();
        prop_assert_eq!(written, triples.len());
        let back = read_records(buffer.as_slice(), std::path::Path::new("prop")).unwrap();
        prop_assert_eq!(back, triples);
    }

    #[test]
    fn batching_is_lossless_and_section_pure(
        layout in prop::collection::vec((word(), 1usize..12), 1..5),
        batch_size in 1usize..5,
        context_size in 0usize..5,
    ) {
        // Make section names unique by suffixing their index.
        let mut counter = 0;
        let doc = Document {
            paper_id: "p".to_string(),
            sections: layout
                .iter()
                .enumerate()
                .map(|(i, (name, len))| Section {
                    name: format!("{name}-{i}"),
                    sentences: (0..*len)
                        .map(|_| {
                            counter += 1;
                            format!("Sentence {counter}.")
                        })
                        .collect(),
                })
                .collect(),
        };
        let batches = make_batches(&doc, batch_size, context_size);

        let rebuilt: Vec<&String> = batches.iter().flat_map(|b| &b.target_sentences).collect();
        let original: Vec<&String> = doc.sections.iter().flat_map(|s| &s.sentences).collect();
        prop_assert_eq!(rebuilt, original);

        for batch in &batches {
            prop_assert!(batch.target_sentences.len() <= batch_size);
            prop_assert!(batch.context_sentences.len() <= context_size);
            let section = doc
                .sections
                .iter()
                .find(|s| s.name == batch.section)
                .expect("batch names a real section");
            // Context sentences immediately precede the targets within the
            // same section.
            let first_target = section
                .sentences
                .iter()
                .position(|s| s == &batch.target_sentences[0])
                .expect("targets come from the named section");
            let expected_context: Vec<&String> = section.sentences
                [first_target.saturating_sub(context_size)..first_target]
                .iter()
                .collect();
            let actual_context: Vec<&String> = batch.context_sentences.iter().collect();
            prop_assert_eq!(actual_context, expected_context);
        }
    }

    #[test]
    fn component_sizes_sum_to_node_count(
        edges in prop::collection::vec((0usize..30, 0usize..30), 1..60),
    ) {
        let triples: Vec<Triple> = edges
            .iter()
            .map(|(a, b)| {
                Triple::new(
                    Entity::new(format!("v{a}")).unwrap(),
                    Relation::new("r").unwrap(),
                    Entity::new(format!("v{b}")).unwrap(),
                    Provenance::split(),
                )
                .unwrap()
            })
            .collect();
        let graph = assemble(&triples).graph;
        let components = weakly_connected_components(&graph);
        let total: usize = components.iter().map(BTreeSet::len).sum();
        prop_assert_eq!(total, graph.node_count());

        let fraction = giant_component_fraction(&graph).unwrap();
        prop_assert!(fraction > 0.0 && fraction <= 1.0);
        prop_assert_eq!(fraction == 1.0, components.len() == 1);
    }

    #[test]
    fn assembled_provenance_counts_are_preserved(triples in prop::collection::vec(triple(), 0..10)) {
        let graph = assemble(&triples).graph;
        let provenance_total: usize = graph.edges().iter().map(|e| e.provenances.len()).sum();
        prop_assert_eq!(provenance_total, triples.len());
        for stage in Stage::ALL {
            let in_graph: usize = graph
                .edges()
                .iter()
                .flat_map(|e| &e.provenances)
                .filter(|p| p.stage == stage)
                .count();
            let in_input = triples.iter().filter(|t| t.provenance.stage == stage).count();
            prop_assert_eq!(in_graph, in_input);
        }
    }
}
