//! Graph serialization: canonical line-delimited records, Cypher statements
//! for graph-database import, and GraphML.
//!
//! Records round-trip exactly (merged edges unroll to one record per
//! provenance and re-assemble to the same graph). Cypher and GraphML
//! round-trip up to isomorphism: counts and adjacency are preserved, and all
//! string values are escaped so the files load without modification.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{KnowledgeGraph, PropertyValue, Relation, Triple};
use crate::records;

/// Unroll a graph back into triples, one per (edge, provenance) pair, in
/// stored edge order.
pub fn graph_to_triples(graph: &KnowledgeGraph) -> Vec<Triple> {
    let mut triples = Vec::new();
    for edge in graph.edges() {
        let head = graph.entity(&edge.head_key).expect("endpoint exists");
        let tail = graph.entity(&edge.tail_key).expect("endpoint exists");
        for provenance in &edge.provenances {
            triples.push(Triple {
                head: head.clone(),
                relation: Relation {
                    text: edge.relation.clone(),
                },
                tail: tail.clone(),
                provenance: provenance.clone(),
                extra: Default::default(),
            });
        }
    }
    triples
}

/// Write the graph as canonical records, one per (edge, provenance) pair.
/// Returns the record count. Re-importing reproduces an isomorphic graph.
pub fn to_records(graph: &KnowledgeGraph, path: &Path) -> Result<usize> {
    records::write_records_file(path, &graph_to_triples(graph))
}

// ---------------------------------------------------------------------------
// Cypher
// ---------------------------------------------------------------------------

/// Write MERGE statements for nodes and relationships. Returns the statement
/// count. Relationship types come from sanitized relation labels; the
/// original text is always kept as a property, and distinct relation texts
/// that sanitize to the same type are logged, never silently merged (the
/// `text` property keeps them apart in MERGE patterns).
pub fn to_cypher(graph: &KnowledgeGraph, path: &Path) -> Result<usize> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    let mut statements = 0;

    for (key, entity) in graph.nodes() {
        let mut assignments = vec![format!("n.text = {}", cypher_string(&entity.text))];
        for (name, value) in &entity.properties {
            assignments.push(format!(
                "n.{} = {}",
                cypher_identifier(name),
                cypher_property(value)
            ));
        }
        writeln!(
            writer,
            "MERGE (n:Entity {{key: {}}}) SET {};",
            cypher_string(key),
            assignments.join(", ")
        )
        .map_err(|e| Error::io(path, e))?;
        statements += 1;
    }

    let mut types_seen: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for edge in graph.edges() {
        let relation_type = sanitize_relation_type(&edge.relation);
        types_seen
            .entry(relation_type.clone())
            .or_default()
            .insert(edge.relation.clone());
        let provenance_json =
            serde_json::to_string(&edge.provenances).expect("provenance serializes");
        let stages: BTreeSet<&str> = edge
            .provenances
            .iter()
            .map(|p| p.stage.as_str())
            .collect();
        writeln!(
            writer,
            "MATCH (h:Entity {{key: {}}}) MATCH (t:Entity {{key: {}}}) \
             MERGE (h)-[r:{} {{text: {}}}]->(t) SET r.stages = {}, r.provenance = {};",
            cypher_string(&edge.head_key),
            cypher_string(&edge.tail_key),
            relation_type,
            cypher_string(&edge.relation),
            cypher_list(stages.iter().copied()),
            cypher_string(&provenance_json),
        )
        .map_err(|e| Error::io(path, e))?;
        statements += 1;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;

    for (relation_type, texts) in types_seen {
        if texts.len() > 1 {
            log::warn!(
                "relation texts {:?} all sanitize to type {relation_type}; kept apart by their text property",
                texts
            );
        }
    }
    Ok(statements)
}

/// Uppercase the label, map every non-alphanumeric run to one underscore,
/// and trim. Empty results and leading digits get a `REL` prefix so the
/// type stays a legal identifier.
pub fn sanitize_relation_type(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last_underscore = true;
    for ch in text.chars() {
        if ch.is_ascii_alphanumeric() {
            out.extend(ch.to_uppercase());
            last_underscore = false;
        } else if !last_underscore {
            out.push('_');
            last_underscore = true;
        }
    }
    while out.ends_with('_') {
        out.pop();
    }
    if out.is_empty() {
        return "REL".to_string();
    }
    if out.chars().next().is_some_and(|c| c.is_ascii_digit()) {
        return format!("REL_{out}");
    }
    out
}

fn cypher_string(value: &str) -> String {
    let mut out = String::with_capacity(value.len() + 2);
    out.push('\'');
    for ch in value.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            other => out.push(other),
        }
    }
    out.push('\'');
    out
}

fn cypher_list<'a>(values: impl Iterator<Item = &'a str>) -> String {
    let items: Vec<String> = values.map(cypher_string).collect();
    format!("[{}]", items.join(", "))
}

fn cypher_property(value: &PropertyValue) -> String {
    match value {
        PropertyValue::One(v) => cypher_string(v),
        PropertyValue::Many(vs) => cypher_list(vs.iter().map(String::as_str)),
    }
}

/// Backtick-quote property names that are not plain identifiers.
fn cypher_identifier(name: &str) -> String {
    let plain = !name.is_empty()
        && name
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain {
        name.to_string()
    } else {
        format!("`{}`", name.replace('`', "``"))
    }
}

// ---------------------------------------------------------------------------
// GraphML
// ---------------------------------------------------------------------------

/// List-valued properties are joined with this separator, declared on the
/// graph element as `property_list_separator`.
pub const GRAPHML_LIST_SEPARATOR: &str = "|";

/// Write the graph as GraphML with data keys for entity text, every entity
/// property, the relation label, stages, and full provenance JSON. Returns
/// the byte count written.
pub fn to_graphml(graph: &KnowledgeGraph, path: &Path) -> Result<u64> {
    let document = graphml_document(graph);
    std::fs::write(path, &document).map_err(|e| Error::io(path, e))?;
    Ok(document.len() as u64)
}

/// Build the GraphML document in memory.
pub fn graphml_document(graph: &KnowledgeGraph) -> String {
    let property_names: BTreeSet<&String> = graph
        .nodes()
        .flat_map(|(_, entity)| entity.properties.keys())
        .collect();
    let property_key_ids: BTreeMap<&String, String> = property_names
        .iter()
        .enumerate()
        .map(|(i, name)| (*name, format!("np{i}")))
        .collect();

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(
        "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\" \
         xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" \
         xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns \
         http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n",
    );
    out.push_str(
        "  <key id=\"sep\" for=\"graph\" attr.name=\"property_list_separator\" attr.type=\"string\"/>\n",
    );
    out.push_str("  <key id=\"ntext\" for=\"node\" attr.name=\"text\" attr.type=\"string\"/>\n");
    for (name, id) in &property_key_ids {
        out.push_str(&format!(
            "  <key id=\"{id}\" for=\"node\" attr.name=\"{}\" attr.type=\"string\"/>\n",
            xml_escape(name)
        ));
    }
    out.push_str(
        "  <key id=\"erel\" for=\"edge\" attr.name=\"relation\" attr.type=\"string\"/>\n",
    );
    out.push_str("  <key id=\"estages\" for=\"edge\" attr.name=\"stages\" attr.type=\"string\"/>\n");
    out.push_str(
        "  <key id=\"eprov\" for=\"edge\" attr.name=\"provenance\" attr.type=\"string\"/>\n",
    );
    out.push_str("  <graph id=\"G\" edgedefault=\"directed\">\n");
    out.push_str(&format!(
        "    <data key=\"sep\">{}</data>\n",
        xml_escape(GRAPHML_LIST_SEPARATOR)
    ));

    for (key, entity) in graph.nodes() {
        out.push_str(&format!("    <node id=\"{}\">\n", xml_escape(key)));
        out.push_str(&format!(
            "      <data key=\"ntext\">{}</data>\n",
            xml_escape(&entity.text)
        ));
        for (name, value) in &entity.properties {
            let rendered = match value {
                PropertyValue::One(v) => v.clone(),
                PropertyValue::Many(vs) => vs.join(GRAPHML_LIST_SEPARATOR),
            };
            out.push_str(&format!(
                "      <data key=\"{}\">{}</data>\n",
                property_key_ids[name],
                xml_escape(&rendered)
            ));
        }
        out.push_str("    </node>\n");
    }

    for (index, edge) in graph.edges().iter().enumerate() {
        out.push_str(&format!(
            "    <edge id=\"e{index}\" source=\"{}\" target=\"{}\">\n",
            xml_escape(&edge.head_key),
            xml_escape(&edge.tail_key)
        ));
        out.push_str(&format!(
            "      <data key=\"erel\">{}</data>\n",
            xml_escape(&edge.relation)
        ));
        let stages: BTreeSet<&str> = edge.provenances.iter().map(|p| p.stage.as_str()).collect();
        out.push_str(&format!(
            "      <data key=\"estages\">{}</data>\n",
            xml_escape(&stages.into_iter().collect::<Vec<_>>().join(GRAPHML_LIST_SEPARATOR))
        ));
        let provenance_json =
            serde_json::to_string(&edge.provenances).expect("provenance serializes");
        out.push_str(&format!(
            "      <data key=\"eprov\">{}</data>\n",
            xml_escape(&provenance_json)
        ));
        out.push_str("    </edge>\n");
    }

    out.push_str("  </graph>\n</graphml>\n");
    out
}

fn xml_escape(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for ch in value.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            other => out.push(other),
        }
    }
    out
}
