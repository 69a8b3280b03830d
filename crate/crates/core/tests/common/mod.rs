//! Shared fixtures, generators, and independent oracles for the
//! integration suites. The oracles here are deliberately naive (raw
//! edge-list fixpoints, nested-loop joins) and never call the code paths
//! they check.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};
use std::path::PathBuf;
use std::sync::Arc;

use rand::prelude::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use termlink::container::{
    CompoundColumn, ContainerFile, ContainerObject, FieldValue, ScalarValue, WrappedValue,
};
use termlink::expand::{NodeInfo, OntologyEdge, OntologyGraph};
use termlink::herd::{FlatRow, HerdStore};
use termlink::termset::{load_termset, parse_termset_schema, TermSet};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture_path(name: &str) -> PathBuf {
    fixture_dir().join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn species_termset() -> Arc<TermSet> {
    let text = std::fs::read_to_string(fixture_path("species.yaml")).unwrap();
    Arc::new(load_termset(&parse_termset_schema(&text).unwrap(), "Species").unwrap())
}

/// Small in-memory term set for randomized container fixtures.
pub fn greek_termset() -> Arc<TermSet> {
    let text = "id: termset/test_greek\nname: Greek\nprefixes:\n  EX: https://example.org/greek/\nenums:\n  Greek:\n    permissible_values:\n      alpha:\n        meaning: EX:alpha\n      beta:\n        meaning: EX:beta\n      gamma:\n        meaning: EX:gamma\n      delta:\n        meaning: EX:delta\n";
    Arc::new(load_termset(&parse_termset_schema(text).unwrap(), "Greek").unwrap())
}

pub fn color_termset() -> Arc<TermSet> {
    let text = "id: termset/test_colors\nname: Colors\nprefixes:\n  COLOR: https://example.org/colors/\nenums:\n  Colors:\n    permissible_values:\n      red:\n        meaning: COLOR:red\n      green:\n        meaning: COLOR:green\n      blue:\n        meaning: COLOR:blue\n";
    Arc::new(load_termset(&parse_termset_schema(text).unwrap(), "Colors").unwrap())
}

// --- random directed graphs -------------------------------------------------

/// Untyped raw graph: node ids plus (child, relationship, parent) edges.
#[derive(Debug, Clone)]
pub struct RawGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String, String)>,
}

pub const RELATIONSHIPS: [&str; 3] = ["sub", "part", "develops_from"];

/// Random DAG: edges only point from later nodes (children) to earlier
/// nodes (parents), so parent-to-child traversal cannot cycle.
pub fn random_dag(rng: &mut ChaCha8Rng, max_nodes: usize) -> RawGraph {
    let n = rng.random_range(1..=max_nodes);
    let nodes: Vec<String> = (0..n).map(|i| format!("N{i:03}")).collect();
    let mut edges = Vec::new();
    for child in 1..n {
        let parent_count = rng.random_range(0..=3.min(child));
        for _ in 0..parent_count {
            let parent = rng.random_range(0..child);
            let rel = *RELATIONSHIPS.choose(rng).unwrap();
            edges.push((nodes[child].clone(), rel.to_string(), nodes[parent].clone()));
        }
    }
    RawGraph { nodes, edges }
}

/// Random digraph that may contain cycles.
pub fn random_digraph(rng: &mut ChaCha8Rng, max_nodes: usize) -> RawGraph {
    let n = rng.random_range(1..=max_nodes);
    let nodes: Vec<String> = (0..n).map(|i| format!("N{i:03}")).collect();
    let edge_count = rng.random_range(0..=(n * 2));
    let mut edges = Vec::new();
    for _ in 0..edge_count {
        let child = rng.random_range(0..n);
        let parent = rng.random_range(0..n);
        let rel = *RELATIONSHIPS.choose(rng).unwrap();
        edges.push((nodes[child].clone(), rel.to_string(), nodes[parent].clone()));
    }
    RawGraph { nodes, edges }
}

pub fn to_ontology_graph(raw: &RawGraph) -> OntologyGraph {
    OntologyGraph::build(
        raw.nodes.iter().map(|n| (n.clone(), NodeInfo::default())),
        raw.edges
            .iter()
            .map(|(c, r, p)| OntologyEdge {
                child: c.clone(),
                relationship: r.clone(),
                parent: p.clone(),
            })
            .collect(),
    )
    .unwrap()
}

/// Brute-force reachability over the raw edge list: repeatedly scan every
/// edge from the visited frontier, parent to child, keeping only listed
/// relationship types.
pub fn reachability_oracle(
    raw: &RawGraph,
    sources: &[String],
    relationships: &[String],
    include_self: bool,
) -> BTreeSet<String> {
    let allowed: HashSet<&str> = relationships.iter().map(String::as_str).collect();
    let mut reachable: BTreeSet<String> = BTreeSet::new();
    let mut visited: HashSet<String> = sources.iter().cloned().collect();
    let mut stack: Vec<String> = sources.to_vec();
    while let Some(current) = stack.pop() {
        for (child, rel, parent) in &raw.edges {
            if parent == &current && allowed.contains(rel.as_str()) {
                reachable.insert(child.clone());
                if visited.insert(child.clone()) {
                    stack.push(child.clone());
                }
            }
        }
    }
    if include_self {
        reachable.extend(sources.iter().cloned());
    }
    reachable
}

// --- random stores ----------------------------------------------------------

/// One recorded insertion, so sequences can be replayed.
#[derive(Debug, Clone)]
pub struct RefCall {
    pub file_id: String,
    pub object_id: String,
    pub object_type: String,
    pub relative_path: String,
    pub field: String,
    pub key: String,
    pub entity_id: String,
    pub entity_uri: String,
}

pub fn random_ref_calls(rng: &mut ChaCha8Rng, max_calls: usize) -> Vec<RefCall> {
    let types = ["Subject", "Device", "ElectrodeGroup", "TimeSeries"];
    let attributes = ["", "species", "location", "manufacturer", "unit"];
    let fields = ["", "component"];
    let count = rng.random_range(0..=max_calls);
    (0..count)
        .map(|_| {
            let entity = rng.random_range(0..6);
            RefCall {
                file_id: format!("F{}", rng.random_range(0..4)),
                object_id: format!("O{}", rng.random_range(0..7)),
                object_type: types.choose(rng).unwrap().to_string(),
                relative_path: attributes.choose(rng).unwrap().to_string(),
                field: fields.choose(rng).unwrap().to_string(),
                key: format!("key{}", rng.random_range(0..9)),
                entity_id: format!("EX:e{entity}"),
                // URI is a function of the id, so sequences never conflict
                entity_uri: format!("https://example.org/entities/e{entity}"),
            }
        })
        .collect()
}

pub fn apply_calls(store: &mut HerdStore, calls: &[RefCall]) {
    for call in calls {
        store
            .add_ref_raw(
                &call.file_id,
                &call.object_id,
                &call.object_type,
                &call.relative_path,
                &call.field,
                &call.key,
                &call.entity_id,
                &call.entity_uri,
            )
            .unwrap();
    }
}

pub fn random_store(rng: &mut ChaCha8Rng, max_calls: usize) -> HerdStore {
    let mut store = HerdStore::new();
    apply_calls(&mut store, &random_ref_calls(rng, max_calls));
    store
}

/// Check every `get_*` query against the corresponding flat-view filter,
/// including lookups of absent keys, entities, and objects.
pub fn assert_store_queries_match_flat_view(store: &HerdStore) {
    let flat = store.to_flat_table();

    let object_tuple = |o: &termlink::herd::ObjectRecord| {
        (
            store.files()[o.files_idx].file_object_id.clone(),
            o.object_id.clone(),
            o.object_type.clone(),
            o.relative_path.clone(),
            o.field.clone(),
        )
    };
    let row_object_tuple = |r: &FlatRow| {
        (
            r.file_object_id.clone(),
            r.object_id.clone(),
            r.object_type.clone(),
            r.relative_path.clone(),
            r.field.clone(),
        )
    };

    let mut keys: Vec<String> = store.keys().iter().map(|k| k.key.clone()).collect();
    keys.push("no-such-key".to_string());
    for key in keys {
        let got: BTreeSet<_> =
            store.get_objects_for_key(&key).into_iter().map(object_tuple).collect();
        let expected: BTreeSet<_> =
            flat.rows.iter().filter(|r| r.key == key).map(row_object_tuple).collect();
        assert_eq!(got, expected, "objects for key {key:?}");

        let got: BTreeSet<_> = store
            .get_entities_for_key(&key)
            .into_iter()
            .map(|e| (e.entity_id.clone(), e.entity_uri.clone()))
            .collect();
        let expected: BTreeSet<_> = flat
            .rows
            .iter()
            .filter(|r| r.key == key)
            .map(|r| (r.entity_id.clone(), r.entity_uri.clone()))
            .collect();
        assert_eq!(got, expected, "entities for key {key:?}");
    }

    let mut entity_ids: Vec<String> =
        store.entities().iter().map(|e| e.entity_id.clone()).collect();
    entity_ids.push("EX:absent".to_string());
    for entity_id in entity_ids {
        let got: BTreeSet<_> =
            store.get_objects_for_entity(&entity_id).into_iter().map(object_tuple).collect();
        let expected: BTreeSet<_> = flat
            .rows
            .iter()
            .filter(|r| r.entity_id == entity_id)
            .map(row_object_tuple)
            .collect();
        assert_eq!(got, expected, "objects for entity {entity_id:?}");

        let got: BTreeSet<_> = store
            .get_keys_for_entity(&entity_id)
            .into_iter()
            .map(|k| k.key.clone())
            .collect();
        let expected: BTreeSet<_> = flat
            .rows
            .iter()
            .filter(|r| r.entity_id == entity_id)
            .map(|r| r.key.clone())
            .collect();
        assert_eq!(got, expected, "keys for entity {entity_id:?}");
    }

    let mut object_ids: Vec<String> =
        store.objects().iter().map(|o| o.object_id.clone()).collect();
    object_ids.push("no-such-object".to_string());
    object_ids.dedup();
    for object_id in object_ids {
        let got: BTreeSet<_> = store
            .get_keys_for_object(&object_id)
            .into_iter()
            .map(|k| k.key.clone())
            .collect();
        let expected: BTreeSet<_> = flat
            .rows
            .iter()
            .filter(|r| r.object_id == object_id)
            .map(|r| r.key.clone())
            .collect();
        assert_eq!(got, expected, "keys for object {object_id:?}");
    }
}

/// Nested-loop join over the raw link tables; the reference answer for
/// the denormalized view.
pub fn join_oracle(store: &HerdStore) -> Vec<FlatRow> {
    let mut rows = Vec::new();
    for ok in store.object_keys() {
        for ek in store.entity_keys() {
            if ok.keys_idx == ek.keys_idx {
                let object = &store.objects()[ok.objects_idx];
                let file = &store.files()[object.files_idx];
                let key = &store.keys()[ok.keys_idx];
                let entity = &store.entities()[ek.entities_idx];
                rows.push(FlatRow {
                    file_object_id: file.file_object_id.clone(),
                    object_id: object.object_id.clone(),
                    object_type: object.object_type.clone(),
                    relative_path: object.relative_path.clone(),
                    field: object.field.clone(),
                    key: key.key.clone(),
                    entity_id: entity.entity_id.clone(),
                    entity_uri: entity.entity_uri.clone(),
                });
            }
        }
    }
    rows
}

// --- random wrapped container files ------------------------------------------

/// Ground truth for one wrapped field inserted by the tree builder.
#[derive(Debug, Clone)]
pub struct PlantedWrapper {
    pub object_id: String,
    pub relative_path: String,
    pub field: String,
    pub elements: Vec<String>,
    pub termset: Arc<TermSet>,
}

fn random_keys(rng: &mut ChaCha8Rng, ts: &TermSet, min: usize, max: usize) -> Vec<String> {
    let pool: Vec<&str> = ts.terms().map(|t| t.key.as_str()).collect();
    let count = rng.random_range(min..=max);
    (0..count).map(|_| pool.choose(rng).unwrap().to_string()).collect()
}

/// Build a random object tree (depth <= 4) with wrapped scalar fields,
/// wrapped list fields, and occasional wrapped compound columns, and
/// report every planted wrapper in document order.
pub fn random_wrapped_file(rng: &mut ChaCha8Rng, label: &str) -> (ContainerFile, Vec<PlantedWrapper>) {
    let termsets = [greek_termset(), color_termset()];
    let mut file = ContainerFile::with_id(format!("file-{label}"), &format!("session-{label}"));
    let mut planted = Vec::new();
    let mut counter = 0usize;
    let root_count = rng.random_range(1..=3);
    for _ in 0..root_count {
        let obj = random_object(rng, &termsets, &mut planted, &mut counter, 0, label);
        file.objects.push(obj);
    }
    (file, planted)
}

fn random_object(
    rng: &mut ChaCha8Rng,
    termsets: &[Arc<TermSet>; 2],
    planted: &mut Vec<PlantedWrapper>,
    counter: &mut usize,
    depth: usize,
    label: &str,
) -> ContainerObject {
    let types = ["Subject", "Device", "ElectrodeGroup", "TimeSeries", "Epochs"];
    let id = format!("obj-{label}-{}", *counter);
    *counter += 1;
    let mut obj = ContainerObject::with_id(id.clone(), types.choose(rng).unwrap(), "core");

    for plain in 0..rng.random_range(0..=2) {
        obj.set_field(
            &format!("plain{plain}"),
            FieldValue::Scalar(ScalarValue::from(rng.random_range(0..100) as i64)),
        );
    }

    for wrapped_idx in 0..rng.random_range(0..=2usize) {
        let ts = termsets.choose(rng).unwrap();
        let name = format!("annotated{wrapped_idx}");
        let (value, elements) = if rng.random_bool(0.4) {
            let keys = random_keys(rng, ts, 1, 1);
            (
                WrappedValue::wrap(keys[0].as_str(), Arc::clone(ts)).unwrap(),
                keys,
            )
        } else {
            let keys = random_keys(rng, ts, 1, 4);
            (WrappedValue::wrap(keys.clone(), Arc::clone(ts)).unwrap(), keys)
        };
        planted.push(PlantedWrapper {
            object_id: id.clone(),
            relative_path: name.clone(),
            field: String::new(),
            elements,
            termset: Arc::clone(ts),
        });
        obj.set_field(&name, FieldValue::Wrapped(value));
    }

    if rng.random_bool(0.25) {
        let ts = termsets.choose(rng).unwrap();
        let keys = random_keys(rng, ts, 1, 3);
        let mut columns = indexmap::IndexMap::new();
        columns.insert(
            "x".to_string(),
            CompoundColumn::Plain(
                (0..keys.len()).map(|i| ScalarValue::from(i as i64)).collect(),
            ),
        );
        columns.insert(
            "labels".to_string(),
            CompoundColumn::Wrapped(WrappedValue::wrap(keys.clone(), Arc::clone(ts)).unwrap()),
        );
        planted.push(PlantedWrapper {
            object_id: id.clone(),
            relative_path: "table".to_string(),
            field: "labels".to_string(),
            elements: keys,
            termset: Arc::clone(ts),
        });
        obj.set_field("table", FieldValue::compound(columns).unwrap());
    }

    if depth < 3 {
        for _ in 0..rng.random_range(0..=2) {
            let child = random_object(rng, termsets, planted, counter, depth + 1, label);
            obj.children.push(child);
        }
    }
    obj
}
