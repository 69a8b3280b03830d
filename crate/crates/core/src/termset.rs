//! Term set schemas and resolved term sets.
//!
//! A term set schema is a YAML document in the LinkML-enumeration subset:
//! top-level `id`, `name`, `version`, `prefixes`, `imports`, `default_range`
//! and `enums`, where each enumeration carries `permissible_values` and/or a
//! dynamic `reachable_from` block. A [`TermSet`] is one enumeration of such a
//! schema with every permissible value resolved to an entity id and URI.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curie::{expand_curie, is_absolute_uri, CurieError, PrefixMap};

#[derive(Debug, Error)]
pub enum TermSetError {
    #[error("malformed YAML: {0}")]
    Yaml(#[from] serde_yaml::Error),
    #[error("schema {schema_id:?} defines no enumerations")]
    NoEnumerations { schema_id: String },
    #[error("schema {schema_id:?} contains an empty prefix name")]
    EmptyPrefix { schema_id: String },
    #[error("enumeration {enum_name:?} has neither permissible values nor a dynamic specification")]
    EmptyEnumBody { enum_name: String },
    #[error("permissible value {key:?} in enumeration {enum_name:?} has no meaning")]
    MissingMeaning { enum_name: String, key: String },
    #[error("permissible value {key:?} in enumeration {enum_name:?}: {source}")]
    MeaningUnresolvable {
        enum_name: String,
        key: String,
        source: CurieError,
    },
    #[error("dynamic specification for enumeration {enum_name:?} is invalid: {reason}")]
    InvalidDynamicSpec { enum_name: String, reason: String },
    #[error("unknown enumeration {enum_name:?} (schema defines: {available})")]
    UnknownEnum { enum_name: String, available: String },
    #[error("dynamic enumeration {enum_name:?} has not been expanded")]
    DynamicNotExpanded { enum_name: String },
    #[error("schema {path:?} defines several enumerations ({available}); one must be named")]
    AmbiguousEnum { path: String, available: String },
    #[error("cannot serialize: permissible value {key:?} in enumeration {enum_name:?}: {source}")]
    SerializeUnresolvable {
        enum_name: String,
        key: String,
        source: CurieError,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// One permissible value: a user-facing term key mapped to an ontology
/// entity through its `meaning` identifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermDefinition {
    pub key: String,
    /// Compact identifier (`PREFIX:LOCALID`) or absolute URI.
    pub meaning: String,
    pub description: Option<String>,
    pub title: Option<String>,
    /// Optional display text carried through serialization (generated
    /// schemas repeat the key here).
    pub text: Option<String>,
}

/// Dynamic enumeration specification: permissible values are the ontology
/// nodes reachable from the source nodes along the listed relationship
/// types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicSpec {
    /// Provider-scoped ontology name, e.g. `obo:cl`.
    pub source_ontology: String,
    pub source_nodes: Vec<String>,
    pub include_self: bool,
    pub relationship_types: Vec<String>,
}

/// A named enumeration: literal permissible values, a dynamic
/// specification, or both (an expanded dynamic enumeration keeps its spec).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enumeration {
    pub name: String,
    pub description: Option<String>,
    pub permissible_values: IndexMap<String, TermDefinition>,
    pub dynamic: Option<DynamicSpec>,
}

/// Parsed term set schema.
#[derive(Debug, Clone, PartialEq)]
pub struct TermSetSchema {
    pub id: String,
    pub name: String,
    pub version: Option<String>,
    pub description: Option<String>,
    pub prefixes: PrefixMap,
    pub imports: Vec<String>,
    pub default_range: Option<String>,
    /// Unknown top-level keys, preserved for round-tripping but ignored.
    pub extras: IndexMap<String, serde_yaml::Value>,
    pub enums: IndexMap<String, Enumeration>,
}

impl TermSetSchema {
    pub fn enumeration(&self, name: &str) -> Option<&Enumeration> {
        self.enums.get(name)
    }

    fn available_enums(&self) -> String {
        self.enums.keys().cloned().collect::<Vec<_>>().join(", ")
    }
}

// --- YAML document layer -------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct RawSchema {
    id: String,
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    version: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    prefixes: IndexMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    imports: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    default_range: Option<String>,
    #[serde(flatten)]
    extras: IndexMap<String, serde_yaml::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    enums: Option<IndexMap<String, RawEnum>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawEnum {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reachable_from: Option<RawReachableFrom>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    include_self: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    relationship_types: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    permissible_values: Option<IndexMap<String, RawTerm>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawReachableFrom {
    source_ontology: String,
    #[serde(default)]
    source_nodes: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawTerm {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meaning: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    title: Option<String>,
}

/// Parse a term set schema from YAML text.
pub fn parse_termset_schema(text: &str) -> Result<TermSetSchema, TermSetError> {
    let raw: RawSchema = serde_yaml::from_str(text)?;
    let schema_id = raw.id.clone();

    if raw.prefixes.keys().any(|k| k.is_empty()) {
        return Err(TermSetError::EmptyPrefix { schema_id });
    }

    let raw_enums = match raw.enums {
        Some(map) if !map.is_empty() => map,
        _ => return Err(TermSetError::NoEnumerations { schema_id }),
    };

    let mut enums = IndexMap::new();
    for (enum_name, raw_enum) in raw_enums {
        let dynamic = match raw_enum.reachable_from {
            Some(reach) => {
                if reach.source_nodes.is_empty() {
                    return Err(TermSetError::InvalidDynamicSpec {
                        enum_name,
                        reason: "source_nodes is empty".to_string(),
                    });
                }
                let relationship_types = raw_enum.relationship_types.unwrap_or_default();
                if relationship_types.is_empty() {
                    return Err(TermSetError::InvalidDynamicSpec {
                        enum_name,
                        reason: "relationship_types is empty".to_string(),
                    });
                }
                Some(DynamicSpec {
                    source_ontology: reach.source_ontology,
                    source_nodes: reach.source_nodes,
                    include_self: raw_enum.include_self.unwrap_or(false),
                    relationship_types,
                })
            }
            None => None,
        };

        let raw_values = raw_enum.permissible_values;
        if dynamic.is_none() && raw_values.is_none() {
            return Err(TermSetError::EmptyEnumBody { enum_name });
        }

        let mut permissible_values = IndexMap::new();
        for (key, raw_term) in raw_values.unwrap_or_default() {
            let meaning = raw_term.meaning.ok_or_else(|| TermSetError::MissingMeaning {
                enum_name: enum_name.clone(),
                key: key.clone(),
            })?;
            if !is_absolute_uri(&meaning) {
                expand_curie(&meaning, &raw.prefixes).map_err(|source| {
                    TermSetError::MeaningUnresolvable {
                        enum_name: enum_name.clone(),
                        key: key.clone(),
                        source,
                    }
                })?;
            }
            permissible_values.insert(
                key.clone(),
                TermDefinition {
                    key,
                    meaning,
                    description: raw_term.description,
                    title: raw_term.title,
                    text: raw_term.text,
                },
            );
        }

        enums.insert(
            enum_name.clone(),
            Enumeration {
                name: enum_name,
                description: raw_enum.description,
                permissible_values,
                dynamic,
            },
        );
    }

    Ok(TermSetSchema {
        id: raw.id,
        name: raw.name,
        version: raw.version,
        description: raw.description,
        prefixes: raw.prefixes,
        imports: raw.imports,
        default_range: raw.default_range,
        extras: raw.extras,
        enums,
    })
}

/// Serialize a schema back to YAML.
///
/// Every meaning must be resolvable as a CURIE under the schema's prefixes;
/// a schema carrying literal-URI meanings (or meanings whose prefix is
/// undeclared) is rejected rather than written out in an unloadable form.
/// Keys are written in insertion order.
pub fn serialize_termset_schema(schema: &TermSetSchema) -> Result<String, TermSetError> {
    for en in schema.enums.values() {
        for term in en.permissible_values.values() {
            expand_curie(&term.meaning, &schema.prefixes).map_err(|source| {
                TermSetError::SerializeUnresolvable {
                    enum_name: en.name.clone(),
                    key: term.key.clone(),
                    source,
                }
            })?;
        }
    }

    let mut enums = IndexMap::new();
    for (name, en) in &schema.enums {
        let values: IndexMap<String, RawTerm> = en
            .permissible_values
            .iter()
            .map(|(key, term)| {
                (
                    key.clone(),
                    RawTerm {
                        text: term.text.clone(),
                        description: term.description.clone(),
                        meaning: Some(term.meaning.clone()),
                        title: term.title.clone(),
                    },
                )
            })
            .collect();
        let permissible_values = if values.is_empty() && en.dynamic.is_some() {
            None
        } else {
            Some(values)
        };
        enums.insert(
            name.clone(),
            RawEnum {
                description: en.description.clone(),
                reachable_from: en.dynamic.as_ref().map(|d| RawReachableFrom {
                    source_ontology: d.source_ontology.clone(),
                    source_nodes: d.source_nodes.clone(),
                }),
                include_self: en.dynamic.as_ref().map(|d| d.include_self),
                relationship_types: en.dynamic.as_ref().map(|d| d.relationship_types.clone()),
                permissible_values,
            },
        );
    }

    let raw = RawSchema {
        id: schema.id.clone(),
        name: schema.name.clone(),
        version: schema.version.clone(),
        description: schema.description.clone(),
        prefixes: schema.prefixes.clone(),
        imports: schema.imports.clone(),
        default_range: schema.default_range.clone(),
        extras: schema.extras.clone(),
        enums: Some(enums),
    };
    Ok(serde_yaml::to_string(&raw)?)
}

// --- Resolved term sets ---------------------------------------------------

/// A permissible value with its entity resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedTerm {
    pub key: String,
    pub entity_id: String,
    pub entity_uri: String,
    pub description: Option<String>,
    pub title: Option<String>,
}

/// Result of checking one key against a term set.
#[derive(Debug, Clone, Copy)]
pub struct ValidationResult<'a> {
    pub valid: bool,
    pub term: Option<&'a ResolvedTerm>,
}

/// Order-preserving partition of a batch of keys.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BatchValidation {
    pub valid: Vec<String>,
    pub invalid: Vec<String>,
}

/// One enumeration of a schema with every term resolved to an entity id
/// and URI. Immutable once constructed; safe to share across readers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermSet {
    schema_id: String,
    enum_name: String,
    version: Option<String>,
    source_ref: Option<String>,
    terms: IndexMap<String, ResolvedTerm>,
}

impl TermSet {
    pub fn schema_id(&self) -> &str {
        &self.schema_id
    }

    pub fn enum_name(&self) -> &str {
        &self.enum_name
    }

    /// The schema reference string this set was loaded from (as written in
    /// the referencing document), when it came from a file.
    pub fn source_ref(&self) -> Option<&str> {
        self.source_ref.as_deref()
    }

    /// Stable provenance handle: `schema id # enum name @ version`.
    pub fn identity(&self) -> String {
        format!(
            "{}#{}@{}",
            self.schema_id,
            self.enum_name,
            self.version.as_deref().unwrap_or("unversioned")
        )
    }

    pub fn term(&self, key: &str) -> Option<&ResolvedTerm> {
        self.terms.get(key)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.terms.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &ResolvedTerm> {
        self.terms.values()
    }

    /// Exact, case-sensitive membership check.
    pub fn validate_term(&self, key: &str) -> ValidationResult<'_> {
        match self.terms.get(key) {
            Some(term) => ValidationResult { valid: true, term: Some(term) },
            None => ValidationResult { valid: false, term: None },
        }
    }

    /// Partition `keys` into valid and invalid lists, preserving input
    /// order and duplicates.
    pub fn validate_batch<I, S>(&self, keys: I) -> BatchValidation
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out = BatchValidation::default();
        for key in keys {
            let key = key.as_ref();
            if self.contains(key) {
                out.valid.push(key.to_string());
            } else {
                out.invalid.push(key.to_string());
            }
        }
        out
    }
}

/// Resolve one enumeration of `schema` into a [`TermSet`].
///
/// Dynamic enumerations must have been expanded first; an unexpanded one is
/// reported so the caller can run the expansion.
pub fn load_termset(schema: &TermSetSchema, enum_name: &str) -> Result<TermSet, TermSetError> {
    let en = schema
        .enumeration(enum_name)
        .ok_or_else(|| TermSetError::UnknownEnum {
            enum_name: enum_name.to_string(),
            available: schema.available_enums(),
        })?;
    if en.permissible_values.is_empty() && en.dynamic.is_some() {
        return Err(TermSetError::DynamicNotExpanded { enum_name: enum_name.to_string() });
    }

    let mut terms = IndexMap::new();
    for (key, term) in &en.permissible_values {
        let (entity_id, entity_uri) = if is_absolute_uri(&term.meaning) {
            (term.meaning.clone(), term.meaning.clone())
        } else {
            let uri = expand_curie(&term.meaning, &schema.prefixes).map_err(|source| {
                TermSetError::MeaningUnresolvable {
                    enum_name: enum_name.to_string(),
                    key: key.clone(),
                    source,
                }
            })?;
            (term.meaning.clone(), uri)
        };
        terms.insert(
            key.clone(),
            ResolvedTerm {
                key: key.clone(),
                entity_id,
                entity_uri,
                description: term.description.clone(),
                title: term.title.clone(),
            },
        );
    }

    Ok(TermSet {
        schema_id: schema.id.clone(),
        enum_name: enum_name.to_string(),
        version: schema.version.clone(),
        source_ref: None,
        terms,
    })
}

/// Loads term sets from schema files and caches them by canonical path and
/// enumeration, so repeated references share one instance.
#[derive(Debug, Default)]
pub struct TermSetRegistry {
    cache: HashMap<(PathBuf, String), Arc<TermSet>>,
}

impl TermSetRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Load the term set referenced as `reference` (a path relative to
    /// `base_dir`, or absolute). When `enum_name` is omitted the schema
    /// must define exactly one enumeration.
    pub fn load(
        &mut self,
        base_dir: &Path,
        reference: &str,
        enum_name: Option<&str>,
    ) -> Result<Arc<TermSet>, TermSetError> {
        let path = base_dir.join(reference);
        let canonical = path.canonicalize().map_err(|source| TermSetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let text = std::fs::read_to_string(&canonical).map_err(|source| TermSetError::Io {
            path: canonical.display().to_string(),
            source,
        })?;
        let schema = parse_termset_schema(&text)?;
        let enum_name = match enum_name {
            Some(name) => name.to_string(),
            None if schema.enums.len() == 1 => schema.enums.keys().next().unwrap().clone(),
            None => {
                return Err(TermSetError::AmbiguousEnum {
                    path: reference.to_string(),
                    available: schema.available_enums(),
                })
            }
        };
        let cache_key = (canonical, enum_name.clone());
        if let Some(ts) = self.cache.get(&cache_key) {
            return Ok(Arc::clone(ts));
        }
        let mut ts = load_termset(&schema, &enum_name)?;
        ts.source_ref = Some(reference.to_string());
        let ts = Arc::new(ts);
        self.cache.insert(cache_key, Arc::clone(&ts));
        Ok(ts)
    }
}
