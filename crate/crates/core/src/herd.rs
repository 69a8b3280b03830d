//! The external-resources store: six interlinked normalized tables that
//! associate keys (values found in data objects) with entities (ontology
//! terms), without touching the annotated files.
//!
//! `files`, `objects`, `keys` and `entities` hold the facts; `object_keys`
//! and `entity_keys` are many-to-many link tables. Keys are deduplicated
//! globally by exact string and entities by entity id, so the same key can
//! be shared across objects and the same entity across keys. Row indices
//! are 0-based, stable, and append-only; deletion is not supported.

use std::collections::{BTreeSet, HashMap, HashSet};

use thiserror::Error;

use crate::container::{scan_wrapped, ContainerFile, ContainerObject};
use crate::termset::{BatchValidation, TermSet};

#[derive(Debug, Error)]
pub enum HerdError {
    #[error("key must be nonempty")]
    EmptyKey,
    #[error("entity id must be nonempty")]
    EmptyEntityId,
    #[error("entity URI must be nonempty")]
    EmptyEntityUri,
    #[error("entity {entity_id:?} is already linked to URI {existing:?}; refusing {offered:?}")]
    EntityUriConflict {
        entity_id: String,
        existing: String,
        offered: String,
    },
    #[error("object {object_id:?} is not attached to any known file and no file was given")]
    FileUnresolvable { object_id: String },
    #[error("field {field:?} absent from object {object_id:?}")]
    FieldAbsent { field: String, object_id: String },
    #[error(transparent)]
    Container(#[from] crate::container::ContainerError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileRecord {
    pub files_idx: usize,
    pub file_object_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectRecord {
    pub objects_idx: usize,
    pub files_idx: usize,
    pub object_id: String,
    pub object_type: String,
    /// Field path within the object; empty when the link targets the
    /// object's own dataset body.
    pub relative_path: String,
    /// Compound component name; empty otherwise.
    pub field: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyRecord {
    pub keys_idx: usize,
    pub key: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityRecord {
    pub entities_idx: usize,
    pub entity_id: String,
    pub entity_uri: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObjectKeyLink {
    pub objects_idx: usize,
    pub keys_idx: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntityKeyLink {
    pub entities_idx: usize,
    pub keys_idx: usize,
}

/// Row indices touched by one reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefIndices {
    pub objects_idx: usize,
    pub keys_idx: usize,
    pub entities_idx: usize,
}

/// How the file owning a container object is identified.
#[derive(Debug, Clone, Copy)]
pub enum FileRef<'a> {
    /// Explicit file id.
    Id(&'a str),
    /// The file itself.
    File(&'a ContainerFile),
    /// Resolve the owner by searching these files for the object.
    Resolve(&'a [&'a ContainerFile]),
}

/// Which keys an [`HerdStore::add_ref_termset`] call links.
#[derive(Debug, Clone, Copy)]
pub enum KeySelection<'a> {
    One(&'a str),
    Many(&'a [String]),
    /// Use every value of the addressed field.
    EntireField,
}

/// Outcome of a termset-driven bulk link: keys actually linked, and keys
/// the term set rejected (valid ones are still applied).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermsetLinkOutcome {
    pub linked: Vec<String>,
    pub invalid: Vec<String>,
}

/// One denormalized row of the store.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct FlatRow {
    pub file_object_id: String,
    pub object_id: String,
    pub object_type: String,
    pub relative_path: String,
    pub field: String,
    pub key: String,
    pub entity_id: String,
    pub entity_uri: String,
}

/// Denormalized view: one row per (object link × entity link) pair joined
/// on the key.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlatTable {
    pub rows: Vec<FlatRow>,
}

impl FlatTable {
    pub const HEADER: [&'static str; 8] = [
        "file_object_id",
        "object_id",
        "object_type",
        "relative_path",
        "field",
        "key",
        "entity_id",
        "entity_uri",
    ];

    pub fn to_tsv(&self) -> String {
        let mut out = Self::HEADER.join("\t");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                row.file_object_id,
                row.object_id,
                row.object_type,
                row.relative_path,
                row.field,
                row.key,
                row.entity_id,
                row.entity_uri
            ));
        }
        out
    }

    /// Rows sorted on all columns, for order-insensitive comparison.
    pub fn canonical_rows(&self) -> Vec<FlatRow> {
        let mut rows = self.rows.clone();
        rows.sort();
        rows
    }

    /// Multiset equality of rows.
    pub fn same_rows(&self, other: &FlatTable) -> bool {
        self.canonical_rows() == other.canonical_rows()
    }
}

/// An invariant violation found by [`HerdStore::audit`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditViolation {
    pub table: &'static str,
    pub row: usize,
    pub detail: String,
}

impl std::fmt::Display for AuditViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} row {}: {}", self.table, self.row, self.detail)
    }
}

/// The normalized store. Single writer, multiple readers; queries taken
/// between mutations see a consistent snapshot.
#[derive(Debug, Clone, Default)]
pub struct HerdStore {
    files: Vec<FileRecord>,
    objects: Vec<ObjectRecord>,
    keys: Vec<KeyRecord>,
    entities: Vec<EntityRecord>,
    object_keys: Vec<ObjectKeyLink>,
    entity_keys: Vec<EntityKeyLink>,

    file_index: HashMap<String, usize>,
    object_index: HashMap<(usize, String, String, String), usize>,
    key_index: HashMap<String, usize>,
    entity_index: HashMap<String, usize>,
    object_key_set: HashSet<(usize, usize)>,
    entity_key_set: HashSet<(usize, usize)>,
}

impl PartialEq for HerdStore {
    fn eq(&self, other: &Self) -> bool {
        self.files == other.files
            && self.objects == other.objects
            && self.keys == other.keys
            && self.entities == other.entities
            && self.object_keys == other.object_keys
            && self.entity_keys == other.entity_keys
    }
}

impl HerdStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn files(&self) -> &[FileRecord] {
        &self.files
    }

    pub fn objects(&self) -> &[ObjectRecord] {
        &self.objects
    }

    pub fn keys(&self) -> &[KeyRecord] {
        &self.keys
    }

    pub fn entities(&self) -> &[EntityRecord] {
        &self.entities
    }

    pub fn object_keys(&self) -> &[ObjectKeyLink] {
        &self.object_keys
    }

    pub fn entity_keys(&self) -> &[EntityKeyLink] {
        &self.entity_keys
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
            && self.objects.is_empty()
            && self.keys.is_empty()
            && self.entities.is_empty()
            && self.object_keys.is_empty()
            && self.entity_keys.is_empty()
    }

    /// Row counts in table order (files, objects, keys, entities,
    /// object_keys, entity_keys).
    pub fn table_sizes(&self) -> [usize; 6] {
        [
            self.files.len(),
            self.objects.len(),
            self.keys.len(),
            self.entities.len(),
            self.object_keys.len(),
            self.entity_keys.len(),
        ]
    }

    // --- upserts ---------------------------------------------------------

    fn upsert_file(&mut self, file_object_id: &str) -> usize {
        if let Some(&idx) = self.file_index.get(file_object_id) {
            return idx;
        }
        let idx = self.files.len();
        self.files.push(FileRecord { files_idx: idx, file_object_id: file_object_id.to_string() });
        self.file_index.insert(file_object_id.to_string(), idx);
        idx
    }

    fn upsert_object(
        &mut self,
        files_idx: usize,
        object_id: &str,
        object_type: &str,
        relative_path: &str,
        field: &str,
    ) -> usize {
        let natural = (
            files_idx,
            object_id.to_string(),
            relative_path.to_string(),
            field.to_string(),
        );
        if let Some(&idx) = self.object_index.get(&natural) {
            return idx;
        }
        let idx = self.objects.len();
        self.objects.push(ObjectRecord {
            objects_idx: idx,
            files_idx,
            object_id: object_id.to_string(),
            object_type: object_type.to_string(),
            relative_path: relative_path.to_string(),
            field: field.to_string(),
        });
        self.object_index.insert(natural, idx);
        idx
    }

    fn upsert_key(&mut self, key: &str) -> usize {
        if let Some(&idx) = self.key_index.get(key) {
            return idx;
        }
        let idx = self.keys.len();
        self.keys.push(KeyRecord { keys_idx: idx, key: key.to_string() });
        self.key_index.insert(key.to_string(), idx);
        idx
    }

    fn upsert_entity(&mut self, entity_id: &str, entity_uri: &str) -> Result<usize, HerdError> {
        if let Some(&idx) = self.entity_index.get(entity_id) {
            let existing = &self.entities[idx].entity_uri;
            if existing != entity_uri {
                return Err(HerdError::EntityUriConflict {
                    entity_id: entity_id.to_string(),
                    existing: existing.clone(),
                    offered: entity_uri.to_string(),
                });
            }
            return Ok(idx);
        }
        let idx = self.entities.len();
        self.entities.push(EntityRecord {
            entities_idx: idx,
            entity_id: entity_id.to_string(),
            entity_uri: entity_uri.to_string(),
        });
        self.entity_index.insert(entity_id.to_string(), idx);
        Ok(idx)
    }

    fn link_object_key(&mut self, objects_idx: usize, keys_idx: usize) {
        if self.object_key_set.insert((objects_idx, keys_idx)) {
            self.object_keys.push(ObjectKeyLink { objects_idx, keys_idx });
        }
    }

    fn link_entity_key(&mut self, entities_idx: usize, keys_idx: usize) {
        if self.entity_key_set.insert((entities_idx, keys_idx)) {
            self.entity_keys.push(EntityKeyLink { entities_idx, keys_idx });
        }
    }

    // --- insertion -------------------------------------------------------

    /// Record one reference from raw parts. Upserts every row involved
    /// (dedup by natural keys), so an identical repeat call changes
    /// nothing. A different URI for a known entity id is a hard error,
    /// raised before any row is written.
    #[allow(clippy::too_many_arguments)]
    pub fn add_ref_raw(
        &mut self,
        file_id: &str,
        object_id: &str,
        object_type: &str,
        relative_path: &str,
        field: &str,
        key: &str,
        entity_id: &str,
        entity_uri: &str,
    ) -> Result<RefIndices, HerdError> {
        if key.is_empty() {
            return Err(HerdError::EmptyKey);
        }
        if entity_id.is_empty() {
            return Err(HerdError::EmptyEntityId);
        }
        if entity_uri.is_empty() {
            return Err(HerdError::EmptyEntityUri);
        }
        if let Some(&idx) = self.entity_index.get(entity_id) {
            let existing = &self.entities[idx].entity_uri;
            if existing != entity_uri {
                return Err(HerdError::EntityUriConflict {
                    entity_id: entity_id.to_string(),
                    existing: existing.clone(),
                    offered: entity_uri.to_string(),
                });
            }
        }

        let files_idx = self.upsert_file(file_id);
        let objects_idx =
            self.upsert_object(files_idx, object_id, object_type, relative_path, field);
        let keys_idx = self.upsert_key(key);
        let entities_idx = self.upsert_entity(entity_id, entity_uri)?;
        self.link_object_key(objects_idx, keys_idx);
        self.link_entity_key(entities_idx, keys_idx);
        Ok(RefIndices { objects_idx, keys_idx, entities_idx })
    }

    fn resolve_file_id<'a>(
        file: FileRef<'a>,
        container: &ContainerObject,
    ) -> Result<&'a str, HerdError> {
        match file {
            FileRef::Id(id) => Ok(id),
            FileRef::File(f) => Ok(&f.file_id),
            FileRef::Resolve(candidates) => candidates
                .iter()
                .find(|f| f.contains_object(&container.object_id))
                .map(|f| f.file_id.as_str())
                .ok_or_else(|| HerdError::FileUnresolvable {
                    object_id: container.object_id.clone(),
                }),
        }
    }

    /// Record one reference for a container object. `attribute` is the
    /// targeted field (omitted for the object's dataset body); `field`
    /// selects the component of compound data.
    #[allow(clippy::too_many_arguments)]
    pub fn add_ref(
        &mut self,
        file: FileRef<'_>,
        container: &ContainerObject,
        attribute: Option<&str>,
        field: Option<&str>,
        key: &str,
        entity_id: &str,
        entity_uri: &str,
    ) -> Result<RefIndices, HerdError> {
        let file_id = Self::resolve_file_id(file, container)?;
        self.add_ref_raw(
            file_id,
            &container.object_id,
            &container.type_name,
            attribute.unwrap_or(""),
            field.unwrap_or(""),
            key,
            entity_id,
            entity_uri,
        )
    }

    /// Link keys through a term set: each valid key is linked using the
    /// term set's entity id and URI; invalid keys are returned for the
    /// caller to resolve. With [`KeySelection::EntireField`] the addressed
    /// field's values are read from the container.
    pub fn add_ref_termset(
        &mut self,
        file: FileRef<'_>,
        container: &ContainerObject,
        attribute: Option<&str>,
        field: Option<&str>,
        termset: &TermSet,
        keys: KeySelection<'_>,
    ) -> Result<TermsetLinkOutcome, HerdError> {
        let file_id = Self::resolve_file_id(file, container)?.to_string();
        let owned: Vec<String> = match keys {
            KeySelection::One(key) => vec![key.to_string()],
            KeySelection::Many(keys) => keys.to_vec(),
            KeySelection::EntireField => {
                let name = attribute.unwrap_or(ContainerObject::BODY_FIELD);
                let value = container.field(name).ok_or_else(|| HerdError::FieldAbsent {
                    field: name.to_string(),
                    object_id: container.object_id.clone(),
                })?;
                value.string_values(field)?
            }
        };

        let BatchValidation { valid, invalid } = termset.validate_batch(owned.iter());
        for key in &valid {
            let term = termset.term(key).expect("validated above");
            self.add_ref_raw(
                &file_id,
                &container.object_id,
                &container.type_name,
                attribute.unwrap_or(""),
                field.unwrap_or(""),
                key,
                &term.entity_id,
                &term.entity_uri,
            )?;
        }
        Ok(TermsetLinkOutcome { linked: valid, invalid })
    }

    /// Scan the file for wrapped values and link every element through
    /// its term set; equivalent to the corresponding explicit
    /// [`HerdStore::add_ref`] sequence. Returns the number of elements
    /// linked.
    pub fn add_ref_container(&mut self, file: &ContainerFile) -> Result<usize, HerdError> {
        let mut count = 0;
        for hit in scan_wrapped(file) {
            for element in hit.wrapped.elements() {
                let term = hit
                    .wrapped
                    .termset()
                    .term(element)
                    .expect("wrapped values are validated at construction");
                self.add_ref_raw(
                    &file.file_id,
                    &hit.object.object_id,
                    &hit.object.type_name,
                    hit.relative_path,
                    hit.field,
                    element,
                    &term.entity_id,
                    &term.entity_uri,
                )?;
                count += 1;
            }
        }
        Ok(count)
    }

    // --- queries -----------------------------------------------------------

    /// Object rows linked to `key`. Unknown keys yield the empty set.
    pub fn get_objects_for_key(&self, key: &str) -> Vec<&ObjectRecord> {
        let Some(&keys_idx) = self.key_index.get(key) else {
            return Vec::new();
        };
        self.objects_for_key_indices(&BTreeSet::from([keys_idx]))
    }

    /// Keys linked to any object row with this object id.
    pub fn get_keys_for_object(&self, object_id: &str) -> Vec<&KeyRecord> {
        let object_rows: HashSet<usize> = self
            .objects
            .iter()
            .filter(|o| o.object_id == object_id)
            .map(|o| o.objects_idx)
            .collect();
        let mut key_rows: BTreeSet<usize> = BTreeSet::new();
        for link in &self.object_keys {
            if object_rows.contains(&link.objects_idx) {
                key_rows.insert(link.keys_idx);
            }
        }
        key_rows.into_iter().map(|i| &self.keys[i]).collect()
    }

    /// Entities linked to `key`.
    pub fn get_entities_for_key(&self, key: &str) -> Vec<&EntityRecord> {
        let Some(&keys_idx) = self.key_index.get(key) else {
            return Vec::new();
        };
        let mut rows: BTreeSet<usize> = BTreeSet::new();
        for link in &self.entity_keys {
            if link.keys_idx == keys_idx {
                rows.insert(link.entities_idx);
            }
        }
        rows.into_iter().map(|i| &self.entities[i]).collect()
    }

    /// Object rows reachable from `entity_id` through its keys.
    pub fn get_objects_for_entity(&self, entity_id: &str) -> Vec<&ObjectRecord> {
        let Some(&entities_idx) = self.entity_index.get(entity_id) else {
            return Vec::new();
        };
        let mut key_rows: BTreeSet<usize> = BTreeSet::new();
        for link in &self.entity_keys {
            if link.entities_idx == entities_idx {
                key_rows.insert(link.keys_idx);
            }
        }
        self.objects_for_key_indices(&key_rows)
    }

    /// Keys linked to `entity_id`.
    pub fn get_keys_for_entity(&self, entity_id: &str) -> Vec<&KeyRecord> {
        let Some(&entities_idx) = self.entity_index.get(entity_id) else {
            return Vec::new();
        };
        let mut rows: BTreeSet<usize> = BTreeSet::new();
        for link in &self.entity_keys {
            if link.entities_idx == entities_idx {
                rows.insert(link.keys_idx);
            }
        }
        rows.into_iter().map(|i| &self.keys[i]).collect()
    }

    fn objects_for_key_indices(&self, key_rows: &BTreeSet<usize>) -> Vec<&ObjectRecord> {
        let mut rows: BTreeSet<usize> = BTreeSet::new();
        for link in &self.object_keys {
            if key_rows.contains(&link.keys_idx) {
                rows.insert(link.objects_idx);
            }
        }
        rows.into_iter().map(|i| &self.objects[i]).collect()
    }

    // --- views and combination ----------------------------------------------

    /// Denormalize the store: one row per (object link × entity link)
    /// pair sharing a key, in link-table order.
    pub fn to_flat_table(&self) -> FlatTable {
        let mut entities_by_key: HashMap<usize, Vec<usize>> = HashMap::new();
        for link in &self.entity_keys {
            entities_by_key.entry(link.keys_idx).or_default().push(link.entities_idx);
        }
        let mut rows = Vec::new();
        for link in &self.object_keys {
            let object = &self.objects[link.objects_idx];
            let file = &self.files[object.files_idx];
            let key = &self.keys[link.keys_idx];
            if let Some(entity_rows) = entities_by_key.get(&link.keys_idx) {
                for &entities_idx in entity_rows {
                    let entity = &self.entities[entities_idx];
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
        FlatTable { rows }
    }

    /// Union of two stores with re-indexed foreign keys and natural-key
    /// dedup. Fails on entity ids carrying different URIs in the two
    /// stores.
    pub fn merge(&self, other: &HerdStore) -> Result<HerdStore, HerdError> {
        let mut out = self.clone();

        let mut file_map = Vec::with_capacity(other.files.len());
        for rec in &other.files {
            file_map.push(out.upsert_file(&rec.file_object_id));
        }
        let mut object_map = Vec::with_capacity(other.objects.len());
        for rec in &other.objects {
            object_map.push(out.upsert_object(
                file_map[rec.files_idx],
                &rec.object_id,
                &rec.object_type,
                &rec.relative_path,
                &rec.field,
            ));
        }
        let mut key_map = Vec::with_capacity(other.keys.len());
        for rec in &other.keys {
            key_map.push(out.upsert_key(&rec.key));
        }
        let mut entity_map = Vec::with_capacity(other.entities.len());
        for rec in &other.entities {
            entity_map.push(out.upsert_entity(&rec.entity_id, &rec.entity_uri)?);
        }
        for link in &other.object_keys {
            out.link_object_key(object_map[link.objects_idx], key_map[link.keys_idx]);
        }
        for link in &other.entity_keys {
            out.link_entity_key(entity_map[link.entities_idx], key_map[link.keys_idx]);
        }
        Ok(out)
    }

    /// Check every referential-integrity and uniqueness invariant.
    /// Returns all violations found (empty means the store is sound).
    pub fn audit(&self) -> Vec<AuditViolation> {
        let mut out = Vec::new();
        let mut seen_files = HashSet::new();
        for (i, rec) in self.files.iter().enumerate() {
            if rec.files_idx != i {
                out.push(AuditViolation {
                    table: "files",
                    row: i,
                    detail: format!("files_idx {} does not match row position", rec.files_idx),
                });
            }
            if !seen_files.insert(&rec.file_object_id) {
                out.push(AuditViolation {
                    table: "files",
                    row: i,
                    detail: format!("duplicate file_object_id {:?}", rec.file_object_id),
                });
            }
        }

        let mut seen_objects = HashSet::new();
        for (i, rec) in self.objects.iter().enumerate() {
            if rec.objects_idx != i {
                out.push(AuditViolation {
                    table: "objects",
                    row: i,
                    detail: format!("objects_idx {} does not match row position", rec.objects_idx),
                });
            }
            if rec.files_idx >= self.files.len() {
                out.push(AuditViolation {
                    table: "objects",
                    row: i,
                    detail: format!("files_idx {} out of range", rec.files_idx),
                });
            }
            if !seen_objects.insert((
                rec.files_idx,
                &rec.object_id,
                &rec.relative_path,
                &rec.field,
            )) {
                out.push(AuditViolation {
                    table: "objects",
                    row: i,
                    detail: format!(
                        "duplicate (files_idx, object_id, relative_path, field) = ({}, {:?}, {:?}, {:?})",
                        rec.files_idx, rec.object_id, rec.relative_path, rec.field
                    ),
                });
            }
        }

        let mut seen_keys = HashSet::new();
        for (i, rec) in self.keys.iter().enumerate() {
            if rec.keys_idx != i {
                out.push(AuditViolation {
                    table: "keys",
                    row: i,
                    detail: format!("keys_idx {} does not match row position", rec.keys_idx),
                });
            }
            if !seen_keys.insert(&rec.key) {
                out.push(AuditViolation {
                    table: "keys",
                    row: i,
                    detail: format!("duplicate key {:?}", rec.key),
                });
            }
        }

        let mut seen_entities = HashSet::new();
        for (i, rec) in self.entities.iter().enumerate() {
            if rec.entities_idx != i {
                out.push(AuditViolation {
                    table: "entities",
                    row: i,
                    detail: format!(
                        "entities_idx {} does not match row position",
                        rec.entities_idx
                    ),
                });
            }
            if rec.entity_uri.is_empty() {
                out.push(AuditViolation {
                    table: "entities",
                    row: i,
                    detail: "empty entity_uri".to_string(),
                });
            }
            if !seen_entities.insert(&rec.entity_id) {
                out.push(AuditViolation {
                    table: "entities",
                    row: i,
                    detail: format!("duplicate entity_id {:?}", rec.entity_id),
                });
            }
        }

        let mut seen_ok = HashSet::new();
        for (i, link) in self.object_keys.iter().enumerate() {
            if link.objects_idx >= self.objects.len() {
                out.push(AuditViolation {
                    table: "object_keys",
                    row: i,
                    detail: format!("objects_idx {} out of range", link.objects_idx),
                });
            }
            if link.keys_idx >= self.keys.len() {
                out.push(AuditViolation {
                    table: "object_keys",
                    row: i,
                    detail: format!("keys_idx {} out of range", link.keys_idx),
                });
            }
            if !seen_ok.insert((link.objects_idx, link.keys_idx)) {
                out.push(AuditViolation {
                    table: "object_keys",
                    row: i,
                    detail: format!("duplicate pair ({}, {})", link.objects_idx, link.keys_idx),
                });
            }
        }

        let mut seen_ek = HashSet::new();
        for (i, link) in self.entity_keys.iter().enumerate() {
            if link.entities_idx >= self.entities.len() {
                out.push(AuditViolation {
                    table: "entity_keys",
                    row: i,
                    detail: format!("entities_idx {} out of range", link.entities_idx),
                });
            }
            if link.keys_idx >= self.keys.len() {
                out.push(AuditViolation {
                    table: "entity_keys",
                    row: i,
                    detail: format!("keys_idx {} out of range", link.keys_idx),
                });
            }
            if !seen_ek.insert((link.entities_idx, link.keys_idx)) {
                out.push(AuditViolation {
                    table: "entity_keys",
                    row: i,
                    detail: format!("duplicate pair ({}, {})", link.entities_idx, link.keys_idx),
                });
            }
        }
        out
    }

    /// Rebuild a store from raw tables (archive loading); the caller is
    /// responsible for auditing the result.
    pub(crate) fn from_tables(
        files: Vec<FileRecord>,
        objects: Vec<ObjectRecord>,
        keys: Vec<KeyRecord>,
        entities: Vec<EntityRecord>,
        object_keys: Vec<ObjectKeyLink>,
        entity_keys: Vec<EntityKeyLink>,
    ) -> Self {
        let file_index = files
            .iter()
            .map(|r| (r.file_object_id.clone(), r.files_idx))
            .collect();
        let object_index = objects
            .iter()
            .map(|r| {
                (
                    (
                        r.files_idx,
                        r.object_id.clone(),
                        r.relative_path.clone(),
                        r.field.clone(),
                    ),
                    r.objects_idx,
                )
            })
            .collect();
        let key_index = keys.iter().map(|r| (r.key.clone(), r.keys_idx)).collect();
        let entity_index = entities
            .iter()
            .map(|r| (r.entity_id.clone(), r.entities_idx))
            .collect();
        let object_key_set = object_keys.iter().map(|l| (l.objects_idx, l.keys_idx)).collect();
        let entity_key_set = entity_keys.iter().map(|l| (l.entities_idx, l.keys_idx)).collect();
        Self {
            files,
            objects,
            keys,
            entities,
            object_keys,
            entity_keys,
            file_index,
            object_index,
            key_index,
            entity_index,
            object_key_set,
            entity_key_set,
        }
    }
}
