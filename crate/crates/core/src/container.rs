//! A minimal hierarchical data-file model: a file holds a tree of typed
//! objects whose fields carry scalars, lists, compound tables, or values
//! wrapped with a term set for validation. Wrapped fields are what
//! write-time auto-linking scans for.

use std::path::Path;
use std::sync::Arc;

use indexmap::IndexMap;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::termset::{TermSet, TermSetError, TermSetRegistry};

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{context}: {source}")]
    TermSetAt { context: String, source: TermSetError },
    #[error("invalid terms for {termset}: {invalid:?}")]
    InvalidTerms { termset: String, invalid: Vec<String> },
    #[error("cannot append to a scalar-wrapped value")]
    AppendToScalar,
    #[error("{context}: {reason}")]
    Shape { context: String, reason: String },
    #[error("duplicate object id {object_id:?} in file {file_id:?}")]
    DuplicateObjectId { object_id: String, file_id: String },
    #[error("wrapped value's term set {identity} has no source reference to persist")]
    TermSetWithoutSource { identity: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Generate a fresh version-4 identifier string (36 characters).
pub fn fresh_id() -> String {
    uuid::Uuid::new_v4().to_string()
}

/// A scalar field element.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarValue {
    Text(String),
    Number(f64),
    Bool(bool),
}

impl ScalarValue {
    /// Display form used when scalar values are treated as keys.
    pub fn render(&self) -> String {
        match self {
            ScalarValue::Text(s) => s.clone(),
            ScalarValue::Number(n) => {
                if n.fract() == 0.0 && n.is_finite() && n.abs() < 9.0e15 {
                    format!("{}", *n as i64)
                } else {
                    format!("{n}")
                }
            }
            ScalarValue::Bool(b) => b.to_string(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            ScalarValue::Text(s) => Value::String(s.clone()),
            ScalarValue::Number(n) => {
                if n.fract() == 0.0 && n.is_finite() && n.abs() < 9.0e15 {
                    json!(*n as i64)
                } else {
                    json!(n)
                }
            }
            ScalarValue::Bool(b) => Value::Bool(*b),
        }
    }
}

impl From<&str> for ScalarValue {
    fn from(v: &str) -> Self {
        ScalarValue::Text(v.to_string())
    }
}

impl From<String> for ScalarValue {
    fn from(v: String) -> Self {
        ScalarValue::Text(v)
    }
}

impl From<f64> for ScalarValue {
    fn from(v: f64) -> Self {
        ScalarValue::Number(v)
    }
}

impl From<i64> for ScalarValue {
    fn from(v: i64) -> Self {
        ScalarValue::Number(v as f64)
    }
}

impl From<bool> for ScalarValue {
    fn from(v: bool) -> Self {
        ScalarValue::Bool(v)
    }
}

/// The value side of a wrapped field: one key or a list of keys.
#[derive(Debug, Clone, PartialEq)]
pub enum WrappedPayload {
    Scalar(String),
    List(Vec<String>),
}

impl From<&str> for WrappedPayload {
    fn from(v: &str) -> Self {
        WrappedPayload::Scalar(v.to_string())
    }
}

impl From<String> for WrappedPayload {
    fn from(v: String) -> Self {
        WrappedPayload::Scalar(v)
    }
}

impl From<Vec<String>> for WrappedPayload {
    fn from(v: Vec<String>) -> Self {
        WrappedPayload::List(v)
    }
}

impl From<Vec<&str>> for WrappedPayload {
    fn from(v: Vec<&str>) -> Self {
        WrappedPayload::List(v.into_iter().map(str::to_string).collect())
    }
}

/// A value bound to a term set. Construction and append are the only
/// mutation paths, and both validate, so a wrapper never holds an element
/// its term set rejects.
#[derive(Debug, Clone, PartialEq)]
pub struct WrappedValue {
    payload: WrappedPayload,
    termset: Arc<TermSet>,
}

impl WrappedValue {
    /// Wrap a scalar or list. Fails atomically, reporting the complete
    /// list of invalid terms.
    pub fn wrap(
        value: impl Into<WrappedPayload>,
        termset: Arc<TermSet>,
    ) -> Result<Self, ContainerError> {
        let payload = value.into();
        let invalid: Vec<String> = match &payload {
            WrappedPayload::Scalar(v) => {
                if termset.contains(v) {
                    vec![]
                } else {
                    vec![v.clone()]
                }
            }
            WrappedPayload::List(vs) => {
                vs.iter().filter(|v| !termset.contains(v)).cloned().collect()
            }
        };
        if !invalid.is_empty() {
            return Err(ContainerError::InvalidTerms { termset: termset.identity(), invalid });
        }
        Ok(Self { payload, termset })
    }

    /// Validate and append one element to a list-wrapped value. On
    /// failure the wrapper is unchanged.
    pub fn append(&mut self, new: &str) -> Result<(), ContainerError> {
        let WrappedPayload::List(values) = &mut self.payload else {
            return Err(ContainerError::AppendToScalar);
        };
        if !self.termset.contains(new) {
            return Err(ContainerError::InvalidTerms {
                termset: self.termset.identity(),
                invalid: vec![new.to_string()],
            });
        }
        values.push(new.to_string());
        Ok(())
    }

    pub fn termset(&self) -> &Arc<TermSet> {
        &self.termset
    }

    pub fn payload(&self) -> &WrappedPayload {
        &self.payload
    }

    pub fn is_list(&self) -> bool {
        matches!(self.payload, WrappedPayload::List(_))
    }

    pub fn len(&self) -> usize {
        match &self.payload {
            WrappedPayload::Scalar(_) => 1,
            WrappedPayload::List(vs) => vs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn elements(&self) -> impl Iterator<Item = &str> {
        let slice: Vec<&str> = match &self.payload {
            WrappedPayload::Scalar(v) => vec![v.as_str()],
            WrappedPayload::List(vs) => vs.iter().map(String::as_str).collect(),
        };
        slice.into_iter()
    }
}

/// One column of a compound table.
#[derive(Debug, Clone, PartialEq)]
pub enum CompoundColumn {
    Plain(Vec<ScalarValue>),
    /// A wrapped column always wraps a list.
    Wrapped(WrappedValue),
}

impl CompoundColumn {
    pub fn len(&self) -> usize {
        match self {
            CompoundColumn::Plain(vs) => vs.len(),
            CompoundColumn::Wrapped(w) => w.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A field's value.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldValue {
    Scalar(ScalarValue),
    List(Vec<ScalarValue>),
    Compound(IndexMap<String, CompoundColumn>),
    Wrapped(WrappedValue),
}

impl FieldValue {
    /// Build a compound table, enforcing that all component columns share
    /// one length.
    pub fn compound(
        components: IndexMap<String, CompoundColumn>,
    ) -> Result<Self, ContainerError> {
        let mut lengths = components.iter().map(|(name, col)| (name, col.len()));
        if let Some((first_name, first_len)) = lengths.next() {
            for (name, len) in lengths {
                if len != first_len {
                    return Err(ContainerError::Shape {
                        context: format!("compound component {name:?}"),
                        reason: format!(
                            "length {len} differs from component {first_name:?} length {first_len}"
                        ),
                    });
                }
            }
        }
        Ok(FieldValue::Compound(components))
    }

    /// String renderings of the field's values, for validation and
    /// linking. Compound fields require a component name.
    pub fn string_values(&self, component: Option<&str>) -> Result<Vec<String>, ContainerError> {
        match (self, component) {
            (FieldValue::Scalar(v), None) => Ok(vec![v.render()]),
            (FieldValue::List(vs), None) => Ok(vs.iter().map(ScalarValue::render).collect()),
            (FieldValue::Wrapped(w), None) => Ok(w.elements().map(str::to_string).collect()),
            (FieldValue::Compound(cols), Some(name)) => match cols.get(name) {
                Some(CompoundColumn::Plain(vs)) => {
                    Ok(vs.iter().map(ScalarValue::render).collect())
                }
                Some(CompoundColumn::Wrapped(w)) => {
                    Ok(w.elements().map(str::to_string).collect())
                }
                None => Err(ContainerError::Shape {
                    context: format!("component {name:?}"),
                    reason: "not present in compound field".to_string(),
                }),
            },
            (FieldValue::Compound(_), None) => Err(ContainerError::Shape {
                context: "compound field".to_string(),
                reason: "a component name is required".to_string(),
            }),
            (_, Some(name)) => Err(ContainerError::Shape {
                context: format!("component {name:?}"),
                reason: "field is not compound".to_string(),
            }),
        }
    }
}

/// A typed object in the file tree. The empty field name addresses the
/// object's own dataset body.
#[derive(Debug, Clone, PartialEq)]
pub struct ContainerObject {
    pub object_id: String,
    pub type_name: String,
    pub namespace: String,
    pub fields: IndexMap<String, FieldValue>,
    pub children: Vec<ContainerObject>,
}

impl ContainerObject {
    pub const BODY_FIELD: &'static str = "";

    pub fn new(type_name: &str, namespace: &str) -> Self {
        Self::with_id(fresh_id(), type_name, namespace)
    }

    pub fn with_id(object_id: impl Into<String>, type_name: &str, namespace: &str) -> Self {
        Self {
            object_id: object_id.into(),
            type_name: type_name.to_string(),
            namespace: namespace.to_string(),
            fields: IndexMap::new(),
            children: Vec::new(),
        }
    }

    pub fn set_field(&mut self, name: &str, value: FieldValue) -> &mut Self {
        self.fields.insert(name.to_string(), value);
        self
    }

    pub fn field(&self, name: &str) -> Option<&FieldValue> {
        self.fields.get(name)
    }
}

/// A data file: a uniquely identified tree of objects.
#[derive(Debug, Clone, PartialEq)]
pub struct ContainerFile {
    pub file_id: String,
    pub name: String,
    pub objects: Vec<ContainerObject>,
}

impl ContainerFile {
    pub fn new(name: &str) -> Self {
        Self::with_id(fresh_id(), name)
    }

    pub fn with_id(file_id: impl Into<String>, name: &str) -> Self {
        Self { file_id: file_id.into(), name: name.to_string(), objects: Vec::new() }
    }

    /// Depth-first, document-order iteration over all objects.
    pub fn iter_objects(&self) -> impl Iterator<Item = &ContainerObject> {
        let mut out = Vec::new();
        fn visit<'a>(obj: &'a ContainerObject, out: &mut Vec<&'a ContainerObject>) {
            out.push(obj);
            for child in &obj.children {
                visit(child, out);
            }
        }
        for obj in &self.objects {
            visit(obj, &mut out);
        }
        out.into_iter()
    }

    pub fn find_object(&self, object_id: &str) -> Option<&ContainerObject> {
        self.iter_objects().find(|o| o.object_id == object_id)
    }

    pub fn contains_object(&self, object_id: &str) -> bool {
        self.find_object(object_id).is_some()
    }

    /// Check that object ids are unique within the file.
    pub fn validate(&self) -> Result<(), ContainerError> {
        let mut seen = std::collections::HashSet::new();
        for obj in self.iter_objects() {
            if !seen.insert(obj.object_id.as_str()) {
                return Err(ContainerError::DuplicateObjectId {
                    object_id: obj.object_id.clone(),
                    file_id: self.file_id.clone(),
                });
            }
        }
        Ok(())
    }
}

/// One wrapped field found by [`scan_wrapped`]: the owning object, the
/// field path within it (empty for the object's dataset body), and the
/// compound component name (empty for non-compound fields).
#[derive(Debug, Clone, Copy)]
pub struct WrappedHit<'a> {
    pub object: &'a ContainerObject,
    pub relative_path: &'a str,
    pub field: &'a str,
    pub wrapped: &'a WrappedValue,
}

/// Enumerate every wrapped field in the file, depth first in document
/// order.
pub fn scan_wrapped(file: &ContainerFile) -> Vec<WrappedHit<'_>> {
    let mut hits = Vec::new();
    fn visit<'a>(obj: &'a ContainerObject, hits: &mut Vec<WrappedHit<'a>>) {
        for (name, value) in &obj.fields {
            match value {
                FieldValue::Wrapped(w) => hits.push(WrappedHit {
                    object: obj,
                    relative_path: name,
                    field: "",
                    wrapped: w,
                }),
                FieldValue::Compound(cols) => {
                    for (component, col) in cols {
                        if let CompoundColumn::Wrapped(w) = col {
                            hits.push(WrappedHit {
                                object: obj,
                                relative_path: name,
                                field: component,
                                wrapped: w,
                            });
                        }
                    }
                }
                _ => {}
            }
        }
        for child in &obj.children {
            visit(child, hits);
        }
    }
    for obj in &file.objects {
        visit(obj, &mut hits);
    }
    hits
}

// --- JSON interchange ------------------------------------------------------

/// Load a container file from JSON text. Term set references inside
/// wrapped fields are resolved relative to `base_dir` through the
/// registry; wrapped values are validated as they are constructed.
pub fn load_container_json(
    text: &str,
    base_dir: &Path,
    registry: &mut TermSetRegistry,
) -> Result<ContainerFile, ContainerError> {
    let root: Value = serde_json::from_str(text)?;
    let obj = as_object(&root, "document")?;
    let file_id = required_str(obj, "file_id", "document")?;
    let name = required_str(obj, "name", "document")?;
    let mut file = ContainerFile::with_id(file_id, &name);
    if let Some(objects) = obj.get("objects") {
        let list = objects.as_array().ok_or_else(|| ContainerError::Shape {
            context: "document.objects".to_string(),
            reason: "expected an array".to_string(),
        })?;
        for (i, entry) in list.iter().enumerate() {
            let context = format!("objects[{i}]");
            file.objects.push(load_object(entry, &context, base_dir, registry)?);
        }
    }
    file.validate()?;
    Ok(file)
}

/// Load a container file from disk; term set paths resolve relative to
/// the file's directory.
pub fn load_container_file(
    path: &Path,
    registry: &mut TermSetRegistry,
) -> Result<ContainerFile, ContainerError> {
    let text = std::fs::read_to_string(path).map_err(|source| ContainerError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let base_dir = path.parent().unwrap_or_else(|| Path::new("."));
    load_container_json(&text, base_dir, registry)
}

fn load_object(
    value: &Value,
    context: &str,
    base_dir: &Path,
    registry: &mut TermSetRegistry,
) -> Result<ContainerObject, ContainerError> {
    let obj = as_object(value, context)?;
    let object_id = required_str(obj, "object_id", context)?;
    let type_name = required_str(obj, "type", context)?;
    let namespace = required_str(obj, "namespace", context)?;
    let mut out = ContainerObject::with_id(object_id, &type_name, &namespace);

    if let Some(fields) = obj.get("fields") {
        let map = fields.as_object().ok_or_else(|| ContainerError::Shape {
            context: format!("{context}.fields"),
            reason: "expected an object".to_string(),
        })?;
        for (name, fv) in map {
            let fctx = format!("{context}.fields.{name}");
            out.fields
                .insert(name.clone(), load_field_value(fv, &fctx, base_dir, registry)?);
        }
    }
    if let Some(children) = obj.get("children") {
        let list = children.as_array().ok_or_else(|| ContainerError::Shape {
            context: format!("{context}.children"),
            reason: "expected an array".to_string(),
        })?;
        for (i, entry) in list.iter().enumerate() {
            let cctx = format!("{context}.children[{i}]");
            out.children.push(load_object(entry, &cctx, base_dir, registry)?);
        }
    }
    Ok(out)
}

fn load_field_value(
    value: &Value,
    context: &str,
    base_dir: &Path,
    registry: &mut TermSetRegistry,
) -> Result<FieldValue, ContainerError> {
    match value {
        Value::String(_) | Value::Number(_) | Value::Bool(_) => {
            Ok(FieldValue::Scalar(load_scalar(value, context)?))
        }
        Value::Array(items) => {
            let mut out = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                out.push(load_scalar(item, &format!("{context}[{i}]"))?);
            }
            Ok(FieldValue::List(out))
        }
        Value::Object(map) if map.contains_key("termset") => {
            Ok(FieldValue::Wrapped(load_wrapped(map, context, base_dir, registry)?))
        }
        Value::Object(map) if map.contains_key("compound") => {
            let comps = map["compound"].as_object().ok_or_else(|| ContainerError::Shape {
                context: format!("{context}.compound"),
                reason: "expected an object".to_string(),
            })?;
            let mut columns = IndexMap::new();
            for (name, col) in comps {
                let cctx = format!("{context}.compound.{name}");
                let column = match col {
                    Value::Array(items) => {
                        let mut vs = Vec::with_capacity(items.len());
                        for (i, item) in items.iter().enumerate() {
                            vs.push(load_scalar(item, &format!("{cctx}[{i}]"))?);
                        }
                        CompoundColumn::Plain(vs)
                    }
                    Value::Object(m) if m.contains_key("termset") => {
                        let wrapped = load_wrapped(m, &cctx, base_dir, registry)?;
                        if !wrapped.is_list() {
                            return Err(ContainerError::Shape {
                                context: cctx,
                                reason: "a wrapped compound column must hold a list".to_string(),
                            });
                        }
                        CompoundColumn::Wrapped(wrapped)
                    }
                    _ => {
                        return Err(ContainerError::Shape {
                            context: cctx,
                            reason: "expected an array or a wrapped list".to_string(),
                        })
                    }
                };
                columns.insert(name.clone(), column);
            }
            FieldValue::compound(columns)
        }
        _ => Err(ContainerError::Shape {
            context: context.to_string(),
            reason: "expected a scalar, an array, a wrapped value, or a compound table"
                .to_string(),
        }),
    }
}

fn load_wrapped(
    map: &Map<String, Value>,
    context: &str,
    base_dir: &Path,
    registry: &mut TermSetRegistry,
) -> Result<WrappedValue, ContainerError> {
    let reference = map
        .get("termset")
        .and_then(Value::as_str)
        .ok_or_else(|| ContainerError::Shape {
            context: context.to_string(),
            reason: "termset must be a string path".to_string(),
        })?;
    let enum_name = match map.get("enum") {
        None => None,
        Some(Value::String(s)) => Some(s.as_str()),
        Some(_) => {
            return Err(ContainerError::Shape {
                context: context.to_string(),
                reason: "enum must be a string".to_string(),
            })
        }
    };
    let termset = registry
        .load(base_dir, reference, enum_name)
        .map_err(|source| ContainerError::TermSetAt { context: context.to_string(), source })?;

    let payload = match map.get("value") {
        Some(Value::String(s)) => WrappedPayload::Scalar(s.clone()),
        Some(Value::Array(items)) => {
            let mut vs = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                match item {
                    Value::String(s) => vs.push(s.clone()),
                    _ => {
                        return Err(ContainerError::Shape {
                            context: format!("{context}.value[{i}]"),
                            reason: "wrapped values must be strings".to_string(),
                        })
                    }
                }
            }
            WrappedPayload::List(vs)
        }
        _ => {
            return Err(ContainerError::Shape {
                context: context.to_string(),
                reason: "value must be a string or an array of strings".to_string(),
            })
        }
    };
    WrappedValue::wrap(payload, termset)
}

fn load_scalar(value: &Value, context: &str) -> Result<ScalarValue, ContainerError> {
    match value {
        Value::String(s) => Ok(ScalarValue::Text(s.clone())),
        Value::Number(n) => n.as_f64().map(ScalarValue::Number).ok_or_else(|| {
            ContainerError::Shape {
                context: context.to_string(),
                reason: "number out of range".to_string(),
            }
        }),
        Value::Bool(b) => Ok(ScalarValue::Bool(*b)),
        _ => Err(ContainerError::Shape {
            context: context.to_string(),
            reason: "expected a scalar".to_string(),
        }),
    }
}

fn as_object<'a>(value: &'a Value, context: &str) -> Result<&'a Map<String, Value>, ContainerError> {
    value.as_object().ok_or_else(|| ContainerError::Shape {
        context: context.to_string(),
        reason: "expected an object".to_string(),
    })
}

fn required_str(
    map: &Map<String, Value>,
    key: &str,
    context: &str,
) -> Result<String, ContainerError> {
    map.get(key)
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| ContainerError::Shape {
            context: context.to_string(),
            reason: format!("missing string field {key:?}"),
        })
}

/// Serialize a container file to canonical JSON (two-space indentation,
/// keys in model order). Wrapped fields persist their term set reference
/// and enumeration name.
pub fn save_container_json(file: &ContainerFile) -> Result<String, ContainerError> {
    file.validate()?;
    let mut doc = Map::new();
    doc.insert("file_id".to_string(), json!(file.file_id));
    doc.insert("name".to_string(), json!(file.name));
    doc.insert(
        "objects".to_string(),
        Value::Array(
            file.objects
                .iter()
                .map(save_object)
                .collect::<Result<Vec<_>, _>>()?,
        ),
    );
    let mut text = serde_json::to_string_pretty(&Value::Object(doc))?;
    text.push('\n');
    Ok(text)
}

fn save_object(obj: &ContainerObject) -> Result<Value, ContainerError> {
    let mut out = Map::new();
    out.insert("object_id".to_string(), json!(obj.object_id));
    out.insert("type".to_string(), json!(obj.type_name));
    out.insert("namespace".to_string(), json!(obj.namespace));
    let mut fields = Map::new();
    for (name, value) in &obj.fields {
        fields.insert(name.clone(), save_field_value(value)?);
    }
    out.insert("fields".to_string(), Value::Object(fields));
    out.insert(
        "children".to_string(),
        Value::Array(
            obj.children
                .iter()
                .map(save_object)
                .collect::<Result<Vec<_>, _>>()?,
        ),
    );
    Ok(Value::Object(out))
}

fn save_field_value(value: &FieldValue) -> Result<Value, ContainerError> {
    Ok(match value {
        FieldValue::Scalar(v) => v.to_json(),
        FieldValue::List(vs) => Value::Array(vs.iter().map(ScalarValue::to_json).collect()),
        FieldValue::Wrapped(w) => save_wrapped(w)?,
        FieldValue::Compound(cols) => {
            let mut comps = Map::new();
            for (name, col) in cols {
                let v = match col {
                    CompoundColumn::Plain(vs) => {
                        Value::Array(vs.iter().map(ScalarValue::to_json).collect())
                    }
                    CompoundColumn::Wrapped(w) => save_wrapped(w)?,
                };
                comps.insert(name.clone(), v);
            }
            let mut outer = Map::new();
            outer.insert("compound".to_string(), Value::Object(comps));
            Value::Object(outer)
        }
    })
}

fn save_wrapped(w: &WrappedValue) -> Result<Value, ContainerError> {
    let reference = w.termset().source_ref().ok_or_else(|| {
        ContainerError::TermSetWithoutSource { identity: w.termset().identity() }
    })?;
    let mut out = Map::new();
    let value = match w.payload() {
        WrappedPayload::Scalar(v) => json!(v),
        WrappedPayload::List(vs) => json!(vs),
    };
    out.insert("value".to_string(), value);
    out.insert("termset".to_string(), json!(reference));
    out.insert("enum".to_string(), json!(w.termset().enum_name()));
    Ok(Value::Object(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::termset::{load_termset, parse_termset_schema};

    fn fixture_dir() -> std::path::PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
    }

    fn species_termset() -> Arc<TermSet> {
        let mut registry = TermSetRegistry::new();
        registry.load(&fixture_dir(), "species.yaml", Some("Species")).unwrap()
    }

    #[test]
    fn wraps_valid_scalar_and_list() {
        let ts = species_termset();
        let scalar = WrappedValue::wrap("Mus musculus", Arc::clone(&ts)).unwrap();
        assert!(!scalar.is_list());
        assert_eq!(scalar.elements().collect::<Vec<_>>(), vec!["Mus musculus"]);

        let list = WrappedValue::wrap(
            vec!["Homo sapiens", "Ursus arctos horribilis"],
            Arc::clone(&ts),
        )
        .unwrap();
        assert_eq!(list.len(), 2);
    }

    #[test]
    fn wrap_reports_all_invalid_terms() {
        let ts = species_termset();
        let err =
            WrappedValue::wrap(vec!["mouse", "Homo sapiens", "cat"], Arc::clone(&ts)).unwrap_err();
        match err {
            ContainerError::InvalidTerms { invalid, .. } => {
                assert_eq!(invalid, vec!["mouse", "cat"]);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn append_validates_and_is_atomic() {
        let ts = species_termset();
        let mut w = WrappedValue::wrap(vec!["Homo sapiens"], Arc::clone(&ts)).unwrap();
        w.append("Mus musculus").unwrap();
        assert_eq!(w.len(), 2);

        let before = w.clone();
        assert!(w.append("cat").is_err());
        assert_eq!(w, before);

        let mut scalar = WrappedValue::wrap("Homo sapiens", ts).unwrap();
        assert!(matches!(scalar.append("Mus musculus"), Err(ContainerError::AppendToScalar)));
    }

    #[test]
    fn compound_lengths_must_agree() {
        let mut cols = IndexMap::new();
        cols.insert(
            "x".to_string(),
            CompoundColumn::Plain(vec![ScalarValue::from(1.0), ScalarValue::from(2.0)]),
        );
        cols.insert("y".to_string(), CompoundColumn::Plain(vec![ScalarValue::from(1.0)]));
        assert!(FieldValue::compound(cols).is_err());
    }

    #[test]
    fn loads_subject_fixture_with_wrapped_species() {
        let mut registry = TermSetRegistry::new();
        let file =
            load_container_file(&fixture_dir().join("subject_mouse.json"), &mut registry).unwrap();
        assert_eq!(file.objects.len(), 1);
        let subject = &file.objects[0];
        assert_eq!(subject.type_name, "Subject");
        assert_eq!(
            subject.field("subject_id"),
            Some(&FieldValue::Scalar(ScalarValue::Text("001".to_string())))
        );
        let hits = scan_wrapped(&file);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].relative_path, "species");
        assert_eq!(hits[0].field, "");
        assert_eq!(hits[0].object.object_id, subject.object_id);
    }

    #[test]
    fn scan_is_document_ordered_and_empty_without_wrappers() {
        let mut registry = TermSetRegistry::new();
        let file =
            load_container_file(&fixture_dir().join("ephys_session.json"), &mut registry).unwrap();
        let hits = scan_wrapped(&file);
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].object.type_name, "Device");
        assert_eq!(hits[0].relative_path, "manufacturer");
        assert_eq!(hits[1].object.type_name, "ElectrodeGroup");
        assert_eq!(hits[1].relative_path, "location");

        let plain = ContainerFile::with_id("f", "empty");
        assert!(scan_wrapped(&plain).is_empty());
    }

    #[test]
    fn invalid_species_fails_at_load_listing_terms() {
        let mut registry = TermSetRegistry::new();
        let err = load_container_file(
            &fixture_dir().join("subject_invalid_species.json"),
            &mut registry,
        )
        .unwrap_err();
        match err {
            ContainerError::InvalidTerms { invalid, .. } => {
                assert_eq!(invalid, vec!["Rhesus monkey"]);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn unknown_termset_path_is_an_error() {
        let text = r#"{
            "file_id": "f", "name": "n",
            "objects": [{
                "object_id": "o", "type": "Subject", "namespace": "core",
                "fields": {"species": {"value": "Homo sapiens", "termset": "missing.yaml"}}
            }]
        }"#;
        let mut registry = TermSetRegistry::new();
        let err = load_container_json(text, &fixture_dir(), &mut registry).unwrap_err();
        assert!(matches!(err, ContainerError::TermSetAt { .. }), "{err}");
    }

    #[test]
    fn duplicate_object_ids_are_rejected() {
        let mut file = ContainerFile::with_id("f", "n");
        file.objects.push(ContainerObject::with_id("o1", "A", "core"));
        file.objects.push(ContainerObject::with_id("o1", "B", "core"));
        assert!(matches!(file.validate(), Err(ContainerError::DuplicateObjectId { .. })));
    }

    #[test]
    fn json_roundtrip_is_stable() {
        let mut registry = TermSetRegistry::new();
        let path = fixture_dir().join("ephys_session.json");
        let first = load_container_file(&path, &mut registry).unwrap();
        let saved = save_container_json(&first).unwrap();
        let second = load_container_json(&saved, &fixture_dir(), &mut registry).unwrap();
        assert_eq!(first, second);
        let resaved = save_container_json(&second).unwrap();
        assert_eq!(saved, resaved);
    }

    #[test]
    fn wrapped_compound_column_is_scanned_with_component_name() {
        let schema = parse_termset_schema(
            "id: x\nname: x\nprefixes:\n  EX: https://example.org/\nenums:\n  E:\n    permissible_values:\n      here:\n        meaning: EX:here\n      there:\n        meaning: EX:there\n",
        )
        .unwrap();
        let ts = Arc::new(load_termset(&schema, "E").unwrap());
        let mut cols = IndexMap::new();
        cols.insert(
            "x".to_string(),
            CompoundColumn::Plain(vec![ScalarValue::from(0.1), ScalarValue::from(0.2)]),
        );
        cols.insert(
            "location".to_string(),
            CompoundColumn::Wrapped(
                WrappedValue::wrap(vec!["here", "there"], Arc::clone(&ts)).unwrap(),
            ),
        );
        let mut obj = ContainerObject::with_id("o", "Electrodes", "core");
        obj.set_field("electrodes", FieldValue::compound(cols).unwrap());
        let mut file = ContainerFile::with_id("f", "n");
        file.objects.push(obj);

        let hits = scan_wrapped(&file);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].relative_path, "electrodes");
        assert_eq!(hits[0].field, "location");
        assert_eq!(hits[0].wrapped.len(), 2);
    }

    #[test]
    fn body_field_scans_with_empty_relative_path() {
        let ts = species_termset();
        let mut obj = ContainerObject::with_id("o", "SpeciesList", "core");
        obj.set_field(
            ContainerObject::BODY_FIELD,
            FieldValue::Wrapped(WrappedValue::wrap(vec!["Homo sapiens"], ts).unwrap()),
        );
        let mut file = ContainerFile::with_id("f", "n");
        file.objects.push(obj);
        let hits = scan_wrapped(&file);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].relative_path, "");
    }

    #[test]
    fn number_rendering_trims_integral_floats() {
        assert_eq!(ScalarValue::Number(3.0).render(), "3");
        assert_eq!(ScalarValue::Number(3.5).render(), "3.5");
        assert_eq!(ScalarValue::Text("x".into()).render(), "x");
        assert_eq!(ScalarValue::Bool(true).render(), "true");
    }
}
