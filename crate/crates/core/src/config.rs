//! Type configuration: a YAML file that binds (namespace, data type,
//! field) to a term set, so that constructing an object automatically
//! wraps — and therefore validates — the configured fields.
//!
//! A [`Workspace`] holds at most one active configuration; loading
//! replaces it, unloading restores plain construction.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Deserializer};
use thiserror::Error;

use crate::container::{
    ContainerError, ContainerFile, ContainerObject, FieldValue, ScalarValue, WrappedValue,
};
use crate::termset::{TermSet, TermSetError, TermSetRegistry};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Yaml { path: String, source: serde_yaml::Error },
    #[error("binding {namespace}/{type_name}/{field} ({reference:?}): {source}")]
    TermSetUnresolvable {
        namespace: String,
        type_name: String,
        field: String,
        reference: String,
        source: TermSetError,
    },
    #[error("field {field:?} of {namespace}/{type_name} is configured for a term set but holds a non-string value")]
    FieldNotWrappable {
        namespace: String,
        type_name: String,
        field: String,
    },
    #[error(transparent)]
    Container(#[from] ContainerError),
}

// `version: 2.7.0` parses as a string but `version: 2.7` as a number;
// accept either spelling.
fn de_opt_scalar_string<'de, D>(deserializer: D) -> Result<Option<String>, D::Error>
where
    D: Deserializer<'de>,
{
    let value: Option<serde_yaml::Value> = Option::deserialize(deserializer)?;
    Ok(value.map(|v| match v {
        serde_yaml::Value::String(s) => s,
        other => serde_yaml::to_string(&other).unwrap_or_default().trim().to_string(),
    }))
}

#[derive(Debug, Deserialize)]
struct RawConfig {
    namespaces: IndexMap<String, RawNamespace>,
}

#[derive(Debug, Deserialize)]
struct RawNamespace {
    #[serde(default, deserialize_with = "de_opt_scalar_string")]
    version: Option<String>,
    #[serde(default)]
    data_types: IndexMap<String, IndexMap<String, RawBinding>>,
}

#[derive(Debug, Deserialize)]
struct RawBinding {
    termset: String,
    #[serde(default, rename = "enum")]
    enum_name: Option<String>,
}

/// One resolved binding: the field is validated against this term set.
#[derive(Debug, Clone)]
pub struct FieldBinding {
    pub termset: Arc<TermSet>,
    /// The term set reference as written in the configuration file.
    pub reference: String,
}

#[derive(Debug, Clone)]
pub struct NamespaceConfig {
    pub version: Option<String>,
    // type name -> field name -> binding
    bindings: IndexMap<String, IndexMap<String, FieldBinding>>,
}

/// A loaded configuration file with every term set resolved.
#[derive(Debug, Clone)]
pub struct TypeConfig {
    pub path: PathBuf,
    namespaces: IndexMap<String, NamespaceConfig>,
}

impl TypeConfig {
    /// Exact match on namespace, type name and field name; no subtype
    /// inheritance.
    pub fn lookup(&self, namespace: &str, type_name: &str, field: &str) -> Option<&FieldBinding> {
        self.namespaces
            .get(namespace)?
            .bindings
            .get(type_name)?
            .get(field)
    }

    pub fn namespace_version(&self, namespace: &str) -> Option<&str> {
        self.namespaces.get(namespace)?.version.as_deref()
    }

    pub fn binding_count(&self) -> usize {
        self.namespaces
            .values()
            .flat_map(|ns| ns.bindings.values())
            .map(IndexMap::len)
            .sum()
    }

    pub fn bindings(&self) -> impl Iterator<Item = (&str, &str, &str, &FieldBinding)> {
        self.namespaces.iter().flat_map(|(ns, cfg)| {
            cfg.bindings.iter().flat_map(move |(ty, fields)| {
                fields.iter().map(move |(field, b)| (ns.as_str(), ty.as_str(), field.as_str(), b))
            })
        })
    }
}

/// Specification for constructing one object under the active
/// configuration.
#[derive(Debug, Clone, Default)]
pub struct ObjectSpec {
    pub object_id: Option<String>,
    pub type_name: String,
    pub namespace: String,
    pub namespace_version: Option<String>,
    pub fields: IndexMap<String, FieldValue>,
}

impl ObjectSpec {
    pub fn new(type_name: &str, namespace: &str) -> Self {
        Self {
            object_id: None,
            type_name: type_name.to_string(),
            namespace: namespace.to_string(),
            namespace_version: None,
            fields: IndexMap::new(),
        }
    }

    pub fn field(mut self, name: &str, value: FieldValue) -> Self {
        self.fields.insert(name.to_string(), value);
        self
    }

    pub fn text_field(self, name: &str, value: &str) -> Self {
        self.field(name, FieldValue::Scalar(ScalarValue::from(value)))
    }
}

/// A constructed object plus non-fatal findings (e.g. namespace version
/// mismatches).
#[derive(Debug, Clone)]
pub struct Constructed {
    pub object: ContainerObject,
    pub warnings: Vec<String>,
}

/// Wrapping applied to an existing file by the active configuration.
#[derive(Debug, Clone, Default)]
pub struct AppliedConfig {
    pub wrapped_fields: usize,
}

/// Holds the term set cache and the at-most-one active type
/// configuration for a unit of work.
#[derive(Debug, Default)]
pub struct Workspace {
    registry: TermSetRegistry,
    active: Option<TypeConfig>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn registry_mut(&mut self) -> &mut TermSetRegistry {
        &mut self.registry
    }

    pub fn active_config(&self) -> Option<&TypeConfig> {
        self.active.as_ref()
    }

    /// Load a configuration file, resolving every referenced term set
    /// (paths are relative to the file's directory). Replaces any
    /// previously active configuration.
    pub fn load_type_config(&mut self, path: &Path) -> Result<&TypeConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let raw: RawConfig = serde_yaml::from_str(&text).map_err(|source| ConfigError::Yaml {
            path: path.display().to_string(),
            source,
        })?;
        let base_dir = path.parent().unwrap_or_else(|| Path::new("."));

        let mut namespaces = IndexMap::new();
        for (ns_name, raw_ns) in raw.namespaces {
            let mut bindings: IndexMap<String, IndexMap<String, FieldBinding>> = IndexMap::new();
            for (type_name, fields) in raw_ns.data_types {
                let mut resolved = IndexMap::new();
                for (field, binding) in fields {
                    let termset = self
                        .registry
                        .load(base_dir, &binding.termset, binding.enum_name.as_deref())
                        .map_err(|source| ConfigError::TermSetUnresolvable {
                            namespace: ns_name.clone(),
                            type_name: type_name.clone(),
                            field: field.clone(),
                            reference: binding.termset.clone(),
                            source,
                        })?;
                    resolved.insert(
                        field,
                        FieldBinding { termset, reference: binding.termset },
                    );
                }
                bindings.insert(type_name, resolved);
            }
            namespaces.insert(ns_name, NamespaceConfig { version: raw_ns.version, bindings });
        }

        self.active = Some(TypeConfig { path: path.to_path_buf(), namespaces });
        Ok(self.active.as_ref().unwrap())
    }

    /// Deactivate the configuration; construction stops auto-wrapping.
    /// A no-op when none is loaded.
    pub fn unload_type_config(&mut self) {
        self.active = None;
    }

    pub fn lookup(&self, namespace: &str, type_name: &str, field: &str) -> Option<&FieldBinding> {
        self.active.as_ref()?.lookup(namespace, type_name, field)
    }

    /// Construct an object; every field bound in the active
    /// configuration is wrapped (and validated) exactly as if the caller
    /// had passed a wrapped value. Without an active configuration this
    /// is the identity constructor.
    pub fn construct(&self, spec: ObjectSpec) -> Result<Constructed, ConfigError> {
        let mut object = ContainerObject::with_id(
            spec.object_id.unwrap_or_else(crate::container::fresh_id),
            &spec.type_name,
            &spec.namespace,
        );
        let mut warnings = Vec::new();

        if let (Some(config), Some(declared)) =
            (self.active.as_ref(), spec.namespace_version.as_deref())
        {
            if let Some(configured) = config.namespace_version(&spec.namespace) {
                if configured != declared {
                    warnings.push(format!(
                        "namespace {:?} version {declared:?} does not match configured version {configured:?}",
                        spec.namespace
                    ));
                }
            }
        }

        for (name, value) in spec.fields {
            let wrapped = self.wrap_if_configured(&spec.namespace, &spec.type_name, &name, value)?;
            object.fields.insert(name, wrapped);
        }
        Ok(Constructed { object, warnings })
    }

    fn wrap_if_configured(
        &self,
        namespace: &str,
        type_name: &str,
        field: &str,
        value: FieldValue,
    ) -> Result<FieldValue, ConfigError> {
        let Some(binding) = self.lookup(namespace, type_name, field) else {
            return Ok(value);
        };
        match value {
            // A caller-supplied wrapper wins over the configuration.
            FieldValue::Wrapped(w) => Ok(FieldValue::Wrapped(w)),
            FieldValue::Scalar(ScalarValue::Text(s)) => Ok(FieldValue::Wrapped(
                WrappedValue::wrap(s, Arc::clone(&binding.termset))?,
            )),
            FieldValue::List(items) => {
                let mut keys = Vec::with_capacity(items.len());
                for item in items {
                    match item {
                        ScalarValue::Text(s) => keys.push(s),
                        _ => {
                            return Err(ConfigError::FieldNotWrappable {
                                namespace: namespace.to_string(),
                                type_name: type_name.to_string(),
                                field: field.to_string(),
                            })
                        }
                    }
                }
                Ok(FieldValue::Wrapped(WrappedValue::wrap(
                    keys,
                    Arc::clone(&binding.termset),
                )?))
            }
            _ => Err(ConfigError::FieldNotWrappable {
                namespace: namespace.to_string(),
                type_name: type_name.to_string(),
                field: field.to_string(),
            }),
        }
    }

    /// Apply the active configuration to an already-loaded file, wrapping
    /// every configured plain field in place. Returns how many fields
    /// were wrapped.
    pub fn apply_config_to_file(&self, file: &mut ContainerFile) -> Result<AppliedConfig, ConfigError> {
        if self.active.is_none() {
            return Ok(AppliedConfig::default());
        }
        let mut applied = AppliedConfig::default();
        let mut objects = std::mem::take(&mut file.objects);
        let result = (|| {
            for obj in &mut objects {
                self.apply_config_to_object(obj, &mut applied)?;
            }
            Ok(())
        })();
        file.objects = objects;
        result.map(|()| applied)
    }

    fn apply_config_to_object(
        &self,
        obj: &mut ContainerObject,
        applied: &mut AppliedConfig,
    ) -> Result<(), ConfigError> {
        let namespace = obj.namespace.clone();
        let type_name = obj.type_name.clone();
        let fields = std::mem::take(&mut obj.fields);
        for (name, value) in fields {
            let already_wrapped = matches!(value, FieldValue::Wrapped(_));
            let next = self.wrap_if_configured(&namespace, &type_name, &name, value)?;
            if !already_wrapped && matches!(next, FieldValue::Wrapped(_)) {
                applied.wrapped_fields += 1;
            }
            obj.fields.insert(name, next);
        }
        for child in &mut obj.children {
            self.apply_config_to_object(child, applied)?;
        }
        Ok(())
    }
}
