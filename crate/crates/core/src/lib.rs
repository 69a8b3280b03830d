//! Terminology linking for hierarchical data files.
//!
//! This crate covers three concerns:
//!
//! * **Term sets** — controlled enumerations of permissible terms, each
//!   grounded in an ontology entity, parsed from and serialized to a YAML
//!   schema subset ([`termset`]). Large vocabularies can be populated
//!   dynamically from an ontology ([`expand`], [`remote`]) or ingested
//!   from spreadsheet exports ([`sheets`]).
//! * **Validation** — values in a container file can be wrapped with a
//!   term set so that construction and append only admit permissible
//!   terms ([`container`]), either manually or driven by a type
//!   configuration ([`config`]).
//! * **Linking** — a normalized six-table store records which keys in
//!   which objects of which files refer to which ontology entities,
//!   supports key/object/entity queries, merging, a denormalized view,
//!   and zipped-TSV persistence, all without modifying the annotated
//!   files ([`herd`], [`archive`]).

pub mod archive;
pub mod config;
pub mod container;
pub mod curie;
pub mod expand;
pub mod herd;
pub mod remote;
pub mod sheets;
pub mod termset;

pub use archive::{load_zip, save_zip, ArchiveError};
pub use config::{ConfigError, Constructed, ObjectSpec, TypeConfig, Workspace};
pub use container::{
    load_container_file, load_container_json, save_container_json, scan_wrapped, ContainerError,
    ContainerFile, ContainerObject, FieldValue, ScalarValue, WrappedValue,
};
pub use curie::{expand_curie, CurieError, PrefixMap};
pub use expand::{
    expand_enum, write_expanded_schema, ExpandError, ExpansionResult, LocalProvider,
    OntologyGraph, OntologyProvider,
};
pub use herd::{FileRef, FlatRow, FlatTable, HerdError, HerdStore, KeySelection};
pub use remote::{RemoteProvider, Transport, TransportResponse, UrlTemplates};
pub use sheets::{ingest_sheets, SchemaMeta, SheetError, SheetIngest};
pub use termset::{
    load_termset, parse_termset_schema, serialize_termset_schema, TermSet, TermSetError,
    TermSetRegistry, TermSetSchema,
};
