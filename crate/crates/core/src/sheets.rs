//! Build a term set schema from spreadsheet exports: tab-separated files,
//! one enumeration per file, with a header row mapping columns to term
//! fields.

use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use thiserror::Error;

use crate::curie::{expand_curie, is_absolute_uri, CurieError, PrefixMap};
use crate::termset::{Enumeration, TermDefinition, TermSetSchema};

#[derive(Debug, Error)]
pub enum SheetError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: sheet has no header row")]
    MissingHeader { path: String },
    #[error("{path}: missing required column {column:?} (accepted names: {accepted})")]
    MissingColumn {
        path: String,
        column: &'static str,
        accepted: &'static str,
    },
    #[error("{path}:{line}: expected {expected} tab-separated cells, found {found}")]
    BadRow {
        path: String,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{path}:{line}: empty term key")]
    EmptyKey { path: String, line: usize },
    #[error("{path}:{line}: duplicate term key {key:?}")]
    DuplicateKey { path: String, line: usize, key: String },
    #[error("{path}:{line}: empty meaning cell in column {column:?}")]
    EmptyMeaning { path: String, line: usize, column: String },
    #[error("{path}:{line}: column {column:?}: {source}")]
    UnresolvablePrefix {
        path: String,
        line: usize,
        column: String,
        source: CurieError,
    },
    #[error("{path}:{line}: enum column names {found:?} but earlier rows said {expected:?}")]
    EnumNameConflict {
        path: String,
        line: usize,
        expected: String,
        found: String,
    },
    #[error("two sheets produce the same enumeration name {name:?}")]
    DuplicateEnum { name: String },
    #[error("{path}: cannot derive an enumeration name from the file name")]
    NoEnumName { path: String },
}

/// Schema-level metadata the sheets themselves do not carry.
#[derive(Debug, Clone)]
pub struct SchemaMeta {
    pub id: String,
    pub name: String,
    pub version: Option<String>,
    pub prefixes: PrefixMap,
}

#[derive(Debug)]
pub struct SheetIngest {
    pub schema: TermSetSchema,
    pub warnings: Vec<String>,
}

const KEY_ALIASES: &[&str] = &["permissible_value", "key", "term"];
const MEANING_ALIASES: &[&str] = &["meaning", "curie", "id"];
const ENUM_ALIASES: &[&str] = &["enum", "enum_name"];

struct Columns {
    key: usize,
    meaning: usize,
    description: Option<usize>,
    title: Option<usize>,
    enum_name: Option<usize>,
    width: usize,
}

fn resolve_columns(path: &str, header: &str) -> Result<Columns, SheetError> {
    let names: Vec<String> = header.split('\t').map(|c| c.trim().to_lowercase()).collect();
    let find = |aliases: &[&str]| names.iter().position(|n| aliases.contains(&n.as_str()));
    let key = find(KEY_ALIASES).ok_or(SheetError::MissingColumn {
        path: path.to_string(),
        column: "key",
        accepted: "permissible_value, key, term",
    })?;
    let meaning = find(MEANING_ALIASES).ok_or(SheetError::MissingColumn {
        path: path.to_string(),
        column: "meaning",
        accepted: "meaning, curie, id",
    })?;
    Ok(Columns {
        key,
        meaning,
        description: find(&["description"]),
        title: find(&["title"]),
        enum_name: find(ENUM_ALIASES),
        width: names.len(),
    })
}

/// Ingest one or more sheet files into a schema. Each file becomes one
/// enumeration named after the file stem, unless an `enum` column
/// overrides it; every meaning must be a compact identifier resolvable
/// under `meta.prefixes`, or an absolute URI.
pub fn ingest_sheets(paths: &[PathBuf], meta: SchemaMeta) -> Result<SheetIngest, SheetError> {
    let mut enums: IndexMap<String, Enumeration> = IndexMap::new();
    let mut warnings = Vec::new();

    for path in paths {
        let text = std::fs::read_to_string(path).map_err(|source| SheetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let (name, enumeration, mut sheet_warnings) =
            ingest_sheet_text(&text, path, &meta.prefixes)?;
        warnings.append(&mut sheet_warnings);
        if enums.contains_key(&name) {
            return Err(SheetError::DuplicateEnum { name });
        }
        enums.insert(name, enumeration);
    }

    Ok(SheetIngest {
        schema: TermSetSchema {
            id: meta.id,
            name: meta.name,
            version: meta.version,
            description: None,
            prefixes: meta.prefixes,
            imports: Vec::new(),
            default_range: None,
            extras: IndexMap::new(),
            enums,
        },
        warnings,
    })
}

fn ingest_sheet_text(
    text: &str,
    path: &Path,
    prefixes: &PrefixMap,
) -> Result<(String, Enumeration, Vec<String>), SheetError> {
    let display = path.display().to_string();
    let mut lines = text.lines().enumerate();
    let header = match lines.next() {
        Some((_, header)) if !header.trim().is_empty() => header,
        _ => return Err(SheetError::MissingHeader { path: display }),
    };
    let columns = resolve_columns(&display, header)?;

    let stem_name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .ok_or_else(|| SheetError::NoEnumName { path: display.clone() })?;

    let mut enum_name: Option<String> = None;
    let mut values: IndexMap<String, TermDefinition> = IndexMap::new();
    let mut warnings = Vec::new();

    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cells.len() != columns.width {
            return Err(SheetError::BadRow {
                path: display.clone(),
                line: line_no,
                expected: columns.width,
                found: cells.len(),
            });
        }

        let key = cells[columns.key].to_string();
        if key.is_empty() {
            return Err(SheetError::EmptyKey { path: display.clone(), line: line_no });
        }
        if values.contains_key(&key) {
            return Err(SheetError::DuplicateKey { path: display.clone(), line: line_no, key });
        }

        let meaning = cells[columns.meaning].to_string();
        if meaning.is_empty() {
            return Err(SheetError::EmptyMeaning {
                path: display.clone(),
                line: line_no,
                column: header_name(header, columns.meaning),
            });
        }
        if !is_absolute_uri(&meaning) {
            expand_curie(&meaning, prefixes).map_err(|source| SheetError::UnresolvablePrefix {
                path: display.clone(),
                line: line_no,
                column: header_name(header, columns.meaning),
                source,
            })?;
        }

        if let Some(col) = columns.enum_name {
            let found = cells[col];
            if !found.is_empty() {
                match &enum_name {
                    None => enum_name = Some(found.to_string()),
                    Some(expected) if expected != found => {
                        return Err(SheetError::EnumNameConflict {
                            path: display.clone(),
                            line: line_no,
                            expected: expected.clone(),
                            found: found.to_string(),
                        })
                    }
                    Some(_) => {}
                }
            }
        }

        let cell_opt = |col: Option<usize>| {
            col.map(|c| cells[c]).filter(|v| !v.is_empty()).map(str::to_string)
        };
        values.insert(
            key.clone(),
            TermDefinition {
                key,
                meaning,
                description: cell_opt(columns.description),
                title: cell_opt(columns.title),
                text: None,
            },
        );
    }

    let name = enum_name.unwrap_or(stem_name);
    if values.is_empty() {
        warnings.push(format!("sheet {display} defines no terms"));
    }
    Ok((
        name.clone(),
        Enumeration { name, description: None, permissible_values: values, dynamic: None },
        warnings,
    ))
}

fn header_name(header: &str, index: usize) -> String {
    header
        .split('\t')
        .nth(index)
        .map(|s| s.trim().to_string())
        .unwrap_or_default()
}
