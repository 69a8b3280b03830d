//! Zipped-TSV persistence for stores: one TSV member per table, fixed
//! member names and column order, rows sorted by row index. Writing is
//! byte-deterministic (fixed timestamps, deflate); reading accepts stored
//! or deflated members and re-checks every store invariant.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipArchive, ZipWriter};

use crate::herd::{
    EntityKeyLink, EntityRecord, FileRecord, HerdStore, KeyRecord, ObjectKeyLink, ObjectRecord,
};

pub const MEMBER_FILES: &str = "files.tsv";
pub const MEMBER_OBJECTS: &str = "objects.tsv";
pub const MEMBER_KEYS: &str = "keys.tsv";
pub const MEMBER_ENTITIES: &str = "entities.tsv";
pub const MEMBER_OBJECT_KEYS: &str = "object_keys.tsv";
pub const MEMBER_ENTITY_KEYS: &str = "entity_keys.tsv";

const HEADER_FILES: &str = "files_idx\tfile_object_id";
const HEADER_OBJECTS: &str = "objects_idx\tfiles_idx\tobject_id\tobject_type\trelative_path\tfield";
const HEADER_KEYS: &str = "keys_idx\tkey";
const HEADER_ENTITIES: &str = "entities_idx\tentity_id\tentity_uri";
const HEADER_OBJECT_KEYS: &str = "objects_idx\tkeys_idx";
const HEADER_ENTITY_KEYS: &str = "entities_idx\tkeys_idx";

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Zip { path: String, source: zip::result::ZipError },
    #[error("archive {path} is missing member {member:?}")]
    MissingMember { path: String, member: String },
    #[error("{member}:{line}: {reason}")]
    MalformedRow { member: String, line: usize, reason: String },
    #[error("{member} row {row}: column {column:?} contains a tab or line break")]
    UnwritableCell { member: String, row: usize, column: &'static str },
    #[error("integrity check failed on load: {first}{and_more}")]
    Integrity { first: String, and_more: String },
}

fn check_cell(
    member: &str,
    row: usize,
    column: &'static str,
    value: &str,
) -> Result<(), ArchiveError> {
    if value.contains(['\t', '\n', '\r']) {
        return Err(ArchiveError::UnwritableCell { member: member.to_string(), row, column });
    }
    Ok(())
}

fn render_tables(store: &HerdStore) -> Result<Vec<(&'static str, String)>, ArchiveError> {
    let mut files = String::from(HEADER_FILES);
    files.push('\n');
    for rec in store.files() {
        check_cell(MEMBER_FILES, rec.files_idx, "file_object_id", &rec.file_object_id)?;
        files.push_str(&format!("{}\t{}\n", rec.files_idx, rec.file_object_id));
    }

    let mut objects = String::from(HEADER_OBJECTS);
    objects.push('\n');
    for rec in store.objects() {
        check_cell(MEMBER_OBJECTS, rec.objects_idx, "object_id", &rec.object_id)?;
        check_cell(MEMBER_OBJECTS, rec.objects_idx, "object_type", &rec.object_type)?;
        check_cell(MEMBER_OBJECTS, rec.objects_idx, "relative_path", &rec.relative_path)?;
        check_cell(MEMBER_OBJECTS, rec.objects_idx, "field", &rec.field)?;
        objects.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            rec.objects_idx,
            rec.files_idx,
            rec.object_id,
            rec.object_type,
            rec.relative_path,
            rec.field
        ));
    }

    let mut keys = String::from(HEADER_KEYS);
    keys.push('\n');
    for rec in store.keys() {
        check_cell(MEMBER_KEYS, rec.keys_idx, "key", &rec.key)?;
        keys.push_str(&format!("{}\t{}\n", rec.keys_idx, rec.key));
    }

    let mut entities = String::from(HEADER_ENTITIES);
    entities.push('\n');
    for rec in store.entities() {
        check_cell(MEMBER_ENTITIES, rec.entities_idx, "entity_id", &rec.entity_id)?;
        check_cell(MEMBER_ENTITIES, rec.entities_idx, "entity_uri", &rec.entity_uri)?;
        entities.push_str(&format!(
            "{}\t{}\t{}\n",
            rec.entities_idx, rec.entity_id, rec.entity_uri
        ));
    }

    let mut object_keys = String::from(HEADER_OBJECT_KEYS);
    object_keys.push('\n');
    for link in store.object_keys() {
        object_keys.push_str(&format!("{}\t{}\n", link.objects_idx, link.keys_idx));
    }

    let mut entity_keys = String::from(HEADER_ENTITY_KEYS);
    entity_keys.push('\n');
    for link in store.entity_keys() {
        entity_keys.push_str(&format!("{}\t{}\n", link.entities_idx, link.keys_idx));
    }

    Ok(vec![
        (MEMBER_FILES, files),
        (MEMBER_OBJECTS, objects),
        (MEMBER_KEYS, keys),
        (MEMBER_ENTITIES, entities),
        (MEMBER_OBJECT_KEYS, object_keys),
        (MEMBER_ENTITY_KEYS, entity_keys),
    ])
}

/// Write the store as a zip of six TSV members. Output bytes are
/// identical across runs for the same store.
pub fn save_zip(store: &HerdStore, path: &Path) -> Result<(), ArchiveError> {
    let members = render_tables(store)?;
    let file = File::create(path).map_err(|source| ArchiveError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut writer = ZipWriter::new(file);
    let options = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Deflated)
        .last_modified_time(DateTime::default())
        .unix_permissions(0o644);
    for (name, content) in members {
        writer
            .start_file(name, options)
            .and_then(|()| writer.write_all(content.as_bytes()).map_err(zip::result::ZipError::Io))
            .map_err(|source| ArchiveError::Zip { path: path.display().to_string(), source })?;
    }
    writer
        .finish()
        .map_err(|source| ArchiveError::Zip { path: path.display().to_string(), source })?;
    Ok(())
}

struct MemberReader<'a> {
    member: &'a str,
    lines: Vec<String>,
}

impl<'a> MemberReader<'a> {
    fn read(
        archive: &mut ZipArchive<File>,
        path: &Path,
        member: &'a str,
        header: &str,
    ) -> Result<Self, ArchiveError> {
        let mut entry = match archive.by_name(member) {
            Ok(entry) => entry,
            Err(zip::result::ZipError::FileNotFound) => {
                return Err(ArchiveError::MissingMember {
                    path: path.display().to_string(),
                    member: member.to_string(),
                })
            }
            Err(source) => {
                return Err(ArchiveError::Zip { path: path.display().to_string(), source })
            }
        };
        let mut text = String::new();
        entry.read_to_string(&mut text).map_err(|source| ArchiveError::Io {
            path: format!("{}!{member}", path.display()),
            source,
        })?;
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        if lines.is_empty() {
            return Err(ArchiveError::MalformedRow {
                member: member.to_string(),
                line: 1,
                reason: "missing header row".to_string(),
            });
        }
        let head = lines.remove(0);
        if head != header {
            return Err(ArchiveError::MalformedRow {
                member: member.to_string(),
                line: 1,
                reason: format!("expected header {header:?}, found {head:?}"),
            });
        }
        Ok(Self { member, lines })
    }

    fn rows(&self, width: usize) -> Result<Vec<(usize, Vec<&str>)>, ArchiveError> {
        let mut out = Vec::with_capacity(self.lines.len());
        for (i, line) in self.lines.iter().enumerate() {
            let line_no = i + 2; // header is line 1
            let cells: Vec<&str> = line.split('\t').collect();
            if cells.len() != width {
                return Err(ArchiveError::MalformedRow {
                    member: self.member.to_string(),
                    line: line_no,
                    reason: format!("expected {width} cells, found {}", cells.len()),
                });
            }
            out.push((line_no, cells));
        }
        Ok(out)
    }

    fn parse_idx(&self, line: usize, cell: &str, column: &str) -> Result<usize, ArchiveError> {
        cell.parse::<usize>().map_err(|_| ArchiveError::MalformedRow {
            member: self.member.to_string(),
            line,
            reason: format!("column {column:?}: {cell:?} is not a row index"),
        })
    }
}

/// Load a store from a zip written by [`save_zip`] (or edited by hand, in
/// which case every invariant is re-checked and violations are reported
/// with their table and row).
pub fn load_zip(path: &Path) -> Result<HerdStore, ArchiveError> {
    let file = File::open(path).map_err(|source| ArchiveError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut archive = ZipArchive::new(file).map_err(|source| ArchiveError::Zip {
        path: path.display().to_string(),
        source,
    })?;

    let reader = MemberReader::read(&mut archive, path, MEMBER_FILES, HEADER_FILES)?;
    let mut files = Vec::new();
    for (line, cells) in reader.rows(2)? {
        files.push(FileRecord {
            files_idx: reader.parse_idx(line, cells[0], "files_idx")?,
            file_object_id: cells[1].to_string(),
        });
    }

    let reader = MemberReader::read(&mut archive, path, MEMBER_OBJECTS, HEADER_OBJECTS)?;
    let mut objects = Vec::new();
    for (line, cells) in reader.rows(6)? {
        objects.push(ObjectRecord {
            objects_idx: reader.parse_idx(line, cells[0], "objects_idx")?,
            files_idx: reader.parse_idx(line, cells[1], "files_idx")?,
            object_id: cells[2].to_string(),
            object_type: cells[3].to_string(),
            relative_path: cells[4].to_string(),
            field: cells[5].to_string(),
        });
    }

    let reader = MemberReader::read(&mut archive, path, MEMBER_KEYS, HEADER_KEYS)?;
    let mut keys = Vec::new();
    for (line, cells) in reader.rows(2)? {
        keys.push(KeyRecord {
            keys_idx: reader.parse_idx(line, cells[0], "keys_idx")?,
            key: cells[1].to_string(),
        });
    }

    let reader = MemberReader::read(&mut archive, path, MEMBER_ENTITIES, HEADER_ENTITIES)?;
    let mut entities = Vec::new();
    for (line, cells) in reader.rows(3)? {
        entities.push(EntityRecord {
            entities_idx: reader.parse_idx(line, cells[0], "entities_idx")?,
            entity_id: cells[1].to_string(),
            entity_uri: cells[2].to_string(),
        });
    }

    let reader = MemberReader::read(&mut archive, path, MEMBER_OBJECT_KEYS, HEADER_OBJECT_KEYS)?;
    let mut object_keys = Vec::new();
    for (line, cells) in reader.rows(2)? {
        object_keys.push(ObjectKeyLink {
            objects_idx: reader.parse_idx(line, cells[0], "objects_idx")?,
            keys_idx: reader.parse_idx(line, cells[1], "keys_idx")?,
        });
    }

    let reader = MemberReader::read(&mut archive, path, MEMBER_ENTITY_KEYS, HEADER_ENTITY_KEYS)?;
    let mut entity_keys = Vec::new();
    for (line, cells) in reader.rows(2)? {
        entity_keys.push(EntityKeyLink {
            entities_idx: reader.parse_idx(line, cells[0], "entities_idx")?,
            keys_idx: reader.parse_idx(line, cells[1], "keys_idx")?,
        });
    }

    let store = HerdStore::from_tables(files, objects, keys, entities, object_keys, entity_keys);
    let violations = store.audit();
    if let Some(first) = violations.first() {
        let and_more = match violations.len() {
            1 => String::new(),
            n => format!(" (and {} more)", n - 1),
        };
        return Err(ArchiveError::Integrity { first: first.to_string(), and_more });
    }
    Ok(store)
}
