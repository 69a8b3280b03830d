//! Compact identifier (CURIE) handling: `PREFIX:LOCALID` splitting and
//! expansion to absolute URIs through a prefix map.

use indexmap::IndexMap;
use thiserror::Error;

/// Map from prefix name to URI prefix, in declaration order.
pub type PrefixMap = IndexMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CurieError {
    #[error("malformed compact identifier {id:?}: {reason}")]
    Malformed { id: String, reason: String },
    #[error("unknown prefix {prefix:?} in compact identifier {id:?}")]
    UnknownPrefix { id: String, prefix: String },
}

/// Returns true when `id` looks like an absolute URI rather than a CURIE.
pub fn is_absolute_uri(id: &str) -> bool {
    id.contains("://")
}

/// Split a compact identifier into `(prefix, local_id)`.
///
/// Exactly one colon must separate a nonempty prefix from a nonempty
/// local id.
pub fn split_compact_id(id: &str) -> Result<(&str, &str), CurieError> {
    let mut parts = id.splitn(2, ':');
    let prefix = parts.next().unwrap_or("");
    let local = match parts.next() {
        Some(local) => local,
        None => {
            return Err(CurieError::Malformed {
                id: id.to_string(),
                reason: "missing ':' separator".to_string(),
            })
        }
    };
    if prefix.is_empty() {
        return Err(CurieError::Malformed {
            id: id.to_string(),
            reason: "empty prefix".to_string(),
        });
    }
    if local.is_empty() {
        return Err(CurieError::Malformed {
            id: id.to_string(),
            reason: "empty local id".to_string(),
        });
    }
    if local.contains(':') {
        return Err(CurieError::Malformed {
            id: id.to_string(),
            reason: "more than one ':' separator".to_string(),
        });
    }
    Ok((prefix, local))
}

/// Expand `PREFIX:LOCALID` to an absolute URI by concatenating the
/// prefix's URI string with the local id.
pub fn expand_curie(id: &str, prefixes: &PrefixMap) -> Result<String, CurieError> {
    let (prefix, local) = split_compact_id(id)?;
    let base = prefixes.get(prefix).ok_or_else(|| CurieError::UnknownPrefix {
        id: id.to_string(),
        prefix: prefix.to_string(),
    })?;
    Ok(format!("{base}{local}"))
}
