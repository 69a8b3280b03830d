//! Remote ontology provider: a generic REST descendants-query dialect with
//! pluggable URL templates and an on-disk cache of descendant sets.
//!
//! The dialect expects two endpoints:
//!
//! * descendants: JSON array of `{"id": ..., "label"?: ..., "description"?: ...}`
//!   objects, the full transitive set for one relationship type;
//! * node info: one such object, 404 when the node does not exist.
//!
//! A 404 from the descendants endpoint means the ontology itself is
//! unknown. Service specifics (BioPortal, AberOWL, OLS) are configuration
//! through [`UrlTemplates`], not code.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::Deserialize;

use crate::expand::{ExpandError, OntologyProvider};

/// Percent-encoding set keeping only unreserved characters.
const COMPONENT: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~');

fn encode(part: &str) -> String {
    utf8_percent_encode(part, COMPONENT).to_string()
}

/// Raw HTTP response as seen by the provider.
#[derive(Debug, Clone)]
pub struct TransportResponse {
    pub status: u16,
    pub body: String,
}

/// Minimal HTTP GET abstraction so tests can inject recorded responses.
pub trait Transport: Send + Sync {
    /// Errors represent transport-level failures (DNS, connect, read);
    /// HTTP error statuses are returned as responses.
    fn fetch(&self, url: &str) -> Result<TransportResponse, String>;
}

/// URL templates with `{base}`, `{ontology}`, `{node}` and
/// `{relationship}` placeholders.
#[derive(Debug, Clone)]
pub struct UrlTemplates {
    pub descendants: String,
    pub node_info: String,
}

impl Default for UrlTemplates {
    fn default() -> Self {
        Self {
            descendants: "{base}/ontologies/{ontology}/nodes/{node}/descendants?relationship={relationship}"
                .to_string(),
            node_info: "{base}/ontologies/{ontology}/nodes/{node}".to_string(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct NodePayload {
    id: String,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    description: Option<String>,
}

#[derive(Debug, Clone, Default)]
struct NodeMeta {
    exists: bool,
    label: Option<String>,
    description: Option<String>,
}

/// Ontology provider that queries a REST service lazily and caches
/// descendant sets on disk, one file per (base URL, ontology, node,
/// relationship) key holding the sorted node-id list.
pub struct RemoteProvider {
    base_url: String,
    templates: UrlTemplates,
    transport: Box<dyn Transport>,
    cache_dir: PathBuf,
    meta: Mutex<HashMap<(String, String), NodeMeta>>,
}

impl RemoteProvider {
    pub fn new(
        base_url: &str,
        templates: UrlTemplates,
        transport: Box<dyn Transport>,
        cache_dir: &Path,
    ) -> Result<Self, ExpandError> {
        std::fs::create_dir_all(cache_dir).map_err(|source| ExpandError::Cache {
            path: cache_dir.display().to_string(),
            source,
        })?;
        Ok(Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            templates,
            transport,
            cache_dir: cache_dir.to_path_buf(),
            meta: Mutex::new(HashMap::new()),
        })
    }

    fn render(&self, template: &str, ontology: &str, node: &str, relationship: &str) -> String {
        template
            .replace("{base}", &self.base_url)
            .replace("{ontology}", &encode(ontology))
            .replace("{node}", &encode(node))
            .replace("{relationship}", &encode(relationship))
    }

    fn cache_file(&self, ontology: &str, node: &str, relationship: &str) -> PathBuf {
        let name = format!(
            "{}__{}__{}__{}.txt",
            encode(&self.base_url),
            encode(ontology),
            encode(node),
            encode(relationship)
        );
        self.cache_dir.join(name)
    }

    fn fetch_checked(&self, url: &str, ontology: &str) -> Result<Option<String>, ExpandError> {
        let response = self
            .transport
            .fetch(url)
            .map_err(|detail| ExpandError::Transport { url: url.to_string(), detail })?;
        match response.status {
            200..=299 => Ok(Some(response.body)),
            404 => {
                // Mapped by the caller: unknown ontology for descendant
                // queries, missing node for node-info queries.
                let _ = ontology;
                Ok(None)
            }
            status => Err(ExpandError::Status { url: url.to_string(), status }),
        }
    }

    fn remember(&self, ontology: &str, payload: &NodePayload) {
        let mut meta = self.meta.lock().expect("meta lock");
        let entry = meta
            .entry((ontology.to_string(), payload.id.clone()))
            .or_default();
        entry.exists = true;
        if entry.label.is_none() {
            entry.label = payload.label.clone();
        }
        if entry.description.is_none() {
            entry.description = payload.description.clone();
        }
    }
}

impl OntologyProvider for RemoteProvider {
    fn descendants(
        &self,
        ontology: &str,
        node: &str,
        relationship: &str,
    ) -> Result<BTreeSet<String>, ExpandError> {
        let cache_file = self.cache_file(ontology, node, relationship);
        if cache_file.exists() {
            let text = std::fs::read_to_string(&cache_file).map_err(|source| {
                ExpandError::Cache { path: cache_file.display().to_string(), source }
            })?;
            return Ok(text.lines().filter(|l| !l.is_empty()).map(str::to_string).collect());
        }

        let url = self.render(&self.templates.descendants, ontology, node, relationship);
        let body = self.fetch_checked(&url, ontology)?.ok_or_else(|| {
            ExpandError::UnknownOntology { ontology: ontology.to_string(), detail: url.clone() }
        })?;
        let payloads: Vec<NodePayload> =
            serde_json::from_str(&body).map_err(|e| ExpandError::Payload {
                url: url.clone(),
                detail: e.to_string(),
            })?;

        let mut ids = BTreeSet::new();
        for payload in &payloads {
            self.remember(ontology, payload);
            ids.insert(payload.id.clone());
        }

        let mut content = ids.iter().cloned().collect::<Vec<_>>().join("\n");
        if !content.is_empty() {
            content.push('\n');
        }
        let tmp = cache_file.with_extension("txt.tmp");
        std::fs::write(&tmp, content).map_err(|source| ExpandError::Cache {
            path: tmp.display().to_string(),
            source,
        })?;
        std::fs::rename(&tmp, &cache_file).map_err(|source| ExpandError::Cache {
            path: cache_file.display().to_string(),
            source,
        })?;
        Ok(ids)
    }

    fn contains_node(&self, ontology: &str, node: &str) -> Result<bool, ExpandError> {
        if let Some(meta) = self
            .meta
            .lock()
            .expect("meta lock")
            .get(&(ontology.to_string(), node.to_string()))
        {
            return Ok(meta.exists);
        }
        let url = self.render(&self.templates.node_info, ontology, node, "");
        match self.fetch_checked(&url, ontology)? {
            Some(body) => {
                let payload: NodePayload =
                    serde_json::from_str(&body).map_err(|e| ExpandError::Payload {
                        url: url.clone(),
                        detail: e.to_string(),
                    })?;
                self.remember(ontology, &payload);
                Ok(true)
            }
            None => {
                self.meta
                    .lock()
                    .expect("meta lock")
                    .insert((ontology.to_string(), node.to_string()), NodeMeta::default());
                Ok(false)
            }
        }
    }

    fn node_label(&self, ontology: &str, node: &str) -> Option<String> {
        self.meta
            .lock()
            .expect("meta lock")
            .get(&(ontology.to_string(), node.to_string()))
            .and_then(|m| m.label.clone())
    }

    fn node_description(&self, ontology: &str, node: &str) -> Option<String> {
        self.meta
            .lock()
            .expect("meta lock")
            .get(&(ontology.to_string(), node.to_string()))
            .and_then(|m| m.description.clone())
    }

    fn source_description(&self, ontology: &str) -> String {
        format!("remote:{}/{}", self.base_url, ontology)
    }
}

/// Transport backed by a blocking HTTP client.
#[cfg(feature = "http")]
pub struct HttpTransport {
    agent: ureq::Agent,
}

#[cfg(feature = "http")]
impl HttpTransport {
    pub fn new() -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(std::time::Duration::from_secs(30)))
            .build();
        Self { agent: ureq::Agent::new_with_config(config) }
    }
}

#[cfg(feature = "http")]
impl Default for HttpTransport {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(feature = "http")]
impl Transport for HttpTransport {
    fn fetch(&self, url: &str) -> Result<TransportResponse, String> {
        let mut response = self.agent.get(url).call().map_err(|e| e.to_string())?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| e.to_string())?;
        Ok(TransportResponse { status, body })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Recorded {
        responses: HashMap<String, TransportResponse>,
        calls: std::sync::Arc<AtomicUsize>,
    }

    impl Recorded {
        fn new(entries: &[(&str, u16, &str)]) -> Self {
            let responses = entries
                .iter()
                .map(|(url, status, body)| {
                    (url.to_string(), TransportResponse { status: *status, body: body.to_string() })
                })
                .collect();
            Self { responses, calls: std::sync::Arc::new(AtomicUsize::new(0)) }
        }

        fn call_counter(&self) -> std::sync::Arc<AtomicUsize> {
            std::sync::Arc::clone(&self.calls)
        }
    }

    impl Transport for Recorded {
        fn fetch(&self, url: &str) -> Result<TransportResponse, String> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.responses
                .get(url)
                .cloned()
                .ok_or_else(|| format!("no recorded response for {url}"))
        }
    }

    const BASE: &str = "https://ontology.example.org";

    fn descendants_url(node: &str) -> String {
        format!(
            "{BASE}/ontologies/obo%3Acl/nodes/{}/descendants?relationship=rdfs%3AsubClassOf",
            encode(node)
        )
    }

    const CL_DESCENDANTS: &str = r#"[
        {"id": "CL:0000705", "label": "R6 photoreceptor cell"},
        {"id": "CL:4023108", "label": "oxytocin-secreting magnocellular cell",
         "description": "A magnocellular neurosecretory cell that is capable of producing and secreting oxytocin."},
        {"id": "CL:0004240", "label": "WF1 amacrine cell"},
        {"id": "CL:0000099", "label": "interneuron"}
    ]"#;

    #[test]
    fn fetches_descendants_from_recorded_response() {
        let dir = tempfile::tempdir().unwrap();
        let transport = Recorded::new(&[(&descendants_url("CL:0000540"), 200, CL_DESCENDANTS)]);
        let provider =
            RemoteProvider::new(BASE, UrlTemplates::default(), Box::new(transport), dir.path())
                .unwrap();
        let set = provider
            .descendants("obo:cl", "CL:0000540", "rdfs:subClassOf")
            .unwrap();
        for id in ["CL:0000705", "CL:4023108", "CL:0004240"] {
            assert!(set.contains(id), "missing {id}");
        }
        assert_eq!(
            provider.node_label("obo:cl", "CL:0000705").as_deref(),
            Some("R6 photoreceptor cell")
        );
    }

    #[test]
    fn cache_hit_needs_no_network() {
        let dir = tempfile::tempdir().unwrap();
        {
            let transport =
                Recorded::new(&[(&descendants_url("CL:0000540"), 200, CL_DESCENDANTS)]);
            let provider = RemoteProvider::new(
                BASE,
                UrlTemplates::default(),
                Box::new(transport),
                dir.path(),
            )
            .unwrap();
            provider
                .descendants("obo:cl", "CL:0000540", "rdfs:subClassOf")
                .unwrap();
        }
        // Fresh provider, empty transport: everything must come from disk.
        let transport = Recorded::new(&[]);
        let calls = transport.call_counter();
        let provider =
            RemoteProvider::new(BASE, UrlTemplates::default(), Box::new(transport), dir.path())
                .unwrap();
        let set = provider
            .descendants("obo:cl", "CL:0000540", "rdfs:subClassOf")
            .unwrap();
        assert_eq!(set.len(), 4);
        assert_eq!(calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn not_found_is_unknown_ontology() {
        let dir = tempfile::tempdir().unwrap();
        let transport = Recorded::new(&[(&descendants_url("CL:0000540"), 404, "")]);
        let provider =
            RemoteProvider::new(BASE, UrlTemplates::default(), Box::new(transport), dir.path())
                .unwrap();
        let err = provider
            .descendants("obo:cl", "CL:0000540", "rdfs:subClassOf")
            .unwrap_err();
        assert!(matches!(err, ExpandError::UnknownOntology { .. }), "{err}");
    }

    #[test]
    fn malformed_payload_carries_url() {
        let dir = tempfile::tempdir().unwrap();
        let url = descendants_url("CL:0000540");
        let transport = Recorded::new(&[(&url, 200, "{не json array}")]);
        let provider =
            RemoteProvider::new(BASE, UrlTemplates::default(), Box::new(transport), dir.path())
                .unwrap();
        let err = provider
            .descendants("obo:cl", "CL:0000540", "rdfs:subClassOf")
            .unwrap_err();
        match err {
            ExpandError::Payload { url: got, .. } => assert_eq!(got, url),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn transport_failure_carries_url() {
        let dir = tempfile::tempdir().unwrap();
        let transport = Recorded::new(&[]);
        let provider =
            RemoteProvider::new(BASE, UrlTemplates::default(), Box::new(transport), dir.path())
                .unwrap();
        let err = provider
            .descendants("obo:cl", "CL:0000540", "rdfs:subClassOf")
            .unwrap_err();
        assert!(matches!(err, ExpandError::Transport { .. }));
    }

    #[test]
    fn contains_node_uses_node_info_endpoint() {
        let dir = tempfile::tempdir().unwrap();
        let info_url = format!("{BASE}/ontologies/obo%3Acl/nodes/CL%3A0000540");
        let missing_url = format!("{BASE}/ontologies/obo%3Acl/nodes/CL%3A9999999");
        let transport = Recorded::new(&[
            (&info_url, 200, r#"{"id": "CL:0000540", "label": "neuron"}"#),
            (&missing_url, 404, ""),
        ]);
        let provider =
            RemoteProvider::new(BASE, UrlTemplates::default(), Box::new(transport), dir.path())
                .unwrap();
        assert!(provider.contains_node("obo:cl", "CL:0000540").unwrap());
        assert!(!provider.contains_node("obo:cl", "CL:9999999").unwrap());
        assert_eq!(provider.node_label("obo:cl", "CL:0000540").as_deref(), Some("neuron"));
        // second lookup is memoized; the recorded transport would fail on
        // a repeat call only if the URL were refetched with a miss, so
        // just assert the answer is stable
        assert!(provider.contains_node("obo:cl", "CL:0000540").unwrap());
    }

    #[test]
    fn expansion_through_remote_provider() {
        use crate::expand::expand_enum;
        use crate::termset::DynamicSpec;

        let dir = tempfile::tempdir().unwrap();
        let info_url = format!("{BASE}/ontologies/obo%3Acl/nodes/CL%3A0000540");
        let mut entries = vec![
            (info_url.clone(), 200u16, r#"{"id": "CL:0000540", "label": "neuron"}"#.to_string()),
            (descendants_url("CL:0000540"), 200, CL_DESCENDANTS.to_string()),
        ];
        // descendant queries for each discovered node return empty sets
        for node in ["CL:0000705", "CL:4023108", "CL:0004240", "CL:0000099"] {
            entries.push((descendants_url(node), 200, "[]".to_string()));
        }
        let refs: Vec<(&str, u16, &str)> =
            entries.iter().map(|(u, s, b)| (u.as_str(), *s, b.as_str())).collect();
        let transport = Recorded::new(&refs);
        let provider =
            RemoteProvider::new(BASE, UrlTemplates::default(), Box::new(transport), dir.path())
                .unwrap();
        let spec = DynamicSpec {
            source_ontology: "obo:cl".to_string(),
            source_nodes: vec!["CL:0000540".to_string()],
            include_self: false,
            relationship_types: vec!["rdfs:subClassOf".to_string()],
        };
        let result = expand_enum("NeuronTypeEnum", &spec, &provider).unwrap();
        assert_eq!(result.terms.len(), 4);
        assert_eq!(
            result.terms["CL:0000705"].title.as_deref(),
            Some("R6 photoreceptor cell")
        );
        assert_eq!(result.source_snapshot, format!("remote:{BASE}/obo:cl"));
    }
}
