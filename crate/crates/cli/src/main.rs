//! Command-line front end: expand vocabularies, validate values, annotate
//! container files, and query, merge, or export stores.
//!
//! Exit codes: 0 success, 1 validation findings, 2 usage or runtime error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use termlink::container::load_container_file;
use termlink::expand::{expand_enum, write_expanded_schema, LocalProvider, OntologyProvider};
use termlink::herd::HerdStore;
use termlink::remote::{HttpTransport, RemoteProvider, UrlTemplates};
use termlink::sheets::{ingest_sheets, SchemaMeta};
use termlink::termset::{parse_termset_schema, serialize_termset_schema, TermSetRegistry};
use termlink::{load_zip, save_zip, PrefixMap, Workspace};

#[derive(Parser)]
#[command(name = "termlink", version, about = "Link data values to controlled vocabularies and ontology entities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expand a dynamic enumeration into explicit permissible values.
    Expand(ExpandArgs),
    /// Validate values against a term set.
    Validate(ValidateArgs),
    /// Scan a container file for wrapped values and record the links.
    Annotate(AnnotateArgs),
    /// Query a store by key, entity, or object.
    Query(QueryArgs),
    /// Merge two store archives into one.
    Merge(MergeArgs),
    /// Export a store as a single flat TSV.
    Export(ExportArgs),
    /// Build a term set schema from spreadsheet TSV exports.
    IngestSheet(IngestSheetArgs),
}

#[derive(Args)]
struct ExpandArgs {
    /// Schema holding the dynamic enumeration.
    #[arg(long)]
    schema: PathBuf,
    /// Enumeration to expand.
    #[arg(long = "enum")]
    enum_name: String,
    /// Ontology provider: local:SNAPSHOT.tsv or remote:BASE_URL.
    #[arg(long)]
    provider: String,
    /// Where to write the expanded schema.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// Term set schema file.
    #[arg(long)]
    termset: PathBuf,
    /// Enumeration name (defaults to the schema's only enumeration).
    #[arg(long = "enum")]
    enum_name: Option<String>,
    /// Values to validate.
    values: Vec<String>,
    /// Read values from a container file instead.
    #[arg(long, requires = "object_field")]
    file: Option<PathBuf>,
    /// Field address inside the container: OBJECT_ID/FIELD[/COMPONENT].
    #[arg(long, requires = "file")]
    object_field: Option<String>,
    /// Emit machine-readable JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct AnnotateArgs {
    /// Container file to scan.
    #[arg(long)]
    container: PathBuf,
    /// Store archive to create or extend.
    #[arg(long)]
    herd: PathBuf,
    /// Type configuration applied before scanning.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Emit machine-readable JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum QueryBy {
    Key,
    Entity,
    Object,
}

#[derive(Args)]
struct QueryArgs {
    /// Store archive to query.
    #[arg(long)]
    herd: PathBuf,
    /// Query dimension.
    #[arg(long, value_enum)]
    by: QueryBy,
    /// Key string, entity id, or object id.
    #[arg(long)]
    value: String,
    /// Emit machine-readable JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct MergeArgs {
    /// Exactly two store archives.
    #[arg(long, num_args = 2)]
    herd: Vec<PathBuf>,
    /// Where to write the merged archive.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    /// Store archive to export.
    #[arg(long)]
    herd: PathBuf,
    /// Where to write the flat TSV.
    #[arg(long)]
    flat: PathBuf,
}

#[derive(Args)]
struct IngestSheetArgs {
    /// One or more TSV sheets; each becomes one enumeration.
    #[arg(long, num_args = 1.., required = true)]
    sheets: Vec<PathBuf>,
    /// Schema id.
    #[arg(long)]
    id: String,
    /// Schema name.
    #[arg(long)]
    name: String,
    /// Schema version.
    #[arg(long)]
    version: Option<String>,
    /// Prefix declarations, PREFIX=URI (repeatable).
    #[arg(long = "prefix")]
    prefixes: Vec<String>,
    /// Where to write the generated schema.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Expand(args) => cmd_expand(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Annotate(args) => cmd_annotate(args),
        Command::Query(args) => cmd_query(args),
        Command::Merge(args) => cmd_merge(args),
        Command::Export(args) => cmd_export(args),
        Command::IngestSheet(args) => cmd_ingest_sheet(args),
    }
}

fn cache_dir() -> PathBuf {
    if let Ok(dir) = std::env::var("TERMLINK_CACHE_DIR") {
        return PathBuf::from(dir);
    }
    if let Ok(home) = std::env::var("HOME") {
        return Path::new(&home).join(".cache/termlink");
    }
    std::env::temp_dir().join("termlink-cache")
}

fn make_provider(spec: &str) -> Result<Box<dyn OntologyProvider>> {
    if let Some(path) = spec.strip_prefix("local:") {
        return Ok(Box::new(LocalProvider::from_path(Path::new(path))?));
    }
    if let Some(base_url) = spec.strip_prefix("remote:") {
        let provider = RemoteProvider::new(
            base_url,
            UrlTemplates::default(),
            Box::new(HttpTransport::new()),
            &cache_dir(),
        )?;
        return Ok(Box::new(provider));
    }
    bail!("provider must be local:SNAPSHOT.tsv or remote:BASE_URL, got {spec:?}");
}

fn cmd_expand(args: ExpandArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.schema)
        .with_context(|| format!("reading {}", args.schema.display()))?;
    let schema = parse_termset_schema(&text)?;
    let spec = schema
        .enumeration(&args.enum_name)
        .ok_or_else(|| anyhow!("schema defines no enumeration named {:?}", args.enum_name))?
        .dynamic
        .clone()
        .ok_or_else(|| anyhow!("enumeration {:?} has no dynamic specification", args.enum_name))?;

    let provider = make_provider(&args.provider)?;
    let result = expand_enum(&args.enum_name, &spec, provider.as_ref())?;
    let expanded = write_expanded_schema(&schema, &args.enum_name, &result)?;
    for warning in &expanded.warnings {
        eprintln!("warning: {warning}");
    }
    let out_text = serialize_termset_schema(&expanded.schema)?;
    std::fs::write(&args.out, out_text)
        .with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!(
        "expanded {:?} to {} terms from {} -> {}",
        args.enum_name,
        result.terms.len(),
        result.source_snapshot,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(args: ValidateArgs) -> Result<ExitCode> {
    let mut registry = TermSetRegistry::new();
    let reference = args.termset.display().to_string();
    let termset = registry.load(Path::new(""), &reference, args.enum_name.as_deref())?;

    let values: Vec<String> = match (&args.file, &args.object_field) {
        (Some(file), Some(address)) => {
            let container = load_container_file(file, &mut registry)?;
            let (object_id, field_name, component) = parse_field_address(address)?;
            let object = container
                .find_object(object_id)
                .ok_or_else(|| anyhow!("object {object_id:?} not found in {}", file.display()))?;
            let value = object
                .field(field_name)
                .ok_or_else(|| anyhow!("field {field_name:?} absent from object {object_id:?}"))?;
            value.string_values(component)?
        }
        _ => args.values.clone(),
    };
    if values.is_empty() {
        bail!("no values to validate: pass VALUES or --file with --object-field");
    }

    let outcome = termset.validate_batch(values.iter());
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "termset": termset.identity(),
                "valid": outcome.valid,
                "invalid": outcome.invalid,
            }))?
        );
    } else {
        for value in &outcome.valid {
            let term = termset.term(value).expect("validated");
            println!("valid\t{value}\t{}\t{}", term.entity_id, term.entity_uri);
        }
        for value in &outcome.invalid {
            println!("invalid\t{value}");
        }
        eprintln!("{} valid, {} invalid", outcome.valid.len(), outcome.invalid.len());
    }
    Ok(if outcome.invalid.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn parse_field_address(address: &str) -> Result<(&str, &str, Option<&str>)> {
    let mut parts = address.splitn(3, '/');
    let object_id = parts
        .next()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| anyhow!("--object-field must be OBJECT_ID/FIELD[/COMPONENT]"))?;
    let field = parts
        .next()
        .ok_or_else(|| anyhow!("--object-field must be OBJECT_ID/FIELD[/COMPONENT]"))?;
    Ok((object_id, field, parts.next()))
}

fn cmd_annotate(args: AnnotateArgs) -> Result<ExitCode> {
    let mut workspace = Workspace::new();
    if let Some(config) = &args.config {
        workspace.load_type_config(config)?;
    }
    let mut container = load_container_file(&args.container, workspace.registry_mut())?;
    let applied = workspace.apply_config_to_file(&mut container)?;

    let mut fresh = HerdStore::new();
    let links = fresh.add_ref_container(&container)?;
    let mut warnings = Vec::new();
    if links == 0 {
        warnings.push(format!(
            "no wrapped values found in {}; the archive gains no links",
            args.container.display()
        ));
    }

    let existing = args.herd.exists();
    let store = if existing {
        load_zip(&args.herd)?.merge(&fresh)?
    } else {
        fresh
    };
    save_zip(&store, &args.herd)?;

    for warning in &warnings {
        eprintln!("warning: {warning}");
    }
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "links": links,
                "auto_wrapped_fields": applied.wrapped_fields,
                "merged_into_existing": existing,
                "archive": args.herd.display().to_string(),
                "warnings": warnings,
            }))?
        );
    } else {
        eprintln!(
            "recorded {links} link(s) ({} field(s) wrapped by configuration) -> {}",
            applied.wrapped_fields,
            args.herd.display()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_query(args: QueryArgs) -> Result<ExitCode> {
    let store = load_zip(&args.herd)?;
    let flat = store.to_flat_table();
    let rows: Vec<_> = flat
        .rows
        .iter()
        .filter(|row| match args.by {
            QueryBy::Key => row.key == args.value,
            QueryBy::Entity => row.entity_id == args.value,
            QueryBy::Object => row.object_id == args.value,
        })
        .collect();

    if args.json {
        let rows: Vec<_> = rows
            .iter()
            .map(|r| {
                json!({
                    "file_object_id": r.file_object_id,
                    "object_id": r.object_id,
                    "object_type": r.object_type,
                    "relative_path": r.relative_path,
                    "field": r.field,
                    "key": r.key,
                    "entity_id": r.entity_id,
                    "entity_uri": r.entity_uri,
                })
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&json!(rows))?);
    } else {
        println!("{}", termlink::FlatTable::HEADER.join("\t"));
        for r in &rows {
            println!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.file_object_id,
                r.object_id,
                r.object_type,
                r.relative_path,
                r.field,
                r.key,
                r.entity_id,
                r.entity_uri
            );
        }
        eprintln!("{} row(s)", rows.len());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_merge(args: MergeArgs) -> Result<ExitCode> {
    let [left, right] = args.herd.as_slice() else {
        bail!("--herd expects exactly two archives");
    };
    let merged = load_zip(left)?.merge(&load_zip(right)?)?;
    save_zip(&merged, &args.out)?;
    eprintln!(
        "merged {} and {} -> {} ({} flat row(s))",
        left.display(),
        right.display(),
        args.out.display(),
        merged.to_flat_table().rows.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_export(args: ExportArgs) -> Result<ExitCode> {
    let store = load_zip(&args.herd)?;
    let flat = store.to_flat_table();
    std::fs::write(&args.flat, flat.to_tsv())
        .with_context(|| format!("writing {}", args.flat.display()))?;
    eprintln!("exported {} row(s) -> {}", flat.rows.len(), args.flat.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_ingest_sheet(args: IngestSheetArgs) -> Result<ExitCode> {
    let mut prefixes = PrefixMap::new();
    for declaration in &args.prefixes {
        let (prefix, uri) = declaration
            .split_once('=')
            .ok_or_else(|| anyhow!("--prefix expects PREFIX=URI, got {declaration:?}"))?;
        prefixes.insert(prefix.to_string(), uri.to_string());
    }
    let meta = SchemaMeta {
        id: args.id,
        name: args.name,
        version: args.version,
        prefixes,
    };
    let ingest = ingest_sheets(&args.sheets, meta)?;
    for warning in &ingest.warnings {
        eprintln!("warning: {warning}");
    }
    let text = serialize_termset_schema(&ingest.schema)?;
    std::fs::write(&args.out, text)
        .with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!(
        "wrote {} enumeration(s) -> {}",
        ingest.schema.enums.len(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}
