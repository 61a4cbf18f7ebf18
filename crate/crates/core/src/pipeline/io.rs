//! Artifact files: CSV and JSON with provenance headers, written through a
//! `.partial` file and renamed on success.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::OnceLock;

use serde::Deserialize;
use serde_json::{Map, Value};

use super::config::FORMAT_VERSION;
use crate::error::{Error, Result};

pub const SCHEMA_JSON: &str = include_str!("../../schemas/columns.json");

#[derive(Debug, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub description: String,
}

#[derive(Debug, Deserialize)]
pub struct SchemaFile {
    pub format: u32,
    pub csv: BTreeMap<String, Vec<ColumnSpec>>,
    pub json: BTreeMap<String, Vec<String>>,
    /// CSV kinds that may be hand-written and carry no provenance line.
    pub inputs: Vec<String>,
}

pub fn schema() -> &'static SchemaFile {
    static SCHEMA: OnceLock<SchemaFile> = OnceLock::new();
    SCHEMA.get_or_init(|| serde_json::from_str(SCHEMA_JSON).expect("embedded schema parses"))
}

pub fn csv_columns(kind: &str) -> Vec<&'static str> {
    schema().csv[kind].iter().map(|c| c.name.as_str()).collect()
}

/// Identity stamped into every artifact.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: Option<u64>,
    pub config_json: String,
}

impl Provenance {
    fn seed_text(&self) -> String {
        self.seed.map_or_else(|| "none".to_string(), |s| s.to_string())
    }
}

fn partial_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

fn create_partial(path: &Path) -> Result<(PathBuf, BufWriter<File>)> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let partial = partial_path(path);
    let file = File::create(&partial)?;
    Ok((partial, BufWriter::new(file)))
}

pub struct CsvSink {
    path: PathBuf,
    partial: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
    width: usize,
}

impl CsvSink {
    pub fn create(path: &Path, kind: &str, prov: &Provenance) -> Result<Self> {
        let (partial, mut out) = create_partial(path)?;
        writeln!(
            out,
            "# dcs format={FORMAT_VERSION} kind={kind} config={} seed={}",
            prov.config_hash,
            prov.seed_text()
        )?;
        writeln!(out, "# config {}", prov.config_json)?;
        let mut writer = csv::Writer::from_writer(out);
        let cols = csv_columns(kind);
        writer.write_record(&cols)?;
        Ok(CsvSink { path: path.to_path_buf(), partial, writer, width: cols.len() })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let record = csv::ByteRecord::from_iter(fields);
        debug_assert_eq!(record.len(), self.width);
        self.writer.write_byte_record(&record)?;
        Ok(())
    }

    pub fn finish(self) -> Result<PathBuf> {
        let inner = self.writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        inner.into_inner().map_err(|e| Error::Io(e.into_error()))?.sync_all()?;
        std::fs::rename(&self.partial, &self.path)?;
        Ok(self.path)
    }
}

/// Writes `value` with provenance merged into its `meta` object.
pub fn write_json(path: &Path, kind: &str, prov: &Provenance, mut value: Value) -> Result<PathBuf> {
    let obj = value.as_object_mut().expect("artifact documents are objects");
    let meta = obj.entry("meta").or_insert_with(|| Value::Object(Map::new()));
    let meta = meta.as_object_mut().expect("meta is an object");
    meta.insert("format".into(), FORMAT_VERSION.into());
    meta.insert("kind".into(), kind.into());
    meta.insert("config".into(), prov.config_hash.clone().into());
    meta.insert("seed".into(), prov.seed.map_or(Value::Null, Value::from));
    meta.insert(
        "config_json".into(),
        serde_json::from_str(&prov.config_json).unwrap_or(Value::Null),
    );
    let (partial, mut out) = create_partial(path)?;
    serde_json::to_writer_pretty(&mut out, &value)?;
    out.write_all(b"\n")?;
    out.into_inner().map_err(|e| Error::Io(e.into_error()))?.sync_all()?;
    std::fs::rename(&partial, path)?;
    Ok(path.to_path_buf())
}

/// Parsed `# dcs ...` line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvHeader {
    pub format: u32,
    pub kind: String,
    pub config: String,
    pub seed: Option<u64>,
}

fn schema_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Schema { path: path.to_path_buf(), msg: msg.into() }
}

fn parse_header(path: &Path, line: &str) -> Result<CsvHeader> {
    let mut fields = BTreeMap::new();
    for tok in line.trim_start_matches("# dcs").split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| schema_err(path, format!("malformed header token `{tok}`")))?;
        fields.insert(k, v);
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| schema_err(path, format!("header lacks `{k}`")));
    Ok(CsvHeader {
        format: get("format")?.parse().map_err(|_| schema_err(path, "header format is not an integer"))?,
        kind: get("kind")?.to_string(),
        config: get("config")?.to_string(),
        seed: get("seed")?.parse().ok(),
    })
}

pub struct CsvSource {
    pub path: PathBuf,
    pub header: Option<CsvHeader>,
    pub reader: csv::Reader<BufReader<File>>,
    columns: Vec<String>,
    line: u64,
}

/// Reads only the provenance line of a CSV artifact.
pub fn peek_header(path: &Path) -> Result<Option<CsvHeader>> {
    let mut r = BufReader::new(File::open(path).map_err(|e| schema_err(path, e.to_string()))?);
    let mut first = String::new();
    r.read_line(&mut first)?;
    if first.starts_with("# dcs") {
        parse_header(path, first.trim_end()).map(Some)
    } else {
        Ok(None)
    }
}

/// Opens a CSV of `kind`, checking the provenance line and column names.
pub fn open_csv(path: &Path, kind: &str) -> Result<CsvSource> {
    let file = File::open(path).map_err(|e| schema_err(path, e.to_string()))?;
    let mut r = BufReader::new(file);
    let mut header = None;
    loop {
        let buf = r.fill_buf()?;
        if buf.first() != Some(&b'#') {
            break;
        }
        let mut line = String::new();
        r.read_line(&mut line)?;
        if line.starts_with("# dcs") && header.is_none() {
            header = Some(parse_header(path, line.trim_end())?);
        }
    }
    let is_input = schema().inputs.iter().any(|k| k == kind);
    match &header {
        Some(h) if h.format != FORMAT_VERSION => {
            return Err(schema_err(path, format!("format {} (expected {FORMAT_VERSION})", h.format)));
        }
        Some(h) if h.kind != kind => {
            return Err(schema_err(path, format!("kind `{}` (expected `{kind}`)", h.kind)));
        }
        None if !is_input => return Err(schema_err(path, "missing `# dcs` provenance line")),
        _ => {}
    }
    let mut reader = csv::ReaderBuilder::new().from_reader(r);
    let columns: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let expected = csv_columns(kind);
    for want in &expected {
        if !columns.iter().any(|c| c == want) {
            return Err(schema_err(path, format!("missing column `{want}` for kind `{kind}`")));
        }
    }
    if !is_input {
        if let Some(extra) = columns.iter().find(|c| !expected.contains(&c.as_str())) {
            return Err(schema_err(path, format!("unexpected column `{extra}` for kind `{kind}`")));
        }
    }
    Ok(CsvSource { path: path.to_path_buf(), header, reader, columns, line: 1 })
}

impl CsvSource {
    pub fn column(&self, name: &str) -> usize {
        self.columns.iter().position(|c| c == name).expect("column checked at open")
    }

    /// Next record, or `None` at end of file.
    pub fn next_record(&mut self, rec: &mut csv::StringRecord) -> Result<bool> {
        self.line += 1;
        Ok(self.reader.read_record(rec)?)
    }

    pub fn parse<T: FromStr>(&self, rec: &csv::StringRecord, col: usize) -> Result<T> {
        let raw = rec.get(col).unwrap_or("");
        raw.parse().map_err(|_| {
            schema_err(
                &self.path,
                format!("row {}: column `{}` has unparsable value `{raw}`", self.line, self.columns[col]),
            )
        })
    }

    pub fn parse_opt<T: FromStr>(&self, rec: &csv::StringRecord, col: usize) -> Result<Option<T>> {
        if rec.get(col).is_none_or(str::is_empty) {
            Ok(None)
        } else {
            self.parse(rec, col).map(Some)
        }
    }

    pub fn parse_bool(&self, rec: &csv::StringRecord, col: usize) -> Result<bool> {
        match rec.get(col) {
            Some("1") | Some("true") => Ok(true),
            Some("0") | Some("false") => Ok(false),
            other => Err(schema_err(
                &self.path,
                format!("row {}: column `{}` is not a bool: {other:?}", self.line, self.columns[col]),
            )),
        }
    }

    pub fn schema_error(&self, msg: impl Into<String>) -> Error {
        schema_err(&self.path, format!("row {}: {}", self.line, msg.into()))
    }
}

pub fn read_json(path: &Path, kind: &str) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| schema_err(path, e.to_string()))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| schema_err(path, e.to_string()))?;
    let meta = value
        .get("meta")
        .ok_or_else(|| schema_err(path, "missing `meta` block"))?;
    let format = meta.get("format").and_then(Value::as_u64);
    if format != Some(FORMAT_VERSION as u64) {
        return Err(schema_err(path, format!("format {format:?} (expected {FORMAT_VERSION})")));
    }
    let found = meta.get("kind").and_then(Value::as_str).unwrap_or("");
    if found != kind {
        return Err(schema_err(path, format!("kind `{found}` (expected `{kind}`)")));
    }
    for key in &schema().json[kind] {
        if value.get(key).is_none() {
            return Err(schema_err(path, format!("missing key `{key}` for kind `{kind}`")));
        }
    }
    Ok(value)
}

/// Shortest round-trip form, with an exponent for very large or small values.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn fmt_bool(v: bool) -> &'static str {
    if v { "1" } else { "0" }
}

/// Edge set as hex, bit `i` = edge `i`, most significant digit first.
pub fn edges_to_hex(edges: &[usize], num_edges: usize) -> String {
    let digits = num_edges.div_ceil(4).max(1);
    let mut nibbles = vec![0u8; digits];
    for &e in edges {
        nibbles[e / 4] |= 1 << (e % 4);
    }
    nibbles.iter().rev().map(|n| char::from_digit(*n as u32, 16).unwrap()).collect()
}

pub fn hex_to_edges(hex: &str, num_edges: usize) -> Option<Vec<usize>> {
    let mut out = Vec::new();
    for (k, ch) in hex.chars().rev().enumerate() {
        let n = ch.to_digit(16)?;
        for bit in 0..4 {
            if n >> bit & 1 == 1 {
                let e = 4 * k + bit;
                if e >= num_edges {
                    return None;
                }
                out.push(e);
            }
        }
    }
    Some(out)
}

pub fn ids_to_text(ids: &[usize]) -> String {
    let mut s = String::with_capacity(ids.len() * 4);
    for (i, v) in ids.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(&v.to_string());
    }
    s
}

pub fn text_to_ids(text: &str) -> Option<Vec<usize>> {
    text.split_whitespace().map(|t| t.parse().ok()).collect()
}
