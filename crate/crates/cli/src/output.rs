use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use ordmed::{EffectKey, EffectKind, EffectTable};
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Provenance attached to every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub version: &'static str,
    pub seed: Option<u64>,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normal_method: Option<&'static str>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Metadata {
    pub fn new(seed: Option<u64>) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION"),
            seed,
            command: std::env::args().collect::<Vec<_>>().join(" "),
            normal_method: None,
            notes: Vec::new(),
        }
    }

    pub fn comment_lines(&self) -> String {
        let mut s = format!("# ordmed {}\n", self.version);
        match self.seed {
            Some(seed) => s.push_str(&format!("# seed: {seed}\n")),
            None => s.push_str("# seed: none\n"),
        }
        s.push_str(&format!("# command: {}\n", self.command));
        if let Some(method) = self.normal_method {
            s.push_str(&format!("# normal variates: {method}\n"));
        }
        for note in &self.notes {
            s.push_str(&format!("# {note}\n"));
        }
        s
    }
}

/// Opens `path`, or standard output when absent.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p)
                .map_err(|e| CliError::validation(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

/// Writes CSV rows after the metadata comment block.
pub fn write_csv<R: Serialize>(
    path: Option<&Path>,
    meta: &Metadata,
    rows: &[R],
) -> Result<(), CliError> {
    let mut out = sink(path)?;
    out.write_all(meta.comment_lines().as_bytes())?;
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes `{"metadata": ..., <body fields>}`.
pub fn write_json<B: Serialize>(
    path: Option<&Path>,
    meta: &Metadata,
    body: &B,
) -> Result<(), CliError> {
    let mut value = serde_json::to_value(body)?;
    let object = value
        .as_object_mut()
        .expect("report bodies are JSON objects");
    object.insert("metadata".into(), serde_json::to_value(meta)?);
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, &value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// `(effect name, j, m)` for an entry: `j` for per-level effects, `m` for CDE.
pub fn key_columns(key: EffectKey) -> (String, Option<usize>, Option<usize>) {
    let name = format!("log {}", key.kind.label());
    match key.kind {
        EffectKind::Cde => (name, None, Some(key.index)),
        _ => (name, Some(key.index), None),
    }
}

/// One effect on the log-odds scale and as an odds ratio.
#[derive(Debug, Serialize)]
pub struct EffectRow {
    pub effect: String,
    pub j: Option<usize>,
    pub m: Option<usize>,
    pub log_value: f64,
    pub exp_value: f64,
}

pub fn effect_rows(table: &EffectTable) -> Vec<EffectRow> {
    table
        .keys()
        .into_iter()
        .map(|key| {
            let (effect, j, m) = key_columns(key);
            let v = table.get(key);
            EffectRow {
                effect,
                j,
                m,
                log_value: v,
                exp_value: v.exp(),
            }
        })
        .collect()
}
