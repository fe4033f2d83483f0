//! Artifact writers. All numbers go through the shortest round-trip
//! decimal formatter, so files parse back to the exact in-memory values
//! and reruns are byte-identical.

use crate::{Cli, CliResult, Format};
use consortium::ModelParams;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

/// Fully resolved run configuration, echoed next to every result file.
#[derive(Serialize)]
pub struct Manifest<'a> {
    pub version: &'static str,
    pub command: &'static str,
    pub args: serde_json::Value,
    pub format: Format,
    pub threads: usize,
    pub seed: u64,
    pub out: String,
    pub params_file: Option<String>,
    pub params: &'a ModelParams,
}

pub fn write_manifest(
    cli: &Cli,
    command: &'static str,
    args: serde_json::Value,
    params: &ModelParams,
) -> CliResult<()> {
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        command,
        args,
        format: cli.format,
        threads: cli.threads,
        seed: cli.seed,
        out: cli.out.display().to_string(),
        params_file: cli.params.as_ref().map(|p| p.display().to_string()),
        params,
    };
    write_file(&cli.out, "run_manifest.json", &json_text(&manifest))?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn json_text<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("output types serialize");
    text.push('\n');
    text
}

pub fn write_file(dir: &Path, name: &str, text: &str) -> CliResult<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, text)?;
    Ok(path)
}

/// Writes rows as `stem.csv` (header plus one line per row) or as a JSON
/// array `stem.json`, by the chosen format.
pub fn write_table<T: Serialize>(
    dir: &Path,
    stem: &str,
    format: Format,
    header: &str,
    rows: &[T],
    to_csv: impl Fn(&T) -> String,
) -> CliResult<PathBuf> {
    match format {
        Format::Csv => {
            let mut text = String::with_capacity(64 * (rows.len() + 1));
            text.push_str(header);
            text.push('\n');
            for row in rows {
                text.push_str(&to_csv(row));
                text.push('\n');
            }
            write_file(dir, &format!("{stem}.csv"), &text)
        }
        Format::Json => write_file(dir, &format!("{stem}.json"), &json_text(&rows)),
    }
}

/// Empty CSV cell for an absent value.
pub fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
