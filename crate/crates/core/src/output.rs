//! CSV and manifest persistence.
//!
//! Reals are rounded to 9 significant digits and then printed in the
//! shortest form that round-trips the rounded value. Missing values are
//! empty fields. Lines end with `\n`.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::RunResult;
use crate::model::{Belief, CensorshipMode, GroupMetricsRow, SimParams};
use crate::stats::{CorrelationMatrix, PairwiseComparison};
use crate::sweep::SweepResult;

pub const RUN_CSV_HEADER: &str = "step,belief,mean_assent,mean_dissent,mean_divergence,mean_degree,mean_certainty,group_size,banned_count,certainty_n";

const ROW_FIELDS: [&str; 8] = [
    "mean_assent",
    "mean_dissent",
    "mean_divergence",
    "mean_degree",
    "mean_certainty",
    "group_size",
    "banned_count",
    "certainty_n",
];

const SWEEP_PARAM_FIELDS: &str =
    "sample,mode,seed,n_agents,k_neighbors,rewire_prob,radical_fraction,homophily,tolerance,n_steps,error";

pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    if (1e-5..1e16).contains(&rounded.abs()) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

fn opt_real(x: Option<f64>) -> String {
    x.map(format_real).unwrap_or_default()
}

fn row_fields(row: &GroupMetricsRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        opt_real(row.mean_assent),
        opt_real(row.mean_dissent),
        opt_real(row.mean_divergence),
        opt_real(row.mean_degree),
        opt_real(row.mean_certainty),
        row.group_size,
        row.banned_count,
        row.certainty_n
    )
}

pub fn run_csv(result: &RunResult) -> String {
    let mut out = String::with_capacity(64 * (result.rows.len() + 1));
    out.push_str(RUN_CSV_HEADER);
    out.push('\n');
    for row in &result.rows {
        let _ = writeln!(out, "{},{},{}", row.step, row.belief, row_fields(row));
    }
    out
}

pub fn emit_run_csv(result: &RunResult, path: &Path) -> io::Result<()> {
    fs::write(path, run_csv(result))
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("unexpected header: {0}")]
    Header(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn parse_opt(field: &str, line: usize) -> Result<Option<f64>, ParseError> {
    if field.is_empty() {
        return Ok(None);
    }
    field.parse().map(Some).map_err(|_| ParseError::Line {
        line,
        message: format!("`{field}` is not a number"),
    })
}

fn parse_int<T: std::str::FromStr>(field: &str, line: usize) -> Result<T, ParseError> {
    field.parse().map_err(|_| ParseError::Line {
        line,
        message: format!("`{field}` is not an integer"),
    })
}

fn parse_row(
    step: usize,
    belief: Belief,
    f: &[&str],
    line: usize,
) -> Result<GroupMetricsRow, ParseError> {
    Ok(GroupMetricsRow {
        step,
        belief,
        mean_assent: parse_opt(f[0], line)?,
        mean_dissent: parse_opt(f[1], line)?,
        mean_divergence: parse_opt(f[2], line)?,
        mean_degree: parse_opt(f[3], line)?,
        mean_certainty: parse_opt(f[4], line)?,
        group_size: parse_int(f[5], line)?,
        banned_count: parse_int(f[6], line)?,
        certainty_n: parse_int(f[7], line)?,
    })
}

fn parse_belief(field: &str, line: usize) -> Result<Belief, ParseError> {
    parse_int::<u8>(field, line)
        .and_then(|b| Belief::try_from(b).map_err(|message| ParseError::Line { line, message }))
}

/// Reads back the rows written by [`run_csv`].
pub fn parse_run_csv(text: &str) -> Result<Vec<GroupMetricsRow>, ParseError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(RUN_CSV_HEADER) => {}
        other => return Err(ParseError::Header(other.unwrap_or_default().to_string())),
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            let line = i + 2;
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 10 {
                return Err(ParseError::Line {
                    line,
                    message: format!("expected 10 fields, got {}", f.len()),
                });
            }
            parse_row(
                parse_int(f[0], line)?,
                parse_belief(f[1], line)?,
                &f[2..],
                line,
            )
        })
        .collect()
}

pub fn sweep_csv_header() -> String {
    let mut h = SWEEP_PARAM_FIELDS.to_string();
    for b in Belief::BOTH {
        for f in ROW_FIELDS {
            let _ = write!(h, ",b{b}_{f}");
        }
    }
    h
}

fn sanitize(msg: &str) -> String {
    msg.replace([',', '\n', '\r', '"'], " ")
}

/// One line per run, ordered by `(sample, mode)`. Wall-clock durations are
/// left out so the file only depends on the design.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = sweep_csv_header();
    out.push('\n');
    for r in &result.records {
        let p = &r.params;
        let error = match &r.outcome {
            Ok(_) => String::new(),
            Err(e) => sanitize(&e.to_string()),
        };
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.sample,
            r.mode,
            p.seed,
            p.n_agents,
            p.k_neighbors,
            format_real(p.rewire_prob),
            format_real(p.radical_fraction),
            format_real(p.homophily),
            format_real(p.tolerance),
            p.n_steps,
            error
        );
        match &r.outcome {
            Ok(summary) => {
                for row in &summary.final_rows {
                    let _ = write!(out, ",{}", row_fields(row));
                }
            }
            Err(_) => out.push_str(&",".repeat(2 * ROW_FIELDS.len())),
        }
        out.push('\n');
    }
    out
}

/// One parsed line of a sweep CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub sample: usize,
    pub params: SimParams,
    pub error: Option<String>,
    /// Final rows for belief 0 and 1; `None` for failed runs.
    pub final_rows: Option<[GroupMetricsRow; 2]>,
}

impl SweepRecord {
    pub fn mode(&self) -> CensorshipMode {
        self.params.mode
    }
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRecord>, ParseError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != sweep_csv_header() {
        return Err(ParseError::Header(header));
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let f: Vec<&str> = rec.iter().collect();
        let mode = f[1]
            .parse::<CensorshipMode>()
            .map_err(|message| ParseError::Line { line, message })?;
        let real = |s: &str| {
            parse_opt(s, line)?.ok_or(ParseError::Line {
                line,
                message: "missing parameter".into(),
            })
        };
        let params = SimParams {
            seed: parse_int(f[2], line)?,
            n_agents: parse_int(f[3], line)?,
            k_neighbors: parse_int(f[4], line)?,
            rewire_prob: real(f[5])?,
            radical_fraction: real(f[6])?,
            homophily: real(f[7])?,
            tolerance: real(f[8])?,
            n_steps: parse_int(f[9], line)?,
            mode,
        };
        let error = (!f[10].is_empty()).then(|| f[10].to_string());
        let final_rows = if error.is_some() {
            None
        } else {
            let step = params.n_steps;
            Some([
                parse_row(step, Belief::Mainstream, &f[11..19], line)?,
                parse_row(step, Belief::Radical, &f[19..27], line)?,
            ])
        };
        out.push(SweepRecord {
            sample: parse_int(f[0], line)?,
            params,
            error,
            final_rows,
        });
    }
    Ok(out)
}

pub fn pairwise_csv(pairs: &[PairwiseComparison]) -> String {
    let mut out = String::from("group_a,group_b,z,p_raw,p_adjusted,significant\n");
    for p in pairs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.group_a,
            p.group_b,
            format_real(p.z),
            format_real(p.p_raw),
            format_real(p.p_adjusted),
            p.significant
        );
    }
    out
}

/// Matrix with a header row and a leading column of variable names.
pub fn correlation_csv(m: &CorrelationMatrix) -> String {
    let mut out = String::from("variable");
    for n in &m.names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for (name, row) in m.names.iter().zip(&m.values) {
        out.push_str(name);
        for v in row {
            out.push(',');
            out.push_str(&opt_real(*v));
        }
        out.push('\n');
    }
    out
}

/// Flat `key=value` lines.
pub fn key_value_text(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub rng_algorithm: String,
    pub command: String,
    /// Fully resolved parameters or design.
    pub resolved: serde_json::Value,
    pub base_seed: Option<u64>,
    pub started_at: String,
    pub finished_at: String,
    #[serde(default)]
    pub notes: serde_json::Map<String, serde_json::Value>,
    pub files: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects output files, then writes the manifest over them last.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileDigest>,
}

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("output directory {0} is not empty (use --force to write into it)")]
    NotEmpty(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.display().to_string(),
        source,
    }
}

impl OutputDir {
    /// Creates `root` if needed. An existing non-empty directory is refused
    /// unless `force` is set.
    pub fn prepare(root: &Path, force: bool) -> Result<Self, OutputError> {
        if root.exists() {
            let non_empty = fs::read_dir(root).map_err(io_err(root))?.next().is_some();
            if non_empty && !force {
                return Err(OutputError::NotEmpty(root.display().to_string()));
            }
        }
        fs::create_dir_all(root).map_err(io_err(root))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<PathBuf, OutputError> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(io_err(&path))?;
        self.files.push(FileDigest {
            path: name.to_string(),
            sha256: sha256_hex(contents),
            bytes: contents.len() as u64,
        });
        Ok(path)
    }

    pub fn finish(self, mut manifest: RunManifest) -> Result<PathBuf, OutputError> {
        manifest.files = self.files;
        let path = self.root.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(io_err(&path))?;
        Ok(path)
    }
}

/// Re-hashes every file listed in `dir/manifest.json`. Returns the list of
/// problems found; empty means every digest matches.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>, OutputError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| OutputError::Io {
        path: path.display().to_string(),
        source: io::Error::new(io::ErrorKind::InvalidData, e),
    })?;
    let mut problems = Vec::new();
    for f in &manifest.files {
        match fs::read(dir.join(&f.path)) {
            Ok(bytes) => {
                let digest = sha256_hex(&bytes);
                if digest != f.sha256 {
                    problems.push(format!(
                        "{}: digest {} != manifest {}",
                        f.path, digest, f.sha256
                    ));
                }
            }
            Err(e) => problems.push(format!("{}: {e}", f.path)),
        }
    }
    Ok(problems)
}
