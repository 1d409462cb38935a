//! JSONL and JSON file formats.
//!
//! A bundle directory holds `train.jsonl`, `dev.jsonl`, `dev_s.jsonl`,
//! `test_s.jsonl` and `labelspace.json`. Predicted distributions are JSONL
//! `{"id", "dist"}`; raw logits are JSONL `{"id", "logit_sets", "source"}`,
//! optionally preceded by a `{"labels": [...]}` header line that names the
//! label order of the logit vectors.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{aggregate_mean, softmax};
use crate::metrics::PredictionMap;
use crate::simulate::GroundTruth;
use crate::types::{CategoricalDist, Example, LabelSpace, PredictionRecord, Split, SplitBundle};

pub const LABELSPACE_FILE: &str = "labelspace.json";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.jsonl";

fn parse_err(path: &Path, line: usize, source: serde_json::Error) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        source,
    }
}

/// Non-empty lines of a file with their 1-based line numbers.
fn lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    lines(path)?
        .into_iter()
        .map(|(n, l)| serde_json::from_str(&l).map_err(|e| parse_err(path, n, e)))
        .collect()
}

pub fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, items: impl IntoIterator<Item = &'a T>) -> Result<()> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item).expect("serializable record");
        buf.push(b'\n');
    }
    write_bytes(path, &buf)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, 1, e))
}

pub fn save_bundle(dir: &Path, bundle: &SplitBundle) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(&dir.join(LABELSPACE_FILE), &bundle.labels)?;
    for split in Split::ALL {
        let path = dir.join(format!("{}.jsonl", split.file_stem()));
        write_jsonl(&path, bundle.split(split))?;
    }
    Ok(())
}

/// Loads a bundle directory. A missing split file reads as an empty split.
pub fn load_bundle(dir: &Path) -> Result<SplitBundle> {
    let labels: LabelSpace = read_json(&dir.join(LABELSPACE_FILE))?;
    let read = |split: Split| -> Result<Vec<Example>> {
        let path = dir.join(format!("{}.jsonl", split.file_stem()));
        if path.exists() {
            read_jsonl(&path)
        } else {
            Ok(Vec::new())
        }
    };
    Ok(SplitBundle {
        labels,
        train: read(Split::Train)?,
        dev: read(Split::Dev)?,
        dev_s: read(Split::DevS)?,
        test_s: read(Split::TestS)?,
    })
}

pub fn save_ground_truth(dir: &Path, truth: &[GroundTruth]) -> Result<()> {
    write_jsonl(&dir.join(GROUND_TRUTH_FILE), truth)
}

pub fn load_ground_truth(dir: &Path) -> Result<Vec<GroundTruth>> {
    read_jsonl(&dir.join(GROUND_TRUTH_FILE))
}

/// One line of a predicted-distribution file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistRecord {
    pub id: String,
    pub dist: CategoricalDist,
}

/// Writes `{"id", "dist"}` lines in the order of `ids`.
pub fn write_predictions(path: &Path, ids: &[&str], preds: &PredictionMap) -> Result<()> {
    let rows: Vec<DistRecord> = ids
        .iter()
        .map(|id| {
            preds
                .get(*id)
                .map(|d| DistRecord {
                    id: id.to_string(),
                    dist: d.clone(),
                })
                .ok_or_else(|| Error::MissingPrediction(id.to_string()))
        })
        .collect::<Result<_>>()?;
    write_jsonl(path, &rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelHeader {
    pub labels: Vec<String>,
}

/// Writes logit records behind a label-order header line.
pub fn write_records(path: &Path, labels: &LabelSpace, records: &[PredictionRecord]) -> Result<()> {
    let mut buf = Vec::new();
    serde_json::to_writer(
        &mut buf,
        &LabelHeader {
            labels: labels.labels().to_vec(),
        },
    )
    .expect("header serializes");
    buf.push(b'\n');
    for r in records {
        serde_json::to_writer(&mut buf, r).expect("record serializes");
        buf.push(b'\n');
    }
    write_bytes(path, &buf)
}

/// Maps positions in `found` to positions in `expected`, or fails listing both orders.
fn label_permutation(found: &[String], expected: &LabelSpace) -> Result<Vec<usize>> {
    let mismatch = || {
        Error::invalid(format!(
            "label order {:?} cannot be mapped onto label space {:?}",
            found,
            expected.labels()
        ))
    };
    if found.len() != expected.k() {
        return Err(mismatch());
    }
    found
        .iter()
        .map(|l| expected.index_of(l).ok_or_else(mismatch))
        .collect()
}

fn permute(v: &[f64], perm: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (src, &dst) in perm.iter().enumerate() {
        out[dst] = v[src];
    }
    out
}

/// Any line of a prediction file.
#[derive(Deserialize)]
#[serde(untagged)]
enum PredictionLine {
    Dist(DistRecord),
    Logits(PredictionRecord),
    Header(LabelHeader),
}

/// Parsed prediction file: either distributions or raw logits, already in
/// the order of the target label space.
#[derive(Debug, Clone, PartialEq)]
pub enum PredictionFile {
    Dists(Vec<DistRecord>),
    Logits(Vec<PredictionRecord>),
}

impl PredictionFile {
    /// Distributions per id; logit records become the mean of their per-vector softmax.
    pub fn to_map(&self) -> Result<PredictionMap> {
        match self {
            PredictionFile::Dists(rows) => Ok(rows.iter().map(|r| (r.id.clone(), r.dist.clone())).collect()),
            PredictionFile::Logits(recs) => recs
                .iter()
                .map(|r| {
                    let dists = r
                        .logit_sets
                        .iter()
                        .map(|z| softmax(z))
                        .collect::<Result<Vec<_>>>()?;
                    Ok((r.id.clone(), aggregate_mean(&dists)?))
                })
                .collect(),
        }
    }

    pub fn ids(&self) -> Vec<&str> {
        match self {
            PredictionFile::Dists(rows) => rows.iter().map(|r| r.id.as_str()).collect(),
            PredictionFile::Logits(recs) => recs.iter().map(|r| r.id.as_str()).collect(),
        }
    }
}

/// Reads a prediction file of either kind, validating dimensions and
/// remapping columns when a header declares a permuted label order.
pub fn read_prediction_file(path: &Path, labels: &LabelSpace) -> Result<PredictionFile> {
    let mut perm: Option<Vec<usize>> = None;
    let mut dists = Vec::new();
    let mut logits = Vec::new();
    for (n, line) in lines(path)? {
        let parsed: PredictionLine = serde_json::from_str(&line).map_err(|e| parse_err(path, n, e))?;
        match parsed {
            PredictionLine::Header(h) => {
                if !dists.is_empty() || !logits.is_empty() || perm.is_some() {
                    return Err(Error::invalid(format!(
                        "{}: label header must be the first line",
                        path.display()
                    )));
                }
                perm = Some(label_permutation(&h.labels, labels)?);
            }
            PredictionLine::Dist(mut r) => {
                if r.dist.k() != labels.k() {
                    return Err(Error::DimensionMismatch {
                        expected: labels.k(),
                        got: r.dist.k(),
                    });
                }
                if let Some(p) = &perm {
                    r.dist = CategoricalDist::new(permute(r.dist.probs(), p))?;
                }
                dists.push(r);
            }
            PredictionLine::Logits(mut r) => {
                r.validate(labels.k())?;
                if let Some(p) = &perm {
                    r.logit_sets = r.logit_sets.iter().map(|z| permute(z, p)).collect();
                }
                logits.push(r);
            }
        }
    }
    match (dists.is_empty(), logits.is_empty()) {
        (false, true) => Ok(PredictionFile::Dists(dists)),
        (true, false) => Ok(PredictionFile::Logits(logits)),
        (true, true) => Err(Error::invalid(format!("{}: no predictions", path.display()))),
        (false, false) => Err(Error::invalid(format!(
            "{}: mixes distribution and logit lines",
            path.display()
        ))),
    }
}

/// Reads only logit records (e.g. for temperature fitting).
pub fn read_records(path: &Path, labels: &LabelSpace) -> Result<Vec<PredictionRecord>> {
    match read_prediction_file(path, labels)? {
        PredictionFile::Logits(r) => Ok(r),
        PredictionFile::Dists(_) => Err(Error::invalid(format!(
            "{}: expected logit records, found distributions",
            path.display()
        ))),
    }
}
