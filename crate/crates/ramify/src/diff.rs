//! Structured comparison of two run manifests.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::pipeline::{primary_flow_path, read_flow, Manifest};

/// Config keys that locate a run rather than parameterise it.
const IGNORED_CONFIG_KEYS: [&str; 1] = ["out_dir"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FileStatus {
    Changed,
    OnlyInA,
    OnlyInB,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileDelta {
    pub path: String,
    pub status: FileStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub metric: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// `b − a` when both exist.
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigDelta {
    /// Dotted path into the configuration, e.g. `transport.alpha`.
    pub path: String,
    pub a: Value,
    pub b: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunDiff {
    pub files: Vec<FileDelta>,
    pub metrics: Vec<MetricDelta>,
    pub config: Vec<ConfigDelta>,
    /// Jaccard index of the primary-flow supports, matched by arc endpoints.
    pub support_jaccard: Option<f64>,
}

impl RunDiff {
    pub fn is_empty(&self) -> bool {
        self.files.is_empty() && self.metrics.is_empty() && self.config.is_empty()
    }
}

/// Leaf values of a JSON document keyed by dotted path; array elements use
/// their index as the path segment.
pub fn flatten(value: &Value) -> BTreeMap<String, Value> {
    fn walk(v: &Value, prefix: &str, out: &mut BTreeMap<String, Value>) {
        let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(map) => {
                for (k, child) in map {
                    walk(child, &key(k), out);
                }
            }
            Value::Array(items) => {
                for (i, child) in items.iter().enumerate() {
                    walk(child, &key(&i.to_string()), out);
                }
                if items.is_empty() {
                    out.insert(prefix.to_string(), Value::Array(Vec::new()));
                }
            }
            leaf => {
                out.insert(prefix.to_string(), leaf.clone());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(value, "", &mut out);
    out
}

fn read_raw(path: &Path) -> Result<Value> {
    if !path.exists() {
        return Err(Error::MissingInput(path.into()));
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|source| Error::Json { path: path.into(), source })
}

fn schema_of(v: &Value) -> u32 {
    v.get("schema_version").and_then(Value::as_u64).unwrap_or(0) as u32
}

fn support_pairs(dir: &Path, manifest: &Manifest) -> Result<Option<BTreeSet<(String, String)>>> {
    let Some(rel) = primary_flow_path(manifest) else { return Ok(None) };
    let flow = read_flow(dir, &rel)?;
    Ok(Some(
        flow.arcs.into_iter().filter(|a| a.support).map(|a| (a.tail_label, a.head_label)).collect(),
    ))
}

pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        1.0
    } else {
        a.intersection(b).count() as f64 / union as f64
    }
}

pub fn diff_runs(manifest_a: &Path, manifest_b: &Path) -> Result<RunDiff> {
    let (raw_a, raw_b) = (read_raw(manifest_a)?, read_raw(manifest_b)?);
    let (va, vb) = (schema_of(&raw_a), schema_of(&raw_b));
    if va != vb {
        return Err(Error::SchemaMismatch { a: va, b: vb });
    }
    let a = Manifest::read(manifest_a)?;
    let b = Manifest::read(manifest_b)?;

    let mut files = Vec::new();
    for (path, hash) in &a.files {
        match b.files.get(path) {
            Some(h) if h == hash => {}
            Some(_) => files.push(FileDelta { path: path.clone(), status: FileStatus::Changed }),
            None => files.push(FileDelta { path: path.clone(), status: FileStatus::OnlyInA }),
        }
    }
    for path in b.files.keys().filter(|p| !a.files.contains_key(*p)) {
        files.push(FileDelta { path: path.clone(), status: FileStatus::OnlyInB });
    }

    let keys: BTreeSet<&String> = a.metrics.keys().chain(b.metrics.keys()).collect();
    let metrics = keys
        .into_iter()
        .filter_map(|k| {
            let (x, y) = (a.metrics.get(k).copied(), b.metrics.get(k).copied());
            (x != y).then(|| MetricDelta {
                metric: k.clone(),
                a: x,
                b: y,
                delta: x.zip(y).map(|(x, y)| y - x),
            })
        })
        .collect();

    let to_value = |m: &Manifest| serde_json::to_value(&m.config).unwrap_or(Value::Null);
    let (ca, cb) = (flatten(&to_value(&a)), flatten(&to_value(&b)));
    let paths: BTreeSet<&String> = ca.keys().chain(cb.keys()).collect();
    let config = paths
        .into_iter()
        .filter(|p| !IGNORED_CONFIG_KEYS.contains(&p.as_str()))
        .filter_map(|p| {
            let (x, y) = (ca.get(p).cloned().unwrap_or(Value::Null), cb.get(p).cloned().unwrap_or(Value::Null));
            (x != y).then(|| ConfigDelta { path: p.clone(), a: x, b: y })
        })
        .collect();

    let dir = |p: &Path| p.parent().map(Path::to_path_buf).unwrap_or_default();
    let support_jaccard = match (support_pairs(&dir(manifest_a), &a)?, support_pairs(&dir(manifest_b), &b)?) {
        (Some(sa), Some(sb)) => Some(jaccard(&sa, &sb)),
        _ => None,
    };
    Ok(RunDiff { files, metrics, config, support_jaccard })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn flatten_paths() {
        let flat = flatten(&json!({"a": {"b": 1, "c": [2, 3]}, "d": "x", "e": []}));
        assert_eq!(flat["a.b"], json!(1));
        assert_eq!(flat["a.c.1"], json!(3));
        assert_eq!(flat["d"], json!("x"));
        assert_eq!(flat["e"], json!([]));
        assert_eq!(flat.len(), 5);
    }

    #[test]
    fn jaccard_extremes() {
        let a: BTreeSet<u8> = [1, 2, 3].into();
        let b: BTreeSet<u8> = [3, 4].into();
        assert_eq!(jaccard(&a, &a), 1.0);
        assert_eq!(jaccard(&a, &b), 0.25);
        assert_eq!(jaccard(&BTreeSet::<u8>::new(), &BTreeSet::new()), 1.0);
    }
}
