//! Artifacts: the run configuration plus a body, written as JSON or as CSV
//! with `# key=value` header lines.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use gasket_core::io::{format_float, to_json};
use gasket_core::{Address, Model, RadonMeasure};
use serde::Serialize;
use serde_json::{Map, Value};

use super::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn resolve(explicit: Option<Format>, out: Option<&Path>) -> Format {
        explicit.unwrap_or_else(|| match out.and_then(|p| p.extension()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        })
    }

    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureInput {
    pub path: String,
    pub measure: RadonMeasure,
}

/// Everything that determines a command's output.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    pub fractal: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<usize>>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<MeasureInput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<MeasureInput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature_depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region_level: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub at: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blowup: Option<String>,
    pub tolerances: BTreeMap<String, f64>,
    pub version: String,
}

impl RunConfig {
    pub fn new(command: &str, fractal: &str, seed: u64) -> Self {
        RunConfig {
            command: command.to_string(),
            fractal: fractal.to_string(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            ..RunConfig::default()
        }
    }

    pub fn tolerance(mut self, name: &str, value: f64) -> Self {
        self.tolerances.insert(name.to_string(), value);
        self
    }
}

/// Rows for the CSV form of an artifact.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

/// A function on `V_n` as a point cloud.
#[derive(Clone, Debug, Serialize)]
pub struct VertexValue {
    pub address: String,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub value: f64,
}

pub fn point_cloud(
    model: &Model,
    level: usize,
    values: &[f64],
    coordinates: impl Fn(&Address) -> Option<[f64; 2]>,
) -> Result<Vec<VertexValue>, Failure> {
    let lv = model.level(level)?;
    Ok(values
        .iter()
        .enumerate()
        .map(|(v, &value)| {
            let a = lv.address(v);
            let xy = coordinates(&a);
            VertexValue {
                address: a.to_string(),
                x: xy.map(|c| c[0]),
                y: xy.map(|c| c[1]),
                value,
            }
        })
        .collect())
}

pub fn cloud_table(cloud: &[VertexValue]) -> Table {
    let opt = |x: Option<f64>| x.map_or_else(String::new, format_float);
    Table {
        header: vec!["address", "x", "y", "value"],
        rows: cloud
            .iter()
            .map(|p| vec![p.address.clone(), opt(p.x), opt(p.y), format_float(p.value)])
            .collect(),
    }
}

/// An artifact: JSON `{config, ...body}` or CSV with header lines.
pub struct Artifact {
    pub config: RunConfig,
    pub body: Map<String, Value>,
    pub table: Table,
}

impl Artifact {
    pub fn new(config: RunConfig, body: impl Serialize, table: Table) -> Result<Self, Failure> {
        let body = match serde_json::to_value(body).map_err(|e| Failure::Numerical(e.to_string()))? {
            Value::Object(map) => map,
            other => Map::from_iter([("result".to_string(), other)]),
        };
        Ok(Artifact { config, body, table })
    }

    pub fn render(&self, format: Format) -> Result<String, Failure> {
        let config = serde_json::to_value(&self.config).map_err(|e| Failure::Numerical(e.to_string()))?;
        match format {
            Format::Json => {
                let mut doc = self.body.clone();
                doc.insert("config".to_string(), config);
                Ok(to_json(&Value::Object(doc))?)
            }
            Format::Csv => {
                let mut out = String::new();
                header_lines(&mut out, "", &config);
                for (key, value) in &self.body {
                    if !value.is_array() {
                        header_lines(&mut out, key, value);
                    }
                }
                out.push_str(&self.table.header.join(","));
                out.push('\n');
                for row in &self.table.rows {
                    let fields: Vec<String> = row.iter().map(|f| csv_field(f)).collect();
                    out.push_str(&fields.join(","));
                    out.push('\n');
                }
                Ok(out)
            }
        }
    }

    /// Writes to `out`, or standard output when `out` is `None`.
    pub fn emit(&self, out: Option<&Path>, format: Format) -> Result<(), Failure> {
        let text = self.render(format)?;
        match out {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

fn csv_field(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

// Flattens nested objects to dotted keys; arrays are written as compact JSON.
fn header_lines(out: &mut String, prefix: &str, value: &Value) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            for k in keys {
                header_lines(out, &key(k), &map[k]);
            }
        }
        Value::Number(n) if n.is_f64() => {
            out.push_str(&format!("# {prefix}={}\n", format_float(n.as_f64().unwrap_or(f64::NAN))));
        }
        Value::String(s) => out.push_str(&format!("# {prefix}={s}\n")),
        other => out.push_str(&format!("# {prefix}={other}\n")),
    }
}

/// `stem.tag.ext` next to `path`.
pub fn tagged_path(path: &Path, tag: &str, format: Format) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{tag}.{}", format.extension()))
}
