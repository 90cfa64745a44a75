//! Fractal and measure files, and deterministic JSON output.
//!
//! Output JSON has sorted object keys and every float written with 17
//! significant digits, so identical inputs give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::energy::HarmonicStructure;
use crate::error::{Error, Result};
use crate::fractal::{Embedding, FractalStructure, Gluing};
use crate::measure::RadonMeasure;
use crate::model::Model;

/// Name of the built-in Sierpinski gasket.
pub const SIERPINSKI_PRESET: &str = "sg3";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicSpec {
    pub conductances: Vec<Vec<f64>>,
    pub renormalization: Vec<f64>,
}

/// On-disk description of a fractal and its harmonic structure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FractalSpec {
    pub arity: usize,
    pub boundary_size: usize,
    /// `[i, a, j, b]` meaning `F_i(q_a) = F_j(q_b)`.
    pub gluings: Vec<[usize; 4]>,
    pub measure_weights: Vec<f64>,
    /// `boundary_fixed_maps[a]` is the map fixing `q_a`; defaults to `a`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_fixed_maps: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Embedding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harmonic: Option<HarmonicSpec>,
}

impl FractalSpec {
    pub fn sierpinski() -> Self {
        let s = FractalStructure::sierpinski();
        let h = HarmonicStructure::sierpinski();
        FractalSpec {
            arity: s.arity(),
            boundary_size: s.boundary_size(),
            gluings: s
                .gluings()
                .iter()
                .map(|g| [g.map_a, g.label_a, g.map_b, g.label_b])
                .collect(),
            measure_weights: s.measure_weights().to_vec(),
            boundary_fixed_maps: None,
            embedding: s.embedding().cloned(),
            harmonic: Some(HarmonicSpec {
                conductances: h.conductances().to_vec(),
                renormalization: h.renormalization().to_vec(),
            }),
        }
    }

    pub fn build(&self) -> Result<(FractalStructure, HarmonicStructure)> {
        let structure = FractalStructure::new(
            self.arity,
            self.boundary_size,
            self.gluings.iter().map(|g| Gluing::new(g[0], g[1], g[2], g[3])).collect(),
            self.measure_weights.clone(),
            self.boundary_fixed_maps.clone(),
            self.embedding.clone(),
        )?;
        let harmonic = match &self.harmonic {
            Some(h) => HarmonicStructure::new(h.conductances.clone(), h.renormalization.clone())?,
            None => {
                return Err(Error::InvalidStructure(
                    "the fractal file needs a `harmonic` section with conductances and renormalization".into(),
                ))
            }
        };
        Ok((structure, harmonic))
    }
}

pub fn parse_fractal(text: &str) -> Result<FractalSpec> {
    Ok(serde_json::from_str(text)?)
}

/// Builds a model from the preset name `sg3` or a fractal file.
pub fn load_model(source: &str, max_level: usize) -> Result<Model> {
    if source == SIERPINSKI_PRESET {
        return Ok(Model::sierpinski(max_level));
    }
    let text = std::fs::read_to_string(source)
        .map_err(|e| Error::InvalidInput(format!("cannot read fractal file {source}: {e}")))?;
    let (structure, harmonic) = parse_fractal(&text)?.build()?;
    Model::new(structure, harmonic, max_level)
}

pub fn parse_measure(text: &str) -> Result<RadonMeasure> {
    Ok(serde_json::from_str(text)?)
}

pub fn load_measure(path: impl AsRef<Path>) -> Result<RadonMeasure> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read measure file {}: {e}", path.display())))?;
    parse_measure(&text)
}

/// `x` with 17 significant digits; non-finite values become `null`.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        // negative zero prints as zero
        format!("{:.16e}", 0.0)
    } else if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

/// Pretty JSON with sorted keys and fixed float formatting.
pub fn to_json(value: &impl Serialize) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, k: usize| out.extend(std::iter::repeat_n(' ', 2 * k));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => write!(out, "{i}").unwrap(),
            (_, Some(u)) => write!(out, "{u}").unwrap(),
            _ => out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN))),
        },
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            // flat numeric arrays stay on one line
            if items.iter().all(|x| x.is_number()) {
                out.push('[');
                for (k, x) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, x, indent);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (k, x) in items.iter().enumerate() {
                pad(out, indent + 1);
                write_value(out, x, indent + 1);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            for (k, key) in keys.iter().enumerate() {
                pad(out, indent + 1);
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push_str(": ");
                write_value(out, &map[*key], indent + 1);
                out.push_str(if k + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}
