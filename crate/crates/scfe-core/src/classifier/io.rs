//! Text serialization for classifier models.
//!
//! Format (line oriented):
//!
//! ```text
//! scfe-model v1
//! layer <rows> <cols> <activation>
//! <cols floats>          ; row 0 of the weight matrix
//! ...                    ; rows-1 further weight rows
//! <rows floats>          ; bias
//! layer ...              ; next layer block
//! ```
//!
//! Floats carry 17 significant digits, enough to round-trip every f64
//! exactly, so save -> load -> forward is bit-identical.

use super::{Activation, ClassifierModel, Layer};
use crate::error::{Result, ScfeError};
use crate::numerics::Matrix;
use std::fs;
use std::path::Path;

const HEADER: &str = "scfe-model v1";

fn fmt_f64(v: f64) -> String {
    format!("{:.16e}", v)
}

pub fn serialize_model(model: &ClassifierModel) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for layer in model.layers() {
        out.push_str(&format!(
            "layer {} {} {}\n",
            layer.weights.rows(),
            layer.weights.cols(),
            layer.activation.name()
        ));
        for row in layer.weights.row_iter() {
            let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        let bias: Vec<String> = layer.bias.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&bias.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_model(text: &str) -> Result<ClassifierModel> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| ScfeError::parse(1, "empty model file"))?;
    if header.trim() != HEADER {
        return Err(ScfeError::parse(
            1,
            format!("expected header '{}', found '{}'", HEADER, header.trim()),
        ));
    }

    let parse_floats = |line_no: usize, line: &str, expected: usize| -> Result<Vec<f64>> {
        let vals: Result<Vec<f64>> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| ScfeError::parse(line_no + 1, format!("bad float '{}'", tok)))
            })
            .collect();
        let vals = vals?;
        if vals.len() != expected {
            return Err(ScfeError::parse(
                line_no + 1,
                format!("expected {} floats, found {}", expected, vals.len()),
            ));
        }
        Ok(vals)
    };

    let mut layers = Vec::new();
    while let Some((line_no, line)) = lines.next() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "layer" {
            return Err(ScfeError::parse(
                line_no + 1,
                format!("expected 'layer <rows> <cols> <activation>', found '{}'", line),
            ));
        }
        let rows: usize = parts[1]
            .parse()
            .map_err(|_| ScfeError::parse(line_no + 1, format!("bad row count '{}'", parts[1])))?;
        let cols: usize = parts[2]
            .parse()
            .map_err(|_| ScfeError::parse(line_no + 1, format!("bad col count '{}'", parts[2])))?;
        let activation = Activation::from_name(parts[3]).ok_or_else(|| {
            ScfeError::parse(line_no + 1, format!("unknown activation '{}'", parts[3]))
        })?;
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let (no, wline) = lines.next().ok_or_else(|| {
                ScfeError::parse(line_no + 1, format!("truncated weights at row {}", r))
            })?;
            data.extend(parse_floats(no, wline, cols)?);
        }
        let (no, bline) = lines
            .next()
            .ok_or_else(|| ScfeError::parse(line_no + 1, "truncated before bias line"))?;
        let bias = parse_floats(no, bline, rows)?;
        layers.push(Layer {
            weights: Matrix::from_data(rows, cols, data)?,
            bias,
            activation,
        });
    }
    ClassifierModel::new(layers)
}

pub fn save_model(model: &ClassifierModel, path: &Path) -> Result<()> {
    fs::write(path, serialize_model(model))
        .map_err(|e| ScfeError::io(path.display().to_string(), e))
}

pub fn load_model(path: &Path) -> Result<ClassifierModel> {
    let text =
        fs::read_to_string(path).map_err(|e| ScfeError::io(path.display().to_string(), e))?;
    parse_model(&text)
}
