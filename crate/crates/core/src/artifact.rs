//! Compiled artifact file:
//!
//! ```text
//! vdconf artifact v1
//! model <model JSON on one line>
//! layout <n> <k_0> ... <k_{n-1}>
//! bdd v1 <num_bool_vars>
//! <id> <var> <low> <high>
//! ...
//! roots <root>
//! ```

use std::fmt::Write;
use std::sync::Arc;

use thiserror::Error;

use crate::bdd::{BddError, BddStore};
use crate::encode::{BoolLayout, CompiledSpace};
use crate::model::{parse_model, ModelError};

const MAGIC: &str = "vdconf artifact v1";

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("embedded model: {0}")]
    Model(#[from] ModelError),
    #[error(transparent)]
    Bdd(#[from] BddError),
}

pub fn write_artifact(space: &CompiledSpace) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "model {}", space.model.to_json());
    let _ = write!(out, "layout {}", space.layout.len());
    for i in 0..space.layout.len() {
        let _ = write!(out, " {}", space.layout.bits(i));
    }
    out.push('\n');
    out.push_str(&space.store.write_text(&[space.root]));
    out
}

pub fn read_artifact(text: &str) -> Result<CompiledSpace, ArtifactError> {
    let format = |line: usize, message: &str| ArtifactError::Format {
        line,
        message: message.to_string(),
    };
    let mut lines = text.splitn(4, '\n');
    if lines.next().map(str::trim_end) != Some(MAGIC) {
        return Err(format(1, "not a vdconf artifact"));
    }
    let model_line = lines
        .next()
        .ok_or_else(|| format(2, "missing model line"))?;
    let json = model_line
        .strip_prefix("model ")
        .ok_or_else(|| format(2, "expected `model <json>`"))?;
    let model = parse_model(json)?;

    let layout_line = lines
        .next()
        .ok_or_else(|| format(3, "missing layout line"))?;
    let fields: Vec<&str> = layout_line.split_whitespace().collect();
    if fields.first() != Some(&"layout") {
        return Err(format(3, "expected `layout <n> <k_0> ...`"));
    }
    let numbers: Vec<u32> = fields[1..]
        .iter()
        .map(|f| f.parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|_| format(3, "layout fields must be integers"))?;
    let layout = BoolLayout::for_model(&model);
    let expected: Vec<u32> = std::iter::once(layout.len() as u32)
        .chain((0..layout.len()).map(|i| layout.bits(i)))
        .collect();
    if numbers != expected {
        return Err(format(3, "layout does not match the embedded model"));
    }

    let (store, roots) = BddStore::read_text(lines.next().unwrap_or(""), 4)?;
    if store.num_vars() != layout.num_bool_vars() {
        return Err(format(4, "BDD variable count does not match the layout"));
    }
    let [root] = roots.as_slice() else {
        return Err(format(4, "artifact must have exactly one root"));
    };
    Ok(CompiledSpace {
        model,
        layout,
        root: *root,
        store: Arc::new(store),
    })
}
