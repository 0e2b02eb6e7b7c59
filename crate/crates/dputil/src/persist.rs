//! JSON records for trained models: architecture, parameters, provenance and,
//! for private models, the mechanism spec.

use std::path::Path;

use dputil_core::learners::Model;
use dputil_core::mechanisms::PrivateModel;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, HarnessError, Result};

pub const MODEL_FORMAT: &str = "dputil-model/1";
pub const PRIVATE_MODEL_FORMAT: &str = "dputil-private-model/1";

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    model: T,
}

fn save<T: Serialize>(format: &str, model: &T, path: &Path) -> Result<()> {
    let env = Envelope { format: format.to_owned(), model };
    let json = serde_json::to_string(&env).map_err(|source| HarnessError::Json { path: path.into(), source })?;
    std::fs::write(path, json).map_err(io_err(path))
}

fn load<T: DeserializeOwned>(format: &str, path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let env: Envelope<serde_json::Value> =
        serde_json::from_str(&text).map_err(|source| HarnessError::Json { path: path.into(), source })?;
    if env.format != format {
        return Err(HarnessError::Format {
            path: path.into(),
            reason: format!("expected `{format}`, found `{}`", env.format),
        });
    }
    serde_json::from_value(env.model).map_err(|source| HarnessError::Json { path: path.into(), source })
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    save(MODEL_FORMAT, model, path)
}

pub fn load_model(path: &Path) -> Result<Model> {
    load(MODEL_FORMAT, path)
}

pub fn save_private_model(model: &PrivateModel, path: &Path) -> Result<()> {
    save(PRIVATE_MODEL_FORMAT, model, path)
}

pub fn load_private_model(path: &Path) -> Result<PrivateModel> {
    load(PRIVATE_MODEL_FORMAT, path)
}
