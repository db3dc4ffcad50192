use std::path::Path;

use super::{AppModel, AppModelError};

/// Load and validate an app-model document (TOML key/value tree with
/// top-level app_name, initial_screen, screens[], transitions[]).
pub fn load_app_model(path: impl AsRef<Path>) -> Result<AppModel, AppModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| AppModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_app_model(&text).map_err(|e| match e {
        AppModelError::Parse { message, .. } => AppModelError::Parse {
            path: path.display().to_string(),
            message,
        },
        other => other,
    })
}

pub fn parse_app_model(text: &str) -> Result<AppModel, AppModelError> {
    let model: AppModel = toml::from_str(text).map_err(|e| AppModelError::Parse {
        path: "<inline>".into(),
        message: e.to_string(),
    })?;
    model.validate()?;
    Ok(model)
}
