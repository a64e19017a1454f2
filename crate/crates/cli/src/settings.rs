use std::path::Path;

use superchain::config::KeyValueConfig;

use crate::{CliError, Result};

/// File values first, then `--set key=value`, then named flags.
pub fn resolve(
    file: Option<&Path>,
    sets: &[String],
    flags: &[(&str, Option<String>)],
    known: &[&str],
) -> Result<KeyValueConfig> {
    let mut cfg = match file {
        Some(path) => KeyValueConfig::from_path(path)?,
        None => KeyValueConfig::new(),
    };
    for raw in sets {
        let (k, v) = raw
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{raw}`")))?;
        cfg.set(k.trim(), v.trim());
    }
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(*key, v.clone());
        }
    }
    cfg.check_keys(known)?;
    Ok(cfg)
}

pub fn flag<T: ToString>(key: &'static str, value: &Option<T>) -> (&'static str, Option<String>) {
    (key, value.as_ref().map(ToString::to_string))
}
