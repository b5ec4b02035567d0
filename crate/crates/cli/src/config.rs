//! Layered option resolution: built-in defaults, then the command's table
//! in the TOML config file, then command-line flags.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Default,
    File,
    Flag,
}

/// Resolved options plus where each key's value came from.
#[derive(Clone, Debug)]
pub struct Resolved<T> {
    pub options: T,
    pub sources: BTreeMap<String, Source>,
}

fn object(value: Value, what: &str) -> Result<Map<String, Value>, CliError> {
    match value {
        Value::Object(m) => Ok(m),
        _ => Err(CliError::Usage(format!("{what} must be a table of options"))),
    }
}

/// `flags` is an object of flag values; null entries mean "not given".
pub fn resolve<T>(section: Option<&toml::Value>, command: &str, flags: Value) -> Result<Resolved<T>, CliError>
where
    T: Serialize + DeserializeOwned + Default,
{
    let mut merged = object(serde_json::to_value(T::default()).expect("options serialise"), command)?;
    let mut sources: BTreeMap<String, Source> = merged.keys().map(|k| (k.clone(), Source::Default)).collect();

    if let Some(section) = section {
        let table = object(
            serde_json::to_value(section).map_err(|e| CliError::Usage(format!("config [{command}]: {e}")))?,
            &format!("config section [{command}]"),
        )?;
        for (k, v) in table {
            if !merged.contains_key(&k) {
                return Err(CliError::Usage(format!("config [{command}]: unknown key {k:?}")));
            }
            merged.insert(k.clone(), v);
            sources.insert(k, Source::File);
        }
    }

    let flags = object(flags, "flags")?;
    for (k, v) in flags {
        if v.is_null() || !merged.contains_key(&k) {
            continue;
        }
        merged.insert(k.clone(), v);
        sources.insert(k, Source::Flag);
    }

    let options = serde_json::from_value(Value::Object(merged))
        .map_err(|e| CliError::Usage(format!("{command}: invalid option value: {e}")))?;
    Ok(Resolved { options, sources })
}
