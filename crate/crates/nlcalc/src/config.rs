//! `--config FILE` support: each `key = value` line becomes `--key value`, inserted right
//! after the subcommand so that flags given on the command line take precedence.

use std::fs;

use crate::error::CliError;

fn config_path(argv: &[String]) -> Option<String> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

/// Parses the file contents into flag tokens.
pub fn tokens(text: &str) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Validation(format!("config line {}: expected key = value", k + 1)));
        };
        let key = key.trim().trim_start_matches("--");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(CliError::Validation(format!("config line {}: invalid key", k + 1)));
        }
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            _ => {
                out.push(format!("--{key}"));
                out.push(value.to_string());
            }
        }
    }
    Ok(out)
}

/// Returns `argv` with the config file's flags spliced in after the subcommand.
pub fn expand(argv: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Validation(format!("cannot read config {path}: {e}")))?;
    let extra = tokens(&text)?;
    // The subcommand is the first token that is neither a flag nor the config path.
    let mut at = None;
    let mut k = 1;
    while k < argv.len() {
        if argv[k] == "--config" {
            k += 2;
            continue;
        }
        if !argv[k].starts_with('-') {
            at = Some(k + 1);
            break;
        }
        k += 1;
    }
    let Some(at) = at else {
        return Ok(argv);
    };
    let mut out = argv[..at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[at..]);
    Ok(out)
}
