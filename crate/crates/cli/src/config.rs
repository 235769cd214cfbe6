//! Experiment manifests: flat `key = value` files whose keys mirror flag
//! names. Entries are spliced into argv right after the subcommand so that
//! flags given on the command line win.

use std::fs;
use std::path::Path;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are
/// skipped, keys may use `_` or `-`.
pub fn parse(text: &str) -> Result<Vec<Entry>, CliError> {
    let mut entries = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("config line {}: expected `key = value`", n + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(CliError::usage(format!("config line {}: invalid key", n + 1)));
        }
        let value = value.trim().trim_matches('"').to_string();
        entries.push(Entry { key, value });
    }
    Ok(entries)
}

pub fn load(path: &Path) -> Result<Vec<Entry>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    parse(&text)
}

/// Flag tokens for the entries: `true` becomes a bare switch, `false` is
/// dropped, anything else is `--key value`.
pub fn to_args(entries: &[Entry]) -> Vec<String> {
    let mut out = Vec::new();
    for e in entries {
        match e.value.as_str() {
            "true" => out.push(format!("--{}", e.key)),
            "false" => {}
            v => {
                out.push(format!("--{}", e.key));
                out.push(v.to_string());
            }
        }
    }
    out
}

/// Removes `--config FILE` / `--config=FILE` from argv and returns the path.
pub fn take_config_flag(args: &mut Vec<String>) -> Result<Option<String>, CliError> {
    let mut found = None;
    let mut i = 1;
    while i < args.len() {
        if args[i] == "--" {
            break;
        }
        if args[i] == "--config" {
            if i + 1 >= args.len() {
                return Err(CliError::usage("--config requires a file"));
            }
            found = Some(args.remove(i + 1));
            args.remove(i);
        } else if let Some(v) = args[i].strip_prefix("--config=") {
            found = Some(v.to_string());
            args.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(found)
}

/// Inserts the config tokens after the first occurrence of a subcommand.
pub fn splice(args: &mut Vec<String>, subcommands: &[&str], extra: Vec<String>) -> Result<(), CliError> {
    let pos = args
        .iter()
        .skip(1)
        .position(|a| subcommands.contains(&a.as_str()))
        .map(|p| p + 2)
        .ok_or_else(|| CliError::usage("--config needs a subcommand"))?;
    args.splice(pos..pos, extra);
    Ok(())
}
