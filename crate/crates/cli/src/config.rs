//! Optional `key = value` configuration files.
//!
//! Keys are long flag names without the leading dashes. A file is spliced
//! into the argument list right after the subcommand, so flags given on the
//! command line override it.

use std::ffi::OsString;
use std::fs;

use crate::CliError;

/// Parses config text into `--key value` pairs. `key = true` becomes a bare
/// flag and `key = false` is dropped.
pub fn config_args(text: &str) -> Result<Vec<OsString>, CliError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", n + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || k.starts_with('-') || k == "config" {
            return Err(CliError::Usage(format!("config line {}: bad key {k:?}", n + 1)));
        }
        match v {
            "true" => out.push(format!("--{k}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{k}").into());
                out.push(v.into());
            }
        }
    }
    Ok(out)
}

/// Removes `--config <path>` / `--config=<path>` from `args` and inserts the
/// file's flags after the subcommand.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            let p = it.next().ok_or_else(|| CliError::Usage("--config needs a path".into()))?;
            path = Some(p);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(p.into());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.to_string_lossy())))?;
    let extra = config_args(&text)?;
    // Position of the subcommand: first non-flag argument after the program
    // name, skipping the value of the global --threads flag.
    let mut i = 1;
    while i < rest.len() {
        let s = rest[i].to_string_lossy();
        if s == "--threads" {
            i += 2;
        } else if s.starts_with('-') {
            i += 1;
        } else {
            break;
        }
    }
    if i >= rest.len() {
        return Err(CliError::Usage("--config requires a subcommand".into()));
    }
    let tail = rest.split_off(i + 1);
    rest.extend(extra);
    rest.extend(tail);
    Ok(rest)
}
