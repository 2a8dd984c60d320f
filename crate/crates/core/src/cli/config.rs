//! `key = value` configuration files mirrored onto command-line flags.
//!
//! Each key names a long flag without its dashes. Lines starting with `#` and
//! blank lines are ignored. Flags given on the command line win over the file.

use std::ffi::OsString;

use super::CliError;

/// Parses the file into `(key, value)` pairs in file order.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("config line {}: expected key = value", i + 1)))?;
        let key = k.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(CliError::Input(format!("config line {}: invalid key {key:?}", i + 1)));
        }
        out.push((key.replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

fn flag_present(args: &[OsString], flag: &str) -> bool {
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&format!("{flag}="))
    })
}

/// Locates `--config PATH` (or `--config=PATH`) in `args`.
pub fn config_path(args: &[OsString]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(|p| p.to_string_lossy().into_owned());
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

/// Appends config entries as flags unless the command line already sets them.
/// Boolean entries take `true`/`false`; `false` leaves the flag unset.
pub fn merge_config(mut args: Vec<OsString>, entries: &[(String, String)]) -> Vec<OsString> {
    let original = args.clone();
    for (key, value) in entries {
        let flag = format!("--{key}");
        if key == "config" || flag_present(&original, &flag) {
            continue;
        }
        match value.as_str() {
            "true" => args.push(flag.into()),
            "false" => {}
            _ => {
                args.push(flag.into());
                args.push(value.into());
            }
        }
    }
    args
}
