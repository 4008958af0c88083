//! `key=value` configuration files merged into the command line.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};

/// Path given to `--config`, if any.
pub fn config_path(args: &[String]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Turns `key=value` lines into flags. Blank lines and `#` comments are
/// skipped; `true` gives a bare flag and `false` drops it.
pub fn config_flags(text: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected key=value, got {line:?}", n + 1);
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || k == "config" {
            bail!("config line {}: invalid key {k:?}", n + 1);
        }
        match v {
            "true" => out.push(format!("--{k}")),
            "false" => {}
            _ => {
                out.push(format!("--{k}"));
                out.push(v.to_string());
            }
        }
    }
    Ok(out)
}

/// Command line with the configuration appended, so that its values take
/// precedence over the same flags given earlier.
pub fn merged_args(args: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading config {}", path.display()))?;
    let mut args = args;
    args.extend(config_flags(&text)?);
    Ok(args)
}
