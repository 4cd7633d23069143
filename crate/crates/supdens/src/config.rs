//! `--config <path>`: a plain `key = value` file whose keys are flag names. Values on
//! the command line win over the file.

use std::ffi::OsString;

use supdens_core::{Error, Result};

/// Parse a config file body into `(key, value)` pairs; `#` starts a comment line.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse(format!("config line {}: expected key = value", i + 1)));
        };
        let k = k.trim().trim_start_matches("--");
        if k.is_empty() || k == "config" {
            return Err(Error::Parse(format!("config line {}: invalid key `{k}`", i + 1)));
        }
        out.push((k.to_owned(), v.trim().to_owned()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

fn has_flag(args: &[OsString], key: &str) -> bool {
    let long = format!("--{key}");
    let eq = format!("--{key}=");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == long || s.starts_with(&eq)
    })
}

/// Append config entries not already given as flags. Boolean entries take `true`/`false`.
pub fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else { return Ok(args) };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Parse(format!("cannot read config {}: {e}", path.to_string_lossy())))?;
    let mut out = args.clone();
    for (k, v) in parse_config(&text)? {
        if has_flag(&args, &k) {
            continue;
        }
        match v.as_str() {
            "true" => out.push(format!("--{k}").into()),
            "false" => {}
            _ => out.push(format!("--{k}={v}").into()),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parse_and_override() {
        let kv = parse_config("# fixture\nalpha = sqrt:2\n\nrho=0.5\nstrict = true\n").unwrap();
        assert_eq!(kv[0], ("alpha".into(), "sqrt:2".into()));
        assert_eq!(kv.len(), 3);
        assert!(parse_config("alpha sqrt:2").is_err());

        let dir = std::env::temp_dir().join(format!("supdens-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.conf");
        std::fs::write(&path, "alpha = sqrt:2\nrho = 0.5\nstrict = true\nverbose = false\n").unwrap();
        let args = os(&["supdens", "density", "--rho=0.6", "--config", path.to_str().unwrap()]);
        let merged = merge_config(args).unwrap();
        let tail: Vec<String> = merged[5..].iter().map(|a| a.to_string_lossy().into_owned()).collect();
        assert_eq!(tail, ["--alpha=sqrt:2", "--strict"]);
        std::fs::remove_dir_all(dir).unwrap();
    }
}
