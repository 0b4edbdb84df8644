//! `--config` files: `key = value` lines, `#` comments. Keys are long option
//! names; `command` names the subcommand. Entries are spliced in right after
//! the subcommand so that flags given on the command line win.

use std::ffi::OsString;
use std::path::Path;

use crate::error::CliError;

/// Global options that take a value, for locating the subcommand token.
const VALUED_GLOBALS: &[&str] = &["--config", "--threads", "--mode", "--format", "--output", "-o", "--seed"];

pub fn parse_file(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", no + 1)))?;
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", no + 1)));
        }
        out.push((key, v.trim().trim_matches('"').to_string()));
    }
    Ok(out)
}

fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

fn subcommand_position(argv: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < argv.len() {
        let s = argv[i].to_string_lossy();
        if s.starts_with('-') {
            if VALUED_GLOBALS.contains(&s.as_ref()) {
                i += 1;
            }
        } else {
            return Some(i);
        }
        i += 1;
    }
    None
}

/// `argv` with the entries of the `--config` file (if any) spliced in.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let entries = parse_file(Path::new(&path))?;
    let mut argv = argv;
    let mut flags: Vec<OsString> = Vec::new();
    let mut command = None;
    for (key, value) in entries {
        match key.as_str() {
            "command" => command = Some(value),
            "config" => {}
            _ => match value.as_str() {
                "true" => flags.push(format!("--{key}").into()),
                "false" => {}
                _ => {
                    flags.push(format!("--{key}").into());
                    flags.push(value.into());
                }
            },
        }
    }
    let pos = match subcommand_position(&argv) {
        Some(p) => p,
        None => {
            let name = command.ok_or_else(|| {
                CliError::Usage("no subcommand given on the command line or in the config".into())
            })?;
            argv.push(name.into());
            argv.len() - 1
        }
    };
    argv.splice(pos + 1..pos + 1, flags);
    Ok(argv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_lines() {
        let e = parse("# run\ndist = bernoulli\nsweep=true  # all degrees\n\nmax_len = 4\n").unwrap();
        assert_eq!(
            e,
            vec![
                ("dist".to_string(), "bernoulli".to_string()),
                ("sweep".to_string(), "true".to_string()),
                ("max-len".to_string(), "4".to_string())
            ]
        );
        assert!(parse("novalue").is_err());
    }

    #[test]
    fn finds_the_subcommand() {
        assert_eq!(subcommand_position(&os(&["fp", "--mode", "exact", "maxcorr", "--m", "1"])), Some(3));
        assert_eq!(subcommand_position(&os(&["fp", "--sweep"])), None);
    }
}
