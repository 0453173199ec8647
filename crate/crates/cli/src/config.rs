//! `--config` files: `key = value` lines turned into flags that are placed
//! right after the subcommand, so flags typed on the command line override them.

use std::ffi::OsString;
use std::path::PathBuf;

const SUBCOMMANDS: [&str; 6] = ["fit", "cv", "simulate", "bounds", "oracle-check", "gen-synthetic"];

/// Remove `--config FILE` / `--config=FILE` from `argv`.
pub fn take_config(argv: &mut Vec<OsString>) -> Result<Option<PathBuf>, String> {
    let mut found = None;
    let mut i = 1;
    while i < argv.len() {
        let s = argv[i].to_string_lossy().into_owned();
        if s == "--config" {
            if i + 1 >= argv.len() {
                return Err("--config needs a file".into());
            }
            found = Some(PathBuf::from(argv.remove(i + 1)));
            argv.remove(i);
        } else if let Some(v) = s.strip_prefix("--config=") {
            found = Some(PathBuf::from(v));
            argv.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(found)
}

/// Flags for the settings in `text`.
pub fn to_flags(text: &str) -> Result<Vec<OsString>, String> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected `key = value`", lineno + 1))?;
        let flag = format!("--{}", key.trim().replace('_', "-"));
        match value.trim() {
            "true" => out.push(flag.into()),
            "false" => {}
            v => {
                out.push(flag.into());
                out.push(v.into());
            }
        }
    }
    Ok(out)
}

/// Insert `flags` after the subcommand name.
pub fn inject(argv: &mut Vec<OsString>, flags: Vec<OsString>) {
    let at = argv
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
        .map(|i| i + 1)
        .unwrap_or(argv.len());
    argv.splice(at..at, flags);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn config_flag_is_removed() {
        let mut a = os(&["prescience", "fit", "--config", "c.txt", "--q", "1"]);
        assert_eq!(take_config(&mut a).unwrap(), Some(PathBuf::from("c.txt")));
        assert_eq!(a, os(&["prescience", "fit", "--q", "1"]));
        let mut b = os(&["prescience", "--config=x", "cv"]);
        assert_eq!(take_config(&mut b).unwrap(), Some(PathBuf::from("x")));
        assert!(take_config(&mut os(&["prescience", "--config"])).is_err());
    }

    #[test]
    fn settings_become_flags() {
        let f = to_flags("# comment\nq_candidates = 1,2,3\nwarm_start = true\nstandardize = false\n\nalpha = -1 # sign\n").unwrap();
        assert_eq!(f, os(&["--q-candidates", "1,2,3", "--warm-start", "--alpha", "-1"]));
        assert!(to_flags("oops").is_err());
    }

    #[test]
    fn injected_after_subcommand() {
        let mut a = os(&["prescience", "--threads", "1", "fit", "--q", "2"]);
        inject(&mut a, os(&["--q", "1"]));
        assert_eq!(a, os(&["prescience", "--threads", "1", "fit", "--q", "1", "--q", "2"]));
    }
}
