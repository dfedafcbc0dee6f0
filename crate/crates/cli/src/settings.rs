//! Flat `key=value` settings: built-in defaults, overridden by a config
//! file, overridden by command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

const KEYS: [&str; 9] = ["d", "grid", "box", "p", "q", "n", "R", "seed", "out"];

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or infeasible sizes. Exit code 2.
    Usage(String),
    /// The run itself broke down. Exit code 1.
    Failed(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl From<kolmogorov::Error> for CliError {
    fn from(e: kolmogorov::Error) -> Self {
        use kolmogorov::Error::*;
        match e {
            InvalidArgument(_) | DimensionMismatch { .. } | Underresolved { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

pub fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

/// Raw settings keyed by name; tolerance overrides live under `tol.KEY`.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    fn check_key(key: &str) -> Result<(), CliError> {
        match key.strip_prefix("tol.") {
            Some(k) if !k.is_empty() => Ok(()),
            Some(_) => usage("empty tolerance name"),
            None if KEYS.contains(&key) => Ok(()),
            None => usage(format!("unknown setting `{key}`; expected one of {} or tol.KEY", KEYS.join(", "))),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), CliError> {
        Self::check_key(key)?;
        self.values.insert(key.to_string(), value.into());
        Ok(())
    }

    /// Reads `key = value` lines; blank lines and `#` comments are skipped.
    pub fn merge_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return usage(format!("{}:{}: expected key=value", path.display(), i + 1));
            };
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// `KEY=VAL` from `--tol`.
    pub fn set_tol(&mut self, pair: &str) -> Result<(), CliError> {
        match pair.split_once('=') {
            Some((k, v)) => self.set(&format!("tol.{}", k.trim()), v.trim()),
            None => usage(format!("--tol expects KEY=VAL, got `{pair}`")),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| CliError::Usage(format!("cannot parse {key} = `{v}`"))),
        }
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| CliError::Usage(format!("cannot parse {key} = `{v}`"))))
                .collect::<Result<Vec<T>, _>>()
                .map(Some),
        }
    }

    /// Tolerance overrides, rejecting any name outside `known`.
    pub fn tolerances(&self, known: &[&str]) -> Result<BTreeMap<String, f64>, CliError> {
        let mut out = BTreeMap::new();
        for (k, v) in &self.values {
            if let Some(name) = k.strip_prefix("tol.") {
                if !known.contains(&name) {
                    let hint = if known.is_empty() { "none".to_string() } else { known.join(", ") };
                    return usage(format!("unknown tolerance `{name}` for this command; known: {hint}"));
                }
                let x: f64 = v.parse().map_err(|_| CliError::Usage(format!("cannot parse tolerance {name} = `{v}`")))?;
                out.insert(name.to_string(), x);
            }
        }
        Ok(out)
    }

    /// Keys that are set but not read by the current command.
    pub fn unused(&self, used: &[&str]) -> Vec<String> {
        self.values.keys().filter(|k| !k.starts_with("tol.") && !used.contains(&k.as_str())).cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn later_sets_override_earlier_ones() {
        let mut s = Settings::default();
        s.set("n", "5").unwrap();
        s.set("n", "7").unwrap();
        assert_eq!(s.get::<usize>("n").unwrap(), Some(7));
    }

    #[test]
    fn lists_and_tolerances_parse() {
        let mut s = Settings::default();
        s.set("R", "4, 8,16").unwrap();
        s.set_tol("drift=0.2").unwrap();
        assert_eq!(s.list::<f64>("R").unwrap(), Some(vec![4.0, 8.0, 16.0]));
        assert_eq!(s.tolerances(&["drift"]).unwrap()["drift"], 0.2);
        assert!(s.tolerances(&["weak"]).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut s = Settings::default();
        assert!(s.set("colour", "red").is_err());
        assert!(s.set_tol("novalue").is_err());
    }

    #[test]
    fn config_file_skips_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# sizes\nn = 12\n\nseed=3 # trailing\ntol.weak = 1e-3\n").unwrap();
        let mut s = Settings::default();
        s.merge_file(&path).unwrap();
        assert_eq!(s.get::<usize>("n").unwrap(), Some(12));
        assert_eq!(s.get::<u64>("seed").unwrap(), Some(3));
        assert_eq!(s.tolerances(&["weak"]).unwrap()["weak"], 1e-3);
    }

    #[test]
    fn bad_numbers_are_usage_errors() {
        let mut s = Settings::default();
        s.set("d", "one").unwrap();
        assert!(matches!(s.get::<usize>("d"), Err(CliError::Usage(_))));
    }
}
