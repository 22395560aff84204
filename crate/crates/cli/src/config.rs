//! `key=value` configuration files and flag resolution.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Settings read from a config file; command-line flags take precedence.
#[derive(Debug, Default, Clone)]
pub struct Settings {
    file: BTreeMap<String, String>,
    /// Every resolved value, for the manifest.
    pub resolved: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('_', "-")
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut file = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value, got '{line}'", n + 1)))?;
            file.insert(normalize(k), v.trim().to_string());
        }
        Ok(Self { file, resolved: BTreeMap::new() })
    }

    /// Flag value if given, else the config entry, else `default`.
    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: Option<T>) -> Result<T, CliError>
    where
        T: FromStr + ToString,
        T::Err: std::fmt::Display,
    {
        let value = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(raw) => raw
                    .parse::<T>()
                    .map_err(|e| CliError::Usage(format!("config key '{key}': cannot parse '{raw}': {e}")))?,
                None => default.ok_or_else(|| CliError::Usage(format!("missing required setting '{key}'")))?,
            },
        };
        self.resolved.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    pub fn get_opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr + ToString,
        T::Err: std::fmt::Display,
    {
        if flag.is_none() && !self.file.contains_key(key) {
            return Ok(None);
        }
        self.get(key, flag, None).map(Some)
    }

    /// Config keys that no command consumed.
    pub fn unused(&self) -> Vec<String> {
        self.file.keys().filter(|k| !self.resolved.contains_key(*k)).cloned().collect()
    }
}

/// Comma-separated list such as `10,20,40`.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: std::fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.trim().parse::<T>().map_err(|e| format!("'{p}': {e}")))
            .collect::<Result<Vec<T>, _>>()
            .map(List)
    }
}

impl<T: ToString> std::fmt::Display for List<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let mut s = Settings::parse("eta = 0.3\n# comment\ntheta_bar=0.7\n").unwrap();
        assert_eq!(s.get("eta", Some(0.1), None).unwrap(), 0.1);
        assert_eq!(s.get::<f64>("theta-bar", None, None).unwrap(), 0.7);
        assert_eq!(s.get::<f64>("T", None, Some(2.0)).unwrap(), 2.0);
        assert!(s.get::<f64>("missing", None, None).is_err());
        assert!(Settings::parse("novalue").is_err());
    }

    #[test]
    fn lists() {
        let l: List<usize> = "10, 20,40".parse().unwrap();
        assert_eq!(l.0, vec![10, 20, 40]);
        assert_eq!(l.to_string(), "10,20,40");
    }
}
