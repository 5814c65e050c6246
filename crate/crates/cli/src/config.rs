//! Run configuration: a flat `key = value` file merged under command-line
//! flags. Flags win; unknown keys are rejected.

use std::collections::BTreeMap;
use std::str::FromStr;

/// Keys accepted in config files and produced by flags.
pub const KEYS: &[&str] = &[
    "aniso",
    "domain",
    "p",
    "R",
    "h",
    "out",
    "seed",
    "threads",
    "timing",
    "set",
    "points",
    "r",
    "r1",
    "r2",
    "c_tol",
    "per_r1",
    "max_nodes",
    "lambda0",
    "mu0",
    "eps0",
    "stages",
    "lambda_floor",
    "tolerance",
    "stage_tolerance",
    "max_iters",
    "coarse_to_fine",
];

/// Invalid configuration; the CLI exits with status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn known(key: &str) -> Result<(), ConfigError> {
    if KEYS.contains(&key) {
        Ok(())
    } else {
        Err(ConfigError(format!("unknown config key `{key}`")))
    }
}

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_file(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("line {}: expected `key = value`", i + 1)))?;
        let k = k.trim();
        known(k)?;
        if map.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(ConfigError(format!("line {}: duplicate key `{k}`", i + 1)));
        }
    }
    Ok(map)
}

/// Merged settings with typed accessors.
#[derive(Debug, Default)]
pub struct Settings {
    map: BTreeMap<String, String>,
}

impl Settings {
    pub fn new(file: BTreeMap<String, String>) -> Self {
        Self { map: file }
    }

    /// Override a key with a flag value.
    pub fn flag(&mut self, key: &str, value: Option<String>) -> Result<(), ConfigError> {
        known(key)?;
        if let Some(v) = value {
            self.map.insert(key.to_string(), v);
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|_| ConfigError(format!("invalid value `{v}` for `{key}`"))))
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// A positive real; fractions such as `1/64` are accepted.
    pub fn real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.raw(key).map(|v| parse_real(v).ok_or_else(|| ConfigError(format!("invalid number `{v}` for `{key}`")))).transpose()
    }

    /// Comma-separated list of reals.
    pub fn reals(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|t| parse_real(t).ok_or_else(|| ConfigError(format!("invalid number `{t}` in `{key}`"))))
                    .collect()
            })
            .transpose()
    }

    pub fn boolean(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some("true" | "yes" | "1" | "on") => Ok(true),
            Some("false" | "no" | "0" | "off") => Ok(false),
            Some(v) => Err(ConfigError(format!("invalid boolean `{v}` for `{key}`"))),
        }
    }
}

/// A real number written as a decimal or as `a/b`.
pub fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?,
        None => s.parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_files() {
        let m = parse_file("# run\naniso = l1\nh = 1/64  # spacing\n\nR=2,4\n").unwrap();
        assert_eq!(m["aniso"], "l1");
        let s = Settings::new(m);
        assert_eq!(s.real("h").unwrap(), Some(1.0 / 64.0));
        assert_eq!(s.reals("R").unwrap(), Some(vec![2.0, 4.0]));
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(parse_file("bogus = 1").is_err());
        assert!(parse_file("p = 1\np = 2").is_err());
        assert!(parse_file("just text").is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let mut s = Settings::new(parse_file("p = 1.2").unwrap());
        s.flag("p", Some("1.5".into())).unwrap();
        s.flag("h", None).unwrap();
        assert_eq!(s.real("p").unwrap(), Some(1.5));
        assert_eq!(s.real("h").unwrap(), None);
    }

    #[test]
    fn reals_and_booleans() {
        assert_eq!(parse_real(" 3/4 "), Some(0.75));
        assert_eq!(parse_real("1/0"), None);
        assert_eq!(parse_real("x"), None);
        let s = Settings::new(parse_file("coarse_to_fine = no").unwrap());
        assert!(!s.boolean("coarse_to_fine", true).unwrap());
    }
}
