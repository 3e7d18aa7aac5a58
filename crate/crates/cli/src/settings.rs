//! Parameter resolution: command-line flag, then config file, then default.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Reads `key = value` lines; `#` starts a comment.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("{}:{}: expected key = value", path.display(), lineno + 1))
        })?;
        let key = key.trim().replace('_', "-");
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::Usage(format!(
                "{}:{}: duplicate key {key}",
                path.display(),
                lineno + 1
            )));
        }
    }
    Ok(map)
}

/// Resolves each parameter once and remembers the result for the output
/// metadata.
pub struct Resolver {
    file: BTreeMap<String, String>,
    resolved: Vec<(String, String)>,
}

impl Resolver {
    pub fn new(file: BTreeMap<String, String>) -> Self {
        Self {
            file,
            resolved: Vec::new(),
        }
    }

    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match (flag, self.file.remove(key)) {
            (Some(v), _) => v,
            (None, Some(text)) => text
                .parse()
                .map_err(|e| CliError::Usage(format!("config key {key}: {e}")))?,
            (None, None) => default,
        };
        self.resolved.push((key.to_string(), value.to_string()));
        Ok(value)
    }

    pub fn get_opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match (flag, self.file.remove(key)) {
            (Some(v), _) => Some(v),
            (None, Some(text)) => Some(
                text.parse()
                    .map_err(|e| CliError::Usage(format!("config key {key}: {e}")))?,
            ),
            (None, None) => None,
        };
        if let Some(v) = &value {
            self.resolved.push((key.to_string(), v.to_string()));
        }
        Ok(value)
    }

    /// Records a derived value that has no flag of its own.
    pub fn note(&mut self, key: &str, value: impl Display) {
        self.resolved.push((key.to_string(), value.to_string()));
    }

    /// Discards keys that only matter to other subcommands' shared flags.
    pub fn ignore(&mut self, key: &str) {
        self.file.remove(key);
    }

    /// Fails on config keys nobody asked for.
    pub fn finish(self) -> Result<Vec<(String, String)>, CliError> {
        if let Some(key) = self.file.keys().next() {
            return Err(CliError::Usage(format!("unknown config key {key}")));
        }
        Ok(self.resolved)
    }
}

pub fn parse_list<T>(key: &str, text: &str) -> Result<Vec<T>, CliError>
where
    T: FromStr,
    T::Err: Display,
{
    let items: Vec<&str> = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(CliError::Usage(format!("{key}: list is empty")));
    }
    items
        .into_iter()
        .map(|s| s.parse().map_err(|e| CliError::Usage(format!("{key}: bad entry {s:?}: {e}"))))
        .collect()
}

/// Comma list of reals, or an inclusive integer range `a..b`.
pub fn parse_grid(key: &str, text: &str) -> Result<Vec<f64>, CliError> {
    if let Some((a, b)) = text.split_once("..") {
        let bad = |e: std::num::ParseIntError| CliError::Usage(format!("{key}: {e}"));
        let a: u32 = a.trim().parse().map_err(bad)?;
        let b: u32 = b.trim().parse().map_err(bad)?;
        if a > b {
            return Err(CliError::Usage(format!("{key}: range {a}..{b} is empty")));
        }
        return Ok((a..=b).map(f64::from).collect());
    }
    parse_list(key, text)
}

/// `RxC` pairs such as `13x100,26x100`.
pub fn parse_pairs(key: &str, text: &str) -> Result<Vec<(u32, u32)>, CliError> {
    let items: Vec<String> = parse_list(key, text)?;
    items
        .iter()
        .map(|item| {
            let (r, c) = item
                .split_once(['x', 'X'])
                .ok_or_else(|| CliError::Usage(format!("{key}: expected RxC, got {item:?}")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<u32>()
                    .map_err(|e| CliError::Usage(format!("{key}: bad entry {item:?}: {e}")))
            };
            Ok((parse(r)?, parse(c)?))
        })
        .collect()
}
