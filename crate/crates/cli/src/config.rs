//! Experiment configuration: a TOML document with a fixed schema.
//!
//! ```toml
//! experiment = "fe"
//!
//! [law]
//! kind = "power"      # power | geometric | deterministic | table
//! alpha = 0.3
//! gamma = 0.0         # L(n) = c (log(e + n))^gamma, constant when 0
//!
//! [parameters]
//! h = [0.01, 0.1, 1.0]
//!
//! [output]
//! dir = "out"
//! ```

use crate::CliError;
use pinning::laws::{deterministic, geometric, make_power_law, make_table_law, InterArrivalLaw, SlowVariation, SvKind};
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub law: LawSpec,
    #[serde(default)]
    pub parameters: BTreeMap<String, toml::Value>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default)]
    pub json: bool,
}

fn one() -> f64 {
    1.0
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LawSpec {
    Power {
        alpha: f64,
        #[serde(default, skip_serializing_if = "is_zero")]
        gamma: f64,
        #[serde(default = "one")]
        c: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail_tol: Option<f64>,
    },
    Geometric {
        p: f64,
    },
    Deterministic,
    Table {
        weights: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        geo_tail: Option<f64>,
    },
}

impl LawSpec {
    /// The law with `K(0..=n)` cached.
    pub fn build(&self, n: usize) -> Result<InterArrivalLaw, CliError> {
        let law = match self {
            LawSpec::Power { alpha, gamma, c, tail_tol } => {
                let kind = if *gamma == 0.0 { SvKind::Constant } else { SvKind::LogPower };
                let sv = SlowVariation { kind, c: *c, gamma: *gamma };
                make_power_law(*alpha, sv, n.max(64), tail_tol.unwrap_or(1e-8))?
            }
            LawSpec::Geometric { p } => geometric(*p)?.with_cache(n),
            LawSpec::Deterministic => deterministic().with_cache(n),
            LawSpec::Table { weights, geo_tail } => make_table_law(weights, *geo_tail)?.with_cache(n),
        };
        Ok(law)
    }

    /// Sums over this law are finite or geometric, so derived numbers are exact up to rounding.
    pub fn is_closed_form(&self) -> bool {
        !matches!(self, LawSpec::Power { .. })
    }

    /// `kind:key=value,...`, e.g. `power:alpha=0.3,gamma=1` or `geometric:p=0.5`.
    pub fn parse(spec: &str) -> Result<Self, CliError> {
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let mut doc = format!("kind = {}\n", toml::Value::String(kind.trim().to_string()));
        for kv in split_top_level(rest) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("law spec `{spec}`: expected key=value, got `{kv}`")))?;
            doc.push_str(&format!("{} = {}\n", k.trim(), v.trim()));
        }
        toml::from_str(&doc).map_err(|e| CliError::Config(format!("law spec `{spec}`: {}", e.message())))
    }
}

/// Splits on commas outside brackets so that `weights=[0.5,0.5]` stays whole.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, ch) in s.char_indices() {
        match ch {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out.into_iter().filter(|p| !p.trim().is_empty()).collect()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| {
            let at = e
                .span()
                .map(|sp| {
                    let line = text[..sp.start.min(text.len())].matches('\n').count() + 1;
                    format!("line {line}: ")
                })
                .unwrap_or_default();
            CliError::Config(format!("{at}{}", e.message()))
        })
    }
}

/// `key = value` where the value is a TOML literal; bare words are taken as strings.
pub fn parse_param(kv: &str) -> Result<(String, toml::Value), CliError> {
    let (k, v) = kv
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("parameter `{kv}`: expected key=value")))?;
    let doc = format!("v = {}", v.trim());
    let value = match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(v.trim().to_string()),
    };
    Ok((k.trim().to_string(), value))
}

/// Typed access to the parameter map. Every key must be read; leftovers are rejected.
pub struct Params<'a> {
    map: &'a BTreeMap<String, toml::Value>,
    used: RefCell<BTreeSet<&'static str>>,
}

impl<'a> Params<'a> {
    pub fn new(map: &'a BTreeMap<String, toml::Value>) -> Self {
        Params { map, used: RefCell::new(BTreeSet::new()) }
    }

    fn get(&self, key: &'static str) -> Option<&toml::Value> {
        self.used.borrow_mut().insert(key);
        self.map.get(key)
    }

    fn bad(key: &str, want: &str, v: &toml::Value) -> CliError {
        CliError::Config(format!("parameter `{key}`: expected {want}, got {v}"))
    }

    fn num(key: &str, v: &toml::Value) -> Result<f64, CliError> {
        match v {
            toml::Value::Float(x) => Ok(*x),
            toml::Value::Integer(i) => Ok(*i as f64),
            _ => Err(Self::bad(key, "a number", v)),
        }
    }

    fn uint(key: &str, v: &toml::Value) -> Result<u64, CliError> {
        match v {
            toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
            _ => Err(Self::bad(key, "a nonnegative integer", v)),
        }
    }

    pub fn f64_or(&self, key: &'static str, default: f64) -> Result<f64, CliError> {
        self.get(key).map_or(Ok(default), |v| Self::num(key, v))
    }

    pub fn f64_req(&self, key: &'static str) -> Result<f64, CliError> {
        let v = self.get(key).ok_or_else(|| CliError::Config(format!("missing parameter `{key}`")))?;
        Self::num(key, v)
    }

    pub fn u64_or(&self, key: &'static str, default: u64) -> Result<u64, CliError> {
        self.get(key).map_or(Ok(default), |v| Self::uint(key, v))
    }

    pub fn usize_or(&self, key: &'static str, default: usize) -> Result<usize, CliError> {
        Ok(self.u64_or(key, default as u64)? as usize)
    }

    pub fn bool_or(&self, key: &'static str, default: bool) -> Result<bool, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(toml::Value::Boolean(b)) => Ok(*b),
            Some(v) => Err(Self::bad(key, "true or false", v)),
        }
    }

    /// A scalar is read as a one-element list.
    pub fn f64_list_or(&self, key: &'static str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(toml::Value::Array(a)) => a.iter().map(|v| Self::num(key, v)).collect(),
            Some(v) => Ok(vec![Self::num(key, v)?]),
        }
    }

    pub fn f64_list_req(&self, key: &'static str) -> Result<Vec<f64>, CliError> {
        if !self.map.contains_key(key) {
            return Err(CliError::Config(format!("missing parameter `{key}`")));
        }
        self.f64_list_or(key, &[])
    }

    pub fn usize_list_or(&self, key: &'static str, default: &[usize]) -> Result<Vec<usize>, CliError> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(toml::Value::Array(a)) => a.iter().map(|v| Self::uint(key, v).map(|x| x as usize)).collect(),
            Some(v) => Ok(vec![Self::uint(key, v)? as usize]),
        }
    }

    /// Rejects keys that no accessor asked for. `seed` is global and always accepted.
    pub fn finish(&self) -> Result<(), CliError> {
        let used = self.used.borrow();
        let extra: Vec<&str> =
            self.map.keys().map(String::as_str).filter(|k| !used.contains(k) && *k != "seed").collect();
        if extra.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(format!("unknown parameter(s): {}", extra.join(", "))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn law_specs() {
        assert_eq!(
            LawSpec::parse("power:alpha=0.3").unwrap(),
            LawSpec::Power { alpha: 0.3, gamma: 0.0, c: 1.0, tail_tol: None }
        );
        assert_eq!(LawSpec::parse("geometric:p=0.5").unwrap(), LawSpec::Geometric { p: 0.5 });
        assert_eq!(LawSpec::parse("deterministic").unwrap(), LawSpec::Deterministic);
        assert_eq!(
            LawSpec::parse("table:weights=[0.25, 0.75]").unwrap(),
            LawSpec::Table { weights: vec![0.25, 0.75], geo_tail: None }
        );
        let e = LawSpec::parse("power:alpah=0.3").unwrap_err().to_string();
        assert!(e.contains("alpah"), "{e}");
        assert!(LawSpec::parse("cauchy:x=1").is_err());
        assert!(LawSpec::parse("power:alpha").is_err());
    }

    #[test]
    fn config_errors_name_the_line() {
        let text = "experiment = \"fe\"\n[law]\nkind = \"power\"\nalpha = \"x\"\n";
        let e = ExperimentConfig::from_toml(text).unwrap_err().to_string();
        assert!(e.contains("line 2") || e.contains("line 4"), "{e}");
        let e = ExperimentConfig::from_toml("experiment = \"fe\"\nlaw = 3\nbogus = 1\n").unwrap_err();
        assert!(matches!(e, CliError::Config(_)));
    }

    #[test]
    fn params() {
        let (k, v) = parse_param("h=[0.1, 1]").unwrap();
        assert_eq!(k, "h");
        let mut map = BTreeMap::new();
        map.insert(k, v);
        map.insert("n".into(), toml::Value::Integer(5));
        map.insert("extra".into(), toml::Value::Boolean(true));
        let p = Params::new(&map);
        assert_eq!(p.f64_list_req("h").unwrap(), vec![0.1, 1.0]);
        assert_eq!(p.usize_or("n", 1).unwrap(), 5);
        assert_eq!(p.f64_or("tol", 1e-9).unwrap(), 1e-9);
        assert!(p.finish().is_err());
        assert_eq!(parse_param("route=table").unwrap().1, toml::Value::String("table".into()));
    }
}
