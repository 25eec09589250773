use faulty_clique::engine::{Adversary, GreedyAdversary, NoAdversary, RandomAdversary, ScriptedAdversary};
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Clone, Debug, PartialEq)]
pub enum AdversarySpec {
    None,
    Random(f64),
    Greedy,
    Script(PathBuf),
}

impl AdversarySpec {
    /// Random adversaries draw from `seed`.
    pub fn build(&self, seed: u64) -> Result<Box<dyn Adversary>, String> {
        Ok(match self {
            Self::None => Box::new(NoAdversary),
            Self::Random(rate) => Box::new(RandomAdversary::new(*rate, seed)),
            Self::Greedy => Box::new(GreedyAdversary),
            Self::Script(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                let script = ScriptedAdversary::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
                Box::new(script.with_label(format!("script:{}", path.display())))
            }
        })
    }
}

impl FromStr for AdversarySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            None if s == "none" => Ok(Self::None),
            None if s == "greedy" => Ok(Self::Greedy),
            Some(("random", rate)) => match rate.parse::<f64>() {
                Ok(r) if (0.0..=1.0).contains(&r) => Ok(Self::Random(r)),
                _ => Err(format!("random rate must be a number in [0, 1], got {rate:?}")),
            },
            Some(("script", path)) if !path.is_empty() => Ok(Self::Script(path.into())),
            _ => Err(format!("unknown adversary {s:?}; expected none, random:<rate>, greedy or script:<path>")),
        }
    }
}

impl fmt::Display for AdversarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::None => write!(f, "none"),
            Self::Random(rate) => write!(f, "random:{rate}"),
            Self::Greedy => write!(f, "greedy"),
            Self::Script(path) => write!(f, "script:{}", path.display()),
        }
    }
}

/// Everything that determines one simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub workload: String,
    pub n: usize,
    pub c: usize,
    pub chi: f64,
    pub adversary: AdversarySpec,
    pub seed: u64,
    pub route_cost: usize,
    pub b: u32,
    pub pipeline_collect: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            workload: "semiring-mm:plus-times".into(),
            n: 8,
            c: 2,
            chi: 1.0,
            adversary: AdversarySpec::None,
            seed: 0,
            route_cost: 2,
            b: 4,
            pipeline_collect: false,
        }
    }
}

pub const CONFIG_KEYS: [&str; 9] =
    ["workload", "n", "c", "chi", "adversary", "seed", "route-cost", "b", "pipeline-collect"];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e| format!("{key} = {value:?}: {e}"))
}

impl RunConfig {
    /// Applies one `key = value` setting; keys are the long flag names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "workload" => self.workload = value.to_string(),
            "n" => self.n = parse(key, value)?,
            "c" => self.c = parse(key, value)?,
            "chi" => self.chi = parse(key, value)?,
            "adversary" => self.adversary = value.parse()?,
            "seed" => self.seed = parse(key, value)?,
            "route-cost" => self.route_cost = parse(key, value)?,
            "b" => self.b = parse(key, value)?,
            "pipeline-collect" => self.pipeline_collect = parse(key, value)?,
            _ => return Err(format!("unknown key {key:?}; known keys: {}", CONFIG_KEYS.join(", "))),
        }
        Ok(())
    }
}

/// Reads `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_config_text(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Defaults, then the file, then explicit flags.
pub fn resolve(file: &BTreeMap<String, String>, flags: &[(&str, String)]) -> Result<RunConfig, String> {
    let mut config = RunConfig::default();
    for (k, v) in file {
        config.set(k, v)?;
    }
    for (k, v) in flags {
        config.set(k, v)?;
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adversary_specs_round_trip() {
        for s in ["none", "greedy", "random:0.25", "script:s.txt"] {
            assert_eq!(s.parse::<AdversarySpec>().unwrap().to_string(), s);
        }
        for bad in ["random", "random:2", "script:", "crash"] {
            assert!(bad.parse::<AdversarySpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config_text("# sweep base\nn = 27\nc=3\nadversary = greedy\n").unwrap();
        let config = resolve(&file, &[("c", "2".into())]).unwrap();
        assert_eq!((config.n, config.c, config.adversary), (27, 2, AdversarySpec::Greedy));
        assert!(parse_config_text("n 27").is_err());
        assert!(resolve(&parse_config_text("colour = red").unwrap(), &[]).is_err());
    }
}
