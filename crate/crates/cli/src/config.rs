use anyhow::{bail, Context, Result};
use avem_core::adaptivity::GalerkinConfig;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Run settings after merging the optional key=value file with the flags.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub k: usize,
    pub gamma: f64,
    pub theta: f64,
    pub eps: f64,
    pub lambda_cap: u32,
    /// `None` picks the level count from the degree.
    pub m: Option<usize>,
    pub max_iters: usize,
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub beta: f64,
    pub zeta: f64,
    pub seed: u64,
    /// Solve the fine conforming reference for the error column.
    pub reference: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            k: 2,
            gamma: 10.0,
            theta: 0.5,
            eps: 1e-3,
            lambda_cap: 3,
            m: None,
            max_iters: 30,
            threads: None,
            out: PathBuf::from("out"),
            beta: 1.0,
            zeta: 1.0,
            seed: 0,
            reference: true,
        }
    }
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected `key = value`", i + 1);
        };
        let key = key.trim().replace('-', "_");
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            bail!("line {}: duplicate key `{key}`", i + 1);
        }
    }
    Ok(map)
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow::anyhow!("bad value `{value}` for `{key}`: {e}"))
}

impl RunConfig {
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "k" => self.k = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "theta" => self.theta = parse(key, value)?,
            "eps" => self.eps = parse(key, value)?,
            "lambda_cap" => self.lambda_cap = parse(key, value)?,
            "m" => self.m = if value == "auto" { None } else { Some(parse(key, value)?) },
            "max_iters" => self.max_iters = parse(key, value)?,
            "threads" => self.threads = Some(parse(key, value)?),
            "out" => self.out = PathBuf::from(value),
            "beta" => self.beta = parse(key, value)?,
            "zeta" => self.zeta = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "reference" => self.reference = parse(key, value)?,
            _ => bail!("unknown configuration key `{key}`"),
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::default();
        for (k, v) in parse_kv(&text).with_context(|| format!("in {}", path.display()))? {
            cfg.apply(&k, &v).with_context(|| format!("in {}", path.display()))?;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=4).contains(&self.k) {
            bail!("k = {} outside [2, 4]", self.k);
        }
        if self.m == Some(0) {
            bail!("m must be positive");
        }
        if self.threads == Some(0) {
            bail!("threads must be positive");
        }
        if !(self.beta > 0.0 && self.zeta > 0.0) {
            bail!("beta and zeta must be positive");
        }
        self.galerkin().validate()?;
        Ok(())
    }

    pub fn galerkin(&self) -> GalerkinConfig {
        GalerkinConfig {
            theta: self.theta,
            gamma: self.gamma,
            eps: self.eps,
            lambda_cap: self.lambda_cap,
            levels: self.m,
            max_iters: self.max_iters,
            ..GalerkinConfig::default()
        }
    }
}
