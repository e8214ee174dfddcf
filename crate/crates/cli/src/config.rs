//! Resolution of a sampling run configuration from a key=value file and
//! command line flags; flags win.

use crate::SampleArgs;
use anyhow::{bail, Context, Result};
use std::collections::HashMap;
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    FixedP,
    DirichletSeed,
    BetaTld,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::FixedP => "fixed-p",
            Model::DirichletSeed => "dirichlet-seed",
            Model::BetaTld => "beta-tld",
        }
    }
}

/// Dirichlet pseudo-count source: a scalar broadcast or a grid file.
#[derive(Clone, Debug)]
pub enum PiSpec {
    Scalar(f64),
    Path(PathBuf),
}

/// Fully resolved sampling configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub model: Model,
    pub margins: PathBuf,
    pub costs: Option<PathBuf>,
    pub proportions: Option<PathBuf>,
    pub beta: Option<f64>,
    pub seed_matrix: Option<PathBuf>,
    pub tld: Option<PathBuf>,
    pub pi: PiSpec,
    pub bins: Option<Vec<f64>>,
    pub samples: usize,
    pub burnin: Option<usize>,
    pub thin: usize,
    pub rng_seed: u64,
    pub sigma2: f64,
    pub gamma: f64,
    pub out: PathBuf,
    pub chains: usize,
    pub emit_draws: bool,
    pub cost_thresholds: Vec<f64>,
}

/// Parses a flat `key=value` file; `#` starts a comment, blank lines are
/// skipped.
pub fn parse_config_file(path: &PathBuf) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!(
                "{}:{}: expected key=value, got {raw:?}",
                path.display(),
                lineno + 1
            );
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn get_parsed<T: std::str::FromStr>(map: &HashMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|e| anyhow::anyhow!("config key {key}={raw}: {e}")),
    }
}

pub fn parse_bin_edges(raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .with_context(|| format!("bin edge {tok:?}"))
        })
        .collect()
}

/// Merges the optional config file under the flags and applies defaults.
pub fn resolve(args: &SampleArgs) -> Result<RunConfig> {
    let file = match &args.config {
        Some(path) => parse_config_file(path)?,
        None => HashMap::new(),
    };

    let model_raw = args
        .model
        .clone()
        .or_else(|| file.get("model").cloned())
        .unwrap_or_else(|| "fixed-p".to_string());
    let model = match model_raw.as_str() {
        "fixed-p" => Model::FixedP,
        "dirichlet-seed" => Model::DirichletSeed,
        "beta-tld" => Model::BetaTld,
        other => bail!("unknown model {other:?}; expected fixed-p, dirichlet-seed, or beta-tld"),
    };

    let path_of = |flag: &Option<PathBuf>, key: &str| -> Option<PathBuf> {
        flag.clone().or_else(|| file.get(key).map(PathBuf::from))
    };

    let margins = path_of(&args.margins, "margins")
        .ok_or_else(|| anyhow::anyhow!("missing required input: margins"))?;
    let costs = path_of(&args.costs, "costs");
    let proportions = path_of(&args.proportions, "proportions");
    let seed_matrix = path_of(&args.seed_matrix, "seed-matrix");
    let tld = path_of(&args.tld, "tld");
    let beta = match args.beta {
        Some(b) => Some(b),
        None => get_parsed::<f64>(&file, "beta")?,
    };

    let pi = match args.pi.clone().or_else(|| file.get("pi").cloned()) {
        None => PiSpec::Scalar(1.0),
        Some(raw) => match raw.parse::<f64>() {
            Ok(v) => PiSpec::Scalar(v),
            Err(_) => PiSpec::Path(PathBuf::from(raw)),
        },
    };

    let bins = match args.bins.clone().or_else(|| file.get("bins").cloned()) {
        Some(raw) => Some(parse_bin_edges(&raw)?),
        None => None,
    };

    let mut cost_thresholds = args.cost_threshold.clone();
    if cost_thresholds.is_empty() {
        if let Some(raw) = file.get("cost-threshold") {
            cost_thresholds = raw
                .split(',')
                .map(|tok| tok.trim().parse::<f64>().context("cost-threshold"))
                .collect::<Result<_>>()?;
        }
    }

    let config = RunConfig {
        model,
        margins,
        costs,
        proportions,
        beta,
        seed_matrix,
        tld,
        pi,
        bins,
        samples: match args.samples {
            Some(v) => v,
            None => get_parsed(&file, "samples")?.unwrap_or(10_000),
        },
        burnin: match args.burnin {
            Some(v) => Some(v),
            None => get_parsed(&file, "burnin")?,
        },
        thin: match args.thin {
            Some(v) => v,
            None => get_parsed(&file, "thin")?.unwrap_or(1),
        },
        rng_seed: match args.rng_seed {
            Some(v) => v,
            None => get_parsed(&file, "rng-seed")?.unwrap_or(0),
        },
        sigma2: match args.sigma2 {
            Some(v) => v,
            None => get_parsed(&file, "sigma2")?.unwrap_or(1e-4),
        },
        gamma: match args.gamma {
            Some(v) => v,
            None => get_parsed(&file, "gamma")?.unwrap_or(0.95),
        },
        out: args
            .out
            .clone()
            .or_else(|| file.get("out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(".")),
        chains: match args.chains {
            Some(v) => v,
            None => get_parsed(&file, "chains")?.unwrap_or(1),
        },
        emit_draws: args.emit_draws || get_parsed::<bool>(&file, "emit-draws")?.unwrap_or(false),
        cost_thresholds,
    };

    if config.chains == 0 {
        bail!("chains must be at least 1");
    }
    match config.model {
        Model::FixedP => {
            let gravity = config.costs.is_some() && config.beta.is_some();
            if config.proportions.is_none() && !gravity {
                bail!("fixed-p needs --proportions, or --costs together with --beta");
            }
        }
        Model::BetaTld => {
            if config.costs.is_none() {
                bail!("beta-tld needs --costs");
            }
            if config.bins.is_none() && config.tld.is_none() {
                bail!("beta-tld needs --bins or a --tld file defining the ranges");
            }
        }
        Model::DirichletSeed => {}
    }
    Ok(config)
}
