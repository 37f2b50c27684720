//! Run configuration: defaults, a flat key = value config file, and the
//! command line, merged in increasing precedence.

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use serde::Serialize;
use sip::model::ModelParams;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Flags shared by every subcommand. All optional so the config file and
/// defaults can fill the gaps.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Number of sites
    #[arg(long = "N", value_name = "SITES")]
    pub n: Option<usize>,
    /// Diffusion-strength parameter
    #[arg(long)]
    pub m: Option<f64>,
    /// Base birth rate of the weak-drive form
    #[arg(long)]
    pub b: Option<f64>,
    /// Base death rate of the weak-drive form
    #[arg(long)]
    pub d: Option<f64>,
    /// Drive strength: b1 = b(1+eps), bN = b(1-eps)
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    /// Explicit left birth rate (with --d1 --bN --dN; excludes --b/--d/--eps)
    #[arg(long)]
    pub b1: Option<f64>,
    /// Explicit left death rate
    #[arg(long)]
    pub d1: Option<f64>,
    /// Explicit right birth rate
    #[arg(long = "bN")]
    pub b_n: Option<f64>,
    /// Explicit right death rate
    #[arg(long = "dN")]
    pub d_n: Option<f64>,
    /// Per-site occupation cap of the truncated solver (default: automatic)
    #[arg(long)]
    pub nmax: Option<u32>,
    /// Simulated time per replica
    #[arg(long)]
    pub time: Option<f64>,
    /// Discarded relaxation time (default: max(10 N^2/m, 100))
    #[arg(long)]
    pub burnin: Option<f64>,
    /// Independent simulation replicas
    #[arg(long)]
    pub replicas: Option<u32>,
    /// Base RNG seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file (stdout when absent); relative paths join SIP_OUT_DIR
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Flat key = value configuration file (flags take precedence)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// How the reservoir rates were specified, echoed into reports.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum RateSpec {
    Weak { b: f64, d: f64, eps: f64 },
    Explicit { b1: f64, d1: f64, b_n: f64, d_n: f64 },
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: ModelParams,
    pub rates: RateSpec,
    pub n_max: Option<u32>,
    pub time: f64,
    pub burn_in: Option<f64>,
    pub replicas: u32,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl RunConfig {
    /// The weak-drive decomposition `(b, d, eps)` when available.
    pub fn weak_rates(&self) -> Option<(f64, f64, f64)> {
        match self.rates {
            RateSpec::Weak { b, d, eps } => Some((b, d, eps)),
            RateSpec::Explicit { .. } => None,
        }
    }

    /// Burn-in: explicit value or the diffusive default.
    pub fn burn_in(&self) -> f64 {
        self.burn_in
            .unwrap_or_else(|| sip::kmc::default_burn_in(&self.params))
    }

    /// Occupation cap: explicit value or the tail-mass rule (doubled when
    /// the run is driven), clamped to keep the state count tractable.
    pub fn resolve_n_max(&self, max_states: usize) -> Result<u32> {
        if let Some(n_max) = self.n_max {
            return Ok(n_max);
        }
        let theta0 = match self.rates {
            RateSpec::Weak { b, d, .. } => b / d,
            RateSpec::Explicit { b1, d1, b_n, d_n } => (b1 / d1).max(b_n / d_n),
        };
        if !(theta0 > 0.0 && theta0 < 1.0) {
            bail!(
                "cannot choose n_max automatically at fugacity {theta0}; pass --nmax explicitly"
            );
        }
        let perturbed = !self.params.is_equilibrium();
        let mut n_max = sip::exactsolve::suggested_n_max(theta0, self.params.m(), perturbed)
            .map_err(|e| anyhow!("{e}"))?;
        while state_count(self.params.n_sites(), n_max) > max_states && n_max > 2 {
            n_max -= 1;
        }
        Ok(n_max)
    }
}

fn state_count(n_sites: usize, n_max: u32) -> usize {
    (n_max as usize + 1)
        .checked_pow(n_sites as u32)
        .unwrap_or(usize::MAX)
}

/// Key = value lines; `#` starts a comment.
fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected key = value", path.display(), lineno + 1))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

const KNOWN_KEYS: [&str; 16] = [
    "N", "m", "b", "d", "eps", "b1", "d1", "bN", "dN", "nmax", "time", "burnin", "replicas",
    "seed", "out", "format",
];

fn get<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|e| anyhow!("config key {key} = {raw}: {e}")),
    }
}

/// Merges defaults, the optional config file, and the command line into a
/// validated run configuration.
pub fn resolve(args: &CommonArgs) -> Result<RunConfig> {
    let file = match &args.config {
        Some(path) => {
            let map = parse_config_file(path)?;
            for key in map.keys() {
                if !KNOWN_KEYS.contains(&key.as_str()) {
                    bail!("unknown config key `{key}` (expected one of {KNOWN_KEYS:?})");
                }
            }
            map
        }
        None => BTreeMap::new(),
    };

    let n = args.n.or(get(&file, "N")?).unwrap_or(3);
    let m = args.m.or(get(&file, "m")?).unwrap_or(1.0);

    // rate form: the higher-precedence source picks the form wholesale
    let cli_explicit = [args.b1, args.d1, args.b_n, args.d_n];
    let cli_weak = [args.b, args.d, args.eps];
    let file_explicit: [Option<f64>; 4] = [
        get(&file, "b1")?,
        get(&file, "d1")?,
        get(&file, "bN")?,
        get(&file, "dN")?,
    ];
    let file_weak: [Option<f64>; 3] = [get(&file, "b")?, get(&file, "d")?, get(&file, "eps")?];

    let pick = |explicit: [Option<f64>; 4], weak: [Option<f64>; 3]| -> Result<Option<RateSpec>> {
        let any_explicit = explicit.iter().any(Option::is_some);
        let any_weak = weak.iter().any(Option::is_some);
        match (any_explicit, any_weak) {
            (true, true) => bail!(
                "give either --b/--d/--eps or all of --b1/--d1/--bN/--dN, not a mix"
            ),
            (true, false) => {
                let [b1, d1, b_n, d_n] = explicit;
                match (b1, d1, b_n, d_n) {
                    (Some(b1), Some(d1), Some(b_n), Some(d_n)) => {
                        Ok(Some(RateSpec::Explicit { b1, d1, b_n, d_n }))
                    }
                    _ => bail!("explicit rates need all four of b1, d1, bN, dN"),
                }
            }
            (false, true) => {
                let [b, d, eps] = weak;
                Ok(Some(RateSpec::Weak {
                    b: b.unwrap_or(1.0),
                    d: d.unwrap_or(2.0),
                    eps: eps.unwrap_or(0.0),
                }))
            }
            (false, false) => Ok(None),
        }
    };
    let rates = pick(cli_explicit, cli_weak)?
        .or(pick(file_explicit, file_weak)?)
        .unwrap_or(RateSpec::Weak {
            b: 1.0,
            d: 2.0,
            eps: 0.0,
        });

    let params = match rates {
        RateSpec::Weak { b, d, eps } => {
            ModelParams::perturbed(b, d, eps, n, m).map_err(|e| anyhow!("{e}"))?
        }
        RateSpec::Explicit { b1, d1, b_n, d_n } => {
            ModelParams::new(n, m, b1, d1, b_n, d_n).map_err(|e| anyhow!("{e}"))?
        }
    };

    let out = args.out.clone().or(match file.get("out") {
        Some(path) => Some(PathBuf::from(path)),
        None => None,
    });
    let format = args
        .format
        .or(match file.get("format").map(String::as_str) {
            Some("csv") => Some(OutputFormat::Csv),
            Some("json") => Some(OutputFormat::Json),
            Some(other) => bail!("config key format = {other}: expected csv or json"),
            None => None,
        })
        .unwrap_or(OutputFormat::Csv);

    Ok(RunConfig {
        params,
        rates,
        n_max: args.nmax.or(get(&file, "nmax")?),
        time: args.time.or(get(&file, "time")?).unwrap_or(10_000.0),
        burn_in: args.burnin.or(get(&file, "burnin")?),
        replicas: args.replicas.or(get(&file, "replicas")?).unwrap_or(4),
        seed: args.seed.or(get(&file, "seed")?).unwrap_or(1),
        out,
        format,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_reference_equilibrium() {
        let cfg = resolve(&CommonArgs::default()).unwrap();
        assert_eq!(cfg.params.n_sites(), 3);
        assert_eq!(cfg.params.b1(), 1.0);
        assert_eq!(cfg.params.d1(), 2.0);
        assert!(cfg.params.is_equilibrium());
        assert_eq!(cfg.format, OutputFormat::Csv);
    }

    #[test]
    fn weak_form_applies_eps() {
        let args = CommonArgs {
            eps: Some(0.05),
            ..Default::default()
        };
        let cfg = resolve(&args).unwrap();
        assert!((cfg.params.b1() - 1.05).abs() < 1e-15);
        assert!((cfg.params.b_n() - 0.95).abs() < 1e-15);
    }

    #[test]
    fn mixed_rate_forms_are_rejected() {
        let args = CommonArgs {
            b: Some(1.0),
            b1: Some(1.0),
            d1: Some(2.0),
            b_n: Some(1.0),
            d_n: Some(2.0),
            ..Default::default()
        };
        assert!(resolve(&args).is_err());
        let args = CommonArgs {
            b1: Some(1.0),
            ..Default::default()
        };
        assert!(resolve(&args).is_err());
    }

    #[test]
    fn config_file_fills_gaps_under_flags() {
        let dir = std::env::temp_dir().join("sip-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.conf");
        std::fs::write(&path, "N = 5\nm = 2.0\neps = 0.1 # driven\nseed = 9\n").unwrap();
        let args = CommonArgs {
            m: Some(1.5), // flag beats file
            config: Some(path.clone()),
            ..Default::default()
        };
        let cfg = resolve(&args).unwrap();
        assert_eq!(cfg.params.n_sites(), 5);
        assert_eq!(cfg.params.m(), 1.5);
        assert_eq!(cfg.seed, 9);
        assert!((cfg.params.b1() - 1.1).abs() < 1e-15);

        std::fs::write(&path, "unknown_key = 1\n").unwrap();
        assert!(resolve(&CommonArgs {
            config: Some(path),
            ..Default::default()
        })
        .is_err());
    }

    #[test]
    fn automatic_n_max_uses_tail_rule() {
        let cfg = resolve(&CommonArgs::default()).unwrap();
        let n_max = cfg.resolve_n_max(200_000).unwrap();
        assert!((38..=42).contains(&n_max), "n_max = {n_max}");
        // driven runs double the cap, then the state budget clamps it
        let args = CommonArgs {
            eps: Some(0.05),
            ..Default::default()
        };
        let cfg = resolve(&args).unwrap();
        let n_max = cfg.resolve_n_max(200_000).unwrap();
        assert!(n_max <= 57, "n_max = {n_max} exceeds the state budget");
    }
}
