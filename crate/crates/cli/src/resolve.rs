//! Flag > environment > default resolution for the AUDBC settings.
//!
//! Kept free of process state: callers pass the environment in as a lookup
//! function so the precedence matrix can be tested directly.

use intervene_core::metrics::audbc::{default_cfn_grid, parse_grid};
use intervene_core::metrics::{AudbcConfig, TauImpl};
use intervene_core::{Error, Result};
use serde::Serialize;

pub const ENV_GRID: &str = "AUDBC_CFN_GRID";
pub const ENV_COST_FA: &str = "COST_FA";
pub const ENV_TAU_IMPL: &str = "AUDBC_TAU_IMPL";

pub const DEFAULT_COST_FA: f64 = 1.0;

/// Where a resolved value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Flag,
    Env,
    Default,
}

/// Raw `--grid`, `--cost-fa`, `--tau-impl` values as typed.
#[derive(Debug, Clone, Default)]
pub struct AudbcFlags {
    pub grid: Option<String>,
    pub cost_fa: Option<String>,
    pub tau_impl: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedAudbc {
    pub config: AudbcConfig,
    pub grid_source: Source,
    pub cost_fa_source: Source,
    pub tau_impl_source: Source,
}

fn pick<T>(
    flag: Option<&str>,
    flag_name: &str,
    env: &dyn Fn(&str) -> Option<String>,
    env_name: &str,
    parse: impl Fn(&str) -> Result<T>,
    default: impl FnOnce() -> T,
) -> Result<(T, Source)> {
    // naming the origin lets users tell a bad flag from a stale variable
    let named = |origin: &str, e: Error| match e {
        Error::Config(m) => Error::Config(format!("{origin}: {m}")),
        other => Error::Config(format!("{origin}: {other}")),
    };
    if let Some(v) = flag {
        return parse(v).map(|x| (x, Source::Flag)).map_err(|e| named(flag_name, e));
    }
    // empty variables count as unset, as most shells treat them
    match env(env_name).filter(|v| !v.trim().is_empty()) {
        Some(v) => parse(&v).map(|x| (x, Source::Env)).map_err(|e| named(env_name, e)),
        None => Ok((default(), Source::Default)),
    }
}

fn parse_cost(s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::Config(format!("{s:?} is not a decimal number")))?;
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Config(format!("cost must be finite and > 0, got {v}")));
    }
    Ok(v)
}

pub fn resolve_audbc(flags: &AudbcFlags, env: &dyn Fn(&str) -> Option<String>) -> Result<ResolvedAudbc> {
    let (grid, grid_source) = pick(flags.grid.as_deref(), "--grid", env, ENV_GRID, parse_grid, default_cfn_grid)?;
    let (c_fa, cost_fa_source) =
        pick(flags.cost_fa.as_deref(), "--cost-fa", env, ENV_COST_FA, parse_cost, || DEFAULT_COST_FA)?;
    let (tau, tau_impl_source) =
        pick(flags.tau_impl.as_deref(), "--tau-impl", env, ENV_TAU_IMPL, |s| s.parse::<TauImpl>(), TauImpl::default)?;
    let config = AudbcConfig::new(c_fa, grid, tau).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", origin_name(grid_source, "--grid", ENV_GRID))),
        other => other,
    })?;
    Ok(ResolvedAudbc { config, grid_source, cost_fa_source, tau_impl_source })
}

fn origin_name<'a>(s: Source, flag: &'a str, env: &'a str) -> &'a str {
    match s {
        Source::Flag => flag,
        Source::Env => env,
        Source::Default => "default grid",
    }
}

/// The process environment as a lookup.
pub fn process_env(name: &str) -> Option<String> {
    std::env::var(name).ok()
}
