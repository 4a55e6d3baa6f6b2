//! JSON run configuration.

use std::path::Path;

use acimresp::conjugacy::Conjugacy;
use acimresp::map::{chebyshev_markov_map, perturbed_map, AnalyticMap, ObservablePoly, PerturbationField};
use acimresp::poly::ChebPoly;
use acimresp::spectral::{DEFAULT_N, MAX_N, MIN_N};
use serde::Deserialize;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

/// Failure to read or validate a configuration (exit status 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum MapSpec {
    /// `(-1)^{m+1} T_m`.
    Chebyshev { m: usize },
    /// `base + t X∘base`.
    Perturbed { base: Box<MapSpec>, x: Vec<f64>, t: f64 },
    /// Chebyshev coefficients of `f` with `m` branches.
    Explicit { m: usize, coeffs: Vec<f64> },
}

impl MapSpec {
    pub fn build(&self) -> acimresp::Result<AnalyticMap> {
        match self {
            MapSpec::Chebyshev { m } => chebyshev_markov_map(*m),
            MapSpec::Perturbed { base, x, t } => {
                let f = base.build()?;
                perturbed_map(&f, &PerturbationField::new(ChebPoly::new(x.clone())), *t)
            }
            MapSpec::Explicit { m, coeffs } => AnalyticMap::from_poly(ChebPoly::new(coeffs.clone()), *m),
        }
    }

    fn polys_nonempty(&self) -> bool {
        match self {
            MapSpec::Chebyshev { .. } => true,
            MapSpec::Perturbed { base, x, .. } => !x.is_empty() && base.polys_nonempty(),
            MapSpec::Explicit { coeffs, .. } => !coeffs.is_empty(),
        }
    }

    pub fn chebyshev_order(&self) -> Option<usize> {
        match self {
            MapSpec::Chebyshev { m } => Some(*m),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PadeDegrees {
    pub l: usize,
    pub m: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainCheck {
    pub r: f64,
    pub samples: usize,
}

fn default_n() -> usize {
    DEFAULT_N
}
fn default_lambdas() -> Vec<f64> {
    vec![0.0, 0.1, 0.2, 0.5, 1.0]
}
fn default_kappa_max() -> usize {
    12
}
fn default_pade() -> PadeDegrees {
    PadeDegrees { l: 8, m: 8 }
}
fn default_h() -> f64 {
    1e-3
}
fn default_domain() -> DomainCheck {
    DomainCheck { r: 1.5, samples: 256 }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub map: MapSpec,
    #[serde(default)]
    pub conjugacy: Conjugacy,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Chebyshev coefficients of the perturbation field `X`.
    pub x: Vec<f64>,
    /// Chebyshev coefficients of the observable `A`.
    pub a: Vec<f64>,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_kappa_max")]
    pub kappa_max: usize,
    #[serde(default = "default_pade")]
    pub pade: PadeDegrees,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_domain")]
    pub domain: DomainCheck,
}

/// A validated configuration plus the hash of its source bytes.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub hash: String,
}

impl LoadedConfig {
    pub fn field(&self) -> PerturbationField {
        PerturbationField::new(ChebPoly::new(self.config.x.clone()))
    }

    pub fn observable(&self) -> acimresp::Result<ObservablePoly> {
        ObservablePoly::new(ChebPoly::new(self.config.a.clone()))
    }
}

pub fn load(path: &Path, n_override: Option<usize>) -> Result<LoadedConfig, ConfigError> {
    let bytes = std::fs::read(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let mut config: RunConfig =
        serde_json::from_slice(&bytes).map_err(|e| ConfigError(format!("invalid config: {e}")))?;
    if config.schema_version != SCHEMA_VERSION {
        return Err(ConfigError(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            config.schema_version
        )));
    }
    if let Some(n) = n_override {
        config.n = n;
    }
    if !(MIN_N..=MAX_N).contains(&config.n) {
        return Err(ConfigError(format!("n = {} outside [{MIN_N}, {MAX_N}]", config.n)));
    }
    if config.x.is_empty() || config.a.is_empty() || !config.map.polys_nonempty() {
        return Err(ConfigError("polynomial coefficient lists must be nonempty".into()));
    }
    let finite = |v: &[f64]| v.iter().all(|c| c.is_finite());
    if !finite(&config.x) || !finite(&config.a) || !finite(&config.lambdas) || !config.h.is_finite() {
        return Err(ConfigError("non-finite number in config".into()));
    }
    let digest = Sha256::digest(&bytes);
    let hash: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    Ok(LoadedConfig { config, hash })
}
