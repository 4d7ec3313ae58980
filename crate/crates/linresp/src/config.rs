//! Declarative run configuration, read from TOML.

use std::fmt;
use std::path::{Path, PathBuf};

use linresp_core::distributions::{Interval, ParameterDistribution};
use linresp_core::function_space::Basis;
use linresp_core::inducing::{default_gamma, InducingOptions};
use linresp_core::maps::MapTemplate;
use linresp_core::operator::{OperatorOptions, TailMode};
use linresp_core::poly::Poly;
use linresp_core::response::Observable;
use linresp_core::system::{Component, RandomSystem};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// A configuration problem, located at a line of the source when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: Option<PathBuf>,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = &self.path {
            write!(f, "{}:", p.display())?;
        }
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{l}:{c}: ")?,
            (Some(l), None) => write!(f, "{l}: ")?,
            _ => {
                if self.path.is_some() {
                    f.write_str(" ")?;
                }
            }
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapName {
    ExpandingCircle,
    Gauss,
    Renyi,
    Lsv,
}

impl From<MapName> for MapTemplate {
    fn from(m: MapName) -> Self {
        match m {
            MapName::ExpandingCircle => MapTemplate::ExpandingCircle,
            MapName::Gauss => MapTemplate::Gauss,
            MapName::Renyi => MapTemplate::Renyi,
            MapName::Lsv => MapTemplate::Lsv,
        }
    }
}

fn unit() -> [f64; 2] {
    [0.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionConfig {
    Frozen { a: f64 },
    DiracTranslate { a: f64, #[serde(default = "unit")] support: [f64; 2] },
    /// Atoms `a_i + ε` with weights given as polynomial coefficients in ε.
    DiracMixture { atoms: Vec<f64>, weights: Vec<Vec<f64>>, #[serde(default = "unit")] support: [f64; 2] },
    LinearTilt { alpha0: f64, alpha1: f64 },
    UniformToDirac { a: f64, #[serde(default = "unit")] support: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentConfig {
    pub map: MapName,
    /// Coefficients of `π(ε)` in increasing degree.
    pub weight: Vec<f64>,
    pub distribution: DistributionConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemConfig {
    /// One map at parameter `u + ε` (or a fixed map if it has no parameter).
    Deterministic { map: MapName, #[serde(default)] u: f64 },
    CircleMixture { lambda: f64 },
    GaussRenyi { p: f64 },
    GaussRenyiPerturbed,
    LsvTilted { alpha0: f64, alpha1: f64 },
    LsvUniformToDirac { alpha0: f64, width: f64 },
    LsvTranslate { u: f64, half_width: f64 },
    Custom { components: Vec<ComponentConfig>, neighborhood: Option<[f64; 2]> },
}

fn interval(v: [f64; 2]) -> linresp_core::Result<Interval> {
    Interval::new(v[0], v[1])
}

impl DistributionConfig {
    pub fn build(&self) -> linresp_core::Result<ParameterDistribution> {
        match self {
            DistributionConfig::Frozen { a } => Ok(ParameterDistribution::frozen(*a)),
            DistributionConfig::DiracTranslate { a, support } => ParameterDistribution::dirac_translate(*a, interval(*support)?),
            DistributionConfig::DiracMixture { atoms, weights, support } => ParameterDistribution::dirac_mixture(
                atoms.clone(),
                weights.iter().map(|w| Poly(w.clone())).collect(),
                interval(*support)?,
            ),
            DistributionConfig::LinearTilt { alpha0, alpha1 } => ParameterDistribution::linear_tilt(*alpha0, *alpha1),
            DistributionConfig::UniformToDirac { a, support } => ParameterDistribution::uniform_to_dirac(*a, interval(*support)?),
        }
    }
}

impl SystemConfig {
    pub fn build(&self) -> linresp_core::Result<RandomSystem> {
        match self {
            SystemConfig::Deterministic { map, u } => RandomSystem::deterministic((*map).into(), *u),
            SystemConfig::CircleMixture { lambda } => RandomSystem::circle_mixture(*lambda),
            SystemConfig::GaussRenyi { p } => RandomSystem::gauss_renyi(*p),
            SystemConfig::GaussRenyiPerturbed => RandomSystem::gauss_renyi_perturbed(),
            SystemConfig::LsvTilted { alpha0, alpha1 } => RandomSystem::lsv_tilted(*alpha0, *alpha1),
            SystemConfig::LsvUniformToDirac { alpha0, width } => RandomSystem::lsv_uniform_to_dirac(*alpha0, *width),
            SystemConfig::LsvTranslate { u, half_width } => RandomSystem::lsv_translate(*u, *half_width),
            SystemConfig::Custom { components, neighborhood } => {
                let comps = components
                    .iter()
                    .map(|c| Ok(Component::new(c.map.into(), Poly(c.weight.clone()), c.distribution.build()?)))
                    .collect::<linresp_core::Result<Vec<_>>>()?;
                let sys = RandomSystem::new(comps)?;
                match neighborhood {
                    Some(v) => sys.with_neighborhood(interval(*v)?),
                    None => Ok(sys),
                }
            }
        }
    }

    /// `(α₀, α₁)` for the LSV presets.
    pub fn lsv_exponents(&self) -> Option<(f64, f64)> {
        match self {
            SystemConfig::LsvTilted { alpha0, alpha1 } => Some((*alpha0, *alpha1)),
            SystemConfig::LsvUniformToDirac { alpha0, width } => Some((*alpha0, alpha0 + width)),
            SystemConfig::LsvTranslate { u, half_width } => Some((u - half_width, u + half_width)),
            SystemConfig::Deterministic { map: MapName::Lsv, u } => Some((*u, *u)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    /// Fourier for circle systems, Chebyshev otherwise.
    Auto,
    Chebyshev,
    Fourier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailKind {
    Integral,
    Truncate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub basis: BasisKind,
    /// Basis size; 40 Chebyshev or 64 Fourier nodes when absent.
    pub nodes: Option<usize>,
    pub cutoff: usize,
    pub quad_order: usize,
    pub tail: TailKind,
    pub epsilon: f64,
    pub fd_epsilons: Vec<f64>,
    pub expansion_epsilons: Vec<f64>,
    pub observables: Vec<String>,
    /// Also compute an Ulam density on this many bins.
    pub ulam_bins: Option<usize>,
    /// Points of the uniform output grid.
    pub grid: usize,
    pub hypothesis_grid: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            basis: BasisKind::Auto,
            nodes: None,
            cutoff: linresp_core::operator::DEFAULT_CUTOFF,
            quad_order: 16,
            tail: TailKind::Integral,
            epsilon: 0.0,
            fd_epsilons: vec![1e-2, 5e-3, 2.5e-3],
            expansion_epsilons: vec![2e-2, 1e-2, 5e-3],
            observables: Observable::defaults().iter().map(|o| o.name.to_string()).collect(),
            ulam_bins: None,
            grid: 201,
            hypothesis_grid: 1000,
        }
    }
}

impl SolverConfig {
    pub fn operator_options(&self) -> OperatorOptions {
        OperatorOptions {
            cutoff: self.cutoff,
            quad_order: self.quad_order,
            tail: match self.tail {
                TailKind::Integral => TailMode::Integral,
                TailKind::Truncate => TailMode::Truncate,
            },
        }
    }

    pub fn basis(&self, system: &RandomSystem) -> linresp_core::Result<Arc<Basis>> {
        let fourier = match self.basis {
            BasisKind::Auto => system.domain() == linresp_core::maps::Domain::Circle,
            BasisKind::Fourier => true,
            BasisKind::Chebyshev => false,
        };
        if fourier {
            Basis::fourier(self.nodes.unwrap_or(64))
        } else {
            Basis::chebyshev(self.nodes.unwrap_or(40))
        }
    }

    pub fn observables(&self) -> linresp_core::Result<Vec<Observable>> {
        self.observables.iter().map(|n| Observable::by_name(n)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InducingConfig {
    /// Whether LSV systems go through the first-return construction; when
    /// absent, the density and response commands induce automatically.
    pub enabled: Option<bool>,
    pub n_max: usize,
    pub lower: f64,
    pub delta_nodes: usize,
    pub panel_nodes: usize,
    pub quad_order: usize,
    pub tail_threshold: f64,
    /// Weight exponent of the H-norm; derived from α₀ when absent.
    pub gamma: Option<f64>,
    pub fd_epsilons: Vec<f64>,
    /// Parameters of `pm-half-check`.
    pub alpha0: f64,
    pub width: f64,
}

impl Default for InducingConfig {
    fn default() -> Self {
        let o = InducingOptions::default();
        InducingConfig {
            enabled: None,
            n_max: o.n_max,
            lower: o.lower,
            delta_nodes: o.delta_nodes,
            panel_nodes: o.panel_nodes,
            quad_order: o.quad_order,
            tail_threshold: o.tail_threshold,
            gamma: None,
            fd_epsilons: Vec::new(),
            alpha0: 0.25,
            width: 0.125,
        }
    }
}

impl InducingConfig {
    pub fn options(&self) -> InducingOptions {
        InducingOptions {
            n_max: self.n_max,
            lower: self.lower,
            delta_nodes: self.delta_nodes,
            panel_nodes: self.panel_nodes,
            quad_order: self.quad_order,
            tail_threshold: self.tail_threshold,
        }
    }

    pub fn gamma_for(&self, alpha0: f64) -> f64 {
        self.gamma.unwrap_or_else(|| default_gamma(alpha0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub seed: u64,
    pub replicas: usize,
    pub length: usize,
    pub burn_in: usize,
    pub bins: usize,
    pub bootstrap: usize,
    /// Step of the coupled finite-difference check; skipped when absent or
    /// when the system does not depend on ε.
    pub response_epsilon: Option<f64>,
    pub observable: String,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            seed: 1,
            replicas: 10,
            length: 1_000_000,
            burn_in: 1_000,
            bins: 100,
            bootstrap: 200,
            response_epsilon: None,
            observable: "x".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

/// Everything a run depends on. Reports embed the resolved form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Filled in from the command line.
    #[serde(default)]
    pub command: Option<String>,
    #[serde(default)]
    pub system: Option<SystemConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub inducing: InducingConfig,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

/// Line of the first `[section]` header or `key =` assignment, if present.
pub fn locate(src: &str, key: &str) -> Option<usize> {
    src.lines().position(|l| {
        let t = l.trim_start();
        t.strip_prefix('[').is_some_and(|r| r.trim_start_matches('[').starts_with(key))
            || t.strip_prefix(key).is_some_and(|r| r.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

impl RunConfig {
    pub fn parse(src: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(src).map_err(|e| {
            let (line, column) = match e.span() {
                Some(s) => {
                    let (l, c) = line_col(src, s.start);
                    (Some(l), Some(c))
                }
                None => (None, None),
            };
            ConfigError { path: None, line, column, message: e.message().trim().to_string() }
        })?;
        cfg.validate(src)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: Some(path.to_path_buf()),
            line: None,
            column: None,
            message: format!("cannot read config: {e}"),
        })?;
        Self::parse(&src).map_err(|mut e| {
            e.path = Some(path.to_path_buf());
            e
        })
    }

    /// Semantic checks that the deserializer cannot express.
    fn validate(&self, src: &str) -> Result<(), ConfigError> {
        let fail = |key: &str, message: String| Err(ConfigError { path: None, line: locate(src, key), column: None, message });
        if let Some(s) = &self.system {
            if let Err(e) = s.build() {
                return fail("system", format!("invalid system: {e}"));
            }
        }
        if let Err(e) = self.solver.observables() {
            return fail("observables", e.to_string());
        }
        if self.solver.fd_epsilons.iter().chain(&self.solver.expansion_epsilons).chain(&self.inducing.fd_epsilons).any(|e| e.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)) {
            return fail("fd_epsilons", "finite-difference steps must be positive".into());
        }
        if self.solver.cutoff == 0 || self.solver.quad_order == 0 {
            return fail("cutoff", "cutoff and quad_order must be positive".into());
        }
        if self.solver.grid < 2 {
            return fail("grid", "output grid needs at least 2 points".into());
        }
        if self.mc.replicas == 0 || self.mc.bins == 0 {
            return fail("replicas", "mc needs at least one replica and one bin".into());
        }
        if let Err(e) = linresp_core::response::Observable::by_name(&self.mc.observable) {
            return fail("observable", e.to_string());
        }
        if self.inducing.n_max < 2 || !(self.inducing.lower > 0.0 && self.inducing.lower < 0.5) {
            return fail("n_max", "inducing needs n_max >= 2 and 0 < lower < 1/2".into());
        }
        Ok(())
    }

    pub fn system(&self) -> linresp_core::Result<RandomSystem> {
        match &self.system {
            Some(s) => s.build(),
            None => Err(linresp_core::Error::Config("this command needs a [system] section".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::parse("[system]\nkind = \"gauss-renyi\"\np = 0.5\n").unwrap();
        assert_eq!(cfg.system, Some(SystemConfig::GaussRenyi { p: 0.5 }));
        let back = toml::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::parse(&back).unwrap(), cfg);
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = RunConfig::parse("[solver]\ncutoff = 100\nnodes = \"many\"\n").unwrap_err();
        assert_eq!(err.line, Some(3), "{err}");
        let err = RunConfig::parse("[solver]\n\nbogus = 1\n").unwrap_err();
        assert_eq!(err.line, Some(3), "{err}");
    }

    #[test]
    fn semantic_errors_point_at_the_section() {
        let err = RunConfig::parse("# gauss renyi\n[system]\nkind = \"gauss-renyi\"\np = 1.5\n").unwrap_err();
        assert_eq!(err.line, Some(2), "{err}");
        let err = RunConfig::parse("[mc]\nobservable = \"x^3\"\n").unwrap_err();
        assert_eq!(err.line, Some(2), "{err}");
    }

    #[test]
    fn custom_system_builds() {
        let src = r#"
[system]
kind = "custom"
neighborhood = [-0.5, 0.5]

[[system.components]]
map = "gauss"
weight = [0.5, 1.0]
distribution = { kind = "frozen", a = 0.0 }

[[system.components]]
map = "renyi"
weight = [0.5, -1.0]
distribution = { kind = "frozen", a = 0.0 }
"#;
        let sys = RunConfig::parse(src).unwrap().system().unwrap();
        assert_eq!(sys, RandomSystem::gauss_renyi(0.5).unwrap());
    }
}
