use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use peclet::partition_weights::EpsLedger;
use peclet::shear_profiles::builtin_source;
use peclet::stochastic::NoiseSpectrum;
use peclet::{Domain, Kind, ProfileSource, ProfileSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SweepDecay,
    Pseudospec,
    HypoVerify,
    Specgap,
    Mixing,
    Kuksin,
    OracleCheck,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::SweepDecay => "sweep-decay",
            Experiment::Pseudospec => "pseudospec",
            Experiment::HypoVerify => "hypo-verify",
            Experiment::Specgap => "specgap",
            Experiment::Mixing => "mixing",
            Experiment::Kuksin => "kuksin",
            Experiment::OracleCheck => "oracle-check",
        }
    }
}

/// A built-in name, or explicit coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileConfig {
    Builtin(String),
    Trig {
        name: String,
        cos: Vec<f64>,
        sin: Vec<f64>,
    },
    Poly {
        name: String,
        poly: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    /// Double n while the layer width spans fewer than 8 cells (nu < 1e-6 only).
    #[serde(default = "yes")]
    pub auto_refine: bool,
}

fn yes() -> bool {
    true
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n: 512,
            auto_refine: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypoConfig {
    pub eps_tilde: f64,
    pub c0: f64,
    pub kappa0: f64,
    pub orders: usize,
    pub t_final: f64,
    pub dt: f64,
    pub samples: u64,
}

impl Default for HypoConfig {
    fn default() -> Self {
        let l = EpsLedger::default();
        HypoConfig {
            eps_tilde: l.eps_tilde,
            c0: l.c0,
            kappa0: l.kappa0,
            orders: l.eps_beta.len(),
            t_final: 50.0,
            dt: 0.05,
            samples: 20,
        }
    }
}

impl HypoConfig {
    pub fn ledger(&self) -> EpsLedger {
        EpsLedger::geometric(self.eps_tilde, self.c0, self.kappa0, self.orders)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub k_max: i64,
    pub j_max: i64,
    pub kill_zero_mode: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            k_max: 4,
            j_max: 4,
            kill_zero_mode: true,
        }
    }
}

impl NoiseConfig {
    pub fn spectrum(&self) -> NoiseSpectrum {
        NoiseSpectrum::rational(self.k_max, self.j_max, self.kill_zero_mode)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Domain>,
    #[serde(default)]
    pub kind: KindConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub nu: Vec<f64>,
    #[serde(default)]
    pub k: Vec<i64>,
    #[serde(default)]
    pub a: Vec<f64>,
    #[serde(default)]
    pub sigma: Vec<f64>,
    /// Vanishing orders for the model gap.
    #[serde(default = "default_orders")]
    pub j: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<TimeGrid>,
    #[serde(default = "yes")]
    pub log_corrected: bool,
    /// Multiplies the default time step of decay sweeps (still capped for stiffness).
    #[serde(default = "one")]
    pub dt_scale: f64,
    #[serde(default)]
    pub hypo: HypoConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_worker")]
    pub workers: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindConfig {
    #[default]
    Elliptic,
    Hypoelliptic,
}

impl From<KindConfig> for Kind {
    fn from(k: KindConfig) -> Kind {
        match k {
            KindConfig::Elliptic => Kind::Elliptic,
            KindConfig::Hypoelliptic => Kind::Hypoelliptic,
        }
    }
}

fn default_orders() -> Vec<usize> {
    vec![1, 2, 3]
}

fn one() -> f64 {
    1.0
}

fn one_worker() -> usize {
    1
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Scalar fields the command line may override.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub nu: Option<f64>,
    pub k: Option<i64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        RunConfig::parse(&text)
    }

    pub fn parse(text: &str) -> anyhow::Result<RunConfig> {
        serde_json::from_str(text).context("parsing config")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(nu) = o.nu {
            self.nu = vec![nu];
        }
        if let Some(k) = o.k {
            self.k = vec![k];
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
    }

    /// Checks that every list the experiment reads is present and sane.
    pub fn validate(&self, experiment: Experiment) -> anyhow::Result<()> {
        if let Some(e) = self.experiment {
            if e != experiment {
                bail!(
                    "config is for `{}` but `{}` was requested",
                    e.name(),
                    experiment.name()
                );
            }
        }
        let needs: &[&str] = match experiment {
            Experiment::SweepDecay | Experiment::Pseudospec | Experiment::HypoVerify => {
                &["profile", "nu", "k"]
            }
            Experiment::Mixing => &["profile", "k", "t"],
            Experiment::Kuksin => &["profile", "nu", "a"],
            Experiment::Specgap => &["sigma", "j"],
            Experiment::OracleCheck => &[],
        };
        for key in needs {
            let missing = match *key {
                "profile" => self.profile.is_none(),
                "nu" => self.nu.is_empty(),
                "k" => self.k.is_empty(),
                "a" => self.a.is_empty(),
                "t" => self.t.is_none(),
                "sigma" => self.sigma.is_empty(),
                "j" => self.j.is_empty(),
                _ => unreachable!(),
            };
            if missing {
                bail!("missing key \"{key}\" required by `{}`", experiment.name());
            }
        }
        if self
            .nu
            .iter()
            .chain(&self.sigma)
            .any(|v| v.is_nan() || *v <= 0.0)
        {
            bail!("\"nu\" and \"sigma\" entries must be positive");
        }
        if experiment != Experiment::Kuksin && self.k.contains(&0) {
            bail!("\"k\" entries must be nonzero");
        }
        if self.workers == 0 {
            bail!("\"workers\" must be at least 1");
        }
        if self.grid.n < peclet::discretize::MIN_GRID {
            bail!(
                "\"grid.n\" must be at least {}",
                peclet::discretize::MIN_GRID
            );
        }
        if let Some(t) = &self.t {
            if !(t.start > 0.0 && t.end > t.start && t.count >= 2) {
                bail!("\"t\" needs 0 < start < end and count >= 2");
            }
        }
        if self.dt_scale.is_nan() || self.dt_scale <= 0.0 {
            bail!("\"dt_scale\" must be positive");
        }
        if self.j.contains(&0) {
            bail!("\"j\" entries must be at least 1");
        }
        match self.profile {
            Some(_) => self.profile_spec().map(|_| ()),
            None => Ok(()),
        }
    }

    /// Profile spec and the domain it lives on.
    pub fn profile_spec(&self) -> anyhow::Result<(ProfileSpec, Domain)> {
        let Some(p) = &self.profile else {
            bail!("missing key \"profile\"");
        };
        let (spec, natural) = match p {
            ProfileConfig::Builtin(name) => {
                let Some((_, d)) = builtin_source(name) else {
                    bail!("unknown built-in profile `{name}`");
                };
                (ProfileSpec::Builtin(name.clone()), Some(d))
            }
            ProfileConfig::Trig { name, cos, sin } => (
                ProfileSpec::Source {
                    name: name.clone(),
                    source: ProfileSource::Trig {
                        cos: cos.clone(),
                        sin: sin.clone(),
                    },
                },
                Some(Domain::Torus),
            ),
            ProfileConfig::Poly { name, poly } => (
                ProfileSpec::Source {
                    name: name.clone(),
                    source: ProfileSource::Poly(poly.clone()),
                },
                Some(Domain::Channel),
            ),
        };
        let domain = self.domain.or(natural).unwrap_or(Domain::Torus);
        Ok((spec, domain))
    }

    /// sha256 of the effective config, excluding the output directory and
    /// worker count.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        c.workers = 1;
        let text = serde_json::to_string(&c).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn time_grid(&self) -> Vec<f64> {
        let t = self.t.as_ref().expect("validated");
        peclet::semigroup::geometric_grid(t.start, t.end, t.count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_profile_is_named() {
        let c = RunConfig::parse(r#"{"nu": [1e-3], "k": [1]}"#).unwrap();
        let err = c.validate(Experiment::SweepDecay).unwrap_err().to_string();
        assert!(err.contains("\"profile\""), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(RunConfig::parse(r#"{"profile": "sin", "nus": [1]}"#).is_err());
    }

    #[test]
    fn overrides_replace_lists() {
        let mut c =
            RunConfig::parse(r#"{"profile": "sin", "nu": [1e-3, 1e-4], "k": [1, 2]}"#).unwrap();
        c.apply(&Overrides {
            nu: Some(1e-2),
            seed: Some(7),
            ..Default::default()
        });
        assert_eq!(c.nu, vec![1e-2]);
        assert_eq!(c.k, vec![1, 2]);
        assert_eq!(c.seed, 7);
    }

    #[test]
    fn hash_ignores_output_directory() {
        let mut a = RunConfig::parse(r#"{"profile": "sin", "nu": [1e-3], "k": [1]}"#).unwrap();
        let h = a.hash();
        a.out = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), h);
        a.seed = 1;
        assert_ne!(a.hash(), h);
    }

    #[test]
    fn explicit_profiles_parse() {
        let c = RunConfig::parse(r#"{"profile": {"name": "p", "poly": [0, 0, 1]}}"#).unwrap();
        let (_, d) = c.profile_spec().unwrap();
        assert_eq!(d, Domain::Channel);
        let c =
            RunConfig::parse(r#"{"profile": {"name": "t", "cos": [0, 1], "sin": []}}"#).unwrap();
        assert_eq!(c.profile_spec().unwrap().1, Domain::Torus);
    }
}
