use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::casci::SolverOptions;
use crate::cc::CcOptions;
use crate::error::{Error, Result};
use crate::mrmp::H0Density;
use crate::sampler::DEFAULT_LAMBDA;

/// Every method the driver can emit a row for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Rcasci,
    Qdos,
    Qsci,
    SubspaceMrmp2,
    Mrmp2,
    SubspaceTccsd,
    Tccsd,
    SubspaceTccsdT,
    TccsdT,
    Mp2,
    Ccsd,
    FciOracle,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Rcasci => "rcasci",
            Method::Qdos => "qdos",
            Method::Qsci => "qsci",
            Method::SubspaceMrmp2 => "subspace-mrmp2",
            Method::Mrmp2 => "mrmp2",
            Method::SubspaceTccsd => "subspace-tccsd",
            Method::Tccsd => "tccsd",
            Method::SubspaceTccsdT => "subspace-tccsd-t",
            Method::TccsdT => "tccsd-t",
            Method::Mp2 => "mp2",
            Method::Ccsd => "ccsd",
            Method::FciOracle => "fci-oracle",
        }
    }

    /// Corrections built on the embedded sub-space coefficients.
    pub fn is_subspace(self) -> bool {
        matches!(self, Method::SubspaceMrmp2 | Method::SubspaceTccsd | Method::SubspaceTccsdT)
    }

    pub fn needs_sampling(self) -> bool {
        self.is_subspace() || matches!(self, Method::Qdos | Method::Qsci)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Where the integrals come from. Hubbard inputs produce one geometry per
/// entry of `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InputSpec {
    Fcidump {
        paths: Vec<PathBuf>,
    },
    Hubbard {
        sites: usize,
        #[serde(default = "one")]
        t: f64,
        u: Vec<f64>,
        #[serde(default)]
        periodic: bool,
        #[serde(default)]
        disorder: f64,
        #[serde(default)]
        disorder_seed: u64,
        /// Defaults to half filling.
        #[serde(default)]
        n_electrons: Option<usize>,
        /// Rotate the site basis into canonical RHF orbitals.
        #[serde(default = "yes")]
        canonical: bool,
    },
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

/// Reference active space: either sizes (Fermi-level window) or explicit
/// 0-based orbital lists.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CasSpec {
    pub n_active: Option<usize>,
    pub n_active_electrons: Option<usize>,
    pub core: Option<Vec<usize>>,
    pub active: Option<Vec<usize>>,
    #[serde(rename = "virtual")]
    pub virt: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScasSpec {
    pub n_active: usize,
    pub n_active_electrons: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub n_shot: usize,
    pub lambda: f64,
    pub seed: u64,
    /// QSCI selected-space size; defaults to the sCAS determinant count.
    pub qsci_determinants: Option<usize>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            n_shot: 1000,
            lambda: DEFAULT_LAMBDA,
            seed: 0,
            qsci_determinants: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: ReportFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: InputSpec,
    pub rcas: CasSpec,
    pub scas: ScasSpec,
    #[serde(default)]
    pub sampling: SamplingConfig,
    pub methods: Vec<Method>,
    #[serde(default = "one_repeat")]
    pub repeats: usize,
    #[serde(default)]
    pub h0_density: H0Density,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub cc: CcOptions,
    #[serde(default)]
    pub output: OutputConfig,
}

fn one_repeat() -> usize {
    1
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.methods.is_empty() {
            return bad("no methods requested".into());
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if self.sampling.n_shot == 0 {
            return bad("n_shot must be at least 1".into());
        }
        if !(self.sampling.lambda > 0.0) {
            return bad(format!("lambda must be positive, got {}", self.sampling.lambda));
        }
        if self.sampling.qsci_determinants == Some(0) {
            return bad("qsci_determinants must be at least 1".into());
        }
        match &self.input {
            InputSpec::Fcidump { paths } if paths.is_empty() => return bad("no FCIDUMP paths".into()),
            InputSpec::Hubbard { u, .. } if u.is_empty() => return bad("no Hubbard u values".into()),
            InputSpec::Hubbard { sites, .. } if *sites < 2 => return bad("Hubbard chain needs 2 sites".into()),
            _ => {}
        }
        let r = &self.rcas;
        let explicit = r.active.is_some();
        let (n_act, n_ele) = if explicit {
            if r.core.is_none() || r.virt.is_none() || r.n_active_electrons.is_none() {
                return bad("explicit rCAS lists need core, active, virtual and n_active_electrons".into());
            }
            (r.active.as_ref().map(Vec::len), r.n_active_electrons)
        } else {
            (r.n_active, r.n_active_electrons)
        };
        let (Some(n_act), Some(n_ele)) = (n_act, n_ele) else {
            return bad("rCAS needs n_active and n_active_electrons".into());
        };
        if n_ele > 2 * n_act {
            return bad(format!("rCAS({n_ele}e,{n_act}o) is overfilled"));
        }
        let s = &self.scas;
        if s.n_active > n_act || s.n_active_electrons > n_ele {
            return bad(format!(
                "sCAS({}e,{}o) exceeds rCAS({n_ele}e,{n_act}o)",
                s.n_active_electrons, s.n_active
            ));
        }
        if (n_ele - s.n_active_electrons) % 2 != 0 {
            return bad("rCAS and sCAS electron counts differ by an odd number".into());
        }
        Ok(())
    }
}
