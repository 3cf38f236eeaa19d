//! Run configuration: a single JSON document, with command-line flags
//! overriding individual keys. All rates are dimensionless products
//! (χ₁t, χ₂t, κt) with the interaction time normalized to 1; exactly one
//! of `chi2_t` and `nbar` must be given, the other is derived.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use opo_core::phase_space::{ComplexAmplitudePair, SystemParams};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub xmin: f64,
    pub xmax: f64,
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { xmin: -3.0, xmax: 3.0, n: 61 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_chi1_t")]
    pub chi1_t: f64,
    #[serde(default)]
    pub chi2_t: Option<f64>,
    #[serde(default = "default_kappa_t")]
    pub kappa_t: f64,
    #[serde(default)]
    pub nbar: Option<f64>,
    #[serde(default = "default_cutoffs")]
    pub cutoffs: [usize; 3],
    #[serde(default = "default_phi_points")]
    pub phi_points: usize,
    #[serde(default = "default_one")]
    pub alpha_re: f64,
    #[serde(default)]
    pub alpha_im: f64,
    #[serde(default)]
    pub beta_re: f64,
    #[serde(default)]
    pub beta_im: f64,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
}

fn default_chi1_t() -> f64 {
    1e-3
}
fn default_kappa_t() -> f64 {
    1e-3
}
fn default_cutoffs() -> [usize; 3] {
    [2, 12, 12]
}
fn default_phi_points() -> usize {
    32
}
fn default_one() -> f64 {
    1.0
}
fn default_outputs() -> PathBuf {
    PathBuf::from("opo-out")
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            chi1_t: default_chi1_t(),
            chi2_t: None,
            kappa_t: default_kappa_t(),
            nbar: Some(0.5),
            cutoffs: default_cutoffs(),
            phi_points: default_phi_points(),
            alpha_re: 1.0,
            alpha_im: 0.0,
            beta_re: 0.0,
            beta_im: 0.0,
            grid: GridSpec::default(),
            outputs: default_outputs(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config schema violation: {e}")))
    }

    /// Exactly one of {chi2_t, nbar} must be given; other fields must be
    /// in range.
    pub fn validate(&self) -> Result<(), CliError> {
        match (self.chi2_t, self.nbar) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("give exactly one of chi2_t and nbar, not both".into()))
            }
            (None, None) => return Err(CliError::Config("one of chi2_t or nbar is required".into())),
            _ => {}
        }
        if !(self.kappa_t > 0.0) {
            return Err(CliError::Config(format!("kappa_t = {} must be > 0", self.kappa_t)));
        }
        if !(self.chi1_t >= 0.0) {
            return Err(CliError::Config(format!("chi1_t = {} must be >= 0", self.chi1_t)));
        }
        if let Some(n) = self.nbar {
            if !(n >= 0.0) || !n.is_finite() {
                return Err(CliError::Config(format!("nbar = {n} must be finite and >= 0")));
            }
        }
        if self.cutoffs[0] < 1 || self.cutoffs[1] < 1 || self.cutoffs[2] < 1 {
            return Err(CliError::Config("cutoffs must all be >= 1".into()));
        }
        if self.phi_points < 8 {
            return Err(CliError::Config(format!("phi_points = {} must be >= 8", self.phi_points)));
        }
        if self.grid.n < 2 || !(self.grid.xmax > self.grid.xmin) {
            return Err(CliError::Config("grid requires n >= 2 and xmax > xmin".into()));
        }
        let norm = self.alpha_re * self.alpha_re
            + self.alpha_im * self.alpha_im
            + self.beta_re * self.beta_re
            + self.beta_im * self.beta_im;
        if norm <= 0.0 || !norm.is_finite() {
            return Err(CliError::Config("(alpha, beta) must be non-zero and finite".into()));
        }
        Ok(())
    }

    /// System parameters in the dimensionless normalization (t = 1):
    /// κ = κt, χ₁ = χ₁t, and χ₂ from either chi2_t or the nbar target.
    pub fn params(&self) -> Result<SystemParams, CliError> {
        let chi2 = match (self.chi2_t, self.nbar) {
            (Some(c), None) => c,
            (None, Some(n)) => self.kappa_t * (2.0 * n / (2.0 * n + 1.0)).sqrt(),
            _ => return Err(CliError::Config("give exactly one of chi2_t and nbar".into())),
        };
        SystemParams::new(self.chi1_t, chi2, self.kappa_t, self.kappa_t).map_err(CliError::Domain)
    }

    /// The steady-state photon number implied by the configuration.
    pub fn nbar_value(&self) -> Result<f64, CliError> {
        match self.nbar {
            Some(n) => Ok(n),
            None => self.params()?.steady_nbar().map_err(CliError::Domain),
        }
    }

    pub fn amplitudes(&self) -> Result<ComplexAmplitudePair, CliError> {
        ComplexAmplitudePair::normalized(
            num_complex::Complex64::new(self.alpha_re, self.alpha_im),
            num_complex::Complex64::new(self.beta_re, self.beta_im),
        )
        .map_err(CliError::Domain)
    }

    /// FNV-1a over the canonical JSON serialization; recorded in every
    /// output file so results are traceable to their configuration. The
    /// output directory is not part of the fingerprint: it locates the
    /// results, it does not shape them.
    pub fn fingerprint(&self) -> String {
        let mut canonical_cfg = self.clone();
        canonical_cfg.outputs = default_outputs();
        let canonical = serde_json::to_string(&canonical_cfg).expect("config serializes");
        let mut hash: u64 = 0xcbf29ce484222325;
        for b in canonical.bytes() {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
        format!("{hash:016x}")
    }
}
