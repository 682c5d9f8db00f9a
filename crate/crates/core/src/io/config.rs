//! Run configuration, read from TOML.
//!
//! ```toml
//! input = "fino3.csv"          # omit to use synthetic data
//! output_dir = "out"
//! method = "both"              # kde | cma | both
//! return_periods = [1, 50, 500]
//!
//! [columns]
//! hs = "hs_m"
//! v = "v_ms"
//!
//! [grid]
//! step_hs = 0.1
//! step_v = 0.1
//! ```
//!
//! Every key is optional and unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::dataset::Columns;
use crate::cma::{Abscissa, CmaOptions};
use crate::design::{Normalization, DEFAULT_ANGLES};
use crate::error::{Error, Result};
use crate::kde::BandwidthRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSelector {
    Kde,
    Cma,
    Both,
}

impl MethodSelector {
    pub fn methods(self) -> &'static [Method] {
        match self {
            MethodSelector::Kde => &[Method::Kde],
            MethodSelector::Cma => &[Method::Cma],
            MethodSelector::Both => &[Method::Kde, Method::Cma],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Kde,
    Cma,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Kde => "kde",
            Method::Cma => "cma",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandwidthConfig {
    pub factor: f64,
    pub exponent: f64,
}

impl Default for BandwidthConfig {
    fn default() -> Self {
        let r = BandwidthRule::default();
        BandwidthConfig {
            factor: r.factor,
            exponent: r.exponent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub step_hs: f64,
    pub step_v: f64,
    /// KDE grid margin beyond the data, in bandwidths.
    pub padding: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            step_hs: 0.1,
            step_v: 0.1,
            padding: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmaConfig {
    pub bin_width: f64,
    pub min_bin_count: usize,
    pub abscissa: Abscissa,
}

impl Default for CmaConfig {
    fn default() -> Self {
        let o = CmaOptions::default();
        CmaConfig {
            bin_width: o.bin_width,
            min_bin_count: o.min_bin_count,
            abscissa: o.abscissa,
        }
    }
}

impl CmaConfig {
    pub fn options(&self) -> CmaOptions {
        CmaOptions {
            bin_width: self.bin_width,
            min_bin_count: self.min_bin_count,
            abscissa: self.abscissa,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { n: 100_000, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub density: bool,
    pub plot: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            density: false,
            plot: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub columns: Columns,
    pub skip_invalid: bool,
    pub state_duration_hours: f64,
    pub bandwidth: BandwidthConfig,
    pub grid: GridConfig,
    pub return_periods: Vec<f64>,
    pub method: MethodSelector,
    pub cma: CmaConfig,
    pub angles: Vec<f64>,
    pub normalization: Normalization,
    pub output_dir: PathBuf,
    pub synth: SynthConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            columns: Columns::default(),
            skip_invalid: false,
            state_duration_hours: 1.0,
            bandwidth: BandwidthConfig::default(),
            grid: GridConfig::default(),
            return_periods: vec![1.0, 50.0, 500.0],
            method: MethodSelector::Both,
            cma: CmaConfig::default(),
            angles: DEFAULT_ANGLES.to_vec(),
            normalization: Normalization::default(),
            output_dir: PathBuf::from("out"),
            synth: SynthConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {x}")))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        positive("state_duration_hours", self.state_duration_hours)?;
        positive("bandwidth.factor", self.bandwidth.factor)?;
        if !(self.bandwidth.exponent.is_finite() && self.bandwidth.exponent < 0.0) {
            return Err(Error::Config(format!(
                "bandwidth.exponent must be negative, got {}",
                self.bandwidth.exponent
            )));
        }
        positive("grid.step_hs", self.grid.step_hs)?;
        positive("grid.step_v", self.grid.step_v)?;
        if !(self.grid.padding.is_finite() && self.grid.padding >= 0.0) {
            return Err(Error::Config(format!(
                "grid.padding must be non-negative, got {}",
                self.grid.padding
            )));
        }
        if self.return_periods.is_empty() {
            return Err(Error::Config("return_periods is empty".into()));
        }
        for &t in &self.return_periods {
            positive("return period", t)?;
        }
        let mut sorted = self.return_periods.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("return_periods contains duplicates".into()));
        }
        positive("cma.bin_width", self.cma.bin_width)?;
        if self.cma.min_bin_count < 2 {
            return Err(Error::Config("cma.min_bin_count must be at least 2".into()));
        }
        if self.angles.is_empty() || self.angles.iter().any(|a| !(0.0..=90.0).contains(a)) {
            return Err(Error::Config("angles must be a non-empty list within [0, 90]".into()));
        }
        if self.synth.n < 2 {
            return Err(Error::Config("synth.n must be at least 2".into()));
        }
        Ok(())
    }

    pub fn bandwidth_rule(&self) -> BandwidthRule {
        BandwidthRule {
            factor: self.bandwidth.factor,
            exponent: self.bandwidth.exponent,
        }
    }

    /// SHA-256 of the canonical JSON form of every setting that can change
    /// numeric results; the output directory is left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let json = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.return_periods, vec![1.0, 50.0, 500.0]);
        assert_eq!(c.angles.len(), 7);
        assert_eq!(c.grid.step_hs, 0.1);
        assert_eq!(c.bandwidth.exponent, -1.0 / 6.0);
    }

    #[test]
    fn full_file() {
        let c = RunConfig::from_toml(
            r#"
            input = "a.csv"
            method = "kde"
            return_periods = [10, 100]
            skip_invalid = true
            normalization = "standard_deviation"
            [columns]
            hs = "Hs"
            [cma]
            bin_width = 0.25
            abscissa = "center"
            [synth]
            seed = 9
            "#,
        )
        .unwrap();
        assert_eq!(c.input.as_deref(), Some(Path::new("a.csv")));
        assert_eq!(c.method, MethodSelector::Kde);
        assert_eq!(c.columns.hs, "Hs");
        assert_eq!(c.columns.v, "v_ms");
        assert_eq!(c.cma.abscissa, Abscissa::Center);
        assert_eq!(c.synth.seed, 9);
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in ["retrun_periods = [1]", "[grid]\nstep = 0.1", "[columns]\nwind = \"u\""] {
            assert!(matches!(RunConfig::from_toml(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn invalid_values_rejected() {
        for text in [
            "return_periods = []",
            "return_periods = [1, -5]",
            "return_periods = [5, 5]",
            "state_duration_hours = 0",
            "angles = [0, 100]",
            "[grid]\nstep_v = 0",
            "[bandwidth]\nexponent = 0.2",
            "method = \"mixed\"",
        ] {
            assert!(matches!(RunConfig::from_toml(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.grid.step_v = 0.2;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
