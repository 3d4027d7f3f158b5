//! Scenario configuration and its TOML file format.

use serde::{Deserialize, Serialize};

use covtest_core::desparsified::DEFAULT_NODEWISE_FACTOR;
use covtest_core::{ColumnScaling, CovReference, SigmaSource};

use crate::error::{Result, SimError};

/// Sign pattern of the nonzero true coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SignPattern {
    #[default]
    Positive,
    Random,
}

/// One simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub k0: usize,
    /// Common magnitude of the active coefficients (beta-min).
    pub coef_size: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    /// Scaling of the design handed to the estimators; the response is
    /// always generated from the unscaled AR(1) draws.
    #[serde(default = "unit_norm", with = "scaling_serde")]
    pub column_scaling: ColumnScaling,
    #[serde(default)]
    pub signs: SignPattern,
}

fn one() -> f64 {
    1.0
}

fn unit_norm() -> ColumnScaling {
    ColumnScaling::UnitNorm
}

mod scaling_serde {
    use covtest_core::ColumnScaling;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &ColumnScaling, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ColumnScaling, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SimError::Config(msg));
        if self.n == 0 || self.p == 0 {
            return bad(format!(
                "n and p must be positive (n = {}, p = {})",
                self.n, self.p
            ));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return bad(format!("rho must lie in (-1, 1), got {}", self.rho));
        }
        if self.k0 == 0 || self.k0 > self.p {
            return bad(format!("k0 must be in 1..={}, got {}", self.p, self.k0));
        }
        if !(self.coef_size >= 0.0 && self.coef_size.is_finite()) {
            return bad(format!(
                "coef_size must be finite and nonnegative, got {}",
                self.coef_size
            ));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!(
                "sigma must be finite and nonnegative, got {}",
                self.sigma
            ));
        }
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        Ok(())
    }

    pub fn with_coef_size(&self, coef_size: f64) -> Self {
        ScenarioConfig {
            coef_size,
            ..self.clone()
        }
    }

    pub fn with_k0(&self, k0: usize) -> Self {
        ScenarioConfig { k0, ..self.clone() }
    }
}

/// Noise-level source for the methods of the table comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SigmaRule {
    /// Scaled lasso for the desparsified lasso; for the covariance tests the
    /// full least-squares residual when n > p and the scaled lasso otherwise.
    #[default]
    PerMethod,
    /// Scaled lasso when p ≥ n, full least-squares residual otherwise.
    Auto,
    ScaledLasso,
    OlsResidual,
    /// The true σ of the scenario.
    Known,
}

impl SigmaRule {
    /// Source for the desparsified lasso.
    pub fn despars_source(self, true_sigma: f64) -> SigmaSource {
        match self {
            SigmaRule::PerMethod => SigmaSource::ScaledLasso,
            other => other.cov_source(true_sigma),
        }
    }

    /// Source for the covariance tests.
    pub fn cov_source(self, true_sigma: f64) -> SigmaSource {
        match self {
            SigmaRule::PerMethod | SigmaRule::Auto => SigmaSource::Auto,
            SigmaRule::ScaledLasso => SigmaSource::ScaledLasso,
            SigmaRule::OlsResidual => SigmaSource::OlsResidual,
            SigmaRule::Known => SigmaSource::Known(true_sigma),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SigmaRule::PerMethod => "per_method",
            SigmaRule::Auto => "auto",
            SigmaRule::ScaledLasso => "scaled_lasso",
            SigmaRule::OlsResidual => "ols_residual",
            SigmaRule::Known => "known",
        }
    }
}

/// Reference distribution of the covariance statistic in the tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CovReferenceRule {
    /// F(2, n − p) when σ² is the least-squares residual variance, Exp(1)
    /// otherwise.
    #[default]
    Auto,
    Exp1,
}

impl CovReferenceRule {
    pub fn reference(self, source: SigmaSource, n: usize, p: usize) -> CovReference {
        match (self, source.resolve(n, p)) {
            (CovReferenceRule::Auto, SigmaSource::OlsResidual) => CovReference::F2 { df: n - p },
            _ => CovReference::Exp1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CovReferenceRule::Auto => "auto",
            CovReferenceRule::Exp1 => "exp1",
        }
    }
}

/// Which path steps get a covariance statistic in the tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CovWindow {
    /// The first min(n, p) knots (enter and leave events both count);
    /// variables whose last entry lies beyond keep their latest tested one.
    #[default]
    MinNP,
    /// Every computable entry.
    Full,
}

impl CovWindow {
    pub fn max_step(self, n: usize, p: usize) -> usize {
        match self {
            CovWindow::MinNP => n.min(p),
            CovWindow::Full => usize::MAX,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CovWindow::MinNP => "min_np",
            CovWindow::Full => "full",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSection {
    pub coef_sizes: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub sigma_rule: SigmaRule,
    /// Nodewise penalty as a multiple of the universal level.
    #[serde(default = "default_nodewise_factor")]
    pub nodewise_factor: f64,
    #[serde(default)]
    pub cov_reference: CovReferenceRule,
    #[serde(default)]
    pub cov_window: CovWindow,
}

impl TableSection {
    pub fn new(coef_sizes: Vec<f64>) -> Self {
        TableSection {
            coef_sizes,
            alpha: default_alpha(),
            sigma_rule: SigmaRule::default(),
            nodewise_factor: default_nodewise_factor(),
            cov_reference: CovReferenceRule::default(),
            cov_window: CovWindow::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureSection {
    pub coef_sizes: Vec<f64>,
    pub k0_values: Vec<usize>,
}

fn default_alpha() -> f64 {
    0.05
}

fn default_nodewise_factor() -> f64 {
    DEFAULT_NODEWISE_FACTOR
}

/// Contents of a scenario file: a base scenario plus optional sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub scenario: ScenarioConfig,
    pub table: Option<TableSection>,
    pub figure: Option<FigureSection>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        file.validate()?;
        Ok(file)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if let Some(t) = &self.table {
            if t.coef_sizes.is_empty() || t.coef_sizes.iter().any(|c| !(*c >= 0.0)) {
                return Err(SimError::Config(
                    "table.coef_sizes must be nonempty and nonnegative".into(),
                ));
            }
            if !(t.alpha > 0.0 && t.alpha < 1.0) {
                return Err(SimError::Config(format!(
                    "table.alpha must be in (0, 1), got {}",
                    t.alpha
                )));
            }
            if !(t.nodewise_factor > 0.0 && t.nodewise_factor.is_finite()) {
                return Err(SimError::Config(format!(
                    "table.nodewise_factor must be positive, got {}",
                    t.nodewise_factor
                )));
            }
        }
        if let Some(f) = &self.figure {
            if f.coef_sizes.is_empty() || f.k0_values.is_empty() {
                return Err(SimError::Config(
                    "figure.coef_sizes and figure.k0_values must be nonempty".into(),
                ));
            }
            if let Some(k) = f.k0_values.iter().find(|&&k| k == 0 || k > self.scenario.p) {
                return Err(SimError::Config(format!(
                    "figure k0 value {k} outside 1..={}",
                    self.scenario.p
                )));
            }
        }
        Ok(())
    }
}

/// Default seed of the built-in presets.
pub const PRESET_SEED: u64 = 20131201;

fn base(n: usize, p: usize, k0: usize, runs: usize) -> ScenarioConfig {
    ScenarioConfig {
        n,
        p,
        rho: 0.5,
        k0,
        coef_size: 1.0,
        sigma: 1.0,
        runs,
        seed: PRESET_SEED,
        column_scaling: ColumnScaling::UnitNorm,
        signs: SignPattern::Positive,
    }
}

/// n = 100, p = 80, ρ = 0.5, |A*| = 10, 500 runs.
pub fn preset_table1() -> ScenarioFile {
    ScenarioFile {
        scenario: base(100, 80, 10, 500),
        table: Some(TableSection::new(vec![0.5, 1.0, 2.0, 4.0])),
        figure: None,
    }
}

/// As [`preset_table1`] with p = 200.
pub fn preset_table2() -> ScenarioFile {
    let mut f = preset_table1();
    f.scenario.p = 200;
    f
}

/// n = 100, p = 1000, ρ = 0.5, k0 ∈ {3, 5, 10}, 500 runs per point.
pub fn preset_figure1() -> ScenarioFile {
    ScenarioFile {
        scenario: base(100, 1000, 3, 500),
        table: None,
        figure: Some(FigureSection {
            coef_sizes: vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0],
            k0_values: vec![3, 5, 10],
        }),
    }
}

/// Smaller figure run: p = 300, 200 runs per point.
pub fn preset_figure1_reduced() -> ScenarioFile {
    let mut f = preset_figure1();
    f.scenario.p = 300;
    f.scenario.runs = 200;
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip_through_toml() {
        for f in [
            preset_table1(),
            preset_table2(),
            preset_figure1(),
            preset_figure1_reduced(),
        ] {
            assert_eq!(ScenarioFile::parse(&f.to_toml()).unwrap(), f);
        }
    }

    #[test]
    fn parses_minimal_file_with_defaults() {
        let f = ScenarioFile::parse(
            "[scenario]\nn = 20\np = 10\nrho = 0.3\nk0 = 2\ncoef_size = 1.5\nruns = 3\n\n[table]\ncoef_sizes = [1.0]\n",
        )
        .unwrap();
        assert_eq!(f.scenario.sigma, 1.0);
        assert_eq!(f.scenario.column_scaling, ColumnScaling::UnitNorm);
        assert_eq!(f.table.unwrap().alpha, 0.05);
    }

    #[test]
    fn rejects_invalid_values() {
        let mut c = preset_table1().scenario;
        c.k0 = 81;
        assert!(c.validate().is_err());
        c.k0 = 10;
        c.rho = 1.0;
        assert!(c.validate().is_err());
        assert!(ScenarioFile::parse("[scenario]\nn = 1\n").is_err());
        assert!(ScenarioFile::parse(
            "[scenario]\nn = 20\np = 10\nrho = 0.3\nk0 = 2\ncoef_size = 1.5\nruns = 3\nbogus = 1\n"
        )
        .is_err());
    }
}
