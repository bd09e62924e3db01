//! Experiment files.
//!
//! ```toml
//! [detector]
//! snr_m_db = -5.0
//! b_bar = 35.32
//! gamma_bar = -5.69
//! m = 140
//! # a_bar = -35.32       (default -b_bar)
//! # delta_bar = 2.316    (default 2 + SNR_m)
//! # noise_power = 1.0
//!
//! [signal]
//! # snr_o_db = -5.0      (default snr_m_db)
//! modulation = "qpsk"    # or "qam64"
//!
//! [targets]
//! alpha = 0.05
//! beta = 0.05
//! # m_ed = 140           (default from the sample-size formula)
//!
//! [evaluation]
//! exact = true
//! grid = true
//! montecarlo = false
//! trials = 1000000
//! seed = 1
//! # grid_points = 801    (default automatic)
//! quadrature = "trapezoid"
//! priors = [0.5, 0.5]
//! precision = "native"
//! ```

use std::path::Path;

use serde::Deserialize;
use ssct::boundary::SsctConfig;
use ssct::grid::{GridSpec, Quadrature};
use ssct::real::Precision;
use ssct::signal::{db_to_linear, SignalModel};

/// Problems with the experiment file itself.
#[derive(Debug, thiserror::Error)]
pub enum SchemaError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub detector: DetectorSection,
    #[serde(default)]
    pub signal: SignalSection,
    pub targets: Option<TargetSection>,
    #[serde(default)]
    pub evaluation: EvaluationSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub snr_m_db: f64,
    pub b_bar: f64,
    pub gamma_bar: f64,
    pub m: usize,
    pub a_bar: Option<f64>,
    pub delta_bar: Option<f64>,
    pub noise_power: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModulationName {
    #[default]
    Qpsk,
    Qam64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSection {
    pub snr_o_db: Option<f64>,
    #[serde(default)]
    pub modulation: ModulationName,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub alpha: f64,
    pub beta: f64,
    pub m_ed: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureName {
    #[default]
    Trapezoid,
    Simpson,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationSection {
    pub exact: bool,
    pub grid: bool,
    pub montecarlo: bool,
    pub trials: u64,
    pub seed: u64,
    pub grid_points: Option<usize>,
    pub quadrature: QuadratureName,
    pub priors: [f64; 2],
    pub precision: String,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        EvaluationSection {
            exact: true,
            grid: true,
            montecarlo: false,
            trials: 1_000_000,
            seed: 1,
            grid_points: None,
            quadrature: QuadratureName::Trapezoid,
            priors: [0.5, 0.5],
            precision: "native".into(),
        }
    }
}

/// Everything needed to run one evaluation, with SNRs already linear.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub cfg: SsctConfig,
    pub model: SignalModel,
    pub snr_m: f64,
    pub targets: Option<(f64, f64)>,
    pub m_ed: Option<usize>,
    pub exact: bool,
    pub grid: Option<GridSpec>,
    pub use_grid: bool,
    pub montecarlo: bool,
    pub trials: u64,
    pub seed: u64,
    pub priors: (f64, f64),
    pub precision: Precision,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, SchemaError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| SchemaError::Read { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        Ok(toml::from_str(text)?)
    }

    /// Validates and converts; dB values become linear here and nowhere else.
    pub fn build(&self) -> Result<Experiment, SchemaError> {
        let invalid = |e: ssct::SsctError| SchemaError::Invalid(e.to_string());
        let d = &self.detector;
        let snr_m = db_to_linear(d.snr_m_db);
        let snr_o = db_to_linear(self.signal.snr_o_db.unwrap_or(d.snr_m_db));
        let cfg = SsctConfig::new(
            d.a_bar.unwrap_or(-d.b_bar),
            d.b_bar,
            d.gamma_bar,
            d.delta_bar.unwrap_or(2.0 + snr_m),
            d.m,
            snr_m,
            d.noise_power.unwrap_or(1.0),
        )
        .map_err(invalid)?;
        let model = match self.signal.modulation {
            ModulationName::Qpsk => SignalModel::qpsk(snr_o),
            ModulationName::Qam64 => SignalModel::qam64(snr_o),
        }
        .map_err(invalid)?;
        let e = &self.evaluation;
        let quadrature = match e.quadrature {
            QuadratureName::Trapezoid => Quadrature::Trapezoid,
            QuadratureName::Simpson => Quadrature::Simpson,
        };
        let grid = match e.grid_points {
            Some(p) => Some(GridSpec::new(p, quadrature).map_err(invalid)?),
            None if quadrature != Quadrature::default() => {
                Some(GridSpec::new(GridSpec::auto(&cfg).points(), quadrature).map_err(invalid)?)
            }
            None => None,
        };
        let precision = e.precision.parse::<Precision>().map_err(SchemaError::Invalid)?;
        let [p0, p1] = e.priors;
        if !(p0 >= 0.0 && p1 >= 0.0 && (p0 + p1 - 1.0).abs() < 1e-12) {
            return Err(SchemaError::Invalid(format!("priors [{p0}, {p1}] must be nonnegative and sum to 1")));
        }
        if !(e.exact || e.grid || e.montecarlo) {
            return Err(SchemaError::Invalid("enable at least one of exact, grid, montecarlo".into()));
        }
        let targets = self.targets.as_ref().map(|t| (t.alpha, t.beta));
        Ok(Experiment {
            cfg,
            model,
            snr_m,
            targets,
            m_ed: self.targets.as_ref().and_then(|t| t.m_ed),
            exact: e.exact,
            grid,
            use_grid: e.grid,
            montecarlo: e.montecarlo,
            trials: e.trials,
            seed: e.seed,
            priors: (p0, p1),
            precision,
        })
    }
}
