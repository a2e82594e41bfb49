//! Run configuration files and the commented header written into outputs.

use std::path::PathBuf;

use lambda_lookdown::lambda::{ModelParams, SimplexPoint};
use lambda_lookdown::rng::DEFAULT_SEED;
use serde::{Deserialize, Serialize};

use crate::CliError;

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelParams>,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Formulas,
    Duality,
    Coalescence,
    Stationarity,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Formulas => "formulas",
            Suite::Duality => "duality",
            Suite::Coalescence => "coalescence",
            Suite::Stationarity => "stationarity",
            Suite::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    /// A lookdown run; writes the frequency trajectory.
    Lookdown {
        n_levels: usize,
        horizon: f64,
        initial_conditions: Vec<SimplexPoint>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        sample_times: Vec<f64>,
        #[serde(default)]
        replicate: u64,
    },
    /// Samples of `I^k(∞)`.
    Explosion {
        k: u64,
        replicates: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cap: Option<u64>,
    },
    /// One path of `F^k` up to `cap`.
    FixationLine {
        k: u64,
        cap: u64,
        #[serde(default)]
        replicate: u64,
    },
    /// Samples of `T^x_fix,k`.
    FixationTime {
        x: SimplexPoint,
        k: usize,
        replicates: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cap: Option<u64>,
    },
    /// A validation suite.
    Validate { suite: Suite, replicates: u64 },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Lookdown { .. } => "lookdown",
            Experiment::Explosion { .. } => "explosion",
            Experiment::FixationLine { .. } => "fixation-line",
            Experiment::FixationTime { .. } => "fixation-time",
            Experiment::Validate { .. } => "validate",
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        config.check()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    /// The config as `# `-prefixed lines, ending with a blank comment line.
    pub fn header(&self) -> String {
        let mut out = String::new();
        for line in self.to_toml().lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str("#\n");
        out
    }

    /// Recover the config from the leading `# ` lines of an output file.
    pub fn from_header(text: &str) -> Result<Self, CliError> {
        let body: Vec<&str> = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .map(|l| l.strip_prefix("# ").unwrap_or(l.trim_start_matches('#')))
            .collect();
        Self::parse(&body.join("\n"))
    }

    pub fn model(&self) -> Result<&ModelParams, CliError> {
        self.model.as_ref().ok_or_else(|| CliError::Usage(format!("experiment '{}' needs a [model] table", self.experiment.name())))
    }

    fn check(&self) -> Result<(), CliError> {
        match &self.experiment {
            Experiment::Validate { .. } => {
                if self.model.is_some() {
                    return Err(CliError::Usage("validation suites define their own models; remove [model]".into()));
                }
            }
            _ => {
                self.model()?.validate().map_err(CliError::from)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOOKDOWN: &str = r#"
seed = 7
output = "out.csv"

[model]
d = 1
theta = 0.5
nu = [0.5]

[model.lambda]
kingman = 1.0
beta = { alpha = 1.5 }
atoms = [[0.25, 0.5]]

[experiment]
kind = "lookdown"
n_levels = 100
horizon = 2.0
initial_conditions = [[0.3], [0.7]]
"#;

    #[test]
    fn parses_and_round_trips() {
        let c = RunConfig::parse(LOOKDOWN).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.experiment.name(), "lookdown");
        assert_eq!(RunConfig::parse(&c.to_toml()).unwrap(), c);
        assert_eq!(RunConfig::from_header(&format!("{}time,ic_index,x1\n", c.header())).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse(&LOOKDOWN.replace("horizon = 2.0", "horizon = 2.0\nspeed = 3")).is_err());
        assert!(RunConfig::parse(&LOOKDOWN.replace("seed = 7", "seed = 7\nverbose = true")).is_err());
        assert!(RunConfig::parse(&LOOKDOWN.replace("kingman = 1.0", "kingmann = 1.0")).is_err());
        assert!(RunConfig::parse(&LOOKDOWN.replace("\"lookdown\"", "\"walk\"")).is_err());
    }

    #[test]
    fn seed_defaults_and_model_rules() {
        let text = "[experiment]\nkind = \"validate\"\nsuite = \"duality\"\nreplicates = 10\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.seed, DEFAULT_SEED);
        assert!(RunConfig::parse(&LOOKDOWN.replace("nu = [0.5]", "nu = [1.0]")).is_err());
        let no_model = "[experiment]\nkind = \"explosion\"\nk = 1\nreplicates = 3\n";
        assert!(RunConfig::parse(no_model).is_err());
    }
}
