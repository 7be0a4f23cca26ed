use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::ImpairmentChannelSpec;
use crate::compensation::AdaptConfig;
use crate::error::{Error, Result};
use crate::link::LinkConfig;
use crate::metrics::{MonteCarloConfig, SnrSearch};
use crate::splitter::TxParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SweepGain,
    SweepPhase,
    SweepBw,
    Montecarlo,
    Convergence,
    EquivalenceCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::SweepGain,
        ExperimentKind::SweepPhase,
        ExperimentKind::SweepBw,
        ExperimentKind::Montecarlo,
        ExperimentKind::Convergence,
        ExperimentKind::EquivalenceCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SweepGain => "sweep-gain",
            ExperimentKind::SweepPhase => "sweep-phase",
            ExperimentKind::SweepBw => "sweep-bw",
            ExperimentKind::Montecarlo => "montecarlo",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::EquivalenceCheck => "equivalence-check",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentKind::SweepGain => "penalty at BER 1e-3 vs mixer gain imbalance, with and without adaptation",
            ExperimentKind::SweepPhase => "penalty at BER 1e-3 vs mixer phase imbalance, with and without adaptation",
            ExperimentKind::SweepBw => "penalty at BER 1e-3 vs bandwidth mismatch of the B1Q and B2I paths",
            ExperimentKind::Montecarlo => "BER of random channels with the calibrated equalizer frozen and adapted",
            ExperimentKind::Convergence => "estimator and equalizer learning curves",
            ExperimentKind::EquivalenceCheck => "physical channel vs its 4x4 MIMO model on random channels",
        }
    }

    pub fn is_sweep(self) -> bool {
        matches!(self, ExperimentKind::SweepGain | ExperimentKind::SweepPhase | ExperimentKind::SweepBw)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`; expected one of {}", Self::ALL.map(|k| k.name()).join(", "))))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Gain imbalance applied to both mixers.
    pub gain: Vec<f64>,
    /// Phase imbalance in degrees applied to both mixers.
    pub phase_deg: Vec<f64>,
    /// Relative bandwidth change of the B1Q and B2I paths.
    pub bw: Vec<f64>,
    pub max_compensated_penalty_db: f64,
    /// Required excess of the uncompensated penalty at the largest value.
    pub min_gap_db: f64,
    pub zero_tolerance_db: f64,
    /// Allowed decrease of the uncompensated requirement between
    /// neighbouring magnitudes.
    pub monotone_slack_db: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            gain: vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.25],
            phase_deg: vec![0.0, 4.4, 8.8, 13.2, 17.6, 22.0],
            bw: vec![-0.25, -0.15, -0.05, 0.0, 0.05, 0.15, 0.25],
            max_compensated_penalty_db: 0.5,
            min_gap_db: 1.0,
            zero_tolerance_db: 0.1,
            monotone_slack_db: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloChecks {
    /// Fraction of channels whose adapted BER must stay within
    /// `compensated_ratio` of the reference.
    pub min_fraction: f64,
    pub compensated_ratio: f64,
    /// Required median of uncompensated BER over the reference.
    pub uncompensated_median_ratio: f64,
}

impl Default for MonteCarloChecks {
    fn default() -> Self {
        Self {
            min_fraction: 0.95,
            compensated_ratio: 2.0,
            uncompensated_median_ratio: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceConfig {
    /// Estimator training on white input at `alpha = 1`.
    pub ce_samples: usize,
    pub ce_sigma: f64,
    pub ce_trace_every: usize,
    pub ce_max_nmse_db: f64,
    /// Mixer gain imbalance of the joint-loop run.
    pub loop_delta1: f64,
    pub loop_min_improvement_db: f64,
    /// Steady-state tolerance between decimation `d` and `2d`.
    pub decimation_tolerance_db: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            ce_samples: 2_000_000,
            ce_sigma: 0.3,
            ce_trace_every: 100_000,
            ce_max_nmse_db: -30.0,
            loop_delta1: 0.25,
            loop_min_improvement_db: 20.0,
            decimation_tolerance_db: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquivalenceConfig {
    pub specs: usize,
    pub samples: usize,
    pub max_nmse_db: f64,
}

impl Default for EquivalenceConfig {
    fn default() -> Self {
        Self {
            specs: 100,
            samples: 8192,
            max_nmse_db: -80.0,
        }
    }
}

/// Everything a run depends on. Unknown keys are rejected at every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub tx: TxParams,
    /// Nominal analog channel.
    pub channel: ImpairmentChannelSpec,
    pub link: LinkConfig,
    pub search: SnrSearch,
    /// Schedule that adapts the identity equalizer to the nominal channel.
    pub calibration: AdaptConfig,
    /// Schedule of the background adaptation on an impaired channel.
    pub adapt: AdaptConfig,
    pub sweep: SweepConfig,
    pub montecarlo: MonteCarloConfig,
    pub montecarlo_checks: MonteCarloChecks,
    pub convergence: ConvergenceConfig,
    pub equivalence: EquivalenceConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::for_experiment(ExperimentKind::SweepGain)
    }
}

impl ExperimentConfig {
    pub fn for_experiment(kind: ExperimentKind) -> Self {
        Self {
            experiment: kind,
            seed: 1,
            tx: TxParams::default(),
            channel: ImpairmentChannelSpec::nominal(),
            link: LinkConfig::default(),
            search: SnrSearch::default(),
            calibration: AdaptConfig::calibration(),
            adapt: AdaptConfig::default(),
            sweep: SweepConfig::default(),
            montecarlo: MonteCarloConfig::default(),
            montecarlo_checks: MonteCarloChecks::default(),
            convergence: ConvergenceConfig::default(),
            equivalence: EquivalenceConfig::default(),
        }
    }

    /// Defaults, then `base` (a TOML or JSON document), then `overrides`
    /// of the form `dotted.key=value` with TOML value syntax.
    pub fn resolve(kind: Option<ExperimentKind>, base: Option<&str>, base_is_json: bool, overrides: &[String]) -> Result<Self> {
        let mut tree = toml::Value::try_from(Self::default()).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(text) = base {
            let user: toml::Value = if base_is_json {
                let j: serde_json::Value = serde_json::from_str(text)?;
                json_to_toml(&j)?
            } else {
                toml::Value::Table(text.parse::<toml::Table>().map_err(|e| Error::Config(e.to_string()))?)
            };
            merge(&mut tree, user);
        }
        if let Some(k) = kind {
            set_path(&mut tree, "experiment", toml::Value::String(k.name().to_string()))?;
        }
        for o in overrides {
            let (key, value) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{o}` is not of the form key=value")))?;
            set_path(&mut tree, key.trim(), parse_value(value.trim()))?;
        }
        let cfg: Self = tree.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(kind: Option<ExperimentKind>, path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::MissingInput(format!("{}: {e}", p.display())))?;
                let json = p.extension().is_some_and(|e| e == "json");
                Self::resolve(kind, Some(&text), json, overrides)
            }
            None => Self::resolve(kind, None, false, overrides),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        self.channel.validate().map_err(cfg_err)?;
        self.calibration.validate().map_err(cfg_err)?;
        self.adapt.validate().map_err(cfg_err)?;
        self.tx.rrc().map_err(cfg_err)?;
        self.tx.split_config().map_err(cfg_err)?;
        if self.link.pilot_symbols < crate::metrics::MIN_PILOTS {
            return Err(Error::Config(format!("link.pilot_symbols must be at least {}", crate::metrics::MIN_PILOTS)));
        }
        if self.link.symbols == 0 {
            return Err(Error::Config("link.symbols must be positive".into()));
        }
        if !(self.search.target_ber > 0.0 && self.search.target_ber < 0.375 && self.search.tol_db > 0.0) {
            return Err(Error::Config("search.target_ber must lie in (0, 0.375) and search.tol_db be positive".into()));
        }
        if !(self.montecarlo.reference_ber > 0.0 && self.montecarlo.reference_ber < 0.375) {
            return Err(Error::Config("montecarlo.reference_ber must lie in (0, 0.375)".into()));
        }
        if self.experiment.is_sweep() && self.sweep_values().is_empty() {
            return Err(Error::Config(format!("no sweep values for {}", self.experiment)));
        }
        if self.convergence.ce_trace_every == 0 || self.equivalence.samples == 0 {
            return Err(Error::Config("convergence.ce_trace_every and equivalence.samples must be positive".into()));
        }
        Ok(())
    }

    pub fn sweep_values(&self) -> &[f64] {
        match self.experiment {
            ExperimentKind::SweepGain => &self.sweep.gain,
            ExperimentKind::SweepPhase => &self.sweep.phase_deg,
            ExperimentKind::SweepBw => &self.sweep.bw,
            _ => &[],
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of [`Self::to_json`], hex encoded.
    pub fn digest(&self) -> String {
        let d = Sha256::digest(self.to_json().as_bytes());
        d.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn set_path(tree: &mut toml::Value, key: &str, value: toml::Value) -> Result<()> {
    let mut cur = tree;
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed key `{key}`")));
    }
    for p in &parts[..parts.len() - 1] {
        let table = cur
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{key}`: `{p}` is not inside a table")))?;
        cur = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    let table = cur
        .as_table_mut()
        .ok_or_else(|| Error::Config(format!("`{key}` does not name a table entry")))?;
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// TOML value syntax, falling back to a bare string.
fn parse_value(text: &str) -> toml::Value {
    format!("v = {text}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(text.to_string()))
}

fn json_to_toml(j: &serde_json::Value) -> Result<toml::Value> {
    use serde_json::Value as J;
    Ok(match j {
        J::Bool(b) => toml::Value::Boolean(*b),
        J::Number(n) => match n.as_i64() {
            Some(i) => toml::Value::Integer(i),
            None => toml::Value::Float(n.as_f64().ok_or_else(|| Error::Config(format!("number {n} out of range")))?),
        },
        J::String(s) => toml::Value::String(s.clone()),
        J::Array(a) => toml::Value::Array(a.iter().map(json_to_toml).collect::<Result<_>>()?),
        J::Object(o) => {
            let mut t = toml::Table::new();
            for (k, v) in o {
                if !v.is_null() {
                    t.insert(k.clone(), json_to_toml(v)?);
                }
            }
            toml::Value::Table(t)
        }
        J::Null => return Err(Error::Config("null outside an object".into())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_carry_system_parameters() {
        let c = ExperimentConfig::default();
        assert_eq!(c.tx.symbol_rate_hz, 128e9);
        assert_eq!(c.tx.sps, 2);
        assert_eq!(c.channel.alpha, 2);
        assert_eq!(c.calibration.ie_taps, 21);
        assert_eq!(c.adapt.feedback_m, 128);
        assert_eq!(c.link.symbols, 200_000);
        c.validate().unwrap();
    }

    #[test]
    fn toml_file_and_overrides_layer() {
        let text = "seed = 7\n[adapt]\njoint_samples = 1000\n[sweep]\ngain = [0.0, 0.1]\n";
        let c = ExperimentConfig::resolve(Some(ExperimentKind::SweepGain), Some(text), false, &["adapt.ie_step=0.25".into(), "channel.delta1=0.1".into()]).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.adapt.joint_samples, 1000);
        assert_eq!(c.adapt.ce_only_samples, AdaptConfig::default().ce_only_samples);
        assert_eq!(c.calibration.ce_only_samples, 0);
        assert_eq!(c.adapt.ie_step, 0.25);
        assert_eq!(c.channel.delta1, 0.1);
        assert_eq!(c.sweep.gain, vec![0.0, 0.1]);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::resolve(None, Some("sead = 3"), false, &[]).is_err());
        assert!(ExperimentConfig::resolve(None, None, false, &["adapt.stepp=1".into()]).is_err());
        assert!(ExperimentConfig::resolve(None, None, false, &["experiment=sweep-foo".into()]).is_err());
        assert!(ExperimentConfig::resolve(None, None, false, &["seed".into()]).is_err());
    }

    #[test]
    fn resolved_json_round_trips() {
        let c = ExperimentConfig::resolve(Some(ExperimentKind::Montecarlo), None, false, &["montecarlo.channels=3".into()]).unwrap();
        let back = ExperimentConfig::resolve(None, Some(&c.to_json()), true, &[]).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.digest(), c.digest());
    }

    #[test]
    fn experiment_names_parse() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
        }
        assert!("sweep".parse::<ExperimentKind>().is_err());
    }
}
