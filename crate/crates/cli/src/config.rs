//! Scenario configuration: a TOML file layered under command-line flags.

use crate::error::{CliError, CliResult};
use compadv::alloc::{ClusterStrategy, RankingMode, ThresholdConfig};
use compadv::channel::{MultipathModel, PowerLoading, ResourceGrid};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Root seed for channels, clustering and random baselines.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub grid: GridSection,
    pub channel: ChannelSection,
    pub link: LinkSection,
    pub allocation: AllocationSection,
    pub curve: CurveSection,
    pub oracle: OracleSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub subcarrier_count: usize,
    pub subcarrier_spacing_hz: f64,
    pub block_size: usize,
    pub center_frequency_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelSource {
    Synthetic,
    Trace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub source: ChannelSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<PathBuf>,
    pub tap_count: usize,
    pub delay_spread_s: f64,
    pub max_delay_s: f64,
    pub rician_k: f64,
    /// Scale each synthetic response to unit mean power, so `link.snr_db`
    /// is every user's realized mean SNR.
    pub normalize_power: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    /// Mean SNR at unit loading; used when `noise_power` is empty.
    pub snr_db: f64,
    /// Linear noise power per user; a single value applies to every user.
    pub noise_power: Vec<f64>,
    /// Flat per-block loading coefficient.
    pub loading: f64,
    /// Per-block loading, one value per line; overrides `loading`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loading_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AllocationSection {
    pub users: usize,
    pub threshold: f64,
    pub mode: RankingMode,
    /// Fractions of the band requested by users 1 and 2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub demand: Option<[f64; 2]>,
    pub clustering: ClusterStrategy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    Ca,
    AntiCa,
    Random,
}

impl std::str::FromStr for StrategyName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ca" => Ok(StrategyName::Ca),
            "anti_ca" => Ok(StrategyName::AntiCa),
            "random" => Ok(StrategyName::Random),
            other => Err(format!("unknown strategy `{other}` (expected ca, anti_ca or random)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveSection {
    pub strategies: Vec<StrategyName>,
    pub random_trials: usize,
    /// Channel seeds `seed, seed + 1, ...` swept by `curve`.
    pub seed_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub max_n: usize,
    pub instances: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            output_dir: PathBuf::from("out"),
            grid: GridSection::default(),
            channel: ChannelSection::default(),
            link: LinkSection::default(),
            allocation: AllocationSection::default(),
            curve: CurveSection::default(),
            oracle: OracleSection::default(),
        }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        let g = ResourceGrid::default();
        Self {
            subcarrier_count: g.subcarrier_count(),
            subcarrier_spacing_hz: g.subcarrier_spacing(),
            block_size: g.block_size(),
            center_frequency_hz: g.center_frequency(),
        }
    }
}

impl Default for ChannelSection {
    fn default() -> Self {
        let m = MultipathModel::default();
        Self {
            source: ChannelSource::Synthetic,
            trace_path: None,
            tap_count: m.tap_count,
            delay_spread_s: m.delay_spread,
            max_delay_s: m.max_delay,
            rician_k: m.rician_k,
            normalize_power: true,
        }
    }
}

impl Default for LinkSection {
    fn default() -> Self {
        Self {
            snr_db: 8.0,
            noise_power: Vec::new(),
            loading: 1.0,
            loading_file: None,
        }
    }
}

impl Default for AllocationSection {
    fn default() -> Self {
        let t = ThresholdConfig::default();
        Self {
            users: 2,
            threshold: t.threshold(),
            mode: t.mode(),
            demand: None,
            clustering: ClusterStrategy::ResponseBased,
        }
    }
}

impl Default for CurveSection {
    fn default() -> Self {
        Self {
            strategies: vec![StrategyName::Ca, StrategyName::AntiCa, StrategyName::Random],
            random_trials: 200,
            seed_count: 1,
        }
    }
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            max_n: 12,
            instances: 50,
        }
    }
}

/// 1-based line of `key = ...` inside `[section]` (or the top level).
fn locate(source: &str, section: Option<&str>, key: &str) -> Option<usize> {
    let mut current: Option<String> = None;
    for (i, line) in source.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = Some(name.trim().to_string());
            continue;
        }
        let matches_key = t
            .split_once('=')
            .is_some_and(|(k, _)| k.trim() == key);
        if matches_key && current.as_deref() == section {
            return Some(i + 1);
        }
    }
    None
}

impl ScenarioConfig {
    pub fn from_toml(source: &str, origin: &Path) -> CliResult<Self> {
        let cfg: Self = toml::from_str(source)
            .map_err(|e| CliError::Validation(format!("{}: {e}", origin.display())))?;
        cfg.validate().map_err(|(section, key, msg)| {
            let at = locate(source, section, key)
                .map(|l| format!("{}:{l}", origin.display()))
                .unwrap_or_else(|| origin.display().to_string());
            let path = section.map_or(key.to_string(), |s| format!("{s}.{key}"));
            CliError::Validation(format!("{at}: {path}: {msg}"))
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&text, path)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new("")));
        cfg.check_files()?;
        Ok(cfg)
    }

    /// Make relative input paths relative to the config file's directory.
    fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.channel.trace_path, &mut self.link.loading_file]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config always serializes")
    }

    /// Checks everything that can be checked without touching channel data.
    /// Errors carry `(section, key, message)`.
    pub fn validate(&self) -> Result<(), (Option<&'static str>, &'static str, String)> {
        let g = &self.grid;
        ResourceGrid::new(g.subcarrier_count, g.subcarrier_spacing_hz, g.block_size, g.center_frequency_hz)
            .map_err(|e| (Some("grid"), "block_size", e.to_string()))?;

        let c = &self.channel;
        match c.source {
            ChannelSource::Synthetic => {
                MultipathModel::new(c.tap_count, c.delay_spread_s, c.max_delay_s, c.rician_k).map_err(|e| {
                    let msg = e.to_string();
                    let key = ["delay_spread_s", "max_delay_s", "rician_k"]
                        .into_iter()
                        .find(|k| msg.contains(k.trim_end_matches("_s")))
                        .unwrap_or("tap_count");
                    (Some("channel"), key, msg)
                })?;
            }
            ChannelSource::Trace => {
                if c.trace_path.is_none() {
                    return Err((Some("channel"), "source", "trace source needs trace_path".into()));
                }
            }
        }

        let l = &self.link;
        if !l.snr_db.is_finite() {
            return Err((Some("link"), "snr_db", "must be finite".into()));
        }
        if l.noise_power.iter().any(|n| !(n.is_finite() && *n > 0.0)) {
            return Err((Some("link"), "noise_power", "values must be positive".into()));
        }
        if !(l.loading.is_finite() && l.loading > 0.0) {
            return Err((Some("link"), "loading", "must be positive".into()));
        }

        let a = &self.allocation;
        if c.source == ChannelSource::Synthetic && a.users == 0 {
            return Err((Some("allocation"), "users", "at least one user required".into()));
        }
        if l.noise_power.len() > 1 && c.source == ChannelSource::Synthetic && l.noise_power.len() != a.users {
            return Err((
                Some("allocation"),
                "users",
                format!("{} users but {} noise_power values", a.users, l.noise_power.len()),
            ));
        }
        ThresholdConfig::new(a.threshold, a.mode)
            .map_err(|e| (Some("allocation"), "threshold", e.to_string()))?;
        if let Some([d1, d2]) = a.demand {
            if !(0.0..=1.0).contains(&d1) || !(0.0..=1.0).contains(&d2) || d1 + d2 > 1.0 + 1e-12 {
                return Err((
                    Some("allocation"),
                    "demand",
                    "fractions must lie in [0, 1] and sum to at most 1".into(),
                ));
            }
        }

        if self.curve.random_trials == 0 {
            return Err((Some("curve"), "random_trials", "must be positive".into()));
        }
        if self.curve.seed_count == 0 {
            return Err((Some("curve"), "seed_count", "must be positive".into()));
        }
        if self.curve.strategies.is_empty() {
            return Err((Some("curve"), "strategies", "at least one strategy required".into()));
        }
        if self.oracle.max_n == 0 {
            return Err((Some("oracle"), "max_n", "must be positive".into()));
        }
        Ok(())
    }

    /// Existence checks for referenced files.
    pub fn check_files(&self) -> CliResult<()> {
        for (key, p) in [
            ("channel.trace_path", self.channel.trace_path.as_ref().filter(|_| self.channel.source == ChannelSource::Trace)),
            ("link.loading_file", self.link.loading_file.as_ref()),
        ] {
            if let Some(p) = p {
                if !p.is_file() {
                    return Err(CliError::Validation(format!("{key}: file {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> ResourceGrid {
        let g = &self.grid;
        ResourceGrid::new(g.subcarrier_count, g.subcarrier_spacing_hz, g.block_size, g.center_frequency_hz)
            .expect("validated grid")
    }

    pub fn model(&self) -> compadv::Result<MultipathModel> {
        let c = &self.channel;
        MultipathModel::new(c.tap_count, c.delay_spread_s, c.max_delay_s, c.rician_k)
    }

    pub fn threshold(&self) -> ThresholdConfig {
        ThresholdConfig::new(self.allocation.threshold, self.allocation.mode).expect("validated threshold")
    }

    /// Per-block loading for `blocks` blocks.
    pub fn loading(&self, blocks: usize) -> CliResult<PowerLoading> {
        match &self.link.loading_file {
            None => Ok(PowerLoading::flat(blocks, self.link.loading)?),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                let mut values = Vec::new();
                for (i, line) in text.lines().enumerate() {
                    let t = line.trim();
                    if t.is_empty() || t.starts_with('#') {
                        continue;
                    }
                    let v: f64 = t.parse().map_err(|_| {
                        CliError::Validation(format!("{}:{}: invalid loading value `{t}`", path.display(), i + 1))
                    })?;
                    values.push(v);
                }
                if values.len() != blocks {
                    return Err(CliError::Validation(format!(
                        "{}: {} loading values for {blocks} blocks",
                        path.display(),
                        values.len()
                    )));
                }
                Ok(PowerLoading::new(values)?)
            }
        }
    }

    /// Noise power of the `index`-th user (0-based).
    pub fn noise_power(&self, index: usize) -> f64 {
        match self.link.noise_power.as_slice() {
            [] => 10f64.powf(-self.link.snr_db / 10.0),
            [single] => *single,
            many => many[index],
        }
    }

    /// Short digest of everything that determines results.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let hash = Sha256::digest(canonical.to_toml().as_bytes());
        hex::encode(&hash[..8])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_grid() {
        let c = ScenarioConfig::default();
        assert_eq!(c.grid().block_count(), 125);
        assert_eq!(c.grid().subcarrier_spacing(), 60e3);
        assert_eq!(c.allocation.threshold, 1.1);
        assert_eq!(c.grid().center_frequency(), 3.75e9);
    }

    #[test]
    fn round_trip() {
        let mut c = ScenarioConfig::default();
        c.allocation.demand = Some([0.25, 0.5]);
        c.link.noise_power = vec![0.1, 0.2];
        c.curve.seed_count = 4;
        let text = c.to_toml();
        let back = ScenarioConfig::from_toml(&text, Path::new("x.toml")).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml(), text);
    }

    #[test]
    fn empty_file_is_default() {
        assert_eq!(ScenarioConfig::from_toml("", Path::new("e.toml")).unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn validation_messages_carry_line() {
        let src = "seed = 3\n\n[grid]\nsubcarrier_count = 100\nblock_size = 12\n";
        let err = ScenarioConfig::from_toml(src, Path::new("s.toml")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("s.toml:5: grid.block_size"), "{msg}");

        let src = "[allocation]\nthreshold = 0.5\n";
        let msg = ScenarioConfig::from_toml(src, Path::new("s.toml")).unwrap_err().to_string();
        assert!(msg.starts_with("s.toml:2: allocation.threshold"), "{msg}");
    }

    #[test]
    fn syntax_and_unknown_keys_rejected() {
        let err = ScenarioConfig::from_toml("[grid]\nbogus = 1\n", Path::new("s.toml")).unwrap_err();
        assert!(err.to_string().contains("bogus"));
        assert!(ScenarioConfig::from_toml("seed = \n", Path::new("s.toml")).is_err());
    }

    #[test]
    fn trace_source_needs_path() {
        let src = "[channel]\nsource = \"trace\"\n";
        assert!(ScenarioConfig::from_toml(src, Path::new("s.toml")).is_err());
    }

    #[test]
    fn digest_ignores_output_dir() {
        let a = ScenarioConfig::default();
        let mut b = a.clone();
        b.output_dir = PathBuf::from("elsewhere");
        assert_eq!(a.digest(), b.digest());
        b.seed = 99;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 16);
    }

    #[test]
    fn noise_from_snr() {
        let mut c = ScenarioConfig::default();
        c.link.snr_db = 10.0;
        assert!((c.noise_power(0) - 0.1).abs() < 1e-15);
        c.link.noise_power = vec![0.5];
        assert_eq!(c.noise_power(1), 0.5);
    }
}
