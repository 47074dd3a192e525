//! Experiment configuration: model/training/head/data settings, named
//! presets, and a sectioned `key = value` file format.
//!
//! The format is deliberately small: `[section]` headers, one `key = value`
//! per line, `#` starts a comment. Unknown sections or keys are errors, not
//! warnings — a typo that silently falls back to a default can waste a
//! multi-day run. Every key is optional and overrides the tiny preset (the
//! bundled-corpus scale), so a config file only needs to state what it
//! changes.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::heads::ZMode;
use crate::lstm::DropoutSpec;
use crate::model::NetworkArch;
use crate::noise::NoiseKind;
use crate::optim::{InitHeuristic, ScheduleConfig};

/// Which loss trains the output head. Evaluation always uses the exact
/// softmax regardless.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeadKind {
    Softmax,
    Nce,
}

/// Built-in starting points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Bundled-corpus scale; minutes on a laptop core.
    Tiny,
    Small,
    Medium,
    Large,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tiny" => Ok(Preset::Tiny),
            "small" => Ok(Preset::Small),
            "medium" => Ok(Preset::Medium),
            "large" => Ok(Preset::Large),
            other => Err(Error::Config(format!(
                "unknown preset {other:?} (expected tiny, small, medium, or large)"
            ))),
        }
    }
}

/// Everything a run needs beyond the corpus paths.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    // [model]
    pub hidden: usize,
    pub embed: usize,
    pub layers: usize,
    pub dropout: f64,
    pub init: InitHeuristic,
    // [training]
    pub epochs: usize,
    pub batch_size: usize,
    pub unroll: usize,
    pub eta0: f64,
    pub psi: f64,
    pub tau: u32,
    pub clip_norm: Option<f64>,
    pub seed: u64,
    // [head]
    pub head: HeadKind,
    pub z_mode: ZMode,
    pub noise_k: usize,
    pub noise_kind: NoiseKind,
    pub noise_shared: bool,
    // [data]
    pub max_vocab: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::preset(Preset::Tiny)
    }
}

impl ExperimentConfig {
    pub fn preset(p: Preset) -> Self {
        let base = ExperimentConfig {
            hidden: 64,
            embed: 64,
            layers: 2,
            dropout: 0.0,
            init: InitHeuristic::Glorot,
            epochs: 13,
            batch_size: 20,
            unroll: 20,
            eta0: 1.0,
            psi: 2.0,
            tau: 8,
            clip_norm: Some(5.0),
            seed: 1,
            head: HeadKind::Softmax,
            // The desk-scale budget is too short to spend epochs learning
            // the global score scale, so the tiny preset estimates it; the
            // full-scale presets pin Z = 1, which works at their budgets.
            z_mode: ZMode::Learned,
            noise_k: 50,
            noise_kind: NoiseKind::Zipf { s: 1.0 },
            noise_shared: true,
            max_vocab: Some(2000),
        };
        match p {
            Preset::Tiny => base,
            Preset::Small => ExperimentConfig {
                z_mode: ZMode::Constant,
                hidden: 200,
                embed: 200,
                init: InitHeuristic::Glorot,
                epochs: 20,
                tau: 7,
                psi: 2.0,
                clip_norm: None,
                noise_k: 600,
                max_vocab: None,
                ..base
            },
            Preset::Medium => ExperimentConfig {
                z_mode: ZMode::Constant,
                hidden: 650,
                embed: 650,
                dropout: 0.5,
                init: InitHeuristic::Glorot,
                epochs: 39,
                unroll: 35,
                psi: 1.2,
                tau: 25,
                clip_norm: Some(5.0),
                noise_k: 600,
                max_vocab: None,
                ..base
            },
            Preset::Large => ExperimentConfig {
                z_mode: ZMode::Constant,
                hidden: 1500,
                embed: 1500,
                dropout: 0.6,
                init: InitHeuristic::Glorot,
                epochs: 55,
                unroll: 35,
                psi: 1.15,
                tau: 12,
                clip_norm: Some(10.0),
                noise_k: 600,
                max_vocab: None,
                ..base
            },
        }
    }

    pub fn arch(&self, vocab: usize) -> NetworkArch {
        NetworkArch { vocab, embed: self.embed, hidden: self.hidden, layers: self.layers }
    }

    pub fn schedule(&self) -> Result<ScheduleConfig> {
        ScheduleConfig::new(self.eta0, self.psi, self.tau)
    }

    pub fn dropout_spec(&self) -> Result<DropoutSpec> {
        DropoutSpec::new(self.dropout)
    }

    /// Checks every field and returns human-readable warnings for settings
    /// that are legal but known to train badly.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.hidden == 0 || self.embed == 0 || self.layers == 0 {
            return Err(Error::Config("hidden, embed, and layers must be >= 1".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.unroll == 0 {
            return Err(Error::Config("epochs, batch_size, and unroll must be >= 1".into()));
        }
        self.schedule()?;
        self.dropout_spec()?;
        self.init.resolve(self.hidden, self.hidden)?;
        if let Some(c) = self.clip_norm {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::Config(format!("clip_norm must be positive, got {c}")));
            }
        }
        if self.head == HeadKind::Nce && self.noise_k == 0 {
            return Err(Error::Config("the contrastive head needs noise_k >= 1".into()));
        }
        match self.noise_kind {
            NoiseKind::Unigram { alpha } if !(alpha.is_finite() && alpha >= 0.0) => {
                return Err(Error::Config(format!("noise_alpha must be >= 0, got {alpha}")));
            }
            NoiseKind::Zipf { s } if !(s.is_finite() && s >= 0.0) => {
                return Err(Error::Config(format!("noise_s must be >= 0, got {s}")));
            }
            _ => {}
        }
        if let Some(m) = self.max_vocab {
            if m < 3 {
                return Err(Error::Config("max_vocab must be at least 3".into()));
            }
        }

        let mut warnings = Vec::new();
        let two_thirds = (2 * self.epochs).div_ceil(3);
        if self.head == HeadKind::Nce && (self.tau as usize) > two_thirds {
            warnings.push(format!(
                "tau = {} leaves fewer than a third of the {} epochs for decay; \
                 the contrastive head usually needs the plateau to end by epoch {two_thirds}",
                self.tau, self.epochs
            ));
        }
        Ok(warnings)
    }

    /// Renders the full configuration in the file format; `parse` of the
    /// output reproduces the config exactly.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[model]");
        let _ = writeln!(s, "hidden = {}", self.hidden);
        let _ = writeln!(s, "embed = {}", self.embed);
        let _ = writeln!(s, "layers = {}", self.layers);
        let _ = writeln!(s, "dropout = {}", self.dropout);
        match self.init {
            InitHeuristic::Glorot => {
                let _ = writeln!(s, "init = glorot");
            }
            InitHeuristic::GlorotQuarter => {
                let _ = writeln!(s, "init = glorot_quarter");
            }
            InitHeuristic::Explicit { lo, hi } => {
                let _ = writeln!(s, "init = explicit");
                let _ = writeln!(s, "init_lo = {lo}");
                let _ = writeln!(s, "init_hi = {hi}");
            }
            InitHeuristic::Gaussian { sigma } => {
                let _ = writeln!(s, "init = gaussian");
                let _ = writeln!(s, "init_sigma = {sigma}");
            }
        }
        let _ = writeln!(s, "\n[training]");
        let _ = writeln!(s, "epochs = {}", self.epochs);
        let _ = writeln!(s, "batch_size = {}", self.batch_size);
        let _ = writeln!(s, "unroll = {}", self.unroll);
        let _ = writeln!(s, "eta0 = {}", self.eta0);
        let _ = writeln!(s, "psi = {}", self.psi);
        let _ = writeln!(s, "tau = {}", self.tau);
        match self.clip_norm {
            Some(c) => {
                let _ = writeln!(s, "clip_norm = {c}");
            }
            None => {
                let _ = writeln!(s, "clip_norm = none");
            }
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "\n[head]");
        let _ = writeln!(s, "kind = {}", match self.head {
            HeadKind::Softmax => "softmax",
            HeadKind::Nce => "nce",
        });
        let _ = writeln!(s, "z_mode = {}", match self.z_mode {
            ZMode::Constant => "constant",
            ZMode::Learned => "learned",
        });
        let _ = writeln!(s, "noise_k = {}", self.noise_k);
        match self.noise_kind {
            NoiseKind::Uniform => {
                let _ = writeln!(s, "noise = uniform");
            }
            NoiseKind::Unigram { alpha } => {
                let _ = writeln!(s, "noise = unigram");
                let _ = writeln!(s, "noise_alpha = {alpha}");
            }
            NoiseKind::Zipf { s: exp } => {
                let _ = writeln!(s, "noise = zipf");
                let _ = writeln!(s, "noise_s = {exp}");
            }
        }
        let _ = writeln!(s, "noise_shared = {}", self.noise_shared);
        let _ = writeln!(s, "\n[data]");
        match self.max_vocab {
            Some(m) => {
                let _ = writeln!(s, "max_vocab = {m}");
            }
            None => {
                let _ = writeln!(s, "max_vocab = none");
            }
        }
        s
    }

    /// Parses the file format on top of the tiny-preset defaults.
    pub fn parse(text: &str) -> Result<Self> {
        Parser::new(text)?.assemble()
    }
}

/// Raw key/value collection plus the bookkeeping needed for good errors.
struct Parser {
    entries: Vec<(String, String, String, usize)>, // (section, key, value, line)
}

impl Parser {
    fn new(text: &str) -> Result<Self> {
        let mut section = String::new();
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| {
                    Error::Config(format!("line {line_no}: malformed section header {line:?}"))
                })?;
                section = name.trim().to_string();
                if !matches!(section.as_str(), "model" | "training" | "head" | "data") {
                    return Err(Error::Config(format!("line {line_no}: unknown section [{section}]")));
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {line_no}: expected 'key = value', got {line:?}"))
            })?;
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            if section.is_empty() {
                return Err(Error::Config(format!("line {line_no}: key {key:?} before any [section]")));
            }
            if value.is_empty() {
                return Err(Error::Config(format!("line {line_no}: key {key:?} has no value")));
            }
            if entries.iter().any(|(s, k, _, _)| *s == section && *k == key) {
                return Err(Error::Config(format!("line {line_no}: duplicate key {key:?} in [{section}]")));
            }
            entries.push((section.clone(), key, value, line_no));
        }
        Ok(Parser { entries })
    }

    fn take(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        let pos = self.entries.iter().position(|(s, k, _, _)| s == section && k == key)?;
        let (_, _, value, line) = self.entries.remove(pos);
        Some((value, line))
    }

    fn parse_as<T: std::str::FromStr>(&mut self, section: &str, key: &str, into: &mut T) -> Result<()> {
        if let Some((value, line)) = self.take(section, key) {
            *into = value.parse().map_err(|_| {
                Error::Config(format!("line {line}: cannot parse {key} value {value:?}"))
            })?;
        }
        Ok(())
    }

    fn assemble(mut self) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::default();
        self.parse_as("model", "hidden", &mut c.hidden)?;
        self.parse_as("model", "embed", &mut c.embed)?;
        self.parse_as("model", "layers", &mut c.layers)?;
        self.parse_as("model", "dropout", &mut c.dropout)?;
        self.assemble_init(&mut c)?;

        self.parse_as("training", "epochs", &mut c.epochs)?;
        self.parse_as("training", "batch_size", &mut c.batch_size)?;
        self.parse_as("training", "unroll", &mut c.unroll)?;
        self.parse_as("training", "eta0", &mut c.eta0)?;
        self.parse_as("training", "psi", &mut c.psi)?;
        self.parse_as("training", "tau", &mut c.tau)?;
        if let Some((value, line)) = self.take("training", "clip_norm") {
            c.clip_norm = if value == "none" {
                None
            } else {
                Some(value.parse().map_err(|_| {
                    Error::Config(format!("line {line}: cannot parse clip_norm value {value:?}"))
                })?)
            };
        }
        self.parse_as("training", "seed", &mut c.seed)?;

        if let Some((value, line)) = self.take("head", "kind") {
            c.head = match value.as_str() {
                "softmax" => HeadKind::Softmax,
                "nce" => HeadKind::Nce,
                other => {
                    return Err(Error::Config(format!(
                        "line {line}: head kind must be softmax or nce, got {other:?}"
                    )))
                }
            };
        }
        if let Some((value, line)) = self.take("head", "z_mode") {
            c.z_mode = match value.as_str() {
                "constant" => ZMode::Constant,
                "learned" => ZMode::Learned,
                other => {
                    return Err(Error::Config(format!(
                        "line {line}: z_mode must be constant or learned, got {other:?}"
                    )))
                }
            };
        }
        self.parse_as("head", "noise_k", &mut c.noise_k)?;
        self.assemble_noise(&mut c)?;
        self.parse_as("head", "noise_shared", &mut c.noise_shared)?;

        if let Some((value, line)) = self.take("data", "max_vocab") {
            c.max_vocab = if value == "none" {
                None
            } else {
                Some(value.parse().map_err(|_| {
                    Error::Config(format!("line {line}: cannot parse max_vocab value {value:?}"))
                })?)
            };
        }

        if let Some((section, key, _, line)) = self.entries.first() {
            return Err(Error::Config(format!("line {line}: unknown key {key:?} in [{section}]")));
        }
        Ok(c)
    }

    fn assemble_init(&mut self, c: &mut ExperimentConfig) -> Result<()> {
        let kind = self.take("model", "init");
        let lo = self.take("model", "init_lo");
        let hi = self.take("model", "init_hi");
        let sigma = self.take("model", "init_sigma");
        let parse_f = |pair: (String, usize), key: &str| -> Result<f64> {
            let (value, line) = pair;
            value
                .parse()
                .map_err(|_| Error::Config(format!("line {line}: cannot parse {key} value {value:?}")))
        };
        match kind {
            None => {
                if let Some((_, line)) = lo.or(hi).or(sigma) {
                    return Err(Error::Config(format!(
                        "line {line}: init parameters given without an init kind"
                    )));
                }
            }
            Some((value, line)) => {
                c.init = match value.as_str() {
                    "glorot" | "glorot_quarter" => {
                        if let Some((_, l)) = lo.or(hi).or(sigma) {
                            return Err(Error::Config(format!(
                                "line {l}: init = {value} takes no extra parameters"
                            )));
                        }
                        if value == "glorot" {
                            InitHeuristic::Glorot
                        } else {
                            InitHeuristic::GlorotQuarter
                        }
                    }
                    "explicit" => {
                        if let Some((_, l)) = sigma {
                            return Err(Error::Config(format!(
                                "line {l}: init_sigma does not apply to init = explicit"
                            )));
                        }
                        let lo = lo.ok_or_else(|| {
                            Error::Config(format!("line {line}: init = explicit needs init_lo"))
                        })?;
                        let hi = hi.ok_or_else(|| {
                            Error::Config(format!("line {line}: init = explicit needs init_hi"))
                        })?;
                        InitHeuristic::Explicit {
                            lo: parse_f(lo, "init_lo")?,
                            hi: parse_f(hi, "init_hi")?,
                        }
                    }
                    "gaussian" => {
                        if let Some((_, l)) = lo.or(hi) {
                            return Err(Error::Config(format!(
                                "line {l}: init_lo/init_hi do not apply to init = gaussian"
                            )));
                        }
                        let sigma = sigma.ok_or_else(|| {
                            Error::Config(format!("line {line}: init = gaussian needs init_sigma"))
                        })?;
                        InitHeuristic::Gaussian { sigma: parse_f(sigma, "init_sigma")? }
                    }
                    other => {
                        return Err(Error::Config(format!(
                            "line {line}: init must be glorot, glorot_quarter, explicit, or gaussian, got {other:?}"
                        )))
                    }
                };
            }
        }
        Ok(())
    }

    fn assemble_noise(&mut self, c: &mut ExperimentConfig) -> Result<()> {
        let kind = self.take("head", "noise");
        let alpha = self.take("head", "noise_alpha");
        let s_exp = self.take("head", "noise_s");
        let parse_f = |pair: (String, usize), key: &str| -> Result<f64> {
            let (value, line) = pair;
            value
                .parse()
                .map_err(|_| Error::Config(format!("line {line}: cannot parse {key} value {value:?}")))
        };
        match kind {
            None => {
                if let Some((_, line)) = alpha.or(s_exp) {
                    return Err(Error::Config(format!(
                        "line {line}: noise parameters given without a noise kind"
                    )));
                }
            }
            Some((value, line)) => {
                c.noise_kind = match value.as_str() {
                    "uniform" => {
                        if let Some((_, l)) = alpha.or(s_exp) {
                            return Err(Error::Config(format!(
                                "line {l}: noise = uniform takes no parameters"
                            )));
                        }
                        NoiseKind::Uniform
                    }
                    "unigram" => {
                        if let Some((_, l)) = s_exp {
                            return Err(Error::Config(format!(
                                "line {l}: noise_s does not apply to noise = unigram"
                            )));
                        }
                        let alpha = alpha.ok_or_else(|| {
                            Error::Config(format!("line {line}: noise = unigram needs noise_alpha"))
                        })?;
                        NoiseKind::Unigram { alpha: parse_f(alpha, "noise_alpha")? }
                    }
                    "zipf" => {
                        if let Some((_, l)) = alpha {
                            return Err(Error::Config(format!(
                                "line {l}: noise_alpha does not apply to noise = zipf"
                            )));
                        }
                        let s = s_exp.ok_or_else(|| {
                            Error::Config(format!("line {line}: noise = zipf needs noise_s"))
                        })?;
                        NoiseKind::Zipf { s: parse_f(s, "noise_s")? }
                    }
                    other => {
                        return Err(Error::Config(format!(
                            "line {line}: noise must be uniform, unigram, or zipf, got {other:?}"
                        )))
                    }
                };
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn large_preset_matches_published_settings() {
        let c = ExperimentConfig::preset(Preset::Large);
        assert_eq!(c.hidden, 1500);
        assert_eq!(c.dropout, 0.6);
        assert_eq!(c.tau, 12);
        assert_eq!(c.psi, 1.15);
        assert_eq!(c.epochs, 55);
        assert_eq!(c.clip_norm, Some(10.0));
        assert_eq!(c.noise_k, 600);
        assert_eq!(c.unroll, 35);
        assert_eq!(c.batch_size, 20);
        assert!(c.validate().unwrap().is_empty());
    }

    #[test]
    fn medium_and_small_presets() {
        let m = ExperimentConfig::preset(Preset::Medium);
        assert_eq!((m.hidden, m.dropout, m.epochs, m.unroll), (650, 0.5, 39, 35));
        assert_eq!((m.psi, m.tau, m.clip_norm), (1.2, 25, Some(5.0)));
        let s = ExperimentConfig::preset(Preset::Small);
        assert_eq!((s.hidden, s.dropout, s.epochs, s.unroll), (200, 0.0, 20, 20));
        assert_eq!((s.psi, s.tau, s.clip_norm), (2.0, 7, None));
        assert!(m.validate().unwrap().is_empty());
        assert!(s.validate().unwrap().is_empty());
    }

    #[test]
    fn round_trip_every_preset() {
        for p in [Preset::Tiny, Preset::Small, Preset::Medium, Preset::Large] {
            let c = ExperimentConfig::preset(p);
            let text = c.serialize();
            let back = ExperimentConfig::parse(&text).unwrap();
            assert_eq!(c, back, "round trip failed for {p:?}\n{text}");
        }
        let mut odd = ExperimentConfig::preset(Preset::Tiny);
        odd.head = HeadKind::Nce;
        odd.z_mode = ZMode::Learned;
        odd.noise_kind = NoiseKind::Unigram { alpha: 0.75 };
        odd.init = InitHeuristic::Gaussian { sigma: 0.01 };
        odd.clip_norm = None;
        odd.max_vocab = None;
        let back = ExperimentConfig::parse(&odd.serialize()).unwrap();
        assert_eq!(odd, back);
    }

    #[test]
    fn partial_file_overrides_defaults() {
        let c = ExperimentConfig::parse(
            "[head]\nkind = nce\nnoise = uniform\n\n[training]\ntau = 4 # short plateau\n",
        )
        .unwrap();
        assert_eq!(c.head, HeadKind::Nce);
        assert_eq!(c.noise_kind, NoiseKind::Uniform);
        assert_eq!(c.tau, 4);
        assert_eq!(c.hidden, ExperimentConfig::default().hidden);
    }

    #[test]
    fn unknown_keys_and_sections_rejected() {
        let err = ExperimentConfig::parse("[model]\nhiden = 4\n").unwrap_err();
        assert!(err.to_string().contains("hiden"), "{err}");
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(ExperimentConfig::parse("[nope]\nx = 1\n").is_err());
        assert!(ExperimentConfig::parse("x = 1\n").is_err());
        assert!(ExperimentConfig::parse("[model]\nhidden = 4\nhidden = 5\n").is_err());
        assert!(ExperimentConfig::parse("[model]\nhidden\n").is_err());
    }

    #[test]
    fn init_and_noise_key_consistency() {
        assert!(ExperimentConfig::parse("[model]\ninit = glorot\n").is_ok());
        assert!(ExperimentConfig::parse("[model]\ninit = glorot\ninit_lo = -1\n").is_err());
        assert!(ExperimentConfig::parse("[model]\ninit = explicit\ninit_lo = -1\n").is_err());
        assert!(ExperimentConfig::parse("[model]\ninit_lo = -1\n").is_err());
        assert!(ExperimentConfig::parse(
            "[model]\ninit = explicit\ninit_lo = -0.1\ninit_hi = 0.1\n"
        )
        .is_ok());
        assert!(ExperimentConfig::parse("[head]\nnoise = zipf\n").is_err());
        assert!(ExperimentConfig::parse("[head]\nnoise = zipf\nnoise_s = 1.0\n").is_ok());
        assert!(ExperimentConfig::parse("[head]\nnoise_alpha = 1.0\n").is_err());
    }

    #[test]
    fn tau_warning_for_contrastive_head() {
        let mut c = ExperimentConfig::preset(Preset::Tiny);
        c.head = HeadKind::Nce;
        c.epochs = 12;
        c.tau = 10; // two-thirds of 12 is 8
        let warnings = c.validate().unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("tau"), "{warnings:?}");
        c.tau = 8;
        assert!(c.validate().unwrap().is_empty());
        // The softmax head does not emit this warning.
        c.head = HeadKind::Softmax;
        c.tau = 10;
        assert!(c.validate().unwrap().is_empty());
    }

    #[test]
    fn validation_errors() {
        let c = ExperimentConfig { dropout: 1.0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = ExperimentConfig { psi: 0.5, ..Default::default() };
        assert!(c.validate().is_err());
        let c = ExperimentConfig { clip_norm: Some(-1.0), ..Default::default() };
        assert!(c.validate().is_err());
        let c = ExperimentConfig { max_vocab: Some(2), ..Default::default() };
        assert!(c.validate().is_err());
        let c = ExperimentConfig { head: HeadKind::Nce, noise_k: 0, ..Default::default() };
        assert!(c.validate().is_err());
    }
}
