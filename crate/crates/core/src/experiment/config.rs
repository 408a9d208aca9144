//! Flat `key = value` experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::parse_seed;
use crate::windows::WindowKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    FigureSingvals,
    FigureTrace,
    FigureErasure,
    BaselineIid,
    Verify,
    Spectrum,
    Reconstruct,
}

impl Subcommand {
    pub const ALL: [Subcommand; 7] = [
        Subcommand::FigureSingvals,
        Subcommand::FigureTrace,
        Subcommand::FigureErasure,
        Subcommand::BaselineIid,
        Subcommand::Verify,
        Subcommand::Spectrum,
        Subcommand::Reconstruct,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::FigureSingvals => "figure-singvals",
            Subcommand::FigureTrace => "figure-trace",
            Subcommand::FigureErasure => "figure-erasure",
            Subcommand::BaselineIid => "baseline-iid",
            Subcommand::Verify => "verify",
            Subcommand::Spectrum => "spectrum",
            Subcommand::Reconstruct => "reconstruct",
        }
    }

    /// Stream tag keeping the random draws of different subcommands apart.
    pub(crate) fn tag(self) -> u64 {
        Subcommand::ALL.iter().position(|s| *s == self).unwrap() as u64 + 1
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| Error::invalid(format!("unknown subcommand {s:?}")))
    }
}

/// How the inclusion probability of a random `Λ` depends on `M` and `C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauRule {
    /// `τ = C/M`.
    COverM,
    /// `τ = C ln M / M^{(m−1)/m}`.
    LogRule,
    Fixed(f64),
}

impl TauRule {
    pub fn tau(self, modulus: usize, c: f64, m: u32) -> f64 {
        let mf = modulus as f64;
        match self {
            TauRule::COverM => c / mf,
            TauRule::LogRule => c * mf.ln() / mf.powf((m as f64 - 1.0) / m as f64),
            TauRule::Fixed(t) => t,
        }
    }
}

impl fmt::Display for TauRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TauRule::COverM => f.write_str("C/M"),
            TauRule::LogRule => f.write_str("ClogM/M^((m-1)/m)"),
            TauRule::Fixed(t) => write!(f, "{t}"),
        }
    }
}

impl FromStr for TauRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        match compact.as_str() {
            "C/M" | "c/m" => Ok(TauRule::COverM),
            "ClogM/M^((m-1)/m)" | "C*logM/M^((m-1)/m)" | "log" => Ok(TauRule::LogRule),
            other => parse_real(other).map(TauRule::Fixed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaMode {
    Bernoulli,
    Product,
    Full,
    Explicit,
}

impl LambdaMode {
    pub fn name(self) -> &'static str {
        match self {
            LambdaMode::Bernoulli => "bernoulli",
            LambdaMode::Product => "product",
            LambdaMode::Full => "full",
            LambdaMode::Explicit => "explicit",
        }
    }
}

impl FromStr for LambdaMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bernoulli" | "random" => Ok(LambdaMode::Bernoulli),
            "product" => Ok(LambdaMode::Product),
            "full" | "full-grid" => Ok(LambdaMode::Full),
            "explicit" | "file" => Ok(LambdaMode::Explicit),
            other => Err(Error::invalid(format!("unknown lambda mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEstimator {
    MonteCarlo,
    Exact,
}

impl FromStr for TraceEstimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "mc" | "monte_carlo" => Ok(TraceEstimator::MonteCarlo),
            "exact" | "combinatorial" => Ok(TraceEstimator::Exact),
            other => Err(Error::invalid(format!("unknown trace method {other:?}"))),
        }
    }
}

impl fmt::Display for TraceEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceEstimator::MonteCarlo => "mc",
            TraceEstimator::Exact => "exact",
        })
    }
}

/// Experiment parameters. Optional fields fall back to subcommand-specific
/// defaults; see the `effective_*` accessors.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub subcommand: Option<Subcommand>,
    pub m_grid: Vec<usize>,
    pub window: Option<WindowKind>,
    pub lambda_mode: Option<LambdaMode>,
    pub tau_rule: TauRule,
    pub c_grid: Option<Vec<f64>>,
    pub f_size: usize,
    pub frame_set_file: Option<PathBuf>,
    pub m: u32,
    pub delta: f64,
    /// Fourier-bias constant for the frame-set level reported next to the
    /// trace experiment.
    pub c_prime: f64,
    pub eps: f64,
    pub p: f64,
    pub trials: usize,
    pub restarts: usize,
    pub n_factors: Vec<usize>,
    pub trace_method: TraceEstimator,
    pub budget: f64,
    pub hist_bins: usize,
    pub hist_max: f64,
    pub noise: f64,
    pub fault_eigen_tolerance: Option<f64>,
    pub seed: u64,
    pub threads: usize,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            subcommand: None,
            m_grid: vec![32, 48, 64, 96, 128],
            window: None,
            lambda_mode: None,
            tau_rule: TauRule::COverM,
            c_grid: None,
            f_size: 8,
            frame_set_file: None,
            m: 4,
            delta: 0.5,
            c_prime: 12.0,
            eps: 0.1,
            p: 1.0 / 3.0,
            trials: 200,
            restarts: 4,
            n_factors: vec![2, 4, 8],
            trace_method: TraceEstimator::MonteCarlo,
            budget: 1e9,
            hist_bins: 40,
            hist_max: 4.0,
            noise: 0.0,
            fault_eigen_tolerance: None,
            seed: 0,
            threads: 0,
            out: PathBuf::from("out"),
        }
    }
}

fn parse_real(text: &str) -> Result<f64> {
    let t = text.trim();
    let value = if let Some((a, b)) = t.split_once('/') {
        let num: f64 = a.trim().parse().map_err(|_| Error::invalid(format!("cannot parse number {text:?}")))?;
        let den: f64 = b.trim().parse().map_err(|_| Error::invalid(format!("cannot parse number {text:?}")))?;
        num / den
    } else {
        t.parse().map_err(|_| Error::invalid(format!("cannot parse number {text:?}")))?
    };
    if !value.is_finite() {
        return Err(Error::invalid(format!("number must be finite, got {text:?}")));
    }
    Ok(value)
}

fn parse_uint<T: FromStr>(key: &str, text: &str) -> Result<T> {
    text.trim().parse().map_err(|_| Error::invalid(format!("{key}: cannot parse {text:?} as a nonnegative integer")))
}

fn parse_list<T>(text: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    text.split(',').filter(|s| !s.trim().is_empty()).map(item).collect()
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

const KEYS: &[&str] = &[
    "subcommand",
    "m_grid",
    "window",
    "lambda_mode",
    "tau_rule",
    "c",
    "f_size",
    "frame_set",
    "m",
    "delta",
    "c_prime",
    "eps",
    "p",
    "trials",
    "restarts",
    "n_factors",
    "trace_method",
    "budget",
    "hist_bins",
    "hist_max",
    "noise",
    "fault_eigen_tolerance",
    "seed",
    "threads",
    "out",
];

impl ExperimentConfig {
    /// Sets one key; the same path serves the config file and CLI overrides.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "subcommand" => self.subcommand = Some(v.parse()?),
            "m_grid" | "M" => self.m_grid = parse_list(v, |s| parse_uint("m_grid", s))?,
            "window" => self.window = Some(v.parse()?),
            "lambda_mode" | "lambda" => self.lambda_mode = Some(v.parse()?),
            "tau_rule" | "tau" => self.tau_rule = v.parse()?,
            "c" | "C" | "c_grid" => self.c_grid = Some(parse_list(v, parse_real)?),
            "f_size" => self.f_size = parse_uint(&key, v)?,
            "frame_set" => self.frame_set_file = Some(PathBuf::from(v)),
            "m" => self.m = parse_uint(&key, v)?,
            "delta" => self.delta = parse_real(v)?,
            "c_prime" => self.c_prime = parse_real(v)?,
            "eps" | "epsilon" => self.eps = parse_real(v)?,
            "p" => self.p = parse_real(v)?,
            "trials" => self.trials = parse_uint(&key, v)?,
            "restarts" => self.restarts = parse_uint(&key, v)?,
            "n_factors" => self.n_factors = parse_list(v, |s| parse_uint("n_factors", s))?,
            "trace_method" => self.trace_method = v.parse()?,
            "budget" => self.budget = parse_real(v)?,
            "hist_bins" => self.hist_bins = parse_uint(&key, v)?,
            "hist_max" => self.hist_max = parse_real(v)?,
            "noise" => self.noise = parse_real(v)?,
            "fault_eigen_tolerance" => self.fault_eigen_tolerance = Some(parse_real(v)?),
            "seed" => self.seed = parse_seed(v)?,
            "threads" => self.threads = parse_uint(&key, v)?,
            "out" => self.out = PathBuf::from(v),
            other => {
                return Err(Error::invalid(format!("unknown config key {other:?}; known keys: {}", KEYS.join(", "))))
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("line {}: expected key=value, got {raw:?}", lineno + 1)))?;
            cfg.apply(key, value).map_err(|e| Error::invalid(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn entries(&self, with_runtime: bool) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if let Some(s) = self.subcommand {
            out.push(("subcommand", s.to_string()));
        }
        out.push(("m_grid", join(&self.m_grid)));
        if let Some(w) = &self.window {
            out.push(("window", w.name().to_string()));
        }
        if let Some(l) = self.lambda_mode {
            out.push(("lambda_mode", l.name().to_string()));
        }
        out.push(("tau_rule", self.tau_rule.to_string()));
        if let Some(c) = &self.c_grid {
            out.push(("c", join(c)));
        }
        out.push(("f_size", self.f_size.to_string()));
        if let Some(f) = &self.frame_set_file {
            out.push(("frame_set", f.display().to_string()));
        }
        out.push(("m", self.m.to_string()));
        out.push(("delta", self.delta.to_string()));
        out.push(("c_prime", self.c_prime.to_string()));
        out.push(("eps", self.eps.to_string()));
        out.push(("p", self.p.to_string()));
        out.push(("trials", self.trials.to_string()));
        out.push(("restarts", self.restarts.to_string()));
        out.push(("n_factors", join(&self.n_factors)));
        out.push(("trace_method", self.trace_method.to_string()));
        out.push(("budget", self.budget.to_string()));
        out.push(("hist_bins", self.hist_bins.to_string()));
        out.push(("hist_max", self.hist_max.to_string()));
        out.push(("noise", self.noise.to_string()));
        if let Some(t) = self.fault_eigen_tolerance {
            out.push(("fault_eigen_tolerance", t.to_string()));
        }
        out.push(("seed", self.seed.to_string()));
        if with_runtime {
            out.push(("threads", self.threads.to_string()));
            out.push(("out", self.out.display().to_string()));
        }
        out
    }

    /// The config in file format; parsing it back gives an equal config.
    pub fn to_text(&self) -> String {
        self.entries(true).into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// Hash of every setting that can influence results. Thread count and
    /// output directory are left out.
    pub fn config_hash(&self) -> String {
        let canonical: String = self.entries(false).into_iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn effective_window(&self) -> WindowKind {
        match (&self.window, self.subcommand) {
            (Some(w), _) => w.clone(),
            (None, Some(Subcommand::FigureErasure)) => WindowKind::UniformSphere,
            (None, _) => WindowKind::Steinhaus,
        }
    }

    pub fn effective_c_grid(&self) -> Vec<f64> {
        match (&self.c_grid, self.subcommand) {
            (Some(c), _) => c.clone(),
            (None, Some(Subcommand::FigureTrace)) => vec![2.0, 4.0, 8.0, 16.0],
            (None, _) => vec![4.0],
        }
    }

    pub fn effective_lambda_mode(&self) -> LambdaMode {
        self.lambda_mode.unwrap_or(if self.frame_set_file.is_some() {
            LambdaMode::Explicit
        } else {
            LambdaMode::Bernoulli
        })
    }

    /// Range checks for the configured subcommand, run before any work.
    pub fn validate(&self) -> Result<()> {
        let sub = self.subcommand.ok_or_else(|| Error::invalid("no subcommand given"))?;
        let fail = |msg: String| Err(Error::invalid(msg));
        if self.m_grid.is_empty() {
            return fail("m_grid is empty".into());
        }
        if let Some(&bad) = self.m_grid.iter().find(|&&m| !(2..=4096).contains(&m)) {
            return fail(format!("every M must lie in [2, 4096], got {bad}"));
        }
        if self.trials < 2 {
            return fail(format!("trials must be at least 2, got {}", self.trials));
        }
        if self.restarts < 1 {
            return fail("restarts must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.p) {
            return fail(format!("p must lie in [0, 1), got {}", self.p));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return fail(format!("eps must lie in (0, 1), got {}", self.eps));
        }
        if !(self.delta > 0.0) {
            return fail(format!("delta must be positive, got {}", self.delta));
        }
        if !(self.c_prime >= 4.0 * std::f64::consts::SQRT_2 - 1e-12) || !self.c_prime.is_finite() {
            return fail(format!("c_prime must be at least 4√2, got {}", self.c_prime));
        }
        if self.m < 1 || self.m > 12 {
            return fail(format!("m must lie in [1, 12], got {}", self.m));
        }
        if !(self.budget > 0.0) {
            return fail("budget must be positive".into());
        }
        if self.hist_bins == 0 || !(self.hist_max > 0.0) {
            return fail("histogram needs hist_bins >= 1 and hist_max > 0".into());
        }
        if !(self.noise >= 0.0) {
            return fail(format!("noise must be nonnegative, got {}", self.noise));
        }
        if let Some(t) = self.fault_eigen_tolerance {
            if !(t > 0.0) {
                return fail(format!("fault_eigen_tolerance must be positive, got {t}"));
            }
        }
        let c_grid = self.effective_c_grid();
        if c_grid.is_empty() || c_grid.iter().any(|c| !(*c > 0.0)) {
            return fail("C values must be positive".into());
        }
        let uses_random_lambda = match sub {
            Subcommand::FigureSingvals | Subcommand::FigureTrace => true,
            Subcommand::Spectrum | Subcommand::Reconstruct => self.effective_lambda_mode() == LambdaMode::Bernoulli,
            _ => false,
        };
        if uses_random_lambda {
            for &modulus in &self.m_grid {
                for &c in &c_grid {
                    let tau = self.tau_rule.tau(modulus, c, self.m);
                    if !(tau > 0.0 && tau < 1.0) {
                        return fail(format!("tau = {tau} for M={modulus}, C={c} is outside (0, 1)"));
                    }
                }
            }
        }
        let uses_f = matches!(sub, Subcommand::FigureSingvals | Subcommand::FigureErasure)
            || (matches!(sub, Subcommand::Spectrum | Subcommand::Reconstruct)
                && self.effective_lambda_mode() == LambdaMode::Product);
        if uses_f {
            if let Some(&bad) = self.m_grid.iter().find(|&&m| self.f_size == 0 || self.f_size > m) {
                return fail(format!("f_size must lie in [1, M], got {} with M={bad}", self.f_size));
            }
        }
        match sub {
            Subcommand::FigureTrace => {
                if !self.m.is_multiple_of(2) {
                    return fail(format!("figure-trace needs an even m, got {}", self.m));
                }
            }
            Subcommand::FigureErasure => {
                if self.effective_window() != WindowKind::UniformSphere {
                    return fail("figure-erasure uses the uniform-sphere window".into());
                }
            }
            Subcommand::BaselineIid => {
                if self.n_factors.is_empty() || self.n_factors.contains(&0) {
                    return fail("n_factors must be positive integers (N = factor·M >= M)".into());
                }
                for &modulus in &self.m_grid {
                    for &f in &self.n_factors {
                        if f > modulus {
                            return fail(format!("N = {f}·{modulus} exceeds M² for the Gabor comparison"));
                        }
                    }
                }
            }
            Subcommand::Spectrum | Subcommand::Reconstruct
                if self.effective_lambda_mode() == LambdaMode::Explicit && self.frame_set_file.is_none() =>
            {
                return fail("lambda_mode=explicit needs a frame_set file".into());
            }
            _ => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let text = "# desk run\nsubcommand = figure-trace\nm_grid=16, 32\nwindow = sphere\nc = 2,4.5\np = 1/3\nseed = 0x2A\ntau_rule = ClogM/M^((m-1)/m)\nfault_eigen_tolerance=0.5\n\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.subcommand, Some(Subcommand::FigureTrace));
        assert_eq!(cfg.m_grid, vec![16, 32]);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.c_grid, Some(vec![2.0, 4.5]));
        assert_eq!(cfg.p, 1.0 / 3.0);
        assert_eq!(cfg.tau_rule, TauRule::LogRule);
        let again = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(
            ExperimentConfig::parse(&ExperimentConfig::default().to_text()).unwrap(),
            ExperimentConfig::default()
        );
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(ExperimentConfig::parse("trials").is_err());
        assert!(ExperimentConfig::parse("bogus=1").is_err());
        assert!(ExperimentConfig::parse("trials=-3").is_err());
        assert!(ExperimentConfig::parse("seed=0xZZ").is_err());
        assert!(ExperimentConfig::parse("p=nan").is_err());
    }

    #[test]
    fn later_settings_win() {
        let mut cfg = ExperimentConfig::parse("seed=5\ntrials=10").unwrap();
        cfg.apply("seed", "7").unwrap();
        cfg.apply("trials", "12").unwrap();
        assert_eq!((cfg.seed, cfg.trials), (7, 12));
    }

    #[test]
    fn hash_ignores_threads_and_out() {
        let mut a = ExperimentConfig::default();
        let h = a.config_hash();
        assert_eq!(h.len(), 16);
        a.threads = 8;
        a.out = PathBuf::from("/elsewhere");
        assert_eq!(a.config_hash(), h);
        a.seed = 1;
        assert_ne!(a.config_hash(), h);
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_err());
        cfg.subcommand = Some(Subcommand::FigureSingvals);
        cfg.validate().unwrap();
        cfg.trials = 1;
        assert!(cfg.validate().is_err());
        cfg.trials = 10;
        cfg.c_grid = Some(vec![40.0]);
        assert!(cfg.validate().is_err(), "C/M > 1 at M=32");
        cfg.c_grid = None;
        cfg.subcommand = Some(Subcommand::FigureTrace);
        cfg.m = 3;
        assert!(cfg.validate().is_err());
        cfg.m = 2;
        cfg.validate().unwrap();
        cfg.subcommand = Some(Subcommand::FigureErasure);
        cfg.validate().unwrap();
        assert_eq!(cfg.effective_window(), WindowKind::UniformSphere);
        cfg.window = Some(WindowKind::Steinhaus);
        assert!(cfg.validate().is_err());
        cfg.window = None;
        cfg.subcommand = Some(Subcommand::BaselineIid);
        cfg.n_factors = vec![0];
        assert!(cfg.validate().is_err());
        cfg.n_factors = vec![2];
        cfg.validate().unwrap();
        cfg.m_grid = vec![1];
        assert!(cfg.validate().is_err());
    }
}
