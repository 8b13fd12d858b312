//! `key=value` run configuration.

use std::fmt::{self, Write as _};

use qident_core::analysis::BudgetParams;
use qident_core::auth::{is_prime, M61};
use qident_core::channel::{ChannelParams, EveStrategy};
use qident_core::estimation::EstimationParams;
use qident_core::protocol2::{EpsLimMode, Protocol2Params};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("`{field}` out of range: {msg}")]
    Range { field: &'static str, msg: String },
}

fn range(field: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Range {
        field,
        msg: msg.into(),
    }
}

/// Inclusive arithmetic grid `lo:hi:step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}:{:?}:{:?}", self.lo, self.hi, self.step)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mu: f64,
    pub eta_tl: f64,
    pub eta_bob: f64,
    pub eta_det: f64,
    /// Quoted overall transmissivity; `None` multiplies the three factors.
    pub eta: Option<f64>,
    pub eps: f64,
    pub eps_max: f64,
    pub delta: f64,
    pub s: usize,
    pub a: u64,
    pub seed: u64,
    pub n_pulses: usize,
    pub trials: usize,
    pub eve: EveStrategy,
    pub eps_lim_mode: EpsLimMode,
    /// Initial shared pool for protocol2; 0 sizes it so every trial can run.
    pub pool_bits: usize,
    pub n_is: usize,
    pub eps_tol: f64,
    pub chan_flip: f64,
    pub impostor: bool,
    pub p_bar: f64,
    pub eps_grid: Grid,
    pub s_list: Vec<usize>,
    pub n_list: Vec<f64>,
    pub mu_list: Vec<f64>,
    pub eta_tl_list: Vec<f64>,
    pub auth_p: u64,
    pub auth_d: usize,
    pub msg_max: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mu: 0.8,
            eta_tl: 0.63,
            eta_bob: 0.35,
            eta_det: 0.55,
            eta: Some(0.12),
            eps: 0.004,
            eps_max: 0.07,
            delta: 1e-10,
            s: 1000,
            a: 61,
            seed: 0,
            n_pulses: 6_250_000,
            trials: 1,
            eve: EveStrategy::None,
            eps_lim_mode: EpsLimMode::Realized,
            pool_bits: 0,
            n_is: 50,
            eps_tol: 0.01,
            chan_flip: 0.0,
            impostor: false,
            p_bar: 0.6,
            eps_grid: Grid {
                lo: 0.0,
                hi: 0.15,
                step: 0.005,
            },
            s_list: Vec::new(),
            n_list: Vec::new(),
            mu_list: Vec::new(),
            eta_tl_list: vec![0.63, 0.5, 0.4, 0.3],
            auth_p: M61,
            auth_d: 739,
            msg_max: 45_017,
        }
    }
}

fn parse_list<T: std::str::FromStr>(v: &str) -> Option<Vec<T>> {
    if v.is_empty() {
        return Some(Vec::new());
    }
    v.split(',').map(|x| x.trim().parse().ok()).collect()
}

fn list<T: fmt::Debug>(v: &[T]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

fn parse_eve(v: &str) -> Option<EveStrategy> {
    let (name, arg) = match v.split_once(':') {
        Some((n, a)) => (n, Some(a.parse::<f64>().ok()?)),
        None => (v, None),
    };
    Some(match (name, arg) {
        ("none", None) => EveStrategy::None,
        ("intercept_resend", Some(fraction)) => EveStrategy::InterceptResend { fraction },
        ("beamsplit", Some(tap)) => EveStrategy::Beamsplit { tap },
        ("per_bit", Some(p_bar)) => EveStrategy::PerBitGuess { p_bar },
        _ => return None,
    })
}

fn eve_text(e: &EveStrategy) -> String {
    match e {
        EveStrategy::None => "none".into(),
        EveStrategy::InterceptResend { fraction } => format!("intercept_resend:{fraction:?}"),
        EveStrategy::Beamsplit { tap } => format!("beamsplit:{tap:?}"),
        EveStrategy::PerBitGuess { p_bar } => format!("per_bit:{p_bar:?}"),
    }
}

impl RunConfig {
    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("cannot parse `{v}`"))
        }
        let bad = || format!("cannot parse `{v}`");
        match key {
            "mu" => self.mu = num(v)?,
            "eta_tl" => self.eta_tl = num(v)?,
            "eta_bob" => self.eta_bob = num(v)?,
            "eta_det" => self.eta_det = num(v)?,
            "eta" => self.eta = if v == "product" { None } else { Some(num(v)?) },
            "eps" => self.eps = num(v)?,
            "eps_max" => self.eps_max = num(v)?,
            "delta" => self.delta = num(v)?,
            "s" => self.s = num(v)?,
            "a" => self.a = num(v)?,
            "seed" => self.seed = num(v)?,
            "n_pulses" => {
                // Accept `6.25e6` as well as plain integers.
                let x: f64 = num(v)?;
                if x.fract() != 0.0 || !(0.0..=u32::MAX as f64).contains(&x) {
                    return Err(format!("`{v}` is not a pulse count"));
                }
                self.n_pulses = x as usize;
            }
            "trials" => self.trials = num(v)?,
            "eve" => self.eve = parse_eve(v).ok_or_else(bad)?,
            "eps_lim_mode" => {
                self.eps_lim_mode = match v {
                    "realized" => EpsLimMode::Realized,
                    "nominal" => EpsLimMode::Nominal,
                    _ => return Err(bad()),
                }
            }
            "pool_bits" => self.pool_bits = num(v)?,
            "n_is" => self.n_is = num(v)?,
            "eps_tol" => self.eps_tol = num(v)?,
            "chan_flip" => self.chan_flip = num(v)?,
            "impostor" => self.impostor = num(v)?,
            "p_bar" => self.p_bar = num(v)?,
            "eps_grid" => {
                let parts = parse_list::<f64>(&v.replace(':', ",")).ok_or_else(bad)?;
                let [lo, hi, step] = parts[..] else { return Err(bad()) };
                self.eps_grid = Grid { lo, hi, step };
            }
            "s_list" => self.s_list = parse_list(v).ok_or_else(bad)?,
            "n_list" => self.n_list = parse_list(v).ok_or_else(bad)?,
            "mu_list" => self.mu_list = parse_list(v).ok_or_else(bad)?,
            "eta_tl_list" => self.eta_tl_list = parse_list(v).ok_or_else(bad)?,
            "auth_p" => self.auth_p = num(v)?,
            "auth_d" => self.auth_d = num(v)?,
            "msg_max" => self.msg_max = num(v)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Canonical text form; parses back to an equal config.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("mu", format!("{:?}", self.mu));
        kv("eta_tl", format!("{:?}", self.eta_tl));
        kv("eta_bob", format!("{:?}", self.eta_bob));
        kv("eta_det", format!("{:?}", self.eta_det));
        kv("eta", self.eta.map_or("product".into(), |e| format!("{e:?}")));
        kv("eps", format!("{:?}", self.eps));
        kv("eps_max", format!("{:?}", self.eps_max));
        kv("delta", format!("{:?}", self.delta));
        kv("s", self.s.to_string());
        kv("a", self.a.to_string());
        kv("seed", self.seed.to_string());
        kv("n_pulses", self.n_pulses.to_string());
        kv("trials", self.trials.to_string());
        kv("eve", eve_text(&self.eve));
        kv(
            "eps_lim_mode",
            match self.eps_lim_mode {
                EpsLimMode::Realized => "realized",
                EpsLimMode::Nominal => "nominal",
            }
            .into(),
        );
        kv("pool_bits", self.pool_bits.to_string());
        kv("n_is", self.n_is.to_string());
        kv("eps_tol", format!("{:?}", self.eps_tol));
        kv("chan_flip", format!("{:?}", self.chan_flip));
        kv("impostor", self.impostor.to_string());
        kv("p_bar", format!("{:?}", self.p_bar));
        kv("eps_grid", self.eps_grid.to_string());
        kv("s_list", list(&self.s_list));
        kv("n_list", list(&self.n_list));
        kv("mu_list", list(&self.mu_list));
        kv("eta_tl_list", list(&self.eta_tl_list));
        kv("auth_p", self.auth_p.to_string());
        kv("auth_d", self.auth_d.to_string());
        kv("msg_max", self.msg_max.to_string());
        out
    }

    /// First 16 hex digits of the SHA-256 of [`serialize`](Self::serialize).
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.serialize().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let unit_open = |field, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(range(field, format!("{v} not in (0, 1]")))
            }
        };
        if !(self.mu > 0.0 && self.mu <= 1.5) {
            return Err(range("mu", format!("{} not in (0, 1.5]", self.mu)));
        }
        unit_open("eta_tl", self.eta_tl)?;
        unit_open("eta_bob", self.eta_bob)?;
        unit_open("eta_det", self.eta_det)?;
        if let Some(e) = self.eta {
            unit_open("eta", e)?;
        }
        if !(0.0..1.0).contains(&self.eps) {
            return Err(range("eps", format!("{} not in [0, 1)", self.eps)));
        }
        if !(self.eps_max > 0.0 && self.eps_max < 1.0) {
            return Err(range("eps_max", format!("{} not in (0, 1)", self.eps_max)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(range("delta", format!("{} not in (0, 1)", self.delta)));
        }
        if self.s == 0 || 2 * self.s >= 1 << 15 {
            return Err(range("s", format!("{} not in [1, 16383]", self.s)));
        }
        if (self.a as f64) < (1.0 / self.delta).log2() {
            return Err(range("a", format!("{} tag bits cannot reach delta {}", self.a, self.delta)));
        }
        if self.n_pulses < 2 {
            return Err(range("n_pulses", "need at least 2 pulses"));
        }
        if self.trials == 0 {
            return Err(range("trials", "must be at least 1"));
        }
        self.eve.validate().map_err(|e| range("eve", e.to_string()))?;
        if self.n_is < 2 {
            return Err(range("n_is", "must be at least 2"));
        }
        if !(0.0..1.0).contains(&self.eps_tol) || (self.eps_tol * self.n_is as f64).floor() as usize + 1 >= self.n_is {
            return Err(range("eps_tol", format!("{} leaves no room below n_is", self.eps_tol)));
        }
        if !(0.0..=1.0).contains(&self.chan_flip) {
            return Err(range("chan_flip", format!("{} not in [0, 1]", self.chan_flip)));
        }
        if !(0.5..=1.0).contains(&self.p_bar) {
            return Err(range("p_bar", format!("{} not in [0.5, 1]", self.p_bar)));
        }
        let g = self.eps_grid;
        if !(g.lo >= 0.0 && g.hi < 0.5 && g.lo <= g.hi && g.step > 0.0) {
            return Err(range("eps_grid", format!("{g} must satisfy 0 <= lo <= hi < 0.5, step > 0")));
        }
        if self.s_list.iter().any(|&s| s == 0) {
            return Err(range("s_list", "sizes must be positive"));
        }
        if self.n_list.iter().any(|&n| !(n >= 2.0 && n.is_finite())) {
            return Err(range("n_list", "pulse counts must be at least 2"));
        }
        if self.mu_list.iter().any(|&m| !(m > 0.0 && m <= 1.5)) {
            return Err(range("mu_list", "values must be in (0, 1.5]"));
        }
        if self.eta_tl_list.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return Err(range("eta_tl_list", "values must be in (0, 1]"));
        }
        if !is_prime(self.auth_p) || self.auth_p > M61 {
            return Err(range("auth_p", format!("{} is not a prime up to 2^61 - 1", self.auth_p)));
        }
        if self.auth_d < 2 {
            return Err(range("auth_d", "must be at least 2"));
        }
        Ok(())
    }

    pub fn channel(&self) -> ChannelParams {
        ChannelParams {
            mu: self.mu,
            eta_tl: self.eta_tl,
            eta_bob: self.eta_bob,
            eta_det: self.eta_det,
            eta_overall: self.eta,
            eps_intrinsic: self.eps,
        }
    }

    pub fn estimation(&self) -> EstimationParams {
        EstimationParams {
            s: self.s,
            eps_max: self.eps_max,
            delta: self.delta,
        }
    }

    pub fn budget(&self) -> BudgetParams {
        BudgetParams {
            mu: self.mu,
            eta_tl: self.eta_tl,
            eta_bob: self.eta_bob,
            eta_det: self.eta_det,
            eta_overall: self.eta,
            eps: self.eps,
            eps_max: self.eps_max,
            delta: self.delta,
            s: self.s as u64,
            a: self.a,
            n_pulses: self.n_pulses as f64,
        }
    }

    pub fn protocol2(&self) -> Protocol2Params {
        Protocol2Params {
            channel: self.channel(),
            estimation: self.estimation(),
            auth_prime: self.auth_p,
            eps_lim_mode: self.eps_lim_mode,
        }
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut seen = std::collections::HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(ConfigError::Parse {
                line,
                msg: format!("expected key=value, found `{body}`"),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        if !seen.insert(k.to_string()) {
            return Err(ConfigError::Parse {
                line,
                msg: format!("duplicate key `{k}`"),
            });
        }
        cfg.set(k, v).map_err(|msg| ConfigError::Parse { line, msg })?;
    }
    cfg.validate()?;
    Ok(cfg)
}
