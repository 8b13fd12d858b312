use std::fmt::Write as _;
use std::path::PathBuf;

use qident_core::analysis::{
    b_min, break_even_n, deception_probability_bound, distilled_breakdown, info_ab, info_limit, info_opt,
    mu_grid, optimize_mu, p_bar_from_info, p_crit, tolerance, MuMode,
};
use qident_core::auth::vectors::{generate, parse_file};
use qident_core::auth::AuthParams;
use qident_core::channel::{eve_information_bits, run_raw_transmission, sift};
use qident_core::estimation::{solve_eps_lim, EstimationParams};
use qident_core::protocol1::{run_protocol1, NoisyLink, Party1State, Protocol1Config, Role};
use qident_core::protocol2::{run_protocol2, AdversaryScript, Party2, Protocol2Outcome};
use qident_core::{random_bitstring, RngSeed, SecretPool, Stream, Triad};

use crate::config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Core(#[from] qident_core::Error),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    SimulateQkd,
    Protocol1,
    Protocol2,
    Deception,
    Epslim,
    Budget,
    OptimizeMu,
    AuthTag,
    AuthVerify,
}

#[derive(Debug, Default, Clone)]
pub struct Extras {
    pub vectors: Option<PathBuf>,
    pub dump: Option<PathBuf>,
}

/// CSV text plus whether some protocol run ended in an abort.
pub struct Report {
    pub csv: String,
    pub aborted: bool,
}

struct Table {
    text: String,
}

impl Table {
    fn new(cfg: &RunConfig, header: &str) -> Self {
        Self {
            text: format!("# seed={} config_hash={}\n{header}\n", cfg.seed, cfg.hash()),
        }
    }

    fn row(&mut self, line: impl AsRef<str>) {
        self.text.push_str(line.as_ref());
        self.text.push('\n');
    }

    fn done(self, aborted: bool) -> Report {
        Report {
            csv: self.text,
            aborted,
        }
    }
}

fn write_file(path: &PathBuf, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Seed of the `i`-th run in a multi-trial command. Row `i` replays alone
/// with `seed=<printed seed>` and one trial.
fn run_seed(cfg: &RunConfig, i: usize) -> RngSeed {
    RngSeed(cfg.seed.wrapping_add(i as u64))
}

pub fn dispatch(cmd: Command, cfg: &RunConfig, extras: &Extras) -> Result<Report, CliError> {
    match cmd {
        Command::SimulateQkd => simulate_qkd(cfg, extras),
        Command::Protocol1 => protocol1(cfg),
        Command::Protocol2 => protocol2(cfg),
        Command::Deception => deception(cfg),
        Command::Epslim => epslim(cfg),
        Command::Budget => budget(cfg),
        Command::OptimizeMu => optimize(cfg),
        Command::AuthTag => auth_tag(cfg, extras),
        Command::AuthVerify => auth_verify(cfg, extras),
    }
}

fn simulate_qkd(cfg: &RunConfig, extras: &Extras) -> Result<Report, CliError> {
    let mut t = Table::new(cfg, "seed,n_pulses,detected,sifted,errors,error_rate,eve_info_bits");
    for i in 0..cfg.trials {
        let seed = run_seed(cfg, i);
        let raw = run_raw_transmission(&cfg.channel(), cfg.n_pulses, cfg.eve, seed)?;
        if i == 0 {
            if let Some(path) = &extras.dump {
                let mut buf = Vec::new();
                raw.write_csv(&mut buf).map_err(|e| CliError::Io(e.to_string()))?;
                write_file(path, &buf)?;
            }
        }
        let s = sift(&raw, &[]);
        let errors = s.alice.hamming_distance(&s.bob)?;
        t.row(format!(
            "{},{},{},{},{errors},{:.6},{:.1}",
            seed.0,
            cfg.n_pulses,
            raw.detected_count(),
            s.len(),
            s.error_rate(),
            eve_information_bits(&raw, cfg.eve)
        ));
    }
    Ok(t.done(false))
}

fn protocol1(cfg: &RunConfig) -> Result<Report, CliError> {
    let p1 = Protocol1Config::new(cfg.n_is, cfg.eps_tol)?;
    let seed = RngSeed(cfg.seed);
    let bits = random_bitstring(3 * cfg.n_is * cfg.trials, &mut seed.rng(Stream::Trials));
    let mut pool = SecretPool::new(bits);
    let triads: Vec<Triad> = (0..cfg.trials)
        .map(|_| Triad::from_pool(&mut pool, cfg.n_is))
        .collect::<Result<_, _>>()?;
    let mut alice = Party1State::new(Role::Alice, triads.clone());
    let mut bob = if cfg.impostor {
        let mut rng = seed.rng(Stream::Eve);
        let mut guess = || random_bitstring(cfg.n_is, &mut rng);
        let fake = (0..cfg.trials)
            .map(|_| Triad::new(guess(), guess(), guess()))
            .collect::<Result<_, _>>()?;
        Party1State::impostor(Role::Bob, fake)
    } else {
        Party1State::new(Role::Bob, triads)
    };
    let link = NoisyLink {
        flip_prob: cfg.chan_flip,
    };
    let mut rng = seed.rng(Stream::Link);
    let mut t = Table::new(cfg, "trial,pass,direction,payload_hex,verdict,outcome");
    let mut failures = 0;
    for trial in 0..cfg.trials {
        let r = run_protocol1(&mut alice, &mut bob, link, p1, &mut rng)?;
        failures += usize::from(!r.outcome.is_success());
        for row in &r.transcript {
            t.row(format!("{trial},{},{:?}", row.csv(), r.outcome));
        }
    }
    eprintln!("protocol1: {} of {} attempts succeeded", cfg.trials - failures, cfg.trials);
    Ok(t.done(failures > 0))
}

fn protocol2(cfg: &RunConfig) -> Result<Report, CliError> {
    let params = cfg.protocol2();
    let need = params.key_bits_needed(cfg.n_pulses)?;
    // By default the pool covers every session even if none refuels.
    let bits = if cfg.pool_bits == 0 { need * (cfg.trials + 1) } else { cfg.pool_bits };
    let store = random_bitstring(bits, &mut RngSeed(cfg.seed).rng(Stream::Trials));
    let mut alice = Party2::new(SecretPool::new(store.clone()));
    let mut bob = Party2::new(SecretPool::new(store));
    let mut t = Table::new(cfg, &format!("{},abort_reason", Protocol2Outcome::CSV_HEADER));
    let mut aborted = false;
    for i in 0..cfg.trials {
        let seed = run_seed(cfg, i);
        let mut adv = AdversaryScript::passive(cfg.eve);
        let out = run_protocol2(&mut alice, &mut bob, &params, cfg.n_pulses, &mut adv, seed)?;
        aborted |= !(out.identified && out.refueled);
        let reason = out.abort_reason.map(|r| r.to_string()).unwrap_or_default();
        t.row(format!("{},{reason}", out.csv_row(seed, cfg.n_pulses)));
    }
    Ok(t.done(aborted))
}

fn deception(cfg: &RunConfig) -> Result<Report, CliError> {
    let mut t = Table::new(cfg, "eps,i_ab,i_opt,i_limit,p_bar_opt,p_crit,n_is,k,bound");
    for eps in cfg.eps_grid.points() {
        let n = cfg.n_is as u64;
        let bound = deception_probability_bound(n, eps, cfg.p_bar)?;
        t.row(format!(
            "{eps:.4},{:.6},{:.6},{:.6},{:.6},{:.6},{n},{},{bound:.6e}",
            info_ab(eps),
            info_opt(eps),
            info_limit(eps),
            p_bar_from_info(info_opt(eps)),
            p_crit(eps),
            tolerance(n, eps),
        ));
    }
    Ok(t.done(false))
}

fn epslim(cfg: &RunConfig) -> Result<Report, CliError> {
    let sizes = if cfg.s_list.is_empty() { vec![cfg.s] } else { cfg.s_list.clone() };
    let mut t = Table::new(cfg, "s,delta,eps_max,eps_lim");
    for s in sizes {
        let lim = solve_eps_lim(&EstimationParams::new(s, cfg.eps_max, cfg.delta)?);
        let lim = match lim {
            Ok(l) => format!("{l:.5}"),
            Err(qident_core::Error::NoSolution) => String::new(),
            Err(e) => return Err(e.into()),
        };
        t.row(format!("{s},{:e},{},{lim}", cfg.delta, cfg.eps_max));
    }
    Ok(t.done(false))
}

fn budget(cfg: &RunConfig) -> Result<Report, CliError> {
    let ns = if cfg.n_list.is_empty() { vec![cfg.n_pulses as f64] } else { cfg.n_list.clone() };
    let mus = if cfg.mu_list.is_empty() { vec![cfg.mu] } else { cfg.mu_list.clone() };
    let mut t = Table::new(
        cfg,
        "n_pulses,mu,sifted,corrected,beamsplit,fuchs,safeguard,pa_compression,distilled,b_min,ratio,mu_warning",
    );
    let base = cfg.budget();
    base.validate()?;
    for &n in &ns {
        for &mu in &mus {
            let b = distilled_breakdown(&base.with_n(n).with_mu(mu));
            let need = b_min(n as u64, cfg.s as u64, cfg.a);
            let mut line = String::new();
            let _ = write!(
                line,
                "{n},{mu},{:.1},{:.1},{:.1},{:.1},{:.1},{:.1},{:.1},{need},{:.4},{}",
                b.sifted,
                b.corrected,
                b.beamsplit,
                b.fuchs,
                b.safeguard,
                b.pa_compression,
                b.total,
                b.total / need as f64,
                u8::from(b.mu_regime_warning)
            );
            t.row(line);
        }
    }
    Ok(t.done(false))
}

fn optimize(cfg: &RunConfig) -> Result<Report, CliError> {
    let mus = if cfg.mu_list.is_empty() {
        (1..=30).map(|i| i as f64 * 0.05).collect()
    } else {
        cfg.mu_list.clone()
    };
    let mut t = Table::new(cfg, "eta_tl,mode,mu,distilled_per_pulse,break_even_n");
    let base = cfg.budget();
    base.validate()?;
    for &eta_tl in &cfg.eta_tl_list {
        // A quoted overall transmissivity scales with the line factor.
        let p = qident_core::analysis::BudgetParams {
            eta_tl,
            eta_overall: cfg.eta.map(|e| e * eta_tl / cfg.eta_tl),
            ..base
        };
        let be = |mode| match break_even_n(&p, mode, None) {
            Ok(b) => Ok(Some(b)),
            Err(qident_core::Error::NeverBreaksEven) => Ok(None),
            Err(e) => Err(e),
        };
        match optimize_mu(&p, &mu_grid()) {
            Ok((mu, ratio)) => {
                let n = be(MuMode::Optimized)?.map(|b| b.n_pulses.to_string()).unwrap_or_default();
                t.row(format!("{eta_tl},optimized,{mu:.2},{ratio:.6e},{n}"));
            }
            Err(qident_core::Error::AllZero) => t.row(format!("{eta_tl},optimized,,0,")),
            Err(e) => return Err(e.into()),
        }
        for &mu in &mus {
            let ratio = qident_core::analysis::distilled_len(&p.with_mu(mu)) / p.n_pulses;
            let n = be(MuMode::Fixed(mu))?.map(|b| b.n_pulses.to_string()).unwrap_or_default();
            t.row(format!("{eta_tl},fixed,{mu:.2},{ratio:.6e},{n}"));
        }
    }
    Ok(t.done(false))
}

fn auth_params(cfg: &RunConfig) -> Result<AuthParams, CliError> {
    Ok(AuthParams::new(cfg.auth_p, cfg.auth_d)?)
}

fn auth_tag(cfg: &RunConfig, extras: &Extras) -> Result<Report, CliError> {
    let params = auth_params(cfg)?;
    let mut rng = RngSeed(cfg.seed).rng(Stream::Trials);
    let vectors = generate(cfg.trials, &params, cfg.msg_max, &mut rng)?;
    if let Some(path) = &extras.vectors {
        let mut text = format!("# seed={} config_hash={}\n", cfg.seed, cfg.hash());
        for v in &vectors {
            text.push_str(&v.to_line());
            text.push('\n');
        }
        write_file(path, text.as_bytes())?;
    }
    let mut t = Table::new(cfg, "index,p,d,msg_bits,tag_hex");
    for (i, v) in vectors.iter().enumerate() {
        t.row(format!("{i},{},{},{},{:016x}", params.p, params.d, v.msg.len(), v.tag.0));
    }
    Ok(t.done(false))
}

fn auth_verify(cfg: &RunConfig, extras: &Extras) -> Result<Report, CliError> {
    let path = extras
        .vectors
        .as_ref()
        .ok_or_else(|| CliError::Usage("auth-verify needs --vectors PATH".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut t = Table::new(cfg, "index,p,d,msg_bits,valid");
    let mut bad = 0;
    for (i, v) in parse_file(&text)?.iter().enumerate() {
        let ok = v.check()?;
        bad += usize::from(!ok);
        t.row(format!("{i},{},{},{},{}", v.params.p, v.params.d, v.msg.len(), u8::from(ok)));
    }
    if bad > 0 {
        eprintln!("auth-verify: {bad} vector(s) failed");
    }
    Ok(t.done(bad > 0))
}
