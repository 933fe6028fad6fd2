//! Command-line front end: bound evaluation, scheme-rate simulation,
//! beamforming-gain sweeps, and the Monte Carlo verification suite.
//!
//! Exit codes: 0 success, 1 verification-check failure, 2 usage error.

use std::io::Write;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use miso_lab::bounds::{self, BoundReport};
use miso_lab::channel::{ChannelConfig, PowerConstraint};
use miso_lab::montecarlo::{self, LemmaCheckResult};
use miso_lab::numerics::HermitianMat;
use miso_lab::scheme::SchemeConfig;
use miso_lab::{EncoderKind, RngStream, DEFAULT_SEED};

#[derive(Parser)]
#[command(
    name = "miso-lab",
    about = "Feedback MISO link simulator: capacity bounds, training/beamforming rates, and verification suites",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// csv (default for tables) or json (single object / JSON lines).
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every closed-form bound at one (M, T_c, P, kappa) point.
    Bounds {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        tc: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo rate estimate of the training/beamforming scheme.
    Simulate {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        tc: usize,
        #[arg(long)]
        p: f64,
        /// Switches to the fourth-moment budget with this kappa
        /// (per-use power becomes kappa P / sqrt(3)).
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Scheme-rate sweep over antenna counts at coherence T_c = M^alpha.
    SweepAlpha {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        p: f64,
        /// Comma-separated antenna counts, e.g. 16,64,256.
        #[arg(long = "m-list", value_delimiter = ',', required = true)]
        m_list: Vec<usize>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the full verification suite; exits 1 if any check fails.
    VerifyLemmas {
        #[arg(long, default_value_t = 20_000)]
        trials: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn main() -> ExitCode {
    configure_thread_pool();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

/// MISO_LAB_THREADS caps worker parallelism for the Monte Carlo suites.
fn configure_thread_pool() {
    if let Ok(v) = std::env::var("MISO_LAB_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Bounds {
            m,
            tc,
            p,
            kappa,
            output,
        } => {
            let report = bounds::bound_report(m, tc, p, kappa)?;
            let format = output.format.unwrap_or(Format::Csv);
            let text = match format {
                Format::Csv => bounds_csv(&report)?,
                Format::Json => {
                    let mut s = serde_json::to_string(&report)?;
                    s.push('\n');
                    s
                }
            };
            emit(&output, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            m,
            tc,
            p,
            kappa,
            trials,
            seed,
            output,
        } => {
            let channel = match kappa {
                None => ChannelConfig::second_moment(m, tc, p)?,
                Some(k) => ChannelConfig::new(m, tc, p, PowerConstraint::FourthMoment, k)?,
            };
            let scheme = SchemeConfig::from_channel(channel)?;
            let est = montecarlo::estimate_scheme_rate(&scheme, trials, seed)?;
            let row = SimulateRow::build(&scheme, trials, seed, est.mean, est.stderr)?;
            let format = output.format.unwrap_or(Format::Csv);
            let text = match format {
                Format::Csv => simulate_csv(&row)?,
                Format::Json => {
                    let mut s = serde_json::to_string(&row)?;
                    s.push('\n');
                    s
                }
            };
            emit(&output, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::SweepAlpha {
            alpha,
            p,
            m_list,
            trials,
            seed,
            output,
        } => {
            if m_list.is_empty() {
                bail!("--m-list must name at least one antenna count");
            }
            let sweep = montecarlo::sweep_gain(alpha, p, &m_list, trials, seed)?;
            for (m, why) in &sweep.skipped {
                eprintln!("warning: skipping M={m}: {why}");
            }
            let format = output.format.unwrap_or(Format::Csv);
            let text = match format {
                Format::Csv => sweep_csv(&sweep.rows)?,
                Format::Json => {
                    let mut s = String::new();
                    for row in &sweep.rows {
                        s.push_str(&serde_json::to_string(row)?);
                        s.push('\n');
                    }
                    s
                }
            };
            emit(&output, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifyLemmas {
            trials,
            seed,
            output,
        } => {
            if trials < 10_000 {
                bail!("verify-lemmas needs --trials >= 10000 for meaningful checks");
            }
            let checks = run_verification_suite(trials, seed)?;
            let all_pass = checks.iter().all(|c| c.pass);
            let format = output.format.unwrap_or(Format::Json);
            let text = match format {
                Format::Json => {
                    let mut s = String::new();
                    for c in &checks {
                        s.push_str(&serde_json::to_string(c)?);
                        s.push('\n');
                    }
                    s
                }
                Format::Csv => lemmas_csv(&checks)?,
            };
            emit(&output, &text)?;
            if all_pass {
                Ok(ExitCode::SUCCESS)
            } else {
                for c in checks.iter().filter(|c| !c.pass) {
                    eprintln!(
                        "FAILED: {} [{}] observed {} vs bound {}",
                        c.lemma_id, c.scenario, c.observed, c.bound
                    );
                }
                Ok(ExitCode::from(1))
            }
        }
    }
}

/// The full verification suite run by `verify-lemmas`: covariance spectrum,
/// estimate/increment moment caps, genie power, the quartic-form and
/// chi-squared log identities, and the sequential-vs-batch oracle.
fn run_verification_suite(trials: u64, seed: u64) -> anyhow::Result<Vec<LemmaCheckResult>> {
    let mut checks = Vec::new();
    let mut salt = 0u64;
    let mut next_seed = move || {
        salt += 1;
        seed.wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    };

    for kind in EncoderKind::ALL {
        for (m, tc) in [(4usize, 4usize), (8, 4)] {
            for p in [1.0, 10.0] {
                let cfg = ChannelConfig::second_moment(m, tc, p)?;
                checks.extend(montecarlo::lemma_suite_point(
                    kind,
                    &cfg,
                    trials,
                    next_seed(),
                )?);
            }
        }
        let cfg = ChannelConfig::second_moment(8, 6, 10.0)?;
        checks.push(montecarlo::verify_cov_spectrum(
            kind,
            &cfg,
            (trials / 10).max(500),
            next_seed(),
        )?);
    }

    let mut pair_rng = RngStream::new(seed, u64::MAX).rng();
    for case in 0..8u64 {
        let n = 2 + (case as usize) % 5;
        let (a, omega) = random_quartic_pair(n, &mut pair_rng);
        checks.push(montecarlo::verify_quartic_form(
            &a,
            &omega,
            trials.max(50_000),
            next_seed(),
        )?);
    }

    for k in [2u64, 4, 10, 40] {
        checks.extend(montecarlo::verify_chi2_log_moment(
            k,
            trials.max(100_000),
            next_seed(),
        )?);
    }

    checks.push(montecarlo::verify_sequential_vs_batch(1_000, next_seed())?);
    Ok(checks)
}

fn random_quartic_pair(n: usize, rng: &mut impl rand::Rng) -> (HermitianMat, HermitianMat) {
    use miso_lab::numerics::sample_cn;
    let mut a = HermitianMat::zeros(n);
    let mut omega = HermitianMat::zeros(n);
    for _ in 0..n {
        let v = sample_cn(n, rng).expect("n >= 1");
        a.add_outer_self(&v, rng.gen::<f64>() * 2.0 - 1.0);
        let w = sample_cn(n, rng).expect("n >= 1");
        omega.add_outer_self(&w, rng.gen::<f64>() + 0.05);
    }
    (a, omega)
}

#[derive(serde::Serialize)]
struct SimulateRow {
    m: usize,
    tc: usize,
    t_tau: usize,
    constraint: PowerConstraint,
    p: f64,
    kappa: f64,
    effective_power: f64,
    trials: u64,
    seed: u64,
    rate_bits: f64,
    rate_stderr: f64,
    lower_bound_bits: f64,
    upper_bound_bits: f64,
}

impl SimulateRow {
    fn build(
        scheme: &SchemeConfig,
        trials: u64,
        seed: u64,
        rate_bits: f64,
        rate_stderr: f64,
    ) -> anyhow::Result<Self> {
        let ch = &scheme.channel;
        let (lower, upper) = match ch.constraint {
            PowerConstraint::SecondMoment => (
                bounds::lower_second(ch.antennas_m, ch.coherence_tc, ch.power_p)?.bits,
                bounds::upper_second(ch.antennas_m, ch.coherence_tc, ch.power_p),
            ),
            PowerConstraint::FourthMoment => (
                bounds::lower_fourth(ch.antennas_m, ch.coherence_tc, ch.power_p, ch.kappa)?.bits,
                bounds::upper_fourth(ch.antennas_m, ch.coherence_tc, ch.power_p, ch.kappa),
            ),
        };
        Ok(Self {
            m: ch.antennas_m,
            tc: ch.coherence_tc,
            t_tau: scheme.t_train,
            constraint: ch.constraint,
            p: ch.power_p,
            kappa: ch.kappa,
            effective_power: scheme.effective_power,
            trials,
            seed,
            rate_bits,
            rate_stderr,
            lower_bound_bits: lower,
            upper_bound_bits: upper,
        })
    }
}

/// Floats rendered with 10 significant digits.
fn f10(v: f64) -> String {
    format!("{v:.9e}")
}

fn bounds_csv(r: &BoundReport) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "m",
        "tc",
        "p",
        "kappa",
        "alpha",
        "ideal_waterfill_bits",
        "ideal_asymptote_bits",
        "upper_second_bits",
        "upper_fourth_bits",
        "lower_second_bits",
        "lower_fourth_bits",
        "lower_second_vacuous",
        "lower_fourth_vacuous",
    ])?;
    let lower = |v: Option<f64>| v.map(f10).unwrap_or_else(|| "degenerate".into());
    w.write_record([
        r.m.to_string(),
        r.tc.to_string(),
        f10(r.p),
        f10(r.kappa),
        f10(r.alpha),
        f10(r.ideal_waterfill_bits),
        f10(r.ideal_asymptote_bits),
        f10(r.upper_second_bits),
        f10(r.upper_fourth_bits),
        lower(r.lower_second_bits),
        lower(r.lower_fourth_bits),
        r.lower_second_vacuous.to_string(),
        r.lower_fourth_vacuous.to_string(),
    ])?;
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn simulate_csv(row: &SimulateRow) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "m",
        "tc",
        "t_tau",
        "constraint",
        "p",
        "kappa",
        "effective_power",
        "trials",
        "seed",
        "rate_bits",
        "rate_stderr",
        "lower_bound_bits",
        "upper_bound_bits",
    ])?;
    let constraint = match row.constraint {
        PowerConstraint::SecondMoment => "second_moment",
        PowerConstraint::FourthMoment => "fourth_moment",
    };
    w.write_record([
        row.m.to_string(),
        row.tc.to_string(),
        row.t_tau.to_string(),
        constraint.to_string(),
        f10(row.p),
        f10(row.kappa),
        f10(row.effective_power),
        row.trials.to_string(),
        row.seed.to_string(),
        f10(row.rate_bits),
        f10(row.rate_stderr),
        f10(row.lower_bound_bits),
        f10(row.upper_bound_bits),
    ])?;
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn sweep_csv(rows: &[miso_lab::GainSweepRow]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["m", "tc", "t_tau", "rate_bits", "rate_over_log2m", "stderr"])?;
    for r in rows {
        w.write_record([
            r.m.to_string(),
            r.tc.to_string(),
            r.t_tau.to_string(),
            f10(r.rate_bits),
            f10(r.rate_over_log2m),
            f10(r.stderr),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn lemmas_csv(checks: &[LemmaCheckResult]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "lemma_id",
        "scenario",
        "observed",
        "bound",
        "stderr",
        "slack_sigmas",
        "pass",
        "trials",
        "seed",
    ])?;
    for c in checks {
        w.write_record([
            c.lemma_id.clone(),
            c.scenario.clone(),
            f10(c.observed),
            f10(c.bound),
            f10(c.stderr),
            c.slack_sigmas.map(f10).unwrap_or_else(|| "exact".into()),
            c.pass.to_string(),
            c.trials.to_string(),
            c.seed.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn emit(output: &OutputArgs, text: &str) -> anyhow::Result<()> {
    match &output.out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
