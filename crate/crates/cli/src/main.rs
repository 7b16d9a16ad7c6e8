//! `tagging-game` command-line tool.
//!
//! Exit codes: 0 success, 1 internal error, 2 usage or validation error,
//! 3 target not designable.

mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use tagging_game::attractor::{attractor_closed_form, AttractorResult};
use tagging_game::config::{KnobValue, KnobsConfig, RunConfig};
use tagging_game::design::{
    choose_design, DesignError, DesignKnobs, MechanismDesign, NotDesignable,
};
use tagging_game::equilibrium::{ne_grid_scan, ne_set, GridCandidate, NeReport};
use tagging_game::experiments::{run_sweep, SweepSpec};
use tagging_game::model::{
    participant_fractions, validate_system, ParticipantFractions, PopulationProfile, PostType,
    ValidationReport,
};
use tagging_game::sim::{convergence_report, simulate_from, RNG_NAME};

use output::{fmt_f64, params_hash, write_json, DesignBundle, RunManifest};

#[derive(Parser)]
#[command(
    name = "tagging-game",
    version,
    about = "Design and analyse the fake-post tagging game"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute reward, reward ratio and warning scale for a target.
    Design(DesignArgs),
    /// Limit of the fake-tag fraction for one post type and population.
    Attractor(AttractorArgs),
    /// Run the stochastic tagging chain and write the trajectory as CSV.
    Simulate(SimulateArgs),
    /// List and certify the equilibria of a design bundle.
    VerifyNe(VerifyArgs),
    /// Monte-Carlo designability and degradation study.
    Sweep(SweepArgs),
}

#[derive(Args, Default)]
struct KnobFlags {
    /// "auto" or an explicit value for the theta_tilde offset.
    #[arg(long)]
    eps: Option<String>,
    /// Offset added by the "auto" eps rule.
    #[arg(long)]
    eps_offset: Option<f64>,
    /// "midpoint" or an offset from the lower end of the w interval.
    #[arg(long)]
    eps1: Option<String>,
    /// "midpoint" or the step above eta_bar.
    #[arg(long)]
    eps2: Option<String>,
    /// gamma = (1 + margin) * gamma_lower.
    #[arg(long)]
    gamma_margin: Option<f64>,
}

impl KnobFlags {
    fn apply(&self, base: DesignKnobs) -> Result<DesignKnobs, Failure> {
        let value = |s: &Option<String>| {
            s.as_ref().map(|s| {
                s.parse::<f64>()
                    .map(KnobValue::Value)
                    .unwrap_or(KnobValue::Named(s.clone()))
            })
        };
        let cfg = KnobsConfig {
            eps: value(&self.eps),
            eps_offset: self.eps_offset,
            eps1: value(&self.eps1),
            eps2: value(&self.eps2),
            gamma_margin: self.gamma_margin,
        };
        cfg.resolve(base)
            .map_err(|e| Failure::Usage(e.to_string().replace("knobs.", "--")))
    }
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    knobs: KnobFlags,
}

/// Where the warning scale comes from when a command needs one.
#[derive(Args)]
struct WarningSource {
    /// Warning scale; overrides --design.
    #[arg(long)]
    w: Option<f64>,
    /// Take w from a design bundle built for the same config.
    #[arg(long)]
    design: Option<PathBuf>,
    #[command(flatten)]
    knobs: KnobFlags,
}

#[derive(Args)]
struct ProfileFlags {
    #[arg(long)]
    mu0: Option<f64>,
    #[arg(long)]
    mu1: Option<f64>,
    #[arg(long)]
    mu2: Option<f64>,
}

#[derive(Args)]
struct AttractorArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    post: PostType,
    #[command(flatten)]
    profile: ProfileFlags,
    #[command(flatten)]
    source: WarningSource,
    /// Also write the result here, with a manifest.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    post: PostType,
    #[arg(long)]
    epochs: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Fraction seen by the first warning reader.
    #[arg(long, default_value_t = 0.0)]
    initial_beta: f64,
    /// Population; defaults to the designed profile.
    #[command(flatten)]
    profile: ProfileFlags,
    #[command(flatten)]
    source: WarningSource,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    design: PathBuf,
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 0.75)]
    theta: f64,
    #[arg(long, value_delimiter = ',', required = true)]
    d: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    n: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    knobs: KnobFlags,
}

enum Failure {
    Usage(String),
    Invalid(ValidationReport),
    NotDesignable(NotDesignable),
    Internal(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Internal(e)
    }
}

impl From<DesignError> for Failure {
    fn from(e: DesignError) -> Self {
        match e {
            DesignError::Invalid(r) => Failure::Invalid(r),
            DesignError::NotDesignable(nd) => Failure::NotDesignable(nd),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let cfg = RunConfig::parse(&text).map_err(|e| {
        let msg = match &e {
            tagging_game::config::ConfigError::Parse(p) => p.message().to_string(),
            other => other.to_string(),
        };
        Failure::Usage(format!("{}: {}", path.display(), msg.replace('\n', " ")))
    })?;
    let report = validate_system(&cfg.system, &cfg.target);
    if !report.passed() {
        return Err(Failure::Invalid(report));
    }
    Ok(cfg)
}

fn load_bundle(path: &Path) -> Result<DesignBundle, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let bundle: DesignBundle = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let expected = params_hash(&bundle.system, &bundle.design.target);
    if expected != bundle.params_hash {
        return Err(Failure::Usage(format!(
            "{}: params_hash {} does not match embedded parameters ({expected})",
            path.display(),
            bundle.params_hash
        )));
    }
    Ok(bundle)
}

fn profile(flags: &ProfileFlags, mu_a: f64) -> Result<Option<PopulationProfile>, Failure> {
    match (flags.mu0, flags.mu1, flags.mu2) {
        (None, None, None) => Ok(None),
        (Some(a), Some(b), Some(c)) => PopulationProfile::new(a, b, c, mu_a)
            .map(Some)
            .map_err(|e| Failure::Usage(e.to_string())),
        _ => Err(Failure::Usage(
            "--mu0, --mu1 and --mu2 must be given together".into(),
        )),
    }
}

/// Warning scale plus the design it came from, if any.
fn resolve_w(
    cfg: &RunConfig,
    source: &WarningSource,
) -> Result<(f64, Option<MechanismDesign>, DesignKnobs, &'static str), Failure> {
    let knobs = source.knobs.apply(
        cfg.design_knobs()
            .map_err(|e| Failure::Usage(e.to_string()))?,
    )?;
    if let Some(w) = source.w {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Failure::Usage(format!("--w must be positive, got {w}")));
        }
        return Ok((w, None, knobs, "flag"));
    }
    if let Some(path) = &source.design {
        let bundle = load_bundle(path)?;
        if bundle.params_hash != params_hash(&cfg.system, &cfg.target) {
            return Err(Failure::Usage(format!(
                "{}: bundle was built for a different config",
                path.display()
            )));
        }
        return Ok((bundle.design.w, Some(bundle.design), bundle.knobs, "bundle"));
    }
    let design = choose_design(&cfg.target, &cfg.system, &knobs)?;
    Ok((design.w, Some(design), knobs, "design"))
}

fn base_manifest(name: &str, config: &Path, cfg: &RunConfig, knobs: DesignKnobs) -> RunManifest {
    let mut m = RunManifest::new(name);
    m.config_path = Some(config.to_path_buf());
    m.system = Some(cfg.system);
    m.target = Some(cfg.target);
    m.knobs = Some(knobs);
    m
}

fn run_design(args: &DesignArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.config)?;
    let knobs = args.knobs.apply(
        cfg.design_knobs()
            .map_err(|e| Failure::Usage(e.to_string()))?,
    )?;
    let design = choose_design(&cfg.target, &cfg.system, &knobs)?;
    let bundle = DesignBundle {
        design,
        system: cfg.system,
        knobs,
        params_hash: params_hash(&cfg.system, &cfg.target),
    };
    write_json(&args.out, &bundle)?;
    let mut m = base_manifest("design", &args.config, &cfg, knobs);
    m.write_beside(&args.out)?;
    println!(
        "theta_tilde={} w={} eta={} gamma={} R={}",
        design.theta_tilde, design.w, design.eta, design.gamma, design.reward
    );
    Ok(())
}

#[derive(Serialize)]
struct AttractorOutput {
    post: PostType,
    profile: PopulationProfile,
    fractions: ParticipantFractions,
    w: f64,
    w_source: &'static str,
    #[serde(flatten)]
    result: AttractorResult,
}

fn run_attractor(args: &AttractorArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.config)?;
    let mu = profile(&args.profile, cfg.system.mu_a)?
        .ok_or_else(|| Failure::Usage("--mu0, --mu1 and --mu2 are required".into()))?;
    let fr =
        participant_fractions(&mu, cfg.system.mu_a).map_err(|e| Failure::Usage(e.to_string()))?;
    let (w, _, knobs, w_source) = resolve_w(&cfg, &args.source)?;
    let result = attractor_closed_form(args.post, &fr, &cfg.system, w);
    let out = AttractorOutput {
        post: args.post,
        profile: mu,
        fractions: fr,
        w,
        w_source,
        result,
    };
    println!(
        "{}",
        serde_json::to_string(&out).context("encoding result")?
    );
    if let Some(path) = &args.out {
        write_json(path, &out)?;
        base_manifest("attractor", &args.config, &cfg, knobs).write_beside(path)?;
    }
    Ok(())
}

fn run_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.config)?;
    let (w, design, knobs, w_source) = resolve_w(&cfg, &args.source)?;
    let mu = match profile(&args.profile, cfg.system.mu_a)? {
        Some(mu) => mu,
        None => {
            let d = design
                .ok_or_else(|| Failure::Usage("give --mu0/--mu1/--mu2 when --w is set".into()))?;
            PopulationProfile::on_participation_line(d.eta, cfg.system.mu_a)
        }
    };
    let fr =
        participant_fractions(&mu, cfg.system.mu_a).map_err(|e| Failure::Usage(e.to_string()))?;
    let traj = simulate_from(
        args.post,
        &fr,
        &cfg.system,
        w,
        args.epochs,
        args.seed,
        args.initial_beta,
    )
    .map_err(|e| Failure::Usage(e.to_string()))?;

    let mut writer = csv::Writer::from_path(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    writer
        .write_record(["k", "beta", "participant_type", "tag"])
        .context("writing CSV")?;
    for (i, (beta, epoch)) in traj.betas.iter().zip(&traj.epochs).enumerate() {
        writer
            .write_record([
                (i + 1).to_string(),
                fmt_f64(*beta),
                epoch.participant.label().into(),
                epoch.tag.label().into(),
            ])
            .context("writing CSV")?;
    }
    writer.flush().context("writing CSV")?;

    let star = attractor_closed_form(args.post, &fr, &cfg.system, w).beta_star;
    let report = convergence_report(&traj, star, 0.01).map_err(|e| Failure::Internal(e.into()))?;
    let mut m = base_manifest("simulate", &args.config, &cfg, knobs);
    m.seeds = vec![args.seed];
    m.rng = Some(RNG_NAME.to_string());
    m.resolved = serde_json::json!({
        "post": args.post,
        "epochs": args.epochs,
        "profile": mu,
        "fractions": fr,
        "w": w,
        "w_source": w_source,
        "initial_beta": args.initial_beta,
        "attractor": star,
        "convergence_tol": 0.01,
        "convergence": report,
    });
    m.write_beside(&args.out)?;
    println!(
        "final beta={} attractor={} gap={}",
        traj.final_beta(),
        star,
        report.final_gap
    );
    Ok(())
}

#[derive(Serialize)]
struct VerifyOutput {
    #[serde(flatten)]
    report: NeReport,
    grid_step: Option<f64>,
    grid_candidates: Option<Vec<GridCandidate>>,
    params_hash: String,
}

fn run_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let bundle = load_bundle(&args.design)?;
    let report = validate_system(&bundle.system, &bundle.design.target);
    if !report.passed() {
        return Err(Failure::Invalid(report));
    }
    let ne = ne_set(&bundle.design, &bundle.system).map_err(|e| Failure::Internal(e.into()))?;
    let grid_candidates = match args.grid_step {
        Some(step) => Some(
            ne_grid_scan(&bundle.design, &bundle.system, step)
                .map_err(|e| Failure::Usage(e.to_string()))?,
        ),
        None => None,
    };
    let second = ne.second_ne_exists;
    let out = VerifyOutput {
        report: ne,
        grid_step: args.grid_step,
        grid_candidates,
        params_hash: bundle.params_hash.clone(),
    };
    write_json(&args.out, &out)?;
    let mut m = RunManifest::new("verify-ne");
    m.config_path = Some(args.design.clone());
    m.system = Some(bundle.system);
    m.target = Some(bundle.design.target);
    m.knobs = Some(bundle.knobs);
    m.resolved =
        serde_json::json!({ "grid_step": args.grid_step, "params_hash": bundle.params_hash });
    m.write_beside(&args.out)?;
    println!(
        "equilibria={} second_ne_exists={second}",
        out.report.ne_list.len()
    );
    Ok(())
}

fn run_sweep_cmd(args: &SweepArgs) -> Result<(), Failure> {
    let knobs = args.knobs.apply(DesignKnobs::default())?;
    let spec = SweepSpec {
        d_values: args.d.clone(),
        n_samples: args.n,
        master_seed: args.seed,
        theta: args.theta,
        knobs,
    };
    let summary = run_sweep(&spec).map_err(|e| Failure::Usage(e.to_string()))?;

    let mut writer = csv::Writer::from_path(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    writer
        .write_record([
            "d",
            "n",
            "frac_designable",
            "frac_P_lt_10",
            "mean_P",
            "n_second_ne",
            "master_seed",
        ])
        .context("writing CSV")?;
    for r in &summary.rows {
        writer
            .write_record([
                fmt_f64(r.d),
                r.n.to_string(),
                fmt_f64(r.frac_designable),
                fmt_f64(r.frac_p_lt_10),
                fmt_f64(r.mean_p),
                r.n_second_ne.to_string(),
                r.master_seed.to_string(),
            ])
            .context("writing CSV")?;
    }
    writer.flush().context("writing CSV")?;

    let mut m = RunManifest::new("sweep");
    m.knobs = Some(knobs);
    m.seeds = vec![args.seed];
    m.rng = Some(RNG_NAME.to_string());
    m.resolved = serde_json::to_value(&summary).context("encoding summary")?;
    m.write_beside(&args.out)?;
    for r in &summary.rows {
        println!(
            "d={} frac_designable={} frac_P_lt_10={} n_failed={}",
            r.d, r.frac_designable, r.frac_p_lt_10, r.n_failed
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Design(a) => run_design(a),
        Command::Attractor(a) => run_attractor(a),
        Command::Simulate(a) => run_simulate(a),
        Command::VerifyNe(a) => run_verify(a),
        Command::Sweep(a) => run_sweep_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Invalid(report)) => {
            eprintln!("validation {report}");
            ExitCode::from(2)
        }
        Err(Failure::NotDesignable(nd)) => {
            let code = serde_json::to_string(&nd.reason).unwrap_or_default();
            eprintln!(
                "not designable: reason={} {}",
                code.trim_matches('"'),
                nd.detail
            );
            ExitCode::from(3)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(1)
        }
    }
}
