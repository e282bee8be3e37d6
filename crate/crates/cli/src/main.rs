use std::path::PathBuf;
use std::process::ExitCode;

use cavgate::experiments::{
    gate, rabi, report, scan, ExperimentConfig, OmegaRef, OutputDir, Setup,
};
use cavgate::{par, Error};
use clap::{Parser, Subcommand};

/// Two-atom Rydberg gate through a thermal microwave cavity.
#[derive(Parser, Debug)]
#[command(name = "cavgate", version)]
struct Cli {
    /// JSON experiment config (built-in reference parameters when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Also write SVG charts.
    #[arg(long, global = true)]
    svg: bool,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Reference frequency for figure units: `measured` or a value in kHz.
    #[arg(long = "omega-ref", global = true)]
    omega_ref: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rabi oscillations from |gg,n> for each configured photon number.
    Rabi,
    /// Thermally averaged transfer fidelity versus mean photon number.
    Fidelity,
    /// Full cycle on |gg,n> read as a controlled-phase gate.
    Gate,
    /// Parameter conditions; exit 1 when any fails.
    Check,
    /// Perturbative couplings and shifts over a range of photon numbers.
    Effective,
}

enum Failure {
    Condition,
    Config(Error),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::reference(),
    };
    if let Some(w) = &cli.omega_ref {
        config.omega_ref = w.parse::<OmegaRef>()?;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let config = load(cli).map_err(Failure::Config)?;
    match cli.command {
        Command::Check => {
            let r = report::run_condition_report(&config)?;
            let mut out = OutputDir::create(&cli.out)?;
            report::write_conditions(&config, &r, &mut out)?;
            print!("{}", report::condition_text(&config, &r));
            if !r.verdict.all_pass() {
                return Err(Failure::Condition);
            }
        }
        Command::Effective => {
            let t = report::run_effective(&config)?;
            let mut out = OutputDir::create(&cli.out)?;
            report::write_effective(&config, &t, &mut out)?;
            print!("{}", report::effective_text(&t));
        }
        Command::Rabi => {
            let setup = Setup::new(config)?;
            let outcome = rabi::run_rabi(&setup);
            let mut out = OutputDir::create(&cli.out)?;
            let summary = rabi::write_rabi(&setup, &outcome, &mut out, cli.svg)?;
            println!(
                "reference {:.4} kHz, closed form {:.4} kHz",
                summary.omega_ref_khz, summary.closed_form_khz
            );
            for e in &summary.runs {
                println!(
                    "n = {:>3} {:<8} frequency {} kHz, max pop_rr {:.4}",
                    e.n,
                    e.label,
                    e.omega_exact_khz.map_or("-".into(), |w| format!("{w:.4}")),
                    e.max_pop_rr
                );
            }
            if let Some(s) = summary.coherent_frequency_spread {
                println!("coherent frequency spread {:.3}%", 100.0 * s);
            }
            if let Some(f) = outcome.failures.into_iter().next() {
                return Err(Failure::Run(Error::AtPhotonNumber {
                    n: f.n,
                    source: Box::new(f.error),
                }));
            }
        }
        Command::Fidelity => {
            let setup = Setup::new(config)?;
            let s = scan::run_fidelity_scan(&setup)?;
            let mut out = OutputDir::create(&cli.out)?;
            scan::write_fidelity(&setup, &s, &mut out, cli.svg)?;
            println!("t_pi = {:.4} us, photon numbers 0..={}", s.t_pi_us, s.max_photon_number);
            for c in &s.curves {
                let f: Vec<String> = c.points.iter().map(|p| format!("{:.4}", p.fidelity)).collect();
                println!("Gamma_fig {:<6} gamma_fig {:<5} {}", c.decay_fig, c.dephasing_fig, f.join(" "));
            }
        }
        Command::Gate => {
            let setup = Setup::new(config)?;
            let r = gate::run_gate_check(&setup)?;
            let mut out = OutputDir::create(&cli.out)?;
            gate::write_gate(&setup, &r, &mut out)?;
            print!("{}", r.to_text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match par::with_threads(cli.threads, || run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Condition) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
