use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bireg::config::{parse_pole, read_config, ConfigError};
use bireg::csv::write_trajectory_csv;
use bireg::graph_io::read_edge_list;
use bireg::pgm::{parse_pgm, render_pgm};
use bireg::turing::{run_turing, TuringError};
use bireg_core::{
    choose_gains, has_leader_spanning_tree, integrate, laplacian_family, linalg, structural_balance, EngineError,
    LyapunovError, TuringParams,
};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bireg", version, about = "Bipartite output regulation over signed digraphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report structural balance, leader reachability and the eigenvalues of H^s.
    CheckGraph { file: PathBuf },
    /// Controller gains placing the companion poles.
    Gains {
        #[arg(long)]
        order: usize,
        /// Comma separated; a single pole is repeated `order` times.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        poles: Vec<String>,
    },
    /// Integrate a scenario file and write the trajectory as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Regenerate a binary target image with one regulated network per row.
    Turing {
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long = "t-final")]
        t_final: Option<f64>,
        #[arg(long = "safety-factor")]
        safety_factor: Option<f64>,
    },
}

/// Marks a failure of the numerics rather than of the input.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Numerical(String);

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_numerical(&e) { 2 } else { 1 })
        }
    }
}

fn is_numerical(e: &anyhow::Error) -> bool {
    fn engine(e: &EngineError) -> bool {
        matches!(e, EngineError::BlowUp { .. } | EngineError::Lyapunov(LyapunovError::CertificateSearchFailed { .. }))
    }
    e.chain().any(|c| {
        c.is::<Numerical>()
            || c.downcast_ref::<EngineError>().is_some_and(engine)
            || matches!(c.downcast_ref::<ConfigError>(), Some(ConfigError::Engine(inner)) if engine(inner))
            || matches!(c.downcast_ref::<TuringError>(), Some(TuringError::Row { source, .. }) if engine(source))
            || matches!(c.downcast_ref::<LyapunovError>(), Some(LyapunovError::CertificateSearchFailed { .. }))
    })
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::CheckGraph { file } => check_graph(&file),
        Command::Gains { order, poles } => gains(order, &poles),
        Command::Simulate { config, out } => simulate(&config, &out),
        Command::Turing { target, out, mu, dt, t_final, safety_factor } => {
            let mut params = TuringParams::default();
            params.mu = mu.unwrap_or(params.mu);
            params.dt = dt.unwrap_or(params.dt);
            params.t_final = t_final.unwrap_or(params.t_final);
            params.safety_factor = safety_factor.unwrap_or(params.safety_factor);
            turing(&target, &out, &params)
        }
    }
}

fn set(nodes: &[usize]) -> String {
    let items: Vec<String> = nodes.iter().map(usize::to_string).collect();
    format!("{{{}}}", items.join(", "))
}

/// Rounded to 9 decimals so that exact small-integer spectra print cleanly.
fn round9(x: f64) -> f64 {
    let r = (x * 1e9).round() / 1e9;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn check_graph(file: &Path) -> Result<()> {
    let g = read_edge_list(file)?;
    println!("followers: {}", g.n_followers());
    let gp = structural_balance(&g)?;
    println!("structurally balanced: yes");
    println!("partition: V1 = {}, V2 = {}", set(&gp.v1()), set(&gp.v2()));
    if !gp.isolated().is_empty() {
        println!("unreached by follower edges: {}", set(gp.isolated()));
    }
    let tree = has_leader_spanning_tree(&g);
    println!("leader spanning tree: {}", if tree { "yes" } else { "no" });
    let h = laplacian_family(&g, &gp)?.h_signed;
    let mut ev = linalg::block_eigenvalues(&h);
    ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    let shown: Vec<String> = ev
        .iter()
        .map(|z| {
            let (re, im) = (round9(z.re), round9(z.im));
            if im == 0.0 {
                format!("{re}")
            } else {
                format!("{re}{im:+}i")
            }
        })
        .collect();
    println!("H^s eigenvalues: {{{}}}", shown.join(", "));
    if !tree {
        bail!("the leader does not reach every follower");
    }
    Ok(())
}

fn gains(order: usize, poles: &[String]) -> Result<()> {
    if order == 0 {
        bail!("--order must be at least 1");
    }
    let mut parsed = Vec::with_capacity(poles.len());
    for p in poles {
        parsed.push(parse_pole(p).with_context(|| format!("invalid pole {p:?}"))?);
    }
    let parsed = match parsed.len() {
        1 => vec![parsed[0]; order],
        k if k == order => parsed,
        k => bail!("{k} poles given for order {order}"),
    };
    let g = choose_gains(&parsed)?;
    let beta: Vec<String> = g.beta().iter().map(|b| format!("{}", round9(*b))).collect();
    println!("beta = {}", beta.join(", "));
    Ok(())
}

fn write_csv(path: &Path, traj: &bireg_core::Trajectory) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write_trajectory_csv(BufWriter::new(file), traj).with_context(|| format!("cannot write {}", path.display()))
}

fn simulate(config: &Path, out: &Path) -> Result<()> {
    let cfg = read_config(config)?;
    let base = config.parent().unwrap_or(Path::new("."));
    let (sc, gain) = cfg.build(base)?;
    eprintln!("mu = {} (bound {})", gain.mu, gain.mu_bound);
    match integrate(&sc) {
        Ok(traj) => {
            write_csv(out, &traj)?;
            eprintln!("wrote {} samples to {}", traj.len(), out.display());
            Ok(())
        }
        Err(EngineError::BlowUp { time, threshold, trajectory }) => {
            write_csv(out, &trajectory)?;
            Err(Numerical(format!(
                "state norm exceeded {threshold} at t = {time}; partial trajectory written to {}",
                out.display()
            ))
            .into())
        }
        Err(e) => Err(e.into()),
    }
}

fn turing(target: &Path, out: &Path, params: &TuringParams) -> Result<()> {
    let bytes = std::fs::read(target).with_context(|| format!("cannot read {}", target.display()))?;
    let image = parse_pgm(&bytes).with_context(|| format!("{}", target.display()))?;
    let rows = image.threshold();
    let output = run_turing(&rows, params)?;
    let flat: Vec<f64> = output.into_iter().flatten().collect();
    let pgm = render_pgm(image.width, image.height, &flat)?;
    let mut file = File::create(out).with_context(|| format!("cannot create {}", out.display()))?;
    file.write_all(&pgm).with_context(|| format!("cannot write {}", out.display()))?;
    Ok(())
}
