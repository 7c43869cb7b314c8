//! Config-driven experiment harness around the fraclab library.
//!
//! Every invocation creates one run directory containing a `manifest.json`
//! (inputs, versions, tolerances, and the failure record if any) next to the
//! subcommand's CSV/JSON artifacts. Reruns with identical configuration are
//! bit-identical.

mod config;
mod domain;
mod runs;

use clap::{Parser, Subcommand};
use config::Config;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fraclab", version, about = "spectral fractional Laplacian laboratory")]
struct Cli {
    /// flat key-value config file; flags override file entries
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// run directory for artifacts (default fraclab-run-<subcommand>)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form constants for (n, s), literal and corrected variants
    Constants {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        s: Option<f64>,
    },
    /// Build a basis and dump its eigenvalues
    Basis {
        #[arg(long)]
        domain: Option<String>,
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Least-energy solve at one epsilon
    Solve {
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        domain: Option<String>,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        s: Option<f64>,
    },
    /// Epsilon sweep with rate extraction
    Sweep {
        #[arg(long)]
        kind: Option<String>,
        /// comma-separated decreasing list
        #[arg(long)]
        eps: Option<String>,
        #[arg(long)]
        domain: Option<String>,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        s: Option<f64>,
    },
    /// Reduced-energy critical configuration search
    Reduce {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        domain: Option<String>,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        s: Option<f64>,
    },
    /// Robin function over the grid as CSV
    Green {
        #[arg(long)]
        domain: Option<String>,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        s: Option<f64>,
    },
    /// Extension flux residuals and, for 1D critical solves, the Pohozaev pair
    ExtensionCheck {
        #[arg(long)]
        domain: Option<String>,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Generate a dumbbell mask raster
    Dumbbell {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        lobe: Option<f64>,
        #[arg(long)]
        neck: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(path) => match Config::from_file(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => Config::default(),
    };
    let name = match &cli.command {
        Command::Constants { .. } => "constants",
        Command::Basis { .. } => "basis",
        Command::Solve { .. } => "solve",
        Command::Sweep { .. } => "sweep",
        Command::Reduce { .. } => "reduce",
        Command::Green { .. } => "green",
        Command::ExtensionCheck { .. } => "extension-check",
        Command::Dumbbell { .. } => "dumbbell",
    };
    if let Err(e) = merge_flags(&mut cfg, &cli.command) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(format!("fraclab-run-{name}")));
    if let Err(e) = std::fs::create_dir_all(&out) {
        eprintln!("error: cannot create run directory {out:?}: {e}");
        return ExitCode::from(2);
    }
    match runs::dispatch(name, &cfg, &out) {
        Ok(()) => {
            let _ = runs::write_manifest(&out, name, &cfg, None);
            ExitCode::SUCCESS
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("error: {msg}");
            let _ = runs::write_manifest(&out, name, &cfg, Some(&msg));
            match e {
                fraclab::Error::Config(_) | fraclab::Error::Mismatch(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn merge_flags(cfg: &mut Config, cmd: &Command) -> Result<(), String> {
    fn set_f64(cfg: &mut Config, key: &str, v: &Option<f64>) {
        if let Some(x) = v {
            cfg.set(key, x.to_string());
        }
    }
    fn set_str(cfg: &mut Config, key: &str, v: &Option<String>) {
        if let Some(x) = v {
            cfg.set(key, x.clone());
        }
    }
    fn set_usize(cfg: &mut Config, key: &str, v: &Option<usize>) {
        if let Some(x) = v {
            cfg.set(key, x.to_string());
        }
    }
    match cmd {
        Command::Constants { n, s } => {
            set_usize(cfg, "n", n);
            set_f64(cfg, "s", s);
        }
        Command::Basis { domain, nodes } => {
            set_str(cfg, "domain", domain);
            set_usize(cfg, "nodes", nodes);
        }
        Command::Solve { kind, eps, domain, nodes, s } => {
            set_str(cfg, "kind", kind);
            set_f64(cfg, "eps", eps);
            set_str(cfg, "domain", domain);
            set_usize(cfg, "nodes", nodes);
            set_f64(cfg, "s", s);
        }
        Command::Sweep { kind, eps, domain, nodes, s } => {
            set_str(cfg, "kind", kind);
            if let Some(e) = eps {
                let parts: Result<Vec<f64>, _> =
                    e.split(',').map(|p| p.trim().parse::<f64>()).collect();
                parts.map_err(|_| format!("bad eps list {e:?}"))?;
                cfg.set("eps_list", e.clone());
            }
            set_str(cfg, "domain", domain);
            set_usize(cfg, "nodes", nodes);
            set_f64(cfg, "s", s);
        }
        Command::Reduce { k, kind, domain, nodes, s } => {
            set_usize(cfg, "k", k);
            set_str(cfg, "kind", kind);
            set_str(cfg, "domain", domain);
            set_usize(cfg, "nodes", nodes);
            set_f64(cfg, "s", s);
        }
        Command::Green { domain, nodes, s } => {
            set_str(cfg, "domain", domain);
            set_usize(cfg, "nodes", nodes);
            set_f64(cfg, "s", s);
        }
        Command::ExtensionCheck { domain, nodes, s, eps } => {
            set_str(cfg, "domain", domain);
            set_usize(cfg, "nodes", nodes);
            set_f64(cfg, "s", s);
            set_f64(cfg, "eps", eps);
        }
        Command::Dumbbell { k, lobe, neck, h } => {
            set_usize(cfg, "k", k);
            set_f64(cfg, "lobe", lobe);
            set_f64(cfg, "neck", neck);
            set_f64(cfg, "h", h);
        }
    }
    Ok(())
}
