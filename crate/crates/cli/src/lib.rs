//! Command-line front end: argument parsing, configuration layering,
//! manifests and the pipeline commands.

pub mod args;
pub mod commands;
pub mod config;
pub mod manifest;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Parser;

use args::{Cli, Command};
use config::Config;
use manifest::Manifest;

/// Parse `argv`, run the command and return the process exit code: 0 on
/// success, 1 when the pipeline fails, 2 for usage errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.global.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {:#}", e);
            1
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let g = cli.global;
    if let Command::Replay(r) = &cli.command {
        if g.seed.is_some() || g.config.is_some() {
            bail!("replay takes its seed and configuration from the manifest");
        }
        let m = Manifest::read(&r.manifest)?;
        let out_dir = g.out_dir.unwrap_or(m.out_dir);
        return run_command(m.command, m.config, out_dir);
    }
    let mut config = match &g.config {
        Some(path) => Config::from_toml_file(path)?,
        None => Config::default(),
    };
    config.apply(g.seed, &cli.command)?;
    run_command(cli.command, config, g.out_dir.unwrap_or_else(|| PathBuf::from(".")))
}

/// Run one command, check every artifact parses back, then write the manifest.
pub fn run_command(command: Command, config: Config, out_dir: PathBuf) -> Result<()> {
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    log::info!("running {}", command.name());
    let artifacts = commands::dispatch(&command, &config, &out_dir)?;
    for a in &artifacts {
        a.verify(&config)
            .with_context(|| format!("output {} did not parse back", a.path.display()))?;
    }
    let paths = artifacts.into_iter().map(|a| a.path).collect();
    let manifest = Manifest::new(command, config, out_dir.clone(), paths);
    let written = manifest.write(&out_dir)?;
    if Manifest::read(&written)? != manifest {
        bail!("manifest {} did not read back identically", written.display());
    }
    Ok(())
}

