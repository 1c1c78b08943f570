mod args;
mod commands;
mod report;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use args::{Command, Format, Global};
use report::{config_err, render, Failure, Inputs, Outcome};

#[derive(Debug, Parser)]
#[command(name = "samplab", version, about = "Exact isolators, robust extractors and hard-to-sample distributions")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

/// The JSON run configuration accepted by `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunFile {
    command: Option<String>,
    seed: Option<u64>,
    jobs: Option<usize>,
    budget: Option<u64>,
    #[serde(default)]
    params: Map<String, Value>,
}

/// Run settings after merging flags with the configuration file.
pub struct Ctx {
    pub seed: u64,
    pub budget: Option<u64>,
    pub jobs: samplab::sweep::Jobs,
    pub format: Format,
}

/// Flags first, then configuration values on top; returns the merged
/// parameters and their JSON form for the report.
fn overlay<T: Serialize + DeserializeOwned>(flags: &T, params: &Map<String, Value>) -> Outcome<(T, Value)> {
    let mut v = serde_json::to_value(flags).map_err(|e| config_err(e.to_string()))?;
    if let Value::Object(obj) = &mut v {
        for (key, value) in params {
            obj.insert(key.clone(), value.clone());
        }
        obj.retain(|_, v| !v.is_null());
    }
    let merged = serde_json::from_value(v.clone()).map_err(|e| config_err(format!("params: {e}")))?;
    Ok((merged, v))
}

fn run(cli: Cli) -> Outcome<(String, Option<PathBuf>, u8)> {
    let mut inputs = Inputs::default();
    let file: RunFile = match &cli.global.config {
        Some(p) => inputs.json("config", p)?,
        None => RunFile::default(),
    };
    let name = cli.command.name();
    if let Some(c) = &file.command {
        if c != name {
            return Err(config_err(format!("configuration is for `{c}`, invoked as `{name}`")));
        }
    }
    let ctx = Ctx {
        seed: file.seed.or(cli.global.seed).unwrap_or(0),
        budget: file.budget.or(cli.global.budget),
        jobs: samplab::sweep::Jobs(file.jobs.or(cli.global.jobs).unwrap_or(0)),
        format: cli.global.format.unwrap_or_default(),
    };
    macro_rules! dispatch {
        ($($variant:ident => $handler:path),* $(,)?) => {
            match &cli.command {
                $(Command::$variant(a) => {
                    let (p, v) = overlay(a, &file.params)?;
                    ($handler(&p, &ctx, &mut inputs)?, v)
                })*
            }
        };
    }
    let (done, params) = dispatch!(
        Tv => commands::tv,
        Entropy => commands::entropy,
        Smooth => commands::smooth,
        ExactOutput => commands::exact_output,
        Addr => commands::addr,
        Enumerate => commands::enumerate,
        VerifyIsolator => commands::verify_isolator,
        SearchIsolator => commands::search_isolator,
        InputReduce => commands::input_reduce,
        Lift => commands::lift,
        IsoFromRext => commands::iso_from_rext,
        MixtureBound => commands::mixture_bound,
        TwoSource => commands::two_source,
        CommMixture => commands::comm_mixture,
        RobpCut => commands::robp_cut,
        BuildHardDist => commands::build_hard_dist,
        Bound => commands::bound,
        CertifyTheorem => commands::certify_theorem,
        CountingSearch => commands::counting_search,
    );
    let config = serde_json::json!({
        "command": name,
        "seed": ctx.seed,
        "budget": ctx.budget,
        "params": params,
    });
    let text = match ctx.format {
        Format::Json => render(&config, &inputs, &done),
        Format::Csv => done.csv.clone().ok_or_else(|| config_err(format!("`{name}` has no CSV form")))?,
    };
    Ok((text, cli.global.out, done.verdict.code()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok((text, out, code)) => {
            let written = match out {
                Some(path) => fs::write(&path, &text).map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => ExitCode::from(code),
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(2)
                }
            }
        }
        Err(f @ (Failure::Config(_) | Failure::Budget(_))) => {
            eprintln!("{f}");
            ExitCode::from(f.code())
        }
    }
}
