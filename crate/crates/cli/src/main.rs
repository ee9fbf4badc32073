//! `optospring` command-line front end.
//!
//! Exit codes: 0 on success (for `analyze`, a stable verdict), 2 when
//! `analyze` finds the configuration unstable, 1 on any error.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use optospring::analysis::{steer_delta_w, sweep, write_sweep_csv};
use optospring::dynamics::{linear_grid, write_susceptibility_csv};
use optospring::meanfield::{is_physical_config, load_physical_config};
use optospring::params::{hz_to_rad, load_config, preset};
use optospring::{
    analyze, derive_coefficients, susceptibility, ModeParams, PhysicalConfig, Preset, SweepParam,
};

#[derive(Parser)]
#[command(
    name = "optospring",
    version,
    about = "Optical-spring stability of the antisymmetric mode"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Roots, Routh-Hurwitz verdict, perturbative roots and detuning bound.
    Analyze {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        out: Output,
    },
    /// Mechanical susceptibility |χ(Ω)| on a linear grid, as CSV.
    Susceptibility {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        omega_min_hz: f64,
        #[arg(long)]
        omega_max_hz: f64,
        #[arg(long, default_value_t = 1000)]
        points: usize,
        /// Steer δ_w so that δ̃_w = −δ₁ + Δ.
        #[arg(long, allow_negative_numbers = true)]
        delta_offset_hz: Option<f64>,
        #[command(flatten)]
        out: Output,
    },
    /// Stability verdict over a range of one parameter, as CSV.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        param: String,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[command(flatten)]
        out: Output,
    },
    /// List the built-in parameter sets.
    PresetList {
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args)]
struct Source {
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the arm detuning.
    #[arg(long, allow_negative_numbers = true)]
    delta_hz: Option<f64>,
}

#[derive(Args)]
struct Output {
    /// File to write, or `stdout`.
    #[arg(long, default_value = "stdout")]
    output: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

struct Loaded {
    params: ModeParams,
    physical: Option<PhysicalConfig>,
}

impl Source {
    fn load(&self) -> Result<Loaded> {
        let mut loaded = match (&self.preset, &self.config) {
            (Some(name), None) => Loaded {
                params: preset(name)?,
                physical: None,
            },
            (None, Some(path)) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                if is_physical_config(&text) {
                    let cfg = load_physical_config(&text)
                        .with_context(|| format!("in {}", path.display()))?;
                    Loaded {
                        params: cfg.mode_params()?,
                        physical: Some(cfg),
                    }
                } else {
                    let params =
                        load_config(&text).with_context(|| format!("in {}", path.display()))?;
                    Loaded {
                        params,
                        physical: None,
                    }
                }
            }
            (None, None) => bail!("one of --preset or --config is required"),
            (Some(_), Some(_)) => bail!("--preset and --config are mutually exclusive"),
        };
        if let Some(d) = self.delta_hz {
            let delta = hz_to_rad(d);
            match &mut loaded.physical {
                // Mean fields depend on δ, so rebuild the mode parameters.
                Some(cfg) => {
                    cfg.delta_arm = delta;
                    loaded.params = cfg.mode_params()?;
                }
                None => loaded.params.delta_arm = delta,
            }
        }
        Ok(loaded)
    }
}

impl Output {
    fn write(&self, body: &[u8]) -> Result<()> {
        if self.output == "stdout" || self.output == "-" {
            io::stdout().lock().write_all(body)?;
        } else {
            fs::write(&self.output, body).with_context(|| format!("writing {}", self.output))?;
        }
        Ok(())
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Analyze {
            source,
            format,
            out,
        } => {
            let loaded = source.load()?;
            let report = analyze(&loaded.params, loaded.physical.as_ref())?;
            let body = match format {
                Format::Json => serde_json::to_string_pretty(&report)? + "\n",
                Format::Csv => {
                    let mut s = String::from("re_rad_s,im_rad_s,residual\n");
                    for (z, r) in report.roots.roots.iter().zip(&report.roots.residuals) {
                        s += &format!("{:?},{:?},{:?}\n", z.re, z.im, r);
                    }
                    s
                }
            };
            out.write(body.as_bytes())?;
            Ok(if report.stable { 0 } else { 2 })
        }
        Command::Susceptibility {
            source,
            omega_min_hz,
            omega_max_hz,
            points,
            delta_offset_hz,
            out,
        } => {
            if !(omega_min_hz > 0.0 && omega_max_hz > omega_min_hz) {
                bail!("omega-min-hz must be positive and below omega-max-hz");
            }
            if points < 2 {
                bail!("points must be at least 2");
            }
            let mut params = source.load()?.params;
            if let Some(offset) = delta_offset_hz {
                params = steer_delta_w(&params, hz_to_rad(offset))?;
            }
            let coefs = derive_coefficients(&params)?;
            let grid = linear_grid(hz_to_rad(omega_min_hz), hz_to_rad(omega_max_hz), points);
            let samples = susceptibility(&coefs, &params, &grid)?;
            let mut buf = Vec::new();
            write_susceptibility_csv(&samples, &mut buf)?;
            out.write(&buf)?;
            Ok(0)
        }
        Command::Sweep {
            source,
            param,
            from,
            to,
            steps,
            out,
        } => {
            let param: SweepParam = param.parse()?;
            let params = source.load()?.params;
            let rows = sweep(&params, param, from, to, steps)?;
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf)?;
            out.write(&buf)?;
            Ok(0)
        }
        Command::PresetList { format, out } => {
            let body = match format {
                Format::Csv => {
                    let mut s = String::from("name,description\n");
                    for p in Preset::ALL {
                        s += &format!("{},\"{}\"\n", p.name(), p.description());
                    }
                    s
                }
                Format::Json => {
                    let list: Vec<_> = Preset::ALL
                        .iter()
                        .map(|p| serde_json::json!({ "name": p.name(), "description": p.description(), "params": p.params() }))
                        .collect();
                    serde_json::to_string_pretty(&list)? + "\n"
                }
            };
            out.write(body.as_bytes())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
