//! `srt` — forward simulation and reconstruction driver.
//!
//! Subcommands: `forward` (simulate Radon data for a ball phantom),
//! `reconstruct` (end-to-end inversion with slice/metric export),
//! `verify-order` (manufactured-solution convergence check), `diagnose`
//! (per-degree conditioning report) and `weights` (quadrature weights).
//!
//! Exit codes are a stable contract: 0 success, 2 input error, 3 geometry
//! violation, 4 data/config mismatch, 5 verification failure.

mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use srt_core::config::{RunConfig, SliceFormat};
use srt_core::{io, SrtError};

#[derive(Parser)]
#[command(name = "srt", version, about = "Spherical Radon transform toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Run configuration file (sections [geometry], [solver], [output]).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Repeatable `section.key=value` overrides applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Multiplicative Gaussian noise level (overrides the config).
    #[arg(long)]
    noise: Option<f64>,
    /// Noise generator seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = automatic).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate Radon data for a ball phantom and write it to a binary file.
    Forward {
        /// Phantom description file (`cx cy cz radius amplitude` lines).
        #[arg(long)]
        phantom: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Reconstruct from a phantom (forward-simulated) or a data file; passing
    /// both treats the phantom as ground truth for the error metrics.
    Reconstruct {
        #[arg(long)]
        phantom: Option<PathBuf>,
        /// Radon data file produced by `forward`.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Print the assembled matrix for this degree to stdout.
        #[arg(long, value_name = "L")]
        dump_matrix: Option<u32>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Manufactured-solution convergence order check.
    VerifyOrder {
        /// Support case: interior, exterior or interior-exterior.
        #[arg(long)]
        case: String,
        /// Manufactured solution id: `poly` or `rsin`.
        #[arg(long)]
        solution: String,
        /// Harmonic degrees to test. The product trapezoidal rule is
        /// second-order asymptotically at every degree, but for the interior
        /// and combined cases the error constant grows steeply with l, so
        /// degrees above 2 need M well beyond 100 to reach the asymptote.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        degrees: Vec<u32>,
    },
    /// Report per-degree condition numbers and effective ranks.
    Diagnose {
        #[command(flatten)]
        common: CommonArgs,
        /// Optional output directory for the degree table.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the polar quadrature weights for a given half-resolution N.
    Weights {
        #[arg(long)]
        n: usize,
    },
}

/// Process failure with its contracted exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn verification(message: impl Into<String>) -> Self {
        Failure {
            code: 5,
            message: message.into(),
        }
    }
}

impl From<SrtError> for Failure {
    fn from(err: SrtError) -> Self {
        let code = match &err {
            SrtError::Geometry(_) => 3,
            SrtError::Mismatch(_) => 4,
            _ => 2,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Forward {
            phantom,
            out,
            common,
        } => {
            install_thread_pool(common.threads)?;
            let config = build_config(&common)?;
            let phantom = io::read_phantom(&phantom)?;
            config.geometry.validate_phantom(&phantom)?;
            let data = srt_core::forward_transform(&phantom, &config.geometry);
            let data = srt_core::add_noise(&data, config.noise_level, config.seed);
            std::fs::create_dir_all(&out).map_err(SrtError::Io)?;
            let path = out.join("data.srt");
            io::write_radon_data(&path, &data)?;
            println!(
                "wrote {} ({} radii x {} x {} angles, case {}, R = {})",
                path.display(),
                data.geometry.rho_grid.len(),
                2 * data.geometry.n,
                2 * data.geometry.n,
                data.geometry.case,
                data.geometry.r
            );
            Ok(())
        }
        Command::Reconstruct {
            phantom,
            data,
            out,
            dump_matrix,
            common,
        } => {
            install_thread_pool(common.threads)?;
            let run_config = load_run_config(&common)?;
            let config = apply_cli_overrides(run_config.build()?, &common);
            let phantom = phantom.map(|p| io::read_phantom(&p)).transpose()?;

            let result = match (&phantom, data) {
                (_, Some(data_path)) => {
                    let data = io::read_radon_data(&data_path)?;
                    srt_core::reconstruct_data(data, &config, phantom.as_ref())?
                }
                (Some(phantom), None) => srt_core::reconstruct_phantom(phantom, &config)?,
                (None, None) => {
                    return Err(Failure::input("reconstruct needs --phantom or --data"))
                }
            };

            if let Some(l) = dump_matrix {
                print!("{}", dump_system(&config, l)?);
            }

            std::fs::create_dir_all(&out).map_err(SrtError::Io)?;
            write_outputs(&out, &result, &run_config)?;
            if result.metrics.origin_flagged {
                println!(
                    "note: phantom support reaches below r = {}; values near the origin are untrusted",
                    result.metrics.trusted_r_min
                );
            }
            if let Some(rel) = result.metrics.relative_l2 {
                println!("relative_l2={rel:.6e}");
            }
            if let Some(rel) = result.metrics.relative_l2_bandlimited {
                println!("relative_l2_bandlimited={rel:.6e}");
            }
            println!("outputs written to {}", out.display());
            Ok(())
        }
        Command::VerifyOrder {
            case,
            solution,
            degrees,
        } => {
            let case = case.parse().map_err(Failure::input)?;
            let report = verify::run(case, &solution, &degrees)?;
            print!("{}", report.text);
            if report.all_pass {
                Ok(())
            } else {
                Err(Failure::verification(
                    "observed convergence order below 1.7",
                ))
            }
        }
        Command::Diagnose { common, out } => {
            install_thread_pool(common.threads)?;
            let config = build_config(&common)?;
            let rows = diagnose(&config)?;
            println!(
                "{:>4} {:>14} {:>15} {:>12}",
                "l", "condition", "effective_rank", "diag_min"
            );
            for (d, diag_min) in &rows {
                println!(
                    "{:>4} {:>14.6e} {:>15} {:>12.4e}",
                    d.l, d.condition, d.effective_rank, diag_min
                );
            }
            if let Some(out) = out {
                std::fs::create_dir_all(&out).map_err(SrtError::Io)?;
                let record = srt_core::ReconstructionMetrics {
                    relative_l2: None,
                    relative_l2_bandlimited: None,
                    max_abs_error: None,
                    truth_zero_fallback: false,
                    trusted_r_min: 0.0,
                    trusted_r_max: 0.0,
                    origin_flagged: false,
                    degrees: rows.into_iter().map(|(d, _)| d).collect(),
                };
                io::write_degree_table(&out.join("degrees.txt"), &record)?;
            }
            Ok(())
        }
        Command::Weights { n } => {
            if n < 2 {
                return Err(Failure::input("N must be at least 2"));
            }
            for (j, w) in srt_core::quadrature_weights(n).iter().enumerate() {
                println!("{j} {w:.16e}");
            }
            Ok(())
        }
    }
}

fn load_run_config(common: &CommonArgs) -> Result<RunConfig, Failure> {
    Ok(RunConfig::load(common.config.as_deref(), &common.set)?)
}

fn build_config(common: &CommonArgs) -> Result<srt_core::ReconstructionConfig, Failure> {
    let config = load_run_config(common)?.build()?;
    Ok(apply_cli_overrides(config, common))
}

fn apply_cli_overrides(
    mut config: srt_core::ReconstructionConfig,
    common: &CommonArgs,
) -> srt_core::ReconstructionConfig {
    if let Some(noise) = common.noise {
        config.noise_level = noise;
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    config
}

fn install_thread_pool(threads: usize) -> Result<(), Failure> {
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::input(format!("thread pool: {e}")))?;
    }
    Ok(())
}

/// Working-variable Volterra discretization matching the pipeline's solve.
fn working_params(
    geometry: &srt_core::AcquisitionGeometry,
) -> Result<srt_core::VolterraCaseParams, Failure> {
    let r = geometry.r;
    let rho_unit: Vec<f64> = geometry.rho_grid.iter().map(|p| p / r).collect();
    let params = match geometry.case {
        srt_core::SupportCase::InteriorExterior => {
            let r2u = geometry.r2.expect("validated") / r;
            let grid = rho_unit.iter().rev().map(|&p| r2u + 1.0 - p).collect();
            srt_core::VolterraCaseParams::new(geometry.case, Some(r2u), grid)?
        }
        case => srt_core::VolterraCaseParams::new(case, None, rho_unit)?,
    };
    Ok(params)
}

fn dump_system(config: &srt_core::ReconstructionConfig, l: u32) -> Result<String, Failure> {
    let params = working_params(&config.geometry)?;
    let system = srt_core::assemble(&params, l)?;
    Ok(io::format_matrix(&system.matrix))
}

fn diagnose(
    config: &srt_core::ReconstructionConfig,
) -> Result<Vec<(srt_core::pipeline::DegreeDiagnostics, f64)>, Failure> {
    let params = working_params(&config.geometry)?;
    let mut rows = Vec::new();
    for l in 0..=config.l_max {
        let system = srt_core::assemble(&params, l)?;
        let factor = srt_core::TsvdFactor::new(&system, &config.tsvd)?;
        rows.push((
            srt_core::pipeline::DegreeDiagnostics {
                l,
                condition: factor.condition(),
                effective_rank: factor.effective_rank(),
            },
            system.diag_min,
        ));
    }
    Ok(rows)
}

fn write_outputs(
    out: &std::path::Path,
    result: &srt_core::ReconstructionResult,
    run_config: &RunConfig,
) -> Result<(), Failure> {
    // Truth and reconstruction images share the truth's gray scale when the
    // truth is available; the range used lands in the PGM header comment.
    let range = result.truth_slice.as_ref().map(|t| t.min_max());
    for format in &run_config.formats {
        match format {
            SliceFormat::Pgm => {
                io::write_slice_pgm(&out.join("slice.pgm"), &result.slice, range, false)?;
                if let Some(truth) = &result.truth_slice {
                    io::write_slice_pgm(&out.join("truth.pgm"), truth, range, false)?;
                }
            }
            SliceFormat::PgmAscii => {
                io::write_slice_pgm(&out.join("slice.ascii.pgm"), &result.slice, range, true)?;
                if let Some(truth) = &result.truth_slice {
                    io::write_slice_pgm(&out.join("truth.ascii.pgm"), truth, range, true)?;
                }
            }
            SliceFormat::Csv => {
                io::write_slice_csv(&out.join("slice.csv"), &result.slice)?;
                if let Some(truth) = &result.truth_slice {
                    io::write_slice_csv(&out.join("truth.csv"), truth)?;
                }
                if let Some(bl) = &result.bandlimited_truth_slice {
                    io::write_slice_csv(&out.join("truth_bandlimited.csv"), bl)?;
                }
            }
        }
    }
    io::write_metrics_text(&out.join("metrics.txt"), &result.metrics)?;
    io::write_metrics_json(&out.join("metrics.json"), &result.metrics)?;
    io::write_degree_table(&out.join("degrees.txt"), &result.metrics)?;
    io::write_profiles(&out.join("profiles.shp"), &result.profiles)?;
    Ok(())
}
